# # Indicators and the anomaly test
#
# Calibrate the pipeline variance once, then test windows with and
# without a planted signal.

import numpy as np

from rmtgrid.indicators import anomaly_test, jarque_bera, les, msr
from rmtgrid.laws import theory_set
from rmtgrid.rmt import DataWindow, covariance_m, jitter, normalize_rows, ring_matrix

N, T = 118, 240
theory = theory_set(["MSR", "T2", "LRT"], N, T, trials=200, seed=0)
for phi, tv in theory.items():
    print(phi.name, "E", round(tv.expectation, 4), "D1", f"{tv.variance_pipeline:.3g}")

g = np.random.default_rng(5)


def window(signal=0.0):
    x = g.standard_normal((N, T))
    # a common factor shared by the first 20 rows
    x[:20] += signal * g.standard_normal(T)
    return normalize_rows(jitter(DataWindow(x, T - 1), 0.002, 1))


for s in (0.0, 0.5):
    z = window(s)
    spec = covariance_m(z)
    for phi, tv in theory.items():
        tau = msr(ring_matrix(z, 1, 2)) if phi.domain == "ring" else les(phi, spec)
        d = anomaly_test(tau, tv)
        print(f"signal {s}: {phi.name:4s} tau {tau:10.4f} z {d.z:7.2f} {d.decision}")

# ## Gaussianity of tau across independent windows
taus = [les("LRT", covariance_m(window())) for _ in range(60)]
print("Jarque-Bera (stat, p):", jarque_bera(taus))
