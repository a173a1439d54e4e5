# # Spectral laws of a null window
#
# A 118 x 240 block of white noise, row-normalized, against the
# Marchenko-Pastur and ring laws.

import numpy as np

from rmtgrid.laws import DensityParams, les_expectation, les_variance_clt, mp_density, msr_expectation
from rmtgrid.rmt import DataWindow, covariance_m, normalize_rows, ring_matrix

N, T = 118, 240
c = N / T
g = np.random.default_rng(0)
z = normalize_rows(DataWindow(g.standard_normal((N, T)), T - 1))

# ## Covariance spectrum
lam = covariance_m(z).eigenvalues
p = DensityParams(c, variant="mp_M")
print("support", p.support)
print("eigenvalue range", lam.min(), lam.max())

# a crude histogram next to the density, as text
edges = np.linspace(*p.support, 9)
counts, _ = np.histogram(lam, edges)
mids = 0.5 * (edges[1:] + edges[:-1])
for m, k in zip(mids, counts):
    print(f"{m:6.2f}  empirical {k / N / (edges[1] - edges[0]):.3f}  law {mp_density(m, p):.3f}")

# ## Ring law
ring = ring_matrix(z, L=1, seed=1)
r = np.abs(ring.eigenvalues)
print("inner radius", np.sqrt(1 - c), "smallest modulus", r.min())
print("MSR", r.mean(), "expected", msr_expectation(c))

# ## Linear eigenvalue statistics
for phi in ("T2", "DET", "LRT"):
    print(phi, "E", round(les_expectation(phi, N, c), 3), "D_T", round(les_variance_clt(phi, c), 4))
