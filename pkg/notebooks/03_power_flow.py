# # Power flow on the shipped 118-bus case

import numpy as np

from rmtgrid.gridsim import Injections, ieee118, newton_raphson_pf

case = ieee118()
print(len(case.buses), "buses,", len(case.branches), "branches, slack", case.slack)

sol = newton_raphson_pf(case)
print("converged", sol.converged, "in", sol.iterations, "evaluations; mismatch", sol.max_mismatch)
print("V range", sol.V.min(), sol.V.max())

# load bus 52 harder and watch its voltage sag
k = case.index[52]
base = Injections.from_case(case)
for mw in (18, 100, 200, 300):
    p = base.p_mw.copy()
    p[k] = p[k] + 18 - mw  # injections are generation minus load
    s = newton_raphson_pf(case, Injections(p, base.q_mvar), warm_start=sol)
    print(f"P52 = {mw:3d} MW  V52 = {s.V[k]:.4f}  converged {s.converged}")

print("largest angle (deg)", np.rad2deg(np.abs(sol.theta)).max())
