"""Export the IEEE 118-bus case from PYPOWER into the rmtgrid CSV case format.

Also writes the reference power-flow solution used by the regression tests.
Requires ``pypower`` (not a runtime dependency of rmtgrid).

    python tools/export_case118.py
"""
import csv
from pathlib import Path

import numpy as np
from pypower.api import ppoption, runpf
from pypower.case118 import case118

ROOT = Path(__file__).resolve().parents[1]
CASE_DIR = ROOT / "src" / "rmtgrid" / "data" / "ieee118"
REF = ROOT / "tests" / "data" / "ieee118_reference.csv"
KINDS = {1: "PQ", 2: "PV", 3: "slack"}


def main():
    ppc = case118()
    bus, gen, branch = ppc["bus"], ppc["gen"], ppc["branch"]
    pg = np.zeros(len(bus))
    vset = bus[:, 7].copy()
    for row in gen:
        i = int(row[0]) - 1
        pg[i] += row[1]
        vset[i] = row[5]

    with open(CASE_DIR / "buses.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "kind", "Pd_MW", "Qd_MVAr", "Vset_pu", "angle_deg", "Pg_MW", "Gs_MW", "Bs_MVAr"])
        for i, row in enumerate(bus):
            kind = KINDS[int(row[1])]
            v = vset[i] if kind != "PQ" else 1.0
            ang = row[8] if kind == "slack" else 0.0
            w.writerow([int(row[0]), kind, repr(float(row[2])), repr(float(row[3])), repr(float(v)),
                        repr(float(ang)), repr(float(pg[i])), repr(float(row[4])), repr(float(row[5]))])

    with open(CASE_DIR / "branches.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from", "to", "r_pu", "x_pu", "b_pu", "tap"])
        for row in branch:
            tap = row[8] if row[8] != 0 else 1.0
            w.writerow([int(row[0]), int(row[1]), repr(float(row[2])), repr(float(row[3])),
                        repr(float(row[4])), repr(float(tap))])

    res, ok = runpf(ppc, ppoption(VERBOSE=0, OUT_ALL=0, PF_TOL=1e-10))
    assert ok
    with open(REF, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "V_pu", "angle_deg"])
        for row in res["bus"]:
            w.writerow([int(row[0]), repr(float(row[7])), repr(float(row[8]))])


if __name__ == "__main__":
    main()
