"""Write src/rmtgrid/data/regions.csv: bus_id,region,x,y for the 118-bus case.

Regions follow the usual six-area split of the one-line diagram; the layout
is a Kamada-Kawai embedding of the branch graph, rounded for stable output.
"""
import csv
from pathlib import Path

import networkx as nx

from rmtgrid.gridsim import ieee118

RANGES = {
    "A1": [*range(1, 25), 117],
    "A2": [*range(25, 41), 113, 114, 115],
    "A3": list(range(41, 63)),
    "A4": [*range(63, 82), 116, 118],
    "A5": list(range(82, 98)),
    "A6": list(range(98, 113)),
}


def main():
    case = ieee118()
    g = nx.Graph()
    g.add_nodes_from(case.bus_ids)
    g.add_edges_from((b.from_bus, b.to_bus) for b in case.branches)
    region = {b: r for r, buses in RANGES.items() for b in buses}
    assert sorted(region) == sorted(case.bus_ids)
    for r, buses in RANGES.items():
        print(r, len(buses), "connected" if nx.is_connected(g.subgraph(buses)) else "DISCONNECTED")
    pos = nx.kamada_kawai_layout(g)
    out = Path(__file__).resolve().parents[1] / "src" / "rmtgrid" / "data" / "regions.csv"
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bus_id", "region", "x", "y"])
        for b in case.bus_ids:
            x, y = pos[b]
            w.writerow([b, region[b], f"{x:.4f}", f"{y:.4f}"])
    print("wrote", out)


if __name__ == "__main__":
    main()
