"""Network description and the two-file CSV case format.

``buses.csv``: ``id,kind,Pd_MW,Qd_MVAr,Vset_pu,angle_deg`` plus the optional
columns ``Pg_MW`` (scheduled generation), ``Gs_MW`` and ``Bs_MVAr`` (shunt
admittance at 1 p.u.).  ``branches.csv``: ``from,to,r_pu,x_pu,b_pu,tap``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import CaseFormatError, ValidationError

BUS_KINDS = ("slack", "PV", "PQ")
BUS_COLUMNS = ("id", "kind", "Pd_MW", "Qd_MVAr", "Vset_pu", "angle_deg")
BUS_OPTIONAL = ("Pg_MW", "Gs_MW", "Bs_MVAr")
BRANCH_COLUMNS = ("from", "to", "r_pu", "x_pu", "b_pu", "tap")


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str
    Pd: float
    Qd: float
    V_set: float = 1.0
    angle_set: float = 0.0
    Pg: float = 0.0
    Gs: float = 0.0
    Bs: float = 0.0


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_shunt: float = 0.0
    tap_ratio: float = 1.0


@dataclass(frozen=True)
class GridCase:
    buses: tuple
    branches: tuple
    base_mva: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        self.validate()

    def validate(self):
        if not self.buses:
            raise ValidationError("case has no buses")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate bus ids")
        for b in self.buses:
            if b.kind not in BUS_KINDS:
                raise ValidationError(f"bus {b.id}: unknown kind {b.kind!r}")
        n_slack = sum(b.kind == "slack" for b in self.buses)
        if n_slack != 1:
            raise ValidationError(f"case needs exactly one slack bus, found {n_slack}")
        known = set(ids)
        for br in self.branches:
            if br.from_bus not in known or br.to_bus not in known:
                raise ValidationError(f"branch {br.from_bus}-{br.to_bus} references an unknown bus")
            if br.r == 0 and br.x == 0:
                raise ValidationError(f"branch {br.from_bus}-{br.to_bus} has zero impedance")
            if br.tap_ratio <= 0:
                raise ValidationError(f"branch {br.from_bus}-{br.to_bus} has non-positive tap")
        if not _connected(ids, self.branches):
            raise ValidationError("branch graph is not connected")

    @property
    def n(self) -> int:
        return len(self.buses)

    @cached_property
    def bus_ids(self) -> tuple:
        return tuple(b.id for b in self.buses)

    @cached_property
    def index(self) -> dict:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def kinds(self) -> np.ndarray:
        return np.array([b.kind for b in self.buses])

    @cached_property
    def slack(self) -> int:
        return int(np.flatnonzero(self.kinds == "slack")[0])

    @cached_property
    def pv(self) -> np.ndarray:
        return np.flatnonzero(self.kinds == "PV")

    @cached_property
    def pq(self) -> np.ndarray:
        return np.flatnonzero(self.kinds == "PQ")

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(b, name) for b in self.buses], dtype=float)

    @cached_property
    def ybus(self) -> np.ndarray:
        """Dense bus admittance matrix in p.u. (tap on the from side)."""
        n = self.n
        y = np.zeros((n, n), dtype=complex)
        for br in self.branches:
            f, t = self.index[br.from_bus], self.index[br.to_bus]
            ys = 1.0 / complex(br.r, br.x)
            half = 0.5j * br.b_shunt
            a = br.tap_ratio
            y[f, f] += (ys + half) / (a * a)
            y[t, t] += ys + half
            y[f, t] -= ys / a
            y[t, f] -= ys / a
        shunt = (self.column("Gs") + 1j * self.column("Bs")) / self.base_mva
        y[np.diag_indices(n)] += shunt
        return y


def _connected(ids, branches) -> bool:
    adj = {i: set() for i in ids}
    for br in branches:
        adj[br.from_bus].add(br.to_bus)
        adj[br.to_bus].add(br.from_bus)
    seen, stack = {ids[0]}, [ids[0]]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(ids)


def _rows(path: Path, required, optional=()):
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CaseFormatError(f"{path.name} is empty", 1)
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise CaseFormatError(f"{path.name}: missing columns {missing}", 1)
        pos = {h: k for k, h in enumerate(header)}
        out = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise CaseFormatError(f"{path.name}: expected {len(header)} fields, got {len(cells)}", lineno)
            row = {c: cells[pos[c]].strip() for c in required}
            row.update({c: cells[pos[c]].strip() for c in optional if c in pos})
            out.append((lineno, row))
    if not out:
        raise CaseFormatError(f"{path.name} has no data rows", 2)
    return out


def _num(row, key, lineno, name, cast=float):
    try:
        return cast(row[key])
    except (TypeError, ValueError):
        raise CaseFormatError(f"{name}: bad value {row.get(key)!r} in column {key}", lineno) from None


def load_case(path, base_mva: float = 100.0) -> GridCase:
    """Read ``buses.csv`` and ``branches.csv`` from directory ``path``."""
    path = Path(path)
    bus_file, branch_file = path / "buses.csv", path / "branches.csv"
    for f in (bus_file, branch_file):
        if not f.exists():
            raise FileNotFoundError(f"missing case file {f}")
    buses = []
    for lineno, row in _rows(bus_file, BUS_COLUMNS, BUS_OPTIONAL):
        kind = row["kind"]
        if kind not in BUS_KINDS:
            raise CaseFormatError(f"buses.csv: unknown bus kind {kind!r}", lineno)
        buses.append(Bus(
            id=_num(row, "id", lineno, "buses.csv", int),
            kind=kind,
            Pd=_num(row, "Pd_MW", lineno, "buses.csv"),
            Qd=_num(row, "Qd_MVAr", lineno, "buses.csv"),
            V_set=_num(row, "Vset_pu", lineno, "buses.csv"),
            angle_set=_num(row, "angle_deg", lineno, "buses.csv"),
            **{f: _num(row, c, lineno, "buses.csv") for f, c in zip(("Pg", "Gs", "Bs"), BUS_OPTIONAL) if c in row},
        ))
    branches = []
    for lineno, row in _rows(branch_file, BRANCH_COLUMNS):
        branches.append(Branch(
            from_bus=_num(row, "from", lineno, "branches.csv", int),
            to_bus=_num(row, "to", lineno, "branches.csv", int),
            r=_num(row, "r_pu", lineno, "branches.csv"),
            x=_num(row, "x_pu", lineno, "branches.csv"),
            b_shunt=_num(row, "b_pu", lineno, "branches.csv"),
            tap_ratio=_num(row, "tap", lineno, "branches.csv"),
        ))
    return GridCase(tuple(buses), tuple(branches), base_mva)


def write_case(case: GridCase, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with (path / "buses.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BUS_COLUMNS + BUS_OPTIONAL)
        for b in case.buses:
            w.writerow([b.id, b.kind, b.Pd, b.Qd, b.V_set, b.angle_set, b.Pg, b.Gs, b.Bs])
    with (path / "branches.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BRANCH_COLUMNS)
        for br in case.branches:
            w.writerow([br.from_bus, br.to_bus, br.r, br.x, br.b_shunt, br.tap_ratio])


def ieee118_path() -> Path:
    return Path(str(resources.files("rmtgrid") / "data" / "ieee118"))


def ieee118() -> GridCase:
    """The shipped IEEE 118-bus case."""
    return load_case(ieee118_path())
