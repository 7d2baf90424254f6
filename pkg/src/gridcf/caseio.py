"""MATPOWER case parsing and the immutable network description.

Reads the subset of the MATPOWER ``.m`` case format needed for DC
studies (baseMVA, bus, gen, branch, gencost) and exposes the result as
a frozen :class:`NetworkCase`.  Cases can round-trip through a small
canonical JSON form used by the gateway and for golden tests.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

__all__ = [
    "Bus",
    "Generator",
    "Branch",
    "NetworkCase",
    "CaseSyntaxError",
    "CaseSemanticError",
    "parse_case",
    "parse_case_file",
    "incident_line_capacity",
    "case_to_json",
    "case_from_json",
    "builtin_case_text",
    "builtin_case_names",
]

# Factor applied to total generation capacity to stand in for "unlimited"
# when a branch has rateA == 0 (MATPOWER convention).
UNLIMITED_RATE_FACTOR = 10.0


class CaseSyntaxError(ValueError):
    """Raised when the case text is structurally malformed."""


class CaseSemanticError(ValueError):
    """Raised when the case text parses but describes an inconsistent network."""


@dataclass(frozen=True)
class Bus:
    id: int              # external bus number from the file
    nominal_load: float  # MW

    def __post_init__(self):
        if self.nominal_load < 0:
            raise CaseSemanticError(f"bus {self.id}: negative load {self.nominal_load}")


@dataclass(frozen=True)
class Generator:
    bus: int             # internal bus index
    p_min: float         # MW
    p_max: float         # MW
    cost_linear: float   # $/MWh
    cost_quadratic: float = 0.0  # parsed and retained, unused by dispatch

    def __post_init__(self):
        if self.p_min > self.p_max:
            raise CaseSemanticError(
                f"generator at bus index {self.bus}: p_min {self.p_min} > p_max {self.p_max}"
            )


@dataclass(frozen=True)
class Branch:
    from_bus: int        # internal bus index
    to_bus: int          # internal bus index
    susceptance: float   # per-unit, 1/x
    flow_limit: float    # MW, sentinel-mapped if the file said 0

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise CaseSemanticError(f"branch {self.from_bus}-{self.to_bus}: self loop")
        if self.susceptance <= 0:
            raise CaseSemanticError(
                f"branch {self.from_bus}-{self.to_bus}: susceptance must be positive"
            )
        if self.flow_limit <= 0:
            raise CaseSemanticError(
                f"branch {self.from_bus}-{self.to_bus}: flow limit must be positive"
            )


@dataclass(frozen=True)
class NetworkCase:
    """Static grid description; immutable and safe to share across threads."""

    base_mva: float
    buses: tuple[Bus, ...]
    generators: tuple[Generator, ...]
    branches: tuple[Branch, ...]
    slack_bus: int                      # internal index of the reference bus
    name: str = field(default="case", compare=False)

    def __post_init__(self):
        if self.base_mva <= 0:
            raise CaseSemanticError(f"base_mva must be positive, got {self.base_mva}")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise CaseSemanticError("duplicate bus ids")
        n = len(self.buses)
        if not (0 <= self.slack_bus < n):
            raise CaseSemanticError(f"slack bus index {self.slack_bus} out of range")
        for g in self.generators:
            if not (0 <= g.bus < n):
                raise CaseSemanticError(f"generator references missing bus index {g.bus}")
        for br in self.branches:
            if not (0 <= br.from_bus < n and 0 <= br.to_bus < n):
                raise CaseSemanticError(
                    f"branch references missing bus index {br.from_bus}-{br.to_bus}"
                )

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    def bus_index(self, external_id: int) -> int:
        for i, b in enumerate(self.buses):
            if b.id == external_id:
                return i
        raise KeyError(f"no bus with id {external_id}")

    def nominal_profile(self) -> list[float]:
        return [b.nominal_load for b in self.buses]

    def total_gen_capacity(self) -> float:
        return sum(g.p_max for g in self.generators)


# ── MATPOWER text parsing ─────────────────────────────────────────────────────

_MATRIX_RE = re.compile(r"mpc\.(\w+)\s*=\s*\[(.*?)\];", re.DOTALL)
_SCALAR_RE = re.compile(r"mpc\.baseMVA\s*=\s*([0-9eE.+-]+)\s*;")


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%")[0] for line in text.splitlines())


def _parse_matrix(body: str, section: str) -> list[list[float]]:
    rows = []
    for raw in re.split(r"[;\n]", body):
        raw = raw.strip()
        if not raw:
            continue
        try:
            rows.append([float(tok) for tok in raw.split()])
        except ValueError as exc:
            raise CaseSyntaxError(f"mpc.{section}: malformed row {raw!r}") from exc
    if not rows:
        raise CaseSyntaxError(f"mpc.{section}: empty matrix")
    width = len(rows[0])
    for r in rows:
        if len(r) != width:
            raise CaseSyntaxError(f"mpc.{section}: ragged row {r}")
    return rows


def parse_case(text: str, line_limit_scale: float = 1.0, name: str = "case") -> NetworkCase:
    """Parse MATPOWER case text into a :class:`NetworkCase`.

    Branch flow limits are multiplied by ``line_limit_scale``; limits of 0 in
    the file mean "unlimited" and are mapped to a large sentinel (10x total
    generation capacity) that the scale factor does not touch.  Out-of-service
    generators and branches (status 0) are dropped.  The bus whose type field
    is 3 becomes the slack.
    """
    if line_limit_scale <= 0:
        raise ValueError(f"line_limit_scale must be positive, got {line_limit_scale}")

    stripped = _strip_comments(text)
    m = _SCALAR_RE.search(stripped)
    if m is None:
        raise CaseSyntaxError("missing mpc.baseMVA")
    base_mva = float(m.group(1))

    sections = {name_: body for name_, body in _MATRIX_RE.findall(stripped)}
    for required in ("bus", "gen", "branch", "gencost"):
        if required not in sections:
            raise CaseSyntaxError(f"missing mpc.{required} section")

    bus_rows = _parse_matrix(sections["bus"], "bus")
    gen_rows = _parse_matrix(sections["gen"], "gen")
    branch_rows = _parse_matrix(sections["branch"], "branch")
    cost_rows = _parse_matrix(sections["gencost"], "gencost")

    if any(len(r) < 3 for r in bus_rows):
        raise CaseSyntaxError("mpc.bus: rows need at least bus_i, type, Pd")
    buses = tuple(Bus(id=int(r[0]), nominal_load=float(r[2])) for r in bus_rows)
    index_of = {b.id: i for i, b in enumerate(buses)}
    if len(index_of) != len(buses):
        raise CaseSemanticError("duplicate bus id in mpc.bus")

    slack_ids = [int(r[0]) for r in bus_rows if int(r[1]) == 3]
    if len(slack_ids) != 1:
        raise CaseSemanticError(f"expected exactly one slack bus (type 3), found {len(slack_ids)}")
    slack_bus = index_of[slack_ids[0]]

    if len(cost_rows) != len(gen_rows):
        raise CaseSemanticError(
            f"gencost has {len(cost_rows)} rows for {len(gen_rows)} generators"
        )

    generators = []
    for r, cost in zip(gen_rows, cost_rows):
        if len(r) < 10:
            raise CaseSyntaxError("mpc.gen: rows need at least 10 columns")
        if int(r[7]) == 0:  # out of service
            continue
        bus_id = int(r[0])
        if bus_id not in index_of:
            raise CaseSemanticError(f"generator references unknown bus {bus_id}")
        c_quad, c_lin = _polynomial_cost(cost)
        generators.append(
            Generator(
                bus=index_of[bus_id],
                p_min=float(r[9]),
                p_max=float(r[8]),
                cost_linear=c_lin,
                cost_quadratic=c_quad,
            )
        )
    generators = tuple(generators)

    # rateA == 0 means unlimited; use a sentinel big enough never to bind.
    sentinel = UNLIMITED_RATE_FACTOR * max(sum(g.p_max for g in generators), 1.0)

    branches = []
    for r in branch_rows:
        if len(r) < 11:
            raise CaseSyntaxError("mpc.branch: rows need at least 11 columns")
        if int(r[10]) == 0:  # out of service
            continue
        f_id, t_id = int(r[0]), int(r[1])
        if f_id not in index_of or t_id not in index_of:
            raise CaseSemanticError(f"branch references unknown bus {f_id}-{t_id}")
        x = float(r[3])
        if x <= 0:
            raise CaseSemanticError(f"branch {f_id}-{t_id}: nonpositive reactance {x}")
        rate_a = float(r[5])
        limit = sentinel if rate_a == 0 else rate_a * line_limit_scale
        branches.append(
            Branch(
                from_bus=index_of[f_id],
                to_bus=index_of[t_id],
                susceptance=1.0 / x,
                flow_limit=limit,
            )
        )

    return NetworkCase(
        base_mva=base_mva,
        buses=buses,
        generators=generators,
        branches=tuple(branches),
        slack_bus=slack_bus,
        name=name,
    )


def _polynomial_cost(row: list[float]) -> tuple[float, float]:
    """Return (quadratic, linear) coefficients from a gencost row."""
    if len(row) < 4:
        raise CaseSyntaxError("mpc.gencost: rows need at least 4 columns")
    model, ncost = int(row[0]), int(row[3])
    if model != 2:
        raise CaseSyntaxError(f"unsupported cost model {model} (only polynomial)")
    coeffs = row[4:4 + ncost]
    if len(coeffs) != ncost:
        raise CaseSyntaxError("mpc.gencost: ncost does not match coefficient count")
    # coefficients are highest order first; pad low orders
    c_quad = coeffs[-3] if ncost >= 3 else 0.0
    c_lin = coeffs[-2] if ncost >= 2 else 0.0
    return float(c_quad), float(c_lin)


def parse_case_file(path, line_limit_scale: float = 1.0, name: str | None = None) -> NetworkCase:
    import pathlib

    p = pathlib.Path(path)
    return parse_case(
        p.read_text(encoding="utf-8"),
        line_limit_scale=line_limit_scale,
        name=name if name is not None else p.stem,
    )


def incident_line_capacity(case: NetworkCase, bus: int) -> float:
    """Total flow limit over all branches touching the bus (either endpoint)."""
    if not (0 <= bus < case.n_buses):
        raise IndexError(f"bus index {bus} out of range for {case.n_buses} buses")
    return sum(
        br.flow_limit for br in case.branches if bus in (br.from_bus, br.to_bus)
    )


# ── canonical JSON form ───────────────────────────────────────────────────────

CASE_SCHEMA = "gridcf-case-v1"


def case_to_json(case: NetworkCase) -> str:
    ids = [b.id for b in case.buses]
    doc = {
        "schema": CASE_SCHEMA,
        "name": case.name,
        "baseMVA": case.base_mva,
        "slack": ids[case.slack_bus],
        "buses": [{"id": b.id, "load": b.nominal_load} for b in case.buses],
        "generators": [
            {
                "bus": ids[g.bus],
                "pmin": g.p_min,
                "pmax": g.p_max,
                "cost_linear": g.cost_linear,
                "cost_quadratic": g.cost_quadratic,
            }
            for g in case.generators
        ],
        "branches": [
            {
                "from": ids[br.from_bus],
                "to": ids[br.to_bus],
                "susceptance": br.susceptance,
                "limit": br.flow_limit,
            }
            for br in case.branches
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def case_from_json(text: str) -> NetworkCase:
    doc = json.loads(text)
    if doc.get("schema") != CASE_SCHEMA:
        raise CaseSyntaxError(f"unexpected case schema {doc.get('schema')!r}")
    buses = tuple(Bus(id=int(b["id"]), nominal_load=float(b["load"])) for b in doc["buses"])
    index_of = {b.id: i for i, b in enumerate(buses)}
    generators = tuple(
        Generator(
            bus=index_of[int(g["bus"])],
            p_min=float(g["pmin"]),
            p_max=float(g["pmax"]),
            cost_linear=float(g["cost_linear"]),
            cost_quadratic=float(g["cost_quadratic"]),
        )
        for g in doc["generators"]
    )
    branches = tuple(
        Branch(
            from_bus=index_of[int(br["from"])],
            to_bus=index_of[int(br["to"])],
            susceptance=float(br["susceptance"]),
            flow_limit=float(br["limit"]),
        )
        for br in doc["branches"]
    )
    return NetworkCase(
        base_mva=float(doc["baseMVA"]),
        buses=buses,
        generators=generators,
        branches=branches,
        slack_bus=index_of[int(doc["slack"])],
        name=doc.get("name", "case"),
    )


# ── bundled cases ─────────────────────────────────────────────────────────────

def builtin_case_names() -> list[str]:
    pkg = resources.files("gridcf.cases")
    return sorted(p.name[:-2] for p in pkg.iterdir() if p.name.endswith(".m"))


def builtin_case_text(name: str) -> str:
    """Text of a case bundled with the package (e.g. ``case30_ieee``)."""
    pkg = resources.files("gridcf.cases")
    path = pkg / f"{name}.m"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled case {name!r}; have {builtin_case_names()}")
    return path.read_text(encoding="utf-8")
