"""DC optimal power flow: feasibility, minimum-cost dispatch, and the
exact minimal-adjustment restoration used as the analytical baseline.

All quantities cross the module boundary in MW; internally everything is
converted to per-unit (divide by baseMVA) before LP assembly for
conditioning, and back after.  Load vectors are net demand per bus in
case bus order; restoration with relaxed bounds may produce negative
net demand (extra generation at the bus).
"""

from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass

import numpy as np

from .caseio import NetworkCase
from .lpcore import LinearProgram, LpStatus, lp_is_feasible, solve_lp

__all__ = [
    "FeasibilityLabel",
    "DispatchSolution",
    "RestorationResult",
    "InfeasibleInputError",
    "StructurallyInfeasibleError",
    "build_dcopf",
    "check_feasibility",
    "solve_dispatch",
    "restore_baseline",
    "as_profile",
]

BALANCE_TOL_MW = 1e-5


class InfeasibleInputError(ValueError):
    """Dispatch was requested for a load profile with no feasible dispatch."""


class StructurallyInfeasibleError(ValueError):
    """No dispatch exists even at the most permissive point of the bounds."""


class FeasibilityLabel(enum.Enum):
    FEASIBLE = 1
    INFEASIBLE = 0


@dataclass(frozen=True)
class DispatchSolution:
    generation: np.ndarray   # MW per generator
    angles: np.ndarray       # radians per bus, slack pinned to 0
    flows: np.ndarray        # MW per branch, from->to positive
    cost: float              # $ at linear cost coefficients


@dataclass(frozen=True)
class RestorationResult:
    served_demand: np.ndarray   # MW per bus actually served
    delta: np.ndarray           # MW per bus, original - served (positive = curtailment)
    dispatch: DispatchSolution
    total_adjustment: float     # MW, L1 norm of delta


def as_profile(case: NetworkCase, demand) -> np.ndarray:
    """Validate and return the demand vector aligned with case bus order."""
    d = np.asarray(demand, dtype=float).ravel()
    if d.size != case.n_buses:
        raise ValueError(f"profile has {d.size} entries for {case.n_buses} buses")
    if not np.all(np.isfinite(d)):
        raise ValueError("profile contains non-finite entries")
    return d


class _CaseArrays:
    """Constant LP blocks for one case; only the balance rhs varies per profile."""

    def __init__(self, case: NetworkCase):
        n, g, l = case.n_buses, len(case.generators), len(case.branches)
        base = case.base_mva
        self.n, self.g, self.l = n, g, l
        self.base = base
        self.gen_bus = np.array([gen.bus for gen in case.generators], dtype=int)
        self.pmin = np.array([gen.p_min for gen in case.generators]) / base
        self.pmax = np.array([gen.p_max for gen in case.generators]) / base
        self.cost_lin = np.array([gen.cost_linear for gen in case.generators])
        self.fr = np.array([br.from_bus for br in case.branches], dtype=int)
        self.to = np.array([br.to_bus for br in case.branches], dtype=int)
        self.b = np.array([br.susceptance for br in case.branches])
        self.cap = np.array([br.flow_limit for br in case.branches]) / base

        nv = n + g  # theta columns then generator columns
        a_eq = np.zeros((n, nv))
        for k in range(l):
            f, t, bk = self.fr[k], self.to[k], self.b[k]
            a_eq[f, f] -= bk
            a_eq[f, t] += bk
            a_eq[t, t] -= bk
            a_eq[t, f] += bk
        for k in range(g):
            a_eq[self.gen_bus[k], n + k] += 1.0
        self.a_eq = a_eq

        flow = np.zeros((l, nv))
        flow[np.arange(l), self.fr] = self.b
        flow[np.arange(l), self.to] = -self.b
        self.flow_rows = flow
        self.a_ub = np.vstack([flow, -flow])
        self.b_ub = np.concatenate([self.cap, self.cap])

        lower = np.concatenate([np.full(n, -np.inf), self.pmin])
        upper = np.concatenate([np.full(n, np.inf), self.pmax])
        lower[case.slack_bus] = 0.0
        upper[case.slack_bus] = 0.0
        self.lower = lower
        self.upper = upper

        c = np.zeros(nv)
        c[n:] = self.cost_lin * base  # objective in $ for per-unit generation vars
        self.c_dispatch = c


_case_refs: "weakref.WeakKeyDictionary[NetworkCase, _CaseArrays]" = weakref.WeakKeyDictionary()


def _arrays(case: NetworkCase) -> _CaseArrays:
    arr = _case_refs.get(case)
    if arr is None:
        arr = _CaseArrays(case)
        _case_refs[case] = arr
    return arr


def build_dcopf(case: NetworkCase, profile) -> LinearProgram:
    """Assemble the dispatch LP: variables (theta per bus, p per generator),
    balance equalities, two-sided flow limits, generator and slack bounds."""
    d = as_profile(case, profile)
    arr = _arrays(case)
    return LinearProgram(
        c=arr.c_dispatch,
        a_eq=arr.a_eq,     # rows read: gen at bus - net outflow = demand
        b_eq=d / arr.base,
        a_ub=arr.a_ub,
        b_ub=arr.b_ub,
        lower=arr.lower,
        upper=arr.upper,
    )


def check_feasibility(case: NetworkCase, profile, backend: str = "simplex") -> FeasibilityLabel:
    """Phase-1 decision: does any dispatch satisfy balance, generator, and flow limits?"""
    lp = build_dcopf(case, profile)
    ok = lp_is_feasible(lp, backend=backend)
    return FeasibilityLabel.FEASIBLE if ok else FeasibilityLabel.INFEASIBLE


def _dispatch_from(case: NetworkCase, x: np.ndarray) -> DispatchSolution:
    arr = _arrays(case)
    theta = x[: arr.n].copy()
    theta -= theta[case.slack_bus]
    pg = x[arr.n : arr.n + arr.g] * arr.base
    flows = arr.b * (theta[arr.fr] - theta[arr.to]) * arr.base
    cost = float(arr.cost_lin @ pg)
    return DispatchSolution(generation=pg, angles=theta, flows=flows, cost=cost)


def solve_dispatch(case: NetworkCase, profile, backend: str = "simplex") -> DispatchSolution:
    """Minimum linear-cost dispatch for a feasible profile."""
    lp = build_dcopf(case, profile)
    out = solve_lp(lp, backend=backend)
    if out.status is LpStatus.INFEASIBLE:
        raise InfeasibleInputError("no feasible dispatch for this load profile")
    if out.status is not LpStatus.OPTIMAL:
        raise InfeasibleInputError(f"dispatch LP ended with status {out.status}")
    return _dispatch_from(case, out.solution)


def restore_baseline(
    case: NetworkCase,
    profile,
    bounds=None,
    backend: str = "simplex",
) -> RestorationResult:
    """Minimal L1 demand adjustment that admits a feasible dispatch.

    ``bounds`` is a per-bus (lower, upper) box for the served demand in MW;
    the default [0, d_i] allows pure curtailment.  Wider boxes model backup
    generation or deliberate load increases.
    """
    d = as_profile(case, profile)
    arr = _arrays(case)
    n, g = arr.n, arr.g

    if bounds is None:
        lo_mw = np.zeros(n)
        hi_mw = d.copy()
    else:
        bounds = np.asarray(bounds, dtype=float)
        if bounds.shape != (n, 2):
            raise ValueError(f"bounds must have shape ({n}, 2)")
        lo_mw, hi_mw = bounds[:, 0].copy(), bounds[:, 1].copy()
        if np.any(lo_mw > hi_mw):
            raise ValueError("bounds lower exceeds upper")
    lo = lo_mw / arr.base
    hi = hi_mw / arr.base
    d_pu = d / arr.base

    nv = n + g
    pure_curtail = np.all(hi <= d_pu + 1e-12)

    if pure_curtail:
        # delta = d - served >= 0, so |delta| sums to sum(d) - sum(served):
        # maximize served demand.  variables: [theta, pg, served]
        c = np.zeros(nv + n)
        c[nv:] = -1.0
        a_eq = np.zeros((n, nv + n))
        a_eq[:, :nv] = arr.a_eq
        # balance rows read (gen - outflow) = served, i.e. ... - served = 0
        a_eq[np.arange(n), nv + np.arange(n)] = -1.0
        b_eq = np.zeros(n)
        lower = np.concatenate([arr.lower, lo])
        upper = np.concatenate([arr.upper, hi])
        lp = LinearProgram(c=c, a_eq=a_eq, b_eq=b_eq, a_ub=_pad_cols(arr.a_ub, n),
                           b_ub=arr.b_ub, lower=lower, upper=upper)
        out = solve_lp(lp, backend=backend)
        if out.status is not LpStatus.OPTIMAL:
            raise StructurallyInfeasibleError(
                "no dispatch exists anywhere inside the served-demand bounds"
            )
        x = out.solution
        served = x[nv:] * arr.base
    else:
        # general signed adjustment: served + dp - dm = d, minimize sum(dp + dm)
        c = np.zeros(nv + 3 * n)
        c[nv + n :] = 1.0
        a_eq = np.zeros((2 * n, nv + 3 * n))
        a_eq[:n, :nv] = arr.a_eq
        a_eq[np.arange(n), nv + np.arange(n)] = -1.0
        a_eq[n + np.arange(n), nv + np.arange(n)] = 1.0
        a_eq[n + np.arange(n), nv + n + np.arange(n)] = 1.0
        a_eq[n + np.arange(n), nv + 2 * n + np.arange(n)] = -1.0
        b_eq = np.concatenate([np.zeros(n), d_pu])
        lower = np.concatenate([arr.lower, lo, np.zeros(2 * n)])
        upper = np.concatenate([arr.upper, hi, np.full(2 * n, np.inf)])
        lp = LinearProgram(c=c, a_eq=a_eq, b_eq=b_eq, a_ub=_pad_cols(arr.a_ub, 3 * n),
                           b_ub=arr.b_ub, lower=lower, upper=upper)
        out = solve_lp(lp, backend=backend)
        if out.status is not LpStatus.OPTIMAL:
            raise StructurallyInfeasibleError(
                "no dispatch exists anywhere inside the served-demand bounds"
            )
        x = out.solution
        served = x[nv : nv + n] * arr.base

    delta = d - served
    dispatch = _dispatch_from(case, x[:nv])
    return RestorationResult(
        served_demand=served,
        delta=delta,
        dispatch=dispatch,
        total_adjustment=float(np.abs(delta).sum()),
    )


def _pad_cols(mat: np.ndarray, extra: int) -> np.ndarray:
    return np.hstack([mat, np.zeros((mat.shape[0], extra))])
