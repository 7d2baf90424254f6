"""Exact dense LP solver used by every optimization in the package.

Two-phase primal simplex on a dense tableau with implicit variable
bounds (bound flips instead of explicit bound rows).  Phase 1 minimizes
the sum of artificial infeasibilities, so feasibility is a first-class
answer; phase 2 optimizes the true objective.  Dantzig pricing with a
permanent switch to Bland's rule after too many degenerate steps.

A second backend routes through scipy's HiGHS (``backend="highs"``) for
bulk work on the larger cases; both backends implement the same
contract and tests cross-check them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinearProgram",
    "LpOutcome",
    "LpStatus",
    "DimensionError",
    "IterationLimitError",
    "solve_lp",
    "lp_is_feasible",
]

FEAS_TOL = 1e-7      # feasibility tolerance (per-unit scale)
COST_TOL = 1e-9      # reduced-cost optimality tolerance
PIVOT_TOL = 1e-9     # smallest acceptable pivot element
DEGEN_TOL = 1e-9     # step sizes below this count as degenerate
BLAND_AFTER = 1000   # degenerate pivots before switching to Bland's rule
REFRESH_EVERY = 256  # pivots between recomputations that curb drift

# nonbasic / basic variable states
_AT_LOWER, _AT_UPPER, _BASIC, _FREE = 0, 1, 2, 3


class DimensionError(ValueError):
    """Objective, constraint matrices, and bounds disagree on sizes."""


class IterationLimitError(RuntimeError):
    """No basis resolution within the pivot budget."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    solution: np.ndarray | None = None
    objective_value: float | None = None


@dataclass(frozen=True)
class LinearProgram:
    """min c'x  s.t.  a_eq x = b_eq,  a_ub x <= b_ub,  lower <= x <= upper."""

    c: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lower: np.ndarray | None = None   # default 0
    upper: np.ndarray | None = None   # default +inf

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        object.__setattr__(self, "c", c)
        n = c.size
        for mat_name, rhs_name in (("a_eq", "b_eq"), ("a_ub", "b_ub")):
            mat, rhs = getattr(self, mat_name), getattr(self, rhs_name)
            if (mat is None) != (rhs is None):
                raise DimensionError(f"{mat_name} and {rhs_name} must be given together")
            if mat is None:
                mat = np.zeros((0, n))
                rhs = np.zeros(0)
            mat = np.atleast_2d(np.asarray(mat, dtype=float))
            rhs = np.asarray(rhs, dtype=float).ravel()
            if mat.shape[1] != n:
                raise DimensionError(f"{mat_name} has {mat.shape[1]} columns, expected {n}")
            if mat.shape[0] != rhs.size:
                raise DimensionError(f"{rhs_name} length {rhs.size} != {mat.shape[0]} rows")
            object.__setattr__(self, mat_name, mat)
            object.__setattr__(self, rhs_name, rhs)
        lower = np.full(n, 0.0) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if lower.size != n or upper.size != n:
            raise DimensionError("bounds length must match objective length")
        if np.any(lower > upper + FEAS_TOL):
            raise DimensionError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.a_eq.shape[0] + self.a_ub.shape[0]


@dataclass
class _Tableau:
    """Mutable simplex state over columns [structural | slacks | artificials]."""

    T: np.ndarray          # (m, ncols) current B^-1 A
    tb: np.ndarray         # (m,) current B^-1 b
    z: np.ndarray          # (ncols,) reduced costs for the active objective
    xB: np.ndarray         # (m,) values of basic variables
    basis: np.ndarray      # (m,) column basic in each row
    state: np.ndarray      # (ncols,) variable states
    lower: np.ndarray      # (ncols,)
    upper: np.ndarray      # (ncols,)
    retired: np.ndarray    # (ncols,) bool, excluded from pricing
    pivots: int = 0
    degenerate: int = 0
    bland: bool = False

    def nonbasic_values(self) -> np.ndarray:
        vals = np.zeros(self.state.size)
        at_lo = self.state == _AT_LOWER
        at_up = self.state == _AT_UPPER
        vals[at_lo] = self.lower[at_lo]
        vals[at_up] = self.upper[at_up]
        return vals

    def refresh(self, costs: np.ndarray) -> None:
        """Recompute xB and reduced costs from the tableau to curb drift."""
        vals = self.nonbasic_values()
        nz = np.nonzero((self.state != _BASIC) & (vals != 0.0))[0]
        self.xB = self.tb - self.T[:, nz] @ vals[nz]
        cb = costs[self.basis]
        self.z = costs - cb @ self.T
        self.z[self.basis] = 0.0


def _price(tab: _Tableau) -> int:
    """Entering column index, or -1 if optimal for the active objective."""
    z = tab.z
    viol = np.full(z.size, -np.inf)
    eligible = (~tab.retired) & (tab.state != _BASIC) & (tab.upper - tab.lower > DEGEN_TOL)
    lo = eligible & (tab.state == _AT_LOWER)
    up = eligible & (tab.state == _AT_UPPER)
    fr = eligible & (tab.state == _FREE)
    viol[lo] = -z[lo]
    viol[up] = z[up]
    viol[fr] = np.abs(z[fr])
    if tab.bland:
        idx = np.nonzero(viol > COST_TOL)[0]
        return int(idx[0]) if idx.size else -1
    j = int(np.argmax(viol))
    return j if viol[j] > COST_TOL else -1


def _step(tab: _Tableau, j: int) -> str:
    """Perform one simplex step on entering column j.

    Returns "pivot", "flip", or "unbounded".
    """
    if tab.state[j] == _AT_UPPER:
        sigma = -1.0
    elif tab.state[j] == _FREE:
        sigma = -np.sign(tab.z[j]) or 1.0
    else:
        sigma = 1.0

    col = tab.T[:, j]
    rate = -sigma * col  # movement rate of each basic variable per unit step

    lb = tab.lower[tab.basis]
    ub = tab.upper[tab.basis]
    t_row = np.full(col.size, np.inf)
    inc = rate > PIVOT_TOL
    dec = rate < -PIVOT_TOL
    with np.errstate(invalid="ignore"):
        t_row[inc] = (ub[inc] - tab.xB[inc]) / rate[inc]
        t_row[dec] = (tab.xB[dec] - lb[dec]) / (-rate[dec])
    np.maximum(t_row, 0.0, out=t_row)

    own_range = tab.upper[j] - tab.lower[j]
    r = int(np.argmin(t_row)) if t_row.size else -1
    t_rows_min = t_row[r] if r >= 0 else np.inf
    t_star = min(t_rows_min, own_range)

    if not np.isfinite(t_star):
        return "unbounded"

    if t_star <= DEGEN_TOL:
        tab.degenerate += 1
        if tab.degenerate >= BLAND_AFTER:
            tab.bland = True

    if own_range <= t_rows_min + DEGEN_TOL and own_range < np.inf and (
        own_range < t_rows_min or r < 0
    ):
        # entering variable travels to its other bound: no basis change
        tab.xB -= sigma * own_range * col
        tab.state[j] = _AT_UPPER if sigma > 0 else _AT_LOWER
        tab.pivots += 1
        return "flip"

    # tie-break leaving row: largest pivot magnitude for stability,
    # smallest basis index under Bland's rule
    ties = np.nonzero(t_row <= t_star + DEGEN_TOL)[0]
    ok = np.abs(col[ties]) > PIVOT_TOL
    ties = ties[ok] if ok.any() else ties
    if tab.bland:
        r = int(ties[np.argmin(tab.basis[ties])])
    else:
        r = int(ties[np.argmax(np.abs(col[ties]))])

    leaving = tab.basis[r]
    if rate[r] > 0:
        tab.state[leaving] = _AT_UPPER
    else:
        tab.state[leaving] = _AT_LOWER
    if not np.isfinite(tab.lower[leaving]) and not np.isfinite(tab.upper[leaving]):
        tab.state[leaving] = _FREE

    if tab.state[j] == _AT_UPPER:
        enter_val = tab.upper[j] - t_star
    elif tab.state[j] == _AT_LOWER:
        enter_val = tab.lower[j] + t_star
    else:
        enter_val = sigma * t_star

    tab.xB -= sigma * t_star * col

    piv = tab.T[r, j]
    prow = tab.T[r] / piv
    pb = tab.tb[r] / piv
    colj = tab.T[:, j].copy()
    tab.T -= np.outer(colj, prow)
    tab.tb -= colj * pb
    tab.T[r] = prow
    tab.tb[r] = pb
    zj = tab.z[j]
    if zj != 0.0:
        tab.z -= zj * prow

    tab.basis[r] = j
    tab.state[j] = _BASIC
    tab.xB[r] = enter_val
    tab.pivots += 1
    return "pivot"


def _run(tab: _Tableau, costs: np.ndarray, budget: int) -> str:
    """Iterate to optimality.  Returns "optimal" or "unbounded"."""
    while True:
        j = _price(tab)
        if j < 0:
            return "optimal"
        if tab.pivots >= budget:
            raise IterationLimitError(f"pivot budget {budget} exhausted")
        outcome = _step(tab, j)
        if outcome == "unbounded":
            return "unbounded"
        if tab.pivots % REFRESH_EVERY == 0:
            tab.refresh(costs)


def _initial_tableau(lp: LinearProgram) -> tuple[_Tableau, int, int]:
    me, mu = lp.a_eq.shape[0], lp.a_ub.shape[0]
    n = lp.n_vars
    m = me + mu
    ns = n + mu                 # structural + slack columns
    ncols = ns + m              # + one artificial per row

    A = np.zeros((m, ncols))
    A[:me, :n] = lp.a_eq
    A[me:, :n] = lp.a_ub
    A[me:, n:ns] = np.eye(mu)
    b = np.concatenate([lp.b_eq, lp.b_ub])

    lower = np.concatenate([lp.lower, np.zeros(mu), np.zeros(m)])
    upper = np.concatenate([lp.upper, np.full(mu, np.inf), np.full(m, np.inf)])

    state = np.full(ncols, _AT_LOWER, dtype=np.int8)
    finite_lo = np.isfinite(lower)
    finite_up = np.isfinite(upper)
    state[~finite_lo & finite_up] = _AT_UPPER
    state[~finite_lo & ~finite_up] = _FREE

    vals = np.where(state == _AT_LOWER, np.where(finite_lo, lower, 0.0), 0.0)
    vals[state == _AT_UPPER] = upper[state == _AT_UPPER]
    resid = b - A[:, :ns] @ vals[:ns]

    basis = np.empty(m, dtype=int)
    retired = np.zeros(ncols, dtype=bool)
    sign = np.ones(m)
    for i in range(m):
        slack_col = n + (i - me) if i >= me else -1
        if slack_col >= 0 and resid[i] >= 0:
            basis[i] = slack_col          # slack crash basis, no artificial needed
            retired[ns + i] = True
        else:
            basis[i] = ns + i
            if resid[i] < 0:
                sign[i] = -1.0
    A[np.arange(m), ns + np.arange(m)] = sign

    T = A * sign[:, None]
    tb = b * sign
    xB = tb - T[:, :ns] @ vals[:ns]
    state[basis] = _BASIC

    tab = _Tableau(
        T=T, tb=tb, z=np.zeros(ncols), xB=xB, basis=basis,
        state=state, lower=lower, upper=upper, retired=retired,
    )
    return tab, ns, m


def _phase1(lp: LinearProgram, budget: int) -> tuple[_Tableau, int, bool]:
    tab, ns, m = _initial_tableau(lp)
    costs1 = np.zeros(ns + m)
    costs1[ns:] = 1.0
    tab.refresh(costs1)
    _run(tab, costs1, budget)  # bounded below by zero, never unbounded
    infeas = float(costs1[tab.basis] @ tab.xB)
    feasible = infeas <= FEAS_TOL * max(1.0, np.abs(tab.tb).max(initial=1.0))

    if feasible:
        # pivot artificials out of the basis where a structural column allows it
        for i in range(m):
            if tab.basis[i] < ns:
                continue
            row = tab.T[i, :ns]
            candidates = np.nonzero(np.abs(row) > 1e-8)[0]
            candidates = [j for j in candidates if tab.state[j] != _BASIC and not tab.retired[j]]
            if candidates:
                j = int(candidates[0])
                _force_pivot(tab, i, j)
            else:
                # redundant row: pin the artificial at zero permanently
                tab.lower[tab.basis[i]] = 0.0
                tab.upper[tab.basis[i]] = 0.0
        tab.retired[ns:] = True
    return tab, ns, feasible


def _force_pivot(tab: _Tableau, r: int, j: int) -> None:
    """Degenerate pivot bringing column j into row r (artificial purge)."""
    leaving = tab.basis[r]
    piv = tab.T[r, j]
    prow = tab.T[r] / piv
    pb = tab.tb[r] / piv
    colj = tab.T[:, j].copy()
    tab.T -= np.outer(colj, prow)
    tab.tb -= colj * pb
    tab.T[r] = prow
    tab.tb[r] = pb
    tab.basis[r] = j
    enter_val = tab.xB[r]  # zero up to roundoff
    tab.state[j] = _BASIC
    tab.state[leaving] = _AT_LOWER
    tab.xB[r] = enter_val
    tab.pivots += 1


def _extract(tab: _Tableau, lp: LinearProgram) -> np.ndarray:
    x = tab.nonbasic_values()
    x[tab.basis] = tab.xB
    sol = x[: lp.n_vars]
    # clip roundoff excursions beyond the finite bounds
    lo, up = lp.lower, lp.upper
    return np.clip(sol, np.where(np.isfinite(lo), lo, -np.inf), np.where(np.isfinite(up), up, np.inf))


def _solve_simplex(lp: LinearProgram, pivot_budget: int | None, feasibility_only: bool) -> LpOutcome:
    m = lp.n_rows
    budget = pivot_budget if pivot_budget is not None else 50 * (m + lp.n_vars + lp.a_ub.shape[0])
    tab, ns, feasible = _phase1(lp, budget)
    if not feasible:
        return LpOutcome(LpStatus.INFEASIBLE)
    if feasibility_only:
        sol = _extract(tab, lp)
        return LpOutcome(LpStatus.OPTIMAL, sol, float(lp.c @ sol))

    costs2 = np.zeros(tab.z.size)
    costs2[: lp.n_vars] = lp.c
    tab.refresh(costs2)
    outcome = _run(tab, costs2, budget)
    if outcome == "unbounded":
        return LpOutcome(LpStatus.UNBOUNDED)
    tab.refresh(costs2)
    sol = _extract(tab, lp)
    return LpOutcome(LpStatus.OPTIMAL, sol, float(lp.c @ sol))


def _solve_highs(lp: LinearProgram, feasibility_only: bool) -> LpOutcome:
    from scipy.optimize import linprog

    # feasibility probes keep the true objective: HiGHS occasionally returns
    # "Unknown" on all-zero objectives, and the status is all we read anyway
    kwargs = dict(
        A_ub=lp.a_ub if lp.a_ub.size else None,
        b_ub=lp.b_ub if lp.b_ub.size else None,
        A_eq=lp.a_eq if lp.a_eq.size else None,
        b_eq=lp.b_eq if lp.b_eq.size else None,
        bounds=np.column_stack([lp.lower, lp.upper]),
        method="highs",
    )
    res = linprog(lp.c, **kwargs)
    if res.status not in (0, 2, 3):
        res = linprog(lp.c, **kwargs, options={"presolve": False})
    if res.status not in (0, 2, 3):
        kwargs["method"] = "highs-ds"
        res = linprog(lp.c, **kwargs)
    if res.status == 0:
        x = np.asarray(res.x)
        return LpOutcome(LpStatus.OPTIMAL, x, float(lp.c @ x))
    if res.status == 2:
        return LpOutcome(LpStatus.INFEASIBLE)
    if res.status == 3:
        return LpOutcome(LpStatus.UNBOUNDED)
    # rare HiGHS "unknown" terminations: decide exactly with the built-in solver
    return _solve_simplex(lp, None, feasibility_only)


def solve_lp(
    lp: LinearProgram,
    pivot_budget: int | None = None,
    backend: str = "simplex",
) -> LpOutcome:
    """Solve the LP exactly.

    ``backend="simplex"`` is the built-in two-phase solver; ``"highs"``
    delegates to scipy (same statuses, used for large batch labeling).
    """
    if backend == "simplex":
        return _solve_simplex(lp, pivot_budget, feasibility_only=False)
    if backend == "highs":
        return _solve_highs(lp, feasibility_only=False)
    raise ValueError(f"unknown backend {backend!r}")


def lp_is_feasible(lp: LinearProgram, pivot_budget: int | None = None, backend: str = "simplex") -> bool:
    """Phase-1 feasibility decision without optimizing the objective."""
    if backend == "simplex":
        return _solve_simplex(lp, pivot_budget, feasibility_only=True).status is LpStatus.OPTIMAL
    if backend == "highs":
        return _solve_highs(lp, feasibility_only=True).status is LpStatus.OPTIMAL
    raise ValueError(f"unknown backend {backend!r}")
