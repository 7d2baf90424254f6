"""Diverse counterfactual load adjustments.

Given a load profile the classifier calls infeasible, search for k
nearby profiles the classifier calls feasible, balancing three terms:
a hinge loss on the model logit (cross the boundary, don't overshoot),
MAD-scaled proximity to the original profile, and a determinantal
diversity score over the option set.  The search is a seeded genetic
optimization over joint k-sets (model-agnostic: works identically for
the tree and the network), followed by a greedy sparsity pass that
reverts small unnecessary changes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .caseio import NetworkCase

__all__ = [
    "CfConstraints",
    "CfConfig",
    "CfOption",
    "ObjectiveBreakdown",
    "CounterfactualSet",
    "InputAlreadyFeasibleError",
    "hinge_yloss",
    "distance",
    "dpp_diversity",
    "cf_objective",
    "generate_counterfactuals",
    "sparsify",
]

MAD_FLOOR = 1e-4
DEFAULT_SPARSITY_THRESHOLD = None  # consider every changed feature
MUTATION_SIGMA_FRACTION = 0.05   # of the per-bus bound range
PERTURB_RATE = 0.20              # gaussian-perturb an already-changed gene
REVERT_RATE = 0.10               # snap a changed gene back to x
OPEN_RATE = 0.02                 # start changing an untouched gene
TOURNAMENT = 3


class InputAlreadyFeasibleError(ValueError):
    """Counterfactuals were requested for a profile the model already accepts."""


class DimensionError(ValueError):
    pass


def hinge_yloss(logit_value: float, target: int) -> float:
    """max(0, 1 - z * logit) with z = +1 for target class 1, -1 for class 0."""
    z = 1.0 if target == 1 else -1.0
    return max(0.0, 1.0 - z * logit_value)


def distance(a, b, mads) -> float:
    """Mean per-feature absolute difference scaled by (floored) MADs.

    Inputs are in normalized feature space; MADs below the floor are
    clamped so near-constant features cannot blow up the metric."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    m = np.asarray(mads, dtype=float).ravel()
    if a.size != b.size or a.size != m.size:
        raise DimensionError(f"length mismatch: {a.size}, {b.size}, {m.size}")
    m = np.maximum(m, MAD_FLOOR)
    return float(np.mean(np.abs(a - b) / m))


def dpp_diversity(options, mads) -> float:
    """det(K) with K_ij = 1 / (1 + dist(c_i, c_j)); options in normalized space."""
    opts = [np.asarray(o, dtype=float).ravel() for o in options]
    k = len(opts)
    K = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            K[i, j] = K[j, i] = 1.0 / (1.0 + distance(opts[i], opts[j], mads))
    return float(np.linalg.det(K))


@dataclass(frozen=True)
class ObjectiveBreakdown:
    mean_yloss: float
    mean_distance: float
    dpp: float
    total: float

    @classmethod
    def combine(cls, mean_yloss: float, mean_distance: float, dpp: float,
                lambda1: float, lambda2: float) -> "ObjectiveBreakdown":
        return cls(
            mean_yloss=mean_yloss,
            mean_distance=mean_distance,
            dpp=dpp,
            total=mean_yloss + lambda1 * mean_distance - lambda2 * dpp,
        )

    def to_dict(self) -> dict:
        return {"yloss": self.mean_yloss, "dist": self.mean_distance,
                "dpp": self.dpp, "total": self.total}


@dataclass(frozen=True)
class CfConstraints:
    """Actionability box: which buses may move and within what per-bus range."""

    actionable: np.ndarray   # (n,) bool; frozen buses keep x's value exactly
    bounds: np.ndarray       # (n, 2) MW box for counterfactual values

    def __post_init__(self):
        if np.any(self.bounds[:, 0] > self.bounds[:, 1]):
            raise ValueError("constraint lower bound exceeds upper bound")

    @classmethod
    def defaults(cls, case: NetworkCase, x, freeze=(), allow_negative: bool = False
                 ) -> "CfConstraints":
        """Pure-curtailment box [0, x_i]; actionable = nonzero nominal-load buses.

        ``freeze`` lists external bus ids to pin at x's value; ``allow_negative``
        lowers the floor to -nominal (backup generation / battery discharge as
        negative net demand)."""
        x = np.asarray(x, dtype=float).ravel()
        nom = np.array(case.nominal_profile())
        actionable = nom > 0
        frozen_ids = set(freeze)
        for i, bus in enumerate(case.buses):
            if bus.id in frozen_ids:
                actionable[i] = False
        lo = np.where(actionable, -nom if allow_negative else 0.0, x)
        hi = np.where(actionable, np.maximum(x, 0.0), x)
        lo = np.minimum(lo, x)  # keep x inside its own box
        return cls(actionable=actionable, bounds=np.column_stack([lo, hi]))

    def clip(self, values: np.ndarray, x: np.ndarray) -> np.ndarray:
        out = np.clip(values, self.bounds[:, 0], self.bounds[:, 1])
        out[..., ~self.actionable] = x[~self.actionable]
        return out


@dataclass(frozen=True)
class CfConfig:
    k: int = 3
    lambda1: float = 0.5
    lambda2: float = 1.0
    generations: int = 200
    population: int = 30
    sparsity_threshold: float | None = DEFAULT_SPARSITY_THRESHOLD
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda weights must be nonnegative")


@dataclass(frozen=True)
class CfOption:
    profile: np.ndarray       # MW counterfactual load vector
    delta: np.ndarray         # MW, x - profile (positive = reduction)
    proba: float
    logit: float
    distance: float           # MAD-scaled distance to x in normalized space
    n_changed: int
    validated: bool | None = None   # true DC-OPF feasibility, filled by pipeline


@dataclass(frozen=True)
class CounterfactualSet:
    options: tuple[CfOption, ...]
    objective: ObjectiveBreakdown
    config: CfConfig
    exhausted: bool = False   # no fully classifier-valid k-set within budget

    def to_dict(self, bus_ids=None) -> dict:
        def delta_map(delta):
            out = {}
            for i, v in enumerate(delta):
                if abs(v) > 1e-9:
                    key = str(bus_ids[i]) if bus_ids is not None else str(i)
                    out[key] = float(v)
            return out

        return {
            "options": [
                {
                    "delta": delta_map(o.delta),
                    "total_mw": float(np.abs(o.delta).sum()),
                    "proba": o.proba,
                    "logit": o.logit,
                    "distance": o.distance,
                    "n_changed": o.n_changed,
                    "validated": o.validated,
                }
                for o in self.options
            ],
            "objective": self.objective.to_dict(),
            "config": {
                "k": self.config.k,
                "lambda1": self.config.lambda1,
                "lambda2": self.config.lambda2,
                "generations": self.config.generations,
                "population": self.config.population,
                "sparsity_threshold": self.config.sparsity_threshold,
            },
            "seed": self.config.seed,
            "exhausted": self.exhausted,
        }


def cf_objective(model, x, options, config: CfConfig) -> ObjectiveBreakdown:
    """Evaluate the k-set objective for MW-space options against input x."""
    X = np.asarray(x, dtype=float).ravel()
    opts = np.atleast_2d(np.asarray(options, dtype=float))
    logits = model.logits(opts)
    ylosses = np.maximum(0.0, 1.0 - logits)   # target class feasible, z = +1
    zx = model.scaler.transform(X.reshape(1, -1))[0]
    zo = model.scaler.transform(opts)
    dists = [distance(z, zx, model.mads) for z in zo]
    dpp = dpp_diversity(list(zo), model.mads)
    return ObjectiveBreakdown.combine(
        float(np.mean(ylosses)), float(np.mean(dists)), dpp,
        config.lambda1, config.lambda2,
    )


INVALID_PENALTY = 100.0   # selection pressure: assemble fully valid sets first


def _batch_objective(model, x_norm, pop, scaler, mads, lambda1, lambda2):
    """Vectorized objective over a population of k-sets.

    pop: (P, k, d) in MW.  Returns (fitness, totals, valid_mask) where
    fitness adds a large penalty per classifier-invalid option so that
    selection is lexicographic (validity first, then the set objective)."""
    P, k, d = pop.shape
    flat = pop.reshape(P * k, d)
    logits = model.logits(flat).reshape(P, k)
    probas = 1.0 / (1.0 + np.exp(-np.clip(logits, -500, 500)))
    ylosses = np.maximum(0.0, 1.0 - logits).mean(axis=1)

    zo = scaler.transform(flat).reshape(P, k, d)
    m = np.maximum(mads, MAD_FLOOR)
    dists = (np.abs(zo - x_norm) / m).mean(axis=2)          # (P, k)
    mean_dist = dists.mean(axis=1)

    if k == 1:
        dpp = np.ones(P)
    else:
        diff = zo[:, :, None, :] - zo[:, None, :, :]        # (P, k, k, d)
        pair = (np.abs(diff) / m).mean(axis=3)
        K = 1.0 / (1.0 + pair)
        K[:, np.arange(k), np.arange(k)] = 1.0
        dpp = np.linalg.det(K)

    totals = ylosses + lambda1 * mean_dist - lambda2 * dpp
    n_invalid = np.sum(probas <= 0.5, axis=1)
    if k > 1:
        # duplicate options collapse the diversity kernel; count them invalid
        same = np.all(pop[:, :, None, :] == pop[:, None, :, :], axis=3)
        same[:, np.arange(k), np.arange(k)] = False
        n_invalid = n_invalid + same.any(axis=(1, 2)).astype(int)
    fitness = totals + INVALID_PENALTY * n_invalid
    valid = n_invalid == 0
    return fitness, totals, valid


def generate_counterfactuals(model, x, constraints: CfConstraints,
                             config: CfConfig) -> CounterfactualSet:
    """Seeded genetic search over joint k-sets followed by sparsification."""
    x = np.asarray(x, dtype=float).ravel()
    if float(model.proba(x.reshape(1, -1))[0]) > 0.5:
        raise InputAlreadyFeasibleError("input is already classified feasible")

    rng = np.random.default_rng(config.seed)
    k, P, d = config.k, config.population, x.size
    lo, hi = constraints.bounds[:, 0], constraints.bounds[:, 1]
    act_idx = np.nonzero(constraints.actionable)[0]
    if act_idx.size == 0:
        # nothing may move; the (invalid) degenerate set is all copies of x
        return _finalize(model, x, np.tile(x, (k, 1)), constraints, config, exhausted=True)

    # init: perturb x toward lower load on small random actionable subsets.
    # Half the population starts proximal (shallow perturbations), half
    # explores the full curtailment range.
    pop = np.tile(x, (P, k, 1))
    down = np.minimum(x, hi)
    for p in range(P):
        proximal = p < P // 2
        for o in range(k):
            size = int(rng.integers(1, min(act_idx.size, 3 if proximal else 5) + 1))
            subset = rng.choice(act_idx, size=size, replace=False)
            floor = (
                np.maximum(lo[subset], down[subset] - 0.35 * (down[subset] - lo[subset]))
                if proximal else lo[subset]
            )
            pop[p, o, subset] = rng.uniform(floor, down[subset])

    x_norm = model.scaler.transform(x.reshape(1, -1))[0]
    sigma = MUTATION_SIGMA_FRACTION * (hi - lo)
    evaluate = lambda population: _batch_objective(
        model, x_norm, population, model.scaler, model.mads,
        config.lambda1, config.lambda2,
    )

    fitness, totals, valid = evaluate(pop)
    best_any = pop[int(np.argmin(fitness))].copy()
    best_any_fit = float(fitness.min())
    best_valid = None
    best_valid_total = np.inf
    if valid.any():
        i = int(np.argmin(np.where(valid, totals, np.inf)))
        best_valid, best_valid_total = pop[i].copy(), float(totals[i])

    for _ in range(config.generations):
        # tournament selection on penalized fitness
        contenders = rng.integers(0, P, size=(P, TOURNAMENT))
        winners = contenders[np.arange(P), np.argmin(fitness[contenders], axis=1)]
        parents = pop[winners]

        # uniform crossover at the bus level; the partner's option slots are
        # shuffled so strong options can migrate between set positions
        partners = parents[rng.permutation(P)]
        slot_perm = rng.permuted(np.tile(np.arange(k), (P, 1)), axis=1)
        partners = partners[np.arange(P)[:, None], slot_perm]
        mask = rng.random((P, k, d)) < 0.5
        children = np.where(mask, parents, partners)

        # mutation: gaussian-perturb changed genes, open untouched genes by
        # resampling across their curtailment range, snap changed genes back
        # to x (sparsity pressure)
        changed = children != x
        roll = rng.random((P, k, d))
        noise = rng.normal(0.0, 1.0, size=(P, k, d)) * sigma
        perturb = changed & (roll < PERTURB_RATE)
        children = np.where(perturb, children + noise, children)
        fresh = rng.uniform(np.broadcast_to(lo, (P, k, d)), np.broadcast_to(down, (P, k, d)))
        opened = ~changed & (roll < OPEN_RATE)
        children = np.where(opened, fresh, children)
        revert = changed & (roll > 1.0 - REVERT_RATE)
        children = np.where(revert, x, children)
        children = np.clip(children, lo, hi)
        children[:, :, ~constraints.actionable] = x[~constraints.actionable]

        # elitism: carry the best individual forward unchanged
        elite = best_valid if best_valid is not None else best_any
        children[0] = elite

        pop = children
        fitness, totals, valid = evaluate(pop)
        i = int(np.argmin(fitness))
        if fitness[i] < best_any_fit:
            best_any, best_any_fit = pop[i].copy(), float(fitness[i])
        if valid.any():
            masked = np.where(valid, totals, np.inf)
            i = int(np.argmin(masked))
            if masked[i] < best_valid_total:
                best_valid, best_valid_total = pop[i].copy(), float(masked[i])

    exhausted = best_valid is None
    chosen = best_any if exhausted else best_valid
    return _finalize(model, x, chosen, constraints, config, exhausted)


def _finalize(model, x, options: np.ndarray, constraints: CfConstraints,
              config: CfConfig, exhausted: bool) -> CounterfactualSet:
    final: list[np.ndarray] = []
    for c in options:
        c = constraints.clip(c.copy(), x)
        if float(model.proba(c.reshape(1, -1))[0]) > 0.5:
            sparse = sparsify(model, x, c, config.sparsity_threshold)
            # keep the un-sparsified variant if sparsity collapsed this
            # option onto an earlier one
            if not any(np.array_equal(sparse, f) for f in final):
                c = sparse
        if any(np.array_equal(c, f) for f in final):
            exhausted = True  # degenerate set: duplicates survived the search
        final.append(c)
    final = np.array(final)

    breakdown = cf_objective(model, x, final, config)
    zx = model.scaler.transform(x.reshape(1, -1))[0]
    zo = model.scaler.transform(final)
    opts = []
    for c, z in zip(final, zo):
        delta = x - c
        logit_c = float(model.logits(c.reshape(1, -1))[0])
        opts.append(CfOption(
            profile=c,
            delta=delta,
            proba=1.0 / (1.0 + np.exp(-np.clip(logit_c, -500, 500))),
            logit=logit_c,
            distance=distance(z, zx, model.mads),
            n_changed=int(np.sum(delta != 0.0)),
        ))
    return CounterfactualSet(
        options=tuple(opts),
        objective=breakdown,
        config=config,
        exhausted=exhausted,
    )


def sparsify(model, x, option, threshold: float | None = None):
    """Greedily revert changes while the option stays classifier-valid.

    Changed features are visited in ascending order of |change|; each
    feature gets one attempt, a revert that drops the probability to 0.5
    or below is undone, and the pass continues with the next feature.
    A numeric ``threshold`` restricts candidates to changes smaller than
    it; None considers every changed feature."""
    x = np.asarray(x, dtype=float).ravel()
    c = np.asarray(option, dtype=float).ravel().copy()
    change = np.abs(c - x)
    mask = change > 0 if threshold is None else (change > 0) & (change < threshold)
    candidates = np.nonzero(mask)[0]
    for j in candidates[np.argsort(change[candidates], kind="stable")]:
        keep = c[j]
        c[j] = x[j]
        if float(model.proba(c.reshape(1, -1))[0]) <= 0.5:
            c[j] = keep
    return c
