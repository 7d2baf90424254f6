"""Supervised dataset protocol: sample, filter, label, balance, persist, split.

Load profiles are drawn by independent uniform perturbation of the
nominal bus loads, screened by the admissibility filter (total load
under total generation capacity, per-bus load under incident line
capacity), labeled by the exact DC-OPF feasibility check, and rejection
sampled until the feasible/infeasible quotas are both full.  Every
draw uses its own counter-derived RNG substream, so datasets are
byte-reproducible from (case, n, seed) and draws could be labeled
concurrently without changing the result.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .caseio import NetworkCase, incident_line_capacity
from .dcopf import FeasibilityLabel, as_profile, check_feasibility

__all__ = [
    "Dataset",
    "DatasetSplit",
    "QuotaTimeoutError",
    "SplitTooSmallError",
    "sample_profile",
    "admissible",
    "generate_dataset",
    "split_dataset",
    "save_dataset",
    "load_dataset",
]

DEFAULT_PERTURBATION = 0.65
DRAW_BUDGET_FACTOR = 100


class QuotaTimeoutError(RuntimeError):
    """A class quota could not be filled within the draw budget."""


class SplitTooSmallError(ValueError):
    """Requested split would leave one side empty."""


@dataclass(frozen=True)
class Dataset:
    profiles: np.ndarray      # (n_samples, n_buses) MW
    labels: np.ndarray        # (n_samples,) int, 1 = feasible
    case_id: str
    seed: int
    perturbation: float = DEFAULT_PERTURBATION

    def __post_init__(self):
        if self.profiles.shape[0] != self.labels.size:
            raise ValueError("profiles and labels disagree on sample count")

    def __len__(self) -> int:
        return self.labels.size

    def class_counts(self) -> tuple[int, int]:
        """(infeasible, feasible) counts."""
        n_feas = int(self.labels.sum())
        return len(self) - n_feas, n_feas


@dataclass(frozen=True)
class DatasetSplit:
    train: Dataset
    test: Dataset


def sample_profile(case: NetworkCase, rng: np.random.Generator,
                   perturbation: float = DEFAULT_PERTURBATION) -> np.ndarray:
    """Uniform per-bus perturbation of the nominal load by up to +-perturbation.

    Zero-load buses stay zero."""
    if not (0 <= perturbation < 1):
        raise ValueError(f"perturbation must be in [0, 1), got {perturbation}")
    nom = np.array(case.nominal_profile())
    lo = nom * (1.0 - perturbation)
    hi = nom * (1.0 + perturbation)
    draw = rng.uniform(lo, hi)
    return np.where(nom > 0, draw, 0.0)


def admissible(case: NetworkCase, profile) -> bool:
    """Screen out profiles that no generation or line capacity could ever serve.

    True iff total load < total maximum generation and every loaded bus
    demands strictly less than the total flow limit of its incident lines."""
    d = as_profile(case, profile)
    if d.sum() >= case.total_gen_capacity():
        return False
    for i in np.nonzero(d > 0)[0]:
        if d[i] >= incident_line_capacity(case, int(i)):
            return False
    return True


def generate_dataset(
    case: NetworkCase,
    n: int,
    seed: int,
    perturbation: float = DEFAULT_PERTURBATION,
    draw_budget: int | None = None,
    backend: str = "simplex",
) -> Dataset:
    """Rejection sample until n/2 feasible and n/2 infeasible admissible profiles."""
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 2, got {n}")
    budget = draw_budget if draw_budget is not None else DRAW_BUDGET_FACTOR * n
    quota = n // 2
    kept_profiles: list[np.ndarray] = []
    kept_labels: list[int] = []
    n_feas = n_infeas = 0
    draw = 0
    while (n_feas < quota or n_infeas < quota) and draw < budget:
        rng = np.random.default_rng([seed, draw])  # per-draw substream
        draw += 1
        d = sample_profile(case, rng, perturbation)
        if not admissible(case, d):
            continue
        label = check_feasibility(case, d, backend=backend)
        if label is FeasibilityLabel.FEASIBLE:
            if n_feas >= quota:
                continue
            n_feas += 1
            kept_labels.append(1)
        else:
            if n_infeas >= quota:
                continue
            n_infeas += 1
            kept_labels.append(0)
        kept_profiles.append(d)
    if n_feas < quota or n_infeas < quota:
        raise QuotaTimeoutError(
            f"draw budget {budget} exhausted with {n_feas} feasible / "
            f"{n_infeas} infeasible of {quota} each"
        )
    return Dataset(
        profiles=np.array(kept_profiles),
        labels=np.array(kept_labels, dtype=int),
        case_id=case.name,
        seed=seed,
        perturbation=perturbation,
    )


def split_dataset(ds: Dataset, ratio: float = 0.8, seed: int = 0) -> DatasetSplit:
    """Stratified shuffle split preserving class balance within one sample."""
    if not (0 < ratio < 1):
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n = len(ds)
    n_train = int(np.floor(n * ratio + 0.5))
    if n_train == 0 or n_train == n:
        raise SplitTooSmallError(f"split {ratio} of {n} samples leaves one side empty")
    # largest-remainder allocation keeps both the overall ratio and the
    # per-class balance within one sample
    class_idx = [np.nonzero(ds.labels == cls)[0] for cls in (0, 1)]
    exact = [idx.size * ratio for idx in class_idx]
    take = [int(np.floor(e)) for e in exact]
    order = sorted((0, 1), key=lambda c: exact[c] - take[c], reverse=True)
    for cls in order:
        if sum(take) >= n_train:
            break
        take[cls] += 1
    rng = np.random.default_rng([seed, ds.seed, 1])
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for cls in (0, 1):
        perm = rng.permutation(class_idx[cls])
        train_idx.append(perm[: take[cls]])
        test_idx.append(perm[take[cls]:])
    tr = np.sort(np.concatenate(train_idx))
    te = np.sort(np.concatenate(test_idx))
    mk = lambda sel: Dataset(
        profiles=ds.profiles[sel],
        labels=ds.labels[sel],
        case_id=ds.case_id,
        seed=ds.seed,
        perturbation=ds.perturbation,
    )
    return DatasetSplit(train=mk(tr), test=mk(te))


# ── persistence: CSV + sidecar manifest ───────────────────────────────────────

def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n_buses = ds.profiles.shape[1]
    w.writerow([f"d_{i}" for i in range(n_buses)] + ["label"])
    for row, label in zip(ds.profiles, ds.labels):
        w.writerow([f"{v:.6f}" for v in row] + [int(label)])
    return buf.getvalue()


def save_dataset(ds: Dataset, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "dataset.csv").write_text(dataset_to_csv(ds), encoding="utf-8")
    n_infeas, n_feas = ds.class_counts()
    manifest = {
        "case_id": ds.case_id,
        "seed": ds.seed,
        "perturbation": ds.perturbation,
        "n_samples": len(ds),
        "n_feasible": n_feas,
        "n_infeasible": n_infeas,
        "n_buses": int(ds.profiles.shape[1]),
    }
    (out / "dataset.manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_dataset(in_dir) -> Dataset:
    src = Path(in_dir)
    manifest = json.loads((src / "dataset.manifest.json").read_text(encoding="utf-8"))
    rows = []
    labels = []
    with open(src / "dataset.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_buses = len(header) - 1
        for rec in reader:
            rows.append([float(v) for v in rec[:n_buses]])
            labels.append(int(rec[n_buses]))
    return Dataset(
        profiles=np.array(rows),
        labels=np.array(labels, dtype=int),
        case_id=manifest["case_id"],
        seed=int(manifest["seed"]),
        perturbation=float(manifest["perturbation"]),
    )
