"""End-to-end restoration flow and the experiment harness.

``restore_with_validation`` closes the loop the classifiers leave open:
counterfactual options are re-checked against the true DC-OPF, failing
options are dropped, and the search retries with a fresh seed and a
doubled budget until at least one option survives.  ``run_experiment``
drives the whole protocol (generate, train, evaluate, restore, validate,
compare against the exact baseline) and writes the report artifacts.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .caseio import NetworkCase, builtin_case_text, parse_case, parse_case_file
from .cfx import (CfConfig, CfConstraints, CfOption, CounterfactualSet,
                  InputAlreadyFeasibleError, generate_counterfactuals)
from .datagen import generate_dataset, split_dataset, save_dataset
from .dcopf import (FeasibilityLabel, RestorationResult, check_feasibility,
                    restore_baseline)
from .learn import evaluate, train_ffnn, train_tree

__all__ = [
    "ValidatedOptions",
    "ExperimentReport",
    "RecoveryFailedError",
    "restore_with_validation",
    "perturbation_stats",
    "histogram",
    "run_experiment",
    "DEFAULT_EXPERIMENT_CONFIG",
]


class RecoveryFailedError(RuntimeError):
    """No counterfactual option survived true validation within the retry budget."""


@dataclass(frozen=True)
class ValidatedOptions:
    input: np.ndarray                 # the infeasible load profile
    options: CounterfactualSet        # only options that re-validated Feasible
    retries_used: int
    baseline: RestorationResult
    method: str = "cf"                # model tag, e.g. "ffnn" / "dt"
    instance_id: int = -1

    def best_total(self) -> float:
        return min(float(np.abs(o.delta).sum()) for o in self.options.options)

    def best_option(self) -> CfOption:
        return min(self.options.options, key=lambda o: float(np.abs(o.delta).sum()))


def _derived_seed(base: int, *parts: int) -> int:
    return int(np.random.default_rng([base, *parts]).integers(2**31 - 1))


def restore_with_validation(
    case: NetworkCase,
    model,
    x,
    constraints: CfConstraints | None = None,
    config: CfConfig | None = None,
    max_retries: int = 3,
    backend: str = "simplex",
    method: str = "cf",
    instance_id: int = -1,
) -> ValidatedOptions:
    """Generate counterfactuals and keep only the ones the solver confirms.

    Retries with a fresh seed and doubled generation budget when no option
    survives; raises RecoveryFailedError after ``max_retries`` retries."""
    x = np.asarray(x, dtype=float).ravel()
    if constraints is None:
        constraints = CfConstraints.defaults(case, x)
    if config is None:
        config = CfConfig()

    baseline = restore_baseline(case, x, backend=backend)
    retries = 0
    for attempt in range(max_retries + 1):
        cfg = replace(
            config,
            seed=config.seed if attempt == 0 else _derived_seed(config.seed, attempt),
            generations=config.generations * (2 ** attempt),
        )
        cs = generate_counterfactuals(model, x, constraints, cfg)
        flagged = []
        for opt in cs.options:
            ok = check_feasibility(case, opt.profile, backend=backend) is FeasibilityLabel.FEASIBLE
            flagged.append(replace(opt, validated=bool(ok)))
        survivors = tuple(o for o in flagged if o.validated)
        if survivors:
            return ValidatedOptions(
                input=x,
                options=replace(cs, options=survivors),
                retries_used=retries,
                baseline=baseline,
                method=method,
                instance_id=instance_id,
            )
        retries += 1
    raise RecoveryFailedError(
        f"no option validated in {max_retries + 1} attempts (instance {instance_id})"
    )


# ── statistics over restored instances ────────────────────────────────────────

@dataclass(frozen=True)
class MethodStats:
    n_instances: int
    mean_total: float     # mean per-profile total |delta|, MW
    std_total: float
    pooled_deltas: np.ndarray   # per-bus deltas of the chosen option, signed MW

    def to_dict(self) -> dict:
        return {
            "n_instances": self.n_instances,
            "mean_total_mw": self.mean_total,
            "std_total_mw": self.std_total,
        }


def perturbation_stats(results: list[ValidatedOptions]) -> dict[str, MethodStats]:
    """Per-method adjustment statistics plus the exact-baseline reference.

    For each counterfactual method the minimum-total validated option of
    each instance is the corrected version; the baseline is deduplicated
    across methods by instance id.  Signed deltas are pooled per bus for
    histogramming."""
    if not results:
        raise ValueError("no results to summarize")
    by_method: dict[str, list[ValidatedOptions]] = {}
    for vo in results:
        by_method.setdefault(vo.method, []).append(vo)

    stats: dict[str, MethodStats] = {}
    for method, vos in by_method.items():
        totals = [vo.best_total() for vo in vos]
        pooled = np.concatenate([vo.best_option().delta for vo in vos])
        stats[method] = MethodStats(
            n_instances=len(vos),
            mean_total=float(np.mean(totals)),
            std_total=float(np.std(totals)),
            pooled_deltas=pooled,
        )

    seen: dict[int, ValidatedOptions] = {}
    for vo in results:
        seen.setdefault(vo.instance_id, vo)
    base_vos = list(seen.values())
    totals = [vo.baseline.total_adjustment for vo in base_vos]
    pooled = np.concatenate([vo.baseline.delta for vo in base_vos])
    stats["baseline"] = MethodStats(
        n_instances=len(base_vos),
        mean_total=float(np.mean(totals)),
        std_total=float(np.std(totals)),
        pooled_deltas=pooled,
    )
    return stats


def histogram(deltas, bin_width: float = 5.0) -> dict[str, int]:
    """Zero-anchored histogram {"[lo,hi)": count}; only non-empty bins."""
    d = np.asarray(deltas, dtype=float).ravel()
    if d.size == 0:
        return {}
    idx = np.floor(d / bin_width).astype(int)
    out: dict[str, int] = {}
    for k in sorted(set(idx.tolist())):
        lo, hi = k * bin_width, (k + 1) * bin_width
        out[f"[{lo:g},{hi:g})"] = int(np.sum(idx == k))
    return out


# ── experiment harness ────────────────────────────────────────────────────────

DEFAULT_EXPERIMENT_CONFIG = {
    "case": "case30_ieee",
    "scale": 1.0,
    "n_samples": 10000,
    "perturbation": 0.65,
    "split_ratio": 0.8,
    "seed": 7,
    "ffnn": {"epochs": 300, "lr": 1e-3, "class_weights": [2.0, 1.0], "batch_size": 32},
    "tree": {"max_depth": 4, "class_weights": [2.0, 1.0]},
    "cf": {"k": 3, "lambda1": 0.5, "lambda2": 1.0, "generations": 200, "population": 30},
    "max_instances": 200,
    "max_retries": 3,
    "backend": "simplex",
    "timing_repeats": 3,
    "histogram_bin_mw": 5.0,
}


@dataclass
class ExperimentReport:
    config: dict
    dataset_info: dict
    classifier_metrics: dict            # method -> metrics dict (Table I analog)
    recovery: dict                      # method -> {"rate": float, "n": int, "failures": int}
    adjustments: dict                   # method -> MethodStats dict (Table II analog)
    histograms: dict                    # method -> {bin: count} (Fig. 2 analog)
    timings_ms: dict = field(default_factory=dict)   # method -> raw per-instance ms (Table IV analog)

    def deterministic_dict(self) -> dict:
        """Everything except wall-clock timing, for byte-stable serialization."""
        return {
            "schema": "gridcf-report-v1",
            "config": self.config,
            "dataset": self.dataset_info,
            "classifiers": self.classifier_metrics,
            "recovery": self.recovery,
            "adjustments": self.adjustments,
            "histograms": self.histograms,
        }

    def timing_summary(self) -> dict:
        out = {}
        for method, vals in self.timings_ms.items():
            arr = np.asarray(vals, dtype=float)
            out[method] = {
                "mean_ms": float(arr.mean()),
                "std_ms": float(arr.std()),
                "median_ms": float(np.median(arr)),
                "n": int(arr.size),
            }
        return out


def _load_case_from_config(cfg: dict) -> NetworkCase:
    name = cfg["case"]
    scale = float(cfg.get("scale", 1.0))
    path = Path(name)
    if path.suffix == ".m" and path.exists():
        return parse_case_file(path, line_limit_scale=scale)
    label = name if scale == 1.0 else f"{name}@{scale:g}"
    return parse_case(builtin_case_text(name), line_limit_scale=scale, name=label)


def run_experiment(config: dict | str | Path, out_dir: str | Path | None = None,
                   progress=None) -> ExperimentReport:
    """Execute the full protocol and (optionally) write report artifacts.

    ``config`` is a dict or a path to a JSON file; missing keys fall back
    to DEFAULT_EXPERIMENT_CONFIG.  Artifacts: report.json (deterministic),
    histogram.csv, timing.csv, report.md, dataset/ (CSV + manifest)."""
    if not isinstance(config, dict):
        config = json.loads(Path(config).read_text(encoding="utf-8"))
    cfg = {**DEFAULT_EXPERIMENT_CONFIG, **config}
    for key in ("ffnn", "tree", "cf"):
        cfg[key] = {**DEFAULT_EXPERIMENT_CONFIG[key], **cfg.get(key, {})}
    log = progress if progress is not None else (lambda msg: None)
    backend = cfg["backend"]
    seed = int(cfg["seed"])

    log(f"parsing case {cfg['case']} (scale {cfg['scale']})")
    case = _load_case_from_config(cfg)

    log(f"generating dataset n={cfg['n_samples']}")
    ds = generate_dataset(case, n=int(cfg["n_samples"]), seed=seed,
                          perturbation=float(cfg["perturbation"]), backend=backend)
    split = split_dataset(ds, ratio=float(cfg["split_ratio"]), seed=seed + 1)
    n_infeas, n_feas = ds.class_counts()
    dataset_info = {
        "case_id": ds.case_id, "seed": ds.seed, "n": len(ds),
        "n_feasible": n_feas, "n_infeasible": n_infeas,
        "train": len(split.train), "test": len(split.test),
    }

    log("training ffnn")
    f = cfg["ffnn"]
    ffnn = train_ffnn(split.train, epochs=int(f["epochs"]), lr=float(f["lr"]),
                      class_weights=tuple(f["class_weights"]),
                      batch_size=int(f["batch_size"]), seed=seed + 2)
    log("training tree")
    t = cfg["tree"]
    tree = train_tree(split.train, max_depth=int(t["max_depth"]),
                      class_weights=tuple(t["class_weights"]))

    metrics = {}
    for tag, model in (("ffnn", ffnn), ("dt", tree)):
        m = evaluate(model, split.test)
        metrics[tag] = m.to_dict()
        model.metrics = m.to_dict()
        log(f"{tag} test accuracy {m.accuracy:.4f}")

    # cohort: true-infeasible test samples that both classifiers flag infeasible
    y, X = split.test.labels, split.test.profiles
    p_ffnn = ffnn.proba(X)
    p_tree = tree.proba(X)
    cohort = np.nonzero((y == 0) & (p_ffnn <= 0.5) & (p_tree <= 0.5))[0]
    cohort = cohort[: int(cfg["max_instances"])]
    log(f"cohort: {cohort.size} infeasible instances")

    cf = cfg["cf"]
    repeats = int(cfg["timing_repeats"])
    results: list[ValidatedOptions] = []
    recovery = {m: {"n": 0, "failures": 0} for m in ("ffnn", "dt")}
    timings: dict[str, list[float]] = {"ffnn": [], "dt": [], "baseline": []}

    for pos, idx in enumerate(cohort):
        x = X[idx]
        # exact baseline, timed on repeated solves (warm case arrays)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            restore_baseline(case, x, backend=backend)
            times.append(1000.0 * (time.perf_counter() - t0))
        timings["baseline"].append(float(np.median(times)))

        for tag, model in (("ffnn", ffnn), ("dt", tree)):
            cf_cfg = CfConfig(
                k=int(cf["k"]), lambda1=float(cf["lambda1"]), lambda2=float(cf["lambda2"]),
                generations=int(cf["generations"]), population=int(cf["population"]),
                seed=_derived_seed(seed + 3, int(idx), 0 if tag == "ffnn" else 1),
            )
            constraints = CfConstraints.defaults(case, x)
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                generate_counterfactuals(model, x, constraints, cf_cfg)
                times.append(1000.0 * (time.perf_counter() - t0))
            timings[tag].append(float(np.median(times)))

            recovery[tag]["n"] += 1
            try:
                vo = restore_with_validation(
                    case, model, x, constraints, cf_cfg,
                    max_retries=int(cfg["max_retries"]), backend=backend,
                    method=tag, instance_id=int(idx),
                )
            except RecoveryFailedError:
                recovery[tag]["failures"] += 1
                continue
            # double-entry: anything reported recovered must re-validate
            for opt in vo.options.options:
                assert check_feasibility(case, opt.profile, backend=backend) \
                    is FeasibilityLabel.FEASIBLE, "recovered option failed re-validation"
            results.append(vo)
        if progress is not None and (pos + 1) % 25 == 0:
            log(f"  restored {pos + 1}/{cohort.size} instances")

    for m in recovery:
        n = recovery[m]["n"]
        recovery[m]["rate"] = (n - recovery[m]["failures"]) / n if n else 0.0

    stats = perturbation_stats(results)
    adjustments = {m: s.to_dict() for m, s in stats.items()}
    histograms = {
        m: histogram(s.pooled_deltas, float(cfg["histogram_bin_mw"]))
        for m, s in stats.items()
    }

    report = ExperimentReport(
        config=cfg,
        dataset_info=dataset_info,
        classifier_metrics=metrics,
        recovery=recovery,
        adjustments=adjustments,
        histograms=histograms,
        timings_ms=timings,
    )

    if out_dir is not None:
        _write_artifacts(report, ds, out_dir)
    return report


def _write_artifacts(report: ExperimentReport, ds, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report.deterministic_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    save_dataset(ds, out / "dataset")

    lines = ["method,bin,count"]
    for method, bins in sorted(report.histograms.items()):
        for b, c in bins.items():
            lines.append(f'{method},"{b}",{c}')
    (out / "histogram.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["method,instance,ms"]
    for method, vals in sorted(report.timings_ms.items()):
        for i, v in enumerate(vals):
            lines.append(f"{method},{i},{v:.3f}")
    (out / "timing.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    (out / "report.md").write_text(_render_markdown(report), encoding="utf-8")


def _render_markdown(report: ExperimentReport) -> str:
    md = ["# Experiment report", ""]
    d = report.dataset_info
    md += [
        f"Case `{d['case_id']}`, {d['n']} samples "
        f"({d['n_feasible']} feasible / {d['n_infeasible']} infeasible), "
        f"split {d['train']}/{d['test']}.",
        "",
        "## Classifier accuracy",
        "",
        "| Model | Accuracy | False-feasible rate |",
        "|---|---|---|",
    ]
    for m, met in sorted(report.classifier_metrics.items()):
        md.append(f"| {m} | {met['accuracy']:.4f} | {met['false_feasible_rate']:.4f} |")
    md += ["", "## Feasibility recovery", "", "| Method | Instances | Recovery rate |", "|---|---|---|"]
    for m, rec in sorted(report.recovery.items()):
        md.append(f"| {m} | {rec['n']} | {rec['rate']:.3f} |")
    md += ["", "## Load adjustments (MW)", "", "| Method | Mean | Std | Instances |", "|---|---|---|---|"]
    for m, adj in sorted(report.adjustments.items()):
        md.append(f"| {m} | {adj['mean_total_mw']:.2f} | {adj['std_total_mw']:.2f} | {adj['n_instances']} |")
    md += ["", "## Computation time (ms)", "", "| Method | Mean | Std | Median |", "|---|---|---|---|"]
    for m, tm in sorted(report.timing_summary().items()):
        md.append(f"| {m} | {tm['mean_ms']:.2f} | {tm['std_ms']:.2f} | {tm['median_ms']:.2f} |")
    md.append("")
    return "\n".join(md)
