"""Command-line entry point: parse, dataset, train, classify, restore,
baseline, experiment, serve.

Seeding: subcommands take --seed where it matters; when omitted, the
GRIDCF_SEED environment variable applies, then 0.  All outputs are
reproducible from their inputs and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import caseio, datagen, dcopf, learn, pipeline
from .cfx import CfConfig, CfConstraints

PROFILE_HINT = "profile CSV: one data row of per-bus MW values (header row optional)"


def _env_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("GRIDCF_SEED")
    return int(env) if env else 0


def _load_case(spec: str, scale: float = 1.0) -> caseio.NetworkCase:
    path = Path(spec)
    if path.exists():
        if path.suffix == ".json":
            return caseio.case_from_json(path.read_text(encoding="utf-8"))
        return caseio.parse_case_file(path, line_limit_scale=scale)
    return caseio.parse_case(caseio.builtin_case_text(spec), line_limit_scale=scale, name=spec)


def _load_profile(path: str, n_buses: int) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.reader(fh):
            rec = [tok for tok in rec if tok.strip()]
            if not rec:
                continue
            try:
                rows.append([float(tok) for tok in rec])
            except ValueError:
                continue  # header row
    if not rows:
        raise SystemExit(f"no numeric rows in {path} ({PROFILE_HINT})")
    values = rows[0]
    if len(values) != n_buses:
        raise SystemExit(f"profile has {len(values)} values, case has {n_buses} buses")
    return np.array(values)


def _cmd_parse(args) -> int:
    case = _load_case(args.case, args.scale)
    doc = caseio.case_to_json(case)
    if args.out:
        Path(args.out).write_text(doc + "\n", encoding="utf-8")
    else:
        print(doc)
    print(
        f"parsed {case.name}: {case.n_buses} buses, {len(case.generators)} generators, "
        f"{len(case.branches)} branches",
        file=sys.stderr,
    )
    return 0


def _cmd_dataset(args) -> int:
    case = _load_case(args.case, args.scale)
    ds = datagen.generate_dataset(
        case, n=args.n, seed=_env_seed(args.seed),
        perturbation=args.perturb, backend=args.backend,
    )
    datagen.save_dataset(ds, args.out)
    n_infeas, n_feas = ds.class_counts()
    print(f"wrote {len(ds)} samples ({n_feas} feasible / {n_infeas} infeasible) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    ds = datagen.load_dataset(args.data_dir)
    split = datagen.split_dataset(ds, ratio=args.split, seed=_env_seed(args.seed) + 1)
    if args.model == "ffnn":
        model = learn.train_ffnn(split.train, epochs=args.epochs, lr=args.lr,
                                 seed=_env_seed(args.seed))
    else:
        model = learn.train_tree(split.train)
    metrics = learn.evaluate(model, split.test)
    model.metrics = metrics.to_dict()
    learn.save_model(model, args.out)
    print(f"{args.model} test accuracy {metrics.accuracy:.4f} "
          f"(false-feasible rate {metrics.false_feasible_rate:.4f}); saved to {args.out}")
    return 0


def _cmd_classify(args) -> int:
    model = learn.load_model(args.model)
    profile = _load_profile(args.profile, model.n_features)
    proba = learn.predict_proba(model, profile)
    out = {
        "label": "feasible" if proba > 0.5 else "infeasible",
        "proba": proba,
        "logit": learn.logit(model, profile),
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_restore(args) -> int:
    case = _load_case(args.case, args.scale)
    model = learn.load_model(args.model)
    x = _load_profile(args.profile, case.n_buses)
    freeze = [int(tok) for tok in args.freeze.split(",") if tok.strip()] if args.freeze else []
    constraints = CfConstraints.defaults(case, x, freeze=freeze,
                                         allow_negative=args.allow_negative)
    config = CfConfig(k=args.k, lambda1=args.lambda1, lambda2=args.lambda2,
                      seed=_env_seed(args.seed))
    try:
        vo = pipeline.restore_with_validation(case, model, x, constraints, config,
                                              max_retries=args.max_retries)
    except pipeline.RecoveryFailedError as exc:
        print(f"recovery failed: {exc}", file=sys.stderr)
        return 2
    doc = vo.options.to_dict(bus_ids=[b.id for b in case.buses])
    doc["retries_used"] = vo.retries_used
    doc["baseline_total_mw"] = vo.baseline.total_adjustment
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    print(f"{len(vo.options.options)} validated option(s); "
          f"baseline optimum {vo.baseline.total_adjustment:.3f} MW", file=sys.stderr)
    return 0


def _cmd_baseline(args) -> int:
    case = _load_case(args.case, args.scale)
    x = _load_profile(args.profile, case.n_buses)
    result = dcopf.restore_baseline(case, x)
    ids = [b.id for b in case.buses]
    doc = {
        "served": result.served_demand.tolist(),
        "delta": {str(ids[i]): float(v) for i, v in enumerate(result.delta) if abs(v) > 1e-9},
        "total_mw": result.total_adjustment,
        "dispatch_cost": result.dispatch.cost,
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_experiment(args) -> int:
    report = pipeline.run_experiment(args.config, out_dir=args.out,
                                     progress=lambda m: print(m, file=sys.stderr))
    print(f"report written to {args.out}")
    for method, rec in sorted(report.recovery.items()):
        print(f"  {method}: recovery {rec['rate']:.3f} over {rec['n']} instances")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .gateway import build_app

    case = _load_case(args.case, args.scale)
    app = build_app(case, models_dir=args.models, static_dir=args.static,
                    log_path=args.log)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridcf",
                                description="DC-OPF infeasibility detection and "
                                            "counterfactual restoration")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="parse a MATPOWER case to canonical JSON")
    sp.add_argument("case")
    sp.add_argument("--scale", type=float, default=1.0, help="line limit scale factor")
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_parse)

    sp = sub.add_parser("dataset", help="generate a balanced labeled dataset")
    sp.add_argument("case")
    sp.add_argument("--n", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--perturb", type=float, default=0.65)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--backend", choices=["simplex", "highs"], default="simplex")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_dataset)

    sp = sub.add_parser("train", help="train a classifier on a dataset directory")
    sp.add_argument("data_dir")
    sp.add_argument("--model", choices=["ffnn", "tree"], required=True)
    sp.add_argument("--epochs", type=int, default=300)
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--split", type=float, default=0.8)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_train)

    sp = sub.add_parser("classify", help="classify a load profile")
    sp.add_argument("model")
    sp.add_argument("profile", help=PROFILE_HINT)
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("restore", help="generate validated counterfactual options")
    sp.add_argument("case")
    sp.add_argument("model")
    sp.add_argument("profile", help=PROFILE_HINT)
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--lambda1", type=float, default=0.5)
    sp.add_argument("--lambda2", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--allow-negative", action="store_true",
                    help="allow negative net demand (backup generation)")
    sp.add_argument("--freeze", default="",
                    help="comma-separated external bus ids to keep unchanged")
    sp.add_argument("--max-retries", type=int, default=3)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_restore)

    sp = sub.add_parser("baseline", help="exact minimal-adjustment restoration")
    sp.add_argument("case")
    sp.add_argument("profile", help=PROFILE_HINT)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_baseline)

    sp = sub.add_parser("experiment", help="run the full experiment protocol")
    sp.add_argument("config", help="JSON config file")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_experiment)

    sp = sub.add_parser("serve", help="start the HTTP gateway")
    sp.add_argument("--case", required=True)
    sp.add_argument("--models", required=True, help="directory with model.*.json files")
    sp.add_argument("--port", type=int, default=8080)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--static", default=None, help="directory with the console bundle")
    sp.add_argument("--log", default=None, help="JSONL request log path")
    sp.set_defaults(func=_cmd_serve)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (caseio.CaseSyntaxError, caseio.CaseSemanticError) as exc:
        print(f"case error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
