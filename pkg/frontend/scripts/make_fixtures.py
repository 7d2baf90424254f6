"""Build the e2e fixtures: trained models plus an infeasible profile whose
freeze-bus-8 restoration yields three validated options.

Idempotent: skips work when fixtures/ is already populated."""

import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
sys.path.insert(0, str(ROOT.parent / "src"))

from gridcf.caseio import builtin_case_text, parse_case
from gridcf.cfx import CfConfig, CfConstraints
from gridcf.datagen import generate_dataset, split_dataset
from gridcf.learn import evaluate, save_model, train_ffnn, train_tree
from gridcf.pipeline import RecoveryFailedError, restore_with_validation


def main() -> None:
    profile_path = FIXTURES / "scenario.json"
    if profile_path.exists():
        print(f"fixtures already present in {FIXTURES}")
        return
    FIXTURES.mkdir(exist_ok=True)

    case = parse_case(builtin_case_text("case30_ieee"), name="case30_ieee")
    ds = generate_dataset(case, n=1200, seed=42)
    split = split_dataset(ds, 0.8, seed=1)
    tree = train_tree(split.train)
    tree.metrics = evaluate(tree, split.test).to_dict()
    ffnn = train_ffnn(split.train, epochs=80, seed=3)
    ffnn.metrics = evaluate(ffnn, split.test).to_dict()
    save_model(tree, FIXTURES / "model.tree.json")
    save_model(ffnn, FIXTURES / "model.ffnn.json")

    # find an instance where freezing bus 8 still yields 3 validated options
    y, X = split.test.labels, split.test.profiles
    for i in range(len(y)):
        if y[i] != 0:
            continue
        x = X[i]
        for model_id, model in (("ffnn", ffnn), ("dt", tree)):
            if model.proba(x.reshape(1, -1))[0] > 0.5:
                continue
            cons = CfConstraints.defaults(case, x, freeze=[8])
            for seed in (11, 29, 47):
                try:
                    vo = restore_with_validation(case, model, x, cons,
                                                 CfConfig(k=3, seed=seed),
                                                 max_retries=1)
                except RecoveryFailedError:
                    continue
                if len(vo.options.options) == 3:
                    scenario = {
                        "model": model_id,
                        "seed": seed,
                        "freeze": [8],
                        "k": 3,
                        "demand": [float(v) for v in x],
                    }
                    profile_path.write_text(json.dumps(scenario, indent=2))
                    print(f"fixtures written to {FIXTURES} "
                          f"(instance {i}, model {model_id}, seed {seed})")
                    return
    raise SystemExit("no freeze-bus-8 scenario with 3 validated options found")


if __name__ == "__main__":
    main()
