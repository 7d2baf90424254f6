"""The what-if loop: take an infeasible profile, generate k diverse minimal
counterfactual adjustments, validate them against the true DC-OPF, and
compare with the exact load-shed baseline."""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gridcf.caseio import builtin_case_text, parse_case
from gridcf.cfx import CfConfig, CfConstraints
from gridcf.datagen import generate_dataset, split_dataset
from gridcf.learn import train_ffnn, train_tree
from gridcf.pipeline import restore_with_validation

case = parse_case(builtin_case_text("case30_ieee"), name="case30_ieee")
ds = generate_dataset(case, n=3000, seed=42)
split = split_dataset(ds, 0.8, seed=1)
tree = train_tree(split.train)
ffnn = train_ffnn(split.train, epochs=150, seed=3)

# an infeasible test sample both models flag
y, X = split.test.labels, split.test.profiles
idx = next(i for i in range(len(y))
           if y[i] == 0 and tree.proba(X[i:i+1])[0] <= 0.5 and ffnn.proba(X[i:i+1])[0] <= 0.5)
x = X[idx]
ids = [b.id for b in case.buses]
print(f"infeasible profile (bus 8 load {x[7]:.1f} MW, total {x.sum():.0f} MW)")


def show(tag, model, seed):
    vo = restore_with_validation(case, model, x, CfConstraints.defaults(case, x),
                                 CfConfig(k=3, seed=seed), method=tag)
    print(f"\n{tag}: {len(vo.options.options)} validated options "
          f"(retries {vo.retries_used})")
    for n, o in enumerate(vo.options.options, 1):
        sheds = {ids[j]: round(float(o.delta[j]), 3)
                 for j in np.nonzero(np.abs(o.delta) > 1e-9)[0]}
        print(f"  option {n}: total {np.abs(o.delta).sum():6.2f} MW over "
              f"{o.n_changed} bus(es)  {sheds}")
    print(f"  exact baseline: total {vo.baseline.total_adjustment:6.2f} MW "
          f"(always <= every option)")
    return vo


show("cf-dt", tree, seed=7)
show("cf-ffnn", ffnn, seed=7)

# freezing a bus steers the options elsewhere
cons = CfConstraints.defaults(case, x, freeze=[8])
try:
    vo = restore_with_validation(case, ffnn, x, cons, CfConfig(k=3, seed=11), method="cf-ffnn")
    print(f"\nwith bus 8 frozen: {len(vo.options.options)} options, none touch bus 8:")
    for o in vo.options.options:
        sheds = {ids[j]: round(float(o.delta[j]), 2)
                 for j in np.nonzero(np.abs(o.delta) > 1e-9)[0]}
        print(f"  total {np.abs(o.delta).sum():6.2f} MW  {sheds}")
except Exception as exc:
    print(f"\nwith bus 8 frozen: recovery failed ({exc}) — the corridor is essential here")
