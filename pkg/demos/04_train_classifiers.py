"""Train the two feasibility classifiers and inspect what they learned."""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gridcf.caseio import builtin_case_text, parse_case
from gridcf.datagen import generate_dataset, split_dataset
from gridcf.learn import (evaluate, load_model, predict_proba, logit,
                          save_model, train_ffnn, train_tree)

case = parse_case(builtin_case_text("case30_ieee"), name="case30_ieee")
ds = generate_dataset(case, n=4000, seed=42)
split = split_dataset(ds, 0.8, seed=1)

tree = train_tree(split.train)              # depth-4 CART, weighted Gini
ffnn = train_ffnn(split.train, epochs=150, seed=3)   # 4x20 ReLU, Adam

for name, model in (("decision tree", tree), ("ffnn", ffnn)):
    m = evaluate(model, split.test)
    print(f"{name}: accuracy {m.accuracy:.4f}, "
          f"false-feasible rate {m.false_feasible_rate:.4f}")
    print(f"  confusion (rows true infeasible/feasible): {m.confusion.tolist()}")

# the tree's root split names the critical bus directly
ids = [b.id for b in case.buses]
root = tree.root
thr_mw = tree.scaler.inverse(np.full(case.n_buses, root.threshold))[root.feature]
print(f"\ntree root split: bus {ids[root.feature]} load <= {thr_mw:.1f} MW")

x = split.test.profiles[0]
print(f"\nsample inference: proba {predict_proba(ffnn, x):.3f}, logit {logit(ffnn, x):+.2f}")

out = Path("/tmp/gridcf_demo_models")
out.mkdir(exist_ok=True)
for model in (tree, ffnn):
    model.metrics = evaluate(model, split.test).to_dict()
    save_model(model, out / f"model.{model.kind}.json")
back = load_model(out / "model.tree.json")
print(f"saved to {out}; reloaded tree agrees: "
      f"{abs(predict_proba(back, x) - predict_proba(tree, x)) < 1e-12}")
