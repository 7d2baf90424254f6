"""Feasibility checks, minimum-cost dispatch, and the exact restoration
baseline, on a two-bus toy and the 30-bus system."""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gridcf.caseio import builtin_case_text, parse_case
from gridcf.dcopf import (check_feasibility, restore_baseline, solve_dispatch,
                          FeasibilityLabel)

TOY = """
function mpc = toy
mpc.baseMVA = 100;
mpc.bus = [
1 3 0  0 0 0 1 1 0 135 1 1.05 0.95;
2 1 50 0 0 0 1 1 0 135 1 1.05 0.95;
];
mpc.gen = [ 1 0 0 10 -10 1 100 1 100 0; ];
mpc.branch = [ 1 2 0.01 0.1 0 60 0 0 0 0 1 -360 360; ];
mpc.gencost = [ 2 0 0 2 5 0; ];
"""

toy = parse_case(TOY, name="toy")
print("two-bus toy, 60 MW line:")
for load in (50, 70):
    label = check_feasibility(toy, [0, load])
    print(f"  load {load} MW -> {label.name}")

dispatch = solve_dispatch(toy, [0, 50])
print(f"  dispatch at 50 MW: generation {dispatch.generation[0]:.1f} MW, "
      f"flow {dispatch.flows[0]:.1f} MW, cost ${dispatch.cost:.0f}")

restored = restore_baseline(toy, [0, 70])
print(f"  restoration of the 70 MW profile: serve {restored.served_demand[1]:.1f} MW, "
      f"shed {restored.delta[1]:.1f} MW (the L1 optimum)")

# the 30-bus system: nominal load is feasible; a stressed profile is not
case = parse_case(builtin_case_text("case30_ieee"), name="case30_ieee")
nom = np.array(case.nominal_profile())
print(f"\n30-bus nominal load: {check_feasibility(case, nom).name}")

stressed = nom.copy()
stressed[7] *= 1.6  # bus 8, the import-limited corridor
print(f"bus 8 load x1.6 ({stressed[7]:.1f} MW): {check_feasibility(case, stressed).name}")

restored = restore_baseline(case, stressed)
ids = [b.id for b in case.buses]
sheds = {ids[i]: round(float(v), 2) for i, v in enumerate(restored.delta) if abs(v) > 1e-4}
print(f"minimal restoration sheds {restored.total_adjustment:.2f} MW: {sheds}")
print(f"the restored profile is {check_feasibility(case, restored.served_demand).name}")
