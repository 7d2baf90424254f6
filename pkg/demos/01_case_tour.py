"""Tour of the case layer: parse a bundled MATPOWER file, inspect the
network, and round-trip it through the canonical JSON form."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gridcf.caseio import (builtin_case_names, builtin_case_text, case_from_json,
                           case_to_json, incident_line_capacity, parse_case)

print("bundled cases:", builtin_case_names())

case = parse_case(builtin_case_text("case30_ieee"), name="case30_ieee")
print(f"\n{case.name}: {case.n_buses} buses, {len(case.generators)} generators, "
      f"{len(case.branches)} branches, baseMVA {case.base_mva}")

total_load = sum(b.nominal_load for b in case.buses)
print(f"total nominal load {total_load:.1f} MW, "
      f"generation capacity {case.total_gen_capacity():.1f} MW")

print("\nheaviest-loaded buses and their incident line capacity:")
ranked = sorted(enumerate(case.buses), key=lambda kv: -kv[1].nominal_load)[:5]
for idx, bus in ranked:
    cap = incident_line_capacity(case, idx)
    print(f"  bus {bus.id:>3}: load {bus.nominal_load:6.1f} MW, incident capacity {cap:6.1f} MW")

# the parse-time line-limit scale multiplies every finite rating
scaled = parse_case(builtin_case_text("case30_ieee"), line_limit_scale=1.12)
print(f"\nwith scale 1.12 the first branch limit goes "
      f"{case.branches[0].flow_limit:.0f} -> {scaled.branches[0].flow_limit:.1f} MW")

# canonical JSON round-trips exactly
doc = case_to_json(case)
assert case_from_json(doc) == case
print(f"\ncanonical JSON form: {len(doc)} bytes, round-trips to an identical case")
