"""Construct the synthetic 300-bus test system shipped as case300_synth.m.

The build is deterministic (seed 300): a zonal mesh topology, lognormal
loads on ~two thirds of the buses, generation at ~a fifth of the buses
with 160% capacity margin, and per-line MVA ratings derived from the
nominal min-cost flow pattern with mixed margins (a tight subset forms
the congestible corridors; the rest stay slack).  Running this script
reproduces src/gridcf/cases/case300_synth.m byte for byte.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gridcf.caseio import parse_case
from gridcf.dcopf import check_feasibility, solve_dispatch, FeasibilityLabel

SEED = 300
N_BUSES = 300
N_ZONES = 10
ZONE_SIZE = N_BUSES // N_ZONES
EXTRA_INTRA_CHORDS = 2      # per zone, beyond the zone ring
INTER_ZONE_TIES = 14        # beyond the backbone ring
LOAD_FRACTION = 0.65
GEN_FRACTION = 0.18
CAPACITY_MARGIN = 1.6
WEAK_ZONES = (3, 7)         # no local generation; import ties rated tight
DOMINANT_LOAD_SHARE = 0.45  # of the weak zone's total, concentrated on one bus
ENVELOPE_SAMPLES = 120      # perturbed dispatches behind the flow envelope
WEAK_TIE_QUANTILE = 0.40    # weak ties rated at this quantile of their flows
SLACK_ENVELOPE_MARGIN = 1.1
RATING_FLOOR_MW = 8.0


def build_topology(rng: np.random.Generator) -> list[tuple[int, int]]:
    """Zone rings + chords + inter-zone backbone; bus indices 0-based."""
    edges: set[tuple[int, int]] = set()

    def add(u: int, v: int) -> None:
        if u != v:
            edges.add((min(u, v), max(u, v)))

    for z in range(N_ZONES):
        start = z * ZONE_SIZE
        members = list(range(start, start + ZONE_SIZE))
        for i, u in enumerate(members):
            add(u, members[(i + 1) % ZONE_SIZE])
        for _ in range(EXTRA_INTRA_CHORDS * 2):
            u, v = rng.choice(members, size=2, replace=False)
            add(int(u), int(v))

    # backbone ring between zone gateways plus random ties
    gateways = [z * ZONE_SIZE for z in range(N_ZONES)]
    for i, g in enumerate(gateways):
        add(g, gateways[(i + 1) % N_ZONES])
    for _ in range(INTER_ZONE_TIES):
        za, zb = rng.choice(N_ZONES, size=2, replace=False)
        u = int(rng.integers(za * ZONE_SIZE, (za + 1) * ZONE_SIZE))
        v = int(rng.integers(zb * ZONE_SIZE, (zb + 1) * ZONE_SIZE))
        add(u, v)
    return sorted(edges)


def zone_of(bus: int) -> int:
    return bus // ZONE_SIZE


def main() -> None:
    rng = np.random.default_rng(SEED)
    edges = build_topology(rng)

    loads = np.zeros(N_BUSES)
    is_load = rng.random(N_BUSES) < LOAD_FRACTION
    loads[is_load] = np.round(rng.lognormal(mean=2.7, sigma=0.6, size=is_load.sum()), 1)
    loads = np.clip(loads, 0, 120)

    # each weak zone gets one dominant load carrying ~half the zone total
    for z in WEAK_ZONES:
        members = np.arange(z * ZONE_SIZE, (z + 1) * ZONE_SIZE)
        zone_total = loads[members].sum()
        dom = members[int(np.argmax(loads[members]))]
        loads[dom] = np.round(DOMINANT_LOAD_SHARE / (1 - DOMINANT_LOAD_SHARE)
                              * (zone_total - loads[dom]), 1)

    n_gens = int(N_BUSES * GEN_FRACTION)
    candidates = np.array([b for b in range(N_BUSES) if zone_of(b) not in WEAK_ZONES])
    gen_buses = rng.choice(candidates, size=n_gens, replace=False)
    total_load = loads.sum()
    weights = rng.lognormal(mean=0.0, sigma=0.8, size=n_gens)
    pmax = np.round(weights / weights.sum() * total_load * CAPACITY_MARGIN, 1)
    pmax = np.maximum(pmax, 10.0)
    costs = np.round(rng.uniform(1.5, 4.0, size=n_gens), 2)
    slack_bus = int(gen_buses[int(np.argmax(pmax))])

    reactances = np.round(rng.uniform(0.02, 0.30, size=len(edges)), 4)

    # flow envelope over perturbed profiles on the unrated network: slack
    # lines are rated above their envelope so only the weak zones' import
    # ties can bind inside the sampling distribution
    unlimited = _case_text(loads, gen_buses, pmax, costs, slack_bus, edges,
                           reactances, np.zeros(len(edges)))
    case = parse_case(unlimited, name="unrated")
    nominal_flow = np.abs(solve_dispatch(case, loads, backend="highs").flows)
    samples = [nominal_flow]
    for _ in range(ENVELOPE_SAMPLES):
        d = np.where(loads > 0, rng.uniform(loads * 0.35, loads * 1.65), 0.0)
        if d.sum() >= pmax.sum():
            continue
        samples.append(np.abs(solve_dispatch(case, d, backend="highs").flows))
    flow_samples = np.array(samples)
    envelope = flow_samples.max(axis=0)

    tight = np.array([
        (zone_of(u) in WEAK_ZONES) != (zone_of(v) in WEAK_ZONES)
        for u, v in edges
    ])
    slack_ratings = np.maximum(envelope * SLACK_ENVELOPE_MARGIN, 1.02 * nominal_flow)
    ratings = np.where(
        tight,
        np.quantile(flow_samples, WEAK_TIE_QUANTILE, axis=0),
        slack_ratings,
    )
    ratings = np.round(np.maximum(ratings, RATING_FLOOR_MW), 1)

    text = _case_text(loads, gen_buses, pmax, costs, slack_bus, edges,
                      reactances, ratings)
    out = Path(__file__).resolve().parent.parent / "src" / "gridcf" / "cases" / "case300_synth.m"
    out.write_text(text, encoding="utf-8")

    check = parse_case(text, line_limit_scale=1.12, name="case300_synth@1.12")
    label = check_feasibility(check, loads, backend="highs")
    print(f"wrote {out} ({len(edges)} branches, {n_gens} generators, "
          f"total load {total_load:.0f} MW); nominal at 1.12 scale: {label.name}")
    assert label is FeasibilityLabel.FEASIBLE


def _case_text(loads, gen_buses, pmax, costs, slack_bus, edges, reactances, ratings) -> str:
    lines = [
        "function mpc = case300_synth",
        "% Synthetic 300-bus meshed test system (deterministic construction).",
        "% Zonal topology, lognormal loads, mixed-margin line ratings derived",
        "% from the nominal min-cost flow pattern.  See demos/make_case300.py.",
        "",
        "mpc.version = '2';",
        "mpc.baseMVA = 100;",
        "",
        "%% bus data",
        "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin",
        "mpc.bus = [",
    ]
    for i in range(N_BUSES):
        bus_type = 3 if i == slack_bus else 1
        lines.append(f"\t{i + 1}\t{bus_type}\t{loads[i]:g}\t0\t0\t0\t1\t1\t0\t230\t1\t1.05\t0.95;")
    lines += ["];", "", "%% generator data",
              "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin",
              "mpc.gen = ["]
    for b, p in zip(gen_buses, pmax):
        lines.append(f"\t{b + 1}\t0\t0\t100\t-100\t1\t100\t1\t{p:g}\t0;")
    lines += ["];", "", "%% branch data",
              "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax",
              "mpc.branch = ["]
    for (u, v), x, r in zip(edges, reactances, ratings):
        lines.append(f"\t{u + 1}\t{v + 1}\t0\t{x:g}\t0\t{r:g}\t{r:g}\t{r:g}\t0\t0\t1\t-360\t360;")
    lines += ["];", "", "%% generator cost data",
              "%\t2\tstartup\tshutdown\tn\tc(n-1)\t...\tc0",
              "mpc.gencost = ["]
    for c in costs:
        lines.append(f"\t2\t0\t0\t3\t0\t{c:g}\t0;")
    lines += ["];", ""]
    return "\n".join(lines)


if __name__ == "__main__":
    main()
