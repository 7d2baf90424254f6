"""Shared fixtures: hand-written mini cases, the bundled 30-bus system, and a
small trained model pair reused by the search/pipeline/gateway tests."""

from __future__ import annotations

import numpy as np
import pytest

from gridcf.caseio import builtin_case_text, parse_case
from gridcf.datagen import generate_dataset, split_dataset
from gridcf.learn import evaluate, train_ffnn, train_tree

CASE2_TEXT = """
function mpc = case2
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
1 3 0  0 0 0 1 1 0 135 1 1.05 0.95;
2 1 50 0 0 0 1 1 0 135 1 1.05 0.95;
];
mpc.gen = [
1 0 0 10 -10 1 100 1 100 0;
];
mpc.branch = [
1 2 0.01 0.1 0 60 0 0 0 0 1 -360 360;
];
mpc.gencost = [
2 0 0 2 5 0;
];
"""

# triangle with susceptances b12 = b23 = 10, b13 = 20: a 90 MW load at bus 3
# splits 18 MW over the 1-2-3 path and 72 MW over the direct line
CASE3_RING_TEXT = """
function mpc = case3ring
mpc.baseMVA = 100;
mpc.bus = [
1 3 0  0 0 0 1 1 0 135 1 1.05 0.95;
2 1 0  0 0 0 1 1 0 135 1 1.05 0.95;
3 1 90 0 0 0 1 1 0 135 1 1.05 0.95;
];
mpc.gen = [
1 0 0 10 -10 1 100 1 200 0;
];
mpc.branch = [
1 2 0 0.1  0 100 0 0 0 0 1 -360 360;
2 3 0 0.1  0 100 0 0 0 0 1 -360 360;
1 3 0 0.05 0 100 0 0 0 0 1 -360 360;
];
mpc.gencost = [
2 0 0 2 5 0;
];
"""

# two generators at bus 1 with different costs, load at bus 2
CASE2_TWOGEN_TEXT = """
function mpc = case2twogen
mpc.baseMVA = 100;
mpc.bus = [
1 3 0  0 0 0 1 1 0 135 1 1.05 0.95;
2 1 50 0 0 0 1 1 0 135 1 1.05 0.95;
];
mpc.gen = [
1 0 0 10 -10 1 100 1 100 0;
1 0 0 10 -10 1 100 1 100 0;
];
mpc.branch = [
1 2 0.01 0.1 0 200 0 0 0 0 1 -360 360;
];
mpc.gencost = [
2 0 0 2 1 0;
2 0 0 2 2 0;
];
"""


@pytest.fixture(scope="session")
def case2():
    return parse_case(CASE2_TEXT, name="case2")


@pytest.fixture(scope="session")
def case3_ring():
    return parse_case(CASE3_RING_TEXT, name="case3ring")


@pytest.fixture(scope="session")
def case2_twogen():
    return parse_case(CASE2_TWOGEN_TEXT, name="case2twogen")


@pytest.fixture(scope="session")
def case30():
    return parse_case(builtin_case_text("case30_ieee"), name="case30_ieee")


@pytest.fixture(scope="session")
def small_data(case30):
    """n=1200 dataset and 80/20 split on the 30-bus system."""
    ds = generate_dataset(case30, n=1200, seed=42)
    return ds, split_dataset(ds, 0.8, seed=1)


@pytest.fixture(scope="session")
def small_models(small_data):
    """Quickly trained tree + network, accurate enough for search tests."""
    _, split = small_data
    tree = train_tree(split.train)
    tree.metrics = evaluate(tree, split.test).to_dict()
    ffnn = train_ffnn(split.train, epochs=80, seed=3)
    ffnn.metrics = evaluate(ffnn, split.test).to_dict()
    return {"dt": tree, "ffnn": ffnn}


@pytest.fixture(scope="session")
def infeasible_instances(case30, small_data, small_models):
    """Test-split profiles that are truly infeasible and flagged by both models."""
    _, split = small_data
    y, X = split.test.labels, split.test.profiles
    tree, ffnn = small_models["dt"], small_models["ffnn"]
    idx = [
        i for i in range(len(y))
        if y[i] == 0
        and tree.proba(X[i:i + 1])[0] <= 0.5
        and ffnn.proba(X[i:i + 1])[0] <= 0.5
    ]
    return [X[i] for i in idx]
