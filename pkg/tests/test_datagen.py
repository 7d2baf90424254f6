"""Sampling, admissibility filters, balanced generation, splits, persistence."""

from __future__ import annotations

import numpy as np
import pytest

from gridcf.caseio import parse_case
from gridcf.datagen import (Dataset, QuotaTimeoutError, SplitTooSmallError,
                            admissible, dataset_to_csv, generate_dataset,
                            load_dataset, sample_profile, save_dataset,
                            split_dataset)
from gridcf.dcopf import FeasibilityLabel, check_feasibility


class TestSampleProfile:
    def test_bounds(self, case30):
        rng = np.random.default_rng(0)
        nom = np.array(case30.nominal_profile())
        for _ in range(50):
            d = sample_profile(case30, rng)
            assert np.all(d >= nom * 0.35 - 1e-12)
            assert np.all(d <= nom * 1.65 + 1e-12)

    def test_zero_load_stays_zero(self, case30):
        rng = np.random.default_rng(0)
        nom = np.array(case30.nominal_profile())
        d = sample_profile(case30, rng)
        assert np.all(d[nom == 0] == 0)

    def test_uniform_statistics(self, case30):
        """10^4 draws at one bus: range ends within 1%, mean within 2%."""
        rng = np.random.default_rng(1)
        nom = np.array(case30.nominal_profile())
        bus = int(np.argmax(nom))  # the 94.2 MW bus
        draws = np.array([sample_profile(case30, rng)[bus] for _ in range(10_000)])
        lo, hi = nom[bus] * 0.35, nom[bus] * 1.65
        width = hi - lo
        assert draws.min() <= lo + 0.01 * width
        assert draws.max() >= hi - 0.01 * width
        assert abs(draws.mean() - nom[bus]) <= 0.02 * nom[bus]

    def test_perturbation_validation(self, case30):
        rng = np.random.default_rng(2)
        with pytest.raises(ValueError):
            sample_profile(case30, rng, perturbation=1.0)


ADMISSIBLE_CASE = """
function mpc = adm
mpc.baseMVA = 100;
mpc.bus = [
1 3 0  0 0 0 1 1 0 135 1 1.05 0.95;
2 1 50 0 0 0 1 1 0 135 1 1.05 0.95;
3 1 30 0 0 0 1 1 0 135 1 1.05 0.95;
];
mpc.gen = [
1 0 0 10 -10 1 100 1 100 0;
];
mpc.branch = [
1 2 0.01 0.1 0 60 0 0 0 0 1 -360 360;
2 3 0.01 0.1 0 40 0 0 0 0 1 -360 360;
1 3 0.01 0.1 0 30 0 0 0 0 1 -360 360;
];
mpc.gencost = [
2 0 0 2 5 0;
];
"""


class TestAdmissible:
    def setup_method(self):
        self.case = parse_case(ADMISSIBLE_CASE)

    def test_within_both_filters(self):
        assert admissible(self.case, [0, 50, 30]) is True

    def test_total_exceeds_capacity(self):
        assert admissible(self.case, [0, 60, 50]) is False  # 110 vs 100

    def test_bus_exceeds_incident_capacity(self):
        # bus 3 has incident capacity 40 + 30 = 70
        assert admissible(self.case, [0, 10, 80]) is False

    def test_strict_inequality(self):
        assert admissible(self.case, [0, 10, 70]) is False
        assert admissible(self.case, [0, 10, 69.9]) is True


class TestGenerate:
    def test_exact_balance_small(self, case30):
        ds = generate_dataset(case30, n=10, seed=11)
        assert ds.class_counts() == (5, 5)

    def test_minimum_size(self, case30):
        ds = generate_dataset(case30, n=2, seed=11)
        assert ds.class_counts() == (1, 1)

    def test_byte_identical_given_seed(self, case30):
        a = generate_dataset(case30, n=30, seed=5)
        b = generate_dataset(case30, n=30, seed=5)
        assert np.array_equal(a.profiles, b.profiles)
        assert np.array_equal(a.labels, b.labels)
        assert dataset_to_csv(a) == dataset_to_csv(b)

    def test_all_samples_admissible_and_relabel_identically(self, small_data, case30):
        ds, _ = small_data
        idx = np.random.default_rng(0).choice(len(ds), 40, replace=False)
        for i in idx:
            assert admissible(case30, ds.profiles[i])
            want = FeasibilityLabel.FEASIBLE if ds.labels[i] == 1 else FeasibilityLabel.INFEASIBLE
            assert check_feasibility(case30, ds.profiles[i]) is want

    def test_quota_timeout(self, case2_twogen):
        # 200 MW line for a <=82.5 MW load: no draw is ever infeasible
        with pytest.raises(QuotaTimeoutError):
            generate_dataset(case2_twogen, n=10, seed=1, draw_budget=200)

    def test_validation(self, case30):
        with pytest.raises(ValueError):
            generate_dataset(case30, n=11, seed=0)


class TestSplit:
    def test_sizes_and_balance(self, small_data):
        ds, split = small_data
        assert len(split.train) == 960 and len(split.test) == 240
        for part in (split.train, split.test):
            n_i, n_f = part.class_counts()
            assert abs(n_i - n_f) <= 1

    def test_disjoint_union(self, small_data):
        ds, split = small_data
        rows = {tuple(r) for r in ds.profiles}
        train_rows = {tuple(r) for r in split.train.profiles}
        test_rows = {tuple(r) for r in split.test.profiles}
        assert train_rows | test_rows == rows
        assert not (train_rows & test_rows)

    def test_balanced_tiny_split(self, case30):
        ds = generate_dataset(case30, n=10, seed=11)
        split = split_dataset(ds, 0.5, seed=0)
        assert len(split.train) == 5 and len(split.test) == 5
        for part in (split.train, split.test):
            n_i, n_f = part.class_counts()
            assert abs(n_i - n_f) <= 1

    def test_seed_reproducibility(self, small_data):
        ds, _ = small_data
        a = split_dataset(ds, 0.8, seed=3)
        b = split_dataset(ds, 0.8, seed=3)
        c = split_dataset(ds, 0.8, seed=4)
        assert np.array_equal(a.train.profiles, b.train.profiles)
        assert not np.array_equal(a.train.profiles, c.train.profiles)
        assert len(a.train) == len(c.train)

    def test_too_small(self, case30):
        ds = generate_dataset(case30, n=4, seed=11)
        with pytest.raises(SplitTooSmallError):
            split_dataset(ds, 0.95, seed=0)


class TestPersistence:
    def test_round_trip(self, tmp_path, case30):
        ds = generate_dataset(case30, n=20, seed=13)
        save_dataset(ds, tmp_path)
        back = load_dataset(tmp_path)
        assert np.array_equal(ds.labels, back.labels)
        assert np.allclose(ds.profiles, back.profiles, atol=5e-7)  # 6-decimal CSV
        assert back.case_id == ds.case_id and back.seed == ds.seed

    def test_csv_shape(self, case30):
        ds = generate_dataset(case30, n=4, seed=13)
        lines = dataset_to_csv(ds).strip().splitlines()
        assert lines[0].startswith("d_0,") and lines[0].endswith(",label")
        assert len(lines) == 5
        assert all(len(line.split(",")) == case30.n_buses + 1 for line in lines)
