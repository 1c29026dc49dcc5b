import math

import numpy as np
import pytest
from scipy import integrate

from rankregions import KNNEngine, RngStream, logistic_model
from rankregions import test_candidate as run_rank_test
from rankregions.experiments import (
    GridSpec,
    ScenarioConfig,
    coverage_mc,
    gen_gaussian_mixture,
    gen_sample,
    gen_uniform_input,
    make_engine,
    rank_map,
    shrinkage_curve,
)
from rankregions.resample import init_stem


class TestGenerators:
    def test_gaussian_mixture_label_mean(self):
        s = gen_gaussian_mixture(100_000, RngStream(1, 0))
        assert abs(s.labels.mean()) <= 0.01

    def test_gaussian_mixture_conditional_mean(self):
        s = gen_gaussian_mixture(100_000, RngStream(1, 1))
        pos = s.inputs[s.labels == 1.0, 0]
        assert abs(pos.mean() - 1.0) <= 0.02

    def test_gaussian_mixture_bayes_rule(self):
        # P(Y=+1 | X near 1) = (1 + tanh 1)/2 for the two-Gaussian mixture
        s = gen_gaussian_mixture(100_000, RngStream(1, 2))
        window = (s.inputs[:, 0] >= 0.9) & (s.inputs[:, 0] <= 1.1)
        frac = np.mean(s.labels[window] == 1.0)
        assert abs(frac - 0.8807970779778824) <= 0.03

    def test_uniform_input_mean(self):
        s = gen_uniform_input(100_000, RngStream(2, 0))
        assert abs(s.inputs.mean()) <= 0.01

    def test_uniform_input_balanced_at_origin(self):
        s = gen_uniform_input(100_000, RngStream(2, 1))
        window = np.abs(s.inputs[:, 0]) <= 0.05
        assert abs(np.mean(s.labels[window] == 1.0) - 0.5) <= 0.03

    def test_uniform_input_cross_moment(self):
        # E[YX] = integral of x tanh(x) / 2 over [-1, 1]
        oracle, _ = integrate.quad(lambda x: x * math.tanh(x) / 2, -1, 1)
        s = gen_uniform_input(100_000, RngStream(2, 2))
        assert abs(np.mean(s.labels * s.inputs[:, 0]) - oracle) <= 0.01

    def test_scenario_dispatch_and_validation(self):
        cfg = ScenarioConfig("uniform-input", 10, master_seed=5)
        s = gen_sample(cfg, RngStream(5, 0))
        assert s.n == 10
        with pytest.raises(ValueError, match="scenario"):
            ScenarioConfig("bogus", 10)
        with pytest.raises(ValueError, match="engine"):
            make_engine("bogus", 10)


class TestRankMap:
    def test_deterministic_and_in_range(self):
        cfg = ScenarioConfig("gaussian-mixture", 30, master_seed=6)
        grid = GridSpec(-1, 1, 0, 3, 5)
        engine = KNNEngine(alpha=0.7)
        m1 = rank_map(cfg, engine, m=8, grid=grid)
        m2 = rank_map(cfg, engine, m=8, grid=grid)
        assert np.array_equal(m1.values, m2.values)
        assert m1.values.min() >= 1 / 8 and m1.values.max() <= 1.0
        assert m1.estimate is None  # kNN fit is not a logistic model

    def test_worker_partition_invariance(self):
        cfg = ScenarioConfig("gaussian-mixture", 25, master_seed=7)
        grid = GridSpec(-1, 1, 0, 3, 6)
        engine = KNNEngine(k=5)
        serial = rank_map(cfg, engine, m=6, grid=grid, workers=1)
        parallel = rank_map(cfg, engine, m=6, grid=grid, workers=3)
        assert np.array_equal(serial.values, parallel.values)

    def test_perceptron_map_marks_estimate(self):
        cfg = ScenarioConfig("gaussian-mixture", 25, master_seed=8)
        grid = GridSpec(-1, 1, 1, 3, 3)
        m = rank_map(cfg, make_engine("perceptron", 25), m=5, grid=grid)
        assert m.estimate is not None and len(m.estimate) == 2

    def test_rank_at_truth_has_uniform_mean(self):
        # over 200 independent stems the relative rank of the true model
        # averages to (m+1)/(2m)
        m = 10
        vals = []
        truth = logistic_model(0, 2)
        engine = KNNEngine(alpha=0.7)
        for t in range(200):
            stream = RngStream(909, t)
            sample = gen_gaussian_mixture(100, stream)
            stem = init_stem(100, m, stream=stream, q1=1, q2=m)
            vals.append(run_rank_test(truth, sample, stem, engine).rank / m)
        assert abs(np.mean(vals) - (m + 1) / (2 * m)) <= 0.05

    def test_far_corner_rejected(self):
        # a blatantly false candidate lands at the top rank almost always
        m = 20
        top = 0
        cand = logistic_model(3.0, -1.0)
        engine = KNNEngine(alpha=0.7)
        for t in range(200):
            stream = RngStream(910, t)
            sample = gen_gaussian_mixture(500, stream)
            stem = init_stem(500, m, stream=stream, q1=1, q2=m)
            top += run_rank_test(cand, sample, stem, engine).rank == m
        assert top / 200 >= 0.95


class TestCoverage:
    def test_full_window_means_full_coverage(self):
        cfg = ScenarioConfig("gaussian-mixture", 20, master_seed=9)
        rep = coverage_mc(cfg, "knn", m=5, q=5, trials=50)
        assert rep.hits == 50 and rep.level == 1.0

    def test_partition_invariance(self):
        cfg = ScenarioConfig("gaussian-mixture", 20, master_seed=10)
        r1 = coverage_mc(cfg, "knn", m=10, q=9, trials=300, workers=1)
        r3 = coverage_mc(cfg, "knn", m=10, q=9, trials=300, workers=3)
        assert (r1.hits, r1.failures) == (r3.hits, r3.failures)

    def test_three_sigma_band_smoke(self):
        cfg = ScenarioConfig("gaussian-mixture", 20, master_seed=11)
        rep = coverage_mc(cfg, "knn", m=10, q=9, trials=800)
        band = 3 * math.sqrt(0.9 * 0.1 / 800)
        assert abs(rep.level - 0.9) <= band

    def test_ellipsoid_failures_counted(self):
        cfg = ScenarioConfig("gaussian-mixture", 20, master_seed=12)
        rep = coverage_mc(cfg, "ellipsoid", trials=300, delta=0.05)
        assert rep.failures > 0  # 1-D separation does happen at n=20
        assert rep.trials - rep.failures > 0
        assert rep.nominal == 0.95

    def test_rejects_bad_window(self):
        cfg = ScenarioConfig("gaussian-mixture", 20)
        with pytest.raises(ValueError, match="q"):
            coverage_mc(cfg, "knn", m=10, q=11, trials=10)


class TestShrinkage:
    def test_single_row(self):
        cfg = ScenarioConfig("gaussian-mixture", 40, master_seed=13)
        rows = shrinkage_curve(
            cfg, "knn", m=5, q=4, n_list=[40], grid=GridSpec(-1, 1, 1, 3, 3), repeats=3
        )
        assert len(rows) == 1
        n, frac, repeats = rows[0]
        assert n == 40 and repeats == 3 and 0.0 <= frac <= 1.0

    def test_fraction_shrinks_with_n(self):
        cfg = ScenarioConfig("gaussian-mixture", 30, master_seed=14)
        rows = shrinkage_curve(
            cfg,
            "knn",
            m=10,
            q=9,
            n_list=[30, 120, 480],
            grid=GridSpec(-2, 2, -1, 5, 5),
            repeats=8,
            workers=2,
        )
        fracs = [r[1] for r in rows]
        assert fracs[0] > fracs[-1]

    def test_requires_increasing_sizes(self):
        cfg = ScenarioConfig("gaussian-mixture", 30)
        with pytest.raises(ValueError, match="increasing"):
            shrinkage_curve(cfg, "knn", 5, 4, [100, 50], GridSpec(res=2), 2)
