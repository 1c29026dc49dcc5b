"""Synthetic-data experiment harness.

Two scenarios share the regression function tanh(x) (the logistic model with
parameters a = 0, b = 2): a balanced two-Gaussian mixture where X | Y is
normal with mean Y and unit variance, and a uniform-input scenario with X on
[-1, 1]. On top of those: parameter-grid rank maps, Monte Carlo coverage
studies for the three resampling engines and the ellipsoid baseline, and
shrinkage curves that track how fast false candidates get excluded as the
sample grows.

Every trial or grid repeat derives its own random stream from the master seed
and the trial index, so results are independent of how work is partitioned
across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .core import LabeledSample, RngStream, logistic_model
from .ellipsoid import SeparationError, build_ellipsoid, ellipsoid_contains
from .estimators import FitError, KNNEngine, LogisticMLEEngine, PerceptronEngine
from .resample import init_stem, test_candidate

__all__ = [
    "CoverageReport",
    "GridSpec",
    "RankMap",
    "ScenarioConfig",
    "coverage_mc",
    "gen_gaussian_mixture",
    "gen_sample",
    "gen_uniform_input",
    "make_engine",
    "rank_frequencies",
    "rank_map",
    "shrinkage_curve",
]

SCENARIOS = ("gaussian-mixture", "uniform-input")
ENGINE_KINDS = ("knn", "perceptron", "mle")
TRUE_PARAMS = (0.0, 2.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Which synthetic data to draw, how much of it, and from which seed."""

    scenario: str
    n: int
    true_params: tuple = TRUE_PARAMS
    master_seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


def gen_gaussian_mixture(n: int, stream: RngStream) -> LabeledSample:
    """Fair +-1 labels; X | Y ~ Normal(Y, 1).

    Under this law E[Y | X = x] = tanh(x), so the true parameters within the
    logistic class are (a, b) = (0, 2).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    y = 2.0 * stream.gen.integers(0, 2, n) - 1.0
    x = y + stream.gen.standard_normal(n)
    return LabeledSample(inputs=x, labels=y)


def gen_uniform_input(n: int, stream: RngStream) -> LabeledSample:
    """X uniform on [-1, 1]; labels drawn as sign(tanh(x) + U), U ~ (-1, 1).

    Same regression function tanh(x) as the Gaussian mixture, different input
    marginal.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    x = stream.gen.uniform(-1.0, 1.0, n)
    u = stream.uniform_open(-1.0, 1.0, n)
    y = np.where(np.tanh(x) + u >= 0.0, 1.0, -1.0)
    return LabeledSample(inputs=x, labels=y)


def gen_sample(config: ScenarioConfig, stream: RngStream) -> LabeledSample:
    if config.scenario == "gaussian-mixture":
        return gen_gaussian_mixture(config.n, stream)
    return gen_uniform_input(config.n, stream)


def make_engine(kind: str, n: int, *, alpha: float = 0.7, k: int = None):
    """Construct a ranking engine by name with scenario-appropriate defaults."""
    if kind == "knn":
        return KNNEngine(k=k, alpha=alpha)
    if kind == "perceptron":
        return PerceptronEngine()
    if kind == "mle":
        return LogisticMLEEngine()
    raise ValueError(f"engine must be one of {ENGINE_KINDS}, got {kind!r}")


@dataclass(frozen=True)
class GridSpec:
    """Rectangular lattice over the logistic parameters (a, b)."""

    a_min: float = -2.0
    a_max: float = 2.0
    b_min: float = -1.0
    b_max: float = 5.0
    res: int = 81

    def __post_init__(self):
        if self.res < 1:
            raise ValueError(f"grid resolution must be >= 1, got {self.res}")
        if self.a_max < self.a_min or self.b_max < self.b_min:
            raise ValueError("grid bounds must satisfy a_min <= a_max and b_min <= b_max")

    @property
    def a_values(self) -> np.ndarray:
        return np.linspace(self.a_min, self.a_max, self.res)

    @property
    def b_values(self) -> np.ndarray:
        return np.linspace(self.b_min, self.b_max, self.res)


@dataclass(frozen=True, eq=False)
class RankMap:
    """Relative ranks psi/m over a parameter grid, all values in [1/m, 1]."""

    a_values: np.ndarray
    b_values: np.ndarray
    values: np.ndarray  # shape (len(a_values), len(b_values))
    engine_kind: str
    m: int
    n: int
    seed: int
    scenario: str
    estimate: tuple | None = None  # (a, b) of the engine's point fit, if in-family


@dataclass(frozen=True)
class CoverageReport:
    """Empirical inclusion frequency of the true parameters."""

    method: str
    scenario: str
    n: int
    m: int | None
    q: int | None
    trials: int
    hits: int
    failures: int
    nominal: float

    @property
    def level(self) -> float:
        good = self.trials - self.failures
        return self.hits / good if good else float("nan")


# ---------------------------------------------------------------------------
# rank maps
# ---------------------------------------------------------------------------

def _rank_map_rows(args):
    (config, engine, m, a_chunk, b_values, stream_ids) = args
    sample = gen_sample(config, RngStream(config.master_seed, stream_ids[0]))
    stem = init_stem(config.n, m, stream=RngStream(config.master_seed, stream_ids[1]), q1=1, q2=m)
    baseline = engine.fit_baseline(sample)
    out = np.empty((len(a_chunk), len(b_values)))
    for i, a in enumerate(a_chunk):
        for j, b in enumerate(b_values):
            res = test_candidate(logistic_model(a, b), sample, stem, engine, baseline=baseline)
            out[i, j] = res.rank / m
    return out


def rank_map(
    config: ScenarioConfig,
    engine,
    m: int,
    grid: GridSpec = GridSpec(),
    workers: int = 1,
) -> RankMap:
    """Relative rank of every grid candidate under one shared stem.

    The stem (perturbations and tie-break permutation) is drawn once and
    reused for all candidates, which is what makes the map a family of
    simultaneous region estimates: thresholding it at q/m gives the level-q/m
    confidence region.
    """
    a_values = grid.a_values
    b_values = grid.b_values
    stream_ids = (0, 1)  # sample stream, stem stream
    if workers <= 1:
        values = _rank_map_rows((config, engine, m, a_values, b_values, stream_ids))
    else:
        chunks = np.array_split(a_values, min(workers, len(a_values)))
        jobs = [(config, engine, m, chunk, b_values, stream_ids) for chunk in chunks if len(chunk)]
        with get_context("fork").Pool(min(workers, len(jobs))) as pool:
            parts = pool.map(_rank_map_rows, jobs)
        values = np.vstack(parts)
    estimate = None
    fit = engine.point_estimate(gen_sample(config, RngStream(config.master_seed, stream_ids[0])))
    if fit is not None and fit.family == "logistic":
        estimate = (fit.params[0], fit.params[1])
    return RankMap(
        a_values=a_values,
        b_values=b_values,
        values=values,
        engine_kind=engine.kind,
        m=m,
        n=config.n,
        seed=config.master_seed,
        scenario=config.scenario,
        estimate=estimate,
    )


# ---------------------------------------------------------------------------
# Monte Carlo coverage
# ---------------------------------------------------------------------------

def _coverage_chunk(args):
    (config, method, m, q, lo, hi, alpha, delta) = args
    theta = logistic_model(*config.true_params)
    theta_vec = np.asarray(theta.params)
    hits = 0
    failures = 0
    for t in range(lo, hi):
        stream = RngStream(config.master_seed, t)
        sample = gen_sample(config, stream)
        if method == "ellipsoid":
            try:
                region = build_ellipsoid(sample, delta)
            except SeparationError:
                failures += 1
                continue
            hits += ellipsoid_contains(region, theta_vec)
        else:
            stem = init_stem(config.n, m, stream=stream, q1=1, q2=q)
            engine = make_engine(method, config.n, alpha=alpha)
            try:
                res = test_candidate(theta, sample, stem, engine)
            except FitError:
                failures += 1
                continue
            hits += res.accepted
    return hits, failures


def coverage_mc(
    config: ScenarioConfig,
    method: str,
    m: int = 20,
    q: int = 19,
    trials: int = 10_000,
    *,
    alpha: float = 0.7,
    delta: float = 0.05,
    workers: int = 1,
) -> CoverageReport:
    """Frequency with which the true parameters land in the region.

    One fresh sample and one fresh stem per trial; trial t draws everything
    from the stream (master_seed, t), so the hit count does not depend on the
    worker partition. Trials whose engine fit fails (e.g. MLE separation for
    the ellipsoid) are excluded from the denominator and counted in
    ``failures``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if method != "ellipsoid" and not (1 <= q <= m):
        raise ValueError(f"need 1 <= q <= m, got q={q}, m={m}")
    bounds = np.linspace(0, trials, max(1, workers) + 1).astype(int)
    jobs = [
        (config, method, m, q, int(lo), int(hi), alpha, delta)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    if len(jobs) == 1:
        parts = [_coverage_chunk(jobs[0])]
    else:
        with get_context("fork").Pool(len(jobs)) as pool:
            parts = pool.map(_coverage_chunk, jobs)
    hits = sum(p[0] for p in parts)
    failures = sum(p[1] for p in parts)
    nominal = (1.0 - delta) if method == "ellipsoid" else q / m
    return CoverageReport(
        method=method,
        scenario=config.scenario,
        n=config.n,
        m=None if method == "ellipsoid" else m,
        q=None if method == "ellipsoid" else q,
        trials=trials,
        hits=int(hits),
        failures=int(failures),
        nominal=nominal,
    )


def _rank_chunk(args):
    (config, method, m, lo, hi, alpha) = args
    theta = logistic_model(*config.true_params)
    counts = np.zeros(m, dtype=np.int64)
    for t in range(lo, hi):
        stream = RngStream(config.master_seed, t)
        sample = gen_sample(config, stream)
        stem = init_stem(config.n, m, stream=stream, q1=1, q2=m)
        engine = make_engine(method, config.n, alpha=alpha)
        res = test_candidate(theta, sample, stem, engine)
        counts[res.rank - 1] += 1
    return counts


def rank_frequencies(
    config: ScenarioConfig,
    method: str,
    m: int,
    trials: int,
    *,
    alpha: float = 0.7,
    workers: int = 1,
) -> np.ndarray:
    """Histogram of the true parameter's rank over independent trials.

    At the true parameters the rank is uniform on {1..m}; this is the
    diagnostic behind the exactness guarantee.
    """
    bounds = np.linspace(0, trials, max(1, workers) + 1).astype(int)
    jobs = [
        (config, method, m, int(lo), int(hi), alpha)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    if len(jobs) == 1:
        parts = [_rank_chunk(jobs[0])]
    else:
        with get_context("fork").Pool(len(jobs)) as pool:
            parts = pool.map(_rank_chunk, jobs)
    return np.sum(parts, axis=0)


# ---------------------------------------------------------------------------
# shrinkage curves
# ---------------------------------------------------------------------------

def _shrinkage_cell(args):
    (config, method, m, q, grid, stream_id, alpha) = args
    stream = RngStream(config.master_seed, stream_id)
    sample = gen_sample(config, stream)
    stem = init_stem(config.n, m, stream=stream, q1=1, q2=q)
    engine = make_engine(method, config.n, alpha=alpha)
    baseline = engine.fit_baseline(sample)
    accepted = 0
    total = 0
    for a in grid.a_values:
        for b in grid.b_values:
            res = test_candidate(logistic_model(a, b), sample, stem, engine, baseline=baseline)
            accepted += res.accepted
            total += 1
    return accepted / total


def shrinkage_curve(
    config: ScenarioConfig,
    method: str,
    m: int,
    q: int,
    n_list,
    grid: GridSpec,
    repeats: int,
    *,
    alpha: float = 0.7,
    workers: int = 1,
) -> list:
    """Mean accepted fraction of the grid for each sample size.

    Returns rows (n, mean accepted fraction, repeats), with the fraction
    averaged over independent repeats. Stream ids are allocated as
    i * repeats + r for size index i and repeat r, so the table is
    reproducible and partition independent.
    """
    n_list = [int(v) for v in n_list]
    if sorted(n_list) != n_list:
        raise ValueError(f"n_list must be increasing, got {n_list}")
    jobs = []
    for i, n in enumerate(n_list):
        cfg = ScenarioConfig(config.scenario, n, config.true_params, config.master_seed)
        for r in range(repeats):
            jobs.append((cfg, method, m, q, grid, i * repeats + r, alpha))
    if workers <= 1:
        fractions = [_shrinkage_cell(job) for job in jobs]
    else:
        with get_context("fork").Pool(workers) as pool:
            fractions = pool.map(_shrinkage_cell, jobs)
    rows = []
    for i, n in enumerate(n_list):
        vals = fractions[i * repeats : (i + 1) * repeats]
        rows.append((n, float(np.mean(vals)), repeats))
    return rows
