"""Resampling rank test for candidate regression functions.

Given a candidate f and the stem randomness, regenerates m - 1 alternative
label sets from the candidate's conditional law P(Y = +-1 | x) = (1 +- f(x))/2,
turns every dataset into a scalar reference variable through a ranking
engine, and ranks the original dataset among the alternatives with a
permutation tie-break. A candidate is accepted when its rank falls inside
[q1, q2], which happens with probability exactly (q2 - q1 + 1)/m at the true
regression function, for every sample size.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    DimensionMismatchError,
    InvalidLevelError,
    LabeledSample,
    RegressionModel,
    RngStream,
    StemRandomness,
    evaluate_model_batch,
)

__all__ = [
    "AlternativeOutputs",
    "RankResult",
    "generate_alternatives",
    "init_stem",
    "position_ranks",
    "rank_statistic",
    "test_candidate",
]


@dataclass(frozen=True, eq=False)
class AlternativeOutputs:
    """Regenerated labels for the m - 1 alternative datasets.

    Entry (i, j) equals sign(f(x_i) + U[i, j]) for the generating stem's U;
    the inputs are shared with the original sample, so only labels are stored.
    """

    labels: np.ndarray  # (n, m-1), entries in {-1., +1.}
    candidate: RegressionModel

    @property
    def count(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True, eq=False)
class RankResult:
    """Outcome of testing one candidate: its rank and region membership."""

    rank: int
    accepted: bool
    Z: np.ndarray  # reference variables, Z[0] for the original dataset


def init_stem(
    n: int,
    m: int,
    gamma=None,
    stream: RngStream = None,
    *,
    q1: int = None,
    q2: int = None,
) -> StemRandomness:
    """Draw the per-run stem randomness and fix the acceptance window.

    Either pass a rational confidence level ``gamma`` (then q1 = 1 and
    q2 = gamma*m, the one-sided window under which false candidates are pushed
    out upward), or pass ``q1`` and ``q2`` explicitly for a general window.

    Parameters
    ----------
    n : int
        Sample size (row count of U).
    m : int
        Number of datasets compared; m >= 2.
    gamma : float or Fraction, optional
        Confidence level; gamma*m must be an integer in {1..m-1}.
    stream : RngStream
        Source of randomness; U is drawn first, then the permutation.
    q1, q2 : int, optional
        Explicit acceptance window, 1 <= q1 <= q2 <= m.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if stream is None:
        raise ValueError("init_stem needs an RngStream")
    if gamma is not None:
        if q1 is not None or q2 is not None:
            raise ValueError("pass either gamma or (q1, q2), not both")
        if isinstance(gamma, Fraction):
            q_exact = gamma * m
            if q_exact.denominator != 1:
                raise InvalidLevelError(
                    f"gamma*m = {q_exact} is not an integer; choose m divisible by "
                    f"the denominator of gamma ({gamma.denominator})"
                )
            q = int(q_exact)
        else:
            gm = float(gamma) * m
            q = int(round(gm))
            if abs(gm - q) > 1e-9:
                raise InvalidLevelError(
                    f"gamma*m = {gm!r} is not an integer; choose m so the level "
                    f"gamma = q/m is exactly representable"
                )
        if not (1 <= q <= m - 1):
            raise InvalidLevelError(
                f"gamma*m must be in {{1..{m - 1}}}, got {q} (gamma={gamma}, m={m})"
            )
        q1, q2 = 1, q
    else:
        if q1 is None or q2 is None:
            raise ValueError("pass either gamma or both q1 and q2")
        if not (1 <= q1 <= q2 <= m):
            raise ValueError(f"need 1 <= q1 <= q2 <= m, got q1={q1}, q2={q2}, m={m}")
    U = stream.uniform_open(-1.0, 1.0, (n, m - 1))
    pi = stream.gen.permutation(m) + 1
    return StemRandomness(m=m, q1=int(q1), q2=int(q2), U=U, pi=pi, seed=stream.seed)


def generate_alternatives(
    candidate: RegressionModel, sample: LabeledSample, stem: StemRandomness
) -> AlternativeOutputs:
    """Regenerate the m - 1 alternative label sets under ``candidate``.

    Label (i, j) is sign(f(x_i) + U[i, j]) with sign(0) := +1, so that
    conditionally on x_i each label is +1 with probability (1 + f(x_i))/2.
    """
    if stem.n != sample.n:
        raise DimensionMismatchError(
            f"stem was initialized for n={stem.n} but the sample has n={sample.n}"
        )
    fvals = evaluate_model_batch(candidate, sample.inputs)
    labels = np.where(fvals[:, None] + stem.U >= 0.0, 1.0, -1.0)
    return AlternativeOutputs(labels=labels, candidate=candidate)


def _tags(pi: np.ndarray) -> np.ndarray:
    # tag aligned with dataset order [D0, D1, ..., D_{m-1}]:
    # D0 carries pi(m), dataset j carries pi(j)
    m = pi.shape[0]
    tags = np.empty(m, dtype=np.int64)
    tags[0] = pi[m - 1]
    tags[1:] = pi[: m - 1]
    return tags


def rank_statistic(Z, pi) -> int:
    """Rank of the original dataset among all m under the tie-broken order.

    Returns 1 plus the number of alternatives j whose (Z[j], tag_j) is
    strictly below (Z[0], tag_0), where ties in Z are resolved by the
    permutation tags (ascending).
    """
    Z = np.asarray(Z, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.int64)
    m = pi.shape[0]
    if Z.shape[0] != m:
        raise ValueError(f"Z has length {Z.shape[0]} but pi permutes {m} elements")
    tags = _tags(pi)
    below = (Z[1:] < Z[0]) | ((Z[1:] == Z[0]) & (tags[1:] < tags[0]))
    return 1 + int(below.sum())


def position_ranks(Z, pi) -> np.ndarray:
    """Rank of every dataset when treated as the distinguished one.

    The tie-broken order is total, so the result is always a permutation of
    {1..m}; this is the distinctness property behind the exact coverage.
    """
    Z = np.asarray(Z, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.int64)
    tags = _tags(pi)
    order = np.lexsort((tags, Z))
    ranks = np.empty(Z.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, Z.shape[0] + 1)
    return ranks


def test_candidate(
    candidate: RegressionModel,
    sample: LabeledSample,
    stem: StemRandomness,
    engine,
    baseline=None,
) -> RankResult:
    """Run the full rank test for one candidate.

    Generates the alternatives, computes the reference variables through
    ``engine`` (mean squared discrepancy between the candidate and the
    engine's per-dataset point estimate), ranks the original dataset, and
    accepts when q1 <= rank <= q2. Reuse the same stem for every candidate of
    one region sweep; ``baseline`` may carry the engine's cached fit of the
    original dataset.
    """
    alternatives = generate_alternatives(candidate, sample, stem)
    Z = engine.reference_vector(candidate, sample, alternatives, baseline=baseline)
    rank = rank_statistic(Z, stem.pi)
    return RankResult(rank=rank, accepted=bool(stem.q1 <= rank <= stem.q2), Z=Z)
