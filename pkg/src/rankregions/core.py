"""Domain types shared by every construction.

Holds the labeled binary sample, the candidate regression models (logistic,
linear-basis, constant), the per-run stem randomness (uniform perturbations
plus a tie-breaking permutation), and reproducible counter-style random
streams. Everything here is immutable after construction and safe to share
across concurrent tasks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DimensionMismatchError",
    "InvalidLevelError",
    "LabeledSample",
    "RegressionModel",
    "RngStream",
    "StemRandomness",
    "constant_model",
    "evaluate_model",
    "evaluate_model_batch",
    "linear_model",
    "logistic_model",
    "make_streams",
]


class DimensionMismatchError(ValueError):
    """Input dimension does not match what a model or stem expects."""


class InvalidLevelError(ValueError):
    """Requested confidence level is not representable as (q2-q1+1)/m."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True, order="C")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """An i.i.d. sample of d-dimensional inputs with labels in {-1, +1}.

    Parameters
    ----------
    inputs : array_like, shape (n, d) or (n,)
        Input points; a 1-d array is treated as n scalar inputs (d = 1).
    labels : array_like, shape (n,)
        Binary labels, each exactly -1 or +1.
    """

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"inputs must be a nonempty (n, d) array, got shape {x.shape}")
        y = np.asarray(self.labels, dtype=np.float64).ravel()
        if y.shape[0] != x.shape[0]:
            raise ValueError(f"inputs ({x.shape[0]}) and labels ({y.shape[0]}) differ in length")
        if not np.all(np.abs(y) == 1.0):
            bad = y[np.abs(y) != 1.0]
            raise ValueError(f"labels must be exactly -1 or +1, got {bad[:5]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("inputs contain non-finite values")
        object.__setattr__(self, "inputs", _readonly(x))
        object.__setattr__(self, "labels", _readonly(y))

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class RegressionModel:
    """A candidate regression function f mapping inputs into [-1, +1].

    Families
    --------
    ``logistic``
        params = (a, b_1, ..., b_d); f(x) = 2 / (1 + exp(-(b.x + a))) - 1.
    ``linear``
        params are coefficients over the attached basis functions; the raw
        combination is clamped to [-1, +1] at evaluation time.
    ``constant``
        params = (c,) with c in [-1, +1].
    """

    family: str
    params: tuple
    basis: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.family == "logistic":
            if len(self.params) < 2:
                raise ValueError("logistic family needs (a, b_1, ..., b_d)")
        elif self.family == "constant":
            if len(self.params) != 1:
                raise ValueError("constant family takes a single parameter")
            if abs(self.params[0]) > 1.0:
                raise ValueError(f"constant value {self.params[0]} outside [-1, 1]")
        elif self.family == "linear":
            if len(self.basis) != len(self.params):
                raise ValueError(
                    f"{len(self.params)} coefficients for {len(self.basis)} basis functions"
                )
        else:
            raise ValueError(f"unknown model family {self.family!r}")

    @property
    def input_dim(self) -> int | None:
        """Expected input dimension, or None when the family is dimension-free."""
        if self.family == "logistic":
            return len(self.params) - 1
        return None


def logistic_model(a: float, b) -> RegressionModel:
    """Logistic model 2/(1 + exp(-(b.x + a))) - 1 with intercept a and slope b."""
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    return RegressionModel("logistic", (float(a), *b.tolist()))


def constant_model(c: float) -> RegressionModel:
    return RegressionModel("constant", (float(c),))


def linear_model(coeffs: Sequence[float], basis: Sequence[Callable]) -> RegressionModel:
    """Linear combination of basis functions, clamped to [-1, 1] at evaluation."""
    return RegressionModel("linear", tuple(coeffs), tuple(basis))


def evaluate_model_batch(model: RegressionModel, X: np.ndarray) -> np.ndarray:
    """Evaluate ``model`` at every row of ``X``.

    Parameters
    ----------
    model : RegressionModel
    X : ndarray, shape (n, d)

    Returns
    -------
    ndarray, shape (n,)
        Values in [-1, +1].
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d (n, d) array, got shape {X.shape}")
    if model.family == "logistic":
        d = model.input_dim
        if X.shape[1] != d:
            raise DimensionMismatchError(
                f"model expects {d}-dimensional inputs, got {X.shape[1]}-dimensional"
            )
        a = model.params[0]
        b = np.asarray(model.params[1:], dtype=np.float64)
        # tanh(z/2) == 2/(1 + exp(-z)) - 1, stable for any z
        return np.tanh(0.5 * (X @ b + a))
    if model.family == "constant":
        return np.full(X.shape[0], model.params[0])
    # linear-basis: raw combination truncated into [-1, 1]
    out = np.zeros(X.shape[0])
    for coef, fn in zip(model.params, model.basis):
        out += coef * np.asarray(fn(X), dtype=np.float64)
    return np.clip(out, -1.0, 1.0)


def evaluate_model(model: RegressionModel, x) -> float:
    """Evaluate ``model`` at a single point (scalar or length-d vector)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.ndim != 1:
        raise ValueError("evaluate_model takes one point; use evaluate_model_batch for arrays")
    return float(evaluate_model_batch(model, x[None, :])[0])


class RngStream:
    """A reproducible random stream identified by (seed, stream_id).

    The same pair always reproduces the identical variate sequence, regardless
    of execution order or how work is partitioned across workers; distinct
    stream ids give statistically independent streams. Based on numpy's
    SeedSequence spawning, so no cross-stream bookkeeping is needed.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._gen = None

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            # two's-complement fold keeps negative seeds valid and distinct
            ss = np.random.SeedSequence(
                entropy=self.seed % (1 << 64), spawn_key=(self.stream_id,)
            )
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def uniform_open(self, low: float, high: float, size) -> np.ndarray:
        """Uniform draws on the open interval (low, high); endpoints redrawn."""
        u = self.gen.uniform(low, high, size)
        while True:
            mask = (u <= low) | (u >= high)
            if not mask.any():
                return u
            u[mask] = self.gen.uniform(low, high, int(mask.sum()))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def make_streams(master_seed: int, count: int) -> list[RngStream]:
    """Derive ``count`` independent reproducible streams from one master seed."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return [RngStream(master_seed, i) for i in range(count)]


@dataclass(frozen=True, eq=False)
class StemRandomness:
    """The randomness fixed once per run and reused for every candidate.

    Attributes
    ----------
    m : int
        Total number of datasets compared (original plus m - 1 alternatives).
    q1, q2 : int
        Acceptance window on the rank; the confidence level is (q2-q1+1)/m.
    U : ndarray, shape (n, m-1)
        Uniform perturbations on the open interval (-1, 1); entry (i, j)
        regenerates the label of input i in alternative dataset j+1.
    pi : ndarray, shape (m,)
        A permutation of {1..m} used only to break ties; the original dataset
        carries tag pi[m-1] and alternative j carries tag pi[j-1].
    seed : int
        Master seed of the stream that produced U and pi.
    """

    m: int
    q1: int
    q2: int
    U: np.ndarray
    pi: np.ndarray
    seed: int

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        if not (1 <= self.q1 <= self.q2 <= self.m):
            raise ValueError(f"need 1 <= q1 <= q2 <= m, got q1={self.q1}, q2={self.q2}, m={self.m}")
        U = np.asarray(self.U, dtype=np.float64)
        if U.ndim != 2 or U.shape[1] != self.m - 1:
            raise ValueError(f"U must have shape (n, m-1), got {U.shape}")
        if U.size and (U.min() <= -1.0 or U.max() >= 1.0):
            raise ValueError("U entries must lie strictly inside (-1, 1)")
        pi = np.asarray(self.pi, dtype=np.int64)
        if sorted(pi.tolist()) != list(range(1, self.m + 1)):
            raise ValueError("pi must be a permutation of {1..m}")
        object.__setattr__(self, "U", _readonly(U))
        p = pi.copy()
        p.flags.writeable = False
        object.__setattr__(self, "pi", p)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def gamma(self) -> Fraction:
        """The exact confidence level (q2 - q1 + 1) / m."""
        return Fraction(self.q2 - self.q1 + 1, self.m)
