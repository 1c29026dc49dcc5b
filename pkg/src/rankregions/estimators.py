"""Point estimators that turn resampled datasets into reference variables.

Four interchangeable engines: k-nearest-neighbor local averaging, a
least-squares perceptron with logistic activation, logistic maximum
likelihood, and closed-form least squares over a fixed basis. Every engine
fits one predictor per dataset (the inputs are shared, only labels differ)
and scores a candidate by the mean squared discrepancy between candidate and
predictor over the sample inputs. The fit of the original dataset does not
depend on the candidate, so it is computed once per sweep and cached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import backend
from .core import (
    LabeledSample,
    RegressionModel,
    evaluate_model_batch,
    linear_model,
    logistic_model,
)
from .resample import AlternativeOutputs

__all__ = [
    "BaselineFit",
    "FitError",
    "KNNEngine",
    "LinearERMEngine",
    "LogisticMLEEngine",
    "MLEFit",
    "NewtonSettings",
    "PerceptronEngine",
    "PerceptronFit",
    "PerceptronSettings",
    "RankDeficientError",
    "default_k",
    "engine_reference_vector",
    "knn_predict",
    "linear_erm_fit",
    "logistic_mle_fit",
    "perceptron_fit",
]


class FitError(RuntimeError):
    """An estimator failed to produce a usable fit."""


class RankDeficientError(ValueError):
    """The least-squares design matrix does not have full column rank."""


# ---------------------------------------------------------------------------
# k-nearest neighbors
# ---------------------------------------------------------------------------

def default_k(n: int, alpha: float = 0.7) -> int:
    """Neighbor count floor(n**alpha), at least 1, for alpha in (0.5, 1)."""
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly between 0.5 and 1, got {alpha}")
    return max(1, int(np.floor(float(n) ** alpha)))


def _neighbor_table(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest rows of X for each row of X, self included.

    Euclidean distance; exact distance ties resolved in favor of the lower
    index (stable sort), which keeps runs reproducible.
    """
    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def knn_predict(train: LabeledSample, k: int, x) -> float:
    """Mean label of the k training inputs nearest to x."""
    if not 1 <= k <= train.n:
        raise ValueError(f"k must be in 1..n={train.n}, got {k}")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    d2 = ((train.inputs - x[None, :]) ** 2).sum(axis=1)
    idx = np.argsort(d2, kind="stable")[:k]
    return float(train.labels[idx].mean())


# ---------------------------------------------------------------------------
# optimizer settings and fit results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerceptronSettings:
    """Full-batch gradient descent policy (deterministic, zero init)."""

    step_size: float = 0.1
    max_iter: int = 2000
    grad_tol: float = 1e-7
    step_floor: float = 1e-14

    def __post_init__(self):
        if self.step_size <= 0 or self.max_iter < 1 or self.step_floor <= 0:
            raise ValueError("step sizes and iteration caps must be positive")


@dataclass(frozen=True)
class NewtonSettings:
    """Newton-Raphson policy for the logistic likelihood."""

    max_iter: int = 60
    norm_cap: float = 1e3
    ridge_fallback: float = 1e-3

    def __post_init__(self):
        if self.max_iter < 1 or self.norm_cap <= 0 or self.ridge_fallback <= 0:
            raise ValueError("iteration caps, norm cap and ridge must be positive")


@dataclass(frozen=True)
class PerceptronFit:
    model: RegressionModel
    loss: float
    n_iter: int


@dataclass(frozen=True)
class MLEFit:
    model: RegressionModel
    loglik: float
    grad_norm: float
    n_iter: int
    separated: bool


def perceptron_fit(
    train: LabeledSample, settings: PerceptronSettings = PerceptronSettings()
) -> PerceptronFit:
    """Least-squares fit of sigma(b.x + a) by deterministic gradient descent.

    The returned loss never exceeds the loss of the zero model (descent with
    step halving from zero initialization).
    """
    w, loss, iters = backend.perceptron_fit(
        train.inputs,
        train.labels,
        settings.step_size,
        settings.max_iter,
        settings.grad_tol,
        settings.step_floor,
    )
    if not np.all(np.isfinite(w)):
        raise FitError(f"non-finite perceptron iterate after {iters} iterations: {w}")
    return PerceptronFit(model=logistic_model(w[0], w[1:]), loss=loss, n_iter=iters)


def logistic_mle_fit(
    train: LabeledSample, settings: NewtonSettings = NewtonSettings()
) -> MLEFit:
    """Logistic maximum likelihood with Newton-Raphson and step halving.

    Labels are mapped to {0, 1} internally. On (quasi-)separated data, where
    the iterate norm blows past ``norm_cap`` or the Hessian turns numerically
    singular, the fit is rerun with a small ridge penalty and flagged.
    """
    y01 = (train.labels + 1.0) / 2.0
    w, ll, gn, iters, status = backend.logistic_fit(
        train.inputs,
        y01,
        settings.max_iter,
        None,
        settings.norm_cap,
        settings.ridge_fallback,
    )
    if status == backend.FIT_FAILED:
        raise FitError(
            f"logistic MLE did not converge within {settings.max_iter} iterations; "
            f"last iterate {w} with gradient norm {gn:.3e}"
        )
    return MLEFit(
        model=logistic_model(w[0], w[1:]),
        loglik=ll,
        grad_norm=gn,
        n_iter=iters,
        separated=(status == backend.FIT_SEPARATED),
    )


def _design(X: np.ndarray, basis: Sequence[Callable]) -> np.ndarray:
    return np.column_stack([np.asarray(fn(X), dtype=np.float64) for fn in basis])


def linear_erm_fit(train: LabeledSample, basis: Sequence[Callable]) -> RegressionModel:
    """Ordinary least squares over the basis; predictions clamp to [-1, 1]."""
    Phi = _design(train.inputs, basis)
    rank = np.linalg.matrix_rank(Phi)
    if rank < Phi.shape[1]:
        raise RankDeficientError(
            f"design matrix is rank deficient: {Phi.shape[1] - rank} of "
            f"{Phi.shape[1]} columns are redundant"
        )
    coeffs, *_ = np.linalg.lstsq(Phi, train.labels, rcond=None)
    return linear_model(coeffs, tuple(basis))


# ---------------------------------------------------------------------------
# ranking engines
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BaselineFit:
    """Cached fit of the original dataset plus engine-specific shared state."""

    predictions: np.ndarray  # predictor of D0 evaluated at the sample inputs
    detail: object = None


def _candidate_values(candidate: RegressionModel, sample: LabeledSample) -> np.ndarray:
    return evaluate_model_batch(candidate, sample.inputs)


class _EngineBase:
    kind: str = ""

    def reference_vector(self, candidate, sample, alternatives, baseline=None):
        """Reference variables Z[0..m-1]; Z[j] is the mean squared discrepancy
        between the candidate and the engine's fit of dataset j."""
        if baseline is None:
            baseline = self.fit_baseline(sample)
        fvals = _candidate_values(candidate, sample)
        preds = self._alternative_predictions(sample, alternatives.labels, baseline)
        m = alternatives.count + 1
        Z = np.empty(m)
        Z[0] = np.mean((fvals - baseline.predictions) ** 2)
        Z[1:] = np.mean((fvals[:, None] - preds) ** 2, axis=0)
        return Z

    def point_estimate(self, sample):
        """Fit of the original dataset as a model, when the engine has one
        living in the candidate family (used to mark rank maps)."""
        return None


@dataclass(frozen=True)
class KNNEngine(_EngineBase):
    """k-nearest-neighbor local averaging; k defaults to floor(n**alpha)."""

    k: int | None = None
    alpha: float = 0.7
    kind: str = field(default="knn", init=False)

    def resolve_k(self, n: int) -> int:
        k = self.k if self.k is not None else default_k(n, self.alpha)
        if not 1 <= k <= n:
            raise ValueError(f"k must be in 1..n={n}, got {k}")
        return k

    def fit_baseline(self, sample: LabeledSample) -> BaselineFit:
        k = self.resolve_k(sample.n)
        idx = _neighbor_table(sample.inputs, k)
        preds = sample.labels[idx].mean(axis=1)
        return BaselineFit(predictions=preds, detail=idx)

    def _alternative_predictions(self, sample, alt_labels, baseline):
        idx = baseline.detail
        n, k = idx.shape
        preds = np.empty((n, alt_labels.shape[1]))
        for j in range(alt_labels.shape[1]):
            preds[:, j] = alt_labels[idx, j].mean(axis=1)
        return preds


@dataclass(frozen=True)
class PerceptronEngine(_EngineBase):
    """Least-squares perceptron fits as the per-dataset point estimators."""

    settings: PerceptronSettings = PerceptronSettings()
    kind: str = field(default="perceptron", init=False)

    def fit_baseline(self, sample: LabeledSample) -> BaselineFit:
        fit = perceptron_fit(sample, self.settings)
        w = np.asarray(fit.model.params)
        preds = np.tanh(0.5 * (sample.inputs @ w[1:] + w[0]))
        return BaselineFit(predictions=preds, detail=fit)

    def _alternative_predictions(self, sample, alt_labels, baseline):
        s = self.settings
        W, _, _ = backend.perceptron_fit_many(
            sample.inputs, alt_labels, s.step_size, s.max_iter, s.grad_tol, s.step_floor
        )
        return np.tanh(0.5 * (sample.inputs @ W[:, 1:].T + W[:, 0]))

    def point_estimate(self, sample):
        return perceptron_fit(sample, self.settings).model


@dataclass(frozen=True)
class LogisticMLEEngine(_EngineBase):
    """Logistic maximum likelihood fits as the per-dataset point estimators."""

    settings: NewtonSettings = NewtonSettings()
    kind: str = field(default="mle", init=False)

    def fit_baseline(self, sample: LabeledSample) -> BaselineFit:
        fit = logistic_mle_fit(sample, self.settings)
        w = np.asarray(fit.model.params)
        preds = np.tanh(0.5 * (sample.inputs @ w[1:] + w[0]))
        return BaselineFit(predictions=preds, detail=fit)

    def _alternative_predictions(self, sample, alt_labels, baseline):
        s = self.settings
        W, _, _, _, statuses = backend.logistic_fit_many(
            sample.inputs,
            (alt_labels + 1.0) / 2.0,
            s.max_iter,
            None,
            s.norm_cap,
            s.ridge_fallback,
        )
        bad = np.flatnonzero(statuses == backend.FIT_FAILED)
        if bad.size:
            raise FitError(f"logistic MLE failed on alternative dataset(s) {1 + bad}")
        # predictor 2p - 1 = tanh(z/2), back on the [-1, 1] label scale
        return np.tanh(0.5 * (sample.inputs @ W[:, 1:].T + W[:, 0]))

    def point_estimate(self, sample):
        return logistic_mle_fit(sample, self.settings).model


@dataclass(frozen=True, eq=False)
class LinearERMEngine(_EngineBase):
    """Closed-form least squares over a fixed basis, truncated to [-1, 1]."""

    basis: tuple
    kind: str = field(default="linear-erm", init=False)

    def fit_baseline(self, sample: LabeledSample) -> BaselineFit:
        Phi = _design(sample.inputs, self.basis)
        rank = np.linalg.matrix_rank(Phi)
        if rank < Phi.shape[1]:
            raise RankDeficientError(
                f"design matrix is rank deficient: {Phi.shape[1] - rank} of "
                f"{Phi.shape[1]} columns are redundant"
            )
        # pseudoinverse solves every label column of the sweep in one pass
        pinv = np.linalg.pinv(Phi)
        coeffs = pinv @ sample.labels
        preds = np.clip(Phi @ coeffs, -1.0, 1.0)
        return BaselineFit(predictions=preds, detail=(Phi, pinv))

    def _alternative_predictions(self, sample, alt_labels, baseline):
        Phi, pinv = baseline.detail
        coeffs = pinv @ alt_labels
        return np.clip(Phi @ coeffs, -1.0, 1.0)

    def point_estimate(self, sample):
        return linear_erm_fit(sample, self.basis)


def engine_reference_vector(
    engine,
    candidate: RegressionModel,
    sample: LabeledSample,
    alternatives: AlternativeOutputs,
    baseline: BaselineFit = None,
) -> np.ndarray:
    """Reference variables for one candidate under ``engine``; see the engine
    classes for the caching contract (Z[0] never depends on the candidate's
    alternatives, so the baseline fit can be shared across a sweep)."""
    return engine.reference_vector(candidate, sample, alternatives, baseline=baseline)
