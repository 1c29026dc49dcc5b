"""Asymptotic confidence ellipsoids around the logistic MLE.

The baseline the resampling constructions are compared against: the region
{theta : (theta - mle)' S (theta - mle) <= c} where S is the negated Hessian
of the log-likelihood at the MLE (the observed information) and c is the
(1 - delta) quantile of chi-square with d + 1 degrees of freedom. The
quantile is computed from scratch by bisecting the regularized incomplete
gamma function (series / continued-fraction evaluation), no table lookups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .core import DimensionMismatchError, LabeledSample
from .estimators import FitError, MLEFit, NewtonSettings, logistic_mle_fit

__all__ = [
    "EllipsoidRegion",
    "SeparationError",
    "build_ellipsoid",
    "chi2_cdf",
    "chi2_quantile",
    "ellipsoid_contains",
    "regularized_gamma_p",
]

_EPS = 1e-15
_FPMIN = 1e-300


class SeparationError(FitError):
    """The MLE is degenerate (separated data); no ellipsoid can be reported."""


def regularized_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), for a > 0 and x >= 0.

    Power series for x < a + 1, Lentz continued fraction for the complement
    otherwise (the classic split, each convergent in its region).
    """
    if a <= 0.0:
        raise ValueError(f"a must be positive, got {a}")
    if x < 0.0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    lead = math.exp(a * math.log(x) - x - math.lgamma(a))
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        k = 1
        while True:
            term *= x / (a + k)
            total += term
            if abs(term) < abs(total) * _EPS or k > 10_000:
                break
            k += 1
        return min(lead * total, 1.0)
    # Lentz's algorithm for the continued fraction of Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return max(1.0 - lead * h, 0.0)


def chi2_cdf(x: float, dof: int) -> float:
    """CDF of the chi-square distribution with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    if x <= 0.0:
        return 0.0
    return regularized_gamma_p(dof / 2.0, x / 2.0)


def chi2_quantile(p: float, dof: int) -> float:
    """The p-quantile of chi-square(dof), found by bisection on the CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    lo = 0.0
    hi = max(2.0 * dof, 1.0)
    for _ in range(200):
        if chi2_cdf(hi, dof) >= p:
            break
        hi *= 2.0
    while hi - lo > 1e-11:
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, dof) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class EllipsoidRegion:
    """Closed ellipsoid {theta : (theta-center)' shape (theta-center) <= radius}.

    ``center`` is the MLE (intercept first), ``shape`` the negated Hessian of
    the log-likelihood there (symmetric positive semidefinite), ``radius`` the
    chi-square quantile.
    """

    center: np.ndarray
    shape: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).ravel()
        S = np.asarray(self.shape, dtype=np.float64)
        if S.shape != (c.size, c.size):
            raise ValueError(f"shape matrix {S.shape} does not match center of size {c.size}")
        scale = np.max(np.abs(S))
        if scale > 0 and np.max(np.abs(S - S.T)) > 1e-10 * scale:
            raise ValueError("shape matrix is not symmetric within 1e-10 relative tolerance")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", 0.5 * (S + S.T))

    @property
    def dim(self) -> int:
        return self.center.size


def build_ellipsoid(
    train: LabeledSample,
    delta: float = 0.05,
    settings: NewtonSettings = NewtonSettings(),
) -> EllipsoidRegion:
    """Fit the logistic MLE and assemble its asymptotic confidence ellipsoid.

    ``delta`` is the significance level; the radius is the (1 - delta)
    quantile of chi-square(d + 1). Raises SeparationError when the MLE is
    degenerate (try a larger sample, or report a regularized fit directly).
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie strictly between 0 and 1, got {delta}")
    fit: MLEFit = logistic_mle_fit(train, settings)
    if fit.separated:
        raise SeparationError(
            "the sample is (quasi-)separated and the MLE diverges; collect a "
            "larger sample, or report the ridge-regularized fit directly"
        )
    w = np.asarray(fit.model.params)
    shape = -backend.logistic_hessian(train.inputs, w)
    radius = chi2_quantile(1.0 - delta, train.d + 1)
    return EllipsoidRegion(center=w, shape=shape, radius=radius)


def ellipsoid_contains(region: EllipsoidRegion, theta) -> bool:
    """Membership test, boundary inclusive."""
    t = np.asarray(theta, dtype=np.float64).ravel()
    if t.size != region.dim:
        raise DimensionMismatchError(
            f"region is {region.dim}-dimensional, candidate has dimension {t.size}"
        )
    diff = t - region.center
    return bool(diff @ region.shape @ diff <= region.radius)
