import math

import numpy as np
import pytest
from scipy import integrate

from rankregions import (
    LabeledSample,
    RngStream,
    SeparationError,
    build_ellipsoid,
    chi2_quantile,
    ellipsoid_contains,
)
from rankregions import backend
from rankregions.ellipsoid import EllipsoidRegion, chi2_cdf, regularized_gamma_p
from rankregions.experiments import gen_gaussian_mixture


def _chi2_quantile_quadrature(p, dof):
    """Independent oracle: integrate the chi-square density and bisect."""

    def cdf(x):
        if x <= 0:
            return 0.0
        val, _ = integrate.quad(
            lambda t: t ** (dof / 2 - 1) * math.exp(-t / 2)
            / (2 ** (dof / 2) * math.gamma(dof / 2)),
            0,
            x,
            limit=200,
        )
        return val

    lo, hi = 0.0, 1.0
    while cdf(hi) < p:
        hi *= 2
    for _ in range(80):
        mid = (lo + hi) / 2
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


class TestChi2Quantile:
    def test_dof2_closed_form(self):
        # chi2(2) CDF is 1 - exp(-x/2), so the 95% quantile is -2 ln(0.05)
        assert abs(chi2_quantile(0.95, 2) - (-2 * math.log(0.05))) <= 1e-9

    def test_dof2_median(self):
        assert abs(chi2_quantile(0.5, 2) - (-2 * math.log(0.5))) <= 1e-9

    @pytest.mark.parametrize("dof", [1, 3, 5])
    def test_matches_quadrature_oracle(self, dof):
        oracle = _chi2_quantile_quadrature(0.95, dof)
        assert abs(chi2_quantile(0.95, dof) - oracle) <= 1e-6

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError, match="strictly between"):
            chi2_quantile(0.0, 2)
        with pytest.raises(ValueError, match="strictly between"):
            chi2_quantile(1.0, 2)

    def test_cdf_roundtrip(self):
        for dof in (1, 2, 4, 9):
            for p in (0.01, 0.3, 0.5, 0.9, 0.99):
                x = chi2_quantile(p, dof)
                assert abs(chi2_cdf(x, dof) - p) < 1e-9

    def test_gamma_p_basics(self):
        assert regularized_gamma_p(1.0, 0.0) == 0.0
        # P(1, x) = 1 - exp(-x)
        assert regularized_gamma_p(1.0, 2.0) == pytest.approx(1 - math.exp(-2), abs=1e-14)


class TestBuildEllipsoid:
    def test_symmetric_four_points(self):
        train = LabeledSample(inputs=[-1.0, -1.0, 1.0, 1.0], labels=[1.0, -1.0, 1.0, -1.0])
        region = build_ellipsoid(train, delta=0.05)
        assert np.allclose(region.center, [0.0, 0.0])
        assert ellipsoid_contains(region, [0.0, 0.0])
        # d = 1: radius is the 95% quantile of chi-square(2)
        assert region.radius == pytest.approx(5.991464547107982, abs=1e-9)

    def test_separated_data_raises(self):
        train = LabeledSample(inputs=np.linspace(-1, 1, 10), labels=np.ones(10))
        with pytest.raises(SeparationError, match="larger"):
            build_ellipsoid(train)

    def test_hessian_matches_finite_differences(self, gauss500):
        # entrywise relative 1e-5 against central differences of the score
        fit_region = build_ellipsoid(gauss500, delta=0.05)
        w = fit_region.center
        X = gauss500.inputs
        y01 = (gauss500.labels + 1) / 2
        H = backend.logistic_hessian(X, w)
        h = 1e-6
        fd = np.empty_like(H)
        for k in range(2):
            up, dn = w.copy(), w.copy()
            up[k] += h
            dn[k] -= h
            _, gu = backend.logistic_value_grad(X, y01, up)
            _, gd = backend.logistic_value_grad(X, y01, dn)
            fd[:, k] = (gu - gd) / (2 * h)
        assert np.allclose(H, fd, rtol=1e-5, atol=1e-6)

    def test_center_quadratic_form_zero(self, gauss500):
        region = build_ellipsoid(gauss500)
        diff = region.center - region.center
        assert diff @ region.shape @ diff == 0.0

    def test_monotone_in_delta(self, gauss500):
        r05 = build_ellipsoid(gauss500, delta=0.05)
        r20 = build_ellipsoid(gauss500, delta=0.20)
        assert r20.radius < r05.radius

    def test_boundary_inclusive(self):
        region = EllipsoidRegion(center=[0.0, 0.0], shape=np.eye(2), radius=4.0)
        assert ellipsoid_contains(region, [2.0, 0.0])  # quadratic form exactly c
        assert not ellipsoid_contains(region, [2.0 * (1 + 1e-6), 0.0])

    def test_dimension_mismatch(self):
        region = EllipsoidRegion(center=[0.0, 0.0], shape=np.eye(2), radius=1.0)
        with pytest.raises(Exception, match="2-dimensional"):
            ellipsoid_contains(region, [0.0, 0.0, 0.0])

    def test_asymmetric_shape_rejected(self):
        S = np.array([[1.0, 0.5], [0.1, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            EllipsoidRegion(center=[0.0, 0.0], shape=S, radius=1.0)

    def test_coverage_conservative_smoke(self):
        # small-scale version of the conservatism gate: n=20, 400 trials
        hits = 0
        good = 0
        for t in range(400):
            sample = gen_gaussian_mixture(20, RngStream(77, t))
            try:
                region = build_ellipsoid(sample, delta=0.05)
            except SeparationError:
                continue
            good += 1
            hits += ellipsoid_contains(region, [0.0, 2.0])
        assert good > 300
        assert hits / good > 0.93
