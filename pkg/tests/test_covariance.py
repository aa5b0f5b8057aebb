"""Covariance generation tests.

Decay-route values are closed-form; density-route values are checked against
independent oracles: scipy's adaptive quadrature, a Fresnel-function closed
form available at rho = 1/2, and the package's own doubled-resolution
verification.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import fresnel

from spectral_lm.covariance import (
    QuadratureError,
    QuadratureParams,
    SlowlyVarying,
    ToeplitzSpec,
    _density_values_complex,
    autocov_decay,
    autocov_density,
    build_toeplitz,
    moment_decay_table,
    slow_variation_ratios,
)


def fresnel_coefficient(k):
    """Exact gamma(k) for rho = 1/2, L = 1: (1/pi) int_0^pi cos(kx)/sqrt(x) dx.

    The substitution x = t^2 turns the integral into a Fresnel cosine
    integral: gamma(k) = sqrt(2 / (pi k)) C(sqrt(2k)).
    """
    s, c = fresnel(math.sqrt(2.0 * k))
    return math.sqrt(2.0 / (math.pi * k)) * c


class TestSlowlyVarying:
    def test_builtin_kinds_positive(self):
        h = np.array([0.0, 1.0, 1e3, 1e9])
        for kind in ("constant", "log_growth", "log_decay"):
            L = SlowlyVarying(kind=kind)
            assert np.all(L(h) > 0)

    def test_slow_variation_ratio_tightens(self):
        # |L(lam h)/L(h) - 1| at h = 1e6 should not exceed the h = 1e3 value;
        # for the slowest built-in (log growth, lam = 2) it is within 10% by 1e6
        for kind in ("constant", "log_growth", "log_decay"):
            rows = slow_variation_ratios(SlowlyVarying(kind=kind))
            for lam in (2.0, 10.0):
                at_1e3 = [d for h, la, d in rows if h == 1e3 and la == lam][0]
                at_1e6 = [d for h, la, d in rows if h == 1e6 and la == lam][0]
                assert at_1e6 <= at_1e3
            at_1e6_doubling = [d for h, la, d in rows if h == 1e6 and la == 2.0][0]
            assert at_1e6_doubling <= 0.10

    def test_custom_requires_evaluator(self):
        with pytest.raises(ValueError):
            SlowlyVarying(kind="custom")

    def test_nonpositive_constant_rejected(self):
        with pytest.raises(ValueError):
            SlowlyVarying(kind="constant", c=0.0)

    def test_json_round_trip(self):
        L = SlowlyVarying(kind="constant", c=2.5)
        assert SlowlyVarying.from_json(L.to_json()) == L


class TestSpecValidation:
    @pytest.mark.parametrize("rho", [0.0, 1.0, -0.1, 1.7])
    def test_rho_endpoints_rejected(self, rho):
        with pytest.raises(ValueError):
            ToeplitzSpec(rho=rho)

    def test_route_checked(self):
        with pytest.raises(ValueError):
            ToeplitzSpec(rho=0.5, route="fourier")

    def test_json_round_trip(self):
        spec = ToeplitzSpec(
            rho=0.3,
            slowly_varying=SlowlyVarying("log_growth"),
            route="density",
            quadrature=QuadratureParams(split=0.02),
        )
        again = ToeplitzSpec.from_json(spec.to_json())
        assert again.rho == spec.rho
        assert again.route == spec.route
        assert again.slowly_varying == spec.slowly_varying
        assert again.quadrature == spec.quadrature


class TestDecayRoute:
    def test_pinned_values(self):
        spec = ToeplitzSpec(rho=0.5)
        assert autocov_decay(spec, 0) == 1.0
        assert autocov_decay(spec, 3) == 0.5
        assert autocov_decay(spec, 99) == pytest.approx(0.1, abs=1e-15)

    def test_column_strictly_decreasing_for_constant_L(self):
        spec = ToeplitzSpec(rho=0.35)
        col = spec.first_column(200)
        assert np.all(col > 0)
        assert np.all(np.diff(col) < 0)

    def test_wrong_route_rejected(self):
        with pytest.raises(ValueError):
            autocov_decay(ToeplitzSpec(rho=0.5, route="density"), 1)


class TestDensityRoute:
    def test_lag_zero_closed_form(self):
        # (1/pi) int_0^pi x^(rho-1) dx = pi^(rho-1) / rho; at rho=1/2: 2/sqrt(pi)
        spec = ToeplitzSpec(rho=0.5, route="density")
        assert autocov_density(spec, 0) == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-12)
        for rho in (0.25, 0.7):
            spec = ToeplitzSpec(rho=rho, route="density")
            assert autocov_density(spec, 0) == pytest.approx(
                math.pi ** (rho - 1.0) / rho, rel=1e-11
            )

    def test_fresnel_oracle_unit_L(self):
        spec = ToeplitzSpec(rho=0.5, route="density")
        col = spec.first_column(300)
        oracle = np.array([fresnel_coefficient(k) for k in range(1, 300)])
        assert np.max(np.abs(col[1:] - oracle) / oracle) < 1e-10

    def test_adaptive_quad_oracle_log_L(self):
        spec = ToeplitzSpec(rho=0.5, slowly_varying=SlowlyVarying("log_growth"), route="density")
        for k in (0, 1, 9, 57):
            ref = quad(
                lambda x: math.log(math.e + 1.0 / x) * x**-0.5 * math.cos(k * x),
                0.0,
                math.pi,
                limit=400,
                points=[0.0],
            )[0] / math.pi
            assert autocov_density(spec, k) == pytest.approx(ref, rel=1e-9)

    def test_evenness_cosine_vs_complex_formulations(self):
        spec = ToeplitzSpec(rho=0.4, slowly_varying=SlowlyVarying("log_decay"), route="density")
        lags = np.arange(0, 513)
        cosine = spec.first_column(513)
        full = _density_values_complex(spec, lags)
        scale = np.abs(cosine)
        assert np.max(np.abs(full.real - cosine) / np.maximum(scale, 1e-10)) < 1e-10
        assert np.max(np.abs(full.imag)) < 1e-12 * np.max(scale)

    def test_negative_lag_matches_positive(self):
        spec = ToeplitzSpec(rho=0.6, route="density")
        assert spec.gamma(-5) == spec.gamma(5)

    def test_quadrature_nonconvergence_signaled(self):
        bad = QuadratureParams(gauss_degree=2, panels_per_lag=0.01, graded_levels=2, rel_tol=1e-14)
        spec = ToeplitzSpec(rho=0.5, route="density", quadrature=bad)
        with pytest.raises(QuadratureError):
            spec.first_column(64)

    def test_repeat_builds_reuse_cache_bit_for_bit(self):
        spec = ToeplitzSpec(rho=0.5, route="density")
        small = spec.first_column(40)
        large = spec.first_column(100)
        assert np.array_equal(small, large[:40])


class TestBuildToeplitz:
    def test_dimension_zero_rejected(self):
        with pytest.raises(ValueError):
            build_toeplitz(ToeplitzSpec(rho=0.5), 0)

    def test_first_column_n2(self):
        T = build_toeplitz(ToeplitzSpec(rho=0.5), 2)
        assert T.first_column == pytest.approx([1.0, 1.0 / math.sqrt(2.0)])

    def test_trace_equals_eigenvalue_sum(self):
        T = build_toeplitz(ToeplitzSpec(rho=0.5), 3)
        eig_sum = float(np.sum(np.linalg.eigvalsh(T.dense())))
        assert eig_sum == pytest.approx(3.0, rel=1e-12)
        assert T.trace() == pytest.approx(3.0)

    def test_density_route_psd(self):
        # full eigendecomposition oracle; the density route is PSD by construction
        T = build_toeplitz(ToeplitzSpec(rho=0.5, route="density"), 64)
        w = np.linalg.eigvalsh(T.dense())
        assert w.min() >= -1e-10 * w.max()

    def test_dense_matches_column(self):
        T = build_toeplitz(ToeplitzSpec(rho=0.3), 5)
        D = T.dense()
        assert np.array_equal(np.diag(D), np.full(5, T.first_column[0]))
        assert D[0, 4] == T.first_column[4]
        assert np.array_equal(D, D.T)

    def test_trace_square_matches_dense(self):
        T = build_toeplitz(ToeplitzSpec(rho=0.45), 37)
        dense = T.dense()
        assert T.trace_square() == pytest.approx(float(np.sum(dense * dense)), rel=1e-13)


class TestMomentDecay:
    def test_first_moment_decreasing_small_rho(self):
        rows = moment_decay_table(ToeplitzSpec(rho=0.4), [256, 512, 1024])
        stats = [r[1] for r in rows]
        assert stats[0] > stats[1] > stats[2]

    def test_second_moment_decreasing_mid_rho(self):
        rows = moment_decay_table(ToeplitzSpec(rho=0.6), [256, 512, 1024])
        stats = [r[2] for r in rows]
        assert stats[0] > stats[1] > stats[2]

    def test_single_dimension_statistic_is_one(self):
        rows = moment_decay_table(ToeplitzSpec(rho=0.5), [1])
        n, s1, s2 = rows[0]
        assert n == 1
        assert s1 == pytest.approx(1.0)
        assert s2 == pytest.approx(1.0)

    def test_sizes_must_increase(self):
        with pytest.raises(ValueError):
            moment_decay_table(ToeplitzSpec(rho=0.5), [256, 128])


def test_first_column_csv_export(tmp_path):
    T = build_toeplitz(ToeplitzSpec(rho=0.5), 4)
    path = tmp_path / "col.csv"
    T.write_column_csv(str(path))
    lines = path.read_bytes().decode().strip().split("\r\n")
    assert lines[0] == "gamma"
    assert [float(v) for v in lines[1:]] == pytest.approx(T.first_column)
