import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from fsosecrecy.errors import ConvergenceError, DomainError, NumericError
from fsosecrecy.mathcore import (
    G_WEIGHTS,
    GK_NODES,
    GK_WEIGHTS,
    OptimizerSpec,
    QuadratureSpec,
    binary_entropy,
    erfc,
    integrate_2d,
    maximize_batch,
    maximize_scalar,
    positive_part,
)


class TestErfc:
    def test_known_points(self):
        assert erfc(0.0) == 1.0
        assert erfc(0.5) == pytest.approx(0.4795001221869535, rel=1e-15)
        assert erfc(10.0) < 1e-40

    def test_relative_accuracy_on_normal_range(self):
        mag = np.logspace(-4, math.log10(26.5), 50_000)
        xs = np.concatenate([-mag[mag <= 6], mag])
        got = erfc(xs)
        ref = np.array([float(oracle.erfc(x)) for x in xs])
        assert np.max(np.abs(got - ref) / ref) <= 1e-12

    def test_subnormal_tail_is_ulp_accurate(self):
        # beyond x ~ 26.5 the result is subnormal, so only absolute accuracy is meaningful
        xs = np.linspace(26.5, 27.0, 400)
        ref = np.array([float(oracle.erfc(x)) for x in xs])
        assert np.max(np.abs(erfc(xs) - ref)) <= 20 * 5e-324
        assert np.all(np.diff(erfc(xs)) <= 0)

    @given(st.floats(-30, 30))
    def test_reflection(self, x):
        assert erfc(x) + erfc(-x) == pytest.approx(2.0, abs=4e-16)

    def test_monotone(self):
        v = erfc(np.linspace(-6, 27, 20_001))
        assert np.all(np.diff(v) <= 0)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(DomainError):
            erfc(bad)


class TestBinaryEntropy:
    def test_endpoints_and_center(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0

    @pytest.mark.parametrize("p", [0.3, 0.3085375387, 0.02275013194817921, 0.999])
    def test_against_oracle(self, p):
        assert binary_entropy(p) == pytest.approx(float(oracle.H(p)), rel=1e-13)

    @pytest.mark.parametrize("p", [1e-9, 1e-15, 3e-300])
    def test_tiny_p_absolute_error(self, p):
        # exact symmetry costs relative accuracy here; the absolute error stays at rounding level
        assert abs(binary_entropy(p) - float(oracle.H(p))) <= 1e-15

    def test_value_at_q_half_point(self):
        # independent evaluation gives 0.891478...; see the decisions ledger
        assert binary_entropy(0.3085375387) == pytest.approx(0.8914780791, abs=1e-10)

    @given(st.floats(0.0, 1.0))
    def test_symmetry_is_exact(self, p):
        assert binary_entropy(p) == binary_entropy(1.0 - p)

    @given(st.floats(0.0, 1.0))
    def test_range(self, p):
        assert 0.0 <= binary_entropy(p) <= 1.0

    def test_vectorized(self):
        p = np.array([0.0, 0.1, 0.5])
        np.testing.assert_allclose(binary_entropy(p), [0.0, float(oracle.H(0.1)), 1.0], rtol=1e-14)

    @pytest.mark.parametrize("bad", [-1e-12, 1.0 + 1e-12, math.nan])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            binary_entropy(bad)


@pytest.mark.parametrize("x, want", [(-0.2, 0.0), (0.0, 0.0), (0.7, 0.7)])
def test_positive_part(x, want):
    assert positive_part(x) == want


def _brute_argmax(f, lo, hi, levels=3, n=2001):
    for _ in range(levels):
        xs = np.linspace(lo, hi, n)
        i = int(np.argmax(f(xs)))
        step = (hi - lo) / (n - 1)
        lo, hi = max(lo, xs[i] - step), min(hi, xs[i] + step)
    return xs[i]


class TestMaximize:
    def test_quadratic(self):
        x, fx = maximize_scalar(lambda x: -(x - 1.0) ** 2, 0.0, 2.0)
        assert abs(x - 1.0) <= 1e-9
        assert fx == pytest.approx(0.0, abs=1e-17)

    def test_constant(self):
        x, fx = maximize_scalar(lambda x: 3.0, -1.0, 1.0)
        assert -1.0 <= x <= 1.0
        assert fx == 3.0

    def test_kink_located_to_x_tol(self):
        x, _ = maximize_scalar(lambda x: -abs(x - 0.3141592653), -2.0, 5.0)
        assert abs(x - 0.3141592653) <= 1e-9

    def test_endpoint_maximum(self):
        x, _ = maximize_scalar(lambda x: x, 0.0, 1.0)
        assert x == pytest.approx(1.0, abs=1e-9)

    def test_grid_scan_finds_global_peak(self):
        # narrow tall peak beside a broad low one; bracketing alone would miss it
        f = lambda x: 0.5 * np.exp(-x ** 2) + np.exp(-((x - 3.0) / 0.2) ** 2)
        x, _ = maximize_scalar(f, -5.0, 5.0, vectorized=True)
        assert x == pytest.approx(3.0, abs=1e-3)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-3, 3), st.floats(0.5, 20.0), st.floats(1.0, 3.0))
    def test_concave_matches_brute_force(self, c, a, power):
        f = lambda x: -np.abs(a * (x - c)) ** power
        spec = OptimizerSpec()
        x, _ = maximize_scalar(f, -4.0, 4.0, spec, vectorized=True)
        assert abs(x - _brute_argmax(f, -4.0, 4.0, levels=4)) <= 2 * spec.x_tol

    def test_batch_matches_scalar(self):
        centers = np.array([-0.5, 0.1, 0.9])
        x, fx = maximize_batch(lambda X: -(X - centers[:, None]) ** 2, -1.0, 1.0)
        np.testing.assert_allclose(x, centers, atol=1e-9)

    def test_invalid_bracket(self):
        with pytest.raises(DomainError):
            maximize_scalar(lambda x: x, 1.0, 1.0)
        with pytest.raises(DomainError):
            maximize_scalar(lambda x: x, 0.0, math.inf)

    def test_non_finite_objective(self):
        with pytest.raises(NumericError):
            maximize_scalar(lambda x: math.nan, 0.0, 1.0)

    def test_iteration_budget(self):
        with pytest.raises(ConvergenceError) as info:
            maximize_scalar(lambda x: -(x - 0.3) ** 2, 0.0, 1.0, OptimizerSpec(max_iters=3))
        assert info.value.err_est > 1e-9

    @pytest.mark.parametrize("kw", [{"x_tol": 0.0}, {"max_iters": 0}, {"bracket_expansion": 0.5},
                                    {"grid_points": 10}])
    def test_spec_validation(self, kw):
        with pytest.raises(DomainError):
            OptimizerSpec(**kw)


class TestGaussKronrod:
    def test_weights(self):
        assert GK_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
        assert G_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)

    def test_exactness_degrees(self):
        for k in range(23):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            assert GK_WEIGHTS @ GK_NODES ** k == pytest.approx(exact, abs=1e-15)
            if k <= 13:
                assert G_WEIGHTS @ GK_NODES ** k == pytest.approx(exact, abs=1e-15)


class TestIntegrate2d:
    def test_unit_box(self):
        r = integrate_2d(lambda x, y: np.ones(np.broadcast(x, y).shape), ((0, 1), (0, 1)))
        assert r.value == pytest.approx(1.0, abs=1e-14)

    def test_polynomial(self):
        r = integrate_2d(lambda x, y: x ** 5 * y ** 3 + 2 * x * y, ((0, 2), (-1, 1)))
        assert r.value == pytest.approx(0.0, abs=1e-12)
        r = integrate_2d(lambda x, y: x ** 4 * y ** 2, ((0, 1), (0, 3)))
        assert r.value == pytest.approx(0.2 * 9.0, rel=1e-14)

    def test_gaussian_normalization(self):
        g = lambda x, y: np.exp(-0.5 * (x * x + y * y)) / (2 * math.pi)
        r = integrate_2d(g, ((-8, 8), (-8, 8)))
        truth = math.erf(8 / math.sqrt(2)) ** 2
        assert abs(r.value - truth) <= 1e-10
        assert abs(r.value - truth) <= r.err_est

    @pytest.mark.parametrize("a", [1.0, 5.0, 20.0])
    def test_error_estimate_bounds_true_error(self, a):
        f = lambda x, y: np.cos(a * x) * np.exp(-y)
        truth = math.sin(a) / a * (1 - math.exp(-2))
        r = integrate_2d(f, ((0, 1), (0, 2)))
        assert abs(r.value - truth) <= max(r.err_est, 1e-15)

    def test_convergence_failure_keeps_partial(self):
        f = lambda x, y: np.sqrt(np.abs(x - 0.3337)) * np.ones_like(y)
        with pytest.raises(ConvergenceError) as info:
            integrate_2d(f, ((0, 1), (0, 1)), QuadratureSpec(rel_tol=1e-14, abs_tol=1e-16, max_subdivisions=4))
        assert math.isfinite(info.value.value)
        assert info.value.err_est > 0

    def test_invalid_box(self):
        with pytest.raises(DomainError):
            integrate_2d(lambda x, y: x, ((1, 0), (0, 1)))

    def test_non_finite_integrand(self):
        with pytest.raises(NumericError):
            with np.errstate(divide="ignore"):
                integrate_2d(lambda x, y: 1 / (x - x), ((0, 1), (0, 1)))

    @pytest.mark.parametrize("kw", [{"rel_tol": 0}, {"abs_tol": -1}, {"max_subdivisions": 0},
                                    {"truncation_quantile": 0.5}])
    def test_spec_validation(self, kw):
        with pytest.raises(DomainError):
            QuadratureSpec(**kw)
