import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from fsosecrecy.channel import LinkParams, channel_capacity_fixed_fading, threshold_mi
from fsosecrecy.errors import DomainError, NumericError
from fsosecrecy.mathcore import OptimizerSpec
from fsosecrecy.secrecy import (
    FadingPairRealization,
    Method,
    SecrecyResult,
    awgn_secrecy_lower_bound,
    half_input_information_logit,
    instantaneous_lower_bound,
    instantaneous_secrecy_capacity,
    lower_bound_snr,
    mi_threshold_derivative,
    secrecy_capacity_snr,
    secrecy_rate_fixed_thresholds,
    verify_lemma1,
)

UNIT = FadingPairRealization(1.0, 1.0)
LB_4_1 = float(oracle.lower_bound(4, 1))


def test_reference_bound_value():
    # H(Q(0.5)) - H(Q(2)) evaluated at 40 digits
    assert LB_4_1 == pytest.approx(0.7348629930, abs=1e-10)


class TestLowerBound:
    def test_reference_point(self):
        assert instantaneous_lower_bound(LinkParams(4.0), LinkParams(1.0), UNIT) == pytest.approx(LB_4_1, abs=1e-14)

    def test_identical(self):
        assert instantaneous_lower_bound(LinkParams(2.0), LinkParams(2.0), UNIT) == 0.0

    def test_clamped(self):
        assert instantaneous_lower_bound(LinkParams(0.0), LinkParams(4.0), UNIT) == 0.0

    @settings(max_examples=100)
    @given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
    def test_against_oracle(self, b, e):
        assert lower_bound_snr(b, e) == pytest.approx(float(oracle.lower_bound(b, e)), abs=1e-14)

    def test_monotone(self):
        h = np.linspace(0.0, 5.0, 201)
        up = lower_bound_snr(2.0 * h, 1.0)
        down = lower_bound_snr(3.0, 2.0 * h)
        assert np.all(np.diff(up) >= 0)
        assert np.all(np.diff(down) <= 0)

    def test_awgn(self):
        assert awgn_secrecy_lower_bound(LinkParams(4.0), LinkParams(1.0)) == pytest.approx(LB_4_1, abs=1e-14)
        assert awgn_secrecy_lower_bound(LinkParams(3.0), LinkParams(3.0)) == 0.0
        assert awgn_secrecy_lower_bound(LinkParams(0.0), LinkParams(1.0)) == 0.0


class TestFixedThresholds:
    def test_halfway_reference(self):
        res = secrecy_rate_fixed_thresholds(LinkParams(4.0), LinkParams(1.0), UNIT, 2.0, 0.5)
        assert res.value == pytest.approx(LB_4_1, abs=1e-9)
        assert res.q_star == pytest.approx(0.5, abs=1e-6)
        assert res.method is Method.FIXED_THRESHOLDS

    def test_identical_channels(self):
        res = secrecy_rate_fixed_thresholds(LinkParams(2.0), LinkParams(2.0), UNIT, 0.7, 0.7)
        assert res.value == 0.0

    def test_non_finite_threshold(self):
        with pytest.raises(DomainError):
            secrecy_rate_fixed_thresholds(LinkParams(2.0), LinkParams(1.0), UNIT, np.nan, 0.5)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.05, 40.0), st.floats(0.05, 40.0))
    def test_halfway_equals_bound(self, b, e):
        res = secrecy_rate_fixed_thresholds(LinkParams(b), LinkParams(e), UNIT, b / 2, e / 2)
        assert res.value == pytest.approx(float(lower_bound_snr(b, e)), abs=1e-9)


def _brute_secrecy(b, e, nq=257, nt=4001):
    """Grid value of max_q [max_tb I_b - max_te I_e] with a local zoom in q."""
    def inner(qs, snr):
        ts = np.linspace(-snr, 2 * snr, nt)[None, :]
        return np.max(threshold_mi(qs[:, None], snr, ts), axis=1)

    qs = np.linspace(0, 1, nq)
    v = inner(qs, b) - inner(qs, e)
    i = int(np.argmax(v))
    qz = np.linspace(qs[max(i - 1, 0)], qs[min(i + 1, nq - 1)], nq)
    return max(float(v[i]), float(np.max(inner(qz, b) - inner(qz, e))))


class TestExactCapacity:
    def test_reference_point(self):
        res = instantaneous_secrecy_capacity(LinkParams(4.0), LinkParams(1.0), UNIT)
        assert res.value >= LB_4_1 - 1e-9
        assert res.value == pytest.approx(_brute_secrecy(4.0, 1.0), abs=1e-6)
        assert res.method is Method.EXACT

    @pytest.mark.parametrize("b, e", [(3.0, 0.5), (6.0, 4.0), (1.0, 0.8)])
    def test_against_brute_force(self, b, e):
        v = float(secrecy_capacity_snr(b, e)[0][0])
        assert v == pytest.approx(_brute_secrecy(b, e), abs=1e-6)
        assert v >= float(lower_bound_snr(b, e)) - 1e-9

    def test_identical_channels(self):
        res = instantaneous_secrecy_capacity(LinkParams(2.0), LinkParams(2.0), FadingPairRealization(0.7, 0.7))
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_blind_eve_gives_bob_capacity(self):
        res = instantaneous_secrecy_capacity(LinkParams(2.0), LinkParams(0.0), UNIT)
        assert res.value == pytest.approx(channel_capacity_fixed_fading(LinkParams(2.0), 1.0).capacity, abs=1e-12)

    def test_weaker_bob_is_flagged(self):
        res = instantaneous_secrecy_capacity(LinkParams(1.0), LinkParams(2.0), UNIT)
        assert "bob_snr_below_eve" in res.notes
        assert 0.0 <= res.value <= 1.0

    def test_dominates_bound(self):
        rng = np.random.default_rng(11)
        b, e = 10 ** rng.uniform(-1, 1.5, 30), 10 ** rng.uniform(-1, 1.5, 30)
        v = secrecy_capacity_snr(b, e)[0]
        assert np.all(v >= lower_bound_snr(b, e) - 1e-6)
        assert np.all((v >= 0) & (v <= 1))

    def test_threshold_scaling(self):
        res = instantaneous_secrecy_capacity(LinkParams(8.0, 2.0), LinkParams(2.0, 2.0), UNIT)
        assert res.tau_b_star == pytest.approx(4.0, rel=1e-5)
        assert res.tau_e_star == pytest.approx(1.0, rel=1e-5)

    def test_negative_value_rejected(self):
        with pytest.raises(NumericError):
            SecrecyResult(-0.1, 0.5, 0.0, 0.0, Method.EXACT)

    def test_bad_realization(self):
        with pytest.raises(DomainError):
            FadingPairRealization(-1.0, 1.0)


class TestHalfwayThreshold:
    @pytest.mark.parametrize("g", [2.0, 0.1])
    def test_halfway_is_argmax(self, g):
        res = verify_lemma1(LinkParams(g), 1.0)
        assert res.deviation <= 1e-6
        assert res.tau_star == pytest.approx(g / 2, rel=1e-6)

    def test_brute_force_grid(self):
        # dense grid on the logit, then a local zoom
        g = 0.1
        ts = np.linspace(0.0, g, 1_000_001)
        i = int(np.argmax(half_input_information_logit(g, ts)))
        assert ts[i] == pytest.approx(g / 2, abs=2 * g / 1e6)

    def test_derivative_vanishes(self):
        rng = np.random.default_rng(23)
        for g in rng.uniform(1e-6, 20.0, 100):
            link = LinkParams(g)
            assert abs(mi_threshold_derivative(link, 1.0, g / 2)) <= 1e-10

    def test_derivative_matches_finite_difference(self):
        link = LinkParams(2.0)
        for tau in (0.3, 0.8, 1.6):
            step = 1e-5
            fd = (threshold_mi(0.5, 2.0, tau + step) - threshold_mi(0.5, 2.0, tau - step)) / (2 * step)
            assert mi_threshold_derivative(link, 1.0, tau) == pytest.approx(float(fd), rel=1e-6)

    def test_logit_is_monotone_transform(self):
        ts = np.linspace(0.1, 1.9, 50)
        f = threshold_mi(0.5, 2.0, ts)
        logit = half_input_information_logit(2.0, ts)
        np.testing.assert_allclose(logit, np.log(f) - np.log1p(-f), rtol=1e-9)

    def test_log_grid(self):
        worst = max(verify_lemma1(LinkParams(g), 1.0, OptimizerSpec()).deviation for g in np.logspace(-2, 2, 25))
        assert worst <= 1e-5

    def test_requires_signal(self):
        with pytest.raises(DomainError):
            verify_lemma1(LinkParams(0.0), 1.0)
