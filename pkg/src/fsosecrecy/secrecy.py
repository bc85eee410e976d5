"""Secrecy rates for a fixed pair of fading states.

Bob and Eve each see a threshold-detected OOK channel driven by the same
input.  Alice picks the input law ``q`` and Bob's threshold, Eve always
answers with her best threshold for that ``q``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

from .channel import (
    LinkParams,
    best_threshold,
    halfway_crossover_snr,
    threshold_bracket,
    threshold_mi,
    two_stage_q_search,
)
from .errors import DomainError, NumericError
from .mathcore import LN2, OptimizerSpec, binary_entropy, maximize_scalar, positive_part

# Derivative of the q = 1/2 information at the halfway threshold must vanish to this.
HALFWAY_DERIVATIVE_TOL = 1e-10


class Method(str, enum.Enum):
    EXACT = "exact"
    LOWER_BOUND = "lower_bound"
    FIXED_THRESHOLDS = "fixed_thresholds"


@dataclass(frozen=True)
class FadingPairRealization:
    """Mean-normalized irradiances seen by Bob and Eve during one codeword."""

    h_b: float
    h_e: float

    def __post_init__(self):
        if not (self.h_b >= 0 and self.h_e >= 0):
            raise DomainError("fading realizations must be >= 0")


@dataclass(frozen=True)
class SecrecyResult:
    value: float
    q_star: float
    tau_b_star: float
    tau_e_star: float
    method: Method
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.value >= 0:
            raise NumericError(f"secrecy value {self.value} is negative")


def _notes(link_b: LinkParams, link_e: LinkParams, pair: FadingPairRealization) -> tuple[str, ...]:
    if link_b.snr * pair.h_b < link_e.snr * pair.h_e:
        # the capacity interpretation assumes Bob is the more capable receiver
        return ("bob_snr_below_eve",)
    return ()


# ---------------------------------------------------------------------------
# closed-form lower bound
# ---------------------------------------------------------------------------

def lower_bound_snr(snr_hb, snr_he):
    """``[H(eps_e) - H(eps_b)]^+`` from the products ``snr * h`` (vectorized)."""
    eb = halfway_crossover_snr(snr_hb)
    ee = halfway_crossover_snr(snr_he)
    return positive_part(binary_entropy(ee) - binary_entropy(eb))


def instantaneous_lower_bound(link_b: LinkParams, link_e: LinkParams, pair: FadingPairRealization) -> float:
    """Secrecy rate reached with uniform input and halfway thresholds."""
    return float(lower_bound_snr(link_b.snr * pair.h_b, link_e.snr * pair.h_e))


def awgn_secrecy_lower_bound(link_b: LinkParams, link_e: LinkParams) -> float:
    """The halfway-threshold bound without fading (``h_b = h_e = 1``)."""
    return instantaneous_lower_bound(link_b, link_e, FadingPairRealization(1.0, 1.0))


# ---------------------------------------------------------------------------
# exact instantaneous secrecy capacity
# ---------------------------------------------------------------------------

def secrecy_capacity_snr(snr_hb, snr_he, opt: OptimizerSpec = OptimizerSpec()):
    """Vectorized secrecy capacity for arrays of ``snr * h`` at Bob and Eve.

    Eve's best threshold depends on ``q`` only, so for each candidate ``q``
    both inner maximizations run once and are subtracted.  Returns arrays
    ``(value, q_star, t_b_star, t_e_star)`` with thresholds in noise units;
    ``value`` is clamped at zero.
    """
    snr_hb, snr_he = np.broadcast_arrays(np.atleast_1d(np.asarray(snr_hb, dtype=float)),
                                         np.atleast_1d(np.asarray(snr_he, dtype=float)))
    snr_hb = snr_hb.ravel()
    snr_he = snr_he.ravel()
    n = snr_hb.size

    def evaluate(Q):
        k = Q.shape[1]
        qs = Q.ravel()
        ib, tb = best_threshold(qs, np.repeat(snr_hb, k), opt)
        ie, te = best_threshold(qs, np.repeat(snr_he, k), opt)
        return (ib - ie).reshape(n, k), (tb.reshape(n, k), te.reshape(n, k))

    value, q_star, (tb, te) = two_stage_q_search(evaluate, n)
    return np.maximum(value, 0.0), q_star, tb, te


def instantaneous_secrecy_capacity(link_b: LinkParams, link_e: LinkParams, pair: FadingPairRealization,
                                   opt: OptimizerSpec = OptimizerSpec()) -> SecrecyResult:
    """``max_{q, tau_b} [ I(X; Y_b) - max_{tau_e} I(X; Y_e) ]``, clamped at 0."""
    v, q, tb, te = secrecy_capacity_snr(link_b.snr * pair.h_b, link_e.snr * pair.h_e, opt)
    return SecrecyResult(
        value=float(v[0]),
        q_star=float(q[0]),
        tau_b_star=float(tb[0]) * link_b.noise_sigma,
        tau_e_star=float(te[0]) * link_e.noise_sigma,
        method=Method.EXACT,
        notes=_notes(link_b, link_e, pair),
    )


def secrecy_rate_fixed_thresholds(link_b: LinkParams, link_e: LinkParams, pair: FadingPairRealization,
                                  tau_b: float, tau_e: float,
                                  opt: OptimizerSpec = OptimizerSpec()) -> SecrecyResult:
    """Best secrecy rate over ``q`` when both thresholds are fixed."""
    if not (math.isfinite(tau_b) and math.isfinite(tau_e)):
        raise DomainError("thresholds must be finite")
    sb, se = link_b.snr * pair.h_b, link_e.snr * pair.h_e
    tb, te = tau_b / link_b.noise_sigma, tau_e / link_e.noise_sigma

    def gap(q):
        return threshold_mi(q, sb, tb) - threshold_mi(q, se, te)

    q_star, best = maximize_scalar(gap, 0.0, 1.0, opt, vectorized=True)
    return SecrecyResult(
        value=max(best, 0.0),
        q_star=q_star,
        tau_b_star=tau_b,
        tau_e_star=tau_e,
        method=Method.FIXED_THRESHOLDS,
        notes=_notes(link_b, link_e, pair),
    )


# ---------------------------------------------------------------------------
# optimality of the halfway threshold at q = 1/2
# ---------------------------------------------------------------------------

def _log_binary_entropy_small(log_eps):
    """``ln H(eps)`` (H in bits) for ``eps <= 1/2`` given ``ln eps``; safe when
    ``eps`` underflows."""
    eps = np.exp(log_eps)
    tiny = eps < 1e-8
    es = np.where(tiny, 0.5, eps)
    # w = -(1 - eps) ln(1 - eps) / eps, which tends to 1 - eps/2 as eps -> 0
    w = np.where(tiny, 1.0 - 0.5 * eps, -(1.0 - es) * np.log1p(-es) / es)
    return log_eps + np.log(-log_eps + w) - math.log(LN2)


def half_input_information_logit(snr_h, t):
    """``ln f - ln(1 - f)`` where ``f`` is the information at ``q = 1/2`` for
    normalized threshold ``t``.

    A monotone transform of ``f`` that stays resolvable both when ``f`` is tiny
    (weak signal) and when ``1 - f`` underflows (strong signal).
    """
    t = np.asarray(t, dtype=float)
    f = threshold_mi(0.5, snr_h, t)
    log_f = np.log(np.maximum(f, 1e-300))

    log_e0 = special.log_ndtr(-t)
    log_e1 = special.log_ndtr(t - snr_h)
    e0, e1 = np.exp(log_e0), np.exp(log_e1)
    # 1 - f = gap(output law) + H(e0)/2 + H(e1)/2, all nonnegative
    hi = np.maximum(log_e0, log_e1)
    lo = np.minimum(log_e0, log_e1)
    with np.errstate(divide="ignore"):
        log_d = hi + np.log(-np.expm1(lo - hi))
        d = e0 - e1
        gap = (d * np.arctanh(np.clip(d, -0.5, 0.5)) + 0.5 * np.log1p(-d * d)) / LN2
        big = np.abs(d) > 0.5
        gap = np.where(big, 1.0 - binary_entropy(np.clip(0.5 + 0.5 * d, 0.0, 1.0)), gap)
        # below ~1e-150 the gap underflows; use its leading term d^2 / (2 ln 2)
        log_gap = np.where(np.abs(d) > 1e-150, np.log(gap), 2.0 * log_d - math.log(2.0 * LN2))
    log_h0 = _log_binary_entropy_small(np.minimum(log_e0, math.log(0.5)))
    log_h1 = _log_binary_entropy_small(np.minimum(log_e1, math.log(0.5)))
    # for thresholds outside [0, snr_h] an error probability exceeds 1/2; use H directly there
    with np.errstate(divide="ignore"):
        log_h0 = np.where(log_e0 > math.log(0.5), np.log(binary_entropy(np.clip(e0, 0, 1))), log_h0)
        log_h1 = np.where(log_e1 > math.log(0.5), np.log(binary_entropy(np.clip(e1, 0, 1))), log_h1)
    half = math.log(0.5)
    log_loss = special.logsumexp(np.stack([log_gap, half + log_h0, half + log_h1]), axis=0)
    return log_f - log_loss


def mi_threshold_derivative(link: LinkParams, h: float, tau):
    """Analytic derivative of the ``q = 1/2`` information with respect to the
    threshold, in bits per unit current."""
    s = link.noise_sigma
    y1 = link.signal_amplitude * h
    tau = np.asarray(tau, dtype=float)
    x0 = tau / s
    x1 = (y1 - tau) / s
    e0 = 0.5 * special.erfc(x0 / math.sqrt(2.0))
    e1 = 0.5 * special.erfc(x1 / math.sqrt(2.0))
    de0 = -np.exp(-0.5 * x0 * x0) / (math.sqrt(2.0 * math.pi) * s)
    de1 = np.exp(-0.5 * x1 * x1) / (math.sqrt(2.0 * math.pi) * s)
    d = e0 - e1
    shared = np.log1p(-d) - np.log1p(d)
    # log-odds from log tail probabilities stay finite when e0 or e1 underflow
    term0 = (shared + special.log_ndtr(-x0) - special.log_ndtr(x0)) * de0
    term1 = (shared + special.log_ndtr(x1) - special.log_ndtr(-x1)) * de1
    out = (term0 - term1) / (2.0 * LN2)
    return float(out) if np.ndim(out) == 0 else out


class HalfwayThresholdCheck(NamedTuple):
    tau_star: float
    deviation: float


def verify_lemma1(link_e: LinkParams, h_e: float, opt: OptimizerSpec = OptimizerSpec()) -> HalfwayThresholdCheck:
    """Numerically locate Eve's best threshold at ``q = 1/2``.

    Returns the argmax and its relative distance from the halfway point
    ``S h / 2``.  Raises :class:`NumericError` if the analytic derivative at
    the halfway point is not zero within ``HALFWAY_DERIVATIVE_TOL``.
    """
    snr_h = link_e.snr * h_e
    if not snr_h > 0:
        raise DomainError("verify_lemma1 needs snr * h > 0")
    lo, hi = threshold_bracket(snr_h)
    t_star, _ = maximize_scalar(lambda t: half_input_information_logit(snr_h, t), float(lo), float(hi),
                                opt, vectorized=True)
    y1 = link_e.signal_amplitude * h_e
    slope = mi_threshold_derivative(link_e, h_e, 0.5 * y1)
    if not abs(slope) <= HALFWAY_DERIVATIVE_TOL:
        raise NumericError(f"derivative at the halfway threshold is {slope:.3g}, not 0")
    tau_star = t_star * link_e.noise_sigma
    return HalfwayThresholdCheck(tau_star, abs(tau_star - 0.5 * y1) / y1)
