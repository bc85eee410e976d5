"""Threshold-detected on-off keying link for a single receiver.

A receiver sees ``Y = S h X + Z`` with ``Z ~ N(0, sigma^2)`` and decides '1'
when ``Y`` exceeds a threshold.  For a fixed fading state this is a binary
asymmetric channel; the functions below give its crossover probabilities,
mutual information and capacity.

Internally thresholds are handled in units of the noise standard deviation,
so a link only enters through the product ``snr * h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import DomainError
from .mathcore import LN2, OptimizerSpec, erfc, maximize_batch

SQRT2 = math.sqrt(2.0)

# q grid used by both refinement stages of the capacity search
Q_GRID_POINTS = 129


@dataclass(frozen=True)
class LinkParams:
    """Deterministic link budget of one receiver.

    ``signal_amplitude`` is the on-state photocurrent without fading and
    ``noise_sigma`` the standard deviation of the receiver noise, both in the
    same (arbitrary) current unit.
    """

    signal_amplitude: float
    noise_sigma: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.signal_amplitude) and self.signal_amplitude >= 0):
            raise DomainError("signal_amplitude must be finite and >= 0")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma > 0):
            raise DomainError("noise_sigma must be finite and > 0")

    @property
    def snr(self) -> float:
        """Average electrical SNR ``S / sigma`` (an amplitude ratio)."""
        return self.signal_amplitude / self.noise_sigma

    @classmethod
    def from_snr(cls, snr: float, noise_sigma: float = 1.0) -> "LinkParams":
        return cls(snr * noise_sigma, noise_sigma)


@dataclass(frozen=True)
class CrossoverPair:
    """``p10 = P(decide 1 | sent 0)`` and ``p01 = P(decide 0 | sent 1)``."""

    p10: float
    p01: float

    def __post_init__(self):
        for name in ("p10", "p01"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}={v} is not a probability")


@dataclass(frozen=True)
class InputDistribution:
    """Probability ``q`` of sending symbol '1'."""

    q: float

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"q={self.q} is not a probability")


def link_from_budget(eta: float, i_tx: float, delta: float, d: float, sigma: float) -> LinkParams:
    """Build a link from responsivity, emitted irradiance and path attenuation."""
    if not sigma > 0:
        raise DomainError("noise sigma must be > 0")
    for name, v in (("eta", eta), ("i_tx", i_tx), ("delta", delta), ("d", d)):
        if not v >= 0:
            raise DomainError(f"{name} must be >= 0")
    return LinkParams(eta * i_tx * math.exp(-delta * d), sigma)


def _check_fading(h) -> None:
    if np.any(~(np.asarray(h) >= 0)):
        raise DomainError("fading realization h must be >= 0")


def crossover_given_threshold(link: LinkParams, h: float, tau: float) -> CrossoverPair:
    """Crossover probabilities for threshold ``tau`` (in current units)."""
    _check_fading(h)
    if not math.isfinite(tau):
        raise DomainError("threshold must be finite")
    s = link.noise_sigma
    y1 = link.signal_amplitude * h
    return CrossoverPair(0.5 * erfc(tau / (SQRT2 * s)), 0.5 * erfc((y1 - tau) / (SQRT2 * s)))


def halfway_crossover(link: LinkParams, h):
    """Symmetric crossover probability when the threshold sits halfway
    between the two expected outputs: ``erfc(snr h / (2 sqrt 2)) / 2``."""
    _check_fading(h)
    return halfway_crossover_snr(link.snr * np.asarray(h, dtype=float))


def halfway_crossover_snr(snr_h):
    """:func:`halfway_crossover` as a function of the product ``snr * h``."""
    return 0.5 * erfc(np.asarray(snr_h, dtype=float) / (2.0 * SQRT2))


# ---------------------------------------------------------------------------
# mutual information
# ---------------------------------------------------------------------------

def _info_gap(u, p, c):
    """``1 - H(p)`` in bits for a binary law ``(p, c)`` with bias ``u = c - p``.

    Near the uniform law the gap is evaluated from the bias directly, which
    keeps full relative precision when the gap itself is tiny.
    """
    u = np.asarray(u, dtype=float)
    small = np.abs(u) <= 0.5
    us = np.where(small, u, 0.0)
    near = (us * np.arctanh(us) + 0.5 * np.log1p(-us * us)) / LN2
    far = 1.0 - (special.entr(p) + special.entr(c)) / LN2
    return np.where(small, near, far)


def _mi_parts(q, p10, c10, u10, p01, c01, u01):
    q = np.asarray(q, dtype=float)
    r = 1.0 - q
    p_one = q * c01 + r * p10
    p_zero = q * p01 + r * c10
    u_out = q * u01 - r * u10
    info = r * _info_gap(u10, p10, c10) + q * _info_gap(u01, p01, c01) - _info_gap(u_out, p_one, p_zero)
    return np.clip(info, 0.0, 1.0)


def mutual_information(q, xo: CrossoverPair) -> float:
    """Mutual information in bits between the input and the decided bit.

    ``q`` is the probability of sending '1' (a float or
    :class:`InputDistribution`).
    """
    if isinstance(q, InputDistribution):
        q = q.q
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q={q} is not a probability")
    return float(mutual_information_array(q, xo.p10, xo.p01))


def mutual_information_array(q, p10, p01):
    """Vectorized mutual information for arrays of ``q``, ``p10`` and ``p01``."""
    p10 = np.asarray(p10, dtype=float)
    p01 = np.asarray(p01, dtype=float)
    return _mi_parts(q, p10, 1.0 - p10, 1.0 - 2.0 * p10, p01, 1.0 - p01, 1.0 - 2.0 * p01)


def threshold_mi(q, snr_h, t):
    """Mutual information for normalized threshold ``t = tau / sigma``.

    Arguments broadcast.  Error probabilities and their biases are taken from
    erf/erfc directly so that nearly useless channels keep relative accuracy.
    """
    x0 = np.asarray(t, dtype=float) / SQRT2
    x1 = (np.asarray(snr_h, dtype=float) - t) / SQRT2
    return _mi_parts(
        q,
        0.5 * special.erfc(x0), 0.5 * special.erfc(-x0), special.erf(x0),
        0.5 * special.erfc(x1), 0.5 * special.erfc(-x1), special.erf(x1),
    )


# ---------------------------------------------------------------------------
# capacity
# ---------------------------------------------------------------------------

def threshold_bracket(snr_h):
    """Search interval ``[-snr_h, 2 snr_h]`` for the normalized threshold."""
    snr_h = np.asarray(snr_h, dtype=float)
    return -snr_h, 2.0 * snr_h


def best_threshold(q, snr_h, opt: OptimizerSpec = OptimizerSpec()):
    """Maximize mutual information over the threshold for each ``(q, snr_h)``.

    ``q`` and ``snr_h`` are broadcast to a common 1-D shape.  Entries with
    ``snr_h == 0`` are answered exactly (zero information, threshold 0).
    Returns ``(info, t_star)`` with ``t_star`` in noise units.
    """
    q, snr_h = np.broadcast_arrays(np.atleast_1d(np.asarray(q, dtype=float)),
                                   np.atleast_1d(np.asarray(snr_h, dtype=float)))
    q = q.ravel()
    snr_h = snr_h.ravel()
    info = np.zeros(q.shape)
    t_star = np.zeros(q.shape)
    live = snr_h > 0
    if live.any():
        ql = q[live][:, None]
        sl = snr_h[live][:, None]
        lo, hi = threshold_bracket(sl[:, 0])
        x, fx = maximize_batch(lambda t: threshold_mi(ql, sl, t), lo, hi, opt)
        info[live] = fx
        t_star[live] = x
    return info, t_star


def two_stage_q_search(evaluate, n: int, q_points: int = Q_GRID_POINTS):
    """Maximize ``evaluate`` over ``q in [0, 1]`` for ``n`` problems at once.

    ``evaluate(Q)`` gets an ``(n, k)`` array of candidate ``q`` and returns
    ``(values, extras)`` where ``extras`` is a tuple of same-shaped arrays
    (optimal thresholds and the like).  A uniform grid is refined once around
    the best point.  Returns ``(value, q_star, extras_at_q_star)``.
    """
    rows = np.arange(n)
    grid = np.broadcast_to(np.linspace(0.0, 1.0, q_points), (n, q_points))
    vals, extras = evaluate(grid)
    i = np.argmax(vals, axis=1)
    best_v, best_q = vals[rows, i], grid[rows, i]
    best_x = tuple(e[rows, i] for e in extras)

    step = 1.0 / (q_points - 1)
    lo = np.clip(best_q - step, 0.0, 1.0)
    hi = np.clip(best_q + step, 0.0, 1.0)
    fine = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, q_points)[None, :]
    fvals, fextras = evaluate(fine)
    j = np.argmax(fvals, axis=1)
    fv = fvals[rows, j]
    better = fv > best_v
    value = np.where(better, fv, best_v)
    q_star = np.where(better, fine[rows, j], best_q)
    ext = tuple(np.where(better, fe[rows, j], be) for fe, be in zip(fextras, best_x))
    return value, q_star, ext


class CapacityResult(NamedTuple):
    capacity: float
    q_star: float
    tau_star: float


def capacity_snr(snr_h, opt: OptimizerSpec = OptimizerSpec()):
    """Vectorized capacity over ``(q, threshold)`` for an array of ``snr * h``.

    Returns ``(capacity, q_star, t_star)`` arrays; thresholds in noise units.
    """
    snr_h = np.atleast_1d(np.asarray(snr_h, dtype=float))
    n = snr_h.size

    def evaluate(Q):
        k = Q.shape[1]
        info, t = best_threshold(Q.ravel(), np.repeat(snr_h, k), opt)
        return info.reshape(n, k), (t.reshape(n, k),)

    cap, q_star, (t_star,) = two_stage_q_search(evaluate, n)
    dead = snr_h == 0
    cap = np.where(dead, 0.0, cap)
    q_star = np.where(dead, 0.5, q_star)
    t_star = np.where(dead, 0.0, t_star)
    return cap, q_star, t_star


def channel_capacity_fixed_fading(link: LinkParams, h: float,
                                  opt: OptimizerSpec = OptimizerSpec()) -> CapacityResult:
    """Capacity ``max_{q, tau} I(X; Y)`` of the link under fading state ``h``."""
    _check_fading(h)
    cap, q, t = capacity_snr(link.snr * h, opt)
    return CapacityResult(float(cap[0]), float(q[0]), float(t[0]) * link.noise_sigma)
