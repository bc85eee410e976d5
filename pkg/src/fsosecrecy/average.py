"""Average (ergodic) secrecy rates over the correlated log-normal fading law.

The lower bound is integrated by adaptive cubature and, independently, by
plain Monte Carlo.  The exact average needs a nested optimization per fading
state and is only estimated by Monte Carlo.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special

from .channel import LinkParams
from .errors import ConvergenceError, DomainError, EstimationError, NumericError
from .fading import SAMPLE_CHUNK, CorrelatedFadingPair, joint_lognormal_pdf, sample_log_fading_pair
from .mathcore import OptimizerSpec, QuadratureSpec, integrate_2d
from .secrecy import lower_bound_snr, secrecy_capacity_snr

log = logging.getLogger(__name__)

MIN_MC_SAMPLES = 1000
DEFAULT_LB_SAMPLES = 10 ** 6
DEFAULT_EXACT_SAMPLES = 10 ** 4
MAX_FAILURE_FRACTION = 1e-3

# fading states handed to the nested optimizer at once
_EXACT_BLOCK = 128


class EstimateMethod(str, enum.Enum):
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class ScenarioConfig:
    link_b: LinkParams
    link_e: LinkParams
    fading: CorrelatedFadingPair
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    opt: OptimizerSpec = field(default_factory=OptimizerSpec)


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    err_est: float
    method: EstimateMethod
    n_samples_or_subdivisions: int

    def __post_init__(self):
        if not self.err_est >= 0:
            raise NumericError("err_est must be >= 0")


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _normal_quantiles(mean: float, sd: float, tail: float) -> tuple[float, float]:
    z = float(special.ndtri(1.0 - tail))
    return mean - z * sd, mean + z * sd


def average_secrecy_lower_bound(cfg: ScenarioConfig) -> EstimateWithError:
    """Average of the halfway-threshold secrecy bound by adaptive cubature.

    Integration runs in log-irradiance coordinates ``(s, t_e)`` with
    ``s = t_b - t_e + ln(snr_b / snr_e)``.  The bound is positive exactly when
    ``s > 0``, so its kink sits on the box edge and the integrand is smooth
    inside.  Each axis is truncated at the ``truncation_quantile`` tails of its
    Gaussian marginal; the neglected mass (at most four tails, integrand at
    most 1 bit) is added to the error estimate.
    """
    gb, ge = cfg.link_b.snr, cfg.link_e.snr
    pair = cfg.fading
    tail = cfg.quad.truncation_quantile
    if gb == 0.0:
        return EstimateWithError(0.0, 0.0, EstimateMethod.QUADRATURE, 0)

    bob, eve, rho = pair.bob, pair.eve, pair.rho
    te_box = _normal_quantiles(eve.mu_T, eve.sigma_T, tail)

    if ge == 0.0:
        # Eve learns nothing: the bound is positive everywhere, no kink
        tb_box = _normal_quantiles(bob.mu_T, bob.sigma_T, tail)

        def integrand(t_b, t_e):
            h_b, h_e = np.exp(t_b), np.exp(t_e)
            return lower_bound_snr(gb * h_b, 0.0 * h_e) * joint_lognormal_pdf(pair, h_b, h_e) * h_b * h_e

        box = (tb_box, te_box)
    else:
        shift = math.log(gb / ge)
        s_mean = bob.mu_T - eve.mu_T + shift
        s_sd = math.sqrt(bob.sigma_T2 + eve.sigma_T2 - 2.0 * rho * bob.sigma_T * eve.sigma_T)
        s_lo, s_hi = _normal_quantiles(s_mean, s_sd, tail)
        if s_hi <= 0.0:
            return EstimateWithError(0.0, 4.0 * tail, EstimateMethod.QUADRATURE, 0)
        s_lo = max(s_lo, 0.0)

        def integrand(s, t_e):
            h_b, h_e = np.exp(s + t_e - shift), np.exp(t_e)
            return lower_bound_snr(gb * h_b, ge * h_e) * joint_lognormal_pdf(pair, h_b, h_e) * h_b * h_e

        box = ((s_lo, s_hi), te_box)

    res = integrate_2d(integrand, box, cfg.quad)
    return EstimateWithError(res.value, res.err_est + 4.0 * tail, EstimateMethod.QUADRATURE, res.subdivisions)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def _check_samples(n: int) -> None:
    if n < MIN_MC_SAMPLES:
        raise DomainError(f"mc_samples must be >= {MIN_MC_SAMPLES}")


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(values.size))
    return mean, se


def _map_ordered(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def monte_carlo_lower_bound(cfg: ScenarioConfig, mc_samples: int = DEFAULT_LB_SAMPLES, rng_seed: int = 0,
                            workers: int = 1) -> EstimateWithError:
    """Sample mean of the halfway-threshold bound over correlated fading draws."""
    _check_samples(mc_samples)
    t_b, t_e = sample_log_fading_pair(cfg.fading, rng_seed, mc_samples)
    gb, ge = cfg.link_b.snr, cfg.link_e.snr
    starts = range(0, mc_samples, SAMPLE_CHUNK)

    def chunk(lo):
        hi = min(mc_samples, lo + SAMPLE_CHUNK)
        return lower_bound_snr(gb * np.exp(t_b[lo:hi]), ge * np.exp(t_e[lo:hi]))

    values = np.concatenate(_map_ordered(chunk, starts, workers))
    mean, se = _mean_and_se(values)
    return EstimateWithError(mean, se, EstimateMethod.MONTE_CARLO, mc_samples)


def _exact_values(snr_hb: np.ndarray, snr_he: np.ndarray, opt: OptimizerSpec):
    """Secrecy capacity per fading state; failed states come back as NaN."""
    try:
        return secrecy_capacity_snr(snr_hb, snr_he, opt)[0]
    except NumericError:
        out = np.empty(snr_hb.size)
        for i in range(snr_hb.size):
            try:
                out[i] = secrecy_capacity_snr(snr_hb[i], snr_he[i], opt)[0][0]
            except NumericError as exc:
                log.warning("secrecy capacity failed at snr_hb=%g snr_he=%g: %s", snr_hb[i], snr_he[i], exc)
                out[i] = np.nan
        return out


def exact_capacity_samples(cfg: ScenarioConfig, mc_samples: int, rng_seed: int, workers: int = 1):
    """Per-sample exact and lower-bound secrecy values on a common set of draws.

    Returns ``(exact, lower_bound)`` arrays; failed exact evaluations are NaN.
    """
    _check_samples(mc_samples)
    t_b, t_e = sample_log_fading_pair(cfg.fading, rng_seed, mc_samples)
    snr_hb = cfg.link_b.snr * np.exp(t_b)
    snr_he = cfg.link_e.snr * np.exp(t_e)
    starts = range(0, mc_samples, _EXACT_BLOCK)

    def block(lo):
        hi = min(mc_samples, lo + _EXACT_BLOCK)
        return _exact_values(snr_hb[lo:hi], snr_he[lo:hi], cfg.opt)

    exact = np.concatenate(_map_ordered(block, starts, workers))
    return exact, lower_bound_snr(snr_hb, snr_he)


def _finite_or_fail(values: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(values)
    n_bad = int(bad.sum())
    if n_bad > MAX_FAILURE_FRACTION * values.size:
        raise EstimationError(f"{n_bad} of {values.size} samples failed (limit {MAX_FAILURE_FRACTION:.1%})")
    if n_bad:
        log.warning("%d of %d fading samples failed and were dropped", n_bad, values.size)
    return values[~bad]


def average_secrecy_capacity_exact(cfg: ScenarioConfig, mc_samples: int = DEFAULT_EXACT_SAMPLES,
                                   rng_seed: int = 0, workers: int = 1) -> EstimateWithError:
    """Monte Carlo estimate of the average of the exact instantaneous secrecy
    capacity.

    Raises :class:`EstimationError` when more than 0.1% of the inner
    optimizations fail.
    """
    exact, _ = exact_capacity_samples(cfg, mc_samples, rng_seed, workers)
    good = _finite_or_fail(exact)
    mean, se = _mean_and_se(good)
    return EstimateWithError(mean, se, EstimateMethod.MONTE_CARLO, good.size)


class GapReport(NamedTuple):
    exact: EstimateWithError
    lower_bound: EstimateWithError
    gap: float
    gap_err: float


def exact_vs_lower_bound(cfg: ScenarioConfig, mc_samples: int = DEFAULT_EXACT_SAMPLES, rng_seed: int = 0,
                         workers: int = 1) -> GapReport:
    """Exact average and lower bound on the same draws, with the paired gap.

    Pairing the two estimators on common samples makes the standard error of
    the gap much smaller than the combined error of two independent runs.
    """
    exact, lb = exact_capacity_samples(cfg, mc_samples, rng_seed, workers)
    ok = np.isfinite(exact)
    _finite_or_fail(exact)
    e_mean, e_se = _mean_and_se(exact[ok])
    l_mean, l_se = _mean_and_se(lb[ok])
    g_mean, g_se = _mean_and_se(exact[ok] - lb[ok])
    n = int(ok.sum())
    return GapReport(
        EstimateWithError(e_mean, e_se, EstimateMethod.MONTE_CARLO, n),
        EstimateWithError(l_mean, l_se, EstimateMethod.MONTE_CARLO, n),
        g_mean,
        g_se,
    )


__all__ = [
    "ConvergenceError",
    "EstimateMethod",
    "EstimateWithError",
    "GapReport",
    "ScenarioConfig",
    "average_secrecy_capacity_exact",
    "average_secrecy_lower_bound",
    "exact_capacity_samples",
    "exact_vs_lower_bound",
    "monte_carlo_lower_bound",
]
