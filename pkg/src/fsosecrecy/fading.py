"""Log-normal turbulence fading for one link and for a correlated Bob/Eve pair."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError

# Largest log-domain correlation accepted when a sweep asks for full correlation.
RHO_CAP = 0.999

# Fixed sampler chunk; results depend on (seed, n) only, never on worker count.
SAMPLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class LogNormalFading:
    """``H = exp(T)`` with ``T ~ N(mu_T, sigma_T2)``.

    ``mu_T`` defaults to ``-sigma_T2 / 2`` so that ``E[H] = 1``.
    """

    sigma_T2: float
    mu_T: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not (math.isfinite(self.sigma_T2) and self.sigma_T2 > 0):
            raise DomainError("Rytov variance sigma_T2 must be > 0")
        if self.mu_T is None:
            object.__setattr__(self, "mu_T", -0.5 * self.sigma_T2)

    @property
    def sigma_T(self) -> float:
        return math.sqrt(self.sigma_T2)

    def log_quantile(self, p):
        """Quantile of ``T = ln H``."""
        return self.mu_T + self.sigma_T * special.ndtri(p)


@dataclass(frozen=True)
class CorrelatedFadingPair:
    """Bob and Eve fading with log-domain correlation ``rho`` in ``[0, 1)``."""

    bob: LogNormalFading
    eve: LogNormalFading
    rho: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f"rho={self.rho} must lie in [0, 1)")

    @classmethod
    def from_variances(cls, sigma_tb2: float, sigma_te2: float, rho: float = 0.0) -> "CorrelatedFadingPair":
        """Mean-normalized pair; full correlation ``rho == 1`` is capped at
        ``RHO_CAP`` with a warning."""
        if rho == 1.0:
            warnings.warn(f"rho={rho} is singular for the joint density; using {RHO_CAP}", stacklevel=2)
            rho = RHO_CAP
        return cls(LogNormalFading(sigma_tb2), LogNormalFading(sigma_te2), rho)


@dataclass(frozen=True)
class TurbulenceBudget:
    """Horizontal path with constant refractive structure index."""

    cn2: float          # m^(-2/3)
    wavelength: float   # m
    path_length: float  # m

    def __post_init__(self):
        if not (self.cn2 > 0 and self.wavelength > 0 and self.path_length > 0):
            raise DomainError("cn2, wavelength and path_length must all be > 0")


def _positive(h, name="h"):
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0)):
        raise DomainError(f"{name} must be > 0")
    return h


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def lognormal_pdf(model: LogNormalFading, h):
    """Density of the irradiance ``H`` at ``h > 0``."""
    h = _positive(h)
    z = (np.log(h) - model.mu_T) / model.sigma_T
    return _scalar(np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi * model.sigma_T2) * h))


def joint_lognormal_pdf(pair: CorrelatedFadingPair, h_b, h_e):
    """Bivariate log-normal density of ``(H_b, H_e)``."""
    h_b = _positive(h_b, "h_b")
    h_e = _positive(h_e, "h_e")
    sb, se, rho = pair.bob.sigma_T, pair.eve.sigma_T, pair.rho
    a = (np.log(h_b) - pair.bob.mu_T) / sb
    b = (np.log(h_e) - pair.eve.mu_T) / se
    one_m = 1.0 - rho * rho
    quad = (a * a - 2.0 * rho * a * b + b * b) / (2.0 * one_m)
    norm = 2.0 * math.pi * sb * se * math.sqrt(one_m)
    return _scalar(np.exp(-quad) / (norm * h_b * h_e))


def log_domain_joint_pdf(pair: CorrelatedFadingPair, t_b, t_e):
    """Density of ``(T_b, T_e) = (ln H_b, ln H_e)``, i.e. the joint irradiance
    density times the Jacobian ``h_b h_e``."""
    sb, se, rho = pair.bob.sigma_T, pair.eve.sigma_T, pair.rho
    a = (np.asarray(t_b, dtype=float) - pair.bob.mu_T) / sb
    b = (np.asarray(t_e, dtype=float) - pair.eve.mu_T) / se
    one_m = 1.0 - rho * rho
    quad = (a * a - 2.0 * rho * a * b + b * b) / (2.0 * one_m)
    return np.exp(-quad) / (2.0 * math.pi * sb * se * math.sqrt(one_m))


def rho_from_rho_h(rho_h: float, sigma_tb: float, sigma_te: float) -> float:
    """Log-domain correlation from the irradiance correlation ``rho_h``.

    ``sigma_tb`` and ``sigma_te`` are standard deviations (not variances).
    """
    arg = rho_h * math.sqrt(math.expm1(sigma_tb ** 2) * math.expm1(sigma_te ** 2)) + 1.0
    if not arg > 0:
        raise DomainError(f"rho_h={rho_h} gives a non-positive log argument")
    rho = math.log(arg) / (sigma_tb * sigma_te)
    if rho < 0:
        raise DomainError(f"rho_h={rho_h} maps to negative rho={rho:.6g}")
    if rho >= 1.0 - 1e-12:
        raise DomainError(f"rho_h={rho_h} maps to rho={rho:.15g}; full correlation is not allowed")
    return rho


def rho_h_from_rho(rho: float, sigma_tb: float, sigma_te: float) -> float:
    """Inverse of :func:`rho_from_rho_h`."""
    return math.expm1(rho * sigma_tb * sigma_te) / math.sqrt(math.expm1(sigma_tb ** 2) * math.expm1(sigma_te ** 2))


def rytov_variance(budget: TurbulenceBudget) -> float:
    """``1.23 Cn^2 k^(7/6) L^(11/6)`` with wave number ``k = 2 pi / lambda``."""
    k = 2.0 * math.pi / budget.wavelength
    return 1.23 * budget.cn2 * k ** (7.0 / 6.0) * budget.path_length ** (11.0 / 6.0)


def _chunk_draws(pair: CorrelatedFadingPair, seed_seq: np.random.SeedSequence, m: int):
    rng = np.random.default_rng(seed_seq)
    z = rng.standard_normal((2, m))
    rho = pair.rho
    t_b = pair.bob.mu_T + pair.bob.sigma_T * z[0]
    t_e = pair.eve.mu_T + pair.eve.sigma_T * (rho * z[0] + math.sqrt(1.0 - rho * rho) * z[1])
    return t_b, t_e


def sample_log_fading_pair(pair: CorrelatedFadingPair, rng_seed: int, n: int):
    """Draw ``n`` correlated pairs ``(T_b, T_e)`` in the log domain.

    The index range is cut into fixed chunks, each with its own child seed
    spawned from ``rng_seed``, so output depends on ``(rng_seed, n)`` only.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    n_chunks = -(-n // SAMPLE_CHUNK)
    children = np.random.SeedSequence(rng_seed).spawn(n_chunks)
    t_b = np.empty(n)
    t_e = np.empty(n)
    for i, child in enumerate(children):
        lo = i * SAMPLE_CHUNK
        hi = min(n, lo + SAMPLE_CHUNK)
        t_b[lo:hi], t_e[lo:hi] = _chunk_draws(pair, child, hi - lo)
    return t_b, t_e


def sample_fading_pair(pair: CorrelatedFadingPair, rng_seed: int, n: int):
    """Draw ``n`` correlated irradiance pairs; returns arrays ``(h_b, h_e)``."""
    t_b, t_e = sample_log_fading_pair(pair, rng_seed, n)
    return np.exp(t_b), np.exp(t_e)
