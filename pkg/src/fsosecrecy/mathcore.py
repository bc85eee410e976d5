"""Numerical building blocks: special functions, entropy, scalar maximization
and adaptive two-dimensional quadrature.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError, NumericError

LN2 = math.log(2.0)

# Smallest grid allowed for the coarse scan that precedes bracketed refinement.
MIN_GRID_POINTS = 64

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`integrate_2d` and the truncation of infinite domains."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_subdivisions: int = 20000
    truncation_quantile: float = 1e-8

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")
        if not 0 < self.truncation_quantile < 0.5:
            raise DomainError("truncation_quantile must lie in (0, 0.5)")


@dataclass(frozen=True)
class OptimizerSpec:
    """Controls for :func:`maximize_scalar`.

    ``bracket_expansion`` is the half-width of the refinement bracket measured
    in coarse-grid steps.
    """

    x_tol: float = 1e-9
    max_iters: int = 200
    bracket_expansion: float = 1.0
    grid_points: int = MIN_GRID_POINTS

    def __post_init__(self):
        if not self.x_tol > 0:
            raise DomainError("x_tol must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if self.bracket_expansion < 1:
            raise DomainError("bracket_expansion must be >= 1")
        if self.grid_points < MIN_GRID_POINTS:
            raise DomainError(f"grid_points must be >= {MIN_GRID_POINTS}")


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

# Above this argument erfc is subnormal; scipy flushes part of that range to 0.
_ERFC_SUBNORMAL_X = 26.5

_math_erfc = np.vectorize(math.erfc, otypes=[float])


def erfc(x):
    """Complementary error function for scalars or arrays.

    Raises :class:`DomainError` on non-finite input.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("erfc requires finite input")
    out = special.erfc(arr)
    deep = arr > _ERFC_SUBNORMAL_X
    if np.any(deep):
        out = np.where(deep, _math_erfc(np.where(deep, arr, 0.0)), out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def binary_entropy(p):
    """Binary entropy in bits, with ``0 log 0 = 0``.

    The result is computed from ``c = max(p, 1 - p)`` so that
    ``binary_entropy(p) == binary_entropy(1 - p)`` holds exactly in floating
    point; the price is an absolute error of order 1e-16 bits for tiny ``p``.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError("binary_entropy requires 0 <= p <= 1")
    c = np.maximum(arr, 1.0 - arr)
    s = 1.0 - c  # exact for c in [1/2, 1]
    out = (special.entr(c) + special.entr(s)) / LN2
    if np.ndim(out) == 0:
        return float(out)
    return out


def positive_part(x):
    """``max(0, x)`` elementwise."""
    out = np.maximum(np.asarray(x, dtype=float), 0.0)
    if np.ndim(out) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# scalar maximization
# ---------------------------------------------------------------------------

class MaximizeResult(NamedTuple):
    x_star: float
    f_star: float


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite objective value during {what}")


def maximize_batch(f: Callable[[np.ndarray], np.ndarray], lo, hi, spec: OptimizerSpec = OptimizerSpec()):
    """Maximize ``m`` independent scalar problems at once.

    ``f`` receives an array of shape ``(m, k)`` (row ``i`` holds trial points
    for problem ``i``) and must return values of the same shape.  Each problem
    is first scanned on a uniform grid over ``[lo[i], hi[i]]``; a golden-section
    search then refines the bracket around the best grid point.

    Returns ``(x_star, f_star)`` as arrays of shape ``(m,)``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    lo, hi = np.broadcast_arrays(lo, hi)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise DomainError("bracket endpoints must be finite")
    if np.any(~(lo < hi)):
        raise DomainError("maximize requires lo < hi")

    n = spec.grid_points
    frac = np.linspace(0.0, 1.0, n)
    step = (hi - lo) / (n - 1)
    grid = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    fgrid = np.asarray(f(grid), dtype=float)
    _check_finite(fgrid, "grid scan")
    rows = np.arange(lo.size)
    best = np.argmax(fgrid, axis=1)
    x_grid = grid[rows, best]
    f_grid = fgrid[rows, best]

    half = spec.bracket_expansion * step
    a = np.maximum(x_grid - half, lo)
    b = np.minimum(x_grid + half, hi)

    def g(x):
        vals = np.asarray(f(x[:, None]), dtype=float)[:, 0]
        _check_finite(vals, "bracketed refinement")
        return vals

    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = g(c), g(d)
    for _ in range(spec.max_iters):
        active = (b - a) > spec.x_tol
        if not active.any():
            break
        left = fc >= fd  # maximum lies in [a, d]
        L = active & left
        R = active & ~left
        b_new = np.where(L, d, b)
        a_new = np.where(R, c, a)
        c_new = np.where(L, b_new - _INV_PHI * (b_new - a_new), np.where(R, d, c))
        d_new = np.where(L, c, np.where(R, a_new + _INV_PHI * (b_new - a_new), d))
        fp = g(np.where(L, c_new, d_new))
        fc, fd = (np.where(L, fp, np.where(R, fd, fc)),
                  np.where(L, fc, np.where(R, fp, fd)))
        a, b, c, d = a_new, b_new, c_new, d_new
    else:
        if np.any((b - a) > spec.x_tol):
            worst = float(np.max(b - a))
            raise ConvergenceError(
                f"bracket width {worst:.3g} still above x_tol after {spec.max_iters} iterations",
                value=float(np.max(np.maximum(fc, fd))),
                err_est=worst,
            )

    x_ref = np.where(fc >= fd, c, d)
    f_ref = np.maximum(fc, fd)
    take_ref = f_ref >= f_grid
    return np.where(take_ref, x_ref, x_grid), np.where(take_ref, f_ref, f_grid)


def maximize_scalar(f: Callable[[float], float], lo: float, hi: float,
                    spec: OptimizerSpec = OptimizerSpec(), vectorized: bool = False) -> MaximizeResult:
    """Maximize a scalar function on ``[lo, hi]``.

    A coarse grid scan picks the bracket, golden-section search refines it to
    ``spec.x_tol``.  Pass ``vectorized=True`` when ``f`` accepts numpy arrays.
    """
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise DomainError(f"invalid bracket [{lo}, {hi}]")
    fv = f if vectorized else np.vectorize(f, otypes=[float])
    x, fx = maximize_batch(fv, lo, hi, spec)
    return MaximizeResult(float(x[0]), float(fx[0]))


# ---------------------------------------------------------------------------
# adaptive 2-D quadrature
# ---------------------------------------------------------------------------

# 15-point Kronrod extension of the 7-point Gauss-Legendre rule on [-1, 1].
_XK_POS = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK_POS = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_POS = np.array([  # Gauss weights at the odd-indexed Kronrod nodes
    0.0, 0.129484966168869693270611432679082,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XK_POS[:-1], _XK_POS[::-1]])
GK_WEIGHTS = np.concatenate([_WK_POS[:-1], _WK_POS[::-1]])
G_WEIGHTS = np.concatenate([_WG_POS[:-1], _WG_POS[::-1]])


class IntegrationResult(NamedTuple):
    value: float
    err_est: float
    subdivisions: int


def _apply_rule(f, x0, x1, y0, y1):
    """Kronrod and Gauss tensor rules on a batch of cells.

    Returns the Kronrod estimate, its error estimate and which axis dominates
    the error (0 for x, 1 for y).
    """
    hx = 0.5 * (x1 - x0)
    hy = 0.5 * (y1 - y0)
    X = (0.5 * (x0 + x1))[:, None] + hx[:, None] * GK_NODES[None, :]
    Y = (0.5 * (y0 + y1))[:, None] + hy[:, None] * GK_NODES[None, :]
    F = np.asarray(f(X[:, :, None], Y[:, None, :]), dtype=float)
    F = np.broadcast_to(F, (x0.size, GK_NODES.size, GK_NODES.size))
    if not np.all(np.isfinite(F)):
        raise NumericError("integrand returned a non-finite value")
    area = hx * hy
    fk_y = F @ GK_WEIGHTS            # Kronrod along y, shape (c, 15)
    fg_y = F @ G_WEIGHTS             # Gauss along y
    kk = area * (fk_y @ GK_WEIGHTS)
    gk = area * (fk_y @ G_WEIGHTS)   # Gauss in x, Kronrod in y
    kg = area * (fg_y @ GK_WEIGHTS)  # Kronrod in x, Gauss in y
    gg = area * (fg_y @ G_WEIGHTS)
    err = np.abs(kk - gg)
    axis = np.where(np.abs(kk - gk) >= np.abs(kk - kg), 0, 1)
    return kk, err, axis


def integrate_2d(f: Callable[[np.ndarray, np.ndarray], np.ndarray], box,
                 spec: QuadratureSpec = QuadratureSpec()) -> IntegrationResult:
    """Adaptive cubature of ``f(x, y)`` over ``box = ((x0, x1), (y0, y1))``.

    ``f`` must accept broadcastable numpy arrays.  Cells are integrated with a
    tensor Gauss-Kronrod 7/15 rule; the cells carrying the largest share of
    the error estimate are bisected along their worse axis until
    ``err_est <= max(abs_tol, rel_tol * |value|)``.

    Raises :class:`ConvergenceError` (carrying the partial value and error
    estimate) once ``spec.max_subdivisions`` bisections have been spent.
    """
    (x0, x1), (y0, y1) = box
    if not all(np.isfinite(v) for v in (x0, x1, y0, y1)) or not (x0 < x1 and y0 < y1):
        raise DomainError(f"invalid integration box {box!r}")

    cx0, cx1 = np.array([float(x0)]), np.array([float(x1)])
    cy0, cy1 = np.array([float(y0)]), np.array([float(y1)])
    val, err, axis = _apply_rule(f, cx0, cx1, cy0, cy1)
    done_val: list[float] = []
    done_err: list[float] = []
    used = 0
    while True:
        total = math.fsum(done_val) + math.fsum(val)
        total_err = math.fsum(done_err) + math.fsum(err)
        if total_err <= max(spec.abs_tol, spec.rel_tol * abs(total)):
            return IntegrationResult(total, total_err, used)
        if used >= spec.max_subdivisions:
            raise ConvergenceError(
                f"integrate_2d: error estimate {total_err:.3g} above tolerance after "
                f"{used} subdivisions", value=total, err_est=total_err)

        # bisect the worst cells covering half of the active error
        order = np.argsort(-err, kind="stable")
        cum = np.cumsum(err[order])
        k = int(np.searchsorted(cum, 0.5 * cum[-1])) + 1
        k = min(k, 512, spec.max_subdivisions - used)
        split = np.zeros(err.size, dtype=bool)
        split[order[:k]] = True
        used += k

        # cells whose error is negligible are retired to keep arrays short
        tiny = ~split & (err <= 1e-3 * max(spec.abs_tol, spec.rel_tol * abs(total)) / max(err.size, 1))
        done_val.extend(val[tiny].tolist())
        done_err.extend(err[tiny].tolist())
        keep = ~split & ~tiny

        sx0, sx1, sy0, sy1, sax = cx0[split], cx1[split], cy0[split], cy1[split], axis[split]
        mx = 0.5 * (sx0 + sx1)
        my = 0.5 * (sy0 + sy1)
        on_x = sax == 0
        # child A: lower half, child B: upper half along the chosen axis
        ax0, ax1 = sx0, np.where(on_x, mx, sx1)
        ay0, ay1 = sy0, np.where(on_x, sy1, my)
        bx0, bx1 = np.where(on_x, mx, sx0), sx1
        by0, by1 = np.where(on_x, sy0, my), sy1
        nx0 = np.concatenate([ax0, bx0])
        nx1 = np.concatenate([ax1, bx1])
        ny0 = np.concatenate([ay0, by0])
        ny1 = np.concatenate([ay1, by1])
        nval, nerr, nax = _apply_rule(f, nx0, nx1, ny0, ny1)

        cx0 = np.concatenate([cx0[keep], nx0])
        cx1 = np.concatenate([cx1[keep], nx1])
        cy0 = np.concatenate([cy0[keep], ny0])
        cy1 = np.concatenate([cy1[keep], ny1])
        val = np.concatenate([val[keep], nval])
        err = np.concatenate([err[keep], nerr])
        axis = np.concatenate([axis[keep], nax])
