"""
Conditional law of the reported value given that the duplicate difference was
rejected (|X1 - X2| > r).

    G(x) = P[(X1 + X3)/2 <= x, X1 - X2 > r, X3 > (X1 + X2)/2]
    g(x) = dG/dx
         = int int 2 f(2x - x1) 1{x2 < x1 - r, x2 < 4x - 3 x1} f(x1) f(x2) dx1 dx2
         = int 2 f(2x - x1) f(x1) F(min(x1 - r, 4x - 3 x1)) dx1
    h(x) = (2 / alpha) (g(x) + g(-x))

g_1d (inner x2 integral done analytically) is the production path; g_2d
integrates the literal indicator form and serves as a cross-check.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from thirdassay import config
from thirdassay import distributions as dist
from thirdassay import quadrature
from thirdassay.distributions import ErrorModel
from thirdassay.exceptions import DomainError, ConvergenceError, InputError
from thirdassay.threshold import r_of_alpha
from thirdassay.utils import check_finite, check_probability

logger = logging.getLogger(__name__)

THRESHOLD_TOL = 1e-10


@dataclass(frozen=True)
class ConditionalSpec:
    """
    Params:
        model      <ErrorModel> : error law of the assays
        alpha      <float>      : rejection rate, 0 < alpha < 1
        r          <float>      : threshold with diff_tail(model, r) = alpha
        truncation <float>      : the real line is replaced by [-T, T]
    """
    model: ErrorModel
    alpha: float
    r: float
    truncation: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'model', ErrorModel.parse(self.model))
        check_probability(self.alpha, 'alpha')
        if not (self.r > 0.0 and math.isfinite(self.r)):
            raise DomainError(f'threshold r must be positive and finite, got {self.r}')
        if abs(dist.diff_tail(self.model, self.r) - self.alpha) > THRESHOLD_TOL:
            raise DomainError(f'r={self.r} does not match alpha={self.alpha} under the {self.model} law')
        if self.truncation is None:
            object.__setattr__(self, 'truncation', config.TRUNCATION[self.model.value])
        if not self.truncation > 0.0:
            raise DomainError(f'truncation must be positive, got {self.truncation}')

    @classmethod
    def from_alpha(cls, model, alpha, truncation=None):
        threshold = r_of_alpha(model, alpha)
        return cls(model=threshold.model, alpha=threshold.alpha, r=threshold.r, truncation=truncation)


@dataclass
class DensityCurve:
    model: ErrorModel
    alpha: float
    xs: np.ndarray
    g_plus: np.ndarray
    g_minus: np.ndarray
    h: np.ndarray
    exceedance: np.ndarray = field(repr=False)

    def to_frame(self):
        return pd.DataFrame({
            'x': self.xs,
            'g_plus': self.g_plus,
            'g_minus': self.g_minus,
            'h': self.h,
            'exceedance': self.exceedance,
        })


def kink_points(spec):
    """Values of x where g or h may fail to be smooth (breakpoints of the x1 integrand colliding)"""
    quarter = 0.25 * spec.r
    return np.array([-3 * quarter, -2 * quarter, -quarter, 0.0, quarter, 2 * quarter, 3 * quarter])


def _x1_breakpoints(spec, xs):
    """Per-x breakpoints of the x1 integrand: kinks of f(2x - x1), f(x1), F(x1 - r), F(4x - 3 x1) and the min switch"""
    T = spec.truncation
    inner = np.stack([
        2.0 * xs,
        np.zeros_like(xs),
        xs + 0.25 * spec.r,
        np.full_like(xs, spec.r),
        4.0 * xs / 3.0,
    ], axis=1)
    inner = np.sort(np.clip(inner, -T, T), axis=1)
    ends = np.full((xs.size, 1), T)
    return np.hstack([-ends, inner, ends])


def _g_integrand(spec, x, x1):
    upper = np.minimum(x1 - spec.r, 4.0 * x - 3.0 * x1)
    return 2.0 * dist.pdf(spec.model, 2.0 * x - x1) * dist.pdf(spec.model, x1) * dist.cdf(spec.model, upper)


def g_1d(spec, x, tol=config.G_TOL):
    """
    g(x, alpha) from the one-dimensional form. Accepts a scalar or an array of
    any shape; all points are integrated together in one batch.
    """
    x_arr = check_finite(x, 'x')
    xs = x_arr.ravel()

    if xs.size == 0:
        return x_arr.copy()

    edges = _x1_breakpoints(spec, xs)

    def integrand(nodes, rows):
        return _g_integrand(spec, xs[rows][:, None, None], nodes)

    result = quadrature.integrate_batch(integrand, edges, tol=tol)
    values = result.value.reshape(x_arr.shape)

    return float(values) if np.ndim(x) == 0 else values


def g_2d(spec, x, tol=config.G_TOL):
    """
    g(x, alpha) by direct 2-D quadrature of the indicator form over [-T, T]^2.
    The jump of the indicator in x2 is located by bisection, not analytically;
    the outer pass starts from the x1 kinks that the 1-D form uses, plus the
    points where the indicator region leaves [-T, T].
    """
    x = float(check_finite(x, 'x'))
    T = spec.truncation
    region = quadrature.Rectangle(-T, T, -T, T)
    x1_points = np.concatenate([_x1_breakpoints(spec, np.array([x]))[0], [spec.r - T, (4.0 * x + T) / 3.0]])

    def integrand(x1, x2s):
        weight = 2.0 * dist.pdf(spec.model, 2.0 * x - x1) * dist.pdf(spec.model, x1)
        if weight == 0.0:
            return np.zeros_like(x2s)
        inside = (x2s < x1 - spec.r) & (x2s < 4.0 * x - 3.0 * x1)
        return weight * dist.pdf(spec.model, x2s) * inside

    result = quadrature.integrate_2d(integrand, region, tol=tol, x_points=x1_points, y_points=[0.0])
    logger.debug('g_2d(%s, x=%g): %.3e (%d evaluations)', spec.model, x, result.value, result.evaluations)

    return result.value


def h(spec, x, tol=config.G_TOL):
    """Conditional density of the reported value at x, to an absolute tolerance `tol`"""
    x_arr = check_finite(x, 'x')
    # h sums two g values scaled by 2 / alpha
    g = g_1d(spec, np.concatenate([x_arr.ravel(), -x_arr.ravel()]), tol=0.25 * spec.alpha * tol)
    n = x_arr.size
    density = ((2.0 / spec.alpha) * (g[:n] + g[n:])).reshape(x_arr.shape)

    return float(density) if np.ndim(x) == 0 else density


def _piece_integrals(func, knots, tol, max_width=0.25, max_rounds=6):
    """
    Integrals of func over consecutive [knots[k], knots[k+1]], each piece cut
    into panels no wider than max_width; the panel width is halved until the
    summed Gauss-Kronrod error estimate is below tol.
    """
    lengths = np.diff(knots)
    width = max_width

    for _ in range(max_rounds):
        counts = np.maximum(1, np.ceil(lengths / width).astype(int))
        piece = np.repeat(np.arange(lengths.size), counts)
        offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
        within = np.arange(piece.size) - offsets[piece]

        lefts = knots[piece] + lengths[piece] * within / counts[piece]
        rights = knots[piece] + lengths[piece] * (within + 1) / counts[piece]
        values, errors, _ = quadrature.gauss_kronrod(func, lefts, rights)

        total_err = float(errors.sum())
        if total_err <= tol:
            return np.bincount(piece, weights=values, minlength=lengths.size), total_err

        logger.debug('piece integrals: error %.2e > %.2e, halving panel width to %g', total_err, tol, width / 2)
        width /= 2.0

    raise ConvergenceError(f'piecewise integration did not reach tol {tol:.3e}', best=total_err)


def exceedance(spec, x, tol=1e-9):
    """
    P(reported value > x | rejection) = int_x^T h(t) dt, for a scalar or an
    array of x. All requested points share one pass: the tail is accumulated
    from T downwards over the sorted points (plus the kinks of h).
    """
    x_arr = check_finite(x, 'x')
    T = spec.truncation
    clipped = np.clip(x_arr.ravel(), -T, T)

    kinks = kink_points(spec)
    knots = np.unique(np.concatenate([clipped, kinks[np.abs(kinks) < T], [T]]))
    if knots.size == 1:
        tails = np.zeros(1)
    else:
        pieces, _ = _piece_integrals(lambda t: h(spec, t), knots, tol)
        tails = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])

    values = tails[np.searchsorted(knots, clipped)].reshape(x_arr.shape)
    values = np.clip(values, 0.0, 1.0)

    return float(values) if np.ndim(x) == 0 else values


def curve(spec, grid, tol=config.G_TOL, exceedance_tol=1e-9):
    """
    Evaluate g(x), g(-x), h(x) and the exceedance probability on a grid
    (the data behind the density, g-separation and exceedance figures).
    """
    xs = check_finite(grid, 'grid').ravel()
    if xs.size == 0:
        raise InputError('grid must not be empty')
    if np.any(np.diff(xs) <= 0.0):
        raise InputError('grid must be strictly increasing')

    support = np.unique(np.concatenate([xs, -xs]))
    logger.info('Evaluating g on %d points (%s, alpha=%g)', support.size, spec.model, spec.alpha)
    g_support = g_1d(spec, support, tol=tol)

    g_plus = g_support[np.searchsorted(support, xs)]
    g_minus = g_support[np.searchsorted(support, -xs)]
    density = (2.0 / spec.alpha) * (g_plus + g_minus)

    logger.info('Integrating exceedance probabilities (%s)', spec.model)
    tail = exceedance(spec, xs, tol=exceedance_tol)

    return DensityCurve(model=spec.model, alpha=spec.alpha, xs=xs,
                        g_plus=g_plus, g_minus=g_minus, h=density, exceedance=tail)


def cumulative(curve):
    """G(x, alpha) on the curve grid, accumulated from the g values by the trapezoid rule"""
    return cumulative_trapezoid(curve.g_plus, curve.xs, initial=0.0)


def separation(curve):
    """Distance between the peaks of g(x) and g(-x) on the grid"""
    return float(abs(curve.xs[np.argmax(curve.g_plus)] - curve.xs[np.argmax(curve.g_minus)]))


@dataclass(frozen=True)
class ShapeSummary:
    model: ErrorModel
    alpha: float
    modes: tuple
    argmax: float
    h_at_zero: Optional[float]
    h_max: float

    @property
    def n_modes(self):
        return len(self.modes)

    @property
    def bimodal(self):
        return self.n_modes >= 2


def shape_summary(curve, rel_floor=1e-6):
    """Grid modes of h; maxima below rel_floor * max(h) are treated as numerical noise"""
    values = curve.h
    h_max = float(values.max())

    left_ok = np.concatenate([[False], values[1:] > values[:-1]])
    right_ok = np.concatenate([values[:-1] >= values[1:], [False]])
    is_mode = left_ok & right_ok & (values > rel_floor * h_max)

    zero_idx = np.flatnonzero(curve.xs == 0.0)
    h_at_zero = float(values[zero_idx[0]]) if zero_idx.size else None

    return ShapeSummary(model=curve.model, alpha=curve.alpha,
                        modes=tuple(float(x) for x in curve.xs[is_mode]),
                        argmax=float(curve.xs[np.argmax(values)]),
                        h_at_zero=h_at_zero, h_max=h_max)


def shape_sweep(model, alphas, grid, tol=config.G_TOL):
    """Modality of h over a range of alpha (records shape only, asserts nothing)"""
    rows = []
    for alpha in alphas:
        spec = ConditionalSpec.from_alpha(model, alpha)
        xs = np.asarray(grid, dtype=float)
        support = np.unique(np.concatenate([xs, -xs]))
        g_support = g_1d(spec, support, tol=tol)
        g_plus = g_support[np.searchsorted(support, xs)]
        g_minus = g_support[np.searchsorted(support, -xs)]
        density = (2.0 / spec.alpha) * (g_plus + g_minus)

        summary = shape_summary(DensityCurve(model=spec.model, alpha=spec.alpha, xs=xs, g_plus=g_plus,
                                             g_minus=g_minus, h=density, exceedance=np.full_like(xs, np.nan)))
        rows.append({
            'model': spec.model.value,
            'alpha': alpha,
            'r': spec.r,
            'n_modes': summary.n_modes,
            'modes': ' '.join(f'{m:g}' for m in summary.modes),
            'h_at_zero': summary.h_at_zero,
            'h_max': summary.h_max,
        })

    return pd.DataFrame(rows)
