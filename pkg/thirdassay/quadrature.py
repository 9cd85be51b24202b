"""
Adaptive Gauss-Kronrod quadrature (15-point Kronrod rule embedding the 7-point
Gauss rule) in one and two dimensions.

Integrands are vectorized: they receive an array of nodes and return an array
of the same shape. Discontinuities (e.g. indicator functions) are left to the
bisection loop; known kinks can be passed as `points` so that they start out on
a panel boundary.

A jump lying between a panel end and its outermost Kronrod node leaves all 15
samples on one side of it. The adaptive routines therefore also sample each
panel just inside both ends and charge any end value that breaks the trend of
the two outer nodes to the panel error, so such panels keep being bisected.
"""

import heapq
import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from thirdassay import config
from thirdassay.exceptions import DomainError, ConvergenceError, InputError

logger = logging.getLogger(__name__)

# Kronrod abscissae on [0, 1] (descending, QUADPACK ordering); odd entries are the Gauss nodes
XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-node rule on [-1, 1], ascending
NODES = np.concatenate([-XGK[:7], [0.0], XGK[:7][::-1]])
KRONROD_WEIGHTS = np.concatenate([WGK[:7], [WGK[7]], WGK[:7][::-1]])
_WG_HALF = np.array([0.0, WG[0], 0.0, WG[1], 0.0, WG[2], 0.0])
GAUSS_WEIGHTS = np.concatenate([_WG_HALF, [WG[3]], _WG_HALF[::-1]])

# End samples, just inside the panel so a jump sitting exactly on a breakpoint is not charged
END_ABSCISSA = 1.0 - 1e-8
END_NODES = np.array([-END_ABSCISSA, END_ABSCISSA])
PANEL_EVALUATIONS = NODES.size + END_NODES.size

EPMACH = np.finfo(float).eps
UFLOW = np.finfo(float).tiny


@dataclass(frozen=True)
class IntegrationResult:
    """
    Output of an integration call. `value` and `error_estimate` are floats for
    integrate_1d / integrate_2d and arrays (one entry per row) for integrate_batch.
    """
    value: Union[float, np.ndarray]
    error_estimate: Union[float, np.ndarray]
    evaluations: int


@dataclass(frozen=True)
class Rectangle:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @property
    def width(self):
        return self.x_max - self.x_min


def _end_error(fv, ends, abs_half):
    """
    Integral that a jump between the outermost Kronrod nodes and the panel ends
    could hide: end value minus the straight line through the two outer nodes,
    counted only where that miss exceeds the step between those nodes.
    """
    gap = END_ABSCISSA - XGK[0]
    step = XGK[0] - XGK[1]

    left_line = fv[..., 0] + (fv[..., 0] - fv[..., 1]) * gap / step
    right_line = fv[..., -1] + (fv[..., -1] - fv[..., -2]) * gap / step
    miss = np.stack([np.abs(ends[..., 0] - left_line), np.abs(ends[..., 1] - right_line)], axis=-1)
    trend = np.stack([np.abs(fv[..., 0] - fv[..., 1]), np.abs(fv[..., -1] - fv[..., -2])], axis=-1)
    floor = 50.0 * EPMACH * np.max(np.abs(fv), axis=-1, keepdims=True)

    jump = np.where(miss > trend + floor, miss, 0.0)
    return gap * abs_half * jump.sum(axis=-1)


def gauss_kronrod(f, a, b, check_ends=False):
    """
    Apply the 15-point rule to panels [a, b] (arrays of any matching shape).

    Returns the Kronrod estimate, the QUADPACK error estimate and the integral of
    |f| for every panel. With `check_ends`, f is also sampled next to both panel
    ends (17 nodes per panel) and a jump hidden there is added to the error.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    centre = 0.5 * (a + b)
    half_length = 0.5 * (b - a)

    abscissae = np.concatenate([NODES, END_NODES]) if check_ends else NODES
    nodes = centre[..., None] + half_length[..., None] * abscissae
    values = np.asarray(f(nodes), dtype=float)
    fv = values[..., :NODES.size]

    res_kronrod = fv @ KRONROD_WEIGHTS
    res_gauss = fv @ GAUSS_WEIGHTS
    mean = 0.5 * res_kronrod

    abs_half = np.abs(half_length)
    res_abs = (np.abs(fv) @ KRONROD_WEIGHTS) * abs_half
    res_asc = (np.abs(fv - mean[..., None]) @ KRONROD_WEIGHTS) * abs_half
    err = np.abs((res_kronrod - res_gauss) * half_length)

    # QUADPACK scaling: the raw |K15 - G7| grossly overestimates the K15 error on smooth panels
    with np.errstate(divide='ignore', invalid='ignore'):
        scaled = res_asc * np.minimum(1.0, (200.0 * err / res_asc) ** 1.5)
    err = np.where((res_asc != 0.0) & (err != 0.0), scaled, err)
    err = np.where(res_abs > UFLOW / (50.0 * EPMACH), np.maximum(50.0 * EPMACH * res_abs, err), err)

    if check_ends:
        err = err + _end_error(fv, values[..., NODES.size:], abs_half)

    return res_kronrod * half_length, err, res_abs


def _check_tol(tol):
    if not (tol > 0.0):
        raise DomainError(f'tolerance must be positive, got {tol}')


def _check_interval(a, b):
    if not (math.isfinite(a) and math.isfinite(b)):
        raise InputError('integration limits must be finite; truncate infinite domains first')
    if a > b:
        raise DomainError(f'integration limits must satisfy a <= b, got a={a}, b={b}')


def integrate_1d(f, a, b, tol=config.DEFAULT_TOL, points=None, max_evaluations=config.MAX_EVALUATIONS):
    """
    Globally adaptive integration of f over [a, b]: the panel with the largest
    error estimate is bisected until the summed estimate is below `tol`.

    Params:
        f               <callable> : vectorized integrand
        a, b            <float>    : finite limits, a <= b
        tol             <float>    : absolute tolerance
        points          <list>     : optional interior breakpoints (kinks, jumps)
        max_evaluations <int>      : budget of integrand evaluations
    """
    _check_tol(tol)
    a, b = float(a), float(b)
    _check_interval(a, b)

    if a == b:
        return IntegrationResult(0.0, 0.0, 0)

    edges = [a, b]
    if points is not None:
        interior = [float(p) for p in np.ravel(points) if a < p < b]
        edges = sorted(set([a, b] + interior))

    lefts = np.array(edges[:-1])
    rights = np.array(edges[1:])
    values, errors, _ = gauss_kronrod(f, lefts, rights, check_ends=True)
    evaluations = PANEL_EVALUATIONS * lefts.size

    panels = [[lo, hi, val, err] for lo, hi, val, err in zip(lefts, rights, values, errors)]
    heap = [(-err, idx) for idx, (_, _, _, err) in enumerate(panels)]
    heapq.heapify(heap)
    total_err = float(np.sum(errors))

    while total_err > tol:
        if not heap:
            break

        _, idx = heapq.heappop(heap)
        lo, hi, _, err = panels[idx]
        mid = 0.5 * (lo + hi)

        # Panel can no longer be split in floating point: freeze it
        if not (lo < mid < hi):
            continue

        if evaluations + 2 * PANEL_EVALUATIONS > max_evaluations:
            best = IntegrationResult(math.fsum(p[2] for p in panels), total_err, evaluations)
            raise ConvergenceError(
                f'integrate_1d exceeded {max_evaluations} evaluations on [{a}, {b}] '
                f'(error estimate {total_err:.3e} > tol {tol:.3e})', best=best)

        halves, half_errs, _ = gauss_kronrod(f, np.array([lo, mid]), np.array([mid, hi]), check_ends=True)
        evaluations += 2 * PANEL_EVALUATIONS

        panels[idx] = [lo, mid, halves[0], half_errs[0]]
        panels.append([mid, hi, halves[1], half_errs[1]])
        heapq.heappush(heap, (-half_errs[0], idx))
        heapq.heappush(heap, (-half_errs[1], len(panels) - 1))

        total_err += half_errs[0] + half_errs[1] - err

        if total_err <= tol:
            # Re-sum to wash out drift in the running total
            total_err = math.fsum(p[3] for p in panels)

    value = math.fsum(p[2] for p in panels)
    total_err = math.fsum(p[3] for p in panels)

    if total_err > tol:
        best = IntegrationResult(value, total_err, evaluations)
        raise ConvergenceError(
            f'integrate_1d could not reach tol {tol:.3e} on [{a}, {b}] (estimate {total_err:.3e})', best=best)

    return IntegrationResult(value, total_err, evaluations)


def integrate_2d(f, region, tol=config.DEFAULT_TOL, x_points=None, y_points=None,
                 max_evaluations=config.MAX_EVALUATIONS):
    """
    Iterated adaptive integration of f(x, y) over a rectangle.

    f is called as f(x, ys) with a scalar x and an array of y nodes. The outer
    pass over x gets half the tolerance, each inner pass over y gets the other
    half spread over the width of the x range. The evaluation budget applies to
    every 1-D pass separately; the returned count is the grand total.

    Params:
        x_points <list> : breakpoints of the outer integrand (x values where the inner integral has a kink)
        y_points <list> : breakpoints shared by every inner pass
    """
    _check_tol(tol)
    _check_interval(region.x_min, region.x_max)
    _check_interval(region.y_min, region.y_max)

    if region.width == 0.0:
        return IntegrationResult(0.0, 0.0, 0)

    inner_tol = 0.5 * tol / region.width
    counters = {'evaluations': 0, 'inner_error': 0.0}

    def inner(x):
        result = integrate_1d(lambda ys: f(x, ys), region.y_min, region.y_max,
                              tol=inner_tol, points=y_points, max_evaluations=max_evaluations)
        counters['evaluations'] += result.evaluations
        counters['inner_error'] = max(counters['inner_error'], result.error_estimate)
        return result.value

    def outer(xs):
        flat = np.ravel(xs)
        return np.array([inner(float(x)) for x in flat]).reshape(np.shape(xs))

    result = integrate_1d(outer, region.x_min, region.x_max, tol=0.5 * tol, points=x_points,
                          max_evaluations=max_evaluations)
    error = result.error_estimate + region.width * counters['inner_error']

    return IntegrationResult(result.value, error, result.evaluations + counters['evaluations'])


def _split_panels(edges, n_sub):
    """(m, s+1) breakpoints -> (m, s*n_sub) panel lefts and rights"""
    left = edges[:, :-1]
    width = np.diff(edges, axis=1)
    frac = np.arange(n_sub + 1) / n_sub
    sub = left[..., None] + width[..., None] * frac
    return sub[..., :-1].reshape(edges.shape[0], -1), sub[..., 1:].reshape(edges.shape[0], -1)


def integrate_batch(f, edges, tol=config.DEFAULT_TOL, n_sub=4, max_sub=1024,
                    chunk_elements=2_000_000, max_evaluations=config.MAX_EVALUATIONS):
    """
    Integrate many related integrands at once.

    Row i of `edges` lists the breakpoints of integrand i (ascending, first and
    last entries are the limits). Every segment is split into `n_sub` equal
    panels and the 15-point rule is applied to all panels of all rows in one
    vectorized call. Rows whose summed error estimate exceeds `tol` are
    recomputed with twice as many panels until they converge.

    Params:
        f     <callable> : f(nodes, rows) with nodes of shape (len(rows), P, 15)
                           and rows the integer indices of the rows evaluated
        edges <array>    : (m, s+1) breakpoints
        tol   <float>    : absolute tolerance per row
    """
    _check_tol(tol)
    edges = np.atleast_2d(np.asarray(edges, dtype=float))
    if not np.all(np.isfinite(edges)):
        raise InputError('batch integration limits must be finite')
    if np.any(np.diff(edges, axis=1) < 0.0):
        raise DomainError('batch breakpoints must be ascending within every row')

    n_rows, n_seg = edges.shape[0], edges.shape[1] - 1
    values = np.zeros(n_rows)
    errors = np.full(n_rows, np.inf)
    evaluations = 0
    pending = np.arange(n_rows)

    while pending.size:
        per_row = n_seg * n_sub * NODES.size
        rows_per_chunk = max(1, chunk_elements // per_row)

        for start in range(0, pending.size, rows_per_chunk):
            rows = pending[start:start + rows_per_chunk]
            lefts, rights = _split_panels(edges[rows], n_sub)
            val, err, _ = gauss_kronrod(lambda nodes: f(nodes, rows), lefts, rights)
            values[rows] = val.sum(axis=1)
            errors[rows] = err.sum(axis=1)

        evaluations += per_row * pending.size
        pending = pending[errors[pending] > tol]

        if pending.size and (n_sub * 2 > max_sub or per_row * 2 > max_evaluations):
            best = IntegrationResult(values, errors, evaluations)
            raise ConvergenceError(
                f'integrate_batch: {pending.size} of {n_rows} rows above tol {tol:.3e} '
                f'with {n_sub} panels per segment', best=best)

        if pending.size:
            logger.debug('integrate_batch: refining %d rows to %d panels per segment', pending.size, 2 * n_sub)
        n_sub *= 2

    return IntegrationResult(values, errors, evaluations)
