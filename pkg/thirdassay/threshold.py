"""
Rejection threshold r(alpha) and the tail-thickness table.

Two different quantiles live here and must not be confused:
    r_of_alpha          P(|X1 - X2| > r) = alpha   (difference of two assays; what the protocol uses)
    two_sided_quantile  P(|X| > t) = alpha         (single assay; what the published table lists)
The table's caption describes the first, but its numbers are the second
(e.g. 1.645 at alpha = 0.10 for the normal law, where the difference quantile is
about 2.326). Both are exposed; table1() reproduces the printed numbers.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from thirdassay import config
from thirdassay import distributions as dist
from thirdassay.distributions import ErrorModel
from thirdassay.exceptions import ConvergenceError
from thirdassay.utils import check_probability

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Threshold:
    model: ErrorModel
    alpha: float
    r: float
    residual: float


def _newton_bisect(func, dfunc, lo, hi, tol=config.ROOT_TOL, max_iter=200):
    """
    Safeguarded Newton-Raphson on a bracketed root: take the Newton step when
    it stays inside the bracket and shrinks fast enough, bisect otherwise.
    """
    f_lo, f_hi = func(lo), func(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise ConvergenceError(f'root is not bracketed by [{lo}, {hi}]', best=None)

    # Orient so that func(x_neg) < 0 < func(x_pos)
    x_neg, x_pos = (lo, hi) if f_lo < 0.0 else (hi, lo)

    root = 0.5 * (lo + hi)
    dx_old = dx = abs(hi - lo)
    f, df = func(root), dfunc(root)

    for _ in range(max_iter):
        out_of_bracket = ((root - x_pos) * df - f) * ((root - x_neg) * df - f) > 0.0
        too_slow = abs(2.0 * f) > abs(dx_old * df)

        if out_of_bracket or too_slow:
            dx_old, dx = dx, 0.5 * (x_pos - x_neg)
            root = x_neg + dx
        else:
            dx_old, dx = dx, f / df
            root = root - dx

        if abs(dx) < tol:
            return root

        f, df = func(root), dfunc(root)
        if f == 0.0:
            return root
        if f < 0.0:
            x_neg = root
        else:
            x_pos = root

    raise ConvergenceError(f'root finder did not converge in {max_iter} iterations', best=root)


def r_of_alpha(model, alpha):
    """Solve diff_tail(model, r) = alpha for r on the bracket [0, 50]"""
    model = ErrorModel.parse(model)
    alpha = float(check_probability(alpha, 'alpha'))

    lo, hi = config.ROOT_BRACKET
    r = _newton_bisect(lambda x: dist.diff_tail(model, x) - alpha,
                       lambda x: dist.diff_tail_derivative(model, x),
                       lo, hi)
    residual = abs(dist.diff_tail(model, r) - alpha)
    logger.debug('r(%s, alpha=%g) = %.12f (residual %.2e)', model, alpha, r, residual)

    return Threshold(model=model, alpha=alpha, r=r, residual=residual)


def two_sided_quantile(model, alpha):
    """t with P(|X| > t) = alpha for one standardized observation"""
    model = ErrorModel.parse(model)
    alpha = float(check_probability(alpha, 'alpha'))

    if model is ErrorModel.NORMAL:
        return -dist.quantile(model, 0.5 * alpha)

    return -math.log(alpha) / dist.SQRT2


def table1(alphas=config.TABLE1_ALPHAS, decimals=3):
    """Tail-thickness comparison: single-assay two-sided quantiles, rounded as published"""
    rows = [
        {
            'alpha': alpha,
            'normal': round(two_sided_quantile(ErrorModel.NORMAL, alpha), decimals),
            'laplace': round(two_sided_quantile(ErrorModel.LAPLACE, alpha), decimals),
        }
        for alpha in alphas
    ]
    return pd.DataFrame(rows, columns=['alpha', 'normal', 'laplace'])


def r_table(alphas=config.TABLE1_ALPHAS):
    """Difference quantiles r(alpha) for both laws, the quantity the rejection rule actually uses"""
    rows = [
        {
            'alpha': alpha,
            'normal': r_of_alpha(ErrorModel.NORMAL, alpha).r,
            'laplace': r_of_alpha(ErrorModel.LAPLACE, alpha).r,
        }
        for alpha in np.atleast_1d(alphas)
    ]
    return pd.DataFrame(rows, columns=['alpha', 'normal', 'laplace'])
