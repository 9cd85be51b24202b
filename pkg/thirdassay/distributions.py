"""
Standardized (mean 0, variance 1) normal and Laplace error laws.

Every function takes the model first and accepts a scalar or an array; scalars
come back as floats. Besides the single-assay law, the law of the difference
X1 - X2 of two independent assays is exposed since both the rejection rule and
the goodness-of-fit null are stated in terms of it.
"""

import math
from enum import Enum

import numpy as np
from scipy import special

from thirdassay.exceptions import DomainError
from thirdassay.utils import check_finite

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Laplace scale giving unit variance: f(x) = exp(-|x|/b) / (2b), b = 1/sqrt(2)
LAPLACE_SCALE = 1.0 / SQRT2


class ErrorModel(str, Enum):
    NORMAL = 'normal'
    LAPLACE = 'laplace'

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise DomainError(f'unknown error model {name!r}, expected one of {[m.value for m in cls]}')

    def __str__(self):
        return self.value


def _like(values, x):
    """Return a float for scalar input, the array otherwise"""
    return float(values) if np.ndim(x) == 0 else values


def _normal_pdf(x):
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


def pdf(model, x):
    model = ErrorModel.parse(model)
    x_arr = check_finite(x, 'x')

    if model is ErrorModel.NORMAL:
        density = _normal_pdf(x_arr)
    else:
        density = np.exp(-SQRT2 * np.abs(x_arr)) / SQRT2

    return _like(density, x)


def cdf(model, x):
    """
    Distribution function F(x). The Laplace branch is evaluated from the tail
    nearest to x so that F(x) + F(-x) = 1 holds to rounding.
    """
    model = ErrorModel.parse(model)
    x_arr = check_finite(x, 'x')

    if model is ErrorModel.NORMAL:
        prob = special.ndtr(x_arr)
    else:
        half_tail = 0.5 * np.exp(-SQRT2 * np.abs(x_arr))
        prob = np.where(x_arr < 0.0, half_tail, 1.0 - half_tail)

    return _like(prob, x)


def sf(model, x):
    """Survival function 1 - F(x), computed as F(-x) to keep upper-tail precision"""
    return cdf(model, np.negative(x))


def quantile(model, p):
    model = ErrorModel.parse(model)
    p_arr = np.asarray(p, dtype=float)
    if not np.all((p_arr > 0.0) & (p_arr < 1.0)):
        raise DomainError(f'quantile needs 0 < p < 1, got {p}')

    if model is ErrorModel.NORMAL:
        x = special.ndtri(p_arr)
    else:
        # Lower half inverts 0.5*exp(sqrt2*x), upper half the mirrored tail
        lower = np.log(2.0 * np.minimum(p_arr, 0.5)) / SQRT2
        upper = -np.log(2.0 * np.minimum(1.0 - p_arr, 0.5)) / SQRT2
        x = np.where(p_arr < 0.5, lower, upper)

    return _like(x, p)


def diff_tail(model, r):
    """
    P(|X1 - X2| > r) for two independent standardized assays.

    Normal: 2 * (1 - Phi(r / sqrt2)).
    Laplace: the difference of two Laplace(b) variables has density
    (1 + |d|/b) exp(-|d|/b) / (4b); integrating both tails gives
    (1 + r/(2b)) exp(-r/b) = (1 + r/sqrt2) exp(-sqrt2 r).
    """
    model = ErrorModel.parse(model)
    r_arr = check_finite(r, 'r')
    if np.any(r_arr < 0.0):
        raise DomainError(f'diff_tail needs r >= 0, got {r}')

    if model is ErrorModel.NORMAL:
        tail = 2.0 * special.ndtr(-r_arr / SQRT2)
    else:
        tail = (1.0 + r_arr / SQRT2) * np.exp(-SQRT2 * r_arr)

    return _like(tail, r)


def diff_tail_derivative(model, r):
    """d/dr of diff_tail, i.e. -2 times the difference density at r"""
    return -2.0 * diff_pdf(model, r)


def diff_pdf(model, z):
    """Density of D = X1 - X2 (variance 2)"""
    model = ErrorModel.parse(model)
    z_arr = check_finite(z, 'z')

    if model is ErrorModel.NORMAL:
        density = _normal_pdf(z_arr / SQRT2) / SQRT2
    else:
        abs_z = np.abs(z_arr)
        density = (SQRT2 / 4.0) * (1.0 + SQRT2 * abs_z) * np.exp(-SQRT2 * abs_z)

    return _like(density, z)


def diff_cdf(model, z):
    """Distribution function of D = X1 - X2 (variance 2)"""
    model = ErrorModel.parse(model)
    z_arr = check_finite(z, 'z')

    if model is ErrorModel.NORMAL:
        prob = special.ndtr(z_arr / SQRT2)
    else:
        abs_z = np.abs(z_arr)
        half_tail = 0.5 * (1.0 + abs_z / SQRT2) * np.exp(-SQRT2 * abs_z)
        prob = np.where(z_arr < 0.0, half_tail, 1.0 - half_tail)

    return _like(prob, z)


def kurtosis(model):
    """Non-excess kurtosis: 3 for the normal law, 6 for the Laplace law"""
    return 3.0 if ErrorModel.parse(model) is ErrorModel.NORMAL else 6.0


def _open_uniform(stream, n):
    # 53-bit uniforms shifted by half a step: strictly inside (0, 1)
    return (stream.integers(0, 2 ** 53, size=n, dtype=np.int64) + 0.5) / 2.0 ** 53


def sample(model, stream, n):
    """
    n i.i.d. draws from the standardized law using the caller's stream.

    Params:
        model  <ErrorModel>           : error law
        stream <np.random.Generator>  : seeded stream, consumed in place
        n      <int>                  : number of draws (0 gives an empty array)
    """
    model = ErrorModel.parse(model)
    if int(n) != n or n < 0:
        raise DomainError(f'sample size must be a non-negative integer, got {n}')
    n = int(n)

    if n == 0:
        return np.empty(0, dtype=float)

    if model is ErrorModel.NORMAL:
        return stream.standard_normal(n)

    # Inverse-CDF transform
    return quantile(model, _open_uniform(stream, n))
