"""
Goodness of fit of the error law from paired assays.

Differences of duplicate assays are standardized by the prescribed sigma,
Z_j = (X1_j - X2_j) / sigma, so under either law Z is the difference of two
unit-variance errors (variance 2). The fit is measured by the weighted
Kolmogorov-Smirnov statistic

    T_n = max_j |F(Z_j) - F_n(Z_j)| / sqrt(F(Z_j) (1 - F(Z_j)))

with F the null difference CDF and F_n the right-continuous empirical CDF,
and calibrated by simulating T_n under the fully specified null.
"""

import logging
from dataclasses import dataclass
from functools import partial

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from thirdassay import config
from thirdassay import distributions as dist
from thirdassay.distributions import ErrorModel
from thirdassay.exceptions import DomainError, InputError
from thirdassay.utils import (chunk_sizes, check_count, check_finite, make_stream, resolve_seed,
                              run_chunks, spawn_streams)

logger = logging.getLogger(__name__)


@dataclass
class StandardizedSample:
    z: np.ndarray
    sigma: float
    n: int
    mean: float
    sd: float


@dataclass(frozen=True)
class GofReport:
    model: ErrorModel
    t_n: float
    p_value: float
    reps: int
    seed: int
    n: int
    sample_mean: float
    sample_sd: float

    def to_dict(self):
        return {
            'model': self.model.value,
            't_n': self.t_n,
            'p_value': self.p_value,
            'reps': self.reps,
            'seed': self.seed,
            'n': self.n,
            'sample_mean': self.sample_mean,
            'sample_sd': self.sample_sd,
        }


def standardize(differences, sigma=config.DEFAULT_SIGMA):
    """Z_j = d_j / sigma, with the sample mean and standard deviation (ddof=1) of Z"""
    if not sigma > 0:
        raise DomainError(f'sigma must be positive, got {sigma}')

    d = np.asarray(differences, dtype=float).ravel()
    if d.size == 0:
        raise DomainError('cannot standardize an empty sample')
    d = check_finite(d, 'differences')

    z = d / sigma
    sd = float(z.std(ddof=1)) if z.size > 1 else 0.0

    return StandardizedSample(z=z, sigma=float(sigma), n=int(z.size), mean=float(z.mean()), sd=sd)


def _t_n_rows(model, z):
    """T_n for every row of a (reps, n) array"""
    n = z.shape[-1]
    F = np.clip(dist.diff_cdf(model, z), config.WEIGHT_CLAMP, 1.0 - config.WEIGHT_CLAMP)
    # rank with method='max' is #{Z_i <= Z_j}
    F_n = rankdata(z, method='max', axis=-1) / n

    return np.max(np.abs(F - F_n) / np.sqrt(F * (1.0 - F)), axis=-1)


def t_n(sample, model):
    """Weighted Kolmogorov-Smirnov statistic of a StandardizedSample (or a plain array of Z) under `model`"""
    model = ErrorModel.parse(model)
    z = sample.z if isinstance(sample, StandardizedSample) else check_finite(sample, 'z').ravel()
    if z.size == 0:
        raise DomainError('T_n needs a nonempty sample')

    return float(_t_n_rows(model, z[None, :])[0])


def _null_chunk(task, model, n):
    reps, stream = task
    z = dist.sample(model, stream, reps * n) - dist.sample(model, stream, reps * n)
    return _t_n_rows(model, z.reshape(reps, n))


def null_statistics(model, n, reps, seed=None, workers=config.N_WORKERS, progress=False):
    """reps draws of T_n for samples of size n from the null difference law"""
    model = ErrorModel.parse(model)
    n = check_count(n, 'n')
    reps = check_count(reps, 'reps')
    seed = resolve_seed(seed)

    sizes = chunk_sizes(reps, config.REPS_CHUNK)
    tasks = list(zip(sizes, spawn_streams(seed, len(sizes))))
    stats = run_chunks(partial(_null_chunk, model=model, n=n), tasks,
                       workers=workers, progress=progress, desc=f'null T_n ({model})')

    return np.concatenate(stats)


def mc_pvalue(model, n, observed, reps, seed=None, workers=config.N_WORKERS, progress=False):
    """(1 + #{simulated T_n >= observed}) / (reps + 1)"""
    if not observed >= 0:
        raise DomainError(f'observed statistic must be non-negative, got {observed}')

    null = null_statistics(model, n, reps, seed=seed, workers=workers, progress=progress)
    exceed = int(np.count_nonzero(null >= observed))

    return (1.0 + exceed) / (null.size + 1.0)


def gof_report(differences, sigma=config.DEFAULT_SIGMA, reps=100_000, seed=None,
               workers=config.N_WORKERS, progress=False):
    """Standardize, then compute T_n and its Monte Carlo p-value under both laws"""
    sample = standardize(differences, sigma)
    seed = resolve_seed(seed)
    reps = check_count(reps, 'reps')
    logger.info('Goodness of fit: n=%d, mean %.4f, sd %.4f', sample.n, sample.mean, sample.sd)

    reports = []
    for model in ErrorModel:
        statistic = t_n(sample, model)
        p_value = mc_pvalue(model, sample.n, statistic, reps, seed=seed, workers=workers, progress=progress)
        logger.info('%s: T_n = %.4f, p = %.4f', model, statistic, p_value)
        reports.append(GofReport(model=model, t_n=statistic, p_value=p_value, reps=reps, seed=seed,
                                 n=sample.n, sample_mean=sample.mean, sample_sd=sample.sd))

    return tuple(reports)


def synthetic_pairs(model, n, sigma=config.DEFAULT_SIGMA, mu=0.0, seed=None):
    """
    Paired assays X1, X2 = mu + sigma * error for n batches, a stand-in for a
    real duplicate-assay dataset.
    """
    model = ErrorModel.parse(model)
    n = check_count(n, 'n')
    if not sigma > 0:
        raise DomainError(f'sigma must be positive, got {sigma}')
    stream = make_stream(resolve_seed(seed))

    x1 = mu + sigma * dist.sample(model, stream, n)
    x2 = mu + sigma * dist.sample(model, stream, n)

    return pd.DataFrame({'x1': x1, 'x2': x2})


def read_differences(frame, diff_column=None):
    """Differences from a pairs table (`x1,x2`) or from a single difference column"""
    if diff_column is not None:
        if diff_column not in frame.columns:
            raise InputError(f'column {diff_column!r} not found, have {list(frame.columns)}')
        values = pd.to_numeric(frame[diff_column], errors='coerce').to_numpy(dtype=float)
    else:
        missing = {'x1', 'x2'} - set(frame.columns)
        if missing:
            raise InputError(f'pairs file needs columns x1,x2; missing {sorted(missing)}')
        x1 = pd.to_numeric(frame['x1'], errors='coerce').to_numpy(dtype=float)
        x2 = pd.to_numeric(frame['x2'], errors='coerce').to_numpy(dtype=float)
        values = x1 - x2

    if values.size == 0:
        raise InputError('input file has no rows')
    if not np.all(np.isfinite(values)):
        bad = int(np.count_nonzero(~np.isfinite(values)))
        raise InputError(f'{bad} row(s) are missing or non-numeric')

    return values
