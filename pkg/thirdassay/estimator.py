"""
The duplicate/triplicate measurement protocol and its Monte Carlo studies.

Two assays X1, X2 are taken. If |X1 - X2| <= r the reported value is their
mean; otherwise a third assay X3 is taken and the reported value is the mean
of X3 and whichever of X1, X2 lies closest to it.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np
import pandas as pd

from thirdassay import config
from thirdassay import distributions as dist
from thirdassay.distributions import ErrorModel
from thirdassay.exceptions import DomainError, InputError
from thirdassay.threshold import r_of_alpha
from thirdassay.utils import chunk_sizes, check_count, check_finite, resolve_seed, run_chunks, spawn_streams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimatorOutcome:
    x1: float
    x2: float
    x3: Optional[float]
    rejected: bool
    mu_hat: float


@dataclass
class BatchOutcome:
    mu_hat: np.ndarray
    rejected: np.ndarray
    x3: np.ndarray
    third_draws: int


@dataclass
class SimulationSummary:
    """
    Params:
        n                    <int>   : protocol executions
        rejection_rate       <float> : fraction of executions with |X1 - X2| > r
        conditional_samples  <array> : reported values of the rejected executions
        mean, variance       <float> : moments of conditional_samples
        unconditional_mean   <float> : mean reported value over all executions
        unconditional_variance <float>
        third_draws          <int>   : number of third assays generated
    """
    model: ErrorModel
    alpha: float
    r: float
    n: int
    seed: int
    rejection_rate: float
    conditional_samples: np.ndarray = field(repr=False)
    mean: float
    variance: float
    unconditional_mean: float
    unconditional_variance: float
    third_draws: int

    def to_dict(self):
        return {
            'model': self.model.value,
            'alpha': self.alpha,
            'r': self.r,
            'n': self.n,
            'seed': self.seed,
            'rejection_rate': self.rejection_rate,
            'rejections': int(self.conditional_samples.size),
            'third_draws': self.third_draws,
            'mean': self.mean,
            'variance': self.variance,
            'unconditional_mean': self.unconditional_mean,
            'unconditional_variance': self.unconditional_variance,
        }


def _check_threshold(r):
    if not (r > 0.0 and math.isfinite(r)):
        raise DomainError(f'threshold r must be positive and finite, got {r}')


def estimate(x1, x2, third, r):
    """
    One execution of the protocol.

    Params:
        x1, x2 <float>    : the duplicate assays
        third  <callable> : returns the third assay; called only on rejection
        r      <float>    : rejection threshold
    """
    x1 = float(check_finite(x1, 'x1'))
    x2 = float(check_finite(x2, 'x2'))
    _check_threshold(r)

    # Boundary |x1 - x2| == r is accepted
    if not abs(x1 - x2) > r:
        return EstimatorOutcome(x1=x1, x2=x2, x3=None, rejected=False, mu_hat=0.5 * (x1 + x2))

    x3 = float(check_finite(third(), 'x3'))
    # Ties go to x1
    closest = x1 if abs(x1 - x3) <= abs(x2 - x3) else x2

    return EstimatorOutcome(x1=x1, x2=x2, x3=x3, rejected=True, mu_hat=0.5 * (closest + x3))


def estimate_batch(x1, x2, third, r):
    """
    Vectorized protocol. `third(k)` must return k third assays; it is called
    once with k = number of rejected pairs (and not at all if there are none).
    """
    x1 = check_finite(x1, 'x1')
    x2 = check_finite(x2, 'x2')
    if x1.shape != x2.shape:
        raise InputError(f'x1 and x2 must have the same shape, got {x1.shape} and {x2.shape}')
    _check_threshold(r)

    mu_hat = 0.5 * (x1 + x2)
    rejected = np.abs(x1 - x2) > r
    x3 = np.full(x1.shape, np.nan)

    n_rejected = int(rejected.sum())
    if n_rejected:
        draws = check_finite(third(n_rejected), 'x3')
        if draws.shape != (n_rejected,):
            raise InputError(f'third assay supplier returned shape {draws.shape}, expected ({n_rejected},)')

        a, b = x1[rejected], x2[rejected]
        closest = np.where(np.abs(a - draws) <= np.abs(b - draws), a, b)
        mu_hat[rejected] = 0.5 * (closest + draws)
        x3[rejected] = draws

    return BatchOutcome(mu_hat=mu_hat, rejected=rejected, x3=x3, third_draws=n_rejected)


def _simulate_chunk(task, model, r):
    size, stream = task
    x1 = dist.sample(model, stream, size)
    x2 = dist.sample(model, stream, size)
    return estimate_batch(x1, x2, lambda k: dist.sample(model, stream, k), r)


def simulate(model, alpha, n, seed=None, workers=config.N_WORKERS, progress=False):
    """
    n seeded executions of the protocol with r = r(alpha). The work is cut into
    fixed chunks with their own spawned streams, so the result depends on the
    seed only (not on `workers`).
    """
    model = ErrorModel.parse(model)
    n = check_count(n, 'n')
    seed = resolve_seed(seed)
    threshold = r_of_alpha(model, alpha)

    sizes = chunk_sizes(n, config.SIM_CHUNK)
    tasks = list(zip(sizes, spawn_streams(seed, len(sizes))))
    logger.info('Simulating %d executions (%s, alpha=%g, r=%.6f) in %d chunks',
                n, model, threshold.alpha, threshold.r, len(tasks))

    outcomes = run_chunks(partial(_simulate_chunk, model=model, r=threshold.r), tasks,
                          workers=workers, progress=progress, desc='simulate')

    mu_hat = np.concatenate([o.mu_hat for o in outcomes])
    rejected = np.concatenate([o.rejected for o in outcomes])
    conditional = mu_hat[rejected]
    m = conditional.size

    return SimulationSummary(
        model=model,
        alpha=threshold.alpha,
        r=threshold.r,
        n=n,
        seed=seed,
        rejection_rate=m / n,
        conditional_samples=conditional,
        mean=float(conditional.mean()) if m else math.nan,
        variance=float(conditional.var(ddof=1)) if m > 1 else math.nan,
        unconditional_mean=float(mu_hat.mean()),
        unconditional_variance=float(mu_hat.var(ddof=1)) if n > 1 else 0.0,
        third_draws=sum(o.third_draws for o in outcomes),
    )


def _conditional_chunk(task, model, alpha, r):
    """Draw pairs until `size` rejections have been completed by a third assay"""
    size, stream = task
    collected, have, pairs = [], 0, 0

    while have < size:
        block = min(int(math.ceil(1.2 * (size - have) / alpha)) + 16, config.MAX_PAIR_BLOCK)
        x1 = dist.sample(model, stream, block)
        x2 = dist.sample(model, stream, block)
        pairs += block

        keep = np.abs(x1 - x2) > r
        if keep.any():
            outcome = estimate_batch(x1[keep], x2[keep], lambda k: dist.sample(model, stream, k), r)
            collected.append(outcome.mu_hat)
            have += outcome.mu_hat.size

    return np.concatenate(collected)[:size], pairs


def conditional_sample(model, alpha, m, seed=None, workers=config.N_WORKERS, progress=False):
    """
    m i.i.d. draws from the law of the reported value given |X1 - X2| > r, by
    rejection sampling on the duplicate pair (about 1/alpha pairs per draw).
    """
    model = ErrorModel.parse(model)
    m = check_count(m, 'm')
    seed = resolve_seed(seed)
    threshold = r_of_alpha(model, alpha)

    sizes = chunk_sizes(m, config.SIM_CHUNK)
    tasks = list(zip(sizes, spawn_streams(seed, len(sizes))))
    results = run_chunks(partial(_conditional_chunk, model=model, alpha=threshold.alpha, r=threshold.r),
                         tasks, workers=workers, progress=progress, desc='conditional')

    pairs = sum(p for _, p in results)
    logger.debug('conditional_sample: %d pairs for %d draws (%.2f per draw)', pairs, m, pairs / m)

    return np.concatenate([samples for samples, _ in results])


def histogram(samples, bin_width=config.HIST_BIN_WIDTH):
    """Histogram with bins centred on multiples of bin_width (so one bin is centred on 0)"""
    samples = check_finite(samples, 'samples').ravel()
    if samples.size == 0:
        raise InputError('cannot build a histogram of an empty sample')
    if not bin_width > 0:
        raise DomainError(f'bin width must be positive, got {bin_width}')

    k_min = math.floor(samples.min() / bin_width - 0.5)
    k_max = math.ceil(samples.max() / bin_width - 0.5)
    edges = (np.arange(k_min, max(k_max, k_min + 1) + 1) + 0.5) * bin_width
    # Rounding in the division can leave an extreme sample just outside
    edges[0] = min(edges[0], samples.min())
    edges[-1] = max(edges[-1], samples.max())
    counts, edges = np.histogram(samples, bins=edges)

    return pd.DataFrame({
        'bin_left': edges[:-1],
        'bin_right': edges[1:],
        'centre': 0.5 * (edges[:-1] + edges[1:]),
        'count': counts,
        'density': counts / (samples.size * bin_width),
    })
