import os
import math
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from tqdm import tqdm

from thirdassay import config
from thirdassay.exceptions import InputError, DomainError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = f'%.{config.SIG_DIGITS}g'


def resolve_seed(seed=None):
    """Explicit seed wins, then the THIRDASSAY_SEED env var, then the package default"""
    if seed is not None:
        return int(seed)

    env_seed = os.environ.get(config.SEED_ENV_VAR)
    if env_seed is not None:
        try:
            return int(env_seed)
        except ValueError:
            raise InputError(f'{config.SEED_ENV_VAR} must be an integer, got {env_seed!r}')

    return config.DEFAULT_SEED


def make_stream(seed):
    """
    Seeded random stream. The algorithm is pinned to PCG64 fed by a SeedSequence,
    so a given seed gives the same sequence on every platform.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_streams(seed, count):
    """Independent sub-streams, one per chunk, derived deterministically from a single seed"""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def chunk_sizes(total, chunk):
    """Split `total` into fixed-size pieces; the last one takes the remainder"""
    if total <= 0:
        return []
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def run_chunks(fn, tasks, workers=config.N_WORKERS, progress=False, desc=None):
    """
    Map `fn` over tasks on a thread pool and return the results in task order.
    numpy releases the GIL inside the heavy array kernels, so threads are enough.
    """
    workers = max(1, int(workers))

    if workers == 1 or len(tasks) <= 1:
        return [fn(task) for task in tqdm(tasks, desc=desc, disable=not progress)]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(tqdm(pool.map(fn, tasks), total=len(tasks), desc=desc, disable=not progress))


def make_grid(grid_min, grid_max, step):
    """
    Ordered grid from grid_min to grid_max (inclusive) with the given step.
    Values are rounded so that a symmetric range reflects exactly onto itself.
    """
    if not (math.isfinite(grid_min) and math.isfinite(grid_max) and math.isfinite(step)):
        raise InputError('grid bounds and step must be finite')
    if step <= 0:
        raise DomainError(f'grid step must be positive, got {step}')
    if grid_min >= grid_max:
        raise DomainError(f'grid_min must be below grid_max, got {grid_min} >= {grid_max}')

    n_points = int(round((grid_max - grid_min) / step)) + 1
    grid = np.round(np.linspace(grid_min, grid_max, n_points), 10)

    return grid + 0.0  # -0.0 -> 0.0


def check_finite(values, name='x'):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InputError(f'{name} must be finite')
    return values


def check_probability(p, name='alpha'):
    """Open-interval check used by every alpha / p argument"""
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise DomainError(f'{name} must lie strictly between 0 and 1, got {p}')
    return p


def check_count(n, name='n', minimum=1):
    if int(n) != n or n < minimum:
        raise DomainError(f'{name} must be an integer >= {minimum}, got {n}')
    return int(n)


def significant(value, digits=config.SIG_DIGITS):
    """Round to a fixed number of significant digits for JSON output"""
    if isinstance(value, (list, tuple)):
        return [significant(v, digits) for v in value]
    if value is None:
        return None
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(f'{float(value):.{digits}g}')
