"""
Command-line front end. Every table and figure dataset has one command:

    table1       tail-thickness table                      -> table1.csv, r_table.csv
    threshold    r(alpha) for the chosen model(s)          -> threshold.json
    pdf          standardized normal / Laplace densities   -> pdf.csv
    density      g(x), g(-x), h(x), exceedance per model   -> density_<model>.csv
    exceedance   P(reported value > x | rejection)         -> exceedance.csv
    shape        modality of h over a sweep of alpha       -> shape_<model>.csv
    simulate     Monte Carlo of the protocol               -> simulation_<model>.json, histogram_<model>.csv
    gen-data     synthetic paired assays                   -> pairs.csv
    gof          T_n and Monte Carlo p-values for a file   -> gof.json

Example usage:
    1) `python run.py table1`
    2) `python run.py density --alpha 0.05`
    3) `python run.py gen-data --model laplace --n 199 --sigma 0.4 --seed 7`
       `python run.py gof --input outputs/pairs.csv --reps 100000 --seed 7`
"""

import argparse
import json
import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import pandas as pd
import yaml

from thirdassay import config
from thirdassay import conditional, distributions, estimator, gof, threshold
from thirdassay.distributions import ErrorModel
from thirdassay.exceptions import AssayError, ConvergenceError, DomainError, InputError
from thirdassay.utils import FLOAT_FORMAT, check_count, make_grid, resolve_seed, significant

logger = logging.getLogger(__name__)

COMMANDS = ['table1', 'threshold', 'pdf', 'density', 'exceedance', 'shape', 'simulate', 'gen-data', 'gof']

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CONVERGENCE = 0, 2, 3, 4


@dataclass
class RunConfig:
    command: str
    model: Optional[str] = None
    alpha: float = config.DEFAULT_ALPHA
    sigma: float = config.DEFAULT_SIGMA
    grid_min: float = config.GRID_MIN
    grid_max: float = config.GRID_MAX
    grid_step: float = config.GRID_STEP
    samples: int = 1_000_000
    reps: int = 100_000
    n: int = 199
    mu: float = 0.0
    seed: Optional[int] = None
    tol: float = config.DEFAULT_TOL
    workers: int = config.N_WORKERS
    input: Optional[str] = None
    output: str = 'outputs'
    diff_column: Optional[str] = None
    progress: bool = True

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f'unknown command {self.command!r}')
        if self.model is not None:
            self.model = ErrorModel.parse(self.model).value
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f'alpha must lie strictly between 0 and 1, got {self.alpha}')
        if not self.sigma > 0.0:
            raise DomainError(f'sigma must be positive, got {self.sigma}')
        if not self.grid_min < self.grid_max:
            raise DomainError(f'grid_min must be below grid_max, got {self.grid_min} >= {self.grid_max}')
        if not self.grid_step > 0.0:
            raise DomainError(f'grid_step must be positive, got {self.grid_step}')
        if not self.tol > 0.0:
            raise DomainError(f'tol must be positive, got {self.tol}')
        if not math.isfinite(self.mu):
            raise InputError('mu must be finite')
        for name in ('samples', 'reps', 'n', 'workers'):
            setattr(self, name, check_count(getattr(self, name), name))
        self.seed = resolve_seed(self.seed)
        if self.command == 'gof' and self.input is None:
            raise InputError('gof needs --input (a CSV of paired assays)')

    @property
    def models(self):
        return [ErrorModel.parse(self.model)] if self.model else list(ErrorModel)

    @property
    def grid(self):
        return make_grid(self.grid_min, self.grid_max, self.grid_step)


def load_config(args):
    """YAML values first, explicit flags on top"""
    config_filepath = Path(args.config_filepath) if args.config_filepath else config.DEFAULT_CONFIG
    try:
        with open(config_filepath, 'r') as config_f:
            hyperparams = yaml.load(config_f, Loader=yaml.FullLoader) or {}
    except (OSError, yaml.YAMLError) as err:
        raise InputError(f'cannot read config {config_filepath}: {err}')

    known = {f.name for f in fields(RunConfig)}
    values = {}
    for section in ('run_args', 'grid_args'):
        for key, value in (hyperparams.get(section) or {}).items():
            if key not in known:
                raise InputError(f'unknown key {key!r} in section {section!r} of {config_filepath}')
            values[key] = value

    for key in known:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag

    values['command'] = args.command
    values['progress'] = not args.quiet

    return RunConfig(**values)


def _write_csv(frame, path, float_format=FLOAT_FORMAT):
    frame.to_csv(path, index=False, float_format=float_format, lineterminator='\n', encoding='utf-8')
    logger.info('Wrote %s', path)


def _write_json(payload, path):
    text = json.dumps(payload, indent=2) + '\n'
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    logger.info('Wrote %s', path)
    return text


def _rounded(record):
    return {key: (value if isinstance(value, str) else significant(value)) for key, value in record.items()}


def run_table1(cfg, output_dir):
    table = threshold.table1()
    table['alpha'] = table['alpha'].map('{:g}'.format)
    _write_csv(table, output_dir / 'table1.csv', float_format='%.3f')
    print(table.to_string(index=False))

    r_table = threshold.r_table()
    _write_csv(r_table, output_dir / 'r_table.csv')


def run_threshold(cfg, output_dir):
    payload = {}
    for model in cfg.models:
        solved = threshold.r_of_alpha(model, cfg.alpha)
        payload[model.value] = _rounded({
            'alpha': solved.alpha,
            'r': solved.r,
            'residual': solved.residual,
            'two_sided_quantile': threshold.two_sided_quantile(model, cfg.alpha),
        })
    print(_write_json(payload, output_dir / 'threshold.json'), end='')


def run_pdf(cfg, output_dir):
    xs = cfg.grid
    frame = pd.DataFrame({'x': xs})
    for model in cfg.models:
        frame[model.value] = distributions.pdf(model, xs)
    _write_csv(frame, output_dir / 'pdf.csv')


def run_density(cfg, output_dir):
    for model in cfg.models:
        spec = conditional.ConditionalSpec.from_alpha(model, cfg.alpha)
        density = conditional.curve(spec, cfg.grid, tol=cfg.tol, exceedance_tol=cfg.tol)
        _write_csv(density.to_frame(), output_dir / f'density_{model.value}.csv')

        summary = conditional.shape_summary(density)
        logger.info('%s: %d mode(s) at %s, g/-g peak separation %.3f', model, summary.n_modes,
                    list(summary.modes), conditional.separation(density))


def run_exceedance(cfg, output_dir):
    xs = cfg.grid
    frame = pd.DataFrame({'x': xs})
    for model in cfg.models:
        spec = conditional.ConditionalSpec.from_alpha(model, cfg.alpha)
        frame[model.value] = conditional.exceedance(spec, xs, tol=cfg.tol)
    _write_csv(frame, output_dir / 'exceedance.csv')


def run_shape(cfg, output_dir):
    for model in cfg.models:
        sweep = conditional.shape_sweep(model, config.SWEEP_ALPHAS, cfg.grid, tol=cfg.tol)
        _write_csv(sweep, output_dir / f'shape_{model.value}.csv')
        print(sweep.to_string(index=False))


def run_simulate(cfg, output_dir):
    for model in cfg.models:
        summary = estimator.simulate(model, cfg.alpha, cfg.samples, seed=cfg.seed,
                                     workers=cfg.workers, progress=cfg.progress)
        _write_json(_rounded(summary.to_dict()), output_dir / f'simulation_{model.value}.json')
        if summary.conditional_samples.size:
            _write_csv(estimator.histogram(summary.conditional_samples), output_dir / f'histogram_{model.value}.csv')


def run_gen_data(cfg, output_dir):
    model = ErrorModel.parse(cfg.model or ErrorModel.LAPLACE)
    pairs = gof.synthetic_pairs(model, cfg.n, sigma=cfg.sigma, mu=cfg.mu, seed=cfg.seed)
    _write_csv(pairs, output_dir / 'pairs.csv')


def run_gof(cfg, output_dir):
    try:
        frame = pd.read_csv(cfg.input)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise InputError(f'cannot read {cfg.input}: {err}')

    differences = gof.read_differences(frame, diff_column=cfg.diff_column)
    reports = gof.gof_report(differences, sigma=cfg.sigma, reps=cfg.reps, seed=cfg.seed,
                             workers=cfg.workers, progress=cfg.progress)
    payload = {report.model.value: _rounded(report.to_dict()) for report in reports}
    print(_write_json(payload, output_dir / 'gof.json'), end='')


RUNNERS = {
    'table1': run_table1,
    'threshold': run_threshold,
    'pdf': run_pdf,
    'density': run_density,
    'exceedance': run_exceedance,
    'shape': run_shape,
    'simulate': run_simulate,
    'gen-data': run_gen_data,
    'gof': run_gof,
}


def run(cfg):
    """Execute one command; returns the process exit status"""
    output_dir = Path(cfg.output)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        RUNNERS[cfg.command](cfg, output_dir)
    except ConvergenceError as err:
        logger.error('numerical routine did not converge: %s', err)
        return EXIT_CONVERGENCE
    except (AssayError, OSError) as err:
        logger.error('%s', err)
        return EXIT_INPUT

    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config_filepath', help='Provide the filepath string to the run config...')
    common.add_argument('--model', choices=config.MODELS, help='Error law; both laws when omitted')
    common.add_argument('--alpha', type=float, help='Rejection rate of the duplicate pair')
    common.add_argument('--sigma', type=float, help='Prescribed assay standard deviation')
    common.add_argument('--grid_min', '--grid-min', dest='grid_min', type=float)
    common.add_argument('--grid_max', '--grid-max', dest='grid_max', type=float)
    common.add_argument('--grid_step', '--grid-step', dest='grid_step', type=float)
    common.add_argument('--samples', type=int, help='Protocol executions for simulate')
    common.add_argument('--reps', type=int, help='Monte Carlo replications for gof p-values')
    common.add_argument('--n', type=int, help='Number of batches for gen-data')
    common.add_argument('--mu', type=float, help='True value for gen-data')
    common.add_argument('--seed', type=int)
    common.add_argument('--tol', type=float, help='Absolute quadrature tolerance')
    common.add_argument('--workers', type=int)
    common.add_argument('--input', help='CSV of paired assays (x1,x2) or differences')
    common.add_argument('--output', help='Output directory')
    common.add_argument('--diff_column', '--diff-column', dest='diff_column',
                        help='Read differences from this column instead of x1 - x2')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true')
    verbosity.add_argument('--quiet', action='store_true')

    parser = argparse.ArgumentParser(prog='thirdassay', description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subparsers = parser.add_subparsers(dest='command', required=True)
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common])

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level)

    # Flags or config values out of range are usage errors, like argparse rejections
    try:
        cfg = load_config(args)
    except AssayError as err:
        logger.error('%s', err)
        return EXIT_USAGE

    return run(cfg)
