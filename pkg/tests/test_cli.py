import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from thirdassay import cli, conditional, config
from thirdassay.exceptions import DomainError, InputError


def run(tmp_path, *argv):
    return cli.main([*argv, '--output', str(tmp_path), '--quiet'])


def test_table1(tmp_path):
    assert run(tmp_path, 'table1') == cli.EXIT_OK
    lines = (tmp_path / 'table1.csv').read_text(encoding='utf-8').split('\n')
    assert lines[0] == 'alpha,normal,laplace'
    assert '0.01,2.576,3.256' in lines
    assert '0.005,2.807,3.746' in lines
    assert (tmp_path / 'r_table.csv').exists()


def test_threshold_json(tmp_path):
    assert run(tmp_path, 'threshold', '--model', 'normal', '--alpha', '0.05') == cli.EXIT_OK
    payload = json.loads((tmp_path / 'threshold.json').read_text())
    assert list(payload) == ['normal']
    assert payload['normal']['r'] == pytest.approx(2.771807, abs=1e-6)


def test_pdf_file(tmp_path):
    assert run(tmp_path, 'pdf', '--grid_min', '-1', '--grid_max', '1', '--grid_step', '0.5') == cli.EXIT_OK
    frame = pd.read_csv(tmp_path / 'pdf.csv')
    assert list(frame.columns) == ['x', 'normal', 'laplace']
    assert list(frame['x']) == [-1.0, -0.5, 0.0, 0.5, 1.0]


def test_density_files_are_symmetric(tmp_path):
    status = run(tmp_path, 'density', '--alpha', '0.05', '--grid-min', '-2', '--grid-max', '2', '--grid-step', '0.05')
    assert status == cli.EXIT_OK
    for model in ('normal', 'laplace'):
        text = (tmp_path / f'density_{model}.csv').read_text(encoding='utf-8')
        assert text.startswith('x,g_plus,g_minus,h,exceedance\n')
        assert '\r' not in text
        frame = pd.read_csv(tmp_path / f'density_{model}.csv')
        np.testing.assert_allclose(frame['h'], frame['h'][::-1].to_numpy(), atol=2e-8)


def test_exceedance_file(tmp_path):
    assert run(tmp_path, 'exceedance', '--grid_min', '0', '--grid_max', '1', '--grid_step', '0.5') == cli.EXIT_OK
    frame = pd.read_csv(tmp_path / 'exceedance.csv')
    assert list(frame.columns) == ['x', 'normal', 'laplace']
    assert frame.loc[0, 'normal'] == pytest.approx(0.5, abs=1e-6)


def test_simulate_outputs(tmp_path):
    assert run(tmp_path, 'simulate', '--model', 'normal', '--samples', '20000', '--seed', '3') == cli.EXIT_OK
    summary = json.loads((tmp_path / 'simulation_normal.json').read_text())
    assert summary['seed'] == 3 and summary['n'] == 20000
    assert summary['third_draws'] == summary['rejections']
    hist = pd.read_csv(tmp_path / 'histogram_normal.csv')
    assert hist['count'].sum() == summary['rejections']


def test_gen_data_feeds_gof(tmp_path):
    assert run(tmp_path, 'gen-data', '--model', 'laplace', '--n', '199', '--sigma', '0.4', '--seed', '7') == cli.EXIT_OK
    pairs = pd.read_csv(tmp_path / 'pairs.csv')
    assert list(pairs.columns) == ['x1', 'x2'] and len(pairs) == 199

    status = run(tmp_path, 'gof', '--input', str(tmp_path / 'pairs.csv'), '--reps', '500', '--seed', '7')
    assert status == cli.EXIT_OK
    reports = json.loads((tmp_path / 'gof.json').read_text())
    assert list(reports) == ['normal', 'laplace']
    for report in reports.values():
        assert 0.0 < report['p_value'] <= 1.0
        assert report['n'] == 199


def test_gof_reads_a_difference_column(tmp_path):
    pd.DataFrame({'diff': [0.1, -0.3, 0.25, 0.05]}).to_csv(tmp_path / 'diffs.csv', index=False)
    status = run(tmp_path, 'gof', '--input', str(tmp_path / 'diffs.csv'), '--diff-column', 'diff', '--reps', '100')
    assert status == cli.EXIT_OK


def test_seeded_output_is_byte_identical(tmp_path):
    first, second = tmp_path / 'a', tmp_path / 'b'
    for out in (first, second):
        assert run(out, 'gen-data', '--n', '50', '--seed', '11') == cli.EXIT_OK
        assert run(out, 'gof', '--input', str(out / 'pairs.csv'), '--reps', '300', '--seed', '11') == cli.EXIT_OK
    for name in ('pairs.csv', 'gof.json'):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_exit_status_for_bad_input(tmp_path):
    (tmp_path / 'bad.csv').write_text('x1,x2\n1.0,abc\n', encoding='utf-8')
    assert run(tmp_path, 'gof', '--input', str(tmp_path / 'bad.csv')) == cli.EXIT_INPUT
    assert run(tmp_path, 'gof', '--input', str(tmp_path / 'missing.csv')) == cli.EXIT_INPUT


def test_usage_error_exits_with_two(tmp_path):
    with pytest.raises(SystemExit) as info:
        run(tmp_path, 'plot')
    assert info.value.code == cli.EXIT_USAGE


def test_out_of_range_flags_are_usage_errors(tmp_path):
    assert run(tmp_path, 'threshold', '--alpha', '1.5') == cli.EXIT_USAGE
    assert run(tmp_path, 'density', '--grid_step', '0') == cli.EXIT_USAGE
    assert run(tmp_path, 'gof') == cli.EXIT_USAGE
    assert not (tmp_path / 'threshold.json').exists()


def test_yaml_config_and_flag_override(tmp_path):
    config_file = tmp_path / 'run.yaml'
    config_file.write_text('run_args:\n    alpha: 0.1\n    seed: 5\ngrid_args:\n    grid_step: 0.5\n', encoding='utf-8')
    args = cli.build_parser().parse_args(['threshold', '--config_filepath', str(config_file), '--seed', '9'])
    cfg = cli.load_config(args)
    assert cfg.alpha == 0.1 and cfg.seed == 9 and cfg.grid_step == 0.5

    config_file.write_text('run_args:\n    colour: blue\n', encoding='utf-8')
    with pytest.raises(InputError):
        cli.load_config(args)


def test_run_config_validation():
    with pytest.raises(DomainError):
        cli.RunConfig(command='density', grid_min=1.0, grid_max=-1.0)
    with pytest.raises(DomainError):
        cli.RunConfig(command='density', grid_step=0.0)
    assert cli.RunConfig(command='table1').seed == 42


def test_simulate_and_density_outputs_are_byte_identical(tmp_path):
    first, second = tmp_path / 'a', tmp_path / 'b'
    for out in (first, second):
        assert run(out, 'simulate', '--model', 'laplace', '--samples', '30000', '--seed', '5') == cli.EXIT_OK
        assert run(out, 'density', '--grid_min', '-1', '--grid_max', '1', '--grid_step', '0.25') == cli.EXIT_OK
    for name in ('simulation_laplace.json', 'histogram_laplace.csv', 'density_normal.csv', 'density_laplace.csv'):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_tol_flag_reaches_the_density_quadrature(tmp_path, monkeypatch):
    seen = []
    g_1d = conditional.g_1d

    def recording(spec, x, tol=config.G_TOL):
        seen.append(tol)
        return g_1d(spec, x, tol=tol)

    monkeypatch.setattr(conditional, 'g_1d', recording)
    status = run(tmp_path, 'density', '--model', 'normal', '--tol', '1e-7',
                 '--grid_min', '-1', '--grid_max', '1', '--grid_step', '0.5')
    assert status == cli.EXIT_OK
    assert seen[0] == 1e-7


def test_requirements_are_pinned():
    manifest = Path(__file__).resolve().parent.parent / 'requirements.txt'
    lines = [line for line in manifest.read_text(encoding='utf-8').splitlines() if line.strip()]
    assert lines and all('==' in line for line in lines)
