import argparse
import filecmp
import logging
import os

import pytest

import main
from measures import SpatialGrid
from runners.dist_runner import parse_measure
from utils.arg_utils import (
    config_hash,
    float_list,
    glue_negative_values,
    load_defaults,
    merge_args,
    parse_flat_lines,
    str2bool,
)
from utils.errors import ConfigError
from utils.file_utils import read_comment_lines, read_frame, write_frame
from utils.runner_utils import tagged_logger

from conftest import ROOT, SMALL_CONFIG

SOLVE_FILES = ['value.csv', 'plans.csv', 'lattice.csv', 'tree.csv', 'convergence.csv']


def run(*argv) -> int:
    return main.main([str(a) for a in argv])


@pytest.fixture
def solved(small_config, tmp_path):
    out = tmp_path / 'solve'
    assert run('solve', '--config', small_config, '--output-dir', out) == 0
    return out


def test_unknown_payoff_is_a_usage_error(small_config, tmp_path, capsys):
    assert run('solve', '--config', small_config, '--output-dir', tmp_path, '--payoff', 'no-such-game') == 2
    assert capsys.readouterr().err.startswith('error: unknown-spec:')


@pytest.mark.parametrize('line', ['grid.n_points = 64', 'grid.colour = blue', 'no equals sign'])
def test_bad_config_is_a_usage_error(tmp_path, line, capsys):
    path = tmp_path / 'bad.cfg'
    path.write_text(SMALL_CONFIG + line + '\n')
    assert run('solve', '--config', path, '--output-dir', tmp_path / 'out') == 2
    assert 'error: invalid-config:' in capsys.readouterr().err


def test_solve_writes_its_tables(solved):
    for name in SOLVE_FILES:
        assert (solved / name).exists(), name
    assert (solved / '.config' / 'config.yaml').exists()
    value = read_frame(str(solved / 'value.csv'))
    assert 'non_revealing' in value.columns
    assert (value['value'] <= value['non_revealing'] + 1e-10).all()
    assert read_comment_lines(str(solved / 'value.csv'))[0].startswith('winfo ')


def test_solve_is_deterministic_across_threads(small_config, solved, tmp_path):
    other = tmp_path / 'threaded'
    assert run('solve', '--config', small_config, '--output-dir', other, '--threads', 2) == 0
    for name in SOLVE_FILES:
        assert filecmp.cmp(solved / name, other / name, shallow=False), name


GOLDEN = os.path.join(ROOT, 'golden')
REFERENCE = os.path.join(ROOT, 'configs', 'reference.cfg')


@pytest.mark.slow
def test_reference_solve_matches_golden(tmp_path):
    assert os.path.isdir(GOLDEN), 'golden outputs are missing; generate them with `bash main.sh golden`'
    assert run('solve', '--config', REFERENCE, '--output-dir', tmp_path) == 0
    for name in SOLVE_FILES:
        assert filecmp.cmp(tmp_path / name, os.path.join(GOLDEN, name), shallow=False), name


def test_martingale_check_on_the_solved_tree(small_config, solved, tmp_path):
    argv = ['check', '--config', small_config, '--which', 'martingale', '--output-dir', tmp_path / 'check']
    assert run(*argv, '--tree-file', solved / 'tree.csv') == 0
    assert (tmp_path / 'check' / 'report.csv').exists()
    assert (tmp_path / 'check' / 'run_report.csv').exists()


def test_corrupted_tree_fails_the_check(small_config, solved, tmp_path):
    path = str(solved / 'tree.csv')
    frame = read_frame(path)
    frame.loc[1, 'prob'] = 0.5 * frame.loc[1, 'prob']
    broken = str(tmp_path / 'broken.csv')
    write_frame(frame, broken, read_comment_lines(path))
    argv = ['check', '--config', small_config, '--which', 'martingale', '--output-dir', tmp_path / 'check']
    assert run(*argv, '--tree-file', broken) == 1


@pytest.mark.parametrize('suite', ['martingale', 'wasserstein', 'heat', 'matrix-game', 'value-oracle', 'sandwich',
                                   'convergence', 'strategy', 'reproducibility'])
def test_check_suite_passes(small_config, tmp_path, suite):
    out = tmp_path / 'check'
    assert run('check', '--config', small_config, '--which', suite, '--output-dir', out) == 0
    row = read_frame(str(out / 'run_report.csv')).iloc[0]
    assert row['suite'] == suite
    assert row['passed']
    assert row['n_checks'] > 0


def test_reproducibility_against_stored_outputs(small_config, solved, tmp_path):
    argv = ['check', '--config', small_config, '--which', 'reproducibility']
    assert run(*argv, '--output-dir', tmp_path / 'same', '--golden-dir', solved) == 0
    path = str(solved / 'value.csv')
    frame = read_frame(path)
    frame.loc[0, 'value'] += 1e-6
    write_frame(frame, path, read_comment_lines(path))
    assert run(*argv, '--output-dir', tmp_path / 'drifted', '--golden-dir', solved) == 1


@pytest.mark.parametrize('sigma', ['optimal', 'nonrevealing'])
def test_exact_play(small_config, tmp_path, sigma):
    out = tmp_path / 'play'
    assert run('play', '--config', small_config, '--output-dir', out, '--sigma', sigma,
               '--samples', 0, '--solve-first') == 0
    summary = read_frame(str(out / 'summary.csv')).iloc[0]
    assert summary['guarantee_ok']
    assert summary['exact'] <= summary['upper_guarantee'] + 1e-9
    assert summary['lower_bound'] <= summary['upper_guarantee'] + 1e-9


def test_optimal_play_needs_a_table(small_config, tmp_path, capsys):
    assert run('play', '--config', small_config, '--output-dir', tmp_path, '--sigma', 'optimal') == 2
    assert 'error: invalid-config:' in capsys.readouterr().err


def test_play_from_a_solved_table(small_config, solved, tmp_path):
    out = tmp_path / 'play'
    assert run('play', '--config', small_config, '--output-dir', out, '--table-dir', solved,
               '--tau', 'uniform', '--samples', 200) == 0
    assert len(read_frame(str(out / 'playouts.csv'))) == 200


def test_dist(small_config, tmp_path, capsys):
    assert run('dist', '--config', small_config, '--output-dir', tmp_path, '0:1', '2:1') == 0
    assert capsys.readouterr().out.startswith("d1=")
    row = read_frame(str(tmp_path / 'dist.csv')).iloc[0]
    assert row['d1'] == pytest.approx(2.0)
    assert row['total_variation'] == pytest.approx(1.0)


def test_parse_measure(tmp_path):
    grid = SpatialGrid(half_width=4.0, n_points=65)
    m = parse_measure(grid, '-1:0.25,1:0.75')
    assert m.mean == pytest.approx(0.5)
    path = tmp_path / 'm.csv'
    path.write_text('x,weight\n0.0,1.0\n')
    assert parse_measure(grid, str(path)).mean == 0.0
    with pytest.raises(ConfigError):
        parse_measure(grid, 'not-a-measure')


def test_flags_override_the_config_file(small_config):
    args = argparse.Namespace(config=small_config, command='solve', n_steps=5, payoff=None, threads=None)
    flat = merge_args(args)
    assert flat['solve.n_steps'] == 5
    assert flat['grid.n_points'] == 65
    assert flat['lattice.resolution'] == 4


def test_config_hash_ignores_where_and_how_fast():
    flat = load_defaults()
    moved = dict(flat, **{'output.dir': '/elsewhere', 'run.threads': 8})
    assert config_hash(moved) == config_hash(flat)
    assert config_hash(dict(flat, **{'solve.n_steps': 9})) != config_hash(flat)


def test_flat_lines_parse_yaml_values():
    known = load_defaults()
    flat = parse_flat_lines(['# comment', 'tolerance.identity = 1e-9', 'lattice.support = [-2.0, 2.0]'], known)
    assert flat == {'tolerance.identity': 1e-9, 'lattice.support': [-2.0, 2.0]}


def test_lattice_flags_override_the_config(small_config, tmp_path):
    out = tmp_path / 'coarse'
    assert run('solve', '--config', small_config, '--output-dir', out,
               '--support', '-1,1', '--lattice-res', 2) == 0
    lattice = read_frame(str(out / 'lattice.csv'))
    assert len(lattice) == 3
    assert sorted(lattice['coord_1'].tolist()) == [0.0, 0.5, 1.0]


def test_support_off_the_grid_is_a_usage_error(small_config, tmp_path, capsys):
    assert run('solve', '--config', small_config, '--output-dir', tmp_path, '--support', '0.3,1') == 2
    assert 'error: invalid-config:' in capsys.readouterr().err


def test_support_flag_values():
    assert float_list('-1,1') == [-1.0, 1.0]
    assert float_list('-2, 0,2') == [-2.0, 0.0, 2.0]
    with pytest.raises(argparse.ArgumentTypeError):
        float_list('a,b')
    assert glue_negative_values(['solve', '--support', '-1,1', '--threads', '2']) == \
        ['solve', '--support=-1,1', '--threads', '2']
    args = main.get_parser().parse_args(glue_negative_values(['solve', '--support', '-2,2', '--lattice-res', '3']))
    flat = merge_args(argparse.Namespace(**dict(vars(args), config=None)))
    assert flat['lattice.support'] == [-2.0, 2.0]
    assert flat['lattice.resolution'] == 3


def test_tagged_logger_restores_the_name():
    log = logging.getLogger('winfo.tagging')
    with tagged_logger(log, 'N=4'):
        assert log.name == 'winfo.tagging[N=4]'
    with pytest.raises(RuntimeError):
        with tagged_logger(log, 'N=8'):
            raise RuntimeError('boom')
    assert log.name == 'winfo.tagging'
    with tagged_logger(log, None):
        assert log.name == 'winfo.tagging'


@pytest.mark.parametrize('word,expected', [('yes', True), ('On', True), ('0', False), (' false ', False)])
def test_str2bool(word, expected):
    assert str2bool(word) is expected


def test_str2bool_rejects_other_words():
    with pytest.raises(argparse.ArgumentTypeError):
        str2bool('maybe')
