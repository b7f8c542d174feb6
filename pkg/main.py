import argparse
import logging
import logging.config
import os
import sys
from datetime import datetime

from pytz import timezone

logging.basicConfig(
    format="%(asctime)s | %(levelname)s %(name)s %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
    level=os.environ.get("LOGLEVEL", "INFO").upper(),
    stream=sys.stdout
)
logger = logging.getLogger(__name__)

from utils.arg_utils import (
    CHECK_SUITES,
    SCHEMES,
    SIGMA_CHOICES,
    TAU_CHOICES,
    ExperimentConfig,
    arg_constraint,
    flat_lines,
    float_list,
    glue_negative_values,
    str2bool,
)
from utils.errors import USAGE_ERRORS, WinfoError


def add_common_args(parser):
    parser.add_argument('--config', type=str, default=None, help='flat `section.key = value` file')
    parser.add_argument('--output-dir', dest='output_dir', type=str, default=None)
    parser.add_argument('--threads', type=int, default=None, help='falls back to $WINFO_THREADS, then 1')
    parser.add_argument('--payoff', type=str, default=None, help='registered payoff spec name')
    parser.add_argument('--payoff-table', dest='payoff_table', type=str, default=None,
                        help='CSV t,x,u,v,f for --payoff table')
    parser.add_argument('--n-steps', dest='n_steps', type=int, default=None)
    parser.add_argument('--scheme', type=str, default=None, choices=SCHEMES)
    parser.add_argument('--lattice-res', '--resolution', dest='resolution', type=int, default=None,
                        help='belief lattice resolution')
    parser.add_argument('--support', type=float_list, default=None, help='support nodes x1,x2[,x3]')


def get_parser():
    parser = argparse.ArgumentParser(
        prog='winfo', description='Zero-sum games where the informed player observes a Brownian motion.')
    subparsers = parser.add_subparsers(dest='command', required=True)

    solve = subparsers.add_parser('solve', help='value table, splitting plans and convergence study')
    add_common_args(solve)

    play = subparsers.add_parser('play', help='play the discrete game between two strategies')
    add_common_args(play)
    play.add_argument('--sigma', type=str, default=None, choices=SIGMA_CHOICES)
    play.add_argument('--tau', type=str, default=None, choices=TAU_CHOICES)
    play.add_argument('--samples', type=int, default=None, help='0 evaluates exactly by enumeration')
    play.add_argument('--seed', type=int, default=None)
    play.add_argument('--solve-first', dest='solve_first', type=str2bool, nargs='?', const=True, default=None)
    play.add_argument('--table-dir', dest='table_dir', type=str, default=None,
                      help='directory holding value.csv, plans.csv and lattice.csv')
    play.add_argument('--sigma-file', dest='sigma_file', type=str, default=None, help='tree file for --sigma file')
    play.add_argument('--tau-file', dest='tau_file', type=str, default=None,
                      help='CSV stage,history,v for --tau file')

    check = subparsers.add_parser('check', help='numerical checks of the value and its equation')
    add_common_args(check)
    check.add_argument('--which', type=str, default=None, choices=CHECK_SUITES)
    check.add_argument('--seed', type=int, default=None)
    check.add_argument('--tree-file', dest='tree_file', type=str, default=None,
                       help='tree to validate instead of the solved one')
    check.add_argument('--golden-dir', dest='golden_dir', type=str, default=None,
                       help='solve outputs the reproducibility suite must match')

    dist = subparsers.add_parser('dist', help='Wasserstein and total variation distances')
    add_common_args(dist)
    dist.add_argument('first', type=str, help='CSV x,weight or atoms x:w,...')
    dist.add_argument('second', type=str, help='CSV x,weight or atoms x:w,...')
    dist.add_argument('--elapsed', type=float, default=0.0, help='heat-evolve both measures first')

    return parser


def set_struct(cfg: ExperimentConfig) -> str:
    root = os.path.abspath(
        os.path.dirname(__file__)
    )

    if cfg.output_dir:
        output_dir = os.path.abspath(cfg.output_dir)
    else:
        now = datetime.now()
        now = now.astimezone(timezone(cfg.timezone))
        output_dir = os.path.join(
            root,
            "outputs",
            now.strftime("%Y-%m-%d"),
            now.strftime("%H-%M-%S")
        )

    os.makedirs(output_dir, exist_ok=True)

    job_logging_cfg = {
        'version': 1,
        'formatters': {
            'simple': {
                'format': '[%(asctime)s][%(name)s][%(levelname)s] - %(message)s'
            }
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler', 'formatter': 'simple', 'stream': 'ext://sys.stdout'
            },
            'file': {
                'class': 'logging.FileHandler', 'formatter': 'simple',
                'filename': os.path.join(output_dir, 'run.log')
            }
        },
        'root': {
            'level': os.environ.get("LOGLEVEL", "INFO").upper(), 'handlers': ['console', 'file']
            },
        'disable_existing_loggers': False
    }
    logging.config.dictConfig(job_logging_cfg)

    cfg_dir = os.path.join(output_dir, ".config")
    os.makedirs(cfg_dir, exist_ok=True)

    with open(os.path.join(cfg_dir, "config.yaml"), "w") as f:
        print(f"# config={cfg.config_hash}", file=f)
        for line in flat_lines(cfg.flat):
            print(line, file=f)

    return output_dir


def build_runner(args, cfg: ExperimentConfig, output_dir: str):
    if args.command == 'solve':
        from runners import SolveRunner as Runner
    elif args.command == 'play':
        from runners import PlayRunner as Runner
    elif args.command == 'check':
        from runners import CheckRunner as Runner
    else:
        from runners import DistRunner
        return DistRunner(cfg, output_dir, args.first, args.second, args.elapsed)
    return Runner(cfg, output_dir)


def main(argv=None) -> int:
    args = get_parser().parse_args(glue_negative_values(sys.argv[1:] if argv is None else argv))

    try:
        cfg = arg_constraint(args)
        output_dir = set_struct(cfg)
        logger.info(f'{args.command}: config={cfg.config_hash} output={output_dir} threads={cfg.threads}')
        return build_runner(args, cfg, output_dir).run()
    except WinfoError as e:
        print(f'error: {e.code}: {e}', file=sys.stderr)
        return 2 if isinstance(e, USAGE_ERRORS) else 1


if __name__ == '__main__':
    sys.exit(main())
