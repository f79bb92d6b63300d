import argparse
import logging
import sys

from galerkinrks.config import ExperimentConfig
from galerkinrks.exceptions import GalerkinError
from galerkinrks.experiments import ExperimentRunner, failed_cells

COMMANDS = {
    "reconstruct": ExperimentRunner.reconstruct,
    "table1": ExperimentRunner.table1,
    "table2": ExperimentRunner.table2,
    "figures": ExperimentRunner.figures,
    "diagnose": ExperimentRunner.diagnose,
}


def int_list(text):
    return [int(item) for item in text.split(",") if item.strip()]


def str_list(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='JSON file with experiment parameters (flags override it)')
    common.add_argument('--generator', choices=['sinc', 'gauss', 'spline'], help='Trial generator')
    common.add_argument('--testgen', choices=['indicator', 'sinc', 'gauss', 'spline'], help='Test generator')
    common.add_argument('--law', type=int, choices=[0, 1, 2, 3], help='Signal law (2 and 3 use random shifts)')
    common.add_argument('--L', type=int_list, help='Comma separated window half-widths')
    common.add_argument('--Ltilde', type=int, help='Test window half-width (least-squares sub-Galerkin)')
    common.add_argument('--sampling', type=str_list, help='Comma separated list of nonuniform,jittered,ctem')
    common.add_argument('--shift-mode', dest='shift_mode', choices=['zero', 'random'], help='Shift perturbations of the trial family')
    common.add_argument('--shift-bound', dest='shift_bound', type=float, help='Bound of the random shifts')
    common.add_argument('--seed', type=int, help='Seed of single runs')
    common.add_argument('--seeds', type=int_list, help='Comma separated seeds of table runs')
    common.add_argument('--tol', type=float, help='Increment tolerance of the iterative method')
    common.add_argument('--max-iter', dest='max_iter', type=int, help='Step limit of the iterative method')
    common.add_argument('--method', choices=['direct', 'iterative'], help='Reconstruction method')
    common.add_argument('--out', type=str, help='Output directory')
    common.add_argument('--padding', type=int, help='Kernel padding M')
    common.add_argument('--Lsig-margin', dest='Lsig_margin', type=int, help='Reference signal window minus L')
    common.add_argument('--gap-lo', dest='gap_lo', type=float, help='Smallest nonuniform gap')
    common.add_argument('--gap-hi', dest='gap_hi', type=float, help='Largest nonuniform gap')
    common.add_argument('--jitter', type=float, help='Jitter bound, below 1/2')
    common.add_argument('--grid-step', dest='grid_step', type=float, help='C-TEM bracketing grid step')
    common.add_argument('--root-tol', dest='root_tol', type=float, help='C-TEM root tolerance')
    common.add_argument('--amplitude', type=float, help='Scale of the reference signal (0 gives the zero signal)')
    common.add_argument('--protocol', choices=['custom', 'published'], help='Use the flags or the published cell lists')
    common.add_argument('--workers', type=int, help='Worker threads of table runs')
    common.add_argument('--verbose', '-v', action='count', default=0, help='Log progress (-vv for numerical detail)')

    parser = argparse.ArgumentParser(
        prog='galerkinrks',
        description='GalerkinRKS reconstructs signals in reproducing kernel spaces from nonuniform samples with Galerkin methods, and regenerates the tables and figure data of its quasi-optimality and stability experiments.')
    subparsers = parser.add_subparsers(dest='command', required=True)
    subparsers.add_parser('reconstruct', parents=[common], help='Reconstruct one signal and write its error metrics')
    subparsers.add_parser('table1', parents=[common], help='Quasi-optimality table')
    subparsers.add_parser('table2', parents=[common], help='Condition number table')
    subparsers.add_parser('figures', parents=[common], help='Signal and difference grids')
    subparsers.add_parser('diagnose', parents=[common], help='Admissibility and stability reports')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    if args.verbose:
        logging.getLogger('galerkinrks').setLevel(logging.DEBUG if args.verbose > 1 else logging.INFO)

    options = vars(args)
    overrides = {key: value for key, value in options.items()
                 if key not in ('command', 'config', 'verbose') and value is not None}
    try:
        if args.config:
            config = ExperimentConfig.from_file(args.config, overrides)
        else:
            config = ExperimentConfig(overrides)
        runner = ExperimentRunner(config)
        result = COMMANDS[args.command](runner)
        if args.command in ('table1', 'table2'):
            print(f'{args.command}: {len(result)} cells, {failed_cells(result)} failed')
    except GalerkinError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(main())
