import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import ValidationError

from src.common.helpers import ExceptionHelper
from src.constants import (
    DEFAULT_EPS_LIST,
    DEFAULT_K_LIST,
    DEFAULT_RECORD_TIMES,
    EXIT_NUMERICAL,
    EXIT_SUCCESS,
    SYMBOL_POINTS,
)
from src.domain.fractional import Branch
from src.infra.adapters.config.loader import load_config
from src.infra.adapters.reports.json_writer import JsonReportWriter
from src.jobs.job_convergence_study import run_convergence_study
from src.schemas.params import Family
from src.schemas.plan import Experiment, ExperimentPlan
from src.services.exceptions import InvalidSpec, LabException
from src.services.lab import ServiceLab

logger = logging.getLogger(__name__)


def float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(item) for item in text.split(',') if item.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma separated numbers, got {text!r}')


def _service(args) -> ServiceLab:
    return ServiceLab(output_dir=args.out) if args.out else ServiceLab()


def _validate(args):
    return _service(args).validate(load_config(args.config))


def _calibrate(args):
    return _service(args).calibrate(load_config(args.config))


def _evolve(args):
    report = _service(args).evolve(
        load_config(args.config), epsilon=args.epsilon, t_final=args.tfinal, dt=args.dt, record=args.record
    )
    return {'dt': report.dt, 'n_steps': report.n_steps, 'diagnostics': report.diagnostics}


def _symbol(args):
    return _service(args).symbol(load_config(args.config), args.kmin, args.kmax, args.npoints)


def _kappa(args):
    branch = Branch(args.branch) if args.branch else None
    return _service(args).kappa(load_config(args.config), branch, args.klist)


def _auxlimit(args):
    family = Family(args.family) if args.family else None
    return _service(args).auxlimit(load_config(args.config), args.eps_list, args.phi, family)


def _converge(args):
    try:
        plan = ExperimentPlan(
            base_config=args.config,
            experiment=Experiment(args.experiment),
            eps_list=args.eps_list,
            record_times=args.record,
            output_dir=args.out,
            seed=args.seed,
            n_modes=args.n_modes,
        )
    except ValidationError as exc:
        raise InvalidSpec(detail=f'Validation error - {exc.errors()[0]["msg"]}') from exc
    return run_convergence_study(plan)


def _check(args):
    return _service(args).check(args.manifest)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='bgk-lab', description='Linear BGK kinetic lab for fractional limits')
    subparsers = parser.add_subparsers(dest='command', required=True)

    def command(name: str, handler, help_text: str, config: bool = True) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text)
        if config:
            sub.add_argument('--config', type=Path, required=True, help='KEY=VALUE config file')
        sub.add_argument('--out', type=Path, default=None, help='output directory')
        sub.set_defaults(handler=handler)
        return sub

    command('validate', _validate, 'check the parameter regime of a config')
    command('calibrate', _calibrate, 'calibrate the equilibrium and report its moments')

    sub = command('evolve', _evolve, 'run the kinetic solver and write moment snapshots')
    sub.add_argument('--epsilon', type=float, default=None)
    sub.add_argument('--tfinal', type=float, default=None)
    sub.add_argument('--dt', type=float, default=None)
    sub.add_argument('--record', type=float_list, default=DEFAULT_RECORD_TIMES)

    sub = command('symbol', _symbol, 'hydrodynamic eigenvalues over a k sweep')
    sub.add_argument('--kmin', type=float, default=2.0**-6)
    sub.add_argument('--kmax', type=float, default=2.0**-3)
    sub.add_argument('--npoints', type=int, default=SYMBOL_POINTS)

    sub = command('kappa', _kappa, 'fit the effective fractional coefficient')
    sub.add_argument('--branch', choices=[item.value for item in Branch], default=None)
    sub.add_argument('--klist', type=float_list, default=DEFAULT_K_LIST)

    sub = command('auxlimit', _auxlimit, 'limit integrals against the fractional Laplacian')
    sub.add_argument('--family', choices=[item.value for item in Family], default=None)
    sub.add_argument('--eps-list', type=float_list, default=DEFAULT_EPS_LIST)
    sub.add_argument('--phi', default='fourier: 1, 0.5')

    sub = command('converge', _converge, 'epsilon sweep against the fractional limit')
    sub.add_argument('--experiment', choices=[item.value for item in Experiment], default='fourier_limit')
    sub.add_argument('--eps-list', type=float_list, default=DEFAULT_EPS_LIST)
    sub.add_argument('--record', type=float_list, default=DEFAULT_RECORD_TIMES)
    sub.add_argument('--seed', type=int, default=None)
    sub.add_argument('--n-modes', type=int, default=None)

    sub = command('check', _check, 're-validate the bounds stored in a manifest', config=False)
    sub.add_argument('manifest', type=Path)
    return parser


def _exit_code(result: Any) -> int:
    if getattr(result, 'ok', True) is False:
        return EXIT_NUMERICAL
    return EXIT_SUCCESS


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = args.handler(args)
    except LabException as exc:
        print(ExceptionHelper.describe(exc), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        logger.exception('Unexpected failure in %s', args.command)
        print(ExceptionHelper.describe(exc), file=sys.stderr)
        return 1
    print(JsonReportWriter(args.out or Path('.')).dumps(result))
    return _exit_code(result)
