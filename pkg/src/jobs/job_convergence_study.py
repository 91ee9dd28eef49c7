import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.common.decorators import log_elapsed
from src.constants import CONSTANT_SPREAD
from src.domain.diagnostics import constants_stable, scaled_constants, theorem_residuals
from src.domain.fractional import Branch, KappaFit, leray_project, solve_fractional_heat, solve_fractional_stokes
from src.domain.kinetic import Trajectory
from src.domain.lattice import ScalarField, VectorField
from src.infra.adapters.config.loader import load_config
from src.schemas.params import Conservation, Family
from src.schemas.plan import Experiment, ExperimentPlan
from src.schemas.reports import AuxLimitReport, CaseResult, ConvergenceReport, SymbolReport
from src.services.exceptions import UnsupportedCombination
from src.services.lab import ModelContext, ServiceLab
from src.settings import get_settings

logger = logging.getLogger(__name__)


def _check_experiment(experiment: Experiment, context: ModelContext):
    params = context.params
    if experiment == Experiment.FOURIER_LIMIT:
        if params.conservation != Conservation.ENERGY or params.family == Family.CLASSICAL:
            raise UnsupportedCombination(detail='fourier_limit needs a heavy_tail or gaussian energy model')
    elif experiment == Experiment.STOKES_LIMIT:
        if params.conservation != Conservation.MASS_MOMENTUM or params.d != 2:
            raise UnsupportedCombination(detail='stokes_limit needs a d=2 mass_momentum model')
    elif experiment == Experiment.CLASSICAL:
        if params.family != Family.CLASSICAL or params.conservation != Conservation.ENERGY:
            raise UnsupportedCombination(detail='classical needs the classical family with energy conservation')


def _relative(lattice, difference: np.ndarray, reference: np.ndarray) -> float:
    scale = lattice.l2_norm(reference)
    return lattice.l2_norm(difference) / scale if scale > 0.0 else lattice.l2_norm(difference)


def _heat_errors(traj: Trajectory, fit: KappaFit, gamma: float) -> dict[float, float]:
    lattice = traj.lattice
    theta0 = ScalarField(lattice, traj.snapshots[0].u[:, -1])
    errors = {}
    for snapshot in traj.snapshots[1:]:
        limit = solve_fractional_heat(theta0, fit.kappa_fit, gamma, snapshot.time)
        errors[snapshot.time] = _relative(lattice, snapshot.u[:, -1] - limit.coeffs, limit.coeffs)
    return errors


def _stokes_errors(traj: Trajectory, fit: KappaFit, gamma: float) -> tuple[dict[float, float], float]:
    lattice = traj.lattice
    m0 = VectorField(lattice, traj.snapshots[0].u[:, 1:3])
    errors, gradient_norm = {}, 0.0
    for snapshot in traj.snapshots[1:]:
        m = VectorField(lattice, snapshot.u[:, 1:3])
        projected = leray_project(m)
        limit = solve_fractional_stokes(m0, fit.kappa_fit, gamma, snapshot.time)
        errors[snapshot.time] = _relative(lattice, projected.coeffs - limit.coeffs, limit.coeffs)
        gradient_norm = max(gradient_norm, lattice.l2_norm(m.coeffs - projected.coeffs))
    return errors, gradient_norm


def run_case(
    service: ServiceLab, context: ModelContext, plan: ExperimentPlan, fit: KappaFit, epsilon: float
) -> CaseResult:
    """One kinetic run at epsilon compared against the fractional limit at every recorded time"""
    record = plan.record_times
    cfg = service.solver_config(context, epsilon, t_final=max(record), record=record, n_modes=plan.n_modes)
    traj = service.run_kinetic(context, cfg, record)
    gamma = context.params.gamma
    diagnostics = theorem_residuals(traj, epsilon, gamma)

    gradient_norm = None
    if plan.experiment == Experiment.STOKES_LIMIT:
        errors, gradient_norm = _stokes_errors(traj, fit, gamma)
    else:
        errors = _heat_errors(traj, fit, gamma)

    rows = [
        [time, errors[time], snapshot.f_norm, snapshot.g_nu_norm_accum]
        for time, snapshot in zip(errors, traj.snapshots[1:])
    ]
    service.csv_writer.write_rows(
        f'case_eps{epsilon:.6g}.csv', ['time', 'l2_error', 'f_norm', 'g_nu_norm_accum'], rows
    )
    logger.info('eps=%.4g dt=%.4g errors=%s', epsilon, cfg.dt, errors)
    return CaseResult(
        epsilon=epsilon,
        dt=cfg.dt,
        errors={f'{time:.6g}': value for time, value in errors.items()},
        max_error=max(errors.values()),
        diagnostics=diagnostics,
        gradient_norm=gradient_norm,
    )


def _fitted_order(eps_list, errors) -> float:
    if len(eps_list) < 2:
        return None
    return float(np.polyfit(np.log(eps_list), np.log(errors), 1)[0])


def _case_constants(cases: list[CaseResult], series: str, exponent: float) -> list[float]:
    residuals = [getattr(case.diagnostics, series) for case in cases]
    return scaled_constants(residuals, [case.epsilon for case in cases], exponent)


def _scaled_constant(cases: list[CaseResult], series: str, exponent: float) -> Optional[float]:
    values = _case_constants(cases, series, exponent)
    return max(values) if values else None


@log_elapsed('job.convergence_study')
def run_convergence_study(plan: ExperimentPlan) -> Union[ConvergenceReport, SymbolReport, AuxLimitReport]:
    """Epsilon sweep of kinetic runs against the fractional heat or Stokes solution.

    The symbol and aux_limit experiments run the matching service sweep instead.
    Cases are independent; with WORKERS > 1 they run concurrently and are merged in eps order.
    """
    config = load_config(plan.base_config)
    if plan.seed is not None:
        config = config.copy(update={'seed': plan.seed})
    service = ServiceLab(output_dir=plan.output_dir) if plan.output_dir else ServiceLab()

    if plan.experiment == Experiment.SYMBOL:
        return service.symbol(config)
    if plan.experiment == Experiment.AUX_LIMIT:
        return service.auxlimit(config, eps_list=plan.eps_list)

    context = service.build(config)
    _check_experiment(plan.experiment, context)
    branch = Branch.MOMENTUM if plan.experiment == Experiment.STOKES_LIMIT else Branch.THETA
    fit = service.kappa_fit(context, branch)
    logger.info('kappa fit: gamma=%.4f kappa=%.6g branch=%s', fit.gamma_fit, fit.kappa_fit, fit.branch.value)

    def case(epsilon: float) -> CaseResult:
        return run_case(service, context, plan, fit, epsilon)

    workers = max(1, get_settings().lab_settings.workers)
    if workers > 1 and len(plan.eps_list) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            cases = list(executor.map(case, plan.eps_list))
    else:
        cases = [case(epsilon) for epsilon in plan.eps_list]

    errors = [item.max_error for item in cases]
    non_monotone = any(later >= earlier for earlier, later in zip(errors, errors[1:]))
    if non_monotone:
        logger.warning('NonMonotoneConvergence: errors %s over eps=%s', errors, list(plan.eps_list))

    gamma = context.params.gamma
    boussinesq_stable = constants_stable(_case_constants(cases, 'boussinesq_residual', gamma - 1.0))
    if boussinesq_stable is False:
        logger.warning(
            'Boussinesq constants spread beyond %.0f%% over eps=%s', 100 * CONSTANT_SPREAD, list(plan.eps_list)
        )
    report = ConvergenceReport(
        version=get_settings().project_settings.version_string,
        experiment=plan.experiment.value,
        config={**config.echo(), 'n_modes': plan.n_modes or context.n_modes},
        gamma=gamma,
        gamma_fit=fit.gamma_fit,
        kappa_fit=fit.kappa_fit,
        eps_list=list(plan.eps_list),
        record_times=list(plan.record_times),
        cases=cases,
        order=_fitted_order(plan.eps_list, errors),
        non_monotone=non_monotone,
        boussinesq_constant=_scaled_constant(cases, 'boussinesq_residual', gamma - 1.0),
        boussinesq_stable=boussinesq_stable,
        incompressibility_constant=_scaled_constant(cases, 'incompressibility_residual', gamma - 1.0),
        gap_constant=_scaled_constant(cases, 'u_vs_unu_gap', gamma / 2.0),
    )
    rows = [[item.epsilon, item.dt, item.max_error] for item in cases]
    service.csv_writer.write_rows('convergence.csv', ['epsilon', 'dt', 'max_l2_error'], rows)
    service.json_writer.write('convergence.json', report)
    return report


if __name__ == '__main__':
    run_convergence_study(ExperimentPlan(base_config=Path(sys.argv[1])))
