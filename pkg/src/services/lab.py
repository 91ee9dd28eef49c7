import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from src.common.decorators import log_elapsed
from src.constants import (
    DEFAULT_EPS_LIST,
    DEFAULT_K_LIST,
    DEFAULT_RECORD_TIMES,
    REPORT_MANIFEST,
    SEEDED_AMPLITUDE,
    SEEDED_MODES,
    SYMBOL_POINTS,
)
from src.domain.auxchi import AuxTestFunction, compare_to_fractional, frac_limit
from src.domain.collision import CollisionData, assemble
from src.domain.diagnostics import theorem_residuals
from src.domain.fractional import Branch, KappaFit, estimate_kappa, moment_sentinel
from src.domain.kinetic import InitialData, Trajectory, evolve, lift_initial, slow_spectrum
from src.domain.lattice import SpectralLattice
from src.domain.params import (
    calibrate_moments,
    equilibrium_moments,
    moment_targets,
    scan_moment,
    validate_assumptions,
)
from src.domain.vgrid import VelocityGrid, build_grid, resolve_grid_spec
from src.infra.adapters.reports.csv_writer import CsvReportWriter
from src.infra.adapters.reports.json_writer import JsonReportWriter
from src.schemas.config import LabConfig
from src.schemas.params import Conservation, Family, ModelParams
from src.schemas.reports import (
    AuxLimitReport,
    CalibrationReport,
    CheckReport,
    EvolveReport,
    KappaReport,
    SymbolReport,
)
from src.schemas.solver import SolverConfig
from src.services.exceptions import InvalidSpec
from src.services.service_base import ServiceBase, try_numeric_except
from src.settings import get_settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ModelContext:
    config: LabConfig
    params: ModelParams
    grid: VelocityGrid
    cd: CollisionData

    @property
    def n_modes(self) -> int:
        return self.config.solver.n_modes or (32 if self.params.d == 1 else 16)

    def lattice(self, n_modes: Optional[int] = None) -> SpectralLattice:
        return SpectralLattice(self.params.d, n_modes or self.n_modes, self.config.solver.domain_length)


def record_base(times: Sequence[float]) -> float:
    """largest step dividing every time exactly (as decimals)"""
    fractions = [Fraction(str(time)).limit_denominator(10**9) for time in times]
    numerator = reduce(math.gcd, (item.numerator for item in fractions))
    denominator = reduce(lambda a, b: a * b // math.gcd(a, b), (item.denominator for item in fractions))
    return numerator / denominator


def choose_dt(epsilon: float, gamma: float, dt_factor: float, times: Sequence[float]) -> float:
    """dt <= dt_factor eps^gamma, chosen so that every time is a whole number of steps"""
    base = record_base(times)
    return base / math.ceil(base / (dt_factor * epsilon**gamma))


def default_initial(
    lattice: SpectralLattice, conservation: Conservation, seed: Optional[int] = None
) -> InitialData:
    """theta = cos x + 0.3 cos 2x with rho = -theta, or the shear flow of the stream function sin x sin y.

    A seed adds random low modes (|k| <= 3) of the same kind, so the data stays well prepared.
    """
    rng = np.random.default_rng(0 if seed is None else seed)
    amplitudes = (0.0 if seed is None else SEEDED_AMPLITUDE) * rng.normal(size=SEEDED_MODES)
    shifts = rng.uniform(0.0, 2.0 * np.pi, size=(SEEDED_MODES, 2))
    waves = np.arange(1, SEEDED_MODES + 1)

    if conservation == Conservation.ENERGY:

        def theta(points):
            x = points[:, 0, None]
            seeded = np.cos(waves * x + shifts[:, 0]) @ amplitudes
            return np.cos(x[:, 0]) + 0.3 * np.cos(2.0 * x[:, 0]) + seeded

        return InitialData.from_functions(lattice, conservation, rho=lambda points: -theta(points), theta=theta)
    if lattice.d == 1:

        def rho(points):
            x = points[:, 0, None]
            return np.cos(x[:, 0]) + np.sin(waves * x + shifts[:, 0]) @ amplitudes

        return InitialData.from_functions(lattice, conservation, rho=rho)

    # stream functions sin(jx + p) sin(jy + q), m = (d psi/dy, -d psi/dx)
    def momentum(points):
        x, y = points[:, 0, None], points[:, 1, None]
        sx, cx = np.sin(waves * x + shifts[:, 0]), np.cos(waves * x + shifts[:, 0])
        sy, cy = np.sin(waves * y + shifts[:, 1]), np.cos(waves * y + shifts[:, 1])
        seeded = np.stack([(sx * cy) @ (waves * amplitudes), -(cx * sy) @ (waves * amplitudes)], axis=-1)
        shear = np.stack([-np.sin(x[:, 0]) * np.cos(y[:, 0]), np.cos(x[:, 0]) * np.sin(y[:, 0])], axis=-1)
        return shear + seeded

    return InitialData.from_functions(lattice, conservation, momentum=momentum)


def moment_columns(params: ModelParams) -> list[str]:
    names = ['rho'] + [f'm{index + 1}' for index in range(params.d)]
    if params.conservation == Conservation.ENERGY:
        names.append('theta')
    return names


@dataclass
class ServiceLab(ServiceBase):
    output_dir: Path = field(default_factory=lambda: Path(get_settings().output_settings.output_dir))

    @property
    def json_writer(self) -> JsonReportWriter:
        return JsonReportWriter(self.output_dir)

    @property
    def csv_writer(self) -> CsvReportWriter:
        return CsvReportWriter(self.output_dir)

    @try_numeric_except
    def build(self, config: LabConfig) -> ModelContext:
        """Validated, calibrated parameters, the velocity grid and the assembled collision tables

        :raises RegimeViolation, SingularCalibration, SingularA
        """
        params = validate_assumptions(config.params)
        spec = resolve_grid_spec(params.family, params.d, params.tail_radius, config.grid)
        grid = build_grid(params.d, spec)
        params = calibrate_moments(params, grid)
        return ModelContext(config=config, params=params, grid=grid, cd=assemble(params, grid))

    @try_numeric_except
    def validate(self, config: LabConfig) -> dict:
        params = validate_assumptions(config.params)
        return {'valid': True, 'gamma': params.gamma, 'params': params.dict(), 'config': config.echo()}

    @try_numeric_except
    def calibrate(self, config: LabConfig) -> CalibrationReport:
        context = self.build(config)
        params = context.params
        sentinel = None
        if params.family != Family.CLASSICAL:
            power = moment_sentinel(params)
            scan = scan_moment(params, power)
            sentinel = {'power': power, 'ratio': scan.ratio, 'diverged': scan.diverged}
        targets = moment_targets(params)
        report = CalibrationReport(
            params=params.dict(),
            grid={
                'mapping': context.grid.mapping.value,
                'scale': context.grid.scale,
                'n_per_axis': context.grid.n_per_axis,
            },
            moments=list(equilibrium_moments(params, context.grid)[: len(targets)]),
            targets=list(targets),
            cond_a=float(np.linalg.cond(context.cd.a)),
            continuity_constant=context.cd.continuity_constant,
            sentinel=sentinel,
        )
        self.json_writer.write('calibration.json', report)
        return report

    def solver_config(
        self,
        context: ModelContext,
        epsilon: float,
        t_final: Optional[float] = None,
        dt: Optional[float] = None,
        record: Sequence[float] = (),
        n_modes: Optional[int] = None,
    ) -> SolverConfig:
        solver = context.config.solver
        t_final = t_final or solver.t_final
        dt = dt or choose_dt(epsilon, context.params.gamma, solver.dt_factor, [t_final, *record])
        return SolverConfig(
            epsilon=epsilon,
            dt=dt,
            t_final=t_final,
            n_modes=n_modes or context.n_modes,
            domain_length=solver.domain_length,
            scheme=solver.scheme,
        )

    @try_numeric_except
    def run_kinetic(
        self, context: ModelContext, cfg: SolverConfig, record: Sequence[float], initial: InitialData = None
    ) -> Trajectory:
        lattice = SpectralLattice(context.params.d, cfg.n_modes, cfg.domain_length)
        initial = initial or default_initial(lattice, context.params.conservation, context.config.seed)
        traj = evolve(lift_initial(initial, context.cd), cfg, context.cd, record)
        self.finite_result(traj.f_norm_history)
        return traj

    @log_elapsed()
    @try_numeric_except
    def evolve(
        self,
        config: LabConfig,
        epsilon: Optional[float] = None,
        t_final: Optional[float] = None,
        dt: Optional[float] = None,
        record: Sequence[float] = DEFAULT_RECORD_TIMES,
    ) -> EvolveReport:
        """Kinetic run with one CSV of moments per recorded time and the JSON run manifest"""
        context = self.build(config)
        epsilon = epsilon or config.solver.epsilon
        cfg = self.solver_config(context, epsilon, t_final, dt, record)
        traj = self.run_kinetic(context, cfg, record)
        diagnostics = theorem_residuals(traj, epsilon, context.params.gamma)

        names = moment_columns(context.params)
        header = ['x_index'] + names + [f'{name}_nu' for name in names]
        for snapshot in traj.snapshots:
            values = np.real(traj.lattice.to_grid(np.concatenate([snapshot.u, snapshot.u_nu], axis=1)))
            rows = [[index, *row] for index, row in enumerate(values)]
            self.csv_writer.write_rows(f'moments_t{snapshot.time:.6g}.csv', header, rows)

        report = EvolveReport(
            version=get_settings().project_settings.version_string,
            config={**config.echo(), 'dt': cfg.dt, 'n_modes': cfg.n_modes, 'epsilon': epsilon},
            gamma=context.params.gamma,
            dt=cfg.dt,
            n_steps=cfg.n_steps,
            record_times=traj.times,
            step_times=list(traj.step_times),
            f_norm_history=list(traj.f_norm_history),
            g_accum_history=list(traj.g_accum_history),
            diagnostics=diagnostics,
        )
        self.json_writer.write(REPORT_MANIFEST, report)
        return report

    @try_numeric_except
    def kappa_fit(self, context: ModelContext, branch: Branch = None, k_list=DEFAULT_K_LIST) -> KappaFit:
        fit = estimate_kappa(context.params, context.cd, k_list, branch)
        self.finite_result([fit.gamma_fit, fit.kappa_fit, fit.residual])
        return fit

    @try_numeric_except
    def symbol(
        self, config: LabConfig, kmin: float = 2**-6, kmax: float = 2**-3, npoints: int = SYMBOL_POINTS
    ) -> SymbolReport:
        context = self.build(config)
        k_list = np.geomspace(kmin, kmax, npoints)
        direction = np.eye(context.params.d)[0]
        spectra = [slow_spectrum(k * direction, context.cd) for k in k_list]
        fit = self.kappa_fit(context, k_list=k_list)
        p = context.params.p
        header = ['k'] + [f're_{j + 1}' for j in range(p)] + [f'im_{j + 1}' for j in range(p)]
        rows = [[k, *np.real(values), *np.imag(values)] for k, values in zip(k_list, spectra)]
        self.csv_writer.write_rows('symbol.csv', header, rows)
        report = SymbolReport(
            k=list(k_list),
            eigen_re=[list(np.real(values)) for values in spectra],
            eigen_im=[list(np.imag(values)) for values in spectra],
            gamma_fit=fit.gamma_fit,
            kappa_fit=fit.kappa_fit,
            residual=fit.residual,
            gamma_loglog=fit.gamma_loglog,
            remainder=fit.remainder,
            branch=fit.branch.value,
        )
        self.json_writer.write('symbol.json', report)
        return report

    @try_numeric_except
    def kappa(self, config: LabConfig, branch: Branch = None, k_list=DEFAULT_K_LIST) -> KappaReport:
        context = self.build(config)
        fit = self.kappa_fit(context, branch, k_list)
        report = KappaReport(
            gamma=context.params.gamma,
            gamma_fit=fit.gamma_fit,
            kappa_fit=fit.kappa_fit,
            residual=fit.residual,
            gamma_loglog=fit.gamma_loglog,
            remainder=fit.remainder,
            branch=fit.branch.value,
            analytic_candidate=fit.analytic_candidate,
        )
        self.json_writer.write('kappa.json', report)
        return report

    @log_elapsed()
    @try_numeric_except
    def auxlimit(
        self,
        config: LabConfig,
        eps_list: Sequence[float] = DEFAULT_EPS_LIST,
        phi: str = 'fourier: 1, 0.5',
        family: Optional[Family] = None,
    ) -> AuxLimitReport:
        """Limit integrals against -kappa (-Delta)^{gamma/2} phi over an eps sweep"""
        raw = config.params if family is None else config.params.copy(update={'family': family})
        config = config.copy(update={'params': raw})
        context = self.build(config)
        params = context.params
        test_function = AuxTestFunction.parse(phi, params.d)
        lattice = context.lattice()

        comparisons = []
        for eps in eps_list:
            values = frac_limit(test_function, eps, params, lattice)
            comparisons.append(compare_to_fractional(values, test_function, params.gamma, lattice))
        errors = self.finite_result([item.l2_error for item in comparisons])
        order = None
        if len(eps_list) >= 2:
            order = float(np.polyfit(np.log(eps_list), np.log(errors), 1)[0])
        monotone = all(later < earlier for earlier, later in zip(errors, errors[1:]))
        if not monotone:
            logger.warning('Limit errors are not decreasing over eps=%s: %s', list(eps_list), errors)

        rows = [[eps, item.l2_error, item.kappa_fit] for eps, item in zip(eps_list, comparisons)]
        self.csv_writer.write_rows('auxlimit.csv', ['epsilon', 'l2_error', 'kappa_fit'], rows)
        report = AuxLimitReport(
            family=params.family.value,
            gamma=params.gamma,
            phi=phi,
            eps_list=list(eps_list),
            l2_errors=errors,
            kappa_fits=[item.kappa_fit for item in comparisons],
            order=order,
            expected_order=2.0 - params.gamma,
            monotone=monotone,
        )
        self.json_writer.write('auxlimit.json', report)
        return report

    @try_numeric_except
    def check(self, manifest: Path) -> CheckReport:
        """Re-validate the a priori bounds stored in an evolve or convergence manifest"""
        payload = self.json_writer.read(manifest)
        slack = get_settings().solver_settings.bound_slack
        violations = []
        if 'f_norm_history' in payload:
            runs = [(payload['f_norm_history'], payload['g_accum_history'], payload['diagnostics'])]
        elif 'cases' in payload:
            runs = [(case['diagnostics']['f_norm'], case['diagnostics']['g_nu_norm_accum'], case['diagnostics'])
                    for case in payload['cases']]
        else:
            raise InvalidSpec(detail=f'{manifest} is not a run manifest')

        for index, (f_norm, g_accum, diagnostics) in enumerate(runs):
            f_norm, g_accum = np.asarray(f_norm), np.asarray(g_accum)
            if np.any(f_norm[1:] > f_norm[:-1] * (1.0 + slack)):
                violations.append(f'run {index}: f_norm increases')
            if np.any(g_accum > diagnostics['g_bound'] * (1.0 + slack)):
                violations.append(f'run {index}: g_nu accumulated bound')
            violations.extend(f'run {index}: {item}' for item in diagnostics.get('violations', []))

        constant = payload.get('boussinesq_constant')
        if constant is not None:
            gamma = payload['gamma']
            for case in payload['cases']:
                residual = case['diagnostics'].get('boussinesq_residual') or []
                if residual and max(residual) > constant * case['epsilon'] ** (gamma - 1.0) * (1.0 + slack):
                    violations.append(f'eps={case["epsilon"]}: Boussinesq residual above the fitted constant')

        report = CheckReport(source=str(manifest), ok=not violations, violations=violations)
        for item in violations:
            logger.warning('Check %s: %s', manifest, item)
        return report
