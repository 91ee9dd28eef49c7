import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from src.constants import CONSTANT_SPREAD
from src.domain.collision import CollisionData, macro, moments, moments_nu
from src.domain.fractional import leray_project, pressure
from src.domain.kinetic import MomentSnapshot, Trajectory
from src.domain.lattice import ScalarField, SpectralLattice, VectorField
from src.schemas.params import Conservation
from src.schemas.reports import RunDiagnostics
from src.services.exceptions import BoundViolation, InvalidSpec, WeightUnderflow
from src.settings import get_settings

logger = logging.getLogger(__name__)


class NormWeight(str, Enum):
    MINV = 'Minv'
    NUMINV = 'NuMinv'
    M = 'M'


@dataclass(frozen=True, eq=False)
class MicroMacro:
    """f = macro_nu + g_nu = macro + g, with quad(nu phi g_nu) = 0 and quad(phi g) = 0"""

    u: np.ndarray
    u_nu: np.ndarray
    macro: np.ndarray
    g: np.ndarray
    macro_nu: np.ndarray
    g_nu: np.ndarray


def micro_macro(f: np.ndarray, cd: CollisionData) -> MicroMacro:
    f = np.asarray(f)
    u_nu = moments_nu(f, cd)
    macro_nu = macro(u_nu, cd)
    # projection coefficients in the phi basis, orthogonal to phi under the grid quadrature
    projected = cd.grid.integrate(f[..., None, :] * cd.phi_tab.T, axis=-1) @ np.linalg.inv(cd.gram).T
    macro_part = macro(projected, cd)
    return MicroMacro(
        u=moments(f, cd),
        u_nu=u_nu,
        macro=macro_part,
        g=f - macro_part,
        macro_nu=macro_nu,
        g_nu=f - macro_nu,
    )


def weighted_norm(
    f: np.ndarray, cd: CollisionData, weight: NormWeight = NormWeight.MINV, lattice: SpectralLattice = None
) -> float:
    """Discrete L2 norm over v (and over x by Parseval when a lattice is given; f then has shape (n_total, N))

    :raises WeightUnderflow when an M^-1 weight meets the floored M table where f is nonzero
    """
    f = np.asarray(f)
    if weight == NormWeight.M:
        omega = cd.m_tab
    else:
        underflow = cd.m_floored & np.any(np.abs(f.reshape(-1, cd.n_nodes)) > 0.0, axis=0)
        if np.any(underflow):
            raise WeightUnderflow(int(np.sum(underflow)))
        omega = 1.0 / cd.m_tab if weight == NormWeight.MINV else cd.nu_tab / cd.m_tab
    squares = cd.grid.integrate(np.abs(f) ** 2 * omega, axis=-1)
    if lattice is None:
        return float(np.sqrt(np.sum(squares)))
    return float(np.sqrt(lattice.volume * np.sum(squares)))


def leray_decompose(m: VectorField) -> tuple[VectorField, ScalarField]:
    """m = solenoidal + grad p"""
    if m.lattice.d != 2:
        raise InvalidSpec(detail='the Leray decomposition works on d=2 lattices')
    return leray_project(m), pressure(m)


@dataclass(frozen=True)
class BoundViolationRecord:
    which: str
    time: float
    margin: float

    def __str__(self) -> str:
        return f'{self.which} at t={self.time:.6g} margin={self.margin:.3e}'


def _residual_series(snapshot: MomentSnapshot, first: MomentSnapshot, lattice: SpectralLattice, energy: bool):
    u, u_nu = snapshot.u, snapshot.u_nu
    d = lattice.d
    momentum = u[:, 1 : 1 + d]
    divergence = 1j * np.sum(lattice.wavevectors * momentum, axis=-1)
    series = {
        'incompressibility': lattice.l2_norm(divergence),
        'gap': lattice.l2_norm(u_nu - u),
        'drift': lattice.l2_norm(u[:, 0] - first.u[:, 0]),
    }
    if energy:
        series['boussinesq'] = lattice.l2_norm(u[:, 0] + u[:, -1])
        series['pressure'] = lattice.l2_norm(u_nu[:, 0] + u_nu[:, -1])
    return series


def theorem_residuals(
    traj: Trajectory,
    eps: float,
    gamma: float,
    boussinesq_constant: Optional[float] = None,
    raise_on_violation: bool = True,
) -> RunDiagnostics:
    """Residual series at the recorded times and the a priori bounds over every step.

    :raises BoundViolation for the first violated inequality unless raise_on_violation is False
    """
    slack = get_settings().solver_settings.bound_slack
    energy = traj.conservation == Conservation.ENERGY
    violations = []

    f_norm = traj.f_norm_history
    increase = f_norm[1:] - f_norm[:-1] * (1.0 + slack)
    monotone = not np.any(increase > 0.0)
    if not monotone:
        step = int(np.argmax(increase > 0.0)) + 1
        violations.append(BoundViolationRecord('f_norm non-increasing', traj.step_times[step], increase[step - 1]))

    g_bound = eps ** (gamma / 2.0) * f_norm[0]
    excess = traj.g_accum_history - g_bound * (1.0 + slack)
    if np.any(excess > 0.0):
        step = int(np.argmax(excess > 0.0))
        violations.append(BoundViolationRecord('g_nu accumulated', traj.step_times[step], excess[step]))

    first = traj.snapshots[0]
    series = [_residual_series(snapshot, first, traj.lattice, energy) for snapshot in traj.snapshots]
    boussinesq = [item['boussinesq'] for item in series] if energy else None
    if boussinesq is not None and boussinesq_constant is not None:
        limit = boussinesq_constant * eps ** (gamma - 1.0)
        for snapshot, value in zip(traj.snapshots, boussinesq):
            if value > limit * (1.0 + slack):
                violations.append(BoundViolationRecord('boussinesq', snapshot.time, value - limit))
                break

    if violations and raise_on_violation:
        record = violations[0]
        raise BoundViolation(record.which, record.time, record.margin)
    for record in violations:
        logger.warning('Bound %s violated at t=%.6g by %.3e', record.which, record.time, record.margin)

    return RunDiagnostics(
        times=traj.times,
        f_norm=[snapshot.f_norm for snapshot in traj.snapshots],
        g_nu_norm_accum=[snapshot.g_nu_norm_accum for snapshot in traj.snapshots],
        boussinesq_residual=boussinesq,
        incompressibility_residual=[item['incompressibility'] for item in series],
        u_vs_unu_gap=[item['gap'] for item in series],
        pressure_proxy=[eps ** (1.0 - gamma) * item['pressure'] for item in series] if energy else None,
        density_drift=[item['drift'] for item in series],
        f_norm_monotone=monotone,
        g_bound=float(g_bound),
        bound_slack=slack,
        boussinesq_constant=boussinesq_constant,
        violations=[str(record) for record in violations],
    )


def scaled_constants(
    residuals: Sequence[Sequence[float]], eps_list: Sequence[float], exponent: float
) -> list[float]:
    """max_t residual(t) / eps^exponent per run; runs without the series are skipped"""
    return [max(series) / eps**exponent for series, eps in zip(residuals, eps_list) if series]


def constants_stable(constants: Sequence[float], tolerance: float = CONSTANT_SPREAD) -> Optional[bool]:
    """True when every constant lies within +-tolerance of their median, None without constants"""
    if not constants:
        return None
    values = np.asarray(constants, dtype=float)
    center = float(np.median(values))
    if center == 0.0:
        return bool(np.all(values == 0.0))
    return bool(np.all(np.abs(values - center) <= tolerance * center))
