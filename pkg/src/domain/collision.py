import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from src.constants import M_FLOOR
from src.domain.params import eval_collision_freq, eval_equilibrium
from src.domain.vgrid import VelocityGrid, quad
from src.schemas.params import Conservation, ModelParams
from src.services.exceptions import InvalidSpec, NonFiniteIntegrand, SingularA
from src.settings import get_settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CollisionData:
    """Tabulated collision operator. Node-valued arrays keep the node axis last: f has shape (..., N).

    phi_tab uses the (|v|^2 - d)/2 energy component, zeta_tab the (|v|^2 - d)/d one.
    """

    params: ModelParams
    grid: VelocityGrid
    m_tab: np.ndarray
    nu_tab: np.ndarray
    phi_tab: np.ndarray
    zeta_tab: np.ndarray
    a: np.ndarray
    a_inv: np.ndarray
    a_factor: tuple
    gram: np.ndarray
    m_floored: np.ndarray
    continuity_constant: float

    @property
    def p(self) -> int:
        return self.phi_tab.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.m_tab.shape[0]

    @property
    def macro_basis(self) -> np.ndarray:
        """(N, p) columns M phi_j"""
        return self.m_tab[:, None] * self.phi_tab


def moment_vectors(grid: VelocityGrid, conservation: Conservation) -> tuple[np.ndarray, np.ndarray]:
    v = grid.nodes
    r2 = np.sum(v * v, axis=-1)
    d = grid.d
    ones = np.ones((grid.n_nodes, 1))
    phi = [ones, v]
    zeta = [ones, v]
    if conservation == Conservation.ENERGY:
        phi.append(((r2 - d) / 2.0)[:, None])
        zeta.append(((r2 - d) / d)[:, None])
    return np.concatenate(phi, axis=1), np.concatenate(zeta, axis=1)


def assemble(params: ModelParams, grid: VelocityGrid) -> CollisionData:
    """Tables of M, nu, phi, zeta on the grid and the factorized moment matrix A = quad(nu M phi phi^T)

    :raises SingularA when cond(A) exceeds the configured limit
    """
    if not params.calibrated:
        raise InvalidSpec(detail='ModelParams must be calibrated before assembly')
    if params.d != grid.d:
        raise InvalidSpec(detail=f'Grid dimension {grid.d} does not match params d={params.d}')

    raw_m = eval_equilibrium(params, grid.nodes)
    m_floored = raw_m < M_FLOOR
    m_tab = np.maximum(raw_m, M_FLOOR)
    nu_tab = eval_collision_freq(params, grid.nodes)
    phi_tab, zeta_tab = moment_vectors(grid, params.conservation)

    outer = phi_tab[:, :, None] * phi_tab[:, None, :]
    a = quad(grid, (nu_tab * m_tab)[:, None, None] * outer)
    gram = quad(grid, m_tab[:, None, None] * outer)
    condition_number = np.linalg.cond(a)
    if not np.isfinite(condition_number) or condition_number > get_settings().solver_settings.cond_limit:
        raise SingularA(condition_number=condition_number)

    a_factor = linalg.cho_factor(a)
    a_inv = linalg.cho_solve(a_factor, np.eye(a.shape[0]))
    second = quad(grid, (nu_tab**2 * m_tab)[:, None, None] * outer)
    continuity_constant = float(linalg.eigh(second, a, eigvals_only=True)[-1])

    logger.info(
        'Assembled collision data: p=%s nodes=%s cond(A)=%.3e continuity=%.4g',
        a.shape[0],
        grid.n_nodes,
        condition_number,
        continuity_constant,
    )
    return CollisionData(
        params=params,
        grid=grid,
        m_tab=m_tab,
        nu_tab=nu_tab,
        phi_tab=phi_tab,
        zeta_tab=zeta_tab,
        a=a,
        a_inv=a_inv,
        a_factor=a_factor,
        gram=gram,
        m_floored=m_floored,
        continuity_constant=continuity_constant,
    )


def _check_finite(f: np.ndarray):
    if not np.all(np.isfinite(f)):
        raise NonFiniteIntegrand()


def _project(f: np.ndarray, weights: np.ndarray, cd: CollisionData) -> np.ndarray:
    """quad(weights_j f) for every column j; f (..., N) -> (..., p)"""
    integrand = f[..., None, :] * weights.T
    return cd.grid.integrate(integrand, axis=-1)


def moments(f: np.ndarray, cd: CollisionData) -> np.ndarray:
    """U = quad(zeta f) = (rho, m, theta), or (rho, m) without energy"""
    f = np.asarray(f)
    _check_finite(f)
    return _project(f, cd.zeta_tab, cd)


def moments_nu(f: np.ndarray, cd: CollisionData) -> np.ndarray:
    """U_nu = A^-1 quad(nu phi f)"""
    f = np.asarray(f)
    _check_finite(f)
    rhs = _project(f, cd.nu_tab[:, None] * cd.phi_tab, cd)
    return rhs @ cd.a_inv.T


def macro(u: np.ndarray, cd: CollisionData) -> np.ndarray:
    """M phi . U for moment vectors U (..., p)"""
    return np.asarray(u) @ cd.macro_basis.T


def apply_K(f: np.ndarray, cd: CollisionData) -> np.ndarray:  # noqa N802
    return macro(moments_nu(f, cd), cd)


def apply_L(f: np.ndarray, cd: CollisionData) -> np.ndarray:  # noqa N802
    """L f = nu (K f - f)"""
    f = np.asarray(f)
    return cd.nu_tab * (apply_K(f, cd) - f)


def reflect(f: np.ndarray, cd: CollisionData) -> np.ndarray:
    """f(-v) on the same grid"""
    return np.asarray(f)[..., cd.grid.mirror]


def dissipation(f: np.ndarray, cd: CollisionData) -> tuple[float, float]:
    """(quad(Lf f/M), -quad(nu |f - Kf|^2 / M)); equal for any f"""
    f = np.asarray(f)
    lhs = quad(cd.grid, np.real(apply_L(f, cd) * np.conj(f)) / cd.m_tab)
    remainder = f - apply_K(f, cd)
    rhs = -quad(cd.grid, cd.nu_tab * np.abs(remainder) ** 2 / cd.m_tab)
    return lhs, rhs
