"""Fractional Laplacians on the periodic box, the limiting heat and Stokes solvers and the diffusivities."""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize, special

from src.common.decorators import log_elapsed
from src.constants import (
    BRANCH_SEPARATION,
    DEFAULT_K_LIST,
    DIVERGENCE_FREE_TOL,
    MACRO_FRACTION_MIN,
    SYMBOL_GAMMA_SCAN,
)
from src.domain.collision import CollisionData
from src.domain.kinetic import HydroMode, hydrodynamic_modes
from src.domain.lattice import ScalarField, SpectralLattice, VectorField
from src.domain.params import check_moment_finite, eval_collision_freq, eval_equilibrium, stability_scan
from src.domain.vgrid import VelocityGrid, algebraic_half_rule, quad
from src.schemas.params import Conservation, Family, ModelParams
from src.services.exceptions import (
    BranchAmbiguous,
    EigSolveFailure,
    InvalidSpec,
    MomentDiverged,
    NotDivergenceFree,
    QuadratureDiverged,
)
from src.settings import get_settings

logger = logging.getLogger(__name__)

OUTER_RADIUS = {1: 4096.0, 2: 64.0}
PANEL_WIDTH = 2.0


class Branch(str, Enum):
    THETA = 'theta'
    MOMENTUM = 'momentum'


def frac_constant(d: int, gamma: float) -> float:
    """C_{d,gamma} = 4^{gamma/2} Gamma((d+gamma)/2) / (pi^{d/2} |Gamma(-gamma/2)|)"""
    numerator = 4.0 ** (gamma / 2.0) * special.gamma((d + gamma) / 2.0)
    return float(numerator / (np.pi ** (d / 2.0) * abs(special.gamma(-gamma / 2.0))))


def frac_laplacian_spectral(field: ScalarField, gamma: float) -> ScalarField:
    if not 0.0 < gamma <= 2.0:
        raise InvalidSpec(detail=f'gamma must lie in (0, 2], got {gamma}')
    return ScalarField(field.lattice, field.coeffs * field.lattice.k_norm**gamma)


def _second_difference(h: Callable, x: np.ndarray, hx: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """S(z) = h(x) - (h(x+z) + h(x-z))/2 for points (P, d) and offsets (..., d) -> (P, ...)"""
    shape = offsets.shape[:-1]
    flat = offsets.reshape(-1, offsets.shape[-1])
    plus = h((x[:, None, :] + flat[None]).reshape(-1, x.shape[1])).reshape(x.shape[0], -1)
    minus = h((x[:, None, :] - flat[None]).reshape(-1, x.shape[1])).reshape(x.shape[0], -1)
    return (hx[:, None] - 0.5 * (plus + minus)).reshape((x.shape[0],) + shape)


def _directions(count: int) -> tuple[np.ndarray, float]:
    """unit vectors on the half circle [0, pi) and the trapezoid weight of 2 * int_0^pi"""
    theta = np.pi * np.arange(count) / count
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1), 2.0 * np.pi / count


def _sphere_integral(h: Callable, x: np.ndarray, hx: np.ndarray, radii: np.ndarray, bandwidth: float, d: int):
    """Theta(r) = integral of S(r w) over the unit sphere, shape (P, len(radii))"""
    if d == 1:
        return 2.0 * _second_difference(h, x, hx, radii[:, None])
    count = int(math.ceil(bandwidth * float(np.max(radii)))) + 16
    directions, weight = _directions(count)
    offsets = radii[:, None, None] * directions[None]
    return weight * np.sum(_second_difference(h, x, hx, offsets), axis=-1)


def _inner_integral(h, x, hx, gamma, d, bandwidth, n_nodes):
    """int_0^1 r^{-1-gamma} Theta(r) dr with Gauss-Jacobi nodes for r^{1-gamma} acting on Theta / r^2"""
    t, w = special.roots_jacobi(n_nodes, 0.0, 1.0 - gamma)
    r = 0.5 * (1.0 + t)
    theta = _sphere_integral(h, x, hx, r, bandwidth, d)
    return 2.0 ** (gamma - 2.0) * (theta / r**2) @ w


def _outer_integral(h, x, hx, gamma, d, bandwidth, radius):
    order = 2 * int(math.ceil(2.0 * bandwidth)) + 12
    t, w = np.polynomial.legendre.leggauss(order)
    total = np.zeros(x.shape[0])
    for left in np.arange(1.0, radius, PANEL_WIDTH):
        right = min(left + PANEL_WIDTH, radius)
        r = left + 0.5 * (right - left) * (t + 1.0)
        theta = _sphere_integral(h, x, hx, r, bandwidth, d)
        total += theta @ (0.5 * (right - left) * w * r ** (-1.0 - gamma))
    return total


def _cell_mean(h: Callable, lattice: SpectralLattice, bandwidth: float) -> float:
    n = max(lattice.n, 4 * int(math.ceil(bandwidth * lattice.length / (2.0 * np.pi))) + 8)
    return float(np.mean(h(SpectralLattice(lattice.d, n, lattice.length).points)))


@log_elapsed('fractional.singular')
def frac_laplacian_singular(
    h: Callable[[np.ndarray], np.ndarray],
    gamma: float,
    d: int,
    lattice: SpectralLattice,
    bandwidth: Optional[float] = None,
    n_inner: Optional[int] = None,
) -> np.ndarray:
    """C_{d,gamma} PV int (h(x) - h(y)) / |x - y|^{d+gamma} dy at the lattice points.

    The integral over |z| < 1 uses the symmetric second difference, so the integrand is r^{1-gamma}
    times a smooth function. Beyond the outer radius h is replaced by its cell mean.

    :raises QuadratureDiverged when doubling the inner nodes moves the result more than the tolerance
    """
    if lattice.d != d:
        raise InvalidSpec(detail=f'lattice dimension {lattice.d} does not match d={d}')
    if not 1.0 < gamma < 2.0:
        raise InvalidSpec(detail=f'gamma must lie in (1, 2), got {gamma}')
    bandwidth = bandwidth or getattr(h, 'bandwidth', None) or np.pi * lattice.n / lattice.length
    n_inner = n_inner or 2 * int(math.ceil(bandwidth)) + 24
    tol = get_settings().solver_settings.singular_tol

    x = lattice.points
    hx = np.asarray(h(x), dtype=float)
    inner = _inner_integral(h, x, hx, gamma, d, bandwidth, n_inner)
    refined = _inner_integral(h, x, hx, gamma, d, bandwidth, 2 * n_inner)

    radius = OUTER_RADIUS[d]
    outer = _outer_integral(h, x, hx, gamma, d, bandwidth, radius)
    nodes, weights = algebraic_half_rule(64, radius)
    tail_weight = float(np.sum(weights * (radius + nodes) ** (-1.0 - gamma)))
    sphere = 2.0 if d == 1 else 2.0 * np.pi
    tail = sphere * (hx - _cell_mean(h, lattice, bandwidth)) * tail_weight

    constant = frac_constant(d, gamma)
    result = constant * (refined + outer + tail)
    change = constant * float(np.max(np.abs(refined - inner)))
    if change > tol * float(np.max(np.abs(result))):
        raise QuadratureDiverged(change, tol)
    return result


def solve_fractional_heat(theta0: ScalarField, kappa: float, gamma: float, t: float) -> ScalarField:
    if kappa <= 0.0 or t < 0.0:
        raise InvalidSpec(detail=f'need kappa > 0 and t >= 0, got kappa={kappa} t={t}')
    decay = np.exp(-kappa * theta0.lattice.k_norm**gamma * t)
    return ScalarField(theta0.lattice, theta0.coeffs * decay)


def divergence_residual(m: VectorField) -> float:
    """||div m|| / ||grad m|| spectrally, 0 for a constant field"""
    scale = m.lattice.l2_norm(m.coeffs * m.lattice.k_norm[:, None])
    if scale == 0.0:
        return 0.0
    return m.divergence().norm() / scale


def leray_project(m: VectorField) -> VectorField:
    """P_k = I - k k^T / |k|^2, zero mode untouched"""
    k = m.lattice.wavevectors
    k2 = m.lattice.k_norm**2
    safe = np.where(k2 > 0.0, k2, 1.0)
    along = np.where(k2 > 0.0, np.sum(k * m.coeffs, axis=-1) / safe, 0.0)
    return VectorField(m.lattice, m.coeffs - k * along[:, None])


def pressure(m: VectorField) -> ScalarField:
    """p with grad p = m - P m, p^ = -i k.m^ / |k|^2"""
    k2 = m.lattice.k_norm**2
    safe = np.where(k2 > 0.0, k2, 1.0)
    coeffs = np.where(k2 > 0.0, -1j * np.sum(m.lattice.wavevectors * m.coeffs, axis=-1) / safe, 0.0)
    return ScalarField(m.lattice, coeffs)


def solve_fractional_stokes(
    m0: VectorField, kappa: float, gamma: float, t: float, strict: bool = True
) -> VectorField:
    """Leray projection then exact per-mode decay exp(-kappa |k|^gamma t)

    :raises NotDivergenceFree when strict and the input divergence exceeds the tolerance
    """
    if m0.lattice.d != 2:
        raise InvalidSpec(detail='the Stokes solver works on d=2 lattices')
    if kappa <= 0.0 or t < 0.0:
        raise InvalidSpec(detail=f'need kappa > 0 and t >= 0, got kappa={kappa} t={t}')
    residual = divergence_residual(m0)
    if strict and residual > DIVERGENCE_FREE_TOL:
        raise NotDivergenceFree(residual)
    projected = leray_project(m0)
    decay = np.exp(-kappa * m0.lattice.k_norm**gamma * t)
    return VectorField(m0.lattice, projected.coeffs * decay[:, None])


@dataclass(frozen=True)
class ClassicalCoefficients:
    mu0: Optional[float]
    kappa0: float


def classical_coefficients(params: ModelParams, grid: VelocityGrid) -> ClassicalCoefficients:
    """mu0 = int v1^2 v2^2 M/nu (d >= 2) and kappa0 = int |v|^2 (|v|^2 - (d+2))^2 / (4d) M/nu

    :raises MomentDiverged when an integrand is not grid-stable
    """
    d = params.d

    def kappa_integrand(nodes):
        r2 = np.sum(nodes * nodes, axis=-1)
        weight = eval_equilibrium(params, nodes) / eval_collision_freq(params, nodes)
        return r2 * (r2 - (d + 2.0)) ** 2 / (4.0 * d) * weight

    def mu_integrand(nodes):
        weight = eval_equilibrium(params, nodes) / eval_collision_freq(params, nodes)
        return nodes[:, 0] ** 2 * nodes[:, 1] ** 2 * weight

    integrands = [('kappa0', kappa_integrand)] + ([('mu0', mu_integrand)] if d >= 2 else [])
    values = {}
    for label, integrand in integrands:
        scan = stability_scan(params, integrand, label=label)
        if scan.diverged:
            raise MomentDiverged(label, scan.ratio)
        values[label] = quad(grid, integrand)
    logger.info('Classical coefficients: %s', values)
    return ClassicalCoefficients(mu0=values.get('mu0'), kappa0=values['kappa0'])


def analytic_candidate(params: ModelParams, branch: Branch, grid: VelocityGrid = None) -> Optional[float]:
    """Closed-form diffusivity to compare with the measured one, None when the family has no formula"""
    if params.family == Family.HEAVY_TAIL:
        return float(params.c0 * special.gamma(params.gamma + 1.0) / (1.0 - params.beta))
    if params.family == Family.CLASSICAL and grid is not None:
        coefficients = classical_coefficients(params, grid)
        if branch == Branch.THETA:
            return coefficients.kappa0 / (1.0 + params.d / 2.0)
        return coefficients.mu0
    return None


@dataclass(frozen=True)
class KappaFit:
    gamma_fit: float
    kappa_fit: float
    branch: Branch
    residual: float
    k_list: tuple[float, ...]
    rates: tuple[float, ...]
    eigenvalues: tuple[complex, ...]
    analytic_candidate: Optional[float] = None
    gamma_loglog: Optional[float] = None
    remainder: float = 0.0
    remainder_power: float = 2.0


@dataclass(frozen=True)
class SymbolFit:
    gamma: float
    kappa: float
    remainder: float
    remainder_power: float
    gamma_loglog: float
    residual: float


def remainder_power(params: ModelParams) -> float:
    """Power of the regular correction to the leading symbol term: k^2 for the fractional families, k^4 else"""
    return 4.0 if params.family == Family.CLASSICAL else 2.0


def _two_term_fit(k: np.ndarray, rates: np.ndarray, gamma: float, power: float) -> tuple[np.ndarray, float]:
    """Linear least squares for (kappa, c) in rates = kappa k^gamma + c k^power, in relative error"""
    basis = np.stack([k**gamma, k**power], axis=1) / rates[:, None]
    coefficients, *_ = np.linalg.lstsq(basis, np.ones_like(rates), rcond=None)
    misfit = basis @ coefficients - 1.0
    return coefficients, float(misfit @ misfit)


def fit_symbol(k: np.ndarray, rates: np.ndarray, power: float = 2.0) -> SymbolFit:
    """Fit rates = kappa k^gamma + c k^power with gamma in [1, power).

    gamma is scanned on a grid and refined by a bounded scalar minimisation; the linear coefficients are
    eliminated for each gamma. A non-positive kappa falls back to the plain log-log slope.
    """
    slope, intercept = np.polyfit(np.log(k), np.log(rates), 1)
    scan = np.linspace(1.0, power - 0.05, SYMBOL_GAMMA_SCAN)
    costs = np.array([_two_term_fit(k, rates, gamma, power)[1] for gamma in scan])
    best = int(np.argmin(costs))
    bounds = (scan[max(best - 1, 0)], scan[min(best + 1, scan.size - 1)])
    refined = optimize.minimize_scalar(
        lambda gamma: _two_term_fit(k, rates, gamma, power)[1], bounds=bounds, method='bounded'
    )
    gamma = float(refined.x) if refined.success else float(scan[best])
    (kappa, remainder), _ = _two_term_fit(k, rates, gamma, power)
    if kappa <= 0.0:
        logger.warning('Two-term symbol fit gave kappa=%.3g, using the log-log slope', kappa)
        gamma, kappa, remainder = float(slope), float(np.exp(intercept)), 0.0
    model = kappa * k**gamma + remainder * k**power
    return SymbolFit(
        gamma=gamma,
        kappa=float(kappa),
        remainder=float(remainder),
        remainder_power=power,
        gamma_loglog=float(slope),
        residual=float(np.max(np.abs(model / rates - 1.0))),
    )


def default_branch(params: ModelParams) -> Branch:
    return Branch.THETA if params.conservation == Conservation.ENERGY else Branch.MOMENTUM


def _branch_score(mode: HydroMode, branch: Branch, d: int, has_energy: bool) -> float:
    u = np.abs(mode.u_nu)
    rho = mode.u_nu[0]
    along = abs(mode.u_nu[1])
    transverse = u[2] if d == 2 else 0.0
    theta = mode.u_nu[-1] if has_energy else 0.0
    if branch == Branch.THETA:
        return float(abs(rho - theta) / (abs(rho + theta) + along + transverse + 1e-300))
    return float(transverse / (abs(rho) + along + abs(theta) + 1e-300))


def select_branch(modes: list[HydroMode], branch: Branch, cd: CollisionData) -> HydroMode:
    """The hydrodynamic mode whose nu-moments best match the branch, separated from the runner-up"""
    d = cd.params.d
    has_energy = cd.params.conservation == Conservation.ENERGY
    if branch == Branch.THETA and not has_energy:
        raise InvalidSpec(detail='the theta branch needs the energy conservation set')
    if branch == Branch.MOMENTUM and d == 1:
        raise BranchAmbiguous(detail='no transverse momentum branch in d=1')
    candidates = [mode for mode in modes if mode.macro_fraction >= MACRO_FRACTION_MIN]
    if not candidates:
        raise BranchAmbiguous(detail='no eigenvector with a dominant macroscopic part')
    scored = sorted(candidates, key=lambda mode: -_branch_score(mode, branch, d, has_energy))
    best = _branch_score(scored[0], branch, d, has_energy)
    if len(scored) > 1 and best < BRANCH_SEPARATION * _branch_score(scored[1], branch, d, has_energy):
        raise BranchAmbiguous(detail=f'{branch.value} branch score {best:.3g} is not separated from the next mode')
    return scored[0]


def _check_k_list(k_list: Sequence[float]) -> np.ndarray:
    k = np.sort(np.asarray(k_list, dtype=float))
    if k.size < 4 or k[0] <= 0.0 or k[-1] > 1.0:
        raise InvalidSpec(detail='k_list needs at least 4 wave numbers in (0, 1]')
    ratios = k[1:] / k[:-1]
    if np.any(ratios <= 1.0) or np.ptp(ratios) > 1e-6 * ratios[0]:
        raise InvalidSpec(detail='k_list must be geometrically spaced')
    return k


@log_elapsed('fractional.estimate_kappa')
def estimate_kappa(
    params: ModelParams, cd: CollisionData, k_list: Sequence[float] = DEFAULT_K_LIST, branch: Branch = None
) -> KappaFit:
    """Fit -Re lambda(k) = kappa k^gamma + c k^q on the selected hydrodynamic branch.

    q is 2 for the fractional families and 4 for the classical control.

    :raises BranchAmbiguous, EigSolveFailure
    """
    branch = branch or default_branch(params)
    k = _check_k_list(k_list)
    direction = np.eye(params.d)[0]
    eigenvalues = []
    for wavenumber in k:
        mode = select_branch(hydrodynamic_modes(wavenumber * direction, cd), branch, cd)
        eigenvalues.append(mode.eigenvalue)
    rates = -np.real(np.array(eigenvalues))
    if np.any(rates <= 0.0):
        raise EigSolveFailure(detail=f'{branch.value} branch has a non-decaying eigenvalue: {rates}')

    symbol_fit = fit_symbol(k, rates, remainder_power(params))
    try:
        candidate = analytic_candidate(params, branch, cd.grid)
    except MomentDiverged:
        candidate = None
    fit = KappaFit(
        gamma_fit=symbol_fit.gamma,
        kappa_fit=symbol_fit.kappa,
        branch=branch,
        residual=symbol_fit.residual,
        k_list=tuple(float(item) for item in k),
        rates=tuple(float(item) for item in rates),
        eigenvalues=tuple(complex(item) for item in eigenvalues),
        analytic_candidate=candidate,
        gamma_loglog=symbol_fit.gamma_loglog,
        remainder=symbol_fit.remainder,
        remainder_power=symbol_fit.remainder_power,
    )
    logger.info(
        'Symbol fit %s: gamma_fit=%.4f kappa_fit=%.5g residual=%.2e log-log slope %.4f (gamma=%.4f)',
        branch.value,
        fit.gamma_fit,
        fit.kappa_fit,
        fit.residual,
        fit.gamma_loglog,
        params.gamma,
    )
    return fit


def moment_sentinel(params: ModelParams) -> int:
    """The |v|^k M/nu moment that the family's regime makes infinite: 6 for heavy tails, 2 for the Gaussian"""
    if params.family == Family.HEAVY_TAIL:
        return 6 if params.conservation == Conservation.ENERGY else 4
    if params.family == Family.GAUSSIAN:
        return 2
    raise InvalidSpec(detail='the classical family has no divergent moment')


def check_sentinel(params: ModelParams):
    """:raises MomentDiverged (the expected outcome)"""
    return check_moment_finite(params, moment_sentinel(params))
