"""The auxiliary transform chi of a test function and the velocity integrals that produce the fractional limit.

chi solves nu chi - eps v.grad chi = nu phi. For a Fourier term c e^{ik.x} it is the same term multiplied by
nu / (nu - i eps k.v), so every limit integral reduces to a radial integral of a closed-form angular average.
"""
import logging
import math
import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import special

from src.domain.lattice import SpectralLattice
from src.domain.params import eval_collision_freq, eval_equilibrium
from src.schemas.params import Conservation, Family, ModelParams
from src.services.exceptions import InvalidSpec, QuadratureDiverged
from src.settings import get_settings

logger = logging.getLogger(__name__)

CHI_TOL = 1e-9
CHI_MAX_NODES = 1024
PANEL_ORDER = 16
HEAVY_REACH = 1e4
GAUSS_FLOOR = 1e-4
GAUSS_REACH = 12.0

_TERM = re.compile(r'^\s*([-+0-9.eE]+)\s*(?:@\s*([-+0-9.eE:]+))?\s*$')


@dataclass(frozen=True, eq=False)
class AuxTestFunction:
    """phi(x) = Re sum_j c_j exp(i k_j . x); coeffs (J,), wavevectors (J, d)"""

    coeffs: np.ndarray
    wavevectors: np.ndarray

    @property
    def d(self) -> int:
        return self.wavevectors.shape[1]

    @classmethod
    def cosine(cls, amplitudes: Sequence[float], d: int = 1) -> 'AuxTestFunction':
        """sum_k a_k cos(k x_1) for k = 1, 2, ..."""
        wavevectors = np.zeros((len(amplitudes), d))
        wavevectors[:, 0] = np.arange(1, len(amplitudes) + 1)
        return cls(coeffs=np.asarray(amplitudes, dtype=complex), wavevectors=wavevectors)

    @classmethod
    def parse(cls, text: str, d: int = 1) -> 'AuxTestFunction':
        """'fourier: 1, 0.5' is cos x + 0.5 cos 2x; 'fourier: 1@0:1' is cos y (components joined by ':')"""
        head, _, body = text.partition(':')
        if head.strip().lower() != 'fourier' or not body.strip():
            raise InvalidSpec(detail=f'test function must read "fourier: a_1, a_2, ...", got {text!r}')
        coeffs, wavevectors = [], []
        for position, item in enumerate(body.split(','), start=1):
            match = _TERM.match(item)
            if not match:
                raise InvalidSpec(detail=f'bad Fourier term {item!r}')
            amplitude, wave = match.groups()
            vector = np.zeros(d)
            if wave is None:
                vector[0] = position
            else:
                parts = [float(part) for part in wave.split(':')]
                if len(parts) != d:
                    raise InvalidSpec(detail=f'wave vector {wave!r} needs {d} components')
                vector[:] = parts
            coeffs.append(float(amplitude))
            wavevectors.append(vector)
        return cls(coeffs=np.asarray(coeffs, dtype=complex), wavevectors=np.asarray(wavevectors))

    @property
    def k_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.wavevectors**2, axis=-1))

    @property
    def bandwidth(self) -> float:
        return float(np.max(self.k_norm))

    @property
    def hessian_bound(self) -> float:
        return float(np.sum(np.abs(self.coeffs) * self.k_norm**2))

    def _phases(self, x: np.ndarray) -> np.ndarray:
        return np.exp(1j * np.asarray(x, dtype=float) @ self.wavevectors.T)

    def synthesize(self, x: np.ndarray, multipliers: np.ndarray) -> np.ndarray:
        """Re sum_j c_j m_j e^{i k_j.x}; multipliers (J,) or (J, ...) -> (P,) or (P, ...)"""
        weighted = self.coeffs.reshape((-1,) + (1,) * (np.ndim(multipliers) - 1)) * multipliers
        return np.real(np.tensordot(self._phases(x), weighted, axes=(1, 0)))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.real(self._phases(x) @ self.coeffs)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.real(self._phases(x) @ (1j * self.coeffs[:, None] * self.wavevectors))

    def hessian(self, x: np.ndarray) -> np.ndarray:
        outer = self.wavevectors[:, :, None] * self.wavevectors[:, None, :]
        return np.real(np.tensordot(self._phases(x), -self.coeffs[:, None, None] * outer, axes=(1, 0)))

    def fractional_laplacian(self, x: np.ndarray, gamma: float) -> np.ndarray:
        return self.synthesize(x, self.k_norm**gamma)


def chi_multipliers(
    phi: AuxTestFunction,
    eps: float,
    nu: np.ndarray,
    v: np.ndarray,
    method: str = 'laguerre',
    n_nodes: int = None,
) -> np.ndarray:
    """chi = Re sum_j c_j m_j(v) e^{i k_j.x}; returns m (J, Nv)

    :raises QuadratureDiverged when the Laguerre rule cannot satisfy the defining equation
    """
    phase_rate = eps * (phi.wavevectors @ np.atleast_2d(v).T) / nu
    if method == 'resolvent':
        return 1.0 / (1.0 - 1j * phase_rate)
    if method != 'laguerre':
        raise InvalidSpec(detail=f'unknown chi method {method!r}')

    n_nodes = n_nodes or get_settings().solver_settings.chi_nodes
    while True:
        s, w = special.roots_laguerre(n_nodes)
        multipliers = np.exp(1j * phase_rate[..., None] * s) @ w
        # nu (m - 1) - i eps k.v m, divided by nu
        residual = float(np.max(np.abs(multipliers - 1.0 - 1j * phase_rate * multipliers), initial=0.0))
        if residual <= CHI_TOL:
            return multipliers
        if 2 * n_nodes > CHI_MAX_NODES:
            raise QuadratureDiverged(residual, CHI_TOL)
        logger.debug('chi residual %.2e with %s nodes, doubling', residual, n_nodes)
        n_nodes *= 2


def eval_chi(
    phi: Union[AuxTestFunction, Callable],
    eps: float,
    params: ModelParams,
    v: np.ndarray,
    x: np.ndarray,
    method: str = 'laguerre',
    n_nodes: int = None,
) -> np.ndarray:
    """chi(x, v) = int_0^inf e^{-s} phi(x + eps v s / nu(v)) ds, shape (P, Nv)

    Plain callables are integrated with a fixed Laguerre rule; Fourier test functions go through
    their per-term multipliers.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    nu = eval_collision_freq(params, v)
    if isinstance(phi, AuxTestFunction):
        return phi.synthesize(x, chi_multipliers(phi, eps, nu, v, method, n_nodes))

    s, w = special.roots_laguerre(n_nodes or get_settings().solver_settings.chi_nodes)
    shifts = eps * (v / nu[:, None])[:, None, :] * s[None, :, None]
    points = x[:, None, None, :] + shifts[None]
    values = np.asarray(phi(points.reshape(-1, x.shape[1]))).reshape(x.shape[0], v.shape[0], s.shape[0])
    return values @ w


@dataclass(frozen=True, eq=False)
class PolarGrid:
    """Radial rule times half-sphere directions, nodes mirrored in two halves (v then -v).

    radial_weights carry r^{d-1}; angular_weight is the measure of one direction.
    """

    d: int
    radii: np.ndarray
    radial_weights: np.ndarray
    directions: np.ndarray
    angular_weight: float

    @property
    def half_nodes(self) -> np.ndarray:
        return (self.radii[:, None, None] * self.directions[None]).reshape(-1, self.d)

    @property
    def nodes(self) -> np.ndarray:
        half = self.half_nodes
        return np.concatenate([half, -half], axis=0)

    @property
    def half_weights(self) -> np.ndarray:
        return np.repeat(self.radial_weights * self.angular_weight, self.directions.shape[0])

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """integral over the node axis (last); mirror pairs are added first"""
        values = np.asarray(values)
        half = values.shape[-1] // 2
        return (values[..., :half] + values[..., half:]) @ self.half_weights


def _half_circle(count: int) -> np.ndarray:
    theta = np.pi * np.arange(count) / count
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _panels(breaks: Sequence[float], order: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for left, right in zip(breaks[:-1], breaks[1:]):
        half = 0.5 * (right - left)
        nodes.append(left + half * (t + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _geometric(start: float, stop: float) -> list[float]:
    count = max(1, int(math.ceil(math.log2(stop / start))))
    return list(start * (stop / start) ** (np.arange(count + 1) / count))


def radial_breaks(params: ModelParams, eps: float) -> list[float]:
    """Heavy tails: refined out to 1e4 eps^{-1/(1-beta)}; Gaussian: refined in to 1e-4 eps^{1/(beta-1)}"""
    if params.family == Family.HEAVY_TAIL:
        r_max = HEAVY_REACH * eps ** (-1.0 / (1.0 - params.beta))
        inner = sorted({0.0, 0.9, 1.1, params.tail_radius})
        inner = [point for point in inner if point < r_max]
        return inner + _geometric(inner[-1] if inner[-1] > 0.0 else 1.0, r_max)[1:]
    if params.family == Family.GAUSSIAN:
        r_min = GAUSS_FLOOR * eps ** (1.0 / (params.beta - 1.0))
        return _geometric(r_min, 0.9) + [1.1] + list(np.arange(2.1, GAUSS_REACH + 0.5, 1.0))
    raise InvalidSpec(detail='limit integrals are defined for the heavy_tail and gaussian families')


def polar_grid(params: ModelParams, eps: float, order: int = PANEL_ORDER, n_directions: int = 1) -> PolarGrid:
    radii, weights = _panels(radial_breaks(params, eps), order)
    if params.d == 1:
        return PolarGrid(1, radii, weights, np.ones((1, 1)), 1.0)
    return PolarGrid(2, radii, weights * radii, _half_circle(n_directions), np.pi / n_directions)


def _angular_average(a: np.ndarray, d: int, transverse: bool) -> np.ndarray:
    """integral over the sphere of Re(nu / (nu - i b) - 1) with b^2 = a cos^2, optionally times sin^2"""
    root = np.sqrt(1.0 + a)
    if d == 1:
        return -2.0 * a / (1.0 + a)
    if transverse:
        return -np.pi + 2.0 * np.pi / (root + 1.0)
    return -2.0 * np.pi * a / (1.0 + a + root)


def _limit_symbol(k_norm: np.ndarray, eps: float, params: ModelParams, kind: str, order: int) -> np.ndarray:
    grid = polar_grid(params, eps, order)
    radial = grid.radii[:, None] * np.eye(params.d)[0]
    nu = eval_collision_freq(params, radial)
    weight = nu * eval_equilibrium(params, radial)
    if kind == 'heavy':
        weight = weight * grid.radii**4 / (2.0 * params.d)
    elif kind == 'stokes':
        weight = weight * grid.radii**2
    a = (eps * k_norm[:, None] * grid.radii[None, :] / nu) ** 2
    average = _angular_average(a, params.d, transverse=kind == 'stokes')
    return eps ** (-params.gamma) * (average @ (grid.radial_weights * weight))


def limit_symbol(k_norm: np.ndarray, eps: float, params: ModelParams, kind: str, order: int = PANEL_ORDER):
    """eps^-gamma int w(v) (nu/(nu - i eps k.v) - 1) dv per wave number, checked against a refined rule

    :raises QuadratureDiverged
    """
    k_norm = np.atleast_1d(np.asarray(k_norm, dtype=float))
    coarse = _limit_symbol(k_norm, eps, params, kind, order)
    fine = _limit_symbol(k_norm, eps, params, kind, 2 * order)
    change = float(np.max(np.abs(fine - coarse)))
    tol = get_settings().solver_settings.singular_tol
    if change > tol * max(float(np.max(np.abs(fine))), np.finfo(float).tiny):
        raise QuadratureDiverged(change, tol)
    return fine


def _require(params: ModelParams, family: Family, conservation: Conservation, d: Optional[int] = None):
    if params.family != family or params.conservation != conservation:
        raise InvalidSpec(detail=f'operation needs {family.value}/{conservation.value} parameters')
    if d is not None and params.d != d:
        raise InvalidSpec(detail=f'operation needs d={d}')


def frac_limit_heavy(
    phi: AuxTestFunction, eps: float, params: ModelParams, lattice: SpectralLattice
) -> np.ndarray:
    """eps^-gamma int nu M |v|^4 / (2d) (chi - phi) dv at the lattice points"""
    _require(params, Family.HEAVY_TAIL, Conservation.ENERGY)
    return phi.synthesize(lattice.points, limit_symbol(phi.k_norm, eps, params, 'heavy'))


def frac_limit_gauss(
    phi: AuxTestFunction, eps: float, params: ModelParams, lattice: SpectralLattice
) -> np.ndarray:
    """eps^-gamma int nu M (chi - phi) dv at the lattice points"""
    _require(params, Family.GAUSSIAN, Conservation.ENERGY)
    return phi.synthesize(lattice.points, limit_symbol(phi.k_norm, eps, params, 'gauss'))


def frac_limit_stokes(
    phi: AuxTestFunction, eps: float, params: ModelParams, lattice: SpectralLattice
) -> np.ndarray:
    """eps^-gamma int nu M (v.k_perp)^2 (chi - phi) dv, k_perp the unit normal of each Fourier term"""
    _require(params, Family.HEAVY_TAIL, Conservation.MASS_MOMENTUM, d=2)
    return phi.synthesize(lattice.points, limit_symbol(phi.k_norm, eps, params, 'stokes'))


FRAC_LIMITS = {
    (Family.HEAVY_TAIL, Conservation.ENERGY): frac_limit_heavy,
    (Family.GAUSSIAN, Conservation.ENERGY): frac_limit_gauss,
    (Family.HEAVY_TAIL, Conservation.MASS_MOMENTUM): frac_limit_stokes,
}


def frac_limit(phi: AuxTestFunction, eps: float, params: ModelParams, lattice: SpectralLattice) -> np.ndarray:
    try:
        operation = FRAC_LIMITS[(params.family, params.conservation)]
    except KeyError:
        raise InvalidSpec(detail=f'no limit integral for {params.family.value}/{params.conservation.value}')
    return operation(phi, eps, params, lattice)


@dataclass(frozen=True)
class LimitComparison:
    kappa_fit: float
    l2_error: float


def compare_to_fractional(
    values: np.ndarray, phi: AuxTestFunction, gamma: float, lattice: SpectralLattice
) -> LimitComparison:
    """Least-squares kappa for values ~ -kappa (-Delta)^{gamma/2} phi and the relative L2 error of that fit"""
    target = -phi.fractional_laplacian(lattice.points, gamma)
    scale = float(target @ target)
    if scale == 0.0:
        raise InvalidSpec(detail='test function has no non-constant part')
    kappa = float(values @ target) / scale
    error = float(np.linalg.norm(values - kappa * target) / (abs(kappa) * np.sqrt(scale)))
    return LimitComparison(kappa_fit=kappa, l2_error=error)


@dataclass(frozen=True, eq=False)
class BoussinesqCheck:
    i1_field: np.ndarray
    i2_bound: float
    i2_measured: float


def _psi(nodes: np.ndarray, index: int, d: int) -> np.ndarray:
    if index < d:
        return nodes[:, index]
    return (np.sum(nodes * nodes, axis=-1) - (d + 2.0)) / 2.0


def _macro_profile(nodes: np.ndarray, params: ModelParams, u: np.ndarray) -> np.ndarray:
    """M phi . U with phi = (1, v, (|v|^2 - d)/2)"""
    d = params.d
    columns = [np.ones(nodes.shape[0]), *nodes.T]
    if params.conservation == Conservation.ENERGY:
        columns.append((np.sum(nodes * nodes, axis=-1) - d) / 2.0)
    return eval_equilibrium(params, nodes) * (np.stack(columns, axis=-1) @ u)


def boussinesq_integrand_check(
    phi: AuxTestFunction,
    eps: float,
    params: ModelParams,
    u: Sequence[float],
    psi: int,
    lattice: SpectralLattice,
    n_directions: int = 128,
) -> BoussinesqCheck:
    """Split eps^-gamma int psi M phi.U nu (chi - phi) dv into its first-order term and the remainder.

    i1_field is int psi M phi.U v.grad phi dv (the eps^{1-gamma} coefficient). The remainder is measured
    exactly per Fourier term and bounded by eps^{2-gamma} |D^2 phi| int |psi| |v|^2 |M phi.U| / nu dv.
    The velocity grid does not depend on eps, so the bound scales exactly like eps^{2-gamma}.
    """
    if params.conservation != Conservation.ENERGY:
        raise InvalidSpec(detail='the Boussinesq check needs the energy conservation set')
    u = np.asarray(u, dtype=float)
    if u.shape != (params.p,) or not 0 <= psi <= params.d:
        raise InvalidSpec(detail=f'need U with {params.p} components and psi index in [0, {params.d}]')

    grid = polar_grid(params, 1.0, n_directions=n_directions)
    nodes = grid.nodes
    nu = eval_collision_freq(params, nodes)
    weight = _psi(nodes, psi, params.d) * _macro_profile(nodes, params, u)

    projection = phi.wavevectors @ nodes.T
    i1_field = phi.synthesize(lattice.points, grid.integrate(1j * projection * weight))

    b = eps * projection
    remainder = grid.integrate(-(b**2) / (nu - 1j * b) * weight)
    i2_measured = float(np.max(np.abs(eps ** (-params.gamma) * phi.synthesize(lattice.points, remainder))))
    bound_integral = float(grid.integrate(np.abs(weight) * np.sum(nodes * nodes, axis=-1) / nu))
    i2_bound = eps ** (2.0 - params.gamma) * phi.hessian_bound * bound_integral
    logger.info('Boussinesq check eps=%.4g: remainder %.4e <= bound %.4e', eps, i2_measured, i2_bound)
    return BoussinesqCheck(i1_field=i1_field, i2_bound=i2_bound, i2_measured=i2_measured)
