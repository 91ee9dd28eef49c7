"""Equilibria, collision frequencies and the parameter regimes of the anomalous limits.

Families:
    gaussian    M* with a frequency degenerate at the origin, nu* = |v|^beta near 0
    heavy_tail  power-law M~ = c0 |v|^-(alpha+d) beyond the tail radius, nu~ = |v|^beta at infinity
    classical   M* with nu = 1, the gamma = 2 control
"""
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.constants import (
    BLEND_HIGH,
    BLEND_LOW,
    CALIBRATION_TOL,
    SCAN_CONTRACTION,
    SCAN_FLOOR,
    SCAN_LEVELS,
)
from src.domain.vgrid import VelocityGrid, build_grid, quad
from src.schemas.grid import GridSpec, Mapping
from src.schemas.params import Conservation, Family, ModelParams, RawModelParams
from src.services.exceptions import MomentDiverged, RegimeViolation, SingularCalibration, UnsupportedCombination

logger = logging.getLogger(__name__)


def _require(condition: bool, name: str):
    if not condition:
        raise RegimeViolation(name)


def validate_assumptions(raw: RawModelParams) -> ModelParams:
    """Check the regime inequalities of the family and derive gamma.

    :raises RegimeViolation naming the first failed inequality, UnsupportedCombination
    """
    d, beta = raw.d, raw.beta
    alpha = raw.alpha
    calibrated = True

    if raw.family == Family.HEAVY_TAIL:
        if alpha is None:
            raise RegimeViolation('alpha is set')
        _require(raw.c0_initial > 0.0, 'c0>0')
        if raw.conservation == Conservation.ENERGY:
            _require(alpha > 5.0, 'α>5')
            _require(beta < 1.0, 'β<1')
            _require(5.0 < alpha + beta, '5<α+β')
            _require(alpha + beta < 6.0, 'α+β<6')
            _require(beta < (alpha - 4.0) / 2.0, 'β<(α−4)/2')
            gamma = (alpha - beta - 4.0) / (1.0 - beta)
        else:
            _require(alpha > 3.0, 'α>3')
            _require(beta < 1.0, 'β<1')
            _require(3.0 < alpha + beta, '3<α+β')
            _require(alpha + beta < 4.0, 'α+β<4')
            _require(beta < (alpha - 2.0) / 2.0, 'β<(α−2)/2')
            gamma = (alpha - beta - 2.0) / (1.0 - beta)
        c0 = raw.c0_initial
        calibrated = False
    elif raw.family == Family.GAUSSIAN:
        if raw.conservation != Conservation.ENERGY:
            raise UnsupportedCombination()
        _require(d + 2.0 < beta, 'd+2<β')
        _require(beta < d + 3.0, 'β<d+3')
        gamma = (beta + d) / (beta - 1.0)
        c0 = (2.0 * np.pi) ** (-d / 2.0)
    else:
        gamma = 2.0
        beta = 0.0
        c0 = (2.0 * np.pi) ** (-d / 2.0)

    if raw.family != Family.CLASSICAL:
        _require(1.0 < gamma < 2.0, '1<γ<2')

    n_bumps = 2 if raw.conservation == Conservation.ENERGY else 1
    params = ModelParams(
        family=raw.family,
        conservation=raw.conservation,
        d=d,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        c0=c0,
        interior_coeffs=(0.0,) * n_bumps if raw.family == Family.HEAVY_TAIL else (),
        tail_radius=raw.tail_radius,
        calibrated=calibrated,
    )
    logger.info('Validated %s/%s d=%s gamma=%.6f', params.family.value, params.conservation.value, d, gamma)
    return params


def _speed(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.sqrt(np.sum(v * v, axis=-1))


def _smoothstep(r: np.ndarray) -> np.ndarray:
    t = np.clip((r - BLEND_LOW) / (BLEND_HIGH - BLEND_LOW), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _heavy_tail_basis(params: ModelParams, r: np.ndarray) -> np.ndarray:
    """Columns: the c0 profile (tail plus its C1 interior continuation), then one bump per interior coefficient"""
    exponent = params.alpha + params.d
    radius = params.tail_radius
    inside = r < radius
    s = np.where(inside, (r / radius) ** 2, 1.0)
    safe_r = np.where(inside, radius, r)
    tail_profile = np.where(
        inside, radius ** (-exponent) * (1.0 + 0.5 * exponent * (1.0 - s)), safe_r ** (-exponent)
    )
    columns = [tail_profile]
    for power in range(params.n_bumps):
        columns.append(np.where(inside, (1.0 - s) ** 2 * s**power, 0.0))
    return np.stack(columns, axis=-1)


def eval_equilibrium(params: ModelParams, v: np.ndarray) -> np.ndarray:
    r = _speed(v)
    if params.family != Family.HEAVY_TAIL:
        return (2.0 * np.pi) ** (-params.d / 2.0) * np.exp(-0.5 * r * r)
    coeffs = np.array((params.c0,) + tuple(params.interior_coeffs))
    return _heavy_tail_basis(params, r) @ coeffs


def eval_collision_freq(params: ModelParams, v: np.ndarray) -> np.ndarray:
    r = _speed(v)
    blend = _smoothstep(r)
    if params.family == Family.HEAVY_TAIL:
        # 1 inside the blend zone, r^beta past it
        power = np.maximum(r, BLEND_LOW) ** params.beta
        return 1.0 + (power - 1.0) * blend
    if params.family == Family.GAUSSIAN:
        power = np.minimum(r, BLEND_HIGH) ** params.beta
        return power + (1.0 - power) * blend
    return np.ones_like(r)


def moment_targets(params: ModelParams) -> np.ndarray:
    d = params.d
    targets = [1.0, float(d), float(d * (d + 2))]
    return np.array(targets[: params.n_bumps + 1])


def equilibrium_moments(params: ModelParams, grid: VelocityGrid) -> np.ndarray:
    """Quadrature of (1, |v|^2, |v|^4) against M"""
    r2 = grid.speed**2
    values = eval_equilibrium(params, grid.nodes)[:, None] * np.stack([np.ones_like(r2), r2, r2 * r2], axis=-1)
    return quad(grid, values)


def calibrate_moments(params: ModelParams, grid: VelocityGrid) -> ModelParams:
    """Solve for (c0, interior_coeffs) so the grid quadrature of M reproduces 1, d[, d(d+2)].

    :raises SingularCalibration, RegimeViolation('interior positivity')
    """
    if params.family != Family.HEAVY_TAIL:
        moments = equilibrium_moments(params, grid)
        logger.info('Analytic equilibrium verified on grid: moments=%s', np.array2string(moments, precision=12))
        return params.copy(update={'calibrated': True})

    r = grid.speed
    basis = _heavy_tail_basis(params, r)
    n_unknowns = basis.shape[1]
    powers = np.stack([r ** (2 * i) for i in range(n_unknowns)], axis=-1)
    system = quad(grid, powers[:, :, None] * basis[:, None, :])
    targets = moment_targets(params)

    if np.linalg.matrix_rank(system) < n_unknowns or np.linalg.cond(system) > 1e14:
        raise SingularCalibration()
    solution = np.linalg.solve(system, targets)
    c0, coeffs = float(solution[0]), tuple(float(item) for item in solution[1:])
    if c0 <= 0.0:
        raise RegimeViolation('c0>0')

    calibrated = params.copy(update={'c0': c0, 'interior_coeffs': coeffs, 'calibrated': True})
    samples = np.linspace(0.0, params.tail_radius, 513)[:, None] * np.eye(params.d)[0]
    positive = np.min(eval_equilibrium(calibrated, samples)) > 0.0
    if not positive or np.min(eval_equilibrium(calibrated, grid.nodes)) <= 0:
        raise RegimeViolation('interior positivity')

    achieved = system @ solution
    if np.max(np.abs(achieved - targets) / targets) > CALIBRATION_TOL:
        raise SingularCalibration(detail=f'Calibration residual too large: {achieved} vs {targets}')
    logger.info('Calibrated heavy tail: c0=%.10g interior=%s', c0, coeffs)
    return calibrated


@dataclass(frozen=True)
class StabilityScan:
    label: str
    enlarge: tuple[float, ...]
    refine: tuple[float, ...]
    ratio: float
    diverged: bool


def _sequence_ratio(values: list[float]) -> float:
    first, second = values[1] - values[0], values[2] - values[1]
    scale = abs(values[-1])
    if abs(first) <= SCAN_FLOOR * scale and abs(second) <= SCAN_FLOOR * scale:
        return 0.0
    if first == 0.0:
        return float('inf')
    return abs(second) / abs(first)


def stability_scan(
    params: ModelParams,
    integrand: Callable[[np.ndarray], np.ndarray],
    label: str,
    base_radius: float = None,
    base_n: int = None,
) -> StabilityScan:
    """Grid stability of an integral under domain enlargement (fixed spacing) and refinement (fixed radius)"""
    d = params.d
    if base_radius is None:
        base_radius = 4.0 * params.tail_radius if params.family == Family.HEAVY_TAIL else 8.0 * np.sqrt(d)
    base_n = base_n or (64 if d == 1 else 32)

    enlarge, refine = [], []
    for level in range(SCAN_LEVELS):
        factor = 2**level
        n_per_axis = base_n * factor
        wide_spec = GridSpec(n_per_axis=n_per_axis, mapping=Mapping.TRUNCATED, r_or_l=base_radius * factor)
        wide = build_grid(d, wide_spec)
        fine = build_grid(d, GridSpec(n_per_axis=n_per_axis, mapping=Mapping.TRUNCATED, r_or_l=base_radius))
        enlarge.append(quad(wide, integrand))
        refine.append(quad(fine, integrand))

    ratio = max(_sequence_ratio(enlarge), _sequence_ratio(refine))
    scan = StabilityScan(
        label=label, enlarge=tuple(enlarge), refine=tuple(refine), ratio=ratio, diverged=ratio >= SCAN_CONTRACTION
    )
    logger.debug('Scan %s: ratio=%.4f enlarge=%s refine=%s', label, ratio, enlarge, refine)
    return scan


def scan_moment(params: ModelParams, power: int) -> StabilityScan:
    """Grid stability of the quadrature of |v|^power M / nu"""

    def integrand(nodes):
        return _speed(nodes) ** power * eval_equilibrium(params, nodes) / eval_collision_freq(params, nodes)

    return stability_scan(params, integrand, label=f'|v|^{power} M/nu')


def check_moment_finite(params: ModelParams, power: int) -> StabilityScan:
    scan = scan_moment(params, power)
    if scan.diverged:
        raise MomentDiverged(scan.label, scan.ratio)
    return scan
