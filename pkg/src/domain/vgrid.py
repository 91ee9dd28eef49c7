import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from src.schemas.grid import GridSpec, Mapping
from src.schemas.params import Family
from src.services.exceptions import InvalidSpec, NonFiniteIntegrand

logger = logging.getLogger(__name__)

PANEL_ORDERS = (8, 4, 2, 1)
GRADING_POWER = 3.0

Integrand = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]

DEFAULT_MAPPINGS = {
    Family.HEAVY_TAIL: Mapping.ALGEBRAIC,
    Family.GAUSSIAN: Mapping.GRADED,
    Family.CLASSICAL: Mapping.TRUNCATED,
}


def composite_legendre(m: int, radius: float, start: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """m Gauss-Legendre nodes on (start, start + radius) split in equal panels of the highest order dividing m"""
    order = next(q for q in PANEL_ORDERS if m % q == 0)
    panels = m // order
    t, w = np.polynomial.legendre.leggauss(order)
    width = radius / panels
    left = start + width * np.arange(panels)
    nodes = (left[:, None] + 0.5 * width * (t + 1.0)[None, :]).ravel()
    weights = np.tile(0.5 * width * w, panels)
    return nodes, weights


def graded_legendre(m: int, radius: float, power: float = GRADING_POWER) -> tuple[np.ndarray, np.ndarray]:
    """m Gauss-Legendre nodes on (0, radius) in panels with breaks radius * (j / panels)^power"""
    order = next(q for q in PANEL_ORDERS if m % q == 0)
    panels = m // order
    t, w = np.polynomial.legendre.leggauss(order)
    breaks = radius * (np.arange(panels + 1) / panels) ** power
    left, width = breaks[:-1], np.diff(breaks)
    nodes = (left[:, None] + 0.5 * width[:, None] * (t + 1.0)[None, :]).ravel()
    weights = (0.5 * width[:, None] * w[None, :]).ravel()
    return nodes, weights


def algebraic_half_rule(n: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Positive half of v = L u / (1 - u^2) applied to n Gauss-Legendre nodes, Jacobian in the weights"""
    u, w = np.polynomial.legendre.leggauss(n)
    positive = u > 0.0
    u, w = u[positive], w[positive]
    order = np.argsort(u)
    u, w = u[order], w[order]
    one_minus = 1.0 - u * u
    nodes = scale * u / one_minus
    weights = w * scale * (1.0 + u * u) / one_minus**2
    return nodes, weights


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    """Tensor grid laid out as 2^d reflection blocks of one positive-orthant block.

    Node index = sign_block * m^d + base_index, sign blocks in C order over (+, -) per axis,
    so v -> -v maps block s to block 2^d - 1 - s with the same base index.
    """

    d: int
    mapping: Mapping
    scale: float
    n_per_axis: int
    axis_nodes: np.ndarray
    axis_weights: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    base_weights: np.ndarray
    mirror: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_base(self) -> int:
        return self.base_weights.shape[0]

    @property
    def speed(self) -> np.ndarray:
        return np.sqrt(np.sum(self.nodes**2, axis=-1))

    @property
    def radius(self) -> float:
        return float('inf') if self.mapping == Mapping.ALGEBRAIC else self.scale

    def integrate(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        """Weighted sum along the node axis; mirror pairs are added first so odd integrands give exact zeros"""
        values = np.moveaxis(np.asarray(values), axis, 0)
        rest = values.shape[1:]
        folded = values.reshape((2,) * self.d + (self.n_base,) + rest)
        for _ in range(self.d):
            folded = folded[0] + folded[1]
        return np.einsum('n,n...->...', self.base_weights, folded)


def resolve_grid_spec(family: Family, d: int, tail_radius: float, spec: GridSpec = None) -> GridSpec:
    spec = spec or GridSpec()
    mapping = spec.mapping or DEFAULT_MAPPINGS[family]
    if spec.r_or_l is not None:
        scale = spec.r_or_l
    else:
        scale = tail_radius if mapping == Mapping.ALGEBRAIC else 8.0 * np.sqrt(d)
    n_per_axis = spec.n_per_axis or (128 if d == 1 else 32)
    return GridSpec(n_per_axis=n_per_axis, mapping=mapping, r_or_l=float(scale))


def build_grid(d: int, spec: GridSpec) -> VelocityGrid:
    if d not in (1, 2):
        raise InvalidSpec(detail=f'Unsupported dimension d={d}')
    if spec.n_per_axis is None or spec.mapping is None or spec.r_or_l is None:
        raise InvalidSpec(detail='Grid spec is not resolved')
    n = spec.n_per_axis
    if n % 2 or n < 8:
        raise InvalidSpec(detail=f'n_per_axis must be even and >= 8, got {n}')

    m = n // 2
    if spec.mapping == Mapping.TRUNCATED:
        axis_nodes, axis_weights = composite_legendre(m, spec.r_or_l)
    elif spec.mapping == Mapping.GRADED:
        axis_nodes, axis_weights = graded_legendre(m, spec.r_or_l)
    else:
        axis_nodes, axis_weights = algebraic_half_rule(n, spec.r_or_l)

    base = np.stack(np.meshgrid(*([axis_nodes] * d), indexing='ij'), axis=-1).reshape(-1, d)
    base_weights = np.prod(
        np.stack(np.meshgrid(*([axis_weights] * d), indexing='ij'), axis=-1).reshape(-1, d), axis=1
    )
    signs = np.stack(np.meshgrid(*([np.array([1.0, -1.0])] * d), indexing='ij'), axis=-1).reshape(-1, d)
    blocks = signs.shape[0]

    nodes = (signs[:, None, :] * base[None, :, :]).reshape(-1, d)
    weights = np.tile(base_weights, blocks)
    block_index = np.repeat(np.arange(blocks), base.shape[0])
    base_index = np.tile(np.arange(base.shape[0]), blocks)
    mirror = (blocks - 1 - block_index) * base.shape[0] + base_index

    logger.debug('Velocity grid d=%s mapping=%s n=%s nodes=%s', d, spec.mapping.value, n, nodes.shape[0])
    return VelocityGrid(
        d=d,
        mapping=spec.mapping,
        scale=float(spec.r_or_l),
        n_per_axis=n,
        axis_nodes=axis_nodes,
        axis_weights=axis_weights,
        nodes=nodes,
        weights=weights,
        base_weights=base_weights,
        mirror=mirror,
    )


def quad(grid: VelocityGrid, integrand: Integrand):
    """Integral over the velocity grid of a callable of the (N, d) nodes or of tabulated values (N, ...)"""
    values = integrand(grid.nodes) if callable(integrand) else integrand
    values = np.asarray(values)
    if values.shape[:1] != (grid.n_nodes,):
        raise InvalidSpec(detail=f'Integrand has shape {values.shape}, grid has {grid.n_nodes} nodes')
    if not np.all(np.isfinite(values)):
        raise NonFiniteIntegrand()
    result = grid.integrate(values)
    if np.ndim(result) == 0:
        return complex(result) if np.iscomplexobj(result) else float(result)
    return result
