import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectralLattice:
    """Periodic box [0, L)^d with n points per axis; modes flattened in C order of the fftn axes.

    Coefficients are fftn(values) / n^d, so a field is sum_k c_k exp(i k.x).
    """

    d: int
    n: int
    length: float = 2.0 * np.pi
    wavevectors: np.ndarray = field(init=False, repr=False)
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        axis_k = 2.0 * np.pi / self.length * np.fft.fftfreq(self.n, d=1.0 / self.n)
        axis_x = self.length * np.arange(self.n) / self.n
        k_grid = np.meshgrid(*([axis_k] * self.d), indexing='ij')
        x_grid = np.meshgrid(*([axis_x] * self.d), indexing='ij')
        object.__setattr__(self, 'wavevectors', np.stack(k_grid, axis=-1).reshape(-1, self.d))
        object.__setattr__(self, 'points', np.stack(x_grid, axis=-1).reshape(-1, self.d))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def n_total(self) -> int:
        return self.n**self.d

    @property
    def volume(self) -> float:
        return self.length**self.d

    @property
    def k_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.wavevectors**2, axis=-1))

    @property
    def conjugate_index(self) -> np.ndarray:
        """index of -k for every mode"""
        index = np.arange(self.n_total).reshape(self.shape)
        for axis in range(self.d):
            index = np.roll(np.flip(index, axis=axis), 1, axis=axis)
        return index.ravel()

    def to_modes(self, values: np.ndarray) -> np.ndarray:
        """grid values (n_total, ...) -> coefficients (n_total, ...)"""
        values = np.asarray(values)
        rest = values.shape[1:]
        gridded = values.reshape(self.shape + rest)
        coeffs = np.fft.fftn(gridded, axes=tuple(range(self.d))) / self.n_total
        return coeffs.reshape((self.n_total,) + rest)

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs)
        rest = coeffs.shape[1:]
        gridded = coeffs.reshape(self.shape + rest) * self.n_total
        values = np.fft.ifftn(gridded, axes=tuple(range(self.d)))
        return values.reshape((self.n_total,) + rest)

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return self.to_modes(func(self.points))

    def l2_norm(self, coeffs: np.ndarray) -> float:
        """L2 norm over the box of a field (or stacked fields) by Parseval"""
        return float(np.sqrt(self.volume * np.sum(np.abs(coeffs) ** 2)))


@dataclass(frozen=True, eq=False)
class ScalarField:
    lattice: SpectralLattice
    coeffs: np.ndarray

    @classmethod
    def from_function(cls, lattice: SpectralLattice, func: Callable[[np.ndarray], np.ndarray]) -> 'ScalarField':
        return cls(lattice=lattice, coeffs=lattice.sample(func))

    def values(self) -> np.ndarray:
        return np.real(self.lattice.to_grid(self.coeffs))

    def norm(self) -> float:
        return self.lattice.l2_norm(self.coeffs)


@dataclass(frozen=True, eq=False)
class VectorField:
    """coeffs (n_total, d)"""

    lattice: SpectralLattice
    coeffs: np.ndarray

    @classmethod
    def from_function(cls, lattice: SpectralLattice, func: Callable[[np.ndarray], np.ndarray]) -> 'VectorField':
        return cls(lattice=lattice, coeffs=lattice.sample(func))

    def values(self) -> np.ndarray:
        return np.real(self.lattice.to_grid(self.coeffs))

    def divergence(self) -> ScalarField:
        return ScalarField(self.lattice, 1j * np.sum(self.lattice.wavevectors * self.coeffs, axis=-1))

    def norm(self) -> float:
        return self.lattice.l2_norm(self.coeffs)
