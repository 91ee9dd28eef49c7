from enum import Enum
from typing import Optional

from pydantic import Field, validator

from src.constants import DEFAULT_TAIL_RADIUS
from src.schemas.schema_base import LabModel


class Family(str, Enum):
    GAUSSIAN = 'gaussian'
    HEAVY_TAIL = 'heavy_tail'
    CLASSICAL = 'classical'


class Conservation(str, Enum):
    ENERGY = 'energy'
    MASS_MOMENTUM = 'mass_momentum'


class RawModelParams(LabModel):
    family: Family
    conservation: Conservation = Conservation.ENERGY
    d: int = Field(1, ge=1, le=2)
    alpha: Optional[float] = None
    beta: float = 0.0
    c0_initial: float = 1.0
    tail_radius: float = Field(DEFAULT_TAIL_RADIUS, gt=0.0)


class ModelParams(LabModel):
    family: Family
    conservation: Conservation
    d: int = Field(..., ge=1, le=2)
    alpha: Optional[float]
    beta: float
    gamma: float
    c0: float
    interior_coeffs: tuple[float, ...] = ()
    tail_radius: float = DEFAULT_TAIL_RADIUS
    calibrated: bool = False

    @validator('interior_coeffs', pre=True)
    def _as_tuple(cls, value):  # noqa N805
        return tuple(float(item) for item in value)

    @property
    def p(self) -> int:
        """number of conserved moments: d+2 with energy, d+1 without"""
        return self.d + 2 if self.conservation == Conservation.ENERGY else self.d + 1

    @property
    def n_bumps(self) -> int:
        return 2 if self.conservation == Conservation.ENERGY else 1
