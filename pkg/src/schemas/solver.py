from enum import Enum

from pydantic import Field, validator

from src.constants import DEFAULT_DOMAIN_LENGTH
from src.schemas.schema_base import LabModel


class Scheme(str, Enum):
    IMPLICIT_EULER = 'implicit_euler'
    CRANK_NICOLSON = 'crank_nicolson'


class SolverConfig(LabModel):
    epsilon: float = Field(..., gt=0.0, le=1.0)
    dt: float = Field(..., gt=0.0)
    t_final: float = Field(..., gt=0.0)
    n_modes: int = Field(32, ge=2)
    domain_length: float = Field(DEFAULT_DOMAIN_LENGTH, gt=0.0)
    scheme: Scheme = Scheme.IMPLICIT_EULER

    @validator('n_modes')
    def _even_modes(cls, value):  # noqa N805
        if value % 2:
            raise ValueError('n_modes must be even')
        return value

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))
