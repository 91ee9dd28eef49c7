from typing import Any, Dict, Optional

from pydantic import Field

from src.schemas.grid import GridSpec
from src.schemas.params import RawModelParams
from src.schemas.schema_base import LabModel
from src.schemas.solver import Scheme
from src.settings import get_settings


class SolverDefaults(LabModel):
    epsilon: float = Field(0.1, gt=0.0, le=1.0)
    dt_factor: float = Field(default_factory=lambda: get_settings().solver_settings.dt_factor, gt=0.0)
    t_final: float = Field(default_factory=lambda: get_settings().solver_settings.t_final, gt=0.0)
    n_modes: Optional[int] = Field(None, ge=2)
    domain_length: float = Field(6.283185307179586, gt=0.0)
    scheme: Scheme = Scheme.IMPLICIT_EULER


class LabConfig(LabModel):
    params: RawModelParams
    grid: GridSpec = GridSpec()
    solver: SolverDefaults = SolverDefaults()
    seed: Optional[int] = None

    def echo(self) -> Dict[str, Any]:
        return {
            'params': self.params.dict(),
            'grid': self.grid.dict(),
            'solver': self.solver.dict(),
            'seed': self.seed,
        }
