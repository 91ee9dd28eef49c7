from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import Field, validator

from src.constants import DEFAULT_EPS_LIST, DEFAULT_RECORD_TIMES
from src.schemas.schema_base import LabModel


class Experiment(str, Enum):
    FOURIER_LIMIT = 'fourier_limit'
    STOKES_LIMIT = 'stokes_limit'
    SYMBOL = 'symbol'
    AUX_LIMIT = 'aux_limit'
    CLASSICAL = 'classical'


class ExperimentPlan(LabModel):
    base_config: Path
    experiment: Experiment = Experiment.FOURIER_LIMIT
    eps_list: tuple[float, ...] = DEFAULT_EPS_LIST
    record_times: tuple[float, ...] = DEFAULT_RECORD_TIMES
    output_dir: Optional[Path] = None
    seed: Optional[int] = None
    n_modes: Optional[int] = Field(None, ge=2)

    @validator('eps_list')
    def _strictly_decreasing(cls, value):  # noqa N805
        if not value:
            raise ValueError('eps_list is empty')
        if any(item <= 0.0 or item > 1.0 for item in value):
            raise ValueError('eps values must lie in (0, 1]')
        if any(later >= earlier for earlier, later in zip(value, value[1:])):
            raise ValueError('eps_list must be strictly decreasing')
        return value

    @validator('record_times')
    def _positive_times(cls, value):  # noqa N805
        if not value or any(item <= 0.0 for item in value):
            raise ValueError('record times must be positive')
        return tuple(sorted(value))
