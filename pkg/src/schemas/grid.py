from enum import Enum
from typing import Optional

from pydantic import Field

from src.schemas.schema_base import LabModel


class Mapping(str, Enum):
    TRUNCATED = 'truncated'
    # truncated, with panel breaks clustered at v = 0 where a degenerate nu varies fastest
    GRADED = 'graded'
    ALGEBRAIC = 'algebraic'


class GridSpec(LabModel):
    """Unset fields are filled per family by `vgrid.resolve_grid_spec`"""

    n_per_axis: Optional[int] = Field(None, ge=1)
    mapping: Optional[Mapping] = None
    # truncation radius R for TRUNCATED and GRADED, map scale L for ALGEBRAIC
    r_or_l: Optional[float] = Field(None, gt=0.0)
