from typing import Any

import numpy as np
from pydantic import BaseModel, Extra


class LabModel(BaseModel):
    """Immutable model shared read-only between workers"""

    class Config:
        allow_mutation = False
        extra = Extra.forbid
        validate_assignment = True
        use_enum_values = False


class ReportModel(BaseModel):
    class Config:
        extra = Extra.forbid
        json_encoders = {np.ndarray: lambda array: array.tolist(), np.generic: lambda scalar: scalar.item()}


def to_builtin(value: Any) -> Any:
    """numpy scalars/arrays and nested containers to plain python, for json and csv writers"""
    if isinstance(value, np.ndarray):
        return [to_builtin(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return {'re': value.real, 'im': value.imag}
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, BaseModel):
        return to_builtin(value.dict())
    if hasattr(value, 'value') and not isinstance(value, (int, float, str, bool)):
        return value.value
    return value
