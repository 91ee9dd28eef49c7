import logging
from dataclasses import dataclass
from functools import wraps
from typing import Any, Callable

import numpy as np
from pydantic import ValidationError
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence

from src.common.helpers import ExceptionHelper
from src.services.exceptions import EigSolveFailure, InvalidSpec, LabException, NonFiniteIntegrand, SingularA

logger = logging.getLogger(__name__)


@dataclass
class ServiceBase:
    @classmethod
    def finite_result(cls, result: Any) -> Any:
        """Numerical result, obtain the result or raise an exception"""
        values = np.asarray(result)
        if values.dtype.kind in 'fc' and not np.all(np.isfinite(values)):
            raise NonFiniteIntegrand(detail='Service produced a non-finite result')
        return result


def try_numeric_except(func: Callable):
    """Decorator translating numpy/scipy/pydantic failures into lab exceptions.

    numpy overflow, invalid and divide-by-zero operations raise inside the call, so a NaN or inf
    surfaces as NonFiniteIntegrand instead of travelling into a report.
    """

    @wraps(func)
    def wrapped_func(*args, **kwargs):
        try:
            with np.errstate(over='raise', invalid='raise', divide='raise', under='ignore'):
                result = func(*args, **kwargs)
        except LabException:
            raise
        except ValidationError as exc:
            exc_info = ExceptionHelper.get_exc_info()
            raise InvalidSpec(
                detail=f'Validation error - {exc.errors()[0]["msg"]}',
                stacktrace=ExceptionHelper.last_frame(exc_info),
            ) from exc
        except np.linalg.LinAlgError as exc:
            logger.exception(exc)
            exc_info = ExceptionHelper.get_exc_info()
            raise SingularA(stacktrace=ExceptionHelper.last_frame(exc_info)) from exc
        except (ArpackNoConvergence, ArpackError) as exc:
            exc_info = ExceptionHelper.get_exc_info()
            raise EigSolveFailure(stacktrace=ExceptionHelper.last_frame(exc_info)) from exc
        except FloatingPointError as exc:
            exc_info = ExceptionHelper.get_exc_info()
            raise NonFiniteIntegrand(stacktrace=ExceptionHelper.format_exception(exc_info)) from exc
        except Exception as ex:
            logger.exception('Unknow error %s', repr(ex))
            raise
        else:
            return result

    return wrapped_func
