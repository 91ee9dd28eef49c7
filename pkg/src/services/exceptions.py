import logging
from typing import Optional

from src.constants import EXIT_NUMERICAL, EXIT_VALIDATION

logger = logging.getLogger(__name__)


class LabException(Exception):
    exit_code: int = EXIT_NUMERICAL

    def __init__(
        self,
        detail: str = 'Operation error',
        log_level: Optional[int] = logging.INFO,
        stacktrace=None,
        exit_code: Optional[int] = None,
    ):
        if exit_code is not None:
            self.exit_code = exit_code
        self.detail = detail
        log_detail = f'[-] {detail} - ExitCode=[{self.exit_code}]'

        if stacktrace:
            log_detail += f' Stacktrace=[{stacktrace}]'
        match log_level:
            case logging.INFO:
                logger.info(log_detail)
            case logging.WARNING:
                logger.warning(log_detail)
            case logging.CRITICAL:
                logger.critical(log_detail)
            case logging.DEBUG:
                logger.debug(log_detail)
            case logging.ERROR:
                logger.error(log_detail)

        super().__init__(detail)


class ValidationFailure(LabException):
    exit_code = EXIT_VALIDATION


class NumericalFailure(LabException):
    exit_code = EXIT_NUMERICAL


class RegimeViolation(ValidationFailure):
    def __init__(self, condition: str):
        self.condition = condition
        super().__init__(
            detail=f'Parameter regime violated - condition {condition} fails', log_level=logging.WARNING
        )


class UnsupportedCombination(ValidationFailure):
    def __init__(self, detail: str = 'Gaussian degenerate family requires the energy conservation set'):
        super().__init__(detail=detail, log_level=logging.WARNING)


class InvalidSpec(ValidationFailure):
    def __init__(self, detail: str = 'Invalid specification', stacktrace=None):
        super().__init__(detail=detail, stacktrace=stacktrace, log_level=logging.WARNING)


class ParseError(ValidationFailure):
    def __init__(self, line: int, detail: str = 'malformed line'):
        self.line = line
        super().__init__(detail=f'Config parse error at line {line}: {detail}', log_level=logging.WARNING)


class UnknownKey(ValidationFailure):
    def __init__(self, name: str):
        self.name = name
        super().__init__(detail=f'Unknown config key {name!r}', log_level=logging.WARNING)


class IllPrepared(ValidationFailure):
    def __init__(self, residual: float, which: str):
        self.residual = residual
        self.which = which
        super().__init__(
            detail=f'Initial data is not well prepared - {which} residual {residual:.3e}',
            log_level=logging.WARNING,
        )


class NotDivergenceFree(ValidationFailure):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(
            detail=f'Field is not divergence free - residual {residual:.3e}', log_level=logging.WARNING
        )


class SingularCalibration(NumericalFailure):
    def __init__(self, detail: str = 'Moment calibration system is rank deficient'):
        super().__init__(detail=detail, log_level=logging.ERROR)


class SingularA(NumericalFailure):
    def __init__(self, condition_number: float = float('inf'), stacktrace=None):
        self.condition_number = condition_number
        super().__init__(
            detail=f'Moment matrix A is singular - cond={condition_number:.3e}',
            stacktrace=stacktrace,
            log_level=logging.ERROR,
        )


class NonFiniteIntegrand(NumericalFailure):
    def __init__(self, detail: str = 'Integrand is NaN or infinite at a quadrature node', stacktrace=None):
        super().__init__(detail=detail, stacktrace=stacktrace, log_level=logging.ERROR)


class ReducedSystemSingular(NumericalFailure):
    def __init__(self, stacktrace=None):
        super().__init__(
            detail='Reduced implicit system is singular - assembly is inconsistent',
            stacktrace=stacktrace,
            log_level=logging.CRITICAL,
        )


class EigSolveFailure(NumericalFailure):
    def __init__(self, detail: str = 'Shift-invert eigen iteration failed', stacktrace=None):
        super().__init__(detail=detail, stacktrace=stacktrace, log_level=logging.ERROR)


class QuadratureDiverged(NumericalFailure):
    def __init__(self, difference: float, tol: float):
        self.difference = difference
        super().__init__(
            detail=f'Quadrature refinement did not converge - change {difference:.3e} > {tol:.1e}',
            log_level=logging.ERROR,
        )


class BranchAmbiguous(NumericalFailure):
    def __init__(self, detail: str = 'Hydrodynamic branches are not separated'):
        super().__init__(detail=detail, log_level=logging.WARNING)


class MomentDiverged(NumericalFailure):
    def __init__(self, integrand: str, ratio: float):
        self.integrand = integrand
        self.ratio = ratio
        super().__init__(
            detail=f'Moment {integrand} is not grid-stable - increment ratio {ratio:.3f}',
            log_level=logging.WARNING,
        )


class WeightUnderflow(NumericalFailure):
    def __init__(self, nodes: int):
        self.nodes = nodes
        super().__init__(detail=f'M table underflows on {nodes} nodes where f is nonzero', log_level=logging.ERROR)


class BoundViolation(NumericalFailure):
    def __init__(self, which: str, time: float, margin: float):
        self.which = which
        self.time = time
        self.margin = margin
        super().__init__(
            detail=f'A priori bound violated - {which} at t={time:.6g} by margin {margin:.3e}',
            log_level=logging.ERROR,
        )
