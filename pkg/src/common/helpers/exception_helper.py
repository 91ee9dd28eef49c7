import sys
import traceback
from types import TracebackType

from src.constants import EXIT_NUMERICAL

ExcInfo = tuple[type[BaseException], BaseException, TracebackType]
OptExcInfo = ExcInfo | tuple[None, None, None]


class ExceptionHelper:
    @staticmethod
    def get_exc_info() -> OptExcInfo:
        error_type, error_value, trace = sys.exc_info()
        return error_type, error_value, trace

    @staticmethod
    def format_exception(exc_info: ExcInfo) -> list[str]:
        error_type, error_value, trace = exc_info
        return traceback.format_exception(error_type, error_value, trace)

    @staticmethod
    def last_frame(exc_info: ExcInfo) -> str:
        """Innermost 'file:line in function' of a traceback, short enough for a log line"""
        _, _, trace = exc_info
        frames = traceback.extract_tb(trace)
        if not frames:
            return ''
        frame = frames[-1]
        return f'{frame.filename}:{frame.lineno} in {frame.name}'

    @staticmethod
    def exit_code(exc: BaseException) -> int:
        return getattr(exc, 'exit_code', EXIT_NUMERICAL)

    @staticmethod
    def describe(exc: BaseException) -> str:
        detail = getattr(exc, 'detail', None) or str(exc)
        return f'{type(exc).__name__}: {detail}'
