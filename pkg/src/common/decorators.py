import logging
import time
from functools import wraps

logger = logging.getLogger(__name__)


def log_elapsed(label: str = None, level: int = logging.INFO):
    """Decorator to log the wall time of a call, useful around long numerical sweeps.

    :param: label: name written in the log line, defaults to the function qualname
    :param: level: logging level of the latency line

    :return: function response
    """

    def wrapper_elapsed(func):
        name = label or func.__qualname__

        @wraps(func)
        def wrapped_func(*args, **kwargs):
            start_time = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                process_time = round(time.perf_counter() - start_time, 6)
                logger.log(level, 'LATENCY[*] %s %s s', name, process_time)

        return wrapped_func

    return wrapper_elapsed
