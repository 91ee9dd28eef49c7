from src.common.helpers.exception_helper import ExceptionHelper  # noqa F401
