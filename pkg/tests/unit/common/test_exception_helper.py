from src.common.helpers import ExceptionHelper
from src.constants import EXIT_NUMERICAL, EXIT_VALIDATION
from src.services.exceptions import QuadratureDiverged, RegimeViolation


def test_exception_helper_get_exc_info_should_succeed():
    try:
        raise Exception('Error')
    except Exception:
        error_type, error_value, _ = ExceptionHelper.get_exc_info()
        assert error_type, error_value == (Exception, Exception('Error'))


def test_exception_helper_get_exc_info_should_return_none():
    assert ExceptionHelper.get_exc_info() == (None, None, None)


def test_exception_helper_format_exception_should_succeed():
    try:
        raise Exception('Error')
    except Exception:
        exc_info = ExceptionHelper.get_exc_info()
        result = ExceptionHelper.format_exception(exc_info)
        assert result[0] == 'Traceback (most recent call last):\n'
        assert result.pop() == 'Exception: Error\n'


def test_exception_helper_last_frame_should_name_the_raising_function():
    def inner():
        raise ValueError('inner')

    try:
        inner()
    except ValueError:
        frame = ExceptionHelper.last_frame(ExceptionHelper.get_exc_info())

    assert frame.endswith('in inner')


def test_exception_helper_exit_code_should_follow_the_failure_class():
    assert ExceptionHelper.exit_code(RegimeViolation('α>5')) == EXIT_VALIDATION
    assert ExceptionHelper.exit_code(QuadratureDiverged(1.0, 1e-6)) == EXIT_NUMERICAL
    assert ExceptionHelper.exit_code(KeyError('x')) == EXIT_NUMERICAL


def test_exception_helper_describe_should_use_detail():
    assert ExceptionHelper.describe(RegimeViolation('β<1')).startswith('RegimeViolation: ')
    assert 'β<1' in ExceptionHelper.describe(RegimeViolation('β<1'))
