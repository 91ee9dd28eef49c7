import pytest

from src.infra.adapters.config.loader import load_config
from src.services.lab import ModelContext, ServiceLab
from tests import CLASSICAL_1D, CLASSICAL_2D, CONFIG_DIR, GAUSSIAN_1D, HEAVY_1D, HEAVY_STOKES_2D, make_config


@pytest.fixture()
def os_enviroments_log_mock():
    return {
        'LOG_LEVEL': 'INFO',
        'LOG_FORMAT': '{level} | {message}',
    }


@pytest.fixture()
def os_enviroments_solver_mock():
    return {
        'DT_FACTOR': '0.05',
        'T_FINAL': '1.5',
        'BOUND_SLACK': '1e-6',
        'COND_LIMIT': '1e10',
        'EIG_DENSE_LIMIT': '128',
        'CHI_NODES': '32',
        'SINGULAR_TOL': '1e-5',
    }


@pytest.fixture()
def os_enviroments_output_mock():
    return {
        'OUTPUT_DIR': '/tmp/lab-results',
        'JSON_INDENT': '4',
        'WORKERS': '3',
    }


@pytest.fixture()
def service(tmp_path) -> ServiceLab:
    return ServiceLab(output_dir=tmp_path)


def _build(text: str, **solver) -> ModelContext:
    return ServiceLab().build(make_config(text, **solver))


@pytest.fixture(scope='session')
def heavy_1d() -> ModelContext:
    return _build(HEAVY_1D, n_modes=8)


@pytest.fixture(scope='session')
def heavy_stokes_2d() -> ModelContext:
    return _build(HEAVY_STOKES_2D, n_modes=4)


@pytest.fixture(scope='session')
def gaussian_1d() -> ModelContext:
    return _build(GAUSSIAN_1D, n_modes=8)


@pytest.fixture(scope='session')
def classical_1d() -> ModelContext:
    return _build(CLASSICAL_1D, n_modes=8)


@pytest.fixture(scope='session')
def classical_2d() -> ModelContext:
    return _build(CLASSICAL_2D, n_modes=4)


@pytest.fixture(scope='session')
def heavy_1d_shipped() -> ModelContext:
    return ServiceLab().build(load_config(CONFIG_DIR / 'heavy_tail_fourier_1d.cfg'))


@pytest.fixture(scope='session')
def gaussian_1d_shipped() -> ModelContext:
    return ServiceLab().build(load_config(CONFIG_DIR / 'gaussian_degenerate_1d.cfg'))
