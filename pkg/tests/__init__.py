from pathlib import Path

from src.infra.adapters.config.loader import parse_config
from src.infra.adapters.logging.settings import set_up_logger
from src.schemas.config import LabConfig

set_up_logger()

CONFIG_DIR = Path(__file__).resolve().parents[1] / 'configs'

HEAVY_1D = """
family = heavy_tail
conservation = energy
d = 1
alpha = 5.5
beta = 0
mapping = algebraic
R_or_L = 2
n_per_axis = 64
"""

HEAVY_STOKES_2D = """
family = heavy_tail
conservation = mass_momentum
d = 2
alpha = 3.5
beta = 0
mapping = algebraic
R_or_L = 2
n_per_axis = 24
"""

GAUSSIAN_1D = """
family = gaussian
conservation = energy
d = 1
beta = 3.5
mapping = truncated
R_or_L = 8
n_per_axis = 64
"""

CLASSICAL_1D = """
family = classical
conservation = energy
d = 1
n_per_axis = 64
"""

CLASSICAL_2D = """
family = classical
conservation = energy
d = 2
n_per_axis = 32
"""


def make_config(text: str, **solver) -> LabConfig:
    """config from KEY=VALUE text, with solver keys appended"""
    extra = ''.join(f'{key} = {value}\n' for key, value in solver.items())
    return parse_config(text + extra)


def write_config(directory: Path, text: str, name: str = 'lab.cfg', **solver) -> Path:
    path = Path(directory) / name
    path.write_text(text + ''.join(f'{key} = {value}\n' for key, value in solver.items()), encoding='utf-8')
    return path
