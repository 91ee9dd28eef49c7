import pytest

from src.infra.adapters.config.loader import load_config, parse_config
from src.schemas.grid import Mapping
from src.schemas.params import Conservation, Family
from src.schemas.solver import Scheme
from src.services.exceptions import InvalidSpec, ParseError, UnknownKey
from tests import HEAVY_1D


def test_parse_config_should_fill_every_section():
    text = HEAVY_1D + 'epsilon = 0.05   # per case\nscheme = crank_nicolson\nseed = 7\n'

    config = parse_config(text)

    assert config.params.family == Family.HEAVY_TAIL
    assert config.params.conservation == Conservation.ENERGY
    assert config.params.alpha == 5.5
    assert config.grid.mapping == Mapping.ALGEBRAIC
    assert config.grid.r_or_l == 2.0
    assert config.solver.epsilon == 0.05
    assert config.solver.scheme == Scheme.CRANK_NICOLSON
    assert config.seed == 7


def test_parse_config_should_skip_comments_and_blank_lines():
    config = parse_config('# a heavy model\n\nfamily = classical\n# d = 2\n')

    assert config.params.family == Family.CLASSICAL
    assert config.params.d == 1


def test_parse_config_with_unknown_key_should_fail():
    with pytest.raises(UnknownKey) as error:
        parse_config('family = classical\ncolour = blue\n')

    assert error.value.name == 'colour'


def test_parse_config_with_bad_value_should_name_the_line():
    with pytest.raises(ParseError) as error:
        parse_config('family = heavy_tail\nalpha = 5.5\n\nd = three\n')

    assert error.value.line == 4


def test_parse_config_with_missing_value_should_name_the_line():
    with pytest.raises(ParseError) as error:
        parse_config('family = classical\nepsilon =\n')

    assert error.value.line == 2


def test_parse_config_without_family_should_fail():
    with pytest.raises(InvalidSpec):
        parse_config('alpha = 5.5\n')


def test_load_config_should_read_files(tmp_path):
    path = tmp_path / 'lab.cfg'
    path.write_text('family = gaussian\nbeta = 3.5\n', encoding='utf-8')

    config = load_config(path)

    assert config.params.family == Family.GAUSSIAN
    assert config.params.beta == 3.5


def test_load_config_with_missing_file_should_fail(tmp_path):
    with pytest.raises(InvalidSpec):
        load_config(tmp_path / 'missing.cfg')
