import json

import pytest

from src.constants import EXIT_NUMERICAL, EXIT_SUCCESS, EXIT_VALIDATION, REPORT_MANIFEST
from src.entrypoints.cli import build_parser, float_list, main
from tests import CLASSICAL_1D, HEAVY_1D, write_config


def test_float_list_should_split_on_commas():
    assert float_list('0.2, 0.1,0.05') == (0.2, 0.1, 0.05)


def test_parser_should_require_a_config():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(['validate'])

    assert exc.value.code == EXIT_VALIDATION


def test_validate_should_exit_with_success(tmp_path, capsys):
    # arrange
    config = write_config(tmp_path, HEAVY_1D)

    # act
    code = main(['validate', '--config', str(config)])

    # assert
    assert code == EXIT_SUCCESS
    assert json.loads(capsys.readouterr().out)['gamma'] == pytest.approx(1.5)


def test_validate_with_violated_regime_should_exit_with_validation_code(tmp_path, capsys):
    config = write_config(tmp_path, HEAVY_1D.replace('alpha = 5.5', 'alpha = 4.5'))

    code = main(['validate', '--config', str(config)])

    assert code == EXIT_VALIDATION
    assert 'RegimeViolation' in capsys.readouterr().err


def test_validate_with_unparseable_config_should_exit_with_validation_code(tmp_path, capsys):
    config = write_config(tmp_path, CLASSICAL_1D + 'n_per_axis = many\n')

    code = main(['validate', '--config', str(config)])

    assert code == EXIT_VALIDATION
    assert capsys.readouterr().err


def test_validate_with_missing_config_should_exit_with_validation_code(tmp_path):
    assert main(['validate', '--config', str(tmp_path / 'absent.cfg')]) == EXIT_VALIDATION


def test_evolve_then_check_should_exit_with_success(tmp_path, capsys):
    # arrange
    config = write_config(tmp_path, HEAVY_1D, n_modes=8)
    out = tmp_path / 'run'

    # act
    evolve_code = main(
        [
            'evolve', '--config', str(config), '--out', str(out),
            '--epsilon', '0.2', '--tfinal', '0.05', '--record', '0.05',
        ]
    )
    printed = json.loads(capsys.readouterr().out)
    check_code = main(['check', str(out / REPORT_MANIFEST)])

    # assert
    assert evolve_code == EXIT_SUCCESS
    assert printed['n_steps'] > 0
    assert check_code == EXIT_SUCCESS
    assert (out / 'moments_t0.05.csv').exists()


def test_check_with_tampered_manifest_should_exit_with_numerical_code(tmp_path, capsys):
    # arrange
    config = write_config(tmp_path, HEAVY_1D, n_modes=8)
    main(
        [
            'evolve', '--config', str(config), '--out', str(tmp_path),
            '--epsilon', '0.2', '--tfinal', '0.05', '--record', '0.05',
        ]
    )
    manifest = tmp_path / REPORT_MANIFEST
    payload = json.loads(manifest.read_text(encoding='utf-8'))
    payload['f_norm_history'] = [1.0, 2.0]
    manifest.write_text(json.dumps(payload), encoding='utf-8')
    capsys.readouterr()

    # act
    code = main(['check', str(manifest)])

    # assert
    assert code == EXIT_NUMERICAL
    assert 'run 0: f_norm increases' in json.loads(capsys.readouterr().out)['violations']


def test_converge_with_increasing_eps_list_should_exit_with_validation_code(tmp_path):
    config = write_config(tmp_path, HEAVY_1D)

    code = main(['converge', '--config', str(config), '--eps-list', '0.05,0.1'])

    assert code == EXIT_VALIDATION
