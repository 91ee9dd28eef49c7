import pytest

from src.jobs.job_convergence_study import run_convergence_study
from src.schemas.plan import Experiment, ExperimentPlan
from src.services.exceptions import UnsupportedCombination
from src.services.lab import ServiceLab
from tests import CLASSICAL_1D, HEAVY_1D, write_config


def test_stokes_limit_on_an_energy_model_should_fail(tmp_path):
    plan = ExperimentPlan(
        base_config=write_config(tmp_path, HEAVY_1D), experiment=Experiment.STOKES_LIMIT, output_dir=tmp_path
    )

    with pytest.raises(UnsupportedCombination):
        run_convergence_study(plan)


def test_symbol_experiment_should_delegate_to_the_sweep(tmp_path):
    plan = ExperimentPlan(
        base_config=write_config(tmp_path, CLASSICAL_1D), experiment=Experiment.SYMBOL, output_dir=tmp_path
    )

    report = run_convergence_study(plan)

    assert report.gamma_fit == pytest.approx(2.0, abs=0.05)
    assert (tmp_path / 'symbol.json').exists()


@pytest.mark.parametrize('plan_seed, expected', [(0, 0), (None, 5)])
def test_plan_seed_should_override_the_config_seed_including_zero(tmp_path, mocker, plan_seed, expected):
    # arrange
    symbol = mocker.patch.object(ServiceLab, 'symbol')
    plan = ExperimentPlan(
        base_config=write_config(tmp_path, CLASSICAL_1D, seed=5),
        experiment=Experiment.SYMBOL,
        output_dir=tmp_path,
        seed=plan_seed,
    )

    # act
    run_convergence_study(plan)

    # assert
    assert symbol.call_args.args[0].seed == expected


@pytest.mark.slow
def test_fourier_limit_sweep_should_write_cases_and_pass_check(tmp_path):
    # arrange
    plan = ExperimentPlan(
        base_config=write_config(tmp_path, HEAVY_1D),
        experiment=Experiment.FOURIER_LIMIT,
        eps_list=(0.2, 0.1),
        record_times=(0.1,),
        output_dir=tmp_path,
        n_modes=8,
    )

    # act
    report = run_convergence_study(plan)

    # assert
    assert [case.epsilon for case in report.cases] == [0.2, 0.1]
    assert all(case.max_error >= 0.0 for case in report.cases)
    assert report.order is not None
    assert report.boussinesq_constant is not None
    assert isinstance(report.boussinesq_stable, bool)
    assert report.incompressibility_constant is not None
    assert (tmp_path / 'convergence.csv').exists()
    assert (tmp_path / 'case_eps0.1.csv').exists()
    assert ServiceLab(output_dir=tmp_path).check(tmp_path / 'convergence.json').ok
