import json

import numpy as np
import pytest

from src.domain.lattice import SpectralLattice
from src.schemas.params import Conservation
from src.services.exceptions import InvalidSpec
from src.services.lab import choose_dt, default_initial, moment_columns, record_base


def test_record_base_should_divide_every_time():
    assert record_base([0.1, 0.25, 0.5]) == pytest.approx(0.05)
    assert record_base([0.5]) == pytest.approx(0.5)


@pytest.mark.parametrize('epsilon', [0.2, 0.1, 0.05, 0.025])
def test_choose_dt_should_land_on_every_record_time(epsilon):
    times = [0.1, 0.25, 0.5]

    dt = choose_dt(epsilon, 1.5, 0.1, times)

    assert dt <= 0.1 * epsilon**1.5 * (1.0 + 1e-12)
    for time in times:
        assert time / dt == pytest.approx(round(time / dt), abs=1e-9)


def test_default_initial_should_be_well_prepared():
    energy = default_initial(SpectralLattice(1, 8), Conservation.ENERGY)
    shear = default_initial(SpectralLattice(2, 8), Conservation.MASS_MOMENTUM)

    assert energy.boussinesq_residual() < 1e-15
    assert shear.divergence_residual() < 1e-14
    assert shear.u_hat.shape == (64, 3)


@pytest.mark.parametrize(
    'd, conservation', [(1, Conservation.ENERGY), (1, Conservation.MASS_MOMENTUM), (2, Conservation.MASS_MOMENTUM)]
)
def test_default_initial_with_seed_should_add_reproducible_well_prepared_modes(d, conservation):
    lattice = SpectralLattice(d, 8)

    plain = default_initial(lattice, conservation)
    seeded = default_initial(lattice, conservation, seed=0)
    again = default_initial(lattice, conservation, seed=0)
    other = default_initial(lattice, conservation, seed=1)

    assert not np.allclose(seeded.u_hat, plain.u_hat)
    assert not np.allclose(seeded.u_hat, other.u_hat)
    np.testing.assert_array_equal(seeded.u_hat, again.u_hat)
    assert seeded.divergence_residual() < 1e-13
    if conservation == Conservation.ENERGY:
        assert seeded.boussinesq_residual() < 1e-14


def test_moment_columns_should_name_the_conserved_moments(heavy_1d, heavy_stokes_2d):
    assert moment_columns(heavy_1d.params) == ['rho', 'm1', 'theta']
    assert moment_columns(heavy_stokes_2d.params) == ['rho', 'm1', 'm2']


def _manifest(tmp_path, f_norm, g_accum, g_bound=1.0):
    payload = {
        'f_norm_history': f_norm,
        'g_accum_history': g_accum,
        'diagnostics': {'g_bound': g_bound, 'violations': []},
    }
    path = tmp_path / 'manifest.json'
    path.write_text(json.dumps(payload), encoding='utf-8')
    return path


def test_check_should_accept_a_consistent_manifest(service, tmp_path):
    report = service.check(_manifest(tmp_path, [1.0, 0.9, 0.8], [0.0, 0.1, 0.2]))

    assert report.ok
    assert report.violations == []


def test_check_should_report_growth_and_bound_violations(service, tmp_path):
    report = service.check(_manifest(tmp_path, [1.0, 1.1, 0.8], [0.0, 0.5, 2.0]))

    assert not report.ok
    assert report.violations == ['run 0: f_norm increases', 'run 0: g_nu accumulated bound']


def test_check_should_reject_other_json(service, tmp_path):
    path = tmp_path / 'other.json'
    path.write_text(json.dumps({'k': np.pi}), encoding='utf-8')

    with pytest.raises(InvalidSpec):
        service.check(path)
