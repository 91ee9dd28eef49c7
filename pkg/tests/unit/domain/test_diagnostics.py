import dataclasses

import numpy as np
import pytest

from src.domain.diagnostics import (
    NormWeight,
    constants_stable,
    leray_decompose,
    micro_macro,
    scaled_constants,
    theorem_residuals,
    weighted_norm,
)
from src.domain.kinetic import evolve, lift_initial
from src.domain.lattice import SpectralLattice, VectorField
from src.schemas.solver import SolverConfig
from src.services.exceptions import BoundViolation, InvalidSpec, WeightUnderflow
from src.services.lab import default_initial


@pytest.fixture(scope='module')
def trajectory(heavy_1d):
    lattice = SpectralLattice(1, 8)
    f0 = lift_initial(default_initial(lattice, heavy_1d.params.conservation), heavy_1d.cd)
    cfg = SolverConfig(epsilon=0.2, dt=0.01, t_final=0.1, n_modes=8)
    return evolve(f0, cfg, heavy_1d.cd, record=[0.05, 0.1])


def test_micro_macro_should_split_orthogonally(heavy_1d):
    cd = heavy_1d.cd
    rng = np.random.default_rng(1)
    f = cd.m_tab * rng.normal(size=cd.n_nodes)

    split = micro_macro(f, cd)

    np.testing.assert_allclose(split.macro + split.g, f)
    np.testing.assert_allclose(split.macro_nu + split.g_nu, f)
    scale = cd.grid.integrate(np.abs(f) * np.abs(cd.phi_tab.T), axis=-1)
    assert np.all(np.abs(cd.grid.integrate(split.g * cd.phi_tab.T, axis=-1)) <= 1e-11 * scale)
    nu_g = cd.nu_tab * split.g_nu * cd.phi_tab.T
    assert np.all(np.abs(cd.grid.integrate(nu_g, axis=-1)) <= 1e-11 * scale)


def test_weighted_norm_of_a_macro_state_should_follow_the_gram_matrix(heavy_1d):
    cd = heavy_1d.cd
    u = np.array([1.0, 0.5, -0.25])
    f = u @ cd.macro_basis.T

    norm = weighted_norm(f, cd, NormWeight.MINV)

    assert norm == pytest.approx(np.sqrt(u @ cd.gram @ u), rel=1e-12)


def test_weighted_norm_on_a_lattice_should_scale_with_the_volume(heavy_1d):
    cd = heavy_1d.cd
    f = np.stack([cd.macro_basis[:, 0], np.zeros(cd.n_nodes)])

    assert weighted_norm(f, cd, NormWeight.M, SpectralLattice(1, 2)) == pytest.approx(
        np.sqrt(2.0 * np.pi) * weighted_norm(f, cd, NormWeight.M), rel=1e-14
    )


def test_weighted_norm_should_raise_on_floored_weights(heavy_1d):
    mask = np.zeros(heavy_1d.cd.n_nodes, dtype=bool)
    mask[-1] = True
    cd = dataclasses.replace(heavy_1d.cd, m_floored=mask)

    with pytest.raises(WeightUnderflow):
        weighted_norm(np.ones(cd.n_nodes), cd, NormWeight.NUMINV)
    assert weighted_norm(np.ones(cd.n_nodes), cd, NormWeight.M) > 0.0


def test_leray_decompose_should_need_two_dimensions():
    lattice = SpectralLattice(1, 8)

    with pytest.raises(InvalidSpec):
        leray_decompose(VectorField(lattice, np.zeros((8, 1))))


def test_theorem_residuals_should_hold_on_an_implicit_run(trajectory, heavy_1d):
    diagnostics = theorem_residuals(trajectory, 0.2, heavy_1d.params.gamma)

    assert diagnostics.f_norm_monotone
    assert diagnostics.violations == []
    assert diagnostics.times == pytest.approx([0.0, 0.05, 0.1])
    assert diagnostics.boussinesq_residual[0] < 1e-8
    assert max(diagnostics.g_nu_norm_accum) <= diagnostics.g_bound
    assert len(diagnostics.pressure_proxy) == 3


def test_theorem_residuals_should_raise_for_a_tiny_boussinesq_constant(trajectory, heavy_1d):
    with pytest.raises(BoundViolation) as error:
        theorem_residuals(trajectory, 0.2, heavy_1d.params.gamma, boussinesq_constant=1e-14)

    assert error.value.which == 'boussinesq'


def test_theorem_residuals_should_list_violations_when_not_raising(trajectory, heavy_1d):
    diagnostics = theorem_residuals(
        trajectory, 0.2, heavy_1d.params.gamma, boussinesq_constant=1e-14, raise_on_violation=False
    )

    assert len(diagnostics.violations) == 1
    assert diagnostics.violations[0].startswith('boussinesq at t=')


def test_scaled_constants_should_divide_the_peak_residual_by_the_eps_power():
    residuals = [[0.0, 0.4, 0.2], None, [0.0, 0.1]]

    constants = scaled_constants(residuals, [0.2, 0.1, 0.05], 0.5)

    assert constants == pytest.approx([0.4 / 0.2**0.5, 0.1 / 0.05**0.5])


@pytest.mark.parametrize(
    'constants, expected',
    [
        ([1.0, 1.1, 0.9, 1.2], True),
        ([1.0, 1.0, 1.3], False),
        ([1.0, 0.7, 1.0], False),
        ([0.0, 0.0], True),
        ([], None),
    ],
)
def test_constants_stable_should_allow_a_quarter_spread_around_the_median(constants, expected):
    assert constants_stable(constants) is expected
