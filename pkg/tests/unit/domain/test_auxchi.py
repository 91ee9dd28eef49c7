import numpy as np
import pytest

from src.domain.auxchi import (
    AuxTestFunction,
    boussinesq_integrand_check,
    chi_multipliers,
    compare_to_fractional,
    eval_chi,
    frac_limit,
    frac_limit_gauss,
    frac_limit_heavy,
    frac_limit_stokes,
    limit_symbol,
    polar_grid,
)
from src.domain.lattice import SpectralLattice
from src.domain.params import eval_equilibrium
from src.services.exceptions import InvalidSpec

EPS_SWEEP = (0.2, 0.1, 0.05, 0.025)


def _limit_errors(operation, phi, params, lattice) -> np.ndarray:
    """relative L2 distance to -kappa (-Delta)^{gamma/2} phi, kappa fitted per eps"""
    return np.array(
        [
            compare_to_fractional(operation(phi, eps, params, lattice), phi, params.gamma, lattice).l2_error
            for eps in EPS_SWEEP
        ]
    )


def test_parse_should_read_positional_and_explicit_wavevectors():
    positional = AuxTestFunction.parse('fourier: 1, 0.5')
    explicit = AuxTestFunction.parse('fourier: 2@0:1, 1@1:1', d=2)

    np.testing.assert_array_equal(positional.wavevectors, [[1.0], [2.0]])
    np.testing.assert_array_equal(positional.coeffs, [1.0, 0.5])
    np.testing.assert_array_equal(explicit.wavevectors, [[0.0, 1.0], [1.0, 1.0]])
    assert explicit.bandwidth == pytest.approx(np.sqrt(2.0))


@pytest.mark.parametrize('text', ['cosine: 1, 2', 'fourier:', 'fourier: 1@1', 'fourier: one'])
def test_parse_with_bad_text_should_fail(text):
    with pytest.raises(InvalidSpec):
        AuxTestFunction.parse(text, d=2)


def test_test_function_derivatives_should_match_the_cosine_series():
    phi = AuxTestFunction.cosine([1.0, 0.5])
    x = np.linspace(0.0, 2.0 * np.pi, 7)[:, None]

    np.testing.assert_allclose(phi(x), np.cos(x[:, 0]) + 0.5 * np.cos(2.0 * x[:, 0]), atol=1e-14)
    np.testing.assert_allclose(phi.gradient(x)[:, 0], -np.sin(x[:, 0]) - np.sin(2.0 * x[:, 0]), atol=1e-14)
    np.testing.assert_allclose(phi.hessian(x)[:, 0, 0], -np.cos(x[:, 0]) - 2.0 * np.cos(2.0 * x[:, 0]), atol=1e-14)
    assert phi.hessian_bound == pytest.approx(3.0)


def test_chi_multipliers_laguerre_should_match_the_resolvent():
    phi = AuxTestFunction.cosine([1.0, 0.5])
    v = np.linspace(-3.0, 3.0, 13)[:, None]
    nu = np.ones(13)

    laguerre = chi_multipliers(phi, 0.1, nu, v)
    resolvent = chi_multipliers(phi, 0.1, nu, v, method='resolvent')

    np.testing.assert_allclose(laguerre, resolvent, atol=1e-9)


def test_chi_multipliers_with_unknown_method_should_fail():
    with pytest.raises(InvalidSpec):
        chi_multipliers(AuxTestFunction.cosine([1.0]), 0.1, np.ones(1), np.ones((1, 1)), method='euler')


def test_eval_chi_should_agree_for_callables_and_fourier_terms(heavy_1d):
    phi = AuxTestFunction.cosine([1.0])
    v = np.array([[-1.0], [0.5], [2.0]])
    x = np.array([[0.0], [1.0]])

    fourier = eval_chi(phi, 0.1, heavy_1d.params, v, x)
    plain = eval_chi(lambda points: np.cos(points[:, 0]), 0.1, heavy_1d.params, v, x)

    assert fourier.shape == (2, 3)
    np.testing.assert_allclose(plain, fourier, atol=1e-8)


def test_eval_chi_should_tend_to_the_test_function(heavy_1d):
    phi = AuxTestFunction.cosine([1.0, 0.5])
    v = np.array([[-1.0], [2.0]])
    x = np.array([[0.3], [1.7]])

    chi = eval_chi(phi, 1e-8, heavy_1d.params, v, x)

    np.testing.assert_allclose(chi, np.repeat(phi(x)[:, None], 2, axis=1), atol=1e-7)


def test_limit_symbol_heavy_should_approach_the_fractional_multiplier(heavy_1d):
    params = heavy_1d.params
    k = np.array([1.0, 2.0])
    oracle = -params.c0 * np.pi / np.sqrt(2.0) * k**1.5

    errors = [np.max(np.abs(limit_symbol(k, eps, params, 'heavy') / oracle - 1.0)) for eps in (1e-2, 2.5e-3)]

    assert errors[1] < errors[0]
    assert 0.3 < errors[1] / errors[0] < 0.7


def test_frac_limit_should_dispatch_on_the_model(heavy_1d, classical_1d):
    phi = AuxTestFunction.cosine([1.0])
    lattice = SpectralLattice(1, 8)

    np.testing.assert_allclose(
        frac_limit(phi, 0.1, heavy_1d.params, lattice), frac_limit_heavy(phi, 0.1, heavy_1d.params, lattice)
    )
    with pytest.raises(InvalidSpec):
        frac_limit(phi, 0.1, classical_1d.params, lattice)


def test_frac_limit_heavy_with_gaussian_params_should_fail(gaussian_1d):
    with pytest.raises(InvalidSpec):
        frac_limit_heavy(AuxTestFunction.cosine([1.0]), 0.1, gaussian_1d.params, SpectralLattice(1, 8))


def test_frac_limit_heavy_should_converge_at_order_two_minus_gamma(heavy_1d):
    params = heavy_1d.params

    errors = _limit_errors(frac_limit_heavy, AuxTestFunction.cosine([1.0, 0.5]), params, SpectralLattice(1, 16))

    assert np.all(np.diff(errors) < 0.0)
    order = np.polyfit(np.log(EPS_SWEEP), np.log(errors), 1)[0]
    assert order == pytest.approx(2.0 - params.gamma, abs=0.15)


def test_frac_limit_gauss_should_converge_to_the_fractional_laplacian(gaussian_1d):
    errors = _limit_errors(
        frac_limit_gauss, AuxTestFunction.cosine([1.0, 0.5]), gaussian_1d.params, SpectralLattice(1, 16)
    )

    assert np.all(np.diff(errors) < 0.0)


def test_frac_limit_stokes_should_converge_to_the_fractional_laplacian(heavy_stokes_2d):
    phi = AuxTestFunction.parse('fourier: 1@1:0, 0.5@0:2', d=2)

    errors = _limit_errors(frac_limit_stokes, phi, heavy_stokes_2d.params, SpectralLattice(2, 8))

    assert np.all(np.diff(errors) < 0.0)


def test_frac_limit_of_a_constant_should_vanish(heavy_1d):
    phi = AuxTestFunction.parse('fourier: 1@0')
    lattice = SpectralLattice(1, 8)

    for eps in EPS_SWEEP:
        assert np.max(np.abs(frac_limit_heavy(phi, eps, heavy_1d.params, lattice))) < 1e-10


def test_compare_to_fractional_should_recover_an_exact_multiple():
    phi = AuxTestFunction.cosine([1.0, 0.5])
    lattice = SpectralLattice(1, 16)
    values = -2.5 * phi.fractional_laplacian(lattice.points, 1.5)

    comparison = compare_to_fractional(values, phi, 1.5, lattice)

    assert comparison.kappa_fit == pytest.approx(2.5, rel=1e-13)
    assert comparison.l2_error < 1e-13


def test_polar_grid_should_integrate_the_equilibrium(heavy_1d):
    grid = polar_grid(heavy_1d.params, 1.0)

    mass = grid.integrate(eval_equilibrium(heavy_1d.params, grid.nodes))

    assert mass == pytest.approx(1.0, rel=1e-3)


def test_boussinesq_check_should_bound_the_remainder(heavy_1d):
    phi = AuxTestFunction.cosine([1.0, 0.5])
    lattice = SpectralLattice(1, 8)

    u = (1.0, 0.0, 0.0)
    checks = [boussinesq_integrand_check(phi, eps, heavy_1d.params, u, 0, lattice) for eps in (0.1, 0.05)]

    for check in checks:
        assert check.i2_measured <= check.i2_bound
    assert checks[1].i2_bound / checks[0].i2_bound == pytest.approx(2.0 ** (-0.5), rel=1e-12)
    expected = phi.gradient(lattice.points)[:, 0]
    np.testing.assert_allclose(checks[0].i1_field, expected, atol=1e-3)


def test_boussinesq_check_first_order_term_should_vanish_for_boussinesq_data(heavy_1d):
    phi = AuxTestFunction.cosine([1.0])
    lattice = SpectralLattice(1, 8)

    check = boussinesq_integrand_check(phi, 0.1, heavy_1d.params, (1.0, 0.0, -1.0), 0, lattice)

    assert np.max(np.abs(check.i1_field)) < 1e-3


def test_boussinesq_check_with_bad_psi_should_fail(heavy_1d):
    with pytest.raises(InvalidSpec):
        boussinesq_integrand_check(
            AuxTestFunction.cosine([1.0]), 0.1, heavy_1d.params, (1.0, 0.0, 0.0), 2, SpectralLattice(1, 8)
        )
