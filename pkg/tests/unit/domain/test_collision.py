import numpy as np
import pytest

from src.domain.collision import apply_K, apply_L, assemble, dissipation, macro, moments, moments_nu, reflect
from src.services.exceptions import InvalidSpec, NonFiniteIntegrand
from src.services.lab import ServiceLab
from tests import make_config

SAMPLES = 100

HEAVY_ENERGY_2D = """
family = heavy_tail
conservation = energy
d = 2
alpha = 5.5
beta = 0
mapping = algebraic
R_or_L = 2
n_per_axis = 24
"""

HEAVY_STOKES_1D = """
family = heavy_tail
conservation = mass_momentum
d = 1
alpha = 3.5
beta = 0.2
mapping = algebraic
R_or_L = 2
n_per_axis = 64
"""

GAUSSIAN_2D = """
family = gaussian
conservation = energy
d = 2
beta = 4.5
mapping = truncated
R_or_L = 8
n_per_axis = 64
"""


@pytest.fixture(scope='module')
def extra_models():
    service = ServiceLab()
    return {
        name: service.build(make_config(text))
        for name, text in [
            ('heavy_energy_2d', HEAVY_ENERGY_2D),
            ('heavy_stokes_1d', HEAVY_STOKES_1D),
            ('gaussian_2d', GAUSSIAN_2D),
        ]
    }


@pytest.fixture(
    params=[
        'heavy_1d',
        'heavy_energy_2d',
        'heavy_stokes_1d',
        'heavy_stokes_2d',
        'gaussian_1d',
        'gaussian_2d',
        'classical_1d',
        'classical_2d',
    ]
)
def cd(request, extra_models):
    if request.param in extra_models:
        return extra_models[request.param].cd
    return request.getfixturevalue(request.param).cd


def _random_f(cd, count=3, seed=0):
    rng = np.random.default_rng(seed)
    return cd.m_tab * rng.normal(size=(count, cd.n_nodes))


def test_macro_should_be_fixed_by_K(cd):
    u = np.linspace(0.5, 1.5, cd.p)

    f = macro(u, cd)

    np.testing.assert_allclose(apply_K(f, cd), f, atol=1e-12 * np.max(np.abs(f)))
    np.testing.assert_allclose(moments_nu(f, cd), u, rtol=1e-12)
    np.testing.assert_allclose(moments(f, cd), u, rtol=1e-7)


def test_K_should_be_a_projection(cd):
    f = _random_f(cd)

    once = apply_K(f, cd)

    np.testing.assert_allclose(apply_K(once, cd), once, atol=1e-12 * np.max(np.abs(once)))


def test_L_should_conserve_the_collision_invariants(cd):
    f = _random_f(cd, count=SAMPLES)

    integrand = apply_L(f, cd)[..., None, :] * cd.phi_tab.T
    gain = cd.grid.integrate(integrand, axis=-1)
    scale = cd.grid.integrate(np.abs(integrand), axis=-1)

    assert gain.shape == (SAMPLES, cd.p)
    assert np.all(np.abs(gain) <= 1e-11 * scale)


def test_dissipation_should_be_non_positive_and_match_both_forms(cd):
    samples = _random_f(cd, count=SAMPLES, seed=1)

    for f in samples:
        lhs, rhs = dissipation(f, cd)

        assert lhs <= 0.0
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_reflect_should_be_an_involution(cd):
    f = _random_f(cd)

    np.testing.assert_array_equal(reflect(reflect(f, cd), cd), f)


def test_constant_collision_frequency_should_have_unit_continuity(heavy_1d):
    assert heavy_1d.cd.continuity_constant == pytest.approx(1.0, rel=1e-10)


def test_moments_with_nan_should_raise(heavy_1d):
    f = np.zeros(heavy_1d.cd.n_nodes)
    f[0] = np.inf

    with pytest.raises(NonFiniteIntegrand):
        moments(f, heavy_1d.cd)


def test_assemble_should_require_calibration(heavy_1d):
    raw = heavy_1d.params.copy(update={'calibrated': False})

    with pytest.raises(InvalidSpec):
        assemble(raw, heavy_1d.grid)
