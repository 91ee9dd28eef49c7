import numpy as np
import pytest

from src.domain.lattice import ScalarField, SpectralLattice, VectorField


def test_lattice_should_expose_integer_wavevectors_on_the_2pi_box():
    lattice = SpectralLattice(2, 4)

    assert lattice.n_total == 16
    assert lattice.volume == pytest.approx(4.0 * np.pi**2)
    assert set(lattice.wavevectors[:, 0]) == {-2.0, -1.0, 0.0, 1.0}


def test_conjugate_index_should_map_k_to_minus_k():
    lattice = SpectralLattice(2, 6)
    k = lattice.wavevectors
    nyquist = np.any(np.abs(k) == 3.0, axis=-1)

    conjugate = k[lattice.conjugate_index]

    np.testing.assert_array_equal(conjugate[~nyquist], -k[~nyquist])


def test_scalar_field_norm_should_follow_parseval():
    lattice = SpectralLattice(1, 16)

    field = ScalarField.from_function(lattice, lambda x: np.cos(x[:, 0]) + 2.0)

    # int_0^{2pi} (cos x + 2)^2 dx = pi + 8 pi
    assert field.norm() == pytest.approx(np.sqrt(9.0 * np.pi), rel=1e-13)
    np.testing.assert_allclose(field.values(), np.cos(lattice.points[:, 0]) + 2.0, atol=1e-14)


def test_vector_field_divergence_should_vanish_for_a_stream_function():
    lattice = SpectralLattice(2, 8)

    def momentum(points):
        x, y = points[:, 0], points[:, 1]
        return np.stack([-np.sin(x) * np.cos(y), np.cos(x) * np.sin(y)], axis=-1)

    field = VectorField.from_function(lattice, momentum)

    assert field.divergence().norm() < 1e-13
    assert field.norm() == pytest.approx(np.pi * np.sqrt(2.0), rel=1e-13)
