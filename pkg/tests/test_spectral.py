import numpy as np
import pytest

from kahlerlag import spectral


@pytest.mark.parametrize("n", [1, 2])
def test_derivative_of_trig_polynomial(n):
    N = 32
    th = spectral.angles(N, n)
    f = np.sin(3 * th[:, 0]) * np.cos(th[:, -1])
    d0 = spectral.derivative(f, N, n, 0)
    expected = 3 * np.cos(3 * th[:, 0]) * np.cos(th[:, -1]) if n == 2 else 3 * np.cos(3 * th[:, 0]) * np.cos(th[:, 0]) - np.sin(3 * th[:, 0]) * np.sin(th[:, 0])
    assert np.max(np.abs(d0 - expected)) < 1e-12


def test_quadrature_exact_for_trig():
    N = 16
    th = spectral.angles(N, 2)
    assert spectral.quadrature(np.ones(N * N), N, 2) == pytest.approx(4 * np.pi**2)
    assert spectral.quadrature(np.cos(th[:, 0]) ** 2, N, 2) == pytest.approx(2 * np.pi**2)


def test_coefficients_and_tail():
    N = 32
    th = spectral.angles(N, 1)
    c = spectral.coefficients(np.exp(2j * th[:, 0]), N, 1)
    assert c[2] == pytest.approx(1.0)
    assert spectral.tail_mass(np.cos(th[:, 0]), N, 1) < 1e-15
    assert spectral.tail_mass(np.cos(12 * th[:, 0]), N, 1) == pytest.approx(1.0)


def test_analytic_decay():
    N = 64
    th = spectral.angles(N, 1)
    assert spectral.tail_mass(np.exp(np.cos(th[:, 0])), N, 1) < 1e-15
