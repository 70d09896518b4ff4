import numpy as np
import pytest

from graydg.angular import AngularQuadrature, angular_average, \
    gauss_legendre, legendre_chebyshev
from graydg.errors import InvalidParameterError


def exact_mu_moment(k):
    # int_{-1}^{1} mu^k dmu
    return 0.0 if k % 2 else 2.0 / (k + 1)


def test_gauss_two_point_closed_form():
    q = gauss_legendre(2)
    assert np.allclose(sorted(q.ordinates), [-1 / np.sqrt(3), 1 / np.sqrt(3)])
    assert np.allclose(q.weights, [1.0, 1.0])
    assert q.sphere_measure == 2.0


def test_gauss_moment_exactness_to_degree_15():
    q = gauss_legendre(8)
    for k in range(16):
        approx = np.sum(q.weights * q.ordinates**k)
        assert abs(approx - exact_mu_moment(k)) < 1e-13


def test_gauss_first_and_second_moments():
    q = gauss_legendre(8)
    assert abs(q.weights.sum() - 2.0) < 1e-14
    assert q.average(q.ordinates) == pytest.approx(0.0, abs=1e-15)
    assert q.average(q.ordinates**2) == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_gauss_rejects_zero_order():
    with pytest.raises(InvalidParameterError):
        gauss_legendre(0)


def test_legendre_chebyshev_counts_and_measure():
    q = legendre_chebyshev(8, 4)
    assert q.n_ordinates == 32
    assert q.dimension == 2
    assert abs(q.weights.sum() - 2 * np.pi) < 1e-13 * 2 * np.pi


@pytest.mark.parametrize("nl,nc", [(8, 4), (4, 8), (2, 4), (6, 6)])
def test_legendre_chebyshev_first_moments_vanish(nl, nc):
    q = legendre_chebyshev(nl, nc)
    zeta, eta = q.components()
    assert abs(q.average(zeta)) < 1e-13
    assert abs(q.average(eta)) < 1e-13


def test_legendre_chebyshev_second_moment_is_third():
    # analytic: (1/2pi) int_0^1 int_0^2pi (1-mu^2) cos^2(phi) dphi dmu = 1/3
    q = legendre_chebyshev(8, 4)
    m = q.second_moment()
    assert np.allclose(m, np.eye(2) / 3.0, atol=1e-13)


def test_legendre_chebyshev_rejects_zero_counts():
    with pytest.raises(InvalidParameterError):
        legendre_chebyshev(0, 4)
    with pytest.raises(InvalidParameterError):
        legendre_chebyshev(8, 0)


def test_angular_average_constant():
    q = gauss_legendre(8)
    assert angular_average(np.full(8, 3.25), q) == pytest.approx(3.25,
                                                                 rel=1e-15)


def test_angular_average_odd_symmetry():
    q = gauss_legendre(8)
    assert abs(angular_average(q.ordinates, q)) < 1e-15


def test_angular_average_length_mismatch():
    q = gauss_legendre(8)
    with pytest.raises(InvalidParameterError):
        angular_average(np.ones(5), q)


def test_weights_must_be_positive():
    with pytest.raises(InvalidParameterError):
        AngularQuadrature([0.5, -0.5], [1.0, -1.0], 0.0)


def test_weight_sum_must_match_measure():
    with pytest.raises(InvalidParameterError):
        AngularQuadrature([0.5, -0.5], [1.0, 1.0], 3.0)


def test_average_over_leading_axis_of_field():
    q = gauss_legendre(4)
    vals = np.outer(q.ordinates**2, np.ones(7))
    avg = angular_average(vals, q)
    assert avg.shape == (7,)
    assert np.allclose(avg, 1.0 / 3.0, atol=1e-14)
