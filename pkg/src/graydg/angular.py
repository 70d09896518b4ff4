"""Discrete-ordinate (S_N) angular quadratures and moment utilities.

A quadrature couples a set of direction ordinates with positive weights
whose sum equals the measure of the angular domain: 2 for the slab
(1D) reduction, 2*pi for the 2D reduction over the upper hemisphere.
Angular averages are then plain weighted means, so the average of a
constant is that constant.
"""

import numpy as np

from .errors import InvalidParameterError


class AngularQuadrature:
    """Ordinates, weights and the angular measure they integrate.

    Parameters
    ----------
    ordinates : array
        Shape (M,) of direction cosines mu in 1D, or (M, 2) of
        (zeta, eta) components in 2D.
    weights : array
        Shape (M,), strictly positive, summing to ``sphere_measure``.
    sphere_measure : float
        Measure of the angular domain (2 in 1D, 2*pi in 2D).
    """

    def __init__(self, ordinates, weights, sphere_measure):
        ordinates = np.atleast_1d(np.asarray(ordinates, dtype=float))
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1:
            raise InvalidParameterError("weights must be one-dimensional")
        if ordinates.shape[0] != weights.shape[0]:
            raise InvalidParameterError(
                "ordinate and weight counts differ: %d vs %d"
                % (ordinates.shape[0], weights.shape[0])
            )
        if np.any(weights <= 0.0):
            raise InvalidParameterError("all quadrature weights must be > 0")
        sphere_measure = float(sphere_measure)
        total = weights.sum()
        if abs(total - sphere_measure) > 1e-12 * sphere_measure:
            raise InvalidParameterError(
                "weights sum to %.17g, expected the sphere measure %.17g"
                % (total, sphere_measure)
            )
        self.ordinates = ordinates
        self.weights = weights
        self.sphere_measure = sphere_measure

    @property
    def n_ordinates(self):
        return self.weights.shape[0]

    @property
    def dimension(self):
        return 1 if self.ordinates.ndim == 1 else self.ordinates.shape[1]

    def components(self):
        """Per-axis ordinate components, as a list of (M,) arrays."""
        if self.ordinates.ndim == 1:
            return [self.ordinates]
        return [self.ordinates[:, d] for d in range(self.ordinates.shape[1])]

    def _weighted_components(self):
        """w_m * Omega_m / |Omega| per axis, cached for moment fluxes."""
        cached = getattr(self, "_wc", None)
        if cached is None:
            cached = [self.weights * c / self.sphere_measure
                      for c in self.components()]
            self._wc = cached
        return cached

    def average(self, values):
        """Angular average <.> over the leading (ordinate) axis."""
        return angular_average(values, self)

    def second_moment(self):
        """<Omega Omega^T> as a (dim, dim) matrix (scalar <mu^2> in 1D)."""
        comps = self.components()
        d = len(comps)
        m = np.empty((d, d))
        for i in range(d):
            for j in range(d):
                m[i, j] = self.average(comps[i] * comps[j])
        return m[0, 0] if d == 1 else m


def gauss_legendre(n):
    """n-point Gauss-Legendre ordinates on [-1, 1] for slab transport.

    The weights sum to 2, the measure of mu-space, and all odd moments
    vanish by node symmetry.
    """
    if n < 1:
        raise InvalidParameterError("quadrature order must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(int(n))
    return AngularQuadrature(nodes, weights, 2.0)


def legendre_chebyshev(n_l, n_c):
    """Product Legendre-Chebyshev quadrature for the 2D reduction.

    Polar cosines mu_i are the n_l Gauss-Legendre roots mapped to [0, 1];
    azimuthal angles are phi_j = (2j-1)*pi/n_c with equal weights.  The
    ordinates are the projected components
    (zeta, eta) = sqrt(1-mu^2) (cos phi, sin phi) and the weights sum to
    the hemisphere measure 2*pi.
    """
    if n_l < 1 or n_c < 1:
        raise InvalidParameterError("ordinate counts must be >= 1")
    x, wx = np.polynomial.legendre.leggauss(int(n_l))
    mu = 0.5 * (x + 1.0)          # map [-1,1] -> [0,1]
    wmu = 0.5 * wx                # weights for the unit interval
    j = np.arange(1, int(n_c) + 1)
    phi = (2.0 * j - 1.0) * np.pi / n_c
    wphi = np.full(n_c, 2.0 * np.pi / n_c)

    s = np.sqrt(1.0 - mu**2)
    zeta = np.outer(s, np.cos(phi)).ravel()
    eta = np.outer(s, np.sin(phi)).ravel()
    weights = np.outer(wmu, wphi).ravel()
    ordinates = np.column_stack([zeta, eta])
    return AngularQuadrature(ordinates, weights, 2.0 * np.pi)


def angular_average(values, quad):
    """(1/|Omega|) * sum_m w_m values_m along the leading axis."""
    values = np.asarray(values)
    if values.shape[0] != quad.n_ordinates:
        raise InvalidParameterError(
            "got %d per-ordinate values for %d ordinates"
            % (values.shape[0], quad.n_ordinates)
        )
    return np.tensordot(quad.weights, values, axes=(0, 0)) / quad.sphere_measure
