"""Structured rectangular meshes and the collocated nodal DG basis.

Elements are uniform intervals (1D) or axis-aligned squares/rectangles
(2D).  The local basis is the Lagrange basis on the k Gauss-Legendre
points per axis, used simultaneously as interpolation nodes and
quadrature; products of two basis functions are degree 2k-2 and hence
integrated exactly, which makes every mass matrix diagonal.

Field layout conventions (plain ndarrays, no wrapper classes):

* 1D scalar field: shape (nx*k,), index = cell*k + node.
* 2D scalar field: shape (ny*k, nx*k), indices [cell_y*k+node_y,
  cell_x*k+node_x].
* angular field: one leading ordinate axis in front of the above.
"""

import numpy as np

from .errors import ConfigurationError, InvalidParameterError


class NodalBasis:
    """Lagrange basis at the k Gauss-Legendre points of [-1, 1].

    Attributes
    ----------
    nodes, weights : (k,) reference quadrature points/weights
    diff : (k, k) nodal differentiation matrix, diff[p, q] = l_q'(xi_p)
    kint : (k, k) weak-derivative integrals, kint[q, r] = int l_q' l_r
    e_left, e_right : (k,) traces l_q(-1), l_q(+1)
    """

    def __init__(self, k):
        k = int(k)
        if not 2 <= k <= 4:
            raise InvalidParameterError("points-per-axis k must be 2, 3 or 4")
        self.k = k
        self.nodes, self.weights = np.polynomial.legendre.leggauss(k)
        self.bary = _barycentric_weights(self.nodes)
        self.diff = _differentiation_matrix(self.nodes, self.bary)
        # int l_q' l_r dxi is exact under the collocation rule (degree 2k-3)
        self.kint = (self.diff * self.weights[:, None]).T.copy()
        self.e_left = self.eval_at(np.array([-1.0]))[0]
        self.e_right = self.eval_at(np.array([1.0]))[0]

    @property
    def degree(self):
        return self.k - 1

    def eval_at(self, points):
        """Lagrange cardinal values at reference points, shape (P, k)."""
        points = np.asarray(points, dtype=float)
        out = np.zeros((points.size, self.k))
        for p, x in enumerate(points.ravel()):
            hit = np.isclose(x, self.nodes, rtol=0.0, atol=1e-14)
            if hit.any():
                out[p, np.argmax(hit)] = 1.0
                continue
            terms = self.bary / (x - self.nodes)
            out[p] = terms / terms.sum()
        return out


def _barycentric_weights(nodes):
    k = len(nodes)
    w = np.ones(k)
    for q in range(k):
        for r in range(k):
            if r != q:
                w[q] /= nodes[q] - nodes[r]
    return w


def _differentiation_matrix(nodes, bary):
    k = len(nodes)
    d = np.zeros((k, k))
    for p in range(k):
        for q in range(k):
            if p != q:
                d[p, q] = (bary[q] / bary[p]) / (nodes[p] - nodes[q])
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


class StructuredMesh:
    """Uniform tensor-product mesh on an interval or a rectangle.

    Parameters
    ----------
    extents : ((x0, x1),) or ((x0, x1), (y0, y1))
    cells : (nx,) or (nx, ny)
    """

    def __init__(self, extents, cells):
        extents = tuple((float(a), float(b)) for a, b in extents)
        cells = tuple(int(n) for n in np.atleast_1d(cells))
        if len(extents) not in (1, 2) or len(cells) != len(extents):
            raise InvalidParameterError("extents/cells must describe 1 or 2 axes")
        for (a, b), n in zip(extents, cells):
            if n < 1:
                raise InvalidParameterError("cell counts must be >= 1")
            if not b > a:
                raise InvalidParameterError("extent upper bound must exceed lower")
        self.extents = extents
        self.cells = cells

    @property
    def dimension(self):
        return len(self.cells)

    def spacing(self, axis):
        a, b = self.extents[axis]
        return (b - a) / self.cells[axis]

    @property
    def h(self):
        """Largest edge length over all axes."""
        return max(self.spacing(d) for d in range(self.dimension))

    def axis_nodes(self, axis, basis):
        """Physical node coordinates along one axis, shape (n*k,)."""
        a, _ = self.extents[axis]
        h = self.spacing(axis)
        centers = a + h * (np.arange(self.cells[axis]) + 0.5)
        return (centers[:, None] + 0.5 * h * basis.nodes[None, :]).ravel()

    def node_shape(self, basis):
        if self.dimension == 1:
            return (self.cells[0] * basis.k,)
        return (self.cells[1] * basis.k, self.cells[0] * basis.k)

    def cell_centers(self, axis):
        a, _ = self.extents[axis]
        h = self.spacing(axis)
        return a + h * (np.arange(self.cells[axis]) + 0.5)

    def domain_measure(self):
        out = 1.0
        for a, b in self.extents:
            out *= b - a
        return out


def node_coords(mesh, basis):
    """Coordinate arrays matching the field layout.

    Returns x of shape (nx*k,) in 1D, or (x, y) both of shape
    (ny*k, nx*k) in 2D.
    """
    x = mesh.axis_nodes(0, basis)
    if mesh.dimension == 1:
        return x
    y = mesh.axis_nodes(1, basis)
    return np.broadcast_to(x, (y.size, x.size)).copy(), \
        np.broadcast_to(y[:, None], (y.size, x.size)).copy()


def quad_weights(mesh, basis):
    """Nodal integration weights matching the field layout."""
    wx = np.tile(0.5 * mesh.spacing(0) * basis.weights, mesh.cells[0])
    if mesh.dimension == 1:
        return wx
    wy = np.tile(0.5 * mesh.spacing(1) * basis.weights, mesh.cells[1])
    return wy[:, None] * wx[None, :]


def integrate(field, mesh, basis):
    return float(np.sum(quad_weights(mesh, basis) * field))


def norm_l2(field, mesh, basis):
    return float(np.sqrt(np.sum(quad_weights(mesh, basis) * field**2)))


def project(f, mesh, basis):
    """Nodal interpolation of a pointwise function onto the DG space."""
    if mesh.dimension == 1:
        return np.asarray(f(mesh.axis_nodes(0, basis)), dtype=float)
    x, y = node_coords(mesh, basis)
    return np.asarray(f(x, y), dtype=float)


def evaluate(field, mesh, basis, points):
    """Evaluate a DG field at arbitrary physical points.

    ``points`` is an (P,) array in 1D or (P, 2) in 2D.  Points outside
    the domain are clamped to the boundary cell.
    """
    points = np.asarray(points, dtype=float)
    if mesh.dimension == 1:
        pts = np.atleast_1d(points)
        vals = np.empty(pts.shape)
        for p, xp in enumerate(pts):
            cell, xi = _locate(mesh, 0, xp)
            vals[p] = basis.eval_at(np.array([xi]))[0] @ field[
                cell * basis.k:(cell + 1) * basis.k]
        return vals if points.ndim else vals[0]
    pts = np.atleast_2d(points)
    vals = np.empty(pts.shape[0])
    for p, (xp, yp) in enumerate(pts):
        cx, xix = _locate(mesh, 0, xp)
        cy, xiy = _locate(mesh, 1, yp)
        ex = basis.eval_at(np.array([xix]))[0]
        ey = basis.eval_at(np.array([xiy]))[0]
        block = field[cy * basis.k:(cy + 1) * basis.k,
                      cx * basis.k:(cx + 1) * basis.k]
        vals[p] = ey @ block @ ex
    return vals


def _locate(mesh, axis, coord):
    a, _ = mesh.extents[axis]
    h = mesh.spacing(axis)
    cell = int(np.clip(np.floor((coord - a) / h), 0, mesh.cells[axis] - 1))
    xi = 2.0 * (coord - (a + (cell + 0.5) * h)) / h
    return cell, float(np.clip(xi, -1.0, 1.0))


def trace_values(field, mesh, basis, edge, boundary=None):
    """One-sided limits (u_minus, u_plus) at an edge.

    ``edge`` is an integer edge index in 1D (0..n), or a pair
    (axis, index) in 2D where the returned traces are arrays over the
    edge's transverse nodes.  The minus side is the lower-coordinate
    element.  Boundary edges need ``boundary='periodic'``; other rules
    resolve their ghosts in the operator layer.
    """
    k = basis.k
    if mesh.dimension == 1:
        axis, idx = 0, int(edge)
    else:
        axis, idx = int(edge[0]), int(edge[1])
    n = mesh.cells[axis]
    if not 0 <= idx <= n:
        raise InvalidParameterError("edge index out of range")
    interior = 0 < idx < n
    if not interior and boundary != "periodic":
        raise ConfigurationError(
            "boundary edge has no boundary rule attached")

    def cell_trace(cell, side):
        e = basis.e_right if side == "right" else basis.e_left
        if mesh.dimension == 1:
            return float(e @ field[cell * k:(cell + 1) * k])
        if axis == 0:
            return field[:, cell * k:(cell + 1) * k] @ e
        return e @ field[cell * k:(cell + 1) * k, :]

    left_cell = (idx - 1) % n
    right_cell = idx % n
    u_minus = cell_trace(left_cell, "right")
    u_plus = cell_trace(right_cell, "left")
    return u_minus, u_plus


def jump(u_minus, u_plus):
    """[u] with the fixed normal chosen as the minus side's outward one."""
    return u_plus - u_minus


def average(u_minus, u_plus):
    return 0.5 * (u_plus + u_minus)
