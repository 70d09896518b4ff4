import numpy as np
import pytest

from graydg.errors import ConfigurationError, InvalidParameterError
from graydg.mesh import NodalBasis, StructuredMesh, average, evaluate, \
    integrate, jump, node_coords, project, quad_weights, trace_values


@pytest.mark.parametrize("k", [2, 3, 4])
def test_lagrange_cardinality(k):
    basis = NodalBasis(k)
    vals = basis.eval_at(basis.nodes)
    assert np.allclose(vals, np.eye(k), atol=1e-14)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_reference_quadrature_exactness(k):
    # k-point Gauss integrates monomials up to degree 2k-1 exactly
    basis = NodalBasis(k)
    for deg in range(2 * k):
        exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
        assert np.sum(basis.weights * basis.nodes**deg) == \
            pytest.approx(exact, abs=1e-14)


def test_basis_rejects_out_of_range_k():
    for bad in (1, 5):
        with pytest.raises(InvalidParameterError):
            NodalBasis(bad)


def test_mass_matrix_diagonal_positive():
    basis = NodalBasis(3)
    # collocation: int l_i l_j = w_j delta_ij exactly (degree 2k-2)
    pts, wts = np.polynomial.legendre.leggauss(6)
    vals = basis.eval_at(pts)
    mass = (vals * wts[:, None]).T @ vals
    assert np.allclose(mass, np.diag(basis.weights), atol=1e-14)
    assert (np.diag(mass) > 0).all()


def test_project_constant():
    mesh = StructuredMesh(((0.0, 1.0),), (7,))
    basis = NodalBasis(3)
    f = project(lambda x: np.ones_like(x), mesh, basis)
    assert np.allclose(f, 1.0)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_project_reproduces_local_polynomials(k):
    mesh = StructuredMesh(((-1.0, 3.0),), (5,))
    basis = NodalBasis(k)

    def poly(x):
        return sum((0.3 + j) * x**j for j in range(k))

    f = project(poly, mesh, basis)
    pts = np.linspace(-1.0, 3.0, 41)[1:-1]
    assert np.allclose(evaluate(f, mesh, basis, pts), poly(pts), atol=1e-13)


def test_projection_vs_interpolation_gap_decays():
    """L2 gap between nodal interpolation and true L2 projection.

    The oracle is a high-resolution quadrature of the projection
    integrals; Gauss-point interpolation is superclose, so the gap must
    shrink at least cubically for k=3.
    """
    k = 3
    basis = NodalBasis(k)
    pts, wts = np.polynomial.legendre.leggauss(12)
    vals = basis.eval_at(pts)
    gaps = []
    for n in (10, 20, 40):
        mesh = StructuredMesh(((0.0, 2 * np.pi),), (n,))
        h = mesh.spacing(0)
        centers = mesh.cell_centers(0)
        gap2 = 0.0
        for i, xc in enumerate(centers):
            xq = xc + 0.5 * h * pts
            # exact L2 projection coefficients on the Lagrange basis
            coeffs = np.linalg.solve(
                np.diag(basis.weights),
                vals.T @ (wts * np.sin(xq)))
            interp = np.sin(xc + 0.5 * h * basis.nodes)
            diff = vals @ (coeffs - interp)
            gap2 += 0.5 * h * np.sum(wts * diff**2)
        gaps.append(np.sqrt(gap2))
    orders = np.log2(np.array(gaps[:-1]) / np.array(gaps[1:]))
    assert (orders > 2.7).all()


def test_quad_weights_integrate_domain():
    mesh = StructuredMesh(((0.0, 3.0), (-1.0, 1.0)), (6, 4))
    basis = NodalBasis(2)
    assert integrate(np.ones(mesh.node_shape(basis)), mesh, basis) == \
        pytest.approx(6.0, rel=1e-14)


def test_node_coords_match_layout():
    mesh = StructuredMesh(((0.0, 2.0), (0.0, 1.0)), (4, 3))
    basis = NodalBasis(3)
    x, y = node_coords(mesh, basis)
    assert x.shape == mesh.node_shape(basis) == (9, 12)
    assert np.allclose(x[0], x[-1])
    assert np.allclose(y[:, 0], y[:, -1])


def test_trace_continuous_field_has_zero_jump():
    mesh = StructuredMesh(((0.0, 2 * np.pi),), (12,))
    basis = NodalBasis(3)
    # globally linear-in-sin data projected nodally is continuous only
    # in the limit; use an exactly continuous piecewise field instead
    f = project(np.cos, mesh, basis)
    for edge in range(1, 12):
        um, up = trace_values(f, mesh, basis, edge)
        # cos is smooth: one-sided limits agree to interpolation accuracy
        assert abs(jump(um, up)) < 5e-4
    flin = project(lambda x: 2.0 * x + 1.0, mesh, basis)
    for edge in range(1, 12):
        um, up = trace_values(flin, mesh, basis, edge)
        assert abs(jump(um, up)) < 1e-13


def test_trace_piecewise_constant_jump_and_average():
    mesh = StructuredMesh(((0.0, 2.0),), (2,))
    basis = NodalBasis(2)
    f = np.array([1.0, 1.0, 2.0, 2.0])
    um, up = trace_values(f, mesh, basis, 1)
    assert jump(um, up) == pytest.approx(1.0, abs=1e-14)
    assert average(um, up) == pytest.approx(1.5, abs=1e-14)


def test_trace_periodic_wrap():
    mesh = StructuredMesh(((0.0, 1.0),), (4,))
    basis = NodalBasis(2)
    f = np.arange(8.0)
    um, up = trace_values(f, mesh, basis, 0, boundary="periodic")
    um2, up2 = trace_values(f, mesh, basis, 4, boundary="periodic")
    assert um == pytest.approx(um2)
    assert up == pytest.approx(up2)


def test_trace_boundary_needs_rule():
    mesh = StructuredMesh(((0.0, 1.0),), (4,))
    basis = NodalBasis(2)
    with pytest.raises(ConfigurationError):
        trace_values(np.zeros(8), mesh, basis, 0)


def test_mesh_h_is_max_spacing():
    mesh = StructuredMesh(((0.0, 7.0), (-2.0, 2.0)), (56, 32))
    assert mesh.h == pytest.approx(0.125)
    assert mesh.spacing(0) == pytest.approx(0.125)
    assert mesh.spacing(1) == pytest.approx(0.125)


def test_mesh_validation():
    with pytest.raises(InvalidParameterError):
        StructuredMesh(((1.0, 0.0),), (4,))
    with pytest.raises(InvalidParameterError):
        StructuredMesh(((0.0, 1.0),), (0,))
