"""Verification surface: norms, convergence orders, conservation
accounting, front positions and probe series.

Self-convergence compares runs on consecutive (doubled) meshes by
evaluating both solutions at the finer run's quadrature nodes; the
coarse run's DG polynomial is sampled inside each fine cell, which
avoids the superconvergence bias of sampling only at the coarse Gauss
points.  Errors are reported for both the material temperature and the
scalar flux; the row labeled N holds the (N, 2N) difference and the
order at row N is log2 of the previous row's error over its own.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .mesh import evaluate, quad_weights

FRONT_THRESHOLD = 0.1  # keV


@dataclass
class ConvergenceReport:
    variable: str
    resolutions: list            # coarse N of each compared pair
    l1: list
    linf: list
    l1_orders: list              # aligned with resolutions; None for first
    linf_orders: list

    def rows(self):
        for i, n in enumerate(self.resolutions):
            yield (n, self.l1[i], self.l1_orders[i],
                   self.linf[i], self.linf_orders[i])


def difference_norms(coarse_setup, coarse_field, fine_setup, fine_field):
    """(L1, Linf) of the coarse-fine difference at the fine nodes."""
    fm, fb = fine_setup.mesh, fine_setup.basis
    cm, cb = coarse_setup.mesh, coarse_setup.basis
    w = quad_weights(fm, fb)
    if fm.dimension == 1:
        xf = fm.axis_nodes(0, fb)
        coarse_at = _eval_1d(coarse_field, cm, cb, xf)
    else:
        coarse_at = _eval_2d(coarse_field, cm, cb, fm, fb)
    diff = np.abs(coarse_at - fine_field)
    return float(np.sum(w * diff)), float(diff.max())


def _eval_1d(field, mesh, basis, points):
    return evaluate(field, mesh, basis, points)


def _eval_2d(field, mesh, basis, fine_mesh, fine_basis):
    """Tensor-product evaluation of a coarse 2D field at fine nodes."""
    ex = _axis_eval_matrix(mesh, basis, fine_mesh, fine_basis, 0)
    ey = _axis_eval_matrix(mesh, basis, fine_mesh, fine_basis, 1)
    return ey @ field @ ex.T


def _axis_eval_matrix(mesh, basis, fine_mesh, fine_basis, axis):
    """Sparse-ish dense matrix evaluating coarse axis nodes at fine ones."""
    pts = fine_mesh.axis_nodes(axis, fine_basis)
    n = mesh.cells[axis]
    k = basis.k
    a, _ = mesh.extents[axis]
    h = mesh.spacing(axis)
    out = np.zeros((pts.size, n * k))
    cells = np.clip(((pts - a) / h).astype(int), 0, n - 1)
    xi = 2.0 * (pts - (a + (cells + 0.5) * h)) / h
    for p in range(pts.size):
        out[p, cells[p] * k:(cells[p] + 1) * k] = \
            basis.eval_at(np.array([xi[p]]))[0]
    return out


def self_convergence(runner, spec, resolutions, variable="T"):
    """Run a resolution ladder and difference consecutive pairs.

    ``runner(spec, cells) -> (setup, final_state)`` executes the
    problem; resolutions must double.  Returns a ConvergenceReport per
    requested variable name ('T' or 'rho').
    """
    res = [int(r) for r in resolutions]
    for a, b in zip(res[:-1], res[1:]):
        if b != 2 * a:
            raise InvalidParameterError("resolutions must double: %s" % res)
    runs = {}
    for n in res:
        runs[n] = runner(spec, n)
    l1, linf = [], []
    for n in res[:-1]:
        sc, stc = runs[n]
        sf, stf = runs[2 * n]
        e1, ei = difference_norms(sc, getattr(stc, variable),
                                  sf, getattr(stf, variable))
        l1.append(e1)
        linf.append(ei)
    return ConvergenceReport(
        variable=variable, resolutions=res[:-1], l1=l1, linf=linf,
        l1_orders=observed_orders(l1), linf_orders=observed_orders(linf))


def observed_orders(errors):
    """log2 ratios of consecutive errors; first entry is None."""
    out = [None]
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(float(np.log2(a / b)) if a > 0 and b > 0 else None)
    return out


def conservation_residual(state_n, state_np1, phys):
    """|E(n+1) - E(n)| of the integral of rho + c*Cvt*T."""
    return abs(phys.energy(state_np1.rho, state_np1.T)
               - phys.energy(state_n.rho, state_n.T))


def boundary_energy_flux(stage_fields, tableau, ops, boundary, phys):
    """Outward boundary flux of one step's accumulation form.

    Recomputed directly from the stage snapshots with edge quadrature
    (independently of the operator lifts), per unit time: multiply by dt
    and add to the energy difference to close the balance.
    """
    if boundary is None or boundary.all_periodic:
        return 0.0
    be = np.asarray(tableau.b_exp, dtype=float)
    bi = np.asarray(tableau.b_imp, dtype=float)
    c_sq = phys.c / np.sqrt(phys.sigma0)
    pen = phys.c * phys.omega / (3.0 * phys.sigma0)
    comps = phys.quad.components()
    w_ang = phys.quad.weights

    total = 0.0
    for ell, sf in enumerate(stage_fields):
        for side in ops.sides:
            rule = boundary.rules[side]
            if rule.periodic:
                continue
            axis = 0 if side[0] == "x" else 1
            sign = -1.0 if side.endswith("lo") else 1.0
            wb = _side_weights(ops, side)
            # moment flux: ghost-side value of <Omega_axis g>
            rho_tr = ops.boundary_trace(sf["rho"], side)
            g_tr = ops.boundary_trace_g(sf["g"], side)
            g_ghost, _ = rule.ghost(side, rho_tr, g_tr, phys)
            mom = np.tensordot(w_ang * comps[axis], g_ghost, axes=(0, 0)) \
                / phys.quad.sphere_measure
            if be[ell] != 0.0:
                total += sign * c_sq * be[ell] * float(np.sum(wb * mom))
            # penalization flux: extrapolated interior trace of q_axis
            w_pen = be[ell] - bi[ell]
            if w_pen != 0.0:
                q_tr = ops.boundary_trace(sf["q"][axis], side)
                total += sign * pen * w_pen * float(np.sum(wb * q_tr))
    return total


def _side_weights(ops, side):
    """Quadrature weights along one boundary side (1.0 in 1D)."""
    mesh, basis = ops.mesh, ops.basis
    if mesh.dimension == 1:
        return np.ones(1)
    axis = 0 if side[0] == "x" else 1
    perp = 1 - axis
    return np.tile(0.5 * mesh.spacing(perp) * basis.weights,
                   mesh.cells[perp])


def front_position(t_field, mesh, basis, threshold=FRONT_THRESHOLD):
    """Leftmost crossing of the threshold, by linear interpolation.

    Returns None when the field never crosses ("no front").
    """
    if mesh.dimension != 1:
        raise InvalidParameterError("front extraction is one-dimensional")
    x = mesh.axis_nodes(0, basis)
    t = np.asarray(t_field)
    d = t - threshold
    for i in range(len(x) - 1):
        if d[i] == 0.0:
            return float(x[i])
        if d[i] * d[i + 1] < 0.0:
            return float(x[i] - d[i] * (x[i + 1] - x[i])
                         / (t[i + 1] - t[i]))
    return None


@dataclass
class ProbeSeries:
    label: str
    position: tuple
    times: list = field(default_factory=list)
    t_r: list = field(default_factory=list)
    t_mat: list = field(default_factory=list)

    def append(self, t, t_r, t_mat):
        if self.times and t <= self.times[-1]:
            raise InvalidParameterError("probe times must strictly increase")
        self.times.append(float(t))
        self.t_r.append(float(t_r))
        self.t_mat.append(float(t_mat))


def sample_probes(probes, state, setup):
    """Evaluate (T_r, T) at probe points for the current state."""
    out = []
    for label, pos in probes:
        pt = np.asarray(pos, dtype=float)
        rho_p = evaluate(state.rho, setup.mesh, setup.basis,
                         pt if setup.mesh.dimension > 1 else pt[:1])
        t_p = evaluate(state.T, setup.mesh, setup.basis,
                       pt if setup.mesh.dimension > 1 else pt[:1])
        t_r = setup.phys.radiative_temperature(np.asarray(rho_p))
        out.append((label, float(np.atleast_1d(t_r)[0]),
                    float(np.atleast_1d(t_p)[0])))
    return out


def format_convergence_table(reports, title=""):
    """Aligned text table in the reference layout, one block per report."""
    lines = []
    if title:
        lines.append(title)
    for rep in reports:
        lines.append("variable: %s" % rep.variable)
        lines.append("  %6s  %12s  %7s  %12s  %7s"
                     % ("N", "L1 error", "order", "Linf error", "order"))
        for n, e1, o1, ei, oi in rep.rows():
            lines.append("  %6d  %12.3e  %7s  %12.3e  %7s"
                         % (n, e1,
                            "--" if o1 is None else "%.2f" % o1,
                            ei,
                            "--" if oi is None else "%.2f" % oi))
    return "\n".join(lines) + "\n"
