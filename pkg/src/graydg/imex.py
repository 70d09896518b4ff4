"""IMEX Runge-Kutta tableaus and the full micro-macro time step.

A step advances (rho, T, g, q).  Each internal stage solves the coupled
(rho, T, q) system with the Picard module, then updates the ordinate
fluctuations g by a diagonally implicit pointwise division.  After the
last stage, rho and T are re-solved from the conservative accumulation
form, which restores exact balance of the total energy
integral(rho + c*Cvt*T) lost to the finite Picard tolerance and pins
rho to the Planckian up to O(eps_tilde) in the stiff regime.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .operators import double_minmod_limit
from .picard import StageCoefficients, StageRHS, solve_quartic, solve_stage


@dataclass(frozen=True)
class ButcherTableau:
    """Double tableau of an ARS-type, globally stiffly accurate IMEX pair.

    Matrices are (s+1) x (s+1); stage 0 carries the time-level-n state.
    The explicit matrix is strictly lower triangular; the implicit one
    has a zero first row and column and a nonzero diagonal after that.
    """

    name: str
    a_exp: tuple
    a_imp: tuple
    b_exp: tuple
    b_imp: tuple

    def __post_init__(self):
        ae, ai = self.exp_matrix, self.imp_matrix
        if ae.shape != ai.shape or ae.shape[0] != ae.shape[1]:
            raise InvalidParameterError("tableau matrices must be square and "
                                        "equally sized")
        if np.any(np.triu(ae) != 0.0):
            raise InvalidParameterError("explicit matrix must be strictly "
                                        "lower triangular")
        if np.any(np.triu(ai, 1) != 0.0):
            raise InvalidParameterError("implicit matrix must be lower "
                                        "triangular")
        if np.any(ai[0, :] != 0.0) or np.any(ai[:, 0] != 0.0):
            raise InvalidParameterError("ARS structure needs a zero first "
                                        "row and column in the implicit part")
        if np.any(np.diag(ai)[1:] == 0.0):
            raise InvalidParameterError("ARS structure needs nonzero "
                                        "implicit diagonal entries")

    @property
    def exp_matrix(self):
        return np.asarray(self.a_exp, dtype=float)

    @property
    def imp_matrix(self):
        return np.asarray(self.a_imp, dtype=float)

    @property
    def stages(self):
        """s: index of the last stage (matrices are (s+1) x (s+1))."""
        return self.exp_matrix.shape[0] - 1

    @property
    def c_exp(self):
        return self.exp_matrix.sum(axis=1)

    @property
    def c_imp(self):
        return self.imp_matrix.sum(axis=1)

    def validate_gsa(self, tol=1.0e-14):
        """Globally stiffly accurate: last rows equal the weight rows."""
        ae, ai = self.exp_matrix, self.imp_matrix
        be = np.asarray(self.b_exp, dtype=float)
        bi = np.asarray(self.b_imp, dtype=float)
        ok = abs(self.c_exp[-1] - 1.0) <= tol
        ok &= abs(self.c_imp[-1] - 1.0) <= tol
        ok &= bool(np.all(np.abs(ae[-1] - be) <= tol))
        ok &= bool(np.all(np.abs(ai[-1] - bi) <= tol))
        return ok


def tableau_imex1():
    """First-order pair: forward Euler explicit, backward Euler implicit."""
    return ButcherTableau(
        name="imex1",
        a_exp=((0.0, 0.0), (1.0, 0.0)),
        a_imp=((0.0, 0.0), (0.0, 1.0)),
        b_exp=(1.0, 0.0),
        b_imp=(0.0, 1.0),
    )


def tableau_ars443():
    """The four-stage, third-order ARS(4,4,3) pair."""
    return ButcherTableau(
        name="ars443",
        a_exp=(
            (0.0, 0.0, 0.0, 0.0, 0.0),
            (1.0 / 2.0, 0.0, 0.0, 0.0, 0.0),
            (11.0 / 18.0, 1.0 / 18.0, 0.0, 0.0, 0.0),
            (5.0 / 6.0, -5.0 / 6.0, 1.0 / 2.0, 0.0, 0.0),
            (1.0 / 4.0, 7.0 / 4.0, 3.0 / 4.0, -7.0 / 4.0, 0.0),
        ),
        a_imp=(
            (0.0, 0.0, 0.0, 0.0, 0.0),
            (0.0, 1.0 / 2.0, 0.0, 0.0, 0.0),
            (0.0, 1.0 / 6.0, 1.0 / 2.0, 0.0, 0.0),
            (0.0, -1.0 / 2.0, 1.0 / 2.0, 1.0 / 2.0, 0.0),
            (0.0, 3.0 / 2.0, -3.0 / 2.0, 1.0 / 2.0, 1.0 / 2.0),
        ),
        b_exp=(1.0 / 4.0, 7.0 / 4.0, 3.0 / 4.0, -7.0 / 4.0, 0.0),
        b_imp=(0.0, 3.0 / 2.0, -3.0 / 2.0, 1.0 / 2.0, 1.0 / 2.0),
    )


TABLEAUS = {"imex1": tableau_imex1, "ars443": tableau_ars443}


@dataclass
class MicroMacroState:
    """DG coefficient fields at one time level."""

    rho: np.ndarray
    T: np.ndarray
    g: np.ndarray          # (n_ordinates,) + node shape
    q: list                # per-axis gradient fields
    t: float = 0.0

    def copy(self):
        return MicroMacroState(self.rho.copy(), self.T.copy(),
                               self.g.copy(), [a.copy() for a in self.q],
                               self.t)


@dataclass
class StepDiagnostics:
    t: float = 0.0
    dt: float = 0.0
    picard_iters: list = field(default_factory=list)
    newton_max: int = 0
    floored: int = 0
    energy_before: float = 0.0
    energy_after: float = 0.0
    stage_fields: list = None   # populated when collect=True


def _ghosts(ops, boundary, phys, rho, g):
    """Rule-resolved boundary data for one stage's fields.

    Returns (ghost_g, avg_ghost, rho_gc): per-side upwind ghost
    fluctuations, normal components of the ghost moment flux, and the
    state-independent part of the rho-hat ghost value.
    """
    if boundary is None or boundary.all_periodic:
        return None, None, None
    ghost_g, avg_ghost, rho_gc = {}, {}, {}
    weighted = phys.quad._weighted_components()
    g_traces = ops.boundary_traces_g(g)
    for side in ops.sides:
        rule = boundary.rules[side]
        if rule.periodic:
            continue
        rho_tr = ops.boundary_trace(rho, side)
        gg, gc = rule.ghost(side, rho_tr, g_traces[side], phys)
        ghost_g[side] = gg
        rho_gc[side] = gc
        axis = 0 if side[0] == "x" else 1
        avg_ghost[side] = weighted[axis] @ gg
    return ghost_g, avg_ghost, rho_gc


def _moment_flux(g, phys, node_shape):
    """Per-axis components of <Omega g>."""
    m = phys.quad.n_ordinates
    gf = g.reshape(m, -1)
    out = []
    for wc in phys.quad._weighted_components():
        out.append((wc @ gf).reshape(node_shape))
    return out


def advance_step(state, tableau, ops, phys, boundary, picard_cfg, dt,
                 limiter=False, collect=False):
    """One full DG-IMEX step; returns (new_state, StepDiagnostics).

    ``boundary`` is the problem's boundary rule set (None means fully
    periodic).  With ``limiter=True`` the double-minmod limiter is
    applied to rho and T once, after the conservative final update.
    """
    if dt <= 0.0:
        raise InvalidParameterError("dt must be positive")
    ae = tableau.exp_matrix
    ai = tableau.imp_matrix
    be = np.asarray(tableau.b_exp, dtype=float)
    bi = np.asarray(tableau.b_imp, dtype=float)
    s = tableau.stages

    c = phys.c
    et = phys.eps_tilde
    c_sq = c / np.sqrt(phys.sigma0)
    pen = c * phys.omega / (3.0 * phys.sigma0)
    cvt = phys.cvt
    shape = ops.node_shape

    coeffs = StageCoefficients(
        c=c, planck_coeff=phys.planck_coeff, cvt=cvt, eps_tilde=et,
        omega=phys.omega, sigma0=phys.sigma0, weights=phys.weights)

    diag = StepDiagnostics(t=state.t, dt=dt)
    diag.energy_before = phys.energy(state.rho, state.T)

    rho = [None] * (s + 1)
    t_f = [None] * (s + 1)
    g = [None] * (s + 1)
    q = [None] * (s + 1)
    sigt = [None] * (s + 1)
    relax = [None] * (s + 1)
    div_q = [None] * (s + 1)
    div_avg = [None] * (s + 1)
    trans = [None] * (s + 1)
    ghost_g = [None] * (s + 1)
    rho_gc = [None] * (s + 1)

    def stage_aux(j):
        """Spatial terms of stage j once its fields are known.

        The last stage's streaming and moment divergence never enter a
        later sum (the explicit weights end in zero for a strictly
        lower-triangular tableau), so they are skipped.
        """
        div_q[j] = ops.div(q[j])
        if j == s and be[s] == 0.0:
            return
        gg, ag, gc = _ghosts(ops, boundary, phys, rho[j], g[j])
        ghost_g[j] = gg
        rho_gc[j] = gc
        div_avg[j] = ops.div_avg(_moment_flux(g[j], phys, shape), ag)
        trans[j] = ops.transport(g[j], gg)

    rho[0] = state.rho
    t_f[0] = state.T
    g[0] = state.g
    q[0] = state.q
    sigt[0] = phys.sigma_tilde(state.T)
    relax[0] = sigt[0] * (state.rho - phys.planck(state.T))
    stage_aux(0)

    base = rho[0] + c * cvt * t_f[0]
    rhs2_base = et**2 * cvt * t_f[0]

    for ell in range(1, s + 1):
        rhs1 = base.copy()
        rhs2 = rhs2_base.copy()
        for j in range(ell):
            if ae[ell, j] != 0.0:
                rhs1 -= dt * c_sq * ae[ell, j] * div_avg[j]
            w_pen = ae[ell, j] - ai[ell, j]
            if w_pen != 0.0:
                rhs1 -= dt * pen * w_pen * div_q[j]
            if ai[ell, j] != 0.0:
                rhs2 += dt * ai[ell, j] * relax[j]
        rhs = StageRHS(rhs1=rhs1, rhs2=rhs2, a_diag=ai[ell, ell], dt=dt,
                       coeffs=coeffs, ghost_const=rho_gc[ell - 1])
        # seed the fixed-point loop with the freshest stage values
        sol = solve_stage(rhs, rho[ell - 1], t_f[ell - 1], phys.sigma_tilde,
                          picard_cfg, ops)
        diag.picard_iters.append(sol.picard_iters)
        diag.newton_max = max(diag.newton_max, sol.newton_max)
        diag.floored += sol.floored
        rho[ell], t_f[ell], q[ell] = sol.rho, sol.T, sol.q
        sigt[ell] = sol.sigma_tilde
        # relaxation term from the stage equation identity; the direct
        # product sigt*(rho - Phi) loses accuracy to cancellation
        relax[ell] = (et**2 * cvt * (t_f[ell] - t_f[0])
                      - (rhs2 - rhs2_base)) / (ai[ell, ell] * dt)
        if sol.clamped is not None and sol.clamped.any():
            # a floor-clamped node exchanged nothing this stage; the
            # back-solved value would compound through later stages
            relax[ell][sol.clamped] = 0.0

        # micro update: everything explicit except the own relaxation
        acc = state.g.copy()
        for j in range(ell):
            if ae[ell, j] != 0.0:
                acc -= dt * (c_sq / et) * ae[ell, j] * trans[j]
            if ai[ell, j] != 0.0:
                acc -= dt * (c / et**2) * ai[ell, j] * sigt[j][None] * g[j]
        for j in range(ell + 1):
            if ai[ell, j] != 0.0:
                acc -= dt * (c_sq / et**2) * ai[ell, j] * ops.omega_dot(q[j])
        denom = 1.0 + dt * c * ai[ell, ell] * sigt[ell] / et**2
        g[ell] = acc / denom[None]
        stage_aux(ell)

    # conservative final update for (rho, T); g keeps the last stage
    rhs_a = base.copy()
    rhs_b = rhs2_base.copy()
    for ell in range(s + 1):
        if be[ell] != 0.0:
            rhs_a -= dt * c_sq * be[ell] * div_avg[ell]
        w_pen = be[ell] - bi[ell]
        if w_pen != 0.0:
            rhs_a -= dt * pen * w_pen * div_q[ell]
        if ell < s and bi[ell] != 0.0:
            rhs_b += dt * bi[ell] * relax[ell]

    denom = sigt[s] * bi[s] * dt
    relax_coeff = et**2 * cvt / denom
    beta = c * cvt + relax_coeff
    r_total = rhs_a + rhs_b / denom
    t_new, nit, clamped = solve_quartic(beta, r_total, phys.planck_coeff,
                                        t_f[s], picard_cfg)
    diag.newton_max = max(diag.newton_max, nit)
    diag.floored += int(clamped.sum())
    # conservative recovery: integrating this relation telescopes the
    # interior fluxes, so the energy balance is exact by construction
    rho_new = rhs_a - c * cvt * t_new
    g_new = g[s]

    if limiter:
        periodic = tuple(boundary is None or boundary.axis_periodic(ax)
                         for ax in range(ops.mesh.dimension))
        rho_new = double_minmod_limit(rho_new, ops.mesh, ops.basis, periodic)
        t_new = double_minmod_limit(t_new, ops.mesh, ops.basis, periodic)

    gg, _, gc = _ghosts(ops, boundary, phys, rho_new, g_new)
    q_new = ops.grad(rho_new, gc)

    new_state = MicroMacroState(rho_new, t_new, g_new, q_new, state.t + dt)
    diag.energy_after = phys.energy(rho_new, t_new)
    if collect:
        diag.stage_fields = [
            {"rho": rho[j], "T": t_f[j], "g": g[j], "q": q[j]}
            for j in range(s + 1)]
    return new_state, diag


def initial_gradient(rho, g, ops, boundary, phys):
    """q consistent with the gradient equation at the initial state."""
    _, _, gc = _ghosts(ops, boundary, phys, rho, g)
    return ops.grad(rho, gc)
