"""Reference solver for the equilibrium-diffusion limit.

Marches the nonlinear diffusion of the Planck energy,

    d/dt (a T^4) + C_v dT/dt = div( (1/3 sigma) grad(a c T^4) ),

with the explicit physical flux at the old time level and the same
weighted linear penalization as the transport scheme treated
implicitly.  The update reuses the Picard machinery with eps_tilde = 0,
where the relaxation degenerates to rho = Phi(T) and the local solve
becomes Phi(T) + c*Cvt*T = data.

Two discretizations of the explicit flux are available:

* ``product`` applies the divergence to the nodal product
  (1/(3 sigma)) * grad(Phi); this mirrors exactly what the transport
  scheme's micro flux produces in the thick limit, and is the right
  choice for limit cross-checks on smooth data.
* ``kirchhoff`` differences the flux potential W(T) with
  grad W = (1/(3 sigma)) grad Phi; degenerate conductivities (power-law
  opacities in cold material) choke the product form at heated
  boundaries, while W keeps the wave ignition intact.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .picard import StageCoefficients, StageRHS, solve_stage


@dataclass
class DiffusionState:
    T: np.ndarray
    t: float = 0.0

    def copy(self):
        return DiffusionState(self.T.copy(), self.t)


def _phi_ghosts(ops, boundary, phys, phi_n):
    """Rho-hat ghost constants for the Planck field (eps_tilde = 0)."""
    if boundary is None or boundary.all_periodic:
        return None
    gc = {}
    for side in ops.sides:
        rule = boundary.rules[side]
        if rule.periodic:
            continue
        rho_tr = ops.boundary_trace(phi_n, side)
        g_tr = np.zeros((phys.quad.n_ordinates, rho_tr.shape[0]))
        _, gc[side] = rule.ghost(side, rho_tr, g_tr, phys, eps_tilde=0.0)
    return gc


def _kirchhoff_ghosts(ops, boundary, phys, w_n, gc_phi, phi_n):
    """Ghost constants for the flux potential W.

    The ghost temperature comes from the rule's Planck-mean ghost,
    T_gh = (rho_ghost / p)^(1/4); the boundary material's law converts
    it to W.  Returned as the constant part of lam * trace + const.
    """
    if gc_phi is None:
        return None
    gc_w = {}
    for side in ops.sides:
        rule = boundary.rules[side]
        if rule.periodic:
            continue
        lam = rule.lam(gc_phi[side].shape[0])
        phi_tr = ops.boundary_trace(phi_n, side)
        rho_ghost = gc_phi[side] + lam * phi_tr
        t_gh = np.maximum(rho_ghost / phys.planck_coeff, 0.0)**0.25
        ids = _side_region_ids(ops, phys, side)
        w_gh = np.empty_like(t_gh)
        for r, reg in enumerate(phys.material.regions):
            mask = ids == r
            if mask.any():
                w_gh[mask] = reg.law.kirchhoff(t_gh[mask], phys.planck_coeff)
        gc_w[side] = w_gh - lam * ops.boundary_trace(w_n, side)
    return gc_w


def _side_region_ids(ops, phys, side):
    ids = phys.material.node_region_ids(ops.mesh, ops.basis)
    if ops.mesh.dimension == 1:
        return ids[:1] if side == "xlo" else ids[-1:]
    if side == "xlo":
        return ids[:, 0]
    if side == "xhi":
        return ids[:, -1]
    if side == "ylo":
        return ids[0, :]
    return ids[-1, :]


def diffusion_step(state, ops, phys, boundary, picard_cfg, dt,
                   flux_form="kirchhoff"):
    """Advance one penalized semi-implicit diffusion step.

    Returns (new_state, picard_iterations).
    """
    if dt <= 0.0:
        raise InvalidParameterError("dt must be positive")
    if flux_form not in ("kirchhoff", "product"):
        raise InvalidParameterError("flux_form must be 'kirchhoff' or "
                                    "'product'")
    c = phys.c
    cvt = phys.cvt
    pen = c * phys.omega / (3.0 * phys.sigma0)

    phi_n = phys.planck(state.T)
    gc_phi = _phi_ghosts(ops, boundary, phys, phi_n)
    q_n = ops.grad(phi_n, gc_phi)

    if flux_form == "kirchhoff":
        w_n = phys.kirchhoff(state.T)
        gc_w = _kirchhoff_ghosts(ops, boundary, phys, w_n, gc_phi, phi_n)
        explicit = ops.div(ops.grad(w_n, gc_w))
    else:
        sigma_n = phys.sigma(state.T)
        explicit = ops.div([q_n[ax] / (3.0 * sigma_n)
                            for ax in range(len(q_n))])

    rhs1 = phi_n + c * cvt * state.T + dt * c * explicit \
        - dt * pen * ops.div(q_n)

    coeffs = StageCoefficients(
        c=c, planck_coeff=phys.planck_coeff, cvt=cvt, eps_tilde=0.0,
        omega=phys.omega, sigma0=phys.sigma0, weights=phys.weights)
    rhs = StageRHS(rhs1=rhs1, rhs2=np.zeros_like(rhs1), a_diag=1.0, dt=dt,
                   coeffs=coeffs, ghost_const=gc_phi)
    sol = solve_stage(rhs, phi_n, state.T,
                      lambda t: np.ones_like(np.asarray(t)), picard_cfg, ops)
    return DiffusionState(sol.T, state.t + dt), sol.picard_iters


def diffusion_energy(state, phys):
    """Domain integral of a T^4 + C_v T (conserved under periodic BCs)."""
    a = phys.constants.a
    cv = phys.cvt * phys.quad.sphere_measure
    return float(np.sum(phys.weights * (a * state.T**4 + cv * state.T)))
