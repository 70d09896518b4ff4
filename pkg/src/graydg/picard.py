"""Picard predictor-corrector for the coupled radiation/material stage.

Each implicit stage couples the scalar flux rho, the material
temperature T and the auxiliary gradient q through

    (rho, xi) + c*Cvt*(T, xi) - c*a_d*dt*(omega/3 sigma0) d_h(q, xi) = (RHS1, xi)
    et^2*Cvt*(T, z) - a_d*dt*(sigt*(rho - Phi(T)), z)               = (RHS2, z)
    (q, z) = G_h(rho, z)

with et = eps_tilde and a_d the implicit diagonal weight.  Step 1 lags
T and solves the linear Helmholtz-type system for (rho, q); Step 2
eliminates rho through the relaxation equation and solves one scalar
quartic per node by Newton.  The outer loop repeats until consecutive
rho iterates differ by less than delta in L2.

Setting eps_tilde = 0 degenerates the relaxation to rho = Phi(T), which
is how the diffusion-limit reference solver reuses this module.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NewtonFailure, PicardNonConvergence

try:
    from numba import njit as _njit
except ImportError:          # pragma: no cover - numba is an optional speedup
    _njit = None

if _njit is not None:
    @_njit(cache=True)
    def _newton_kernel(t, active, beta, r, p, tol, t_floor, max_it):
        worst = 0
        for i in range(t.shape[0]):
            if not active[i]:
                continue
            ti = t[i]
            bi = beta[i]
            ri = r[i]
            toli = tol[i]
            it = 0
            while it < max_it:
                t3 = ti * ti * ti
                f = p * t3 * ti + bi * ti - ri
                if abs(f) <= toli:
                    break
                ti -= f / (4.0 * p * t3 + bi)
                if ti < t_floor:
                    ti = t_floor
                it += 1
            t[i] = ti
            if it > worst:
                worst = it
        return worst
else:
    _newton_kernel = None


@dataclass(frozen=True)
class PicardConfig:
    delta: float = 1.0e-9       # L2 stop tolerance on rho increments
    max_picard: int = 200
    newton_tol: float = 1.0e-12  # absolute residual tolerance (scaled by |r|)
    max_newton: int = 100


@dataclass
class StageCoefficients:
    """Problem scalars/fields entering one stage solve."""

    c: float
    planck_coeff: float          # a*c/|Omega|
    cvt: object                  # C_v/|Omega|, scalar or nodal field
    eps_tilde: float
    omega: float
    sigma0: float
    weights: np.ndarray          # nodal quadrature weights (for norms)
    t_floor: float = 1.0e-6

    def gamma(self, a_diag, dt):
        """Coefficient of the implicit penalization Laplacian."""
        return self.c * a_diag * dt * self.omega / (3.0 * self.sigma0)


@dataclass
class StageRHS:
    rhs1: np.ndarray             # combined rho + c*Cvt*T data
    rhs2: np.ndarray             # relaxation history data
    a_diag: float
    dt: float
    coeffs: StageCoefficients
    ghost_const: dict = None     # rho-hat ghost constants per side


@dataclass
class StageSolution:
    rho: np.ndarray
    T: np.ndarray
    q: list
    sigma_tilde: np.ndarray
    picard_iters: int
    newton_max: int
    residuals: list = field(default_factory=list)
    floored: int = 0
    clamped: np.ndarray = None   # nodes held at the temperature floor


def solve_quartic(beta, r, planck_coeff, t_guess, cfg, t_floor=1.0e-6):
    """Per-node roots of f(T) = p*T^4 + beta*T - r, beta > 0.

    f is strictly increasing and convex on T > 0, so Newton from the
    floor-clamped guess overshoots once and then descends monotonically.
    Nodes whose r puts the root at or below the floor are clamped there.
    Returns (T, iterations, clamp_mask).
    """
    beta = np.broadcast_to(np.asarray(beta, dtype=float), np.shape(r)).copy()
    r = np.asarray(r, dtype=float)
    p = planck_coeff
    t = np.maximum(np.asarray(t_guess, dtype=float), t_floor).copy()

    f_floor = p * t_floor**4 + beta * t_floor
    clamped = r <= f_floor
    t[clamped] = t_floor

    tol = cfg.newton_tol * np.maximum(1.0, np.abs(r))

    if _newton_kernel is not None:
        shape = t.shape
        tf = t.ravel().copy()
        it = _newton_kernel(tf, (~clamped).ravel(),
                            np.broadcast_to(beta, shape).ravel(),
                            np.ravel(r), float(p),
                            np.broadcast_to(tol, shape).ravel().copy(),
                            float(t_floor), int(cfg.max_newton))
        t = tf.reshape(shape)
        if it >= cfg.max_newton:
            bad = np.abs(p * t**4 + beta * t - r) > tol
            bad &= ~clamped
            if bad.any():
                t = _bisect_fallback(t, beta, r, p, bad, tol, t_floor)
        return t, it, clamped

    active = ~clamped
    it = 0
    while active.any():
        t2 = t * t
        t3 = t2 * t
        f = p * (t3 * t) + beta * t - r
        np.logical_and(active, np.abs(f) > tol, out=active)
        if not active.any():
            break
        if it >= cfg.max_newton:
            t = _bisect_fallback(t, beta, r, p, active, tol, t_floor)
            break
        step = f / (4.0 * p * t3 + beta)
        t = np.where(active, np.maximum(t - step, t_floor), t)
        it += 1
    return t, it, clamped


def _bisect_fallback(t, beta, r, p, active, tol, t_floor):
    """Safeguard for stagnating nodes: bisection on a grown bracket."""
    idx = np.nonzero(active.ravel())[0]
    tf = t.ravel().copy()
    bf, rf = beta.ravel(), r.ravel()
    tolf = np.broadcast_to(tol, bf.shape).ravel()
    for i in idx:
        lo, hi = t_floor, max(2.0 * tf[i], 1.0)
        for _ in range(200):
            if p * hi**4 + bf[i] * hi - rf[i] >= 0.0:
                break
            hi *= 2.0
        else:
            raise NewtonFailure("could not bracket the local root")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = p * mid**4 + bf[i] * mid - rf[i]
            if abs(fm) <= tolf[i]:
                break
            if fm > 0.0:
                hi = mid
            else:
                lo = mid
        tf[i] = mid
    return tf.reshape(t.shape)


def step1_linear(t_lag, rhs, ops, affine=None):
    """Predictor: solve (I - gamma*div grad) rho = RHS1 - c*Cvt*T_lag.

    ``affine`` carries the precomputed boundary-source parts
    (q_affine, div_affine); they are fixed within a stage, so the outer
    loop computes them once.
    """
    co = rhs.coeffs
    gamma = co.gamma(rhs.a_diag, rhs.dt)
    if affine is None:
        affine = _stage_affine(rhs, ops)
    q_aff, div_aff = affine
    b = rhs.rhs1 - co.c * co.cvt * t_lag
    if div_aff is not None:
        b = b + gamma * div_aff
    rho = ops.helmholtz_solve(gamma, b)
    q = ops.grad(rho)
    if q_aff is not None:
        q = [q[ax] + q_aff[ax] for ax in range(len(q))]
    return rho, q


def _stage_affine(rhs, ops):
    if not rhs.ghost_const:
        return None, None
    q_aff = ops.grad_affine(rhs.ghost_const)
    return q_aff, ops.div(q_aff)


def step2_local_newton(q, rhs, sigma_tilde_lag, t_guess, cfg, ops):
    """Corrector: nodewise nonlinear solve for (rho, T) given q.

    Eliminates rho via the relaxation equation (exact when eps_tilde is
    zero) and Newton-solves the resulting scalar quartic per node.
    """
    co = rhs.coeffs
    gamma = co.gamma(rhs.a_diag, rhs.dt)
    d = ops.div(q)
    r_base = rhs.rhs1 + gamma * d
    if co.eps_tilde == 0.0:
        beta = co.c * co.cvt
        t, iters, clamped = solve_quartic(
            beta, r_base, co.planck_coeff, t_guess, cfg, co.t_floor)
        rho = co.planck_coeff * t**4
        return rho, t, iters, clamped
    denom = sigma_tilde_lag * rhs.a_diag * rhs.dt
    relax = co.eps_tilde**2 * co.cvt / denom
    beta = co.c * co.cvt + relax
    r = r_base + rhs.rhs2 / denom
    t, iters, clamped = solve_quartic(
        beta, r, co.planck_coeff, t_guess, cfg, co.t_floor)
    # recover rho from the combined equation, not the relaxation one:
    # the Newton residual then lands in the relaxation balance instead
    # of accumulating as a conservation bias amplified by 1/dt.
    rho = r_base - co.c * co.cvt * t
    return rho, t, iters, clamped


def solve_stage(rhs, rho_prev, t_prev, sigma_tilde_fn, cfg, ops):
    """Run the two-step Picard loop to tolerance.

    ``rho_prev``/``t_prev`` seed the iteration (the time-level-n state);
    ``sigma_tilde_fn`` evaluates the lagged relative opacity at a nodal
    temperature field.  Returns a :class:`StageSolution`.
    """
    co = rhs.coeffs
    t_lag = t_prev
    rho_lag = rho_prev
    newton_max = 0
    floored = 0
    history = []
    incr_prev = None
    affine = _stage_affine(rhs, ops)
    for m in range(cfg.max_picard):
        sig_lag = sigma_tilde_fn(t_lag)
        rho1, q = step1_linear(t_lag, rhs, ops, affine)
        rho_new, t_new, nit, clamped = step2_local_newton(
            q, rhs, sig_lag, t_lag, cfg, ops)
        newton_max = max(newton_max, nit)
        floored += int(clamped.sum())
        incr = rho_new - rho_lag
        resid = float(np.sqrt(np.sum(co.weights * incr**2)))
        history.append(resid)
        if resid < cfg.delta:
            q = ops.grad(rho_new, rhs.ghost_const)
            return StageSolution(rho_new, t_new, q,
                                 sigma_tilde_fn(t_new), m + 1,
                                 newton_max, history, floored, clamped)
        # the dominant error mode of the lagged coupling alternates in
        # sign; halving the update annihilates it, so under-relax only
        # while consecutive increments anti-correlate
        damping = 1.0
        if incr_prev is not None and float(np.sum(incr * incr_prev)) < 0.0:
            damping = 0.5
        incr_prev = incr
        rho_lag = rho_new
        t_lag = damping * t_new + (1.0 - damping) * t_lag
    raise PicardNonConvergence(
        "Picard loop hit %d iterations (last residual %.3e)"
        % (cfg.max_picard, history[-1]), history)


def stage_residuals(sol, rhs, ops):
    """L2 residuals of the three stage equations at a solution.

    The relaxation residual uses the opacity evaluated at the solved
    temperature; an exactly-converged lagged iteration leaves a small
    imprint here, bounded by the Picard tolerance.
    """
    co = rhs.coeffs
    gamma = co.gamma(rhs.a_diag, rhs.dt)
    w = co.weights

    def l2(f):
        return float(np.sqrt(np.sum(w * np.asarray(f)**2)))

    phi = co.planck_coeff * sol.T**4
    r_a = sol.rho + co.c * co.cvt * sol.T - gamma * ops.div(sol.q) - rhs.rhs1
    r_b = co.eps_tilde**2 * co.cvt * sol.T \
        - rhs.a_diag * rhs.dt * sol.sigma_tilde * (sol.rho - phi) - rhs.rhs2
    qg = ops.grad(sol.rho, rhs.ghost_const)
    r_c = sum(l2(sol.q[ax] - qg[ax]) for ax in range(len(sol.q)))
    return {"combined": l2(r_a), "relaxation": l2(r_b), "gradient": r_c}
