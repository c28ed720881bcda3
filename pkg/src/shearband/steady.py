"""Steady states of the coupled aging / plastic-flow / damage system.

The solver alternates the two convex subproblems until their composition
has a fixed point: the aging profile solves a reaction-diffusion balance
for a given plastic rate, and the plastic rate solves the yield inclusion
with a scalar stress multiplier enforcing the integral throughput
constraint (the prescribed boundary velocity).  Damage, strain and
velocity are then recovered from decoupled equations.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .constitutive import ModelParams, mu, plastic_rate_Pi
from .errors import NonConvergence
from .grid import Field, Grid1D
from .grid import FLOAT_FMT

__all__ = [
    "SteadyState",
    "solve_theta_given_pi",
    "solve_pi_given_theta",
    "solve_rate_inclusion",
    "solve_damage",
    "recover_strain_velocity",
    "solve_steady",
    "support_half_width",
    "steady_to_csv",
]


@dataclass
class SteadyState:
    """Full steady profile set with per-equation residuals."""

    grid: Grid1D
    theta: Field
    pi: Field
    sigma: float
    alpha: Field
    eps: Field
    v: Field
    residuals: dict = dc_field(default_factory=dict)
    iterations: int = 0


def _arr(f):
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


def _wrap_like(template, grid, values):
    if isinstance(template, Field):
        return Field(grid, values)
    return values


# ----------------------------------------------------------------------
# aging subproblem
# ----------------------------------------------------------------------


def solve_theta_given_pi(pi, params: ModelParams, grid: Grid1D, tol=1e-10, max_iter=60):
    """Aging profile balancing healing, slip weakening and diffusion.

    Solves kappa * theta_xx + healing(theta) - |pi| * weakening(theta) = 0
    with boundary values theta_inf.  A single tridiagonal solve for the
    default affine/linear laws; damped Newton otherwise.
    """
    if not params.kappa > 0:
        raise ValueError("aging diffusion kappa must be positive here")
    aging = params.aging
    pi_abs = np.abs(_arr(pi))
    M = grid.size
    dx2 = grid.dx**2
    th_inf = aging.theta_inf
    lap_coeff = params.kappa / dx2

    if aging.is_default_form:
        diag = 1.0 / th_inf + aging.c1 * pi_abs[1:-1] + 2.0 * lap_coeff
        rhs = np.ones(M - 2)
        rhs[0] += lap_coeff * th_inf
        rhs[-1] += lap_coeff * th_inf
        ab = np.zeros((3, M - 2))
        ab[0, 1:] = -lap_coeff
        ab[1, :] = diag
        ab[2, :-1] = -lap_coeff
        theta = np.empty(M)
        theta[0] = theta[-1] = th_inf
        theta[1:-1] = solve_banded((1, 1), ab, rhs)
        # iterative refinement: stiff diffusion scaling (kappa/dx^2) can
        # leave the raw residual above the requested absolute tolerance
        res = _theta_residual(theta, pi_abs, params, grid)
        for _ in range(4):
            if res <= tol:
                break
            lap = (theta[2:] - 2.0 * theta[1:-1] + theta[:-2]) / grid.dx**2
            F = (
                params.kappa * lap
                + aging.healing(theta[1:-1])
                - pi_abs[1:-1] * aging.weakening(theta[1:-1])
            )
            theta[1:-1] += solve_banded((1, 1), ab, F)
            res = _theta_residual(theta, pi_abs, params, grid)
        if res > tol:
            raise NonConvergence("aging solve residual above tolerance", residual=res)
        return _wrap_like(pi, grid, theta)

    theta = np.full(M, th_inf)
    res_prev = np.inf
    for it in range(max_iter):
        F = np.zeros(M)
        F[1:-1] = (
            lap_coeff * (theta[2:] - 2.0 * theta[1:-1] + theta[:-2])
            + aging.healing(theta[1:-1])
            - pi_abs[1:-1] * aging.weakening(theta[1:-1])
        )
        res = float(np.max(np.abs(F)))
        if res < tol:
            return _wrap_like(pi, grid, theta)
        dF = aging.healing_prime(theta) - pi_abs * aging.weakening_prime(theta)
        ab = np.zeros((3, M - 2))
        ab[0, 1:] = lap_coeff
        ab[1, :] = dF[1:-1] - 2.0 * lap_coeff
        ab[2, :-1] = lap_coeff
        delta = solve_banded((1, 1), ab, -F[1:-1])
        step = 1.0
        for _ in range(40):
            trial = theta.copy()
            trial[1:-1] += step * delta
            Ft = (
                lap_coeff * (trial[2:] - 2.0 * trial[1:-1] + trial[:-2])
                + aging.healing(trial[1:-1])
                - pi_abs[1:-1] * aging.weakening(trial[1:-1])
            )
            if float(np.max(np.abs(Ft))) < res:
                theta = trial
                break
            step *= 0.5
        else:
            raise NonConvergence("aging Newton stalled", residual=res, iterations=it)
        res_prev = res
    raise NonConvergence("aging Newton did not converge", residual=res_prev, iterations=max_iter)


def _theta_residual(theta, pi_abs, params, grid):
    aging = params.aging
    lap = (theta[2:] - 2.0 * theta[1:-1] + theta[:-2]) / grid.dx**2
    F = (
        params.kappa * lap
        + aging.healing(theta[1:-1])
        - pi_abs[1:-1] * aging.weakening(theta[1:-1])
    )
    return float(np.max(np.abs(F)))


# ----------------------------------------------------------------------
# plastic-rate subproblem with stress multiplier
# ----------------------------------------------------------------------


def solve_pi_given_theta(
    theta,
    v_inf: float,
    params: ModelParams,
    grid: Grid1D,
    tol=1e-8,
    sigma_hint=None,
):
    """Plastic rate and stress multiplier for a frozen aging profile.

    With no rate-gradient term (eta = 0) the rate is the pointwise flow
    rule inverse of the stress and the multiplier is found by a monotone
    scalar root solve of the throughput constraint.  With eta > 0 an inner
    primal active-set (semismooth Newton) solve handles the gradient-
    regularized inclusion under homogeneous rate boundary conditions, and
    the same outer scalar iteration adjusts the multiplier.
    """
    theta_arr = _arr(theta)
    w = grid.weights
    friction = params.friction

    if v_inf == 0.0:
        # multiplier is nonunique in the stick regime; return 0 by convention
        return _wrap_like(theta, grid, np.zeros(grid.size)), 0.0
    if v_inf < 0.0:
        pi, sigma = solve_pi_given_theta(
            theta_arr, -v_inf, params, grid, tol=tol,
            sigma_hint=None if sigma_hint is None else -sigma_hint,
        )
        return _wrap_like(theta, grid, -_arr(pi)), -sigma

    target = 2.0 * v_inf
    thr = friction.mu0 + friction.state_term(theta_arr)

    if params.eta == 0.0:
        def gap(sigma):
            return float(w @ plastic_rate_Pi(sigma, theta_arr, friction)) - target

        lo = 0.0
        hi = float(np.max(thr) + friction.rate_term(v_inf / params.H) + 1.0)
        for _ in range(200):
            if gap(hi) >= 0.0:
                break
            hi *= 2.0
        else:
            raise NonConvergence("stress bracket exhausted in plastic-rate solve")
        sigma = brentq(gap, lo, hi, xtol=1e-14, rtol=4.0 * np.finfo(float).eps, maxiter=300)
        pi = plastic_rate_Pi(sigma, theta_arr, friction)
        return _wrap_like(theta, grid, pi), float(sigma)

    # eta > 0: outer scalar iteration on the multiplier around the inner
    # active-set solve
    state = {"pi": None}
    force = np.empty(grid.size)

    def gap(sigma):
        force.fill(sigma)
        pi = solve_rate_inclusion(
            force, theta_arr, friction, params.eta, 0.0, grid, tol, init=state["pi"]
        )
        state["pi"] = pi
        return float(w @ pi) - target

    lo = 0.0
    hi = float(np.max(thr) + friction.rate_term(v_inf / params.H) + 1.0)
    for _ in range(200):
        if gap(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise NonConvergence("stress bracket exhausted in plastic-rate solve")
    sigma = brentq(gap, lo, hi, xtol=1e-13, rtol=4.0 * np.finfo(float).eps, maxiter=300)
    force.fill(sigma)
    pi = solve_rate_inclusion(
        force, theta_arr, friction, params.eta, 0.0, grid, tol, init=state["pi"]
    )
    return _wrap_like(theta, grid, pi), float(sigma)


def solve_rate_inclusion(
    force, theta, friction, eta, visc, grid, tol, init=None, max_outer=300
):
    """Semismooth active-set solve of the gradient-regularized flow rule.

    Finds pi with pi(+-H) = 0 satisfying, nodewise,

        mu(pi, theta) * Sign(pi) + visc * pi - eta * pi_xx  contains  force,

    by alternating a Newton solve on the currently slipping nodes with
    primal/dual active-set updates.  ``visc >= 0`` is the implicit strain
    feedback used by the time stepper (zero in steady solves).  Falls back
    to a smoothed sign (tanh, delta = 1e-8) if the active set cycles.
    """
    M = grid.size
    dx2 = grid.dx**2
    thr0 = friction.mu0 + friction.state_term(theta)

    pi = np.asarray(init, dtype=float).copy() if init is not None else None
    if pi is None or pi.shape != (M,):
        pi = plastic_rate_Pi(force, theta, friction)
        pi[0] = pi[-1] = 0.0
    sign = np.where(pi > 0, 1.0, np.where(pi < 0, -1.0, 0.0))

    seen = set()
    for _ in range(max_outer):
        key = sign.tobytes()
        if key in seen:
            # cycling edge nodes: solve the smoothed problem, read off its
            # stick/slip pattern, and polish on that fixed pattern
            pi = _pi_tanh_solve(force, theta, friction, eta, visc, grid, tol, pi)
            scale = max(1.0, float(np.max(np.abs(pi))))
            sign = np.where(pi > 1e-6 * scale, 1.0, np.where(pi < -1e-6 * scale, -1.0, 0.0))
            sign[0] = sign[-1] = 0.0
            pi = np.where(sign == 0.0, 0.0, pi)
            pi = _pi_newton_on_sets(force, theta, friction, eta, visc, grid, sign, pi)
            pi = np.where(sign == 0.0, 0.0, pi)
            kkt = _inclusion_kkt_residual(pi, force, theta, friction, eta, visc, grid)
            if kkt < tol:
                return pi
            seen.clear()
        seen.add(key)

        pi = _pi_newton_on_sets(force, theta, friction, eta, visc, grid, sign, pi)

        lap = np.zeros(M)
        lap[1:-1] = (pi[2:] - 2.0 * pi[1:-1] + pi[:-2]) / dx2
        residual_force = force + eta * lap

        new_sign = sign.copy()
        slipping = sign != 0.0
        flipped = slipping & (pi * sign <= 0.0)
        new_sign[flipped] = 0.0
        stuck = sign == 0.0
        new_sign[stuck & (residual_force > thr0)] = 1.0
        new_sign[stuck & (residual_force < -thr0)] = -1.0
        new_sign[0] = new_sign[-1] = 0.0

        if np.array_equal(new_sign, sign):
            kkt = _inclusion_kkt_residual(pi, force, theta, friction, eta, visc, grid)
            if kkt < tol:
                return pi
        sign = new_sign
        pi = np.where(sign == 0.0, 0.0, pi)
    raise NonConvergence("active-set iteration for the plastic rate did not settle")


def _pi_newton_on_sets(force, theta, friction, eta, visc, grid, sign, pi0, max_iter=80):
    """Newton solve of the equality system on the slipping nodes."""
    M = grid.size
    lap_coeff = eta / grid.dx**2
    pi = pi0.copy()
    act = sign == 0.0
    pi[act] = 0.0
    scale = max(1.0, float(np.max(np.abs(force))))

    def residual(p):
        lap = np.zeros(M)
        lap[1:-1] = p[2:] - 2.0 * p[1:-1] + p[:-2]
        F = sign * mu(p, theta, friction) + visc * p - force - lap_coeff * lap
        F[act] = 0.0
        return F

    F = residual(pi)
    res = float(np.max(np.abs(F)))
    for _ in range(max_iter):
        if res < 1e-12 * scale:
            break
        dmu = friction.rate_term_prime(pi)
        ab = np.zeros((3, M - 2))
        interior_act = act[1:-1]
        ab[1, :] = np.where(interior_act, 1.0, dmu[1:-1] + visc + 2.0 * lap_coeff)
        ab[0, 1:] = np.where(interior_act[:-1], 0.0, -lap_coeff)
        ab[2, :-1] = np.where(interior_act[1:], 0.0, -lap_coeff)
        delta = np.zeros(M)
        delta[1:-1] = solve_banded((1, 1), ab, -F[1:-1])
        step = 1.0
        for _ in range(40):
            trial = pi + step * delta
            Ft = residual(trial)
            res_t = float(np.max(np.abs(Ft)))
            if res_t < res:
                pi, F, res = trial, Ft, res_t
                break
            step *= 0.5
        else:
            break
    return pi


def _inclusion_kkt_residual(pi, force, theta, friction, eta, visc, grid):
    """Flow-rule residual at interior nodes (boundary rows carry the BCs)."""
    M = grid.size
    lap = np.zeros(M)
    lap[1:-1] = (pi[2:] - 2.0 * pi[1:-1] + pi[:-2]) / grid.dx**2
    drive = (force - visc * pi + eta * lap)[1:-1]
    thr0 = (friction.mu0 + friction.state_term(theta))[1:-1]
    pi_int = pi[1:-1]
    slipping = pi_int != 0.0
    mu_int = mu(pi_int, theta[1:-1], friction)
    res_slip = np.abs(sign_of(pi_int) * mu_int - drive)[slipping]
    res_stick = np.maximum(np.abs(drive) - thr0, 0.0)[~slipping]
    out = 0.0
    if res_slip.size:
        out = max(out, float(np.max(res_slip)))
    if res_stick.size:
        out = max(out, float(np.max(res_stick)))
    return out


def _pi_kkt_residual(pi, sigma, theta, params, grid):
    force = np.full(grid.size, sigma)
    return _inclusion_kkt_residual(pi, force, theta, params.friction, params.eta, 0.0, grid)


def sign_of(x):
    return np.where(x > 0, 1.0, np.where(x < 0, -1.0, 0.0))


def _pi_tanh_solve(force, theta, friction, eta, visc, grid, tol, pi0, delta=1e-8, max_iter=400):
    """Smoothed-sign fallback when the active set cycles."""
    M = grid.size
    lap_coeff = eta / grid.dx**2
    pi = pi0.copy()
    pi[0] = pi[-1] = 0.0

    def residual(p):
        lap = np.zeros(M)
        lap[1:-1] = p[2:] - 2.0 * p[1:-1] + p[:-2]
        F = mu(p, theta, friction) * np.tanh(p / delta) + visc * p - force - lap_coeff * lap
        F[0] = F[-1] = 0.0
        return F

    F = residual(pi)
    res = float(np.max(np.abs(F)))
    for _ in range(max_iter):
        if res < tol:
            return pi
        t = np.tanh(pi / delta)
        dmu = friction.rate_term_prime(pi)
        dF = dmu * sign_of(pi) * t + mu(pi, theta, friction) * (1.0 - t * t) / delta + visc
        dF = np.maximum(dF, 1e-12)
        ab = np.zeros((3, M - 2))
        ab[1, :] = dF[1:-1] + 2.0 * lap_coeff
        ab[0, 1:] = -lap_coeff
        ab[2, :-1] = -lap_coeff
        delta_pi = np.zeros(M)
        delta_pi[1:-1] = solve_banded((1, 1), ab, -F[1:-1])
        step = 1.0
        for _ in range(60):
            trial = pi + step * delta_pi
            Ft = residual(trial)
            res_t = float(np.max(np.abs(Ft)))
            if res_t < res:
                pi, F, res = trial, Ft, res_t
                break
            step *= 0.5
        else:
            break
    raise NonConvergence("smoothed plastic-rate solve did not converge", residual=res)


# ----------------------------------------------------------------------
# damage, strain and velocity recovery
# ----------------------------------------------------------------------


def solve_damage(sigma: float, params: ModelParams, grid: Grid1D, tol=1e-10, max_iter=80):
    """Two-point damage boundary-value problem for a given stress.

    Solves C'(a)/(2 C(a)^2) * sigma^2 + Gc*(a-1)/ell^2 = Gc*ell^2*a_xx with
    a(+-H) = 1 by damped Newton.  Constant stiffness (zero derivative)
    returns the undamaged profile immediately.
    """
    M = grid.size
    law = params.C
    if law.mode == "constant" or sigma == 0.0:
        return np.ones(M)

    Gc, ell = params.Gc, params.ell
    dx2 = grid.dx**2
    lap_coeff = Gc * ell**2 / dx2
    alpha = np.ones(M)

    def force_terms(a):
        C, Cp = law(a)
        drive = Cp * sigma**2 / (2.0 * C**2)
        # analytic derivative of the driving term for the quadratic law
        Cpp = 2.0 * law.C0
        ddrive = (Cpp / (2.0 * C**2) - Cp**2 / C**3) * sigma**2
        return drive, ddrive

    def residual(a):
        drive, _ = force_terms(a)
        F = np.zeros(M)
        F[1:-1] = (
            drive[1:-1]
            + Gc * (a[1:-1] - 1.0) / ell**2
            - lap_coeff * (a[2:] - 2.0 * a[1:-1] + a[:-2])
        )
        return F

    F = residual(alpha)
    res = float(np.max(np.abs(F)))
    for it in range(max_iter):
        if res < tol:
            return alpha
        _, ddrive = force_terms(alpha)
        diag = ddrive[1:-1] + Gc / ell**2 + 2.0 * lap_coeff
        ab = np.zeros((3, M - 2))
        ab[1, :] = diag
        ab[0, 1:] = -lap_coeff
        ab[2, :-1] = -lap_coeff
        delta = np.zeros(M)
        delta[1:-1] = solve_banded((1, 1), ab, -F[1:-1])
        step = 1.0
        for _ in range(40):
            trial = alpha + step * delta
            Ft = residual(trial)
            res_t = float(np.max(np.abs(Ft)))
            if res_t < res:
                alpha, F, res = trial, Ft, res_t
                break
            step *= 0.5
        else:
            raise NonConvergence("damage Newton stalled", residual=res, iterations=it)
    raise NonConvergence("damage Newton did not converge", residual=res, iterations=max_iter)


def recover_strain_velocity(sigma, alpha, pi, params: ModelParams, grid: Grid1D):
    """Strain from the constant-stress relation, velocity by quadrature.

    eps = sigma / C(alpha) nodewise; v integrates the plastic rate from the
    left boundary, anchored at minus the half throughput.
    """
    alpha_arr = _arr(alpha)
    pi_arr = _arr(pi)
    C, _ = params.C(alpha_arr)
    eps = sigma / C
    v_inf = 0.5 * float(grid.weights @ pi_arr)
    v = np.empty(grid.size)
    v[0] = -v_inf
    v[1:] = -v_inf + np.cumsum(0.5 * (pi_arr[1:] + pi_arr[:-1]) * grid.dx)
    return eps, v


# ----------------------------------------------------------------------
# coupled fixed point
# ----------------------------------------------------------------------


def _pseudo_transient(theta, sigma, v_inf, params, grid, max_steps=4000, tau_max=100.0):
    """Relax toward the steady state with implicit reduced-dynamics steps.

    The stepping is unconditionally solvable (monotone stress update,
    M-matrix aging update), so the step size can grow aggressively; its
    fixed points satisfy the gradient-free steady equations exactly.
    Starting from the rest state follows the physical loading path, which
    selects the dynamically stable state when the free boundary pins to
    the grid and several nearby discrete steady states coexist.
    """
    from ._kernels import pure as _pure

    ctx = _pure.SmContext(grid, params)
    tau = 0.5
    quiet = 0
    theta = theta.copy()
    sigma = float(sigma)
    for _ in range(max_steps):
        sigma_new, theta_new = _pure.sm_step(sigma, theta, tau, v_inf, ctx)
        delta = max(float(np.max(np.abs(theta_new - theta))), abs(sigma_new - sigma))
        theta, sigma = theta_new, sigma_new
        tau = min(tau * 1.3, tau_max)
        if delta < 1e-12 * max(1.0, params.aging.theta_inf):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    return theta, sigma


def _steady_newton(theta0, sigma0, v_inf, params, grid, max_iter=80):
    """Semismooth Newton on the coupled aging/stress system (eta = 0).

    Unknowns are the interior aging values and the stress multiplier; the
    bordered tridiagonal Jacobian is solved by two banded solves and a
    scalar Schur complement.  Used as a fallback when the damped fixed-
    point map stalls, which happens for small diffusion where the free
    boundary makes the map locally repelling.
    """
    friction, aging = params.friction, params.aging
    w = grid.weights
    M = grid.size
    lapc = params.kappa / grid.dx**2
    target = 2.0 * v_inf

    def residual(theta, sigma):
        pi = plastic_rate_Pi(sigma, theta, friction)
        F = np.zeros(M)
        F[1:-1] = (
            lapc * (theta[2:] - 2.0 * theta[1:-1] + theta[:-2])
            + aging.healing(theta[1:-1])
            - np.abs(pi[1:-1]) * aging.weakening(theta[1:-1])
        )
        c = float(w @ pi) - target
        return F, c, pi

    theta = theta0.copy()
    sigma = float(sigma0)
    F, c, pi = residual(theta, sigma)
    res = max(float(np.max(np.abs(F))), abs(c))
    stall = 0
    for _ in range(max_iter):
        if res < 1e-13 * max(1.0, lapc * aging.theta_inf):
            break
        slip = pi != 0.0
        s = sign_of(pi)
        Ap = friction.rate_term_prime(pi)
        Bp = friction.state_term_prime(theta)
        dabs_dsigma = np.where(slip, s / Ap, 0.0)  # d|pi|/dsigma = sign * Pi_sigma
        dabs_dtheta = np.where(slip, -Bp / Ap, 0.0)
        weak = aging.weakening(theta)
        diag = (
            aging.healing_prime(theta)
            - np.abs(pi) * aging.weakening_prime(theta)
            - weak * dabs_dtheta
        )
        ab = np.zeros((3, M - 2))
        ab[1, :] = diag[1:-1] - 2.0 * lapc
        ab[0, 1:] = lapc
        ab[2, :-1] = lapc
        col_sigma = -(weak * dabs_dsigma)[1:-1]
        pi_sigma = np.where(slip, 1.0 / Ap, 0.0)
        pi_theta = np.where(slip, -s * Bp / Ap, 0.0)
        row_theta = (w * pi_theta)[1:-1]
        row_sigma = float(w @ pi_sigma)

        x1 = solve_banded((1, 1), ab, -F[1:-1])
        x2 = solve_banded((1, 1), ab, col_sigma)
        denom = row_sigma - float(row_theta @ x2)
        if denom == 0.0:
            raise NonConvergence("singular bordered Jacobian in steady Newton")
        dsigma = (-c - float(row_theta @ x1)) / denom
        dtheta = np.zeros(M)
        dtheta[1:-1] = x1 - x2 * dsigma

        # trust region: keep stress and age updates at physical scale
        cap = max(abs(dsigma) / max(1.0, abs(sigma)), float(np.max(np.abs(dtheta))) / aging.theta_inf)
        if cap > 1.0:
            dsigma /= cap
            dtheta /= cap

        step = 1.0
        improved = False
        for _ in range(50):
            trial_theta = theta + step * dtheta
            trial_sigma = sigma + step * dsigma
            Ft, ct, pit = residual(trial_theta, trial_sigma)
            res_t = max(float(np.max(np.abs(Ft))), abs(ct))
            if res_t < res:
                theta, sigma, F, c, pi, res = trial_theta, trial_sigma, Ft, ct, pit, res_t
                improved = True
                break
            step *= 0.5
        if not improved:
            stall += 1
            if stall >= 2:
                break
        else:
            stall = 0
    return theta, sigma


def solve_steady(
    params: ModelParams,
    v_inf: float,
    grid: Grid1D | None = None,
    tol: float = 1e-10,
    max_iter: int = 500,
    damping: float = 0.5,
    theta0=None,
    pi_tol: float = 1e-8,
) -> SteadyState:
    """Damped fixed-point iteration on the aging profile.

    Starting from the saturated profile, repeatedly maps theta through the
    plastic-rate solve and the aging solve, relaxing with the given damping
    factor; the factor is halved automatically whenever the undamped
    fixed-point residual grows.  Converged when that residual drops below
    ``tol`` in the sup norm.
    """
    if grid is None:
        grid = Grid1D(H=params.H)
    th_inf = params.aging.theta_inf
    theta = np.full(grid.size, th_inf) if theta0 is None else _arr(theta0).copy()

    omega = damping
    res_prev = np.inf
    res_best = np.inf
    streak = 0
    since_best = 0
    sigma = 0.0
    pi = np.zeros(grid.size)
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        pi_f, sigma = solve_pi_given_theta(
            theta, v_inf, params, grid, tol=pi_tol, sigma_hint=sigma or None
        )
        pi = _arr(pi_f)
        theta_new = _arr(solve_theta_given_pi(pi, params, grid))
        res = float(np.max(np.abs(theta_new - theta)))
        if res < tol:
            theta = theta_new
            break
        if res > res_prev:
            omega = max(0.5 * omega, 1e-3)
            streak = 0
        else:
            streak += 1
            if streak >= 3:
                omega = min(1.25 * omega, damping)
                streak = 0
        res_prev = res
        if res < 0.7 * res_best:
            res_best, since_best = res, 0
        else:
            since_best += 1
        theta = (1.0 - omega) * theta + omega * theta_new

        # free-boundary stalling: for small diffusion the fixed-point map is
        # locally repelling and no damping converges it; relax the coupled
        # system pseudo-transiently and polish with a bordered Newton
        if since_best >= 30 and params.eta == 0.0:
            theta_start = (
                np.full(grid.size, th_inf) if theta0 is None else _arr(theta0).copy()
            )
            theta, sigma = _pseudo_transient(theta_start, 0.0, v_inf, params, grid)
            theta, sigma = _steady_newton(theta, sigma, v_inf, params, grid)
            pi_f, sigma = solve_pi_given_theta(theta, v_inf, params, grid, tol=pi_tol)
            pi = _arr(pi_f)
            theta_new = _arr(solve_theta_given_pi(pi, params, grid))
            res = float(np.max(np.abs(theta_new - theta)))
            theta = theta_new
            if res < tol:
                break
            since_best = 0
            res_best = np.inf
    else:
        raise NonConvergence(
            f"steady fixed point did not converge in {max_iter} iterations",
            residual=res_prev,
            iterations=max_iter,
        )

    # make the returned triple exactly self-consistent
    pi_f, sigma = solve_pi_given_theta(theta, v_inf, params, grid, tol=pi_tol)
    pi = _arr(pi_f)
    alpha = solve_damage(sigma, params, grid)
    eps, v = recover_strain_velocity(sigma, alpha, pi, params, grid)

    residuals = {
        "fixed_point": float(
            np.max(np.abs(_arr(solve_theta_given_pi(pi, params, grid)) - theta))
        ),
        "theta": _theta_residual(theta, np.abs(pi), params, grid),
        "constraint": abs(float(grid.weights @ pi) - 2.0 * v_inf),
        "kkt": _pi_kkt_residual(pi, sigma, theta, params, grid)
        if params.eta > 0
        else float(np.max(np.abs(pi - plastic_rate_Pi(sigma, theta, params.friction)))),
    }
    return SteadyState(
        grid=grid,
        theta=Field(grid, theta),
        pi=Field(grid, pi),
        sigma=sigma,
        alpha=Field(grid, alpha),
        eps=Field(grid, eps),
        v=Field(grid, v),
        residuals=residuals,
        iterations=iterations,
    )


def support_half_width(pi, grid: Grid1D, rel: float = 1e-6) -> float:
    """Largest |x| where the plastic rate exceeds rel * max(pi)."""
    pi_arr = np.abs(_arr(pi))
    peak = float(pi_arr.max())
    if peak <= 0.0:
        return 0.0
    active = pi_arr > rel * peak
    if not np.any(active):
        return 0.0
    return float(np.max(np.abs(grid.x[active])))


def steady_to_csv(state: SteadyState, path_or_buf) -> None:
    """Profiles as CSV with ``#``-prefixed metadata header lines."""
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
    try:
        buf.write(f"# sigma={FLOAT_FMT % state.sigma}\n")
        buf.write(f"# iterations={state.iterations}\n")
        for k, v in state.residuals.items():
            buf.write(f"# residual_{k}={FLOAT_FMT % v}\n")
        buf.write("x,theta,pi,alpha,eps,v\n")
        rows = zip(
            state.grid.x,
            state.theta.values,
            state.pi.values,
            state.alpha.values,
            state.eps.values,
            state.v.values,
        )
        for row in rows:
            buf.write(",".join(FLOAT_FMT % r for r in row) + "\n")
    finally:
        if buf is not path_or_buf:
            buf.close()
