"""Numpy reference implementations of the hot kernels.

These run for arbitrary constitutive laws and serve as the fallback when
the compiled extension is unavailable.  The algorithms mirror the compiled
versions step for step so the two lanes agree to rounding on matched
inputs.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_banded

SIGMA_TOL = 1e-13
EVENT_TOL = 1e-10


# ----------------------------------------------------------------------
# lumped slider: RK4 with stick/slip threshold event localization
# ----------------------------------------------------------------------


def _slider_funcs(friction, aging, C, H, h, v_inf):
    """Build scalar rhs and threshold-gap closures for the slider."""
    if friction.is_log_law and aging.is_default_form:
        mu0, a, h_ref = friction.mu0, friction.a, friction.h_ref
        b, c_state = friction.b, friction.c_state
        th_inf, c1 = aging.theta_inf, aging.c1
        coef = C / H

        def rate(s, th):
            thr = mu0 + b * math.log1p(c_state * (th if th > 0.0 else 0.0))
            ab = abs(s)
            if ab <= thr:
                return 0.0
            p = math.expm1((ab - thr) / a) / h_ref
            return p if s > 0.0 else -p

        def rhs(s, th):
            p = rate(s, th)
            return (
                coef * (v_inf - h * p),
                1.0 - th / th_inf - c1 * abs(p) * th,
            )

        def gap(s, th):
            return abs(s) - mu0 - b * math.log1p(c_state * (th if th > 0.0 else 0.0))

    else:
        from ..constitutive import plastic_rate_Pi, aging_rhs, mu_threshold

        coef = C / H

        def rate(s, th):
            return float(plastic_rate_Pi(s, th, friction))

        def rhs(s, th):
            p = rate(s, th)
            return (
                coef * (v_inf - h * p),
                float(aging_rhs(th, p, aging)),
            )

        def gap(s, th):
            return abs(s) - float(mu_threshold(th, friction))

    return rhs, gap


def _rk4(rhs, s, th, dt):
    k1s, k1t = rhs(s, th)
    k2s, k2t = rhs(s + 0.5 * dt * k1s, th + 0.5 * dt * k1t)
    k3s, k3t = rhs(s + 0.5 * dt * k2s, th + 0.5 * dt * k2t)
    k4s, k4t = rhs(s + dt * k3s, th + dt * k3t)
    return (
        s + dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s),
        th + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
    )


def slider_run(sigma0, theta0, T, dt, v_inf, h, C, H, friction, aging, dt_out):
    """Integrate the slider on [0, T], sampling roughly every dt_out.

    Classical fixed-step RK4; when the stick/slip threshold is crossed
    within a step, the substep is bisected until the crossing is located to
    EVENT_TOL in the stress-threshold gap, the partial step is accepted,
    and integration resumes with the base step.

    Returns (t, sigma, theta) sample arrays; the last sample is t = T.
    """
    rhs, gap = _slider_funcs(friction, aging, C, H, h, v_inf)

    n_cap = int(T / dt_out) + 8
    ts = np.empty(n_cap)
    ss = np.empty(n_cap)
    hs = np.empty(n_cap)
    ts[0], ss[0], hs[0] = 0.0, sigma0, theta0
    n = 1
    next_rec = dt_out

    t, s, th = 0.0, float(sigma0), float(theta0)
    g_old = gap(s, th)
    while t < T - 1e-14 * max(T, 1.0):
        step = min(dt, T - t)
        s1, th1 = _rk4(rhs, s, th, step)
        g_new = gap(s1, th1)
        if (g_old > EVENT_TOL and g_new < -EVENT_TOL) or (
            g_old < -EVENT_TOL and g_new > EVENT_TOL
        ):
            lo, hi = 0.0, step
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                sm, thm = _rk4(rhs, s, th, mid)
                gm = gap(sm, thm)
                if abs(gm) <= EVENT_TOL or hi - lo < 1e-16 * dt:
                    step, s1, th1, g_new = mid, sm, thm, gm
                    break
                if (g_old > 0.0) == (gm > 0.0):
                    lo = mid
                else:
                    hi = mid
            else:
                mid = 0.5 * (lo + hi)
                step = mid
                s1, th1 = _rk4(rhs, s, th, mid)
                g_new = gap(s1, th1)
        t += step
        s, th, g_old = s1, th1, g_new
        if t >= next_rec - 1e-14 and n < n_cap - 1:
            ts[n], ss[n], hs[n] = t, s, th
            n += 1
            while next_rec <= t + 1e-14:
                next_rec += dt_out
    ts[n], ss[n], hs[n] = t, s, th
    n += 1
    return ts[:n], ss[:n], hs[:n]


# ----------------------------------------------------------------------
# simplified model: staggered implicit stress/aging stepping
# ----------------------------------------------------------------------


class SmContext:
    """Precomputed quantities for the simplified-model stepping."""

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        self.w = grid.weights
        self.dx = grid.dx
        self.C = params.C_const
        self.H = params.H
        self.kappa = params.kappa
        self.friction = params.friction
        self.aging = params.aging


def _pi_of(sigma, theta, friction):
    from ..constitutive import plastic_rate_Pi

    return plastic_rate_Pi(sigma, theta, friction)


def solve_sigma_step(sigma_old, theta, rhs, c, w, friction):
    """Solve s + c * integral(Pi(s, theta)) = rhs for s (monotone).

    Exact in the stick regime (the integral vanishes and s = rhs); else a
    Newton iteration safeguarded by bisection on the bracket between 0 and
    rhs.  ``c`` must be positive.
    """
    thr_min = friction.mu0 + float(np.min(friction.state_term(theta)))
    if abs(rhs) <= thr_min:
        return rhs
    lo, hi = (0.0, rhs) if rhs > 0.0 else (rhs, 0.0)
    s = min(max(sigma_old, lo), hi)
    for _ in range(100):
        pi = _pi_of(s, theta, friction)
        F = s + c * float(w @ pi) - rhs
        if abs(F) <= SIGMA_TOL * max(1.0, abs(rhs)):
            break
        if F > 0.0:
            hi = s
        else:
            lo = s
        slipping = pi != 0.0
        dI = float(
            np.sum(w[slipping] / friction.rate_term_prime(pi[slipping]))
        ) if np.any(slipping) else 0.0
        dF = 1.0 + c * dI
        s_new = s - F / dF
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        s = s_new
    return s


def aging_step_implicit(theta, pi_abs, tau, ctx):
    """One implicit step of the aging reaction-diffusion equation.

    For the default affine/linear laws this is a single tridiagonal solve
    (an M-matrix, hence positivity preserving and bounded by theta_inf);
    general laws fall back to a damped Newton iteration on the same
    structure.
    """
    aging = ctx.aging
    kappa, dx, tau_inv = ctx.kappa, ctx.dx, 1.0 / tau
    th_inf = aging.theta_inf
    M = theta.shape[0]
    if aging.is_default_form:
        diag = tau_inv + 1.0 / th_inf + aging.c1 * pi_abs[1:-1] + 2.0 * kappa / dx**2
        off = -kappa / dx**2
        rhs = theta[1:-1] * tau_inv + 1.0
        rhs[0] -= off * th_inf
        rhs[-1] -= off * th_inf
        ab = np.zeros((3, M - 2))
        ab[0, 1:] = off
        ab[1, :] = diag
        ab[2, :-1] = off
        out = np.empty(M)
        out[0] = out[-1] = th_inf
        out[1:-1] = solve_banded((1, 1), ab, rhs)
        return out

    # damped Newton for general laws
    th = theta.copy()
    th[0] = th[-1] = th_inf
    lap_coeff = kappa / dx**2
    for _ in range(60):
        lap = np.zeros(M)
        lap[1:-1] = th[2:] - 2.0 * th[1:-1] + th[:-2]
        F = (th - theta) * tau_inv - aging.healing(th) + pi_abs * aging.weakening(th) - lap_coeff * lap
        F[0] = F[-1] = 0.0
        res = float(np.max(np.abs(F)))
        if res < 1e-12 * max(1.0, th_inf * tau_inv):
            break
        dF = tau_inv - aging.healing_prime(th) + pi_abs * aging.weakening_prime(th)
        ab = np.zeros((3, M - 2))
        ab[0, 1:] = -lap_coeff
        ab[1, :] = dF[1:-1] + 2.0 * lap_coeff
        ab[2, :-1] = -lap_coeff
        delta = solve_banded((1, 1), ab, -F[1:-1])
        step = 1.0
        for _ in range(40):
            trial = th.copy()
            trial[1:-1] += step * delta
            lap[1:-1] = trial[2:] - 2.0 * trial[1:-1] + trial[:-2]
            Ft = (
                (trial - theta) * tau_inv
                - aging.healing(trial)
                + pi_abs * aging.weakening(trial)
                - lap_coeff * lap
            )
            Ft[0] = Ft[-1] = 0.0
            if float(np.max(np.abs(Ft))) < res:
                th = trial
                break
            step *= 0.5
        else:
            th[1:-1] += delta
    return th


def sm_step(sigma, theta, tau, v_k, ctx):
    """One staggered step: implicit stress update, then implicit aging."""
    c = ctx.C * tau / (2.0 * ctx.H)
    rhs = sigma + (ctx.C * tau / ctx.H) * v_k
    sigma_new = solve_sigma_step(sigma, theta, rhs, c, ctx.w, ctx.friction)
    pi_frozen = np.abs(_pi_of(sigma_new, theta, ctx.friction))
    theta_new = aging_step_implicit(theta, pi_frozen, tau, ctx)
    return sigma_new, theta_new


def sm_run(sigma0, theta0, tau, v_arr, ctx, rec_every, probe_steps):
    """Run the simplified model for len(v_arr) steps.

    Records (t, sigma, integral of pi, theta extrema) every ``rec_every``
    steps plus the final step, and full theta snapshots at the 1-based step
    indices in ``probe_steps``.
    """
    nsteps = len(v_arr)
    probe_steps = np.asarray(probe_steps, dtype=np.int64)
    rec_idx = list(range(0, nsteps + 1, rec_every))
    if rec_idx[-1] != nsteps:
        rec_idx.append(nsteps)
    rec_set = {k: j for j, k in enumerate(rec_idx)}
    nrec = len(rec_idx)

    rec_t = np.empty(nrec)
    rec_sigma = np.empty(nrec)
    rec_intpi = np.empty(nrec)
    rec_thmin = np.empty(nrec)
    rec_thmax = np.empty(nrec)
    probe_theta = np.empty((len(probe_steps), theta0.shape[0]))
    probe_sigma = np.empty(len(probe_steps))

    sigma = float(sigma0)
    theta = theta0.copy()

    def record(j, k):
        pi = _pi_of(sigma, theta, ctx.friction)
        rec_t[j] = k * tau
        rec_sigma[j] = sigma
        rec_intpi[j] = float(ctx.w @ pi)
        rec_thmin[j] = float(theta.min())
        rec_thmax[j] = float(theta.max())

    if 0 in rec_set:
        record(rec_set[0], 0)
    for k in range(1, nsteps + 1):
        sigma, theta = sm_step(sigma, theta, tau, v_arr[k - 1], ctx)
        if k in rec_set:
            record(rec_set[k], k)
        hits = np.nonzero(probe_steps == k)[0]
        for j in hits:
            probe_theta[j] = theta
            probe_sigma[j] = sigma
    return (
        rec_t,
        rec_sigma,
        rec_intpi,
        rec_thmin,
        rec_thmax,
        probe_theta,
        probe_sigma,
        sigma,
        theta,
    )
