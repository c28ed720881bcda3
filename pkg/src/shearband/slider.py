"""One-degree-of-freedom slider: the lumped benchmark of the friction law.

The fault is collapsed to a single stress and a single averaged aging
value; the plastic band width enters as a parameter.  The module provides
the right-hand side, the closed-form fixed point, trajectory integration
(RK4 with stick/slip event localization), linear stability of the sliding
branch, and the two bifurcation thresholds: loss of fixed-point stability
and disappearance of the large limit cycle, whose ordering opens a small
coexistence window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from ._kernels import pure
from .constitutive import ModelParams, mu, plastic_rate_Pi, theta_f
from .errors import BracketFailure, StickBranch
from .grid import FLOAT_FMT
from .simplified import classify_oscillation

__all__ = [
    "SliderState",
    "SliderTrajectory",
    "slider_rhs",
    "slider_fixed_point",
    "slider_integrate",
    "slider_jacobian",
    "slider_stability",
    "find_v1",
    "find_v2",
    "has_large_cycle",
    "phase_to_csv",
    "scan_to_csv",
]

# far-outside initial state used by the limit-cycle detector
FAR_START = (3.0, 8.0)
CYCLE_WINDOW = 1000.0
CYCLE_MIN_AMPLITUDE = 1e-3


@dataclass
class SliderState:
    sigma: float
    theta_bar: float


@dataclass
class SliderTrajectory:
    t: np.ndarray
    sigma: np.ndarray
    theta_bar: np.ndarray
    pi: np.ndarray


def slider_rhs(state: SliderState, v_inf: float, h: float, params: ModelParams):
    """Right-hand side of the lumped system.

    Stress is loaded at the elastic rate and unloaded by plastic slip over
    the band of width ``h``; the averaged age heals and is destroyed by
    slip as in the distributed model.
    """
    friction, aging = params.friction, params.aging
    C, H = params.C_const, params.H
    pi = float(plastic_rate_Pi(state.sigma, state.theta_bar, friction))
    dsigma = (C / H) * (v_inf - h * pi)
    dtheta = float(aging.healing(state.theta_bar)) - abs(pi) * float(
        aging.weakening(state.theta_bar)
    )
    return dsigma, dtheta


def slider_fixed_point(v_inf: float, h: float, params: ModelParams) -> SliderState:
    """Unique sliding equilibrium; rest convention at zero throughput.

    For v_inf = 0 the whole stick set is stationary and the representative
    (sigma = 0, saturated age) is returned.
    """
    aging = params.aging
    if v_inf == 0.0:
        return SliderState(sigma=0.0, theta_bar=aging.theta_inf)
    rate = v_inf / h
    theta_bar = float(theta_f(rate, aging))
    sigma = float(mu(rate, theta_bar, params.friction)) * np.sign(rate)
    return SliderState(sigma=float(sigma), theta_bar=theta_bar)


def slider_integrate(
    state0: SliderState,
    v_inf: float,
    h: float,
    params: ModelParams,
    T: float,
    dt: float = 1e-3,
    dt_out: float = 0.01,
    force_pure: bool = False,
) -> SliderTrajectory:
    """Classical fourth-order integration with threshold event refinement.

    The step is bisected whenever the stick/slip threshold is crossed, so
    the crossing is hit to 1e-10 in the stress-threshold gap; the rate
    being continuous there, this is an accuracy measure, not a restart.
    """
    friction, aging = params.friction, params.aging
    use_fast = (
        _kernels.HAVE_FAST
        and not force_pure
        and friction.is_log_law
        and aging.is_default_form
    )
    if use_fast:
        t, s, th = _kernels.fast.slider_run(
            state0.sigma,
            state0.theta_bar,
            T,
            dt,
            v_inf,
            h,
            params.C_const,
            params.H,
            friction.mu0,
            friction.a,
            friction.h_ref,
            friction.b,
            friction.c_state,
            aging.theta_inf,
            aging.c1,
            dt_out,
        )
    else:
        t, s, th = pure.slider_run(
            state0.sigma,
            state0.theta_bar,
            T,
            dt,
            v_inf,
            h,
            params.C_const,
            params.H,
            friction,
            aging,
            dt_out,
        )
    pi = plastic_rate_Pi(s, th, friction)
    return SliderTrajectory(t=t, sigma=s, theta_bar=th, pi=np.asarray(pi))


def slider_jacobian(v_inf: float, h: float, params: ModelParams) -> np.ndarray:
    """Analytic Jacobian of the lumped system on the sliding branch.

    Uses the flow-rule inverse sensitivities d(rate)/d(stress) = 1/A'(rate)
    and d(rate)/d(age) = -B'(age)/A'(rate).  Raises StickBranch when the
    fixed point carries no slip (the dynamics is nonsmooth there and
    linearization does not apply).
    """
    friction, aging = params.friction, params.aging
    fp = slider_fixed_point(v_inf, h, params)
    rate = float(plastic_rate_Pi(fp.sigma, fp.theta_bar, friction))
    if rate == 0.0:
        raise StickBranch("fixed point sits in the stick set")
    C, H = params.C_const, params.H
    Ap = float(friction.rate_term_prime(rate))
    Bp = float(friction.state_term_prime(fp.theta_bar))
    pi_sigma = 1.0 / Ap
    pi_theta = -Bp / Ap
    f1 = float(aging.weakening(fp.theta_bar))
    df0 = float(aging.healing_prime(fp.theta_bar))
    df1 = float(aging.weakening_prime(fp.theta_bar))
    return np.array(
        [
            [-(C * h / H) * pi_sigma, -(C * h / H) * pi_theta],
            [-f1 * pi_sigma, df0 - rate * df1 - f1 * pi_theta],
        ]
    )


def slider_stability(v_inf: float, h: float, params: ModelParams):
    """Eigenvalues of the sliding-branch Jacobian and a stability flag."""
    eig = np.linalg.eigvals(slider_jacobian(v_inf, h, params))
    return eig, bool(np.max(eig.real) < 0.0)


def find_v1(h: float, params: ModelParams, bracket=(0.05, 0.5), tol=1e-6) -> float:
    """Loading velocity where the sliding fixed point changes stability."""

    def growth(v):
        eig, _ = slider_stability(v, h, params)
        return float(np.max(eig.real))

    lo, hi = bracket
    glo, ghi = growth(lo), growth(hi)
    for _ in range(40):
        if glo > 0.0:
            break
        lo *= 0.5
        glo = growth(lo)
    for _ in range(40):
        if ghi < 0.0:
            break
        hi *= 2.0
        ghi = growth(hi)
    if not (glo > 0.0 and ghi < 0.0):
        raise BracketFailure("stability change not bracketed")
    return float(brentq(growth, lo, hi, xtol=tol, maxiter=200))


def has_large_cycle(
    v_inf: float,
    h: float,
    params: ModelParams,
    T: float = 5000.0,
    dt: float = 1e-3,
    start=FAR_START,
    window: float = CYCLE_WINDOW,
) -> bool:
    """Detect a large-amplitude limit cycle from a far-outside start."""
    traj = slider_integrate(
        SliderState(*start), v_inf, h, params, T=T, dt=dt, dt_out=0.05
    )
    verdict, _, amplitude = classify_oscillation(
        traj.t, traj.sigma, min(window, 0.25 * T)
    )
    return verdict == "oscillatory" and amplitude > CYCLE_MIN_AMPLITUDE


def find_v2(
    h: float,
    params: ModelParams,
    v1: float | None = None,
    tol: float = 1e-4,
    T: float = 5000.0,
    dt: float = 1e-3,
) -> float:
    """Largest loading velocity with a surviving large limit cycle.

    Bisection on the cycle detector of :func:`has_large_cycle`, bracketed
    just around the stability threshold (the cycle outlives the unstable
    fixed point by a thin coexistence window).
    """
    if v1 is None:
        v1 = find_v1(h, params)
    lo = 0.98 * v1
    for _ in range(6):
        if has_large_cycle(lo, h, params, T=T, dt=dt):
            break
        lo *= 0.95
    else:
        raise BracketFailure("no limit cycle below the stability threshold")
    hi = 1.02 * v1
    for _ in range(12):
        if not has_large_cycle(hi, h, params, T=T, dt=dt):
            break
        hi *= 1.02
        if hi > 2.0 * v1:
            raise BracketFailure("limit cycle persists far above the threshold")
    else:
        raise BracketFailure("limit cycle persists far above the threshold")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_large_cycle(mid, h, params, T=T, dt=dt):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bifurcation_scan(v_values, h: float, params: ModelParams, T: float = 5000.0):
    """Stability and limit-cycle flags on a loading-velocity grid."""
    rows = []
    for v in v_values:
        eig, stable = slider_stability(float(v), h, params)
        cycle = has_large_cycle(float(v), h, params, T=T)
        rows.append((float(v), float(np.max(eig.real)), stable, cycle))
    return rows


def phase_to_csv(traj: SliderTrajectory, path_or_buf) -> None:
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
    try:
        buf.write("t,sigma,theta_bar,pi\n")
        for row in zip(traj.t, traj.sigma, traj.theta_bar, traj.pi):
            buf.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    finally:
        if buf is not path_or_buf:
            buf.close()


def scan_to_csv(rows, path_or_buf) -> None:
    """Rows of (v_inf, max_re_eig, stable, limit_cycle) as CSV."""
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
    try:
        buf.write("v_inf,max_re_eig,stable,limit_cycle\n")
        for v, g, st, lc in rows:
            buf.write(
                f"{FLOAT_FMT % v},{FLOAT_FMT % g},{int(st)},{int(lc)}\n"
            )
    finally:
        if buf is not path_or_buf:
            buf.close()
