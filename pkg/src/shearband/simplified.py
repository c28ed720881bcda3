"""Quasistatic reduced dynamics: scalar stress coupled to the aging field.

Dropping inertia and the rate-gradient term makes the stress spatially
constant, leaving a scalar stress ODE nonlocally coupled to the aging
reaction-diffusion equation.  The stepping is staggered and fully
implicit: first the stress update (a monotone scalar equation, exact in
the stick regime), then the aging update with the new rate frozen in the
weakening coefficient.  A regime detector classifies long trajectories as
converged, oscillatory (seismic-cycle-like) or undecided.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from ._kernels import pure
from .constitutive import FrictionLaw, ModelParams, plastic_rate_Pi
from .grid import FLOAT_FMT, Field, Grid1D
from .steady import solve_steady, _theta_residual

__all__ = [
    "SimpleState",
    "SmTrajectory",
    "RegimeReport",
    "step_sm",
    "run_sm",
    "detect_regime",
    "classify_oscillation",
    "steady_equation_residuals",
    "trajectory_to_csv",
    "profile_to_csv",
    "report_to_jsonl",
]

# detection calibration constants (used verbatim by the tests)
CONVERGED_AMPLITUDE = 1e-5
OSCILLATION_REL_TOL = 0.02
RICHARDSON_TOL = 1e-6


@dataclass
class SimpleState:
    """Stress plus aging profile; the rate field is derived nodewise."""

    t: float
    sigma: float
    theta: Field

    @property
    def pi(self) -> Field:
        law = self._friction if self._friction is not None else FrictionLaw()
        return Field(
            self.theta.grid,
            plastic_rate_Pi(self.sigma, self.theta.values, law),
        )

    _friction: object = dc_field(default=None, repr=False)


@dataclass
class SmTrajectory:
    """Sampled run of the reduced dynamics."""

    t: np.ndarray
    sigma: np.ndarray
    int_pi: np.ndarray
    theta_min: np.ndarray
    theta_max: np.ndarray
    probes: list
    final: SimpleState
    grid: Grid1D
    tau: float


@dataclass
class RegimeReport:
    verdict: str  # converged | oscillatory | undecided
    period: float | None
    amplitude: float
    distance: float | None = None


def _context(params: ModelParams, grid: Grid1D) -> pure.SmContext:
    if params.C.mode != "constant":
        raise ValueError("reduced dynamics needs a constant stiffness")
    return pure.SmContext(grid, params)


def step_sm(state: SimpleState, tau: float, v_inf: float, params: ModelParams) -> SimpleState:
    """One staggered implicit step of the reduced dynamics."""
    ctx = _context(params, state.theta.grid)
    sigma, theta = pure.sm_step(state.sigma, state.theta.values, tau, v_inf, ctx)
    return SimpleState(
        t=state.t + tau,
        sigma=sigma,
        theta=Field(state.theta.grid, theta),
        _friction=params.friction,
    )


def default_initial_state(params: ModelParams, v_inf: float, grid: Grid1D, perturbation=1e-3):
    """Steady state with a small core perturbation of the aging profile.

    The perturbation (amplitude ``perturbation``, even, vanishing at the
    boundary, weakening the core) lets instabilities develop from near the
    steady state; pass explicit initial data to override.
    """
    stst = solve_steady(params, v_inf, grid=grid)
    bump = np.cos(0.5 * np.pi * grid.x / grid.H)
    theta0 = np.clip(stst.theta.values - perturbation * bump, 0.0, params.aging.theta_inf)
    return stst.sigma, theta0, stst


def run_sm(
    params: ModelParams,
    v_inf,
    T: float,
    tau: float = 0.01,
    grid: Grid1D | None = None,
    theta0=None,
    sigma0: float | None = None,
    probe_times=(),
    dt_rec: float = 0.05,
    auto_refine: bool = True,
    force_pure: bool = False,
) -> SmTrajectory:
    """Run the reduced dynamics on [0, T].

    ``v_inf`` may be a constant or a callable of time (sampled as per-step
    averages).  Defaults start at the steady state for the given loading
    with a 1e-3 core perturbation of the aging profile.  If the start-up
    Richardson check (one step at tau vs two at tau/2) exceeds its
    tolerance, tau is halved, at most six times.
    """
    if grid is None:
        grid = Grid1D(H=params.H)
    ctx = _context(params, grid)

    if theta0 is None or sigma0 is None:
        v_for_init = v_inf(0.0) if callable(v_inf) else v_inf
        sig0_def, th0_def, _ = default_initial_state(params, v_for_init, grid)
        if theta0 is None:
            theta0 = th0_def
        if sigma0 is None:
            sigma0 = sig0_def
    theta0 = theta0.values if isinstance(theta0, Field) else np.asarray(theta0, dtype=float)
    sigma0 = float(sigma0)

    if auto_refine:
        v0 = v_inf(0.5 * tau) if callable(v_inf) else v_inf
        for _ in range(6):
            s1, _ = pure.sm_step(sigma0, theta0, tau, v0, ctx)
            sh, thh = pure.sm_step(sigma0, theta0, 0.5 * tau, v0, ctx)
            s2, _ = pure.sm_step(sh, thh, 0.5 * tau, v0, ctx)
            if abs(s1 - s2) <= RICHARDSON_TOL * max(1.0, abs(sigma0)):
                break
            tau *= 0.5

    nsteps = max(1, int(round(T / tau)))
    if callable(v_inf):
        k = np.arange(nsteps)
        t0 = k * tau
        # per-step averages by Simpson
        v_arr = (
            np.asarray([v_inf(t) for t in t0])
            + 4.0 * np.asarray([v_inf(t + 0.5 * tau) for t in t0])
            + np.asarray([v_inf(t + tau) for t in t0])
        ) / 6.0
    else:
        v_arr = np.full(nsteps, float(v_inf))

    rec_every = max(1, int(round(dt_rec / tau)))
    probe_steps = np.asarray(
        sorted({min(nsteps, max(1, int(round(t / tau)))) for t in probe_times}),
        dtype=np.int64,
    )

    use_fast = (
        _kernels.HAVE_FAST
        and not force_pure
        and params.friction.is_log_law
        and params.aging.is_default_form
    )
    if use_fast:
        fr, ag = params.friction, params.aging
        out = _kernels.fast.sm_run(
            sigma0,
            np.ascontiguousarray(theta0),
            tau,
            np.ascontiguousarray(v_arr),
            params.kappa,
            grid.dx,
            np.ascontiguousarray(grid.weights),
            params.C_const,
            params.H,
            fr.mu0,
            fr.a,
            fr.h_ref,
            fr.b,
            fr.c_state,
            ag.theta_inf,
            ag.c1,
            rec_every,
            probe_steps,
        )
    else:
        out = pure.sm_run(sigma0, theta0, tau, v_arr, ctx, rec_every, probe_steps)
    (rec_t, rec_sigma, rec_intpi, rec_thmin, rec_thmax,
     probe_theta, probe_sigma, sigma_f, theta_f_arr) = out

    probes = [
        SimpleState(
            t=float(k * tau),
            sigma=float(probe_sigma[j]),
            theta=Field(grid, probe_theta[j].copy()),
            _friction=params.friction,
        )
        for j, k in enumerate(probe_steps)
    ]
    final = SimpleState(
        t=nsteps * tau, sigma=float(sigma_f), theta=Field(grid, theta_f_arr), _friction=params.friction
    )
    return SmTrajectory(
        t=rec_t,
        sigma=rec_sigma,
        int_pi=rec_intpi,
        theta_min=rec_thmin,
        theta_max=rec_thmax,
        probes=probes,
        final=final,
        grid=grid,
        tau=tau,
    )


# ----------------------------------------------------------------------
# oscillation classification
# ----------------------------------------------------------------------


def _local_maxima(y):
    idx = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    return idx


def classify_oscillation(t, y, window, converged_tol=CONVERGED_AMPLITUDE,
                         rel_tol=OSCILLATION_REL_TOL, min_peaks=3):
    """Classify the tail of a scalar signal.

    Returns (verdict, period, amplitude).  Converged when the final-window
    spread stays below ``converged_tol``; oscillatory when at least
    ``min_peaks`` maxima in the final window are equispaced and of
    stationary amplitude within ``rel_tol``; undecided otherwise.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = t >= t[-1] - window
    tw, yw = t[sel], y[sel]
    spread = float(yw.max() - yw.min())
    if spread < converged_tol:
        return "converged", None, spread

    peaks = _local_maxima(yw)
    if peaks.size:
        prominence = yw[peaks] - yw.min()
        peaks = peaks[prominence > 0.05 * spread]
    if peaks.size < min_peaks:
        return "undecided", None, spread

    spacings = np.diff(tw[peaks])
    amps = []
    for j in range(len(peaks) - 1):
        seg = yw[peaks[j]: peaks[j + 1] + 1]
        amps.append(yw[peaks[j]] - seg.min())
    amps = np.asarray(amps)
    spacing_dev = (spacings.max() - spacings.min()) / spacings.mean()
    amp_dev = (amps.max() - amps.min()) / amps.mean() if amps.mean() > 0 else np.inf
    if spacing_dev <= rel_tol and amp_dev <= rel_tol:
        return "oscillatory", float(spacings.mean()), float(amps.mean())
    return "undecided", None, spread


def detect_regime(traj: SmTrajectory, window: float, steady=None) -> RegimeReport:
    """Classify a reduced-dynamics run; optionally measure the distance to
    a reference steady state (sup norm over the aging profile and the
    stress)."""
    if traj.t[-1] - traj.t[0] < 2.0 * window:
        raise ValueError("trajectory must span at least two windows")
    verdict, period, amplitude = classify_oscillation(traj.t, traj.sigma, window)
    distance = None
    if steady is not None:
        distance = max(
            float(np.max(np.abs(traj.final.theta.values - steady.theta.values))),
            abs(traj.final.sigma - steady.sigma),
        )
    return RegimeReport(verdict=verdict, period=period, amplitude=amplitude, distance=distance)


def steady_equation_residuals(sigma, theta, params: ModelParams, grid: Grid1D, v_inf: float):
    """Residuals of the gradient-free steady equations at (sigma, theta).

    Returns (aging residual sup norm, throughput error); both vanish at a
    genuine fixed point of the reduced dynamics.
    """
    theta_arr = theta.values if isinstance(theta, Field) else np.asarray(theta, dtype=float)
    pi = plastic_rate_Pi(sigma, theta_arr, params.friction)
    aging_res = _theta_residual(theta_arr, np.abs(pi), params, grid)
    constraint = abs(float(grid.weights @ pi) - 2.0 * v_inf)
    return aging_res, constraint


# ----------------------------------------------------------------------
# output
# ----------------------------------------------------------------------


def trajectory_to_csv(traj: SmTrajectory, path_or_buf) -> None:
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
    try:
        buf.write("t,sigma,int_pi,theta_min,theta_max\n")
        for row in zip(traj.t, traj.sigma, traj.int_pi, traj.theta_min, traj.theta_max):
            buf.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    finally:
        if buf is not path_or_buf:
            buf.close()


def profile_to_csv(state: SimpleState, path_or_buf) -> None:
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
    try:
        buf.write(f"# t={FLOAT_FMT % state.t}\n")
        buf.write(f"# sigma={FLOAT_FMT % state.sigma}\n")
        buf.write("x,theta,pi\n")
        for x, th, p in zip(state.theta.grid.x, state.theta.values, state.pi.values):
            buf.write(f"{FLOAT_FMT % x},{FLOAT_FMT % th},{FLOAT_FMT % p}\n")
    finally:
        if buf is not path_or_buf:
            buf.close()


def report_to_jsonl(report: RegimeReport, path_or_buf, **meta) -> None:
    record = dict(meta)
    record.update(
        verdict=report.verdict,
        period=report.period,
        amplitude=report.amplitude,
        distance=report.distance,
    )
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "a")
    try:
        buf.write(json.dumps(record) + "\n")
    finally:
        if buf is not path_or_buf:
            buf.close()
