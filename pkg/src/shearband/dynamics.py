"""Damage-free evolutionary dynamics with inertia.

Staggered implicit stepping: per step the velocity / strain / plastic-rate
triple solves a jointly convex minimization (strain eliminated through the
implicit kinematic update), attacked by alternating an exact velocity
solve with an exact plastic-rate solve until the step functional stops
decreasing; the aging field then takes a fully implicit reaction-diffusion
step with the fresh rate.  First-derivative couplings use a summation-by-
parts pair (central interior, one-sided closures, trapezoid weights) so
the spatially discrete energy identity is exact and the recorded energy
residual is purely a time-discretization effect, first order in the step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from ._kernels import pure
from .constitutive import ModelParams, dissipation_R, mu, mu_threshold
from .errors import NonConvergence, StabilityRefused
from .grid import FLOAT_FMT, Field, Grid1D
from .steady import solve_rate_inclusion

__all__ = [
    "EvolState",
    "EnergyLedger",
    "EvolutionResult",
    "step_staggered",
    "run_evolution",
    "evol_state_to_csv",
    "ledger_to_csv",
]

SLIP_EPS = 1e-12
TAU_FLOOR = 1e-9


@dataclass
class EvolState:
    """Time-stamped fields of the evolutionary solve."""

    t: float
    v: Field
    eps: Field
    p: Field
    pi: Field
    theta: Field
    xi: Field


@dataclass
class EnergyLedger:
    """Discrete energy bookkeeping along a run.

    ``residual`` is current (kinetic + stored) minus its initial value,
    plus cumulative dissipation, minus cumulative boundary work; it decays
    linearly with the time step.
    """

    t: np.ndarray
    kinetic: np.ndarray
    stored: np.ndarray
    dissipated: np.ndarray
    work: np.ndarray
    residual: np.ndarray


@dataclass
class EvolutionResult:
    probes: list
    ledger: EnergyLedger
    final: EvolState


def _sbp_derivative(grid: Grid1D) -> sp.csr_matrix:
    """First derivative: central interior, one-sided two-point closures."""
    M, dx = grid.size, grid.dx
    D = sp.lil_matrix((M, M))
    D[0, 0], D[0, 1] = -1.0 / dx, 1.0 / dx
    D[M - 1, M - 2], D[M - 1, M - 1] = -1.0 / dx, 1.0 / dx
    for i in range(1, M - 1):
        D[i, i - 1] = -0.5 / dx
        D[i, i + 1] = 0.5 / dx
    return D.tocsr()


def _banded_from_sparse(A: sp.spmatrix, bw: int) -> np.ndarray:
    """(2*bw+1, m) diagonal-ordered form for solve_banded."""
    A = A.tocsr()
    m = A.shape[0]
    ab = np.zeros((2 * bw + 1, m))
    for k in range(-bw, bw + 1):
        diag = A.diagonal(k)
        if k >= 0:
            ab[bw - k, k:] = diag
        else:
            ab[bw - k, : m + k] = diag
    return ab


class _Stepper:
    """Operator cache plus the single-step staggered solve."""

    def __init__(self, params: ModelParams, grid: Grid1D,
                 inner_tol=1e-12, max_inner=200):
        if params.C.mode != "constant":
            raise ValueError("evolutionary solver is damage-free: constant stiffness only")
        if not params.rho > 0:
            raise ValueError("inertial stepping needs rho > 0 (use the reduced model otherwise)")
        self.params = params
        self.grid = grid
        self.inner_tol = inner_tol
        self.max_inner = max_inner
        self.D = _sbp_derivative(grid)
        self.DD = (self.D @ self.D).tocsr()
        self.w = grid.weights
        self.sm_ctx = pure.SmContext(grid, params)
        self._v_cache = {}

    def _v_system(self, tau):
        """Banded matrix and Dirichlet columns of the implicit velocity solve."""
        if tau not in self._v_cache:
            rho, C = self.params.rho, self.params.C_const
            M = self.grid.size
            A = (rho / tau) * sp.identity(M, format="csr") - (tau * C) * self.DD
            ab = _banded_from_sparse(A[1:-1, 1:-1], 2)
            col0 = np.asarray(A[1:-1, 0].todense()).ravel()
            colN = np.asarray(A[1:-1, M - 1].todense()).ravel()
            self._v_cache[tau] = (ab, col0, colN)
        return self._v_cache[tau]

    def _solve_rate(self, force, theta, visc, init):
        """Plastic-rate subproblem for frozen strain predictor."""
        params = self.params
        if params.eta == 0.0:
            return _rate_pointwise(force, theta, params.friction, visc)
        return solve_rate_inclusion(
            force, theta, params.friction, params.eta, visc, self.grid,
            tol=1e-10, init=init,
        )

    def _step_functional(self, v, pi, v_old, eps_old, theta_old, tau):
        params = self.params
        rho, C = params.rho, params.C_const
        eps = eps_old + tau * (self.D @ v - pi)
        val = float(
            self.w @ (rho * (v - v_old) ** 2 / (2.0 * tau)
                      + C * eps**2 / (2.0 * tau)
                      + dissipation_R(pi, theta_old, params.friction))
        )
        if params.eta > 0.0:
            val += 0.5 * params.eta * _grad_energy(pi, self.grid.dx)
        return val

    def advance(self, v, eps, p, theta, pi, tau, v_k):
        """One implicit step of size tau; subdivides itself if the inner
        alternation stalls.  Returns the end-of-step fields."""
        sub = tau
        n_sub = 1
        while True:
            try:
                state = (v, eps, p, theta, pi)
                for _ in range(n_sub):
                    state = self._substep(*state, sub, v_k)
                return state
            except NonConvergence:
                sub *= 0.5
                n_sub *= 2
                if sub < TAU_FLOOR:
                    raise StabilityRefused(
                        "time step could not be reduced enough to stabilize the step"
                    )

    def _substep(self, v_old, eps_old, p_old, theta_old, pi_prev, tau, v_k):
        params, grid = self.params, self.grid
        rho, C, eta = params.rho, params.C_const, params.eta
        M = grid.size
        ab, col0, colN = self._v_system(tau)

        pi = pi_prev.copy()
        if eta > 0.0:
            pi[0] = pi[-1] = 0.0
        v = v_old.copy()
        v[0], v[-1] = -v_k, v_k
        psi = self._step_functional(v, pi, v_old, eps_old, theta_old, tau)
        psi_scale = max(1.0, abs(psi))

        converged = False
        for _ in range(self.max_inner):
            # velocity solve at frozen plastic rate
            rhs = (
                (rho / tau) * v_old[1:-1]
                + C * (self.D @ eps_old)[1:-1]
                - (tau * C) * (self.D @ pi)[1:-1]
            )
            rhs -= col0 * (-v_k) + colN * v_k
            v[1:-1] = solve_banded((2, 2), ab, rhs)

            # plastic-rate solve at frozen strain predictor
            predictor = eps_old + tau * (self.D @ v)
            pi = self._solve_rate(C * predictor, theta_old, C * tau, pi)

            psi_new = self._step_functional(v, pi, v_old, eps_old, theta_old, tau)
            decrease = psi - psi_new
            psi = psi_new
            if decrease < self.inner_tol * psi_scale:
                converged = True
                break
        if not converged:
            raise NonConvergence("inner alternation did not settle", residual=decrease)

        eps = eps_old + tau * (self.D @ v - pi)
        theta = pure.aging_step_implicit(theta_old, np.abs(pi), tau, self.sm_ctx)
        p = p_old + tau * pi
        return v, eps, p, theta, pi


def _rate_pointwise(force, theta, friction, visc):
    """Nodewise flow-rule inversion with a viscous diagonal.

    Solves mu(p, theta) * sign + visc * p = force at each node; the pure
    inversion of the rate term initializes (and bounds) the Newton
    iteration, which the bisection safeguard keeps inside [0, p0].
    """
    thr = friction.mu0 + friction.state_term(theta)
    y = np.abs(force) - thr
    out = np.zeros_like(np.asarray(force, dtype=float))
    slip = y > 0.0
    if not np.any(slip):
        return out
    ys = y[slip]
    p = friction.invert_rate_term(ys)
    if visc > 0.0:
        lo = np.zeros_like(p)
        hi = p.copy()
        for _ in range(100):
            g = friction.rate_term(p) + visc * p - ys
            done = np.abs(g) <= 1e-13 * np.maximum(1.0, ys)
            if bool(done.all()):
                break
            hi = np.where(g > 0.0, np.minimum(hi, p), hi)
            lo = np.where(g < 0.0, np.maximum(lo, p), lo)
            d = friction.rate_term_prime(p) + visc
            p_new = p - g / d
            outside = (p_new <= lo) | (p_new >= hi)
            p_new = np.where(outside, 0.5 * (lo + hi), p_new)
            p = np.where(done, p, p_new)
    out[slip] = p * np.sign(np.asarray(force)[slip])
    return out


def _grad_energy(pi, dx):
    """Cell-based squared-gradient integral of the rate field."""
    d = np.diff(pi) / dx
    return float(dx * np.sum(d * d))


def step_staggered(state: EvolState, tau: float, v_inf_k: float, params: ModelParams) -> EvolState:
    """Advance one step of size tau under boundary velocity v_inf_k."""
    grid = state.v.grid
    stepper = _Stepper(params, grid)
    v, eps, p, theta, pi = stepper.advance(
        state.v.values.copy(),
        state.eps.values.copy(),
        state.p.values.copy(),
        state.theta.values.copy(),
        state.pi.values.copy(),
        tau,
        v_inf_k,
    )
    xi = _sign_selection(pi, eps, theta, params, grid)
    return EvolState(
        t=state.t + tau,
        v=Field(grid, v),
        eps=Field(grid, eps),
        p=Field(grid, p),
        pi=Field(grid, pi),
        theta=Field(grid, theta),
        xi=Field(grid, xi),
    )


def _sign_selection(pi, eps, theta, params, grid):
    """Sign-function selection: sign of the rate where slipping, the
    clamped driving force ratio where stuck."""
    C, eta = params.C_const, params.eta
    M = grid.size
    lap = np.zeros(M)
    lap[1:-1] = (pi[2:] - 2.0 * pi[1:-1] + pi[:-2]) / grid.dx**2
    drive = C * eps + eta * lap
    xi = np.clip(drive / mu_threshold(theta, params.friction), -1.0, 1.0)
    slipping = np.abs(pi) > SLIP_EPS
    xi[slipping] = np.sign(pi[slipping])
    return xi


def initial_state(params: ModelParams, grid: Grid1D, v_inf0: float = 0.0) -> EvolState:
    """Compatible rest state: linear velocity ramp, unstrained, saturated age."""
    x = grid.x
    return EvolState(
        t=0.0,
        v=Field(grid, v_inf0 * x / grid.H),
        eps=Field(grid, np.zeros(grid.size)),
        p=Field(grid, np.zeros(grid.size)),
        pi=Field(grid, np.zeros(grid.size)),
        theta=Field(grid, np.full(grid.size, params.aging.theta_inf)),
        xi=Field(grid, np.zeros(grid.size)),
    )


def run_evolution(
    params: ModelParams,
    v_inf,
    T: float,
    tau: float,
    grid: Grid1D | None = None,
    probe_times=(),
    state0: EvolState | None = None,
    ledger_every: int = 1,
) -> EvolutionResult:
    """Run the staggered scheme on [0, T] with energy bookkeeping.

    ``v_inf`` is a constant or a callable of time, sampled as per-step
    averages.  Snapshots are taken at the steps nearest the requested probe
    times; the ledger is recorded every ``ledger_every`` steps.
    """
    if grid is None:
        grid = Grid1D(H=params.H)
    stepper = _Stepper(params, grid)
    nsteps = max(1, int(round(T / tau)))

    if callable(v_inf):
        k = np.arange(nsteps)
        t0 = k * tau
        v_arr = (
            np.asarray([v_inf(t) for t in t0])
            + 4.0 * np.asarray([v_inf(t + 0.5 * tau) for t in t0])
            + np.asarray([v_inf(t + tau) for t in t0])
        ) / 6.0
        v_start = float(v_inf(0.0))
    else:
        v_arr = np.full(nsteps, float(v_inf))
        v_start = float(v_inf)

    if state0 is None:
        state0 = initial_state(params, grid, v_start)
    v = state0.v.values.copy()
    eps = state0.eps.values.copy()
    p = state0.p.values.copy()
    theta = state0.theta.values.copy()
    pi = state0.pi.values.copy()

    w = grid.weights
    rho, C, eta = params.rho, params.C_const, params.eta
    friction = params.friction

    def energies(v_, eps_):
        return (
            float(w @ (0.5 * rho * v_ * v_)),
            float(w @ (0.5 * C * eps_ * eps_)),
        )

    kin0, sto0 = energies(v, eps)
    diss_cum = 0.0
    work_cum = 0.0
    led_t, led_k, led_s, led_d, led_w, led_r = [0.0], [kin0], [sto0], [0.0], [0.0], [0.0]

    probe_map = {}
    for t_probe in probe_times:
        k_probe = min(nsteps, max(0, int(round(t_probe / tau))))
        probe_map.setdefault(k_probe, t_probe)
    probes = []
    if 0 in probe_map:
        probes.append(state0)

    t = state0.t
    for k in range(1, nsteps + 1):
        v_k = v_arr[k - 1]
        v_bnd_old = v[-1]
        theta_old = theta.copy()
        v, eps, p, theta, pi = stepper.advance(v, eps, p, theta, pi, tau, v_k)
        t += tau

        diss_step = tau * (
            float(w @ (mu(pi, theta_old, friction) * np.abs(pi)))
            + eta * _grad_energy(pi, grid.dx)
        )
        # discrete traction power: boundary stress flux plus the momentum-flux
        # correction of the two boundary cells (exact for the SBP pairing)
        deps = stepper.D @ eps
        work_step = tau * C * v_k * (
            eps[0] + eps[-1] + w[0] * deps[0] - w[-1] * deps[-1]
        )
        # prescribed boundary nodes: their kinetic-energy change is external work
        work_step += rho * (w[0] + w[-1]) * 0.5 * (v_k**2 - v_bnd_old**2)
        diss_cum += diss_step
        work_cum += work_step

        if k % ledger_every == 0 or k == nsteps:
            kin, sto = energies(v, eps)
            led_t.append(t)
            led_k.append(kin)
            led_s.append(sto)
            led_d.append(diss_cum)
            led_w.append(work_cum)
            led_r.append((kin + sto) - (kin0 + sto0) + diss_cum - work_cum)

        if k in probe_map:
            xi = _sign_selection(pi, eps, theta_old, params, grid)
            probes.append(
                EvolState(
                    t=t,
                    v=Field(grid, v.copy()),
                    eps=Field(grid, eps.copy()),
                    p=Field(grid, p.copy()),
                    pi=Field(grid, pi.copy()),
                    theta=Field(grid, theta.copy()),
                    xi=Field(grid, xi),
                )
            )

    ledger = EnergyLedger(
        t=np.asarray(led_t),
        kinetic=np.asarray(led_k),
        stored=np.asarray(led_s),
        dissipated=np.asarray(led_d),
        work=np.asarray(led_w),
        residual=np.asarray(led_r),
    )
    xi = _sign_selection(pi, eps, theta, params, grid)
    final = EvolState(
        t=t,
        v=Field(grid, v),
        eps=Field(grid, eps),
        p=Field(grid, p),
        pi=Field(grid, pi),
        theta=Field(grid, theta),
        xi=Field(grid, xi),
    )
    return EvolutionResult(probes=probes, ledger=ledger, final=final)


def evol_state_to_csv(state: EvolState, path_or_buf) -> None:
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
    try:
        buf.write(f"# t={FLOAT_FMT % state.t}\n")
        buf.write("x,v,eps,p,pi,theta\n")
        rows = zip(
            state.v.grid.x,
            state.v.values,
            state.eps.values,
            state.p.values,
            state.pi.values,
            state.theta.values,
        )
        for row in rows:
            buf.write(",".join(FLOAT_FMT % r for r in row) + "\n")
    finally:
        if buf is not path_or_buf:
            buf.close()


def ledger_to_csv(ledger: EnergyLedger, path_or_buf) -> None:
    buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
    try:
        buf.write("t,kinetic,stored,dissipated,work,residual\n")
        rows = zip(
            ledger.t, ledger.kinetic, ledger.stored,
            ledger.dissipated, ledger.work, ledger.residual,
        )
        for row in rows:
            buf.write(",".join(FLOAT_FMT % r for r in row) + "\n")
    finally:
        if buf is not path_or_buf:
            buf.close()
