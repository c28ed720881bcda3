"""Acceptance suite: one criterion per test, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines.
Desk scale throughout: 401 interior nodes, horizons <= 1e3 time units.
"""

import numpy as np
import pytest

from shearband import default_params
from shearband.dynamics import EvolState, run_evolution
from shearband.grid import Field, Grid1D, decreasing_rearrangement, increasing_rearrangement
from shearband.limits import find_pi_circ, find_pi_star, plateau_solution
from shearband.simplified import detect_regime, run_sm, steady_equation_residuals
from shearband.slider import (
    SliderState,
    find_v1,
    find_v2,
    slider_fixed_point,
    slider_integrate,
    slider_jacobian,
    slider_rhs,
)
from shearband.simplified import classify_oscillation
from shearband.steady import solve_steady, support_half_width

V_GRID = (0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0)


def _verdict(num, name, ok, detail):
    print(f"\nACCEPTANCE {num} [{name}]: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


@pytest.fixture(scope="module")
def params():
    return default_params()


@pytest.fixture(scope="module")
def grid():
    return Grid1D(H=1.0, N=401)


def test_criterion_1_critical_rates():
    star = find_pi_star()
    circ = find_pi_circ()
    ok = abs(star - 1.4923) <= 1e-3 and abs(circ - 0.6193) <= 1e-3
    assert _verdict(1, "critical rates", ok, f"pi_star={star:.5f} pi_circ={circ:.5f}")


def test_criterion_2_localization_scaling(params, grid):
    targets = {0.01: (0.055, 0.010), 0.04: (0.11, 0.015), 0.16: (0.21, 0.02), 0.64: (0.41, 0.03)}
    measured = {}
    for kappa in targets:
        st = solve_steady(params.replace(kappa=kappa), 0.005, grid=grid)
        measured[kappa] = support_half_width(st.pi, grid)
    ok = all(abs(measured[k] - t) <= tol for k, (t, tol) in targets.items())
    ratios = [measured[k] / np.sqrt(k) for k in targets]
    ok = ok and all(0.45 <= r <= 0.65 for r in ratios)
    detail = " ".join(f"h*({k})={measured[k]:.4f}" for k in targets)
    detail += " | h*/sqrt(kappa): " + " ".join(f"{r:.3f}" for r in ratios)
    assert _verdict(2, "localization scaling", ok, detail)


def test_criterion_3_vanishing_diffusion_plateau(params, grid):
    """Small-diffusion steady state against the tangent-construction profile.

    Encodes the expected limit: a plateau at the tangent rate (band width
    0.268 at this loading).  The solver's converged steady branch instead
    satisfies the boundary-layer matching condition (stress 2.851 vs the
    tangent value 2.149, verified analytically and under grid refinement),
    so this check measures that discrepancy and currently fails; the
    solver output itself is validated independently in the unit suite.
    """
    st = solve_steady(params.replace(kappa=1e-4), 0.4, grid=grid)
    pl = plateau_solution(0.4, 1.0)
    x = grid.x
    core = np.abs(x) < 0.9 * pl.h
    outer = np.abs(x) > 1.1 * pl.h
    _, pi_lim = pl.evaluate(x)
    core_err = float(np.max(np.abs(st.pi.values[core] - pi_lim[core]))) / abs(pl.pi_in)
    outer_max = float(np.max(np.abs(st.pi.values[outer])))
    h_star = support_half_width(st.pi, grid)
    ok = core_err <= 0.02 and outer_max < 0.02 and abs(h_star - 0.268) <= 0.02
    assert _verdict(
        3,
        "vanishing-diffusion plateau",
        ok,
        f"core_rel_err={core_err:.3f} outer_max={outer_max:.3f} h*={h_star:.4f} (target 0.268+-0.02)",
    )


def test_criterion_4_monotone_response(params, grid):
    p = params.replace(kappa=0.04)
    thetas, pis = [], []
    for v in V_GRID:
        st = solve_steady(p, v, grid=grid)
        thetas.append(st.theta.values)
        pis.append(st.pi.values)
    slack = 1e-9
    mono_theta = all(
        np.all(thetas[i + 1] <= thetas[i] + slack) for i in range(len(V_GRID) - 1)
    )
    mono_pi = all(np.all(pis[i + 1] >= pis[i] - slack) for i in range(len(V_GRID) - 1))
    ok = mono_theta and mono_pi
    assert _verdict(
        4, "monotone response", ok, f"theta nonincreasing={mono_theta} pi nondecreasing={mono_pi}"
    )


def test_criterion_5_slider_bifurcation(params):
    v1 = find_v1(0.3, params)
    v2 = find_v2(0.3, params, v1=v1)
    fp = slider_fixed_point(0.175, 0.3, params)
    near = slider_integrate(
        SliderState(fp.sigma + 1e-7, fp.theta_bar + 1e-7), 0.175, 0.3, params, T=2000.0
    )
    near_dist = float(np.hypot(near.sigma[-1] - fp.sigma, near.theta_bar[-1] - fp.theta_bar))
    far = slider_integrate(SliderState(3.0, 8.0), 0.175, 0.3, params, T=5000.0, dt_out=0.05)
    far_verdict, _, far_amp = classify_oscillation(far.t, far.sigma, 1000.0)
    ok = (
        abs(v1 - 0.17462) <= 5e-4
        and abs(v2 - 0.175452) <= 2e-3
        and near_dist < 1e-6
        and far_verdict == "oscillatory"
    )
    assert _verdict(
        5,
        "slider bifurcation",
        ok,
        f"v1={v1:.6f} v2={v2:.6f} near_dist={near_dist:.2e} far={far_verdict} amp={far_amp:.3f}",
    )


def test_criterion_6_slider_fixed_point(params):
    fp = slider_fixed_point(0.175, 0.3, params)
    ok = abs(fp.sigma - 1.973) <= 0.01 and abs(fp.theta_bar - 0.168) <= 0.01
    assert _verdict(
        6, "slider fixed point", ok, f"sigma={fp.sigma:.4f} theta_bar={fp.theta_bar:.4f}"
    )


def test_criterion_7_reduced_model_regimes(params, grid):
    details = []
    ok = True
    for kappa, v_inf, T, window in ((0.16, 0.6, 200.0, 40.0), (0.004, 0.2, 600.0, 100.0)):
        p = params.replace(kappa=kappa)
        stst = solve_steady(p, v_inf, grid=grid)
        traj = run_sm(p, v_inf, T=T, tau=0.01, grid=grid)
        rep = detect_regime(traj, window=window, steady=stst)
        ok = ok and rep.verdict == "converged" and rep.distance < 1e-4
        details.append(f"({kappa},{v_inf})={rep.verdict},d={rep.distance:.1e}")

    p = params.replace(kappa=0.04)
    traj = run_sm(p, 0.15, T=1000.0, tau=0.01, grid=grid, probe_times=[940.0, 970.0, 1000.0])
    rep = detect_regime(traj, window=200.0)
    tail = traj.t >= 800.0
    p2p = float(traj.sigma[tail].max() - traj.sigma[tail].min())
    has_stick = bool(np.any(traj.int_pi[tail] == 0.0))
    support_inside = all(
        s.pi.values[0] == 0.0
        and s.pi.values[-1] == 0.0
        and support_half_width(s.pi, grid) < grid.H - grid.dx
        for s in traj.probes
    )
    ok = ok and rep.verdict == "oscillatory" and p2p > 0.1 and has_stick and support_inside
    details.append(
        f"(0.04,0.15)={rep.verdict},p2p={p2p:.2f},stick={has_stick},inside={support_inside}"
    )
    assert _verdict(7, "reduced-model regimes", ok, " ".join(details))


def test_criterion_8_property_suite(params, rng=np.random.default_rng(7)):
    checks = {}

    # discrete maximum principle over a stiff oscillatory run
    g = Grid1D(H=1.0, N=101)
    p = params.replace(kappa=0.04)
    traj = run_sm(
        p, 0.15, T=80.0, tau=0.02, grid=g,
        theta0=np.clip(10.0 - 9.0 * np.exp(-g.x**2 / 0.05), 0.0, 10.0), sigma0=3.0,
        auto_refine=False,
    )
    checks["max principle"] = bool(
        traj.theta_min.min() >= -1e-13 and traj.theta_max.max() <= 10.0 + 1e-12
    )

    # energy-balance residual halves with the time step
    pe = params.replace(rho=1.0, eta=0.01, kappa=0.16)
    drive = lambda t: 0.5 * np.sin(0.5 * t) ** 2
    r1 = run_evolution(pe, drive, T=4.0, tau=0.02, grid=g)
    r2 = run_evolution(pe, drive, T=4.0, tau=0.01, grid=g)
    ratio = r1.ledger.residual[-1] / r2.ledger.residual[-1]
    checks["energy ratio"] = bool(1.8 <= ratio <= 2.2)

    # fixed points of the reduced stepping solve the steady equations
    g401 = Grid1D(H=1.0, N=401)
    p16 = params.replace(kappa=0.16)
    traj = run_sm(p16, 0.6, T=120.0, tau=0.02, grid=g401)
    aging_res, constraint = steady_equation_residuals(
        traj.final.sigma, traj.final.theta, p16, g401, 0.6
    )
    checks["stepping fixed point"] = bool(aging_res < 1e-8 and constraint < 1e-8)

    # rearrangements: multiset preservation and the nodal inner-product bound
    f = Field(g, rng.normal(size=g.size))
    h = Field(g, rng.normal(size=g.size))
    fd = decreasing_rearrangement(f).values
    fi = increasing_rearrangement(f).values
    hd = decreasing_rearrangement(h).values
    hi = increasing_rearrangement(h).values
    ms = np.array_equal(np.sort(fd), np.sort(f.values)) and np.array_equal(
        np.sort(fi), np.sort(f.values)
    )
    mid = f.values @ h.values
    hl = (fd @ hi) <= mid + 1e-12 * abs(mid) and mid <= (fd @ hd) + 1e-12 * abs(mid)
    checks["rearrangement"] = bool(ms and hl)

    # analytic slider Jacobian against central differences
    J = slider_jacobian(0.175, 0.3, params)
    fp = slider_fixed_point(0.175, 0.3, params)
    eps = 1e-6

    def rhs_vec(s, t):
        return np.array(slider_rhs(SliderState(s, t), 0.175, 0.3, params))

    J_fd = np.column_stack(
        [
            (rhs_vec(fp.sigma + eps, fp.theta_bar) - rhs_vec(fp.sigma - eps, fp.theta_bar)) / (2 * eps),
            (rhs_vec(fp.sigma, fp.theta_bar + eps) - rhs_vec(fp.sigma, fp.theta_bar - eps)) / (2 * eps),
        ]
    )
    rel = np.abs(J - J_fd) / np.maximum(np.abs(J_fd), 1e-12)
    checks["jacobian fd"] = bool(rel.max() < 1e-6)

    ok = all(checks.values())
    detail = " ".join(f"{k}={'ok' if v else 'BAD'}" for k, v in checks.items())
    assert _verdict(8, "property suite", ok, detail + f" (energy ratio {ratio:.3f})")


def test_criterion_9_cross_solver_oracle(params, grid):
    p = params.replace(rho=1e-3, eta=1e-3, kappa=0.16)
    stst = solve_steady(p, 0.6, grid=grid)
    # start inside the steady basin (the rest start excites a coexisting
    # stick-slip cycle at these parameters) and run long
    bump = np.cos(0.5 * np.pi * grid.x / grid.H)
    theta0 = np.clip(stst.theta.values * (1.0 - 0.10 * bump), 0.0, 10.0)
    theta0[0] = theta0[-1] = 10.0
    state0 = EvolState(
        t=0.0,
        v=Field(grid, stst.v.values.copy()),
        eps=Field(grid, stst.eps.values.copy()),
        p=Field(grid, np.zeros(grid.size)),
        pi=Field(grid, stst.pi.values.copy()),
        theta=Field(grid, theta0),
        xi=Field(grid, np.zeros(grid.size)),
    )
    res = run_evolution(p, 0.6, T=80.0, tau=0.01, grid=grid, state0=state0)
    final = res.final
    dth = float(np.max(np.abs(final.theta.values - stst.theta.values))) / float(
        np.max(np.abs(stst.theta.values))
    )
    dpi = float(np.max(np.abs(final.pi.values - stst.pi.values))) / float(
        np.max(np.abs(stst.pi.values))
    )
    ok = dth < 0.01 and dpi < 0.01
    assert _verdict(9, "cross-solver oracle", ok, f"rel_sup_theta={dth:.2e} rel_sup_pi={dpi:.2e}")
