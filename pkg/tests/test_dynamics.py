import numpy as np
import pytest

from shearband.constitutive import mu_threshold
from shearband.dynamics import (
    EvolState,
    _sbp_derivative,
    initial_state,
    run_evolution,
    step_staggered,
    evol_state_to_csv,
    ledger_to_csv,
)



@pytest.fixture
def evol_params(params):
    return params.replace(rho=1.0, eta=0.01, kappa=0.16)


def test_sbp_summation_by_parts(small_grid, rng):
    # <Wu, Dv> + <WDu, v> equals the boundary flux exactly
    D = _sbp_derivative(small_grid)
    w = small_grid.weights
    for _ in range(5):
        u = rng.normal(size=small_grid.size)
        v = rng.normal(size=small_grid.size)
        lhs = w @ ((D @ v) * u) + w @ ((D @ u) * v)
        rhs = u[-1] * v[-1] - u[0] * v[0]
        assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(rhs)))


class TestStep:
    def test_equilibrium_invariant(self, evol_params, small_grid):
        s0 = initial_state(evol_params, small_grid, 0.0)
        s1 = step_staggered(s0, 0.01, 0.0, evol_params)
        assert np.all(s1.v.values == 0.0)
        assert np.all(s1.pi.values == 0.0)
        assert np.max(np.abs(s1.theta.values - 10.0)) < 1e-12

    def test_stick_regime_frozen_strain(self, evol_params, small_grid):
        s0 = initial_state(evol_params, small_grid, 0.0)
        s0.eps.values[:] = 0.5  # below threshold everywhere
        s1 = step_staggered(s0, 0.01, 0.0, evol_params)
        assert np.all(s1.pi.values == 0.0)
        assert np.array_equal(s1.eps.values, s0.eps.values)

    def test_theta_step_matches_scalar_implicit_euler(self, evol_params, small_grid):
        s0 = initial_state(evol_params, small_grid, 0.0)
        s0.theta.values[:] = 5.0
        s0.theta.values[0] = s0.theta.values[-1] = 10.0
        tau = 0.01
        s1 = step_staggered(s0, tau, 0.0, evol_params)
        scalar = (5.0 / tau + 1.0) / (1.0 / tau + 0.1)
        mid = small_grid.size // 2
        assert s1.theta.values[mid] == pytest.approx(scalar, rel=1e-10)

    def test_flow_rule_complementarity(self, evol_params, small_grid):
        # drive hard enough to slip and verify the discrete inclusion
        p = evol_params
        s0 = initial_state(p, small_grid, 0.0)
        s0.eps.values[:] = 4.0 * np.exp(-small_grid.x ** 2 / 0.3) + 1.0
        theta_old = s0.theta.values.copy()
        tau = 0.005
        s1 = step_staggered(s0, tau, 0.0, p)
        pi, eps = s1.pi.values, s1.eps.values
        lap = np.zeros(small_grid.size)
        lap[1:-1] = (pi[2:] - 2 * pi[1:-1] + pi[:-2]) / small_grid.dx**2
        drive = p.C_const * eps + p.eta * lap
        thr = mu_threshold(theta_old, p.friction)
        stick = np.abs(pi) <= 1e-12
        assert np.any(~stick)
        assert np.all(np.abs(drive[1:-1][stick[1:-1]]) <= thr[1:-1][stick[1:-1]] + 1e-8)
        slip = ~stick
        from shearband.constitutive import mu

        res = np.abs(
            np.sign(pi[slip]) * mu(pi[slip], theta_old[slip], p.friction)
            - drive[slip]
        )
        assert np.max(res) < 1e-7

    def test_sign_selection_range(self, evol_params, small_grid):
        s0 = initial_state(evol_params, small_grid, 0.0)
        s0.eps.values[:] = 2.0
        s1 = step_staggered(s0, 0.01, 0.0, evol_params)
        assert np.all(np.abs(s1.xi.values) <= 1.0)

    def test_rejects_quasistatic(self, params, small_grid):
        s0 = initial_state(params, small_grid, 0.0)
        with pytest.raises(ValueError):
            step_staggered(s0, 0.01, 0.0, params)  # rho = 0


class TestRun:
    def test_zero_drive_zero_trajectory(self, evol_params, small_grid):
        res = run_evolution(evol_params, 0.0, T=0.5, tau=0.01, grid=small_grid)
        st = res.final
        assert np.all(st.v.values == 0.0)
        assert np.all(st.p.values == 0.0)
        assert res.ledger.residual[-1] == 0.0

    def test_dissipation_nondecreasing(self, evol_params, small_grid):
        res = run_evolution(evol_params, 0.5, T=3.0, tau=0.01, grid=small_grid)
        assert np.all(np.diff(res.ledger.dissipated) >= -1e-15)

    def test_max_principle_along_run(self, evol_params, small_grid):
        res = run_evolution(
            evol_params, 0.5, T=3.0, tau=0.01, grid=small_grid,
            probe_times=[1.0, 2.0, 3.0],
        )
        for p in res.probes:
            assert p.theta.values.min() >= -1e-13
            assert p.theta.values.max() <= 10.0 + 1e-12

    def test_energy_residual_first_order(self, evol_params, small_grid):
        def drive(t):
            return 0.5 * np.sin(0.5 * t) ** 2

        r1 = run_evolution(evol_params, drive, T=4.0, tau=0.02, grid=small_grid)
        r2 = run_evolution(evol_params, drive, T=4.0, tau=0.01, grid=small_grid)
        ratio = r1.ledger.residual[-1] / r2.ledger.residual[-1]
        assert 1.8 <= ratio <= 2.2

    def test_probe_times(self, evol_params, small_grid):
        res = run_evolution(
            evol_params, 0.3, T=1.0, tau=0.01, grid=small_grid, probe_times=[0.5, 1.0]
        )
        assert [round(p.t, 10) for p in res.probes] == [0.5, 1.0]

    def test_boundary_conditions(self, evol_params, small_grid):
        res = run_evolution(evol_params, 0.4, T=1.0, tau=0.01, grid=small_grid)
        st = res.final
        assert st.v.values[0] == -0.4 and st.v.values[-1] == 0.4
        assert st.p.values[0] == 0.0 and st.p.values[-1] == 0.0
        assert st.theta.values[0] == 10.0 and st.theta.values[-1] == 10.0


def test_csv_writers(evol_params, small_grid, tmp_path):
    res = run_evolution(
        evol_params, 0.3, T=0.2, tau=0.01, grid=small_grid, probe_times=[0.2]
    )
    f = tmp_path / "state.csv"
    evol_state_to_csv(res.probes[0], f)
    lines = f.read_text().splitlines()
    assert lines[1] == "x,v,eps,p,pi,theta"
    assert len(lines) == small_grid.size + 2

    lf = tmp_path / "ledger.csv"
    ledger_to_csv(res.ledger, lf)
    llines = lf.read_text().splitlines()
    assert llines[0] == "t,kinetic,stored,dissipated,work,residual"
    assert len(llines) == len(res.ledger.t) + 1
