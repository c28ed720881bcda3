import json

import pytest

from shearband.cli import main
from shearband.config import load_config
from shearband.errors import ConfigError


class TestConfig:
    def test_defaults(self):
        cfg = load_config(None, {})
        assert cfg.model.H == 1.0
        assert cfg.numerics.n == 401
        assert cfg.model.friction.mu0 == 1.0

    def test_file_and_overrides(self, tmp_path):
        f = tmp_path / "run.toml"
        f.write_text(
            """
[model]
kappa = 0.16
eta = 0.01
[model.friction]
a = 2.0
[numerics]
n = 41
[experiment]
v_inf = 0.3
[output]
dir = "results"
"""
        )
        cfg = load_config(f, {"model.kappa": 0.64, "numerics.tau": 0.005})
        assert cfg.model.kappa == 0.64  # override wins
        assert cfg.model.eta == 0.01
        assert cfg.model.friction.a == 2.0
        assert cfg.numerics.n == 41
        assert cfg.numerics.tau == 0.005
        assert cfg.experiment["v_inf"] == 0.3
        assert cfg.output_dir == "results"

    def test_unknown_keys_rejected(self, tmp_path):
        f = tmp_path / "bad.toml"
        f.write_text("[model]\nkapa = 0.1\n")
        with pytest.raises(ConfigError):
            load_config(f, {})
        f.write_text("[modle]\nkappa = 0.1\n")
        with pytest.raises(ConfigError):
            load_config(f, {})
        f.write_text("[numerics]\nn = 40\n")  # even
        with pytest.raises(ConfigError):
            load_config(f, {})


class TestCli:
    def test_steady_roundtrip_and_determinism(self, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        args = ["steady", "--n", "41", "--kappa", "0.16", "--v-inf", "0.3"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        b1 = (out1 / "steady.csv").read_bytes()
        b2 = (out2 / "steady.csv").read_bytes()
        assert b1 == b2  # byte-identical reruns
        header = b1.decode().splitlines()
        data_start = next(i for i, l in enumerate(header) if not l.startswith("#"))
        assert header[data_start] == "x,theta,pi,alpha,eps,v"

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[model]\nwhoops = 1\n")
        rc = main(["steady", "--config", str(bad), "--out", str(tmp_path / "o")])
        assert rc == 1

    def test_limit_summary(self, tmp_path):
        out = tmp_path / "lim"
        assert main(["limit", "--out", str(out)]) == 0
        summary = json.loads((out / "limit_summary.json").read_text())
        assert summary["pi_star"] == pytest.approx(1.4923, abs=1e-3)
        assert summary["pi_circ"] == pytest.approx(0.6193, abs=1e-3)
        lines = (out / "limit_table.csv").read_text().splitlines()
        assert lines[0] == "pi,mu_tilde,R,Rhull"

    def test_small_sweep(self, tmp_path):
        out = tmp_path / "sweep"
        cfgf = tmp_path / "sweep.toml"
        cfgf.write_text(
            """
[numerics]
n = 41
[experiment]
kappa_values = [0.16, 0.64]
v_inf_values = [0.1, 0.5]
"""
        )
        rc = main(["sweep-steady", "--config", str(cfgf), "--out", str(out)])
        assert rc == 0
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0] == "kappa,v_inf,sigma,h_star,theta_min,pi_max"
        assert len(lines) == 5
        # deterministic (kappa, v_inf) ordering
        firsts = [tuple(map(float, l.split(",")[:2])) for l in lines[1:]]
        assert firsts == sorted(firsts)
        assert (out / "steady_kappa0p16_v0p1.csv").exists()

    def test_evolve_sm_run(self, tmp_path):
        out = tmp_path / "sm"
        rc = main(
            [
                "evolve-sm", "--n", "41", "--kappa", "0.16", "--v-inf", "0.6",
                "--t-end", "30", "--tau", "0.02", "--out", str(out),
            ]
        )
        assert rc == 0
        assert (out / "sm_trajectory.csv").exists()
        rec = json.loads((out / "sm_regime.jsonl").read_text().splitlines()[0])
        assert rec["v_inf"] == 0.6

    def test_evolve_full_run(self, tmp_path):
        out = tmp_path / "ev"
        rc = main(
            [
                "evolve-full", "--n", "41", "--kappa", "0.16", "--rho", "1.0",
                "--eta", "0.01", "--v-inf", "0.3", "--t-end", "1.0",
                "--tau", "0.01", "--out", str(out),
            ]
        )
        assert rc == 0
        assert (out / "ledger.csv").exists()
        assert (out / "evolve_t1.csv").exists()

    def test_slider_run(self, tmp_path):
        out = tmp_path / "sl"
        rc = main(["slider", "--v-inf", "0.12", "--h", "0.3", "--t-end", "5", "--out", str(out)])
        assert rc == 0
        lines = (out / "slider_phase.csv").read_text().splitlines()
        assert lines[0] == "t,sigma,theta_bar,pi"

    def test_slider_bifurcate_short_horizon(self, tmp_path):
        out = tmp_path / "bif"
        cfgf = tmp_path / "bif.toml"
        cfgf.write_text(
            """
[experiment]
h = 0.3
T_cycle = 400.0
scan_points = 2
"""
        )
        rc = main(["slider-bifurcate", "--config", str(cfgf), "--out", str(out)])
        assert rc == 0
        lines = (out / "bifurcation.csv").read_text().splitlines()
        assert lines[0] == "v_inf,max_re_eig,stable,limit_cycle"
        assert len(lines) == 3
        summary = json.loads((out / "slider_summary.json").read_text())
        assert summary["v1"] == pytest.approx(0.17423, abs=1e-4)
        assert summary["v1"] < summary["v2"]

    def test_nonconvergence_exit_code(self, tmp_path):
        cfgf = tmp_path / "stall.toml"
        cfgf.write_text(
            """
[model]
kappa = 0.16
eta = 0.001
[numerics]
n = 41
max_iter = 1
[experiment]
v_inf = 0.5
"""
        )
        rc = main(["steady", "--config", str(cfgf), "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_repro_fig4_tiny(self, tmp_path):
        # preset dispatch with a coarse grid override
        out = tmp_path / "fig4"
        rc = main(["repro", "fig4", "--n", "21", "--out", str(out)])
        assert rc == 0
        lines = (out / "summary.csv").read_text().splitlines()
        assert len(lines) == 41  # 4 kappas x 10 velocities
