import numpy as np
import pytest

from relaxbench import cli


def write_cfg(tmp_path, body, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


HEAT_CFG = """
[system]
kind = demo
name = heat1d

[grid]
n = 128

[solver]
flux = spectral

[experiment]
T = 0.05
epsilon = 0.05
epsilons = 0.2, 0.1, 0.05
"""

CARLEMAN_CFG = """
[system]
kind = demo
name = carleman

[grid]
n = 64

[experiment]
T = 0.01
epsilon = 0.1
"""


class TestConfigParsing:
    def test_missing_system_kind_named(self, tmp_path):
        cfg = write_cfg(tmp_path, "[system]\nname = heat1d\n[grid]\nn = 64\n[experiment]\nT = 0.1\n")
        with pytest.raises(cli.ConfigError, match="system.kind"):
            cli.parse_config(cfg)

    def test_unknown_key_is_hard_error(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG + "\n[solver]\nwarp = 9\n")
        with pytest.raises(cli.ConfigError, match="unknown key|duplicate"):
            cli.parse_config(cfg)

    def test_unknown_section_is_hard_error(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG + "\n[plotting]\nstyle = fancy\n")
        with pytest.raises(cli.ConfigError, match="unknown section"):
            cli.parse_config(cfg)

    def test_bad_value_reports_line(self, tmp_path):
        cfg = write_cfg(tmp_path, "[system]\nkind = demo\nname = heat1d\n[grid]\nn = wat\n[experiment]\nT = 0.1\n")
        with pytest.raises(cli.ConfigError, match="line 5"):
            cli.parse_config(cfg)

    def test_comments_and_defaults(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG + "# trailing comment\n")
        values = cli.parse_config(cfg)
        assert values["solver"]["cfl"] == 0.45
        assert values["experiment"]["well_prepared"] is True


class TestValidateCommand:
    def test_carleman_demo_passes(self, tmp_path):
        cfg = write_cfg(tmp_path, CARLEMAN_CFG)
        out = tmp_path / "out"
        assert cli.main(["validate", cfg, "--out", str(out)]) == 0
        lines = (out / "report.csv").read_text().strip().split("\n")
        assert lines[0] == "check,pass,margin,witness"
        assert len(lines) >= 7  # six or more checks all passing
        assert all(",true," in ln for ln in lines[1:])

    def test_null_limit_fails_conserved_block(self, tmp_path):
        cfg = write_cfg(tmp_path, CARLEMAN_CFG.replace("carleman", "null-limit"))
        out = tmp_path / "out"
        assert cli.main(["validate", cfg, "--out", str(out)]) == 1
        lines = (out / "report.csv").read_text().strip().split("\n")
        failing = [ln for ln in lines[1:] if ",false," in ln]
        assert len(failing) == 1
        assert failing[0].startswith("conserved_block,")
        assert "null solution" in failing[0]

    def test_config_error_exit_code(self, tmp_path):
        cfg = write_cfg(tmp_path, "[system]\nname = heat1d\n")
        assert cli.main(["validate", cfg, "--out", str(tmp_path / "o")]) == 2


class TestRunCommand:
    def test_heat_run_writes_snapshots_and_log(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG)
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "--out", str(out)]) == 0
        assert (out / "snapshot_000.csv").exists()
        assert (out / "snapshot_001.csv").exists()
        steps = (out / "steps.csv").read_text().strip().split("\n")
        assert steps[0] == "t,dt,energy,max_speed"

    def test_final_amplitude_near_slow_mode_value(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG.replace("T = 0.05", "T = 0.1").replace("n = 128", "n = 256"))
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "--out", str(out)]) == 0
        snaps = sorted(out.glob("snapshot_*.csv"))
        data = np.loadtxt(snaps[-1], delimiter=",", skiprows=1)
        amp = np.abs(np.fft.fft(data[:, 1]))[1] * 2 / 256
        assert abs(amp - 0.01176) < 2e-3

    def test_zero_horizon_initial_snapshot_only(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG.replace("T = 0.05", "T = 0.0"))
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "--out", str(out)]) == 0
        assert sorted(p.name for p in out.glob("snapshot_*.csv")) == ["snapshot_000.csv"]

    def test_carleman_nonpositive_density_rejected(self, tmp_path):
        body = CARLEMAN_CFG + "u0_offset = 0.2\n"  # 0.2 + 0.5 sin dips below zero
        cfg = write_cfg(tmp_path, body)
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_invalid_system_needs_flag(self, tmp_path):
        body = CARLEMAN_CFG.replace("carleman", "null-limit")
        cfg = write_cfg(tmp_path, body)
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o1")]) == 1
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o2"), "--allow-invalid"]) == 0

    def test_missing_epsilon_reported(self, tmp_path):
        cfg = write_cfg(tmp_path, CARLEMAN_CFG.replace("epsilon = 0.1", ""))
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_reference_snapshots_written(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG + "reference = true\n")
        out = tmp_path / "out"
        assert cli.main(["run", cfg, "--out", str(out)]) == 0
        ref = sorted(out.glob("reference_*.csv"))
        assert ref and ref[0].read_text().startswith("x,u_1")


class TestConvergeCommand:
    def test_heat_mini_ladder(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG)
        out = tmp_path / "out"
        assert cli.main(["converge", cfg, "--out", str(out)]) == 0
        lines = (out / "convergence.csv").read_text().strip().split("\n")
        assert lines[0] == "epsilon,errI,errII_weak,sup_eps_uII,observed_order"
        assert lines[1].endswith(",")
        errs = [float(ln.split(",")[1]) for ln in lines[1:]]
        assert errs[0] > errs[1] > errs[2]

    def test_non_decreasing_ladder_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG.replace("epsilons = 0.2, 0.1, 0.05",
                                                   "epsilons = 0.1, 0.2, 0.05"))
        assert cli.main(["converge", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_bitwise_determinism_across_threads(self, tmp_path):
        cfg = write_cfg(tmp_path, HEAT_CFG)
        outs = []
        for label, threads in (("a", "1"), ("b", "4")):
            out = tmp_path / label
            assert cli.main(["converge", cfg, "--out", str(out), "--threads", threads]) == 0
            outs.append((out / "convergence.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_threads_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RELAXBENCH_THREADS", "2")
        cfg = write_cfg(tmp_path, HEAT_CFG)
        out = tmp_path / "out"
        assert cli.main(["converge", cfg, "--out", str(out)]) == 0
