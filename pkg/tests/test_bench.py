import numpy as np
import pytest

from secsim.bench import (CSV_COLUMNS, CSV_HEADER, QOS_PROFILES, cmd_sweep,
                          csv_rows, mm1k_loss, qos_check, validate_oracle,
                          write_csv)
from secsim.cli import main
from secsim.config import ConfigError, ExperimentConfig, parse_config_file
from secsim.metrics import UndefinedMetricError, summarize
from secsim.traffic import run_experiment


def mm1k_loss_markov(rho, capacity):
    """Independent oracle: stationary distribution of the birth-death chain.

    Solves pi Q = 0 numerically instead of using the closed form.
    """
    n = capacity + 1
    lam, mu = rho, 1.0
    q = np.zeros((n, n))
    for i in range(n):
        if i < capacity:
            q[i, i + 1] = lam
        if i > 0:
            q[i, i - 1] = mu
        q[i, i] = -q[i].sum()
    a = np.vstack([q.T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    return float(pi[capacity])


class TestMm1kAnalytic:
    def test_rho_half_k10(self):
        assert mm1k_loss(0.5, 10) == pytest.approx(4.885e-4, rel=1e-3)

    def test_rho_one_is_uniform_limit(self):
        assert mm1k_loss(1.0, 10) == pytest.approx(1.0 / 11.0)

    def test_rho_above_one_matches_markov_chain(self):
        # (0.2 * 1.2^10) / (1.2^11 - 1), cross-checked numerically.
        expected = (0.2 * 1.2 ** 10) / (1.2 ** 11 - 1.0)
        assert mm1k_loss(1.2, 10) == pytest.approx(expected, rel=1e-12)
        assert mm1k_loss(1.2, 10) == pytest.approx(mm1k_loss_markov(1.2, 10), rel=1e-9)

    @pytest.mark.parametrize("rho", [0.3, 0.5, 0.9, 1.0, 1.2, 2.0])
    def test_closed_form_equals_markov_chain(self, rho):
        assert mm1k_loss(rho, 10) == pytest.approx(mm1k_loss_markov(rho, 10), rel=1e-8)


class TestQosGate:
    def test_discrete_automation_all_pass(self):
        check = qos_check(latency_us=8000.0, throughput_bps=12e6, drop_pct=0.01,
                          profile=QOS_PROFILES["discrete-automation"])
        assert (check.latency_ok, check.rate_ok, check.reliability_ok) == (True, True, True)

    def test_high_voltage_latency_fail(self):
        check = qos_check(latency_us=8000.0, throughput_bps=12e6, drop_pct=0.0001,
                          profile=QOS_PROFILES["electricity-distribution-high"])
        assert not check.latency_ok
        assert check.rate_ok and check.reliability_ok

    def test_its_backhaul_reliability_fail(self):
        check = qos_check(latency_us=8000.0, throughput_bps=12e6, drop_pct=0.1,
                          profile=QOS_PROFILES["its-infrastructure-backhaul"])
        assert not check.reliability_ok
        assert check.latency_ok and check.rate_ok

    def test_profiles_cover_the_six_applications(self):
        assert len(QOS_PROFILES) == 6
        p = QOS_PROFILES["process-automation-remote"]
        assert (p.max_latency_ms, p.min_rate_bps, p.min_reliability_pct) == (60.0, 1e6, 99.999)

    def test_monotone_improvement_never_flips_pass_to_fail(self):
        base = dict(latency_us=8000.0, throughput_bps=12e6, drop_pct=0.05)
        for profile in QOS_PROFILES.values():
            before = qos_check(**base, profile=profile)
            better = qos_check(latency_us=base["latency_us"] * 0.5,
                               throughput_bps=base["throughput_bps"] * 2,
                               drop_pct=base["drop_pct"] * 0.1, profile=profile)
            for attr in ("latency_ok", "rate_ok", "reliability_ok"):
                assert not (getattr(before, attr) and not getattr(better, attr))

    def test_undefined_metric_rejected(self):
        with pytest.raises(UndefinedMetricError):
            qos_check(None, 1e6, 0.0, QOS_PROFILES["discrete-automation"])


class TestCsv:
    def test_header_is_stable(self):
        assert CSV_HEADER == ("scenario,mode,placement,transport,rate_pps,rep,"
                              "throughput_bps,latency_us,jitter_us,drop_pct,"
                              "overflow_drops,nat_drops,seed,"
                              "throughput_hw,latency_hw,jitter_hw,drop_hw")

    def test_per_rep_rows_plus_summary(self, tmp_path):
        cfg = ExperimentConfig(rate_pps=2000, duration_s=0.05, reps=3, seed=1).validate()
        traces = run_experiment(cfg)
        rows = csv_rows(cfg, traces)
        assert len(rows) == 4
        assert rows[-1].split(",")[CSV_COLUMNS.index("rep")] == "mean"
        for row in rows:
            assert len(row.split(",")) == len(CSV_COLUMNS)
        path = tmp_path / "out.csv"
        write_csv(str(path), rows)
        lines = path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 5

    def test_sub_capacity_run_has_negligible_drop(self):
        # Well below the tap-mode chain's NAT capacity, loss stays ~0.
        cfg = ExperimentConfig(scenario="scenario1_ids", rate_pps=1000,
                               duration_s=0.2, reps=3, seed=2).validate()
        summary = summarize(run_experiment(cfg))
        assert summary.drop_pct == pytest.approx(0.0, abs=1e-9)


class TestSweep:
    def test_three_rates_three_summary_rows(self):
        cfg = ExperimentConfig(rate_pps=1000, duration_s=0.02, reps=2, seed=3).validate()
        rows = cmd_sweep(cfg, [500.0, 1000.0, 2000.0])
        assert len(rows) == 3
        rates = [float(r.split(",")[CSV_COLUMNS.index("rate_pps")]) for r in rows]
        assert rates == [500.0, 1000.0, 2000.0]

    def test_both_modes_interleaved_and_tagged(self):
        cfg = ExperimentConfig(rate_pps=1000, duration_s=0.02, reps=2, seed=3).validate()
        rows = cmd_sweep(cfg, [500.0, 1000.0], modes=["ids", "ips"])
        tags = [(float(r.split(",")[4]), r.split(",")[1]) for r in rows]
        assert tags == [(500.0, "ids"), (500.0, "ips"), (1000.0, "ids"), (1000.0, "ips")]

    def test_empty_rate_list_is_an_error(self):
        cfg = ExperimentConfig().validate()
        with pytest.raises(ValueError):
            cmd_sweep(cfg, [])


class TestValidateOracle:
    def test_rows_and_tolerance_at_moderate_load(self):
        rows = validate_oracle([1.2], capacity=10, offered_per_rep=2000, reps=5)
        assert len(rows) == 1
        row = rows[0]
        assert row.analytic_loss == pytest.approx(mm1k_loss(1.2, 10))
        assert row.abs_error < 0.05


class TestConfigFile:
    def test_round_trip_and_overrides(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("# comment\nscenario = scenario2_ips\nrate_pps = 2500\n"
                        "transport = tcp\nreps = 4\nids_shared_cpu = false\n")
        cfg = parse_config_file(str(path))
        assert cfg.scenario == "scenario2_ips"
        assert cfg.rate_pps == 2500.0
        assert cfg.transport == "tcp"
        assert cfg.reps == 4

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("no_such_knob = 5\n")
        with pytest.raises(ConfigError, match="no_such_knob"):
            parse_config_file(str(path))

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("reps = many\n")
        with pytest.raises(ConfigError):
            parse_config_file(str(path))

    def test_validation_catches_unknown_scenario(self):
        with pytest.raises(ConfigError, match="scenario"):
            ExperimentConfig(scenario="scenario9").validate()


class TestCli:
    def test_run_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        code = main(["run", "--rate", "2000", "--duration", "0.05", "--reps", "2",
                     "--seed", "4", "--out", str(out)])
        assert code == 0
        assert out.read_text().splitlines()[0] == CSV_HEADER

    def test_unknown_scenario_exits_one(self, capsys):
        assert main(["run", "--scenario", "bogus", "--rate", "10",
                     "--duration", "0.01", "--reps", "1"]) == 1

    def test_usage_error_exits_one(self):
        assert main(["sweep"]) == 1  # --rates is required

    def test_qos_check_pass_fail_lines(self, capsys):
        code = main(["qos-check", "--profile", "discrete-automation",
                     "--latency-us", "8000", "--throughput-bps", "12000000",
                     "--drop-pct", "0.01"])
        out = capsys.readouterr().out
        assert code == 0
        assert "latency:     PASS" in out
        assert "rate:        PASS" in out
        assert "reliability: PASS" in out

    def test_qos_check_unknown_profile_exits_one(self, capsys):
        assert main(["qos-check", "--profile", "warp-drive",
                     "--latency-us", "1", "--throughput-bps", "1",
                     "--drop-pct", "0"]) == 1

    def test_qos_check_undefined_metric_exits_two(self, tmp_path):
        # A CSV whose summary row has an empty latency cell gates to exit 2.
        cfg = ExperimentConfig(rate_pps=2000, duration_s=0.05, reps=2, seed=4).validate()
        traces = run_experiment(cfg)
        for trace in traces:
            for rec in trace.records:
                rec.delivered_at = None
        rows = csv_rows(cfg, traces)
        path = tmp_path / "empty.csv"
        write_csv(str(path), rows)
        code = main(["qos-check", "--profile", "discrete-automation",
                     "--csv", str(path)])
        assert code == 2

    def test_rules_check_ok(self, tmp_path, capsys):
        path = tmp_path / "sample.rules"
        path.write_text('alert icmp any any -> any any (msg:"ping"; sid:1;)\n')
        assert main(["rules", "check", str(path)]) == 0
        assert "OK (1 rules)" in capsys.readouterr().out

    def test_rules_check_bad_file_exits_one(self, tmp_path, capsys):
        path = tmp_path / "broken.rules"
        path.write_text("alert tcp any any ->\n")
        assert main(["rules", "check", str(path)]) == 1

    def test_validate_oracle_prints_table(self, capsys):
        code = main(["validate-oracle", "--rho", "1.0", "--queue-capacity", "10",
                     "--offered", "500", "--reps", "2"])
        out = capsys.readouterr().out
        assert code == 0
        assert "analytic" in out
        assert "0.0909" in out

    def test_sweep_with_comma_mode_list(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--rates", "500,1000", "--mode", "ids,ips",
                     "--duration", "0.02", "--reps", "2", "--seed", "3",
                     "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 5  # header + 2 rates x 2 modes
        modes = [line.split(",")[1] for line in lines[1:]]
        assert modes == ["ids", "ips", "ids", "ips"]

    def test_config_file_flag(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text("rate_pps = 1000\nduration_s = 0.02\nreps = 1\n")
        out = tmp_path / "cfg_run.csv"
        assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert out.exists()

    def test_plot_from_sweep(self, tmp_path):
        pytest.importorskip("matplotlib")
        cfg = ExperimentConfig(rate_pps=1000, duration_s=0.02, reps=2, seed=3).validate()
        csv_path = tmp_path / "sweep.csv"
        cmd_sweep(cfg, [500.0, 1000.0], out_csv=str(csv_path))
        code = main(["plot", "--csv", str(csv_path), "--out-dir", str(tmp_path / "plots"),
                     "--metrics", "throughput_bps,latency_us"])
        assert code == 0
        assert (tmp_path / "plots" / "throughput_bps.svg").exists()
