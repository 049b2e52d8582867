import json
import shutil

import pytest

from tcpshare import cli
from tcpshare.markov import (ChainSpec, distribution_stats, rate_distribution,
                             solve_chain)


# --- plumbing ---------------------------------------------------------------

def test_no_command_is_usage_error(capsys):
    assert cli.main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    assert cli.main(["solve", "--no-such-flag"]) == 1


def test_help_exits_zero():
    assert cli.main(["--help"]) == 0


def test_unknown_reproduce_target_is_usage_error():
    assert cli.main(["reproduce", "fig99"]) == 1


# --- solve ------------------------------------------------------------------

def test_solve_writes_rates_and_summary(tmp_path, capsys):
    rc = cli.main(["solve", "--p-loss", "1e-3", "--outdir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "mean" in out
    assert "cwnd_max auto-selected" in out
    (rates_csv,) = tmp_path.glob("*.rates.csv")
    (summary_json,) = tmp_path.glob("*.summary.json")
    report = json.loads(summary_json.read_text())
    want = distribution_stats(rate_distribution(solve_chain(ChainSpec(p_loss=1e-3))))
    assert report["rate_bps"]["mean"] == pytest.approx(want["mean"])
    header = rates_csv.read_text().splitlines()[0]
    assert header == "cwnd,rate_bps,probability,cdf"


def test_solve_json_report(tmp_path, capsys):
    rc = cli.main(["solve", "--p-loss", "1e-3", "--json",
                   "--outdir", str(tmp_path)])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["p_loss"] == 1e-3
    assert report["cwnd_max_auto"] is True
    assert report["lognormal_ks"] > 0


def test_solve_rejects_bad_loss_probability(tmp_path, capsys):
    assert cli.main(["solve", "--p-loss", "1.5",
                     "--outdir", str(tmp_path)]) == 1
    assert "p_loss" in capsys.readouterr().err


# --- simulate ---------------------------------------------------------------

def test_simulate_env_outdir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TCPSHARE_OUTDIR", str(tmp_path))
    rc = cli.main(["simulate", "--scenario", "random-drop", "--p-loss", "2e-3",
                   "--duration", "120", "--warmup", "20", "--seed", "9"])
    assert rc == 0
    first = capsys.readouterr().out.splitlines()[0]
    rid = first.split()[1]
    assert (tmp_path / f"{rid}.trace.csv").exists()
    assert (tmp_path / f"{rid}.trace.json").exists()


def test_simulate_identical_flags_identical_run(tmp_path, capsys):
    args = ["simulate", "--scenario", "random-drop", "--p-loss", "2e-3",
            "--duration", "120", "--warmup", "20", "--seed", "9",
            "--outdir", str(tmp_path), "--json"]
    assert cli.main(args) == 0
    first = json.loads(capsys.readouterr().out)
    assert cli.main(args) == 0
    second = json.loads(capsys.readouterr().out)
    assert first["run_id"] == second["run_id"]
    assert first["flows"] == second["flows"]


def test_simulate_shared_mixed_flavors(tmp_path, capsys):
    rc = cli.main(["simulate", "--scenario", "shared",
                   "--flows", "1xreno,1xcubic", "--capacity", "10e6",
                   "--rtt", "0.05", "--duration", "90", "--warmup", "10",
                   "--outdir", str(tmp_path), "--json"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert [f["flavor"] for f in report["flows"]] == ["reno", "cubic"]
    total = sum(f["mean_bps"] for f in report["flows"])
    assert total == pytest.approx(10e6, rel=0.12)


def test_simulate_finite_reports_completions(tmp_path, capsys):
    rc = cli.main(["simulate", "--scenario", "finite", "--flows", "2xreno",
                   "--volume", "1e6", "--repetitions", "3", "--idle-gap", "2",
                   "--capacity", "10e6", "--rtt", "0.05", "--duration", "400",
                   "--warmup", "30", "--outdir", str(tmp_path), "--json"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["completions"]["count"] == 3
    assert report["completions"]["median_s"] > 0


def test_simulate_rejects_flows_for_random_drop(capsys):
    rc = cli.main(["simulate", "--scenario", "random-drop", "--p-loss", "1e-3",
                   "--flows", "2xreno"])
    assert rc == 1
    assert "--flavor" in capsys.readouterr().err


def test_simulate_rejects_p_loss_on_shared(capsys):
    rc = cli.main(["simulate", "--scenario", "shared", "--p-loss", "1e-3"])
    assert rc == 1
    assert "RandomDrop" in capsys.readouterr().err


CONFIG = """\
scenario = random-drop
p_loss = 2e-3
duration = 120
warmup = 20
seed = 9

[flow]
flavor = reno
initial_cwnd = 12
"""


def test_simulate_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CONFIG)
    rc = cli.main(["simulate", "--config", str(cfg),
                   "--outdir", str(tmp_path), "--json"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert (tmp_path / (report["run_id"] + ".trace.csv")).exists()


def test_simulate_config_rejects_extra_scenario_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CONFIG)
    rc = cli.main(["simulate", "--config", str(cfg), "--seed", "3"])
    assert rc == 1
    assert "--config replaces" in capsys.readouterr().err


def test_simulate_missing_config_is_io_error(tmp_path, capsys):
    rc = cli.main(["simulate", "--config", str(tmp_path / "absent.cfg")])
    assert rc == 3


def test_parse_flows_spec():
    flows = cli._parse_flows("1xreno,2xcubic", 0.1, 1514, 2.0)
    assert [f.flavor.value for f in flows] == ["reno", "cubic", "cubic"]
    (one,) = cli._parse_flows("cubic", 0.05, 1400, 2.0)
    assert one.tcp.flavor.value == "cubic"
    assert one.tcp.rtt_s == 0.05


def test_parse_flows_rejects_junk():
    with pytest.raises(ValueError):
        cli._parse_flows("twoxreno", 0.1, 1514, 2.0)
    with pytest.raises(ValueError):
        cli._parse_flows("0xreno", 0.1, 1514, 2.0)
    with pytest.raises(ValueError):
        cli._parse_flows("2xtahoe", 0.1, 1514, 2.0)


# --- analyze ----------------------------------------------------------------

@pytest.fixture(scope="module")
def stored_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("cliout")
    rc = cli.main(["simulate", "--scenario", "random-drop", "--p-loss", "2e-3",
                   "--duration", "240", "--warmup", "30", "--seed", "9",
                   "--outdir", str(out)])
    assert rc == 0
    (trace,) = out.glob("*.trace.csv")
    return out, trace


def test_analyze_writes_reports(stored_run, capsys):
    out, trace = stored_run
    rc = cli.main(["analyze", str(trace), "--outdir", str(out), "--json",
                   "--quantiles", "5,25,50,95", "--intervals", "1,4,16"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report["stddev_vs_interval_bps"]) == {"1", "4", "16"}
    st = report["flows"][0]["rate_bps"]
    assert st["q25"] <= st["q50"] <= st["q95"]
    assert report["flows"][0]["sawtooth_s"] > 0
    from pathlib import Path
    hist = Path(report["histogram_csv"])
    assert hist.read_text().splitlines()[0] == "bin_left_bps,bin_right_bps,probability"
    stddev = Path(report["stddev_csv"])
    assert stddev.read_text().splitlines()[0] == "interval_s,stddev_bps"


def test_analyze_prose_report(stored_run, capsys):
    out, trace = stored_run
    rc = cli.main(["analyze", str(trace), "--outdir", str(out)])
    assert rc == 0
    txt = capsys.readouterr().out
    assert "flow 0 reno" in txt
    assert "convergence interval" in txt


def test_analyze_missing_trace_is_io_error(tmp_path, capsys):
    rc = cli.main(["analyze", str(tmp_path / "no.trace.csv")])
    assert rc == 3


def test_analyze_corrupt_trace_is_io_error(stored_run, tmp_path, capsys):
    _, trace = stored_run
    meta = trace.parent / (trace.name[:-4] + ".json")
    shutil.copy(meta, tmp_path / meta.name)
    lines = trace.read_text().splitlines()
    (tmp_path / trace.name).write_text("\n".join(lines[:-1]) + "\n")
    rc = cli.main(["analyze", str(tmp_path / trace.name)])
    assert rc == 3
    assert "error" in capsys.readouterr().err


def test_analyze_insufficient_data(tmp_path, capsys):
    rc = cli.main(["simulate", "--scenario", "random-drop", "--p-loss", "2e-3",
                   "--duration", "60", "--warmup", "300", "--seed", "2",
                   "--outdir", str(tmp_path)])
    assert rc == 0
    (trace,) = tmp_path.glob("*.trace.csv")
    capsys.readouterr()
    rc = cli.main(["analyze", str(trace), "--outdir", str(tmp_path)])
    assert rc == 1
    assert "insufficient" in capsys.readouterr().err


# --- reproduce --------------------------------------------------------------

def test_reproduce_fig3(tmp_path, capsys):
    rc = cli.main(["reproduce", "fig3", "--outdir", str(tmp_path)])
    assert rc == 0
    dat = (tmp_path / "fig3.dat").read_text()
    assert dat.count("# p_loss=") == 5
    comparison = json.loads((tmp_path / "fig3.comparison.json").read_text())
    assert comparison["ks_by_p_loss"]["1e-05"] < 0.05
    assert comparison["within"]["0.1"] is False


def test_reproduce_fig2_prints_desk_note(tmp_path, capsys):
    rc = cli.main(["reproduce", "fig2", "--outdir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "desk scale" in out
    comparison = json.loads((tmp_path / "fig2.comparison.json").read_text())
    assert comparison["published_numeric"]["q50_mbps"] == 10.0
    assert comparison["simulated"]["mean_mbps"] == pytest.approx(10.7, rel=0.25)
    dat = (tmp_path / "fig2.dat").read_text()
    assert dat.count("\n\n") == 1  # two gnuplot blocks


# --- verify -----------------------------------------------------------------

def test_verify_reports_and_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli, "_CHECKS", [
        (1, "alpha", lambda: (True, "fine")),
        (5, "beta", lambda: (False, "off by two")),
    ])
    rc = cli.main(["verify"])
    out = capsys.readouterr().out
    assert rc == 2
    assert "1 PASS alpha" in out
    assert "5 FAIL beta" in out
    assert "[fidelity-sensitive]" in out
    assert "1/2 checks passed" in out


def test_verify_quick_subset(monkeypatch, capsys):
    ran = []

    def make(num):
        def check():
            ran.append(num)
            return True, "ok"
        return check

    monkeypatch.setattr(cli, "_CHECKS",
                        [(n, f"c{n}", make(n)) for n in (1, 5, 10)])
    rc = cli.main(["verify", "--quick"])
    assert rc == 0
    assert ran == [1, 10]
    assert "2/2 checks passed" in capsys.readouterr().out
