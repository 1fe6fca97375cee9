"""End-to-end command-line tests: subcommand outputs, manifests, reruns,
validation errors, and determinism across worker counts."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from rtqec.cli import build_parser, main, parse_injection
from rtqec.dataset import read_defects, read_shots, read_shots_header
from rtqec.sim import InjectionSpec
from rtqec.syndrome import defect_arrays

PUBLISHED_P = (4736, 13992, 29700, 52224, 83304, 123212, 172160, 230364)
PUBLISHED_DSP = (399, 1094, 2191, 3591, 5337, 7533, 9975, 12757)
PUBLISHED_LATENCY = (124, 205, 291, 372, 453, 538, 620, 701)


def run_cli(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --------------------------------------------------------------------------
# injection flag parsing


def test_parse_injection_forms() -> None:
    inj = parse_injection("D2:X:40deg:each-round")
    assert inj == InjectionSpec("D2", "X", 40.0, "each-round")
    assert parse_injection("D2:X:40deg") == InjectionSpec("D2", "X", 40.0, "each-round")
    assert parse_injection("D5:z:90") == InjectionSpec("D5", "Z", 90.0, "each-round")
    assert parse_injection("D9:X:20deg:3").schedule == 3
    assert parse_injection("D9:X:20deg:round-3").schedule == 3


def test_parse_injection_errors() -> None:
    for bad in ("D2", "D2:X", "D2:X:fortydeg", "D2:X:40deg:sometimes",
                "A1:X:40deg", "D2:Y:40deg"):
        with pytest.raises(ValueError):
            parse_injection(bad)


# --------------------------------------------------------------------------
# scale


def test_scale_reproduces_published_table(capsys) -> None:
    code, out, _ = run_cli(capsys, "scale", "--json")
    assert code == 0
    doc = json.loads(out)
    rows = doc["summary"]["rows"]
    assert tuple(r["p_lstm"] for r in rows) == PUBLISHED_P
    for row, dsp, lat in zip(rows, PUBLISHED_DSP, PUBLISHED_LATENCY):
        assert abs(row["dsp"] - dsp) <= 10
        assert abs(row["latency_ns"] - lat) <= 1


def test_scale_single_row_and_formats(capsys, tmp_path) -> None:
    code, out, _ = run_cli(capsys, "scale", "--distances", "3")
    assert code == 0
    assert "| 3 | 4 | 32 | 4736 | 399 | 124 |" in out

    out_file = tmp_path / "table.csv"
    code, _, _ = run_cli(capsys, "scale", "--format", "csv",
                         "--out", str(out_file))
    assert code == 0
    lines = out_file.read_text().splitlines()
    assert lines[0] == "d,dim_x,h,p_lstm,dsp,latency_ns,utilization_percent"
    assert lines[1].startswith("3,4,32,4736,399,124,")
    assert len(lines) == 9
    assert (tmp_path / "table.csv.manifest.json").exists()


def test_scale_capacity_and_bad_distance(capsys) -> None:
    code, out, _ = run_cli(capsys, "scale", "--capacity", "12288")
    assert code == 0
    assert "max distance 15 (one decoder), 11 (both kinds)" in out

    code, _, err = run_cli(capsys, "scale", "--distances", "3,4")
    assert code == 1
    assert "odd integer" in err


# --------------------------------------------------------------------------
# budget


def test_budget_default_and_verdict_flip(capsys) -> None:
    code, out, _ = run_cli(capsys, "budget", "--json")
    assert code == 0
    doc = json.loads(out)["summary"]
    assert doc["decoder_subtotal_ns"] == 148.0
    assert doc["electronics_subtotal_ns"] == 180.0
    assert doc["total_ns"] == 550.0
    assert doc["feasible"] is True

    code, out, _ = run_cli(capsys, "budget", "--delay", "500")
    assert code == 0
    assert "INFEASIBLE" in out

    code, out, _ = run_cli(capsys, "budget", "--delay", "549.9")
    assert "INFEASIBLE" in out
    code, out, _ = run_cli(capsys, "budget", "--delay", "550")
    assert "INFEASIBLE" not in out and "feasible" in out


def test_budget_override_recomputes_subtotals(capsys) -> None:
    code, out, _ = run_cli(capsys, "budget", "--nn-core-ns", "60", "--json")
    assert code == 0
    doc = json.loads(out)["summary"]
    assert doc["decoder_subtotal_ns"] == 84.0
    assert doc["total_ns"] == 486.0


def test_budget_backlog_line(capsys) -> None:
    code, out, _ = run_cli(capsys, "budget", "--qec-cycle-ns", "150", "--json")
    doc = json.loads(out)["summary"]
    assert doc["backlog"]["backlog_ns_per_round"] == 34.0
    code, out, _ = run_cli(capsys, "budget", "--qec-cycle-ns", "1250", "--json")
    assert json.loads(out)["summary"]["backlog"]["backlog_cycles_per_round"] == 0.0


# --------------------------------------------------------------------------
# simulate / defects


def test_simulate_writes_dataset_and_manifest(capsys, tmp_path) -> None:
    out = tmp_path / "run.qecds"
    code, stdout, _ = run_cli(
        capsys, "simulate", "--rounds", "3", "--shots", "500", "--seed", "11",
        "--inject", "D2:X:40deg:each-round", "--out", str(out), "--json")
    assert code == 0
    doc = json.loads(stdout)
    assert doc["command"] == "simulate"
    assert doc["seed"] == 11
    assert doc["versions"]["shot_format"] == "QECDS1"

    header = read_shots_header(out)
    assert header.shots == 500 and header.rounds == 3 and header.basis == "Z"
    assert header.injections == (InjectionSpec("D2", "X", 40.0, "each-round"),)

    manifest = json.loads((tmp_path / "run.qecds.manifest.json").read_text())
    assert manifest["params"]["seed"] == 11
    assert manifest["outputs"]["dataset"] == str(out)


def test_simulate_generates_seed_when_absent(capsys, tmp_path) -> None:
    out = tmp_path / "auto.qecds"
    code, stdout, _ = run_cli(
        capsys, "simulate", "--rounds", "2", "--shots", "10",
        "--out", str(out), "--json")
    assert code == 0
    seed = json.loads(stdout)["seed"]
    assert isinstance(seed, int) and seed >= 0
    assert read_shots_header(out).seed == seed


def test_simulate_conflicting_injection_rejected(capsys, tmp_path) -> None:
    code, _, err = run_cli(
        capsys, "simulate", "--rounds", "2", "--shots", "10", "--basis", "Z",
        "--inject", "D2:Z:40deg", "--out", str(tmp_path / "x.qecds"))
    assert code == 1
    assert "conflicts with basis Z" in err
    assert not (tmp_path / "x.qecds").exists()


def test_simulate_worker_count_does_not_change_bytes(capsys, tmp_path) -> None:
    a = tmp_path / "w1.qecds"
    b = tmp_path / "w2.qecds"
    for path, workers in ((a, "1"), (b, "2")):
        code, _, _ = run_cli(
            capsys, "simulate", "--rounds", "3", "--shots", "9000",
            "--seed", "5", "--workers", workers, "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_defects_companion_matches_direct_conversion(capsys, tmp_path) -> None:
    shots = tmp_path / "s.qecds"
    run_cli(capsys, "simulate", "--rounds", "3", "--shots", "300",
            "--seed", "2", "--out", str(shots))
    defects = tmp_path / "s.qecdf"
    code, _, _ = run_cli(capsys, "defects", "--input", str(shots),
                         "--out", str(defects))
    assert code == 0

    header, anc, data, tx, tz = read_shots(shots)
    want_x, want_m = defect_arrays(header.layout(), header.basis, anc, data)
    dheader, got_x, got_m, dtx, dtz = read_defects(defects)
    assert dheader == header
    assert np.array_equal(got_x, want_x)
    assert np.array_equal(got_m, want_m)
    assert np.array_equal(dtx, tx) and np.array_equal(dtz, tz)


# --------------------------------------------------------------------------
# evaluate


def test_evaluate_live_noiseless_is_perfect(capsys, tmp_path) -> None:
    noise_file = tmp_path / "zero.json"
    noise_file.write_text(json.dumps(
        {"p1": 0.0, "p2": 0.0, "p_idle": 0.0, "p_meas": 0.0}))
    prefix = tmp_path / "clean"
    code, _, _ = run_cli(
        capsys, "evaluate", "--rounds", "3", "--decoder", "mwpm",
        "--shots", "64", "--seed", "1", "--noise-file", str(noise_file),
        "--out-prefix", str(prefix))
    assert code == 0
    lines = (tmp_path / "clean.csv").read_text().splitlines()
    assert lines[0] == "n,fidelity,stderr"
    assert [ln.split(",")[1] for ln in lines[1:]] == ["1.0", "1.0", "1.0"]


def test_evaluate_live_csv_json_and_config_file(capsys, tmp_path) -> None:
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "rounds": 3, "decoder": "mwpm", "feedback_period": 1,
        "noise": {"p1": 0.001, "p2": 0.005, "p_idle": 0.002, "p_meas": 0.01},
    }))
    prefix = tmp_path / "live"
    code, stdout, _ = run_cli(
        capsys, "evaluate", "--config", str(cfg), "--shots", "400",
        "--seed", "4", "--out-prefix", str(prefix), "--json")
    assert code == 0
    doc = json.loads(stdout)
    assert doc["command"] == "evaluate"
    assert doc["params"]["config"]["feedback_period"] == 1

    summary = json.loads((tmp_path / "live.json").read_text())
    assert summary["rounds"] == [1, 2, 3]
    assert summary["fit"] is not None
    assert all(0.0 <= f <= 1.0 for f in summary["fidelity"])
    rows = (tmp_path / "live.csv").read_text().splitlines()
    assert len(rows) == 4


def test_evaluate_flag_overrides_config(capsys, tmp_path) -> None:
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rounds": 2, "decoder": "mwpm"}))
    prefix = tmp_path / "ovr"
    code, stdout, _ = run_cli(
        capsys, "evaluate", "--config", str(cfg), "--decoder", "none",
        "--rounds", "3", "--shots", "50", "--seed", "0",
        "--out-prefix", str(prefix), "--json")
    assert code == 0
    params = json.loads(stdout)["params"]
    assert params["config"]["decoder"] == "none"
    assert params["config"]["rounds"] == 3


def test_evaluate_plot_does_not_change_csv(capsys, tmp_path) -> None:
    args = ["evaluate", "--rounds", "3", "--decoder", "mwpm", "--shots",
            "300", "--seed", "9"]
    plain = tmp_path / "plain"
    plotted = tmp_path / "plotted"
    code, _, _ = run_cli(capsys, *args, "--out-prefix", str(plain))
    assert code == 0
    code, _, _ = run_cli(capsys, *args, "--out-prefix", str(plotted), "--plot")
    assert code == 0
    assert (tmp_path / "plain.csv").read_bytes() == (tmp_path / "plotted.csv").read_bytes()
    svg = (tmp_path / "plotted.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "</svg>" in svg


def test_evaluate_dataset_mode_and_decoder_gain(capsys, tmp_path) -> None:
    shots = tmp_path / "noisy.qecds"
    run_cli(capsys, "simulate", "--rounds", "4", "--shots", "4000",
            "--seed", "21", "--out", str(shots))
    results = {}
    for decoder in ("mwpm", "none"):
        prefix = tmp_path / f"ds_{decoder}"
        code, _, _ = run_cli(capsys, "evaluate", "--dataset", str(shots),
                             "--decoder", decoder, "--out-prefix", str(prefix))
        assert code == 0
        summary = json.loads((tmp_path / f"ds_{decoder}.json").read_text())
        assert summary["mode"] == "dataset"
        assert summary["rounds"] == [4]
        results[decoder] = summary["fidelity"][0]
    assert results["mwpm"] > results["none"]


def test_evaluate_dataset_mode_rejects_live_flags(capsys, tmp_path) -> None:
    shots = tmp_path / "d.qecds"
    run_cli(capsys, "simulate", "--rounds", "2", "--shots", "20",
            "--seed", "1", "--out", str(shots))
    code, _, err = run_cli(
        capsys, "evaluate", "--dataset", str(shots), "--rounds", "5",
        "--out-prefix", str(tmp_path / "bad"))
    assert code == 1
    assert "--rounds" in err and "dataset" in err


def test_evaluate_nn_needs_weights(capsys, tmp_path) -> None:
    code, _, err = run_cli(
        capsys, "evaluate", "--rounds", "2", "--decoder", "nn",
        "--shots", "10", "--seed", "0",
        "--out-prefix", str(tmp_path / "nn"))
    assert code == 1
    assert "needs --weights" in err


def test_evaluate_nn_runs_with_weight_file(capsys, tmp_path) -> None:
    from rtqec.qlstm import QLstmWeights

    rng = np.random.default_rng(3)
    wfile = tmp_path / "w.qecnw"
    QLstmWeights.random(rng, "Z", 4, 8).save(wfile)
    prefix = tmp_path / "nn"
    code, _, _ = run_cli(
        capsys, "evaluate", "--rounds", "2", "--decoder", "nn",
        "--weights", str(wfile), "--shots", "64", "--seed", "0",
        "--out-prefix", str(prefix))
    assert code == 0
    summary = json.loads((tmp_path / "nn.json").read_text())
    assert len(summary["fidelity"]) == 2

    wrong_kind = tmp_path / "wx.qecnw"
    QLstmWeights.random(rng, "X", 4, 8).save(wrong_kind)
    code, _, err = run_cli(
        capsys, "evaluate", "--rounds", "2", "--decoder", "nn",
        "--weights", str(wrong_kind), "--shots", "16", "--seed", "0",
        "--out-prefix", str(tmp_path / "nn2"))
    assert code == 1
    assert "X-type defects" in err


# --------------------------------------------------------------------------
# rerun


def test_rerun_reproduces_simulate_bytes(capsys, tmp_path) -> None:
    out = tmp_path / "orig.qecds"
    run_cli(capsys, "simulate", "--rounds", "3", "--shots", "600",
            "--seed", "17", "--out", str(out))
    replay = tmp_path / "replay"
    code, _, _ = run_cli(capsys, "rerun",
                         str(tmp_path / "orig.qecds.manifest.json"),
                         "--out-dir", str(replay))
    assert code == 0
    assert (replay / "orig.qecds").read_bytes() == out.read_bytes()


def test_rerun_reproduces_evaluation_csv(capsys, tmp_path) -> None:
    prefix = tmp_path / "ev"
    run_cli(capsys, "evaluate", "--rounds", "3", "--decoder", "mwpm",
            "--shots", "500", "--seed", "23", "--feedback-period", "1",
            "--out-prefix", str(prefix))
    replay = tmp_path / "replay"
    code, _, _ = run_cli(capsys, "rerun", str(tmp_path / "ev.manifest.json"),
                         "--out-dir", str(replay))
    assert code == 0
    assert (replay / "ev.csv").read_bytes() == (tmp_path / "ev.csv").read_bytes()
    assert (replay / "ev.json").read_bytes() == (tmp_path / "ev.json").read_bytes()


def test_rerun_unknown_command_rejected(capsys, tmp_path) -> None:
    bad = tmp_path / "bad.manifest.json"
    bad.write_text(json.dumps({"command": "frobnicate", "params": {},
                               "outputs": {}}))
    code, _, err = run_cli(capsys, "rerun", str(bad))
    assert code == 1
    assert "frobnicate" in err


# --------------------------------------------------------------------------
# interface contracts


def test_help_documents_csv_schema() -> None:
    parser = build_parser()
    text = parser.format_help()
    assert "n,fidelity,stderr" in text
    assert "d,dim_x,h,p_lstm,dsp,latency_ns,utilization_percent" in text


def test_every_command_supports_json(capsys, tmp_path) -> None:
    shots = tmp_path / "j.qecds"
    cases = [
        ("simulate", "--rounds", "2", "--shots", "10", "--seed", "0",
         "--out", str(shots), "--json"),
        ("defects", "--input", str(shots), "--out", str(tmp_path / "j.qecdf"),
         "--json"),
        ("evaluate", "--rounds", "2", "--decoder", "none", "--shots", "10",
         "--seed", "0", "--out-prefix", str(tmp_path / "j"), "--json"),
        ("scale", "--json"),
        ("budget", "--json"),
        ("rerun", str(tmp_path / "j.manifest.json"), "--out-dir",
         str(tmp_path / "jr"), "--json"),
    ]
    for argv in cases:
        code, out, _ = run_cli(capsys, *argv)
        assert code == 0, argv
        doc = json.loads(out)  # stdout must be one JSON document
        assert "command" in doc and "versions" in doc, argv[0]


def test_unknown_flag_exits_nonzero(capsys) -> None:
    with pytest.raises(SystemExit) as exc:
        main(["scale", "--frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()
