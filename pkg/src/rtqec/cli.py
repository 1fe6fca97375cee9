"""Command-line front end: reproducible experiments and plot-ready outputs.

Subcommands
-----------
simulate   sample a memory experiment into a QECDS1 shot file
defects    convert a QECDS1 shot file to its QECDF1 defect companion
evaluate   run the closed loop (live) or score a recorded dataset; CSV + JSON
scale      resource-projection table (CSV/Markdown) and capacity readings
budget     closed-loop latency budget with a feasibility verdict
rerun      re-execute a command from its manifest (byte-identical outputs)

Every file-writing run drops a ``*.manifest.json`` next to its outputs
recording the command, fully resolved parameters (seed included), format
versions, output paths, and wall-clock duration; ``rerun`` replays it.
``--json`` switches stdout to one machine-readable JSON document on every
command. All randomness flows from a single ``--seed``; when absent, a
generated seed is recorded in the manifest.

CSV schemas
-----------
evaluate  header ``n,fidelity,stderr``; one row per memory length; floats are
          written in shortest round-trip (repr) form.
scale     header ``d,dim_x,h,p_lstm,dsp,latency_ns,utilization_percent``.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
import time
from dataclasses import dataclass, fields as dataclass_fields
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .dataset import (
    DatasetHeader,
    DefectWriter,
    ShotWriter,
    iter_shot_chunks,
    read_shots_header,
)
from .layout import build_layout
from .loop import LatencyBudget, LoopConfig, check_throughput, run
from .mwpm import build_graph, decode_batch
from .qlstm import QLstmDecoder, QLstmWeights
from .scaling import PUBLISHED_ROWS, max_supported_distance, project
from .sim import InjectionSpec, NoiseParams, sample_memory_arrays
from .syndrome import basis_kind_columns, defect_arrays

VERSIONS = {
    "package": __version__,
    "shot_format": "QECDS1",
    "defect_format": "QECDF1",
    "weight_format": "QECNW1",
}

_CHUNK = 4096


# --------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    """Everything needed to replay a run: command, resolved parameters,
    seed, format versions, output paths, and how long it took."""

    command: str
    params: dict
    seed: int | None
    outputs: dict
    duration_s: float

    def to_doc(self) -> dict:
        return {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "versions": VERSIONS,
            "outputs": self.outputs,
            "duration_s": round(self.duration_s, 3),
        }

    def write(self, path: str) -> None:
        Path(path).write_text(json.dumps(self.to_doc(), sort_keys=True, indent=2) + "\n")


# --------------------------------------------------------------------------
# flag parsing helpers


def parse_injection(text: str) -> InjectionSpec:
    """``TARGET:AXIS:THETAdeg[:SCHEDULE]``, e.g. ``D2:X:40deg:each-round``.

    SCHEDULE is ``each-round`` (default), a 1-based round number, or
    ``round-K``.
    """
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(
            f"--inject wants TARGET:AXIS:THETAdeg[:SCHEDULE], got {text!r}")
    target, axis, theta_txt = parts[0], parts[1].upper(), parts[2]
    theta_txt = theta_txt.lower().removesuffix("deg")
    try:
        theta = float(theta_txt)
    except ValueError:
        raise ValueError(f"bad injection angle {parts[2]!r} in {text!r}") from None
    schedule: str | int = "each-round"
    if len(parts) == 4 and parts[3] != "each-round":
        sched_txt = parts[3].removeprefix("round-")
        try:
            schedule = int(sched_txt)
        except ValueError:
            raise ValueError(
                f"bad injection schedule {parts[3]!r} in {text!r}; use "
                "'each-round', a round number, or 'round-K'") from None
    return InjectionSpec(target, axis, theta, schedule)


def _check_injection_basis(injections, basis: str) -> None:
    for inj in injections:
        if inj.axis == basis:
            raise ValueError(
                f"injection {inj.target}:{inj.axis} conflicts with basis "
                f"{basis}: a {inj.axis} rotation commutes with the tracked "
                f"{basis}-type logical observable and can never change the "
                "outcome; inject the other axis or measure the other basis")


def _load_noise(path: str | None) -> NoiseParams:
    if path is None:
        return NoiseParams()
    return NoiseParams.from_dict(json.loads(Path(path).read_text()))


def _resolve_seed(seed: int | None) -> int:
    return seed if seed is not None else secrets.randbits(63)


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"bad {what} {text!r}; want comma-separated integers") from None


def _load_weights(path: str, basis: str, distance: int) -> QLstmWeights:
    weights = QLstmWeights.load(path)
    if weights.kind != basis:
        raise ValueError(
            f"weight file {path} decodes {weights.kind}-type defects but the "
            f"experiment tracks the {basis} basis")
    n_kind = len(basis_kind_columns(build_layout(distance), basis))
    if weights.input_size != n_kind:
        raise ValueError(
            f"weight file {path} expects {weights.input_size} defect inputs "
            f"but distance {distance} produces {n_kind}")
    return weights


# --------------------------------------------------------------------------
# CSV / plot emission


def _write_csv(path: str, rows: list[tuple[int, float, float]]) -> None:
    lines = ["n,fidelity,stderr"]
    for n, f, e in rows:
        lines.append(f"{n},{float(f)!r},{float(e)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _scale_csv(rows: list[dict]) -> str:
    lines = ["d,dim_x,h,p_lstm,dsp,latency_ns,utilization_percent"]
    for r in rows:
        lines.append(
            f"{r['d']},{r['dim_x']},{r['h']},{r['p_lstm']},{r['dsp']},"
            f"{r['latency_ns']},{r['utilization_percent']}")
    return "\n".join(lines) + "\n"


def _scale_markdown(rows: list[dict]) -> str:
    head = ("| d | dim_x | h | P_lstm | DSP | latency (ns) | utilization (%) |")
    sep = "|---|---|---|---|---|---|---|"
    body = [
        f"| {r['d']} | {r['dim_x']} | {r['h']} | {r['p_lstm']} | {r['dsp']} "
        f"| {r['latency_ns']} | {r['utilization_percent']} |"
        for r in rows
    ]
    return "\n".join([head, sep, *body]) + "\n"


def _write_plot(path: str, rows: list[tuple[int, float, float]], fit) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "rtqec"
    ns = [r[0] for r in rows]
    fs = [r[1] for r in rows]
    es = [r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.errorbar(ns, fs, yerr=es, fmt="o", capsize=3, label="measured")
    if fit is not None:
        xs = np.linspace(min(ns), max(ns), 200)
        ax.plot(xs, 0.5 + 0.5 * (1 - 2 * fit.eps) ** xs, "-",
                label=f"fit: eps_L = {fit.eps:.4g}")
    ax.set_xlabel("memory rounds n")
    ax.set_ylabel("logical fidelity")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# --------------------------------------------------------------------------
# executors: take fully resolved JSON-safe params + output paths, do the
# work, return a JSON-safe summary. `rerun` calls these directly.


def _exec_simulate(params: dict, outputs: dict) -> dict:
    noise = NoiseParams.from_dict(params["noise"])
    injections = tuple(InjectionSpec.from_dict(d) for d in params["injections"])
    _check_injection_basis(injections, params["basis"])
    layout = build_layout(params["distance"])
    header = DatasetHeader(
        distance=params["distance"], rounds=params["rounds"],
        basis=params["basis"], shots=params["shots"], seed=params["seed"],
        noise=noise, injections=injections,
    )
    with ShotWriter(outputs["dataset"], header) as writer:
        for anc, data, tx, tz in sample_memory_arrays(
            layout, params["basis"], params["rounds"], noise, injections,
            shots=params["shots"], seed=params["seed"],
            workers=params["workers"],
        ):
            writer.write_chunk(anc, data, tx, tz)
    return {"shots": params["shots"], "dataset": outputs["dataset"]}


def _exec_defects(params: dict, outputs: dict) -> dict:
    header = read_shots_header(params["input"])
    layout = header.layout()
    with DefectWriter(outputs["defects"], header) as writer:
        for _h, anc, data, tx, tz in iter_shot_chunks(params["input"], _CHUNK):
            x, x_m = defect_arrays(layout, header.basis, anc, data)
            writer.write_chunk(x, x_m, tx, tz)
    return {"shots": header.shots, "defects": outputs["defects"]}


def _evaluate_dataset(params: dict) -> tuple[list, dict]:
    path = params["dataset"]
    header = read_shots_header(path)
    layout = header.layout()
    cols = basis_kind_columns(layout, header.basis)
    decoder = params["decoder"]
    graph = None
    net = None
    if decoder == "mwpm":
        graph = build_graph(layout, header.rounds, header.noise, basis=header.basis)
    elif decoder == "nn":
        if not params.get("weights"):
            raise ValueError("decoder 'nn' needs --weights")
        net = QLstmDecoder(_load_weights(params["weights"], header.basis,
                                         header.distance))
    support = (layout.logical_z_support if header.basis == "Z"
               else layout.logical_x_support)
    sup_cols = [layout.data_index(q) for q in support]
    good = 0
    total = 0
    for _h, anc, data, _tx, _tz in iter_shot_chunks(path, _CHUNK):
        batch = anc.shape[0]
        x, x_m = defect_arrays(layout, header.basis, anc, data)
        xk = x[:, :, cols]
        if decoder == "mwpm":
            flips, _amb = decode_batch(graph, xk, x_m)
            estimate = flips.astype(np.uint8)
        elif decoder == "nn":
            state = net.reset(batch)
            for r in range(header.rounds):
                state = net.step(state, xk[:, r])
            state = net.step(state, x_m)
            estimate = net.verdict(state).flip.astype(np.uint8)
        else:
            estimate = np.zeros(batch, np.uint8)
        raw = data[:, sup_cols].sum(axis=1).astype(np.uint8) % 2
        good += int(((raw ^ estimate) == 0).sum())
        total += batch
    fidelity = good / total
    stderr = float(np.sqrt(max(fidelity * (1 - fidelity), 0.0) / total))
    rows = [(header.rounds, fidelity, stderr)]
    summary = {
        "mode": "dataset",
        "dataset": path,
        "decoder": decoder,
        "shots": total,
        "rounds": [header.rounds],
        "fidelity": [fidelity],
        "fidelity_err": [stderr],
        "basis": header.basis,
        "distance": header.distance,
        "noise": header.noise.to_dict(),
        "injections": [inj.to_dict() for inj in header.injections],
        "fit": None,
        "warnings": [],
    }
    return rows, summary


def _evaluate_live(params: dict) -> tuple[list, dict]:
    config = LoopConfig.from_dict(params["config"])
    noise = NoiseParams.from_dict(params["noise"])
    injections = tuple(InjectionSpec.from_dict(d) for d in params["injections"])
    _check_injection_basis(injections, config.basis)
    weights = None
    if config.decoder == "nn":
        if not params.get("weights"):
            raise ValueError("decoder 'nn' needs --weights")
        weights = _load_weights(params["weights"], config.basis, config.distance)
    result = run(
        config, noise, injections, shots=params["shots"], seed=params["seed"],
        workers=params["workers"], weights=weights,
        rounds_list=params.get("rounds_list"),
    )
    rows = result.csv_rows()
    summary = json.loads(result.to_json())
    summary["mode"] = "live"
    summary["injections"] = [inj.to_dict() for inj in injections]
    summary["noise"] = noise.to_dict()
    summary["shots"] = params["shots"]
    return rows, summary


def _exec_evaluate(params: dict, outputs: dict) -> dict:
    if params["mode"] == "dataset":
        rows, summary = _evaluate_dataset(params)
    else:
        rows, summary = _evaluate_live(params)
    _write_csv(outputs["csv"], rows)
    Path(outputs["summary"]).write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n")
    if "plot" in outputs:
        fit = None
        if summary.get("fit"):
            fit = SimpleNamespace(eps=summary["fit"]["eps"])
        _write_plot(outputs["plot"], rows, fit)
    return summary


def _exec_scale(params: dict, outputs: dict) -> dict:
    rows = [project(d).to_dict() for d in params["distances"]]
    capacity = None
    if params.get("capacity") is not None:
        capacity = json.loads(max_supported_distance(params["capacity"]).to_json())
    text = (_scale_csv(rows) if params["format"] == "csv"
            else _scale_markdown(rows))
    if "table" in outputs:
        Path(outputs["table"]).write_text(text)
    return {"rows": rows, "capacity": capacity, "text": text}


def _exec_budget(params: dict, outputs: dict) -> dict:
    budget = LatencyBudget(**params["overrides"])
    delay = params["delay_ns"]
    feasible = delay >= budget.total_ns
    doc = {
        "rows": [[label, ns] for label, ns in budget.rows()],
        "decoder_subtotal_ns": budget.decoder_subtotal_ns,
        "electronics_subtotal_ns": budget.electronics_subtotal_ns,
        "total_ns": budget.total_ns,
        "delay_ns": delay,
        "feasible": feasible,
        "backlog": None,
    }
    if params.get("qec_cycle_ns") is not None:
        report = check_throughput(LoopConfig(
            rounds=1, qec_cycle_ns=params["qec_cycle_ns"]))
        doc["backlog"] = {
            "qec_cycle_ns": report.qec_cycle_ns,
            "throughput_period_ns": report.throughput_period_ns,
            "backlog_cycles_per_round": report.backlog_cycles_per_round,
            "backlog_ns_per_round": report.backlog_ns_per_round,
        }
    if "report" in outputs:
        Path(outputs["report"]).write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return doc


_EXECUTORS = {
    "simulate": _exec_simulate,
    "defects": _exec_defects,
    "evaluate": _exec_evaluate,
    "scale": _exec_scale,
    "budget": _exec_budget,
}


def _finish(command: str, params: dict, outputs: dict, summary: dict,
            started: float, as_json: bool, human: str) -> int:
    manifest = RunManifest(
        command=command, params=params, seed=params.get("seed"),
        outputs=outputs, duration_s=time.perf_counter() - started,
    )
    if "manifest" in outputs:
        manifest.write(outputs["manifest"])
    if as_json:
        doc = manifest.to_doc()
        doc["summary"] = {k: v for k, v in summary.items() if k != "text"}
        print(json.dumps(doc, sort_keys=True))
    else:
        print(human, end="" if human.endswith("\n") else "\n")
    return 0


# --------------------------------------------------------------------------
# subcommand handlers (argparse namespace -> resolved params -> executor)


def _cmd_simulate(args) -> int:
    started = time.perf_counter()
    injections = [parse_injection(t) for t in (args.inject or [])]
    params = {
        "distance": args.distance,
        "rounds": args.rounds,
        "basis": args.basis,
        "shots": args.shots,
        "seed": _resolve_seed(args.seed),
        "workers": args.workers,
        "noise": _load_noise(args.noise_file).to_dict(),
        "injections": [inj.to_dict() for inj in injections],
    }
    out = str(args.out)
    outputs = {"dataset": out, "manifest": out + ".manifest.json"}
    summary = _exec_simulate(params, outputs)
    human = (f"wrote {params['shots']} shots (d={params['distance']}, "
             f"{params['rounds']} rounds, basis {params['basis']}, "
             f"seed {params['seed']}) to {out}\nmanifest: {outputs['manifest']}")
    return _finish("simulate", params, outputs, summary, started, args.json, human)


def _cmd_defects(args) -> int:
    started = time.perf_counter()
    params = {"input": str(args.input)}
    out = str(args.out)
    outputs = {"defects": out, "manifest": out + ".manifest.json"}
    summary = _exec_defects(params, outputs)
    human = (f"converted {summary['shots']} shots from {params['input']} "
             f"to defect streams at {out}\nmanifest: {outputs['manifest']}")
    return _finish("defects", params, outputs, summary, started, args.json, human)


def _config_from_args(args) -> dict:
    base: dict = {}
    noise_doc = None
    injections_doc = None
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        noise_doc = raw.pop("noise", None)
        injections_doc = raw.pop("injections", None)
        base = raw
    overrides = {
        "rounds": args.rounds,
        "feedback_period": args.feedback_period,
        "delay_ns": args.delay_ns,
        "qec_cycle_ns": args.qec_cycle_ns,
        "decoder": args.decoder,
        "final_pfu": args.final_pfu,
        "basis": args.basis,
        "prepared": args.prepared,
        "feedback_pulses": args.feedback_pulses,
        "distance": args.distance,
    }
    for key, val in overrides.items():
        if val is not None:
            base[key] = val
    if "rounds" not in base:
        raise ValueError("evaluate needs --rounds (or a config file with 'rounds')")
    config = LoopConfig.from_dict(base)  # validates every field

    if args.noise_file:
        noise = _load_noise(args.noise_file)
    elif noise_doc is not None:
        noise = NoiseParams.from_dict(noise_doc)
    else:
        noise = NoiseParams()

    if args.inject:
        injections = [parse_injection(t) for t in args.inject]
    elif injections_doc:
        injections = [InjectionSpec.from_dict(d) for d in injections_doc]
    else:
        injections = []
    return {
        "config": config.to_dict(),
        "noise": noise.to_dict(),
        "injections": [inj.to_dict() for inj in injections],
    }


def _cmd_evaluate(args) -> int:
    started = time.perf_counter()
    if args.dataset:
        clashes = [
            name for flag, name in (
                (args.config, "--config"), (args.rounds, "--rounds"),
                (args.inject, "--inject"), (args.noise_file, "--noise-file"),
                (args.rounds_list, "--rounds-list"),
                (args.feedback_period, "--feedback-period"),
                (args.delay_ns, "--delay-ns"),
                (args.qec_cycle_ns, "--qec-cycle-ns"),
                (args.basis, "--basis"), (args.prepared, "--prepared"),
                (args.distance, "--distance"),
                (args.final_pfu, "--final-pfu"),
                (args.feedback_pulses, "--feedback-pulses"),
                (args.shots, "--shots"), (args.workers, "--workers"),
            ) if flag is not None
        ]
        if clashes:
            raise ValueError(
                f"{', '.join(clashes)}: fixed by the dataset header or "
                "meaningless for recorded shots; drop in --dataset mode")
        params = {
            "mode": "dataset",
            "dataset": str(args.dataset),
            "decoder": args.decoder or "mwpm",
            "weights": str(args.weights) if args.weights else None,
            "seed": None,
        }
    else:
        params = _config_from_args(args)
        params["mode"] = "live"
        params["shots"] = args.shots if args.shots is not None else 10_000
        params["seed"] = _resolve_seed(args.seed)
        params["workers"] = args.workers if args.workers is not None else 1
        params["weights"] = str(args.weights) if args.weights else None
        params["rounds_list"] = (
            _parse_int_list(args.rounds_list, "--rounds-list")
            if args.rounds_list else None)
    prefix = str(args.out_prefix)
    outputs = {
        "csv": prefix + ".csv",
        "summary": prefix + ".json",
        "manifest": prefix + ".manifest.json",
    }
    if args.plot:
        outputs["plot"] = prefix + ".svg"
    summary = _exec_evaluate(params, outputs)

    lines = ["  n  fidelity    stderr"]
    for n, f, e in zip(summary["rounds"], summary["fidelity"],
                       summary["fidelity_err"]):
        lines.append(f"{n:3d}  {f:.6f}  {e:.6f}")
    fit = summary.get("fit")
    if fit:
        lines.append(f"fitted logical error rate eps_L = {fit['eps']:.6g} "
                     f"+/- {fit['eps_err']:.3g} per round")
    if "feasible_per_round" in summary:
        lines.append(
            "feedback feasible: "
            + ("yes" if all(summary["feasible_per_round"]) else "NO")
            + f"; backlog {summary.get('backlog_cycles_per_round', 0.0)} "
            "cycles/round")
    for w in summary.get("warnings", []):
        lines.append(f"warning: {w}")
    lines.append("wrote " + " ".join(sorted(outputs.values())))
    return _finish("evaluate", params, outputs, summary, started, args.json,
                   "\n".join(lines))


def _cmd_scale(args) -> int:
    started = time.perf_counter()
    distances = (_parse_int_list(args.distances, "--distances")
                 if args.distances else sorted(PUBLISHED_ROWS))
    params = {
        "distances": distances,
        "capacity": args.capacity,
        "format": args.format,
    }
    outputs = {}
    if args.out:
        outputs = {"table": str(args.out),
                   "manifest": str(args.out) + ".manifest.json"}
    summary = _exec_scale(params, outputs)
    human = summary["text"]
    if summary["capacity"] is not None:
        cap = summary["capacity"]
        human += (
            f"capacity {cap['capacity']} DSP slices: max distance "
            f"{cap['single']} (one decoder), {cap['dual']} (both kinds)\n")
    return _finish("scale", params, outputs, summary, started, args.json, human)


def _cmd_budget(args) -> int:
    started = time.perf_counter()
    overrides = {}
    for f in dataclass_fields(LatencyBudget):
        val = getattr(args, f.name)
        if val is not None:
            overrides[f.name] = val
    params = {
        "overrides": overrides,
        "delay_ns": args.delay,
        "qec_cycle_ns": args.qec_cycle_ns,
    }
    outputs = {}
    if args.out:
        outputs = {"report": str(args.out),
                   "manifest": str(args.out) + ".manifest.json"}
    summary = _exec_budget(params, outputs)
    lines = [f"{label:<28s} {ns:8.1f} ns" for label, ns in summary["rows"]]
    verdict = "feasible" if summary["feasible"] else "INFEASIBLE"
    lines.append(f"feedback delay {summary['delay_ns']:.1f} ns vs total "
                 f"{summary['total_ns']:.1f} ns: {verdict}")
    if summary["backlog"] is not None:
        b = summary["backlog"]
        lines.append(
            f"throughput: QEC cycle {b['qec_cycle_ns']:.1f} ns vs period "
            f"{b['throughput_period_ns']:.1f} ns -> backlog "
            f"{b['backlog_cycles_per_round']} cycles/round")
    return _finish("budget", params, outputs, summary, started, args.json,
                   "\n".join(lines))


def _cmd_rerun(args) -> int:
    started = time.perf_counter()
    doc = json.loads(Path(args.manifest).read_text())
    command = doc.get("command")
    if command not in _EXECUTORS:
        raise ValueError(f"manifest names unknown command {command!r}")
    params = doc["params"]
    outputs = dict(doc["outputs"])
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = {k: str(out_dir / Path(v).name) for k, v in outputs.items()}
    summary = _EXECUTORS[command](params, outputs)
    human_outputs = " ".join(sorted(v for k, v in outputs.items()))
    human = f"reran {command}; wrote {human_outputs}" if outputs else f"reran {command}"
    return _finish(command, params, outputs, summary, started, args.json, human)


# --------------------------------------------------------------------------
# argument parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtqec",
        description=("Surface-code memory experiments with a real-time "
                     "decode-and-feedback loop"),
        epilog="CSV schemas: evaluate -> n,fidelity,stderr ; scale -> "
               "d,dim_x,h,p_lstm,dsp,latency_ns,utilization_percent",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="sample a memory experiment to a "
                                          "QECDS1 shot file")
    sim.add_argument("--distance", type=int, default=3)
    sim.add_argument("--rounds", type=int, required=True)
    sim.add_argument("--basis", choices=("Z", "X"), default="Z")
    sim.add_argument("--shots", type=int, required=True)
    sim.add_argument("--seed", type=int, default=None,
                     help="omit for a generated seed (recorded in the manifest)")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--noise-file", default=None,
                     help="JSON file with p1/p2/p_idle/p_meas")
    sim.add_argument("--inject", action="append", default=None,
                     metavar="TARGET:AXIS:THETAdeg[:SCHEDULE]",
                     help="coherent-rotation injection, e.g. D2:X:40deg:each-round")
    sim.add_argument("--out", required=True, help="output shot file")
    sim.add_argument("--json", action="store_true")
    sim.set_defaults(func=_cmd_simulate)

    dfc = sub.add_parser("defects", help="convert a shot file to its defect "
                                         "companion (QECDF1)")
    dfc.add_argument("--input", required=True, help="QECDS1 shot file")
    dfc.add_argument("--out", required=True, help="output defect file")
    dfc.add_argument("--json", action="store_true")
    dfc.set_defaults(func=_cmd_defects)

    ev = sub.add_parser(
        "evaluate",
        help="closed-loop fidelity vs memory length (live sim) or scoring of "
             "a recorded dataset",
    )
    ev.add_argument("--dataset", default=None,
                    help="score this QECDS1 file instead of running live")
    ev.add_argument("--config", default=None,
                    help="JSON config mirroring the loop-config keys, plus "
                         "optional 'noise' and 'injections' entries")
    ev.add_argument("--rounds", type=int, default=None)
    ev.add_argument("--rounds-list", default=None,
                    help="comma-separated memory lengths (default 1..rounds)")
    ev.add_argument("--feedback-period", type=int, default=None,
                    help="decode-and-correct every m rounds; 0 = final only")
    ev.add_argument("--delay-ns", type=float, default=None)
    ev.add_argument("--qec-cycle-ns", type=float, default=None)
    ev.add_argument("--decoder", choices=("mwpm", "nn", "none"), default=None)
    ev.add_argument("--weights", default=None, help="QECNW1 file for --decoder nn")
    ev.add_argument("--final-pfu", action=argparse.BooleanOptionalAction,
                    default=None, help="fold the final verdict into the outcome")
    ev.add_argument("--basis", choices=("Z", "X"), default=None)
    ev.add_argument("--prepared", choices=("0", "1"), default=None)
    ev.add_argument("--feedback-pulses", action=argparse.BooleanOptionalAction,
                    default=None,
                    help="--no-feedback-pulses tracks the frame without pulses")
    ev.add_argument("--distance", type=int, default=None)
    ev.add_argument("--noise-file", default=None)
    ev.add_argument("--inject", action="append", default=None,
                    metavar="TARGET:AXIS:THETAdeg[:SCHEDULE]")
    ev.add_argument("--shots", type=int, default=None,
                    help="live mode only (default 10000)")
    ev.add_argument("--seed", type=int, default=None)
    ev.add_argument("--workers", type=int, default=None,
                    help="live mode only (default 1)")
    ev.add_argument("--out-prefix", required=True,
                    help="writes PREFIX.csv, PREFIX.json, PREFIX.manifest.json")
    ev.add_argument("--plot", action="store_true",
                    help="also write PREFIX.svg (fidelity decay)")
    ev.add_argument("--json", action="store_true")
    ev.set_defaults(func=_cmd_evaluate)

    sc = sub.add_parser("scale", help="resource projections vs code distance")
    sc.add_argument("--distances", default=None,
                    help="comma-separated odd distances (default 3..17)")
    sc.add_argument("--capacity", type=int, default=None,
                    help="also report the max distance under this DSP budget")
    sc.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    sc.add_argument("--out", default=None, help="write the table to a file")
    sc.add_argument("--json", action="store_true")
    sc.set_defaults(func=_cmd_scale)

    bu = sub.add_parser("budget", help="closed-loop latency budget and verdict")
    bu.add_argument("--delay", type=float, default=550.0,
                    help="feedback window to judge (ns)")
    bu.add_argument("--qec-cycle-ns", type=float, default=None,
                    help="also report decoder backlog at this cycle time")
    for f in dataclass_fields(LatencyBudget):
        bu.add_argument(f"--{f.name.replace('_', '-')}", type=float,
                        default=None, dest=f.name,
                        help=f"override (default {f.default} ns)")
    bu.add_argument("--out", default=None, help="write the JSON report to a file")
    bu.add_argument("--json", action="store_true")
    bu.set_defaults(func=_cmd_budget)

    rr = sub.add_parser("rerun", help="re-execute a recorded run; outputs are "
                                      "byte-identical to the original")
    rr.add_argument("manifest", help="path to a *.manifest.json")
    rr.add_argument("--out-dir", default=None,
                    help="redirect outputs into this directory")
    rr.add_argument("--json", action="store_true")
    rr.set_defaults(func=_cmd_rerun)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
