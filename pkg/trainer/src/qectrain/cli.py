"""qectrain command line: dataset generation, two-stage training, scoring.

Dataset generation shells out to the producer CLI (`rtqec`) and everything
downstream reads only the interchange files, so this package never touches
the producer's internals. The standard flow:

    qectrain generate  --out-dir data
    qectrain pretrain  --data-dir data --out float_model.pt --report pre.json
    qectrain qat       --data-dir data --model float_model.pt \
                       --out decoder.qecnw --report qat.json
    qectrain evaluate  --data-dir data --weights decoder.qecnw \
                       --report eval.json
    qectrain robustness --data-dir data --weights decoder.qecnw \
                       --report robust.json

or `qectrain pipeline --work-dir run1` to do all of it.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import torch

from .evaluate import compare_decoders, score_float
from .model import ClippedLstm
from .prepare import prepare
from .train import TrainConfig, pretrain, quantize_train, write_report

TRAIN_ROUNDS = tuple(range(1, 20))  # padded width 20 fits rounds + closing row
HELDOUT_ROUNDS = tuple(range(1, 11))
SHIFTED_NOISE = {"p1": 0.0015, "p2": 0.0075, "p_idle": 0.003, "p_meas": 0.015}
INJECTION_ANGLES = (0, 20, 40, 60)


def _rtqec(args, rtqec_cmd="rtqec"):
    cmd = [rtqec_cmd] + [str(a) for a in args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"{' '.join(cmd)} failed: {proc.stderr.strip()}")
    return proc


def _index_path(data_dir: Path) -> Path:
    return data_dir / "datasets.json"


def _load_index(data_dir: Path) -> dict:
    with open(_index_path(data_dir)) as f:
        return json.load(f)


def cmd_generate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    basis = args.basis
    index = {"basis": basis, "train": [], "finetune": [], "heldout": [],
             "injected": {}, "crosscheck": {}}

    noise_file = out / "shifted_noise.json"
    noise_file.write_text(json.dumps(SHIFTED_NOISE, indent=2))

    for n in TRAIN_ROUNDS:
        path = out / f"train_n{n:02d}.qecds"
        _rtqec(["simulate", "--rounds", n, "--basis", basis, "--shots",
                args.train_shots, "--seed", args.seed + n, "--out", path],
               args.rtqec)
        index["train"].append(str(path))
    for n in TRAIN_ROUNDS:
        path = out / f"finetune_n{n:02d}.qecds"
        _rtqec(["simulate", "--rounds", n, "--basis", basis, "--shots",
                args.finetune_shots, "--seed", args.seed + 1000 + n,
                "--noise-file", noise_file, "--out", path], args.rtqec)
        index["finetune"].append(str(path))
    for n in HELDOUT_ROUNDS:
        path = out / f"heldout_n{n:02d}.qecds"
        _rtqec(["simulate", "--rounds", n, "--basis", basis, "--shots",
                args.heldout_shots, "--seed", args.seed + 2000 + n,
                "--out", path], args.rtqec)
        index["heldout"].append(str(path))

    inject_axis = "X" if basis == "Z" else "Z"
    for theta in INJECTION_ANGLES:
        paths = []
        for n in HELDOUT_ROUNDS:
            path = out / f"inject_t{theta:02d}_n{n:02d}.qecds"
            cmd = ["simulate", "--rounds", n, "--basis", basis, "--shots",
                   args.injected_shots, "--seed",
                   args.seed + 3000 + 100 * theta + n, "--out", path]
            if theta:
                cmd += ["--inject", f"D2:{inject_axis}:{theta}deg:each-round"]
            _rtqec(cmd, args.rtqec)
            paths.append(str(path))
        index["injected"][str(theta)] = paths

    cc_shots = out / "crosscheck.qecds"
    cc_defects = out / "crosscheck.qecdf"
    _rtqec(["simulate", "--rounds", 12, "--basis", basis, "--shots", 1000,
            "--seed", args.seed + 4000, "--out", cc_shots], args.rtqec)
    _rtqec(["defects", "--input", cc_shots, "--out", cc_defects], args.rtqec)
    index["crosscheck"] = {"shots": str(cc_shots), "defects": str(cc_defects)}

    with open(_index_path(out), "w") as f:
        json.dump(index, f, indent=2, sort_keys=True)
    print(f"wrote {sum(len(v) for v in (index['train'], index['finetune'], index['heldout']))} "
          f"+ {sum(len(v) for v in index['injected'].values())} datasets under {out}")
    return 0


def _load_training_arrays(paths, kind):
    xs, ys = [], []
    for p in paths:
        x, y = prepare(p, kind)
        xs.append(x)
        ys.append(y)
    return np.concatenate(xs), np.concatenate(ys)


def _config_from_args(args) -> TrainConfig:
    cfg = TrainConfig(seed=args.train_seed)
    if args.epochs is not None:
        cfg.max_epochs = args.epochs
    if args.lr is not None:
        cfg.learning_rate = args.lr
    if args.batch_size is not None:
        cfg.batch_size = args.batch_size
    return cfg


def cmd_pretrain(args) -> int:
    data_dir = Path(args.data_dir)
    index = _load_index(data_dir)
    kind = index["basis"]
    x, y = _load_training_arrays(index["train"], kind)
    cfg = _config_from_args(args)
    model, report = pretrain(x, y, cfg)
    torch.save({"state": model.state_dict(), "input_size": model.input_size,
                "hidden_size": model.hidden_size,
                "frac_bits": model.frac_bits, "kind": kind},
               args.out)
    if args.report:
        write_report(args.report, cfg, [report])
    print(f"pretrained on {len(x)} samples "
          f"(best val loss {min(report.val_loss):.5f}, "
          f"acc {report.val_accuracy[report.best_epoch]:.4f}, "
          f"majority {report.majority_accuracy:.4f}); saved {args.out}")
    return 0


def _load_float_model(path) -> tuple[ClippedLstm, str]:
    blob = torch.load(path, weights_only=True)
    model = ClippedLstm(blob["input_size"], blob["hidden_size"],
                        blob["frac_bits"])
    model.load_state_dict(blob["state"])
    return model, blob["kind"]


def cmd_qat(args) -> int:
    data_dir = Path(args.data_dir)
    index = _load_index(data_dir)
    model, kind = _load_float_model(args.model)
    source = "finetune" if args.use_finetune else "train"
    x, y = _load_training_arrays(index[source], kind)
    cfg = _config_from_args(args)
    tensors, report = quantize_train(model, x, y, cfg, kind, args.out,
                                     learning_rate=args.lr)
    if args.report:
        write_report(args.report, cfg, [report],
                     extra={"n_parameters": tensors.n_parameters,
                            "training_data": source})
    print(f"quantization-aware stage on {len(x)} {source} samples; exported "
          f"{args.out} ({tensors.n_parameters} parameters)")
    return 0


def cmd_evaluate(args) -> int:
    data_dir = Path(args.data_dir)
    index = _load_index(data_dir)
    result = compare_decoders(args.weights, index["heldout"], args.rtqec)
    if args.float_model:
        model, kind = _load_float_model(args.float_model)
        fl = score_float(model, kind, index["heldout"])
        result["eps_float_parent"] = fl["eps"]
        result["quantization_ratio"] = (result["eps_nn"] / fl["eps"]
                                        if fl["eps"] > 0 else float("inf"))
    if args.report:
        with open(args.report, "w") as f:
            json.dump(result, f, indent=2, sort_keys=True)
            f.write("\n")
    print(f"eps_nn = {result['eps_nn']:.5f} +- {result['eps_nn_err']:.5f}  "
          f"eps_mwpm = {result['eps_mwpm']:.5f} +- {result['eps_mwpm_err']:.5f}"
          f"  ratio = {result['ratio']:.3f}")
    if "quantization_ratio" in result:
        print(f"float parent eps = {result['eps_float_parent']:.5f}  "
              f"quantized/float ratio = {result['quantization_ratio']:.3f}")
    return 0


def cmd_robustness(args) -> int:
    data_dir = Path(args.data_dir)
    index = _load_index(data_dir)
    out = {"angles": {}, "worst_ratio": 0.0}
    for theta, paths in sorted(index["injected"].items(), key=lambda kv: int(kv[0])):
        res = compare_decoders(args.weights, paths, args.rtqec)
        out["angles"][theta] = res
        out["worst_ratio"] = max(out["worst_ratio"], res["ratio"])
        print(f"theta={theta:>3} deg: eps_nn {res['eps_nn']:.5f} "
              f"eps_mwpm {res['eps_mwpm']:.5f} ratio {res['ratio']:.3f}")
    if args.report:
        with open(args.report, "w") as f:
            json.dump(out, f, indent=2, sort_keys=True)
            f.write("\n")
    print(f"worst ratio {out['worst_ratio']:.3f}")
    return 0


def cmd_pipeline(args) -> int:
    work = Path(args.work_dir)
    work.mkdir(parents=True, exist_ok=True)
    data = work / "data"
    ns = argparse.Namespace(**vars(args))
    ns.out_dir = data
    if not _index_path(data).exists():
        cmd_generate(ns)
    ns.data_dir = data
    ns.out = work / "float_model.pt"
    ns.report = work / "pretrain_report.json"
    cmd_pretrain(ns)
    ns.model = work / "float_model.pt"
    ns.out = work / "decoder.qecnw"
    ns.report = work / "qat_report.json"
    ns.lr = args.qat_lr
    ns.epochs = args.qat_epochs
    ns.use_finetune = args.use_finetune
    cmd_qat(ns)
    ns.weights = work / "decoder.qecnw"
    ns.float_model = work / "float_model.pt"
    ns.report = work / "eval_report.json"
    cmd_evaluate(ns)
    if args.robustness:
        ns.report = work / "robustness_report.json"
        cmd_robustness(ns)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qectrain", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common_train(q):
        q.add_argument("--epochs", type=int, default=None)
        q.add_argument("--lr", type=float, default=None)
        q.add_argument("--batch-size", type=int, default=None)
        q.add_argument("--train-seed", type=int, default=0)

    g = sub.add_parser("generate", help="simulate the standard dataset suite "
                                        "via the producer CLI")
    g.add_argument("--out-dir", required=True)
    g.add_argument("--basis", choices=("Z", "X"), default="Z")
    g.add_argument("--train-shots", type=int, default=26_000)
    g.add_argument("--finetune-shots", type=int, default=6_000)
    g.add_argument("--heldout-shots", type=int, default=100_000)
    g.add_argument("--injected-shots", type=int, default=20_000)
    g.add_argument("--seed", type=int, default=11_000)
    g.add_argument("--rtqec", default="rtqec", help="producer CLI executable")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("pretrain", help="stage 1: float model")
    t.add_argument("--data-dir", required=True)
    t.add_argument("--out", required=True, help="float checkpoint (.pt)")
    t.add_argument("--report", default=None)
    add_common_train(t)
    t.set_defaults(func=cmd_pretrain)

    q = sub.add_parser("qat", help="stage 2: quantization-aware fine-tuning "
                                   "+ weight export")
    q.add_argument("--data-dir", required=True)
    q.add_argument("--model", required=True, help="float checkpoint from pretrain")
    q.add_argument("--out", required=True, help="exported weight file (.qecnw)")
    q.add_argument("--report", default=None)
    q.add_argument("--use-finetune", action="store_true",
                   help="fine-tune on the shifted-noise split instead of the "
                        "pretraining split")
    add_common_train(q)
    q.set_defaults(func=cmd_qat)

    e = sub.add_parser("evaluate", help="held-out eps vs exact matching")
    e.add_argument("--data-dir", required=True)
    e.add_argument("--weights", required=True)
    e.add_argument("--float-model", default=None,
                   help="float checkpoint; adds quantized-vs-parent ratio")
    e.add_argument("--report", default=None)
    e.add_argument("--rtqec", default="rtqec")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("robustness", help="injected-rotation sweep vs matching")
    r.add_argument("--data-dir", required=True)
    r.add_argument("--weights", required=True)
    r.add_argument("--report", default=None)
    r.add_argument("--rtqec", default="rtqec")
    r.set_defaults(func=cmd_robustness)

    pl = sub.add_parser("pipeline", help="generate + pretrain + qat + evaluate")
    pl.add_argument("--work-dir", required=True)
    pl.add_argument("--basis", choices=("Z", "X"), default="Z")
    pl.add_argument("--train-shots", type=int, default=26_000)
    pl.add_argument("--finetune-shots", type=int, default=6_000)
    pl.add_argument("--heldout-shots", type=int, default=100_000)
    pl.add_argument("--injected-shots", type=int, default=20_000)
    pl.add_argument("--seed", type=int, default=11_000)
    pl.add_argument("--qat-lr", type=float, default=None)
    pl.add_argument("--qat-epochs", type=int, default=None)
    pl.add_argument("--use-finetune", action="store_true")
    pl.add_argument("--robustness", action="store_true")
    pl.add_argument("--rtqec", default="rtqec")
    add_common_train(pl)
    pl.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
