"""Held-out scoring of exported weight files and decoder comparisons.

The trainer scores its own exports with the bit-exact integer mirror; the
reference matching decoder's numbers come from the producer's command-line
tool on the same dataset files, so the comparison crosses only the
published interfaces (shot files in, CSV/JSON out).
"""

from __future__ import annotations

import json
import math
import subprocess
from dataclasses import dataclass

import numpy as np

from .formats import WeightTensors, load_weights, read_shots
from .model import integer_forward
from .prepare import prepare


@dataclass
class DecayFit:
    eps: float  # logical error per round
    eps_err: float
    n_used: list[int]


def fit_decay(ns, fidelities, errs=None) -> DecayFit:
    """Weighted least squares of ln(2F - 1) = n * slope through the origin.

    Points with F <= 0.5 carry no decay information and are dropped.
    eps = (1 - e^slope) / 2.
    """
    ns = np.asarray(ns, float)
    fs = np.asarray(fidelities, float)
    keep = fs > 0.5
    ns, fs = ns[keep], fs[keep]
    if ns.size == 0:
        raise ValueError("no usable points: all fidelities <= 0.5")
    ys = np.log(2 * fs - 1)
    if errs is None:
        w = np.ones_like(ys)
    else:
        es = np.asarray(errs, float)[keep]
        sigma = np.where(es > 0, 2 * es / (2 * fs - 1), np.inf)
        finite = np.isfinite(sigma)
        w = np.zeros_like(ys)
        w[finite] = 1.0 / sigma[finite] ** 2
        if not w.any():
            w = np.ones_like(ys)
    denom = float((w * ns * ns).sum())
    slope = float((w * ns * ys).sum() / denom)
    slope_err = math.sqrt(1.0 / denom) if errs is not None else 0.0
    eps = 0.5 * (1.0 - math.exp(slope))
    eps_err = 0.5 * math.exp(slope) * slope_err
    return DecayFit(eps=eps, eps_err=eps_err, n_used=[int(v) for v in ns])


def score_dataset(weights, dataset_path) -> dict:
    """Integer-pipeline fidelity of an exported decoder on one shot file."""
    t = weights if isinstance(weights, WeightTensors) else load_weights(weights)
    shots = read_shots(dataset_path)
    rows, labels = prepare(shots, t.kind)
    _, flip = integer_forward(t, rows)
    good = flip.astype(np.uint8) == labels.astype(np.uint8)
    f = float(good.mean())
    return {
        "rounds": shots.rounds,
        "shots": shots.shots,
        "fidelity": f,
        "stderr": float(np.sqrt(max(f * (1 - f), 1e-12) / shots.shots)),
    }


def score_float(model, kind: str, dataset_paths) -> dict:
    """Held-out decay rate of a float checkpoint (torch forward, flip if
    the output accumulator is positive), for quantization-cost comparisons."""
    import torch

    ns, fs, es = [], [], []
    model.eval()
    with torch.no_grad():
        for path in dataset_paths:
            shots = read_shots(path)
            rows, labels = prepare(shots, kind)
            logits = model(torch.from_numpy(rows)).numpy()
            good = (logits > 0) == labels.astype(bool)
            f = float(good.mean())
            ns.append(shots.rounds)
            fs.append(f)
            es.append(float(np.sqrt(max(f * (1 - f), 1e-12) / shots.shots)))
    fit = fit_decay(ns, fs, es)
    return {"rounds": ns, "fidelity": fs, "stderr": es,
            "eps": fit.eps, "eps_err": fit.eps_err}


def primary_evaluate(dataset_path, decoder: str, weights_path=None,
                     rtqec_cmd: str = "rtqec") -> dict:
    """Score a dataset with the producer CLI; returns its JSON summary."""
    cmd = [rtqec_cmd, "evaluate", "--dataset", str(dataset_path),
           "--decoder", decoder, "--out-prefix", str(dataset_path) + f".{decoder}",
           "--json"]
    if weights_path is not None:
        cmd += ["--weights", str(weights_path)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(
            f"{' '.join(cmd)} failed ({proc.returncode}): {proc.stderr.strip()}")
    return json.loads(proc.stdout)["summary"]


def compare_decoders(weight_path, dataset_paths,
                     rtqec_cmd: str = "rtqec") -> dict:
    """Per-round logical error of the exported decoder vs exact matching.

    Both decoders score the same recorded shots through the producer CLI;
    the trainer's own integer scoring is included as a cross-check of the
    weight-file handoff.
    """
    t = load_weights(weight_path)
    ns, f_nn, e_nn, f_mw, e_mw, f_own = [], [], [], [], [], []
    for path in dataset_paths:
        nn = primary_evaluate(path, "nn", weight_path, rtqec_cmd)
        mw = primary_evaluate(path, "mwpm", rtqec_cmd=rtqec_cmd)
        own = score_dataset(t, path)
        # the CLI summary reports per-rounds-value lists; dataset mode has one
        ns.append(int(nn["rounds"][0]))
        f_nn.append(float(nn["fidelity"][0]))
        e_nn.append(float(nn["fidelity_err"][0]))
        f_mw.append(float(mw["fidelity"][0]))
        e_mw.append(float(mw["fidelity_err"][0]))
        f_own.append(own["fidelity"])
    fit_nn = fit_decay(ns, f_nn, e_nn)
    fit_mw = fit_decay(ns, f_mw, e_mw)
    return {
        "rounds": ns,
        "nn_fidelity": f_nn,
        "nn_stderr": e_nn,
        "mwpm_fidelity": f_mw,
        "mwpm_stderr": e_mw,
        "own_integer_fidelity": f_own,
        "eps_nn": fit_nn.eps,
        "eps_nn_err": fit_nn.eps_err,
        "eps_mwpm": fit_mw.eps,
        "eps_mwpm_err": fit_mw.eps_err,
        "ratio": fit_nn.eps / fit_mw.eps if fit_mw.eps > 0 else float("inf"),
    }
