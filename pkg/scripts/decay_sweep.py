#!/usr/bin/env python3
"""Fidelity-vs-rounds decay sweep, one curve per decoder.

Runs the closed-loop memory experiment with the exact-matching decoder, with
no correction, and (optionally, given a weight file) with the quantized
recurrent decoder; writes CSV + SVG into --out-dir and prints fitted
logical error rates per cycle.
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rtqec.loop import LoopConfig, run
from rtqec.qlstm import QLstmWeights


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rounds", type=int, default=10)
    ap.add_argument("--shots", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--weights", type=Path, default=None,
                    help="quantized decoder weight file (adds an 'nn' curve)")
    ap.add_argument("--out-dir", type=Path, default=Path("out"))
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    decoders = ["mwpm", "none"] + (["nn"] if args.weights else [])
    weights = QLstmWeights.load(args.weights) if args.weights else None

    results = {}
    for dec in decoders:
        cfg = LoopConfig(rounds=args.rounds, decoder=dec)
        results[dec] = run(cfg, shots=args.shots, seed=args.seed,
                           weights=weights if dec == "nn" else None)
        fit = results[dec].fit
        eps = f"eps = {fit.eps:.5f} +- {fit.eps_err:.5f}" if fit else "no fit"
        print(f"{dec:>5}: {eps}")

    csv_path = args.out_dir / "decay_sweep.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["decoder", "n", "fidelity", "stderr"])
        for dec, res in results.items():
            for n, f, e in res.csv_rows():
                w.writerow([dec, n, repr(f), repr(e)])

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for dec, res in results.items():
        ax.errorbar(res.rounds, res.fidelity, yerr=res.fidelity_err,
                    marker="o", ms=3, capsize=2, label=dec)
        if res.fit:
            xs = np.linspace(min(res.rounds), max(res.rounds), 200)
            ax.plot(xs, 0.5 + 0.5 * (1 - 2 * res.fit.eps) ** xs,
                    lw=0.8, ls="--", color=ax.lines[-1].get_color())
    ax.set_xlabel("memory rounds n")
    ax.set_ylabel("logical fidelity")
    ax.legend()
    fig.tight_layout()
    svg_path = args.out_dir / "decay_sweep.svg"
    fig.savefig(svg_path)
    print(f"wrote {csv_path} and {svg_path}")


if __name__ == "__main__":
    main()
