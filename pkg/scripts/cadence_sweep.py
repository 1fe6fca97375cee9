#!/usr/bin/env python3
"""Feedback-cadence comparison without the final frame update.

When readout cannot be post-corrected (final frame update off), the memory
only benefits from corrections that physically landed: sparser feedback
periods leave more uncorrected tail rounds. Curves for periods m = 1, 2, 5,
the fully uncorrected baseline, and the final-frame-update reference.
Writes CSV + SVG into --out-dir.
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from rtqec.loop import LoopConfig, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rounds", type=int, default=10)
    ap.add_argument("--shots", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--periods", type=int, nargs="+", default=[1, 2, 5])
    ap.add_argument("--out-dir", type=Path, default=Path("out"))
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    configs = {"uncorrected": LoopConfig(rounds=args.rounds, decoder="none",
                                         final_pfu=False)}
    for m in args.periods:
        configs[f"m={m}"] = LoopConfig(rounds=args.rounds, decoder="mwpm",
                                       feedback_period=m, final_pfu=False)
    configs["final update"] = LoopConfig(rounds=args.rounds, decoder="mwpm")

    results = {}
    for name, cfg in configs.items():
        results[name] = run(cfg, shots=args.shots, seed=args.seed)
        fit = results[name].fit
        eps = f"eps = {fit.eps:.5f} +- {fit.eps_err:.5f}" if fit else "no fit"
        print(f"{name:>14}: {eps}")

    csv_path = args.out_dir / "cadence_sweep.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "n", "fidelity", "stderr"])
        for name, res in results.items():
            for n, f, e in res.csv_rows():
                w.writerow([name, n, repr(f), repr(e)])

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, res in results.items():
        ax.errorbar(res.rounds, res.fidelity, yerr=res.fidelity_err,
                    marker="o", ms=3, capsize=2, label=name)
    ax.set_xlabel("memory rounds n")
    ax.set_ylabel("logical fidelity")
    ax.legend(fontsize=8)
    fig.tight_layout()
    svg_path = args.out_dir / "cadence_sweep.svg"
    fig.savefig(svg_path)
    print(f"wrote {csv_path} and {svg_path}")


if __name__ == "__main__":
    main()
