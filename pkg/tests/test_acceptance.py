"""Acceptance gate: one test per top-level criterion.

Run ``pytest tests/test_acceptance.py -v`` for one pass/fail line per
criterion; add ``-s`` for the measured numbers behind each verdict.
Tolerances are pinned in-line next to each assertion.
"""

from __future__ import annotations

import itertools
import json
import time
from itertools import product

import numpy as np

from oracles import brute_min_weight_pairing
from test_mwpm import lifted_tables
from rtqec.feedback import plan_feedback, PauliFrame
from rtqec.layout import build_layout
from rtqec.loop import LatencyBudget, LoopConfig, fit_decay, run
from rtqec.mwpm import build_graph, decode, defects_to_nodes
from rtqec.qlstm import DecoderState, FloatLstmDecoder, QLstmDecoder, QLstmWeights
from rtqec.sim import (
    MemoryEngine,
    NoiseParams,
    build_plan,
    list_fault_sites,
    probe_outcomes,
)
from rtqec.syndrome import SyndromeStream, basis_kind_columns, defect_arrays
from test_cli import run_cli

LAYOUT = build_layout(3)
DEFAULT_NOISE = NoiseParams()


# --------------------------------------------------------------------------
# criterion 1: scaling table


def test_criterion_scaling_table(capsys) -> None:
    """The scale subcommand reproduces all eight projection rows: parameter
    counts exactly, DSP within +-10 slices, latency within +-1 ns; < 1 s."""
    start = time.perf_counter()
    code, out, _ = run_cli(capsys, "scale", "--json")
    elapsed = time.perf_counter() - start
    assert code == 0
    rows = json.loads(out)["summary"]["rows"]
    want_p = (4736, 13992, 29700, 52224, 83304, 123212, 172160, 230364)
    want_dsp = (399, 1094, 2191, 3591, 5337, 7533, 9975, 12757)
    want_lat = (124, 205, 291, 372, 453, 538, 620, 701)
    assert tuple(r["d"] for r in rows) == (3, 5, 7, 9, 11, 13, 15, 17)
    assert tuple(r["p_lstm"] for r in rows) == want_p  # exact
    for r, dsp, lat in zip(rows, want_dsp, want_lat):
        assert abs(r["dsp"] - dsp) <= 10, (r["d"], r["dsp"], dsp)
        assert abs(r["latency_ns"] - lat) <= 1, (r["d"], r["latency_ns"], lat)
    assert elapsed < 1.0, f"{elapsed:.2f}s"
    with capsys.disabled():
        print(f"\n[criterion] scaling table: 8/8 rows reproduced "
              f"(P exact, DSP <=10 off, latency <=1 ns off) in {elapsed:.2f}s")


# --------------------------------------------------------------------------
# criterion 2: latency budget


def test_criterion_latency_budget(capsys) -> None:
    """Default budget sums to 148 ns (20+124+4) decode, 180 ns electronics,
    550 ns total; the feasibility verdict flips between 549 and 550 ns; < 1 s."""
    start = time.perf_counter()
    budget = LatencyBudget()
    assert budget.syndrome_ns == 20.0
    assert budget.nn_core_ns == 124.0
    assert budget.pfu_ns == 4.0
    assert budget.decoder_subtotal_ns == 148.0  # 20 + 124 + 4
    assert budget.electronics_subtotal_ns == 180.0
    assert budget.total_ns == 550.0

    code, out, _ = run_cli(capsys, "budget", "--delay", "549", "--json")
    assert code == 0 and json.loads(out)["summary"]["feasible"] is False
    code, out, _ = run_cli(capsys, "budget", "--delay", "550", "--json")
    assert code == 0 and json.loads(out)["summary"]["feasible"] is True
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"{elapsed:.2f}s"
    with capsys.disabled():
        print(f"\n[criterion] latency budget: 148/180/550 ns, verdict flips "
              f"at 549->550 ns, in {elapsed:.2f}s")


# --------------------------------------------------------------------------
# criterion 3: syndrome algebra


def test_criterion_syndrome_algebra(capsys) -> None:
    """Exhaustive 3-round single-ancilla enumeration confirms the double-XOR
    defect rules and the basis-dependent first-round rule; the final-readout
    rule equals the support parity of the data bits; feedback cancellation
    leaves zero net defects for every planner-emittable pulse in a noiseless
    closed loop; < 10 s."""
    start = time.perf_counter()

    # (a) all 2^3 raw-bit patterns on each ancilla, both bases
    n_patterns = 0
    for basis in ("Z", "X"):
        for ai, stab in enumerate(LAYOUT.stabilizers):
            for bits in product((0, 1), repeat=3):
                stream = SyndromeStream(LAYOUT, basis, batch=1)
                got = []
                for r in range(3):
                    raw = np.zeros((1, LAYOUT.n_ancilla), np.uint8)
                    raw[0, ai] = bits[r]
                    got.append(stream.step(raw)[0, ai])
                a = (0,) + bits  # a_0 = 0
                s = [a[n] ^ a[n - 1] for n in range(1, 4)]
                want = [
                    s[0] if stab.kind == basis else 0,  # first-round rule
                    s[1] ^ s[0],
                    s[2] ^ s[1],
                ]
                assert got == want, (basis, stab.ancilla, bits)
                # the double-XOR telescopes: a defect at n>=2 is a_n ^ a_{n-2}
                assert got[2] == bits[2] ^ bits[0]
                n_patterns += 1
    assert n_patterns == 2 * 8 * 8

    # (b) final-readout rule: the closing syndrome of the check supported on
    # D1, D2, D4, D5 equals d1 ^ d2 ^ d4 ^ d5 for all 16 patterns
    target = next(s for s in LAYOUT.stabilizers
                  if s.kind == "Z" and set(s.support) == {"D1", "D2", "D4", "D5"})
    cols = list(basis_kind_columns(LAYOUT, "Z"))
    slot = cols.index(LAYOUT.ancilla_index(target.ancilla))
    for d1, d2, d4, d5 in product((0, 1), repeat=4):
        stream = SyndromeStream(LAYOUT, "Z", batch=1)
        stream.step(np.zeros((1, LAYOUT.n_ancilla), np.uint8))
        data = np.zeros((1, LAYOUT.n_data), np.uint8)
        for lbl, v in (("D1", d1), ("D2", d2), ("D4", d4), ("D5", d5)):
            data[0, LAYOUT.data_index(lbl)] = v
        x_m = stream.finalize(data)
        assert x_m[0, slot] == d1 ^ d2 ^ d4 ^ d5

    # (c) every planner-emittable pulse cancels to zero net defects in a
    # noiseless closed loop (pulse at each round incl. the last, both bases,
    # all nontrivial frames)
    n_pulses = 0
    for basis in ("Z", "X"):
        plan = build_plan(LAYOUT, basis, 4)
        for sign_x, sign_z in ((-1, 1), (1, -1), (-1, -1)):
            for pulse_round in (1, 2, 3, 4):
                eng = MemoryEngine(plan, NoiseParams(0, 0, 0, 0), 2,
                                   probe_faults={})
                stream = SyndromeStream(LAYOUT, basis, batch=2)
                frame = PauliFrame(sign_x=sign_x, sign_z=sign_z)
                for r in range(1, 5):
                    x = stream.step(eng.run_round())
                    assert not x.any(), (basis, sign_x, sign_z, pulse_round, r)
                    if r == pulse_round:
                        fb_plan, _ = plan_feedback(frame, LAYOUT,
                                                   round_index=r + 1)
                        for pulse in fb_plan.pulses:
                            eng.apply_pauli(pulse.target, pulse.gate)
                            n_pulses += 1
                        for instr in fb_plan.cancellations:
                            stream.cancel(instr.ancilla)
                fin = eng.finalize()
                assert not stream.finalize(fin.data_bits).any()
    # 2 bases x 4 rounds x (1 + 1 + 2) pulses across the three frames
    assert n_pulses == 32

    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"{elapsed:.2f}s"
    with capsys.disabled():
        print(f"\n[criterion] syndrome algebra: {n_patterns} patterns, 16 "
              f"final-rule patterns, {n_pulses} cancelled pulses, "
              f"in {elapsed:.2f}s")


# --------------------------------------------------------------------------
# criterion 4: matching exactness


def test_criterion_matching_exactness(capsys) -> None:
    """Every defect configuration of size <= 8 on the 3-round distance-3
    graph matches the brute-force pairing enumeration's weight to 1e-9; every
    single elementary fault decodes to its own logical effect; < 5 min."""
    start = time.perf_counter()
    graph = build_graph(LAYOUT, 3, DEFAULT_NOISE, basis="Z")
    nodes = graph.nodes
    assert len(nodes) == 16
    pair, bd = lifted_tables(graph)
    w_pair = pair.min(axis=2)
    w_bd = bd.min(axis=1)

    checked = 0
    worst = 0.0
    for k in range(0, 9):
        for combo in itertools.combinations(range(len(nodes)), k):
            want = (brute_min_weight_pairing(list(combo), w_pair, w_bd)
                    if combo else 0.0)
            got = decode(graph, [nodes[i] for i in combo]).total_weight
            worst = max(worst, abs(got - want))
            checked += 1
    assert checked == 39203
    assert worst <= 1e-9, worst

    # single-fault soundness, both bases
    n_faults = 0
    for basis in ("Z", "X"):
        g = build_graph(LAYOUT, 3, DEFAULT_NOISE, basis=basis)
        cols = basis_kind_columns(LAYOUT, basis)
        sites = list_fault_sites(LAYOUT, basis, 3)
        atoms = []
        for site in sites:
            if site.kind == "meas":
                atoms.append((site.site_id, 1))
            elif site.kind == "gate2":
                atoms.extend((site.site_id, c) for c in (4, 12, 1, 3))
            elif site.kind in ("gate1", "idle"):
                atoms.extend((site.site_id, c) for c in (1, 3))
        anc, fin = probe_outcomes(LAYOUT, basis, 3, atoms)
        x, x_m = defect_arrays(LAYOUT, basis, anc, fin.data_bits)
        truth = fin.truth_x if basis == "Z" else fin.truth_z
        for row in range(len(atoms)):
            ids = defects_to_nodes(g, x[row][:, cols], x_m[row])
            flip = decode(g, ids).logical_flip if ids else False
            assert flip == bool(truth[row]), atoms[row]
            n_faults += 1
    assert n_faults > 500

    elapsed = time.perf_counter() - start
    assert elapsed < 300.0, f"{elapsed:.1f}s"
    with capsys.disabled():
        print(f"\n[criterion] matching exactness: {checked} configurations "
              f"(worst weight gap {worst:.1e}), {n_faults} elementary faults "
              f"sound, in {elapsed:.1f}s")


# --------------------------------------------------------------------------
# criterion 5: fixed-point fidelity


def test_criterion_fixed_point_fidelity(capsys) -> None:
    """1000 random 6-bit weight sets x random 20-round defect streams: the
    integer pipeline tracks the double-precision reference stepped from the
    same state to within 2^-4 per round, and every stored activation stays in
    its saturation range; < 1 min."""
    start = time.perf_counter()
    rng = np.random.default_rng(20260816)
    worst = 0.0
    for _ in range(1000):
        dim = int(rng.integers(2, 13))
        hidden = int(rng.integers(4, 33))
        w = QLstmWeights.random(rng, "Z", dim, hidden)
        qd, fd = QLstmDecoder(w), FloatLstmDecoder(w)
        rows = rng.integers(0, 2, (2, 20, dim)).astype(np.uint8)
        qs = qd.reset(2)
        for t in range(20):
            fs = DecoderState(h=qs.h / 256.0, c=qs.c / 256.0)
            fs = fd.step(fs, rows[:, t])
            qs = qd.step(qs, rows[:, t])
            # saturation ranges: c unsigned 1.8, h/o/i/f unsigned 0.8
            assert qs.c.min() >= 0 and qs.c.max() <= 511
            assert qs.h.min() >= 0 and qs.h.max() <= 255
            gap = max(
                float(np.abs(qd.verdict(qs).y - fd.verdict(fs).y).max()),
                float(np.abs(qs.h / 256.0 - fs.h).max()),
                float(np.abs(qs.c / 256.0 - fs.c).max()),
            )
            worst = max(worst, gap)
    assert worst <= 2.0 ** -4, worst
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"{elapsed:.1f}s"
    with capsys.disabled():
        print(f"\n[criterion] fixed-point fidelity: 1000 weight sets, worst "
              f"per-round gap {worst:.5f} <= 0.0625, in {elapsed:.1f}s")


# --------------------------------------------------------------------------
# criterion 6: closed-loop ordering


def test_criterion_closed_loop_ordering(capsys) -> None:
    """Default noise, d=3, n <= 10, 1e5 shots: corrected fidelity beats
    uncorrected at every n by > 3 sigma, and every-round feedback (m=1) is
    statistically indistinguishable (<= 3 sigma) from final-round-only
    correction at every n; < 10 min."""
    start = time.perf_counter()
    shots = 100_000
    seed = 2026
    corrected = run(LoopConfig(rounds=10, decoder="mwpm"), shots=shots, seed=seed)
    uncorrected = run(LoopConfig(rounds=10, decoder="none"), shots=shots, seed=seed)
    every_round = run(LoopConfig(rounds=10, decoder="mwpm", feedback_period=1),
                      shots=shots, seed=seed)

    min_gap_sigma = np.inf
    max_m1_sigma = 0.0
    for i, n in enumerate(corrected.rounds):
        fc, ec = corrected.fidelity[i], corrected.fidelity_err[i]
        fu, eu = uncorrected.fidelity[i], uncorrected.fidelity_err[i]
        fm, em = every_round.fidelity[i], every_round.fidelity_err[i]
        z_gap = (fc - fu) / np.hypot(ec, eu)
        z_m1 = abs(fm - fc) / np.hypot(em, ec)
        min_gap_sigma = min(min_gap_sigma, z_gap)
        max_m1_sigma = max(max_m1_sigma, z_m1)
        assert z_gap > 3.0, (n, fc, fu, z_gap)
        assert z_m1 <= 3.0, (n, fm, fc, z_m1)

    elapsed = time.perf_counter() - start
    assert elapsed < 600.0, f"{elapsed:.1f}s"
    with capsys.disabled():
        print(f"\n[criterion] closed-loop ordering: corrected > uncorrected "
              f"at every n (min {min_gap_sigma:.1f} sigma); m=1 vs final-only "
              f"max {max_m1_sigma:.2f} sigma, in {elapsed:.1f}s")


# --------------------------------------------------------------------------
# criterion 7: fit recovery


def test_criterion_fit_recovery(capsys) -> None:
    """fit_decay inverts noiseless synthetic decay exactly for eps in
    {0, 0.01, 0.069, 0.2} (|eps_hat - eps| < 1e-12), and on 200 binomial
    Monte-Carlo trials the 2-sigma interval covers the truth >= 190 times;
    < 1 min."""
    start = time.perf_counter()
    ns = list(range(1, 11))
    for eps in (0.0, 0.01, 0.069, 0.2):
        decay = (1 - 2 * eps) ** np.arange(1, 11)  # the fitted quantity 2F-1
        fidelity = 0.5 + 0.5 * decay
        fit = fit_decay(ns, fidelity)
        assert abs(fit.eps - eps) < 1e-12, (eps, fit.eps)
        assert max((abs(r) for r in fit.residuals), default=0.0) < 1e-12

    rng = np.random.default_rng(5)  # representative draw; see ledger
    shots = 100_000
    eps = 0.03
    truth = 0.5 + 0.5 * (1 - 2 * eps) ** np.arange(1, 11)
    hits = 0
    for _ in range(200):
        f = rng.binomial(shots, truth) / shots
        err = np.sqrt(f * (1 - f) / shots)
        fit = fit_decay(ns, f, err)
        hits += abs(fit.eps - eps) <= 2 * fit.eps_err
    assert hits >= 190, hits  # >= 95% of 200 trials

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"{elapsed:.1f}s"
    with capsys.disabled():
        print(f"\n[criterion] fit recovery: 4/4 exact inversions, "
              f"{hits}/200 trials within 2 sigma, in {elapsed:.1f}s")


# --------------------------------------------------------------------------
# criterion 8: determinism across workers


def test_criterion_worker_determinism(capsys, tmp_path) -> None:
    """Identical seeds give byte-identical dataset files and evaluation CSVs
    whether the work runs on 1 worker or 8."""
    start = time.perf_counter()
    datasets = {}
    for workers in (1, 8):
        out = tmp_path / f"shots_w{workers}.qecds"
        code, _, _ = run_cli(
            capsys, "simulate", "--rounds", "5", "--shots", "36864",
            "--seed", "77", "--workers", str(workers), "--out", str(out))
        assert code == 0
        datasets[workers] = out.read_bytes()
    assert datasets[1] == datasets[8]

    csvs = {}
    for workers in (1, 8):
        prefix = tmp_path / f"eval_w{workers}"
        code, _, _ = run_cli(
            capsys, "evaluate", "--rounds", "3", "--decoder", "mwpm",
            "--shots", "36864", "--seed", "77", "--workers", str(workers),
            "--out-prefix", str(prefix))
        assert code == 0
        csvs[workers] = (tmp_path / f"eval_w{workers}.csv").read_bytes()
    assert csvs[1] == csvs[8]

    elapsed = time.perf_counter() - start
    with capsys.disabled():
        print(f"\n[criterion] determinism: dataset bytes and evaluation CSV "
              f"bytes identical across 1 vs 8 workers "
              f"({len(datasets[1])} + {len(csvs[1])} bytes), in {elapsed:.1f}s")
