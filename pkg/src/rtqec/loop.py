"""Closed-loop experiment orchestration on a simulated timeline.

For each memory length n the loop simulates shots in deterministic chunks:
stabilizer rounds stream through syndrome preprocessing into the selected
decoder; every feedback window (period m, 0 = final-round only) the
decoder's running estimate is compared with what has already been applied
and the difference is realized — physically (pulse + cancellation) or as a
pure frame update — and a final frame update folds the last verdict into
the reported outcome. Latency feasibility follows the published budget:
feedback windows shorter than the end-to-end latency degrade to
no-feedback for that round; throughput compares the decoder's pipeline
period against the QEC cycle.

Fidelity decay is summarized by fitting ln(2F(n)-1) = n ln(1-2*eps_L)
through the origin by weighted least squares.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .layout import CodeLayout, build_layout
from .mwpm import DetectorGraph, build_graph, decode_batch
from .qlstm import (
    CLOCK_NS,
    THROUGHPUT_CYCLES,
    THROUGHPUT_NS,
    QLstmDecoder,
    QLstmWeights,
    backlog_per_round_cycles,
)
from .sim import InjectionSpec, MemoryEngine, NoiseParams, build_plan, chunk_bounds
from .syndrome import SyndromeStream, basis_kind_columns
from .feedback import correction_targets

# --------------------------------------------------------------------------
# latency budget (published breakdown)


@dataclass(frozen=True)
class LatencyBudget:
    """End-to-end feedback latency contributions in nanoseconds."""

    daq_sampling_ns: float = 222.0
    syndrome_ns: float = 20.0
    nn_core_ns: float = 124.0
    pfu_ns: float = 4.0
    adc_ns: float = 12.0
    demod_ns: float = 32.0
    classify_ns: float = 4.0
    comm_ns: float = 36.0
    backplane_ns: float = 8.0
    trigger_ns: float = 16.0
    wavegen_ns: float = 32.0
    dac_ns: float = 40.0

    @property
    def decoder_subtotal_ns(self) -> float:
        return self.syndrome_ns + self.nn_core_ns + self.pfu_ns

    @property
    def electronics_subtotal_ns(self) -> float:
        return (self.adc_ns + self.demod_ns + self.classify_ns + self.comm_ns
                + self.backplane_ns + self.trigger_ns + self.wavegen_ns
                + self.dac_ns)

    @property
    def total_ns(self) -> float:
        return (self.daq_sampling_ns + self.decoder_subtotal_ns
                + self.electronics_subtotal_ns)

    def rows(self) -> list[tuple[str, float]]:
        return [
            ("data acquisition / sampling", self.daq_sampling_ns),
            ("syndrome preprocessing", self.syndrome_ns),
            ("recurrent core", self.nn_core_ns),
            ("frame update", self.pfu_ns),
            ("decoder subtotal", self.decoder_subtotal_ns),
            ("ADC", self.adc_ns),
            ("demodulation", self.demod_ns),
            ("state classification", self.classify_ns),
            ("communication link", self.comm_ns),
            ("backplane", self.backplane_ns),
            ("trigger distribution", self.trigger_ns),
            ("waveform generation", self.wavegen_ns),
            ("DAC", self.dac_ns),
            ("electronics subtotal", self.electronics_subtotal_ns),
            ("total", self.total_ns),
        ]


# --------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class LoopConfig:
    rounds: int
    feedback_period: int = 0  # m; 0 = final-round only
    delay_ns: float = 550.0
    qec_cycle_ns: float = 1250.0
    decoder: str = "mwpm"  # "nn" | "mwpm" | "none"
    final_pfu: bool = True
    basis: str = "Z"
    prepared: str = "0"
    feedback_pulses: bool = True  # False = pure frame tracking
    distance: int = 3

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.feedback_period < 0:
            raise ValueError("feedback_period must be >= 0")
        if self.delay_ns < 0:
            raise ValueError("delay_ns must be >= 0")
        if self.qec_cycle_ns <= 0:
            raise ValueError("qec_cycle_ns must be positive")
        if self.decoder not in ("nn", "mwpm", "none"):
            raise ValueError(f"unknown decoder kind {self.decoder!r}")
        if self.basis not in ("Z", "X"):
            raise ValueError("basis must be 'Z' or 'X'")
        if self.prepared not in ("0", "1"):
            raise ValueError("prepared must be '0' or '1'")

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "feedback_period": self.feedback_period,
            "delay_ns": self.delay_ns,
            "qec_cycle_ns": self.qec_cycle_ns,
            "decoder": self.decoder,
            "final_pfu": self.final_pfu,
            "basis": self.basis,
            "prepared": self.prepared,
            "feedback_pulses": self.feedback_pulses,
            "distance": self.distance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LoopConfig":
        return cls(**doc)


@dataclass
class FitResult:
    eps: float
    eps_err: float
    slope: float
    slope_err: float
    n_used: list[int]
    residuals: list[float]
    excluded: list[int]
    warnings: list[str] = field(default_factory=list)


@dataclass
class ExperimentResult:
    config: LoopConfig
    shots: int
    rounds: list[int]
    fidelity: np.ndarray
    fidelity_err: np.ndarray
    feasible_per_round: list[bool]
    backlog_cycles_per_round: float
    fit: FitResult | None
    warnings: list[str] = field(default_factory=list)

    def csv_rows(self) -> list[tuple[int, float, float]]:
        return [
            (n, float(f), float(e))
            for n, f, e in zip(self.rounds, self.fidelity, self.fidelity_err)
        ]

    def to_json(self) -> str:
        doc = {
            "config": self.config.to_dict(),
            "shots": self.shots,
            "rounds": self.rounds,
            "fidelity": [float(f) for f in self.fidelity],
            "fidelity_err": [float(e) for e in self.fidelity_err],
            "feasible_per_round": self.feasible_per_round,
            "backlog_cycles_per_round": self.backlog_cycles_per_round,
            "fit": None if self.fit is None else {
                "eps": self.fit.eps,
                "eps_err": self.fit.eps_err,
                "slope": self.fit.slope,
                "slope_err": self.fit.slope_err,
                "n_used": self.fit.n_used,
                "residuals": self.fit.residuals,
                "excluded": self.fit.excluded,
                "warnings": self.fit.warnings,
            },
            "warnings": self.warnings,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class BacklogReport:
    qec_cycle_ns: float
    throughput_period_ns: float
    backlog_cycles_per_round: float
    backlog_ns_per_round: float

    @property
    def zero_backlog(self) -> bool:
        return self.backlog_cycles_per_round == 0.0


# --------------------------------------------------------------------------
# timing checks


def check_feasibility(config: LoopConfig,
                      budget: LatencyBudget | None = None) -> list[bool]:
    """Per-round feasibility: the feedback window must cover the budget."""
    budget = budget or LatencyBudget()
    return [config.delay_ns >= budget.total_ns] * config.rounds


def check_throughput(config: LoopConfig) -> BacklogReport:
    gap_cycles = config.qec_cycle_ns / CLOCK_NS
    backlog = backlog_per_round_cycles(gap_cycles)
    return BacklogReport(
        qec_cycle_ns=config.qec_cycle_ns,
        throughput_period_ns=float(THROUGHPUT_NS),
        backlog_cycles_per_round=backlog,
        backlog_ns_per_round=backlog * CLOCK_NS,
    )


# --------------------------------------------------------------------------
# the closed loop


_GRAPH_MEMO: dict[tuple, DetectorGraph] = {}


def _graph_for(distance: int, basis: str, rounds: int,
               noise: NoiseParams) -> DetectorGraph:
    key = (distance, basis, rounds, tuple(sorted(noise.to_dict().items())))
    g = _GRAPH_MEMO.get(key)
    if g is None:
        g = build_graph(build_layout(distance), rounds, noise, basis)
        _GRAPH_MEMO[key] = g
    return g


def _loop_rng(seed: int, n: int, chunk_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(n, chunk_index)))


def _run_chunk(config: LoopConfig, noise: NoiseParams,
               injections: tuple[InjectionSpec, ...], n: int, seed: int,
               chunk_index: int, batch: int,
               weights: QLstmWeights | None) -> np.ndarray:
    """Simulate one chunk of `batch` shots of an n-round experiment;
    returns per-shot success bits."""
    layout = build_layout(config.distance)
    plan = build_plan(layout, config.basis, n, tuple(injections))
    rng = _loop_rng(seed, n, chunk_index)
    eng = MemoryEngine(plan, noise, batch, rng=rng, prepared=config.prepared)
    stream = SyndromeStream(layout, config.basis, batch)
    cols = basis_kind_columns(layout, config.basis)
    n_kind = len(cols)

    feasible = check_feasibility(config)
    m = config.feedback_period
    decoder = None
    state = None
    graph = None
    if config.decoder == "nn":
        decoder = QLstmDecoder(weights)
        state = decoder.reset(batch)
    elif config.decoder == "mwpm":
        graph = _graph_for(config.distance, config.basis, n, noise)

    gate = "X" if config.basis == "Z" else "Z"  # corrects the tracked logical
    target = correction_targets(layout)[gate]
    cancel_ancillas = [
        st.ancilla for st in layout.stabilizers
        if st.kind == config.basis and target in st.support
    ]

    emitted = np.zeros((batch, n, n_kind), np.uint8)
    applied = np.zeros(batch, np.uint8)  # correction parity already realized
    for r in range(1, n + 1):
        bits = eng.run_round()
        emitted[:, r - 1] = stream.step(bits)[:, cols]
        if config.decoder == "nn":
            state = decoder.step(state, emitted[:, r - 1])
        if m > 0 and r % m == 0 and r < n and feasible[r - 1]:
            if config.decoder == "nn":
                estimate = decoder.verdict(state).flip.astype(np.uint8)
            elif config.decoder == "mwpm":
                flips, _ = decode_batch(graph, emitted[:, :r])
                estimate = flips.astype(np.uint8)
            else:
                estimate = applied  # nothing to act on
            toggle = estimate ^ applied
            if config.feedback_pulses and toggle.any():
                eng.apply_pauli(target, gate, mask=toggle)
                for anc in cancel_ancillas:
                    stream.cancel(anc, mask=toggle)
                applied ^= toggle
                # physical parity now carries `applied`; the frame is clean
            else:
                applied ^= toggle  # pure frame tracking

    fin = eng.finalize()
    x_m = stream.finalize(fin.data_bits)
    if config.decoder == "nn":
        state = decoder.step(state, x_m)  # one more step on the final defects
        estimate = decoder.verdict(state).flip.astype(np.uint8)
    elif config.decoder == "mwpm":
        flips, _ = decode_batch(graph, emitted, x_m)
        estimate = flips.astype(np.uint8)
    else:
        estimate = np.zeros(batch, np.uint8)

    support = (layout.logical_z_support if config.basis == "Z"
               else layout.logical_x_support)
    sup_cols = [layout.data_index(q) for q in support]
    raw = fin.data_bits[:, sup_cols].sum(axis=1).astype(np.uint8) % 2
    prep = np.uint8(int(config.prepared))
    # fold the tracked frame (virtual corrections), then the final verdict
    outcome = raw.copy()
    if not config.feedback_pulses:
        outcome ^= applied
    if config.final_pfu:
        outcome ^= estimate ^ applied
    return (outcome == prep).astype(np.uint8)


def run(config: LoopConfig, noise: NoiseParams | None = None,
        injections: tuple[InjectionSpec, ...] = (), shots: int = 10_000,
        seed: int = 0, workers: int = 1,
        weights: QLstmWeights | None = None,
        rounds_list: list[int] | None = None) -> ExperimentResult:
    """Sub-experiment per memory length n: F(n) = fraction of shots whose
    corrected outcome equals the prepared eigenvalue."""
    noise = noise or NoiseParams()
    if config.decoder == "nn" and weights is None:
        raise ValueError("decoder 'nn' needs weights")
    ns = list(rounds_list) if rounds_list is not None else list(
        range(1, config.rounds + 1))
    if any(x < 1 or x > config.rounds for x in ns):
        raise ValueError("rounds_list entries must lie in [1, config.rounds]")

    bounds = chunk_bounds(shots)
    fidelity = np.zeros(len(ns))
    jobs = [(config, noise, tuple(injections), n, seed, ci, size, weights)
            for n in ns for (ci, _start, size) in bounds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_chunk_star, jobs, chunksize=1))
    else:
        outs = [_run_chunk(*j) for j in jobs]
    per_n = len(bounds)
    for i, n in enumerate(ns):
        succ = np.concatenate(outs[i * per_n:(i + 1) * per_n])
        fidelity[i] = succ.mean()
    fidelity_err = np.sqrt(np.clip(fidelity * (1 - fidelity), 0, None) / shots)

    warnings: list[str] = []
    feasible = check_feasibility(config)
    if config.feedback_period > 0 and not all(feasible):
        warnings.append(
            f"delay {config.delay_ns} ns is below the {LatencyBudget().total_ns}"
            " ns budget: feedback degraded to no-op in infeasible rounds")
    backlog = check_throughput(config)
    if not backlog.zero_backlog:
        warnings.append(
            f"QEC cycle {config.qec_cycle_ns} ns under the decoder throughput "
            f"period {THROUGHPUT_NS} ns: backlog grows "
            f"{backlog.backlog_cycles_per_round} cycles per round")

    fit = None
    if len(ns) >= 3:
        try:
            fit = fit_decay(ns, fidelity, fidelity_err)
        except ValueError as exc:
            warnings.append(f"decay fit unavailable: {exc}")
    return ExperimentResult(
        config=config, shots=shots, rounds=ns, fidelity=fidelity,
        fidelity_err=fidelity_err, feasible_per_round=feasible,
        backlog_cycles_per_round=backlog.backlog_cycles_per_round,
        fit=fit, warnings=warnings,
    )


def _run_chunk_star(args):
    return _run_chunk(*args)


# --------------------------------------------------------------------------
# fidelity-decay fit


def fit_decay(rounds: list[int], fidelity: np.ndarray,
              stderr: np.ndarray | None = None) -> FitResult:
    """Weighted least squares of ln(2F-1) = n * ln(1-2*eps) through the
    origin. Points with F <= 0.5 are excluded with a warning (log
    undefined there)."""
    n_arr = np.asarray(rounds, float)
    f_arr = np.asarray(fidelity, float)
    if n_arr.shape != f_arr.shape or n_arr.size < 3:
        raise ValueError("need at least 3 (n, F) points")
    if (f_arr > 1.0).any() or (f_arr <= 0.0).any():
        raise ValueError("fidelities must lie in (0, 1]")
    warnings = []
    usable = f_arr > 0.5
    excluded = [int(n) for n in n_arr[~usable]]
    if excluded:
        warnings.append(
            f"excluded rounds {excluded}: F <= 0.5 has no defined log-decay")
    if usable.sum() < 1:
        raise ValueError("no usable points: all fidelities <= 0.5")
    n_u = n_arr[usable]
    f_u = f_arr[usable]
    y = np.log(2.0 * f_u - 1.0)
    if stderr is not None:
        s_u = np.asarray(stderr, float)[usable]
        sigma_y = 2.0 * s_u / (2.0 * f_u - 1.0)
        pos = sigma_y > 0
        w = np.zeros_like(y)
        w[pos] = 1.0 / sigma_y[pos] ** 2
        if not pos.any():
            w = np.ones_like(y)
    else:
        w = np.ones_like(y)
    denom = float((w * n_u * n_u).sum())
    if denom == 0.0:
        raise ValueError("degenerate fit: zero total weight")
    slope = float((w * n_u * y).sum()) / denom
    resid = y - slope * n_u
    if stderr is not None and (np.asarray(stderr, float)[usable] > 0).all():
        slope_err = math.sqrt(1.0 / denom)
    else:
        dof = max(len(y) - 1, 1)
        s2 = float((w * resid * resid).sum()) / dof
        slope_err = math.sqrt(s2 / denom)
    eps = (1.0 - math.exp(slope)) / 2.0
    eps_err = math.exp(slope) * slope_err / 2.0
    return FitResult(
        eps=eps, eps_err=eps_err, slope=slope, slope_err=slope_err,
        n_used=[int(v) for v in n_u], residuals=[float(r) for r in resid],
        excluded=excluded, warnings=warnings,
    )
