"""Quantized recurrent decoder with a bit-exact integer pipeline.

One decoder instance per stabilizer kind consumes that kind's defect vector
each round (plus the closing data-readout defects as a final row) and emits
a logical-flip verdict after the last row.

Cell equations (per round n, gates alpha in {i, f, c, o}):

    g^alpha = act_alpha(W_x^alpha x_n + W_h^alpha h_{n-1} + b^alpha)
    act     = sigma(t) = clip(0.5 t + 0.5, 0, 1)   for i, f, o
              relu1(t) = clip(t, 0, 1)             for the candidate c~
    c_n     = sat(f * c_{n-1} + i * c~)            stored in [0, 2)
    h_n     = o * relu1(c_n)                       stored in [0, 1)
    y       = sigma(W_d h_n + b_d);  flip <=> the dense pre-activation > 0
              (exact: sigma crosses 1/2 precisely at 0, so the sign test
              never disagrees with the real-valued y > 0.5 rule)

Fixed-point contract (the FPGA-equivalent integer semantics):
  * weights/biases: signed 6-bit integers, value = int / 2^frac_bits
    (frac_bits = 4 by default; range [-2, +1.9375])
  * h and gate activations: unsigned 0.8 (0..255 for [0, 1))
  * cell c: unsigned 1.8 (0..511 for [0, 2)), saturating
  * pre-activation accumulators: signed, asserted to fit 24 bits, with
    frac_bits+8 fractional bits (q12 at the canonical frac_bits = 4): the
    weight-times-q8 products land there naturally, and raw-bit inputs and
    biases are shifted up by 8
  * rounding: round half away from zero; every post-activation store
    saturates

A double-precision twin (FloatLstmDecoder) implements the same equations
with real arithmetic; it is the training-side reference, and the fixed
path must track it within 2^-4 on the output.

Timing: one decode has a fixed latency of LATENCY_CYCLES (31 cycles,
124 ns at the 250 MHz control clock) and a minimum repetition period of
THROUGHPUT_CYCLES (46 cycles, 184 ns); rounds arriving faster than that
queue up at (46 - gap) cycles of added backlog per round.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

CLOCK_NS = 4  # 250 MHz control clock
LATENCY_CYCLES = 31
LATENCY_NS = LATENCY_CYCLES * CLOCK_NS  # 124 ns
THROUGHPUT_CYCLES = 46
THROUGHPUT_NS = THROUGHPUT_CYCLES * CLOCK_NS  # 184 ns

WEIGHT_MIN, WEIGHT_MAX = -32, 31  # signed 6-bit
ACC_BITS = 24
_ACC_LIMIT = 1 << (ACC_BITS - 1)

GATES = ("i", "f", "c", "o")

MAGIC_WEIGHTS = b"QECNW1"
_WHEADER_FMT = "<6sBBHHB"


def rhaz_div(a: np.ndarray, b: int) -> np.ndarray:
    """Integer division rounding half away from zero (elementwise)."""
    a = np.asarray(a)
    return np.sign(a) * ((np.abs(a) + b // 2) // b)


@dataclass
class QLstmWeights:
    """Quantized parameter set for one decoder instance."""

    kind: str  # "X" | "Z" (which stabilizer kind's defects it consumes)
    frac_bits: int
    input_size: int
    hidden_size: int
    w_x: dict[str, np.ndarray]  # gate -> (hidden, input) int8
    w_h: dict[str, np.ndarray]  # gate -> (hidden, hidden) int8
    b: dict[str, np.ndarray]  # gate -> (hidden,) int8
    w_d: np.ndarray  # (hidden,) int8
    b_d: int

    def validate(self) -> None:
        if self.kind not in ("X", "Z"):
            raise ValueError(f"kind must be 'X' or 'Z', got {self.kind!r}")
        if not 0 <= self.frac_bits <= 7:
            raise ValueError(f"frac_bits out of range: {self.frac_bits}")
        h, dim = self.hidden_size, self.input_size

        def check(name, arr, shape):
            arr = np.asarray(arr)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if arr.min(initial=0) < WEIGHT_MIN or arr.max(initial=0) > WEIGHT_MAX:
                raise ValueError(f"{name} exceeds the signed 6-bit range")

        for g in GATES:
            check(f"w_x[{g}]", self.w_x[g], (h, dim))
            check(f"w_h[{g}]", self.w_h[g], (h, h))
            check(f"b[{g}]", self.b[g], (h,))
        check("w_d", self.w_d, (h,))
        if not WEIGHT_MIN <= self.b_d <= WEIGHT_MAX:
            raise ValueError("b_d exceeds the signed 6-bit range")

    # -- serialization ---------------------------------------------------

    def save(self, path) -> None:
        self.validate()
        with open(path, "wb") as f:
            f.write(struct.pack(
                _WHEADER_FMT, MAGIC_WEIGHTS, 1, self.frac_bits,
                self.input_size, self.hidden_size, ord(self.kind),
            ))
            for g in GATES:
                f.write(np.asarray(self.w_x[g], np.int8).tobytes())
            for g in GATES:
                f.write(np.asarray(self.w_h[g], np.int8).tobytes())
            for g in GATES:
                f.write(np.asarray(self.b[g], np.int8).tobytes())
            f.write(np.asarray(self.w_d, np.int8).tobytes())
            f.write(struct.pack("<b", self.b_d))

    @classmethod
    def load(cls, path) -> "QLstmWeights":
        with open(path, "rb") as f:
            head = f.read(struct.calcsize(_WHEADER_FMT))
            magic, version, frac_bits, dim, h, kind_byte = struct.unpack(
                _WHEADER_FMT, head)
            if magic != MAGIC_WEIGHTS:
                raise ValueError(f"bad magic {magic!r}")
            if version != 1:
                raise ValueError(f"unsupported weight-file version {version}")
            kind = chr(kind_byte)

            def tensor(shape):
                n = int(np.prod(shape))
                raw = f.read(n)
                if len(raw) != n:
                    raise ValueError("truncated weight file")
                return np.frombuffer(raw, np.int8).reshape(shape).copy()

            w_x = {g: tensor((h, dim)) for g in GATES}
            w_h = {g: tensor((h, h)) for g in GATES}
            b = {g: tensor((h,)) for g in GATES}
            w_d = tensor((h,))
            (b_d,) = struct.unpack("<b", f.read(1))
            if f.read(1):
                raise ValueError("trailing bytes in weight file")
        out = cls(kind, frac_bits, dim, h, w_x, w_h, b, w_d, int(b_d))
        out.validate()
        return out

    @classmethod
    def random(cls, rng: np.random.Generator, kind: str, input_size: int,
               hidden_size: int, frac_bits: int = 4) -> "QLstmWeights":
        """Uniform random 6-bit parameters (test fixture, not a trained net)."""
        def t(*shape):
            return rng.integers(WEIGHT_MIN, WEIGHT_MAX + 1, shape).astype(np.int8)

        return cls(
            kind, frac_bits, input_size, hidden_size,
            {g: t(hidden_size, input_size) for g in GATES},
            {g: t(hidden_size, hidden_size) for g in GATES},
            {g: t(hidden_size) for g in GATES},
            t(hidden_size), int(rng.integers(WEIGHT_MIN, WEIGHT_MAX + 1)),
        )


@dataclass
class DecoderState:
    """h in unsigned 0.8; c in unsigned 1.8; both (batch, hidden)."""

    h: np.ndarray
    c: np.ndarray
    rounds_seen: int = 0


@dataclass
class DecodeVerdict:
    y: np.ndarray  # (batch,) float: quantized sigmoid output / 256
    flip: np.ndarray  # (batch,) bool: dense pre-activation > 0
    latency_cycles: int = LATENCY_CYCLES
    throughput_cycles: int = THROUGHPUT_CYCLES

    @property
    def latency_ns(self) -> int:
        return self.latency_cycles * CLOCK_NS


class QLstmDecoder:
    """Bit-exact integer implementation of the decoder."""

    def __init__(self, weights: QLstmWeights):
        weights.validate()
        self.weights = weights
        self._wx = {g: weights.w_x[g].astype(np.int64) for g in GATES}
        self._wh = {g: weights.w_h[g].astype(np.int64) for g in GATES}
        self._b = {g: weights.b[g].astype(np.int64) for g in GATES}
        self._wd = weights.w_d.astype(np.int64)
        # accumulators live at frac_bits+8 fractional bits: weight-times-q8
        # products land there naturally; bit inputs and biases shift up by 8
        fb = weights.frac_bits
        self._one = 1 << (fb + 8)  # +1.0 in accumulator scale
        self._sigma_div = 1 << (fb + 1)  # rescale to q8 after the 0.5 slope
        self._relu_div = 1 << fb

    def reset(self, batch: int = 1) -> DecoderState:
        h = np.zeros((batch, self.weights.hidden_size), np.int64)
        return DecoderState(h=h, c=h.copy())

    def _gate_acc(self, gate: str, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        acc = (
            (x @ self._wx[gate].T) << 8
        ) + h @ self._wh[gate].T + (self._b[gate] << 8)
        assert np.abs(acc).max(initial=0) < _ACC_LIMIT, "24-bit accumulator overflow"
        return acc

    def step(self, state: DecoderState, x_bits: np.ndarray) -> DecoderState:
        """One round of defect bits (batch, input_size) -> next state."""
        x = np.asarray(x_bits, np.int64)
        if x.ndim != 2 or x.shape[1] != self.weights.input_size:
            raise ValueError(
                f"expected (batch, {self.weights.input_size}) defect bits, "
                f"got {x.shape}"
            )
        h_prev, c_prev = state.h, state.c
        # sigma gates: q8 = clip(rhaz(acc + 1.0, 2^(fb+1)), 0, 255)
        i = np.clip(rhaz_div(self._gate_acc("i", x, h_prev) + self._one,
                             self._sigma_div), 0, 255)
        f = np.clip(rhaz_div(self._gate_acc("f", x, h_prev) + self._one,
                             self._sigma_div), 0, 255)
        o = np.clip(rhaz_div(self._gate_acc("o", x, h_prev) + self._one,
                             self._sigma_div), 0, 255)
        # candidate: clipped ReLU, q8 = clip(rhaz(acc, 2^fb), 0, 255)
        cc = np.clip(rhaz_div(self._gate_acc("c", x, h_prev), self._relu_div), 0, 255)
        # cell: q16 products rescaled to q8, saturating in [0, 511]
        c_new = np.clip(rhaz_div(f * c_prev + i * cc, 256), 0, 511)
        # h = o * relu1(c): clip the cell at 1.0 (q8 value 256), back to q8
        h_new = np.clip(rhaz_div(o * np.minimum(c_new, 256), 256), 0, 255)
        return DecoderState(h=h_new, c=c_new, rounds_seen=state.rounds_seen + 1)

    def dense_accumulator(self, state: DecoderState) -> np.ndarray:
        acc = state.h @ self._wd + (self.weights.b_d << 8)
        assert np.abs(acc).max(initial=0) < _ACC_LIMIT, "24-bit accumulator overflow"
        return acc

    def verdict(self, state: DecoderState) -> DecodeVerdict:
        acc = self.dense_accumulator(state)
        y_q = np.clip(rhaz_div(acc + self._one, self._sigma_div), 0, 255)
        return DecodeVerdict(y=y_q / 256.0, flip=acc > 0)

    def decode_sequence(self, rows: np.ndarray) -> DecodeVerdict:
        """rows (batch, T, input_size): all rounds plus the final defects."""
        rows = np.asarray(rows)
        state = self.reset(rows.shape[0])
        for t in range(rows.shape[1]):
            state = self.step(state, rows[:, t])
        return self.verdict(state)


class FloatLstmDecoder:
    """Double-precision twin of the integer pipeline (same equations)."""

    def __init__(self, weights: QLstmWeights):
        weights.validate()
        self.weights = weights
        s = 1.0 / (1 << weights.frac_bits)
        self._wx = {g: weights.w_x[g] * s for g in GATES}
        self._wh = {g: weights.w_h[g] * s for g in GATES}
        self._b = {g: weights.b[g] * s for g in GATES}
        self._wd = weights.w_d * s
        self._bd = weights.b_d * s

    def reset(self, batch: int = 1) -> DecoderState:
        h = np.zeros((batch, self.weights.hidden_size))
        return DecoderState(h=h, c=h.copy())

    @staticmethod
    def _sigma(t: np.ndarray) -> np.ndarray:
        return np.clip(0.5 * t + 0.5, 0.0, 1.0)

    def step(self, state: DecoderState, x_bits: np.ndarray) -> DecoderState:
        x = np.asarray(x_bits, np.float64)
        h_prev, c_prev = state.h, state.c

        def acc(g):
            return x @ self._wx[g].T + h_prev @ self._wh[g].T + self._b[g]

        i = self._sigma(acc("i"))
        f = self._sigma(acc("f"))
        o = self._sigma(acc("o"))
        cc = np.clip(acc("c"), 0.0, 1.0)
        c_new = np.clip(f * c_prev + i * cc, 0.0, 2.0)
        h_new = o * np.clip(c_new, 0.0, 1.0)
        return DecoderState(h=h_new, c=c_new, rounds_seen=state.rounds_seen + 1)

    def dense_accumulator(self, state: DecoderState) -> np.ndarray:
        return state.h @ self._wd + self._bd

    def verdict(self, state: DecoderState) -> DecodeVerdict:
        acc = self.dense_accumulator(state)
        return DecodeVerdict(y=self._sigma(acc), flip=acc > 0)

    def decode_sequence(self, rows: np.ndarray) -> DecodeVerdict:
        rows = np.asarray(rows)
        state = self.reset(rows.shape[0])
        for t in range(rows.shape[1]):
            state = self.step(state, rows[:, t])
        return self.verdict(state)


# --------------------------------------------------------------------------
# pipeline timing model


@dataclass
class PipelineReport:
    start_cycles: list[int]
    finish_cycles: list[int]
    backlog_cycles: int  # queueing accumulated by the last arrival

    @property
    def per_round_latency_cycles(self) -> list[int]:
        return [LATENCY_CYCLES] * len(self.start_cycles)


def pipeline_schedule(arrival_cycles: list[int]) -> PipelineReport:
    """Service times for decode jobs arriving at the given clock cycles.

    A job starts when it has arrived and the engine is free (one decode per
    THROUGHPUT_CYCLES); it finishes LATENCY_CYCLES after starting.
    """
    starts: list[int] = []
    finishes: list[int] = []
    free_at = 0
    for k, a in enumerate(arrival_cycles):
        if k and a < arrival_cycles[k - 1]:
            raise ValueError("arrival cycles must be non-decreasing")
        s = max(int(a), free_at)
        starts.append(s)
        finishes.append(s + LATENCY_CYCLES)
        free_at = s + THROUGHPUT_CYCLES
    backlog = starts[-1] - int(arrival_cycles[-1]) if starts else 0
    return PipelineReport(starts, finishes, backlog)


def backlog_per_round_cycles(inter_arrival_cycles: float) -> float:
    """Queue growth per round for a steady stream (0 when gap >= 46)."""
    return max(0.0, THROUGHPUT_CYCLES - inter_arrival_cycles)
