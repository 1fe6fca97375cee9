"""Pauli-frame registers, decoder-driven updates, and feedback-pulse
planning.

The frame holds the tracked signs of the two logical operators. Decoder
verdicts toggle signs (one clock cycle, 4 ns). When physical feedback is
requested, each negative sign is realized as one physical gate on a
representative data qubit — the qubit at an end of the corresponding
logical string — together with cancellation instructions that delete the
pulse's imprint from the next emitted defect vector of every adjacent
anticommuting stabilizer. The frame is authoritative; pulses are its
physical realization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .layout import CodeLayout
from .syndrome import CancellationInstruction

CLOCK_NS = 4
PFU_CYCLES = 1
PFU_NS = PFU_CYCLES * CLOCK_NS


@dataclass(frozen=True)
class PauliFrame:
    """Tracked signs of the logical operators; only values +1 / -1."""

    sign_x: int = +1
    sign_z: int = +1

    def __post_init__(self):
        if self.sign_x not in (+1, -1) or self.sign_z not in (+1, -1):
            raise ValueError("frame signs must be +1 or -1")


@dataclass(frozen=True)
class FeedbackPulse:
    target: str  # data-qubit label
    gate: str  # "X" | "Z"
    time_ns: float


@dataclass
class FeedbackPlan:
    pulses: list[FeedbackPulse] = field(default_factory=list)
    cancellations: list[CancellationInstruction] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "pulses": [
                {"target": p.target, "gate": p.gate, "time_ns": p.time_ns}
                for p in self.pulses
            ],
            "cancellations": [
                {"ancilla": c.ancilla, "round_index": c.round_index}
                for c in self.cancellations
            ],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def apply_verdict(frame: PauliFrame, verdict_x: bool, verdict_z: bool) -> PauliFrame:
    """Toggle tracked signs per decoder verdict (involutive; 1 cycle, 4 ns)."""
    return PauliFrame(
        sign_x=-frame.sign_x if verdict_x else frame.sign_x,
        sign_z=-frame.sign_z if verdict_z else frame.sign_z,
    )


def correction_targets(layout: CodeLayout) -> dict[str, str]:
    """Representative data qubit per physical corrective gate.

    An X gate must flip the tracked Z-logical sign: target the first qubit
    of the Z-logical string. A Z gate flips the X-logical sign: target the
    last qubit of the X-logical string. At distance 3 these are D1 and D9.
    """
    return {
        "X": layout.logical_z_support[0],
        "Z": layout.logical_x_support[-1],
    }


def cancellations_for(layout: CodeLayout, target: str, gate: str,
                      round_index: int) -> list[CancellationInstruction]:
    """Every stabilizer that anticommutes with the pulse needs its next
    emitted defect cancelled: the opposite-kind checks whose support
    contains the target."""
    other = "Z" if gate == "X" else "X"
    return [
        CancellationInstruction(st.ancilla, round_index)
        for st in layout.stabilizers
        if st.kind == other and target in st.support
    ]


def plan_feedback(frame: PauliFrame, layout: CodeLayout, *,
                  round_index: int = 0,
                  time_ns: float = 0.0) -> tuple[FeedbackPlan, PauliFrame]:
    """Emit one physical gate per negative sign and reset the frame.

    Both corrections, when needed, are scheduled in the same feedback
    window. round_index tags the cancellation instructions with the round
    whose defect vector will absorb the pulse's imprint (the next one).
    """
    plan = FeedbackPlan()
    targets = correction_targets(layout)
    if frame.sign_z < 0:  # restore +Z_L with a physical X
        tgt = targets["X"]
        plan.pulses.append(FeedbackPulse(tgt, "X", time_ns))
        plan.cancellations.extend(
            cancellations_for(layout, tgt, "X", round_index))
    if frame.sign_x < 0:  # restore +X_L with a physical Z
        tgt = targets["Z"]
        plan.pulses.append(FeedbackPulse(tgt, "Z", time_ns))
        plan.cancellations.extend(
            cancellations_for(layout, tgt, "Z", round_index))
    return plan, PauliFrame(+1, +1)


def final_pfu(frame: PauliFrame, basis: str, layout: CodeLayout,
              data_bits: np.ndarray, verdict_flip=False) -> np.ndarray:
    """Reported logical eigenvalue after the final frame update.

    Combines the raw logical parity of the transversal data readout, the
    tracked frame sign for the measured basis, and the final decoder
    verdict. data_bits is (B, n_data); verdict_flip a bool or (B,) array.
    Returns (B,) int8 eigenvalues in {+1, -1}.
    """
    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    support = (layout.logical_z_support if basis == "Z"
               else layout.logical_x_support)
    cols = [layout.data_index(q) for q in support]
    bits = np.atleast_2d(np.asarray(data_bits, np.uint8))
    parity = bits[:, cols].sum(axis=1) % 2
    raw = np.where(parity == 0, 1, -1).astype(np.int8)
    sign = frame.sign_z if basis == "Z" else frame.sign_x
    verdict = np.where(np.asarray(verdict_flip, bool), -1, 1).astype(np.int8)
    return (raw * np.int8(sign) * verdict).astype(np.int8)
