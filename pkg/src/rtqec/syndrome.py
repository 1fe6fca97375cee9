"""Syndrome preprocessing: raw readout -> difference syndromes -> defects.

Ancillas are measured without reset, so the informative quantity each round
is the difference syndrome s_n = a_n XOR a_{n-1} (with a_0 = 0), and the
decoder consumes defects x_n = s_n XOR s_{n-1} = a_n XOR a_{n-2}: a defect
marks a *change* in a check's outcome stream. Round-1 special case: checks
matching the memory basis start from a definite +1 eigenvalue, so x_1 = s_1;
opposite-kind checks project to a random sign on round 1, which carries no
information, so their x_1 is defined as 0 (the randomness cancels from
round 2 onward).

After the final transversal data readout, each memory-basis-kind check gets
one more estimate s_m = parity of the measured data bits over its support,
and a closing defect x_m = s_m XOR s_N.

Deliberate corrective pulses flip specific checks' outcome streams; the
classical controller cancels each such flip by XOR-ing 1 into that check's
next emitted defect (the following round's x, or x_m when no rounds remain).

The streaming pipeline is modeled at PIPELINE_CYCLES of the 4 ns control
clock per round of defects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layout import CodeLayout

CLOCK_NS = 4
PIPELINE_CYCLES = 5
PIPELINE_NS = PIPELINE_CYCLES * CLOCK_NS  # 20 ns per round of defects


@dataclass(frozen=True)
class CancellationInstruction:
    """Cancel a deliberate flip of one check, starting at the given round.

    round_index is 1-based; a pulse applied after round n is cancelled in
    round n+1's defects (round_index = n + 1). If the experiment ends before
    that round, the cancellation lands on the final-readout defect x_m.
    """

    ancilla: str
    round_index: int


def basis_kind_columns(layout: CodeLayout, basis: str) -> np.ndarray:
    """Ancilla-order column indices of the checks matching the memory basis."""
    return np.array(
        [i for i, s in enumerate(layout.stabilizers) if s.kind == basis], np.int64
    )


def support_matrix(layout: CodeLayout, basis: str) -> np.ndarray:
    """(n_kind, n_data) 0/1 matrix of basis-kind check supports, id order."""
    cols = basis_kind_columns(layout, basis)
    mat = np.zeros((len(cols), layout.n_data), np.uint8)
    for r, ci in enumerate(cols):
        for lbl in layout.stabilizers[ci].support:
            mat[r, layout.data_index(lbl)] = 1
    return mat


class SyndromeStream:
    """Stateful per-round preprocessing for a batch of concurrent shots.

    step() consumes one round of raw ancilla bits and returns that round's
    defects for every check; finalize() consumes the transversal data
    readout and returns the closing defects of the memory-basis checks.
    cancel() schedules pending flips that are folded into whichever defect
    vector is emitted next.
    """

    def __init__(self, layout: CodeLayout, basis: str, batch: int):
        if basis not in ("Z", "X"):
            raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
        self.layout = layout
        self.basis = basis
        self.batch = batch
        self.n_anc = layout.n_ancilla
        self._same_kind = np.array(
            [1 if s.kind == basis else 0 for s in layout.stabilizers], np.uint8
        )
        self._kind_cols = basis_kind_columns(layout, basis)
        self._support = support_matrix(layout, basis)
        self._prev_a = np.zeros((batch, self.n_anc), np.uint8)
        self._prev_s = np.zeros((batch, self.n_anc), np.uint8)
        self._pending = np.zeros((batch, self.n_anc), np.uint8)
        self.rounds_done = 0
        self.finalized = False

    def cancel(self, ancilla: str, mask: np.ndarray | None = None) -> None:
        """Schedule a one-bit cancellation on a check's next emitted defect."""
        col = self.layout.ancilla_index(ancilla)
        if mask is None:
            self._pending[:, col] ^= 1
        else:
            self._pending[:, col] ^= mask.astype(np.uint8)

    def step(self, ancilla_bits: np.ndarray) -> np.ndarray:
        """One round of raw bits (B, n_anc) -> defects (B, n_anc)."""
        if self.finalized:
            raise RuntimeError("stream already finalized")
        a = ancilla_bits.astype(np.uint8)
        s = a ^ self._prev_a
        if self.rounds_done == 0:
            x = s * self._same_kind  # opposite-kind round-1 defects carry no info
        else:
            x = s ^ self._prev_s
        x = x ^ self._pending
        self._pending[:] = 0
        self._prev_a = a
        self._prev_s = s
        self.rounds_done += 1
        return x

    def finalize(self, data_bits: np.ndarray) -> np.ndarray:
        """Transversal readout (B, n_data) -> closing defects (B, n_kind)."""
        if self.finalized:
            raise RuntimeError("stream already finalized")
        if self.rounds_done == 0:
            raise RuntimeError("finalize before any rounds")
        s_m = (data_bits.astype(np.int16) @ self._support.T.astype(np.int16)) % 2
        x_m = s_m.astype(np.uint8) ^ self._prev_s[:, self._kind_cols]
        x_m ^= self._pending[:, self._kind_cols]
        self._pending[:] = 0
        self.finalized = True
        return x_m


def defect_arrays(layout: CodeLayout, basis: str, ancilla_bits: np.ndarray,
                  data_bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batch conversion without pulses.

    ancilla_bits (B, rounds, n_anc), data_bits (B, n_data) ->
    (defects (B, rounds, n_anc), final defects (B, n_kind)).
    """
    B, rounds, n_anc = ancilla_bits.shape
    a = ancilla_bits.astype(np.uint8)
    s = a.copy()
    s[:, 1:] ^= a[:, :-1]
    x = s.copy()
    x[:, 1:] ^= s[:, :-1]
    same = np.array(
        [1 if st.kind == basis else 0 for st in layout.stabilizers], np.uint8
    )
    x[:, 0] *= same
    support = support_matrix(layout, basis)
    s_m = (data_bits.astype(np.int16) @ support.T.astype(np.int16)) % 2
    cols = basis_kind_columns(layout, basis)
    x_m = s_m.astype(np.uint8) ^ s[:, -1, cols]
    return x, x_m
