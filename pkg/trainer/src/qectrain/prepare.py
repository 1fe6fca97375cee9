"""Shot records -> padded training tensors.

The preprocessing re-implements the documented defect rules on raw shot
files (and is cross-checked bit-for-bit against producer-exported defect
files in the test suite):

- difference syndrome: s_n = a_n XOR a_{n-1} with a_0 = 0;
- temporal defects: x_1 = s_1 for checks of the memory-basis kind (zero for
  the opposite kind, whose first round carries no information), then
  x_n = s_n XOR s_{n-1};
- closing defects: measured-kind support parities of the transversal data
  readout, XORed against that kind's last difference syndrome.

One training sample is the sequence of measured-kind defect rows for all
rounds followed by the closing-defect row -- (rounds + 1) occupied rows --
left-aligned in a (seq_len x dim) tensor padded with -1. The label is the
ground-truth logical flip of the matching type (X flips for a Z-kind
decoder, Z flips for an X-kind decoder). The padded tail must be masked
out of both recurrent updates and the loss.
"""

from __future__ import annotations

import numpy as np

from .formats import ShotData, read_shots
from .geometry import KIND_COLUMNS, N_ANCILLA, STABILIZERS, support_matrix

PAD_VALUE = -1.0
SEQ_LEN = 20


def defects_from_raw(anc_bits: np.ndarray, data_bits: np.ndarray,
                     basis: str) -> tuple[np.ndarray, np.ndarray]:
    """(B, rounds, n_anc) raw bits + (B, n_data) readout -> defect arrays.

    Returns per-round defects over all checks (B, rounds, n_anc) and the
    closing defects of the measured kind (B, n_kind).
    """
    a = anc_bits.astype(np.uint8)
    s = a.copy()
    s[:, 1:] ^= a[:, :-1]
    x = s.copy()
    x[:, 1:] ^= s[:, :-1]
    same_kind = np.array([1 if k == basis else 0 for k, _ in STABILIZERS],
                         np.uint8)
    x[:, 0] *= same_kind
    cols = KIND_COLUMNS[basis]
    s_m = (data_bits.astype(np.int16) @ support_matrix(basis).T.astype(np.int16)
           % 2).astype(np.uint8)
    x_m = s_m ^ s[:, -1, cols]
    return x, x_m


def prepare(shots: ShotData | str, kind: str,
            seq_len: int = SEQ_LEN) -> tuple[np.ndarray, np.ndarray]:
    """Shot file (or loaded data) -> ((B, seq_len, dim) float32, (B,) labels).

    `kind` selects which decoder the tensors train: it must equal the file's
    memory basis, since that basis determines both the informative checks
    and which logical flip the ground truth tracks.
    """
    if isinstance(shots, str):
        shots = read_shots(shots)
    if kind not in ("X", "Z"):
        raise ValueError(f"kind must be 'X' or 'Z', got {kind!r}")
    if shots.basis != kind:
        raise ValueError(
            f"dataset is a {shots.basis}-basis memory; a {kind}-kind decoder "
            f"needs {kind}-basis data")
    if shots.rows.shape[2] != N_ANCILLA:
        raise ValueError(
            f"expected {N_ANCILLA} checks per round, got {shots.rows.shape[2]}")
    if shots.rounds + 1 > seq_len:
        raise ValueError(
            f"{shots.rounds} rounds + closing row exceed seq_len {seq_len}")
    x, x_m = defects_from_raw(shots.rows, shots.closing, kind)
    cols = KIND_COLUMNS[kind]
    out = np.full((shots.shots, seq_len, len(cols)), PAD_VALUE, np.float32)
    out[:, :shots.rounds] = x[:, :, cols]
    out[:, shots.rounds] = x_m
    labels = (shots.truth_x if kind == "Z" else shots.truth_z).astype(np.float32)
    return out, labels


def majority_baseline(labels: np.ndarray) -> float:
    """Accuracy of always predicting the majority class."""
    p = float(np.asarray(labels).mean())
    return max(p, 1.0 - p)
