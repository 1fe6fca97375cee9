"""Distance-3 rotated surface-code tables needed for preprocessing.

The trainer re-implements the producer's documented conventions so that it
depends only on the published file formats, never on the producer's code:

- data qubits D1..D9 in row-major order (index 0..8);
- ancillas A1..A8 in id order, check kinds X,Z,X,Z,Z,X,Z,X;
- a Z-basis memory tracks the Z logical (supported on D1,D2,D3) and reads
  defects from the Z-kind checks; an X-basis memory tracks the X logical
  (D3,D6,D9) and reads the X-kind checks.

The correctness of these tables against the producer is established by the
bit-for-bit defect cross-check in the test suite, not assumed.
"""

from __future__ import annotations

import numpy as np

DISTANCE = 3
N_DATA = 9
N_ANCILLA = 8

# (kind, data-qubit indices) per ancilla, A1..A8
STABILIZERS: tuple[tuple[str, tuple[int, ...]], ...] = (
    ("X", (0, 1)),
    ("Z", (0, 1, 3, 4)),
    ("X", (1, 2, 4, 5)),
    ("Z", (2, 5)),
    ("Z", (3, 6)),
    ("X", (3, 4, 6, 7)),
    ("Z", (4, 5, 7, 8)),
    ("X", (7, 8)),
)

KIND_COLUMNS = {
    "Z": np.array([i for i, (k, _) in enumerate(STABILIZERS) if k == "Z"]),
    "X": np.array([i for i, (k, _) in enumerate(STABILIZERS) if k == "X"]),
}

DIM_X = 4  # defect bits per round seen by one decoder at d=3


def support_matrix(basis: str) -> np.ndarray:
    """(n_kind, n_data) 0/1 matrix of the measured-basis-kind checks."""
    cols = KIND_COLUMNS[basis]
    mat = np.zeros((len(cols), N_DATA), np.uint8)
    for row, anc in enumerate(cols):
        mat[row, list(STABILIZERS[anc][1])] = 1
    return mat
