"""Rotated surface-code geometry.

Data qubits sit on a d x d grid, labelled row-major D1..D{d^2}. Stabilizer
ancillas sit on the plaquette faces between them, labelled A1..A{d^2-1} in
reading order of the face centers. Faces checkerboard between Z-type
(bit-flip checks; weight-2 on the left/right edges) and X-type (phase-flip
checks; weight-2 on the top/bottom edges). The logical Z string runs along
the top row, the logical X string down the right column; they share exactly
one data qubit (the top-right corner).

At d=3 this yields the 17-qubit patch with
Z-type A2={D1,D2,D4,D5}, A4={D3,D6}, A5={D4,D7}, A7={D5,D6,D8,D9} and
X-type A1={D1,D2}, A3={D2,D3,D5,D6}, A6={D4,D5,D7,D8}, A8={D8,D9}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

# Interaction-slot orders (relative corner offsets). The late-slot pair of an
# X-plaquette is horizontal and of a Z-plaquette vertical, which keeps
# mid-cycle ancilla faults ("hooks") from advancing a logical string by two.
_X_SLOTS = ((0, 0), (0, 1), (1, 0), (1, 1))  # NW, NE, SW, SE
_Z_SLOTS = ((0, 0), (1, 0), (0, 1), (1, 1))  # NW, SW, NE, SE

N_INTERACTION_LAYERS = 4


@dataclass(frozen=True)
class Stabilizer:
    """One ancilla-mediated parity check.

    support lists the data-qubit labels in ascending index order; schedule
    maps each of the four interaction layers to the data qubit touched in
    that layer (None where a boundary face has no qubit in that slot).
    """

    ancilla: str
    kind: str  # "X" | "Z"
    support: tuple[str, ...]
    schedule: tuple[str | None, ...]

    @property
    def weight(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class CodeLayout:
    distance: int
    data_qubits: tuple[str, ...]
    stabilizers: tuple[Stabilizer, ...]
    logical_z_support: tuple[str, ...]
    logical_x_support: tuple[str, ...]

    @property
    def n_data(self) -> int:
        return len(self.data_qubits)

    @property
    def n_ancilla(self) -> int:
        return len(self.stabilizers)

    @property
    def ancilla_qubits(self) -> tuple[tuple[str, str], ...]:
        """(label, kind) per ancilla, id order."""
        return tuple((s.ancilla, s.kind) for s in self.stabilizers)

    @property
    def stabilizer_supports(self) -> dict[str, tuple[str, ...]]:
        return {s.ancilla: s.support for s in self.stabilizers}

    def stabilizers_of(self, kind: str) -> tuple[Stabilizer, ...]:
        if kind not in ("X", "Z"):
            raise ValueError(f"stabilizer kind must be 'X' or 'Z', got {kind!r}")
        return tuple(s for s in self.stabilizers if s.kind == kind)

    def data_index(self, label: str) -> int:
        """0-based index of a data-qubit label."""
        if not label.startswith("D"):
            raise ValueError(f"not a data-qubit label: {label!r}")
        idx = int(label[1:]) - 1
        if not 0 <= idx < self.n_data:
            raise ValueError(f"data-qubit label out of range: {label!r}")
        return idx

    def ancilla_index(self, label: str) -> int:
        """0-based index of an ancilla label."""
        if not label.startswith("A"):
            raise ValueError(f"not an ancilla label: {label!r}")
        idx = int(label[1:]) - 1
        if not 0 <= idx < self.n_ancilla:
            raise ValueError(f"ancilla label out of range: {label!r}")
        return idx

    def to_json(self) -> str:
        """Deterministic JSON dump (stable key order, no whitespace drift)."""
        doc = {
            "distance": self.distance,
            "data_qubits": list(self.data_qubits),
            "stabilizers": [
                {
                    "ancilla": s.ancilla,
                    "kind": s.kind,
                    "support": list(s.support),
                    "schedule": list(s.schedule),
                }
                for s in self.stabilizers
            ],
            "logical_z_support": list(self.logical_z_support),
            "logical_x_support": list(self.logical_x_support),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def build_layout(distance: int) -> CodeLayout:
    """Construct the rotated-code layout for an odd distance >= 3."""
    if distance < 3 or distance % 2 == 0:
        raise ValueError(f"distance must be an odd integer >= 3, got {distance}")
    d = distance

    def dlabel(r: int, c: int) -> str:
        return f"D{r * d + c + 1}"

    stabilizers: list[Stabilizer] = []
    n = 0
    for r in range(-1, d):
        for c in range(-1, d):
            corners = [(r + dr, c + dc) for dr, dc in _X_SLOTS]
            present = [(rr, cc) for rr, cc in corners if 0 <= rr < d and 0 <= cc < d]
            kind = "Z" if (r + c) % 2 == 0 else "X"
            if len(present) == 2:
                # Edge faces survive only for the kind native to that edge.
                on_row_edge = r == -1 or r == d - 1
                if on_row_edge and kind != "X":
                    continue
                if not on_row_edge and kind != "Z":
                    continue
            elif len(present) != 4:
                continue  # corner stubs (weight 1) and empty faces
            n += 1
            slots = _X_SLOTS if kind == "X" else _Z_SLOTS
            schedule = tuple(
                dlabel(r + dr, c + dc) if 0 <= r + dr < d and 0 <= c + dc < d else None
                for dr, dc in slots
            )
            support = tuple(
                sorted((dlabel(rr, cc) for rr, cc in present), key=lambda s: int(s[1:]))
            )
            stabilizers.append(Stabilizer(f"A{n}", kind, support, schedule))

    data = tuple(f"D{i + 1}" for i in range(d * d))
    logical_z = tuple(f"D{c + 1}" for c in range(d))  # top row
    logical_x = tuple(f"D{(r + 1) * d}" for r in range(d))  # right column
    return CodeLayout(d, data, tuple(stabilizers), logical_z, logical_x)
