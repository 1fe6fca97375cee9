"""Readers/writers for the published binary interchange formats.

Implemented independently from their byte-level documentation:

Shot and defect containers share one little-endian header --
``<6sHHBIQI``: magic (``QECDS1`` shots / ``QECDF1`` defects), distance u16,
rounds u16, basis u8 (0 = Z, 1 = X), shots u32, seed u64, meta_len u32 --
followed by ``meta_len`` bytes of canonical JSON and one fixed-width record
per shot. Record fields are bit-packed little-bit-order, each zero-padded
to a byte boundary:

- ``QECDS1``: raw ancilla bits (rounds x n_ancilla, round-major), final
  data readout (n_data bits), truth byte (bit0 = X-flip, bit1 = Z-flip).
- ``QECDF1``: defect bits (rounds x n_ancilla, round-major, both kinds),
  closing defects (one bit per measured-kind check), truth byte.

Weight container ``QECNW1`` (header ``<6sBBHHB``: magic, version 1,
frac_bits, input_size u16, hidden_size u16, kind byte): int8 tensors in
order W_x then W_h then b for gates (i, f, c, o), then the dense head
W_d and scalar bias b_d; matrices are (hidden, input)/(hidden, hidden)
row-major.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

MAGIC_SHOTS = b"QECDS1"
MAGIC_DEFECTS = b"QECDF1"
MAGIC_WEIGHTS = b"QECNW1"
_HEADER_FMT = "<6sHHBIQI"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)
_WHEADER_FMT = "<6sBBHHB"
_BASIS_NAME = {0: "Z", 1: "X"}

GATES = ("i", "f", "c", "o")
WEIGHT_MIN, WEIGHT_MAX = -32, 31  # signed 6-bit


def _packed_len(nbits: int) -> int:
    return (nbits + 7) // 8


@dataclass(frozen=True)
class ShotData:
    """One decoded container file (either format)."""

    distance: int
    rounds: int
    basis: str
    seed: int
    meta: dict
    # QECDS1: raw ancilla bits + data readout; QECDF1: defects + final bits
    rows: np.ndarray  # (B, rounds, n_ancilla) uint8
    closing: np.ndarray  # (B, n_data) readout bits or (B, n_kind) defects
    truth_x: np.ndarray  # (B,) uint8
    truth_z: np.ndarray  # (B,) uint8

    @property
    def shots(self) -> int:
        return len(self.rows)


def _read_container(path, magic: bytes, closing_bits) -> ShotData:
    with open(path, "rb") as f:
        head = f.read(_HEADER_SIZE)
        if len(head) != _HEADER_SIZE:
            raise ValueError(f"{path}: truncated header")
        got, distance, rounds, basis_code, shots, seed, meta_len = (
            struct.unpack(_HEADER_FMT, head))
        if got != magic:
            raise ValueError(f"{path}: bad magic {got!r}, expected {magic!r}")
        if basis_code not in _BASIS_NAME:
            raise ValueError(f"{path}: unknown basis code {basis_code}")
        meta = json.loads(f.read(meta_len).decode())
        n_anc = distance * distance - 1
        n_close = closing_bits(distance)
        row_bytes = (_packed_len(rounds * n_anc) + _packed_len(n_close) + 1)
        body = np.frombuffer(f.read(), np.uint8)
    if body.size != shots * row_bytes:
        raise ValueError(
            f"{path}: body is {body.size} bytes, expected {shots}x{row_bytes}")
    body = body.reshape(shots, row_bytes)
    off = _packed_len(rounds * n_anc)
    rows = np.unpackbits(body[:, :off], axis=1, bitorder="little",
                         count=rounds * n_anc).reshape(shots, rounds, n_anc)
    closing = np.unpackbits(body[:, off:off + _packed_len(n_close)], axis=1,
                            bitorder="little", count=n_close)
    truth = body[:, -1]
    return ShotData(distance, rounds, _BASIS_NAME[basis_code], seed, meta,
                    rows, closing, (truth & 1).astype(np.uint8),
                    ((truth >> 1) & 1).astype(np.uint8))


def read_shots(path) -> ShotData:
    """Raw shot file: rows = ancilla bits, closing = data readout bits."""
    return _read_container(path, MAGIC_SHOTS, lambda d: d * d)


def read_defects(path) -> ShotData:
    """Defect file: rows = defect bits, closing = final-round defects."""
    return _read_container(path, MAGIC_DEFECTS, lambda d: (d * d - 1) // 2)


@dataclass
class WeightTensors:
    """Quantized decoder parameters in export form."""

    kind: str
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
        h, dim = self.hidden_size, self.input_size
        shapes = [(f"w_x[{g}]", self.w_x[g], (h, dim)) for g in GATES]
        shapes += [(f"w_h[{g}]", self.w_h[g], (h, h)) for g in GATES]
        shapes += [(f"b[{g}]", self.b[g], (h,)) for g in GATES]
        shapes.append(("w_d", self.w_d, (h,)))
        for name, arr, shape in shapes:
            arr = np.asarray(arr)
            if arr.shape != shape:
                raise ValueError(f"{name}: shape {arr.shape}, expected {shape}")
            if arr.min(initial=0) < WEIGHT_MIN or arr.max(initial=0) > WEIGHT_MAX:
                raise ValueError(f"{name} exceeds the signed 6-bit range")
        if not WEIGHT_MIN <= self.b_d <= WEIGHT_MAX:
            raise ValueError("b_d exceeds the signed 6-bit range")

    @property
    def n_parameters(self) -> int:
        h, dim = self.hidden_size, self.input_size
        return 4 * (h * dim + h * h + h) + h + 1


def save_weights(tensors: WeightTensors, path) -> None:
    """Atomic export: write to a temp file, then rename over the target."""
    tensors.validate()
    payload = struct.pack(
        _WHEADER_FMT, MAGIC_WEIGHTS, 1, tensors.frac_bits,
        tensors.input_size, tensors.hidden_size, ord(tensors.kind))
    for group in (tensors.w_x, tensors.w_h, tensors.b):
        for g in GATES:
            payload += np.ascontiguousarray(group[g], np.int8).tobytes()
    payload += np.ascontiguousarray(tensors.w_d, np.int8).tobytes()
    payload += struct.pack("<b", tensors.b_d)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def load_weights(path) -> WeightTensors:
    with open(path, "rb") as f:
        head = f.read(struct.calcsize(_WHEADER_FMT))
        magic, version, frac_bits, dim, h, kind_byte = struct.unpack(
            _WHEADER_FMT, head)
        if magic != MAGIC_WEIGHTS:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != 1:
            raise ValueError(f"{path}: unsupported version {version}")

        def tensor(shape):
            n = int(np.prod(shape))
            raw = f.read(n)
            if len(raw) != n:
                raise ValueError(f"{path}: truncated weight file")
            return np.frombuffer(raw, np.int8).reshape(shape).copy()

        w_x = {g: tensor((h, dim)) for g in GATES}
        w_h = {g: tensor((h, h)) for g in GATES}
        b = {g: tensor((h,)) for g in GATES}
        w_d = tensor((h,))
        (b_d,) = struct.unpack("<b", f.read(1))
        if f.read(1):
            raise ValueError(f"{path}: trailing bytes")
    out = WeightTensors(chr(kind_byte), frac_bits, dim, h, w_x, w_h, b,
                        w_d, int(b_d))
    out.validate()
    return out
