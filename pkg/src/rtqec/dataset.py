"""Binary dataset formats for shot records and defect streams.

Two container formats share one header layout (all integers little-endian):

    magic      6 bytes  b"QECDS1" (raw shots) / b"QECDF1" (defect streams)
    distance   u16
    rounds     u16
    basis      u8       0 = Z memory, 1 = X memory
    shots      u32
    seed       u64      master seed of the producing run
    meta_len   u32
    meta       meta_len bytes of canonical JSON (sorted keys, compact
               separators) with fields "noise" and "injections"

QECDS1 per-shot body, bits packed little-bit-order and zero-padded to a
byte boundary per field:

    ancilla bits   rounds * n_ancilla bits, round-major, ancilla id order
    data bits      n_data bits, D1.. order (final transversal readout)
    truth byte     bit0 = truth_x_flip, bit1 = truth_z_flip

QECDF1 per-shot body (the preprocessed companion of a QECDS1 file):

    defect bits    rounds * n_ancilla bits, round-major (both check kinds)
    final bits     one defect bit per measurement-basis-kind check, from the
                   reconstructed data-readout parities
    truth byte     as above
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .layout import CodeLayout, build_layout
from .sim import InjectionSpec, NoiseParams

MAGIC_SHOTS = b"QECDS1"
MAGIC_DEFECTS = b"QECDF1"
_HEADER_FMT = "<6sHHBIQI"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)
_BASIS_CODE = {"Z": 0, "X": 1}
_BASIS_NAME = {0: "Z", 1: "X"}


@dataclass(frozen=True)
class DatasetHeader:
    distance: int
    rounds: int
    basis: str
    shots: int
    seed: int
    noise: NoiseParams
    injections: tuple[InjectionSpec, ...] = ()

    def layout(self) -> CodeLayout:
        return build_layout(self.distance)

    def meta_json(self) -> bytes:
        meta = {
            "injections": [inj.to_dict() for inj in self.injections],
            "noise": self.noise.to_dict(),
        }
        return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()


def _pack_header(magic: bytes, h: DatasetHeader) -> bytes:
    meta = h.meta_json()
    return struct.pack(
        _HEADER_FMT, magic, h.distance, h.rounds, _BASIS_CODE[h.basis],
        h.shots, h.seed, len(meta),
    ) + meta


def _read_header(f, expect_magic: bytes) -> DatasetHeader:
    raw = f.read(_HEADER_SIZE)
    if len(raw) != _HEADER_SIZE:
        raise ValueError("truncated header")
    magic, distance, rounds, basis, shots, seed, meta_len = struct.unpack(_HEADER_FMT, raw)
    if magic != expect_magic:
        raise ValueError(f"bad magic {magic!r}; expected {expect_magic!r}")
    meta = json.loads(f.read(meta_len).decode())
    return DatasetHeader(
        distance=distance,
        rounds=rounds,
        basis=_BASIS_NAME[basis],
        shots=shots,
        seed=seed,
        noise=NoiseParams.from_dict(meta["noise"]),
        injections=tuple(InjectionSpec.from_dict(x) for x in meta.get("injections", [])),
    )


def _packed_len(nbits: int) -> int:
    return (nbits + 7) // 8


def _pack_rows(bits: np.ndarray) -> np.ndarray:
    """(B, nbits) uint8 -> (B, ceil(nbits/8)) packed little-bit-order."""
    return np.packbits(bits.astype(np.uint8), axis=1, bitorder="little")


def _unpack_rows(buf: np.ndarray, nbits: int) -> np.ndarray:
    return np.unpackbits(buf, axis=1, bitorder="little", count=nbits)


class _BaseWriter:
    magic: bytes

    def __init__(self, path, header: DatasetHeader):
        self.header = header
        self.path = path
        self._f = open(path, "wb")
        self._f.write(_pack_header(self.magic, header))
        self._written = 0

    def _write_body(self, *fields: np.ndarray) -> None:
        rows = fields[0].shape[0]
        body = np.concatenate(fields, axis=1)
        self._f.write(body.tobytes())
        self._written += rows

    def close(self) -> None:
        self._f.close()
        if self._written != self.header.shots:
            raise ValueError(
                f"header promises {self.header.shots} shots, wrote {self._written}"
            )

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self._f.close()
        if exc == (None, None, None):
            if self._written != self.header.shots:
                raise ValueError(
                    f"header promises {self.header.shots} shots, wrote {self._written}"
                )


class ShotWriter(_BaseWriter):
    """Streams QECDS1 shot chunks to disk."""

    magic = MAGIC_SHOTS

    def write_chunk(self, ancilla_bits: np.ndarray, data_bits: np.ndarray,
                    truth_x: np.ndarray, truth_z: np.ndarray) -> None:
        """ancilla_bits (B, rounds, n_anc); data_bits (B, n_data); truths (B,)."""
        B = ancilla_bits.shape[0]
        anc = _pack_rows(ancilla_bits.reshape(B, -1))
        dat = _pack_rows(data_bits)
        truth = (truth_x.astype(np.uint8) | (truth_z.astype(np.uint8) << 1))[:, None]
        self._write_body(anc, dat, truth)


class DefectWriter(_BaseWriter):
    """Streams QECDF1 defect chunks to disk."""

    magic = MAGIC_DEFECTS

    def write_chunk(self, defect_bits: np.ndarray, final_bits: np.ndarray,
                    truth_x: np.ndarray, truth_z: np.ndarray) -> None:
        """defect_bits (B, rounds, n_anc); final_bits (B, n_basis_kind)."""
        B = defect_bits.shape[0]
        df = _pack_rows(defect_bits.reshape(B, -1))
        fin = _pack_rows(final_bits)
        truth = (truth_x.astype(np.uint8) | (truth_z.astype(np.uint8) << 1))[:, None]
        self._write_body(df, fin, truth)


def _iter_chunks(path, magic: bytes, field_bits, chunk_shots: int):
    with open(path, "rb") as f:
        header = _read_header(f, magic)
        layout = header.layout()
        nbits = field_bits(header, layout)
        stride = sum(_packed_len(nb) for nb in nbits) + 1  # +1 truth byte
        remaining = header.shots
        while remaining > 0:
            take = min(chunk_shots, remaining)
            raw = f.read(stride * take)
            if len(raw) != stride * take:
                raise ValueError("truncated dataset body")
            body = np.frombuffer(raw, np.uint8).reshape(take, stride)
            off = 0
            fields = []
            for nb in nbits:
                w = _packed_len(nb)
                fields.append(_unpack_rows(body[:, off:off + w], nb))
                off += w
            truth = body[:, off]
            fields.append(truth & 1)
            fields.append((truth >> 1) & 1)
            yield header, fields
            remaining -= take
        tail = f.read(1)
        if tail:
            raise ValueError("trailing bytes after promised shot count")


def read_shots_header(path) -> DatasetHeader:
    with open(path, "rb") as f:
        return _read_header(f, MAGIC_SHOTS)


def read_defects_header(path) -> DatasetHeader:
    with open(path, "rb") as f:
        return _read_header(f, MAGIC_DEFECTS)


def iter_shot_chunks(path, chunk_shots: int = 4096):
    """Yields (header, ancilla_bits (B, rounds, n_anc), data_bits, tx, tz)."""
    def bits(h: DatasetHeader, lay: CodeLayout):
        return (h.rounds * lay.n_ancilla, lay.n_data)

    for header, (anc, dat, tx, tz) in _iter_chunks(path, MAGIC_SHOTS, bits, chunk_shots):
        B = anc.shape[0]
        yield header, anc.reshape(B, header.rounds, -1), dat, tx, tz


def iter_defect_chunks(path, chunk_shots: int = 4096):
    """Yields (header, defect_bits (B, rounds, n_anc), final_bits, tx, tz)."""
    def bits(h: DatasetHeader, lay: CodeLayout):
        n_kind = sum(1 for s in lay.stabilizers if s.kind == h.basis)
        return (h.rounds * lay.n_ancilla, n_kind)

    for header, (df, fin, tx, tz) in _iter_chunks(path, MAGIC_DEFECTS, bits, chunk_shots):
        B = df.shape[0]
        yield header, df.reshape(B, header.rounds, -1), fin, tx, tz


def read_shots(path):
    """Whole-file convenience reader: (header, anc, data, tx, tz)."""
    parts = list(iter_shot_chunks(path))
    header = parts[0][0]
    cat = lambda i: np.concatenate([p[i] for p in parts], axis=0)
    return header, cat(1), cat(2), cat(3), cat(4)


def read_defects(path):
    """Whole-file convenience reader: (header, defects, final, tx, tz)."""
    parts = list(iter_defect_chunks(path))
    header = parts[0][0]
    cat = lambda i: np.concatenate([p[i] for p in parts], axis=0)
    return header, cat(1), cat(2), cat(3), cat(4)
