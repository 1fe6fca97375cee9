"""Stochastic memory-experiment sampler.

Simulates repeated stabilizer measurement of a rotated surface-code patch
with Pauli-frame Monte Carlo: the noiseless circuit is never represented
explicitly; instead each shot tracks the accumulated X/Z error frame through
the Clifford cycle, plus the handful of reference bits (random first
projections of opposite-basis checks, stabilizer-consistent final readout)
needed to emit raw measurement records.

Cycle per round: optional injected rotations, H on X-type ancillas, four
interaction layers (CX with the ancilla as control for X checks and as
target for Z checks, in the hook-safe zigzag order from the layout), H on
X-type ancillas, idle noise on data, ancilla readout *without reset*.
Depolarizing noise follows every gate; measurement bits flip independently.

Deterministic fault probing reuses the exact same machinery with noise
drawn from a forced-fault table instead of an RNG, so detector-graph
construction and oracle tests exercise the very code path that samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .layout import CodeLayout, N_INTERACTION_LAYERS, build_layout

CHUNK_SHOTS = 4096  # fixed chunk size; one RNG substream per chunk

_PROBS = ("p1", "p2", "p_idle", "p_meas")


@dataclass(frozen=True)
class NoiseParams:
    """Circuit-level noise strengths.

    p1: depolarizing after every single-qubit gate (prep and H)
    p2: two-qubit depolarizing after every interaction-layer CX
    p_idle: depolarizing on data qubits during each readout window
    p_meas: independent classical flip of every measured bit
    Ancillas are measured without reset; the difference syndrome absorbs the
    carried-over bit, so no reset channel exists in the model.
    """

    p1: float = 0.001
    p2: float = 0.005
    p_idle: float = 0.002
    p_meas: float = 0.01

    def __post_init__(self) -> None:
        for name in _PROBS:
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5], got {v}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _PROBS}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseParams":
        return cls(**{k: float(d[k]) for k in _PROBS})


@dataclass(frozen=True)
class InjectionSpec:
    """Coherent rotation injected as a stochastic Pauli flip.

    A rotation by theta about the given axis flips the qubit with
    probability sin^2(theta/2) immediately before the designated round's
    stabilizer cycle. schedule is either "each-round" or a 1-based round
    number.
    """

    target: str
    axis: str
    theta_deg: float
    schedule: str | int = "each-round"

    def __post_init__(self) -> None:
        if not self.target.startswith("D"):
            raise ValueError(
                f"injections target data qubits (D#); got {self.target!r}"
            )
        if self.axis not in ("X", "Z"):
            raise ValueError(f"injection axis must be 'X' or 'Z', got {self.axis!r}")
        if not 0.0 <= self.theta_deg <= 180.0:
            raise ValueError(f"theta must lie in [0, 180] degrees, got {self.theta_deg}")
        if isinstance(self.schedule, str):
            if self.schedule != "each-round":
                raise ValueError(
                    f"schedule must be 'each-round' or a round number, got {self.schedule!r}"
                )
        elif self.schedule < 1:
            raise ValueError(f"injection round must be >= 1, got {self.schedule}")

    @property
    def flip_probability(self) -> float:
        return math.sin(math.radians(self.theta_deg) / 2.0) ** 2

    def applies_to_round(self, round_index: int) -> bool:
        return self.schedule == "each-round" or self.schedule == round_index

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "axis": self.axis,
            "theta_deg": self.theta_deg,
            "schedule": self.schedule,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InjectionSpec":
        sched = d["schedule"]
        if isinstance(sched, float):
            sched = int(sched)
        return cls(d["target"], d["axis"], float(d["theta_deg"]), sched)


@dataclass
class ShotRecord:
    """One memory-experiment shot.

    ancilla_bits: raw readout, shape (rounds, n_ancilla), ancilla id order
    data_bits: final transversal readout in the memory basis, shape (n_data,)
    truth_x_flip: accumulated error anticommutes with the logical Z string
    truth_z_flip: accumulated error anticommutes with the logical X string
    """

    ancilla_bits: np.ndarray
    data_bits: np.ndarray
    truth_x_flip: bool
    truth_z_flip: bool
    basis: str
    seed: int


# --------------------------------------------------------------------------
# compiled geometry and circuit plan


class _Geometry:
    """Index-space view of a CodeLayout for vectorized simulation."""

    def __init__(self, layout: CodeLayout):
        self.layout = layout
        d2 = layout.n_data
        self.n_data = d2
        self.n_anc = layout.n_ancilla
        self.nq = d2 + self.n_anc
        kinds = np.array([1 if s.kind == "X" else 0 for s in layout.stabilizers], np.uint8)
        self.anc_is_x = kinds.astype(bool)
        self.x_anc_global = np.nonzero(self.anc_is_x)[0] + d2
        # interaction layers: (control, target) pairs, disjoint qubits per layer
        self.cx_layers: list[np.ndarray] = []
        for k in range(N_INTERACTION_LAYERS):
            pairs = []
            for ai, s in enumerate(layout.stabilizers):
                lbl = s.schedule[k]
                if lbl is None:
                    continue
                dq = layout.data_index(lbl)
                aq = d2 + ai
                pairs.append((aq, dq) if s.kind == "X" else (dq, aq))
            self.cx_layers.append(np.array(pairs, np.int64))
        # support masks per kind, rows in ancilla-id order within the kind
        def mask_of(kind: str) -> np.ndarray:
            rows = []
            for s in layout.stabilizers:
                if s.kind != kind:
                    continue
                m = np.zeros(d2, np.uint8)
                for lbl in s.support:
                    m[layout.data_index(lbl)] = 1
                rows.append(m)
            return np.array(rows, np.uint8)

        self.z_support = mask_of("Z")
        self.x_support = mask_of("X")
        self.zl_mask = np.zeros(d2, np.uint8)
        for lbl in layout.logical_z_support:
            self.zl_mask[layout.data_index(lbl)] = 1
        self.xl_mask = np.zeros(d2, np.uint8)
        for lbl in layout.logical_x_support:
            self.xl_mask[layout.data_index(lbl)] = 1


_GEOMETRY_CACHE: dict[int, _Geometry] = {}


def _geometry(layout: CodeLayout) -> _Geometry:
    geo = _GEOMETRY_CACHE.get(layout.distance)
    if geo is None or geo.layout is not layout:
        geo = _Geometry(layout)
        _GEOMETRY_CACHE[layout.distance] = geo
    return geo


@dataclass(frozen=True)
class FaultSite:
    """One potential elementary-fault location.

    kind: "gate1" (after a 1q gate), "gate2" (after a CX), "idle",
          "inject", "meas" (classical readout flip)
    qubits: global qubit indices touched (1 or 2)
    prob_attr: NoiseParams attribute naming the site's strength, or None
          for injections (prob then holds the value)
    round_index: 0 for prep, 1..N for cycle rounds, N+1 for final readout
    """

    site_id: int
    kind: str
    qubits: tuple[int, ...]
    prob_attr: str | None
    round_index: int
    prob: float = 0.0


class _Plan:
    """Straight-line op program with a fault-site registry."""

    def __init__(self, layout: CodeLayout, basis: str, rounds: int,
                 injections: tuple[InjectionSpec, ...]):
        if basis not in ("Z", "X"):
            raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
        if rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {rounds}")
        for inj in injections:
            layout.data_index(inj.target)  # validates target exists and is data
            if isinstance(inj.schedule, int) and inj.schedule > rounds:
                raise ValueError(
                    f"injection scheduled for round {inj.schedule} of a "
                    f"{rounds}-round experiment"
                )
        self.layout = layout
        self.geo = _geometry(layout)
        self.basis = basis
        self.rounds = rounds
        self.injections = tuple(injections)
        self.sites: list[FaultSite] = []
        self.prep_ops: list[tuple] = []
        self.round_ops: list[list[tuple]] = []
        self.final_ops: list[tuple] = []
        self._build()

    def _register(self, kind: str, qubits: tuple[int, ...], attr: str | None,
                  round_index: int, prob: float = 0.0) -> int:
        sid = len(self.sites)
        self.sites.append(FaultSite(sid, kind, qubits, attr, round_index, prob))
        return sid

    def _noise1(self, *, qubits: np.ndarray, attr: str,
                kind: str, round_index: int) -> tuple:
        base = len(self.sites)
        for q in qubits:
            self._register(kind, (int(q),), attr, round_index)
        return ("noise1", base, np.asarray(qubits, np.int64), attr)

    def _build(self) -> None:
        geo = self.geo
        data = np.arange(geo.n_data, dtype=np.int64)
        self.prep_ops.append(("prep",))
        self.prep_ops.append(self._noise1(qubits=data, attr="p1", kind="gate1", round_index=0))
        for n in range(1, self.rounds + 1):
            ops: list[tuple] = []
            for inj in self.injections:
                if inj.applies_to_round(n):
                    q = self.layout.data_index(inj.target)
                    sid = self._register("inject", (q,), None, n, inj.flip_probability)
                    ops.append(("inject", sid, q, inj.axis, inj.flip_probability))
            ops.append(("h", geo.x_anc_global))
            ops.append(self._noise1(qubits=geo.x_anc_global, attr="p1", kind="gate1", round_index=n))
            for pairs in geo.cx_layers:
                ops.append(("cx", pairs))
                base = len(self.sites)
                for c, t in pairs:
                    self._register("gate2", (int(c), int(t)), "p2", n)
                ops.append(("noise2", base, pairs))
            ops.append(("h", geo.x_anc_global))
            ops.append(self._noise1(qubits=geo.x_anc_global, attr="p1", kind="gate1", round_index=n))
            ops.append(self._noise1(qubits=data, attr="p_idle", kind="idle", round_index=n))
            base = len(self.sites)
            for a in range(geo.n_anc):
                self._register("meas", (geo.n_data + a,), "p_meas", n)
            ops.append(("meas_anc", base))
            self.round_ops.append(ops)
        self.final_meas_base = len(self.sites)
        for q in range(geo.n_data):
            self._register("meas", (q,), "p_meas", self.rounds + 1)
        self.final_ops.append(("meas_data", self.final_meas_base))


_PLAN_CACHE: dict[tuple, _Plan] = {}


def build_plan(layout: CodeLayout, basis: str, rounds: int,
               injections: tuple[InjectionSpec, ...] = ()) -> _Plan:
    key = (layout.distance, basis, rounds, injections)
    plan = _PLAN_CACHE.get(key)
    if plan is None:
        plan = _Plan(layout, basis, rounds, tuple(injections))
        if len(_PLAN_CACHE) > 64:
            _PLAN_CACHE.clear()
        _PLAN_CACHE[key] = plan
    return plan


# --------------------------------------------------------------------------
# GF(2) solver for stabilizer-consistent final readout


def _gf2_affine(mat: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Particular solution and nullspace basis of mat @ x = rhs over GF(2)."""
    a = np.concatenate([mat, rhs[:, None]], axis=1).astype(np.uint8) % 2
    nrows, ncols = mat.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        pr = r + hits[0]
        if pr != r:
            a[[r, pr]] = a[[pr, r]]
        for rr in np.nonzero(a[:, c])[0]:
            if rr != r:
                a[rr] ^= a[r]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    if np.any(a[r:, -1]):
        raise ValueError("inconsistent parity constraints")
    free = [c for c in range(ncols) if c not in pivots]
    x0 = np.zeros(ncols, np.uint8)
    for i, c in enumerate(pivots):
        x0[c] = a[i, -1]
    basis = np.zeros((len(free), ncols), np.uint8)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, c in enumerate(pivots):
            basis[k, c] = a[i, fc]
    return x0, basis


# --------------------------------------------------------------------------
# engine


@dataclass
class FinalizeResult:
    data_bits: np.ndarray  # (B, n_data) uint8
    truth_x: np.ndarray  # (B,) uint8
    truth_z: np.ndarray  # (B,) uint8


class MemoryEngine:
    """Chunk-vectorized stepwise simulator.

    Drive with run_round() once per QEC round, optionally apply_pauli()
    between rounds (deliberate corrective gates), then finalize(). When
    probe_faults is given the engine is deterministic: all noise draws are
    off and each listed (site_id, code, row) forces one fault. Codes:
    1q sites 1=X 2=Y 3=Z; CX sites 1..15 with code = 4*left + right over
    I,X,Y,Z; measurement sites: any code flips the recorded bit.
    """

    def __init__(self, plan: _Plan, noise: NoiseParams, batch: int,
                 rng: np.random.Generator | None = None,
                 probe_faults: dict[int, tuple[np.ndarray, np.ndarray]] | None = None,
                 prepared: str = "0"):
        geo = plan.geo
        self.plan = plan
        self.geo = geo
        self.noise = noise
        self.batch = batch
        self.rng = rng
        self.probe = probe_faults
        if (rng is None) == (probe_faults is None):
            raise ValueError("exactly one of rng / probe_faults must be given")
        if prepared not in ("0", "1"):
            raise ValueError(f"prepared eigenvalue bit must be '0' or '1', got {prepared!r}")
        self.prep_bit = int(prepared)
        B = batch
        self.ex = np.zeros((B, geo.nq), np.uint8)
        self.ez = np.zeros((B, geo.nq), np.uint8)
        self.a_ideal = np.zeros((B, geo.n_anc), np.uint8)
        self.rounds_done = 0
        self.records: list[np.ndarray] = []
        # Reference eigenvalue bits: checks matching the preparation basis are
        # definite (+1); the opposite kind projects to a random sign in round 1
        # that then persists.
        opposite = geo.anc_is_x if plan.basis == "Z" else ~geo.anc_is_x
        self.e_ref = np.zeros((B, geo.n_anc), np.uint8)
        if self.rng is not None:
            self.e_ref[:, opposite] = self.rng.integers(
                0, 2, (B, int(opposite.sum())), dtype=np.uint8
            )
        # stabilizer-consistent final readout: parity constraints of the
        # measured kind plus the prepared logical string
        support = geo.z_support if plan.basis == "Z" else geo.x_support
        logical = geo.zl_mask if plan.basis == "Z" else geo.xl_mask
        mat = np.concatenate([support, logical[None, :]], axis=0)
        rhs = np.zeros(mat.shape[0], np.uint8)
        rhs[-1] = self.prep_bit
        self._final_x0, self._final_nullbasis = _gf2_affine(mat, rhs)
        for op in plan.prep_ops:
            self._run_op(op)

    # -- noise / fault application ------------------------------------

    def _apply_code_1q(self, rows, q: int, codes) -> None:
        codes = np.asarray(codes)
        self.ex[rows, q] ^= ((codes == 1) | (codes == 2)).astype(np.uint8)
        self.ez[rows, q] ^= ((codes == 2) | (codes == 3)).astype(np.uint8)

    def _probe_hits(self, base: int, count: int):
        """Forced faults for sites [base, base+count), as (offset, rows, codes)."""
        if self.probe is None:
            return
        for off in range(count):
            hit = self.probe.get(base + off)
            if hit is not None:
                yield off, hit[0], hit[1]

    def _run_op(self, op: tuple) -> None:
        kind = op[0]
        geo = self.geo
        B = self.batch
        if kind == "prep":
            return  # frames start clean; references already drawn
        if kind == "h":
            idx = op[1]
            tmp = self.ex[:, idx].copy()
            self.ex[:, idx] = self.ez[:, idx]
            self.ez[:, idx] = tmp
            return
        if kind == "cx":
            pairs = op[1]
            if len(pairs):
                c, t = pairs[:, 0], pairs[:, 1]
                self.ex[:, t] ^= self.ex[:, c]
                self.ez[:, c] ^= self.ez[:, t]
            return
        if kind == "noise1":
            _, base, qubits, attr = op
            if self.probe is not None:
                for off, rows, codes in self._probe_hits(base, len(qubits)):
                    self._apply_code_1q(rows, int(qubits[off]), codes)
                return
            p = getattr(self.noise, attr)
            if p <= 0.0 or len(qubits) == 0:
                return
            u = self.rng.random((B, len(qubits)))
            hit = u < p
            code = np.minimum(u * (3.0 / p), 2.0).astype(np.uint8) + 1
            code = np.where(hit, code, 0).astype(np.uint8)
            self.ex[:, qubits] ^= ((code == 1) | (code == 2)).astype(np.uint8)
            self.ez[:, qubits] ^= ((code == 2) | (code == 3)).astype(np.uint8)
            return
        if kind == "noise2":
            _, base, pairs = op
            if len(pairs) == 0:
                return
            ca, ta = pairs[:, 0], pairs[:, 1]
            if self.probe is not None:
                for off, rows, codes in self._probe_hits(base, len(pairs)):
                    codes = np.asarray(codes)
                    self._apply_code_1q(rows, int(ca[off]), codes // 4)
                    self._apply_code_1q(rows, int(ta[off]), codes % 4)
                return
            p = self.noise.p2
            if p <= 0.0:
                return
            u = self.rng.random((B, len(pairs)))
            hit = u < p
            code = np.minimum(u * (15.0 / p), 14.0).astype(np.uint8) + 1
            code = np.where(hit, code, 0).astype(np.uint8)
            left, right = code // 4, code % 4
            self.ex[:, ca] ^= ((left == 1) | (left == 2)).astype(np.uint8)
            self.ez[:, ca] ^= ((left == 2) | (left == 3)).astype(np.uint8)
            self.ex[:, ta] ^= ((right == 1) | (right == 2)).astype(np.uint8)
            self.ez[:, ta] ^= ((right == 2) | (right == 3)).astype(np.uint8)
            return
        if kind == "inject":
            _, sid, q, axis, prob = op
            if self.probe is not None:
                hit = self.probe.get(sid)
                if hit is not None:
                    self._apply_code_1q(hit[0], q, hit[1])
                return
            if prob <= 0.0:
                return
            flips = (self.rng.random(B) < prob).astype(np.uint8)
            if axis == "X":
                self.ex[:, q] ^= flips
            else:
                self.ez[:, q] ^= flips
            return
        if kind == "meas_anc":
            base = op[1]
            self.a_ideal ^= self.e_ref
            out = self.a_ideal ^ self.ex[:, geo.n_data:]
            if self.probe is not None:
                for off, rows, _codes in self._probe_hits(base, geo.n_anc):
                    out[rows, off] ^= 1
            else:
                p = self.noise.p_meas
                if p > 0.0:
                    out = out ^ (self.rng.random((B, geo.n_anc)) < p).astype(np.uint8)
            self.records.append(out)
            return
        raise AssertionError(f"unknown op {kind!r}")

    # -- public stepwise API -------------------------------------------

    def run_round(self) -> np.ndarray:
        """Execute the next stabilizer cycle; returns raw ancilla bits (B, n_anc)."""
        if self.rounds_done >= self.plan.rounds:
            raise RuntimeError("all rounds already executed")
        for op in self.plan.round_ops[self.rounds_done]:
            self._run_op(op)
        self.rounds_done += 1
        return self.records[-1]

    def apply_pauli(self, data_label: str, pauli: str,
                    mask: np.ndarray | None = None) -> None:
        """Apply a deliberate X/Z gate on a data qubit (per-shot mask optional)."""
        q = self.plan.layout.data_index(data_label)
        bits = np.ones(self.batch, np.uint8) if mask is None else mask.astype(np.uint8)
        if pauli == "X":
            self.ex[:, q] ^= bits
        elif pauli == "Z":
            self.ez[:, q] ^= bits
        else:
            raise ValueError(f"pauli must be 'X' or 'Z', got {pauli!r}")

    def finalize(self) -> FinalizeResult:
        """Transversal readout in the memory basis; folds misreads into the frame."""
        if self.rounds_done != self.plan.rounds:
            raise RuntimeError(
                f"finalize after {self.rounds_done}/{self.plan.rounds} rounds"
            )
        geo = self.geo
        B = self.batch
        k = self._final_nullbasis.shape[0]
        if self.rng is not None and k:
            coeffs = self.rng.integers(0, 2, (B, k), dtype=np.uint8)
            ideal = (coeffs.astype(np.int16) @ self._final_nullbasis.astype(np.int16)) % 2
            ideal = ideal.astype(np.uint8) ^ self._final_x0
        else:
            ideal = np.broadcast_to(self._final_x0, (B, geo.n_data)).copy()
        err = self.ex if self.plan.basis == "Z" else self.ez
        flips = np.zeros((B, geo.n_data), np.uint8)
        if self.probe is not None:
            for off, rows, _codes in self._probe_hits(self.plan.final_meas_base, geo.n_data):
                flips[rows, off] ^= 1
        else:
            p = self.noise.p_meas
            if p > 0.0:
                flips = (self.rng.random((B, geo.n_data)) < p).astype(np.uint8)
        data_bits = ideal ^ err[:, : geo.n_data] ^ flips
        err[:, : geo.n_data] ^= flips  # misreads are indistinguishable from flips
        truth_x = (self.ex[:, : geo.n_data] & geo.zl_mask).sum(axis=1) % 2
        truth_z = (self.ez[:, : geo.n_data] & geo.xl_mask).sum(axis=1) % 2
        return FinalizeResult(data_bits, truth_x.astype(np.uint8), truth_z.astype(np.uint8))


# --------------------------------------------------------------------------
# sampling entry points


def _chunk_rng(master_seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(chunk_index,)))


def chunk_bounds(shots: int) -> list[tuple[int, int, int]]:
    """(chunk_index, start, size) partition of a shot count; fixed chunking
    keeps results independent of how chunks are distributed over workers."""
    out = []
    start = 0
    idx = 0
    while start < shots:
        size = min(CHUNK_SHOTS, shots - start)
        out.append((idx, start, size))
        start += size
        idx += 1
    return out


def _simulate_chunk(args: tuple) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    layout, basis, rounds, noise, injections, seed, chunk_index, size, prepared = args
    plan = build_plan(layout, basis, rounds, injections)
    eng = MemoryEngine(plan, noise, size, rng=_chunk_rng(seed, chunk_index), prepared=prepared)
    for _ in range(rounds):
        eng.run_round()
    fin = eng.finalize()
    anc = np.stack(eng.records, axis=1)  # (B, rounds, n_anc)
    return anc, fin.data_bits, fin.truth_x, fin.truth_z


def sample_memory_arrays(layout: CodeLayout, basis: str, rounds: int,
                         noise: NoiseParams, injections=(), *, shots: int,
                         seed: int, workers: int = 1, prepared: str = "0"):
    """Yield (ancilla_bits, data_bits, truth_x, truth_z) arrays per chunk."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    injections = tuple(injections)
    build_plan(layout, basis, rounds, injections)  # validate early
    tasks = [
        (layout, basis, rounds, noise, injections, seed, ci, size, prepared)
        for ci, _start, size in chunk_bounds(shots)
    ]
    if workers <= 1 or len(tasks) == 1:
        for t in tasks:
            yield _simulate_chunk(t)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_simulate_chunk, tasks, chunksize=1):
                yield res


def sample_memory(layout: CodeLayout, basis: str, rounds: int, noise: NoiseParams,
                  injections=(), *, shots: int, seed: int, workers: int = 1,
                  prepared: str = "0") -> list[ShotRecord]:
    """Simulate a memory experiment; one ShotRecord per shot."""
    records: list[ShotRecord] = []
    for anc, data, tx, tz in sample_memory_arrays(
        layout, basis, rounds, noise, injections,
        shots=shots, seed=seed, workers=workers, prepared=prepared,
    ):
        for i in range(anc.shape[0]):
            records.append(
                ShotRecord(anc[i], data[i], bool(tx[i]), bool(tz[i]), basis, seed)
            )
    return records


# --------------------------------------------------------------------------
# deterministic fault probing


def probe_outcomes(layout: CodeLayout, basis: str, rounds: int,
                   faults: list[tuple[int, int]], injections=(),
                   prepared: str = "0") -> FinalizeResult | tuple:
    """Run one deterministic shot per (site_id, code) fault; noise off.

    Returns (ancilla_bits (B, rounds, n_anc), FinalizeResult).
    """
    plan = build_plan(layout, basis, rounds, tuple(injections))
    B = len(faults)
    probe: dict[int, tuple[list, list]] = {}
    for row, (sid, code) in enumerate(faults):
        probe.setdefault(sid, ([], []))
        probe[sid][0].append(row)
        probe[sid][1].append(code)
    probe_arr = {
        sid: (np.array(rows, np.int64), np.array(codes, np.int64))
        for sid, (rows, codes) in probe.items()
    }
    eng = MemoryEngine(plan, NoiseParams(0, 0, 0, 0), B, probe_faults=probe_arr,
                       prepared=prepared)
    for _ in range(rounds):
        eng.run_round()
    fin = eng.finalize()
    anc = np.stack(eng.records, axis=1)
    return anc, fin


def list_fault_sites(layout: CodeLayout, basis: str, rounds: int,
                     injections=()) -> list[FaultSite]:
    return list(build_plan(layout, basis, rounds, tuple(injections)).sites)
