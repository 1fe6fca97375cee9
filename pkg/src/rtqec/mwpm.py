"""Exact minimum-weight matching baseline over the space-time detector graph.

The graph is built by probing the simulator: every elementary fault the
noise model can produce (X/Z component of each depolarizing site, each
measurement flip) is injected one at a time into a deterministic run, and
its defect signature among the tracked stabilizer kind becomes an edge —
between two detector nodes, or from one node to the boundary. Faults with
identical endpoints merge by exclusive-or probability composition
p = p1(1-p2) + p2(1-p1); edge weight is -ln(p/(1-p)). Each edge carries
whether its generating fault flips the tracked logical operator; merged
faults that disagree mark the edge ambiguous.

Nodes are (round, stabilizer) pairs, round 1..N for the measurement rounds
plus round N+1 for the defects of the final transversal readout; one
implicit boundary absorbs odd defects.

decode() is exact: all-pairs shortest paths (with logical parity and tie
ambiguity tracked through equal-weight alternatives), defect clustering
(cross-cluster pairings can never beat two boundary routes), then exact
subset DP up to 16 defects per cluster and depth-first branch-and-bound
beyond. Equal-weight matchings are tie-broken to the lexicographically
smallest pairing and surfaced via `ambiguous` when their logical verdicts
disagree.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .layout import CodeLayout
from .sim import NoiseParams, build_plan, list_fault_sites, probe_outcomes
from .syndrome import basis_kind_columns, defect_arrays

_TOL = 1e-9

Node = tuple[int, str]  # (round index, stabilizer label); round N+1 = final


def compose_probability(p: float, q: float) -> float:
    """Probability that exactly one of two independent faults fires."""
    return p * (1.0 - q) + q * (1.0 - p)


@dataclass
class Edge:
    a: Node | None  # None = boundary
    b: Node
    probability: float
    flips_logical: bool
    ambiguous: bool = False
    n_faults: int = 1

    @property
    def weight(self) -> float:
        p = self.probability
        return -math.log(p / (1.0 - p))


@dataclass
class MatchResult:
    pairs: list[tuple[Node, Node | None]]
    total_weight: float
    logical_flip: bool
    ambiguous: bool  # equal-weight alternatives disagree on the verdict


class DetectorGraph:
    """Immutable after build; decoding is pure and memoized."""

    def __init__(self, layout: CodeLayout, basis: str, rounds: int,
                 noise: NoiseParams, nodes: list[Node], edges: list[Edge]):
        self.layout = layout
        self.basis = basis
        self.rounds = rounds
        self.noise = noise
        self.nodes = nodes
        self.edges = edges
        self.node_index = {nd: i for i, nd in enumerate(nodes)}
        self.zero_probability = not edges
        n = len(nodes)
        # adjacency: (neighbor index or -1 for boundary, weight, flip, amb)
        self._adj: list[list[tuple[int, float, bool, bool]]] = [[] for _ in range(n)]
        for e in edges:
            bi = self.node_index[e.b]
            if e.a is None:
                self._adj[bi].append((-1, e.weight, e.flips_logical, e.ambiguous))
            else:
                ai = self.node_index[e.a]
                self._adj[ai].append((bi, e.weight, e.flips_logical, e.ambiguous))
                self._adj[bi].append((ai, e.weight, e.flips_logical, e.ambiguous))
        self._paths: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] | None = None
        self._decode_cache: dict[frozenset, MatchResult] = {}

    @property
    def final_round(self) -> int:
        return self.rounds + 1

    # -- shortest paths ---------------------------------------------------

    def _relax_all(self) -> None:
        """Fixed-point relaxation from every source, tracking (distance,
        logical parity of a minimal path, ambiguity among minimal paths)."""
        n = len(self.nodes)
        dist = np.full((n, n + 1), np.inf)  # column n = boundary
        par = np.zeros((n, n + 1), np.uint8)
        amb = np.zeros((n, n + 1), bool)
        for s in range(n):
            dist[s, s] = 0.0
        changed = True
        guard = 0
        while changed:
            changed = False
            guard += 1
            if guard > 4 * n + 8:
                raise AssertionError("shortest-path relaxation failed to settle")
            for u in range(n):
                for v, w, flip, eamb in self._adj[u]:
                    col = n if v == -1 else v
                    nd = dist[:, u] + w
                    npar = par[:, u] ^ int(flip)
                    namb = amb[:, u] | eamb
                    better = nd < dist[:, col] - _TOL
                    equal = ~better & (nd <= dist[:, col] + _TOL)
                    if better.any():
                        dist[better, col] = nd[better]
                        par[better, col] = npar[better]
                        amb[better, col] = namb[better]
                        changed = True
                    tie = equal & ((par[:, col] != npar) | (~amb[:, col] & namb))
                    if tie.any():
                        amb[tie, col] = True
                        changed = True
        self._paths = (dist, par, amb)

    def path_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._paths is None:
            self._relax_all()
        return self._paths

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "basis": self.basis,
            "distance": self.layout.distance,
            "rounds": self.rounds,
            "zero_probability": self.zero_probability,
            "nodes": [[r, s] for r, s in self.nodes],
            "edges": [
                {
                    "a": None if e.a is None else [e.a[0], e.a[1]],
                    "b": [e.b[0], e.b[1]],
                    "probability": e.probability,
                    "weight": e.weight,
                    "flips_logical": e.flips_logical,
                    "ambiguous": e.ambiguous,
                    "n_faults": e.n_faults,
                }
                for e in self.edges
            ],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _atoms_for_sites(sites, noise: NoiseParams):
    """(site_id, probe code, marginal probability) per elementary fault.

    Depolarizing marginals: a 1q channel puts X (or Z) on the qubit in 2 of
    3 outcomes -> 2p/3; a 2q channel puts X (or Z) on one leg in 8 of 15
    outcomes -> 8p/15. The injected codes probe exactly one component.
    """
    atoms = []
    for s in sites:
        if s.kind == "inject":
            continue  # graphs describe the stationary noise model only
        p = getattr(noise, s.prob_attr)
        if p <= 0.0:
            continue
        if s.kind == "meas":
            atoms.append((s.site_id, 1, p))
        elif s.kind == "gate2":
            m = 8.0 * p / 15.0
            for code in (4, 12, 1, 3):  # X/Z on the left leg, X/Z on the right
                atoms.append((s.site_id, code, m))
        else:  # gate1 / idle
            m = 2.0 * p / 3.0
            atoms.append((s.site_id, 1, m))
            atoms.append((s.site_id, 3, m))
    return atoms


def build_graph(layout: CodeLayout, rounds: int, noise: NoiseParams,
                basis: str = "Z") -> DetectorGraph:
    """Probe every elementary fault and assemble the detector graph."""
    build_plan(layout, basis, rounds)  # validates arguments
    sites = list_fault_sites(layout, basis, rounds)
    atoms = _atoms_for_sites(sites, noise)
    cols = basis_kind_columns(layout, basis)
    labels = [layout.stabilizers[c].ancilla for c in cols]
    nodes: list[Node] = [(n, lbl) for n in range(1, rounds + 2) for lbl in labels]

    merged: dict[tuple, list] = {}
    if atoms:
        anc, fin = probe_outcomes(layout, basis, rounds,
                                  [(sid, code) for sid, code, _p in atoms])
        x, x_m = defect_arrays(layout, basis, anc, fin.data_bits)
        truth = fin.truth_x if basis == "Z" else fin.truth_z
        xk = x[:, :, cols]  # (B, rounds, n_kind)
        for row, (sid, code, p) in enumerate(atoms):
            hits: list[Node] = [
                (int(r) + 1, labels[int(c)]) for r, c in zip(*np.nonzero(xk[row]))
            ]
            hits += [(rounds + 1, labels[int(c)]) for c in np.nonzero(x_m[row])[0]]
            flip = bool(truth[row])
            if not hits:
                if flip:
                    raise AssertionError(
                        f"fault at site {sid} flips the logical without any "
                        f"defect — undetectable; graph model invalid"
                    )
                continue
            if len(hits) > 2:
                raise AssertionError(
                    f"fault at site {sid} code {code} produced {len(hits)} "
                    f"defects of one kind; matching graph needs <= 2"
                )
            key = (hits[0], hits[1]) if len(hits) == 2 else (None, hits[0])
            if key[0] is not None and key[1] < key[0]:
                key = (key[1], key[0])
            merged.setdefault(key, []).append((p, flip))

    edges = []
    for (a, b), faults in sorted(merged.items(), key=lambda kv: (kv[0][0] or (0, ""), kv[0][1])):
        p_total = 0.0
        p_by_flag = {False: 0.0, True: 0.0}
        for p, flip in faults:
            p_total = compose_probability(p_total, p)
            p_by_flag[flip] = compose_probability(p_by_flag[flip], p)
        flip = p_by_flag[True] > p_by_flag[False]
        ambiguous = p_by_flag[True] > 0.0 and p_by_flag[False] > 0.0
        edges.append(Edge(a, b, p_total, flip, ambiguous, len(faults)))
    return DetectorGraph(layout, basis, rounds, noise, nodes, edges)


# --------------------------------------------------------------------------
# exact decoding


def _cluster(ids: list[int], dist: np.ndarray, bd: np.ndarray) -> list[list[int]]:
    """Split defects into groups; pairing across groups can never beat
    routing both defects to the boundary (kept at equality so exact ties
    stay visible inside one group)."""
    parent = list(range(len(ids)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if dist[ids[i], ids[j]] <= bd[ids[i]] + bd[ids[j]] + _TOL:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(len(ids)):
        groups.setdefault(find(i), []).append(ids[i])
    return list(groups.values())


def _solve_cluster_dp(ids, dist, bd, par, bpar, amb, bamb):
    """Exact matching over one cluster by subset DP.

    Returns (weight, pairs, parity, ambiguous): pairs as (i, j) index tuples
    with j = -1 for boundary; parity = logical flip of the lexicographically
    smallest optimal pairing; ambiguous = optimal pairings disagree on
    parity, or a chosen path itself is ambiguous.
    """
    k = len(ids)
    full = (1 << k) - 1
    INF = float("inf")
    dp = [INF] * (1 << k)
    dp[0] = 0.0
    pars: list[set] = [set() for _ in range(1 << k)]
    pars[0] = {0}
    ambs = [False] * (1 << k)
    for mask in range(1, 1 << k):
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        candidates = [(bd[ids[i]], rest, int(bpar[ids[i]]), bool(bamb[ids[i]]))]
        mm = rest
        while mm:
            j = (mm & -mm).bit_length() - 1
            mm ^= 1 << j
            candidates.append((dist[ids[i], ids[j]], rest ^ (1 << j),
                               int(par[ids[i], ids[j]]), bool(amb[ids[i], ids[j]])))
        best = INF
        pset: set = set()
        aflag = False
        for w, sub, pr, am in candidates:
            tot = w + dp[sub]
            if tot < best - _TOL:
                best = tot
                pset = {pr ^ q for q in pars[sub]}
                aflag = am or ambs[sub]
            elif tot <= best + _TOL:
                pset |= {pr ^ q for q in pars[sub]}
                aflag = aflag or am or ambs[sub]
        dp[mask] = best
        pars[mask] = pset
        ambs[mask] = aflag

    # reconstruct lexicographically smallest optimal pairing
    pairs = []
    parity = 0
    chosen_amb = False
    mask = full
    while mask:
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        options = [(-1, bd[ids[i]], rest, int(bpar[ids[i]]), bool(bamb[ids[i]]))]
        mm = rest
        while mm:
            j = (mm & -mm).bit_length() - 1
            mm ^= 1 << j
            options.append((j, dist[ids[i], ids[j]], rest ^ (1 << j),
                            int(par[ids[i], ids[j]]), bool(amb[ids[i], ids[j]])))
        for j, w, sub, pr, am in options:  # boundary first, then index order
            if w + dp[sub] <= dp[mask] + _TOL:
                pairs.append((i, j))
                parity ^= pr
                chosen_amb = chosen_amb or am
                mask = sub
                break
        else:
            raise AssertionError("DP reconstruction lost the optimum")
    ambiguous = chosen_amb or len(pars[full]) > 1
    return dp[full], pairs, parity, ambiguous


def _solve_cluster_bnb(ids, dist, bd, par, bpar, amb, bamb):
    """Exact branch-and-bound for clusters too large for the DP table."""
    k = len(ids)
    order = list(range(k))
    best = {"w": float("inf"), "pairs": None, "par": 0, "amb": False, "tie_par": set()}

    def rec(remaining: tuple[int, ...], w: float, pairs, parity: int, pamb: bool):
        if w > best["w"] + _TOL:
            return
        if not remaining:
            if w < best["w"] - _TOL:
                best.update(w=w, pairs=list(pairs), par=parity, amb=pamb,
                            tie_par={parity})
            else:
                best["tie_par"].add(parity)
                best["amb"] = best["amb"] or pamb
            return
        i, rest = remaining[0], remaining[1:]
        rec(rest, w + bd[ids[i]], pairs + [(i, -1)],
            parity ^ int(bpar[ids[i]]), pamb or bool(bamb[ids[i]]))
        for pos, j in enumerate(rest):
            rec(rest[:pos] + rest[pos + 1:], w + dist[ids[i], ids[j]],
                pairs + [(i, j)], parity ^ int(par[ids[i], ids[j]]),
                pamb or bool(amb[ids[i], ids[j]]))

    rec(tuple(order), 0.0, [], 0, False)
    ambiguous = best["amb"] or len(best["tie_par"]) > 1
    return best["w"], best["pairs"], best["par"], ambiguous


def decode(graph: DetectorGraph, defects) -> MatchResult:
    """Exact minimum-weight matching of a defect set (list of (round, label))."""
    key = frozenset(defects)
    if len(key) != len(defects):
        raise ValueError("duplicate defects in input")
    cached = graph._decode_cache.get(key)
    if cached is not None:
        return cached
    ids = []
    for nd in sorted(key):
        idx = graph.node_index.get(tuple(nd))
        if idx is None:
            raise ValueError(f"unknown detector node {nd!r}")
        ids.append(idx)
    dist, par, amb = graph.path_tables()
    n = len(graph.nodes)
    bd, bpar, bamb = dist[:, n], par[:, n], amb[:, n]
    for i in ids:
        if not np.isfinite(bd[i]) and not np.isfinite(
                np.delete(dist[i, :n], i)).any():
            raise RuntimeError(
                f"defect {graph.nodes[i]} is disconnected; no feasible matching"
            )

    total = 0.0
    parity = 0
    ambiguous = False
    pairs: list[tuple[Node, Node | None]] = []
    for cluster in _cluster(ids, dist, bd):
        solver = _solve_cluster_dp if len(cluster) <= 16 else _solve_cluster_bnb
        w, cpairs, cpar, camb = solver(cluster, dist, bd, par, bpar, amb, bamb)
        if not math.isfinite(w):
            raise RuntimeError("no feasible matching for defect cluster")
        total += w
        parity ^= cpar
        ambiguous = ambiguous or camb
        for i, j in cpairs:
            a = graph.nodes[cluster[i]]
            b = graph.nodes[cluster[j]] if j >= 0 else None
            pairs.append((a, b))
    result = MatchResult(sorted(pairs), total, bool(parity), ambiguous)
    if len(graph._decode_cache) > 200_000:
        graph._decode_cache.clear()
    graph._decode_cache[key] = result
    return result


def defects_to_nodes(graph: DetectorGraph, x_kind: np.ndarray,
                     x_m: np.ndarray | None = None) -> list[Node]:
    """Convert one shot's defect bits (rounds, n_kind) + optional final row
    into detector nodes."""
    cols = basis_kind_columns(graph.layout, graph.basis)
    labels = [graph.layout.stabilizers[c].ancilla for c in cols]
    out: list[Node] = [
        (int(r) + 1, labels[int(c)]) for r, c in zip(*np.nonzero(x_kind))
    ]
    if x_m is not None:
        out += [(graph.final_round, labels[int(c)]) for c in np.nonzero(x_m)[0]]
    return out


def decode_batch(graph: DetectorGraph, x_kind: np.ndarray,
                 x_m: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Decode many shots (B, rounds, n_kind) (+ final (B, n_kind)); returns
    (logical_flip, ambiguous) arrays. Distinct defect patterns are decoded
    once and memoized on the graph."""
    B = x_kind.shape[0]
    flips = np.zeros(B, bool)
    ambs = np.zeros(B, bool)
    packed = np.packbits(
        x_kind.reshape(B, -1) if x_m is None
        else np.concatenate([x_kind.reshape(B, -1), x_m], axis=1),
        axis=1,
    )
    _uniq, first, inverse = np.unique(
        packed, axis=0, return_index=True, return_inverse=True)
    uflips = np.zeros(len(first), bool)
    uambs = np.zeros(len(first), bool)
    for u, shot in enumerate(first):
        nodes = defects_to_nodes(graph, x_kind[shot],
                                 None if x_m is None else x_m[shot])
        res = decode(graph, nodes)
        uflips[u] = res.logical_flip
        uambs[u] = res.ambiguous
    flips = uflips[inverse]
    ambs = uambs[inverse]
    return flips, ambs
