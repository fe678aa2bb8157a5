"""Linear connectivity sketches and the k-fold forest-peeling decoder.

Each node sketches its signed edge-incidence vector at several geometric
sampling levels; cell triples (sum, id-weighted sum, fingerprint) live in a
prime field, so sketches of node sets add up to sketches of their boundary.
The referee peels k edge-disjoint spanning forests out of the k independent
sketch stacks (subtracting already-used edges sketch-side) and decides
k-edge connectivity exactly on the union certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .mincut import global_min_cut
from .model import Bits, Decision, MultiGraph, NodeView, SharedRandomness, SketchProtocol

#: Field modulus; cell values stay below 2^31 so uint64 products are exact.
PRIME = (1 << 31) - 1

#: Calibrated upper bound on the failure rate of one boundary-edge recovery
#: attempt (one component, one round, all repetitions); see the Monte Carlo
#: checks in the test suite.
SAMPLER_ATTEMPT_FAILURE = 0.15

_CELLS_PER_TRIPLE = 3
_CELL_BITS = 32


class DecodeError(ValueError):
    """Malformed sketch message."""


@dataclass(frozen=True)
class SketchConfig:
    """Derived sketch dimensions for (n, k, delta)."""

    n: int
    stacks: int
    rounds: int
    reps: int
    levels: int

    @classmethod
    def make(cls, n: int, k: int, delta: float) -> "SketchConfig":
        if not 0 < delta < 0.5:
            raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
        if n < 1 or k < 1:
            raise ValueError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
        log_n = max(1, math.ceil(math.log2(max(n, 2))))
        return cls(
            n=n,
            stacks=k,
            rounds=log_n + 2,
            reps=max(2, math.ceil(math.log2(1 / delta))),
            levels=2 * log_n + 2,
        )

    @property
    def configs(self) -> int:
        return self.stacks * self.rounds * self.reps

    @property
    def triples(self) -> int:
        return self.configs * self.levels

    @property
    def bits(self) -> int:
        return self.triples * _CELLS_PER_TRIPLE * _CELL_BITS


def budget_bits(n: int, k: int, delta: float) -> int:
    """Exact message length; grows as O(k log^2 n log(1/delta))."""
    return SketchConfig.make(n, k, delta).bits


def slot_of(u: int, v: int, n: int) -> int:
    """Edge slot index of (u, v), u < v, in [1, n^2]."""
    if not 1 <= u < v <= n:
        raise ValueError(f"need 1 <= u < v <= n, got ({u}, {v})")
    return (u - 1) * n + v


def pair_of_slot(slot: int, n: int) -> Optional[tuple[int, int]]:
    u, r = divmod(slot - 1, n)
    u, v = u + 1, r + 1
    if 1 <= u < v <= n:
        return u, v
    return None


@lru_cache(maxsize=8)
def _tables(seed: int, n: int, stacks: int, rounds: int, reps: int, levels: int):
    """Shared subsampling hashes and fingerprint power table for one run."""
    rand = SharedRandomness(seed)
    rng = rand.generator("agm-tables", n, stacks, rounds, reps, levels)
    configs = stacks * rounds * reps
    hashes = rng.integers(0, 1 << 64, size=(configs, n * n + 1), dtype=np.uint64, endpoint=False)
    base = int(rng.integers(2, PRIME))
    powers = np.empty(n * n + 1, dtype=np.uint64)
    acc = 1
    for e in range(n * n + 1):
        powers[e] = acc
        acc = (acc * base) % PRIME
    return hashes, powers


def _config_tables(seeds: SharedRandomness, cfg: SketchConfig):
    if seeds.is_empty:
        raise ValueError("sketching needs shared randomness; got the empty source")
    return _tables(seeds.seed, cfg.n, cfg.stacks, cfg.rounds, cfg.reps, cfg.levels)


def _sketch_cells(
    cfg: SketchConfig,
    hashes: np.ndarray,
    powers: np.ndarray,
    incident: Sequence[tuple[int, int]],
) -> np.ndarray:
    """Cell array (stacks, rounds, reps, levels, 3) for signed slot updates."""
    shape = (cfg.stacks, cfg.rounds, cfg.reps, cfg.levels, 3)
    if not incident:
        return np.zeros(shape, dtype=np.uint64)
    slots = np.array([e for e, _ in incident], dtype=np.int64)
    signed = np.array([c for _, c in incident], dtype=np.int64)

    sub = hashes[:, slots]  # (configs, deg)
    mask = np.ones((cfg.configs, cfg.levels, len(slots)), dtype=np.uint64)
    if cfg.levels > 1:
        shifts = (64 - np.arange(1, cfg.levels, dtype=np.uint64))
        mask[:, 1:, :] = (sub[:, None, :] >> shifts[None, :, None]) == 0

    mask_i = mask.astype(np.int64)
    counts = mask_i @ signed  # (configs, levels)
    ids = mask_i @ (signed * slots)
    signed_mod = np.where(signed >= 0, signed, signed + PRIME).astype(np.uint64) % PRIME
    fp_terms = (signed_mod * powers[slots]) % PRIME
    fps = mask @ fp_terms

    cells = np.empty((cfg.configs, cfg.levels, 3), dtype=np.uint64)
    cells[:, :, 0] = np.mod(counts, PRIME).astype(np.uint64)
    cells[:, :, 1] = np.mod(ids, PRIME).astype(np.uint64)
    cells[:, :, 2] = fps % PRIME
    return cells.reshape(shape)


def _incidence(view: NodeView) -> list[tuple[int, int]]:
    """Signed slot updates of a node: +mult below the diagonal, -mult above."""
    out = []
    for v, mult in view.neighbors:
        if view.id < v:
            out.append((slot_of(view.id, v, view.n), mult))
        else:
            out.append((slot_of(v, view.id, view.n), -mult))
    return out


def node_sketch(
    view: NodeView, seeds: SharedRandomness, k: int, delta: float
) -> np.ndarray:
    """Raw cell array of one node's incidence vector."""
    cfg = SketchConfig.make(view.n, k, delta)
    hashes, powers = _config_tables(seeds, cfg)
    return _sketch_cells(cfg, hashes, powers, _incidence(view))


def combine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cell-wise field addition; the sketch of a disjoint union of updates."""
    return (a + b) % np.uint64(PRIME)


def _cells_to_bits(cells: np.ndarray) -> Bits:
    flat = cells.reshape(-1).astype(">u4")
    bit_arr = np.unpackbits(flat.view(np.uint8))
    return (bit_arr + ord("0")).astype(np.uint8).tobytes().decode("ascii")


def _bits_to_cells(bits: Bits, cfg: SketchConfig) -> np.ndarray:
    if len(bits) != cfg.bits:
        raise DecodeError(f"expected {cfg.bits} bits, got {len(bits)}")
    raw = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    if raw.max(initial=0) > 1:
        raise DecodeError("message contains non-bit characters")
    cells = np.packbits(raw).view(">u4").astype(np.uint64)
    return cells.reshape(cfg.stacks, cfg.rounds, cfg.reps, cfg.levels, 3)


def agm_encode(view: NodeView, seeds: SharedRandomness, k: int, delta: float) -> Bits:
    """One node's message: k independent spanning-forest sketch stacks."""
    return _cells_to_bits(node_sketch(view, seeds, k, delta))


def extract_edge(
    cells: np.ndarray, powers: np.ndarray, n: int
) -> Optional[int]:
    """Recover a slot from a (reps, levels, 3) slice if some triple is 1-sparse."""
    flat = cells.reshape(-1, 3)
    for cnt_u, ids_u, fp_u in flat:
        cnt, ids, fp = int(cnt_u), int(ids_u), int(fp_u)
        if cnt == 0:
            continue
        slot = ids * pow(cnt, PRIME - 2, PRIME) % PRIME
        if not 1 <= slot <= n * n or pair_of_slot(slot, n) is None:
            continue
        if cnt * int(powers[slot]) % PRIME == fp:
            return slot
    return None


def _boruvka(
    cfg: SketchConfig,
    powers: np.ndarray,
    sketches: dict[int, np.ndarray],
    n: int,
) -> list[int]:
    """Extract one spanning forest; sketches are per-node (rounds, reps, levels, 3)."""
    parent = list(range(n + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comp = {node: sketches[node] for node in range(1, n + 1)}
    forest: list[int] = []
    for rnd in range(cfg.rounds):
        roots = sorted({find(x) for x in range(1, n + 1)})
        if len(roots) == 1:
            break
        proposals = []
        for root in roots:
            slot = extract_edge(comp[root][rnd], powers, n)
            if slot is not None:
                proposals.append(slot)
        for slot in sorted(set(proposals)):
            u, v = pair_of_slot(slot, n)
            ru, rv = find(u), find(v)
            if ru == rv:
                continue
            parent[rv] = ru
            comp[ru] = combine(comp[ru], comp[rv])
            forest.append(slot)
    return forest


def agm_decide_kconn(
    messages: Sequence[tuple[int, Bits]],
    seeds: SharedRandomness,
    n: int,
    k: int,
    delta: float,
) -> Decision:
    """Peel k forests from the sketches and decide on the union certificate."""
    if sorted(node for node, _ in messages) != list(range(1, n + 1)):
        raise DecodeError("need exactly one message per node 1..n")
    if n == 1:
        return Decision.CONNECTED
    cfg = SketchConfig.make(n, k, delta)
    hashes, powers = _config_tables(seeds, cfg)
    cells = {node: _bits_to_cells(bits, cfg) for node, bits in messages}

    used: dict[int, int] = {}  # slot -> multiplicity claimed by earlier forests
    for stack in range(cfg.stacks):
        incident_used: dict[int, list[tuple[int, int]]] = {node: [] for node in range(1, n + 1)}
        for slot, count in used.items():
            u, v = pair_of_slot(slot, n)
            incident_used[u].append((slot, count))
            incident_used[v].append((slot, -count))
        adjusted = {}
        for node in range(1, n + 1):
            correction = _sketch_cells(cfg, hashes, powers, incident_used[node])
            adjusted[node] = (
                cells[node][stack] + np.uint64(PRIME) - correction[stack]
            ) % np.uint64(PRIME)
        forest = _boruvka(cfg, powers, adjusted, n)
        for slot in forest:
            used[slot] = used.get(slot, 0) + 1

    certificate = MultiGraph(n)
    for slot, count in used.items():
        u, v = pair_of_slot(slot, n)
        certificate.add_edge(u, v, count)
    if not used:
        return Decision.NOT_CONNECTED
    value = global_min_cut(certificate).value
    return Decision.CONNECTED if value >= k else Decision.NOT_CONNECTED


def make_agm_protocol(n: int, k: int, delta: float) -> SketchProtocol:
    """Wrap the sketch stack as a pluggable protocol for the execution model."""

    def encode(view: NodeView, rand: SharedRandomness) -> Bits:
        return agm_encode(view, rand, k, delta)

    def decode(messages, rand: SharedRandomness) -> Decision:
        return agm_decide_kconn(messages, rand, len(messages), k, delta)

    return SketchProtocol(
        name=f"agm(k={k},delta={delta})",
        k=k,
        max_bits=budget_bits(n, k, delta),
        encode=encode,
        decode=decode,
        deterministic=False,
    )
