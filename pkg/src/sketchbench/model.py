"""Execution model for one-shot distributed graph sketching.

Every node of an undirected multigraph observes its 1-hop neighborhood, emits a
single bit-string message, and a referee decides k-edge connectivity from the
sorted message list alone.  Protocols are pluggable (encoder, decoder) pairs;
execution is a pure function of (protocol, graph, advice, shared randomness).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from hashlib import blake2b
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence, Union

import numpy as np


class UnknownNode(KeyError):
    """Node id outside 1..n."""


class EncodingOverflow(ValueError):
    """A node emitted more bits than the protocol's budget."""


class Advice(Enum):
    """Role knowledge revealed to a node on top of its neighbor list."""

    SIGMA = "sigma"
    A_RESTRICTED = "a_restricted"
    B_RESTRICTED = "b_restricted"


class Decision(Enum):
    CONNECTED = "connected"
    NOT_CONNECTED = "not_connected"


#: Message alphabet is '0'/'1', most significant bit first, no padding.
Bits = str


def check_bits(bits: Bits) -> Bits:
    if not isinstance(bits, str) or bits.strip("01") != "":
        raise ValueError(f"not a bit string: {bits!r}")
    return bits


EdgeInput = Union[
    Mapping[tuple[int, int], int],
    Iterable[tuple[int, int, int]],
]


class MultiGraph:
    """Undirected multigraph on node ids 1..n with positive edge multiplicities.

    No self-loops.  Edge access is symmetric: ``multiplicity(u, v)`` equals
    ``multiplicity(v, u)``.
    """

    __slots__ = ("n", "_edges", "_adj")

    def __init__(self, n: int, edges: EdgeInput = ()):
        if n < 1:
            raise ValueError(f"node count must be positive, got {n}")
        self.n = n
        self._edges: dict[tuple[int, int], int] = {}
        self._adj: dict[int, dict[int, int]] = {i: {} for i in range(1, n + 1)}
        if isinstance(edges, Mapping):
            items = [(u, v, m) for (u, v), m in edges.items()]
        else:
            items = list(edges)
        for u, v, m in items:
            self.add_edge(u, v, m)

    def _check_node(self, u: int) -> None:
        if not (1 <= u <= self.n):
            raise UnknownNode(u)

    def add_edge(self, u: int, v: int, mult: int = 1) -> None:
        self._check_node(u)
        self._check_node(v)
        if u == v:
            raise ValueError(f"self-loop at node {u}")
        if mult < 1:
            raise ValueError(f"multiplicity must be >= 1, got {mult}")
        key = (u, v) if u < v else (v, u)
        self._edges[key] = self._edges.get(key, 0) + mult
        self._adj[u][v] = self._adj[u].get(v, 0) + mult
        self._adj[v][u] = self._adj[v].get(u, 0) + mult

    @property
    def node_count(self) -> int:
        return self.n

    def multiplicity(self, u: int, v: int) -> int:
        self._check_node(u)
        self._check_node(v)
        key = (u, v) if u < v else (v, u)
        return self._edges.get(key, 0)

    def neighborhood(self, node: int) -> dict[int, int]:
        """Neighbor multiset of ``node`` as {neighbor: multiplicity}, ascending ids."""
        self._check_node(node)
        adj = self._adj[node]
        return {v: adj[v] for v in sorted(adj)}

    def degree(self, node: int) -> int:
        """Number of incident edges counted with multiplicity."""
        self._check_node(node)
        return sum(self._adj[node].values())

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """All edges as (u, v, mult) with u < v, ascending."""
        for u, v in sorted(self._edges):
            yield u, v, self._edges[(u, v)]

    def edge_slot_count(self) -> int:
        return len(self._edges)

    def total_multiplicity(self) -> int:
        return sum(self._edges.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiGraph):
            return NotImplemented
        return self.n == other.n and self._edges == other._edges

    def __hash__(self):
        return hash((self.n, tuple(sorted(self._edges.items()))))

    def __repr__(self) -> str:
        return f"MultiGraph(n={self.n}, edges={self.edge_slot_count()})"


def neighborhood(graph: MultiGraph, node: int) -> dict[int, int]:
    """Neighbor multiset of ``node``; multiplicity of v equals that of edge (node, v)."""
    return graph.neighborhood(node)


@dataclass(frozen=True)
class NodeView:
    """Everything a node knows when it encodes: its id, 1-hop multiset, advice, (n, k)."""

    id: int
    neighbors: tuple[tuple[int, int], ...]  # (neighbor id, multiplicity), ascending
    advice: Optional[Advice]
    n: int
    k: int

    def neighbor_ids(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.neighbors)

    def degree(self) -> int:
        return sum(m for _, m in self.neighbors)


def node_view(graph: MultiGraph, node: int, advice: Optional[Advice], k: int) -> NodeView:
    nbrs = tuple(sorted(graph.neighborhood(node).items()))
    return NodeView(id=node, neighbors=nbrs, advice=advice, n=graph.n, k=k)


class SharedRandomness:
    """Seed-addressed shared pseudorandom source.

    All parties holding the same seed derive identical generators for the same
    labels.  Deterministic protocols receive the empty source (seed ``None``)
    and must not draw from it.
    """

    __slots__ = ("seed",)

    def __init__(self, seed: Optional[int] = None):
        self.seed = seed

    @property
    def is_empty(self) -> bool:
        return self.seed is None

    def generator(self, *labels) -> np.random.Generator:
        if self.is_empty:
            raise ValueError("empty randomness source has no streams")
        tag = blake2b(repr(labels).encode(), digest_size=8).digest()
        key = int.from_bytes(tag, "big")
        return np.random.default_rng(np.random.SeedSequence(entropy=self.seed, spawn_key=(key,)))

    def __repr__(self) -> str:
        return f"SharedRandomness(seed={self.seed})"


EMPTY_RANDOMNESS = SharedRandomness(None)


@dataclass(frozen=True)
class SketchProtocol:
    """A one-shot sketching algorithm: per-node encoder plus referee decoder.

    ``encode`` must be a pure function of (view, randomness) and stay within
    ``max_bits``.  ``decode`` sees only the sorted (id, message) list and the
    shared randomness, never the graph.  ``k`` is the connectivity threshold
    the decoder answers for.
    """

    name: str
    k: int
    max_bits: int
    encode: Callable[[NodeView, SharedRandomness], Bits]
    decode: Callable[[Sequence[tuple[int, Bits]], SharedRandomness], Decision]
    deterministic: bool = True


@dataclass(frozen=True)
class Transcript:
    """One execution: per-node messages sorted by id, plus the referee decision."""

    protocol: str
    seed: Optional[int]
    messages: tuple[tuple[int, Bits], ...]
    decision: Decision

    def message_of(self, node: int) -> Bits:
        for i, bits in self.messages:
            if i == node:
                return bits
        raise UnknownNode(node)

    def to_json(self) -> str:
        return json.dumps(
            {
                "protocol": self.protocol,
                "seed": self.seed,
                "messages": [{"id": i, "bits": b} for i, b in self.messages],
                "decision": self.decision.value,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        obj = json.loads(text)
        return cls(
            protocol=obj["protocol"],
            seed=obj["seed"],
            messages=tuple((int(m["id"]), check_bits(m["bits"])) for m in obj["messages"]),
            decision=Decision(obj["decision"]),
        )


def execute(
    protocol: SketchProtocol,
    graph: MultiGraph,
    advice_map: Optional[Mapping[int, Optional[Advice]]] = None,
    randomness: Optional[SharedRandomness] = None,
    threads: int = 1,
) -> Transcript:
    """Run one round of the sketching model and return the transcript.

    Nodes encode independently (optionally on a thread pool); the referee
    decodes the canonically sorted message list.  Re-running with identical
    inputs yields a byte-identical transcript, for any ``threads``.
    """
    randomness = randomness if randomness is not None else EMPTY_RANDOMNESS
    advice_map = advice_map or {}

    def encode_one(node: int) -> tuple[int, Bits]:
        view = node_view(graph, node, advice_map.get(node), protocol.k)
        bits = check_bits(protocol.encode(view, randomness))
        if len(bits) > protocol.max_bits:
            raise EncodingOverflow(
                f"node {node} emitted {len(bits)} bits, budget {protocol.max_bits}"
            )
        return node, bits

    nodes = range(1, graph.n + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            messages = list(pool.map(encode_one, nodes))
    else:
        messages = [encode_one(node) for node in nodes]
    messages.sort()
    decision = protocol.decode(tuple(messages), randomness)
    return Transcript(
        protocol=protocol.name,
        seed=randomness.seed,
        messages=tuple(messages),
        decision=decision,
    )


def save_graph(graph: MultiGraph, path) -> None:
    """Write the text format: header ``n <count>``, then ``u v m`` lines, u < v ascending."""
    lines = [f"n {graph.n}"]
    lines.extend(f"{u} {v} {m}" for u, v, m in graph.edges())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> MultiGraph:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("n "):
        raise ValueError("graph file must start with a 'n <count>' header")
    n = int(lines[0].split()[1])
    graph = MultiGraph(n)
    prev = None
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"malformed edge line: {ln!r}")
        u, v, m = int(parts[0]), int(parts[1]), int(parts[2])
        if not u < v:
            raise ValueError(f"edge line must have u < v: {ln!r}")
        if prev is not None and (u, v) <= prev:
            raise ValueError(f"edge lines must be strictly ascending: {ln!r}")
        prev = (u, v)
        graph.add_edge(u, v, m)
    return graph


def save_transcript(transcript: Transcript, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(transcript.to_json() + "\n")


def load_transcript(path) -> Transcript:
    with open(path, "r", encoding="utf-8") as fh:
        return Transcript.from_json(fh.read())
