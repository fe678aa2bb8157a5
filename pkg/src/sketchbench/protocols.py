"""Reference sketching protocols.

A grab bag of deterministic protocols used to drive the verification
pipelines: the full-information baseline, constant and parity toys, bit
truncation, and a two-bit toy whose role messages depend only on the smallest
hub-range neighbor (so role partitions collapse predictably).
"""

from __future__ import annotations

import math
from hashlib import blake2b
from typing import Optional

from .mincut import global_min_cut
from .model import (
    Advice,
    Bits,
    Decision,
    MultiGraph,
    NodeView,
    SketchProtocol,
)


def hub_layout(n: int) -> tuple[int, int, int, int]:
    """Canonical id layout: returns (w_lo, w_hi, u_a, u_b) for an n-node graph."""
    w = math.isqrt(n)
    w_lo = n - w - 1
    w_hi = n - 2
    return w_lo, w_hi, n - 1, n


def view_payload(view: NodeView) -> str:
    adv = view.advice.value if view.advice is not None else "none"
    nbrs = ",".join(f"{v}x{m}" for v, m in view.neighbors)
    return f"{view.id}|{adv}|{nbrs}"


def text_to_bits(text: str) -> Bits:
    return "".join(f"{byte:08b}" for byte in text.encode("utf-8"))


def bits_to_text(bits: Bits) -> str:
    if len(bits) % 8 != 0:
        raise ValueError("bit length not a multiple of 8")
    data = bytes(int(bits[i : i + 8], 2) for i in range(0, len(bits), 8))
    return data.decode("utf-8")


def hash_bits(nbits: int, *key) -> Bits:
    digest = blake2b(repr(key).encode(), digest_size=8).digest()
    value = int.from_bytes(digest, "big") % (1 << nbits)
    return format(value, f"0{nbits}b")


def _parity_decision(messages) -> Decision:
    ones = sum(bits.count("1") for _, bits in messages)
    return Decision.CONNECTED if ones % 2 == 0 else Decision.NOT_CONNECTED


def full_information(n: int, k: int) -> SketchProtocol:
    """Every node ships its whole view; the referee rebuilds the graph exactly.

    Each undirected edge is read off the higher-id endpoint's claim; on a
    genuine execution both endpoints agree, so this reconstructs the input
    graph and the referee recomputes the exact minimum cut.
    """

    def encode(view: NodeView, _rand) -> Bits:
        return text_to_bits(view_payload(view))

    def decode(messages, _rand) -> Decision:
        n_nodes = len(messages)
        if n_nodes < 2:
            return Decision.CONNECTED
        graph = MultiGraph(n_nodes)
        for node, bits in messages:
            payload = bits_to_text(bits)
            _id, _adv, nbrs = payload.split("|")
            if not nbrs:
                continue
            for entry in nbrs.split(","):
                v, m = entry.split("x")
                v, m = int(v), int(m)
                if v < node:
                    graph.add_edge(v, node, m)
        return (
            Decision.CONNECTED
            if global_min_cut(graph).value >= k
            else Decision.NOT_CONNECTED
        )

    return SketchProtocol(
        name="full-info",
        k=k,
        max_bits=8 * (32 + 16 * n),
        encode=encode,
        decode=decode,
    )


def constant(k: int) -> SketchProtocol:
    """Every node emits the single bit 0; the referee always answers connected."""

    def encode(_view, _rand) -> Bits:
        return "0"

    def decode(_messages, _rand) -> Decision:
        return Decision.CONNECTED

    return SketchProtocol(name="const", k=k, max_bits=1, encode=encode, decode=decode)


def truncation(bits: int, n: int, k: int) -> SketchProtocol:
    """Last ``bits`` bits of the full-information payload, zero-padded to length.

    The tail of the payload varies with the neighborhood, so truncated
    messages still depend on the node's view.
    """

    def encode(view: NodeView, _rand) -> Bits:
        full = text_to_bits(view_payload(view))
        tail = full[-bits:] if len(full) >= bits else full
        return tail.rjust(bits, "0")

    def decode(messages, _rand) -> Decision:
        return _parity_decision(messages)

    return SketchProtocol(
        name=f"trunc{bits}", k=k, max_bits=bits, encode=encode, decode=decode
    )


def parity(k: int) -> SketchProtocol:
    """One bit: parity of the multiplicity-weighted neighbor id sum."""

    def encode(view: NodeView, _rand) -> Bits:
        return str(sum(v * m for v, m in view.neighbors) & 1)

    def decode(messages, _rand) -> Decision:
        return _parity_decision(messages)

    return SketchProtocol(name="parity", k=k, max_bits=1, encode=encode, decode=decode)


def toy_two_bit(k: int) -> SketchProtocol:
    """Two-bit toy: role messages keyed on the smallest W-range neighbor.

    Nodes without advice hash their full view, so hub and clique messages
    track the graph.  Advised nodes hash (id, role, min W-neighbor) only,
    which makes neighborhoods sharing their minimum indistinguishable.
    """

    def encode(view: NodeView, _rand) -> Bits:
        if view.advice is None:
            return hash_bits(2, "raw", view.id, view.neighbors)
        w_lo, w_hi, _, _ = hub_layout(view.n)
        w_neighbors = [v for v, _ in view.neighbors if w_lo <= v <= w_hi]
        return hash_bits(2, "role", view.id, view.advice.value, min(w_neighbors, default=0))

    def decode(messages, _rand) -> Decision:
        return _parity_decision(messages)

    return SketchProtocol(name="toy2", k=k, max_bits=2, encode=encode, decode=decode)


def make_protocol(name: str, n: int, k: int) -> SketchProtocol:
    """Build a named protocol: const, full, parity, toy2, or trunc:<bits>."""
    if name == "const":
        return constant(k)
    if name == "full":
        return full_information(n, k)
    if name == "parity":
        return parity(k)
    if name == "toy2":
        return toy_two_bit(k)
    if name.startswith("trunc:"):
        return truncation(int(name.split(":", 1)[1]), n, k)
    raise ValueError(f"unknown protocol {name!r}")
