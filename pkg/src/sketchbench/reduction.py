"""Three-party simulation of a sketching protocol on the hard graph family.

A valid unique-overlap instance is translated into a member of the family:
Alice wires the A-side of the partition according to her vector, Bob the
B-side, and Charlie produces sketches for the hubs and every V-node without
ever reading a vector entry - pinned nodes reuse pre-computed witness
messages, the rest are encoded directly from their k parallel hub edges.  The
referee's decision on the assembled messages answers the instance, and the
assembly is bit-identical to honestly executing the protocol on the
compatible graph.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from .lbgraph import LBGraphSpec, build_lb_graph, layout
from .model import (
    Advice,
    Bits,
    Decision,
    EMPTY_RANDOMNESS,
    MultiGraph,
    NodeView,
    SketchProtocol,
    execute,
    node_view,
)
from .overlap import InvalidInstance, OverlapInstance
from .setfam import (
    NoGoodPartition,
    PartitionContext,
    SetFamily,
    choose_partition,
    complete_family,
)

Member = tuple[int, ...]


class NotEnoughGoodNodes(RuntimeError):
    def __init__(self, found: int, needed: int):
        super().__init__(f"only {found} nodes acquired pairs, need {needed}")
        self.found = found
        self.needed = needed


def reduction_size(m: int) -> int:
    """Number of graph nodes used to host an m-coordinate instance."""
    return 2 * math.ceil(4 * m / 3)


@dataclass
class ReductionContext:
    """Everything the three parties pre-compute before seeing an instance."""

    m: int
    s: int
    k: int
    n: int
    partition: PartitionContext
    good_ids: tuple[int, ...]  # instance coordinate i lives at node good_ids[i-1]
    protocol_name: str

    @property
    def a_side(self) -> frozenset[int]:
        return self.partition.a_side

    @property
    def b_side(self) -> frozenset[int]:
        return self.partition.b_side

    @property
    def family(self) -> SetFamily:
        return self.partition.family

    def node_of(self, coordinate: int) -> int:
        return self.good_ids[coordinate - 1]

    def pair_of(self, coordinate: int) -> tuple[Member, Member]:
        rec = self.partition.good[self.node_of(coordinate)]
        return rec.s0, rec.s1

    def witnesses_of(self, coordinate: int) -> tuple[Bits, Bits, Bits]:
        return self.partition.good[self.node_of(coordinate)].witness_messages()

    def to_json(self) -> str:
        return json.dumps(
            {
                "m": self.m,
                "s": self.s,
                "k": self.k,
                "n": self.n,
                "good_ids": list(self.good_ids),
                "protocol": self.protocol_name,
                "partition": json.loads(self.partition.to_json()),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ReductionContext":
        obj = json.loads(text)
        return cls(
            m=obj["m"],
            s=obj["s"],
            k=obj["k"],
            n=obj["n"],
            partition=PartitionContext.from_json(json.dumps(obj["partition"])),
            good_ids=tuple(obj["good_ids"]),
            protocol_name=obj["protocol"],
        )


def build_context(
    protocol: SketchProtocol,
    m: int,
    s: int,
    k: int,
    seed: int,
    trials: int = 32,
    family: Optional[SetFamily] = None,
) -> ReductionContext:
    """Choose the partition and pin the first m nodes carrying pairs."""
    if not protocol.deterministic:
        raise ValueError("the simulation is defined for deterministic protocols")
    if protocol.k != k:
        raise ValueError(f"protocol decides k={protocol.k}, context asked for k={k}")
    if s > math.ceil(m / 2):
        raise ValueError(f"need s <= ceil(m/2); got s={s}, m={m}")
    n = reduction_size(m)
    v_ids, w_ids, _, _ = layout(n)
    if len(w_ids) < 2 * k:
        raise ValueError(f"|W|={len(w_ids)} too small for two sides of size k={k}")
    if len(v_ids) < m:
        raise ValueError(f"|V|={len(v_ids)} cannot host {m} coordinates")
    if family is None:
        d = 2 * k - 1
        if math.comb(len(w_ids), d) > 4096:
            raise ValueError("complete family too large here; pass an explicit family")
        family = complete_family(w_ids, d)
    try:
        partition = choose_partition(protocol, family, w_ids, k, trials, seed)
    except NoGoodPartition:
        raise NotEnoughGoodNodes(0, m) from None
    good_sorted = sorted(partition.good)
    if len(good_sorted) < m:
        raise NotEnoughGoodNodes(len(good_sorted), m)
    return ReductionContext(
        m=m,
        s=s,
        k=k,
        n=n,
        partition=partition,
        good_ids=tuple(good_sorted[:m]),
        protocol_name=protocol.name,
    )


def _wire_pair_side(
    graph: MultiGraph, node: int, chosen: Member, side: frozenset[int]
) -> None:
    for w in chosen:
        if w in side:
            graph.add_edge(node, w, 1)


def alice_messages(
    x, ctx: ReductionContext, protocol: SketchProtocol
) -> list[tuple[int, Bits]]:
    """Sketches of the A-side nodes, computed from Alice's local wiring.

    Her graph holds the A-clique, the hub edge for every A-node, and for each
    coordinate in her support the pair edges into A: bit 0 selects S1, bit 1
    selects S0.
    """
    if len(x.support) != ctx.s:
        raise InvalidInstance("support", f"Alice's support must have size {ctx.s}")
    _, _, u_a, _ = layout(ctx.n)
    graph = MultiGraph(ctx.n)
    a_sorted = sorted(ctx.a_side)
    for w1, w2 in combinations(a_sorted, 2):
        graph.add_edge(w1, w2, 1)
    for w in a_sorted:
        graph.add_edge(u_a, w, 1)
    for i in x.support:
        s0, s1 = ctx.pair_of(i)
        _wire_pair_side(graph, ctx.node_of(i), s1 if x[i] == 0 else s0, ctx.a_side)
    return [
        (w, protocol.encode(node_view(graph, w, None, ctx.k), EMPTY_RANDOMNESS))
        for w in a_sorted
    ]


def bob_messages(
    y, ctx: ReductionContext, protocol: SketchProtocol
) -> list[tuple[int, Bits]]:
    """Mirror of Alice on the B-side: bit 0 selects S0, bit 1 selects S1."""
    if len(y.support) != ctx.s:
        raise InvalidInstance("support", f"Bob's support must have size {ctx.s}")
    _, _, _, u_b = layout(ctx.n)
    graph = MultiGraph(ctx.n)
    b_sorted = sorted(ctx.b_side)
    for w1, w2 in combinations(b_sorted, 2):
        graph.add_edge(w1, w2, 1)
    for w in b_sorted:
        graph.add_edge(u_b, w, 1)
    for j in y.support:
        s0, s1 = ctx.pair_of(j)
        _wire_pair_side(graph, ctx.node_of(j), s0 if y[j] == 0 else s1, ctx.b_side)
    return [
        (w, protocol.encode(node_view(graph, w, None, ctx.k), EMPTY_RANDOMNESS))
        for w in b_sorted
    ]


def _shared_coordinate(ctx: ReductionContext, supp_x, supp_y) -> int:
    common = set(supp_x) & set(supp_y)
    if len(common) != 1:
        raise InvalidInstance("P2", f"supports share {len(common)} indices")
    return next(iter(common))


def charlie_messages(
    supp_x: tuple[int, ...],
    supp_y: tuple[int, ...],
    ctx: ReductionContext,
    protocol: SketchProtocol,
) -> list[tuple[int, Bits]]:
    """Sketches for both hubs and every V-node, from supports and witnesses only."""
    sigma = _shared_coordinate(ctx, supp_x, supp_y)
    v_ids, _, u_a, u_b = layout(ctx.n)
    coord_of = {ctx.node_of(i): i for i in range(1, ctx.m + 1)}
    b_nodes = {ctx.node_of(j) for j in supp_y if j != sigma}

    hub_a: list[tuple[int, int]] = [(w, 1) for w in sorted(ctx.a_side)]
    hub_b: list[tuple[int, int]] = [(w, 1) for w in sorted(ctx.b_side)]
    for v in v_ids:
        if v in b_nodes:
            hub_b.append((v, ctx.k))
        else:
            hub_a.append((v, ctx.k))

    def encode_view(node: int, neighbors, advice) -> Bits:
        view = NodeView(
            id=node,
            neighbors=tuple(sorted(neighbors)),
            advice=advice,
            n=ctx.n,
            k=ctx.k,
        )
        return protocol.encode(view, EMPTY_RANDOMNESS)

    messages = [
        (u_a, encode_view(u_a, hub_a, None)),
        (u_b, encode_view(u_b, hub_b, None)),
    ]
    direct_view = ((u_a, ctx.k),)
    for v in v_ids:
        coordinate = coord_of.get(v)
        if coordinate is None or (coordinate not in supp_x and coordinate not in supp_y):
            messages.append((v, encode_view(v, direct_view, Advice.A_RESTRICTED)))
            continue
        w_sigma, w_a, w_b = ctx.witnesses_of(coordinate)
        if coordinate == sigma:
            messages.append((v, w_sigma))
        elif coordinate in supp_x:
            messages.append((v, w_a))
        else:
            messages.append((v, w_b))
    return messages


def charlie_decide(
    supp_x: tuple[int, ...],
    supp_y: tuple[int, ...],
    msgs_a: list[tuple[int, Bits]],
    msgs_b: list[tuple[int, Bits]],
    ctx: ReductionContext,
    protocol: SketchProtocol,
) -> bool:
    """Feed the assembled sketches to the referee; yes iff it says connected."""
    assembled = sorted(msgs_a + msgs_b + charlie_messages(supp_x, supp_y, ctx, protocol))
    decision = protocol.decode(tuple(assembled), EMPTY_RANDOMNESS)
    return decision is Decision.CONNECTED


def simulate(
    instance: OverlapInstance, ctx: ReductionContext, protocol: SketchProtocol
) -> tuple[bool, list[tuple[int, Bits]]]:
    """Full three-party run: returns (answer, every message the referee sees)."""
    msgs_a = alice_messages(instance.x, ctx, protocol)
    msgs_b = bob_messages(instance.y, ctx, protocol)
    supp_x, supp_y = instance.x.support, instance.y.support
    verdict = charlie_decide(supp_x, supp_y, msgs_a, msgs_b, ctx, protocol)
    assembled = sorted(msgs_a + msgs_b + charlie_messages(supp_x, supp_y, ctx, protocol))
    return verdict, assembled


def build_compatible_graph(
    instance: OverlapInstance, ctx: ReductionContext
) -> tuple[MultiGraph, dict[int, Optional[Advice]]]:
    """The family member determined by the instance through the stored pairs."""
    v_ids, _, _, _ = layout(ctx.n)
    sigma_node = ctx.node_of(instance.sigma)
    supp_x, supp_y = set(instance.x.support), set(instance.y.support)

    restrictions: dict[int, Advice] = {}
    w_neighbors: dict[int, frozenset[int]] = {}
    coord_of = {ctx.node_of(i): i for i in range(1, ctx.m + 1)}
    for v in v_ids:
        coordinate = coord_of.get(v)
        if v != sigma_node:
            in_b = coordinate is not None and coordinate in supp_y and coordinate != instance.sigma
            restrictions[v] = Advice.B_RESTRICTED if in_b else Advice.A_RESTRICTED
        if coordinate is None:
            w_neighbors[v] = frozenset()
            continue
        s0, s1 = ctx.pair_of(coordinate)
        chosen: set[int] = set()
        if coordinate in supp_x:
            x_bit = instance.x[coordinate]
            chosen |= set(s1 if x_bit == 0 else s0) & ctx.a_side
        if coordinate in supp_y:
            y_bit = instance.y[coordinate]
            chosen |= set(s0 if y_bit == 0 else s1) & ctx.b_side
        w_neighbors[v] = frozenset(chosen)

    spec = LBGraphSpec(
        n=ctx.n,
        k=ctx.k,
        sigma=sigma_node,
        a_side=ctx.a_side,
        b_side=ctx.b_side,
        restrictions=restrictions,
        w_neighbors=w_neighbors,
    )
    return build_lb_graph(spec)


def fidelity_mismatches(
    instance: OverlapInstance, ctx: ReductionContext, protocol: SketchProtocol
) -> list[int]:
    """Node ids whose simulated message differs from the honest execution."""
    _, assembled = simulate(instance, ctx, protocol)
    graph, advice = build_compatible_graph(instance, ctx)
    honest = execute(protocol, graph, advice).messages
    return [
        node
        for (node, sim_bits), (_, real_bits) in zip(assembled, honest)
        if sim_bits != real_bits
    ]


def verify_fidelity(
    instance: OverlapInstance, ctx: ReductionContext, protocol: SketchProtocol
) -> bool:
    """True iff the referee's simulated input is bit-identical to the honest one."""
    return not fidelity_mismatches(instance, ctx, protocol)


def alice_bob_bits(
    msgs_a: list[tuple[int, Bits]], msgs_b: list[tuple[int, Bits]]
) -> int:
    """Total bits the two wiring parties send."""
    return sum(len(bits) for _, bits in msgs_a) + sum(len(bits) for _, bits in msgs_b)
