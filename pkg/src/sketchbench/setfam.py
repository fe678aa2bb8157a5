"""Bounded-intersection set families and message partitions.

Given a deterministic protocol, each candidate W-neighborhood of a V-node
induces a message in each of the node's three possible roles (sigma,
A-restricted on the A-projection, B-restricted on the B-projection).  Grouping
neighborhoods by message yields three partitions; neighborhoods sharing a
block in all three simultaneously are indistinguishable to the referee.  A
separated pair inside such a common block pins the node: one neighborhood
forces the graph disconnected below k, the other forces it k-edge connected,
yet the node's messages cannot tell them apart.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .lbgraph import layout
from .model import Advice, Bits, NodeView, EMPTY_RANDOMNESS, SketchProtocol

Member = tuple[int, ...]  # a W-neighborhood, ascending ids


class FamilyTooSparse(RuntimeError):
    """The sampler could not reach the requested family size."""

    def __init__(self, target: int, achieved: int, attempts: int):
        super().__init__(
            f"requested {target} members, best achieved {achieved} after {attempts} draws"
        )
        self.target = target
        self.achieved = achieved


class DeterminismRequired(TypeError):
    """Message partitions are only defined for deterministic protocols."""


class NoGoodPartition(RuntimeError):
    """No sampled partition produced a single node with an indistinguishable pair."""


@dataclass(frozen=True)
class SetFamily:
    """Distinct same-size subsets of a ground set with bounded pairwise overlap."""

    ground: tuple[int, ...]
    d: int
    epsilon: float
    members: tuple[Member, ...]

    @property
    def intersection_bound(self) -> int:
        return math.floor(self.epsilon * self.d / 2)

    def verify(self) -> None:
        """Exhaustive O(|S|^2) re-check of the invariants; raises on violation."""
        ground = set(self.ground)
        seen = set(self.members)
        if len(seen) != len(self.members):
            raise ValueError("family members must be distinct")
        for s in self.members:
            if len(s) != self.d or not set(s) <= ground:
                raise ValueError(f"member {s} is not a {self.d}-subset of the ground set")
            if list(s) != sorted(s):
                raise ValueError(f"member {s} is not in canonical order")
        bound = self.intersection_bound
        members = [set(s) for s in self.members]
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                inter = len(members[i] & members[j])
                if inter > bound:
                    raise ValueError(
                        f"members {self.members[i]} and {self.members[j]} share {inter} > {bound}"
                    )

    def to_json_obj(self) -> dict:
        return {
            "ground": list(self.ground),
            "d": self.d,
            "epsilon": self.epsilon,
            "members": [list(s) for s in self.members],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SetFamily":
        fam = cls(
            ground=tuple(obj["ground"]),
            d=obj["d"],
            epsilon=obj["epsilon"],
            members=tuple(tuple(s) for s in obj["members"]),
        )
        fam.verify()
        return fam


def complete_family(w_ids: Iterable[int], d: int) -> SetFamily:
    """All d-subsets of W, with the vacuous overlap bound d-1."""
    import itertools

    ground = tuple(sorted(w_ids))
    members = tuple(itertools.combinations(ground, d))
    return SetFamily(ground=ground, d=d, epsilon=2 * (d - 1) / d, members=members)


def random_family(w_ids: Iterable[int], d: int, size: int, seed: int) -> SetFamily:
    """``size`` distinct random d-subsets, with the vacuous overlap bound d-1."""
    ground = tuple(sorted(w_ids))
    if math.comb(len(ground), d) < size:
        raise ValueError(f"only {math.comb(len(ground), d)} distinct d-subsets exist")
    rng = np.random.default_rng(seed)
    kept: set[Member] = set()
    while len(kept) < size:
        kept.add(tuple(sorted(int(x) for x in rng.choice(ground, size=d, replace=False))))
    family = SetFamily(
        ground=ground, d=d, epsilon=2 * (d - 1) / d, members=tuple(sorted(kept))
    )
    family.verify()
    return family


def sample_family(
    w_ids: Iterable[int],
    d: int,
    epsilon: float,
    target_size: int,
    seed: int,
    max_attempts: int = 20000,
) -> SetFamily:
    """Rejection-sample a family of uniform d-subsets with bounded overlap.

    Draws d-subsets uniformly at random and keeps one when its intersection
    with every kept member stays within floor(epsilon*d/2).  The returned
    family is re-verified exhaustively; if the target size is out of reach
    within ``max_attempts`` draws, FamilyTooSparse reports the best size.
    """
    ground = tuple(sorted(w_ids))
    if d > len(ground):
        raise ValueError(f"d={d} exceeds |W|={len(ground)}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
    if target_size < 2:
        raise ValueError(f"target size must be at least 2, got {target_size}")

    bound = math.floor(epsilon * d / 2)
    rng = np.random.default_rng(seed)
    kept: list[Member] = []
    kept_sets: list[set[int]] = []
    attempts = 0
    while len(kept) < target_size and attempts < max_attempts:
        attempts += 1
        draw = tuple(sorted(int(x) for x in rng.choice(ground, size=d, replace=False)))
        s = set(draw)
        if draw in kept:
            continue
        if all(len(s & t) <= bound for t in kept_sets):
            kept.append(draw)
            kept_sets.append(s)
    if len(kept) < target_size:
        raise FamilyTooSparse(target_size, len(kept), attempts)
    family = SetFamily(ground=ground, d=d, epsilon=epsilon, members=tuple(sorted(kept)))
    family.verify()
    return family


@dataclass(frozen=True)
class MessagePartition:
    """Inputs of one role grouped by the message the node would send."""

    keyspace: str  # "sigma" | "a_projection" | "b_projection"
    blocks: dict[Bits, tuple[Member, ...]]

    def block_count(self) -> int:
        return len(self.blocks)

    def message_of(self, key: Member) -> Bits:
        for bits, members in self.blocks.items():
            if key in members:
                return bits
        raise KeyError(key)


def _role_view(node: int, neighbors: Member, hub: int, advice: Advice, n: int, k: int) -> NodeView:
    entries = [(w, 1) for w in neighbors]
    entries.append((hub, k))
    entries.sort()
    return NodeView(id=node, neighbors=tuple(entries), advice=advice, n=n, k=k)


def _group(protocol: SketchProtocol, keyspace: str, views: dict[Member, NodeView]) -> MessagePartition:
    grouped: dict[Bits, list[Member]] = {}
    for key in sorted(views):
        bits = protocol.encode(views[key], EMPTY_RANDOMNESS)
        grouped.setdefault(bits, []).append(key)
    return MessagePartition(
        keyspace=keyspace, blocks={bits: tuple(keys) for bits, keys in grouped.items()}
    )


def message_partitions(
    protocol: SketchProtocol,
    node: int,
    family: SetFamily,
    a_side: frozenset[int],
    b_side: frozenset[int],
    n: int,
    k: int,
) -> tuple[MessagePartition, MessagePartition, MessagePartition]:
    """The three per-role partitions induced by a deterministic protocol.

    Sigma role: neighborhoods are whole family members plus k parallel hub-A
    edges.  A-restricted role: distinct A-projections plus hub-A.  B-restricted
    role: distinct B-projections plus hub-B.
    """
    if not protocol.deterministic:
        raise DeterminismRequired(f"protocol {protocol.name!r} is randomized")
    _, _, u_a, u_b = layout(n)

    sigma_views = {
        s: _role_view(node, s, u_a, Advice.SIGMA, n, k) for s in family.members
    }
    a_projections = {tuple(w for w in s if w in a_side) for s in family.members}
    b_projections = {tuple(w for w in s if w in b_side) for s in family.members}
    a_views = {t: _role_view(node, t, u_a, Advice.A_RESTRICTED, n, k) for t in a_projections}
    b_views = {t: _role_view(node, t, u_b, Advice.B_RESTRICTED, n, k) for t in b_projections}

    return (
        _group(protocol, "sigma", sigma_views),
        _group(protocol, "a_projection", a_views),
        _group(protocol, "b_projection", b_views),
    )


def common_block(
    p_sigma: MessagePartition,
    p_a: MessagePartition,
    p_b: MessagePartition,
    family: SetFamily,
) -> tuple[Member, ...]:
    """Largest subset of the family sharing one block in all three partitions.

    The projection partitions are lifted back to whole neighborhoods through
    the projection preimages; members are grouped by their message triple and
    the largest group wins, ties broken by the lexicographically smallest
    triple.  Pigeonhole floor: the result has at least |S| / 2^(3L) members.
    """
    msg_sigma = {key: bits for bits, keys in p_sigma.blocks.items() for key in keys}
    msg_a = {key: bits for bits, keys in p_a.blocks.items() for key in keys}
    msg_b = {key: bits for bits, keys in p_b.blocks.items() for key in keys}

    a_ground = {w for key in msg_a for w in key}
    groups: dict[tuple[Bits, Bits, Bits], list[Member]] = {}
    for s in family.members:
        proj_a = tuple(w for w in s if w in a_ground)
        proj_b = tuple(w for w in s if w not in a_ground)
        triple = (msg_sigma[s], msg_a[proj_a], msg_b[proj_b])
        groups.setdefault(triple, []).append(s)
    best_triple = min(groups, key=lambda t: (-len(groups[t]), t))
    return tuple(groups[best_triple])


def find_separated_pair(
    members: Sequence[Member],
    a_side: frozenset[int],
    b_side: frozenset[int],
    k: int,
) -> Optional[tuple[Member, Member]]:
    """Pick one neighborhood of each kind from ``members``, if both exist.

    S0 must have at least k elements in A (forcing the disconnected case), S1
    at most k-1 (forcing the connected case); each is the first candidate in
    canonical order, except that S0 candidates keeping a nonempty B-projection
    win first, since a B-restricted node wired by S0 needs at least one B-edge.
    """
    c0 = [s for s in sorted(members) if len(set(s) & a_side) >= k]
    c1 = [s for s in sorted(members) if len(set(s) & a_side) <= k - 1]
    if not c0 or not c1:
        return None
    s0 = next((s for s in c0 if set(s) & b_side), c0[0])
    s1 = c1[0]
    # Distinctness of both projections is implied by the size split.
    assert tuple(w for w in s0 if w in a_side) != tuple(w for w in s1 if w in a_side)
    assert tuple(w for w in s0 if w in b_side) != tuple(w for w in s1 if w in b_side)
    return s0, s1


@dataclass(frozen=True)
class SeparatedPairRecord:
    """An indistinguishable separated pair for one node, with its witness messages."""

    node: int
    s0: Member
    s1: Member
    message_sigma: Bits
    message_a: Bits
    message_b: Bits

    def witness_messages(self) -> tuple[Bits, Bits, Bits]:
        return self.message_sigma, self.message_a, self.message_b


def verify_record(
    record: SeparatedPairRecord,
    protocol: SketchProtocol,
    a_side: frozenset[int],
    b_side: frozenset[int],
    n: int,
    k: int,
) -> bool:
    """Recompute all four pair properties from scratch; nothing cached is trusted."""
    _, _, u_a, u_b = layout(n)
    s0, s1 = set(record.s0), set(record.s1)
    if not (len(s0 & a_side) >= k and len(s0 & b_side) <= k - 1):
        return False
    if not (len(s1 & a_side) <= k - 1 and len(s1 & b_side) >= k):
        return False

    def enc(neighbors: Iterable[int], hub: int, advice: Advice) -> Bits:
        view = _role_view(record.node, tuple(sorted(neighbors)), hub, advice, n, k)
        return protocol.encode(view, EMPTY_RANDOMNESS)

    if enc(record.s0, u_a, Advice.SIGMA) != record.message_sigma:
        return False
    if enc(record.s1, u_a, Advice.SIGMA) != record.message_sigma:
        return False
    pa0, pa1 = sorted(s0 & a_side), sorted(s1 & a_side)
    pb0, pb1 = sorted(s0 & b_side), sorted(s1 & b_side)
    if pa0 == pa1 or pb0 == pb1:
        return False
    if enc(pa0, u_a, Advice.A_RESTRICTED) != record.message_a:
        return False
    if enc(pa1, u_a, Advice.A_RESTRICTED) != record.message_a:
        return False
    if enc(pb0, u_b, Advice.B_RESTRICTED) != record.message_b:
        return False
    if enc(pb1, u_b, Advice.B_RESTRICTED) != record.message_b:
        return False
    return True


@dataclass
class PartitionContext:
    """A chosen W-partition together with every node's indistinguishable pair."""

    a_side: frozenset[int]
    b_side: frozenset[int]
    family: SetFamily
    good: dict[int, SeparatedPairRecord] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "A": sorted(self.a_side),
                "B": sorted(self.b_side),
                "family": self.family.to_json_obj(),
                "records": {
                    str(node): {
                        "S0": list(rec.s0),
                        "S1": list(rec.s1),
                        "witness": {
                            "sigma": rec.message_sigma,
                            "a": rec.message_a,
                            "b": rec.message_b,
                        },
                    }
                    for node, rec in sorted(self.good.items())
                },
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "PartitionContext":
        obj = json.loads(text)
        good = {}
        for node, rec in obj["records"].items():
            good[int(node)] = SeparatedPairRecord(
                node=int(node),
                s0=tuple(rec["S0"]),
                s1=tuple(rec["S1"]),
                message_sigma=rec["witness"]["sigma"],
                message_a=rec["witness"]["a"],
                message_b=rec["witness"]["b"],
            )
        return cls(
            a_side=frozenset(obj["A"]),
            b_side=frozenset(obj["B"]),
            family=SetFamily.from_json_obj(obj["family"]),
            good=good,
        )


def _derive_nodes(w_ids: tuple[int, ...]) -> tuple[range, int]:
    """Recover V and n from canonical W ids (contiguous, followed by the hubs)."""
    lo, hi = min(w_ids), max(w_ids)
    if set(w_ids) != set(range(lo, hi + 1)):
        raise ValueError("W ids must be a contiguous range in the canonical layout")
    v_count = lo - 1
    n = v_count + len(w_ids) + 2
    if math.isqrt(n) != len(w_ids):
        raise ValueError(f"|W|={len(w_ids)} inconsistent with n={n} in the canonical layout")
    return range(1, v_count + 1), n


def choose_partition(
    protocol: SketchProtocol,
    family: SetFamily,
    w_ids: Iterable[int],
    k: int,
    trials: int,
    seed: int,
) -> PartitionContext:
    """Sample W-partitions and keep the one giving the most pinned nodes.

    Each trial assigns W-members to A or B uniformly (resampling until both
    sides reach size k), derives per-node message partitions, and records an
    indistinguishable separated pair wherever the common block contains both
    kinds.  Trial seeds are derived by counter, so the result is a pure
    function of the inputs.
    """
    w_sorted = tuple(sorted(w_ids))
    v_ids, n = _derive_nodes(w_sorted)
    if len(w_sorted) < 2 * k:
        raise ValueError(f"|W|={len(w_sorted)} cannot host two sides of size {k}")
    if not protocol.deterministic:
        raise DeterminismRequired(f"protocol {protocol.name!r} is randomized")

    best: Optional[PartitionContext] = None
    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))
        for _ in range(1000):
            mask = rng.random(len(w_sorted)) < 0.5
            a_side = frozenset(w for w, pick in zip(w_sorted, mask) if pick)
            b_side = frozenset(w_sorted) - a_side
            if len(a_side) >= k and len(b_side) >= k:
                break
        else:
            raise ValueError("could not sample a partition with both sides of size >= k")

        good: dict[int, SeparatedPairRecord] = {}
        for node in v_ids:
            p_sigma, p_a, p_b = message_partitions(protocol, node, family, a_side, b_side, n, k)
            block = common_block(p_sigma, p_a, p_b, family)
            pair = find_separated_pair(block, a_side, b_side, k)
            if pair is None:
                continue
            s0, s1 = pair
            record = SeparatedPairRecord(
                node=node,
                s0=s0,
                s1=s1,
                message_sigma=p_sigma.message_of(s0),
                message_a=p_a.message_of(tuple(w for w in s0 if w in a_side)),
                message_b=p_b.message_of(tuple(w for w in s0 if w in b_side)),
            )
            assert verify_record(record, protocol, a_side, b_side, n, k)
            good[node] = record
        if best is None or len(good) > len(best.good):
            best = PartitionContext(a_side=a_side, b_side=b_side, family=family, good=good)

    assert best is not None
    if not best.good:
        raise NoGoodPartition(
            f"no node acquired an indistinguishable pair in {trials} trials"
        )
    return best
