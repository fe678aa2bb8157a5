"""The hard graph family for k-edge connectivity.

Members live on node sets V, W = A ∪ B, and two hubs u_A, u_B.  A and B induce
cliques wired to their hub; every V-node is either A-restricted (W-edges only
into A, possibly none, plus k parallel hub-A edges), B-restricted (at least one
W-edge into B plus k parallel hub-B edges), or the determining node sigma,
which has exactly 2k-1 W-edges and k parallel hub-A edges.  Whether the graph
is k-edge connected is decided entirely by how sigma's W-edges split between
A and B.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .mincut import is_k_edge_connected
from .model import Advice, MultiGraph


class SpecError(ValueError):
    """A graph description violates one of the family rules."""

    def __init__(self, rule: str, message: str):
        super().__init__(f"[{rule}] {message}")
        self.rule = rule


class Condition(Enum):
    C0 = "C0"  # at least k of sigma's W-edges land in A: not k-edge connected
    C1 = "C1"  # at least k land in B: k-edge connected


def layout(n: int) -> tuple[range, range, int, int]:
    """Canonical id layout: (V ids, W ids, u_A, u_B).

    V occupies 1..n-|W|-2, W the next |W| = isqrt(n) ids, and the hubs are
    n-1 and n.
    """
    w = math.isqrt(n)
    v_count = n - w - 2
    return range(1, v_count + 1), range(v_count + 1, v_count + w + 1), n - 1, n


@dataclass
class LBGraphSpec:
    """Symbolic description of one family member."""

    n: int
    k: int
    sigma: int
    a_side: frozenset[int]
    b_side: frozenset[int]
    restrictions: dict[int, Advice] = field(default_factory=dict)
    w_neighbors: dict[int, frozenset[int]] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "k": self.k,
                "sigma": self.sigma,
                "A": sorted(self.a_side),
                "B": sorted(self.b_side),
                "restrictions": {str(v): adv.value for v, adv in sorted(self.restrictions.items())},
                "w_neighbors": {str(v): sorted(s) for v, s in sorted(self.w_neighbors.items())},
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "LBGraphSpec":
        obj = json.loads(text)
        return cls(
            n=obj["n"],
            k=obj["k"],
            sigma=obj["sigma"],
            a_side=frozenset(obj["A"]),
            b_side=frozenset(obj["B"]),
            restrictions={int(v): Advice(adv) for v, adv in obj["restrictions"].items()},
            w_neighbors={int(v): frozenset(s) for v, s in obj["w_neighbors"].items()},
        )


def validate(spec: LBGraphSpec, gamma: float = 0.5) -> None:
    """Check every family rule; raise SpecError naming the violated one."""
    n, k = spec.n, spec.k
    v_ids, w_ids, _, _ = layout(n)
    w_set = frozenset(w_ids)

    if not 2 <= k <= gamma * math.sqrt(n):
        raise SpecError("sizes", f"need 2 <= k <= {gamma}*sqrt(n); got k={k}, n={n}")
    if len(v_ids) < 1:
        raise SpecError("sizes", f"empty V for n={n}")
    if spec.a_side | spec.b_side != w_set or spec.a_side & spec.b_side:
        raise SpecError("sizes", "A and B must partition W")
    if len(spec.a_side) < k or len(spec.b_side) < k:
        raise SpecError("sizes", f"|A| and |B| must both be >= k={k}")
    if spec.sigma not in v_ids:
        raise SpecError("sizes", f"sigma={spec.sigma} outside V")

    expect_roles = set(v_ids) - {spec.sigma}
    if set(spec.restrictions) != expect_roles:
        raise SpecError("sizes", "restrictions must cover exactly V minus sigma")

    for v in v_ids:
        nbrs = spec.w_neighbors.get(v, frozenset())
        if v == spec.sigma:
            if len(nbrs) != 2 * k - 1:
                raise SpecError(
                    "C0/C1", f"sigma must have exactly {2 * k - 1} W-edges, got {len(nbrs)}"
                )
            if not nbrs <= w_set:
                raise SpecError("C0/C1", f"sigma neighborhood leaves W: {sorted(nbrs - w_set)}")
            continue
        role = spec.restrictions[v]
        if role is Advice.A_RESTRICTED:
            if not nbrs <= spec.a_side:
                raise SpecError("E3", f"A-restricted node {v} has edges outside A")
        elif role is Advice.B_RESTRICTED:
            if not nbrs:
                raise SpecError("E4", f"B-restricted node {v} needs at least one B-edge")
            if not nbrs <= spec.b_side:
                raise SpecError("E4", f"B-restricted node {v} has edges outside B")
        else:
            raise SpecError("sizes", f"node {v} has invalid role {role}")


def condition_of(spec: LBGraphSpec) -> Condition:
    """C1 iff at least k of sigma's W-edges land in B; exactly one case holds."""
    in_b = len(spec.w_neighbors[spec.sigma] & spec.b_side)
    return Condition.C1 if in_b >= spec.k else Condition.C0


def build_lb_graph(spec: LBGraphSpec, gamma: float = 0.5) -> tuple[MultiGraph, dict[int, Optional[Advice]]]:
    """Materialize the spec as a multigraph plus the per-node advice map."""
    validate(spec, gamma=gamma)
    n, k = spec.n, spec.k
    v_ids, _, u_a, u_b = layout(n)
    graph = MultiGraph(n)

    for side in (spec.a_side, spec.b_side):
        for x, y in itertools.combinations(sorted(side), 2):
            graph.add_edge(x, y, 1)
    for w in sorted(spec.a_side):
        graph.add_edge(u_a, w, 1)
    for w in sorted(spec.b_side):
        graph.add_edge(u_b, w, 1)

    advice: dict[int, Optional[Advice]] = {i: None for i in range(1, n + 1)}
    for v in v_ids:
        for w in sorted(spec.w_neighbors.get(v, frozenset())):
            graph.add_edge(v, w, 1)
        if v == spec.sigma:
            graph.add_edge(v, u_a, k)
            advice[v] = Advice.SIGMA
        elif spec.restrictions[v] is Advice.A_RESTRICTED:
            graph.add_edge(v, u_a, k)
            advice[v] = Advice.A_RESTRICTED
        else:
            graph.add_edge(v, u_b, k)
            advice[v] = Advice.B_RESTRICTED
    return graph, advice


def verify_dichotomy(spec: LBGraphSpec) -> bool:
    """Oracle check: the graph is k-edge connected exactly when C1 holds."""
    graph, _ = build_lb_graph(spec)
    return is_k_edge_connected(graph, spec.k) == (condition_of(spec) is Condition.C1)


# Name used by the operation map.
verify_lemma_lb = verify_dichotomy


def random_spec(
    n: int,
    k: int,
    seed: int,
    condition: Optional[Condition] = None,
    a_size: Optional[int] = None,
) -> LBGraphSpec:
    """Sample a valid spec; optionally force the side of the dichotomy."""
    rng = np.random.default_rng(seed)
    v_ids, w_ids, _, _ = layout(n)
    w_sorted = list(w_ids)
    w_count = len(w_sorted)
    if w_count < 2 * k:
        raise SpecError("sizes", f"|W|={w_count} cannot fit two sides of size {k}")
    if a_size is None:
        a_size = int(rng.integers(k, w_count - k + 1))
    a_side = frozenset(w_sorted[:a_size])
    b_side = frozenset(w_sorted[a_size:])

    sigma = int(rng.integers(1, len(v_ids) + 1))
    restrictions: dict[int, Advice] = {}
    w_neighbors: dict[int, frozenset[int]] = {}
    a_sorted = sorted(a_side)
    b_sorted = sorted(b_side)
    for v in v_ids:
        if v == sigma:
            continue
        if rng.random() < 0.5:
            restrictions[v] = Advice.A_RESTRICTED
            picks = [w for w in a_sorted if rng.random() < 0.4]
            w_neighbors[v] = frozenset(picks)
        else:
            restrictions[v] = Advice.B_RESTRICTED
            picks = [w for w in b_sorted if rng.random() < 0.4]
            if not picks:
                picks = [b_sorted[int(rng.integers(0, len(b_sorted)))]]
            w_neighbors[v] = frozenset(picks)

    d = 2 * k - 1
    if condition is None:
        chosen = rng.choice(w_sorted, size=d, replace=False)
    else:
        if condition is Condition.C0:
            lo, hi = k, min(d, len(a_side))
        else:
            lo, hi = max(0, d - len(b_side)), k - 1
        in_a = int(rng.integers(lo, hi + 1))
        from_a = rng.choice(a_sorted, size=in_a, replace=False)
        from_b = rng.choice(b_sorted, size=d - in_a, replace=False)
        chosen = list(from_a) + list(from_b)
    w_neighbors[sigma] = frozenset(int(x) for x in chosen)

    spec = LBGraphSpec(
        n=n,
        k=k,
        sigma=sigma,
        a_side=a_side,
        b_side=b_side,
        restrictions=restrictions,
        w_neighbors=w_neighbors,
    )
    validate(spec)
    if condition is not None and condition_of(spec) is not condition:
        raise SpecError("C0/C1", "sampled neighborhood does not realize the requested condition")
    return spec


def sigma_neighborhood_sweep(base: LBGraphSpec):
    """Yield one spec per possible sigma W-neighborhood, all else fixed."""
    w_all = sorted(base.a_side | base.b_side)
    d = 2 * base.k - 1
    for subset in itertools.combinations(w_all, d):
        nbrs = dict(base.w_neighbors)
        nbrs[base.sigma] = frozenset(subset)
        yield replace(base, w_neighbors=nbrs)
