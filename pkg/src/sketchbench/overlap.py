"""The unique-overlap three-party problem.

Alice and Bob hold ternary vectors of length m whose supports (size s each)
share exactly one index, and the two bits at that index differ.  Charlie knows
both supports but neither vector; after one simultaneous message from each
party he must say whether the shared index carries (0, 1).  This module
provides the instance model, a deterministic protocol that gets away with s-1
bits per party whenever s exceeds a third of m, and an exhaustive attack that
hunts for message collisions breaking any given one-way protocol at small
scale.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from .model import Bits


class InvalidInstance(ValueError):
    """Instance violates a promise; ``name`` is the violated property."""

    def __init__(self, name: str, message: str):
        super().__init__(f"[{name}] {message}")
        self.name = name


class HypothesisViolated(ValueError):
    """The protocol's parameter requirement s > ceil(m/3) fails."""


class BlockPropertyViolated(RuntimeError):
    """Both parties dropped the shared index; unreachable for a sound block map."""


@dataclass(frozen=True)
class TernaryVector:
    """Length-m vector over {0, 1, unset}; unset entries are None."""

    entries: tuple[Optional[int], ...]

    @classmethod
    def from_string(cls, text: str) -> "TernaryVector":
        mapping = {"0": 0, "1": 1, "*": None}
        try:
            return cls(tuple(mapping[ch] for ch in text))
        except KeyError as exc:
            raise ValueError(f"vector characters must be 0, 1 or *: {text!r}") from exc

    def to_string(self) -> str:
        return "".join("*" if e is None else str(e) for e in self.entries)

    @property
    def length(self) -> int:
        return len(self.entries)

    @property
    def support(self) -> tuple[int, ...]:
        """1-based indices of set entries, ascending."""
        return tuple(i + 1 for i, e in enumerate(self.entries) if e is not None)

    def support_bits(self) -> str:
        """The set bits read off in support order."""
        return "".join(str(e) for e in self.entries if e is not None)

    def __getitem__(self, index: int) -> Optional[int]:
        """1-based entry access."""
        return self.entries[index - 1]


def vector_on(m: int, assignment: dict[int, int]) -> TernaryVector:
    """Build a vector with the given {1-based index: bit} entries set."""
    entries: list[Optional[int]] = [None] * m
    for i, bit in assignment.items():
        entries[i - 1] = bit
    return TernaryVector(tuple(entries))


def validate_instance(x: TernaryVector, y: TernaryVector, m: int, s: int) -> int:
    """Check the promises and return the unique shared index."""
    if s > math.ceil(m / 2):
        raise ValueError(f"support size s={s} must not exceed ceil(m/2)={math.ceil(m / 2)}")
    if x.length != m or y.length != m:
        raise InvalidInstance("support", f"vectors must have length {m}")
    if len(x.support) != s or len(y.support) != s:
        raise InvalidInstance(
            "support", f"supports must have size {s}, got {len(x.support)} and {len(y.support)}"
        )
    common = set(x.support) & set(y.support)
    if len(common) > 1:
        raise InvalidInstance("P2", f"supports share {len(common)} indices: {sorted(common)}")
    if not common:
        raise InvalidInstance("P1", "supports share no index")
    sigma = common.pop()
    if x[sigma] == y[sigma]:
        raise InvalidInstance("P1", f"bits at shared index {sigma} must differ")
    return sigma


@dataclass(frozen=True)
class OverlapInstance:
    x: TernaryVector
    y: TernaryVector
    sigma: int

    @classmethod
    def make(cls, x: TernaryVector, y: TernaryVector, m: int, s: int) -> "OverlapInstance":
        return cls(x=x, y=y, sigma=validate_instance(x, y, m, s))

    def to_json(self) -> str:
        return json.dumps(
            {
                "m": self.x.length,
                "s": len(self.x.support),
                "X": self.x.to_string(),
                "Y": self.y.to_string(),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "OverlapInstance":
        obj = json.loads(text)
        return cls.make(
            TernaryVector.from_string(obj["X"]),
            TernaryVector.from_string(obj["Y"]),
            obj["m"],
            obj["s"],
        )


def answer(instance: OverlapInstance) -> bool:
    """True (yes) iff the shared index carries (0, 1)."""
    return instance.x[instance.sigma] == 0 and instance.y[instance.sigma] == 1


@dataclass(frozen=True)
class CyclePartition:
    """[1..m] cut into length-3 intervals (last one may be shorter), cycled.

    The successor map walks each interval cyclically; a length-1 tail maps to
    index 1 so that no element is its own successor.
    """

    m: int
    intervals: tuple[tuple[int, ...], ...]
    successors: dict[int, int]

    @classmethod
    def build(cls, m: int) -> "CyclePartition":
        if m < 2:
            raise ValueError(f"need m >= 2, got {m}")
        intervals = []
        successors: dict[int, int] = {}
        for start in range(1, m + 1, 3):
            block = tuple(range(start, min(start + 3, m + 1)))
            intervals.append(block)
            if len(block) == 1:
                successors[block[0]] = 1
            else:
                for pos, b in enumerate(block):
                    successors[b] = block[(pos + 1) % len(block)]
        return cls(m=m, intervals=tuple(intervals), successors=successors)

    def phi(self, b: int) -> int:
        return self.successors[b]


def build_blocks(m: int, s: int) -> dict[tuple[int, ...], int]:
    """Assign every s-subset of [m] a dropped index i with {i, phi(i)} inside it.

    The assignment is total whenever s exceeds ceil(m/3): some cycle then holds
    two subset elements, one of which is the other's successor.  Overlaps are
    repaired by always assigning the smallest qualifying i, so subsets meeting
    in a single element always drop different indices.
    """
    if s <= math.ceil(m / 3):
        raise HypothesisViolated(
            f"need s > ceil(m/3); got s={s}, ceil(m/3)={math.ceil(m / 3)}"
        )
    cycles = CyclePartition.build(m)
    assignment: dict[tuple[int, ...], int] = {}
    for subset in itertools.combinations(range(1, m + 1), s):
        inside = set(subset)
        chosen = next(
            (i for i in subset if cycles.phi(i) in inside), None
        )
        if chosen is None:
            raise BlockPropertyViolated(f"no cycle pair inside subset {subset}")
        assignment[subset] = chosen
    return assignment


def drop_position(support: tuple[int, ...], index: int) -> int:
    return support.index(index)


def appb_encode(vector: TernaryVector, blocks: dict[tuple[int, ...], int]) -> Bits:
    """Support bits in ascending index order, with the assigned bit dropped."""
    support = vector.support
    bits = vector.support_bits()
    pos = drop_position(support, blocks[support])
    return bits[:pos] + bits[pos + 1 :]


def appb_decode(
    supp_x: tuple[int, ...],
    supp_y: tuple[int, ...],
    msg_a: Bits,
    msg_b: Bits,
    blocks: dict[tuple[int, ...], int],
) -> bool:
    """Reconstruct the shared bits from whichever message kept them.

    At most one party dropped the shared index (the block map guarantees it),
    so its bit is read from the other message and the partner's bit follows
    from the differing-bits promise.
    """
    common = set(supp_x) & set(supp_y)
    if len(common) != 1:
        raise InvalidInstance("P2", f"supports share {len(common)} indices")
    sigma = common.pop()
    drop_a = blocks[supp_x]
    drop_b = blocks[supp_y]
    if drop_a == sigma and drop_b == sigma:
        raise BlockPropertyViolated("both parties dropped the shared index")

    def read(support: tuple[int, ...], message: Bits, dropped: int) -> int:
        pos = support.index(sigma)
        skip = support.index(dropped)
        return int(message[pos if pos < skip else pos - 1])

    if drop_a != sigma:
        x_bit = read(supp_x, msg_a, drop_a)
        y_bit = 1 - x_bit
    else:
        y_bit = read(supp_y, msg_b, drop_b)
        x_bit = 1 - y_bit
    return x_bit == 0 and y_bit == 1


@dataclass(frozen=True)
class OneWayProtocol:
    """Simultaneous one-way protocol: two encoders and Charlie's decoder.

    Encoders see only their own vector; the decoder sees both supports and the
    two messages, nothing else.
    """

    name: str
    max_bits: int
    alice_encode: Callable[[TernaryVector], Bits]
    bob_encode: Callable[[TernaryVector], Bits]
    charlie_decode: Callable[[tuple[int, ...], tuple[int, ...], Bits, Bits], bool]


def appb_protocol(m: int, s: int) -> OneWayProtocol:
    """The drop-one-bit protocol: s-1 bits per party, correct for s > ceil(m/3)."""
    blocks = build_blocks(m, s)

    def encode(vector: TernaryVector) -> Bits:
        return appb_encode(vector, blocks)

    def decode(supp_x, supp_y, msg_a, msg_b) -> bool:
        return appb_decode(supp_x, supp_y, msg_a, msg_b, blocks)

    return OneWayProtocol(
        name=f"appb(m={m},s={s})",
        max_bits=s - 1,
        alice_encode=encode,
        bob_encode=encode,
        charlie_decode=decode,
    )


def truncated_protocol(m: int, s: int, keep: Optional[int] = None) -> OneWayProtocol:
    """Sends only the first ``keep`` (default s-2) support bits; undershoots the budget."""
    keep = s - 2 if keep is None else keep
    if not 0 <= keep < s:
        raise ValueError(f"keep must lie in [0, s), got {keep}")

    def encode(vector: TernaryVector) -> Bits:
        return vector.support_bits()[:keep]

    def decode(supp_x, supp_y, msg_a, msg_b) -> bool:
        common = set(supp_x) & set(supp_y)
        sigma = common.pop()
        pos = supp_x.index(sigma)
        if pos < keep:
            x_bit = int(msg_a[pos])
            return x_bit == 0
        pos = supp_y.index(sigma)
        if pos < keep:
            y_bit = int(msg_b[pos])
            return y_bit == 1
        return False  # blind guess once both bits are truncated away

    return OneWayProtocol(
        name=f"trunc(m={m},s={s},keep={keep})",
        max_bits=keep,
        alice_encode=encode,
        bob_encode=encode,
        charlie_decode=decode,
    )


def full_support_protocol(m: int, s: int) -> OneWayProtocol:
    """Sends all s support bits; trivially correct, collision-free."""

    def encode(vector: TernaryVector) -> Bits:
        return vector.support_bits()

    def decode(supp_x, supp_y, msg_a, msg_b) -> bool:
        common = set(supp_x) & set(supp_y)
        sigma = common.pop()
        return int(msg_a[supp_x.index(sigma)]) == 0 and int(msg_b[supp_y.index(sigma)]) == 1

    return OneWayProtocol(
        name=f"full(m={m},s={s})",
        max_bits=s,
        alice_encode=encode,
        bob_encode=encode,
        charlie_decode=decode,
    )


def make_overlap_protocol(name: str, m: int, s: int) -> OneWayProtocol:
    if name == "appb":
        return appb_protocol(m, s)
    if name == "trunc":
        return truncated_protocol(m, s)
    if name == "full":
        return full_support_protocol(m, s)
    raise ValueError(f"unknown overlap protocol {name!r}")


def enumerate_valid_instances(m: int, s: int) -> Iterator[OverlapInstance]:
    """All valid instances: ordered support pairs sharing one index, all bit fills."""
    supports = list(itertools.combinations(range(1, m + 1), s))
    for supp_x in supports:
        rest = [i for i in range(1, m + 1) if i not in supp_x]
        for sigma in supp_x:
            for others in itertools.combinations(rest, s - 1):
                supp_y = tuple(sorted(others + (sigma,)))
                for x_bits in itertools.product((0, 1), repeat=s):
                    x = vector_on(m, dict(zip(supp_x, x_bits)))
                    y_free = [j for j in supp_y if j != sigma]
                    for y_bits in itertools.product((0, 1), repeat=s - 1):
                        assign = dict(zip(y_free, y_bits))
                        assign[sigma] = 1 - x[sigma]
                        y = vector_on(m, assign)
                        yield OverlapInstance(x=x, y=y, sigma=sigma)


@dataclass(frozen=True)
class Counterexample:
    """Two valid input combinations a protocol cannot tell apart plus the failure."""

    sigma: int
    supp_x: tuple[int, ...]
    supp_y: tuple[int, ...]
    x: TernaryVector
    x_hat: TernaryVector
    y: TernaryVector
    y_hat: TernaryVector
    msg_a: Bits
    msg_b: Bits
    wrong: tuple[tuple[str, str], ...]  # (X string, Y string) combos answered wrongly


def _flip_classes(
    encode: Callable[[TernaryVector], Bits], m: int, support: tuple[int, ...]
) -> dict[Bits, list[TernaryVector]]:
    classes: dict[Bits, list[TernaryVector]] = {}
    for bits in itertools.product((0, 1), repeat=len(support)):
        vec = vector_on(m, dict(zip(support, bits)))
        classes.setdefault(encode(vec), []).append(vec)
    return classes


def _flipped_indices(classes: dict[Bits, list[TernaryVector]], support) -> dict[int, Bits]:
    """Map each index that flips inside some message class to that message."""
    flipped: dict[int, Bits] = {}
    for message in sorted(classes):
        members = classes[message]
        if len(members) < 2:
            continue
        for i in support:
            if i in flipped:
                continue
            seen = {v[i] for v in members}
            if len(seen) > 1:
                flipped[i] = message
    return flipped


def attack(protocol: OneWayProtocol, m: int, s: int) -> Optional[Counterexample]:
    """Exhaustive collision hunt; any returned counterexample replays to a failure.

    For each support the inputs are grouped by message; an index is flipped
    when two same-message inputs disagree there.  Supports meeting exactly in
    an index flipped on both sides yield two valid instances with identical
    messages but opposite answers, so the decoder must be wrong on one; the
    failing combination is verified by direct execution before returning.
    """
    if math.comb(m, s) * (2 ** s) > 2_000_000:
        raise ValueError(f"(m={m}, s={s}) too large for exhaustive enumeration")
    supports = list(itertools.combinations(range(1, m + 1), s))
    alice_flips: dict[tuple[int, ...], dict[int, Bits]] = {}
    alice_classes = {}
    bob_flips: dict[tuple[int, ...], dict[int, Bits]] = {}
    bob_classes = {}
    for supp in supports:
        alice_classes[supp] = _flip_classes(protocol.alice_encode, m, supp)
        alice_flips[supp] = _flipped_indices(alice_classes[supp], supp)
        bob_classes[supp] = _flip_classes(protocol.bob_encode, m, supp)
        bob_flips[supp] = _flipped_indices(bob_classes[supp], supp)

    for supp_x in supports:
        set_x = set(supp_x)
        for supp_y in supports:
            common = set_x & set(supp_y)
            if len(common) != 1:
                continue
            sigma = next(iter(common))
            if sigma not in alice_flips[supp_x] or sigma not in bob_flips[supp_y]:
                continue
            msg_a = alice_flips[supp_x][sigma]
            msg_b = bob_flips[supp_y][sigma]
            x, x_hat = _pair_differing_at(alice_classes[supp_x][msg_a], sigma)
            y, y_hat = _pair_differing_at(bob_classes[supp_y][msg_b], sigma)
            if x[sigma] ^ y[sigma] == 1:
                combos = [(x, y), (x_hat, y_hat)]
            else:
                combos = [(x, y_hat), (x_hat, y)]
            wrong = []
            for cx, cy in combos:
                inst = OverlapInstance.make(cx, cy, m, s)
                decoded = protocol.charlie_decode(supp_x, supp_y, msg_a, msg_b)
                if decoded != answer(inst):
                    wrong.append((cx.to_string(), cy.to_string()))
            if not wrong:
                raise BlockPropertyViolated(
                    "collision candidate failed to replay; attack bookkeeping is broken"
                )
            return Counterexample(
                sigma=sigma,
                supp_x=supp_x,
                supp_y=supp_y,
                x=x,
                x_hat=x_hat,
                y=y,
                y_hat=y_hat,
                msg_a=msg_a,
                msg_b=msg_b,
                wrong=tuple(wrong),
            )
    return None


def _pair_differing_at(members: list[TernaryVector], index: int) -> tuple[TernaryVector, TernaryVector]:
    ordered = sorted(members, key=lambda v: v.to_string())
    for a, b in itertools.combinations(ordered, 2):
        if a[index] != b[index]:
            return a, b
    raise BlockPropertyViolated(f"no pair differs at flipped index {index}")
