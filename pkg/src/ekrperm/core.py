"""Generalised permutations: instances, members, ranking, families, stars.

A member of P(k, r, n) is a set of r ordered pairs (x, y) with x in [k],
y in [n], all x distinct and all y distinct.  Members are stored with
their pairs sorted by x, which makes the representation canonical.

Ranking: ``rank = support_rank * n!/(n-r)! + injection_rank`` where
``support_rank`` is the lexicographic rank of the x-support among the
r-subsets of [k], and ``injection_rank`` is the mixed-radix Lehmer rank
of the y-sequence read in x order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations, permutations
from math import comb, perm
from typing import Iterable, Iterator

from .errors import InstanceTooLarge, InvalidArgument

UINT64_MAX = 2**64 - 1

Pair = tuple[int, int]


def _falling(n: int, r: int) -> int:
    return perm(n, r)


@dataclass(frozen=True)
class Instance:
    k: int
    r: int
    n: int

    def __post_init__(self):
        for name in ("k", "r", "n"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise InvalidArgument(f"{name} must be a positive integer, got {v!r}")
        if self.r > min(self.k, self.n):
            raise InvalidArgument(f"need r <= min(k, n), got k={self.k} r={self.r} n={self.n}")
        family_size(self)  # 64-bit guard

    def __str__(self):
        return f"({self.k},{self.r},{self.n})"

    @property
    def transposed(self) -> Instance:
        return Instance(self.n, self.r, self.k)

    @property
    def size(self) -> int:
        return family_size(self)

    def contains_pair(self, p: Pair) -> bool:
        return 1 <= p[0] <= self.k and 1 <= p[1] <= self.n


def family_size(inst: Instance) -> int:
    """C(k, r) * n!/(n-r)!, guarded against 64-bit overflow."""
    size = comb(inst.k, inst.r) * _falling(inst.n, inst.r)
    if size > UINT64_MAX:
        raise InstanceTooLarge(f"|P{inst}| = {size} exceeds the 64-bit range")
    return size


def star_bound(inst: Instance) -> int:
    """Size of a star: C(k-1, r-1) (n-1)!/(n-r)!.

    Both closed forms are evaluated and must agree.
    """
    k, r, n = inst.k, inst.r, inst.n
    a = comb(k - 1, r - 1) * _falling(n - 1, r - 1)
    b = comb(n - 1, r - 1) * _falling(k - 1, r - 1)
    if a != b:  # pragma: no cover - arithmetic identity
        raise AssertionError(f"star bound closed forms disagree at {inst}: {a} != {b}")
    if a > UINT64_MAX:
        raise InstanceTooLarge(f"star bound at {inst} exceeds the 64-bit range")
    return a


@dataclass(frozen=True, order=True)
class GenPerm:
    """One member of P(k, r, n); pairs sorted by ascending x."""

    pairs: tuple[Pair, ...]

    def __post_init__(self):
        xs = [p[0] for p in self.pairs]
        ys = [p[1] for p in self.pairs]
        if any(a >= b for a, b in zip(xs, xs[1:])):
            raise InvalidArgument(f"pairs must have strictly increasing x: {self.pairs}")
        if len(set(ys)) != len(ys):
            raise InvalidArgument(f"repeated y-coordinate in {self.pairs}")

    @classmethod
    def of(cls, pairs: Iterable[Iterable[int]]) -> GenPerm:
        """Build from pairs in any order."""
        ps = [tuple(int(c) for c in p) for p in pairs]
        if any(len(p) != 2 for p in ps):
            raise InvalidArgument(f"pairs must have two coordinates: {ps}")
        return cls(tuple(sorted(ps)))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __str__(self):
        return "{" + ",".join(f"({x},{y})" for x, y in self.pairs) + "}"

    def check(self, inst: Instance) -> None:
        if len(self.pairs) != inst.r:
            raise InvalidArgument(f"{self} has {len(self.pairs)} pairs, instance {inst} needs {inst.r}")
        for p in self.pairs:
            if not inst.contains_pair(p):
                raise InvalidArgument(f"pair {p} of {self} lies outside [{inst.k}]x[{inst.n}]")


# -- ranking -----------------------------------------------------------------

def rank_combination(subset: tuple[int, ...], k: int) -> int:
    """Lexicographic rank of a sorted subset of [k] among subsets of its size."""
    r = len(subset)
    idx = 0
    prev = 0
    for i, c in enumerate(subset):
        for v in range(prev + 1, c):
            idx += comb(k - v, r - i - 1)
        prev = c
    return idx


def unrank_combination(idx: int, k: int, r: int) -> tuple[int, ...]:
    out = []
    v = 1
    for i in range(r):
        while True:
            block = comb(k - v, r - i - 1)
            if idx < block:
                break
            idx -= block
            v += 1
        out.append(v)
        v += 1
    return tuple(out)


def rank_injection(seq: tuple[int, ...], n: int) -> int:
    """Lehmer rank of an injective sequence of length r into [n].

    Digit i counts the unused values smaller than seq[i]; its place value
    is (n-1-i)!/(n-r)! with i counted from zero.
    """
    r = len(seq)
    used = [False] * (n + 1)
    idx = 0
    for i, y in enumerate(seq):
        d = sum(1 for v in range(1, y) if not used[v])
        idx += d * _falling(n - 1 - i, r - 1 - i)
        used[y] = True
    return idx


def unrank_injection(idx: int, n: int, r: int) -> tuple[int, ...]:
    free = list(range(1, n + 1))
    out = []
    for i in range(r):
        place = _falling(n - 1 - i, r - 1 - i)
        d, idx = divmod(idx, place)
        out.append(free.pop(d))
    return tuple(out)


def rank(g: GenPerm, inst: Instance) -> int:
    g.check(inst)
    support = tuple(x for x, _ in g.pairs)
    ys = tuple(y for _, y in g.pairs)
    return rank_combination(support, inst.k) * _falling(inst.n, inst.r) + rank_injection(ys, inst.n)


def unrank(i: int, inst: Instance) -> GenPerm:
    if not 0 <= i < inst.size:
        raise InvalidArgument(f"rank {i} outside [0, {inst.size}) for {inst}")
    s, t = divmod(i, _falling(inst.n, inst.r))
    xs = unrank_combination(s, inst.k, inst.r)
    ys = unrank_injection(t, inst.n, inst.r)
    return GenPerm(tuple(zip(xs, ys)))


def enumerate_members(inst: Instance) -> Iterator[GenPerm]:
    """All members of P(k, r, n) in rank order."""
    injections = list(permutations(range(1, inst.n + 1), inst.r))
    for xs in combinations(range(1, inst.k + 1), inst.r):
        for ys in injections:
            yield GenPerm(tuple(zip(xs, ys)))


def intersects(a: GenPerm, b: GenPerm) -> bool:
    return not set(a.pairs).isdisjoint(b.pairs)


def transpose(g: GenPerm, inst: Instance | None = None) -> GenPerm:
    """Swap the coordinates of every pair (a member of P(n, r, k))."""
    if inst is not None:
        g.check(inst)
    return GenPerm.of((y, x) for x, y in g.pairs)


# -- families ----------------------------------------------------------------

@dataclass(frozen=True)
class Family:
    """A subfamily of P(k, r, n) as a bit-vector over ranks (bit i <-> rank i)."""

    instance: Instance
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.instance.size:
            raise InvalidArgument("family bit-vector longer than the instance")

    @classmethod
    def from_ranks(cls, inst: Instance, ranks: Iterable[int]) -> Family:
        bits = 0
        for i in ranks:
            if not 0 <= i < inst.size:
                raise InvalidArgument(f"rank {i} outside [0, {inst.size})")
            bits |= 1 << i
        return cls(inst, bits)

    @classmethod
    def from_members(cls, inst: Instance, members: Iterable[GenPerm]) -> Family:
        return cls.from_ranks(inst, (rank(g, inst) for g in members))

    @classmethod
    def full(cls, inst: Instance) -> Family:
        return cls(inst, (1 << inst.size) - 1)

    def __len__(self):
        return self.bits.bit_count()

    def __contains__(self, g: GenPerm):
        return bool(self.bits >> rank(g, self.instance) & 1)

    def __iter__(self) -> Iterator[GenPerm]:
        return (unrank(i, self.instance) for i in self.ranks())

    def ranks(self) -> list[int]:
        out = []
        b = self.bits
        while b:
            low = b & -b
            out.append(low.bit_length() - 1)
            b ^= low
        return out

    def without(self, g: GenPerm) -> Family:
        return Family(self.instance, self.bits & ~(1 << rank(g, self.instance)))

    def to_dict(self, as_ranks: bool = False) -> dict:
        inst = self.instance
        doc = {"k": inst.k, "r": inst.r, "n": inst.n}
        if as_ranks:
            doc["memberRanks"] = self.ranks()
        else:
            doc["members"] = [[list(p) for p in g.pairs] for g in self]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> Family:
        try:
            inst = Instance(int(doc["k"]), int(doc["r"]), int(doc["n"]))
        except KeyError as e:
            raise InvalidArgument(f"family document lacks field {e}") from None
        if "members" in doc and "memberRanks" in doc:
            raise InvalidArgument("give either 'members' or 'memberRanks', not both")
        if "memberRanks" in doc:
            return cls.from_ranks(inst, (int(i) for i in doc["memberRanks"]))
        if "members" in doc:
            return cls.from_members(inst, (GenPerm.of(m) for m in doc["members"]))
        raise InvalidArgument("family document needs 'members' or 'memberRanks'")

    def dumps(self, as_ranks: bool = False) -> str:
        return json.dumps(self.to_dict(as_ranks))

    @classmethod
    def loads(cls, text: str) -> Family:
        return cls.from_dict(json.loads(text))


def star_bits(inst: Instance, centre: Pair) -> int:
    """Bit-vector of all members containing ``centre``, built without a full scan."""
    a, b = centre
    if not inst.contains_pair(centre):
        raise InvalidArgument(f"centre {centre} outside [{inst.k}]x[{inst.n}]")
    k, r, n = inst.k, inst.r, inst.n
    bits = 0
    others_x = [x for x in range(1, k + 1) if x != a]
    others_y = [y for y in range(1, n + 1) if y != b]
    for xs in combinations(others_x, r - 1):
        for ys in permutations(others_y, r - 1):
            g = GenPerm.of(list(zip(xs, ys)) + [(a, b)])
            bits |= 1 << rank(g, inst)
    return bits


def star(inst: Instance, centre: Pair) -> Family:
    return Family(inst, star_bits(inst, tuple(centre)))


def classify_star(f: Family) -> Pair | None:
    """Centre (a, b) if ``f`` is exactly the star at (a, b), else None."""
    if not f.bits:
        raise InvalidArgument("cannot classify an empty family")
    inst = f.instance
    if len(f) != star_bound(inst):
        return None
    first = unrank(f.ranks()[0], inst)
    # every candidate centre lies in the lowest-ranked member
    for centre in first.pairs:
        if star_bits(inst, centre) == f.bits:
            return centre
    return None


def is_intersecting_family(f: Family) -> bool:
    return find_disjoint_pair(f) is None


def find_disjoint_pair(f: Family) -> tuple[GenPerm, GenPerm] | None:
    members = list(f)
    sets = [set(g.pairs) for g in members]
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            if sets[i].isdisjoint(sets[j]):
                return members[i], members[j]
    return None


def transpose_family(f: Family) -> Family:
    inst = f.instance
    return Family.from_members(inst.transposed, (transpose(g) for g in f))
