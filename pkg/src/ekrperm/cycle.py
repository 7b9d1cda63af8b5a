"""Cyclic orderings of [k] x [n] and the cycle-method toolkit.

The base ordering labels (x, y) with ``k * cyclic_mod(y - x, n) + x``.
Relabelled copies ``tau_{phi,psi}(x, y) = tau(phi^-1(x), psi^-1(y))`` for
(phi, psi) in S_k x S_n form the family T(k, n).  Every member of T(k, n)
is r-good for r <= k - 1, i.e. any r cyclically consecutive elements have
distinct x's and distinct y's.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import islice, permutations
from math import factorial
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import GenPerm, Instance, Pair, rank, rank_injection, unrank_injection
from .errors import InstanceTooLarge, InvalidArgument, PreconditionViolation, UseTranspose

DEFAULT_ENUM_CAP = 10**6


def enum_cap() -> int:
    return int(os.environ.get("EKRPERM_ENUM_CAP", DEFAULT_ENUM_CAP))


def cyclic_mod(a: int, m: int) -> int:
    """``a mod m`` except that a nonzero multiple of m maps to m (0 stays 0)."""
    if m < 1:
        raise InvalidArgument(f"modulus must be positive, got {m}")
    if a == 0:
        return 0
    res = a % m
    return m if res == 0 else res


def _require_k_le_n(k: int, n: int) -> None:
    if k < 1 or n < 1:
        raise InvalidArgument(f"k and n must be positive, got k={k} n={n}")
    if k > n:
        raise UseTranspose(f"cycle orderings need k <= n (got k={k}, n={n}); transpose the instance")


def tau(k: int, n: int, p: Pair) -> int:
    _require_k_le_n(k, n)
    x, y = p
    if not (1 <= x <= k and 1 <= y <= n):
        raise InvalidArgument(f"pair {p} outside [{k}]x[{n}]")
    return k * cyclic_mod(y - x, n) + x


@lru_cache(maxsize=None)
def _base_labels(k: int, n: int) -> np.ndarray:
    _require_k_le_n(k, n)
    out = np.empty((k, n), dtype=np.int64)
    for x in range(1, k + 1):
        for y in range(1, n + 1):
            out[x - 1, y - 1] = k * cyclic_mod(y - x, n) + x
    out.flags.writeable = False
    return out


# -- permutation pairs -------------------------------------------------------

def _check_perm(p: Sequence[int], size: int, name: str) -> None:
    if sorted(p) != list(range(1, size + 1)):
        raise InvalidArgument(f"{name} is not a permutation of [{size}]: {list(p)}")


@dataclass(frozen=True)
class PermutationPair:
    """(phi, psi) in S_k x S_n; ``phi[i-1]`` is phi(i)."""

    phi: tuple[int, ...]
    psi: tuple[int, ...]

    def __post_init__(self):
        _check_perm(self.phi, len(self.phi), "phi")
        _check_perm(self.psi, len(self.psi), "psi")

    @classmethod
    def identity(cls, k: int, n: int) -> PermutationPair:
        return cls(tuple(range(1, k + 1)), tuple(range(1, n + 1)))

    @classmethod
    def random(cls, k: int, n: int, rng: np.random.Generator) -> PermutationPair:
        return cls(tuple(int(v) + 1 for v in rng.permutation(k)),
                   tuple(int(v) + 1 for v in rng.permutation(n)))

    @property
    def k(self) -> int:
        return len(self.phi)

    @property
    def n(self) -> int:
        return len(self.psi)

    def inverse(self) -> PermutationPair:
        return PermutationPair(_invert(self.phi), _invert(self.psi))

    def then(self, outer: PermutationPair) -> PermutationPair:
        """Composition ``(outer.phi o phi, outer.psi o psi)``."""
        return PermutationPair(tuple(outer.phi[v - 1] for v in self.phi),
                               tuple(outer.psi[v - 1] for v in self.psi))

    def apply(self, p: Pair) -> Pair:
        return self.phi[p[0] - 1], self.psi[p[1] - 1]

    def to_dict(self) -> dict:
        return {"phi": list(self.phi), "psi": list(self.psi)}


def _invert(p: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, v in enumerate(p, start=1):
        inv[v - 1] = i
    return tuple(inv)


def tau_phi_psi(pp: PermutationPair, p: Pair) -> int:
    phi_inv = pp.phi.index(p[0]) + 1
    psi_inv = pp.psi.index(p[1]) + 1
    return tau(pp.k, pp.n, (phi_inv, psi_inv))


def relabel(g: GenPerm, pp: PermutationPair) -> GenPerm:
    """Image of ``g`` under (x, y) -> (phi(x), psi(y))."""
    return GenPerm.of(pp.apply(p) for p in g.pairs)


# -- cyclic orderings --------------------------------------------------------

class CyclicOrdering:
    """A bijection between [k] x [n] and the labels 1..kn.

    ``labels[x-1, y-1]`` is the label of (x, y); ``xs[l-1], ys[l-1]`` is the
    pair carrying label l.  Both arrays are read-only.
    """

    def __init__(self, k: int, n: int, labels: np.ndarray):
        labels = np.array(labels, dtype=np.int64)
        if labels.shape != (k, n):
            raise InvalidArgument(f"label array has shape {labels.shape}, expected {(k, n)}")
        m = k * n
        if sorted(labels.ravel().tolist()) != list(range(1, m + 1)):
            raise InvalidArgument("labels are not a bijection onto 1..kn")
        xs = np.empty(m, dtype=np.int64)
        ys = np.empty(m, dtype=np.int64)
        flat = labels.ravel() - 1
        xs[flat] = np.repeat(np.arange(1, k + 1), n)
        ys[flat] = np.tile(np.arange(1, n + 1), k)
        for a in (labels, xs, ys):
            a.flags.writeable = False
        self.k, self.n, self.labels, self.xs, self.ys = k, n, labels, xs, ys

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]]) -> CyclicOrdering:
        """Ordering whose i-th pair (0-based) carries label i + 1."""
        ps = [tuple(int(c) for c in p) for p in pairs]
        if not ps:
            raise InvalidArgument("empty ordering")
        k = max(p[0] for p in ps)
        n = max(p[1] for p in ps)
        if len(ps) != k * n or len(set(ps)) != len(ps) or min(min(p) for p in ps) < 1:
            raise InvalidArgument(f"pairs do not enumerate [{k}]x[{n}] exactly once")
        labels = np.zeros((k, n), dtype=np.int64)
        for i, (x, y) in enumerate(ps, start=1):
            labels[x - 1, y - 1] = i
        return cls(k, n, labels)

    @property
    def size(self) -> int:
        return self.k * self.n

    def label_of(self, p: Pair) -> int:
        return int(self.labels[p[0] - 1, p[1] - 1])

    def pair_at(self, label: int) -> Pair:
        return int(self.xs[label - 1]), int(self.ys[label - 1])

    def pairs(self) -> list[Pair]:
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    def key(self) -> bytes:
        return self.labels.tobytes()

    def __eq__(self, other):
        return isinstance(other, CyclicOrdering) and (self.k, self.n) == (other.k, other.n) \
            and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.k, self.n, self.key()))

    def __repr__(self):
        return f"CyclicOrdering(k={self.k}, n={self.n})"

    @cached_property
    def min_conflict_distance(self) -> int:
        """Smallest cyclic label distance between two pairs sharing x or y.

        The ordering is r-good exactly when r <= this value.  With no such
        pair at all (k = n = 1) the result is the ground-set size.
        """
        m = self.size
        best = m
        for arr in (self.labels, self.labels.T):
            if arr.shape[1] < 2:
                continue
            s = np.sort(arr, axis=1)
            gaps = np.diff(s, axis=1)
            wrap = m - s[:, -1] + s[:, 0]
            best = min(best, int(gaps.min()), int(wrap.min()))
        return best

    def to_json(self) -> str:
        return json.dumps([list(p) for p in self.pairs()])

    @classmethod
    def from_json(cls, text: str) -> CyclicOrdering:
        data = json.loads(text)
        if not isinstance(data, list):
            raise InvalidArgument("ordering document must be a JSON list of [x, y] pairs")
        return cls.from_pairs(data)


def base_ordering(k: int, n: int) -> CyclicOrdering:
    return CyclicOrdering(k, n, _base_labels(k, n))


def materialize(pp: PermutationPair) -> CyclicOrdering:
    base = _base_labels(pp.k, pp.n)
    labels = np.empty_like(base)
    labels[np.ix_(np.asarray(pp.phi) - 1, np.asarray(pp.psi) - 1)] = base
    return CyclicOrdering(pp.k, pp.n, labels)


def first_bad_window(o: CyclicOrdering, r: int) -> int | None:
    """Start label of the first r-window with a repeated x or y, else None."""
    m = o.size
    if not 1 <= r <= m:
        raise InvalidArgument(f"window length {r} outside [1, {m}]")
    xs, ys = o.xs.tolist(), o.ys.tolist()
    for s in range(m):
        win = [(s + j) % m for j in range(r)]
        if len({xs[i] for i in win}) < r or len({ys[i] for i in win}) < r:
            return s + 1
    return None


def is_r_good(o: CyclicOrdering, r: int) -> bool:
    if not 1 <= r <= o.size:
        raise InvalidArgument(f"window length {r} outside [1, {o.size}]")
    return r <= o.min_conflict_distance


def meets(g: GenPerm, o: CyclicOrdering) -> bool:
    """True iff the labels of g's pairs are cyclically consecutive."""
    m = o.size
    labels = {o.label_of(p) for p in g.pairs}
    r = len(labels)
    if r <= 1:
        return True
    links = sum(1 for l in labels if (l % m) + 1 in labels)
    return links >= r - 1


def r_intervals(o: CyclicOrdering, r: int) -> list[GenPerm]:
    """The kn members formed by the cyclic r-windows, window at label 1 first."""
    bad = None if is_r_good(o, r) else first_bad_window(o, r)
    if bad is not None:
        raise PreconditionViolation(f"ordering is not {r}-good (window at label {bad})", witness=bad)
    m = o.size
    pairs = o.pairs()
    return [GenPerm.of(pairs[(s + j) % m] for j in range(r)) for s in range(m)]


# -- the family T(k, n) -----------------------------------------------------

def t_size(k: int, n: int) -> int:
    return factorial(k) * factorial(n)


def _check_t_cap(k: int, n: int, cap: int | None) -> None:
    _require_k_le_n(k, n)
    cap = enum_cap() if cap is None else cap
    if t_size(k, n) > cap:
        raise InstanceTooLarge(f"|T({k},{n})| = {t_size(k, n)} exceeds the enumeration cap {cap}")


def enumerate_t(k: int, n: int, cap: int | None = None) -> Iterator[PermutationPair]:
    """All (phi, psi) in lexicographic order of (Lehmer(phi), Lehmer(psi))."""
    _check_t_cap(k, n, cap)
    psis = list(permutations(range(1, n + 1)))
    for phi in permutations(range(1, k + 1)):
        for psi in psis:
            yield PermutationPair(phi, psi)


def t_index(pp: PermutationPair) -> int:
    return rank_injection(pp.phi, pp.k) * factorial(pp.n) + rank_injection(pp.psi, pp.n)


def t_unrank(i: int, k: int, n: int) -> PermutationPair:
    if not 0 <= i < t_size(k, n):
        raise InvalidArgument(f"index {i} outside T({k},{n})")
    a, b = divmod(i, factorial(n))
    return PermutationPair(unrank_injection(a, k, k), unrank_injection(b, n, n))


def t_slice(k: int, n: int, start: int, stop: int) -> Iterator[PermutationPair]:
    """Members ``start..stop-1`` of the T enumeration; lets workers split the range."""
    _require_k_le_n(k, n)
    stop = min(stop, t_size(k, n))
    if start >= stop:
        return iter(())
    first = t_unrank(start, k, n)
    a0 = rank_injection(first.phi, k)
    b0 = rank_injection(first.psi, n)
    psis = list(permutations(range(1, n + 1)))
    phis = islice(permutations(range(1, k + 1)), a0, None)

    def gen():
        for ai, phi in enumerate(phis):
            for psi in psis[b0 if ai == 0 else 0:]:
                yield PermutationPair(phi, psi)

    return islice(gen(), stop - start)


def lemma_count(inst: Instance) -> int:
    """r! (k-r)! (n-r)! kn: orderings of T(k, n) met by any single member."""
    k, r, n = inst.k, inst.r, inst.n
    return factorial(r) * factorial(k - r) * factorial(n - r) * k * n


def _check_cycle_instance(inst: Instance) -> None:
    _require_k_le_n(inst.k, inst.n)
    if inst.r > inst.k - 1:
        raise InvalidArgument(f"cycle-method counts need r <= k - 1, got {inst}")


def count_meeting_orderings(g: GenPerm, k: int, n: int, cap: int | None = None) -> int:
    """Exhaustive count of the orderings in T(k, n) that ``g`` meets."""
    inst = Instance(k, len(g), n)
    g.check(inst)
    _check_cycle_instance(inst)
    return sum(1 for pp in enumerate_t(k, n, cap) if meets(g, materialize(pp)))


def estimate_meeting_orderings(g: GenPerm, k: int, n: int, samples: int,
                               rng: np.random.Generator) -> float:
    """Sampled estimate of ``count_meeting_orderings``; approximate by construction."""
    inst = Instance(k, len(g), n)
    g.check(inst)
    _check_cycle_instance(inst)
    hits = sum(1 for _ in range(samples) if meets(g, materialize(PermutationPair.random(k, n, rng))))
    return hits / samples * t_size(k, n)


def incidence_counts(inst: Instance, cap: int | None = None) -> list[int]:
    """Per-member meeting counts, accumulated ordering by ordering from r-windows.

    An independent route to ``count_meeting_orderings``: each ordering
    contributes its kn windows instead of testing members one at a time.
    """
    _check_cycle_instance(inst)
    counts = [0] * inst.size
    for pp in enumerate_t(inst.k, inst.n, cap):
        for g in r_intervals(materialize(pp), inst.r):
            counts[rank(g, inst)] += 1
    return counts


# -- cycle lemma ------------------------------------------------------------

@dataclass
class KatonaReport:
    m: int
    r: int
    max_size: int
    optima_count: int
    all_optima_are_stars: bool
    star_uniqueness_asserted: bool
    non_star_witness: list[list] | None = None

    @property
    def holds(self) -> bool:
        if self.max_size != self.r:
            return False
        return self.all_optima_are_stars or not self.star_uniqueness_asserted

    def to_dict(self) -> dict:
        return {
            "m": self.m, "r": self.r, "maxSize": self.max_size,
            "optimaCount": self.optima_count,
            "allOptimaAreStars": self.all_optima_are_stars,
            "starUniquenessAsserted": self.star_uniqueness_asserted,
            "nonStarWitness": self.non_star_witness,
            "holds": self.holds,
        }


def _max_cliques_small(adj: list[int]) -> tuple[int, list[int]]:
    """All maximum cliques (as bitmasks) of a graph with few vertices."""
    best = 0
    found: list[int] = []

    def expand(clique: int, size: int, cand: int, excl: int):
        nonlocal best, found
        if not cand and not excl:
            if size > best:
                best, found = size, [clique]
            elif size == best:
                found.append(clique)
            return
        if size + cand.bit_count() < best:
            return
        # pivot on the vertex of cand|excl with most candidate neighbours
        pool = cand | excl
        pivot, deg = -1, -1
        while pool:
            v = (pool & -pool).bit_length() - 1
            pool &= pool - 1
            d = (cand & adj[v]).bit_count()
            if d > deg:
                pivot, deg = v, d
        rest = cand & ~adj[pivot]
        while rest:
            v = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            bit = 1 << v
            expand(clique | bit, size + 1, cand & adj[v], excl & adj[v])
            cand &= ~bit
            excl |= bit

    expand(0, 0, (1 << len(adj)) - 1, 0)
    return best, found


def katona_verify(cycle, r: int) -> KatonaReport:
    """Brute-force the largest intersecting families of cyclic r-windows.

    ``cycle`` is an int m (the cycle 0..m-1), a sequence of ground-set
    elements in cyclic order, or a CyclicOrdering.  Star uniqueness is
    asserted only when m > 2r.
    """
    if isinstance(cycle, CyclicOrdering):
        elems = cycle.pairs()
    elif isinstance(cycle, int):
        elems = list(range(cycle))
    else:
        elems = list(cycle)
    m = len(elems)
    if len(set(elems)) != m:
        raise InvalidArgument("cycle elements must be distinct")
    if r < 1 or m < 2 * r:
        raise PreconditionViolation(f"cycle lemma needs m >= 2r, got m={m} r={r}")
    windows = [frozenset(elems[(s + j) % m] for j in range(r)) for s in range(m)]
    adj = [0] * m
    for i in range(m):
        for j in range(m):
            if i != j and windows[i] & windows[j]:
                adj[i] |= 1 << j
    best, optima = _max_cliques_small(adj)
    witness = None
    all_stars = True
    for mask in sorted(optima):
        chosen = [windows[i] for i in range(m) if mask >> i & 1]
        if not frozenset.intersection(*chosen):
            all_stars = False
            if witness is None:
                witness = [sorted(w, key=repr) for w in chosen]
    return KatonaReport(m, r, best, len(optima), all_stars, m > 2 * r, witness)


def random_cycle(m: int, rng: np.random.Generator) -> list[int]:
    return [int(v) for v in rng.permutation(m)]


# -- nonexistence for r = k = n ------------------------------------------------

def _is_window_good(order: Sequence[Pair], r: int) -> bool:
    m = len(order)
    for i in range(m):
        x, y = order[i]
        for d in range(1, r):
            u, v = order[(i + d) % m]
            if u == x or v == y:
                return False
    return True


def search_good_ordering(n: int) -> tuple[list[Pair] | None, int]:
    """Exhaustive search for an n-good cyclic ordering of [n] x [n].

    Rotations are factored out by pinning (1, 1) to label 1, leaving
    (n^2 - 1)! orderings.  Returns the first good ordering found (or None)
    and the number of orderings checked.
    """
    if n < 2:
        raise InvalidArgument(f"n must be at least 2, got {n}")
    if n > 3:
        raise InstanceTooLarge(f"search space ({n * n - 1})! is too large for n={n}")
    cells = [(x, y) for x in range(1, n + 1) for y in range(1, n + 1)]
    head, rest = cells[0], cells[1:]
    checked = 0
    for tail in permutations(rest):
        checked += 1
        order = (head,) + tail
        if _is_window_good(order, n):
            return list(order), checked
    return None, checked


def no_good_ordering_exists(n: int) -> bool:
    found, _ = search_good_ordering(n)
    return found is None


# -- label table output -----------------------------------------------------

def tau_table_text(k: int, n: int, pp: PermutationPair | None = None) -> str:
    o = materialize(pp) if pp is not None else base_ordering(k, n)
    width = len(f"({k},{n})^{k * n}")
    rows = []
    for y in range(n, 0, -1):
        cells = [f"({x},{y})^{o.label_of((x, y))}".ljust(width) for x in range(1, k + 1)]
        rows.append("  ".join(cells).rstrip())
    return "\n".join(rows) + "\n"


def tau_table_csv(k: int, n: int, pp: PermutationPair | None = None) -> str:
    o = materialize(pp) if pp is not None else base_ordering(k, n)
    lines = ["y\\x," + ",".join(str(x) for x in range(1, k + 1))]
    for y in range(n, 0, -1):
        lines.append(f"{y}," + ",".join(str(o.label_of((x, y))) for x in range(1, k + 1)))
    return "\n".join(lines) + "\n"


def tau_table_rows(k: int, n: int, pp: PermutationPair | None = None) -> list[list[int]]:
    """Labels laid out as printed: row 0 is y = n, column j is x = j + 1."""
    o = materialize(pp) if pp is not None else base_ordering(k, n)
    return [[o.label_of((x, y)) for x in range(1, k + 1)] for y in range(n, 0, -1)]

