"""Exact maximum intersecting families via maximum-clique search.

Vertices of the intersection graph are the ranks of P(k, r, n); two are
adjacent when the members share an ordered pair.  Cliques are therefore
intersecting families.  The search is a bitset branch-and-bound with
greedy-colouring bounds (in the style of MCQ/BBMC) over a degeneracy
vertex order.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from typing import IO, Iterator

import numpy as np

from .core import (Family, Instance, classify_star, enumerate_members, find_disjoint_pair,
                   rank, star_bits, star_bound)
from .cycle import (PermutationPair, _check_cycle_instance, enum_cap, enumerate_t, lemma_count,
                    materialize, r_intervals, t_size)
from .errors import InstanceTooLarge, InvalidArgument

DEFAULT_VERTEX_CAP = 20000
DEFAULT_OPTIMA_CAP = 10**5


def vertex_cap() -> int:
    return int(os.environ.get("EKRPERM_VERTEX_CAP", DEFAULT_VERTEX_CAP))


def optima_cap() -> int:
    return int(os.environ.get("EKRPERM_OPTIMA_CAP", DEFAULT_OPTIMA_CAP))


def default_timeout() -> float | None:
    val = os.environ.get("EKRPERM_TIMEOUT")
    return float(val) if val else None


def _bits(x: int) -> Iterator[int]:
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


@dataclass(frozen=True)
class IntersectionGraph:
    instance: Instance
    adjacency: tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.adjacency)

    def edge_count(self) -> int:
        return sum(a.bit_count() for a in self.adjacency) // 2

    def degree(self, v: int) -> int:
        return self.adjacency[v].bit_count()

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, a in enumerate(self.adjacency):
            for v in _bits(a >> (u + 1)):
                yield u, u + 1 + v

    def is_clique(self, vertices) -> bool:
        vs = list(vertices)
        return all(self.adjacency[u] >> v & 1 for i, u in enumerate(vs) for v in vs[i + 1:])

    def write_dimacs(self, fh: IO[str]) -> None:
        """DIMACS edge format; vertex ``rank + 1``."""
        inst = self.instance
        fh.write(f"c intersection graph of P{inst}: vertex i is the member of rank i-1\n")
        fh.write(f"p edge {self.order} {self.edge_count()}\n")
        for u, v in self.edges():
            fh.write(f"e {u + 1} {v + 1}\n")


def build_graph(inst: Instance, cap: int | None = None) -> IntersectionGraph:
    cap = vertex_cap() if cap is None else cap
    size = inst.size
    if size > cap:
        raise InstanceTooLarge(f"|P{inst}| = {size} exceeds the vertex cap {cap}")
    stars = {(a, b): star_bits(inst, (a, b))
             for a in range(1, inst.k + 1) for b in range(1, inst.n + 1)}
    adj = []
    for i, g in enumerate(enumerate_members(inst)):
        row = 0
        for p in g.pairs:
            row |= stars[p]
        adj.append(row & ~(1 << i))
    return IntersectionGraph(inst, tuple(adj))


def read_dimacs(fh: IO[str]) -> tuple[int, list[tuple[int, int]]]:
    """Parse a DIMACS edge file into (vertex count, 0-based edge list)."""
    n = None
    edges = []
    for line in fh:
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "p":
            if parts[1] not in ("edge", "col"):
                raise InvalidArgument(f"unknown DIMACS problem line: {line.strip()}")
            n = int(parts[2])
        elif parts[0] == "e":
            edges.append((int(parts[1]) - 1, int(parts[2]) - 1))
        else:
            raise InvalidArgument(f"unrecognised DIMACS line: {line.strip()}")
    if n is None:
        raise InvalidArgument("DIMACS input has no problem line")
    return n, edges


# -- search ------------------------------------------------------------------

def degeneracy_order(adj: tuple[int, ...]) -> list[int]:
    """Vertices ordered so that repeatedly removing a min-degree vertex
    (lowest rank on ties) produces the list back to front."""
    n = len(adj)
    alive = (1 << n) - 1
    deg = [a.bit_count() for a in adj]
    removed = []
    for _ in range(n):
        v = min(_bits(alive), key=lambda u: (deg[u], u))
        removed.append(v)
        alive &= ~(1 << v)
        for u in _bits(adj[v] & alive):
            deg[u] -= 1
    return removed[::-1]


class _Timeout(Exception):
    pass


class _Search:
    """Branch-and-bound over vertices relabelled into degeneracy order."""

    def __init__(self, graph: IntersectionGraph, timeout: float | None):
        self.order = degeneracy_order(graph.adjacency)
        pos = {v: i for i, v in enumerate(self.order)}
        self.adj = []
        for v in self.order:
            row = 0
            for u in _bits(graph.adjacency[v]):
                row |= 1 << pos[u]
            self.adj.append(row)
        self.nodes = 0
        self.deadline = None if timeout is None else time.monotonic() + timeout

    def _tick(self):
        self.nodes += 1
        if self.deadline is not None and not self.nodes & 1023 and time.monotonic() > self.deadline:
            raise _Timeout

    def _colour(self, cand: int) -> tuple[list[int], list[int]]:
        """Greedy sequential colouring; returns vertices and their colour numbers,
        ascending by colour."""
        adj = self.adj
        verts, cols = [], []
        colour = 0
        uncol = cand
        while uncol:
            colour += 1
            avail = uncol
            while avail:
                low = avail & -avail
                v = low.bit_length() - 1
                uncol ^= low
                avail &= ~adj[v] & ~low
                verts.append(v)
                cols.append(colour)
        return verts, cols

    def max_clique(self, lower: int) -> tuple[int, list[int]]:
        """Largest clique strictly above ``lower`` (size, vertices); (lower, []) if none."""
        self.best = lower
        self.best_clique: list[int] = []
        self._expand([], (1 << len(self.adj)) - 1)
        return self.best, [self.order[v] for v in self.best_clique]

    def _expand(self, clique: list[int], cand: int):
        self._tick()
        adj = self.adj
        verts, cols = self._colour(cand)
        for i in range(len(verts) - 1, -1, -1):
            if len(clique) + cols[i] <= self.best:
                return
            v = verts[i]
            clique.append(v)
            nxt = cand & adj[v]
            if nxt:
                self._expand(clique, nxt)
            elif len(clique) > self.best:
                self.best = len(clique)
                self.best_clique = list(clique)
            clique.pop()
            cand &= ~(1 << v)

    def all_cliques_of_size(self, target: int, cap: int) -> tuple[list[list[int]], bool]:
        self.found: list[list[int]] = []
        self.cap = cap
        self.capped = False
        self.target = target
        try:
            self._collect([], (1 << len(self.adj)) - 1)
        except _CapReached:
            self.capped = True
        return [[self.order[v] for v in c] for c in self.found], self.capped

    def _collect(self, clique: list[int], cand: int):
        self._tick()
        adj = self.adj
        verts, cols = self._colour(cand)
        for i in range(len(verts) - 1, -1, -1):
            if len(clique) + cols[i] < self.target:
                return
            v = verts[i]
            clique.append(v)
            if len(clique) == self.target:
                self.found.append(list(clique))
                if len(self.found) >= self.cap:
                    raise _CapReached
            else:
                nxt = cand & adj[v]
                if nxt:
                    self._collect(clique, nxt)
            clique.pop()
            cand &= ~(1 << v)


class _CapReached(Exception):
    pass


@dataclass
class SolveReport:
    instance: Instance
    max_size: int
    witness: Family
    exact: bool = True
    optima_count: int | str | None = None
    all_optima_are_stars: bool | str = "not-checked"
    nodes_explored: int = 0
    elapsed: float | None = None
    transposed_from: Instance | None = None
    star_bound: int | None = None
    verdict: str | None = None
    optima: list[Family] = field(default_factory=list, repr=False)
    violation: Family | None = None

    def to_dict(self, timings: bool = True, include_optima: bool = False) -> dict:
        inst = self.instance
        doc = {
            "instance": {"k": inst.k, "r": inst.r, "n": inst.n},
            "maxSize": self.max_size,
            "exact": self.exact,
            "starBound": self.star_bound,
            "witness": self.witness.to_dict(),
            "optimaCount": self.optima_count,
            "allOptimaAreStars": self.all_optima_are_stars,
            "nodesExplored": self.nodes_explored,
        }
        if self.transposed_from is not None:
            t = self.transposed_from
            doc["transposedFrom"] = {"k": t.k, "r": t.r, "n": t.n}
        if self.verdict is not None:
            doc["verdict"] = self.verdict
        if self.violation is not None:
            doc["violation"] = self.violation.to_dict()
        if include_optima:
            doc["optima"] = [f.to_dict(as_ranks=True)["memberRanks"] for f in self.optima]
            doc["optimaCentres"] = [list(c) if c else None for c in map(classify_star, self.optima)]
        if timings:
            doc["elapsed"] = self.elapsed
        return doc


def max_clique(g: IntersectionGraph, seed_lower_bound: int | None = None,
               timeout: float | None = None) -> SolveReport:
    """Exact clique number and a witness.

    With ``seed_lower_bound`` the search only looks for cliques larger than
    the seed; if none exists the seed is certified optimal and the witness
    is the star at the lexicographically least centre (the seed must then
    be a star size, e.g. ``star_bound``).
    """
    inst = g.instance
    t0 = time.perf_counter()
    search = _Search(g, timeout if timeout is not None else default_timeout())
    lower = 0
    if seed_lower_bound is not None:
        if seed_lower_bound != star_bound(inst):
            raise InvalidArgument("seed lower bound must be the star bound (its witness is a star)")
        lower = seed_lower_bound
    exact = True
    try:
        size, clique = search.max_clique(lower)
    except _Timeout:
        exact = False
        size, clique = search.best, [search.order[v] for v in search.best_clique]
    if not clique and lower:
        witness = Family(inst, star_bits(inst, (1, 1)))
    else:
        witness = Family.from_ranks(inst, clique)
    return SolveReport(inst, size if clique or lower else 0, witness, exact=exact,
                       nodes_explored=search.nodes, elapsed=time.perf_counter() - t0,
                       star_bound=star_bound(inst))


def enumerate_optima(g: IntersectionGraph, optimum: int, cap: int | None = None,
                     timeout: float | None = None) -> tuple[list[Family], bool, int]:
    """All cliques of size ``optimum``; returns (families, capped, nodes).

    Families come back sorted by their ascending member-rank sequence.
    """
    cap = optima_cap() if cap is None else cap
    search = _Search(g, timeout if timeout is not None else default_timeout())
    cliques, capped = search.all_cliques_of_size(optimum, cap)
    fams = sorted((sorted(c) for c in cliques))
    return [Family.from_ranks(g.instance, c) for c in fams], capped, search.nodes


def solve(inst: Instance, enumerate_all: bool = False, seed_with_bound: bool = False,
          timeout: float | None = None, cap: int | None = None,
          auto_transpose: bool = True) -> SolveReport:
    """Build, search and (optionally) enumerate optima; k > n is transposed first."""
    source = None
    if auto_transpose and inst.k > inst.n:
        source, inst = inst, inst.transposed
    t0 = time.perf_counter()
    g = build_graph(inst)
    rep = max_clique(g, star_bound(inst) if seed_with_bound else None, timeout)
    rep.transposed_from = source
    if enumerate_all and rep.exact:
        optima, capped, nodes = enumerate_optima(g, rep.max_size, cap, timeout)
        rep.nodes_explored += nodes
        rep.optima = optima
        rep.optima_count = "capped" if capped else len(optima)
        rep.all_optima_are_stars = all(classify_star(f) is not None for f in optima)
    rep.elapsed = time.perf_counter() - t0
    return rep


def verify_theorem(inst: Instance, timeout: float | None = None,
                   cap: int | None = None) -> SolveReport:
    """Check that the clique number is the star bound and every optimum is a star."""
    rep = solve(inst, enumerate_all=True, timeout=timeout, cap=cap, auto_transpose=False)
    ok = rep.exact and rep.max_size == star_bound(inst)
    if ok and rep.optima_count != "capped":
        for f in rep.optima:
            if classify_star(f) is None:
                rep.violation = f
                ok = False
                break
    if not rep.exact or rep.optima_count == "capped":
        rep.verdict = "INCOMPLETE"
    else:
        rep.verdict = "PASS" if ok else "VIOLATION"
        if rep.violation is None and not ok:
            rep.violation = rep.witness
    return rep


# -- double counting ----------------------------------------------------------

@dataclass
class DoubleCountCertificate:
    instance: Instance
    family_size: int
    per_ordering_counts: list[int]
    total_incidence: int
    bound_lhs: int
    orderings: int
    exact: bool
    implied_bound: int
    expected_total: int | None
    seed: int | None = None

    @property
    def max_count(self) -> int:
        return max(self.per_ordering_counts, default=0)

    @property
    def holds(self) -> bool:
        r = self.instance.r
        ok = self.max_count <= r and self.total_incidence <= self.bound_lhs
        if self.exact:
            ok = ok and self.total_incidence == self.expected_total
        return ok

    def to_dict(self) -> dict:
        inst = self.instance
        return {
            "instance": {"k": inst.k, "r": inst.r, "n": inst.n},
            "familySize": self.family_size,
            "orderings": self.orderings,
            "exact": self.exact,
            "seed": self.seed,
            "perOrderingCounts": self.per_ordering_counts,
            "totalIncidence": self.total_incidence,
            "expectedTotal": self.expected_total,
            "boundLHS": self.bound_lhs,
            "impliedBound": self.implied_bound,
            "holds": self.holds,
        }


def _window_mask(pp: PermutationPair, inst: Instance) -> int:
    mask = 0
    for g in r_intervals(materialize(pp), inst.r):
        mask |= 1 << rank(g, inst)
    return mask


def double_count_check(f: Family, samples: int | None = None, seed: int | None = None,
                       cap: int | None = None) -> DoubleCountCertificate:
    """Stream the orderings of T(k, n) and count family members meeting each.

    Exact mode covers all k! n! orderings; if ``samples`` is given (or T
    exceeds the cap) a seeded sample is used and the certificate is marked
    approximate.
    """
    inst = f.instance
    _check_cycle_instance(inst)
    bad = find_disjoint_pair(f)
    if bad is not None:
        raise InvalidArgument(f"family is not intersecting: {bad[0]} and {bad[1]} are disjoint")
    cap = enum_cap() if cap is None else cap
    exact = samples is None and t_size(inst.k, inst.n) <= cap
    if exact:
        pps = enumerate_t(inst.k, inst.n, cap)
    else:
        if samples is None:
            samples = 10000
        rng = np.random.default_rng(seed)
        pps = (PermutationPair.random(inst.k, inst.n, rng) for _ in range(samples))
    counts = [(f.bits & _window_mask(pp, inst)).bit_count() for pp in pps]
    total = sum(counts)
    r = inst.r
    tk = t_size(inst.k, inst.n)
    per_member = lemma_count(inst)
    implied = tk * r // per_member
    return DoubleCountCertificate(
        instance=inst, family_size=len(f), per_ordering_counts=counts,
        total_incidence=total, bound_lhs=r * len(counts), orderings=len(counts), exact=exact,
        implied_bound=implied, expected_total=per_member * len(f) if exact else None,
        seed=None if exact else seed,
    )


def certificate_json(cert: DoubleCountCertificate) -> str:
    return json.dumps(cert.to_dict(), sort_keys=True)
