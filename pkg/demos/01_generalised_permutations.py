"""Partial injections between [k] and [n]: counting, ranking and stars.

Run with ``python demos/01_generalised_permutations.py``.
"""
from ekrperm.core import (GenPerm, Instance, classify_star, enumerate_members, family_size,
                          intersects, is_intersecting_family, rank, star, star_bound, unrank)

inst = Instance(3, 2, 4)
print(f"instance {inst}: {family_size(inst)} members, star bound {star_bound(inst)}")

# Members come out in rank order, and rank/unrank are inverse to each other.
members = list(enumerate_members(inst))
print("first five members:", ", ".join(str(g) for g in members[:5]))
g = GenPerm.of([(3, 1), (1, 4)])
i = rank(g, inst)
print(f"{g} has rank {i}; unrank({i}) = {unrank(i, inst)}")

# Two members intersect when they share a pair.
a, b = GenPerm.of([(1, 1), (2, 2)]), GenPerm.of([(1, 2), (2, 1)])
print(f"{a} and {b} intersect? {intersects(a, b)}")

# A star collects every member through a fixed pair.
s = star(inst, (2, 3))
print(f"star at (2,3) has {len(s)} members, intersecting: {is_intersecting_family(s)}")
print("classify_star recovers its centre:", classify_star(s))
print("and its serialized form starts with:", s.dumps()[:60], "...")
