"""Cyclic orderings of [k] x [n] and the windows they expose.

Run with ``python demos/02_cycle_method.py``.
"""
import numpy as np

from ekrperm.core import GenPerm, Instance
from ekrperm.cycle import (PermutationPair, base_ordering, count_meeting_orderings, is_r_good,
                           katona_verify, lemma_count, materialize, r_intervals,
                           search_good_ordering, t_size, tau_table_text)

print("base labels for k=5, n=7 (rows are y from 7 down to 1):")
print(tau_table_text(5, 7))

o = base_ordering(3, 4)
print("\nthe k=3, n=4 base ordering, label by label:")
print(" -> ".join(f"({x},{y})" for x, y in o.pairs()))
print("2-good?", is_r_good(o, 2), " 3-good?", is_r_good(o, 3))
print("its 2-windows:", ", ".join(str(w) for w in r_intervals(o, 2)))

# Relabelling by a permutation pair keeps every window short of k legal.
rng = np.random.default_rng(7)
pp = PermutationPair.random(4, 6, rng)
moved = materialize(pp)
print(f"\nrandom relabelling phi={pp.phi} psi={pp.psi}:",
      "all r-good for r < 4:", all(is_r_good(moved, r) for r in range(1, 4)))

# Each member lies in the same number of windows across the whole family T.
inst = Instance(3, 2, 3)
g = GenPerm.of([(1, 2), (3, 3)])
print(f"\n|T(3,3)| = {t_size(3, 3)}; {g} sits in {count_meeting_orderings(g, 3, 3)} of them,"
      f" the closed form says {lemma_count(inst)}")

# Intervals on a plain cycle.
for m, r in [(7, 3), (6, 3)]:
    rep = katona_verify(m, r)
    print(f"cycle m={m}, r={r}: largest pairwise-meeting set of windows = {rep.max_size},"
          f" only stars? {rep.all_optima_are_stars}")

# With r = k = n the orderings fail: no n-good ordering exists for small n.
for n in (2, 3):
    found, checked = search_good_ordering(n)
    print(f"n={n}: {checked} orderings checked, good one found: {found is not None}")
