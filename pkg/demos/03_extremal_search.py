"""Exact largest intersecting families via maximum clique search.

Run with ``python demos/03_extremal_search.py``.
"""
import io

from ekrperm.core import Instance, star_bound
from ekrperm.solver import build_graph, solve, verify_theorem

for k, r, n in [(3, 2, 3), (4, 2, 4), (4, 2, 5), (4, 3, 3)]:
    rep = solve(Instance(k, r, n), enumerate_all=True)
    inst = rep.instance
    note = f" (searched as {inst})" if rep.transposed_from else ""
    print(f"P({k},{r},{n}){note}: max {rep.max_size}, bound {star_bound(inst)},"
          f" {rep.optima_count} optima, all stars: {rep.all_optima_are_stars},"
          f" {rep.nodes_explored} nodes")

check = verify_theorem(Instance(3, 3, 4))
print("\nverdict for (3,3,4):", check.verdict)

g = build_graph(Instance(2, 2, 3))
buf = io.StringIO()
g.write_dimacs(buf)
print("\nDIMACS export of the (2,2,3) intersection graph:")
print(buf.getvalue())
