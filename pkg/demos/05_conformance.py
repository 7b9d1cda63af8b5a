"""Running the conformance suites programmatically and comparing reports.

Run with ``python demos/05_conformance.py``.
"""
from ekrperm.harness import ConformanceReport, SuiteSpec, default_grid, run_all, run_suite

rep = run_suite(SuiteSpec("CYCLE_LEMMA", ((8, 3), (9, 4)), samples=20, seed=11))
print(rep.to_text())

# Same seed, same bytes.
again = run_suite(SuiteSpec("CYCLE_LEMMA", ((8, 3), (9, 4)), samples=20, seed=11))
print("reports identical:", rep.to_json() == again.to_json())
print("round trip through JSON:", ConformanceReport.from_json(rep.to_json()).to_json() == rep.to_json())

quick = [s for s in default_grid() if s.suite_id in ("TAU_TABLE", "THEOREM_BOUND", "DUALITY")]
print(run_all(quick).to_csv())
