"""Grid runs that tie each checked claim to a named suite and collect verdicts.

Every suite is independent: a failure or skip in one never stops the
others.  Randomness comes from a Philox generator keyed by
``(seed, suite index, grid entry)``, so results do not depend on the order
in which entries are run or on how they are spread over workers.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import __version__
from .core import Instance, enumerate_members, intersects, star, star_bound, transpose
from .cycle import (PermutationPair, base_ordering, count_meeting_orderings,
                    enum_cap, enumerate_t, first_bad_window, is_r_good, katona_verify,
                    lemma_count, materialize, random_cycle, search_good_ordering, t_size)
from .errors import EKRError, InstanceTooLarge
from .solver import build_graph, double_count_check, max_clique, verify_theorem

SUITE_IDS = (
    "TAU_TABLE", "R_GOOD", "T_DISTINCT", "CYCLE_LEMMA", "LEMMA3_COUNT",
    "THEOREM_BOUND", "THEOREM_UNIQUE", "DUALITY", "NO_GOOD_ORDERING", "DOUBLE_COUNT",
)

# grid entry shape per suite
ENTRY_FIELDS = {
    "TAU_TABLE": ("k", "n"),
    "R_GOOD": ("k", "n"),
    "T_DISTINCT": ("k", "n"),
    "CYCLE_LEMMA": ("m", "r"),
    "NO_GOOD_ORDERING": ("n",),
}
INSTANCE_FIELDS = ("k", "r", "n")

DEFAULT_SEED = 20100823

# printed label grid for k = 5, n = 7; row 0 is y = 7, column j is x = j + 1
REFERENCE_TAU_5_7 = (
    (31, 27, 23, 19, 15),
    (26, 22, 18, 14, 10),
    (21, 17, 13, 9, 5),
    (16, 12, 8, 4, 35),
    (11, 7, 3, 34, 30),
    (6, 2, 33, 29, 25),
    (1, 32, 28, 24, 20),
)

PASS, FAIL, SKIPPED = "PASS", "FAIL", "SKIPPED"


@dataclass(frozen=True)
class SuiteSpec:
    suite_id: str
    grid: tuple[tuple[int, ...], ...]
    samples: int | None = None  # None means exact mode
    seed: int = DEFAULT_SEED
    timeout: float | None = None
    cap: int | None = None

    def __post_init__(self):
        if self.suite_id not in SUITE_IDS:
            raise ValueError(f"unknown suite {self.suite_id!r}")
        fields = ENTRY_FIELDS.get(self.suite_id, INSTANCE_FIELDS)
        for entry in self.grid:
            if len(entry) != len(fields):
                raise ValueError(f"{self.suite_id} entries are {fields}, got {entry}")
            if fields == INSTANCE_FIELDS:
                Instance(*entry)
            elif any(v < 1 for v in entry):
                raise ValueError(f"{self.suite_id} entry {entry} must be positive")
        if self.samples is not None and self.samples < 1:
            raise ValueError("sample count must be positive")

    @property
    def mode(self) -> str:
        return "exact" if self.samples is None else f"sampled({self.samples})"


def suite_rng(seed: int, suite_id: str, entry: tuple[int, ...]) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(SUITE_IDS.index(suite_id), *entry))
    return np.random.Generator(np.random.Philox(ss))


def _verdict(status: str, **extra) -> dict:
    return {"status": status, **extra}


def _pass(**detail) -> dict:
    return _verdict(PASS, detail=detail)


def _fail(witness, **detail) -> dict:
    return _verdict(FAIL, witness=witness, detail=detail)


def _skip(reason: str) -> dict:
    return _verdict(SKIPPED, reason=reason)


# -- per-suite checks --------------------------------------------------------

def _tau_table(spec: SuiteSpec, k: int, n: int) -> dict:
    o = base_ordering(k, n)
    if sorted(o.labels.ravel().tolist()) != list(range(1, k * n + 1)):
        return _fail({"labels": o.labels.tolist()}, problem="not a bijection")
    if (k, n) == (5, 7):
        got = [[o.label_of((x, y)) for x in range(1, 6)] for y in range(7, 0, -1)]
        for row, (want_row, got_row) in enumerate(zip(REFERENCE_TAU_5_7, got)):
            for col, (w, g) in enumerate(zip(want_row, got_row)):
                if w != g:
                    return _fail({"pair": [col + 1, 7 - row], "expected": w, "got": g})
        return _pass(labelsChecked=35, reference="printed table")
    return _pass(labelsChecked=k * n, reference="bijection only")


def _r_good(spec: SuiteSpec, k: int, n: int) -> dict:
    if k > n:
        return _skip("k > n: transpose first")
    rs = range(1, k)
    if spec.samples is None:
        cap = enum_cap() if spec.cap is None else spec.cap
        if t_size(k, n) > cap:
            return _skip(f"instance-too-large: |T| = {t_size(k, n)} exceeds cap {cap}")
        pps = enumerate_t(k, n, cap)
    else:
        rng = suite_rng(spec.seed, spec.suite_id, (k, n))
        pps = (PermutationPair.random(k, n, rng) for _ in range(spec.samples))
    checked = 0
    for pp in pps:
        o = materialize(pp)
        checked += 1
        for r in rs:
            if not is_r_good(o, r):
                return _fail({"ordering": pp.to_dict(), "r": r, "window": first_bad_window(o, r)})
    return _pass(orderings=checked, rValues=list(rs))


def _t_distinct(spec: SuiteSpec, k: int, n: int) -> dict:
    if k > n:
        return _skip("k > n: transpose first")
    cap = enum_cap() if spec.cap is None else spec.cap
    if t_size(k, n) > cap:
        return _skip(f"instance-too-large: |T| = {t_size(k, n)} exceeds cap {cap}")
    seen: dict[bytes, PermutationPair] = {}
    for pp in enumerate_t(k, n, cap):
        key = materialize(pp).key()
        if key in seen:
            return _fail({"first": seen[key].to_dict(), "second": pp.to_dict()})
        seen[key] = pp
    return _pass(orderings=len(seen), expected=t_size(k, n))


def _cycle_lemma(spec: SuiteSpec, m: int, r: int) -> dict:
    if m < 2 * r:
        return _skip("m < 2r")
    rng = suite_rng(spec.seed, spec.suite_id, (m, r))
    trials = spec.samples or 1
    non_star_seen = None
    for t in range(trials):
        cyc = random_cycle(m, rng) if spec.samples else list(range(m))
        rep = katona_verify(cyc, r)
        if not rep.holds:
            return _fail({"cycle": cyc, "report": rep.to_dict()})
        if not rep.all_optima_are_stars and non_star_seen is None:
            non_star_seen = rep.non_star_witness
    return _pass(trials=trials, starUniquenessAsserted=m > 2 * r, nonStarOptimum=non_star_seen)


def _lemma3(spec: SuiteSpec, inst: Instance) -> dict:
    if inst.k > inst.n:
        return _skip("k > n: transpose first")
    if inst.r > inst.k - 1:
        return _skip("r = k: cycle orderings are not r-good")
    want = lemma_count(inst)
    try:
        for g in enumerate_members(inst):
            got = count_meeting_orderings(g, inst.k, inst.n, spec.cap)
            if got != want:
                return _fail({"member": [list(p) for p in g.pairs], "count": got, "expected": want})
    except InstanceTooLarge as e:
        return _skip(f"instance-too-large: {e}")
    return _pass(members=inst.size, countPerMember=want)


def _theorem_bound(spec: SuiteSpec, inst: Instance) -> dict:
    rep = max_clique(build_graph(inst), timeout=spec.timeout)
    if not rep.exact:
        return _skip("timeout")
    want = star_bound(inst)
    if rep.max_size != want:
        return _fail(rep.witness.to_dict(), maxSize=rep.max_size, starBound=want)
    return _pass(maxSize=rep.max_size, starBound=want, nodes=rep.nodes_explored)


def _theorem_unique(spec: SuiteSpec, inst: Instance) -> dict:
    rep = verify_theorem(inst, timeout=spec.timeout, cap=spec.cap)
    if rep.verdict == "INCOMPLETE":
        return _skip("timeout or optima cap reached")
    centres = inst.k * inst.n
    if rep.verdict != "PASS":
        return _fail(rep.violation.to_dict(), maxSize=rep.max_size)
    if rep.optima_count != centres:
        return _fail({"optimaCount": rep.optima_count}, expected=centres)
    return _pass(maxSize=rep.max_size, optimaCount=rep.optima_count, allStars=True)


def _duality(spec: SuiteSpec, inst: Instance) -> dict:
    members = list(enumerate_members(inst))
    if len(members) <= 2000:
        for a, b in combinations(members, 2):
            if intersects(a, b) != intersects(transpose(a), transpose(b)):
                return _fail({"a": [list(p) for p in a.pairs], "b": [list(p) for p in b.pairs]})
        for g in members:
            if transpose(transpose(g)) != g:
                return _fail({"member": [list(p) for p in g.pairs]}, problem="not an involution")
    left = max_clique(build_graph(inst), timeout=spec.timeout)
    right = max_clique(build_graph(inst.transposed), timeout=spec.timeout)
    if not (left.exact and right.exact):
        return _skip("timeout")
    if left.max_size != right.max_size:
        return _fail({"max": left.max_size, "transposedMax": right.max_size})
    return _pass(maxSize=left.max_size, pairsChecked=len(members) * (len(members) - 1) // 2)


def _no_good(spec: SuiteSpec, n: int) -> dict:
    try:
        found, checked = search_good_ordering(n)
    except InstanceTooLarge as e:
        return _skip(f"instance-too-large: {e}")
    if found is not None:
        return _fail({"ordering": [list(p) for p in found]})
    return _pass(orderingsChecked=checked)


def _double_count(spec: SuiteSpec, inst: Instance) -> dict:
    if inst.k > inst.n:
        return _skip("k > n: transpose first")
    if inst.r > inst.k - 1:
        return _skip("r = k: certificate unavailable, covered by the solver")
    fam = star(inst, (1, 1))
    cert = double_count_check(fam, samples=spec.samples, seed=spec.seed, cap=spec.cap)
    r = inst.r
    if not cert.holds or any(c != r for c in cert.per_ordering_counts):
        bad = next((i for i, c in enumerate(cert.per_ordering_counts) if c != r), None)
        return _fail({"orderingIndex": bad, "certificate": cert.to_dict()})
    if cert.exact and cert.implied_bound != star_bound(inst):
        return _fail({"impliedBound": cert.implied_bound, "starBound": star_bound(inst)})
    return _pass(orderings=cert.orderings, totalIncidence=cert.total_incidence,
                 impliedBound=cert.implied_bound, exact=cert.exact)


_RUNNERS = {
    "TAU_TABLE": _tau_table,
    "R_GOOD": _r_good,
    "T_DISTINCT": _t_distinct,
    "CYCLE_LEMMA": _cycle_lemma,
    "LEMMA3_COUNT": _lemma3,
    "THEOREM_BOUND": _theorem_bound,
    "THEOREM_UNIQUE": _theorem_unique,
    "DUALITY": _duality,
    "NO_GOOD_ORDERING": _no_good,
    "DOUBLE_COUNT": _double_count,
}


def run_entry(spec: SuiteSpec, entry: tuple[int, ...]) -> dict:
    runner = _RUNNERS[spec.suite_id]
    args = (Instance(*entry),) if spec.suite_id not in ENTRY_FIELDS else entry
    t0 = time.perf_counter()
    try:
        verdict = runner(spec, *args)
    except EKRError as e:
        verdict = _skip(f"{type(e).__name__}: {e}")
    verdict.update(suite=spec.suite_id, entry=list(entry), mode=spec.mode,
                   seed=spec.seed if spec.samples else None)
    verdict["_elapsed"] = time.perf_counter() - t0
    return verdict


def _run_packed(args):
    return run_entry(*args)


# -- reports -----------------------------------------------------------------

@dataclass
class ConformanceReport:
    results: list[dict] = field(default_factory=list)
    version: str = __version__
    seeds: list[int] = field(default_factory=list)
    wall_clock: float | None = None

    @property
    def totals(self) -> dict:
        out = {PASS: 0, FAIL: 0, SKIPPED: 0}
        for v in self.results:
            out[v["status"]] += 1
        return out

    @property
    def ok(self) -> bool:
        return self.totals[FAIL] == 0

    def merge(self, other: ConformanceReport) -> None:
        self.results.extend(other.results)
        self.seeds = sorted(set(self.seeds) | set(other.seeds))
        self._sort()

    def _sort(self):
        self.results.sort(key=lambda v: (SUITE_IDS.index(v["suite"]), v["mode"], v["entry"]))

    def to_dict(self, timings: bool = False) -> dict:
        results = []
        for v in self.results:
            v = dict(v)
            elapsed = v.pop("_elapsed", None)
            if timings and elapsed is not None:
                v["elapsed"] = elapsed
            results.append(v)
        doc = {
            "tool": "ekrperm",
            "version": self.version,
            "seeds": self.seeds,
            "totals": self.totals,
            "results": results,
        }
        if timings:
            doc["wallClock"] = self.wall_clock
        return doc

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ConformanceReport:
        doc = json.loads(text)
        results = []
        for v in doc["results"]:
            v = dict(v)
            if "elapsed" in v:
                v["_elapsed"] = v.pop("elapsed")
            results.append(v)
        return cls(results=results, version=doc["version"], seeds=doc["seeds"],
                   wall_clock=doc.get("wallClock"))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["suite", "entry", "mode", "status", "reason"])
        for v in self.results:
            w.writerow([v["suite"], " ".join(map(str, v["entry"])), v["mode"], v["status"],
                        v.get("reason", "")])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = []
        for v in self.results:
            entry = ",".join(map(str, v["entry"]))
            tail = f"  ({v['reason']})" if v["status"] == SKIPPED else ""
            lines.append(f"{v['status']:<8} {v['suite']:<17} ({entry}) {v['mode']}{tail}")
        t = self.totals
        lines.append(f"totals: {t[PASS]} pass, {t[FAIL]} fail, {t[SKIPPED]} skipped")
        return "\n".join(lines) + "\n"


def run_suite(spec: SuiteSpec, workers: int = 1) -> ConformanceReport:
    t0 = time.perf_counter()
    if workers > 1 and len(spec.grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_packed, [(spec, e) for e in spec.grid]))
    else:
        results = [run_entry(spec, e) for e in spec.grid]
    rep = ConformanceReport(results=results, seeds=[spec.seed] if spec.samples else [])
    rep._sort()
    rep.wall_clock = time.perf_counter() - t0
    return rep


def run_all(specs, workers: int = 1) -> ConformanceReport:
    t0 = time.perf_counter()
    report = ConformanceReport()
    if workers > 1:
        jobs = [(s, e) for s in specs for e in s.grid]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report.results = list(pool.map(_run_packed, jobs))
        report.seeds = sorted({s.seed for s in specs if s.samples})
        report._sort()
    else:
        for s in specs:
            report.merge(run_suite(s))
    report.wall_clock = time.perf_counter() - t0
    return report


SOLVER_GRID = ((2, 1, 2), (2, 1, 3), (2, 2, 3), (3, 1, 3), (3, 2, 3), (3, 3, 3),
               (3, 2, 4), (4, 2, 4), (4, 3, 4), (4, 2, 5), (3, 3, 4))


def default_grid(seed: int = DEFAULT_SEED) -> list[SuiteSpec]:
    """The acceptance grid.  Cycle-based suites never include r = k."""
    unique_grid = tuple(t for t in SOLVER_GRID if Instance(*t).size <= 200)
    sampled_good = tuple((k, n) for k in range(4, 9) for n in range(k, 9))
    cycles = tuple((m, r) for r in range(1, 5) for m in range(2 * r, 13))
    return [
        SuiteSpec("TAU_TABLE", ((5, 7),)),
        SuiteSpec("R_GOOD", tuple((k, n) for k in range(2, 4) for n in range(k, 4))),
        SuiteSpec("R_GOOD", sampled_good, samples=1000, seed=seed),
        SuiteSpec("T_DISTINCT", ((2, 2), (2, 3), (3, 3))),
        SuiteSpec("CYCLE_LEMMA", cycles, samples=100, seed=seed),
        SuiteSpec("LEMMA3_COUNT", ((2, 1, 2), (2, 1, 3), (3, 1, 3), (3, 2, 3), (3, 2, 4), (4, 3, 4))),
        SuiteSpec("THEOREM_BOUND", SOLVER_GRID),
        SuiteSpec("THEOREM_UNIQUE", unique_grid),
        SuiteSpec("DUALITY", ((2, 2, 3), (3, 2, 4))),
        SuiteSpec("NO_GOOD_ORDERING", ((2,), (3,))),
        SuiteSpec("DOUBLE_COUNT", ((3, 2, 3), (3, 1, 3), (4, 2, 4), (4, 3, 4))),
    ]
