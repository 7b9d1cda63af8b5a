from itertools import permutations
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ekrperm.core import GenPerm, Instance, enumerate_members, intersects, rank
from ekrperm.cycle import (CyclicOrdering, PermutationPair, base_ordering, count_meeting_orderings,
                           cyclic_mod, enumerate_t, estimate_meeting_orderings, first_bad_window,
                           incidence_counts, is_r_good, katona_verify, lemma_count, materialize,
                           meets, no_good_ordering_exists, r_intervals, relabel, search_good_ordering,
                           t_index, t_slice, t_unrank, tau, tau_phi_psi, tau_table_csv,
                           tau_table_rows, tau_table_text)
from ekrperm.errors import InstanceTooLarge, InvalidArgument, PreconditionViolation, UseTranspose
from oracles import (count_meetings_by_permutations, good_orderings_by_backtracking,
                     ordering_is_good, tau_formula, window_labels_consecutive)

G = GenPerm.of

PRINTED_5_7 = [
    [31, 27, 23, 19, 15],
    [26, 22, 18, 14, 10],
    [21, 17, 13, 9, 5],
    [16, 12, 8, 4, 35],
    [11, 7, 3, 34, 30],
    [6, 2, 33, 29, 25],
    [1, 32, 28, 24, 20],
]


def test_cyclic_mod():
    assert cyclic_mod(14, 7) == 7
    assert cyclic_mod(0, 7) == 0
    assert cyclic_mod(-1, 7) == 6
    assert cyclic_mod(-7, 7) == 7
    assert cyclic_mod(3, 7) == 3
    with pytest.raises(InvalidArgument):
        cyclic_mod(3, 0)


def test_tau_examples():
    assert tau(5, 7, (1, 1)) == 1
    assert tau(5, 7, (5, 4)) == 35
    assert tau(5, 7, (1, 7)) == 31


def test_tau_full_printed_table():
    assert tau_table_rows(5, 7) == PRINTED_5_7


def test_tau_matches_direct_formula():
    for k in range(1, 8):
        for n in range(k, 8):
            for x in range(1, k + 1):
                for y in range(1, n + 1):
                    assert tau(k, n, (x, y)) == tau_formula(k, n, x, y)


def test_tau_is_bijection():
    for k in range(2, 10):
        for n in range(k, 10):
            labels = {tau(k, n, (x, y)) for x in range(1, k + 1) for y in range(1, n + 1)}
            assert labels == set(range(1, k * n + 1))


def test_tau_rejects_k_greater_than_n():
    with pytest.raises(UseTranspose):
        tau(4, 3, (1, 1))
    with pytest.raises(UseTranspose):
        materialize(PermutationPair.identity(4, 3))


def test_tau_phi_psi_identity():
    pp = PermutationPair.identity(3, 5)
    o = materialize(pp)
    for x in range(1, 4):
        for y in range(1, 6):
            assert tau_phi_psi(pp, (x, y)) == tau(3, 5, (x, y)) == o.label_of((x, y))
    assert o == base_ordering(3, 5)


def test_tau_phi_psi_definition():
    rng = np.random.default_rng(7)
    for _ in range(20):
        pp = PermutationPair.random(3, 4, rng)
        o = materialize(pp)
        for i in range(1, 4):
            for j in range(1, 5):
                p = (pp.phi[i - 1], pp.psi[j - 1])
                assert tau_phi_psi(pp, p) == tau(3, 4, (i, j)) == o.label_of(p)
                assert o.pair_at(tau(3, 4, (i, j))) == p


def test_distinct_pairs_give_distinct_orderings_2_2():
    keys = {materialize(pp).key() for pp in enumerate_t(2, 2)}
    assert len(keys) == 4


@pytest.mark.parametrize("k,n", [(2, 2), (2, 3), (3, 3)])
def test_t_orderings_pairwise_distinct(k, n):
    orderings = [materialize(pp) for pp in enumerate_t(k, n)]
    assert len(orderings) == factorial(k) * factorial(n)
    assert len({o.pairs().__repr__() for o in orderings}) == len(orderings)


def test_enumerate_t_counts_and_order():
    assert len(list(enumerate_t(2, 2))) == 4
    pps = list(enumerate_t(3, 3))
    assert len(pps) == 36
    assert [t_index(pp) for pp in pps] == list(range(36))
    assert all(t_unrank(i, 3, 3) == pp for i, pp in enumerate(pps))


def test_t_slice_partitions_enumeration():
    full = list(enumerate_t(3, 4))
    parts = [list(t_slice(3, 4, a, a + 37)) for a in range(0, len(full), 37)]
    assert [pp for part in parts for pp in part] == full


def test_enumerate_t_cap():
    with pytest.raises(InstanceTooLarge):
        list(enumerate_t(3, 3, cap=35))


def test_is_r_good_examples():
    assert is_r_good(base_ordering(5, 7), 4)
    rng = np.random.default_rng(1)
    o = CyclicOrdering.from_pairs([tuple(p) for p in rng.permutation(base_ordering(3, 4).pairs())])
    assert is_r_good(o, 1)
    bad = CyclicOrdering.from_pairs([(1, 1), (1, 2), (2, 2), (2, 1)])
    assert not is_r_good(bad, 2)
    assert first_bad_window(bad, 2) == 1


def test_tau_is_not_k_good():
    # windows of length k are where the construction stops working
    for k, n in [(2, 2), (3, 3), (3, 5), (5, 7)]:
        assert not is_r_good(base_ordering(k, n), k)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.randoms(use_true_random=False), st.integers(1, 16))
def test_fast_goodness_matches_window_scan(k, n, rnd, r):
    cells = [(x, y) for x in range(1, k + 1) for y in range(1, n + 1)]
    rnd.shuffle(cells)
    r = min(r, len(cells))
    o = CyclicOrdering.from_pairs(cells)
    assert is_r_good(o, r) == ordering_is_good(cells, r)
    assert (first_bad_window(o, r) is None) == ordering_is_good(cells, r)


def test_every_t_member_is_r_good_small():
    for k in range(2, 4):
        for n in range(k, 4):
            for pp in enumerate_t(k, n):
                o = materialize(pp)
                for r in range(1, k):
                    assert is_r_good(o, r)
                    assert ordering_is_good(o.pairs(), r)


def test_meets_examples():
    o = base_ordering(5, 7)
    g = G([o.pair_at(3), o.pair_at(4), o.pair_at(5)])
    assert meets(g, o)
    o3 = base_ordering(3, 4)
    assert meets(G([o3.pair_at(12), o3.pair_at(1)]), o3)
    assert not meets(G([o3.pair_at(1), o3.pair_at(3)]), o3)
    assert meets(G([o3.pair_at(7)]), o3)


def test_meets_matches_oracle():
    for pp in enumerate_t(3, 3):
        o = materialize(pp)
        for g in enumerate_members(Instance(3, 2, 3)):
            labels = [o.label_of(p) for p in g.pairs]
            assert meets(g, o) == window_labels_consecutive(labels, 9)


def test_r_intervals_examples():
    got = r_intervals(base_ordering(3, 3), 2)
    assert len(got) == 9 and len(set(got)) == 9
    for g in got:
        g.check(Instance(3, 2, 3))
        assert meets(g, base_ordering(3, 3))
    singles = r_intervals(base_ordering(2, 2), 1)
    assert sorted(singles) == [G([(1, 1)]), G([(1, 2)]), G([(2, 1)]), G([(2, 2)])]


def test_r_intervals_requires_good_ordering():
    with pytest.raises(PreconditionViolation) as exc:
        r_intervals(base_ordering(3, 3), 3)
    assert exc.value.witness is not None


def test_relabel():
    inst = Instance(3, 2, 3)
    members = list(enumerate_members(inst))
    ident = PermutationPair.identity(3, 3)
    assert all(relabel(g, ident) == g for g in members)
    pp = PermutationPair((2, 3, 1), (3, 1, 2))
    image = {relabel(g, pp) for g in members}
    assert len(image) == 18
    for a in members:
        for b in members:
            assert intersects(a, b) == intersects(relabel(a, pp), relabel(b, pp))


def test_equivariance_of_meeting():
    rng = np.random.default_rng(11)
    for k, n in [(3, 3), (3, 5), (4, 6)]:
        members = list(enumerate_members(Instance(k, 2, n)))
        for _ in range(30):
            base = PermutationPair.random(k, n, rng)
            move = PermutationPair.random(k, n, rng)
            g = members[rng.integers(len(members))]
            lhs = meets(g, materialize(base))
            rhs = meets(relabel(g, move), materialize(base.then(move)))
            assert lhs == rhs


@pytest.mark.parametrize("k,r,n,expected", [(2, 1, 2, 4), (3, 2, 3, 18)])
def test_count_meeting_orderings_examples(k, r, n, expected):
    inst = Instance(k, r, n)
    assert lemma_count(inst) == expected
    for g in enumerate_members(inst):
        assert count_meeting_orderings(g, k, n) == expected


def test_count_meeting_orderings_against_oracle():
    for g in [G([(1, 2), (3, 1)]), G([(2, 4), (3, 3)])]:
        assert count_meeting_orderings(g, 3, 4) == count_meetings_by_permutations(g.pairs, 3, 4)


def test_count_meeting_orderings_preconditions():
    with pytest.raises(InvalidArgument):
        count_meeting_orderings(G([(1, 1), (2, 2)]), 2, 3)
    with pytest.raises(UseTranspose):
        count_meeting_orderings(G([(1, 1)]), 3, 2)
    with pytest.raises(InstanceTooLarge):
        count_meeting_orderings(G([(1, 1)]), 3, 3, cap=10)


@pytest.mark.parametrize("k,r,n", [(2, 1, 2), (2, 1, 3), (3, 1, 3), (3, 2, 3), (3, 2, 4), (3, 1, 2 + 2)])
def test_incidence_sum_identity(k, r, n):
    inst = Instance(k, r, n)
    counts = incidence_counts(inst)
    assert set(counts) == {lemma_count(inst)}
    total = sum(counts)
    assert total == factorial(k) * factorial(n) * k * n
    assert total == inst.size * lemma_count(inst)


def test_estimate_meeting_orderings_is_close():
    rng = np.random.default_rng(5)
    est = estimate_meeting_orderings(G([(1, 1), (2, 2)]), 3, 4, 3000, rng)
    assert abs(est - lemma_count(Instance(3, 2, 4))) / lemma_count(Instance(3, 2, 4)) < 0.15


def test_katona_examples():
    rep = katona_verify(4, 2)
    assert rep.max_size == 2 and rep.holds
    rep = katona_verify(7, 3)
    assert rep.max_size == 3 and rep.all_optima_are_stars and rep.star_uniqueness_asserted
    assert rep.optima_count == 7
    rep = katona_verify(6, 3)
    assert rep.max_size == 3 and not rep.star_uniqueness_asserted
    # boundary case: three windows pairwise meeting with no common point
    assert not rep.all_optima_are_stars and rep.non_star_witness is not None
    assert rep.holds


def test_katona_precondition():
    with pytest.raises(PreconditionViolation):
        katona_verify(5, 3)


def test_katona_on_orderings_of_grid():
    rng = np.random.default_rng(3)
    o = materialize(PermutationPair.random(3, 4, rng))
    for r in range(1, 7):
        rep = katona_verify(o, r)
        assert rep.max_size == r and rep.holds


def test_katona_random_cycles_brute_force():
    from itertools import combinations
    rng = np.random.default_rng(9)
    for m, r in [(6, 2), (7, 3), (8, 3)]:
        cyc = [int(v) for v in rng.permutation(m)]
        windows = [frozenset(cyc[(s + j) % m] for j in range(r)) for s in range(m)]
        best = 0
        for size in range(1, m + 1):
            for fam in combinations(windows, size):
                if all(a & b for a, b in combinations(fam, 2)):
                    best = size
        assert katona_verify(cyc, r).max_size == best == r


def test_no_good_ordering():
    assert no_good_ordering_exists(2)
    found, checked = search_good_ordering(3)
    assert found is None and checked == 40320
    assert good_orderings_by_backtracking(2) == 0
    assert good_orderings_by_backtracking(3) == 0
    with pytest.raises(InstanceTooLarge):
        no_good_ordering_exists(4)


def test_no_good_ordering_n2_independent():
    cells = [(1, 1), (1, 2), (2, 1), (2, 2)]
    for tail in permutations(cells[1:]):
        o = CyclicOrdering.from_pairs((cells[0],) + tail)
        assert not is_r_good(o, 2)


def test_good_ordering_exists_when_k_less_than_n():
    assert is_r_good(base_ordering(2, 3), 1)
    # for k = 2, n = 3 an r = 2 good ordering exists, just not tau itself at r = k
    found = None
    for tail in permutations([(x, y) for x in (1, 2) for y in (1, 2, 3)][1:]):
        if ordering_is_good(((1, 1),) + tail, 2):
            found = tail
            break
    assert found is not None


def test_ordering_json_roundtrip():
    o = materialize(PermutationPair((2, 1, 3), (4, 1, 3, 2)))
    back = CyclicOrdering.from_json(o.to_json())
    assert back == o and back.to_json() == o.to_json()
    with pytest.raises(InvalidArgument):
        CyclicOrdering.from_json("[[1, 1], [1, 1]]")
    with pytest.raises(InvalidArgument):
        CyclicOrdering.from_json('{"x": 1}')


def test_tau_table_formats():
    text = tau_table_text(5, 7)
    lines = text.strip().splitlines()
    assert lines[0].startswith("(1,7)^31") and "(5,4)^35" in lines[3]
    csv_rows = [line.split(",") for line in tau_table_csv(5, 7).strip().splitlines()]
    assert csv_rows[0] == ["y\\x", "1", "2", "3", "4", "5"]
    assert [[int(v) for v in row[1:]] for row in csv_rows[1:]] == PRINTED_5_7


def test_permutation_pair_validation():
    with pytest.raises(InvalidArgument):
        PermutationPair((1, 1), (1, 2))
    pp = PermutationPair((2, 3, 1), (1, 2))
    assert pp.then(pp.inverse()) == PermutationPair.identity(3, 2)


def test_rank_of_intervals_cover_family_evenly():
    inst = Instance(3, 2, 4)
    hits = [0] * inst.size
    for pp in enumerate_t(3, 4):
        for g in r_intervals(materialize(pp), 2):
            hits[rank(g, inst)] += 1
    assert len(set(hits)) == 1
