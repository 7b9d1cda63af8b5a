from itertools import combinations
from math import comb, perm

import pytest
from hypothesis import given, settings, strategies as st

from ekrperm.core import (Family, GenPerm, Instance, classify_star, enumerate_members,
                          family_size, intersects, is_intersecting_family, rank, star,
                          star_bound, transpose, transpose_family, unrank)
from ekrperm.errors import InstanceTooLarge, InvalidArgument
from oracles import all_members

G = GenPerm.of


@pytest.mark.parametrize("k,r,n,expected", [(2, 1, 2, 4), (3, 2, 3, 18), (5, 2, 7, 420)])
def test_family_size(k, r, n, expected):
    assert family_size(Instance(k, r, n)) == expected
    assert len(all_members(k, r, n)) == expected


def test_family_size_matches_enumeration_on_grid():
    for k in range(1, 6):
        for n in range(1, 6):
            for r in range(1, min(k, n) + 1):
                assert family_size(Instance(k, r, n)) == len(all_members(k, r, n))


@pytest.mark.parametrize("bad", [(0, 1, 1), (2, 3, 2), (3, 3, 2), (1, 0, 1)])
def test_instance_rejects_invalid(bad):
    with pytest.raises(InvalidArgument):
        Instance(*bad)


def test_instance_too_large():
    with pytest.raises(InstanceTooLarge):
        Instance(40, 20, 40)


@pytest.mark.parametrize("k,r,n,expected", [(3, 2, 3, 4), (5, 2, 7, 24), (4, 1, 6, 1), (6, 1, 3, 1)])
def test_star_bound(k, r, n, expected):
    assert star_bound(Instance(k, r, n)) == expected
    centre_members = [m for m in all_members(k, r, n) if (1, 1) in m]
    assert len(centre_members) == expected


def test_star_bound_closed_forms_agree():
    for k in range(1, 10):
        for n in range(1, 10):
            for r in range(1, min(k, n) + 1):
                a = comb(k - 1, r - 1) * perm(n - 1, r - 1)
                b = comb(n - 1, r - 1) * perm(k - 1, r - 1)
                assert a == b == star_bound(Instance(k, r, n))


def test_rank_examples():
    inst = Instance(3, 2, 3)
    assert rank(G([(1, 1), (2, 2)]), inst) == 0
    assert rank(G([(2, 3), (3, 2)]), inst) == 17
    assert unrank(0, inst) == G([(1, 1), (2, 2)])
    assert unrank(17, inst) == G([(2, 3), (3, 2)])


@pytest.mark.parametrize("k,r,n", [(3, 2, 3), (3, 2, 4), (4, 3, 5), (2, 2, 2), (5, 1, 3)])
def test_rank_unrank_roundtrip_full(k, r, n):
    inst = Instance(k, r, n)
    seen = set()
    for i in range(inst.size):
        g = unrank(i, inst)
        assert rank(g, inst) == i
        seen.add(frozenset(g.pairs))
    assert seen == set(all_members(k, r, n))


def test_rank_is_lexicographic_in_support_then_ys():
    inst = Instance(4, 2, 4)
    keys = [(tuple(x for x, _ in g.pairs), tuple(y for _, y in g.pairs)) for g in enumerate_members(inst)]
    assert keys == sorted(keys)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.data())
def test_rank_unrank_spot_grid(k, n, data):
    r = data.draw(st.integers(1, min(k, n)))
    inst = Instance(k, r, n)
    if inst.size > 10**6:
        return
    i = data.draw(st.integers(0, inst.size - 1))
    g = unrank(i, inst)
    assert len({x for x, _ in g.pairs}) == r and len({y for _, y in g.pairs}) == r
    assert rank(g, inst) == i


def test_unrank_out_of_range():
    with pytest.raises(InvalidArgument):
        unrank(18, Instance(3, 2, 3))
    with pytest.raises(InvalidArgument):
        unrank(-1, Instance(3, 2, 3))


def test_rank_rejects_malformed():
    with pytest.raises(InvalidArgument):
        rank(G([(1, 1)]), Instance(3, 2, 3))
    with pytest.raises(InvalidArgument):
        rank(G([(1, 1), (4, 2)]), Instance(3, 2, 3))
    with pytest.raises(InvalidArgument):
        G([(1, 1), (2, 1)])
    with pytest.raises(InvalidArgument):
        G([(1, 1), (1, 2)])


def test_enumerate_examples():
    assert list(enumerate_members(Instance(2, 1, 2))) == [G([(1, 1)]), G([(1, 2)]), G([(2, 1)]), G([(2, 2)])]
    got = list(enumerate_members(Instance(3, 2, 3)))
    assert len(got) == 18 and len(set(got)) == 18
    assert len(list(enumerate_members(Instance(4, 2, 4)))) == 72


def test_enumerate_matches_unrank():
    inst = Instance(4, 3, 5)
    for i, g in enumerate(enumerate_members(inst)):
        assert unrank(i, inst) == g


def test_intersects_examples():
    assert intersects(G([(1, 1), (2, 2)]), G([(1, 1), (2, 3)]))
    assert not intersects(G([(1, 1), (2, 2)]), G([(1, 2), (2, 1)]))
    assert not intersects(G([(1, 2)]), G([(2, 2)]))


def test_star_examples():
    inst = Instance(3, 2, 3)
    s = star(inst, (1, 1))
    assert set(s) == {G([(1, 1), (2, 2)]), G([(1, 1), (2, 3)]), G([(1, 1), (3, 2)]), G([(1, 1), (3, 3)])}
    assert list(star(Instance(3, 1, 4), (2, 3))) == [G([(2, 3)])]


def test_star_size_every_centre():
    inst = Instance(4, 2, 4)
    members = all_members(4, 2, 4)
    for a in range(1, 5):
        for b in range(1, 5):
            s = star(inst, (a, b))
            assert len(s) == star_bound(inst)
            assert {frozenset(g.pairs) for g in s} == {m for m in members if (a, b) in m}


def test_star_centre_out_of_range():
    with pytest.raises(InvalidArgument):
        star(Instance(3, 2, 3), (4, 1))


def test_classify_star():
    inst = Instance(3, 2, 3)
    assert classify_star(star(inst, (2, 3))) == (2, 3)
    s = star(inst, (1, 1))
    for g in s:
        assert classify_star(s.without(g)) is None
    assert classify_star(Family.from_members(inst, [G([(1, 1), (2, 2)]), G([(1, 2), (2, 1)])])) is None
    with pytest.raises(InvalidArgument):
        classify_star(Family(inst))


def test_classify_star_every_centre():
    inst = Instance(4, 2, 5)
    for a in range(1, 5):
        for b in range(1, 6):
            assert classify_star(star(inst, (a, b))) == (a, b)


def test_classify_star_rejects_same_size_non_star():
    inst = Instance(3, 2, 3)
    s = star(inst, (1, 1))
    g = next(iter(s))
    other = next(m for m in enumerate_members(inst) if m not in s)
    fam = Family(inst, s.without(g).bits | 1 << rank(other, inst))
    assert len(fam) == len(s)
    assert classify_star(fam) is None


def test_is_intersecting_family():
    inst = Instance(3, 2, 3)
    assert is_intersecting_family(star(inst, (3, 1)))
    assert is_intersecting_family(Family(inst))
    assert is_intersecting_family(Family.from_ranks(inst, [5]))
    assert not is_intersecting_family(Family.full(inst))


def test_transpose_examples():
    assert transpose(G([(1, 3), (2, 1)]), Instance(2, 2, 3)) == G([(1, 2), (3, 1)])
    inst = Instance(2, 2, 3)
    members = list(enumerate_members(inst))
    assert len(members) == 6
    for g in members:
        t = transpose(g, inst)
        t.check(inst.transposed)
        assert transpose(t) == g
    for a, b in combinations(members, 2):
        assert intersects(a, b) == intersects(transpose(a), transpose(b))


def test_transpose_family_is_bijection():
    inst = Instance(3, 2, 4)
    full = Family.full(inst)
    t = transpose_family(full)
    assert t.instance == Instance(4, 2, 3)
    assert len(t) == len(full) == t.instance.size
    s = star(inst, (2, 4))
    assert classify_star(transpose_family(s)) == (4, 2)


def test_family_document_roundtrip():
    inst = Instance(3, 2, 4)
    fam = star(inst, (2, 1))
    assert Family.loads(fam.dumps()) == fam
    assert Family.loads(fam.dumps(as_ranks=True)) == fam
    doc = fam.to_dict()
    assert doc["k"] == 3 and doc["r"] == 2 and doc["n"] == 4
    assert all(len(m) == 2 and all(len(p) == 2 for p in m) for m in doc["members"])
    assert fam.dumps() == Family.loads(fam.dumps()).dumps()


def test_family_document_errors():
    with pytest.raises(InvalidArgument):
        Family.from_dict({"k": 2, "r": 1})
    with pytest.raises(InvalidArgument):
        Family.from_dict({"k": 2, "r": 1, "n": 2})
    with pytest.raises(InvalidArgument):
        Family.from_dict({"k": 2, "r": 1, "n": 2, "memberRanks": [4]})
    with pytest.raises(InvalidArgument):
        Family.from_dict({"k": 2, "r": 1, "n": 2, "members": [[[3, 1]]]})
