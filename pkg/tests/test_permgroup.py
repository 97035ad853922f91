"""Stabilizer chains, minimal images, and backtrack stabilizers vs brute force."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjarc.permgroup import PermGroup, compose, evaluate_word, identity, inverse


def s_n_gens(n):
    t = np.arange(n, dtype=np.int32)
    t[[0, 1]] = [1, 0]
    c = np.roll(np.arange(n, dtype=np.int32), -1)
    return [t, c]


@pytest.fixture(scope="module")
def s5():
    return PermGroup(5, s_n_gens(5), name="S5")


@pytest.fixture(scope="module")
def d8():
    rot = np.roll(np.arange(8, dtype=np.int32), -1)
    ref = np.array([0, 7, 6, 5, 4, 3, 2, 1], dtype=np.int32)
    return PermGroup(8, [rot, ref], name="D8")


def brute_elements(group):
    return [p for p in group.iterate_elements()]


def brute_min(group, pts):
    best = None
    for g in group.iterate_elements():
        img = tuple(sorted(int(g[x]) for x in pts))
        if best is None or img < best:
            best = img
    return best


def brute_stab(group, vals):
    vals = np.asarray(vals)
    return [g for g in group.iterate_elements() if np.array_equal(vals[g], vals)]


def test_compose_convention():
    p = np.array([1, 2, 0], dtype=np.int32)
    q = np.array([0, 2, 1], dtype=np.int32)
    # (p o q)(x) = p(q(x))
    pq = compose(p, q)
    for x in range(3):
        assert pq[x] == p[q[x]]
    assert np.array_equal(compose(p, inverse(p)), identity(3))


def test_symmetric_group_orders():
    import math

    for n in range(2, 7):
        G = PermGroup(n, s_n_gens(n), name=f"S{n}")
        assert G.order() == math.factorial(n)


def test_known_order_modes_agree(s5):
    G2 = PermGroup(5, s_n_gens(5), known_order=120)
    assert G2.order() == 120
    els = {tuple(p.tolist()) for p in G2.iterate_elements()}
    assert len(els) == 120


def test_known_order_failure_raises():
    # a transposition alone generates order 2; demanding 120 must fail loudly
    t = np.array([1, 0, 2, 3, 4], dtype=np.int32)
    with pytest.raises(RuntimeError):
        PermGroup(5, [t], known_order=120)


def test_iterate_elements_exact(s5):
    els = {tuple(p.tolist()) for p in s5.iterate_elements()}
    assert els == {tuple(p) for p in itertools.permutations(range(5))}


def test_contains(s5, d8):
    rng = np.random.default_rng(3)
    for _ in range(10):
        assert s5.contains(s5.random_element(rng))
    odd = np.array([1, 0, 2, 3, 4, 5, 6, 7], dtype=np.int32)
    assert not d8.contains(odd)


def test_point_stabilizers(s5, d8):
    for pt in range(5):
        st = s5.point_stabilizer(pt)
        assert st.order() == 24
        assert all(p[pt] == pt for p in st.iterate_elements())
    assert d8.point_stabilizer(0).order() == 2


def test_point_stabilizer_cached(s5):
    assert s5.point_stabilizer(3) is s5.point_stabilizer(3)


def test_orbit_data_roots(d8):
    root, parent, via = d8.orbit_data()
    assert set(root.tolist()) == {0}  # transitive
    u = d8.transporter_to_root(5)
    assert u[5] == 0


def test_min_image_exhaustive_cyclic():
    cyc = np.roll(np.arange(6, dtype=np.int32), -1)
    C6 = PermGroup(6, [cyc], name="C6")
    for n in (1, 2, 3, 4):
        for pts in itertools.combinations(range(6), n):
            mi, perm = C6.min_image(pts)
            assert mi == brute_min(C6, pts)
            assert tuple(sorted(int(perm[x]) for x in pts)) == mi
            assert C6.is_minimal(pts) == (tuple(sorted(pts)) == mi)


def test_min_image_exhaustive_dihedral(d8):
    for n in (2, 3, 4, 5):
        for pts in itertools.combinations(range(8), n):
            mi, perm = d8.min_image(pts)
            assert mi == brute_min(d8, pts)
            assert d8.is_minimal(pts) == (tuple(sorted(pts)) == mi)


def test_min_image_multiset(d8):
    # repeated points must be preserved as a multiset
    mi, perm = d8.min_image([3, 3, 5])
    assert mi == brute_min(d8, [3, 3, 5])
    assert len(mi) == 3


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=9), min_size=10, max_size=10))
def test_multiset_stabilizer_random_labels(vals):
    rot = np.roll(np.arange(10, dtype=np.int32), -1)
    ref = (9 - np.arange(10)).astype(np.int32)
    D10 = PermGroup(10, [rot, ref], name="D10")
    st_grp = D10.multiset_stabilizer(np.asarray(vals))
    brute = brute_stab(D10, vals)
    assert st_grp.order() == len(brute)
    got = {tuple(p.tolist()) for p in st_grp.iterate_elements()}
    assert got == {tuple(p.tolist()) for p in brute}


def test_multiset_stabilizer_s5(s5):
    rng = np.random.default_rng(11)
    for _ in range(15):
        vals = rng.integers(0, 2, size=5)
        st_grp = s5.multiset_stabilizer(vals)
        assert st_grp.order() == len(brute_stab(s5, vals))


def test_multiset_stabilizer_constant(s5):
    st_grp = s5.multiset_stabilizer(np.zeros(5, dtype=int))
    assert st_grp.order() == 120


def test_word_tracking_reconstructs_elements():
    gens = s_n_gens(5)
    G = PermGroup(5, gens, known_order=120, track_words=True, name="S5w")
    vals = np.array([0, 0, 1, 1, 2])
    st_grp = G.multiset_stabilizer(vals)
    assert hasattr(st_grp, "found_words")
    for p, w in zip(st_grp.gens, st_grp.found_words):
        assert np.array_equal(evaluate_word(gens, w), p)
    assert st_grp.order() == len(brute_stab(PermGroup(5, gens), vals))


def test_evaluate_word_on_matched_generators():
    gens = s_n_gens(5)
    w = (1, -2, 1)
    p = evaluate_word(gens, w)
    expected = compose(gens[0], compose(inverse(gens[1]), gens[0]))
    assert np.array_equal(p, expected)


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(min_value=0, max_value=7), min_size=1, max_size=6))
def test_min_image_is_orbit_invariant(pts):
    rot = np.roll(np.arange(8, dtype=np.int32), -1)
    ref = (7 - np.arange(8)).astype(np.int32)
    D8 = PermGroup(8, [rot, ref], name="D8h")
    pts = sorted(pts)
    mi, _ = D8.min_image(pts)
    rng = np.random.default_rng(sum(pts))
    for _ in range(5):
        g = D8.random_element(rng)
        mi2, _ = D8.min_image([int(g[x]) for x in pts])
        assert mi2 == mi
