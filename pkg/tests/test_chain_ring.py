"""Ring layer: axioms, residue projection, automorphisms, encodings."""

import numpy as np
import pytest

from hjarc.chain_ring import (
    FIELD,
    GALOIS_RING,
    INTEGER_RESIDUE,
    TRUNCATED_POLY,
    ChainRing,
    construct_ring,
    parse_ring_descriptor,
)

RING_IDS = ["z4", "z9", "z25", "s2", "s3", "s5", "gr16", "f2", "f3", "f4", "f5"]


@pytest.fixture(params=RING_IDS)
def ring(request):
    return parse_ring_descriptor(request.param)


def test_sizes_and_unit_counts(ring):
    q, m = ring.q, ring.m
    assert ring.size == q**m
    assert len(ring.units) == (q - 1 if m == 1 else q * q - q)
    assert len(ring.radical) == (1 if m == 1 else q)
    assert 0 in ring.radical and not ring.is_unit[0]
    assert ring.is_unit[1]


def test_ring_axioms_exhaustive(ring):
    n = ring.size
    add, mul = ring.add_table.astype(np.int64), ring.mul_table.astype(np.int64)
    a = np.arange(n)
    # abelian group under addition
    assert np.array_equal(add, add.T)
    assert np.array_equal(add[:, 0], a)
    assert np.array_equal(add[a, ring.neg_table[a]], np.zeros(n, dtype=np.int64))
    # commutative monoid under multiplication with identity 1
    assert np.array_equal(mul, mul.T)
    assert np.array_equal(mul[:, 1], a)
    # associativity and distributivity over all triples
    i = a[:, None, None]
    j = a[None, :, None]
    k = a[None, None, :]
    assert np.array_equal(add[add[i, j], k], add[i, add[j, k]])
    assert np.array_equal(mul[mul[i, j], k], mul[i, mul[j, k]])
    assert np.array_equal(mul[i, add[j, k]], add[mul[i, j], mul[i, k]])


def test_units_and_inverses(ring):
    for u in ring.units:
        v = ring.inv_table[u]
        assert v >= 0 and ring.mul_table[u, v] == 1
    for z in ring.radical:
        assert ring.inv_table[z] == -1
        with pytest.raises(ValueError):
            ring.inv(int(z))


def test_radical_is_nilpotent_ideal(ring):
    rad = set(int(x) for x in ring.radical)
    for x in rad:
        for y in rad:
            assert int(ring.mul_table[x, y]) == 0  # rad^2 = 0 at length <= 2
        for r in range(ring.size):
            assert int(ring.mul_table[x, r]) in rad


def test_one_plus_radical_inverse(ring):
    if ring.m != 2:
        pytest.skip("needs a proper chain ring")
    for c in ring.radical:
        u = ring.add(1, int(c))
        v = ring.sub(1, int(c))
        assert ring.mul(u, v) == 1
        assert ring.inv(u) == v


def test_phi_is_surjective_homomorphism(ring):
    F = ring.residue_field
    phi = ring.phi
    assert set(phi.tolist()) == set(range(ring.q))
    n = ring.size
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    assert np.array_equal(phi[ring.add_table[i, j]], F.add_table[phi[i], phi[j]])
    assert np.array_equal(phi[ring.mul_table[i, j]], F.mul_table[phi[i], phi[j]])
    # kernel = radical
    assert np.array_equal(np.where(phi == 0)[0], ring.radical)
    # units are exactly the elements with nonzero residue
    assert np.array_equal(ring.is_unit, phi != 0)


def test_phi_section(ring):
    for x in range(ring.q):
        a = int(ring.phi_section[x])
        assert ring.phi[a] == x
        # smallest preimage
        assert all(ring.phi[b] != x for b in range(a))


def test_generators_generate(ring):
    covered = {0}
    for g in ring.additive_generators:
        new = set(covered)
        frontier = list(covered)
        while frontier:
            x = frontier.pop()
            y = int(ring.add_table[x, g])
            if y not in new:
                new.add(y)
                frontier.append(y)
        covered = new
    assert len(covered) == ring.size

    covered = {1}
    for g in ring.unit_generators:
        new = set(covered)
        frontier = list(covered)
        while frontier:
            x = frontier.pop()
            y = int(ring.mul_table[x, g])
            if y not in new:
                new.add(y)
                frontier.append(y)
        covered = new
    assert len(covered) == len(ring.units)


AUTO_COUNTS = {
    "z4": 1, "z9": 1, "z25": 1,
    "s2": 1, "s3": 2, "s5": 4,
    "gr16": 2,
    "f2": 1, "f3": 1, "f4": 2, "f5": 1,
}


def test_automorphism_counts(ring):
    assert len(ring.automorphisms) == AUTO_COUNTS[ring.descriptor]


def test_automorphisms_are_ring_maps(ring):
    n = ring.size
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    seen = set()
    for sigma in ring.automorphisms:
        assert sigma[0] == 0 and sigma[1] == 1
        assert np.array_equal(sigma[ring.add_table[i, j]], ring.add_table[sigma[i], sigma[j]])
        assert np.array_equal(sigma[ring.mul_table[i, j]], ring.mul_table[sigma[i], sigma[j]])
        seen.add(tuple(sigma.tolist()))
    assert len(seen) == len(ring.automorphisms)
    # identity comes first
    assert np.array_equal(ring.automorphisms[0], np.arange(n))


def test_specific_arithmetic():
    z25 = parse_ring_descriptor("z25")
    assert z25.mul(7, 18) == 1
    assert z25.add(20, 6) == 1
    s5 = parse_ring_descriptor("s5")
    # the nilpotent generator squares to zero; it is encoded as q = 5
    assert s5.mul(5, 5) == 0
    assert s5.phi[5] == 0
    f4 = parse_ring_descriptor("f4")
    # X^2 = X + 1 modulo the lexicographically least irreducible X^2 + X + 1
    assert f4.mul(2, 2) == 3
    gr16 = parse_ring_descriptor("gr16")
    # same modulus lifted coefficientwise, so X^2 = -X - 1 = 3X + 3
    assert gr16.mul(4, 4) == 3 * 4 + 3


def test_galois_ring_structure():
    gr16 = parse_ring_descriptor("gr16")
    # radical is 2R: doubles of everything, 4 elements
    doubles = sorted({int(gr16.mul_table[2, a]) for a in range(16)})
    assert doubles == sorted(int(x) for x in gr16.radical)
    assert gr16.residue_field.descriptor == "f4"
    # characteristic 4: 1+1+1+1 = 0 but 1+1 != 0
    two = gr16.add(1, 1)
    assert two != 0 and gr16.add(two, two) == 0


def test_truncated_poly_structure():
    s5 = parse_ring_descriptor("s5")
    # characteristic 5
    acc = 0
    for _ in range(5):
        acc = s5.add(acc, 1)
    assert acc == 0
    # radical = multiples of the nilpotent generator = {0,5,10,15,20}
    assert sorted(int(x) for x in s5.radical) == [0, 5, 10, 15, 20]


def test_construct_determinism():
    a = ChainRing(GALOIS_RING, 2, 2)
    b = ChainRing(GALOIS_RING, 2, 2)
    assert np.array_equal(a.add_table, b.add_table)
    assert np.array_equal(a.mul_table, b.mul_table)
    assert all(np.array_equal(x, y) for x, y in zip(a.automorphisms, b.automorphisms))
    c = ChainRing(TRUNCATED_POLY, 5, 1)
    d = ChainRing(TRUNCATED_POLY, 5, 1)
    assert np.array_equal(c.mul_table, d.mul_table)


def test_descriptor_round_trip():
    for text in RING_IDS:
        ring = parse_ring_descriptor(text)
        assert ring.descriptor == text
        assert parse_ring_descriptor(ring.descriptor) is ring  # cached


def test_descriptor_rejects_garbage():
    for bad in ("z6", "z8", "gr9x", "f6", "s0", "w25", ""):
        with pytest.raises(ValueError):
            parse_ring_descriptor(bad)


def test_kind_validation():
    with pytest.raises(ValueError):
        ChainRing(INTEGER_RESIDUE, 4, 1)
    with pytest.raises(ValueError):
        ChainRing(INTEGER_RESIDUE, 5, 2)
    with pytest.raises(ValueError):
        ChainRing("bogus", 5, 1)
