"""Distribution feasibility conditions, spectrum identities, type calculus."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjarc.chain_ring import parse_ring_descriptor
from hjarc.constraints import (
    Distribution,
    distribution_of_arc,
    distribution_violations,
    forbidden_type_witness,
    line_class_type,
    max_size_by_class_multiplicity,
    one_point_spectrum,
    size_cap_for_u,
    spectrum_identities_hold,
    type_is_forbidden,
)
from hjarc.plane import affine_plane, projective_plane


def factor_pg(q_ring_desc):
    ring = parse_ring_descriptor(q_ring_desc)
    return projective_plane(ring)


@pytest.fixture(scope="module")
def pg25():
    return factor_pg("f5")


def conic_distribution(fac):
    """Six 2-classes on a conic, 1-classes inside, 0-classes outside."""
    ring = fac.ring
    q = ring.size
    pts = []
    for t in range(q):
        pts.append(fac.point_index((1, t, ring.mul(t, t))))
    pts.append(fac.point_index((0, 0, 1)))
    conic = set(int(p) for p in pts)
    # tangents: lines meeting the conic exactly once
    tangents = [m for m in range(fac.n_lines)
                if len(conic & set(int(x) for x in fac.lines_points[m])) == 1]
    on_tangents = np.zeros(fac.n_points, dtype=np.int64)
    for m in tangents:
        for p in fac.lines_points[m]:
            on_tangents[p] += 1
    mult = []
    for p in range(fac.n_points):
        if p in conic:
            mult.append(2)
        elif on_tangents[p] == 0:
            mult.append(1)  # internal point
        else:
            mult.append(0)  # external point lies on two tangents
    return Distribution(fac, tuple(mult)), conic


def test_conic_distribution_is_clean(pg25):
    d, conic = conic_distribution(pg25)
    assert d.n == 22 and d.u == 2
    assert sum(1 for m in d.mult if m == 1) == 10
    assert sum(1 for m in d.mult if m == 0) == 15
    assert distribution_violations(d) == []
    assert forbidden_type_witness(d) is None
    # secant type sits exactly on the allowed boundary
    types = {line_class_type(d, m) for m in range(pg25.n_lines)}
    assert (2, 2, 1, 1, 0, 0) in types
    assert (2, 0, 0, 0, 0, 0) in types
    assert (1, 1, 1, 0, 0, 0) in types


def test_all_ones_violates_blocking_condition(pg25):
    d = Distribution(pg25, tuple([1] * 31))
    codes = {c for c, _ in distribution_violations(d)}
    assert "b" in codes


def test_u2_size_bound_is_sharp(pg25):
    d, _ = conic_distribution(pg25)
    assert d.n == 22 == 5 * 5 - 5 + 2
    # pushing one 0-class to 1 breaks (c)
    mult = list(d.mult)
    mult[mult.index(0)] = 1
    d2 = Distribution(pg25, tuple(mult))
    codes = {c for c, _ in distribution_violations(d2)}
    assert "c" in codes


def test_even_q_rejected():
    fac = factor_pg("f2")
    d = Distribution(fac, tuple([0] * fac.n_points))
    with pytest.raises(ValueError):
        distribution_violations(d)


def test_empty_spectrum(pg25):
    d = Distribution(pg25, tuple([0] * 31))
    a = one_point_spectrum(d)
    assert a[0] == 31 and sum(a) == 31 and all(x == 0 for x in a[1:])


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_spectrum_identities_on_u1_distributions(data):
    fac = factor_pg("f5")
    k = data.draw(st.integers(0, 31))
    chosen = data.draw(st.permutations(range(31)))[:k]
    mult = [0] * 31
    for c in chosen:
        mult[c] = 1
    d = Distribution(fac, tuple(mult))
    assert spectrum_identities_hold(d)


def test_spectrum_identities_reject_u2(pg25):
    d, _ = conic_distribution(pg25)
    with pytest.raises(ValueError):
        spectrum_identities_hold(d)


def test_symbolic_spectrum_kernel():
    sympy = pytest.importorskip("sympy")
    a3, a4, a5, n = sympy.symbols("a3 a4 a5 n")
    sol = sympy.solve(
        [a3 + a4 + a5 - 31,
         3 * a3 + 4 * a4 + 5 * a5 - 6 * n,
         3 * a3 + 6 * a4 + 10 * a5 - n * (n - 1) / 2],
        [a3, a4, a5], dict=True)
    assert len(sol) == 1
    a4_poly = sympy.expand(sol[0][a4])
    assert a4_poly == sympy.expand(-n**2 + 43 * n - 465)
    # negative for every integer n, so a0=a1=a2=a6=0 is impossible
    disc = sympy.expand(-(n - sympy.Rational(43, 2)) ** 2 - sympy.Rational(11, 4))
    assert sympy.expand(a4_poly - disc) == 0


FORBIDDEN_EXAMPLES = [
    ((2, 2, 2, 0, 0, 0), False),
    ((2, 2, 1, 1, 0, 0), False),
    ((2, 2, 2, 1, 0, 0), True),
    ((2, 2, 1, 1, 1, 0), True),
    ((1, 1, 1, 1, 1, 1), True),
    ((2, 1, 1, 1, 1, 0), True),
    ((3, 3, 1, 0, 0, 0), True),
    ((3, 2, 2, 0, 0, 0), True),
    ((3, 3, 0, 0, 0, 0), False),
    ((4, 4, 0, 0, 0, 0), False),
    ((5, 5, 0, 0, 0, 0), False),
    ((6, 0, 0, 0, 0, 0), False),
    ((0, 0, 0, 0, 0, 0), False),
]


@pytest.mark.parametrize("t,expect", FORBIDDEN_EXAMPLES)
def test_forbidden_type_table(t, expect):
    assert type_is_forbidden(t, 5) is expect


def test_forbidden_type_guards():
    with pytest.raises(ValueError):
        type_is_forbidden((1, 1, 1, 0), 3)
    with pytest.raises(ValueError):
        type_is_forbidden((1, 2, 0, 0, 0, 0), 5)  # not sorted


def test_published_max_sizes():
    z25 = parse_ring_descriptor("z25")
    s5 = parse_ring_descriptor("s5")
    assert max_size_by_class_multiplicity(z25) == {1: 22, 2: 19, 3: 12, 4: 12, 5: 10, 6: 6}
    assert max_size_by_class_multiplicity(s5) == {1: 25, 2: 22, 3: 12, 4: 12, 5: 10, 6: 6}
    with pytest.raises(ValueError):
        max_size_by_class_multiplicity(parse_ring_descriptor("z9"))


def test_size_caps():
    assert size_cap_for_u(5, 2) == 22
    assert size_cap_for_u(5, 3) == 18
    assert size_cap_for_u(5, 1) == 31
    assert size_cap_for_u(3, 2) == 8
    with pytest.raises(ValueError):
        size_cap_for_u(4, 2)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_blocking_condition_monotone_under_removal(data):
    fac = factor_pg("f3")
    mult = [data.draw(st.integers(0, 2)) for _ in range(fac.n_points)]
    d = Distribution(fac, tuple(mult))
    if any(c == "b" for c, _ in distribution_violations(d)):
        return
    smaller = [data.draw(st.integers(0, m)) for m in mult]
    d2 = Distribution(fac, tuple(smaller))
    assert not any(c == "b" for c, _ in distribution_violations(d2))


def test_exact_condition_a_with_points():
    # two neighbour points: their determined line class must have mult 2
    ring = parse_ring_descriptor("z9")
    plane = projective_plane(ring)
    cls = plane.class_members[plane.point_class[0]]
    p1, p2 = int(cls[0]), int(cls[1])
    d = distribution_of_arc(plane, [p1, p2])
    assert d.u == 2 and d.n == 2
    assert distribution_violations(d, arc_points=[p1, p2], plane=plane) == []
    # a third point on the determined line class breaks (a)
    lc = plane.determined_line_class(p1, p2)
    line_pts = set()
    for ln in plane.line_class_members[lc]:
        line_pts |= set(int(x) for x in plane.lines_points[ln])
    extra = sorted(line_pts - {p1, p2})[0]
    arc = [p1, p2, extra]
    d3 = distribution_of_arc(plane, arc)
    vio = distribution_violations(d3, arc_points=arc, plane=plane)
    assert ("a", int(plane.point_class[p1])) in vio


def test_line_type_sums_match_line_multiplicity(pg25):
    d, _ = conic_distribution(pg25)
    lm = d.line_multiplicities()
    for m in range(pg25.n_lines):
        assert sum(line_class_type(d, m)) == lm[m]


def test_distribution_of_arc_roundtrip():
    ring = parse_ring_descriptor("z25")
    plane = affine_plane(ring)
    pts = [0, 1, 30, 77, 200]
    d = distribution_of_arc(plane, pts)
    assert d.n == len(pts)
    assert d.plane is plane.factor
