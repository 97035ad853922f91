"""Feasibility conditions on class distributions of 2-arcs at odd q.

A distribution assigns a multiplicity to every point class (= factor-plane
point).  For 2-arcs over a factor plane of odd order q a handful of exact
conditions cut the search space hard; they are labeled (a) through (f):

  (a) every 2-class determines a line class of multiplicity exactly 2,
  (b) every line class passes through a 0-class,
  (c) u = 2 forces n <= q^2 - q + 2,
  (d) u >= 3 forces n <= q^2 - 2q + 3,
  (e) u <= 2 forces every line class multiplicity <= q+1,
  (f) u <= 2 forces a line class of multiplicity q+1 to carry (q-1)/2 or
      (q+1)/2 2-classes.

Condition (a) depends on the actual points (which line class the pair in a
2-class determines); without points we check the weaker distribution-level
form: some line class through the 2-class has multiplicity exactly 2.

At q = 5 the induced-plane oval analysis forbids specific line-class types
outright; type_is_forbidden encodes that list.  The order on types is the
componentwise order on the sorted vectors: the dominance order would reject
the realizable type (6,0,0,0,0,0), so it cannot be the right reading.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class Distribution:
    """Class multiplicities over a classical factor plane."""

    plane: object  # factor plane, m == 1
    mult: tuple

    def __post_init__(self):
        if len(self.mult) != self.plane.n_points:
            raise ValueError("multiplicity vector length != number of classes")
        if any(m < 0 for m in self.mult):
            raise ValueError("negative multiplicity")

    @property
    def n(self):
        return int(sum(self.mult))

    @property
    def u(self):
        return int(max(self.mult)) if self.mult else 0

    @property
    def q(self):
        return self.plane.ring.size

    def line_multiplicities(self):
        """Per line class: total multiplicity of its incident point classes."""
        mult = np.asarray(self.mult, dtype=np.int64)
        return np.array([int(mult[list(self.plane.lines_points[m])].sum())
                         for m in range(self.plane.n_lines)], dtype=np.int64)


def distribution_of_arc(plane, pts):
    """Class distribution of a point set in a Hjelmslev plane."""
    mult = np.bincount(plane.point_class[list(pts)], minlength=plane.factor.n_points)
    return Distribution(plane.factor, tuple(int(x) for x in mult))


def distribution_violations(d, arc_points=None, plane=None):
    """All violated conditions as (letter, witness index) pairs.

    arc_points together with the ambient Hjelmslev plane sharpens condition
    (a) to the exact determined-line-class form; conditions (b) to (f) only
    need the distribution.  Raises for even q, where the conditions do not
    hold in this form.
    """
    q = d.q
    if q % 2 == 0:
        raise ValueError("conditions require an odd factor-plane order")
    fac = d.plane
    mult = np.asarray(d.mult, dtype=np.int64)
    u = d.u
    n = d.n
    lm = d.line_multiplicities()
    out = []

    two_classes = np.nonzero(mult == 2)[0]
    if arc_points is not None and plane is not None:
        by_class = {}
        for p in arc_points:
            by_class.setdefault(int(plane.point_class[p]), []).append(int(p))
        for c in two_classes:
            pair = by_class.get(int(c), [])
            if len(pair) != 2:
                raise ValueError("arc does not match the distribution")
            lc = plane.determined_line_class(pair[0], pair[1])
            if lm[lc] != 2:
                out.append(("a", int(c)))
    else:
        for c in two_classes:
            if not any(lm[m] == 2 for m in fac.point_lines[c]):
                out.append(("a", int(c)))

    zero = mult == 0
    for m in range(fac.n_lines):
        if not zero[list(fac.lines_points[m])].any():
            out.append(("b", int(m)))

    if u == 2 and n > q * q - q + 2:
        out.append(("c", n))
    if u >= 3 and n > q * q - 2 * q + 3:
        out.append(("d", n))
    if u <= 2:
        for m in np.nonzero(lm > q + 1)[0]:
            out.append(("e", int(m)))
        for m in np.nonzero(lm == q + 1)[0]:
            k = int((mult[list(fac.lines_points[m])] == 2).sum())
            if k not in ((q - 1) // 2, (q + 1) // 2):
                out.append(("f", int(m)))
    return out


def one_point_spectrum(d):
    """a_i = number of line classes through exactly i classes of multiplicity 1."""
    fac = d.plane
    mult = np.asarray(d.mult, dtype=np.int64)
    ones = (mult == 1).astype(np.int64)
    q = d.q
    a = np.zeros(q + 2, dtype=np.int64)
    for m in range(fac.n_lines):
        a[int(ones[list(fac.lines_points[m])].sum())] += 1
    return tuple(int(x) for x in a)


def spectrum_identities_hold(d):
    """The three double-counting identities, valid whenever u(d) <= 1."""
    if d.u > 1:
        raise ValueError("identities are stated for distributions with u <= 1")
    q = d.q
    n = d.n
    a = one_point_spectrum(d)
    s0 = sum(a)
    s1 = sum(i * a[i] for i in range(len(a)))
    s2 = sum(i * (i - 1) // 2 * a[i] for i in range(len(a)))
    return (s0 == q * q + q + 1
            and s1 == (q + 1) * n
            and s2 == n * (n - 1) // 2)


def line_class_type(d, line_idx):
    """Non-increasing multiplicity vector of the classes on one line class."""
    mult = np.asarray(d.mult, dtype=np.int64)
    vals = sorted((int(x) for x in mult[list(d.plane.lines_points[line_idx])]),
                  reverse=True)
    return tuple(vals)


_GEQ_PATTERNS = ((2, 1, 1, 1, 1, 0), (1, 1, 1, 1, 1, 1), (3, 3, 1, 0, 0, 0))
_GT_PATTERNS = ((2, 2, 1, 1, 0, 0), (2, 2, 2, 0, 0, 0))


def _componentwise_geq(t, pat):
    return all(a >= b for a, b in zip(t, pat))


def type_is_forbidden(t, q):
    """Line-class types impossible for 2-arcs; proven only at q = 5."""
    if q != 5:
        raise ValueError("the forbidden-type list is specific to q = 5")
    t = tuple(t)
    if len(t) != q + 1 or any(t[i] < t[i + 1] for i in range(len(t) - 1)):
        raise ValueError("type must be a non-increasing length q+1 vector")
    for pat in _GEQ_PATTERNS:
        if _componentwise_geq(t, pat):
            return True
    for pat in _GT_PATTERNS:
        if _componentwise_geq(t, pat) and t != pat:
            return True
    return False


def forbidden_type_witness(d):
    """First line class whose type is forbidden, or None (q = 5 only)."""
    for m in range(d.plane.n_lines):
        if type_is_forbidden(line_class_type(d, m), d.q):
            return m
    return None


def _no_three_collinear(fac, pts):
    s = set(int(p) for p in pts)
    return all(len(s.intersection(fac.lines_points[m])) <= 2
               for m in range(fac.n_lines))


def is_projective_triangle(fac, pts):
    """Test for the classical triangle-shaped blocking set of size 3(q+1)/2.

    Three sides carrying (q+3)/2 set points each, meeting pairwise in three
    distinct vertices of the set, covering it, and blocking every line.  At
    q = 5 this incidence shape pins the projective isomorphism type.
    """
    q = fac.ring.size
    s = set(int(p) for p in pts)
    if len(s) != 3 * (q + 1) // 2:
        return False
    if any(not s.intersection(fac.lines_points[m]) for m in range(fac.n_lines)):
        return False
    sides = [m for m in range(fac.n_lines)
             if len(s.intersection(fac.lines_points[m])) == (q + 3) // 2]
    if len(sides) != 3:
        return False
    verts = set()
    for i in range(3):
        for j in range(i + 1, 3):
            inter = set(fac.lines_points[sides[i]]) & set(fac.lines_points[sides[j]])
            if len(inter) != 1:
                return False
            verts |= inter
    if len(verts) != 3 or not verts <= s:
        return False
    covered = set()
    for m in sides:
        covered |= s.intersection(fac.lines_points[m])
    return covered == s


def distribution_shape(d):
    """Coarse shape of a distribution at the u <= 2 size cap q^2 - q + 2.

    Returns 'two_class_oval' (six 2-classes forming an oval, internal
    classes 1, external 0), or for all-ones distributions the shape of the
    0-class set: 'line_and_collinear_triple', 'line_and_noncollinear_triple'
    or 'projective_triangle'.  None when no pattern fits.
    """
    fac = d.plane
    q = d.q
    mult = np.asarray(d.mult, dtype=np.int64)
    if d.u == 2:
        oval = set(int(c) for c in np.nonzero(mult == 2)[0])
        if len(oval) != q + 1 or not _no_three_collinear(fac, oval):
            return None
        tangents = [m for m in range(fac.n_lines)
                    if len(oval.intersection(fac.lines_points[m])) == 1]
        through = np.zeros(fac.n_points, dtype=np.int64)
        for m in tangents:
            through[list(fac.lines_points[m])] += 1
        for c in range(fac.n_points):
            if c in oval:
                continue
            # q odd: external points sit on two tangents, internal on none
            if mult[c] != (1 if through[c] == 0 else 0):
                return None
        return "two_class_oval"
    if d.u == 1:
        zero = set(int(c) for c in np.nonzero(mult == 0)[0])
        full = [m for m in range(fac.n_lines)
                if set(fac.lines_points[m]) <= zero]
        if len(full) == 1:
            rest = zero - set(fac.lines_points[full[0]])
            if len(rest) != 3:
                return None
            collinear = any(rest <= set(fac.lines_points[m])
                            for m in range(fac.n_lines))
            return ("line_and_collinear_triple" if collinear
                    else "line_and_noncollinear_triple")
        if not full and is_projective_triangle(fac, zero):
            return "projective_triangle"
    return None


def max_size_by_class_multiplicity(ring):
    """Published maximum 2-arc sizes per forced class multiplicity u.

    Known only for the two chain rings with q = 5.  The u = 1 value for the
    z-ring is the distribution-level bound; the realized projective maximum
    there is smaller by one.
    """
    if ring.descriptor == "z25":
        return {1: 22, 2: 19, 3: 12, 4: 12, 5: 10, 6: 6}
    if ring.descriptor == "s5":
        return {1: 25, 2: 22, 3: 12, 4: 12, 5: 10, 6: 6}
    raise ValueError(f"no published table for {ring.descriptor}")


@lru_cache(maxsize=None)
def size_cap_for_u(q, u):
    """Upper bound on n from conditions (c), (d) and the oval bound."""
    if q % 2 == 0:
        raise ValueError("odd q only")
    if u > q + 1:
        return -1  # a class is a 2-arc in an affine-plane-like structure
    if u >= 3:
        return q * q - 2 * q + 3
    if u == 2:
        return q * q - q + 2
    return q * q + q + 1  # u <= 1: trivial cap, one point per class
