"""Canonical forms and exact stabilizer orders for arcs.

Three canonizers, all returning the least image of the arc in a fixed total
order, so equality of canonical forms decides equivalence:

* the frame method for arcs in the affine chart: a frame is an ordered
  point triple whose difference matrix has unit determinant, and the group
  elements are parametrized exactly by (frame image, c-row, automorphism),
  so every candidate image contains the standard triple (0,0), (1,0), (0,1)
  and the number of candidates hitting the minimum IS the stabilizer order;

* the quadruple method for projective arcs: ordered quadruples in general
  position parametrize the projective group the same way;

* the two-level method for arcs without a frame or quadruple: canonize the
  neighbour-class distribution on the factor plane first, then minimize the
  arc under the preimage of the distribution stabilizer.  Complete for every
  arc, slower, and also the canonizer used for distributions themselves.

Frame-ness depends only on neighbour classes and general position only on
factor images, so both are preserved by every collineation; the choice of
method is therefore constant on orbits and mixing methods across calls is
safe as long as arcs are only compared within one group.
"""

from __future__ import annotations

import itertools

import numpy as np

from .collineation import apply_affine, collineation_group
from .permgroup import PermGroup
from .plane import affine_embedding, affine_plane, projective_plane

AFFINE_GROUPS = ("agl2", "agammal2", "pgl3_down", "pgammal3_down")
PROJECTIVE_GROUPS = ("pgl3", "pgammal3")


class CanonResult:
    """Canonical key, point form, exact stabilizer order, and a witness map."""

    __slots__ = ("key", "form", "stab_order", "method", "meta")

    def __init__(self, key, form, stab_order, method, meta=None):
        self.key = key
        self.form = form
        self.stab_order = stab_order
        self.method = method
        self.meta = meta

    def __repr__(self):
        return f"CanonResult({self.form!r}, stab={self.stab_order}, {self.method})"


def _c_rows(ring, with_c):
    if not with_c:
        return [(0, 0)]
    rad = [int(z) for z in ring.radical]
    return [(a, b) for a in rad for b in rad]


def _progressive_min(img):
    """Row indices of the lexicographically least rows of a sorted-row matrix."""
    active = np.arange(len(img))
    for col in range(img.shape[1]):
        vals = img[active, col]
        m = vals.min()
        active = active[vals == m]
    return active


def has_frame(ring, coords):
    """True when some point triple has a unit difference determinant."""
    sub, mul = ring.sub_table, ring.mul_table
    coords = np.asarray(coords, dtype=np.int64)
    for i, j, k in itertools.combinations(range(len(coords)), 3):
        d2 = sub[coords[j], coords[i]]
        d3 = sub[coords[k], coords[i]]
        det = sub[mul[d2[0], d3[1]], mul[d2[1], d3[0]]]
        if ring.is_unit[det]:
            return True
    return False


def canonize_affine_arc(ring, pts, group="agl2"):
    """Least image of an affine point set under the chosen group.

    Uses the frame method; arcs with no frame at all fall back to the
    two-level canonizer (under chart groups the arc is embedded first, so
    fallback keys live in the projective plane, which never collides with
    the flat integer tuples of the frame method).
    """
    if group not in AFFINE_GROUPS:
        raise ValueError(f"not an affine-chart group: {group!r}")
    plane = affine_plane(ring)
    pts = sorted(int(x) for x in pts)
    with_c = group in ("pgl3_down", "pgammal3_down")
    gamma = group in ("agammal2", "pgammal3_down")
    sigmas = range(len(ring.automorphisms)) if gamma else [0]

    best = None
    hits = 0
    best_meta = None
    found_frame = False
    for s in sigmas:
        sigma = ring.automorphisms[s]
        coords = sigma[plane.coords[pts]].astype(np.int64)
        out = _frame_candidates(ring, coords, with_c)
        if out is None:
            continue
        found_frame = True
        for img, meta in out:
            sel = _progressive_min(img)
            row = tuple(int(v) for v in img[sel[0]])
            if best is None or row < best:
                best = row
                hits = len(sel)
                c1, c2, a00, a01, a10, a11, b0, b1 = meta
                w = sel[0]
                best_meta = (s, ((1, int(c1), int(c2)),
                                 (int(b0[w]), int(a00[w]), int(a01[w])),
                                 (int(b1[w]), int(a10[w]), int(a11[w]))))
            elif row == best:
                hits += len(sel)
    if not found_frame:
        return _frameless_affine(ring, pts, group)
    return CanonResult(best, best, hits, "frame", best_meta)


def _frame_candidates(ring, coords, with_c):
    """Sorted image rows for every (frame, c) choice, in coordinate space.

    coords is the n x 2 matrix of (already automorphism-twisted) arc points.
    Returns a list of (img, meta) per c-row, img holding one sorted encoding
    row per frame, meta the matrix pieces indexed the same way.
    """
    size = ring.size
    mul, add, sub = ring.mul_table, ring.add_table, ring.sub_table
    inv, neg = ring.inv_table, ring.neg_table
    X = coords[:, 0].astype(np.int64)
    Y = coords[:, 1].astype(np.int64)
    n = len(coords)
    ii, jj, kk = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    ii, jj, kk = ii.ravel(), jj.ravel(), kk.ravel()
    distinct = (ii != jj) & (ii != kk) & (jj != kk)
    ii, jj, kk = ii[distinct], jj[distinct], kk[distinct]
    d2x, d2y = sub[X[jj], X[ii]], sub[Y[jj], Y[ii]]
    d3x, d3y = sub[X[kk], X[ii]], sub[Y[kk], Y[ii]]
    det = sub[mul[d2x, d3y], mul[d2y, d3x]]
    ok = ring.is_unit[det]
    if not ok.any():
        return None
    ii, jj, kk = ii[ok], jj[ok], kk[ok]
    d2x, d2y, d3x, d3y = d2x[ok], d2y[ok], d3x[ok], d3y[ok]
    dinv = inv[det[ok]].astype(np.int64)
    # inverse of the column matrix [d2 | d3]
    m00, m01 = mul[dinv, d3y], mul[dinv, neg[d3x]]
    m10, m11 = mul[dinv, neg[d2y]], mul[dinv, d2x]

    out = []
    for c1, c2 in _c_rows(ring, with_c):
        s2 = add[1, add[mul[c1, X[jj]], mul[c2, Y[jj]]]]
        s3 = add[1, add[mul[c1, X[kk]], mul[c2, Y[kk]]]]
        a00, a01 = mul[s2, m00], mul[s2, m01]
        a10, a11 = mul[s3, m10], mul[s3, m11]
        b0 = neg[add[mul[a00, X[ii]], mul[a01, Y[ii]]]]
        b1 = neg[add[mul[a10, X[ii]], mul[a11, Y[ii]]]]
        img = np.empty((len(ii), n), dtype=np.int64)
        for t in range(n):
            w0i = inv[add[1, add[mul[c1, X[t]], mul[c2, Y[t]]]]].astype(np.int64)
            ex = mul[w0i, add[b0, add[mul[a00, X[t]], mul[a01, Y[t]]]]]
            ey = mul[w0i, add[b1, add[mul[a10, X[t]], mul[a11, Y[t]]]]]
            img[:, t] = ex + size * ey
        img.sort(axis=1)
        out.append((img, (c1, c2, a00, a01, a10, a11, b0, b1)))
    return out


def _frameless_affine(ring, pts, group):
    if group in ("agl2", "agammal2"):
        spec = collineation_group(ring, group)
        return two_level_canonize(spec, pts)
    _, _, point_map, _ = affine_embedding(ring)
    ppts = [int(point_map[p]) for p in pts]
    spec = collineation_group(ring, group)
    return two_level_canonize(spec, ppts)


# -- projective quadruple method ----------------------------------------------


def _det3(ring, a, b, c):
    mul, sub, add = ring.mul_table, ring.sub_table, ring.add_table
    t1 = mul[a[:, 0], sub[mul[b[:, 1], c[:, 2]], mul[b[:, 2], c[:, 1]]]]
    t2 = mul[a[:, 1], sub[mul[b[:, 2], c[:, 0]], mul[b[:, 0], c[:, 2]]]]
    t3 = mul[a[:, 2], sub[mul[b[:, 0], c[:, 1]], mul[b[:, 1], c[:, 0]]]]
    return add[add[t1, t2], t3]


def _adjugate_batch(ring, cols):
    """Adjugate of the matrices whose columns are cols[0..2], each [m, 3].

    Cyclic cofactor form adj[i][j] = A[j+1][i+1] A[j+2][i+2] -
    A[j+1][i+2] A[j+2][i+1] with indices mod 3, so adj(A) A = det(A) I.
    """
    mul, sub = ring.mul_table, ring.sub_table
    m = len(cols[0])
    adj = np.empty((m, 3, 3), dtype=np.int64)
    for i in range(3):
        p, q = cols[(i + 1) % 3], cols[(i + 2) % 3]
        for j in range(3):
            r0, r1 = (j + 1) % 3, (j + 2) % 3
            adj[:, i, j] = sub[mul[p[:, r0], q[:, r1]], mul[q[:, r0], p[:, r1]]]
    return adj


def _apply_batch(ring, mats, vec):
    """mats [m,3,3] times a fixed length-3 vector, entrywise via tables."""
    mul, add = ring.mul_table, ring.add_table
    out = np.empty((len(mats), 3), dtype=np.int64)
    for i in range(3):
        acc = mul[mats[:, i, 0], vec[0]]
        acc = add[acc, mul[mats[:, i, 1], vec[1]]]
        acc = add[acc, mul[mats[:, i, 2], vec[2]]]
        out[:, i] = acc
    return out


def canonize_projective_arc(ring, pts, group="pgl3", method="auto"):
    """Least image of a projective point set under pgl3 or pgammal3."""
    if group not in PROJECTIVE_GROUPS:
        raise ValueError(f"not a projective group: {group!r}")
    pts = sorted(int(x) for x in pts)
    if method == "two_level" or len(pts) < 4:
        return two_level_canonize(collineation_group(ring, group), pts)
    res = _quadruple_canonize(ring, pts, group)
    if res is None:
        if method == "quadruple":
            raise ValueError("arc has no quadruple in general position")
        return two_level_canonize(collineation_group(ring, group), pts)
    return res


def _quadruple_canonize(ring, pts, group):
    plane = projective_plane(ring)
    mul = ring.mul_table
    n = len(pts)
    sigmas = range(len(ring.automorphisms)) if group == "pgammal3" else [0]
    best = None
    hits = 0
    best_meta = None
    found = False
    for s in sigmas:
        sigma = ring.automorphisms[s]
        v = plane.coords[plane.point_index_many(sigma[plane.coords[pts]])].astype(np.int64)
        trip = np.array(list(itertools.permutations(range(n), 3)), dtype=np.int64)
        a, b, c = v[trip[:, 0]], v[trip[:, 1]], v[trip[:, 2]]
        det = _det3(ring, a, b, c)
        okt = ring.is_unit[det]
        if not okt.any():
            continue
        trip, a, b, c = trip[okt], a[okt], b[okt], c[okt]
        dinv = ring.inv_table[det[okt]].astype(np.int64)
        minv = mul[dinv[:, None, None], _adjugate_batch(ring, (a, b, c))]
        for l in range(n):
            free = np.nonzero((trip[:, 0] != l) & (trip[:, 1] != l) & (trip[:, 2] != l))[0]
            if not len(free):
                continue
            lam = _apply_batch(ring, minv[free], v[l])
            okl = ring.is_unit[lam].all(axis=1)
            if not okl.any():
                continue
            found = True
            sel = free[okl]
            lam = lam[okl]
            # the map is the projective inverse of [lam1 a | lam2 b | lam3 c]
            g = _adjugate_batch(ring, (mul[lam[:, 0][:, None], a[sel]],
                                       mul[lam[:, 1][:, None], b[sel]],
                                       mul[lam[:, 2][:, None], c[sel]]))
            img = np.empty((len(sel), n), dtype=np.int64)
            for t in range(n):
                img[:, t] = plane.point_index_many(_apply_batch(ring, g, v[t]))
            img.sort(axis=1)
            selmin = _progressive_min(img)
            row = tuple(int(x) for x in img[selmin[0]])
            if best is None or row < best:
                best = row
                hits = len(selmin)
                w = selmin[0]
                best_meta = (s, tuple(tuple(int(g[w, i, j]) for j in range(3))
                                      for i in range(3)))
            elif row == best:
                hits += len(selmin)
    if not found:
        return None
    return CanonResult(best, best, hits, "quadruple", best_meta)


# -- two-level method ----------------------------------------------------------


_LIFT_CACHE = {}


def distribution_stab_group(spec, dist_tuple):
    """Full preimage of the stabilizer of a class distribution (cached).

    Generated by the kernel of the factor map together with lifts of the
    downstairs stabilizer generators; the order is forced, so the build
    fails loudly if a lift were wrong.
    """
    key = (spec.ring.descriptor, spec.name, tuple(int(x) for x in dist_tuple))
    got = _LIFT_CACHE.get(key)
    if got is not None:
        return got
    fspec = spec.factor_spec()
    stab_bar = fspec.group.multiset_stabilizer(np.asarray(dist_tuple))
    gens = list(spec.kernel_gens())
    for g in stab_bar.gens:
        gens.append(fspec.lift_word(fspec.group.express(g)))
    order = spec.kernel_order() * stab_bar.order()
    H = PermGroup(spec.plane.n_points, gens, known_order=order,
                  name=f"lift-stab:{spec.name}:{spec.ring.descriptor}")
    _LIFT_CACHE[key] = (H, stab_bar)
    return H, stab_bar


def canonize_distribution(spec, dist):
    """Least relabeling of a class distribution under the factor group.

    Returns (canonical tuple w, factor permutation g) with w[g[i]] = dist[i].
    """
    fspec = spec.factor_spec()
    return fspec.group.min_labeling(np.asarray(dist))


def two_level_canonize(spec, pts):
    """Distribution-then-fiber canonical form, complete for every arc."""
    plane = spec.plane
    pts = sorted(int(x) for x in pts)
    if spec.ring.m == 1:
        form, _ = spec.group.min_image(pts)
        stab = spec.group.set_stabilizer_order(form)
        return CanonResult(form, form, stab, "min_image")
    dist = np.bincount(plane.point_class[pts], minlength=plane.factor.n_points)
    fspec = spec.factor_spec()
    w, gbar = fspec.group.min_labeling(dist)
    gup = fspec.lift_word(fspec.group.express(gbar))
    moved = sorted(int(gup[p]) for p in pts)
    H, _ = distribution_stab_group(spec, w)
    form, _ = H.min_image(moved)
    stab = H.set_stabilizer_order(form)
    return CanonResult((tuple(int(x) for x in w), form), form, stab, "two_level")


def _indicator(n, pts):
    v = np.zeros(n, dtype=np.int8)
    v[list(pts)] = 1
    return v


# -- chart refinement ----------------------------------------------------------


def agl_refinement(ring, pts, gamma=False):
    """Split a chart-stabilizer class of affine arcs into plain affine classes.

    The bordered maps with identity linear part and c-row ranging over
    radical pairs form a transversal of the affine group inside the chart
    stabilizer, so canonizing every c-shift reaches each affine class inside
    the chart class at least once.  Returns one CanonResult per class.
    """
    plane = affine_plane(ring)
    group = "agammal2" if gamma else "agl2"
    forms = {}
    for c1, c2 in _c_rows(ring, True):
        mat = ((1, int(c1), int(c2)), (0, 1, 0), (0, 0, 1))
        perm = apply_affine(plane, mat)
        moved = sorted(int(perm[p]) for p in pts)
        res = canonize_affine_arc(ring, moved, group=group)
        forms.setdefault(res.key, res)
    return [forms[k] for k in sorted(forms, key=repr)]
