"""Projective and affine planes over chain rings, with their residue fibrations.

Projective points and lines are unimodular triples over the ring, normalized
so that the first unit coordinate equals 1; a point lies on a line when the
dot product vanishes.  Affine points are plain coordinate pairs and affine
lines are cosets of the free cyclic submodules spanned by normalized
direction pairs.

Reducing coordinates modulo the radical maps both planes onto the ordinary
projective respectively affine plane over the residue field.  The fibers of
that projection (the point and line classes) drive everything downstream:
class distributions live on the factor plane and neighbourhoods carry
induced ordinary planes, which are also built here.

Encodings are positional: a triple (v0, v1, v2) becomes v0 + #R v1 + #R^2 v2
and a pair (x, y) becomes x + #R y.  Point and line indices follow encoding
order, so every construction here is deterministic.
"""

from __future__ import annotations

import os
import pickle

import numpy as np

from .chain_ring import FIELD, ChainRing


class Plane:
    """Shared container for both plane kinds.

    Attributes:
      kind           "projective" or "affine"
      ring           the coordinate ring
      coords         int16 [n_points, 3 or 2] normalized coordinates
      line_coords    int16 [n_lines, 3] for projective planes
      directions     int16 [n_dirs, 2] for affine planes
      line_dir       direction index per line (affine)
      incidence      bool [n_lines, n_points]
      factor         plane over the residue field (self when m == 1)
      point_class    factor point index per point
      line_class     factor line index per line
    """

    def __init__(self, kind, ring):
        self.kind = kind
        self.ring = ring

    # -- shared derived data -------------------------------------------

    def _finish(self):
        inc = self.incidence
        self.n_lines, self.n_points = inc.shape
        self.lines_points = [np.nonzero(inc[i])[0].astype(np.int32) for i in range(self.n_lines)]
        self.point_lines = [np.nonzero(inc[:, j])[0].astype(np.int32) for j in range(self.n_points)]
        self._line_lookup = {self.lines_points[i].tobytes(): i for i in range(self.n_lines)}
        if self.ring.m == 1:
            self.factor = self
            self.point_class = np.arange(self.n_points, dtype=np.int32)
            self.line_class = np.arange(self.n_lines, dtype=np.int32)
        else:
            self._build_factor()
        self.class_members = [np.nonzero(self.point_class == c)[0].astype(np.int32)
                              for c in range(self.factor.n_points)]
        self.line_class_members = [np.nonzero(self.line_class == c)[0].astype(np.int32)
                                   for c in range(self.factor.n_lines)]

    def line_index(self, point_indices):
        key = np.asarray(sorted(point_indices), dtype=np.int32).tobytes()
        idx = self._line_lookup.get(key)
        if idx is None:
            raise ValueError("point set is not a line")
        return idx

    def neighbours(self, i, j):
        return bool(self.point_class[i] == self.point_class[j])

    def determined_line_class(self, i, j):
        """Line class determined by two distinct points.

        For non-neighbours this is the factor join of their classes; two
        distinct neighbours share several lines, which all lie in a single
        line class, and that class is returned.
        """
        ci, cj = int(self.point_class[i]), int(self.point_class[j])
        if ci != cj:
            fac = self.factor
            both = np.nonzero(fac.incidence[:, ci] & fac.incidence[:, cj])[0]
            if len(both) != 1:
                raise AssertionError("factor plane must give a unique joining line")
            return int(both[0])
        if i == j:
            raise ValueError("a single point determines no line class")
        common = np.nonzero(self.incidence[:, i] & self.incidence[:, j])[0]
        classes = {int(self.line_class[m]) for m in common}
        if len(classes) != 1:
            raise AssertionError("joining lines of neighbours must share a class")
        return classes.pop()


def normalize_triples(ring, arr):
    """Scale unimodular rows so the first unit coordinate becomes 1."""
    arr = np.asarray(arr, dtype=np.int64)
    out = np.empty_like(arr)
    is_unit = ring.is_unit
    unit_mask = is_unit[arr]
    if not unit_mask.any(axis=1).all():
        raise ValueError("row without a unit coordinate is not unimodular")
    first_unit = np.argmax(unit_mask, axis=1)
    pivot = arr[np.arange(len(arr)), first_unit]
    scale = ring.inv_table[pivot].astype(np.int64)
    for c in range(arr.shape[1]):
        out[:, c] = ring.mul_table[scale, arr[:, c]]
    return out


def _encode_rows(size, arr):
    arr = np.asarray(arr, dtype=np.int64)
    code = np.zeros(len(arr), dtype=np.int64)
    for c in range(arr.shape[1] - 1, -1, -1):
        code = code * size + arr[:, c]
    return code


class ProjectivePlane(Plane):
    def __init__(self, ring):
        super().__init__("projective", ring)
        size = ring.size
        q = ring.q
        rad = ring.radical
        reps = []
        # first unit in coordinate 0, 1, 2 respectively
        for a in range(size):
            for b in range(size):
                reps.append((1, a, b))
        for z in rad:
            for b in range(size):
                reps.append((int(z), 1, b))
        for z1 in rad:
            for z2 in rad:
                reps.append((int(z1), int(z2), 1))
        coords = np.array(reps, dtype=np.int64)
        order = np.argsort(_encode_rows(size, coords), kind="stable")
        self.coords = coords[order].astype(np.int16)
        codes = _encode_rows(size, self.coords)
        self.point_codes = codes
        self._code_to_index = {int(c): i for i, c in enumerate(codes)}
        lookup = np.full(size**3, -1, dtype=np.int32)
        lookup[codes] = np.arange(len(codes), dtype=np.int32)
        self._code_lookup = lookup
        # lines carry the same normal form
        self.line_coords = self.coords.copy()
        self.incidence = self._incidence_matrix()
        self._finish()

    def _incidence_matrix(self):
        mul, add = self.ring.mul_table, self.ring.add_table
        h = self.line_coords.astype(np.int64)
        v = self.coords.astype(np.int64)
        acc = mul[np.ix_(h[:, 0], v[:, 0])]
        for c in (1, 2):
            acc = add[acc, mul[np.ix_(h[:, c], v[:, c])]]
        return acc == 0

    def point_index(self, triple):
        row = normalize_triples(self.ring, np.asarray([triple]))[0]
        return self._code_to_index[int(_encode_rows(self.ring.size, row[None, :])[0])]

    def point_index_many(self, arr):
        rows = normalize_triples(self.ring, arr)
        codes = _encode_rows(self.ring.size, rows)
        out = self._code_lookup[codes]
        if (out < 0).any():
            raise ValueError("encoding does not name a point")
        return out

    def line_index_from_coords(self, triple):
        return self.point_index(triple)  # identical normal form and ordering

    def _build_factor(self):
        fac = projective_plane(self.ring.residue_field)
        self.factor = fac
        phi = self.ring.phi
        self.point_class = fac.point_index_many(phi[self.coords])
        self.line_class = fac.point_index_many(phi[self.line_coords])


class AffinePlane(Plane):
    def __init__(self, ring):
        super().__init__("affine", ring)
        size = ring.size
        pts = np.array([(x, y) for y in range(size) for x in range(size)], dtype=np.int64)
        order = np.argsort(_encode_rows(size, pts), kind="stable")
        self.coords = pts[order].astype(np.int16)  # encoding order: index == x + size*y
        dirs = [(1, t) for t in range(size)] + [(int(z), 1) for z in ring.radical]
        dirs = np.array(dirs, dtype=np.int64)
        dirs = dirs[np.argsort(_encode_rows(size, dirs), kind="stable")]
        self.directions = dirs.astype(np.int16)
        self._build_lines()
        self._finish()

    def point_index(self, pair):
        x, y = int(pair[0]), int(pair[1])
        return x + self.ring.size * y

    def _build_lines(self):
        ring = self.ring
        size = ring.size
        mul, add = ring.mul_table, ring.add_table
        lines = []
        line_dir = []
        n = size * size
        for d_idx, (d0, d1) in enumerate(self.directions.tolist()):
            span_x = mul[:, d0]
            span_y = mul[:, d1]
            span = set(zip(span_x.tolist(), span_y.tolist()))
            span = sorted(span)
            covered = np.zeros(n, dtype=bool)
            for code in range(n):
                if covered[code]:
                    continue
                x0, y0 = code % size, code // size
                members = sorted(int(add[x0, sx]) + size * int(add[y0, sy]) for sx, sy in span)
                lines.append(np.array(members, dtype=np.int32))
                line_dir.append(d_idx)
                covered[members] = True
        self.line_dir = np.array(line_dir, dtype=np.int32)
        inc = np.zeros((len(lines), n), dtype=bool)
        for i, members in enumerate(lines):
            inc[i, members] = True
        self.incidence = inc

    def parallel(self, i, j):
        return bool(self.line_dir[i] == self.line_dir[j])

    def _build_factor(self):
        fac = affine_plane(self.ring.residue_field)
        self.factor = fac
        phi = self.ring.phi
        q = self.ring.q
        fc = phi[self.coords].astype(np.int64)
        self.point_class = (fc[:, 0] + q * fc[:, 1]).astype(np.int32)
        # line class: image of any two spanning points determines the factor line
        line_class = np.empty(self.n_lines, dtype=np.int32)
        for i in range(self.n_lines):
            pts = self.lines_points[i]
            classes = sorted(set(int(self.point_class[p]) for p in pts))
            fl = np.nonzero(np.all(fac.incidence[:, classes], axis=1))[0]
            if len(fl) != 1:
                raise AssertionError("affine line must project onto a unique factor line")
            line_class[i] = fl[0]
        self.line_class = line_class


_PLANE_CACHE = {}
_DISK_FORMAT = 1


def disk_cache_path(tag):
    """Pickle path under HJARC_CACHE_DIR, or None when caching is off."""
    base = os.environ.get("HJARC_CACHE_DIR")
    if not base:
        return None
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, f"{tag}.v{_DISK_FORMAT}.pickle")


def _load_or_build_plane(kind, ring, ctor):
    path = disk_cache_path(f"plane_{kind}_{ring.descriptor}")
    if path and os.path.exists(path):
        try:
            with open(path, "rb") as fh:
                plane = pickle.load(fh)
            # rebind shared objects to the memoized instances
            plane.ring = ring
            if ring.m != 1:
                factory = projective_plane if kind == "projective" else affine_plane
                plane.factor = factory(ring.residue_field)
            return plane
        except Exception:
            pass
    plane = ctor(ring)
    if path:
        with open(path, "wb") as fh:
            pickle.dump(plane, fh)
    return plane


def projective_plane(ring):
    key = ("projective", ring.descriptor)
    if key not in _PLANE_CACHE:
        _PLANE_CACHE[key] = _load_or_build_plane("projective", ring, ProjectivePlane)
    return _PLANE_CACHE[key]


def affine_plane(ring):
    key = ("affine", ring.descriptor)
    if key not in _PLANE_CACHE:
        _PLANE_CACHE[key] = _load_or_build_plane("affine", ring, AffinePlane)
    return _PLANE_CACHE[key]


# -- embedding and reduction ------------------------------------------------


def affine_embedding(ring):
    """Map affine point indices into the projective plane via (x, y) -> (1, x, y).

    Returns (aff, proj, point_map, infinity_class) where infinity_class is
    the factor line whose preimage is exactly the complement of the image.
    """
    aff = affine_plane(ring)
    proj = projective_plane(ring)
    triples = np.column_stack([
        np.ones(aff.n_points, dtype=np.int64),
        aff.coords[:, 0].astype(np.int64),
        aff.coords[:, 1].astype(np.int64),
    ])
    point_map = proj.point_index_many(triples)
    infinity_class = int(proj.factor.point_index((1, 0, 0)))  # dual normal form
    return aff, proj, point_map, infinity_class


def remove_line_class(proj, factor_line_idx):
    """Delete the point classes on a line class; the rest is an affine plane.

    Returns (aff, to_affine) with to_affine[i] the affine index of projective
    point i, or -1 for deleted points.  The map is induced by completing the
    chosen line form to an invertible matrix, so incidence is preserved.
    """
    ring = proj.ring
    aff = affine_plane(ring)
    h = proj.factor.coords[factor_line_idx].astype(int)
    # lift the factor form to the ring with the same normal shape
    lift = np.array([int(ring.phi_section[c]) for c in h], dtype=np.int64)
    i0 = next(k for k in range(3) if ring.is_unit[lift[k]])
    others = [k for k in range(3) if k != i0]
    to_affine = np.full(proj.n_points, -1, dtype=np.int32)
    mul, add = ring.mul_table, ring.add_table
    v = proj.coords.astype(np.int64)
    s = mul[lift[0], v[:, 0]]
    s = add[s, mul[lift[1], v[:, 1]]]
    s = add[s, mul[lift[2], v[:, 2]]]
    keep = ring.is_unit[s]
    inv = ring.inv_table[s[keep]].astype(np.int64)
    x = mul[inv, v[keep][:, others[0]]]
    y = mul[inv, v[keep][:, others[1]]]
    to_affine[np.nonzero(keep)[0]] = x.astype(np.int64) + ring.size * y.astype(np.int64)
    # deleted points are exactly the classes on the chosen factor line
    on_class = proj.factor.incidence[factor_line_idx][proj.point_class]
    if not np.array_equal(~keep, on_class):
        raise AssertionError("removed points must match the line class preimage")
    return aff, to_affine


# -- induced ordinary planes ------------------------------------------------


def induced_class_plane(plane, class_idx):
    """The neighbourhood of a point class, an affine plane of order q.

    Points are the global indices in the class; lines are the distinct
    traces cut out by plane lines meeting the class in more than one point.
    """
    members = plane.class_members[class_idx]
    member_set = set(int(x) for x in members)
    traces = set()
    for li in np.nonzero(plane.incidence[:, members].any(axis=1))[0]:
        tr = tuple(sorted(int(x) for x in plane.lines_points[li] if int(x) in member_set))
        if len(tr) > 1:
            traces.add(tr)
    return [int(x) for x in members], sorted(traces)


def induced_line_class_plane(proj, factor_line_idx):
    """The neighbourhood of a line class, a projective plane of order q.

    Its points are the member lines plus the point classes on the factor
    line.  Its lines are the segments (line traces on a single class, each
    extended by that class) together with one line holding all classes.
    """
    member_lines = [int(x) for x in proj.line_class_members[factor_line_idx]]
    classes = [int(c) for c in np.nonzero(proj.factor.incidence[factor_line_idx])[0]]
    points = [("line", m) for m in member_lines] + [("class", c) for c in classes]
    seg_to_lines = {}
    for m in member_lines:
        pts = proj.lines_points[m]
        for c in classes:
            seg = tuple(int(x) for x in pts if proj.point_class[x] == c)
            key = (c, seg)
            seg_to_lines.setdefault(key, []).append(m)
    lines = []
    for (c, seg), ms in sorted(seg_to_lines.items()):
        lines.append(tuple(("line", m) for m in sorted(ms)) + (("class", c),))
    lines.append(tuple(("class", c) for c in classes))
    return points, lines
