"""Collineation groups acting on the planes.

Six named groups per ring: the projective group pgl3, its extension
pgammal3 by ring automorphisms, their subgroups pgl3_down / pgammal3_down
stabilizing the standard infinity line class, and the affine groups agl2 /
agammal2 acting on the affine plane.  Over a field pgl3_down degenerates to
the line stabilizer, which is the affine group in its projective guise.

Elements are pairs (matrix, sigma): the point action is v -> A sigma(v)
followed by normalization.  Affine group elements use a bordered 3x3 normal
form  [[1, c1, c2], [b1, a11, a12], [b2, a21, a22]]  acting on (1, x, y);
the first output coordinate stays a unit exactly when c1, c2 lie in the
radical, which is the defining constraint of the line-class stabilizer.

Every group is built as a permutation group with its order known in closed
form, so an undersized generating set fails loudly instead of silently
classifying against a smaller group.  Reduction modulo the radical maps
each group onto a group on the factor plane; those factor groups track
generator words, which lets elements found downstairs be lifted upstairs
by re-evaluating the word, the key step when working class by class.
"""

from __future__ import annotations

import os
import pickle

import numpy as np

from .permgroup import PermGroup, evaluate_word
from .plane import (affine_plane, disk_cache_path, normalize_triples,
                    projective_plane)

GROUP_NAMES = ("pgl3", "pgammal3", "pgl3_down", "pgammal3_down", "agl2", "agammal2")

_PROJECTIVE_GROUPS = {"pgl3", "pgammal3", "pgl3_down", "pgammal3_down"}


def _gl_order(q, n):
    v = 1
    for i in range(n):
        v *= q**n - q**i
    return v


def _induced_field_autos(ring):
    """Distinct residue-field permutations induced by the ring automorphisms."""
    phi, section = ring.phi, ring.phi_section
    seen = {}
    for idx, sigma in enumerate(ring.automorphisms):
        bar = tuple(int(phi[sigma[section[x]]]) for x in range(ring.q))
        seen.setdefault(bar, idx)
    return seen


def group_order(ring, name):
    q = ring.q
    gamma = len(ring.automorphisms) if name.startswith(("pgammal", "agammal")) else 1
    if ring.m == 1:
        pgl = _gl_order(q, 3) // (q - 1)
        agl = q * q * _gl_order(q, 2)
        if name in ("pgl3", "pgammal3"):
            return pgl * gamma
        if name in ("pgl3_down", "pgammal3_down"):
            return pgl // (q * q + q + 1) * gamma
        return agl * gamma
    pgl = _gl_order(q, 3) * q**9 // (q * q - q)
    if name in ("pgl3", "pgammal3"):
        return pgl * gamma
    if name in ("pgl3_down", "pgammal3_down"):
        return pgl // (q * q + q + 1) * gamma
    # affine: translations times GL(2, R)
    return q**4 * (_gl_order(q, 2) * q**4) * gamma


def _radical_additive_generators(ring):
    rad = [int(z) for z in ring.radical]
    gens = []
    covered = {0}
    while len(covered) < len(rad):
        g = min(z for z in rad if z not in covered)
        gens.append(g)
        frontier = list(covered)
        new = set(covered)
        while frontier:
            x = frontier.pop()
            y = int(ring.add_table[x, g])
            if y not in new:
                new.add(y)
                frontier.append(y)
        covered = new
    return gens


# -- matrix and automorphism application ------------------------------------


def _mat_apply(ring, matrix, coords):
    """Rows of coords (int arrays over ring encodings) mapped by the matrix."""
    mul, add = ring.mul_table, ring.add_table
    coords = np.asarray(coords, dtype=np.int64)
    n, width = coords.shape
    out = np.empty_like(coords)
    for i in range(width):
        acc = mul[matrix[i][0], coords[:, 0]]
        for j in range(1, width):
            acc = add[acc, mul[matrix[i][j], coords[:, j]]]
        out[:, i] = acc
    return out


def apply_projective(plane, matrix, sigma_idx=0):
    """Permutation of projective point indices for v -> A sigma(v)."""
    ring = plane.ring
    sigma = ring.automorphisms[sigma_idx]
    imgs = _mat_apply(ring, matrix, sigma[plane.coords].astype(np.int64))
    return plane.point_index_many(imgs)


def apply_affine(plane, matrix, sigma_idx=0):
    """Permutation of affine point indices for the bordered action on (1, x, y)."""
    ring = plane.ring
    sigma = ring.automorphisms[sigma_idx]
    pts = sigma[plane.coords].astype(np.int64)
    triples = np.column_stack([np.ones(len(pts), dtype=np.int64), pts[:, 0], pts[:, 1]])
    w = _mat_apply(ring, matrix, triples)
    if not ring.is_unit[w[:, 0]].all():
        raise ValueError("matrix does not stabilize the affine chart")
    inv = ring.inv_table[w[:, 0]].astype(np.int64)
    x = ring.mul_table[inv, w[:, 1]].astype(np.int64)
    y = ring.mul_table[inv, w[:, 2]].astype(np.int64)
    return (x + ring.size * y).astype(np.int32)


def line_permutation(plane, point_perm):
    """Induced permutation of line indices from a point permutation."""
    out = np.empty(plane.n_lines, dtype=np.int32)
    for i in range(plane.n_lines):
        out[i] = plane.line_index(point_perm[plane.lines_points[i]])
    return out


# -- generator matrices -------------------------------------------------------


def _e3(ring, i, j, val):
    m = [[1 if a == b else 0 for b in range(3)] for a in range(3)]
    m[i][j] = int(val)
    return tuple(tuple(row) for row in m)


def _diag3(vals):
    return tuple(tuple(int(vals[a]) if a == b else 0 for b in range(3)) for a in range(3))


def _perm3(perm):
    return tuple(tuple(1 if perm[a] == b else 0 for b in range(3)) for a in range(3))


def _gl3_generator_matrices(ring):
    mats = [_perm3((1, 0, 2)), _perm3((1, 2, 0))]
    for u in ring.unit_generators:
        mats.append(_diag3((int(u), 1, 1)))
    adds = sorted(set([1] + [int(g) for g in ring.additive_generators]))
    for g in adds:
        mats.append(_e3(ring, 0, 1, g))
    return mats


def _stab_generator_matrices(ring, with_c):
    """Bordered generators: GL(2) block, translations, and radical c-row."""
    mats = []
    # 2x2 block gens embedded at rows/cols 1, 2
    block_perm = [[1, 0, 0], [0, 0, 1], [0, 1, 0]]
    mats.append(tuple(tuple(r) for r in block_perm))
    for u in ring.unit_generators:
        mats.append(_diag3((1, int(u), 1)))
        mats.append(_diag3((1, 1, int(u))))
    adds = sorted(set([1] + [int(g) for g in ring.additive_generators]))
    for g in adds:
        mats.append(_e3(ring, 1, 2, g))
        mats.append(_e3(ring, 2, 1, g))
        # translations
        mats.append(_e3(ring, 1, 0, g))
        mats.append(_e3(ring, 2, 0, g))
    if with_c:
        for z in _radical_additive_generators(ring):
            mats.append(_e3(ring, 0, 1, z))
            mats.append(_e3(ring, 0, 2, z))
    return mats


def _kernel_matrices(ring):
    """Matrices generating the collineations that act trivially downstairs."""
    mats = []
    for z in _radical_additive_generators(ring):
        for i in range(3):
            for j in range(3):
                if i != j:
                    mats.append(_e3(ring, i, j, z))
            one_plus = int(ring.add_table[1, z])
            vals = [1, 1, 1]
            vals[i] = one_plus
            mats.append(_diag3(vals))
    return mats


def _affine_kernel_matrices(ring):
    mats = []
    for z in _radical_additive_generators(ring):
        for i, j in ((1, 2), (2, 1), (1, 0), (2, 0)):
            mats.append(_e3(ring, i, j, z))
        one_plus = int(ring.add_table[1, z])
        mats.append(_diag3((1, one_plus, 1)))
        mats.append(_diag3((1, 1, one_plus)))
    return mats


# -- group assembly -----------------------------------------------------------


class GroupSpec:
    """A named collineation group bound to its plane.

    group      the PermGroup on plane point indices
    gens_meta  list of (matrix, sigma_idx) matching group.gens order
    """

    def __init__(self, ring, name):
        if name not in GROUP_NAMES:
            raise ValueError(f"unknown group name {name!r}")
        self.ring = ring
        self.name = name
        self.projective = name in _PROJECTIVE_GROUPS
        self.plane = projective_plane(ring) if self.projective else affine_plane(ring)
        self.order = group_order(ring, name)
        self._assemble()
        self._factor = None

    def _assemble(self):
        ring = self.ring
        gamma = self.name.startswith(("pgammal", "agammal"))
        if self.name in ("pgl3", "pgammal3"):
            mats = _gl3_generator_matrices(ring)
        elif self.name in ("pgl3_down", "pgammal3_down"):
            mats = _stab_generator_matrices(ring, with_c=ring.m == 2)
        else:
            mats = _stab_generator_matrices(ring, with_c=False)
        meta = [(m, 0) for m in mats]
        if gamma:
            ident = _diag3((1, 1, 1))
            for s in range(1, len(ring.automorphisms)):
                meta.append((ident, s))
        apply_fn = apply_projective if self.projective else apply_affine
        perms = [apply_fn(self.plane, m, s) for m, s in meta]
        self.gens_meta = meta
        self.group = PermGroup(self.plane.n_points, perms,
                               known_order=self.order,
                               name=f"{self.name}({ring.descriptor})")

    # -- reduction to the factor plane ---------------------------------

    def factor_spec(self):
        """Image group on the factor plane, with generator words tracked."""
        if self._factor is not None:
            return self._factor
        if self.ring.m == 1:
            raise ValueError("factor reduction needs a proper chain ring")
        plane = self.plane
        fac = plane.factor
        factor_gens = []
        for g in self.group.gens:
            img = np.empty(fac.n_points, dtype=np.int32)
            for c in range(fac.n_points):
                member = int(plane.class_members[c][0])
                img[c] = plane.point_class[g[member]]
            factor_gens.append(img)
        k = len(_induced_field_autos(self.ring)) if self.name.startswith(("pgammal", "agammal")) else 1
        field = self.ring.residue_field
        base = self.name if not self.name.startswith(("pgammal", "agammal")) else {
            "pgammal3": "pgl3", "pgammal3_down": "pgl3_down", "agammal2": "agl2"}[self.name]
        forder = group_order(field, base) * k
        fgroup = PermGroup(fac.n_points, factor_gens, known_order=forder,
                           track_words=True, name=f"{self.name}_bar({self.ring.descriptor})")
        self._factor = _FactorSpec(self, fgroup, forder)
        return self._factor

    def kernel_gens(self):
        """Generators of the subgroup acting trivially on the factor plane."""
        ring = self.ring
        if ring.m == 1:
            return []
        if self.projective:
            mats = _kernel_matrices(ring)
            perms = [apply_projective(self.plane, m) for m in mats]
        else:
            mats = _affine_kernel_matrices(ring)
            perms = [apply_affine(self.plane, m) for m in mats]
        if self.name.startswith(("pgammal", "agammal")):
            induced = _induced_field_autos(ring)
            trivial = tuple(range(ring.q))
            apply_fn = apply_projective if self.projective else apply_affine
            ident = _diag3((1, 1, 1))
            for s in range(1, len(ring.automorphisms)):
                phi, section = ring.phi, ring.phi_section
                sigma = ring.automorphisms[s]
                bar = tuple(int(phi[sigma[section[x]]]) for x in range(ring.q))
                if bar == trivial:
                    perms.append(apply_fn(self.plane, ident, s))
        return perms

    def kernel_order(self):
        if self.ring.m == 1:
            return 1
        return self.order // self.factor_spec().order


class _FactorSpec:
    """Factor-plane image of a GroupSpec; lifts its elements by word."""

    def __init__(self, parent, group, order):
        self.parent = parent
        self.group = group
        self.order = order
        self.plane = parent.plane.factor

    def lift_word(self, word):
        """Upstairs permutation whose reduction is the word's element."""
        if not word:
            from .permgroup import identity

            return identity(self.parent.plane.n_points)
        return evaluate_word(self.parent.group.gens, word)


_GROUP_CACHE = {}


def _load_or_build_group(ring, name):
    path = disk_cache_path(f"group_{name}_{ring.descriptor}")
    if path and os.path.exists(path):
        try:
            with open(path, "rb") as fh:
                spec = pickle.load(fh)
            # rebind shared objects to the memoized instances and drop the
            # factor reduction, which is rebuilt lazily
            spec.ring = ring
            spec.plane = projective_plane(ring) if spec.projective else affine_plane(ring)
            spec._factor = None
            return spec
        except Exception:
            pass
    spec = GroupSpec(ring, name)
    if path:
        with open(path, "wb") as fh:
            pickle.dump(spec, fh)
    return spec


def collineation_group(ring, name):
    key = (ring.descriptor, name)
    if key not in _GROUP_CACHE:
        _GROUP_CACHE[key] = _load_or_build_group(ring, name)
    return _GROUP_CACHE[key]
