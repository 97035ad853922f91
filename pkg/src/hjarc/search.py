"""Search and classification of (n, w)-arcs in Hjelmslev planes.

Two independent pipelines produce isomorph-free arc lists and must agree:

* factor lift: orderly generation of point class distributions on the factor
  plane, then pointwise orderly lifting of each distribution under the
  preimage of its stabilizer;

* affine branch and bound: regimes split by the maximal class multiplicity u.
  Arcs with a repeated class are classified from canonical pair or block
  cores; arcs hitting every class at most once are generated from canonical
  prefix seeds with swap cuts, an extendable-class bound and isomorphism
  pruning, then completed to the projective plane through the line class at
  infinity.

A brute-force subset classifier over tiny planes is the ground truth that
both pipelines are validated against.

Arcs are handled as point sets.  For w = 2 a repeated point would put three
elements (with multiplicity) on every line through it, so nontrivial arcs
never repeat points.
"""

from __future__ import annotations

import itertools
import json
import multiprocessing
import os
from dataclasses import dataclass, field

import numpy as np

from .canonical import (
    canonize_affine_arc,
    canonize_projective_arc,
    distribution_stab_group,
    has_frame,
    two_level_canonize,
)
from .chain_ring import parse_ring_descriptor
from .collineation import collineation_group
from .constraints import (
    Distribution,
    distribution_of_arc,
    distribution_violations,
    forbidden_type_witness,
    size_cap_for_u,
    spectrum_identities_hold,
)
from .permgroup import PermGroup, compose, inverse
from .plane import affine_embedding, affine_plane, projective_plane

AFFINE_RESULT_GROUPS = ("agl2", "pgl3_down", "pgl3")
PROJECTIVE_RESULT_GROUPS = ("pgl3",)


# -- arcs and verification ----------------------------------------------------


class Arc:
    """A point set with cached line and class counters.

    points are kept as a sorted tuple of point indices; per_line and
    per_class hold the multiplicities induced on lines and on factor point
    classes.  The w-cap (no line carries more than w points) is what makes
    the set an arc; validity is reported, not enforced, so partial search
    states and deliberately broken inputs can use the same container.
    """

    __slots__ = ("plane", "points", "w", "per_line", "per_class")

    def __init__(self, plane, points, w=2):
        self.plane = plane
        self.points = tuple(sorted(int(p) for p in points))
        self.w = int(w)
        self.per_line = np.zeros(plane.n_lines, dtype=np.int32)
        self.per_class = np.zeros(plane.factor.n_points, dtype=np.int32)
        for p in self.points:
            self.per_line[plane.point_lines[p]] += 1
            self.per_class[plane.point_class[p]] += 1

    @property
    def n(self):
        return len(self.points)

    @property
    def u(self):
        return int(self.per_class.max()) if self.n else 0

    def counters_consistent(self):
        other = Arc(self.plane, self.points, self.w)
        return (np.array_equal(self.per_line, other.per_line)
                and np.array_equal(self.per_class, other.per_class))

    def line_violations(self):
        bad = np.nonzero(self.per_line > self.w)[0]
        return [(int(m), int(self.per_line[m])) for m in bad]

    def valid(self):
        return not self.line_violations()

    def distribution(self):
        return distribution_of_arc(self.plane, self.points)


def verify_arc(arc, points=None, w=2):
    """Validity report for an arc (or for (plane, points, w))."""
    if not isinstance(arc, Arc):
        arc = Arc(arc, points, w)
    dist = arc.distribution()
    report = {
        "n": arc.n,
        "w": arc.w,
        "u": arc.u,
        "valid": arc.valid(),
        "line_violations": arc.line_violations(),
        "class_distribution": tuple(int(x) for x in arc.per_class),
        "line_class_multiplicities": tuple(int(x) for x in dist.line_multiplicities()),
    }
    return report


# -- classification results ----------------------------------------------------


@dataclass
class GroupSummary:
    """Arc classes and stabilizer histogram under one group."""

    group: str
    count: int
    histogram: dict
    arcs: list | None = None  # [(points tuple, stabilizer order)] or None if dropped

    def __post_init__(self):
        if sum(self.histogram.values()) != self.count:
            raise ValueError("histogram does not add up to the class count")
        if self.arcs is not None and len(self.arcs) != self.count:
            raise ValueError("arc list does not match the class count")


@dataclass
class ClassificationResult:
    ring: str
    space: str
    n: int
    w: int
    by_group: dict
    stats: dict = field(default_factory=dict)

    def count(self, group):
        return self.by_group[group].count

    def histogram(self, group):
        return dict(self.by_group[group].histogram)


def _summary_from_arcs(group, arcs, store=True):
    hist = {}
    for _, stab in arcs:
        hist[stab] = hist.get(stab, 0) + 1
    arcs_sorted = sorted(arcs)
    return GroupSummary(group, len(arcs), hist, arcs_sorted if store else None)


# -- brute force oracle ---------------------------------------------------------


def _all_arcs_of_size(plane, n, w):
    """Every w-valid n-subset, by ascending depth first search."""
    out = []
    line_mult = np.zeros(plane.n_lines, dtype=np.int32)
    cur = []

    def rec(start):
        if len(cur) == n:
            out.append(tuple(cur))
            return
        for p in range(start, plane.n_points):
            rows = plane.point_lines[p]
            if line_mult[rows].max(initial=0) >= w:
                continue
            line_mult[rows] += 1
            cur.append(p)
            rec(p + 1)
            cur.pop()
            line_mult[rows] -= 1

    rec(0)
    return out


def _orbit_of_set(gens, pts):
    start = tuple(sorted(int(x) for x in pts))
    seen = {start}
    stack = [start]
    while stack:
        cur = stack.pop()
        for g in gens:
            img = tuple(sorted(int(g[p]) for p in cur))
            if img not in seen:
                seen.add(img)
                stack.append(img)
    return seen


def brute_force_classify(plane, n, w=2, groups=None, store_arcs=True):
    """Exhaustive subset enumeration plus orbit partition (tiny planes only)."""
    if plane.n_points > 40:
        raise ValueError("brute force is reserved for planes with at most 40 points")
    ring = plane.ring
    space = plane.kind
    if groups is None:
        groups = AFFINE_RESULT_GROUPS if space == "affine" else PROJECTIVE_RESULT_GROUPS
    arcs = _all_arcs_of_size(plane, n, w)
    point_map = None
    if space == "affine":
        _, _, point_map, _ = affine_embedding(ring)
    by_group = {}
    for name in groups:
        spec = collineation_group(ring, name)
        if spec.plane.kind == space:
            sets = arcs
        else:
            sets = [tuple(sorted(int(point_map[p]) for p in a)) for a in arcs]
        gens = spec.group.gens
        order = spec.group.order()
        listed = set(sets)
        seen = set()
        reps = []
        for a in sorted(sets):
            if a in seen:
                continue
            orbit = _orbit_of_set(gens, a)
            seen.update(orbit & listed)
            stab, rem = divmod(order, len(orbit))
            if rem:
                raise AssertionError("orbit size must divide the group order")
            reps.append((min(orbit & listed), stab))
        by_group[name] = _summary_from_arcs(name, reps, store=store_arcs)
    return ClassificationResult(ring.descriptor, space, n, w,
                                by_group, {"total_labeled": len(arcs)})


# -- canonical augmentation layers ----------------------------------------------


def _canonizer(ring, space, group):
    if space == "affine":
        return lambda pts: canonize_affine_arc(ring, pts, group)
    return lambda pts: canonize_projective_arc(ring, pts, group)


def classify_by_augmentation(ring, space, n, w=2, group=None, u_cap=None,
                             two_class_cap=None, keep_layers=False):
    """All arc classes of size n by canonical augmentation, layer by layer.

    Every canonical (k+1)-arc contains a k-subarc whose canonical form sits
    in the previous layer, so extending every representative by every
    admissible point and deduplicating on canonical keys is exhaustive.
    Practical for small planes and for short, heavily capped searches.
    """
    if group is None:
        group = "agl2" if space == "affine" else "pgl3"
    plane = affine_plane(ring) if space == "affine" else projective_plane(ring)
    canon = _canonizer(ring, space, group)
    spec = collineation_group(ring, group)
    layer = {(): ((), spec.order)}
    layers = [layer]
    for _ in range(n):
        nxt = {}
        for form, _stab in layer.values():
            arc = Arc(plane, form, w)
            for p in range(plane.n_points):
                if p in arc.points:
                    continue
                if arc.per_line[plane.point_lines[p]].max(initial=0) >= w:
                    continue
                c = int(plane.point_class[p])
                if u_cap is not None and arc.per_class[c] >= u_cap:
                    continue
                if two_class_cap is not None and arc.per_class[c] == 1:
                    if int((arc.per_class >= 2).sum()) >= two_class_cap:
                        continue
                res = canon(sorted(arc.points + (p,)))
                if res.key not in nxt:
                    nxt[res.key] = (res.form, res.stab_order)
        layer = nxt
        layers.append(layer)
    return layers if keep_layers else layer


def count_pair_seed_arcs(ring, two_classes, size, w=2):
    """Number of affine arc classes of the given size with exactly the
    requested number of 2-classes (all other classes hit at most once)."""
    layer = classify_by_augmentation(ring, "affine", size, w=w, group="agl2",
                                     u_cap=2, two_class_cap=two_classes)
    reps = [form for form, _ in layer.values()]
    plane = affine_plane(ring)
    hits = 0
    for form in reps:
        per_class = np.bincount(plane.point_class[list(form)],
                                minlength=plane.factor.n_points)
        if int((per_class == 2).sum()) == two_classes:
            hits += 1
    return hits


# -- affine lexicographic minimality ---------------------------------------------


def _affine_lex_min(ring, pts):
    """(is minimal, stabilizer order) of a point set under the affine group.

    The frame canonizer returns the group-least image whenever the set
    contains a triple with a unit difference determinant; degenerate sets
    fall back to the exact group minimum test.
    """
    pts = tuple(sorted(int(x) for x in pts))
    if not pts:
        return True, collineation_group(ring, "agl2").order
    plane = affine_plane(ring)
    if has_frame(ring, plane.coords[list(pts)]):
        res = canonize_affine_arc(ring, pts, "agl2")
        return res.form == pts, res.stab_order
    spec = collineation_group(ring, "agl2")
    if not spec.group.is_minimal(pts):
        return False, 0
    return True, spec.group.set_stabilizer_order(pts)


def canonical_prefix_arcs(ring, size, w=2, u_cap=1):
    """Canonical (group-least) affine arcs of the given size, ascending orderly.

    The least representative of an orbit keeps least representatives as
    prefixes, so extending by larger points and keeping only minimal sets is
    complete and duplicate free.
    """
    plane = affine_plane(ring)
    out = []
    line_mult = np.zeros(plane.n_lines, dtype=np.int32)
    per_class = np.zeros(plane.factor.n_points, dtype=np.int32)
    cur = []

    def rec(start):
        if len(cur) == size:
            out.append(tuple(cur))
            return
        for p in range(start, plane.n_points):
            rows = plane.point_lines[p]
            c = int(plane.point_class[p])
            if per_class[c] >= u_cap or line_mult[rows].max(initial=0) >= w:
                continue
            cur.append(p)
            ok, _ = _affine_lex_min(ring, cur)
            if ok:
                line_mult[rows] += 1
                per_class[c] += 1
                rec(p + 1)
                line_mult[rows] -= 1
                per_class[c] -= 1
            cur.pop()

    rec(0)
    return out


# -- swap cuts for prefix seeds ---------------------------------------------------


def _beats_prefix(ring, pts, prefix):
    """True when some group image of pts starts below the prefix.

    Only images produced by frame maps are inspected; that is a sound
    subset of the group, which is all a pruning cut needs.
    """
    from .canonical import _frame_candidates  # shared batched kernel

    plane = affine_plane(ring)
    coords = plane.coords[sorted(pts)].astype(np.int64)
    out = _frame_candidates(ring, coords, with_c=False)
    if out is None:
        return False
    k = len(prefix)
    bound = np.asarray(prefix, dtype=np.int64)
    for img, _meta in out:
        head = img[:, :k]
        diff = head != bound[None, :]
        first = np.where(diff.any(axis=1), diff.argmax(axis=1), k)
        rows = np.nonzero(first < k)[0]
        if len(rows) and (head[rows, first[rows]] < bound[first[rows]]).any():
            return True
    return False


def _swap_excluded(ring, prefix, candidates):
    """Points that no group-least arc with this least prefix can contain.

    A point i is cut when replacing one prefix element by i admits an image
    below the prefix; the least |prefix| elements of any superset arc would
    then also drop below the prefix.
    """
    killed = []
    pref = list(prefix)
    for i in candidates:
        hit = False
        for j in range(len(pref)):
            s = sorted(pref[:j] + pref[j + 1:] + [int(i)])
            if _beats_prefix(ring, s, pref):
                hit = True
                break
        if hit:
            killed.append(int(i))
    return killed


def _swap_excluded_pairs(ring, prefix, candidates):
    """Candidate pairs that cannot appear together (two-point swap cut)."""
    pref = list(prefix)
    bad = set()
    cand = [int(x) for x in candidates]
    for a_idx in range(len(cand)):
        for b_idx in range(a_idx + 1, len(cand)):
            i1, i2 = cand[a_idx], cand[b_idx]
            hit = False
            for j1, j2 in itertools.combinations(range(len(pref)), 2):
                rest = [pref[t] for t in range(len(pref)) if t not in (j1, j2)]
                if _beats_prefix(ring, sorted(rest + [i1, i2]), pref):
                    hit = True
                    break
            if hit:
                bad.add((i1, i2))
    return bad


# -- branch and bound over point classes ------------------------------------------


class _SearchStats:
    __slots__ = ("nodes", "accepts", "prune_bound", "prune_iso", "prune_final")

    def __init__(self):
        self.nodes = 0
        self.accepts = 0
        self.prune_bound = 0
        self.prune_iso = 0
        self.prune_final = 0

    def as_dict(self):
        return {"nodes": self.nodes, "accepts": self.accepts,
                "prune_bound": self.prune_bound, "prune_iso": self.prune_iso,
                "prune_final": self.prune_final}

    def merge(self, other):
        self.nodes += other.nodes
        self.accepts += other.accepts
        self.prune_bound += other.prune_bound
        self.prune_iso += other.prune_iso
        self.prune_final += other.prune_final


def _class_branch_search(plane, w, start_points, class_caps, excluded,
                         blocked_pairs, target, accept, stats,
                         iso_check=None, iso_sizes=()):
    """Depth first completion search branching on point classes.

    At every node one open class is chosen (fewest addable points first) and
    the children either add one of its addable points or close the class.
    Each final point set is visited exactly once because every class gets
    decided exactly once along a path.  The extendable-class bound prunes
    when even one point from every open class cannot reach the target.
    """
    n_points = plane.n_points
    n_classes = plane.factor.n_points
    point_class = plane.point_class
    point_lines = plane.point_lines
    lines_pts = plane.lines_points

    line_mult = np.zeros(plane.n_lines, dtype=np.int32)
    class_cnt = np.zeros(n_classes, dtype=np.int32)
    sat_cover = np.zeros(n_points, dtype=np.int32)  # saturated lines through point
    out = np.zeros(n_points, dtype=bool)
    if excluded is not None and len(excluded):
        out[list(excluded)] = True
    closed = np.zeros(n_classes, dtype=bool)
    floor = np.zeros(n_classes, dtype=np.int32)  # in-class ascending order
    idx = np.arange(n_points)
    cur = []
    pair_block = {}
    for i1, i2 in blocked_pairs:
        pair_block.setdefault(i1, []).append(i2)
        pair_block.setdefault(i2, []).append(i1)

    def add_point(p):
        cur.append(p)
        class_cnt[point_class[p]] += 1
        for m in point_lines[p]:
            line_mult[m] += 1
            if line_mult[m] == w:
                sat_cover[lines_pts[m]] += 1

    def pop_point():
        p = cur.pop()
        for m in point_lines[p]:
            if line_mult[m] == w:
                sat_cover[lines_pts[m]] -= 1
            line_mult[m] -= 1
        class_cnt[point_class[p]] -= 1
        return p

    for p in start_points:
        add_point(p)

    base = len(cur)

    def addable_mask():
        mask = (sat_cover == 0) & ~out
        mask &= class_cnt[point_class] < class_caps[point_class]
        mask &= ~closed[point_class]
        mask &= idx >= floor[point_class]
        return mask

    def rec():
        stats.nodes += 1
        k = len(cur)
        if k == target:
            stats.accepts += 1
            accept(tuple(sorted(cur)))
            return
        mask = addable_mask()
        counts = np.bincount(point_class[mask], minlength=n_classes)
        open_classes = np.nonzero(counts)[0]
        room = int(np.minimum(class_caps[open_classes] - class_cnt[open_classes],
                              counts[open_classes]).sum())
        if k + room < target:
            stats.prune_bound += 1
            return
        cands = [int(c) for c in open_classes]
        c = min(cands, key=lambda cc: (counts[cc], cc))
        members = np.nonzero(mask & (point_class == c))[0]
        for p in members.tolist():
            add_point(p)
            old_floor = floor[c]
            floor[c] = p + 1
            undo = []
            for q in pair_block.get(p, ()):
                if not out[q]:
                    out[q] = True
                    undo.append(q)
            k2 = len(cur)
            pruned = False
            if iso_check is not None and k2 in iso_sizes and k2 < target:
                if iso_check(cur):
                    pruned = True
                    stats.prune_iso += 1
            if not pruned:
                rec()
            for q in undo:
                out[q] = False
            floor[c] = old_floor
            pop_point()
        closed[c] = True
        rec()
        closed[c] = False

    rec()
    while len(cur) > base:
        pop_point()


def _default_iso_sizes(seed_size, n):
    sizes = set(range(seed_size + 1, 9))
    sizes.add(n)
    return tuple(sorted(sizes))


def _classify_seeded_affine(ring, n, w, cfg, u_eff, collector, stats):
    """Affine arc classes of size n by seeded orderly branch and bound.

    Seeds are the canonical (group-least) arcs of the prefix size; the least
    representative of every orbit extends exactly one seed with points above
    the seed maximum, so running every seed with swap cuts, prefix
    isomorphism pruning and a final exact minimality test is complete and
    duplicate free for every class multiplicity regime at once.
    """
    plane = affine_plane(ring)
    n_classes = plane.factor.n_points
    seed_size = min(cfg.seed_prefix, n)
    seeds = canonical_prefix_arcs(ring, seed_size, w=w, u_cap=u_eff)
    if seed_size == n:
        for s in seeds:
            _, stab = _affine_lex_min(ring, s)
            collector(s, stab)
            stats.accepts += 1
        return
    iso_sizes = cfg.iso_check_sizes or _default_iso_sizes(seed_size, n)
    caps = np.full(n_classes, u_eff, dtype=np.int32)
    tasks = list(range(len(seeds)))
    runner = _TaskRunner(cfg, f"seeded{n}", tasks)

    def run_seed(idx):
        seed = seeds[idx]
        local = []
        lstats = _SearchStats()
        arc0 = Arc(plane, seed, w)
        pool = []
        for p in range(max(seed) + 1, plane.n_points):
            if arc0.per_class[plane.point_class[p]] >= u_eff:
                continue
            if arc0.per_line[plane.point_lines[p]].max(initial=0) >= w:
                continue
            pool.append(p)
        excluded = set(range(plane.n_points)) - set(pool) - set(seed)
        excluded.update(_swap_excluded(ring, seed, pool))
        pairs = set()
        if cfg.resolved_pair_cuts(plane.n_points):
            pairs = _swap_excluded_pairs(ring, seed,
                                         [p for p in pool if p not in excluded])

        def accept(pts):
            ok, stab = _affine_lex_min(ring, pts)
            if ok:
                local.append((pts, stab))
            else:
                lstats.prune_final += 1

        def iso_check(cur):
            return _beats_prefix(ring, cur, seed)

        _class_branch_search(plane, w, list(seed), caps, excluded, pairs,
                             n, accept, lstats, iso_check, iso_sizes)
        return local, lstats

    for local, lstats in runner.run(run_seed):
        stats.merge(lstats)
        for pts, stab in local:
            collector(pts, stab)


def _in_class_arc_cap(plane, w):
    """Largest arc inside a single point class (classes are all alike)."""
    members = [int(x) for x in plane.class_members[0]]
    best = 0
    line_mult = np.zeros(plane.n_lines, dtype=np.int32)
    cur = []

    def rec(start):
        nonlocal best
        best = max(best, len(cur))
        for i in range(start, len(members)):
            p = members[i]
            rows = plane.point_lines[p]
            if line_mult[rows].max(initial=0) >= w:
                continue
            line_mult[rows] += 1
            cur.append(p)
            rec(i + 1)
            cur.pop()
            line_mult[rows] -= 1

    rec(0)
    return best


def classify_affine(ring, n, w=2, cfg=None):
    """Isomorph-free affine arc classes of size n with stabilizer orders.

    The result carries class counts and histograms under the plain affine
    group, the chart stabilizer and the full projective group (through the
    standard embedding).
    """
    cfg = cfg or SearchConfig(ring=ring.descriptor, space="affine", n=n, w=w)
    plane = affine_plane(ring)
    stats = _SearchStats()
    q = ring.q
    agl_classes = []

    def collect(pts, stab):
        agl_classes.append((pts, stab))

    u_eff = _in_class_arc_cap(plane, w)
    if cfg.u_cap is not None:
        u_eff = min(u_eff, cfg.u_cap)
    if w == 2 and q % 2:
        # class multiplicity caps by arc size, largest regime first
        if n > size_cap_for_u(q, 2):
            u_eff = min(u_eff, 1)
        elif n > size_cap_for_u(q, 3):
            u_eff = min(u_eff, 2)
    if u_eff >= 1 and n <= u_eff * plane.factor.n_points:
        _classify_seeded_affine(ring, n, w, cfg, u_eff, collect, stats)

    _, emb_proj, emb_map, _ = affine_embedding(ring)
    for pts, _ in agl_classes:
        arc = Arc(plane, pts, w)
        if not arc.valid():
            raise AssertionError("classified arc fails verification")
        if w == 2 and q % 2 and arc.u <= 1:
            # the identities live on the projective factor, so embed first
            emb = distribution_of_arc(emb_proj, [int(emb_map[p]) for p in pts])
            if not spectrum_identities_hold(emb):
                raise AssertionError("spectrum identities fail on a reported arc")

    by_group = {"agl2": _summary_from_arcs("agl2", sorted(agl_classes),
                                           store=cfg.store_arcs_ok(len(agl_classes)))}
    if cfg.merge_groups:
        _, _, point_map, _ = affine_embedding(ring)
        for name in ("pgl3_down", "pgl3"):
            merged = {}
            for pts, _ in agl_classes:
                if name == "pgl3_down":
                    res = canonize_affine_arc(ring, pts, "pgl3_down")
                else:
                    res = canonize_projective_arc(
                        ring, [int(point_map[p]) for p in pts], "pgl3")
                merged.setdefault(res.key, (res.form, res.stab_order))
            reps = sorted(merged.values())
            by_group[name] = _summary_from_arcs(name, reps,
                                                store=cfg.store_arcs_ok(len(reps)))
    return ClassificationResult(ring.descriptor, "affine", n, w, by_group,
                                stats.as_dict())


# -- search configuration ---------------------------------------------------------


@dataclass
class SearchConfig:
    """Knobs shared by the pipelines; defaults follow the published runs."""

    ring: str = "z25"
    space: str = "projective"
    n: int = 0
    w: int = 2
    pipeline: str = "factor_lift"  # factor_lift | affine_bb | brute_force
    mode: str = "classify_all"  # classify_all | prove_max | find_one
    u_cap: int | None = None
    iso_check_sizes: tuple | None = None
    seed_prefix: int = 5
    threads: int = 1
    forbidden_cache: bool = True
    pair_cuts: str = "auto"  # on | off | auto (static two-point swap cuts)
    checkpoint: str | None = None
    arc_store_cap: int = 100000
    merge_groups: bool = True

    def validate(self, plane=None):
        if self.space not in ("affine", "projective"):
            raise ValueError("space must be affine or projective")
        if self.pipeline not in ("factor_lift", "affine_bb", "brute_force"):
            raise ValueError("unknown pipeline")
        if self.mode not in ("classify_all", "prove_max", "find_one"):
            raise ValueError("unknown mode")
        if self.pipeline == "brute_force" and plane is not None and plane.n_points > 40:
            raise ValueError("brute force is restricted to planes with at most 40 points")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    def resolved_pair_cuts(self, n_points):
        if self.pair_cuts == "on":
            return True
        if self.pair_cuts == "off":
            return False
        return n_points <= 20

    def store_arcs_ok(self, count):
        return count <= self.arc_store_cap


# -- task running (serial, parallel, checkpointed) --------------------------------


_WORKER = {}


def _run_worker(idx):
    fn = _WORKER["fn"]
    return idx, fn(idx)


class _TaskRunner:
    """Runs independent tasks in order, optionally forked, optionally resumed.

    Results are merged in task order, so thread counts cannot change any
    output.  With a checkpoint path, finished task ids and their payloads are
    appended as JSON lines and are not recomputed on resume.
    """

    def __init__(self, cfg, stage, task_ids):
        self.cfg = cfg
        self.stage = stage
        self.task_ids = list(task_ids)
        self.done = {}
        path = self._path()
        if path and os.path.exists(path):
            with open(path) as fh:
                for line in fh:
                    rec = json.loads(line)
                    if rec.get("stage") == stage:
                        self.done[rec["task"]] = rec["payload"]

    def _path(self):
        return self.cfg.checkpoint

    def run(self, fn):
        pending = [t for t in self.task_ids if t not in self.done]
        results = {}
        if self.cfg.threads > 1 and len(pending) > 1:
            global _WORKER
            _WORKER = {"fn": fn}
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(self.cfg.threads) as pool:
                for idx, payload in pool.map(_run_worker, pending):
                    results[idx] = payload
        else:
            for idx in pending:
                results[idx] = fn(idx)
        path = self._path()
        out = []
        for idx in self.task_ids:
            if idx in self.done:
                payload = _decode_payload(self.done[idx])
            else:
                payload = results[idx]
                if path:
                    with open(path, "a") as fh:
                        fh.write(json.dumps({"stage": self.stage, "task": idx,
                                             "payload": _encode_payload(payload)})
                                 + "\n")
            out.append(payload)
        return out


def _plain(x):
    if isinstance(x, (tuple, list)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.integer, int)):
        return int(x)
    return x


def _freeze(x):
    if isinstance(x, list):
        return tuple(_freeze(v) for v in x)
    return x


def _encode_payload(payload):
    local, lstats = payload
    if isinstance(local, dict):
        kind = "dict"
        items = [[_plain(k), [_plain(form), int(stab)]]
                 for k, (form, stab) in local.items()]
    else:
        kind = "list"
        items = [[_plain(pts), int(stab)] for pts, stab in local]
    return {"kind": kind, "items": items, "stats": lstats.as_dict()}


def _decode_payload(rec):
    stats = _SearchStats()
    st = rec.get("stats", {})
    stats.nodes = st.get("nodes", 0)
    stats.accepts = st.get("accepts", 0)
    stats.prune_bound = st.get("prune_bound", 0)
    stats.prune_iso = st.get("prune_iso", 0)
    stats.prune_final = st.get("prune_final", 0)
    if rec["kind"] == "dict":
        local = {_freeze(k): (_freeze(form), stab)
                 for k, (form, stab) in rec["items"]}
    else:
        local = [(_freeze(pts), stab) for pts, stab in rec["items"]]
    return local, stats


# -- class distributions on the factor plane ---------------------------------


def _factor_group(q):
    """Full projective group of the order q factor plane."""
    ring = parse_ring_descriptor(f"f{q}")
    return collineation_group(ring, "pgl3")


def _max_labeling(group, vec):
    """Lexicographically largest relabeling of vec over the group."""
    w, _ = group.min_labeling([-int(v) for v in vec])
    return tuple(-int(x) for x in w)


def _is_max_labeling(group, vec):
    """True when vec equals its own largest relabeling (early-exit test)."""
    neg = [-int(v) for v in vec]
    w, _ = group.min_labeling(neg, stop_if_below=neg)
    if w is None:
        return False
    assert list(w) == neg
    return True


_CHAIN_ORBIT_CACHE = {}


def _chain_orbits(q):
    """Orbit of k under the pointwise stabilizer of 0..k-1, for every k.

    A max-labeled vector must dominate each of these orbits at position k:
    an element fixing 0..k-1 pointwise would otherwise pull a larger value
    into position k.  This gives a near-free necessary test run before the
    exact relabeling comparison.
    """
    got = _CHAIN_ORBIT_CACHE.get(q)
    if got is not None:
        return got
    G = _factor_group(q).group
    orbs = []
    for k in range(G.degree):
        if G.order() == 1:
            orbs.append(np.arange(k, k + 1))
            continue
        root, _, _ = G.orbit_data()
        orbs.append(np.nonzero(root == root[k])[0])
        G = G.point_stabilizer(k)
    _CHAIN_ORBIT_CACHE[q] = orbs
    return orbs


def enumerate_distributions(q, n, w=2, u_cap=None, forbidden=()):
    """Canonical class distributions compatible with an (n, w)-arc, odd q.

    A distribution assigns to every factor point the number of arc points in
    its class.  Candidates are generated in orderly fashion (canonical means
    largest in its relabeling orbit) under all derived feasibility
    conditions; survivors satisfy the full condition set exactly.
    """
    if w != 2:
        raise NotImplementedError("the condition set is derived for w = 2")
    if q % 2 == 0:
        raise ValueError("odd q only; even characteristic planes are searched "
                         "with unconstrained distributions")
    return _distributions(q, n, w, u_cap=u_cap, constrained=True,
                          forbidden=forbidden)


def _distributions(q, n, w, u_cap=None, constrained=True, class_cap=None,
                   forbidden=(), stats=None, level_sets=None):
    spec = _factor_group(q)
    plane = spec.plane
    group = spec.group
    n_cls = plane.n_points
    cap = class_cap if class_cap is not None else (q + 1 if q % 2 else q + 2)
    if u_cap is not None:
        cap = min(cap, u_cap)
    if constrained:
        # no final class multiplicity is compatible with n above every cap
        best = 0
        for uf in range(cap, 0, -1):
            best = max(best, size_cap_for_u(q, uf))
            if n > best:
                cap = uf - 1
        if cap < 1:
            return []
    if n > cap * n_cls:
        return []
    two_cap_regime = constrained and n > size_cap_for_u(q, 3)
    if two_cap_regime:
        cap = min(cap, 2)
    use_levels = (2 * n > n_cls) if level_sets is None else level_sets
    if constrained and use_levels:
        # wide distributions: the 1-classes dominate, so enumerating the
        # small level sets beats walking the full multiplicity vector
        return _distributions_by_level_sets(q, n, cap, forbidden, stats)
    # largest admissible n for a given running maximum multiplicity
    n_limit = {}
    if constrained:
        for u0 in range(1, cap + 1):
            n_limit[u0] = max(size_cap_for_u(q, uf) for uf in range(u0, cap + 1))

    pt_lines = plane.point_lines
    lines_pts = [list(plane.lines_points[m]) for m in range(plane.n_lines)]
    D = np.zeros(n_cls, dtype=np.int64)
    lm = np.zeros(plane.n_lines, dtype=np.int64)
    zero_cnt = np.full(plane.n_lines, q + 1, dtype=np.int64)
    forb = [tuple(int(v) for v in f) for f in forbidden]
    chain_orbs = [o for o in _chain_orbits(q) if len(o) > 1]
    out = []
    counters = {"nodes": 0, "canonical_rejects": 0, "accept_rejects": 0}

    def chain_ok(c):
        for o in chain_orbs:
            k = int(o[0])
            if k > c:
                return True
            if int(D[o].max()) > int(D[k]):
                return False
        return True

    def partial_ok(c):
        if not constrained:
            return True
        umax = int(D.max())
        if n > n_limit.get(umax, -1):
            return False
        for m in pt_lines[c]:
            if zero_cnt[m] == 0:
                return False
            if two_cap_regime:
                if lm[m] > q + 1:
                    return False
                if lm[m] == q + 1:
                    twos = int((D[lines_pts[m]] == 2).sum())
                    if twos > (q + 1) // 2:
                        return False
        # a frozen 2-class still needs a line class completable to sum 2
        for x in np.nonzero(D == 2)[0]:
            if x < c or cap == 2:
                if all(lm[m] > 2 for m in pt_lines[x]):
                    return False
        return True

    def accept_ok():
        d = Distribution(plane, tuple(int(v) for v in D))
        if constrained:
            if distribution_violations(d):
                return False
            if q == 5 and d.u <= 2 and forbidden_type_witness(d) is not None:
                return False
        for pat in forb:
            if _pattern_embeds(group, pat, D):
                return False
        return True

    def rec(c0, total):
        if total == n:
            if accept_ok():
                out.append(Distribution(plane, tuple(int(v) for v in D)))
            else:
                counters["accept_rejects"] += 1
            return
        need = n - total
        for c in range(c0, n_cls):
            if int((cap - D[c:]).sum()) < need:
                break
            if D[c] >= cap:
                continue
            counters["nodes"] += 1
            D[c] += 1
            born = D[c] == 1
            for m in pt_lines[c]:
                lm[m] += 1
                if born:
                    zero_cnt[m] -= 1
            ok = partial_ok(c) and chain_ok(c)
            if ok and not _is_max_labeling(group, D):
                counters["canonical_rejects"] += 1
                ok = False
            if ok:
                rec(c, total + 1)
            for m in pt_lines[c]:
                lm[m] -= 1
                if born:
                    zero_cnt[m] += 1
            D[c] -= 1
        return

    rec(0, 0)
    if stats is not None:
        stats.update(counters)
    return out


def _distributions_by_level_sets(q, n, cap, forbidden, stats):
    """Constrained distribution enumeration through multiplicity level sets.

    A distribution is the pair of its level sets (classes of multiplicity
    v for v = cap..2) plus the 0-class set; the 1-classes are whatever
    remains, and the 0-class count is forced by n.  Each level set is
    enumerated orderly under the setwise stabilizer of the sets already
    fixed, which keeps the backtrack trees as small as the level sets
    themselves.  Equivalent to the vector walk, just parametrized by the
    sparse side of wide distributions.
    """
    spec = _factor_group(q)
    plane = spec.plane
    G = spec.group
    n_cls = plane.n_points
    pt_lines = plane.point_lines
    lines_pts = [list(plane.lines_points[m]) for m in range(plane.n_lines)]
    forb = [tuple(int(v) for v in f) for f in forbidden]
    out = []
    counters = {"nodes": 0, "canonical_rejects": 0, "accept_rejects": 0}

    value = np.full(n_cls, -1, dtype=np.int64)
    high = np.zeros(plane.n_lines, dtype=np.int64)
    un_cnt = np.full(plane.n_lines, q + 1, dtype=np.int64)
    fr1 = np.zeros(plane.n_lines, dtype=np.int64)
    zcnt = np.zeros(plane.n_lines, dtype=np.int64)
    two_cand = {}

    def emit_leaf():
        D = np.where(value >= 0, value, 1)
        d = Distribution(plane, tuple(int(v) for v in D))
        if distribution_violations(d):
            counters["accept_rejects"] += 1
            return
        if q == 5 and d.u <= 2 and forbidden_type_witness(d) is not None:
            counters["accept_rejects"] += 1
            return
        for pat in forb:
            if _pattern_embeds(G, pat, D):
                counters["accept_rejects"] += 1
                return
        out.append(d)

    def zeros_rec(pointer, need, H2, s0):
        if need == 0:
            emit_leaf()
            return
        trivial = H2.order() == 1
        frozen = []
        for c in range(pointer, n_cls):
            if n_cls - c < need:
                break
            if value[c] != -1:
                continue
            counters["nodes"] += 1
            value[c] = 0
            s0.append(c)
            rows = pt_lines[c]
            zcnt[rows] += 1
            if trivial or H2.is_minimal(s0):
                zeros_rec(c + 1, need - 1, H2, s0)
            else:
                counters["canonical_rejects"] += 1
            zcnt[rows] -= 1
            s0.pop()
            value[c] = -1
            # c stays unassigned past the scan, so it ends as a 1-class
            fr1[rows] += 1
            frozen.append(c)
            dead = False
            for m in rows:
                if zcnt[m] == 0 and un_cnt[m] - fr1[m] - zcnt[m] == 0:
                    dead = True
                    break
            if not dead:
                for c2, cand in two_cand.items():
                    if all(fr1[m] > 0 for m in cand):
                        dead = True
                        break
            if dead:
                break
        for c in frozen:
            fr1[pt_lines[c]] -= 1

    def start_zeros(rem_n, H2):
        t1 = rem_n
        assigned = int((value >= 0).sum())
        t0 = n_cls - assigned - t1
        if t1 < 0 or t0 < 0:
            return
        # every line still has an unassigned class here: grow() refuses any
        # addition that would fill a line with multiplicities >= 2 throughout
        two_cand.clear()
        ok = True
        for c in np.nonzero(value == 2)[0]:
            cand = [m for m in pt_lines[c] if high[m] == 2]
            if not cand:
                ok = False
                break
            two_cand[int(c)] = cand
        if ok:
            zeros_rec(0, t0, H2, [])
        two_cand.clear()

    def level_rec(v, rem_n, H, u_open):
        # u_open: no nonempty level above, so v would become the maximum
        if v == 1:
            start_zeros(rem_n, H)
            return
        sv = []

        def close():
            if sv:
                H2 = H.set_stabilizer(sv)
            else:
                H2 = H
            level_rec(v - 1, rem_n - v * len(sv), H2, u_open and not sv)

        def grow(start):
            close()
            if rem_n - v * (len(sv) + 1) < 0:
                return
            if u_open and not sv and v >= 2 and n > size_cap_for_u(q, v):
                return
            only_twos = v == 2 and u_open
            for c in range(start, n_cls):
                if value[c] != -1:
                    continue
                counters["nodes"] += 1
                value[c] = v
                sv.append(c)
                rows = pt_lines[c]
                high[rows] += v
                un_cnt[rows] -= 1
                ok = True
                for m in rows:
                    if un_cnt[m] == 0:
                        ok = False  # no 0-class can ever land on this line
                        break
                    if only_twos and high[m] > q + 1:
                        ok = False
                        break
                if ok and not H.is_minimal(sv):
                    counters["canonical_rejects"] += 1
                    ok = False
                if ok and rem_n - v * len(sv) >= 0:
                    grow(c + 1)
                un_cnt[rows] += 1
                high[rows] -= v
                sv.pop()
                value[c] = -1

        grow(0)

    level_rec(cap, n, G, True)
    if stats is not None:
        stats.update(counters)
    return out


def _pattern_embeds(group, pattern, target):
    """True when some group element g satisfies pattern[s] <= target[g(s)].

    Used for forbidden sub-distribution tests: once no arc realizes the
    pattern exactly, no distribution dominating a relabeled copy of it can
    carry an arc either, because restricting an arc classwise realizes every
    dominated sub-distribution.
    """
    target = np.asarray(target, dtype=np.int64)
    supp = [s for s in range(len(pattern)) if pattern[s] > 0]
    supp.sort(key=lambda s: -pattern[s])

    def rec(G, depth, tv):
        if depth == len(supp):
            return True
        s = supp[depth]
        need = pattern[s]
        root, _, _ = G.orbit_data()
        orbit = np.nonzero(root == root[s])[0]
        a = G.transporter_to_root(s)
        stab = None
        for t in orbit.tolist():
            if tv[t] < need:
                continue
            b = G.transporter_to_root(t)
            g0 = compose(inverse(b), a)
            if stab is None:
                stab = G.point_stabilizer(s)
            if rec(stab, depth + 1, tv[g0]):
                return True
        return False

    return rec(group, 0, target)


# -- lifting a distribution to arcs --------------------------------------------


_RANKED_CACHE = {}


def _ranked_fiber(ring, group, dist):
    """Fiber data for one distribution: stabilizer preimage in class-major order.

    Points are reranked class by class along the support so that chosen
    index words grow block-wise; the stabilizer preimage is conjugated by
    the same ranking, which keeps minimality tests meaningful for the
    reordered words.
    """
    key = (ring.descriptor, group, dist)
    if key in _RANKED_CACHE:
        return _RANKED_CACHE[key]
    spec = collineation_group(ring, group)
    plane = spec.plane
    H, stab_bar = distribution_stab_group(spec, dist)
    n_cls = plane.factor.n_points
    support = [c for c in range(n_cls) if dist[c] > 0]
    rest = [c for c in range(n_cls) if dist[c] == 0]
    order = np.concatenate([plane.class_members[c] for c in support + rest])
    order = order.astype(np.int64)
    rank = np.empty(plane.n_points, dtype=np.int64)
    rank[order] = np.arange(plane.n_points)
    gens_r = [rank[np.asarray(g, dtype=np.int64)[order]].astype(np.int32)
              for g in H.gens]
    Hr = PermGroup(plane.n_points, gens_r, known_order=H.order(),
                   name=f"fiber({ring.descriptor})")
    size = len(plane.class_members[0])
    blocks = [(i * size, (i + 1) * size, support[i], dist[support[i]])
              for i in range(len(support))]
    data = (spec, plane, Hr, order, blocks, stab_bar)
    _RANKED_CACHE[key] = data
    return data


def lift_distribution(d, ring, n=None, w=2, group="pgl3", pair_prune=None,
                      canon_prune=True, track_failure=True, first_only=False):
    """All arc classes over a factor distribution, with a failure certificate.

    Returns (arcs, report): arcs as [(sorted point tuple, stabilizer order)]
    under the full group, report with node counts and, when the fiber is
    empty, the least block prefix of the distribution that already admits no
    partial arc (verified by a rerun without distribution-specific pruning).
    """
    proj = projective_plane(ring)
    if d.plane is not proj.factor:
        if tuple(d.plane.ring.descriptor) != tuple(proj.factor.ring.descriptor):
            raise ValueError("distribution lives on a different factor plane")
    dist = tuple(int(x) for x in d.mult)
    if n is None:
        n = sum(dist)
    elif n != sum(dist):
        raise ValueError("n does not match the distribution size")
    q = ring.q
    if pair_prune is None:
        pair_prune = w == 2 and q % 2 == 1
    spec, plane, Hr, order, blocks, _ = _ranked_fiber(ring, group, dist)
    line_class_sum = np.array(
        [sum(dist[c] for c in plane.factor.lines_points[m])
         for m in range(plane.factor.n_lines)], dtype=np.int64)

    line_mult = np.zeros(plane.n_lines, dtype=np.int64)
    chosen_r = []
    chosen_o = []
    report = {"nodes": 0, "accepts": 0, "deepest": (0, 0), "failing_prefix": None}
    arcs = []

    def rec(block_idx, filled, last_r):
        if block_idx == len(blocks):
            stab = 0 if first_only else Hr.set_stabilizer_order(chosen_r)
            arcs.append((tuple(sorted(chosen_o)), stab))
            report["accepts"] += 1
            return
        lo, hi, cls, quota = blocks[block_idx]
        start = max(last_r + 1, lo)
        for i in range(start, hi - (quota - filled) + 1):
            if first_only and arcs:
                return
            report["nodes"] += 1
            p = int(order[i])
            rows = plane.point_lines[p]
            if line_mult[rows].max(initial=0) >= w:
                continue
            if pair_prune and filled:
                # q odd: lines through two neighbour arc points cover every
                # class on the determined line class, so that class carries
                # no arc point outside [x]; its sum must equal the quota
                bad = False
                for r in chosen_o[-filled:]:
                    if line_class_sum[plane.determined_line_class(p, r)] != quota:
                        bad = True
                        break
                if bad:
                    continue
            chosen_r.append(i)
            chosen_o.append(p)
            line_mult[rows] += 1
            ok = True
            if canon_prune and not Hr.is_minimal(chosen_r):
                ok = False
            if ok:
                prog = (block_idx, filled + 1)
                if prog > report["deepest"]:
                    report["deepest"] = prog
                if filled + 1 == quota:
                    rec(block_idx + 1, 0, i)
                else:
                    rec(block_idx, filled + 1, i)
            line_mult[rows] -= 1
            chosen_o.pop()
            chosen_r.pop()

    rec(0, 0, -1)

    if not arcs and track_failure and blocks:
        b, t = report["deepest"]
        if t == blocks[b][3]:
            b, t = b + 1, 0
        fail = np.zeros(plane.factor.n_points, dtype=np.int64)
        for j in range(b):
            fail[blocks[j][2]] = blocks[j][3]
        fail[blocks[b][2]] = t + 1
        sub = Distribution(plane.factor, tuple(int(v) for v in fail))
        check, _ = lift_distribution(sub, ring, w=w, group=group,
                                     pair_prune=False, canon_prune=canon_prune,
                                     track_failure=False, first_only=True)
        if not check:
            report["failing_prefix"] = _max_labeling(
                _factor_group(q).group, fail)
    return arcs, report


# -- projective classification ---------------------------------------------------


def classify_projective(ring, n, w=2, cfg=None):
    """Projective arc classes via the factor lift pipeline."""
    cfg = cfg or SearchConfig(ring=ring.descriptor, space="projective", n=n, w=w)
    q = ring.q
    proj = projective_plane(ring)
    if q % 2:
        dists = enumerate_distributions(q, n, w, u_cap=cfg.u_cap)
    else:
        dists = _distributions(q, n, w, u_cap=cfg.u_cap, constrained=False,
                               class_cap=_in_class_arc_cap(proj, w))
    arcs = []
    forbidden = []
    stats = {"distributions": len(dists), "lifted": 0, "forbidden_skips": 0,
             "nodes": 0, "empty_fibers": 0}
    group = _factor_group(q).group if dists else None
    for d in dists:
        vec = np.asarray(d.mult, dtype=np.int64)
        if cfg.forbidden_cache and any(_pattern_embeds(group, pat, vec)
                                       for pat in forbidden):
            stats["forbidden_skips"] += 1
            continue
        found, report = lift_distribution(d, ring, w=w,
                                          track_failure=cfg.forbidden_cache)
        stats["lifted"] += 1
        stats["nodes"] += report["nodes"]
        if not found:
            stats["empty_fibers"] += 1
            if report["failing_prefix"] is not None:
                forbidden.append(report["failing_prefix"])
        arcs.extend(found)
    for pts, _ in arcs:
        if not Arc(proj, pts, w).valid():
            raise AssertionError("lifted arc fails verification")
    summary = _summary_from_arcs("pgl3", sorted(arcs),
                                 store=cfg.store_arcs_ok(len(arcs)))
    return ClassificationResult(ring.descriptor, "projective", n, w,
                                {"pgl3": summary}, stats)


def extend_to_projective(ring, points, n, w=2):
    """Projective completions of one affine arc through the deleted line class.

    The affine arc is embedded in the standard chart and extended by points
    of the line class at infinity only; the returned classes are canonical
    representatives of the distinct completions.
    """
    aff, proj, point_map, _ = affine_embedding(ring)
    base = [int(point_map[p]) for p in points]
    chart = set(int(x) for x in point_map)
    inf_pts = [p for p in range(proj.n_points) if p not in chart]
    need = n - len(base)
    if need < 0:
        raise ValueError("target size below the arc size")
    found = {}
    line_mult = np.zeros(proj.n_lines, dtype=np.int64)
    for p in base:
        line_mult[proj.point_lines[p]] += 1
    if line_mult.max(initial=0) > w:
        raise ValueError("embedded arc is not w-valid")
    cur = []

    def rec(start):
        if len(cur) == need:
            res = canonize_projective_arc(ring, base + cur, "pgl3")
            found.setdefault(res.key, (res.form, res.stab_order))
            return
        for i in range(start, len(inf_pts)):
            p = inf_pts[i]
            rows = proj.point_lines[p]
            if line_mult[rows].max(initial=0) >= w:
                continue
            line_mult[rows] += 1
            cur.append(p)
            rec(i + 1)
            cur.pop()
            line_mult[rows] -= 1

    rec(0)
    return sorted(found.values())


def classify_projective_by_extension(ring, n, w=2, cfg=None):
    """Projective arc classes from affine classifications plus completions.

    Every projective arc misses some line class by at least a bounded
    number of points (counting incidences over all line classes bounds the
    least class multiplicity; for odd q and n above the three-class cap the
    bound tightens to two).  Removing such a class leaves an affine arc, so
    extending every affine class of the last few sizes through the class at
    infinity and deduplicating canonically is complete.
    """
    cfg = cfg or SearchConfig(ring=ring.descriptor, space="projective", n=n, w=w,
                              pipeline="affine_bb")
    q = ring.q
    k_max = ((q + 1) * n) // (q * q + q + 1)
    if q % 2 and n > size_cap_for_u(q, 3):
        k_max = min(k_max, 2)
    merged = {}
    stats = {"k_max": k_max, "affine_counts": {}, "nodes": 0}
    for size in range(max(n - k_max, 0), n + 1):
        sub = SearchConfig(ring=ring.descriptor, space="affine", n=size, w=w,
                           pipeline="affine_bb", u_cap=cfg.u_cap,
                           seed_prefix=cfg.seed_prefix, threads=cfg.threads,
                           pair_cuts=cfg.pair_cuts, checkpoint=cfg.checkpoint,
                           iso_check_sizes=cfg.iso_check_sizes,
                           merge_groups=False)
        res = classify_affine(ring, size, w, sub)
        stats["affine_counts"][size] = res.count("agl2")
        stats["nodes"] += res.stats.get("nodes", 0)
        reps = res.by_group["agl2"].arcs
        if reps is None:
            raise ValueError("extension pipeline needs stored affine arcs; "
                             "raise arc_store_cap")
        for pts, _ in reps:
            for key_form in extend_to_projective(ring, pts, n, w):
                form, stab = key_form
                merged.setdefault(form, (form, stab))
    arcs = sorted(merged.values())
    proj = projective_plane(ring)
    for pts, _ in arcs:
        if not Arc(proj, pts, w).valid():
            raise AssertionError("extended arc fails verification")
    summary = _summary_from_arcs("pgl3", arcs, store=cfg.store_arcs_ok(len(arcs)))
    return ClassificationResult(ring.descriptor, "projective", n, w,
                                {"pgl3": summary}, stats)


# -- existence and maximality ------------------------------------------------------


def _class_stabilizer(ring, space):
    """Setwise stabilizer of point class 0, as the kernel preimage of the
    factor point stabilizer."""
    name = "pgl3" if space == "projective" else "agl2"
    spec = collineation_group(ring, name)
    if ring.m == 1:
        return spec.group.point_stabilizer(0)
    fs = spec.factor_spec()
    fstab = fs.group.point_stabilizer(0)
    lifted = [fs.lift_word(fs.group.express(g)) for g in fstab.stored_generators()]
    gens = lifted + spec.kernel_gens()
    return PermGroup(spec.plane.n_points, gens,
                     known_order=fstab.order() * spec.kernel_order(),
                     name=f"classstab({ring.descriptor},{space})")


def find_arc(ring, space, n, w=2, u_exact=None, u_cap=None):
    """One (n, w)-arc, optionally with prescribed exact class multiplicity.

    With u_exact, the search runs over every in-class arc of that size in
    class 0 as a core (class transitivity of the group makes that lossless)
    and caps every class at u_exact; exhausting it proves nonexistence.
    Cores are enumerated up to the setwise stabilizer of the class, which is
    sound for existence: the stabilizer maps arcs with a given core onto
    arcs with the transported core.  Returns an Arc or None.
    """
    plane = affine_plane(ring) if space == "affine" else projective_plane(ring)
    cap = u_exact if u_exact is not None else (u_cap or n)
    caps = np.full(plane.factor.n_points, cap, dtype=np.int64)
    line_mult = np.zeros(plane.n_lines, dtype=np.int64)
    class_cnt = np.zeros(plane.factor.n_points, dtype=np.int64)

    def extend_first(cur, start):
        if len(cur) == n:
            return list(cur)
        for p in range(start, plane.n_points):
            c = int(plane.point_class[p])
            if class_cnt[c] >= caps[c]:
                continue
            rows = plane.point_lines[p]
            if line_mult[rows].max(initial=0) >= w:
                continue
            line_mult[rows] += 1
            class_cnt[c] += 1
            cur.append(p)
            got = extend_first(cur, p + 1)
            cur.pop()
            class_cnt[c] -= 1
            line_mult[rows] -= 1
            if got:
                return got
        return None

    if u_exact is None:
        got = extend_first([], 0)
        return Arc(plane, got, w) if got else None
    if n < u_exact:
        return None
    members = sorted(int(x) for x in plane.class_members[0])
    stab = _class_stabilizer(ring, space)

    def core_rec(core, start):
        if len(core) == u_exact:
            got = extend_first(list(core), 0)
            if got:
                return got
            return None
        for i in range(start, len(members)):
            p = members[i]
            rows = plane.point_lines[p]
            if line_mult[rows].max(initial=0) >= w:
                continue
            core.append(p)
            # ascending orderly generation: lex-least sets have lex-least
            # prefixes, so pruning non-minimal prefixes loses no orbit
            if not stab.is_minimal(core):
                core.pop()
                continue
            line_mult[rows] += 1
            class_cnt[0] += 1
            got = core_rec(core, i + 1)
            core.pop()
            class_cnt[0] -= 1
            line_mult[rows] -= 1
            if got:
                return got
        return None

    got = core_rec([], 0)
    if not got:
        return None
    arc = Arc(plane, got, w)
    if arc.u != u_exact:
        raise AssertionError("core plus caps must pin the class multiplicity")
    return arc


def prove_maximum(ring, space, w=2, cfg=None):
    """Largest n with an (n, w)-arc, with per-size emptiness certificates.

    Tiny planes go through the brute-force subset search; otherwise sizes
    are classified downward from the trivial cap until the first nonempty
    size, so the emptiness of every larger size is itself a computation.
    Returns (m, classification at m, certificates).
    """
    cfg = cfg or SearchConfig(ring=ring.descriptor, space=space, w=w,
                              mode="prove_max")
    plane = affine_plane(ring) if space == "affine" else projective_plane(ring)
    q = ring.q
    if plane.n_points <= 40 or cfg.pipeline == "brute_force":
        best = 0
        line_mult = np.zeros(plane.n_lines, dtype=np.int64)
        cur = []

        def rec(start):
            nonlocal best
            best = max(best, len(cur))
            for p in range(start, plane.n_points):
                rows = plane.point_lines[p]
                if line_mult[rows].max(initial=0) >= w:
                    continue
                line_mult[rows] += 1
                cur.append(p)
                rec(p + 1)
                cur.pop()
                line_mult[rows] -= 1

        rec(0)
        res = brute_force_classify(plane, best, w)
        return best, res, {"method": "brute_force"}
    if q % 2 == 0:
        raise NotImplementedError("large even characteristic planes are out of scope")
    hi = q * q + q + 1 if space == "projective" else q * q
    certificates = {}
    for size in range(hi, 0, -1):
        if space == "projective":
            if cfg.pipeline == "affine_bb":
                res = classify_projective_by_extension(ring, size, w, cfg)
            else:
                res = classify_projective(ring, size, w, cfg)
            top = "pgl3"
        else:
            res = classify_affine(ring, size, w, cfg)
            top = "agl2"
        certificates[size] = dict(res.stats)
        certificates[size]["count"] = res.count(top)
        if res.count(top):
            return size, res, certificates
    return 0, None, certificates


# -- binary linear program export --------------------------------------------------


def export_blp(plane, n, w=2, seed=(), cuts=None, path=None):
    """Completion feasibility as a CPLEX LP text model.

    Binary variables x<i> per point; rows force at least n chosen points and
    at most w per line.  cuts may carry "zeros" (points fixed to 0), "pairs"
    (mutually exclusive candidate pairs) and "class_caps" (an integer or a
    per-class vector capping class multiplicities).
    """
    cuts = cuts or {}
    lines = []
    lines.append("Maximize")
    lines.append(" obj: " + " + ".join(f"x{p}" for p in range(plane.n_points)))
    lines.append("Subject To")
    lines.append(" size: " + " + ".join(f"x{p}" for p in range(plane.n_points))
                 + f" >= {n}")
    for m in range(plane.n_lines):
        terms = " + ".join(f"x{int(p)}" for p in plane.lines_points[m])
        lines.append(f" line{m}: {terms} <= {w}")
    caps = cuts.get("class_caps")
    if caps is not None:
        caps_vec = (np.full(plane.factor.n_points, caps, dtype=np.int64)
                    if np.isscalar(caps) else np.asarray(caps, dtype=np.int64))
        for c in range(plane.factor.n_points):
            terms = " + ".join(f"x{int(p)}" for p in plane.class_members[c])
            lines.append(f" class{c}: {terms} <= {int(caps_vec[c])}")
    for k, (i1, i2) in enumerate(cuts.get("pairs", ())):
        lines.append(f" pair{k}: x{int(i1)} + x{int(i2)} <= 1")
    lines.append("Bounds")
    for p in seed:
        lines.append(f" x{int(p)} = 1")
    for p in cuts.get("zeros", ()):
        lines.append(f" x{int(p)} = 0")
    lines.append("Binaries")
    lines.append(" " + " ".join(f"x{p}" for p in range(plane.n_points)))
    lines.append("End")
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def parse_blp(text):
    """Parse the LP subset emitted by export_blp back into rows and bounds."""
    section = None
    rows = []
    fixed = {}
    objective = []
    n_vars = 0

    def var_index(tok):
        return int(tok[1:])

    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        low = line.lower()
        if low in ("maximize", "minimize"):
            section = "obj"
            continue
        if low == "subject to":
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low == "binaries":
            section = "bin"
            continue
        if low == "end":
            break
        if section == "obj":
            body = line.split(":", 1)[1] if ":" in line else line
            objective = [var_index(t) for t in body.split() if t.startswith("x")]
        elif section == "rows":
            name, body = line.split(":", 1)
            for sense in (">=", "<=", "="):
                if sense in body:
                    lhs, rhs = body.split(sense)
                    coeffs = {}
                    for tok in lhs.split():
                        if tok.startswith("x"):
                            coeffs[var_index(tok)] = coeffs.get(var_index(tok), 0) + 1
                    rows.append((name.strip(), coeffs, sense, int(rhs)))
                    break
        elif section == "bounds":
            toks = line.split()
            fixed[var_index(toks[0])] = int(toks[2])
        elif section == "bin":
            for tok in line.split():
                n_vars = max(n_vars, var_index(tok) + 1)
    return {"n_vars": n_vars, "rows": rows, "fixed": fixed,
            "objective": objective}


def render_blp(parsed):
    """Regenerate LP text from a parse; parse-render is a fixed point."""
    lines = ["Maximize",
             " obj: " + " + ".join(f"x{p}" for p in parsed["objective"]),
             "Subject To"]
    for name, coeffs, sense, rhs in parsed["rows"]:
        terms = " + ".join(f"x{p}" if c == 1 else f"{c} x{p}"
                           for p, c in coeffs.items())
        lines.append(f" {name}: {terms} {sense} {rhs}")
    lines.append("Bounds")
    for p, v in parsed["fixed"].items():
        lines.append(f" x{p} = {v}")
    lines.append("Binaries")
    lines.append(" " + " ".join(f"x{p}" for p in range(parsed["n_vars"])))
    lines.append("End")
    return "\n".join(lines) + "\n"


def blp_feasible(parsed, node_limit=None):
    """Backtracking feasibility for the binary programs written above.

    Keeps per-row attainable ranges, propagates forced assignments to a
    fixed point and branches on a variable from the tightest row.  Returns
    (feasible, assignment or None).  Independent of the arc search code
    paths, so the two can cross-check each other.
    """
    n_vars = parsed["n_vars"]
    rows = [(coeffs, sense, rhs) for _, coeffs, sense, rhs in parsed["rows"]]
    val = np.full(n_vars, -1, dtype=np.int64)
    var_rows = [[] for _ in range(n_vars)]
    cur = np.zeros(len(rows), dtype=np.int64)
    pos_rem = np.zeros(len(rows), dtype=np.int64)
    for r, (coeffs, _, _) in enumerate(rows):
        for p, c in coeffs.items():
            var_rows[p].append(r)
            pos_rem[r] += c
    nodes = [0]

    def row_ok(r):
        coeffs, sense, rhs = rows[r]
        lo, hi = cur[r], cur[r] + pos_rem[r]
        if sense == "<=":
            return lo <= rhs
        if sense == ">=":
            return hi >= rhs
        return lo <= rhs <= hi

    def assign(p, v, trail):
        val[p] = v
        trail.append(p)
        for r in var_rows[p]:
            c = rows[r][0][p]
            pos_rem[r] -= c
            cur[r] += c * v
            if not row_ok(r):
                return False
        return True

    def propagate(trail):
        changed = True
        while changed:
            changed = False
            for r, (coeffs, sense, rhs) in enumerate(rows):
                if sense in ("<=", "=") and cur[r] == rhs and pos_rem[r]:
                    for p in coeffs:
                        if val[p] == -1:
                            if not assign(p, 0, trail):
                                return False
                            changed = True
                if sense in (">=", "=") and cur[r] + pos_rem[r] == rhs and pos_rem[r]:
                    for p in coeffs:
                        if val[p] == -1:
                            if not assign(p, 1, trail):
                                return False
                            changed = True
        return True

    def undo(trail, mark):
        while len(trail) > mark:
            p = trail.pop()
            for r in var_rows[p]:
                c = rows[r][0][p]
                cur[r] -= c * val[p]
                pos_rem[r] += c
            val[p] = -1

    trail = []
    for p, v in parsed["fixed"].items():
        if val[p] == -1:
            if not assign(p, v, trail):
                return False, None
        elif val[p] != v:
            return False, None
    if not propagate(trail):
        return False, None

    def branch():
        nodes[0] += 1
        if node_limit is not None and nodes[0] > node_limit:
            raise RuntimeError("node limit exceeded")
        slack = None
        pick = None
        for r, (coeffs, sense, rhs) in enumerate(rows):
            if sense == ">=" and pos_rem[r]:
                s = cur[r] + pos_rem[r] - rhs
                if s >= 0 and (slack is None or s < slack):
                    free = [p for p in coeffs if val[p] == -1]
                    if free:
                        slack = s
                        pick = free[0]
        if pick is None:
            for p in range(n_vars):
                if val[p] == -1:
                    pick = p
                    break
        if pick is None:
            return True
        for v in (1, 0):
            mark = len(trail)
            if assign(pick, v, trail) and propagate(trail):
                if branch():
                    return True
            undo(trail, mark)
        return False

    if branch():
        return True, val.copy()
    return False, None


# -- dispatcher ---------------------------------------------------------------------


def classify(cfg):
    """Run the configured search and return its result object."""
    ring = parse_ring_descriptor(cfg.ring)
    plane = affine_plane(ring) if cfg.space == "affine" else projective_plane(ring)
    cfg.validate(plane)
    if cfg.mode == "prove_max":
        return prove_maximum(ring, cfg.space, cfg.w, cfg)
    if cfg.mode == "find_one":
        return find_arc(ring, cfg.space, cfg.n, cfg.w, u_cap=cfg.u_cap)
    if cfg.pipeline == "brute_force":
        return brute_force_classify(plane, cfg.n, cfg.w)
    if cfg.space == "affine":
        if cfg.pipeline == "factor_lift":
            raise ValueError("the factor lift pipeline classifies projective arcs; "
                             "use affine_bb for affine space")
        return classify_affine(ring, cfg.n, cfg.w, cfg)
    if cfg.pipeline == "affine_bb":
        return classify_projective_by_extension(ring, cfg.n, cfg.w, cfg)
    return classify_projective(ring, cfg.n, cfg.w, cfg)
