"""Permutation groups on finite point sets.

Groups are held as stabilizer chains built by Schreier-Sims.  Two build
modes are used: a randomized fill against a known target order (fast, used
for the large geometry groups whose orders follow from closed formulas) and
the deterministic textbook procedure with full Schreier generator
processing (used whenever the order is not known in advance, e.g. for
stabilizers discovered by backtracking).

Transversals are stored as Schreier vectors, so membership tests and
transporter reconstruction walk parent pointers instead of materializing
one permutation per orbit point.  Optionally every stored generator and
transversal step carries a word in the original generators; the factor
geometry groups need this so that elements found on the factor plane can
be lifted through the ring projection.
"""

from __future__ import annotations

import numpy as np


def compose(p, q):
    """(p compose q)(i) = p[q[i]]: apply q first, then p."""
    return p[q]


def inverse(p):
    inv = np.empty_like(p)
    inv[p] = np.arange(len(p), dtype=p.dtype)
    return inv


def identity(degree):
    return np.arange(degree, dtype=np.int32)


def _invert_word(word):
    return tuple(-w for w in reversed(word))


def evaluate_word(gens, word):
    """Product gen(w1) o gen(w2) o ... for a signed 1-based word over gens.

    Negative entries stand for inverse generators; the rightmost factor is
    applied first.  Evaluating a word over a DIFFERENT generator list of the
    same length realizes the same element under a homomorphism that matches
    generators up, which is how factor-plane elements are lifted.
    """
    if not word:
        raise ValueError("empty word has no degree; pass the identity explicitly")
    degree = len(gens[0])
    p = identity(degree)
    for s in reversed(word):
        g = gens[s - 1] if s > 0 else inverse(gens[-s - 1])
        p = compose(g, p)
    return p


class _Level:
    __slots__ = ("base", "parent", "via", "orbit")

    def __init__(self, base, degree):
        self.base = base
        self.parent = np.full(degree, -1, dtype=np.int32)
        self.via = np.zeros(degree, dtype=np.int32)
        self.parent[base] = base
        self.orbit = [base]


class PermGroup:
    """A permutation group with a stabilizer chain."""

    def __init__(self, degree, gens, known_order=None, base_hint=None,
                 track_words=False, name=""):
        self.degree = degree
        self.name = name
        self.track_words = track_words
        self.gens = [np.asarray(g, dtype=np.int32) for g in gens]
        self._ptstab_cache = {}
        self._orbit_cache = None
        self._build(known_order, base_hint or [])

    # -- chain construction ---------------------------------------------

    def _build(self, known_order, base_hint):
        degree = self.degree
        # chain generator pool: original gens first, residues appended
        self._all_gens = list(self.gens)
        self._all_words = [(i + 1,) for i in range(len(self.gens))] if self.track_words else None
        self._levels = []
        self._level_gens = []  # per level: indices into _all_gens of gens fixing earlier bases
        self._base_hint = list(base_hint)

        # seed levels with the leading hint points that some generator moves,
        # so prescribed bases (stabilizer chains, informative backtrack bases)
        # actually end up in front
        seeded = 0
        for h in self._base_hint:
            if seeded >= 16:
                break
            if any(g[h] != h for g in self._all_gens):
                self._levels.append(_Level(h, degree))
                self._level_gens.append([])
                seeded += 1

        for idx in range(len(self._all_gens)):
            self._insert(idx)
        if known_order is not None and self.order() == known_order:
            return
        if known_order is not None:
            self._randomized_fill(known_order)
        else:
            self._deterministic_close()

    def _gen(self, signed):
        g = self._all_gens[abs(signed) - 1]
        return g if signed > 0 else inverse(g)

    def _new_level(self, residue):
        moved = None
        for h in self._base_hint:
            if residue[h] != h:
                moved = h
                break
        if moved is None:
            moved = int(np.nonzero(residue != np.arange(self.degree))[0][0])
        self._levels.append(_Level(moved, self.degree))
        self._level_gens.append([])

    def _insert(self, gen_idx, start_level=0):
        """Place generator gen_idx at its level and refresh shallower orbits."""
        g = self._all_gens[gen_idx]
        level = start_level
        while level < len(self._levels):
            if g[self._levels[level].base] != self._levels[level].base:
                break
            level += 1
        else:
            if np.array_equal(g, np.arange(self.degree)):
                return
            self._new_level(g)
        self._level_gens[level].append(gen_idx)
        for i in range(level + 1):
            self._rebuild_orbit(i)

    def _level_generator_indices(self, i):
        out = []
        for j in range(i, len(self._levels)):
            out.extend(self._level_gens[j])
        return out

    def _rebuild_orbit(self, i):
        lev = _Level(self._levels[i].base, self.degree)
        gidx = self._level_generator_indices(i)
        gens = [(k + 1, self._all_gens[k]) for k in gidx]
        gens += [(-(k + 1), inverse(self._all_gens[k])) for k in gidx]
        frontier = np.array([lev.base], dtype=np.int32)
        while len(frontier):
            nxt = []
            for signed, g in gens:
                dsts = g[frontier]
                fresh = lev.parent[dsts] < 0
                if not fresh.any():
                    continue
                dst_new, first = np.unique(dsts[fresh], return_index=True)
                src_new = frontier[fresh][first]
                still = lev.parent[dst_new] < 0
                dst_new, src_new = dst_new[still], src_new[still]
                lev.parent[dst_new] = src_new
                lev.via[dst_new] = signed
                nxt.append(dst_new)
            frontier = np.concatenate(nxt) if nxt else np.empty(0, dtype=np.int32)
        lev.orbit = np.nonzero(lev.parent >= 0)[0].tolist()
        self._levels[i] = lev

    def _strip(self, p, word=None, start=0):
        """Sift p through the chain; returns (residue, residue_word, stuck_level)."""
        for i in range(start, len(self._levels)):
            lev = self._levels[i]
            pt = int(p[lev.base])
            if lev.parent[pt] < 0:
                return p, word, i
            while pt != lev.base:
                signed = int(lev.via[pt])
                p = compose(self._gen(-signed), p)
                if word is not None:
                    word = _invert_word(self._signed_word(signed)) + tuple(word)
                pt = int(p[lev.base])
        return p, word, len(self._levels)

    def _chain_order(self):
        n = 1
        for lev in self._levels:
            n *= len(lev.orbit)
        return n

    def order(self):
        return self._chain_order()

    def _randomized_fill(self, target):
        rng = np.random.default_rng(0x5EED)
        if not self.gens:
            if target != 1:
                raise ValueError("no generators but nontrivial target order")
            return
        word_pool = list(range(1, len(self.gens) + 1)) + list(range(-len(self.gens), 0))
        attempts = 0
        while self._chain_order() != target:
            attempts += 1
            if attempts > 5000:
                raise RuntimeError("stabilizer chain failed to reach the expected order")
            length = int(rng.integers(3, 15))
            picks = rng.choice(len(word_pool), size=length)
            p = identity(self.degree)
            word = ()
            for k in picks:
                signed = word_pool[int(k)]
                p = compose(self._gen(signed), p)
                if self.track_words:
                    word = self._signed_word(signed) + word
            residue, rword, level = self._strip(p, word if self.track_words else None)
            if np.array_equal(residue, np.arange(self.degree)):
                continue
            self._all_gens.append(residue)
            if self.track_words:
                self._all_words.append(tuple(rword))
            self._insert(len(self._all_gens) - 1, start_level=level)
            if self._chain_order() > target:
                raise RuntimeError("stabilizer chain overshot the expected order")

    def _deterministic_close(self):
        """Full Schreier generator processing until the chain is verified."""
        i = len(self._levels) - 1
        while i >= 0:
            if self._verify_level(i):
                i -= 1
            else:
                i = len(self._levels) - 1

    def _verify_level(self, i):
        lev = self._levels[i]
        gidx = self._level_generator_indices(i)
        for pt in list(lev.orbit):
            u, uw = self._transversal(i, pt)
            for k in gidx:
                g = self._all_gens[k]
                img = int(g[pt])
                v, vw = self._transversal(i, img)
                schreier = compose(inverse(v), compose(g, u))
                if np.array_equal(schreier, np.arange(self.degree)):
                    continue
                sword = None
                if self.track_words:
                    sword = _invert_word(vw) + self._all_words[k] + uw
                residue, rword, level = self._strip(schreier, sword, start=i + 1)
                if np.array_equal(residue, np.arange(self.degree)):
                    continue
                self._all_gens.append(residue)
                if self.track_words:
                    self._all_words.append(tuple(rword))
                self._insert(len(self._all_gens) - 1, start_level=level)
                return False
        return True

    # -- queries ----------------------------------------------------------

    def _transversal(self, i, pt):
        """Permutation u with u(base_i) = pt, plus its word."""
        lev = self._levels[i]
        if lev.parent[pt] < 0:
            raise ValueError("point outside the orbit")
        path = []
        cur = pt
        while cur != lev.base:
            path.append(int(lev.via[cur]))
            cur = int(lev.parent[cur])
        p = identity(self.degree)
        word = ()
        for signed in reversed(path):
            p = compose(self._gen(signed), p)
            if self.track_words:
                word = self._signed_word(signed) + word
        return p, (word if self.track_words else None)

    def _signed_word(self, signed):
        base = self._all_words[abs(signed) - 1]
        return base if signed > 0 else _invert_word(base)

    def contains(self, p):
        residue, _, _ = self._strip(np.asarray(p, dtype=np.int32))
        return bool(np.array_equal(residue, np.arange(self.degree)))

    def express(self, p):
        """Word in the original generators evaluating to p (needs track_words)."""
        if not self.track_words:
            raise ValueError("group was built without word tracking")
        p = np.asarray(p, dtype=np.int32)
        word = ()
        for i in range(len(self._levels)):
            lev = self._levels[i]
            pt = int(p[lev.base])
            if lev.parent[pt] < 0:
                raise ValueError("permutation is not a group element")
            u, uw = self._transversal(i, pt)
            word = word + uw
            p = compose(inverse(u), p)
        if not np.array_equal(p, np.arange(self.degree)):
            raise ValueError("permutation is not a group element")
        return word

    def base_points(self):
        return [lev.base for lev in self._levels]

    def random_element(self, rng):
        """Uniformly random element via the chain transversals."""
        p = identity(self.degree)
        for i, lev in enumerate(self._levels):
            pt = lev.orbit[int(rng.integers(0, len(lev.orbit)))]
            u, _ = self._transversal(i, pt)
            p = compose(p, u)
        return p

    def iterate_elements(self):
        """Yield every group element; intended for small oracle groups only."""

        def rec(i, p):
            if i == len(self._levels):
                yield p
                return
            for pt in self._levels[i].orbit:
                u, _ = self._transversal(i, pt)
                yield from rec(i + 1, compose(p, u))

        yield from rec(0, identity(self.degree))

    def stored_generators(self):
        return list(self._all_gens)

    # -- orbits and transporters ------------------------------------------

    def orbit_data(self):
        """Orbit partition of the full domain with parent pointers to orbit minima."""
        if self._orbit_cache is not None:
            return self._orbit_cache
        degree = self.degree
        root = np.full(degree, -1, dtype=np.int32)
        parent = np.full(degree, -1, dtype=np.int32)
        via = np.zeros(degree, dtype=np.int32)
        gens = [(k + 1, self._all_gens[k]) for k in range(len(self._all_gens))]
        gens += [(-(k + 1), inverse(self._all_gens[k])) for k in range(len(self._all_gens))]
        for start in range(degree):
            if root[start] >= 0:
                continue
            root[start] = start
            parent[start] = start
            frontier = np.array([start], dtype=np.int32)
            while len(frontier):
                nxt = []
                for signed, g in gens:
                    dsts = g[frontier]
                    fresh = root[dsts] < 0
                    if not fresh.any():
                        continue
                    dst_new, first = np.unique(dsts[fresh], return_index=True)
                    src_new = frontier[fresh][first]
                    still = root[dst_new] < 0
                    dst_new, src_new = dst_new[still], src_new[still]
                    root[dst_new] = start
                    parent[dst_new] = src_new
                    via[dst_new] = signed
                    nxt.append(dst_new)
                frontier = np.concatenate(nxt) if nxt else np.empty(0, dtype=np.int32)
        self._orbit_cache = (root, parent, via)
        return self._orbit_cache

    def transporter_to_root(self, pt):
        """Permutation u with u(pt) = min of pt's orbit."""
        root, parent, via = self.orbit_data()
        path = []
        cur = int(pt)
        while parent[cur] != cur:
            path.append(int(via[cur]))
            cur = int(parent[cur])
        p = identity(self.degree)
        # walking pt -> root applies the inverses of the BFS steps
        for signed in path:
            p = compose(inverse(self._gen(signed)), p)
        return p

    def point_stabilizer(self, pt):
        """Stabilizer of a point, as a PermGroup (cached)."""
        pt = int(pt)
        if pt in self._ptstab_cache:
            return self._ptstab_cache[pt]
        if self._levels and self._levels[0].base == pt:
            sub = self._suffix_group(1)
        else:
            rebased = PermGroup(self.degree, self.stored_generators(),
                                known_order=self.order(), base_hint=[pt],
                                name=f"{self.name}_rebase")
            if rebased._levels and rebased._levels[0].base == pt:
                sub = rebased._suffix_group(1)
            else:
                sub = rebased  # pt fixed by the whole group
        self._ptstab_cache[pt] = sub
        return sub

    def _suffix_group(self, start):
        gidx = self._level_generator_indices(start)
        gens = [self._all_gens[k] for k in gidx]
        sub = PermGroup(self.degree, gens,
                        known_order=self._suffix_order(start),
                        base_hint=[lev.base for lev in self._levels[start:]],
                        name=f"{self.name}_stab")
        return sub

    def _suffix_order(self, start):
        n = 1
        for lev in self._levels[start:]:
            n *= len(lev.orbit)
        return n

    # -- minimal images -----------------------------------------------------

    def min_image(self, pts, stop_if_below=None):
        """Lexicographically least sorted image of the multiset pts.

        Returns (tuple image, transporter perm).  When stop_if_below is
        given, returns (None, None) as soon as some image is provably below
        that bound; this is the fast path for canonicity tests.
        """
        pts = sorted(int(x) for x in pts)
        n = len(pts)
        if n == 0:
            return (), identity(self.degree)
        bound = list(stop_if_below) if stop_if_below is not None else None
        best = {"seq": None, "perm": None, "abort": False}

        def finish(acc, perm):
            if best["seq"] is None or acc < best["seq"]:
                best["seq"] = list(acc)
                best["perm"] = perm
            if bound is not None and acc < bound:
                best["abort"] = True

        def rec(group, rem, acc, perm):
            if best["abort"]:
                return
            depth = len(acc)
            if not rem:
                finish(acc, perm)
                return
            if group.order() == 1:
                finish(acc + sorted(rem), perm)
                return
            root, _, _ = group.orbit_data()
            m = min(int(root[s]) for s in set(rem))
            if bound is not None:
                cand = acc + [m]
                if cand < bound[: depth + 1]:
                    best["abort"] = True
                    return
                if cand > bound[: depth + 1]:
                    return
            if best["seq"] is not None:
                ref = best["seq"]
                if acc + [m] > ref[: depth + 1]:
                    return
            stab = None
            for s in sorted(set(rem)):
                if int(root[s]) != m:
                    continue
                u = group.transporter_to_root(s)
                rem2 = sorted(int(u[x]) for x in _minus_one(rem, s))
                if stab is None:
                    stab = group.point_stabilizer(m)
                rec(stab, rem2, acc + [m], compose(u, perm))
                if best["abort"]:
                    return

        rec(self, pts, [], identity(self.degree))
        if best["abort"]:
            return None, None
        return tuple(best["seq"]), best["perm"]

    def is_minimal(self, pts):
        """True iff the sorted multiset pts is the least element of its orbit."""
        pts_sorted = sorted(int(x) for x in pts)
        seq, _ = self.min_image(pts_sorted, stop_if_below=pts_sorted)
        if seq is None:
            return False
        return list(seq) == pts_sorted

    def min_labeling(self, vals, stop_if_below=None):
        """Least relabeling of vals over the group, position by position.

        Returns (w, g) where w = tuple(min over h of vals o h^{-1}) in the
        pointwise lexicographic order on positions 0, 1, 2, ... and g is a
        witness, i.e. w[g[i]] = vals[i] for all i.  With stop_if_below, the
        search returns (None, None) as soon as some relabeling is provably
        below that bound and never explores branches above it; this is the
        fast path for testing whether vals is its own least relabeling.
        """
        vals0 = np.asarray(vals)
        n = self.degree
        bound = list(stop_if_below) if stop_if_below is not None else None
        best = {"w": None, "perm": None, "abort": False}

        def finish(w, perm):
            if best["w"] is None or w < best["w"]:
                best["w"] = list(w)
                best["perm"] = perm
            if bound is not None and w < bound:
                best["abort"] = True

        def rec(group, cur, pos, perm):
            # cur = vals transported so far; positions < pos already minimal
            if best["abort"]:
                return
            if pos == n or group.order() == 1:
                finish(list(cur[:pos]) + list(cur[pos:]), perm)
                return
            if best["w"] is not None:
                if list(cur[:pos]) > best["w"][:pos]:
                    return
            root, _, _ = group.orbit_data()
            r = int(root[pos])
            cand = [s for s in range(n) if root[s] == r]
            m = min(int(cur[s]) for s in cand)
            if bound is not None:
                prefix = list(cur[:pos]) + [m]
                if prefix < bound[: pos + 1]:
                    best["abort"] = True
                    return
                if prefix > bound[: pos + 1]:
                    return
            if best["w"] is not None:
                prefix = list(cur[:pos]) + [m]
                if prefix > best["w"][: pos + 1]:
                    return
            stab = None
            u_pos = group.transporter_to_root(pos)
            for s in cand:
                if int(cur[s]) != m:
                    continue
                u_s = group.transporter_to_root(s)
                # u maps s to pos within the group
                u = compose(inverse(u_pos), u_s)
                cur2 = cur[inverse(u)]
                if stab is None:
                    stab = group.point_stabilizer(pos)
                rec(stab, cur2, pos + 1, compose(u, perm))
                if best["abort"]:
                    return

        rec(self, vals0, 0, identity(n))
        if best["abort"]:
            return None, None
        return tuple(int(x) for x in best["w"]), best["perm"]

    def set_stabilizer_order(self, pts):
        """Order of the setwise stabilizer of the distinct points pts.

        Runs the same backtrack as min_image but keeps every witness branch
        that reaches the least image.  Witnesses with a common choice chain
        form one coset of the chain's pointwise stabilizer, and distinct
        chains give disjoint cosets, so the stabilizer order is the leaf
        count times the pointwise stabilizer order reached at the leaves.
        """
        pts = sorted(int(x) for x in pts)
        if len(set(pts)) != len(pts):
            raise ValueError("points must be distinct")
        if not pts:
            return self.order()
        state = {"best": None, "count": 0, "leaf_order": 1}

        def leaf(seq, group_order):
            seq = tuple(seq)
            if state["best"] is None or seq < state["best"]:
                state["best"] = seq
                state["count"] = 0
                state["leaf_order"] = group_order
            if seq == state["best"]:
                assert group_order == state["leaf_order"]
                state["count"] += 1

        def rec(group, rem, acc):
            depth = len(acc)
            if not rem:
                leaf(acc, group.order())
                return
            if group.order() == 1:
                leaf(acc + sorted(rem), 1)
                return
            root, _, _ = group.orbit_data()
            m = min(int(root[s]) for s in rem)
            best = state["best"]
            if best is not None and tuple(acc + [m]) > best[: depth + 1]:
                return
            stab = None
            for s in sorted(rem):
                if int(root[s]) != m:
                    continue
                u = group.transporter_to_root(s)
                rem2 = sorted(int(u[x]) for x in _minus_one(rem, s))
                if stab is None:
                    stab = group.point_stabilizer(m)
                rec(stab, rem2, acc + [m])

        rec(self, pts, [])
        return state["count"] * state["leaf_order"]

    def set_stabilizer(self, pts):
        """Setwise stabilizer of the distinct points pts as a group.

        Same backtrack as set_stabilizer_order; the witnesses reaching the
        least image, pulled back through the first of them, together with
        the pulled-back pointwise stabilizer of that image, generate the
        stabilizer, and the coset count fixes its order in advance.
        """
        pts = sorted(int(x) for x in pts)
        if len(set(pts)) != len(pts):
            raise ValueError("points must be distinct")
        if not pts:
            return self
        state = {"best": None, "wits": [], "leaf": None}

        def leaf(seq, perm, group):
            seq = tuple(seq)
            if state["best"] is None or seq < state["best"]:
                state["best"] = seq
                state["wits"] = []
                state["leaf"] = group
            if seq == state["best"]:
                state["wits"].append(perm)

        def rec(group, rem, acc, perm):
            depth = len(acc)
            if not rem:
                leaf(acc, perm, group)
                return
            if group.order() == 1:
                leaf(acc + sorted(rem), perm, group)
                return
            root, _, _ = group.orbit_data()
            m = min(int(root[s]) for s in rem)
            best = state["best"]
            if best is not None and tuple(acc + [m]) > best[: depth + 1]:
                return
            stab = None
            for s in sorted(rem):
                if int(root[s]) != m:
                    continue
                u = group.transporter_to_root(s)
                rem2 = sorted(int(u[x]) for x in _minus_one(rem, s))
                if stab is None:
                    stab = group.point_stabilizer(m)
                rec(stab, rem2, acc + [m], compose(u, perm))

        rec(self, pts, [], identity(self.degree))
        wits = state["wits"]
        leaf_group = state["leaf"]
        order = len(wits) * leaf_group.order()
        w0 = wits[0]
        w0_inv = inverse(w0)
        gens = [compose(w0_inv, w) for w in wits[1:]]
        gens.extend(compose(w0_inv, compose(g, w0)) for g in leaf_group.gens)
        gens = [g for g in gens if not np.array_equal(g, np.arange(self.degree))]
        return PermGroup(self.degree, gens, known_order=order,
                         name=f"setstab({self.name})")

    # -- multiset stabilizers -------------------------------------------------

    def multiset_stabilizer(self, vals):
        """Subgroup preserving the labeling vals (vals[g(i)] == vals[i])."""
        vals = np.asarray(vals)
        if len(set(vals.tolist())) == 1:
            result = PermGroup(self.degree, self.gens, known_order=self.order(),
                               name=f"stab({self.name})")
            if self.track_words:
                result.found_words = [(i + 1,) for i in range(len(self.gens))]
            return result
        # informative base: rarest labels first
        counts = {v: int((vals == v).sum()) for v in set(vals.tolist())}
        hint = sorted(range(self.degree), key=lambda i: (counts[int(vals[i])], int(vals[i]), i))
        src = self.gens if self.track_words else self.stored_generators()
        G = PermGroup(self.degree, src, known_order=self.order(),
                      base_hint=hint, track_words=self.track_words, name=f"{self.name}_mbase")
        found = []
        found_words = []
        sub = None
        ident = np.arange(G.degree)
        levels = G._levels
        nlev = len(levels)

        def dfs(i, p, word):
            # first element of the stabilizer (in DFS order) not yet in sub
            if i == nlev:
                if not np.array_equal(p, ident) and np.array_equal(vals[p], vals):
                    if sub is None or not sub.contains(p):
                        return p, word
                return None
            lev = levels[i]
            for pt in sorted(lev.orbit):
                img = int(p[pt])
                if vals[img] != vals[lev.base]:
                    continue
                if i == 0 and sub is not None:
                    r, _, _ = sub.orbit_data()
                    if int(r[img]) < img:
                        continue
                u, uw = G._transversal(i, pt)
                got = dfs(i + 1, compose(p, u), (word + uw) if word is not None else None)
                if got is not None:
                    return got
            return None

        # restart after every new generator so the orbit pruning stays sound
        while True:
            got = dfs(0, identity(G.degree), () if self.track_words else None)
            if got is None:
                break
            p, w = got
            found.append(p)
            if self.track_words:
                found_words.append(w)
            sub = PermGroup(self.degree, found, name=f"{self.name}_stabres")

        order = sub.order() if sub is not None else 1
        result = PermGroup(self.degree, found, known_order=order, name=f"stab({self.name})")
        if self.track_words:
            result.found_words = found_words
        return result


def _minus_one(seq, value):
    out = list(seq)
    out.remove(value)
    return out
