"""Finite fields and finite chain rings of composition length two.

Four kinds of coefficient ring are supported: finite fields F_q, integer
residue rings Z_{p^2}, truncated polynomial rings S_q = F_q[X]/(X^2) and
Galois rings GR(q^2, p^2).  The last three share the same coarse shape:
a local ring with q^2 elements whose radical has q elements and whose
residue field is F_q.  Fields are the degenerate case with trivial
radical; they double as the coefficient rings of the factor geometries.

Every element is encoded as an integer in [0, #R), with 0 and 1 encoding
the additive and multiplicative identities.  All arithmetic runs through
dense lookup tables so that batched geometry code can use numpy fancy
indexing directly on encoded values.
"""

from __future__ import annotations

import re

import numpy as np

INTEGER_RESIDUE = "integer_residue"
TRUNCATED_POLY = "truncated_poly"
GALOIS_RING = "galois_ring"
FIELD = "field"

_RING_KINDS = (INTEGER_RESIDUE, TRUNCATED_POLY, GALOIS_RING, FIELD)


def _is_prime(n):
    """Trial-division primality check, adequate for single-digit characteristics."""
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


# ---------------------------------------------------------------------------
# polynomial helpers over Z_m (coefficient lists, lowest degree first)


def _poly_trim(c):
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
    return c


def _poly_add(a, b, m):
    n = max(len(a), len(b))
    return _poly_trim([((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)) % m for i in range(n)])


def _poly_mul(a, b, m):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] = (out[i + j] + ai * bj) % m
    return _poly_trim(out)


def _poly_mod(a, f, m):
    """Remainder of a modulo the monic polynomial f, coefficients mod m."""
    a = list(a)
    df = len(f) - 1
    while len(a) - 1 >= df and any(a):
        a = _poly_trim(a)
        if len(a) - 1 < df:
            break
        lead = a[-1]
        shift = len(a) - 1 - df
        for i, fi in enumerate(f):
            a[shift + i] = (a[shift + i] - lead * fi) % m
        a = _poly_trim(a)
    return _poly_trim(a)


def _poly_from_int(code, p, r):
    return [(code // p**i) % p for i in range(r)]


def _poly_to_int(c, p):
    return sum(int(ci) % p * p**i for i, ci in enumerate(c))


def _irreducible_poly(p, r):
    """Monic irreducible of degree r over F_p with the least integer encoding.

    Polynomials are encoded as sum(c_i p^i) over the non-leading
    coefficients, so the search order (and hence the chosen modulus) is
    deterministic.
    """
    if r == 1:
        return [0, 1]
    for code in range(p**r):
        f = _poly_from_int(code, p, r) + [1]
        if _poly_is_irreducible(f, p):
            return f
    raise ValueError(f"no irreducible polynomial of degree {r} over F_{p}")


def _poly_is_irreducible(f, p):
    """Check irreducibility by trial division over all monic divisors of low degree."""
    r = len(f) - 1
    for d in range(1, r // 2 + 1):
        for code in range(p**d):
            g = _poly_from_int(code, p, d) + [1]
            if _poly_mod(f, g, p) == [0]:
                return False
    return True


# ---------------------------------------------------------------------------


class ChainRing:
    """A finite field or finite chain ring of composition length two.

    Attributes of interest:
      size          number of elements (#R = q^m)
      p, r, q, m    characteristic data: q = p^r, m in {1, 2}
      add_table, mul_table, neg_table, inv_table   dense int16 tables
      is_unit       boolean mask over encodings
      radical       sorted encodings of the non-units
      phi           projection onto the residue field (encoded values)
      residue_field ChainRing of kind FIELD (self when m == 1)
      automorphisms list of ring automorphisms as permutations of encodings
    """

    def __init__(self, kind, p, r):
        if kind not in _RING_KINDS:
            raise ValueError(f"unknown ring kind {kind!r}")
        if not _is_prime(p):
            raise ValueError(f"characteristic base {p} is not prime")
        if r < 1:
            raise ValueError("extension degree must be positive")
        if kind == INTEGER_RESIDUE and r != 1:
            raise ValueError("integer residue rings Z_{p^2} require r = 1")
        self.kind = kind
        self.p = p
        self.r = r
        self.q = p**r
        self.m = 1 if kind == FIELD else 2
        self.size = self.q**self.m
        self._build_tables()
        self._build_structure()

    # -- construction -------------------------------------------------

    def _build_tables(self):
        size = self.size
        if size > 65535:
            raise ValueError(f"ring with {size} elements exceeds the table-based limit")
        p, r, q = self.p, self.r, self.q
        add = np.zeros((size, size), dtype=np.int16)
        mul = np.zeros((size, size), dtype=np.int16)

        if self.kind == INTEGER_RESIDUE:
            v = np.arange(size, dtype=np.int64)
            add[:, :] = (v[:, None] + v[None, :]) % size
            mul[:, :] = (v[:, None] * v[None, :]) % size
        elif self.kind == FIELD:
            self.modulus = _irreducible_poly(p, r)
            polys = [_poly_from_int(c, p, r) for c in range(size)]
            for a in range(size):
                for b in range(a, size):
                    s = _poly_to_int(_poly_add(polys[a], polys[b], p), p)
                    m_ = _poly_to_int(_poly_mod(_poly_mul(polys[a], polys[b], p), self.modulus, p), p)
                    add[a, b] = add[b, a] = s
                    mul[a, b] = mul[b, a] = m_
        elif self.kind == TRUNCATED_POLY:
            base = ChainRing(FIELD, p, r) if r > 1 else None
            if base is None:
                fa = np.arange(q, dtype=np.int64)
                fadd = (fa[:, None] + fa[None, :]) % q
                fmul = (fa[:, None] * fa[None, :]) % q
            else:
                fadd, fmul = base.add_table, base.mul_table
            self._coeff_field_tables = (np.asarray(fadd), np.asarray(fmul))
            a0 = np.arange(size) % q
            a1 = np.arange(size) // q
            fadd = np.asarray(fadd)
            fmul = np.asarray(fmul)
            # (a0 + a1 X)(b0 + b1 X) = a0 b0 + (a0 b1 + a1 b0) X, X^2 = 0
            add[:, :] = fadd[a0[:, None], a0[None, :]] + q * fadd[a1[:, None], a1[None, :]]
            cross = fadd[fmul[a0[:, None], a1[None, :]], fmul[a1[:, None], a0[None, :]]]
            mul[:, :] = fmul[a0[:, None], a0[None, :]] + q * cross
        elif self.kind == GALOIS_RING:
            p2 = p * p
            fbar = _irreducible_poly(p, r)
            self.modulus = [c % p2 for c in fbar]  # lift with the same coefficients
            polys = [[(c // p2**i) % p2 for i in range(r)] for c in range(size)]

            def enc(poly):
                return sum(int(ci) % p2 * p2**i for i, ci in enumerate(poly))

            for a in range(size):
                for b in range(a, size):
                    s = enc(_poly_add(polys[a], polys[b], p2))
                    m_ = enc(_poly_mod(_poly_mul(polys[a], polys[b], p2), self.modulus, p2))
                    add[a, b] = add[b, a] = s
                    mul[a, b] = mul[b, a] = m_

        self.add_table = add
        self.mul_table = mul
        self.neg_table = np.array([int(np.where(add[a] == 0)[0][0]) for a in range(size)], dtype=np.int16)
        inv = np.full(size, -1, dtype=np.int16)
        for a in range(size):
            hits = np.where(mul[a] == 1)[0]
            if len(hits):
                inv[a] = hits[0]
        self.inv_table = inv
        self.is_unit = inv >= 0
        self.sub_table = add[:, self.neg_table]

    def _build_structure(self):
        units = np.where(self.is_unit)[0]
        rad = np.where(~self.is_unit)[0]
        self.units = units
        self.radical = rad
        expected_rad = 1 if self.m == 1 else self.q
        if len(rad) != expected_rad:
            raise AssertionError("radical size does not match a chain ring of length <= 2")

        # residue field and the projection phi
        if self.kind == FIELD:
            self.residue_field = self
            self.phi = np.arange(self.size, dtype=np.int16)
        else:
            self.residue_field = construct_ring(FIELD, self.p, self.r)
            self.phi = self._compute_phi()
        # smallest preimage of each residue class, used to lift factor data
        section = np.full(self.q, -1, dtype=np.int16)
        for a in range(self.size):
            f = self.phi[a]
            if section[f] < 0:
                section[f] = a
        self.phi_section = section

        # additive generating set, smallest-first greedy
        self.additive_generators = self._additive_generators()
        self.unit_generators = self._unit_generators()
        self.automorphisms = compute_automorphisms(self)

    def _compute_phi(self):
        if self.kind == INTEGER_RESIDUE:
            return (np.arange(self.size) % self.p).astype(np.int16)
        if self.kind == TRUNCATED_POLY:
            return (np.arange(self.size) % self.q).astype(np.int16)
        # Galois ring: reduce every coefficient mod p; the residue field uses
        # the reduction of the same defining polynomial.
        p2 = self.p * self.p
        out = np.zeros(self.size, dtype=np.int16)
        for a in range(self.size):
            coeffs = [((a // p2**i) % p2) % self.p for i in range(self.r)]
            out[a] = _poly_to_int(coeffs, self.p)
        return out

    def _additive_generators(self):
        gens = []
        covered = {0}
        while len(covered) < self.size:
            g = min(a for a in range(self.size) if a not in covered)
            gens.append(g)
            frontier = list(covered)
            for base in frontier:
                cur = base
                for _ in range(self.size):
                    cur = int(self.add_table[cur, g])
                    covered.add(cur)
            # re-close under addition of all chosen generators
            changed = True
            while changed:
                changed = False
                for x in list(covered):
                    for y in gens:
                        z = int(self.add_table[x, y])
                        if z not in covered:
                            covered.add(z)
                            changed = True
        return gens

    def _unit_generators(self):
        target = set(int(u) for u in self.units)
        gens = []
        covered = {1}
        while covered != target:
            g = min(u for u in target if u not in covered)
            gens.append(g)
            changed = True
            while changed:
                changed = False
                for x in list(covered):
                    z = int(self.mul_table[x, g])
                    if z not in covered:
                        covered.add(z)
                        changed = True
                    for y in gens:
                        z = int(self.mul_table[x, y])
                        if z not in covered:
                            covered.add(z)
                            changed = True
        return gens

    # -- scalar operations ---------------------------------------------

    def add(self, a, b):
        return int(self.add_table[a, b])

    def sub(self, a, b):
        return int(self.add_table[a, self.neg_table[b]])

    def mul(self, a, b):
        return int(self.mul_table[a, b])

    def neg(self, a):
        return int(self.neg_table[a])

    def inv(self, a):
        v = int(self.inv_table[a])
        if v < 0:
            raise ValueError(f"{a} is not a unit in {self.descriptor}")
        return v

    def unit(self, a):
        return bool(self.is_unit[a])

    @property
    def descriptor(self):
        if self.kind == INTEGER_RESIDUE:
            return f"z{self.size}"
        if self.kind == TRUNCATED_POLY:
            return f"s{self.q}"
        if self.kind == GALOIS_RING:
            return f"gr{self.size}"
        return f"f{self.q}"

    def element_str(self, a):
        """Human-readable form of an encoded element."""
        if self.kind in (INTEGER_RESIDUE, FIELD) and self.r == 1:
            return str(a)
        if self.kind == FIELD:
            return f"[{a}]"
        if self.kind == TRUNCATED_POLY:
            a0, a1 = a % self.q, a // self.q
            return f"{a0}+{a1}X" if a1 else str(a0)
        if self.kind == GALOIS_RING:
            p2 = self.p * self.p
            c = [(a // p2**i) % p2 for i in range(self.r)]
            return "+".join(f"{ci}X^{i}" if i else str(ci) for i, ci in enumerate(c) if ci or i == 0)
        return str(a)

    def __repr__(self):
        return f"ChainRing({self.descriptor})"

    def __eq__(self, other):
        return isinstance(other, ChainRing) and self.descriptor == other.descriptor

    def __hash__(self):
        return hash(self.descriptor)


def compute_automorphisms(ring):
    """All ring automorphisms of `ring`, found by brute force.

    The ring is generated by {0, 1, t} for the smallest suitable t, so an
    automorphism is pinned down by the image of t.  Each candidate image is
    extended through the additive/multiplicative closure and kept when the
    extension is a consistent bijection preserving both tables.
    """
    size = ring.size
    add, mul = ring.add_table, ring.mul_table
    t = _single_generator(ring)
    autos = []
    for s in range(size):
        perm = _extend_generator_image(ring, t, s)
        if perm is None:
            continue
        pa = perm[add]
        if not np.array_equal(pa, add[perm][:, perm]):
            continue
        if not np.array_equal(perm[mul], mul[perm][:, perm]):
            continue
        autos.append(perm.astype(np.int16))
    autos.sort(key=lambda x: tuple(x))
    # identity first
    autos.sort(key=lambda x: 0 if np.array_equal(x, np.arange(size)) else 1)
    return autos


def _single_generator(ring):
    for t in range(ring.size):
        seen = _ring_closure(ring, (0, 1, t))
        if len(seen) == ring.size:
            return t
    raise AssertionError("chain ring without a single generator over its prime ring")


def _ring_closure(ring, seeds):
    add, mul = ring.add_table, ring.mul_table
    seen = set(int(s) for s in seeds)
    frontier = list(seen)
    while frontier:
        new = []
        for x in frontier:
            for y in list(seen):
                for z in (int(add[x, y]), int(mul[x, y])):
                    if z not in seen:
                        seen.add(z)
                        new.append(z)
        frontier = new
    return seen


def _extend_generator_image(ring, t, s):
    add, mul = ring.add_table, ring.mul_table
    size = ring.size
    img = np.full(size, -1, dtype=np.int32)
    img[0] = 0
    img[1] = 1
    if img[t] >= 0 and img[t] != s:
        return None
    img[t] = s
    changed = True
    while changed:
        changed = False
        dom = np.where(img >= 0)[0]
        for x in dom:
            for y in dom:
                for table in (add, mul):
                    z = int(table[x, y])
                    w = int(table[img[x], img[y]])
                    if img[z] < 0:
                        img[z] = w
                        changed = True
                    elif img[z] != w:
                        return None
    if (img < 0).any():
        return None
    if len(set(img.tolist())) != size:
        return None
    return img


def construct_ring(kind, p, r=1):
    """Build (and memoize) the chain ring of the given kind and parameters."""
    key = (kind, p, r)
    if key not in _RING_CACHE:
        _RING_CACHE[key] = ChainRing(kind, p, r)
    return _RING_CACHE[key]


_RING_CACHE = {}


def ring_arith(ring, op, a, b=None):
    """Uniform dispatcher over the table-backed scalar operations."""
    if op == "add":
        return ring.add(a, b)
    if op == "sub":
        return ring.sub(a, b)
    if op == "mul":
        return ring.mul(a, b)
    if op == "neg":
        return ring.neg(a)
    if op == "inv":
        return ring.inv(a)
    raise ValueError(f"unknown ring operation {op!r}")


_DESCRIPTOR_RE = re.compile(r"^(z|s|gr|f)(\d+)$")


def parse_ring_descriptor(text):
    """Resolve descriptors like z25, s5, gr16 or f4 to a ring instance."""
    m = _DESCRIPTOR_RE.match(text.strip().lower())
    if not m:
        raise ValueError(f"cannot parse ring descriptor {text!r}")
    tag, num = m.group(1), int(m.group(2))

    def _prime_power(n):
        for p in range(2, n + 1):
            if _is_prime(p):
                r = 0
                v = n
                while v % p == 0:
                    v //= p
                    r += 1
                if v == 1:
                    return p, r
        raise ValueError(f"{n} is not a prime power")

    if tag == "z":
        root = int(round(num**0.5))
        if root * root != num or not _is_prime(root):
            raise ValueError(f"z-descriptor needs the square of a prime, got {num}")
        return construct_ring(INTEGER_RESIDUE, root, 1)
    if tag == "s":
        p, r = _prime_power(num)
        return construct_ring(TRUNCATED_POLY, p, r)
    if tag == "gr":
        root = int(round(num**0.5))
        if root * root != num:
            raise ValueError(f"gr-descriptor needs the square of a prime power, got {num}")
        p, r = _prime_power(root)
        return construct_ring(GALOIS_RING, p, r)
    p, r = _prime_power(num)
    return construct_ring(FIELD, p, r)
