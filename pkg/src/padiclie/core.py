"""Exact arithmetic on residues mod p^N and the subgroup machinery of
SL(2, Z/p^N).

Everything works at a fixed finite precision: a residue never carries more
than N base-p digits, and every operation states what it guarantees modulo
p^N.  Python integers are exact at any size, so the only precision limit is
the explicit one carried by :class:`Modulus`; mixed-modulus arithmetic is an
error, never a silent coercion.

All values are immutable after construction and all operations are pure, so
independent inputs can safely be processed in parallel.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import (
    ClosureBudgetExceeded,
    ModulusMismatch,
    NonUnit,
    PrecisionExceeded,
    UnsupportedPrime,
)

#: Matrix size.  The artifact is about SL(2) throughout; the ambient Lie
#: algebra sl(2) has dimension 3.
N0 = 2
AMBIENT_DIM = 3

DEFAULT_CLOSURE_CAP = int(os.environ.get("PADICLIE_CLOSURE_CAP", 1_000_000))
DEFAULT_ENUM_CAP = int(os.environ.get("PADICLIE_ENUM_CAP", 10_000_000))

Mat2 = tuple[tuple[int, int], tuple[int, int]]


def is_prime(m: int) -> bool:
    if m < 2:
        return False
    if m < 4:
        return True
    if m % 2 == 0:
        return False
    f = 3
    while f * f <= m:
        if m % f == 0:
            return False
        f += 2
    return True


def int_valuation(a: int, p: int, cap: int) -> int:
    """v_p(a) computed on the residue a mod p^cap, capped at ``cap``."""
    a %= p**cap
    if a == 0:
        return cap
    v = 0
    while a % p == 0:
        a //= p
        v += 1
    return v


@dataclass(frozen=True)
class Modulus:
    """The pair (p, N): residues live in Z/p^N.

    p = 2 is legal here; modules whose preconditions exclude it say so and
    reject it themselves.
    """

    p: int
    N: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.N < 1:
            raise ValueError(f"N = {self.N} must be >= 1")

    @cached_property
    def pN(self) -> int:
        return self.p**self.N

    @property
    def p_prime(self) -> int:
        """p' = p for odd p and 4 for p = 2 (the uniform-domain modulus)."""
        return self.p if self.p != 2 else 4

    @property
    def eps_p(self) -> int:
        """Congruence floor: 1 for odd p, 2 for p = 2."""
        return 1 if self.p != 2 else 2

    def reduce(self, m: int) -> "Modulus":
        if not 1 <= m <= self.N:
            raise PrecisionExceeded(f"cannot reduce precision {self.N} to {m}")
        return Modulus(self.p, m)

    def __repr__(self) -> str:
        return f"Modulus(p={self.p}, N={self.N})"


class Valuation(NamedTuple):
    """A p-adic valuation capped at the working precision.

    ``capped`` means the residue is indistinguishable from 0 at this
    precision; ``value`` then equals N and is only a lower bound.
    """

    value: int
    capped: bool

    def __int__(self) -> int:
        return self.value


@dataclass(frozen=True)
class PadicScalar:
    """A residue modulo p^N with its modulus carried explicitly."""

    residue: int
    modulus: Modulus

    def __post_init__(self):
        if not 0 <= self.residue < self.modulus.pN:
            raise ValueError(
                f"residue {self.residue} outside [0, {self.modulus.pN})"
            )

    @classmethod
    def of(cls, value: int, modulus: Modulus) -> "PadicScalar":
        return cls(value % modulus.pN, modulus)

    def _check(self, other: "PadicScalar") -> None:
        if self.modulus != other.modulus:
            raise ModulusMismatch(f"{self.modulus} vs {other.modulus}")

    def __add__(self, other: "PadicScalar") -> "PadicScalar":
        self._check(other)
        return PadicScalar((self.residue + other.residue) % self.modulus.pN, self.modulus)

    def __sub__(self, other: "PadicScalar") -> "PadicScalar":
        self._check(other)
        return PadicScalar((self.residue - other.residue) % self.modulus.pN, self.modulus)

    def __mul__(self, other: "PadicScalar") -> "PadicScalar":
        self._check(other)
        return PadicScalar((self.residue * other.residue) % self.modulus.pN, self.modulus)

    def __neg__(self) -> "PadicScalar":
        return PadicScalar((-self.residue) % self.modulus.pN, self.modulus)

    @property
    def is_unit(self) -> bool:
        return self.residue % self.modulus.p != 0

    def inverse(self) -> "PadicScalar":
        if not self.is_unit:
            raise NonUnit(f"{self.residue} is divisible by p = {self.modulus.p}")
        return PadicScalar(pow(self.residue, -1, self.modulus.pN), self.modulus)

    def valuation(self) -> Valuation:
        v = int_valuation(self.residue, self.modulus.p, self.modulus.N)
        return Valuation(v, v == self.modulus.N)


def valuation(a: PadicScalar) -> Valuation:
    """min(v_p(a), N); the capped flag marks 'indistinguishable from 0'."""
    return a.valuation()


@dataclass(frozen=True)
class MatP:
    """A square matrix over Z/p^N with all entries at one shared modulus."""

    rows: tuple[tuple[int, ...], ...]
    modulus: Modulus

    def __post_init__(self):
        n = len(self.rows)
        pN = self.modulus.pN
        for row in self.rows:
            if len(row) != n:
                raise ValueError("matrix must be square")
            for a in row:
                if not 0 <= a < pN:
                    raise ValueError(f"entry {a} outside [0, {pN})")

    # -- construction -----------------------------------------------------

    @classmethod
    def of(cls, rows: Sequence[Sequence[int]], modulus: Modulus) -> "MatP":
        pN = modulus.pN
        return cls(tuple(tuple(a % pN for a in row) for row in rows), modulus)

    @classmethod
    def identity(cls, modulus: Modulus, size: int = N0) -> "MatP":
        return cls.of([[1 if i == j else 0 for j in range(size)] for i in range(size)], modulus)

    @classmethod
    def zero(cls, modulus: Modulus, size: int = N0) -> "MatP":
        return cls.of([[0] * size for _ in range(size)], modulus)

    @classmethod
    def from_json(cls, obj: dict) -> "MatP":
        """Parse the shared matrix literal {"p":..,"N":..,"mat":[[..],[..]]}.

        JSON integers must already lie in [0, p^N); anything else is a
        config error, not something to normalize silently.
        """
        modulus = Modulus(int(obj["p"]), int(obj["N"]))
        rows = obj["mat"]
        pN = modulus.pN
        for row in rows:
            for a in row:
                if not isinstance(a, int) or not 0 <= a < pN:
                    raise ValueError(f"matrix literal entry {a!r} outside [0, {pN})")
        return cls(tuple(tuple(row) for row in rows), modulus)

    def to_json(self) -> dict:
        return {
            "p": self.modulus.p,
            "N": self.modulus.N,
            "mat": [list(row) for row in self.rows],
        }

    # -- structure --------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> PadicScalar:
        return PadicScalar(self.rows[i][j], self.modulus)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(a for row in self.rows for a in row)

    def _check(self, other: "MatP") -> None:
        if self.modulus != other.modulus:
            raise ModulusMismatch(f"{self.modulus} vs {other.modulus}")
        if self.size != other.size:
            raise ValueError("size mismatch")

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "MatP") -> "MatP":
        self._check(other)
        pN = self.modulus.pN
        return MatP(
            tuple(
                tuple((a + b) % pN for a, b in zip(r1, r2))
                for r1, r2 in zip(self.rows, other.rows)
            ),
            self.modulus,
        )

    def __sub__(self, other: "MatP") -> "MatP":
        self._check(other)
        pN = self.modulus.pN
        return MatP(
            tuple(
                tuple((a - b) % pN for a, b in zip(r1, r2))
                for r1, r2 in zip(self.rows, other.rows)
            ),
            self.modulus,
        )

    def __neg__(self) -> "MatP":
        pN = self.modulus.pN
        return MatP(tuple(tuple((-a) % pN for a in row) for row in self.rows), self.modulus)

    def __matmul__(self, other: "MatP") -> "MatP":
        self._check(other)
        pN = self.modulus.pN
        n = self.size
        if n == 2:
            (a, b), (c, d) = self.rows
            (e, f), (g, h) = other.rows
            return MatP(
                (
                    ((a * e + b * g) % pN, (a * f + b * h) % pN),
                    ((c * e + d * g) % pN, (c * f + d * h) % pN),
                ),
                self.modulus,
            )
        rows = tuple(
            tuple(sum(self.rows[i][k] * other.rows[k][j] for k in range(n)) % pN for j in range(n))
            for i in range(n)
        )
        return MatP(rows, self.modulus)

    def scale(self, t: int) -> "MatP":
        pN = self.modulus.pN
        return MatP(tuple(tuple((t * a) % pN for a in row) for row in self.rows), self.modulus)

    def power(self, k: int) -> "MatP":
        if k < 0:
            return mat_inverse(self).power(-k)
        result = MatP.identity(self.modulus, self.size)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def trace(self) -> int:
        return sum(self.rows[i][i] for i in range(self.size)) % self.modulus.pN

    def det(self) -> int:
        if self.size == 2:
            (a, b), (c, d) = self.rows
            return (a * d - b * c) % self.modulus.pN
        raise NotImplementedError("determinant only needed for 2x2 here")

    def reduce(self, m: int) -> "MatP":
        """The image modulo p^m, as a matrix at the smaller modulus."""
        sub = self.modulus.reduce(m)
        q = sub.pN
        return MatP(tuple(tuple(a % q for a in row) for row in self.rows), sub)

    def is_identity(self) -> bool:
        return self == MatP.identity(self.modulus, self.size)


def mat_inverse(g: MatP) -> MatP:
    """Exact two-sided inverse modulo p^N; requires v_p(det g) = 0."""
    d = g.det()
    if d % g.modulus.p == 0:
        raise NonUnit(f"det = {d} is divisible by p = {g.modulus.p}")
    dinv = pow(d, -1, g.modulus.pN)
    (a, b), (c, d2) = g.rows
    pN = g.modulus.pN
    return MatP(
        (
            ((d2 * dinv) % pN, (-b * dinv) % pN),
            ((-c * dinv) % pN, (a * dinv) % pN),
        ),
        g.modulus,
    )


def in_principal_congruence(g: MatP, m: int) -> bool:
    """Whether g is trivial modulo p^m, i.e. every entry of g - 1 has
    valuation >= m."""
    if m > g.modulus.N:
        raise PrecisionExceeded(f"m = {m} exceeds precision N = {g.modulus.N}")
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return True
    q = g.modulus.p**m
    for i, row in enumerate(g.rows):
        for j, a in enumerate(row):
            if (a - (1 if i == j else 0)) % q != 0:
                return False
    return True


def residually_unipotent(g: MatP) -> bool:
    """Whether g^p = 1 modulo p.

    For 2x2 matrices over F_p this holds exactly when (g - 1)^2 = 0 (the
    characteristic polynomial is then (t - 1)^2 and the p-th power of
    1 + nilpotent is trivial); the square-zero form is what is computed,
    and a test pins the equivalence against the literal power.
    """
    p = g.modulus.p
    (a, b), (c, d) = g.rows
    t = (a + d - 2) % p
    return (
        ((a - 1) * (a - 1) + b * c) % p == 0
        and (b * t) % p == 0
        and (c * t) % p == 0
        and ((d - 1) * (d - 1) + b * c) % p == 0
    )


def residually_unipotent_by_power(g: MatP) -> bool:
    """The literal definition g^p = 1 mod p (test oracle for the fast form)."""
    gp = g.reduce(1) if g.modulus.N > 1 else g
    return gp.power(g.modulus.p).is_identity()


def residually_nilpotent(x: MatP) -> bool:
    """Whether the reduction of x mod p is nilpotent (square zero for 2x2)."""
    p = x.modulus.p
    (a, b), (c, d) = x.rows
    return (
        (a * a + b * c) % p == 0
        and (b * (a + d)) % p == 0
        and (c * (a + d)) % p == 0
        and (d * d + b * c) % p == 0
    )


# ---------------------------------------------------------------------------
# Subgroup closures in SL(2, Z/q)
# ---------------------------------------------------------------------------

Tuple4 = tuple[int, int, int, int]


def _mat_to_tuple(g: MatP) -> Tuple4:
    (a, b), (c, d) = g.rows
    return (a, b, c, d)


class SubgroupClosure:
    """The full element set of the subgroup generated by finitely many
    elements of SL(2, Z/q), computed by breadth-first multiplication.

    In a finite group the semigroup generated by a set equals the subgroup
    it generates (inverses are positive powers), so right-multiplying by
    generators until stabilization is complete.  Elements are stored as
    int64 codes when q**4 fits, otherwise as plain tuples.
    """

    def __init__(self, q: int, codes: np.ndarray | None, elements: frozenset[Tuple4] | None):
        self.q = q
        self._codes = codes  # sorted int64 array, or None
        self._elements = elements  # frozenset fallback, or None

    @property
    def order(self) -> int:
        return len(self._codes) if self._codes is not None else len(self._elements)

    def __len__(self) -> int:
        return self.order

    def contains_tuple(self, t: Tuple4) -> bool:
        if self._codes is not None:
            code = ((t[0] * self.q + t[1]) * self.q + t[2]) * self.q + t[3]
            i = int(np.searchsorted(self._codes, code))
            return i < len(self._codes) and int(self._codes[i]) == code
        return t in self._elements

    def contains(self, g: MatP) -> bool:
        if g.modulus.pN != self.q:
            raise ModulusMismatch(f"element lives mod {g.modulus.pN}, closure mod {self.q}")
        return self.contains_tuple(_mat_to_tuple(g))

    def iter_tuples(self) -> Iterator[Tuple4]:
        if self._codes is not None:
            q = self.q
            for code in self._codes.tolist():
                d = code % q
                code //= q
                c = code % q
                code //= q
                b = code % q
                a = code // q
                yield (a, b, c, d)
        else:
            yield from sorted(self._elements)


def _closure_numpy(q: int, gens: list[Tuple4], cap: int) -> np.ndarray:
    def encode(cols):
        a, b, c, d = cols
        return ((a * q + b) * q + c) * q + d

    def decode(codes):
        d = codes % q
        r = codes // q
        c = r % q
        r = r // q
        b = r % q
        a = r // q
        return a, b, c, d

    start = np.array(sorted({encode((np.int64(a), np.int64(b), np.int64(c), np.int64(d)))
                             for a, b, c, d in gens} | {encode((np.int64(1), np.int64(0), np.int64(0), np.int64(1)))}),
                     dtype=np.int64)
    visited = start
    frontier = start
    gen_arr = [(g[0], g[1], g[2], g[3]) for g in gens]
    while frontier.size:
        a, b, c, d = decode(frontier)
        batches = []
        for e, f, g_, h in gen_arr:
            na = (a * e + b * g_) % q
            nb = (a * f + b * h) % q
            nc = (c * e + d * g_) % q
            nd = (c * f + d * h) % q
            batches.append(encode((na, nb, nc, nd)))
        cand = np.unique(np.concatenate(batches))
        pos = np.searchsorted(visited, cand)
        pos[pos >= len(visited)] = len(visited) - 1
        new = cand[visited[pos] != cand]
        if new.size == 0:
            break
        visited = np.union1d(visited, new)
        if len(visited) > cap:
            raise ClosureBudgetExceeded(
                f"closure exceeded cap {cap} (at least {len(visited)} elements)"
            )
        frontier = new
    return visited


def _closure_python(q: int, gens: list[Tuple4], cap: int) -> frozenset[Tuple4]:
    seen: set[Tuple4] = {(1, 0, 0, 1)}
    seen.update(gens)
    frontier = list(seen)
    while frontier:
        nxt = []
        for a, b, c, d in frontier:
            for e, f, g_, h in gens:
                t = ((a * e + b * g_) % q, (a * f + b * h) % q,
                     (c * e + d * g_) % q, (c * f + d * h) % q)
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
        if len(seen) > cap:
            raise ClosureBudgetExceeded(
                f"closure exceeded cap {cap} (at least {len(seen)} elements)"
            )
        frontier = nxt
    return frozenset(seen)


def closure_of_pool(
    pool: Sequence[MatP], modulus: Modulus, *, cap: int = DEFAULT_CLOSURE_CAP
) -> SubgroupClosure:
    """Closure of the subgroup generated by a possibly huge pool of
    elements, keeping the working generator set minimal.

    Pool members already inside the running closure are skipped, so the
    cost is |G| times the size of a small generating set rather than the
    pool size.
    """
    ident = MatP.identity(modulus)
    closure = closure_of_generators([ident], cap=cap)
    gens: list[MatP] = [ident]
    for g in pool:
        if g.modulus != modulus:
            raise ModulusMismatch("pool element at a different modulus")
        if closure.contains(g):
            continue
        gens.append(g)
        closure = closure_of_generators(gens, cap=cap)
    return closure


def closure_of_generators(
    generators: Sequence[MatP], *, cap: int = DEFAULT_CLOSURE_CAP
) -> SubgroupClosure:
    """BFS closure of the subgroup generated inside SL(2, Z/p^N)."""
    if not generators:
        raise ValueError("need at least one generator (use the identity for the trivial group)")
    modulus = generators[0].modulus
    for g in generators:
        if g.modulus != modulus:
            raise ModulusMismatch("generators carry mixed moduli")
        if g.det() != 1 % modulus.pN:
            raise ValueError("generator has det != 1 mod p^N")
    q = modulus.pN
    gens = [_mat_to_tuple(g) for g in generators]
    if q**4 <= 2**62:
        codes = _closure_numpy(q, gens, cap)
        return SubgroupClosure(q, codes, None)
    elements = _closure_python(q, gens, cap)
    return SubgroupClosure(q, None, elements)


# ---------------------------------------------------------------------------
# Level of a subgroup of SL(2, Z/p^N)
# ---------------------------------------------------------------------------


def reduction_kernel_generators(modulus: Modulus, n: int) -> tuple[MatP, ...]:
    """A generating set for {g in SL(2, Z/p^N) : g = 1 mod p^n}.

    For n >= 1 the kernel is the image of a uniform congruence subgroup, so
    by the Frattini argument any set whose images span the first congruence
    layer generates it; the two elementary unipotents together with one
    diagonal element do.  n = 0 returns generators of the full group.
    p = 2 with n = 1 has no uniform structure; there the full kernel is
    enumerated directly (it is small at desk scale) and returned whole.
    """
    p, N = modulus.p, modulus.N
    if not 0 <= n <= N:
        raise PrecisionExceeded(f"n = {n} outside [0, {N}]")
    if n == 0:
        return (
            MatP.of([[1, 1], [0, 1]], modulus),
            MatP.of([[1, 0], [1, 1]], modulus),
        )
    if p == 2 and n == 1:
        return tuple(_enumerate_reduction_kernel(modulus, 1))
    pn = p**n
    u = 1 + pn
    return (
        MatP.of([[1, pn], [0, 1]], modulus),
        MatP.of([[1, 0], [pn, 1]], modulus),
        MatP.of([[u, 0], [0, pow(u, -1, modulus.pN)]], modulus),
    )


def _enumerate_reduction_kernel(modulus: Modulus, n: int) -> list[MatP]:
    """All g in SL(2, Z/p^N) with g = 1 mod p^n, by direct solve.

    Writing g = 1 + p^n * [[a, b], [c, d]], the determinant condition pins d
    as a function of (a, b, c) because 1 + p^n a is a unit.
    """
    p, N = modulus.p, modulus.N
    pN = modulus.pN
    pn = p**n
    r = p ** (N - n)
    out = []
    for a in range(r):
        ia = pow(1 + pn * a, -1, pN)
        for b in range(r):
            for c in range(r):
                # (1+pn*a)(1+pn*d) - pn*b*pn*c = 1
                rhs = (1 + pn * pn * b * c) % pN
                dd = (rhs * ia - 1) % pN
                # dd must be divisible by pn; true because g = 1 mod p^n
                out.append(MatP.of([[1 + pn * a, pn * b], [pn * c, dd + 1]], modulus))
    return out


@dataclass(frozen=True)
class GroupLevel:
    """Result of a level computation with its certificate.

    ``level`` is the least n with the full mod-p^n reduction kernel inside
    the generated subgroup, or None when no n <= N-1 works (reported as
    ">= N").  ``witnesses`` are the kernel generators whose membership in
    the closure proves the containment.
    """

    level: int | None
    closure_order: int
    witnesses: tuple[MatP, ...]

    @property
    def attained(self) -> bool:
        return self.level is not None


def group_level(
    generators: Sequence[MatP], *, cap: int = DEFAULT_CLOSURE_CAP
) -> GroupLevel:
    """Level of the subgroup of SL(2, Z/p^N) generated by ``generators``."""
    modulus = generators[0].modulus
    closure = closure_of_generators(generators, cap=cap)
    for n in range(0, modulus.N):
        probes = reduction_kernel_generators(modulus, n)
        if all(closure.contains(w) for w in probes):
            return GroupLevel(level=n, closure_order=closure.order, witnesses=probes)
    return GroupLevel(level=None, closure_order=closure.order, witnesses=())


# ---------------------------------------------------------------------------
# Seeded sampling helpers (deterministic given the rng)
# ---------------------------------------------------------------------------


def random_sl2(rng, modulus: Modulus) -> MatP:
    """A seeded element of SL(2, Z/p^N).

    Not a uniform sample; good enough for property tests, which only need
    wide and reproducible coverage.
    """
    p, pN = modulus.p, modulus.pN
    while True:
        a = rng.randrange(pN)
        b = rng.randrange(pN)
        if a % p != 0:
            c = rng.randrange(pN)
            d = (pow(a, -1, pN) * (1 + b * c)) % pN
            return MatP.of([[a, b], [c, d]], modulus)
        if b % p != 0:
            d = rng.randrange(pN)
            c = ((a * d - 1) * pow(b, -1, pN)) % pN
            return MatP.of([[a, b], [c, d]], modulus)


def random_congruence_element(rng, modulus: Modulus, n: int) -> MatP:
    """A seeded element of SL(2, Z/p^N) congruent to 1 mod p^n (n >= 1)."""
    if n < 1 or n > modulus.N:
        raise PrecisionExceeded(f"n = {n} outside [1, {modulus.N}]")
    p, N = modulus.p, modulus.N
    pN = modulus.pN
    pn = p**n
    r = p ** (N - n)
    a = rng.randrange(r)
    b = rng.randrange(r)
    c = rng.randrange(r)
    ia = pow(1 + pn * a, -1, pN)
    rhs = (1 + pn * pn * b * c) % pN
    d = (rhs * ia) % pN
    return MatP.of([[1 + pn * a, pn * b], [pn * c, d]], modulus)


def sl2_order(p: int, n: int) -> int:
    """|SL(2, Z/p^n)| = p^(3n-2) (p^2 - 1)."""
    if n < 1:
        raise ValueError("n >= 1 required")
    return p ** (3 * n - 2) * (p * p - 1)
