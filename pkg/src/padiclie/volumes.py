"""Commutator volumes, fixed-point counts and conjugacy-class quantities
for SL(2) over Z/p^n, each with a brute-force enumeration backend.

All volumes are exact rationals (an integer count over the group order);
no floating point appears anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .core import (
    DEFAULT_ENUM_CAP,
    MatP,
    Modulus,
    Valuation,
    int_valuation,
    mat_inverse,
)
from .enumeration import _factorize, sl2_columns, sl2_point_count
from .errors import BudgetExceeded, PreconditionViolation
from .lattice import BASIS, adjoint_matrix

Tuple4 = tuple[int, int, int, int]


# ---------------------------------------------------------------------------
# lambda_p: the depth to which Ad(x) - 1 vanishes
# ---------------------------------------------------------------------------


def lambda_p(x: MatP) -> Valuation:
    """min over the (e, h, f) basis of the valuation of (Ad(x) - 1),
    capped at N.

    For SL(2) over Q_p the adjoint representation is irreducible, so the
    only nonzero semisimple ideal is all of sl2 and no projection is
    needed; the lattice is the standard span of (e, h, f).
    """
    modulus = x.modulus
    p, N = modulus.p, modulus.N
    cols = adjoint_matrix(x)
    best = N
    for j, col in enumerate(cols):
        for i in range(3):
            delta = (col[i] - (1 if i == j else 0)) % modulus.pN
            best = min(best, int_valuation(delta, p, N))
    return Valuation(best, best == N)


# ---------------------------------------------------------------------------
# Commutator volumes by enumeration
# ---------------------------------------------------------------------------


def _group_columns(modulus: Modulus, cap: int) -> tuple[np.ndarray, ...]:
    q = modulus.pN
    total = sl2_point_count(q)
    if total > cap:
        raise BudgetExceeded(f"|SL(2, Z/{q})| = {total} exceeds cap {cap}")
    return sl2_columns(q)


def phi_brute(
    K: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int], np.ndarray],
    x: MatP,
    *,
    cap: int = DEFAULT_ENUM_CAP,
) -> Fraction:
    """vol{k in SL(2, Z/p^n) : [k, x] in K} with normalized counting measure.

    ``K`` is a vectorized membership predicate on entry columns mod q.  The
    conjugating group is the image of SL(2, Z/p^n), a bounded-index choice
    inside the adjoint group; the center acts trivially by conjugation so
    the normalized volume is unaffected.
    """
    modulus = x.modulus
    q = modulus.pN
    a, b, c, d = _group_columns(modulus, cap)
    (xa, xb), (xc, xd) = x.rows
    xinv = mat_inverse(x)
    (ya, yb), (yc, yd) = xinv.rows
    # k x k^{-1} x^{-1}: first k x, then times k^{-1} = adj(k), then times x^{-1}
    # k^{-1} for det 1 is [[d, -b], [-c, a]]
    m11 = (a * xa + b * xc) % q
    m12 = (a * xb + b * xd) % q
    m21 = (c * xa + d * xc) % q
    m22 = (c * xb + d * xd) % q
    n11 = (m11 * d - m12 * c) % q
    n12 = (-m11 * b + m12 * a) % q
    n21 = (m21 * d - m22 * c) % q
    n22 = (-m21 * b + m22 * a) % q
    r11 = (n11 * ya + n12 * yc) % q
    r12 = (n11 * yb + n12 * yd) % q
    r21 = (n21 * ya + n22 * yc) % q
    r22 = (n21 * yb + n22 * yd) % q
    inside = K(r11, r12, r21, r22, q)
    return Fraction(int(inside.sum()), len(a))


def predicate_full(a, b, c, d, q):
    return np.ones_like(a, dtype=bool)


def predicate_gamma0(a, b, c, d, q):
    """Image of the lower-left-divisible subgroup: c = 0 mod q."""
    return (c % q) == 0


def predicate_principal(m: int):
    """Image of the principal congruence subgroup of exponent m."""

    def inner(a, b, c, d, q):
        pm = _exponent_to_modulus(q, m)
        return ((a - 1) % pm == 0) & (b % pm == 0) & (c % pm == 0) & ((d - 1) % pm == 0)

    return inner


def _exponent_to_modulus(q: int, m: int) -> int:
    factors = _factorize(q)
    if len(factors) != 1:
        raise PreconditionViolation("principal predicate needs a prime-power modulus")
    p, n = factors[0]
    if m > n:
        raise PreconditionViolation(f"exponent {m} exceeds n = {n}")
    return p**m


def predicate_closure(closure) -> Callable:
    """Membership in an explicitly closed subgroup (sorted-code lookup)."""
    codes = np.array(
        sorted(((t[0] * closure.q + t[1]) * closure.q + t[2]) * closure.q + t[3]
               for t in closure.iter_tuples()),
        dtype=np.int64,
    )
    q0 = closure.q

    def inner(a, b, c, d, q):
        assert q == q0
        target = ((a * q + b) * q + c) * q + d
        pos = np.searchsorted(codes, target)
        pos[pos >= len(codes)] = len(codes) - 1
        return codes[pos] == target

    return inner


# ---------------------------------------------------------------------------
# The projective line over Z/p^n and fixed points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectivePoint:
    """A class [x : y] over Z/q with (x, y) primitive, canonicalized so the
    first unit coordinate equals 1."""

    x: int
    y: int
    q: int

    @classmethod
    def canonical(cls, x: int, y: int, q: int, p: int) -> "ProjectivePoint":
        x %= q
        y %= q
        if x % p != 0:
            s = pow(x, -1, q)
            return cls(1, (y * s) % q, q)
        if y % p != 0:
            s = pow(y, -1, q)
            return cls((x * s) % q, 1, q)
        raise PreconditionViolation(f"({x}, {y}) is not primitive mod {p}")


def projective_line(p: int, n: int) -> list[tuple[int, int]]:
    """Canonical representatives of P^1(Z/p^n): [1 : y] and [p t : 1]."""
    q = p**n
    pts = [(1, y) for y in range(q)]
    pts.extend((p * t, 1) for t in range(p ** (n - 1)))
    return pts


def projective_line_size(p: int, n: int) -> int:
    return p**n + p ** (n - 1)


def fixed_points_P1(x: MatP, p: int, n: int) -> int:
    """Exact count of points of P^1(Z/p^n) fixed by the Moebius action:
    [X : Y] -> [a X + b Y : c X + d Y].  A primitive pair is fixed exactly
    when the cross product (a X + b Y) Y - (c X + d Y) X vanishes mod p^n."""
    if n > x.modulus.N or x.modulus.p != p:
        raise PreconditionViolation("matrix modulus does not cover (p, n)")
    q = p**n
    (a, b), (c, d) = x.reduce(n).rows if x.modulus.N != n else x.rows
    count = 0
    for X, Y in projective_line(p, n):
        u = (a * X + b * Y) % q
        v = (c * X + d * Y) % q
        if (u * Y - v * X) % q == 0:
            count += 1
    return count


def phi_gamma0(x: MatP, n: int) -> Fraction:
    """Closed form for the commutator volume against the lower-left
    congruence subgroup of exponent n, for upper-triangular x.

    With r = min(v(d - a), v(b)) < n:
      two fixed points when v(d - a) < (n + r) / 2, each of depth
      n - v(d - a); otherwise a single tube of depth ceil((n - r) / 2);
    both cases normalized by the size of the projective line.  The identity
    with the brute-force fixed-point count is asserted on every call.
    """
    modulus = x.modulus
    p, N = modulus.p, modulus.N
    if p == 2:
        raise PreconditionViolation("closed form stated for odd p")
    if n > N:
        raise PreconditionViolation(f"n = {n} exceeds precision N = {N}")
    (a, b), (c, d) = x.rows
    if c % modulus.pN != 0:
        raise PreconditionViolation("x must be upper triangular")
    vda = int_valuation(d - a, p, N)
    vb = int_valuation(b, p, N)
    r = min(vda, vb)
    if r >= n:
        raise PreconditionViolation(f"r = {r} must be smaller than n = {n}")
    unit_density = Fraction(p, p + 1)
    if 2 * vda < n + r:
        value = 2 * unit_density * Fraction(1, p ** (n - vda))
    else:
        value = unit_density * Fraction(1, p ** (-((n - r) // -2)))
    brute = Fraction(fixed_points_P1(x, p, n), projective_line_size(p, n))
    if value != brute:
        raise AssertionError(
            f"closed form {value} disagrees with the fixed-point count {brute}"
        )
    return value


# ---------------------------------------------------------------------------
# c_Delta: fixed points on coset spaces of SL(2, Z)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gamma0Spec:
    """The congruence subgroup with lower-left entry divisible by M."""

    M: int


@dataclass(frozen=True)
class GammaFullSpec:
    """The principal congruence subgroup of exact level M."""

    M: int


def _projective_line_composite(M: int) -> list[tuple[int, int]]:
    """Canonical representatives of P^1(Z/M) assembled by CRT from the
    prime-power lines."""
    parts = []
    for p, e in _factorize(M):
        parts.append((p**e, projective_line(p, e)))
    pts = [(x % parts[0][0], y % parts[0][0]) for x, y in parts[0][1]]
    modulus = parts[0][0]
    for q2, pts2 in parts[1:]:
        u = pow(modulus, -1, q2)
        combined = []
        for x1, y1 in pts:
            for x2, y2 in pts2:
                x = (x1 + modulus * ((u * (x2 - x1)) % q2)) % (modulus * q2)
                y = (y1 + modulus * ((u * (y2 - y1)) % q2)) % (modulus * q2)
                combined.append((x, y))
        pts = combined
        modulus *= q2
    return pts


def projective_line_size_composite(M: int) -> int:
    return M * prod(p + 1 for p, _ in _factorize(M)) // prod(p for p, _ in _factorize(M))


@dataclass(frozen=True)
class CosetFixedPoints:
    count: int
    index: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.count, self.index)


def c_delta(gamma: Sequence[Sequence[int]], spec: Gamma0Spec | GammaFullSpec,
            *, cap: int = DEFAULT_ENUM_CAP) -> CosetFixedPoints:
    """Number of fixed points of an integer matrix gamma (det 1) on the
    coset space of the congruence subgroup, with the subgroup index.

    For the lower-left type the cosets are the projective line over Z/M
    and the index is its size, cross-validated against the group-order
    ratio; for the principal type the cosets are all of SL(2, Z/M) and the
    count is found by exhaustive conjugation scan.
    """
    (ga, gb), (gc, gd) = (tuple(gamma[0]), tuple(gamma[1]))
    if ga * gd - gb * gc != 1:
        raise PreconditionViolation("gamma must have determinant one")
    M = spec.M
    if M < 2:
        raise PreconditionViolation("level M must be >= 2")
    if isinstance(spec, Gamma0Spec):
        if M > 500:
            raise BudgetExceeded("lower-left type budgeted for M <= 500")
        pts = _projective_line_composite(M)
        index = len(pts)
        formula = projective_line_size_composite(M)
        order_ratio = sl2_point_count(M) // _borel_order(M)
        if index != formula or index != order_ratio:
            raise AssertionError("index formula, enumeration and order ratio disagree")
        count = 0
        for X, Y in pts:
            u = (ga * X + gb * Y) % M
            v = (gc * X + gd * Y) % M
            if (u * Y - v * X) % M == 0:
                count += 1
        return CosetFixedPoints(count, index)
    if M > 50:
        raise BudgetExceeded("principal type budgeted for M <= 50")
    a, b, c, d = sl2_columns(M)
    if len(a) > cap:
        raise BudgetExceeded(f"|SL(2, Z/{M})| = {len(a)} exceeds cap {cap}")
    # delta^{-1} gamma delta = 1 demands gamma delta = delta
    m11 = (ga * a + gb * c) % M
    m12 = (ga * b + gb * d) % M
    m21 = (gc * a + gd * c) % M
    m22 = (gc * b + gd * d) % M
    fixed = (m11 == a) & (m12 == b) & (m21 == c) & (m22 == d)
    return CosetFixedPoints(int(fixed.sum()), len(a))


def _borel_order(M: int) -> int:
    """Order of the upper-triangular determinant-one subgroup of
    SL(2, Z/M): M * phi(M)."""
    phi = M
    for p, _ in _factorize(M):
        phi = phi // p * (p - 1)
    return M * phi


# ---------------------------------------------------------------------------
# The level-factorization aggregate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelFactorization:
    """A level written as a map prime -> exponent (all exponents >= 1)."""

    exponents: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, mapping: Mapping[int, int]) -> "LevelFactorization":
        items = tuple(sorted(mapping.items()))
        for p, e in items:
            if e < 1:
                raise PreconditionViolation("exponents must be >= 1")
        return cls(items)

    @classmethod
    def from_integer(cls, N: int) -> "LevelFactorization":
        return cls.of({p: e for p, e in _factorize(N)})

    def value(self) -> int:
        return prod(p**e for p, e in self.exponents)


def beta(
    levels: LevelFactorization,
    x: Sequence[Sequence[int]] | Mapping[int, MatP],
    delta: Fraction,
) -> int:
    """The product of p^{n_p} over support primes where the adjoint defect
    depth satisfies lambda_p(x) < delta * n_p.

    ``x`` is an integer matrix reduced per prime, or an explicit per-prime
    map.  A depth capped at the working precision n_p counts as at least
    n_p, which is sound for delta <= 1 (capped primes are excluded).
    """
    if not 0 < delta <= 1:
        raise PreconditionViolation("delta must lie in (0, 1]")
    total = 1
    for p, n_p in levels.exponents:
        if isinstance(x, Mapping):
            xp = x[p]
            if xp.modulus.N < n_p:
                raise PreconditionViolation(f"matrix at p = {p} lacks precision {n_p}")
            xp = xp.reduce(n_p) if xp.modulus.N > n_p else xp
        else:
            modulus = Modulus(p, n_p)
            xp = MatP.of(x, modulus)
        lam = lambda_p(xp)
        if not lam.capped and Fraction(lam.value) < delta * n_p:
            total *= p**n_p
    return total


# ---------------------------------------------------------------------------
# Unipotent orbital volume
# ---------------------------------------------------------------------------


def unipotent_orbital_volume(
    K: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int], np.ndarray],
    modulus: Modulus,
    *,
    cap: int = DEFAULT_ENUM_CAP,
) -> Fraction:
    """(1 / |U| |G|) #{(u, k) : k^{-1} u k in K} over SL(2, Z/p^n), with U
    the upper unitriangular subgroup.

    The pair count aggregates one unipotent row at a time, so memory stays
    at one group sweep.
    """
    q = modulus.pN
    a, b, c, d = _group_columns(modulus, cap)
    total_pairs = 0
    for t in range(q):
        # k^{-1} u k with u = [[1, t], [0, 1]] and k^{-1} = [[d, -b], [-c, a]]:
        # k^{-1} u = [[d, d t - b], [-c, a - c t]]
        n11 = d % q
        n12 = (d * t - b) % q
        n21 = (-c) % q
        n22 = (a - c * t) % q
        r11 = (n11 * a + n12 * c) % q
        r12 = (n11 * b + n12 * d) % q
        r21 = (n21 * a + n22 * c) % q
        r22 = (n21 * b + n22 * d) % q
        inside = K(r11, r12, r21, r22, q)
        total_pairs += int(inside.sum())
    return Fraction(total_pairs, q * len(a))
