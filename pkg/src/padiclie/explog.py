"""Exponential and logarithm maps at finite precision.

Four flavours live here:

* ``exp_congruence`` / ``log_congruence`` between p'.gl(2, Z/p^N) and the
  congruence group {g = 1 mod p'} (p' = p odd, 4 at p = 2);
* ``exp_extended`` / ``log_extended`` between residually nilpotent matrices
  and residually unipotent group elements (p >= 5);
* ``exp_trunc`` / ``log_trunc``, the degree-(p-1) truncations over F_p on
  nilpotents/unipotents;
* ``exp_congruence_classes``, the induced map on classes mod p^n.

Series are summed to a static cutoff chosen so every discarded term has
guaranteed valuation >= N, and division by k (or k!) is performed as exact
division by the p-part followed by a unit inverse.  The computation runs at
a widened working modulus p^(N+V) so those divisions never lose a digit the
answer needs; results are exact mod p^N, with no tolerance anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .core import (
    MatP,
    in_principal_congruence,
    int_valuation,
    residually_nilpotent,
    residually_unipotent,
)
from .errors import DomainViolation, PrecisionExceeded, UnsupportedPrime


@dataclass(frozen=True)
class NilpotentResidue:
    """A matrix whose reduction mod p is nilpotent (square zero for 2x2)."""

    matrix: MatP

    def __post_init__(self):
        if not residually_nilpotent(self.matrix):
            raise DomainViolation("matrix is not residually nilpotent")


@dataclass(frozen=True)
class UnipotentResidue:
    """A group element whose reduction mod p is unipotent (g^p = 1 mod p)."""

    matrix: MatP

    def __post_init__(self):
        if not residually_unipotent(self.matrix):
            raise DomainViolation("matrix is not residually unipotent")


def vp_factorial(k: int, p: int) -> int:
    """Legendre's formula for v_p(k!)."""
    v = 0
    q = p
    while q <= k:
        v += k // q
        q *= p
    return v


def _static_cutoff(N: int, slope: Fraction, offset: Fraction) -> int:
    """Least K with offset + k*slope >= N for every k >= K (slope > 0).

    The linear expression is a lower bound for the guaranteed valuation of
    the k-th series term; monotonicity makes a single threshold sound.
    """
    if slope <= 0:
        raise UnsupportedPrime("series does not converge at this prime")
    k = 1
    while offset + k * slope < N:
        k += 1
    return k


@lru_cache(maxsize=None)
def _congruence_cutoff(p: int, N: int, w: int) -> int:
    # term k has valuation >= k*w - v_p(k!) >= k*w - (k-1)/(p-1)
    return _static_cutoff(N, Fraction(w) - Fraction(1, p - 1), Fraction(1, p - 1))


@lru_cache(maxsize=None)
def _resnilp_cutoff(p: int, N: int) -> int:
    # term k has valuation >= floor(k/2) - v_p(k!) >= (k-1)(1/2 - 1/(p-1))
    slope = Fraction(1, 2) - Fraction(1, p - 1)
    return _static_cutoff(N, slope, -slope)


@lru_cache(maxsize=None)
def _division_table(p: int, W: int, cutoff: int) -> tuple[tuple[int, int, int], ...]:
    """(p^a, unit-inverse mod p^W, a) for every k in 1..cutoff-1, where
    k = p^a * u; shared by all series at the same working modulus."""
    pW = p**W
    out = []
    for k in range(1, cutoff):
        a = int_valuation(k, p, W)
        u = k // p**a
        out.append((p**a, pow(u, -1, pW), a))
    return tuple(out)


def _min_valuation(x: MatP) -> int:
    return min(int_valuation(a, x.modulus.p, x.modulus.N) for row in x.rows for a in row)


@lru_cache(maxsize=None)
def _log_working_precision(p: int, N: int, cutoff: int) -> int:
    return N + max((int_valuation(k, p, N + 8) for k in range(1, cutoff)), default=0)


def _exp_series_raw(
    x4: tuple[int, int, int, int], p: int, N: int, cutoff: int
) -> tuple[int, int, int, int]:
    """1 + x + x^2/2! + ... on a flat 2x2 tuple, exact mod p^N on domain."""
    W = N + vp_factorial(cutoff - 1, p)
    pW = p**W
    table = _division_table(p, W, cutoff)
    xa, xb, xc, xd = (v % pW for v in x4)
    ta, tb, tc, td = 1, 0, 0, 1
    sa, sb, sc, sd = 1, 0, 0, 1
    for pa, uinv, _ in table:
        na = (ta * xa + tb * xc) % pW
        nb = (ta * xb + tb * xd) % pW
        nc = (tc * xa + td * xc) % pW
        nd = (tc * xb + td * xd) % pW
        if pa > 1 and (na % pa or nb % pa or nc % pa or nd % pa):
            raise DomainViolation(
                "series term not divisible by the p-part of k; input outside the domain"
            )
        ta = (na // pa * uinv) % pW
        tb = (nb // pa * uinv) % pW
        tc = (nc // pa * uinv) % pW
        td = (nd // pa * uinv) % pW
        sa = (sa + ta) % pW
        sb = (sb + tb) % pW
        sc = (sc + tc) % pW
        sd = (sd + td) % pW
    pN = p**N
    return (sa % pN, sb % pN, sc % pN, sd % pN)


def _log_series_raw(
    g4: tuple[int, int, int, int], p: int, N: int, cutoff: int
) -> tuple[int, int, int, int]:
    """(g-1) - (g-1)^2/2 + ... on a flat 2x2 tuple, exact mod p^N on domain."""
    W = _log_working_precision(p, N, cutoff)
    pW = p**W
    table = _division_table(p, W, cutoff)
    ya = (g4[0] - 1) % pW
    yb = g4[1] % pW
    yc = g4[2] % pW
    yd = (g4[3] - 1) % pW
    ta, tb, tc, td = 1, 0, 0, 1
    sa = sb = sc = sd = 0
    sign = 1
    for pa, uinv, _ in table:
        na = (ta * ya + tb * yc) % pW
        nb = (ta * yb + tb * yd) % pW
        nc = (tc * ya + td * yc) % pW
        nd = (tc * yb + td * yd) % pW
        ta, tb, tc, td = na, nb, nc, nd
        if pa > 1 and (na % pa or nb % pa or nc % pa or nd % pa):
            raise DomainViolation(
                "series term not divisible by the p-part of k; input outside the domain"
            )
        sa = (sa + sign * (na // pa * uinv)) % pW
        sb = (sb + sign * (nb // pa * uinv)) % pW
        sc = (sc + sign * (nc // pa * uinv)) % pW
        sd = (sd + sign * (nd // pa * uinv)) % pW
        sign = -sign
    pN = p**N
    return (sa % pN, sb % pN, sc % pN, sd % pN)


def _exp_series(x: MatP, cutoff: int) -> MatP:
    p, N = x.modulus.p, x.modulus.N
    if x.size != 2:
        raise PrecisionExceeded("series are specialized to 2x2 matrices")
    (a, b), (c, d) = x.rows
    sa, sb, sc, sd = _exp_series_raw((a, b, c, d), p, N, cutoff)
    return MatP(((sa, sb), (sc, sd)), x.modulus)


def _log_series(g: MatP, cutoff: int) -> MatP:
    p, N = g.modulus.p, g.modulus.N
    if g.size != 2:
        raise PrecisionExceeded("series are specialized to 2x2 matrices")
    (a, b), (c, d) = g.rows
    sa, sb, sc, sd = _log_series_raw((a, b, c, d), p, N, cutoff)
    return MatP(((sa, sb), (sc, sd)), g.modulus)


# ---------------------------------------------------------------------------
# Congruence domain: p'.gl <-> {g = 1 mod p'}
# ---------------------------------------------------------------------------


def exp_congruence(x: MatP) -> MatP:
    """exp on p'.gl(2, Z/p^N); the result is trivial mod p'."""
    w = x.modulus.eps_p
    if _min_valuation(x) < w:
        raise DomainViolation(f"entries must have valuation >= {w} (p' domain)")
    result = _exp_series(x, _congruence_cutoff(x.modulus.p, x.modulus.N, w))
    assert in_principal_congruence(result, min(w, x.modulus.N))
    return result


def log_congruence(g: MatP) -> MatP:
    """log on {g = 1 mod p'}; two-sided inverse of exp_congruence there."""
    w = g.modulus.eps_p
    if not in_principal_congruence(g, min(w, g.modulus.N)):
        raise DomainViolation(f"g must be trivial mod p^{w} (p' domain)")
    return _log_series(g, _congruence_cutoff(g.modulus.p, g.modulus.N, w))


def exp_congruence_classes(x: MatP, n: int) -> MatP:
    """The class of exp(x) mod p^n; depends only on x mod p^n for n >= eps_p."""
    modulus = x.modulus
    if not modulus.eps_p <= n <= modulus.N:
        raise PrecisionExceeded(f"need eps_p <= n <= N, got n = {n}")
    return exp_congruence(x).reduce(n)


# ---------------------------------------------------------------------------
# Extended domain: residually nilpotent <-> residually unipotent (p >= 5)
# ---------------------------------------------------------------------------


def _require_extended_prime(p: int) -> None:
    # bijectivity needs p > 2*N0 = 4; p = 3 is excluded along with p = 2
    if p < 5:
        raise UnsupportedPrime(f"extended exp/log requires p >= 5, got p = {p}")


def exp_extended(x: MatP | NilpotentResidue) -> UnipotentResidue:
    """exp on residually nilpotent matrices, exact mod p^N (p >= 5)."""
    mat = x.matrix if isinstance(x, NilpotentResidue) else x
    _require_extended_prime(mat.modulus.p)
    if not residually_nilpotent(mat):
        raise DomainViolation("input is not residually nilpotent")
    return UnipotentResidue(_exp_series(mat, _resnilp_cutoff(mat.modulus.p, mat.modulus.N)))


def log_extended(g: MatP | UnipotentResidue) -> NilpotentResidue:
    """log on residually unipotent elements, exact mod p^N (p >= 5)."""
    mat = g.matrix if isinstance(g, UnipotentResidue) else g
    _require_extended_prime(mat.modulus.p)
    if not residually_unipotent(mat):
        raise DomainViolation("input is not residually unipotent")
    return NilpotentResidue(_log_series(mat, _resnilp_cutoff(mat.modulus.p, mat.modulus.N)))


# ---------------------------------------------------------------------------
# Truncated maps over F_p
# ---------------------------------------------------------------------------


def exp_trunc(xbar: MatP) -> MatP:
    """exp^(p) y = sum_{i<p} y^i / i! over F_p, on nilpotent y."""
    modulus = xbar.modulus
    if modulus.N != 1:
        raise PrecisionExceeded("truncated exp is defined over F_p (N = 1)")
    if not residually_nilpotent(xbar):
        raise DomainViolation("truncated exp needs a nilpotent input")
    p = modulus.p
    acc = MatP.identity(modulus, xbar.size)
    power = MatP.identity(modulus, xbar.size)
    fact_inv = 1
    for i in range(1, p):
        power = power @ xbar
        if all(a == 0 for row in power.rows for a in row):
            break
        fact_inv = (fact_inv * pow(i, -1, p)) % p
        acc = acc + power.scale(fact_inv)
    return acc


def log_trunc(gbar: MatP) -> MatP:
    """log^(p) x = -sum_{i<p} (1-x)^i / i over F_p, on unipotent x."""
    modulus = gbar.modulus
    if modulus.N != 1:
        raise PrecisionExceeded("truncated log is defined over F_p (N = 1)")
    if not residually_unipotent(gbar):
        raise DomainViolation("truncated log needs a unipotent input")
    p = modulus.p
    y = gbar - MatP.identity(modulus, gbar.size)
    acc = MatP.zero(modulus, gbar.size)
    power = MatP.identity(modulus, gbar.size)
    for i in range(1, p):
        power = power @ y
        if all(a == 0 for row in power.rows for a in row):
            break
        sign = 1 if i % 2 == 1 else -1
        acc = acc + power.scale((sign * pow(i, -1, p)) % p)
    return acc


# ---------------------------------------------------------------------------
# Coset membership against the upper Borel (power-lifting property tests)
# ---------------------------------------------------------------------------


def borel_coset_witness(g: MatP, m: int, *, congruence_part: bool) -> MatP | None:
    """A witness b, upper triangular with det 1, such that b = g mod p^m;
    None when no such b exists.

    With ``congruence_part`` the witness must additionally be trivial mod p
    (membership in (Borel cap K(p)) K(p^m)); without it any upper-triangular
    determinant-one b qualifies (membership in (Borel cap K) K(p^m)).  The
    product set reduces mod p^m onto the upper-triangular subgroup, so the
    witness can be written down from the entries; no coset enumeration is
    needed, and the returned b is the certificate.
    """
    if not 0 <= m <= g.modulus.N:
        raise PrecisionExceeded(f"m = {m} outside [0, {g.modulus.N}]")
    if congruence_part and not in_principal_congruence(g, 1):
        return None
    if m == 0:
        return MatP.identity(g.modulus)
    pN = g.modulus.pN
    pm = g.modulus.p**m
    (a, b), (c, _) = g.rows
    if c % pm != 0:
        return None
    if a % g.modulus.p == 0:
        return None
    return MatP.of([[a, b], [0, pow(a, -1, pN)]], g.modulus)
