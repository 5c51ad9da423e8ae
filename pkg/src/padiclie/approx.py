"""The subalgebra approximation algorithm for sl(2), fully explicit.

Given an exact Lie sublattice M of level p^n, produce a proper isolated
subalgebra I with M inside I + p^m * sl2 and m >= ceil(n/2) (p odd).  Rank
two isolated sublattices are parametrized by primitive trace functionals
c = (c1, c2, c3): J(c) = {x : tr(c x) = 0}, which is a subalgebra exactly
when (2 c1)^2 + 4 c2 c3 = 0; off-quadric points are repaired by an exact
lift (the residual is linear in c3 once c2 is a unit, so one Newton step
closes it completely and is its own fixed point).

Internally the functional is carried as the coefficient row
(A, B, C) = (c3, 2 c1, c2) on coordinates (x_e, x_h, x_f); that form stays
integral at p = 2, where c1 itself may be a half-integer.  The residual in
row form is B^2 + 4 A C.

The module also hosts the matching optimality machinery: a worst-case
constructor from surjective linear functionals, an exhaustive search over
all proper isolated candidates mod p^m certifying that no better exponent
is possible on a given instance, and a group-level certificate obtained by
taking logarithms over a BFS closure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .core import (
    DEFAULT_CLOSURE_CAP,
    DEFAULT_ENUM_CAP,
    MatP,
    Modulus,
    SubgroupClosure,
    closure_of_generators,
    in_principal_congruence,
    int_valuation,
)
from .errors import (
    BudgetExceeded,
    DegenerateSpan,
    NotSurjective,
    NoUnitDerivative,
    PreconditionViolation,
    UnsupportedPrecision,
    UnsupportedPrime,
)
from .explog import log_congruence
from .lattice import (
    LieLattice,
    Vec,
    is_subalgebra_mod,
    lattice_level,
    mat_to_vec,
    membership_mod,
)

# -- functional rows ---------------------------------------------------------


def trace_pairing_row(c: Vec) -> Vec:
    """Row (A, B, C) with tr(c x) = A x_e + B x_h + C x_f for c = (c1, c2, c3):
    A = c3, B = 2 c1, C = c2."""
    c1, c2, c3 = c
    return (c3, 2 * c1, c2)


def _row_apply(row: Vec, x: Vec, q: int) -> int:
    return (row[0] * x[0] + row[1] * x[1] + row[2] * x[2]) % q


def _row_residual(row: Vec, q: int) -> int:
    a, b, c = row
    return (b * b + 4 * a * c) % q


def _row_is_primitive(row: Vec, p: int) -> bool:
    return any(x % p != 0 for x in row)


def _row_lattice(row: Vec, modulus: Modulus) -> LieLattice:
    """Kernel of the functional row as a rank-two isolated lattice."""
    pN = modulus.pN
    w = tuple(x % pN for x in row)
    j = next((i for i in range(3) if w[i] % modulus.p != 0), None)
    if j is None:
        raise DegenerateSpan(f"functional row {row} has no unit coordinate")
    winv = pow(w[j], -1, pN)
    cols = []
    for i in range(3):
        if i == j:
            continue
        v = [0, 0, 0]
        v[i] = 1
        v[j] = (-w[i] * winv) % pN
        cols.append(tuple(v))
    return LieLattice.from_columns(cols, modulus)


def _plane_annihilator_row(x1: Vec, x2: Vec, modulus: Modulus) -> Vec:
    """Primitive row annihilating span{x1, x2}: cross product of the two
    coordinate rows, checked by substitution."""
    pN = modulus.pN
    r1 = (x1[0] % pN, x1[1] % pN, x1[2] % pN)
    r2 = (x2[0] % pN, x2[1] % pN, x2[2] % pN)
    cross = (
        (r1[1] * r2[2] - r1[2] * r2[1]) % pN,
        (r1[2] * r2[0] - r1[0] * r2[2]) % pN,
        (r1[0] * r2[1] - r1[1] * r2[0]) % pN,
    )
    if not _row_is_primitive(cross, modulus.p):
        raise DegenerateSpan("spanning vectors are dependent modulo p")
    row = _canonical_row(cross, modulus)
    for x in (x1, x2):
        if _row_apply(row, x, pN) != 0:
            raise AssertionError("annihilator row does not kill its plane")
    return row


def _canonical_row(row: Vec, modulus: Modulus) -> Vec:
    """Scale so the first unit coordinate in the order (C, A, B) is 1.

    In c-coordinates this is the (c2, c3, c1) preference of the point's
    canonical form.
    """
    p, pN = modulus.p, modulus.pN
    a, b, c = (row[0] % pN, row[1] % pN, row[2] % pN)
    for coord in (c, a, b):
        if coord % p != 0:
            s = pow(coord, -1, pN)
            return ((a * s) % pN, (b * s) % pN, (c * s) % pN)
    raise PreconditionViolation(f"row {row} is not primitive")


def _lift_row(row: Vec, m: int, modulus: Modulus) -> Vec:
    """Move a row with residual divisible by p^m onto the quadric exactly.

    The residual B^2 + 4AC is linear in A once C is a unit (and vice
    versa); primitivity plus p | residual forces such a unit for p odd.
    For p odd the result is congruent mod p^m, for p = 2 mod 2^{m-2}.
    """
    p, pN = modulus.p, modulus.pN
    if p == 2:
        if m < 3:
            raise UnsupportedPrecision("p = 2 lifting needs residual exponent >= 3")
    elif m < 1:
        raise UnsupportedPrecision("lifting needs residual exponent >= 1")
    res = _row_residual(row, pN)
    if int_valuation(res, p, modulus.N) < min(m, modulus.N):
        raise PreconditionViolation(f"residual {res} is not divisible by p^{m}")
    if res == 0:
        return _canonical_row(row, modulus)
    a, b, c = row
    if p == 2:
        # residual = 0 mod 8 forces B even, so B^2/4 is an exact integer
        bb = (b * b) % (4 * pN)
        if bb % 4 != 0:
            raise NoUnitDerivative("residual not divisible by 4 at p = 2")
        quarter = bb // 4
        if c % p != 0:
            lifted = ((-quarter * pow(c, -1, pN)) % pN, b, c)
        elif a % p != 0:
            lifted = (a, b, (-quarter * pow(a, -1, pN)) % pN)
        else:
            raise NoUnitDerivative("no unit partial derivative on the quadric")
    elif c % p != 0:
        lifted = ((-b * b * pow(4 * c, -1, pN)) % pN, b, c)
    elif a % p != 0:
        lifted = (a, b, (-b * b * pow(4 * a, -1, pN)) % pN)
    else:
        raise NoUnitDerivative("no unit partial derivative on the quadric")
    if _row_residual(lifted, pN) != 0:
        raise AssertionError("lift did not land on the quadric")
    keep = min(m - (2 if p == 2 else 0), modulus.N)
    q = p**keep
    if any((x - y) % q != 0 for x, y in zip(lifted, row)):
        raise AssertionError(f"lift moved the row above level p^{keep}")
    return _canonical_row(lifted, modulus)


# -- the public annihilator point (p odd) -------------------------------------


@dataclass(frozen=True)
class AnnihilatorPoint:
    """A primitive triple c = (c1, c2, c3) representing the rank-two
    sublattice J(c) = {x : tr(c x) = 0}, up to unit scaling (p odd).

    Primitivity means min(v(2 c1), v(c2), v(c3)) = 0.  The canonical
    representative scales the first unit coordinate in the order
    (c2, c3, c1) to 1, which makes deduplication in enumerations stable.
    """

    c: Vec
    modulus: Modulus

    def __post_init__(self):
        if self.modulus.p == 2:
            raise UnsupportedPrime("annihilator triples need c1 integral (p odd)")
        if not _row_is_primitive(self.c, self.modulus.p):
            raise PreconditionViolation(f"triple {self.c} is not primitive")

    @classmethod
    def canonical(cls, c: Vec, modulus: Modulus) -> "AnnihilatorPoint":
        row = _canonical_row(trace_pairing_row(c), modulus)
        return cls.from_row(row, modulus)

    @classmethod
    def from_row(cls, row: Vec, modulus: Modulus) -> "AnnihilatorPoint":
        a, b, c = row
        pN = modulus.pN
        c1 = (b * pow(2, -1, pN)) % pN
        return cls((c1, c % pN, a % pN), modulus)

    @property
    def row(self) -> Vec:
        return tuple(x % self.modulus.pN for x in trace_pairing_row(self.c))

    def lattice(self) -> LieLattice:
        """The rank-two isolated lattice J(c) at precision N."""
        return _row_lattice(self.row, self.modulus)


def quadric_residual(point: AnnihilatorPoint | Vec, modulus: Modulus | None = None) -> int:
    """(2 c1)^2 + 4 c2 c3 mod p^N; zero exactly when J(c) is a subalgebra,
    and divisible by p^m exactly when J(c) maps to a subalgebra mod p^m."""
    if isinstance(point, AnnihilatorPoint):
        c, modulus = point.c, point.modulus
    else:
        if modulus is None:
            raise ValueError("modulus required for a bare triple")
        c = point
    c1, c2, c3 = c
    return (4 * c1 * c1 + 4 * c2 * c3) % modulus.pN


def annihilator_of_plane(x1: Vec, x2: Vec, modulus: Modulus) -> AnnihilatorPoint:
    """The functional annihilating the plane spanned by x1 and x2 (p odd),
    primitive and verified by substitution."""
    if modulus.p == 2:
        raise UnsupportedPrime("annihilator triples need c1 integral (p odd)")
    row = _plane_annihilator_row(x1, x2, modulus)
    return AnnihilatorPoint.from_row(row, modulus)


def lift_quadric(point: AnnihilatorPoint, congruence_exponent: int) -> AnnihilatorPoint:
    """Move c onto the quadric exactly, changing nothing mod p^m.

    Requires the residual to be divisible by p^m with m >= 1; the result is
    exact (residual zero at precision N) and idempotent.
    """
    lifted = _lift_row(point.row, congruence_exponent, point.modulus)
    return AnnihilatorPoint.from_row(lifted, point.modulus)


# ---------------------------------------------------------------------------
# r-selection (the general algorithm's index choice, kept as a trace)
# ---------------------------------------------------------------------------


def select_r(
    divisors: Sequence[int], c_constant: Fraction = Fraction(1, 4)
) -> tuple[int, int]:
    """The maximal 1-based index r with a_r < c * a_{r+1} (0 when none) and
    the guaranteed exponent nu = ceil((1 - 2c) c^(d-r-1) n), n = a_d.

    The selection chain a_{r+1} >= c^(d-r-1) n is asserted on every call.
    """
    if not Fraction(0) < c_constant < Fraction(1, 2):
        raise PreconditionViolation("the splitting constant must lie in (0, 1/2)")
    alpha = list(divisors)
    d = len(alpha)
    n = alpha[-1]
    if n < 1:
        raise PreconditionViolation("level exponent must be >= 1")
    r = 0
    for i in range(1, d):
        if alpha[i - 1] < c_constant * alpha[i]:
            r = i
    nu = math.ceil((1 - 2 * c_constant) * c_constant ** (d - r - 1) * n)
    # alpha[r] is a_{r+1} one-based; every index above r failed the splitting
    # test, so a_{r+1} >= c a_{r+2} >= ... >= c^(d-r-1) a_d
    if Fraction(alpha[r]) < c_constant ** (d - r - 1) * n:
        raise AssertionError("selection chain violated: a_{r+1} < c^(d-r-1) n")
    return r, nu


# ---------------------------------------------------------------------------
# The approximation algorithm (p odd; p = 2 behind a flag)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproxResult:
    """Output of the approximation: a proper isolated subalgebra I, the
    depth exponent m with M inside I + p^m * sl2 (verified before return),
    the branch taken, and the r-selection trace."""

    subalgebra: LieLattice
    m: int
    branch: str  # "rank1" or "rank2-lifted"
    r_selection_trace: tuple[int, int, Fraction]
    annihilator_row: Vec | None = None

    @property
    def annihilator(self) -> AnnihilatorPoint | None:
        if self.annihilator_row is None or self.subalgebra.modulus.p == 2:
            return None
        return AnnihilatorPoint.from_row(self.annihilator_row, self.subalgebra.modulus)

    def to_json(self) -> dict:
        r, nu, c = self.r_selection_trace
        return {
            "subalgebra": self.subalgebra.to_json(),
            "m": self.m,
            "branch": self.branch,
            "r_selection_trace": {"r": r, "nu": nu, "c_constant": str(c)},
            "annihilator_row": list(self.annihilator_row) if self.annihilator_row else None,
        }


def _guaranteed_exponent(p: int, n: int) -> int:
    half = math.ceil(Fraction(n, 2))
    return half if p != 2 else max(half - 1, 0)


def approximate_sl2(
    M: LieLattice,
    *,
    c_constant: Fraction = Fraction(1, 4),
    allow_p2: bool = False,
) -> ApproxResult:
    """Approximate an exact subalgebra M of level p^n by a proper isolated
    subalgebra to depth m >= ceil(n/2) (p odd; >= ceil(n/2) - 1 for p = 2
    when enabled, n >= 3).

    Branch on the elementary divisors a = (a1, a2, a3), n = a3: when
    a2 >= n/2 the first adapted direction already works with m = a2;
    otherwise the plane (x1, x2) maps to a subalgebra mod p^{n - a1 - a2},
    its annihilator is lifted onto the quadric, and m = n - a2 (minus the
    two-digit lift loss at p = 2).  The containment M inside I + p^m sl2 is
    re-verified on every generator before returning.
    """
    modulus = M.modulus
    p, N = modulus.p, modulus.N
    if p == 2 and not allow_p2:
        raise UnsupportedPrime("p = 2 path is disabled by default (pass allow_p2=True)")
    if not M.is_full_rank:
        raise PreconditionViolation("approximation needs a full-rank (open) sublattice")
    if not is_subalgebra_mod(M, N - 1):
        raise DegenerateSpan("input lattice is not an exact Lie subalgebra")
    n = lattice_level(M)
    if n < 1:
        raise PreconditionViolation("level exponent must be >= 1")
    if p == 2 and n < 3:
        raise UnsupportedPrecision("p = 2 path needs level exponent n >= 3")
    if N < n + 2:
        raise UnsupportedPrecision(f"need N >= n + 2 precision headroom, got N = {N}")

    a1, a2, _ = M.divisors
    trace = (*select_r(M.divisors, c_constant), c_constant)
    floor_m = _guaranteed_exponent(p, n)

    threshold = Fraction(n, 2) if p != 2 else Fraction(n, 2) - 1
    if Fraction(a2) >= threshold:
        x1 = M.adapted_basis[0]
        subalgebra = LieLattice.from_columns([x1], modulus).saturated()
        result = ApproxResult(subalgebra, a2, "rank1", trace)
    else:
        x1, x2 = M.adapted_basis[0], M.adapted_basis[1]
        row = _plane_annihilator_row(x1, x2, modulus)
        m_q = n - a1 - a2
        lifted = _lift_row(row, m_q, modulus)
        subalgebra = _row_lattice(lifted, modulus)
        m = n - a2 - (2 if p == 2 else 0)
        result = ApproxResult(subalgebra, m, "rank2-lifted", trace, annihilator_row=lifted)

    if result.m < floor_m:
        raise AssertionError(f"achieved exponent {result.m} below guaranteed {floor_m}")
    if result.subalgebra.rank >= 3:
        raise AssertionError("approximating subalgebra is not proper")
    if result.subalgebra.saturated() != result.subalgebra:
        raise AssertionError("approximating subalgebra is not isolated")
    if not is_subalgebra_mod(result.subalgebra, N - 1):
        raise AssertionError("approximating lattice is not an exact subalgebra")
    for g in M.generators:
        if not membership_mod(result.subalgebra, g, result.m):
            raise AssertionError("postcondition M inside I + p^m sl2 failed")
    return result


# ---------------------------------------------------------------------------
# Worst-case construction and exhaustive optimality search
# ---------------------------------------------------------------------------


def trace_functional(c0: Vec) -> Vec:
    """The row of x -> tr(c0 x), for use as a worst-case functional."""
    return trace_pairing_row(c0)


def coordinate_functional(index: int) -> Vec:
    """The row picking out one (e, h, f) coordinate."""
    row = [0, 0, 0]
    row[index] = 1
    return tuple(row)


def worst_case_subalgebra(modulus: Modulus, n: int, functional_row: Vec) -> LieLattice:
    """The level-p^n subalgebra p^k ker(phi) + p^n sl2 for n = 2k and a
    surjective functional phi on sl2 / p^k sl2 given by ``functional_row``.

    Automatically a subalgebra: brackets of p^k sl2 land in p^{2k} sl2.
    Level and subalgebra facts are asserted before returning.
    """
    p, N = modulus.p, modulus.N
    if n % 2 != 0 or n < 2:
        raise PreconditionViolation("the worst-case family needs an even level n = 2k")
    if n > N:
        raise UnsupportedPrecision(f"need N >= n, got N = {N}")
    k = n // 2
    pN = modulus.pN
    w = tuple(x % pN for x in functional_row)
    j = next((i for i in range(3) if w[i] % p != 0), None)
    if j is None:
        raise NotSurjective("functional has no unit coordinate mod p^k")
    winv = pow(w[j], -1, pN)
    pk = p**k
    cols = []
    for i in range(3):
        if i == j:
            continue
        v = [0, 0, 0]
        v[i] = pk
        v[j] = (-w[i] * winv * pk) % pN
        cols.append(tuple(v))
    cols.append(tuple((pk * pk) % pN if t == j else 0 for t in range(3)))
    for i in range(3):
        cols.append(tuple((p**n) % pN if t == i else 0 for t in range(3)))
    M = LieLattice.from_columns(cols, modulus)
    if lattice_level(M) != n:
        raise AssertionError("worst-case instance does not have the requested level")
    if not is_subalgebra_mod(M, N - 1):
        raise AssertionError("worst-case instance is not a subalgebra")
    return M


def _projective_triples(p: int, m: int) -> Iterator[Vec]:
    """Primitive triples mod p^m up to unit scaling, one per class: first
    unit coordinate normalized to 1, earlier coordinates divisible by p."""
    q = p**m
    qp = p ** (m - 1)
    for a in range(q):
        for b in range(q):
            yield (1, a, b)
    for a in range(qp):
        for b in range(q):
            yield (p * a, 1, b)
    for a in range(qp):
        for b in range(qp):
            yield (p * a, p * b, 1)


def projective_point_count(p: int, m: int) -> int:
    return p ** (2 * m) + p ** (2 * m - 1) + p ** (2 * m - 2)


def optimality_search(
    M: LieLattice, m: int, *, cap: int = DEFAULT_ENUM_CAP
) -> tuple[bool, dict | None]:
    """Decide by exhaustion whether any proper isolated subalgebra I has
    M inside I + p^m sl2 (p odd).

    Candidates mod p^m are complete for this question: rank-one spans are
    primitive vectors up to scaling; rank-two isolated subalgebras are the
    J(c) with residual divisible by p^m (an exact one reduces to such a c,
    and conversely any such c lifts); membership of M in I + p^m sl2 only
    depends on the candidate mod p^m.  Returns the verdict plus a witness
    when one exists.
    """
    modulus = M.modulus
    p, N = modulus.p, modulus.N
    if not 1 <= m <= N - 1:
        raise PreconditionViolation(f"m = {m} outside [1, {N - 1}]")
    if p == 2:
        raise UnsupportedPrime("optimality search is for odd p")
    q = p**m
    budget = 2 * projective_point_count(p, m)
    if budget > cap:
        raise BudgetExceeded(f"candidate count ~{budget} exceeds cap {cap}")
    gens = [tuple(x % q for x in g) for g in M.generators]

    for v in _projective_triples(p, m):
        j = next(i for i in range(3) if v[i] % p != 0)
        vj_inv = pow(v[j], -1, q)
        ok = True
        for u in gens:
            t = (u[j] * vj_inv) % q
            if any((u[i] - t * v[i]) % q != 0 for i in range(3)):
                ok = False
                break
        if ok:
            return True, {"kind": "rank1", "vector": v}

    for c in _projective_triples(p, m):
        if (4 * c[0] * c[0] + 4 * c[1] * c[2]) % q != 0:
            continue
        row = trace_pairing_row(c)
        ok = True
        for u in gens:
            if _row_apply(row, u, q) != 0:
                ok = False
                break
        if ok:
            return True, {"kind": "rank2", "functional": c}

    return False, None


# ---------------------------------------------------------------------------
# Group-level certificate
# ---------------------------------------------------------------------------


def group_certificate(
    generators: Sequence[MatP] | SubgroupClosure,
    I: LieLattice,
    m: int,
    *,
    cap: int = DEFAULT_CLOSURE_CAP,
) -> bool:
    """Whether every element of the generated subgroup H satisfies
    log(h) in p*I + p^m sl2, i.e. H is inside exp(p I) K(p^m).

    Generators must be trivial mod p' and p odd; a precomputed closure may
    be passed to share work across candidate subalgebras.  Logarithms are
    exact at precision N, so the verdict is sound and complete there.
    """
    modulus = I.modulus
    p, N = modulus.p, modulus.N
    if p == 2:
        raise UnsupportedPrime("group certificates are for odd p")
    if not 0 <= m <= N - 1:
        raise PreconditionViolation(f"m = {m} outside [0, {N - 1}]")
    if isinstance(generators, SubgroupClosure):
        closure = generators
        if closure.q != modulus.pN:
            raise PreconditionViolation("closure modulus does not match the lattice")
    else:
        for g in generators:
            if not in_principal_congruence(g, modulus.eps_p):
                raise PreconditionViolation("generators must be trivial mod p'")
        closure = closure_of_generators(generators, cap=cap)
    target = I.scaled(1).plus_scaled_ambient(m)
    for t in closure.iter_tuples():
        g = MatP.of([[t[0], t[1]], [t[2], t[3]]], modulus)
        logm = log_congruence(g)
        if logm.trace() != 0:
            raise AssertionError("logarithm of a congruence SL(2) element must be traceless")
        if not membership_mod(target, mat_to_vec(logm), N):
            return False
    return True
