"""Subgroup / subalgebra correspondences over F_p and at precision N.

Over F_p: unipotent-generated subgroups of SL(2, F_p) correspond to
nilpotently-generated Lie subalgebras of sl(2, F_p) via spans of truncated
logarithms one way and closures of truncated exponentials the other.  The
correspondence is only guaranteed for p large; failures at small p are
recorded as anomalies, never asserted away.

At precision N (p >= 5): a closed subgroup generated by residually
unipotent elements corresponds to the span of the logarithms of its
residually unipotent elements, and a lattice spanned by residually
nilpotent elements generates a subgroup through exponentials of its
residually nilpotent stratum.  The two defining identities

    span(log H_resunip) cap p sl2 = log(H cap K(p))
    <exp h_resnilp> cap K(p)      = exp(h cap p sl2)

are checked as literal set equalities on enumerated elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Iterator, Sequence

from .core import (
    DEFAULT_CLOSURE_CAP,
    DEFAULT_ENUM_CAP,
    MatP,
    Modulus,
    SubgroupClosure,
    closure_of_generators,
    closure_of_pool,
    group_level,
    in_principal_congruence,
    residually_unipotent,
)
from .errors import (
    BracketClosureAnomaly,
    BudgetExceeded,
    PreconditionViolation,
    UnsupportedPrime,
)
from .explog import exp_extended, exp_trunc, log_extended, log_trunc
from .lattice import (
    LieLattice,
    Vec,
    bracket,
    lattice_level,
    mat_to_vec,
    membership_mod,
    vec_add,
    vec_scale,
    vec_to_mat,
)

Tuple4 = tuple[int, int, int, int]


def _tuple_to_mat(t: Tuple4, modulus: Modulus) -> MatP:
    return MatP.of([[t[0], t[1]], [t[2], t[3]]], modulus)


# ---------------------------------------------------------------------------
# Finite side: subgroups of SL(2, F_p) and subalgebras of sl(2, F_p)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FpSubgroup:
    """A subgroup of SL(2, F_p) as its canonical sorted element set."""

    p: int
    elements: frozenset[Tuple4]
    generator_record: tuple[Tuple4, ...] = ()

    @classmethod
    def generated_by(cls, p: int, generators: Iterable[Tuple4]) -> "FpSubgroup":
        modulus = Modulus(p, 1)
        gens = tuple(generators)
        mats = [_tuple_to_mat(g, modulus) for g in gens] or [MatP.identity(modulus)]
        closure = closure_of_generators(mats)
        return cls(p, frozenset(closure.iter_tuples()), gens)

    @classmethod
    def trivial(cls, p: int) -> "FpSubgroup":
        return cls(p, frozenset({(1, 0, 0, 1)}))

    @property
    def order(self) -> int:
        return len(self.elements)

    def canonical(self) -> tuple[Tuple4, ...]:
        return tuple(sorted(self.elements))

    def contains(self, t: Tuple4) -> bool:
        return t in self.elements


@dataclass(frozen=True)
class FpLieSubalgebra:
    """A Lie subalgebra of sl(2, F_p) as a reduced echelon basis."""

    p: int
    basis: tuple[Vec, ...]

    @classmethod
    def spanned_by(cls, p: int, vectors: Iterable[Vec]) -> "FpLieSubalgebra":
        return cls(p, _echelon_basis(vectors, p))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, v: Vec) -> bool:
        return _in_span(self.basis, v, self.p)

    def elements(self) -> Iterator[Vec]:
        p = self.p
        for coeffs in product(range(p), repeat=self.dim):
            v = (0, 0, 0)
            for t, b in zip(coeffs, self.basis):
                v = vec_add(v, vec_scale(t, b, p), p)
            yield v

    def is_bracket_closed(self) -> bool:
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                if not self.contains(bracket(self.basis[i], self.basis[j], self.p)):
                    return False
        return True


def _echelon_basis(vectors: Iterable[Vec], p: int) -> tuple[Vec, ...]:
    """Reduced row echelon basis of a span inside F_p^3 (canonical)."""
    basis: list[list[int]] = []
    pivots: list[int] = []
    for vec in vectors:
        v = [x % p for x in vec]
        for b, lead in zip(basis, pivots):
            if v[lead]:
                f = v[lead]
                v = [(x - f * y) % p for x, y in zip(v, b)]
        if not any(v):
            continue
        lead = next(i for i in range(3) if v[i])
        inv = pow(v[lead], -1, p)
        v = [(x * inv) % p for x in v]
        for idx, b in enumerate(basis):
            f = b[lead]
            if f:
                basis[idx] = [(x - f * y) % p for x, y in zip(b, v)]
        basis.append(v)
        pivots.append(lead)
    order = sorted(range(len(basis)), key=lambda i: pivots[i])
    return tuple(tuple(basis[i]) for i in order)


def _in_span(basis: Sequence[Vec], v: Vec, p: int) -> bool:
    v = [x % p for x in v]
    for b in basis:
        lead = next(i for i in range(3) if b[i] != 0)
        if v[lead]:
            f = v[lead]
            v = [(x - f * y) % p for x, y in zip(v, b)]
    return not any(v)


def _is_nilpotent_vec(v: Vec, p: int) -> bool:
    # (a, b, c) on (e, h, f) is the matrix [[b, a], [c, -b]]; nilpotent iff
    # the determinant -(b^2 + a c) vanishes
    a, b, c = v
    return (b * b + a * c) % p == 0


def unipotent_elements(H: FpSubgroup) -> frozenset[Tuple4]:
    """{x in H : (x - 1)^2 = 0 over F_p}; equals {x : x^p = 1} on SL(2)."""
    p = H.p
    out = set()
    for a, b, c, d in H.elements:
        # (x - 1)^2 = x^2 - 2x + 1 = (tr x) x - x - x + ... use entries directly
        e11 = ((a - 1) * (a - 1) + b * c) % p
        e12 = (b * (a + d - 2)) % p
        e21 = (c * (a + d - 2)) % p
        e22 = ((d - 1) * (d - 1) + b * c) % p
        if e11 == 0 and e12 == 0 and e21 == 0 and e22 == 0:
            out.add((a, b, c, d))
    return frozenset(out)


def h_plus(H: FpSubgroup) -> FpSubgroup:
    """The subgroup generated by the unipotent elements of H.

    Its index in H is prime to p (asserted): it swallows the p-Sylow
    subgroups.
    """
    unips = unipotent_elements(H)
    result = FpSubgroup.generated_by(H.p, sorted(unips))
    index = H.order // result.order
    assert H.order % result.order == 0 and index % H.p != 0
    return result


def liec_bar(H: FpSubgroup) -> FpLieSubalgebra:
    """F_p-span of the truncated logarithms of the unipotents of H.

    The span is expected to be bracket-closed for p large; a failure raises
    a recorded anomaly rather than passing silently.
    """
    if H.p < 5:
        raise UnsupportedPrime("mod-p correspondence needs p >= 5")
    modulus = Modulus(H.p, 1)
    vecs = []
    for t in unipotent_elements(H):
        logmat = log_trunc(_tuple_to_mat(t, modulus))
        vecs.append(mat_to_vec(logmat))
    algebra = FpLieSubalgebra.spanned_by(H.p, vecs)
    if not algebra.is_bracket_closed():
        raise BracketClosureAnomaly(
            "span of logarithms is not bracket-closed", p=H.p, witness=H.canonical()
        )
    return algebra


def grpc_bar(L: FpLieSubalgebra) -> FpSubgroup:
    """Subgroup generated by exp of every nilpotent element of L (all
    F_p-multiples of nilpotents are again elements of L, so enumerating the
    nilpotent stratum covers the one-parameter subgroups)."""
    if L.p < 5:
        raise UnsupportedPrime("mod-p correspondence needs p >= 5")
    modulus = Modulus(L.p, 1)
    pool = [
        exp_trunc(vec_to_mat(v, modulus))
        for v in L.elements()
        if _is_nilpotent_vec(v, L.p)
    ]
    closure = closure_of_pool(pool, modulus)
    return FpSubgroup(
        L.p,
        frozenset(closure.iter_tuples()),
        tuple((m.rows[0][0], m.rows[0][1], m.rows[1][0], m.rows[1][1]) for m in pool),
    )


def sl2_fp_elements(p: int) -> list[Tuple4]:
    """All of SL(2, F_p) by direct solve (a unit forces d; else b is a unit)."""
    out = []
    for a in range(p):
        for b in range(p):
            for c in range(p):
                if a % p != 0:
                    d = (pow(a, -1, p) * (1 + b * c)) % p
                    out.append((a, b, c, d))
                elif b % p != 0:
                    for d in range(p):
                        if (a * d - b * c) % p == 1:
                            out.append((a, b, c, d))
    return out


def enumerate_unipotent_generated(p: int, *, cap: int = DEFAULT_ENUM_CAP) -> list[FpSubgroup]:
    """All subgroups H of SL(2, F_p) with H+ = H, by closing unipotent
    generator sets until no new subgroup appears.

    Every unipotent-generated subgroup arises by adding one unipotent at a
    time, so the breadth-first sweep is complete.  The count is
    cross-checked against the classification of subgroups of SL(2, F_p)
    containing p-elements: the trivial group, the p + 1 Sylow p-subgroups,
    and the full group, so p + 3 in total.
    """
    if p not in (5, 7, 11, 13):
        raise BudgetExceeded("enumeration is budgeted for p in {5, 7, 11, 13}")
    full = FpSubgroup(p, frozenset(sl2_fp_elements(p)))
    all_unips = sorted(unipotent_elements(full))
    seen: dict[tuple, FpSubgroup] = {}
    trivial = FpSubgroup.trivial(p)
    seen[trivial.canonical()] = trivial
    frontier = [trivial]
    while frontier:
        nxt = []
        for H in frontier:
            for u in all_unips:
                if H.contains(u):
                    continue
                extended = FpSubgroup.generated_by(p, (*H.generator_record, u))
                key = extended.canonical()
                if key not in seen:
                    if len(seen) + 1 > cap:
                        raise BudgetExceeded(f"subgroup count exceeded cap {cap}")
                    seen[key] = extended
                    nxt.append(extended)
        frontier = nxt
    subgroups = sorted(seen.values(), key=lambda H: (H.order, H.canonical()))
    expected = p + 3
    if len(subgroups) != expected:
        raise BracketClosureAnomaly(
            f"unipotent-generated subgroup count {len(subgroups)} differs from "
            f"the classification count {expected}",
            p=p,
        )
    return subgroups


def enumerate_nilpotently_generated(p: int) -> list[FpLieSubalgebra]:
    """All Lie subalgebras of sl(2, F_p) spanned by their nilpotent
    elements, by scanning every subspace of F_p^3."""
    out = []
    for basis in _all_subspaces(p):
        algebra = FpLieSubalgebra(p, basis)
        if not algebra.is_bracket_closed():
            continue
        nilpotents = [v for v in algebra.elements() if _is_nilpotent_vec(v, p)]
        if FpLieSubalgebra.spanned_by(p, nilpotents).basis == algebra.basis:
            out.append(algebra)
    return out


def _all_subspaces(p: int) -> Iterator[tuple[Vec, ...]]:
    """Canonical echelon bases of every subspace of F_p^3, all dimensions,
    enumerated directly from the reduced echelon shapes (p^2 + p + 1 each
    in dimensions one and two)."""
    yield ()
    for a in range(p):
        for b in range(p):
            yield ((1, a, b),)
    for b in range(p):
        yield ((0, 1, b),)
    yield ((0, 0, 1),)
    for a in range(p):
        for b in range(p):
            yield ((1, 0, a), (0, 1, b))
    for a in range(p):
        yield ((1, a, 0), (0, 0, 1))
    yield ((0, 1, 0), (0, 0, 1))
    yield ((1, 0, 0), (0, 1, 0), (0, 0, 1))


# ---------------------------------------------------------------------------
# Precision-N side
# ---------------------------------------------------------------------------


def liec_padic(
    generators: Sequence[MatP] | SubgroupClosure,
    modulus: Modulus | None = None,
    *,
    cap: int = DEFAULT_CLOSURE_CAP,
) -> LieLattice:
    """Span of the logarithms of all residually unipotent elements of the
    generated subgroup, as a lattice at precision N (p >= 5).

    Bracket closure at precision N - 1 is asserted; a failure raises an
    anomaly carrying the witness bracket.
    """
    if isinstance(generators, SubgroupClosure):
        closure = generators
        if modulus is None:
            raise ValueError("modulus required with a precomputed closure")
    else:
        modulus = generators[0].modulus
        closure = closure_of_generators(generators, cap=cap)
    if modulus.p < 5:
        raise UnsupportedPrime("precision-N correspondence needs p >= 5")
    span_cols: list[Vec] = []
    lattice = LieLattice.from_columns([], modulus)
    for t in closure.iter_tuples():
        g = _tuple_to_mat(t, modulus)
        if not residually_unipotent(g):
            continue
        v = mat_to_vec(log_extended(g).matrix)
        if not membership_mod(lattice, v, modulus.N):
            span_cols.append(v)
            lattice = LieLattice.from_columns(span_cols, modulus)
    gens = lattice.generators
    q = modulus.pN
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            br = bracket(gens[i], gens[j], q)
            if not membership_mod(lattice, br, modulus.N - 1):
                raise BracketClosureAnomaly(
                    "logarithm span is not bracket-closed at precision N - 1",
                    p=modulus.p,
                    witness=(gens[i], gens[j]),
                )
    return lattice


def resnilp_stratum(
    L: LieLattice, *, sample_exponent: int | None = None, cap: int = DEFAULT_ENUM_CAP
) -> list[Vec]:
    """Representatives of the residually nilpotent elements of L, complete
    modulo p^min(N, 3) (or the requested exponent).

    Enumerates the image of L modulo p^s through its adapted generators and
    keeps the classes whose mod-p reduction is nilpotent, lifted by their
    canonical representatives.
    """
    modulus = L.modulus
    p, N = modulus.p, modulus.N
    s = min(N, 3) if sample_exponent is None else min(sample_exponent, N)
    ps = p**s
    gens = L.generators
    ranges = []
    for d in L.divisors:
        if d < N:
            ranges.append(range(p ** max(s - d, 0)))
    total = 1
    for r in ranges:
        total *= len(r)
    if total > cap:
        raise BudgetExceeded(f"stratum enumeration size {total} exceeds cap {cap}")
    out = []
    seen = set()
    for ts in product(*ranges):
        v = (0, 0, 0)
        for t, g in zip(ts, gens):
            v = vec_add(v, vec_scale(t, g, ps), ps)
        if v in seen:
            continue
        seen.add(v)
        if _is_nilpotent_vec(v, p):
            out.append(v)
    return out


def grpc_padic(
    L: LieLattice, *, cap: int = DEFAULT_CLOSURE_CAP, enum_cap: int = DEFAULT_ENUM_CAP
) -> SubgroupClosure:
    """BFS closure of the exponentials of the residually nilpotent stratum
    of L (p >= 5).

    The stratum is enumerated exactly at precision min(N, 3); for deeper N
    one refinement step is verified to add no new group elements, which
    keeps the generator set faithful at desk scale.
    """
    modulus = L.modulus
    p, N = modulus.p, modulus.N
    if p < 5:
        raise UnsupportedPrime("precision-N correspondence needs p >= 5")
    s = min(N, 3)
    reps = resnilp_stratum(L, sample_exponent=s, cap=enum_cap)
    pool = [exp_extended(vec_to_mat(v, modulus)).matrix for v in reps]
    closure = closure_of_pool(pool, modulus, cap=cap)
    if N > s:
        refined = resnilp_stratum(L, sample_exponent=s + 1, cap=enum_cap)
        for v in refined:
            g = exp_extended(vec_to_mat(v, modulus)).matrix
            if not closure.contains(g):
                raise BracketClosureAnomaly(
                    "stratum refinement escaped the closure; raise the sample depth",
                    p=p,
                    witness=v,
                )
    return closure


# ---------------------------------------------------------------------------
# Round-trip verification
# ---------------------------------------------------------------------------


@dataclass
class RoundtripReport:
    """Outcome of a correspondence verification run."""

    p: int
    subgroup_count: int = 0
    algebra_count: int = 0
    failures: list[dict] = field(default_factory=list)
    anomalies: list[str] = field(default_factory=list)
    checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "subgroup_count": self.subgroup_count,
            "algebra_count": self.algebra_count,
            "failures": self.failures,
            "anomalies": self.anomalies,
            "checked": self.checked,
        }


def roundtrip_check_fp(p: int) -> RoundtripReport:
    """Verify both round trips over F_p on the full enumerations."""
    report = RoundtripReport(p=p)
    try:
        subgroups = enumerate_unipotent_generated(p)
    except BracketClosureAnomaly as exc:
        report.anomalies.append(str(exc))
        return report
    report.subgroup_count = len(subgroups)
    for H in subgroups:
        try:
            back = grpc_bar(liec_bar(H))
        except BracketClosureAnomaly as exc:
            report.anomalies.append(str(exc))
            continue
        report.checked += 1
        if back.elements != H.elements:
            report.failures.append(
                {"direction": "group", "order": H.order, "witness": H.generator_record}
            )
    algebras = enumerate_nilpotently_generated(p)
    report.algebra_count = len(algebras)
    for L in algebras:
        try:
            back_l = liec_bar(grpc_bar(L))
        except BracketClosureAnomaly as exc:
            report.anomalies.append(str(exc))
            continue
        report.checked += 1
        if back_l.basis != L.basis:
            report.failures.append({"direction": "algebra", "dim": L.dim, "basis": L.basis})
    return report


def smallest_passing_prime(candidates: Sequence[int] = (5, 7, 11, 13)) -> tuple[int | None, list[RoundtripReport]]:
    """Run the F_p round trip on successive primes; report the first that
    passes with no failures and no anomalies."""
    reports = []
    for p in candidates:
        rep = roundtrip_check_fp(p)
        reports.append(rep)
        if rep.passed and not rep.anomalies:
            return p, reports
    return None, reports


def roundtrip_check_padic(
    samples: Sequence[Sequence[MatP]],
    modulus: Modulus,
    *,
    cap: int = DEFAULT_CLOSURE_CAP,
) -> RoundtripReport:
    """Check the two defining identities and level preservation on sampled
    residually-unipotent-generated subgroups at precision N.

    For each sample H (a generator list): with h = span(log H_resunip),

    * every log of an element of H cap K(p) lies in h cap p sl2 and the two
      sets have equal cardinality (identity one, literal set equality);
    * the closure of exp(h_resnilp) meets K(p) in exactly exp(h cap p sl2)
      (identity two, literal set equality);
    * when h is full rank, the group level of H equals the lattice level.
    """
    report = RoundtripReport(p=modulus.p)
    for gens in samples:
        closure = closure_of_generators(gens, cap=cap)
        h = liec_padic(closure, modulus, cap=cap)
        report.subgroup_count += 1

        # identity one: span(log H_resunip) cap p sl2 = log(H cap K(p))
        inner = h.intersect_scaled_ambient(1)
        logs = set()
        for t in closure.iter_tuples():
            g = _tuple_to_mat(t, modulus)
            if in_principal_congruence(g, 1):
                logs.add(mat_to_vec(log_extended(g).matrix))
        ok_one = all(membership_mod(inner, v, modulus.N) for v in logs)
        ok_one = ok_one and len(logs) == inner.point_count()
        if not ok_one:
            report.failures.append(
                {"identity": "from-group", "generators": [g.to_json() for g in gens]}
            )
        report.checked += 1

        # identity two: <exp h_resnilp> cap K(p) = exp(h cap p sl2)
        group = grpc_padic(h, cap=cap)
        lhs = set()
        for t in group.iter_tuples():
            g = _tuple_to_mat(t, modulus)
            if in_principal_congruence(g, 1):
                lhs.add(t)
        rhs = set()
        for v in inner.iter_points():
            g = exp_extended(vec_to_mat(v, modulus)).matrix
            rhs.add((g.rows[0][0], g.rows[0][1], g.rows[1][0], g.rows[1][1]))
        if lhs != rhs:
            report.failures.append(
                {"identity": "from-algebra", "generators": [g.to_json() for g in gens]}
            )
        report.checked += 1

        # level preservation on open subgroups
        if h.is_full_rank:
            lvl = group_level(gens, cap=cap)
            if not lvl.attained or lvl.level != lattice_level(h):
                report.failures.append(
                    {
                        "identity": "level",
                        "group_level": lvl.level,
                        "lattice_level": lattice_level(h),
                    }
                )
            report.checked += 1
    return report
