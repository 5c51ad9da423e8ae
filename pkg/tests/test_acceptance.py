"""Acceptance suite: one test per criterion, each enforcing its stated
tolerance (exact arithmetic everywhere, so tolerances are equalities) and
its runtime budget, printing one pass/fail line (visible with pytest -s).
"""

import random
import time
from fractions import Fraction

import pytest

from padiclie import (
    Gamma0Spec,
    LieLattice,
    MatP,
    Modulus,
    approximate_sl2,
    c_delta,
    count_affine,
    count_mod_p_on_sl2,
    bound_a6,
    exp_congruence,
    exp_congruence_classes,
    fixed_points_P1,
    is_subalgebra_mod,
    lattice_level,
    log_congruence,
    membership_mod,
    optimality_search,
    parse_poly,
    phi_gamma0,
    roundtrip_check_fp,
    roundtrip_check_padic,
    schmidt_check,
    worst_case_subalgebra,
)
from padiclie.approx import trace_functional
from padiclie.congcount import random_polynomial
from padiclie.errors import IdenticallyZeroOnV, ZeroModP
from padiclie.lattice import vec_scale
from padiclie.nori import smallest_passing_prime
from padiclie.sampling import (
    random_congruence_domain_matrix,
    random_exact_subalgebra,
    random_resunip_generator_sets,
)
from padiclie.volumes import projective_line_size


def _report(number, passed, budget, elapsed, detail=""):
    verdict = "PASS" if passed else "FAIL"
    print(f"[criterion {number}] {verdict} in {elapsed:.1f}s (budget {budget}s) {detail}")
    assert passed
    assert elapsed < budget, f"criterion {number} exceeded its {budget}s budget"


def test_criterion_1_explog_exactness():
    start = time.perf_counter()
    trips = 0
    for p in (3, 5, 7):
        m = Modulus(p, 6)
        rng = random.Random(1000 + p)
        for _ in range(500):
            x = random_congruence_domain_matrix(rng, m)
            assert log_congruence(exp_congruence(x)) == x
            g = exp_congruence(x)
            assert exp_congruence(log_congruence(g)) == g
            trips += 2
    pairs = 0
    for p in (3, 5, 7):
        m = Modulus(p, 6)
        for n in (2, 3):
            rng = random.Random(2000 + 10 * p + n)
            pn = p**n
            for _ in range(200):
                x = random_congruence_domain_matrix(rng, m)
                y = MatP.of(
                    [[pn * rng.randrange(m.pN // pn) for _ in range(2)] for _ in range(2)], m
                )
                assert exp_congruence_classes(x + y, n) == exp_congruence_classes(x, n)
                pairs += 1
    elapsed = time.perf_counter() - start
    _report(1, True, 10, elapsed, f"({trips} round trips, {pairs} congruence pairs, zero tolerance)")


def test_criterion_2_approximation_lower_bound():
    start = time.perf_counter()
    cases = 0
    for p in (3, 5, 7):
        for n in range(1, 7):
            N = n + 2
            m = Modulus(p, N)
            family = []
            for a in range(0, n + 1):
                family.append(
                    LieLattice.from_columns(
                        [
                            (0, 1, 0),
                            vec_scale(p**a, (1, 0, 0), m.pN),
                            vec_scale(p**n, (0, 0, 1), m.pN),
                        ],
                        m,
                    )
                )
            rng = random.Random(3000 + 10 * p + n)
            for _ in range(100):
                family.append(random_exact_subalgebra(rng, p, n, N))
            for M in family:
                assert lattice_level(M) == n
                res = approximate_sl2(M)
                assert res.m >= -(n // -2)
                assert res.subalgebra.rank < 3
                assert res.subalgebra.saturated() == res.subalgebra
                assert is_subalgebra_mod(res.subalgebra, N - 1)
                for g in M.generators:
                    assert membership_mod(res.subalgebra, g, res.m)
                cases += 1
    elapsed = time.perf_counter() - start
    _report(2, True, 60, elapsed, f"({cases} instances, all with m >= ceil(n/2))")


def test_criterion_3_optimality_witness():
    start = time.perf_counter()
    m = Modulus(3, 7)
    M = worst_case_subalgebra(m, 4, trace_functional((1, 0, 0)))
    found3, _ = optimality_search(M, 3)
    found2, witness = optimality_search(M, 2)
    elapsed = time.perf_counter() - start
    _report(
        3,
        (found3 is False) and (found2 is True),
        300,
        elapsed,
        f"(refuted at 3, witnessed at 2 by {witness})",
    )


def test_criterion_4_sl2_volume_identity():
    start = time.perf_counter()
    checked = 0
    for p in (3, 5):
        for n in (1, 2, 3):
            m = Modulus(p, n)
            q = m.pN
            size = projective_line_size(p, n)
            for a in range(q):
                if a % p == 0:
                    continue
                ainv = pow(a, -1, q)
                for b in range(q):
                    x = MatP.of([[a, b], [0, ainv]], m)
                    da = (ainv - a) % q
                    r = min(_val(da, p, n), _val(b, p, n))
                    if r >= n:
                        continue
                    closed = phi_gamma0(x, n)  # asserts the identity internally
                    assert closed == Fraction(fixed_points_P1(x, p, n), size)
                    checked += 1
    # the two anchored instances
    m32 = Modulus(3, 2)
    assert phi_gamma0(MatP.of([[1, 1], [0, 1]], m32), 2) == Fraction(1, 4)
    assert phi_gamma0(MatP.of([[2, 0], [0, 5]], m32), 2) == Fraction(1, 2)
    elapsed = time.perf_counter() - start
    _report(4, True, 60, elapsed, f"({checked} upper-triangular elements, exact equality)")


def _val(x, p, cap):
    x %= p**cap
    if x == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def test_criterion_5_nori_round_trip():
    start = time.perf_counter()
    smallest, reports = smallest_passing_prime((5, 7, 11, 13))
    assert smallest is not None and smallest <= 13
    fp_report = reports[0] if reports[0].p == smallest else roundtrip_check_fp(smallest)
    assert fp_report.passed and not fp_report.anomalies
    assert fp_report.subgroup_count == smallest + 3
    assert fp_report.algebra_count == smallest + 3

    m = Modulus(5, 3)
    rng = random.Random(20260810)
    samples = random_resunip_generator_sets(rng, m, 50)
    assert len(samples) >= 50
    padic = roundtrip_check_padic(samples, m)
    assert padic.passed, padic.failures
    elapsed = time.perf_counter() - start
    _report(
        5,
        True,
        300,
        elapsed,
        f"(smallest passing prime {smallest}; {padic.subgroup_count} sampled subgroups at (5, 3))",
    )


def test_criterion_6_appendix_bounds():
    start = time.perf_counter()
    rng = random.Random(606)
    run = 0
    while run < 1000:
        p = rng.choice((3, 5, 7))
        d = rng.randrange(1, 5)
        s = rng.randrange(1, 3)
        g = random_polynomial(rng, d, s, p)
        assert schmidt_check(g, p).passed
        run += 1

    for d in (1, 2, 3):
        for s in (1, 2):
            for p in (3, 5):
                for n in (1, 2, 3, 4):
                    cell_rng = random.Random(7000 + 1000 * d + 100 * s + 10 * p + n)
                    for _ in range(500):
                        f = random_polynomial(cell_rng, d, s, p)
                        count = count_affine(f, p, n)
                        deg = f.degree(mod_p=p)
                        assert bound_a6(max(deg, 1), s, p, n).admits(count)

    ratios_first = _sl2_ratio_sweep()
    ratios_second = _sl2_ratio_sweep()
    assert ratios_first == ratios_second  # stable across reruns, zero drift
    recorded_constant = Fraction(6, 5)
    assert max(ratios_first) == recorded_constant
    elapsed = time.perf_counter() - start
    _report(
        6,
        True,
        300,
        elapsed,
        f"(1000 schmidt cases, 48 grid cells x 500, max sl2 ratio {max(ratios_first)})",
    )


def _sl2_ratio_sweep():
    named = [
        parse_poly("x1", nvars=4),
        parse_poly("x0-1", nvars=4),
        parse_poly("x0-x3", nvars=4),
        parse_poly("x0+x3-2", nvars=4),
        parse_poly("x0+x3", nvars=4),
        parse_poly("x1*x2", nvars=4),
    ]
    ratios = []
    for p in (5, 7, 11, 13):
        for f in named:
            try:
                ratios.append(count_mod_p_on_sl2(f, p).ratio)
            except (IdenticallyZeroOnV, ZeroModP):
                pass
        rng = random.Random(1000 + p)
        for _ in range(40):
            f = random_polynomial(rng, 3, 4, p)
            try:
                ratios.append(count_mod_p_on_sl2(f, p).ratio)
            except (IdenticallyZeroOnV, ZeroModP):
                pass
    return ratios


def test_criterion_7_congruence_decay():
    start = time.perf_counter()
    gamma = [[1, 1], [0, 1]]
    table = []
    for p in (3, 5, 7):
        for n in (1, 2, 3):
            res = c_delta(gamma, Gamma0Spec(p**n))
            expected = Fraction(p, p + 1) * Fraction(1, p ** (-(n // -2)))
            assert res.ratio == expected
            assert res.count**3 <= res.index**2  # ratio <= index^(-1/3), cubed
            table.append((p, n, res.count, res.index, str(res.ratio)))
    elapsed = time.perf_counter() - start
    print("    p  n  fixed  index  ratio")
    for row in table:
        print("    {0}  {1}  {2:5d}  {3:5d}  {4}".format(*row))
    _report(7, True, 10, elapsed, f"({len(table)} levels, exact ratios)")


def test_criterion_8_excluded_constants_documented():
    """The general-G constants (epsilon, delta, J, D, C, n(G), n_0) are
    non-constructive in the source material and are not claimed by any
    operation; criteria 2-7 substitute desk-scale certificates.  This
    entry records the exclusion so the gate stays explicit."""
    excluded = ("epsilon", "delta", "J", "D", "C", "n(G)", "n_0")
    print(f"[criterion 8] PASS (excluded from acceptance by construction: {', '.join(excluded)})")
    assert len(excluded) == 7
