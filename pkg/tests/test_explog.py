import random

import pytest

from padiclie import (
    MatP,
    Modulus,
    NilpotentResidue,
    closure_of_generators,
    exp_congruence,
    exp_congruence_classes,
    exp_extended,
    exp_trunc,
    log_congruence,
    log_extended,
    log_trunc,
)
from padiclie.errors import DomainViolation, UnsupportedPrime
from padiclie.explog import borel_coset_witness
from padiclie.lattice import mat_to_vec, vec_to_mat
from padiclie.sampling import (
    random_congruence_domain_matrix,
    random_resnilp_matrix,
)
from padiclie.core import random_congruence_element, random_sl2


def test_exp_congruence_examples():
    m = Modulus(5, 4)
    e_scaled = MatP.of([[0, 5], [0, 0]], m)
    assert exp_congruence(e_scaled) == MatP.of([[1, 5], [0, 1]], m)
    assert exp_congruence(MatP.zero(m)) == MatP.identity(m)
    m2 = Modulus(3, 2)
    h_scaled = MatP.of([[3, 0], [0, -3]], m2)
    assert exp_congruence(h_scaled) == MatP.of([[4, 0], [0, 7]], m2)


def test_log_congruence_examples():
    m = Modulus(7, 5)
    assert log_congruence(MatP.of([[1, 7], [0, 1]], m)) == MatP.of([[0, 7], [0, 0]], m)
    assert log_congruence(MatP.identity(m)) == MatP.zero(m)


def test_domain_violations():
    m = Modulus(3, 4)
    with pytest.raises(DomainViolation):
        exp_congruence(MatP.of([[0, 1], [0, 0]], m))
    with pytest.raises(DomainViolation):
        log_congruence(MatP.of([[2, 0], [0, 2]], m))
    m2 = Modulus(2, 5)
    with pytest.raises(DomainViolation):
        exp_congruence(MatP.of([[0, 2], [0, 0]], m2))  # p = 2 needs valuation 2


@pytest.mark.parametrize("p", [3, 5, 7])
def test_congruence_round_trip(p):
    rng = random.Random(100 + p)
    m = Modulus(p, 6)
    for _ in range(60):
        x = random_congruence_domain_matrix(rng, m)
        assert log_congruence(exp_congruence(x)) == x
        g = exp_congruence(x)
        assert exp_congruence(log_congruence(g)) == g


def test_congruence_round_trip_p2():
    rng = random.Random(2)
    m = Modulus(2, 6)
    for _ in range(40):
        x = random_congruence_domain_matrix(rng, m)
        assert log_congruence(exp_congruence(x)) == x


def test_extended_examples_and_floor():
    m = Modulus(5, 4)
    e = MatP.of([[0, 1], [0, 0]], m)
    assert exp_extended(e).matrix == MatP.of([[1, 1], [0, 1]], m)
    with pytest.raises(UnsupportedPrime):
        exp_extended(MatP.of([[0, 1], [0, 0]], Modulus(3, 4)))
    with pytest.raises(DomainViolation):
        exp_extended(MatP.of([[1, 0], [0, 1]], m))
    with pytest.raises(DomainViolation):
        NilpotentResidue(MatP.of([[1, 0], [0, 1]], m))


@pytest.mark.parametrize("p", [5, 7])
def test_extended_round_trip(p):
    rng = random.Random(200 + p)
    m = Modulus(p, 4)
    for _ in range(100):
        x = random_resnilp_matrix(rng, m)
        assert log_extended(exp_extended(x).matrix).matrix == x


@pytest.mark.parametrize("p", [5, 7])
def test_reduction_commutes_with_truncated_maps(p):
    rng = random.Random(300 + p)
    m = Modulus(p, 4)
    for _ in range(100):
        x = random_resnilp_matrix(rng, m)
        lhs = exp_extended(x).matrix.reduce(1)
        rhs = exp_trunc(x.reduce(1))
        assert lhs == rhs
        g = exp_extended(x).matrix
        assert log_extended(g).matrix.reduce(1) == log_trunc(g.reduce(1))


def test_trunc_examples():
    m = Modulus(5, 1)
    e = MatP.of([[0, 1], [0, 0]], m)
    assert exp_trunc(e) == MatP.of([[1, 1], [0, 1]], m)
    for t in range(5):
        u = MatP.of([[1, t], [0, 1]], m)
        assert log_trunc(u) == MatP.of([[0, t], [0, 0]], m)


def test_trunc_round_trip_exhaustive_f7():
    m = Modulus(7, 1)
    nilpotents = []
    for a in range(7):
        for b in range(7):
            for c in range(7):
                if (b * b + a * c) % 7 == 0:  # (a, b, c) on (e, h, f)
                    nilpotents.append(vec_to_mat((a, b, c), m))
    assert len(nilpotents) == 49  # the nilpotent cone of sl(2, F_7), zero included
    for x in nilpotents:
        assert log_trunc(exp_trunc(x)) == x
        u = exp_trunc(x)
        assert exp_trunc(log_trunc(u)) == u


def test_congruence_classes_examples():
    m = Modulus(3, 5)
    e3 = MatP.of([[0, 3], [0, 0]], m)
    for n in (2, 3):
        f_deep = MatP.of([[0, 0], [3**n, 0]], m)
        assert exp_congruence_classes(e3 + f_deep, n) == exp_congruence_classes(e3, n)
    # exp(x) = 1 + x mod p^2 on the p-domain
    rng = random.Random(5)
    for _ in range(30):
        x = random_congruence_domain_matrix(rng, m)
        assert exp_congruence(x).reduce(2) == (MatP.identity(m) + x).reduce(2)


@pytest.mark.parametrize("p", [3, 5])
def test_congruence_classes_well_defined(p):
    rng = random.Random(400 + p)
    m = Modulus(p, 5)
    for _ in range(50):
        x = random_congruence_domain_matrix(rng, m)
        n = rng.choice((2, 3))
        pn = p**n
        y = MatP.of([[pn * rng.randrange(m.pN // pn) for _ in range(2)] for _ in range(2)], m)
        assert exp_congruence_classes(x + y, n) == exp_congruence_classes(x, n)


def _traceless_pairs(modulus, n, coords):
    """All exp images of the span of the given sl2 directions at depth n."""
    p, N = modulus.p, modulus.N
    span = p ** (N - n)
    out = set()
    from itertools import product

    for ts in product(range(span), repeat=len(coords)):
        v = [0, 0, 0]
        for t, i in zip(ts, coords):
            v[i] = (t * p**n) % modulus.pN
        g = exp_congruence(vec_to_mat(tuple(v), modulus))
        out.add(g.rows)
    return out


@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("n", [1, 2])
def test_exp_maps_torus_and_borel_onto_their_congruence_parts(p, n):
    m = Modulus(p, 4)
    q = m.pN
    pn = p**n

    torus_image = _traceless_pairs(m, n, [1])  # the h direction
    torus_group = set()
    for a in range(q):
        if (a - 1) % pn == 0:
            torus_group.add(((a, 0), (0, pow(a, -1, q))))
    assert torus_image == torus_group

    borel_image = _traceless_pairs(m, n, [1, 0])  # h and e directions
    borel_group = set()
    for a in range(q):
        if (a - 1) % pn != 0:
            continue
        for b in range(0, q, pn):
            borel_group.add(((a, b), (0, pow(a, -1, q))))
    assert borel_image == borel_group


def test_homomorphy_on_commuting_elements():
    rng = random.Random(6)
    for p in (3, 5):
        m = Modulus(p, 5)
        for _ in range(40):
            x = random_congruence_domain_matrix(rng, m)
            t = rng.randrange(m.pN)
            y = x.scale(t)
            assert exp_congruence(x + y) == exp_congruence(x) @ exp_congruence(y)


def test_power_lifting_against_borel_product():
    # h^p inside (Borel cap K(p)) K(p^m) forces h inside (Borel cap K) K(p^{m-1})
    rng = random.Random(7)
    for p in (5, 7):
        m = Modulus(p, 4)
        hits = 0
        for trial in range(120):
            if trial % 3 == 0:
                # constructed positive: upper-triangular times a deep element
                a = 1 + p * rng.randrange(m.pN // p)
                b = rng.randrange(m.pN)
                btri = MatP.of([[a, b], [0, pow(a, -1, m.pN)]], m)
                depth = rng.randrange(2, m.N)
                h = btri @ random_congruence_element(rng, m, depth)
            else:
                h = random_sl2(rng, m)
            hp = h.power(p)
            for mm in range(2, m.N + 1):
                if borel_coset_witness(hp, mm, congruence_part=True) is not None:
                    hits += 1
                    assert borel_coset_witness(h, mm - 1, congruence_part=False) is not None
        assert hits > 40  # the sample must actually exercise the hypothesis


def test_roundtrip_precision_is_full():
    # no digits are lost: the round trip already holds at the top precision
    rng = random.Random(8)
    m = Modulus(7, 6)
    for _ in range(30):
        x = random_resnilp_matrix(rng, m)
        assert log_extended(exp_extended(x).matrix).matrix == x  # equality mod p^N exactly
