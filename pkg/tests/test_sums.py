import math
from itertools import permutations, product

import pytest

from lcmsums.arith import CATALOG, evaluate, make_function
from lcmsums.errors import ConfigurationError, DomainError, ResourceCapError
from lcmsums.sums import (
    KINDS,
    chunk_totals,
    check_fernandez_identity,
    convergence_study,
    exact_sum,
    fit_slope,
    gcd_bruteforce_values,
    gcd_identity_values,
    max_feasible_x,
    naive_sum,
    sum_gcd_bruteforce,
    sum_gcd_via_identity,
    sum_lcm,
    sum_normalized,
    sum_ratio,
)

ID1 = make_function("id", 1)
ONE = make_function("one")
MU2 = make_function("mu_squared")


def test_lcm_examples():
    assert sum_lcm(ID1, 2, 2).value == 7
    assert sum_lcm(ID1, 3, 2).value == 15
    for name in CATALOG:
        for k in (2, 3, 4):
            assert sum_lcm(make_function(name, 1.0), k, 1, with_main_term=False).value == 1


def test_ratio_examples():
    assert sum_ratio(ID1, 2, 2).value == 6
    # plain double loop over [m, n] / (m, n)
    assert sum_ratio(ID1, 2, 3).value == 25


def test_ratio_diagonal_contributes_x():
    f = make_function("sigma", 1)
    x, k = 9, 3
    diag = sum(evaluate(f, 1) for _ in range(1, x + 1))
    assert diag == x
    full = sum_ratio(f, k, x, with_main_term=False).value
    off = naive_sum(f, k, x, "ratio") - diag
    assert full == off + x


def test_normalized_examples():
    assert sum_normalized(ID1, 2, 2, 1.0).value == 3.5
    assert sum_normalized(ID1, 2, 1, 1.0).value == 1.0
    assert sum_normalized(MU2, 2, 2, 0.0).value == 4.0


def test_gcd_examples():
    assert sum_gcd_via_identity(ID1, 2, 2).value == 5
    assert sum_gcd_bruteforce(ID1, 2, 2).value == 5
    assert sum_gcd_via_identity(ID1, 3, 1).value == 1
    for x in (1, 7, 30):
        assert sum_gcd_via_identity(ONE, 3, x).value == x**3


def test_id1_k3_x10_against_plain_loop():
    # triple loop with math.lcm
    assert sum_lcm(ID1, 3, 10).value == 60679


@pytest.mark.parametrize("name", CATALOG)
@pytest.mark.parametrize("kind", KINDS)
def test_multiset_reduction_matches_cube_k2(name, kind):
    for r in (1.0, 0.5):
        f = make_function(name, r)
        cum = _cumulative_values(f, 2, 50, kind)
        for x in (1, 2, 7, 24, 50):
            _assert_same(cum[x], naive_sum(f, 2, x, kind), f, kind)


@pytest.mark.parametrize("name", CATALOG)
@pytest.mark.parametrize("kind", KINDS)
def test_multiset_reduction_matches_cube_k3(name, kind):
    f = make_function(name, 1.0)
    cum = _cumulative_values(f, 3, 16, kind)
    for x in (1, 5, 16):
        _assert_same(cum[x], naive_sum(f, 3, x, kind), f, kind)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["id", "sigma", "mu2", "phi_pow_r"])
def test_multiset_reduction_matches_cube_k3_x50(name):
    f = make_function(name, 0.5 if name == "phi_pow_r" else 1.0)
    for kind in ("lcm", "ratio"):
        _assert_same(exact_sum(f, 3, 50, kind, with_main_term=False).value, naive_sum(f, 3, 50, kind), f, kind)


def _cumulative_values(f, k, x, kind):
    totals = chunk_totals(f, k, x, kind)
    out = [0]
    for i in range(1, x + 1):
        out.append(sum(totals[1 : i + 1]) if isinstance(totals[1], int) else math.fsum(totals[1 : i + 1]))
    return out


def _assert_same(got, want, f, kind):
    if f.integer_valued and kind != "normalized_lcm":
        assert type(got) is int
        assert got == want
    else:
        assert got == pytest.approx(want, rel=1e-12)


def test_k4_against_cube():
    for kind in KINDS:
        assert exact_sum(ID1, 4, 7, kind, with_main_term=False).value == pytest.approx(naive_sum(ID1, 4, 7, kind), rel=1e-13)


def test_permutation_invariance():
    f = make_function("sigma", 1)
    for ns in [(4, 6, 10), (12, 18, 5), (9, 27, 8)]:
        vals = {evaluate(f, math.lcm(*p)) for p in permutations(ns)}
        assert len(vals) == 1


def test_k2_reduction_law():
    for r in (1, 2):
        for m, n in product(range(1, 101), repeat=2):
            assert math.lcm(m, n) ** r == (m * n // math.gcd(m, n)) ** r


@pytest.mark.parametrize("kind", KINDS)
def test_worker_count_does_not_change_result(kind):
    f = make_function("sigma", 0.5)
    serial = chunk_totals(f, 3, 60, kind)
    threaded = chunk_totals(f, 3, 60, kind, workers=4)
    assert serial == threaded
    g = make_function("phi", 1.0)
    assert exact_sum(g, 3, 60, kind, workers=3, with_main_term=False) == exact_sum(g, 3, 60, kind, with_main_term=False)


@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("kind", KINDS)
def test_degenerate_one(k, kind):
    for x in (1, 10, 30):
        res = exact_sum(ONE, k, x, kind)
        assert res.value == x**k
        assert res.relative_error == 0


def test_exact_accumulation_beyond_int64():
    # terms above 2^53 and a total above 2^63 force the big-integer path
    f = make_function("id", 5)
    value = sum_lcm(f, 2, 100, with_main_term=False).value
    assert value > 2**63
    assert type(value) is int
    assert value == naive_sum(f, 2, 100, "lcm")
    f = make_function("sigma", 3)
    assert sum_lcm(f, 3, 12, with_main_term=False).value == naive_sum(f, 3, 12, "lcm")


def test_caps():
    assert max_feasible_x(2) == 10**4
    assert max_feasible_x(3) == 512
    assert max_feasible_x(4) == 128
    with pytest.raises(ResourceCapError) as info:
        sum_lcm(ID1, 3, 513)
    assert info.value.max_feasible_x == 512
    with pytest.raises(DomainError):
        sum_lcm(ID1, 1, 5)
    with pytest.raises(ConfigurationError):
        exact_sum(ID1, 2, 5, "max")


def test_gcd_identity_matches_bruteforce():
    for name in ("id", "sigma", "phi", "mu2", "psi"):
        f = make_function(name, 1)
        for k in (2, 3):
            assert gcd_identity_values(f, k, 120) == gcd_bruteforce_values(f, k, 120)


def test_main_term_examples():
    res = sum_lcm(ID1, 2, 100)
    zeta_ratio = 0.7307629694014385
    assert res.main_term == pytest.approx(zeta_ratio * 100**4 / 4, rel=1e-9)
    assert sum_gcd_bruteforce(make_function("sigma"), 2, 10).main_term is None


def test_convergence_study_rows_and_slope():
    table = convergence_study(ID1, 3, 1.0, "lcm", [32, 64, 128])
    assert [row[0] for row in table.rows] == [32, 64, 128]
    assert table.fitted_slope < 0
    errs = [abs(row[3]) for row in table.rows]
    assert errs[0] > errs[1] > errs[2]
    assert table.rows[0][1] == sum_lcm(ID1, 3, 32, with_main_term=False).value


def test_convergence_study_one_is_exact():
    table = convergence_study(ONE, 3, 0.0, "ratio", [2, 5, 9])
    assert [row[3] for row in table.rows] == [0.0, 0.0, 0.0]
    assert table.fitted_slope is None


def test_convergence_study_validation():
    with pytest.raises(DomainError):
        convergence_study(ID1, 2, 1.0, "lcm", [10, 5])
    with pytest.raises(ConfigurationError):
        convergence_study(make_function("sigma"), 2, 1.0, "gcd", [10, 20])


def test_fit_slope():
    xs = [10, 100, 1000]
    assert fit_slope(xs, [x**-0.5 for x in xs]) == pytest.approx(-0.5)
    assert fit_slope([1, 2], [0.0, 0.0]) is None


def test_fernandez_identity():
    assert check_fernandez_identity(1).holds
    m, n, q = 4, 6, 10
    assert math.lcm(m, n, q) * math.gcd(m, n) * math.gcd(m, q) * math.gcd(n, q) == 480 == m * n * q * math.gcd(m, n, q)
    rep = check_fernandez_identity(30)
    assert rep.holds and rep.checked == 30**3
