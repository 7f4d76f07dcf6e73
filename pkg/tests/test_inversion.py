import pytest

from lcmsums.arith import CATALOG, make_function, sieve_primes
from lcmsums.errors import DomainError
from lcmsums.inversion import (
    abscissa,
    check_multiplicativity,
    check_reconstruction,
    default_box,
    h_decay_report,
    h_local_match,
    h_table,
    h_value,
    local_h_coefficients,
)

ID1 = make_function("id", 1)


def test_h_examples():
    table = h_table(ID1, 2, 1.0, 30)
    assert table[1, 1] == 1
    for p in sieve_primes(30):
        assert table[p, 1] == 0
        assert table[1, p] == 0
        assert table[p, p] == p - p * p
    assert table.exact


def test_h_value_single_tuple():
    assert h_value(ID1, 2, 1.0, (5, 5)) == -20
    assert h_value(ID1, 3, 1.0, (1, 1, 1)) == 1
    with pytest.raises(DomainError):
        h_value(ID1, 2, 1.0, (0, 3))


@pytest.mark.parametrize("name", CATALOG)
def test_h_at_origin_is_one(name):
    for k in (2, 3):
        assert h_table(make_function(name, 1.0), k, None, 2)[(1,) * k] == 1


@pytest.mark.parametrize("r", [1.0, 2.0, 0.5])
def test_first_order_vanishing_for_id(r):
    f = make_function("id", r)
    for k in (2, 3):
        table = h_table(f, k, r, 24)
        for p in sieve_primes(24):
            assert table[(p,) + (1,) * (k - 1)] == 0


def test_default_boxes():
    assert default_box(2) == 64
    assert default_box(3) == 24


@pytest.mark.parametrize("name", ["id", "sigma", "phi", "mu2", "psi"])
def test_multiplicativity(name):
    f = make_function(name, 1.0)
    assert check_multiplicativity(h_table(f, 2, None, 40)).holds
    assert check_multiplicativity(h_table(f, 3, None, 12)).holds


def test_multiplicativity_real_valued():
    f = make_function("sigma", 0.5)
    table = h_table(f, 2, None, 30)
    assert not table.exact
    assert check_multiplicativity(table).holds


def test_reconstruction_hand_case():
    # n = (p, p): p^2 h(1,1) + p h(p,1) + p h(1,p) + h(p,p) = p
    table = h_table(ID1, 2, 1.0, 7)
    for p in (2, 3, 5, 7):
        assert p * p * table[1, 1] + p * table[p, 1] + p * table[1, p] + table[p, p] == p
    assert check_reconstruction(ID1, 2, 1.0, 1).holds


@pytest.mark.parametrize("name", ["id", "sigma", "phi", "mu2"])
def test_reconstruction_k2(name):
    rep = check_reconstruction(make_function(name, 1.0), 2, None, 20)
    assert rep.holds and rep.checked == 400


def test_reconstruction_sigma_k3():
    rep = check_reconstruction(make_function("sigma", 1.0), 3, None, 20)
    assert rep.holds and rep.checked == 8000


@pytest.mark.parametrize("r", [0.5, -0.5])
def test_reconstruction_real_r(r):
    rep = check_reconstruction(make_function("phi", r), 2, r, 15)
    assert rep.holds and rep.max_abs_error < 1e-9


def test_reconstruction_detects_bad_table():
    table = h_table(ID1, 2, 1.0, 6)
    table.values[1, 1] += 1
    rep = check_reconstruction(ID1, 2, 1.0, 6, table=table)
    assert not rep.holds and rep.counterexample == (2, 2)


def test_local_coefficients_examples():
    assert local_h_coefficients(ID1, 2, 1.0, 2, 2)[0, 0] == 1
    assert local_h_coefficients(ID1, 2, 1.0, 2, 2)[1, 1] == -2


@pytest.mark.parametrize("name", ["id", "sigma", "phi", "mu2", "beta", "unitary_sigma_pow_r"])
@pytest.mark.parametrize("k", [2, 3])
def test_local_global_agreement(name, k):
    f = make_function(name, 1.0)
    for p in (2, 3, 5):
        rep = h_local_match(f, k, None, p, 4)
        assert rep.holds and rep.checked == 5**k


def test_local_global_phi_p3_grid():
    rep = h_local_match(make_function("phi", 1.0), 2, None, 3, 3)
    assert rep.holds and rep.checked == 16


def test_local_global_real_r():
    rep = h_local_match(make_function("sigma", 0.5), 3, None, 3, 4)
    assert rep.holds and rep.max_abs_error < 1e-9


def test_local_match_rejects_composite():
    with pytest.raises(DomainError):
        h_local_match(ID1, 2, 1.0, 4, 2)


def test_abscissa():
    assert abscissa(1.0) == 1.5
    assert abscissa(0.0) == 0.5
    assert abscissa(-0.5) == 0.25
    with pytest.raises(DomainError):
        abscissa(-1.0)


def test_decay_increments_shrink_id1():
    incs = []
    for B in (64, 128, 256):
        rep = h_decay_report(ID1, 2, 1.0, B, 0.1)
        assert rep.exponent == pytest.approx(1.6)
        assert rep.boxes == (B // 4, B // 2, B)
        assert rep.shrinking
        incs.append(rep.increments[1])
    assert incs[0] > incs[1] > incs[2]


def test_decay_for_one_is_bounded():
    rep = h_decay_report(make_function("one"), 2, 0.0, 64, 0.1)
    assert rep.partial_sums == (1.0, 1.0, 1.0)
    assert rep.shrinking


def test_decay_large_epsilon_tends_to_one():
    rep = h_decay_report(ID1, 2, 1.0, 64, 10.0)
    assert rep.partial_sums[-1] >= 1.0
    assert rep.partial_sums[-1] == pytest.approx(1.0, abs=1e-6)


def test_decay_negative_r_is_observational():
    rep = h_decay_report(make_function("id", -0.5), 2, None, 32, 0.1)
    assert rep.shrinking is None
    assert all(s > 0 for s in rep.partial_sums)


def test_decay_validation():
    with pytest.raises(DomainError):
        h_decay_report(ID1, 2, 1.0, 64, 0.0)
    with pytest.raises(DomainError):
        h_decay_report(ID1, 2, 1.0, 2, 0.1)


def test_table_workers_deterministic():
    f = make_function("sigma", 1.0)
    a = h_table(f, 3, None, 10)
    b = h_table(f, 3, None, 10, workers=3)
    assert (a.values == b.values).all()
