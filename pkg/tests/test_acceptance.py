"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n>: PASS|FAIL`` line (collected again in
the pytest terminal summary). Run standalone with ``python3 tests/test_acceptance.py``.
"""

import math
import time

from lcmsums.arith import make_function
from lcmsums.euler import closed_form_C3, closed_form_C4, closed_form_D, closed_form_k2, euler_product
from lcmsums.inversion import check_reconstruction, h_local_match
from lcmsums.sums import (
    KINDS,
    check_fernandez_identity,
    convergence_study,
    exact_sum,
    gcd_bruteforce_values,
    gcd_identity_values,
)
from lcmsums.zeta import zeta

LINES: list[str] = []


def report(n: int, ok: bool, detail: str) -> bool:
    line = f"ACCEPTANCE {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return ok


def criterion_1() -> bool:
    t0 = time.perf_counter()
    res = euler_product(make_function("id", 1), 2, 1.0, "lcm", 1e-9)
    dt = time.perf_counter() - t0
    diff = abs(res.value - zeta(3) / zeta(2))
    return report(1, diff <= 1e-8 and dt < 5, f"|C - zeta(3)/zeta(2)| = {diff:.2e} (<= 1e-8), {dt:.2f}s (< 5s)")


def criterion_2() -> bool:
    t0 = time.perf_counter()
    worst = 0.0
    for r in (0.5, 1.0, 2.0):
        f = make_function("id", r)
        worst = max(worst, abs(closed_form_C3(r) - euler_product(f, 3, r, "lcm", 1e-9).value))
        worst = max(worst, abs(closed_form_C4(r) - euler_product(f, 4, r, "lcm", 1e-9).value))
    dt = time.perf_counter() - t0
    return report(2, worst <= 1e-8 and dt < 60, f"max closed-form gap C3/C4 = {worst:.2e} (<= 1e-8), {dt:.2f}s (< 60s)")


def criterion_3() -> bool:
    rel = max(abs(closed_form_D(3, r) * zeta(2 * r + 3) - closed_form_C3(r) * zeta(3 * r + 3)) for r in (1.0, 2.0))
    # the relation above is how D_3 is built; the ratio-kernel product checks it independently
    indep = max(
        abs(closed_form_D(3, r) - euler_product(make_function("id", r), 3, r, "ratio", 1e-9).value) for r in (1.0, 2.0)
    )
    d2 = closed_form_D(2, 1.0)
    gap = abs(d2 - math.pi**2 / 15)
    coef = abs(d2 / 4 - math.pi**2 / 60)
    ok = rel <= 1e-8 and indep <= 1e-8 and gap <= 1e-10 and coef <= 1e-10
    return report(
        3,
        ok,
        f"D3/C3 relation {rel:.1e}, D3 vs ratio product {indep:.1e}, |D2 - pi^2/15| = {gap:.1e}, |D2/4 - pi^2/60| = {coef:.1e}",
    )


def criterion_4() -> bool:
    mu2 = make_function("mu_squared")
    diffs = [abs(euler_product(mu2, k, 0.0, "lcm", 1e-9).value - zeta(2) ** -k) for k in (2, 3)]
    return report(4, max(diffs) <= 1e-8, f"|C - zeta(2)^-k| = {diffs[0]:.1e} (k=2), {diffs[1]:.1e} (k=3) (<= 1e-8)")


def criterion_5() -> bool:
    sigma = euler_product(make_function("sigma", 1), 2, 1.0, "lcm", 1e-9).value
    phi = euler_product(make_function("phi", 1), 2, 1.0, "lcm", 1e-9).value
    ds = abs(sigma - closed_form_k2("sigma"))
    dp = abs(phi - closed_form_k2("phi"))
    return report(
        5,
        ds <= 1e-8 and dp <= 1e-8,
        f"sigma: product {sigma:.10f} vs closed form {closed_form_k2('sigma'):.10f} (gap {ds:.2e}); "
        f"phi gap {dp:.2e} (<= 1e-8)",
    )


def criterion_6() -> bool:
    t0 = time.perf_counter()
    bad = []
    for name in ("id", "sigma", "phi", "mu2"):
        f = make_function(name, 1.0)
        for k in (2, 3):
            if gcd_identity_values(f, k, 200) != gcd_bruteforce_values(f, k, 200):
                bad.append((f.name, k))
    dt = time.perf_counter() - t0
    return report(6, not bad and dt < 60, f"identity == brute force for all x <= 200: {not bad} {bad or ''}, {dt:.2f}s (< 60s)")


def criterion_7() -> bool:
    failures = []
    for name in ("id", "sigma", "phi", "mu2"):
        f = make_function(name, 1.0)
        for k in (2, 3):
            if not check_reconstruction(f, k, None, 20).holds:
                failures.append(("reconstruction", f.name, k))
            for p in (2, 3, 5):
                if not h_local_match(f, k, None, p, 4).holds:
                    failures.append(("local", f.name, k, p))
    return report(7, not failures, f"reconstruction x <= 20 and local match a_max = 4: failures {failures}")


def criterion_8() -> bool:
    rep = check_fernandez_identity(50)
    return report(8, rep.holds and rep.checked == 125_000, f"holds={rep.holds} over {rep.checked} triples")


def criterion_9() -> bool:
    t0 = time.perf_counter()
    parts = []
    ok = True
    for name, k, r, xs in (("id", 3, 1.0, [32, 64, 128, 256]), ("mu2", 2, 0.0, [64, 128, 256, 512])):
        table = convergence_study(make_function(name, 1.0), k, r, "lcm", xs)
        errs = [abs(row[3]) for row in table.rows]
        decreasing = all(a > b for a, b in zip(errs, errs[1:]))
        slope_ok = table.fitted_slope is not None and table.fitted_slope <= -0.25
        ok = ok and decreasing and slope_ok
        parts.append(
            f"{name} k={k}: |err| {', '.join(f'{e:.3g}' for e in errs)} "
            f"strictly decreasing={decreasing}, slope {table.fitted_slope:.3f} (<= -0.25)"
        )
    dt = time.perf_counter() - t0
    ok = ok and dt < 180
    return report(9, ok, "; ".join(parts) + f"; {dt:.1f}s (< 180s)")


def criterion_10() -> bool:
    one = make_function("one")
    bad = []
    for k in (2, 3, 4):
        for kind in KINDS:
            for x in (1, 10, 100):
                res = exact_sum(one, k, x, kind)
                if not (res.value == x**k and res.relative_error == 0):
                    bad.append((k, kind, x, res.value, res.relative_error))
    return report(10, not bad, f"value == x^k and relative_error == 0 for all kinds, k <= 4, x in {{1,10,100}}: {bad or 'all'}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def test_acceptance_1_constant_oracle_k2():
    assert criterion_1()


def test_acceptance_2_closed_form_cross_checks():
    assert criterion_2()


def test_acceptance_3_ratio_constant_relations():
    assert criterion_3()


def test_acceptance_4_mu_squared_constant():
    assert criterion_4()


def test_acceptance_5_sigma_phi_k2_products():
    assert criterion_5()


def test_acceptance_6_gcd_identity():
    assert criterion_6()


def test_acceptance_7_reconstruction():
    assert criterion_7()


def test_acceptance_8_triple_gcd_lcm_identity():
    assert criterion_8()


def test_acceptance_9_convergence_trend():
    assert criterion_9()


def test_acceptance_10_degenerate_law():
    assert criterion_10()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
