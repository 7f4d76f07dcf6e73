"""Convolution coefficients h_{f,k} of f([n_1..n_k]) against the r-th power kernel.

The identity inverted here is

    f([n_1, ..., n_k]) = sum over d_i | n_i of (n_1/d_1 ... n_k/d_k)^r h(d_1, ..., d_k)

so h is a finite Moebius inversion over squarefree e_i | d_i. Integer f with a
nonnegative integer r gives exact Python integers; everything else is float.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .arith import (
    MultiplicativeFunction,
    _is_nonneg_int,
    _power,
    divisors,
    evaluate,
    lcm_tuple,
    sieve_primes,
    squarefree_divisors_with_mobius,
)
from .errors import DomainError

DEFAULT_BOX = {2: 64, 3: 24}


def default_box(k: int) -> int:
    return DEFAULT_BOX.get(k, 8)


def _exact(f: MultiplicativeFunction, r: float) -> bool:
    return f.integer_valued and _is_nonneg_int(r)


def _total(terms, exact: bool):
    return sum(terms) if exact else math.fsum(terms)


def _equal(a, b, exact: bool, rel: float = 1e-9) -> bool:
    if exact:
        return a == b
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@dataclass
class HCoefficientTable:
    """h(d_1..d_k) for every tuple with 1 <= d_i <= box.

    ``values`` is a k-dimensional array indexed by d_i - 1 (object dtype when exact).
    """

    f: MultiplicativeFunction
    k: int
    r: float
    box: int
    exact: bool
    values: np.ndarray = field(repr=False)

    def __getitem__(self, d) -> object:
        return self.values[tuple(int(x) - 1 for x in d)]

    def items(self):
        for idx in np.ndindex(self.values.shape):
            yield tuple(i + 1 for i in idx), self.values[idx]


class _Inverter:
    """Shared pieces for evaluating h at arbitrary tuples with a memo on f([q])."""

    def __init__(self, f: MultiplicativeFunction, k: int, r: float, limit: int):
        self.f, self.k, self.r = f, k, r
        self.exact = _exact(f, r)
        self.splits = [None]
        for n in range(1, limit + 1):
            row = []
            for e, mu in squarefree_divisors_with_mobius(n):
                w = _power(e, r)
                row.append((mu * w if self.exact else mu * float(w), n // e))
            self.splits.append(row)
        self._fvals: dict[int, object] = {}

    def f_at(self, n: int):
        v = self._fvals.get(n)
        if v is None:
            v = evaluate(self.f, n)
            if not self.exact:
                v = float(v)
            self._fvals[n] = v
        return v

    def h(self, d) -> object:
        terms = []
        for combo in product(*(self.splits[x] for x in d)):
            coef = 1
            for c, _ in combo:
                coef *= c
            if coef:
                terms.append(coef * self.f_at(lcm_tuple([q for _, q in combo])))
        return _total(terms, self.exact)


def h_value(f: MultiplicativeFunction, k: int, r: float, d) -> object:
    """h at a single tuple by the inversion formula."""
    d = tuple(int(x) for x in d)
    if len(d) != k or min(d) < 1:
        raise DomainError(f"need a {k}-tuple of positive integers, got {d}")
    return _Inverter(f, k, r, max(d)).h(d)


def h_table(f: MultiplicativeFunction, k: int, r: float | None = None, B: int | None = None, workers: int = 1) -> HCoefficientTable:
    """Tabulate h on the box [1, B]^k by finite Moebius inversion.

    >>> from lcmsums.arith import make_function
    >>> t = h_table(make_function("id", 1), 2, 1, 3)
    >>> t[1, 1], t[2, 1], t[2, 2]
    (1, 0, -2)
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    r = f.r if r is None else float(r)
    B = default_box(k) if B is None else int(B)
    if B < 1:
        raise DomainError(f"box limit must be >= 1, got {B}")
    inv = _Inverter(f, k, r, B)
    # prime the memo serially so worker threads only read it
    for n in range(1, B + 1):
        inv.f_at(n)

    def slab(d1: int):
        return [inv.h((d1,) + rest) for rest in product(range(1, B + 1), repeat=k - 1)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            slabs = list(pool.map(slab, range(1, B + 1)))
    else:
        slabs = [slab(d1) for d1 in range(1, B + 1)]
    flat = [v for s in slabs for v in s]
    values = np.array(flat, dtype=object if inv.exact else np.float64).reshape((B,) * k)
    return HCoefficientTable(f, k, r, B, inv.exact, values)


# -- reconstruction ----------------------------------------------------------


@dataclass(frozen=True)
class CheckReport:
    holds: bool
    checked: int
    max_abs_error: float = 0.0
    counterexample: tuple | None = None


def check_reconstruction(f: MultiplicativeFunction, k: int, r: float | None = None, x: int = 20, table: HCoefficientTable | None = None) -> CheckReport:
    """Rebuild f([n]) from h for every n in [1, x]^k; exact comparison for integer cases."""
    r = f.r if r is None else float(r)
    if table is None:
        table = h_table(f, k, r, x)
    elif table.box < x:
        raise DomainError(f"table box {table.box} is smaller than x={x}")
    exact = table.exact
    divs = [None] + [[(d, _power(n // d, r)) for d in divisors(n)] for n in range(1, x + 1)]
    worst = 0.0
    checked = 0
    for n in product(range(1, x + 1), repeat=k):
        terms = []
        for combo in product(*(divs[m] for m in n)):
            w = 1
            for _, j in combo:
                w *= j
            terms.append(w * table.values[tuple(d - 1 for d, _ in combo)])
        got = _total(terms, exact)
        want = evaluate(f, lcm_tuple(n))
        checked += 1
        if not exact:
            worst = max(worst, abs(got - float(want)))
        if not _equal(got, want, exact):
            return CheckReport(False, checked, worst, n)
    return CheckReport(True, checked, worst)


def check_multiplicativity(table: HCoefficientTable) -> CheckReport:
    """h(mn) = h(m) h(n) for coprime tuple pairs m, n whose product stays in the box."""
    B, k, exact = table.box, table.k, table.exact
    checked = 0
    for m in product(range(1, B + 1), repeat=k):
        pm = math.prod(m)
        if pm == 1:
            continue
        for n in product(*(range(1, B // mi + 1) for mi in m)):
            pn = math.prod(n)
            if pn == 1 or pm > pn or math.gcd(pm, pn) != 1:
                continue
            mn = tuple(a * b for a, b in zip(m, n))
            checked += 1
            if not _equal(table[mn], table[m] * table[n], exact):
                return CheckReport(False, checked, counterexample=(m, n))
    return CheckReport(True, checked)


# -- local factor cross-check ------------------------------------------------


def local_h_coefficients(f: MultiplicativeFunction, k: int, r: float, p: int, a_max: int) -> np.ndarray:
    """Coefficients of sum f(p^max(nu)) u^nu times prod_i (1 - p^r u_i), truncated at degree a_max."""
    exact = _exact(f, r)
    dtype = object if exact else np.float64
    n = a_max + 1
    series = np.empty((n,) * k, dtype=dtype)
    for nu in np.ndindex(series.shape):
        v = f.at(p, max(nu))
        series[nu] = v if exact else float(v)
    pr = _power(p, r)
    for axis in range(k):
        shifted = np.zeros_like(series)
        src = [slice(None)] * k
        dst = [slice(None)] * k
        src[axis] = slice(0, n - 1)
        dst[axis] = slice(1, n)
        shifted[tuple(dst)] = series[tuple(src)]
        series = series - pr * shifted
    return series


def h_local_match(f: MultiplicativeFunction, k: int, r: float | None, p: int, a_max: int) -> CheckReport:
    """Compare h at (p^a_1..p^a_k), a_i <= a_max, from the global formula and from the local series."""
    r = f.r if r is None else float(r)
    if p not in sieve_primes(p):
        raise DomainError(f"{p} is not prime")
    local = local_h_coefficients(f, k, r, p, a_max)
    inv = _Inverter(f, k, r, p**a_max)
    exact = inv.exact
    worst = 0.0
    checked = 0
    for a in np.ndindex(local.shape):
        glob = inv.h(tuple(p**ai for ai in a))
        checked += 1
        if not exact:
            worst = max(worst, float(abs(glob - local[a])))
        if not _equal(glob, local[a], exact):
            return CheckReport(False, checked, worst, a)
    return CheckReport(True, checked, worst)


# -- decay -------------------------------------------------------------------


def abscissa(r: float) -> float:
    """Abscissa of absolute convergence for the h series."""
    if r <= -1:
        raise DomainError(f"need r > -1, got {r}")
    return r + 0.5 if r >= 0 else (r + 1) / 2


@dataclass(frozen=True)
class DecayReport:
    r: float
    exponent: float
    boxes: tuple[int, ...]
    partial_sums: tuple[float, ...]
    increments: tuple[float, ...]
    shrinking: bool | None


def h_decay_report(f: MultiplicativeFunction, k: int, r: float | None = None, B: int | None = None, epsilon: float = 0.1, table: HCoefficientTable | None = None) -> DecayReport:
    """Partial sums of |h(d)| / (d_1..d_k)^(A + epsilon) over the boxes B/4, B/2, B.

    ``shrinking`` is None for r < 0, where the report is observational only.
    """
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    r = f.r if r is None else float(r)
    B = default_box(k) if B is None else int(B)
    if B < 4:
        raise DomainError(f"box limit must be >= 4 for a decay report, got {B}")
    if table is None or table.box < B:
        table = h_table(f, k, r, B)
    s = abscissa(r) + epsilon
    mags = np.abs(np.asarray(table.values, dtype=np.float64))[(slice(0, B),) * k]
    scale = np.arange(1, B + 1, dtype=np.float64) ** (-s)
    for axis in range(k):
        shape = [1] * k
        shape[axis] = B
        mags = mags * scale.reshape(shape)
    boxes = (B // 4, B // 2, B)
    sums = tuple(math.fsum(mags[(slice(0, b),) * k].ravel().tolist()) for b in boxes)
    incs = (sums[1] - sums[0], sums[2] - sums[1])
    shrinking = None if r < 0 else (incs[1] < incs[0] or incs[1] == 0.0)
    return DecayReport(r, s, boxes, sums, incs, shrinking)
