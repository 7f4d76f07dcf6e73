"""Exact finite sums over the cube [1, x]^k and the asymptotic comparator.

Tuples are enumerated as nondecreasing k-tuples, each weighted by the number
of its distinct permutations k!/prod(mult!). The sum is split into chunks by
the largest entry m, so chunk totals are the increments S(m) - S(m-1) and a
single pass yields the sum for every x' <= x.

Inside a chunk the first k-1 entries range over a fixed table of
nondecreasing (k-1)-tuples in colex order (those with last entry <= m form a
prefix of the table). Values of f at lcm(n_1..n_k) are assembled from the
exponents of the entries: primes p with p^2 <= x are handled through
per-prime exponent tables, and every entry has at most one larger prime
factor, which appears to the first power.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .arith import (
    MultiplicativeFunction,
    evaluate,
    gcd_tuple,
    is_constant_one,
    lcm_tuple,
    prime_array,
    squarefree_divisors_with_mobius,
)
from .errors import ConfigurationError, DomainError, ResourceCapError
from .euler import main_constant
from .zeta import zeta

KINDS = ("lcm", "ratio", "normalized_lcm", "gcd")
DEFAULT_CAPS = {2: 10**4, 3: 512, 4: 128}
MULTISET_CAP = 25_000_000
_EXACT_LIMIT = float(2**53)


@dataclass(frozen=True)
class ExactSumResult:
    x: int
    k: int
    kind: str
    value: int | float
    main_term: float | None
    relative_error: float | None


@dataclass
class ConvergenceTable:
    rows: list[tuple[int, int | float, float, float]]
    fitted_slope: float | None
    constant: float = math.nan
    metadata: dict = field(default_factory=dict)


def max_feasible_x(k: int) -> int:
    if k in DEFAULT_CAPS:
        return DEFAULT_CAPS[k]
    x = 1
    while math.comb(x + k, k) <= MULTISET_CAP:
        x += 1
    return x


def _check_size(k: int, x: int, allow_large: bool) -> None:
    if k < 2:
        raise DomainError(f"arity k must be >= 2, got {k}")
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    cap = max_feasible_x(k)
    if x > cap and not allow_large:
        raise ResourceCapError(f"x={x} exceeds the enumeration cap for k={k} (max feasible x={cap})", cap)


def _exact_mode(f: MultiplicativeFunction, kind: str) -> bool:
    return f.integer_valued and kind != "normalized_lcm"


# -- enumeration tables ------------------------------------------------------


def _colex_rows(j: int, x: int):
    """Nondecreasing j-tuples over [1, x] in colex order, and counts with last entry <= m."""
    if j == 0:
        return np.zeros((1, 0), dtype=np.int64), np.ones(x + 1, dtype=np.int64)
    prev, prev_cnt = _colex_rows(j - 1, x)
    blocks = []
    cnt = np.zeros(x + 1, dtype=np.int64)
    total = 0
    for v in range(1, x + 1):
        head = prev[: prev_cnt[v]]
        blocks.append(np.column_stack([head, np.full(len(head), v, dtype=np.int64)]))
        total += len(head)
        cnt[v] = total
    return np.concatenate(blocks), cnt


class _Tables:
    """Per-prime exponent tables and f values on the prime powers that occur for entries <= x."""

    def __init__(self, f: MultiplicativeFunction, x: int):
        self.x = x
        n = np.arange(x + 1, dtype=np.int64)
        self.small = [int(p) for p in prime_array(math.isqrt(x))]
        self.expo = {}
        rest = n.copy()
        rest[0] = 1
        for p in self.small:
            e = np.zeros(x + 1, dtype=np.int64)
            mask = rest % p == 0
            while mask.any():
                e[mask] += 1
                rest[mask] //= p
                mask = rest % p == 0
            self.expo[p] = e
        # what is left is 1 or a single prime q with q^2 > x
        self.big = rest
        self.f_small_exact = {}
        self.f_small_float = {}
        for p in self.small:
            emax = int(self.expo[p].max())
            vals = [f.at(p, e) for e in range(emax + 1)]
            self.f_small_exact[p] = np.array(vals, dtype=object)
            self.f_small_float[p] = np.array([float(v) for v in vals])
        big_vals = [1] * (x + 1)
        for q in np.unique(rest).tolist():
            if q > 1:
                big_vals[q] = f.at(q, 1)
        self.f_big_exact = np.array(big_vals, dtype=object)
        self.f_big_float = np.array([float(v) for v in big_vals])


class _Prefix:
    """Aggregates over the first k-1 entries of every row of the colex table."""

    def __init__(self, tables: _Tables, k: int, kind: str, r: float):
        x = tables.x
        self.k = k
        rows, self.cnt = _colex_rows(k - 1, x)
        self.rows = rows
        j = k - 1
        self.emax = {}
        self.emin = {}
        for p in tables.small:
            e = tables.expo[p][rows]
            self.emax[p] = e.max(axis=1)
            self.emin[p] = e.min(axis=1)
        q = tables.big[rows]
        self.q = q
        # distinct big primes of the prefix: keep column i unless it repeats an earlier column
        first = np.ones_like(q, dtype=bool)
        for i in range(1, j):
            for h in range(i):
                first[:, i] &= q[:, i] != q[:, h]
        self.q_first = first & (q > 1)
        self.all_same_q = np.where((q == q[:, :1]).all(axis=1) & (q[:, 0] > 1), q[:, 0], 0)
        # multiset weights: prod of running run lengths, and trailing run length
        run = np.ones(len(rows), dtype=np.int64)
        denom = np.ones(len(rows), dtype=np.int64)
        for i in range(1, j):
            run = np.where(rows[:, i] == rows[:, i - 1], run + 1, 1)
            denom *= run
        self.denom = denom
        self.trail = run
        self.last = rows[:, -1]
        if kind == "normalized_lcm":
            self.norm = np.exp(-r * np.log(rows.astype(np.float64)).sum(axis=1))


def _chunk_values(tables: _Tables, pre: _Prefix, kind: str, m: int, c: int, exact_tables: bool):
    fs = tables.f_small_exact if exact_tables else tables.f_small_float
    fb = tables.f_big_exact if exact_tables else tables.f_big_float
    vals = np.ones(c, dtype=object) if exact_tables else np.ones(c)
    for p in tables.small:
        e = int(tables.expo[p][m])
        emax = pre.emax[p][:c]
        if kind == "gcd":
            if e:
                vals = vals * fs[p][np.minimum(pre.emin[p][:c], e)]
            continue
        if e == 0:
            vals = vals * fs[p][emax]
        elif kind == "ratio":
            vals = vals * fs[p][np.maximum(emax, e) - np.minimum(pre.emin[p][:c], e)]
        else:
            vals = vals * fs[p][np.maximum(emax, e)]
    qm = int(tables.big[m])
    q = pre.q[:c]
    same = pre.all_same_q[:c]
    if kind == "gcd":
        if qm > 1:
            vals = vals * np.where(same == qm, fb[qm], fb[1])
        return vals
    big = np.ones(c, dtype=object) if exact_tables else np.ones(c)
    for i in range(q.shape[1]):
        big = big * np.where(pre.q_first[:c, i], fb[q[:, i]], fb[1])
    if qm > 1:
        seen = (q == qm).any(axis=1)
        big = big * np.where(seen, fb[1], fb[qm])
        if kind == "ratio":
            # q divides every entry: exponent max - min = 0
            big = np.where(same == qm, fb[1], big)
    return vals * big


def _chunk_weights(pre: _Prefix, m: int, c: int) -> np.ndarray:
    denom = pre.denom[:c] * np.where(pre.last[:c] == m, pre.trail[:c] + 1, 1)
    return math.factorial(pre.k) // denom


def _chunk_total(tables, pre, kind, m, exact, r):
    c = int(pre.cnt[m])
    w = _chunk_weights(pre, m, c)
    if not exact:
        vals = _chunk_values(tables, pre, kind, m, c, False)
        if kind == "normalized_lcm":
            vals = vals * pre.norm[:c] * math.exp(-r * math.log(m))
        return math.fsum((vals * w).tolist())
    vals = _chunk_values(tables, pre, kind, m, c, False)
    terms = vals * w
    mag = np.abs(terms)
    if np.all(np.isfinite(terms)) and (c == 0 or mag.max() < _EXACT_LIMIT) and mag.sum() < 2.0**62:
        return int(terms.astype(np.int64).sum())
    vals = _chunk_values(tables, pre, kind, m, c, True)
    return int(sum((vals * w.astype(object)).tolist()))


def chunk_totals(
    f: MultiplicativeFunction,
    k: int,
    x: int,
    kind: str,
    r: float | None = None,
    workers: int = 1,
    allow_large: bool = False,
) -> list:
    """Contribution of the tuples whose largest entry is m, for m = 1..x (index 0 unused)."""
    if kind not in KINDS:
        raise ConfigurationError(f"unknown sum kind {kind!r}; choose from {KINDS}")
    _check_size(k, x, allow_large)
    r = f.r if r is None else float(r)
    exact = _exact_mode(f, kind)
    tables = _Tables(f, x)
    pre = _Prefix(tables, k, kind, r)

    def run(m):
        return _chunk_total(tables, pre, kind, m, exact, r)

    ms = range(1, x + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            totals = list(pool.map(run, ms))
    else:
        totals = [run(m) for m in ms]
    return [0] + totals


def _cumulative(totals, exact: bool):
    out = [0]
    if exact:
        acc = 0
        for t in totals[1:]:
            acc += t
            out.append(acc)
    else:
        for i in range(1, len(totals)):
            out.append(math.fsum(totals[1 : i + 1]))
    return out


# -- main terms --------------------------------------------------------------


def _x_power(x: int, e: float) -> float:
    if float(e).is_integer():
        return float(x ** int(e))
    return math.exp(e * math.log(x))


def main_term(f: MultiplicativeFunction, k: int, x: int, kind: str, r: float | None = None, constant: float | None = None):
    """Leading asymptotic term, or None where no main term is provided (gcd kind for most f)."""
    r = f.r if r is None else float(r)
    if constant is None:
        constant = kind_constant(f, k, kind, r)
    if constant is None:
        return None
    if kind in ("lcm", "ratio"):
        return constant * _x_power(x, k * (r + 1)) / (r + 1) ** k
    return constant * float(x) ** k


def kind_constant(f: MultiplicativeFunction, k: int, kind: str, r: float | None = None):
    r = f.r if r is None else float(r)
    if kind == "gcd":
        if is_constant_one(f):
            return 1.0
        if f.name == "id_r" and f.r == 1 and k >= 3:
            return zeta(k - 1) / zeta(k)
        return None
    if is_constant_one(f) and r == 0:
        return 1.0
    kernel = "ratio_max_minus_min" if kind == "ratio" else "lcm_max"
    return main_constant(f, k, r, kernel)


def _result(f, k, x, kind, value, r, constant) -> ExactSumResult:
    mt = main_term(f, k, x, kind, r, constant)
    rel = None if mt is None else value / mt - 1.0
    return ExactSumResult(x, k, kind, value, mt, rel)


def exact_sum(f, k, x, kind, r=None, *, workers=1, allow_large=False, with_main_term=True) -> ExactSumResult:
    r = f.r if r is None else float(r)
    totals = chunk_totals(f, k, x, kind, r, workers, allow_large)
    exact = _exact_mode(f, kind)
    value = sum(totals) if exact else math.fsum(totals)
    if not with_main_term:
        return ExactSumResult(x, k, kind, value, None, None)
    return _result(f, k, x, kind, value, r, kind_constant(f, k, kind, r))


def sum_lcm(f, k, x, r=None, **kw) -> ExactSumResult:
    """Sum of f(lcm(n_1..n_k)) over the cube [1, x]^k."""
    return exact_sum(f, k, x, "lcm", r, **kw)


def sum_ratio(f, k, x, r=None, **kw) -> ExactSumResult:
    """Sum of f(lcm/gcd) over the cube [1, x]^k."""
    return exact_sum(f, k, x, "ratio", r, **kw)


def sum_normalized(f, k, x, r=None, **kw) -> ExactSumResult:
    """Sum of f(lcm) / (n_1 ... n_k)^r over the cube, in floating point."""
    return exact_sum(f, k, x, "normalized_lcm", r, **kw)


def sum_gcd_bruteforce(f, k, x, **kw) -> ExactSumResult:
    """Sum of f(gcd(n_1..n_k)) by enumeration of the cube."""
    return exact_sum(f, k, x, "gcd", **kw)


def mu_convolution(f: MultiplicativeFunction, d: int):
    """(mu * f)(d) by enumerating the squarefree divisors of d."""
    terms = [mu * f(d // e) for e, mu in squarefree_divisors_with_mobius(d)]
    return sum(terms) if f.integer_valued else math.fsum(terms)


def gcd_identity_values(f: MultiplicativeFunction, k: int, x_max: int) -> list:
    """sum_{d<=x} (mu*f)(d) floor(x/d)^k for every x = 0..x_max."""
    g = [0] + [mu_convolution(f, d) for d in range(1, x_max + 1)]
    out = [0]
    for x in range(1, x_max + 1):
        terms = [g[d] * (x // d) ** k for d in range(1, x + 1)]
        out.append(sum(terms) if f.integer_valued else math.fsum(terms))
    return out


def sum_gcd_via_identity(f: MultiplicativeFunction, k: int, x: int) -> ExactSumResult:
    if x < 1:
        raise DomainError(f"x must be >= 1, got {x}")
    value = gcd_identity_values(f, k, x)[x]
    return _result(f, k, x, "gcd", value, f.r, kind_constant(f, k, "gcd"))


def gcd_bruteforce_values(f: MultiplicativeFunction, k: int, x_max: int, **kw) -> list:
    totals = chunk_totals(f, k, x_max, "gcd", **kw)
    return _cumulative(totals, f.integer_valued)


# -- naive oracle ------------------------------------------------------------


def naive_sum(f: MultiplicativeFunction, k: int, x: int, kind: str, r: float | None = None):
    """Full k-fold loop, one scalar evaluation per tuple. Test oracle only."""
    r = f.r if r is None else float(r)
    terms = []
    for ns in product(range(1, x + 1), repeat=k):
        if kind == "lcm":
            terms.append(evaluate(f, lcm_tuple(ns)))
        elif kind == "ratio":
            terms.append(evaluate(f, lcm_tuple(ns) // gcd_tuple(ns)))
        elif kind == "gcd":
            terms.append(evaluate(f, gcd_tuple(ns)))
        else:
            terms.append(float(evaluate(f, lcm_tuple(ns))) / math.prod(ns) ** r)
    if _exact_mode(f, kind):
        return sum(terms)
    return math.fsum(float(t) for t in terms)


# -- convergence -------------------------------------------------------------


def fit_slope(xs: Sequence[float], errors: Sequence[float]) -> float | None:
    pts = [(math.log(x), math.log(abs(e))) for x, e in zip(xs, errors) if e]
    if len(pts) < 2:
        return None
    lx, ly = zip(*pts)
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def convergence_study(
    f: MultiplicativeFunction,
    k: int,
    r: float | None,
    kind: str,
    x_values: Sequence[int],
    *,
    workers: int = 1,
    allow_large: bool = False,
    constant: float | None = None,
) -> ConvergenceTable:
    """Exact sums and relative errors against the main term at each x, plus the log-log slope."""
    xs = list(x_values)
    if not xs or any(b <= a for a, b in zip(xs, xs[1:])):
        raise DomainError("x_values must be a nonempty strictly ascending list")
    r = f.r if r is None else float(r)
    if constant is None:
        constant = kind_constant(f, k, kind, r)
    if constant is None:
        raise ConfigurationError(f"no main term available for kind={kind} with f={f.name}")
    totals = chunk_totals(f, k, xs[-1], kind, r, workers, allow_large)
    cum = _cumulative(totals, _exact_mode(f, kind))
    rows = []
    for x in xs:
        res = _result(f, k, x, kind, cum[x], r, constant)
        rows.append((x, res.value, res.main_term, res.relative_error))
    slope = fit_slope(xs, [row[3] for row in rows])
    return ConvergenceTable(rows, slope, constant)


# -- gcd/lcm identity for three variables -------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    holds: bool
    checked: int
    counterexample: tuple[int, int, int] | None = None


def check_fernandez_identity(limit: int) -> IdentityReport:
    """Check lcm(m,n,q) (m,n)(m,q)(n,q) = m n q (m,n,q) for all 1 <= m,n,q <= limit."""
    if limit < 1:
        raise DomainError("limit must be >= 1")
    checked = 0
    for m in range(1, limit + 1):
        for n in range(1, limit + 1):
            gmn = math.gcd(m, n)
            lmn = m * n // gmn
            for q in range(1, limit + 1):
                lhs = math.lcm(lmn, q) * gmn * math.gcd(m, q) * math.gcd(n, q)
                rhs = m * n * q * math.gcd(gmn, q)
                checked += 1
                if lhs != rhs:
                    return IdentityReport(False, checked, (m, n, q))
    return IdentityReport(True, checked)
