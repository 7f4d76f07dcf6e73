"""Riemann zeta and the prime zeta function for real arguments s > 1."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError


@lru_cache(maxsize=1)
def _bernoulli_even(count: int = 30) -> tuple[float, ...]:
    """B_2, B_4, ..., B_{2*count} via the Akiyama-Tanigawa recurrence."""
    n_max = 2 * count
    a = [Fraction(0)] * (n_max + 1)
    out = []
    for m in range(n_max + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        if m >= 2 and m % 2 == 0:
            out.append(float(a[0]))
    return tuple(out)


def zeta_minus_one(s: float, tol: float = 1e-17) -> float:
    """zeta(s) - 1 by Euler-Maclaurin summation, accurate in the relative sense for large s."""
    if not s > 1:
        raise DomainError(f"zeta needs s > 1, got {s}")
    s = float(s)
    if s > 10:
        n_max = int(2 * 10 ** (18 / s)) + 2
        return math.fsum(math.exp(-s * math.log(n)) for n in range(n_max, 1, -1))
    n_cut = 12 if s > 3 else 20
    head = [math.exp(-s * math.log(n)) for n in range(2, n_cut)]
    N = float(n_cut)
    logN = math.log(N)
    tail = [math.exp((1 - s) * logN) / (s - 1), 0.5 * math.exp(-s * logN)]
    rising = s  # s (s+1) ... (s+2j-2)
    power = math.exp(-(s + 1) * logN)  # N^(-s-2j+1) at j = 1
    fact = 2.0  # (2j)!
    for j, b in enumerate(_bernoulli_even(), start=1):
        term = b / fact * rising * power
        tail.append(term)
        if abs(term) < tol * 1e-3:
            break
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        power /= N * N
        fact *= (2 * j + 1) * (2 * j + 2)
    return math.fsum(head + tail)


def zeta(s: float, tol: float = 1e-12) -> float:
    """Riemann zeta at real s > 1 (absolute error well below ``tol``).

    >>> round(zeta(2), 12) == round(math.pi**2 / 6, 12)
    True
    """
    return 1.0 + zeta_minus_one(s, tol=min(tol, 1e-15))


def _mobius_small(n: int) -> int:
    m, d, res = n, 2, 1
    while d * d <= m:
        if m % d == 0:
            m //= d
            if m % d == 0:
                return 0
            res = -res
        d += 1
    return -res if m > 1 else res


def prime_zeta(s: float) -> float:
    """Sum of p^-s over all primes, via the Moebius inversion of log zeta."""
    if not s > 1:
        raise DomainError(f"prime zeta needs s > 1, got {s}")
    terms = []
    n = 1
    while True:
        ns = n * s
        if ns * math.log(2) > 60:
            break
        mu = _mobius_small(n)
        if mu:
            terms.append(mu * math.log1p(zeta_minus_one(ns)) / n)
        n += 1
    return math.fsum(terms)


def prime_zeta_tail(s: float, primes: np.ndarray) -> float:
    """Sum of p^-s over the primes beyond the last entry of ``primes`` (which must be all primes up to it)."""
    head = np.exp(-s * np.log(primes.astype(np.float64)))
    return max(prime_zeta(s) - math.fsum(head), 0.0)
