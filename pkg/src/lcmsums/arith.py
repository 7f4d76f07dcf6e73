"""Primes, factorization, k-ary gcd/lcm and the catalog of multiplicative functions.

Every function in the catalog is defined by its values on prime powers; the
value at a general ``n`` is always assembled from the factorization of ``n``.
Integer-valued functions stay in exact Python integers; the rest use doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

_SPF_LIMIT = 1 << 20


# -- primes and factorization ------------------------------------------------


def prime_array(limit: int) -> np.ndarray:
    """Primes <= limit as an ascending int64 array (Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if sieve[p]:
            sieve[p * p :: 2 * p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def sieve_primes(limit: int) -> list[int]:
    """Return the primes <= limit in ascending order (empty when limit < 2)."""
    return prime_array(limit).tolist()


@lru_cache(maxsize=4)
def smallest_prime_factor_table(limit: int) -> np.ndarray:
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in prime_array(math.isqrt(limit)).tolist():
        block = spf[p * p :: p]
        block[block == 0] = p
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    return spf


@lru_cache(maxsize=1)
def _small_primes() -> tuple[int, ...]:
    return tuple(sieve_primes(_SPF_LIMIT))


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization of ``n`` as ascending ``(prime, exponent)`` pairs.

    >>> factorize(12)
    [(2, 2), (3, 1)]
    >>> factorize(1)
    []
    """
    n = int(n)
    if n < 1:
        raise DomainError(f"factorize needs n >= 1, got {n}")
    out: list[tuple[int, int]] = []
    if n <= _SPF_LIMIT:
        spf = smallest_prime_factor_table(_SPF_LIMIT)
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out
    for p in _small_primes():
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    if n > 1:
        if n < _SPF_LIMIT * _SPF_LIMIT:
            out.append((n, 1))
        else:
            from sympy import factorint

            out.extend(sorted(factorint(n).items()))
    return out


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**j for d in divs for j in range(e + 1)]
    return sorted(divs)


def squarefree_divisors_with_mobius(n: int) -> list[tuple[int, int]]:
    """Pairs ``(e, mu(e))`` for the squarefree divisors e of n."""
    out = [(1, 1)]
    for p, _ in factorize(n):
        out += [(e * p, -m) for e, m in out]
    return out


def mobius(n: int) -> int:
    fac = factorize(n)
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def gcd_tuple(ns: Sequence[int]) -> int:
    if not ns:
        raise DomainError("gcd of an empty tuple")
    return math.gcd(*(int(n) for n in ns))


def lcm_tuple(ns: Sequence[int], bits: int | None = None) -> int:
    """Least common multiple by incremental pairwise lcm.

    Python integers never wrap; when ``bits`` is given, exceeding a signed
    accumulator of that width raises ``OverflowError`` instead.
    """
    if not ns:
        raise DomainError("lcm of an empty tuple")
    bound = None if bits is None else (1 << (bits - 1)) - 1
    acc = 1
    for n in ns:
        n = int(n)
        if n < 1:
            raise DomainError(f"lcm needs positive entries, got {n}")
        acc = acc // math.gcd(acc, n) * n
        if bound is not None and acc > bound:
            raise OverflowError(f"lcm exceeds the {bits}-bit accumulator")
    return acc


# -- multiplicative functions ------------------------------------------------


def _is_nonneg_int(r: float) -> bool:
    return float(r).is_integer() and r >= 0


def _power(p: Any, e: float) -> Any:
    """p**e: exact for int p with a nonnegative integral exponent, else floating."""
    if isinstance(p, np.ndarray):
        return np.power(p.astype(np.float64), float(e))
    if _is_nonneg_int(e):
        return p ** int(e)
    return math.exp(e * math.log(p))


@dataclass(frozen=True)
class MultiplicativeFunction:
    """A multiplicative function given on prime powers.

    ``prime_power_eval(p, nu)`` accepts either a Python int prime or a float
    numpy array of primes; the array form is what the Euler engine uses.
    """

    name: str
    r: float
    prime_power_eval: Callable[[Any, int], Any] = field(compare=False)
    integer_valued: bool

    def at(self, p: int, nu: int):
        if nu == 0:
            return 1
        return _cached_prime_power(self, int(p), int(nu))

    def __call__(self, n: int):
        return evaluate(self, n)


@lru_cache(maxsize=1 << 16)
def _cached_prime_power(f: MultiplicativeFunction, p: int, nu: int):
    return f.prime_power_eval(p, nu)


def evaluate(f: MultiplicativeFunction, n: int):
    """Value of f at n as the product over its prime-power factorization."""
    value = 1
    for p, nu in factorize(n):
        value *= f.at(p, nu)
    return value


def _zero_or_ones(p, value):
    if isinstance(p, np.ndarray):
        return np.full(p.shape, float(value))
    return value


def _sigma_base(r):
    def g(p, nu):
        return sum(_power(p, j * r) for j in range(nu + 1))

    return g


def _beta_base(r):
    def g(p, nu):
        return sum((-1) ** (nu - j) * _power(p, j * r) for j in range(nu + 1))

    return g


def _phi_base(r):
    return lambda p, nu: _power(p, nu * r) - _power(p, (nu - 1) * r)


def _psi_base(r):
    return lambda p, nu: _power(p, nu * r) + _power(p, (nu - 1) * r)


def _exp_sigma(p, nu):
    return sum(_power(p, d) for d in range(1, nu + 1) if nu % d == 0)


def _raised(base, r):
    def g(p, nu):
        b = base(p, nu)
        if isinstance(b, np.ndarray):
            return np.power(b, float(r))
        if _is_nonneg_int(r) and isinstance(b, int):
            return b ** int(r)
        return math.exp(r * math.log(b))

    return g


_BASE_ONE = {
    "sigma_pow_r": _sigma_base(1),
    "beta_pow_r": _beta_base(1),
    "phi_pow_r": _phi_base(1),
    "psi_pow_r": _psi_base(1),
    "unitary_phi_pow_r": lambda p, nu: _power(p, nu) - 1,
    "unitary_sigma_pow_r": lambda p, nu: _power(p, nu) + 1,
    "exp_sigma_pow_r": _exp_sigma,
}

_ALIASES = {
    "id": "id_r",
    "sigma": "sigma_r",
    "beta": "beta_r",
    "phi": "phi_r",
    "psi": "psi_r",
    "mu2": "mu_squared",
    "mu_sq": "mu_squared",
    "1": "one",
}

CATALOG = (
    "id_r",
    "sigma_r",
    "beta_r",
    "phi_r",
    "psi_r",
    "sigma_pow_r",
    "beta_pow_r",
    "phi_pow_r",
    "psi_pow_r",
    "unitary_phi_pow_r",
    "unitary_sigma_pow_r",
    "exp_sigma_pow_r",
    "mu_squared",
    "one",
)


@lru_cache(maxsize=None)
def make_function(name: str, r: float = 1.0) -> MultiplicativeFunction:
    """Build a catalog function; ``mu_squared`` and ``one`` ignore ``r`` (class exponent 0).

    Short aliases (``id``, ``sigma``, ``phi``...) map to the ``_r`` families.
    """
    name = _ALIASES.get(name, name)
    r = float(r)
    if name == "one":
        return MultiplicativeFunction("one", 0.0, lambda p, nu: _zero_or_ones(p, 1), True)
    if name == "mu_squared":

        def mu2(p, nu):
            return _zero_or_ones(p, 1 if nu <= 1 else 0)

        return MultiplicativeFunction("mu_squared", 0.0, mu2, True)
    exact = _is_nonneg_int(r)
    if name == "id_r":
        return MultiplicativeFunction(name, r, lambda p, nu: _power(p, nu * r), exact)
    families = {
        "sigma_r": _sigma_base,
        "beta_r": _beta_base,
        "phi_r": _phi_base,
        "psi_r": _psi_base,
    }
    if name in families:
        return MultiplicativeFunction(name, r, families[name](r), exact)
    if name in _BASE_ONE:
        return MultiplicativeFunction(name, r, _raised(_BASE_ONE[name], r), exact)
    raise ConfigurationError(f"unknown multiplicative function {name!r}; choose from {', '.join(CATALOG)}")


def is_constant_one(f: MultiplicativeFunction) -> bool:
    return f.name == "one" or (f.name == "id_r" and f.r == 0)


# -- class A_r membership ----------------------------------------------------


@dataclass(frozen=True)
class ClassReport:
    r: float
    C1_observed: float
    C2_observed: float
    C3_derived: float
    prime_limit: int
    exponent_limit: int


def check_class_membership(
    f: MultiplicativeFunction, r: float, prime_limit: int, exponent_limit: int
) -> ClassReport:
    """Observed constants of the two class conditions over a finite range.

    C1 is the max of |f(p) - p^r| / p^(r - 1/2) over primes p <= prime_limit and
    C2 the max of |f(p^nu)| / p^(nu r) over 2 <= nu <= exponent_limit.
    """
    if prime_limit < 2 or exponent_limit < 2:
        raise DomainError("prime_limit and exponent_limit must both be >= 2")
    c1 = 0.0
    c2 = 0.0
    for p in sieve_primes(prime_limit):
        logp = math.log(p)
        dev = abs(f.at(p, 1) - _power(p, r))
        c1 = max(c1, float(dev) / math.exp((r - 0.5) * logp))
        for nu in range(2, exponent_limit + 1):
            v = abs(f.at(p, nu))
            if v:
                c2 = max(c2, math.exp(math.log(v) - nu * r * logp))
    return ClassReport(r, c1, c2, max(c1 + 1.0, c2), prime_limit, exponent_limit)


def dirichlet_mu_conv(f: MultiplicativeFunction, n: int):
    """(mu * f)(n), multiplicative: on p^nu it is f(p^nu) - f(p^(nu-1))."""
    value = 1
    for p, nu in factorize(n):
        value *= f.at(p, nu) - f.at(p, nu - 1)
    return value

