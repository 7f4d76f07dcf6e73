"""Local Euler factors and adaptive prime products for the constants C_{f,k} and D_{f,k}.

Both constants are products over primes of ``(1 - 1/p)^k`` times a k-fold
series in the exponents of p. With ``t = p^-(r+1)`` the series collapses to
a one-dimensional sum once tuples are grouped by their maximum (lcm kernel)
or by (min, max) (ratio kernel). The grouped weights are integer
polynomials in t with nonnegative coefficients, so they evaluate without
cancellation.

Truncation over primes p > P is handled by fitting ``c * p^-s`` to the
per-prime log factors of the last decade of primes and summing the fit
exactly with the prime zeta function. The correction is added to the
logarithm of the product; the reported error is twice the disagreement
between fits over the last two decades plus the exponent-truncation bounds.
These estimates are heuristic, not rigorous.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable

import numpy as np

from .arith import MultiplicativeFunction, is_constant_one, make_function, prime_array
from .errors import ConfigurationError, DomainError, ToleranceNotMetError
from .zeta import prime_zeta_tail, zeta

log = logging.getLogger(__name__)

KERNELS = ("lcm_max", "ratio_max_minus_min")
_KERNEL_ALIASES = {"lcm": "lcm_max", "max": "lcm_max", "ratio": "ratio_max_minus_min"}

DEFAULT_PRIME_START = 10**5
DEFAULT_PRIME_CAP = 10**7
DEFAULT_EXPONENT_CUTOFF = 40
MAX_EXPONENT_CUTOFF = 64


def normalize_kernel(kernel: str) -> str:
    kernel = _KERNEL_ALIASES.get(kernel, kernel)
    if kernel not in KERNELS:
        raise ConfigurationError(f"unknown kernel {kernel!r}; choose from {KERNELS}")
    return kernel


@dataclass(frozen=True)
class LocalFactorResult:
    prime: int
    value: float
    exponent_cutoff: int
    tail_estimate: float


@dataclass(frozen=True)
class EulerProductResult:
    value: float
    prime_cutoff: int
    exponent_cutoff: int
    error_estimate: float
    kernel: str
    tail_correction: float = 0.0


# -- integer weight polynomials ---------------------------------------------
# Coefficient lists, lowest degree first, exact Python ints.


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_sub(a, b):
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    return [x - y for x, y in zip(a, b)]


@lru_cache(maxsize=None)
def _cube_poly(k: int, m: int) -> tuple[int, ...]:
    """(1 + t + ... + t^m)^k; the empty sum (m = -1) gives 0."""
    if m < 0:
        return (0,)
    out = [1]
    for _ in range(k):
        out = _poly_mul(out, [1] * (m + 1))
    return tuple(out)


@lru_cache(maxsize=None)
def max_weight_poly(k: int, m: int) -> tuple[int, ...]:
    """t-weighted count of k-tuples with maximum exactly m."""
    return tuple(_poly_sub(list(_cube_poly(k, m)), list(_cube_poly(k, m - 1))))


@lru_cache(maxsize=None)
def min_max_weight_poly(k: int, n: int) -> tuple[int, ...]:
    """W(0, n): t-weighted count of k-tuples with minimum 0 and maximum n.

    Inclusion-exclusion over T(a, b) = (t^a + ... + t^b)^k, where
    T(1, b) = t^k T(0, b-1).
    """
    def shifted(m):
        return [0] * k + list(_cube_poly(k, m))

    w = _poly_sub(list(_cube_poly(k, n)), shifted(n - 1))
    w = _poly_sub(w, list(_cube_poly(k, n - 1)))
    w = _poly_sub(w, [-c for c in shifted(n - 2)])
    while len(w) > 1 and w[-1] == 0:
        w.pop()
    return tuple(w)


def _polyval(coeffs, t: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(t)
    for c in reversed(coeffs):
        acc = acc * t + float(c)
    return acc


def ratio_weight(k: int, a: int, b: int, t: float) -> float:
    """W(a, b) as written: T(a,b) - T(a+1,b) - T(a,b-1) + T(a+1,b-1)."""

    def T(lo, hi):
        return sum(t**v for v in range(lo, hi + 1)) ** k if lo <= hi else 0.0

    return T(a, b) - T(a + 1, b) - T(a, b - 1) + T(a + 1, b - 1)


# -- local factors -----------------------------------------------------------


def _check_r(kernel: str, r: float) -> None:
    if kernel == "lcm_max" and not r > -1:
        raise DomainError(f"lcm kernel needs r > -1 (t = p^-(r+1) < 1), got r={r}")
    if kernel == "ratio_max_minus_min" and r < 0:
        raise DomainError(f"ratio kernel needs r >= 0, got r={r}")


def _scaled_values(f: MultiplicativeFunction, p: np.ndarray, V: int, r: float):
    """f(p^m) for m = 1..V+1 as float arrays, plus the observed max of |f(p^m)| / p^(rm)."""
    logp = np.log(p)
    vals = []
    c3 = np.ones_like(p)
    for m in range(1, V + 2):
        v = np.asarray(f.prime_power_eval(p, m), dtype=np.float64)
        if v.shape != p.shape:
            v = np.broadcast_to(v, p.shape).astype(np.float64)
        vals.append(v)
        c3 = np.maximum(c3, np.abs(v) * np.exp(-r * m * logp))
    return vals, c3


def _local_deviation(f: MultiplicativeFunction, k: int, r: float, p: np.ndarray, V: int, kernel: str):
    """(factor - 1, truncation bound in factor units) for an array of primes, all at cutoff V.

    The first-order terms -k/p and k f(p) p^-(r+1) are cancelled analytically so the
    deviation keeps its relative precision for large p.
    """
    p = p.astype(np.float64)
    u = 1.0 / p
    t = np.exp(-(r + 1.0) * np.log(p))
    vals, c3 = _scaled_values(f, p, V, r)
    # (1 - u)^k - 1 + k u
    a_plus = np.zeros_like(p)
    for j in range(k, 1, -1):
        a_plus = (a_plus + comb(k, j) * (-1) ** j) * u
    a_plus = a_plus * u
    a = a_plus - k * u
    f1 = vals[0]
    first_order_dev = k * (f1 - np.exp(r * np.log(p))) * t
    if kernel == "lcm_max":
        # sum_{m>=1} f(p^m) W_m(t); W_1 = k t + R1
        r1 = _polyval(max_weight_poly(k, 1), t) - k * t
        rest = f1 * r1
        for m in range(2, V + 1):
            rest = rest + vals[m - 1] * _polyval(max_weight_poly(k, m), t)
        s_prime = k * f1 * t + rest
        dev = a_plus + first_order_dev + rest + a * s_prime
    else:
        # sum_n f(p^n) W(0,n)(t) G_{V-n}(t^k), G_j(y) = 1 + y + ... + y^j
        y = t**k

        def g_minus_one(j):
            acc = np.zeros_like(y)
            for _ in range(j):
                acc = (acc + 1.0) * y
            return acc

        w1_rest = _polyval(min_max_weight_poly(k, 1), t) - k * t
        g_v1 = g_minus_one(V - 1)
        rest = g_minus_one(V) + f1 * (w1_rest + (k * t + w1_rest) * g_v1)
        for n in range(2, V + 1):
            rest = rest + vals[n - 1] * _polyval(min_max_weight_poly(k, n), t) * (1.0 + g_minus_one(V - n))
        s_prime = k * f1 * t + rest
        dev = a_plus + first_order_dev + rest + a * s_prime
    sigma_inf = 1.0 / (1.0 - t)
    scale = (1.0 + a)
    tail = scale * c3 * k * sigma_inf ** (k - 1) * np.exp(-(V + 1) * np.log(p)) / (1.0 - u)
    return dev, tail


def local_factor_lcm(f: MultiplicativeFunction, k: int, r: float, p: int, V: int) -> LocalFactorResult:
    """p-factor of C_{f,k}: (1-1/p)^k * sum_{m<=V} f(p^m) (sigma_m^k - sigma_{m-1}^k)."""
    return _local_factor(f, k, r, p, V, "lcm_max")


def local_factor_ratio(f: MultiplicativeFunction, k: int, r: float, p: int, V: int) -> LocalFactorResult:
    """p-factor of D_{f,k}: (1-1/p)^k * sum_{0<=a<=b<=V} f(p^(b-a)) W(a, b)."""
    return _local_factor(f, k, r, p, V, "ratio_max_minus_min")


def _local_factor(f, k, r, p, V, kernel):
    if k < 2:
        raise DomainError(f"arity k must be >= 2, got {k}")
    if V < 1:
        raise DomainError(f"exponent cutoff must be >= 1, got {V}")
    _check_r(kernel, r)
    dev, tail = _local_deviation(f, k, r, np.array([p], dtype=np.float64), V, kernel)
    return LocalFactorResult(int(p), float(1.0 + dev[0]), V, float(tail[0]))


def local_factor_bruteforce(f: MultiplicativeFunction, k: int, r: float, p: int, nu_max: int, kernel: str) -> float:
    """Direct k-fold summation over exponent tuples with every entry <= nu_max."""
    kernel = normalize_kernel(kernel)
    t = p ** (-(r + 1.0))
    total = []
    for nus in itertools.product(range(nu_max + 1), repeat=k):
        e = max(nus) if kernel == "lcm_max" else max(nus) - min(nus)
        total.append(float(f.at(p, e)) * t ** sum(nus))
    return (1.0 - 1.0 / p) ** k * math.fsum(total)


# -- adaptive products over primes -------------------------------------------


def _fit_power_tail(primes: np.ndarray, g: np.ndarray, noise: np.ndarray, lo: float, hi: float):
    """Fit g ~ sign * c p^-s on lo < p <= hi and sum the fit over all primes > hi.

    Returns (tail, usable). Windows where g is mostly at rounding level give a
    tail bound (not a correction) that assumes the class decay p^-3/2 from there on.
    """
    mask = (primes > lo) & (primes <= hi)
    if mask.sum() < 8:
        return math.inf, False
    gw = g[mask]
    resolved = np.abs(gw) > 1e3 * noise[mask]
    if resolved.mean() < 0.9:
        floor = 1e3 * float(noise[mask].max()) * hi**1.5
        return floor * prime_zeta_tail(1.5, primes), False
    gw = gw[resolved]
    x = np.log(primes[mask][resolved].astype(np.float64))
    slope, intercept = np.polyfit(x, np.log(np.abs(gw)), 1)
    s = -slope
    if not s > 1.05:
        return math.inf, False
    sign = 1.0 if gw[-1] > 0 else -1.0
    consistent = bool(np.all(np.sign(gw) == sign))
    return sign * math.exp(intercept) * prime_zeta_tail(s, primes), consistent


class _PrimeProduct:
    """Accumulates per-prime log factors in ascending prime order."""

    def __init__(self, log_factor: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]):
        self.log_factor = log_factor
        self.primes = np.zeros(0, dtype=np.int64)
        self.g = np.zeros(0)
        self.trunc = np.zeros(0)
        self.noise = np.zeros(0)

    def extend_to(self, P: int) -> None:
        hi = int(self.primes[-1]) if len(self.primes) else 1
        if P <= hi:
            return
        allp = prime_array(P)
        new = allp[allp > hi]
        g, trunc, noise = self.log_factor(new)
        self.primes = allp
        self.g = np.concatenate([self.g, g])
        self.trunc = np.concatenate([self.trunc, trunc])
        self.noise = np.concatenate([self.noise, noise])

    def evaluate(self, P: int):
        """(log product with tail correction, log-error estimate, correction)."""
        mask = self.primes <= P
        primes = self.primes[mask]
        g = self.g[mask]
        noise = self.noise[mask]
        head = math.fsum(g.tolist())
        t_last, ok_last = _fit_power_tail(primes, g, noise, P / 10, P)
        t_prev, ok_prev = _fit_power_tail(primes, g, noise, P / 100, P / 10)
        trunc = math.fsum(self.trunc[mask].tolist())
        rounding = math.fsum(noise.tolist())
        if ok_last and ok_prev:
            correction = t_last
            model = 2.0 * abs(t_last - t_prev)
        else:
            # no stable power law: do not correct, charge the fitted magnitude as error
            correction = 0.0
            model = 2.0 * abs(t_last)
        return head + correction, model + trunc + rounding, correction


def _run_adaptive(log_factor, prefactor: float, target_tol: float, p_start: int, p_cap: int, label: str):
    if not target_tol > 0:
        raise DomainError("target_tol must be > 0")
    prod = _PrimeProduct(log_factor)
    P = max(int(p_start), 1000)
    best = None
    while True:
        prod.extend_to(P)
        log_value, log_err, corr = prod.evaluate(P)
        value = prefactor * math.exp(log_value)
        err = abs(value) * math.expm1(log_err) if math.isfinite(log_err) else math.inf
        best = (value, err, P, corr)
        if err <= target_tol:
            return best
        if P >= p_cap:
            raise ToleranceNotMetError(
                f"{label}: error estimate {err:.3g} above {target_tol:.3g} at prime cap {p_cap}",
                value,
                err,
            )
        P = min(P * 10, p_cap)


def _exponent_cutoffs(primes: np.ndarray, V: int) -> np.ndarray:
    """Per-prime exponent cutoff: V, reduced where p^-(v+1) is already below 1e-20."""
    need = np.ceil(46.0 / np.log(primes.astype(np.float64))).astype(np.int64)
    return np.clip(need, 2, V)


def _kernel_log_factor(f, k, r, kernel, V):
    def log_factor(primes: np.ndarray):
        g = np.empty(len(primes))
        trunc = np.empty(len(primes))
        cut = _exponent_cutoffs(primes, V)
        for v in np.unique(cut):
            sel = cut == v
            dev, tail = _local_deviation(f, k, r, primes[sel], int(v), kernel)
            g[sel] = np.log1p(dev)
            trunc[sel] = tail / (1.0 + dev)
        p = primes.astype(np.float64)
        noise = 8e-16 * k * (1.0 / p + np.abs(f.prime_power_eval(p, 1)) * np.exp(-(r + 1.0) * np.log(p)))
        return g, trunc, noise

    return log_factor


def euler_product(
    f: MultiplicativeFunction,
    k: int,
    r: float | None = None,
    kernel: str = "lcm_max",
    target_tol: float = 1e-9,
    *,
    exponent_cutoff: int = DEFAULT_EXPONENT_CUTOFF,
    prime_start: int = DEFAULT_PRIME_START,
    prime_cap: int = DEFAULT_PRIME_CAP,
) -> EulerProductResult:
    """C_{f,k} (kernel ``lcm_max``) or D_{f,k} (kernel ``ratio_max_minus_min``).

    Raises ToleranceNotMetError (carrying the best value) if the estimate
    cannot be pushed below ``target_tol`` before ``prime_cap``.
    """
    kernel = normalize_kernel(kernel)
    r = f.r if r is None else float(r)
    if k < 2:
        raise DomainError(f"arity k must be >= 2, got {k}")
    _check_r(kernel, r)
    if not 1 <= exponent_cutoff <= MAX_EXPONENT_CUTOFF:
        raise ConfigurationError(f"exponent cutoff must be in [1, {MAX_EXPONENT_CUTOFF}]")
    if prime_cap > DEFAULT_PRIME_CAP:
        raise ConfigurationError(f"prime cap above {DEFAULT_PRIME_CAP}")
    value, err, P, corr = _run_adaptive(
        _kernel_log_factor(f, k, r, kernel, exponent_cutoff),
        1.0,
        target_tol,
        prime_start,
        prime_cap,
        f"{kernel} constant for {f.name}, k={k}",
    )
    return EulerProductResult(value, P, exponent_cutoff, err, kernel, corr)


MAIN_TERM_FALLBACK_TOL = 1e-6


@lru_cache(maxsize=256)
def main_constant(f: MultiplicativeFunction, k: int, r: float, kernel: str, target_tol: float = 1e-10) -> float:
    """Constant for the main term; exactly 1 for f = 1, where every local factor telescopes to 1.

    Slowly converging products (r well below 1) may stop short of ``target_tol``;
    their best value is accepted when its estimate is under 1e-6 relative,
    which is far below the relative errors of desk-scale exact sums.
    """
    if is_constant_one(f) and r == 0:
        return 1.0
    try:
        return euler_product(f, k, r, kernel, target_tol).value
    except ToleranceNotMetError as exc:
        if exc.error_estimate <= MAIN_TERM_FALLBACK_TOL * abs(exc.value):
            log.warning("main-term constant for %s, k=%d: using value with estimate %.2g", f.name, k, exc.error_estimate)
            return exc.value
        raise


# -- closed forms ------------------------------------------------------------

# (coefficient, a, b) stands for coefficient * p^-(a + b r)
C3_TERMS = ((1, 0, 0), (-3, 2, 0), (2, 3, 0), (2, 2, 1), (-3, 3, 1), (1, 5, 1))
C4_TERMS = (
    (1, 0, 0), (-6, 2, 0), (8, 3, 0), (-3, 4, 0),
    (5, 2, 1), (-12, 3, 1), (6, 4, 1), (4, 5, 1), (-3, 6, 1),
    (3, 3, 2), (-4, 4, 2), (-6, 5, 2), (12, 6, 2), (-5, 7, 2),
    (3, 5, 3), (-8, 6, 3), (6, 7, 3), (-1, 9, 3),
)  # fmt: skip
SIGMA2_TERMS = ((1, 0, 0), (1, 2, 0), (-2, 3, 0), (-2, 5, 0), (2, 6, 0))
PHI2_TERMS = ((1, 0, 0), (-3, 2, 0), (2, 3, 0), (-1, 4, 0), (2, 5, 0), (-1, 6, 0))


def _poly_log_factor(terms, r: float):
    def log_factor(primes: np.ndarray):
        logp = np.log(primes.astype(np.float64))
        dev = np.zeros(len(primes))
        scale = np.zeros(len(primes))
        # smallest terms first
        for c, a, b in sorted(terms[1:], key=lambda term: -(term[1] + term[2] * r)):
            term = c * np.exp(-(a + b * r) * logp)
            dev = dev + term
            scale = scale + np.abs(term)
        return np.log1p(dev), np.zeros(len(primes)), 8e-16 * scale

    return log_factor


def prime_polynomial_product(terms, r: float, target_tol: float, prefactor: float = 1.0, **kw) -> EulerProductResult:
    value, err, P, corr = _run_adaptive(
        _poly_log_factor(terms, r),
        prefactor,
        target_tol,
        kw.get("prime_start", DEFAULT_PRIME_START),
        kw.get("prime_cap", DEFAULT_PRIME_CAP),
        "closed-form product",
    )
    return EulerProductResult(value, P, 0, err, "closed_form", corr)


def closed_form_C3(r: float, tol: float = 1e-9) -> float:
    if not r > -1:
        raise DomainError(f"needs r > -1, got {r}")
    pre = zeta(r + 2) * zeta(2 * r + 3)
    return prime_polynomial_product(C3_TERMS, r, tol, pre).value


def closed_form_C4(r: float, tol: float = 1e-9) -> float:
    if not r > -1:
        raise DomainError(f"needs r > -1, got {r}")
    pre = zeta(r + 2) * zeta(2 * r + 3) * zeta(3 * r + 4)
    return prime_polynomial_product(C4_TERMS, r, tol, pre).value


def closed_form_D(k: int, r: float, tol: float = 1e-9) -> float:
    """D_{r,k} for k in {2, 3, 4} from the C_{r,k} closed forms."""
    if k == 2:
        if r < 0:
            raise DomainError(f"D_(r,2) needs r >= 0, got {r}")
        return zeta(2 * r + 2) / zeta(2)
    if k not in (3, 4):
        raise ConfigurationError(f"closed form for D only for k in {{2,3,4}}, got {k}")
    if not r > 0:
        raise DomainError(f"D_(r,{k}) closed form needs r > 0, got {r}")
    if k == 3:
        return closed_form_C3(r, tol) * zeta(3 * r + 3) / zeta(2 * r + 3)
    return closed_form_C4(r, tol) * zeta(4 * r + 4) / zeta(3 * r + 4)


def closed_form_k2(name: str, r: float = 1.0, tol: float = 1e-9) -> float:
    """C_{f,2} for f = sigma, phi (r = 1) or id_r."""
    name = make_function(name, r).name if name in ("id", "sigma", "phi") else name
    if name == "sigma_r":
        return prime_polynomial_product(SIGMA2_TERMS, 1.0, tol, zeta(3) * zeta(4)).value
    if name == "phi_r":
        return prime_polynomial_product(PHI2_TERMS, 1.0, tol, zeta(3)).value
    if name == "id_r":
        if not r > -1:
            raise DomainError(f"needs r > -1, got {r}")
        return zeta(r + 2) / zeta(2)
    raise ConfigurationError(f"no k=2 closed form for {name!r}")


SIGMA2_TERMS_REDERIVED = ((1, 0, 0), (-2, 3, 0), (1, 4, 0), (-2, 5, 0), (2, 6, 0))


def sigma2_product_rederived(tol: float = 1e-9) -> float:
    """C_{sigma,2} as zeta(2) zeta(3) zeta(4) prod_p (1 - 2p^-3 + p^-4 - 2p^-5 + 2p^-6).

    Obtained by summing the local series in closed form: the p-factor of
    C_{sigma,2} divided by the zeta(3) zeta(4) factors is (1 + u + u^2 - u^3 - 2u^5)/(1 + u)
    with u = 1/p, which needs the extra zeta(2).
    """
    return prime_polynomial_product(SIGMA2_TERMS_REDERIVED, 1.0, tol, zeta(2) * zeta(3) * zeta(4)).value
