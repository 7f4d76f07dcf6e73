"""Sums of multiplicative functions over lcm and lcm/gcd of k-tuples."""

__version__ = "0.1.0"

from .arith import (
    CATALOG,
    ClassReport,
    MultiplicativeFunction,
    check_class_membership,
    evaluate,
    factorize,
    gcd_tuple,
    lcm_tuple,
    make_function,
    sieve_primes,
)
from .errors import (
    ConfigurationError,
    DomainError,
    InvariantViolation,
    ResourceCapError,
    ToleranceNotMetError,
)
from .euler import (
    EulerProductResult,
    LocalFactorResult,
    closed_form_C3,
    closed_form_C4,
    closed_form_D,
    closed_form_k2,
    euler_product,
    local_factor_lcm,
    local_factor_ratio,
)
from .inversion import (
    HCoefficientTable,
    check_reconstruction,
    h_decay_report,
    h_local_match,
    h_table,
)
from .sums import (
    ConvergenceTable,
    ExactSumResult,
    check_fernandez_identity,
    convergence_study,
    exact_sum,
    sum_gcd_bruteforce,
    sum_gcd_via_identity,
    sum_lcm,
    sum_normalized,
    sum_ratio,
)
from .zeta import prime_zeta, zeta

__all__ = [name for name in dir() if not name.startswith("_")]
