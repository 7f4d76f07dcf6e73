"""Command-line front end: ``lcmsums <command> [options]``.

Every command writes one CSV or JSON artifact (stdout unless ``--output``).
Exit codes: 0 ok, 2 invalid configuration, 3 tolerance not met,
4 resource cap exceeded, 5 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .arith import CATALOG, check_class_membership, make_function
from .errors import (
    ConfigurationError,
    DomainError,
    InvariantViolation,
    ResourceCapError,
    ToleranceNotMetError,
)
from .euler import (
    DEFAULT_EXPONENT_CUTOFF,
    DEFAULT_PRIME_CAP,
    DEFAULT_PRIME_START,
    KERNELS,
    MAX_EXPONENT_CUTOFF,
    euler_product,
    normalize_kernel,
)
from .inversion import default_box, h_decay_report, h_table
from .sums import (
    KINDS,
    check_fernandez_identity,
    convergence_study,
    exact_sum,
    gcd_bruteforce_values,
    gcd_identity_values,
    max_feasible_x,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_RESOURCE = 4
EXIT_INVARIANT = 5

WORKERS_ENV = "LCMSUMS_WORKERS"
TABLE_COLUMNS = ("x", "value", "main_term", "relative_error")
COMMANDS = ("constants", "sum", "converge", "verify-class", "h-table", "verify-identities")


@dataclass
class RunConfig:
    command: str
    f: str = "id"
    r: float = 1.0
    k: int = 2
    x: list[int] = field(default_factory=list)
    kernel: str = "lcm"
    kind: str = "lcm"
    tol: float = 1e-9
    prime_start: int = DEFAULT_PRIME_START
    prime_cap: int = DEFAULT_PRIME_CAP
    exponent_cutoff: int = DEFAULT_EXPONENT_CUTOFF
    prime_limit: int = 1000
    exponent_limit: int = 20
    box: int | None = None
    epsilon: float = 0.1
    limit: int = 50
    gcd_x: int = 200
    format: str = "json"
    output: str | None = None
    workers: int = 1
    allow_large: bool = False
    timestamp: bool = True


# -- formatting --------------------------------------------------------------


def format_number(v) -> str:
    """Shortest round-trip decimal for floats, plain digits for ints, empty for missing."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) or math.isinf(v) else v
    return v


def render_table(rows, fmt: str, metadata: dict | None = None, columns=TABLE_COLUMNS) -> str:
    """Rows (dicts or tuples in column order) as CSV text or a JSON document."""
    if not rows:
        raise DomainError("refusing to emit an empty table")
    dict_rows = [dict(zip(columns, r)) if not isinstance(r, dict) else r for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in dict_rows:
            writer.writerow([format_number(r.get(c)) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        doc = {"metadata": metadata or {}, "rows": dict_rows}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    raise ConfigurationError(f"unknown output format {fmt!r}")


def emit_table(rows, fmt: str, path: str | None, metadata: dict | None = None, columns=TABLE_COLUMNS) -> str:
    """Render and write to ``path`` (stdout when None); returns the text."""
    text = render_table(rows, fmt, metadata, columns)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_csv_table(path: str) -> list[dict]:
    """Parse an emitted CSV back; numeric fields become int or float, empty fields None."""

    def parse(s: str):
        if s == "":
            return None
        try:
            return int(s)
        except ValueError:
            return float(s)

    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]


# -- argument handling -------------------------------------------------------


def _positive_int_list(text: str) -> list[int]:
    try:
        xs = [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from exc
    if not xs:
        raise argparse.ArgumentTypeError("empty x list")
    return xs


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lcmsums", description="Exact lcm sums, Euler-product constants and h-coefficient tables.")
    parser.add_argument("--version", action="version", version=f"lcmsums {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt_default):
        p.add_argument("--format", choices=("csv", "json"), default=fmt_default)
        p.add_argument("--output", "-o", default=None, help="output file (default stdout)")
        p.add_argument("--workers", type=int, default=_default_workers(), help=f"worker threads (default ${WORKERS_ENV} or 1)")
        p.add_argument("--no-timestamp", dest="timestamp", action="store_false", help="omit the run timestamp from JSON metadata")

    def func(p):
        p.add_argument("--f", default="id", help="catalog function: " + ", ".join(CATALOG))
        p.add_argument("--r", type=float, default=1.0)
        p.add_argument("--k", type=int, default=2)

    p = sub.add_parser("constants", help="Euler-product constant C_{f,k} or D_{f,k}")
    func(p)
    p.add_argument("--kernel", default="lcm", help="lcm or ratio")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--prime-start", type=int, default=DEFAULT_PRIME_START)
    p.add_argument("--prime-cap", type=int, default=DEFAULT_PRIME_CAP)
    p.add_argument("--exponent-cutoff", type=int, default=DEFAULT_EXPONENT_CUTOFF)
    common(p, "json")

    for name, helptext in (("sum", "exact sum at a single x"), ("converge", "exact sums over an x list with the fitted slope")):
        p = sub.add_parser(name, help=helptext)
        func(p)
        if name == "sum":
            p.add_argument("--x", type=int, required=True)
        else:
            p.add_argument("--x-list", dest="x", type=_positive_int_list, required=True, help="e.g. 32,64,128")
        p.add_argument("--kind", default="lcm", choices=KINDS)
        p.add_argument("--allow-large", action="store_true", help="lift the enumeration cap")
        common(p, "csv")

    p = sub.add_parser("verify-class", help="observed class constants over a finite range")
    p.add_argument("--f", default="id")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--prime-limit", type=int, default=1000)
    p.add_argument("--exponent-limit", type=int, default=20)
    common(p, "json")

    p = sub.add_parser("h-table", help="convolution coefficients h on a box, with a decay report")
    func(p)
    p.add_argument("--box", type=int, default=None, help="per-coordinate limit (default 64 for k=2, 24 for k=3)")
    p.add_argument("--epsilon", type=float, default=0.1)
    common(p, "csv")

    p = sub.add_parser("verify-identities", help="three-variable gcd/lcm identity and the gcd-sum identity")
    p.add_argument("--limit", type=int, default=50)
    p.add_argument("--gcd-x", type=int, default=200)
    common(p, "json")
    return parser


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(command=ns.command)
    for key, value in vars(ns).items():
        if key != "command" and hasattr(cfg, key):
            setattr(cfg, key, value)
    if isinstance(cfg.x, int):
        cfg.x = [cfg.x]
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Reject out-of-range parameters before any computation starts."""
    if cfg.command not in COMMANDS:
        raise ConfigurationError(f"unknown command {cfg.command!r}")
    if cfg.workers < 1:
        raise ConfigurationError("--workers must be >= 1")
    if cfg.command in ("constants", "sum", "converge", "verify-class", "h-table"):
        make_function(cfg.f, cfg.r)
    if cfg.command in ("constants", "sum", "converge", "h-table") and cfg.k < 2:
        raise ConfigurationError(f"--k must be >= 2, got {cfg.k}")
    if cfg.command == "constants":
        cfg.kernel = normalize_kernel(cfg.kernel)
        if not cfg.tol > 0:
            raise ConfigurationError("--tol must be positive")
        if not 1 <= cfg.exponent_cutoff <= MAX_EXPONENT_CUTOFF:
            raise ConfigurationError(f"--exponent-cutoff must be in [1, {MAX_EXPONENT_CUTOFF}]")
        if not 100 <= cfg.prime_start <= cfg.prime_cap <= DEFAULT_PRIME_CAP:
            raise ConfigurationError(f"need 100 <= --prime-start <= --prime-cap <= {DEFAULT_PRIME_CAP}")
        if cfg.kernel == KERNELS[1] and cfg.r < 0:
            raise ConfigurationError("the ratio kernel needs r >= 0")
    if cfg.command in ("sum", "converge"):
        if min(cfg.x) < 1:
            raise ConfigurationError("x values must be >= 1")
        if any(b <= a for a, b in zip(cfg.x, cfg.x[1:])):
            raise ConfigurationError("--x-list must be strictly ascending")
        cap = max_feasible_x(cfg.k)
        if max(cfg.x) > cap and not cfg.allow_large:
            raise ResourceCapError(f"x={max(cfg.x)} exceeds the cap {cap} for k={cfg.k}; pass --allow-large to override", cap)
    if cfg.command == "verify-class" and (cfg.prime_limit < 2 or cfg.exponent_limit < 2):
        raise ConfigurationError("--prime-limit and --exponent-limit must be >= 2")
    if cfg.command == "h-table":
        if cfg.box is not None and cfg.box < 4:
            raise ConfigurationError("--box must be >= 4")
        if not cfg.epsilon > 0:
            raise ConfigurationError("--epsilon must be positive")
        if cfg.r <= -1:
            raise ConfigurationError("h-table needs r > -1")
    if cfg.command == "verify-identities" and (cfg.limit < 1 or cfg.gcd_x < 1):
        raise ConfigurationError("--limit and --gcd-x must be >= 1")


# -- commands ----------------------------------------------------------------


def _metadata(cfg: RunConfig, **extra) -> dict:
    meta = {
        "command": cfg.command,
        "engine_version": __version__,
        "numpy_version": np.__version__,
    }
    if cfg.command in ("constants", "sum", "converge", "verify-class", "h-table"):
        f = make_function(cfg.f, cfg.r)
        meta["function"] = f.name
        meta["r"] = f.r
    if cfg.command in ("constants", "sum", "converge", "h-table"):
        meta["k"] = cfg.k
    meta.update(extra)
    if cfg.timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return meta


def _cmd_constants(cfg: RunConfig) -> tuple[list, dict, tuple]:
    f = make_function(cfg.f, cfg.r)
    res = euler_product(
        f,
        cfg.k,
        f.r,
        cfg.kernel,
        cfg.tol,
        exponent_cutoff=cfg.exponent_cutoff,
        prime_start=cfg.prime_start,
        prime_cap=cfg.prime_cap,
    )
    cols = ("value", "prime_cutoff", "exponent_cutoff", "error_estimate", "tail_correction")
    row = dict(zip(cols, (res.value, res.prime_cutoff, res.exponent_cutoff, res.error_estimate, res.tail_correction)))
    meta = _metadata(cfg, kernel=res.kernel, tolerance=cfg.tol, prime_start=cfg.prime_start, prime_cap=cfg.prime_cap)
    return [row], meta, cols


def _cmd_sums(cfg: RunConfig) -> tuple[list, dict, tuple]:
    f = make_function(cfg.f, cfg.r)
    caps = {"max_feasible_x": max_feasible_x(cfg.k), "allow_large": cfg.allow_large}
    if cfg.command == "sum":
        res = exact_sum(f, cfg.k, cfg.x[0], cfg.kind, f.r, workers=cfg.workers, allow_large=cfg.allow_large)
        rows = [(res.x, res.value, res.main_term, res.relative_error)]
        return rows, _metadata(cfg, kind=cfg.kind, caps=caps), TABLE_COLUMNS
    table = convergence_study(f, cfg.k, f.r, cfg.kind, cfg.x, workers=cfg.workers, allow_large=cfg.allow_large)
    meta = _metadata(cfg, kind=cfg.kind, caps=caps, constant=table.constant, fitted_slope=table.fitted_slope)
    return table.rows, meta, TABLE_COLUMNS


def _cmd_verify_class(cfg: RunConfig) -> tuple[list, dict, tuple]:
    f = make_function(cfg.f, cfg.r)
    rep = check_class_membership(f, f.r, cfg.prime_limit, cfg.exponent_limit)
    cols = ("r", "C1_observed", "C2_observed", "C3_derived", "prime_limit", "exponent_limit")
    row = {c: getattr(rep, c) for c in cols}
    return [row], _metadata(cfg), cols


def _cmd_h_table(cfg: RunConfig) -> tuple[list, dict, tuple]:
    f = make_function(cfg.f, cfg.r)
    B = cfg.box or default_box(cfg.k)
    table = h_table(f, cfg.k, f.r, B, workers=cfg.workers)
    if table[(1,) * cfg.k] != 1:
        raise InvariantViolation("h(1,...,1) != 1")
    decay = h_decay_report(f, cfg.k, f.r, B, cfg.epsilon, table=table)
    cols = tuple(f"d{i + 1}" for i in range(cfg.k)) + ("h",)
    rows = [d + (v,) for d, v in table.items()]
    meta = _metadata(
        cfg,
        box=B,
        exact=table.exact,
        decay={
            "exponent": decay.exponent,
            "boxes": list(decay.boxes),
            "partial_sums": list(decay.partial_sums),
            "increments": list(decay.increments),
            "shrinking": decay.shrinking,
        },
    )
    return rows, meta, cols


def _cmd_verify_identities(cfg: RunConfig) -> tuple[list, dict, tuple]:
    cols = ("check", "f", "k", "limit", "holds", "checked")
    rows = []
    rep = check_fernandez_identity(cfg.limit)
    rows.append(("lcm_gcd_triple", "", "", cfg.limit, rep.holds, rep.checked))
    failures = [] if rep.holds else [f"triple identity fails at {rep.counterexample}"]
    for name in ("id", "sigma", "phi", "mu2"):
        f = make_function(name, 1.0)
        for k in (2, 3):
            via = gcd_identity_values(f, k, cfg.gcd_x)
            brute = gcd_bruteforce_values(f, k, cfg.gcd_x, workers=cfg.workers, allow_large=True)
            bad = [x for x in range(1, cfg.gcd_x + 1) if via[x] != brute[x]]
            rows.append(("gcd_sum", f.name, k, cfg.gcd_x, not bad, cfg.gcd_x))
            if bad:
                failures.append(f"gcd identity fails for {f.name}, k={k} at x={bad[0]}")
    meta = _metadata(cfg, all_hold=not failures)
    return rows, meta, cols, failures


def run(cfg: RunConfig) -> int:
    """Execute a validated config, write the artifact and return the exit status."""
    failures = []
    if cfg.command == "constants":
        rows, meta, cols = _cmd_constants(cfg)
    elif cfg.command in ("sum", "converge"):
        rows, meta, cols = _cmd_sums(cfg)
    elif cfg.command == "verify-class":
        rows, meta, cols = _cmd_verify_class(cfg)
    elif cfg.command == "h-table":
        rows, meta, cols = _cmd_h_table(cfg)
    else:
        rows, meta, cols, failures = _cmd_verify_identities(cfg)
    emit_table(rows, cfg.format, cfg.output, meta, cols)
    if failures:
        raise InvariantViolation("; ".join(failures))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ToleranceNotMetError as exc:
        print(f"error: {exc} (best value {exc.value!r}, estimate {exc.error_estimate!r})", file=sys.stderr)
        return EXIT_TOLERANCE
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InvariantViolation as exc:
        print(f"error: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
