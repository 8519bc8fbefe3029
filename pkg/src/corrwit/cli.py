"""
Command-line front end.

  python -m corrwit params --class slater --d 4 --L 2
  python -m corrwit witness --class separable --d 2 --L 2 --state rho.json
  python -m corrwit fraction --class slater --d 4 --L 2 --pure --samples 10000 --seed 7
  python -m corrwit slater-example --d 4 --lambdas 0.70710678118654757,0.70710678118654757
  python -m corrwit selftest --level quick

stdout carries only the JSON/CSV payload; logs go to stderr. The verdict of a
witness evaluation is data, never the exit code.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from corrwit import config
from corrwit.data_structures import DensityMatrix, Spectrum, StateClass
from corrwit.errors import CorrwitError, ParseError, ResourceCapError, SelftestFailure, ValidationError
from corrwit.estimation import closed_form_parameters, estimate_fraction, numeric_X, purity_sweep
from corrwit.operators import build_A
from corrwit.selftest import FAULTS, LEVELS, run_selftest
from corrwit.serialization import dumps, dumps_csv
from corrwit.spaces import dim_space
from corrwit.witness import slater_example_rows, witness_value

logger = logging.getLogger("corrwit")

COMMANDS = ("params", "witness", "fraction", "slater-example", "selftest")
SLATER_COLUMNS = ("p", "lhs", "lhs_minus_3", "f", "f_exact", "agree", "decisive")
SLATER_SCHEMA = "corrwit-slater-example/1"


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs, assembled from argparse"""
    command: str
    state_class: Optional[StateClass] = None
    spectrum_source: Optional[Tuple[str, object]] = None  # ('list', [...]) | ('depolarized', p) | ...
    n_samples: int = config.DEFAULT_SAMPLES
    seed: int = config.DEFAULT_SEED
    output_format: str = "json"
    out: Optional[str] = None
    tol: float = config.DECISION_TOL
    threads: int = config.DEFAULT_THREADS
    max_bytes: int = config.MAX_DENSE_BYTES
    state_file: Optional[str] = None
    d: Optional[int] = None
    lambdas: Tuple[float, ...] = ()
    p_grid: Optional[Tuple[float, ...]] = None
    level: str = "quick"
    inject_fault: Optional[str] = None


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    common.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="write the payload here instead of stdout")
    common.add_argument("--tol", type=float, default=config.DECISION_TOL,
                        help="decision tolerance: correlated iff f > tol")
    common.add_argument("--threads", type=int, default=config.DEFAULT_THREADS,
                        help="worker threads (speed only, never results)")
    common.add_argument("--max-bytes", type=int, default=config.MAX_DENSE_BYTES,
                        help="dense memory cap in bytes")
    common.add_argument("--log-level", default="WARNING",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    common.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)
    return common


def _class_flags(parser: argparse.ArgumentParser, required: bool = True):
    parser.add_argument("--class", dest="kind", required=required,
                        choices=("separable", "bosonic", "slater", "gaussian"))
    parser.add_argument("--d", type=int, default=None)
    parser.add_argument("--L", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="corrwit", description="Quadratic correlation witnesses")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", parents=[common], help="closed-form and numeric X, P_cr, tr A")
    _class_flags(p)

    p = sub.add_parser("witness", parents=[common], help="evaluate f on a state file")
    _class_flags(p, required=False)
    p.add_argument("--state", dest="state_file", required=True)

    p = sub.add_parser("fraction", parents=[common], help="Monte Carlo detected fraction of an orbit")
    _class_flags(p)
    p.add_argument("--samples", "-n", dest="n_samples", type=int, default=config.DEFAULT_SAMPLES)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--spectrum", type=_float_list)
    group.add_argument("--depolarized-spectrum", type=float)
    group.add_argument("--depolarized-sweep", type=_float_list)
    group.add_argument("--pure", action="store_true")
    group.add_argument("--uniform", action="store_true")

    p = sub.add_parser("slater-example", parents=[common], help="two-fermion depolarization table")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--lambdas", type=_float_list, required=True)
    p.add_argument("--p-grid", type=_float_list, default=None)

    p = sub.add_parser("selftest", parents=[common], help="built-in release checks")
    p.add_argument("--level", choices=LEVELS, default="quick")
    return parser


def _state_class(args) -> Optional[StateClass]:
    if getattr(args, "kind", None) is None:
        return None
    if args.d is None:
        raise ParseError("--d is required with --class")
    return StateClass(args.kind, args.d, args.L)


def _spectrum_source(args):
    if args.command != "fraction":
        return None
    if args.spectrum is not None:
        return ("list", tuple(args.spectrum))
    if args.depolarized_spectrum is not None:
        return ("depolarized", args.depolarized_spectrum)
    if args.depolarized_sweep is not None:
        return ("sweep", tuple(args.depolarized_sweep))
    return ("pure", None) if args.pure else ("uniform", None)


def parse_args(argv: Optional[Sequence[str]] = None) -> Tuple[RunConfig, str]:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        state_class=_state_class(args),
        spectrum_source=_spectrum_source(args),
        n_samples=getattr(args, "n_samples", config.DEFAULT_SAMPLES),
        seed=args.seed,
        output_format=args.output_format,
        out=args.out,
        tol=args.tol,
        threads=args.threads,
        max_bytes=args.max_bytes,
        state_file=getattr(args, "state_file", None),
        d=getattr(args, "d", None),
        lambdas=tuple(getattr(args, "lambdas", None) or ()),
        p_grid=tuple(args.p_grid) if getattr(args, "p_grid", None) else None,
        level=getattr(args, "level", "quick"),
        inject_fault=args.inject_fault,
    )
    return cfg, args.log_level


def resolve_spectrum(cfg: RunConfig, N: int) -> Spectrum:
    kind, value = cfg.spectrum_source
    if kind == "list":
        return Spectrum(value)
    if kind == "depolarized":
        return Spectrum.depolarized(N, value)
    if kind == "pure":
        return Spectrum.pure(N)
    return Spectrum.uniform(N)


def _require_json(cfg: RunConfig):
    if cfg.output_format != "json":
        raise ParseError(f"{cfg.command} only writes JSON; csv is available for fraction and slater-example")


# ─────────────────────────────────────────
# Commands
# ─────────────────────────────────────────

def cmd_params(cfg: RunConfig) -> Tuple[str, int]:
    _require_json(cfg)
    cls = cfg.state_class
    row = closed_form_parameters(cls)
    report = {
        'class': cls.to_dict(),
        'N': row.N,
        'dim_sym2': row.N * (row.N + 1) // 2,
        'X_analytic': float(row.X),
        'one_minus_X': float(row.one_minus_X),
        'P_cr': float(row.P_cr),
    }
    if row.printed_one_minus_X is not None:
        report['printed_one_minus_X'] = float(row.printed_one_minus_X)
    status = 0
    try:
        A = build_A(cls, max_bytes=cfg.max_bytes)
    except ResourceCapError as e:
        logger.warning("numeric path skipped: %s", e)
        report['warning'] = f"numeric path skipped: {e}"
    else:
        x_num = numeric_X(A)
        report.update({
            'X_numeric': x_num,
            'trace_A': A.trace,
            'variant': A.variant,
            'printed_residual': A.printed_residual,
            'X_mismatch': abs(x_num - float(row.X)),
        })
        if abs((1 - x_num) - float(row.one_minus_X)) > 1e-9 * float(row.one_minus_X):
            logger.error("numeric X %.17g disagrees with closed form %.17g", x_num, float(row.X))
            status = ValidationError.exit_code
    if row.X == 0:
        report['note'] = "witness trivial: A = 0, no state is ever flagged"
    return dumps(report), status


def cmd_witness(cfg: RunConfig) -> Tuple[str, int]:
    _require_json(cfg)
    try:
        text = Path(cfg.state_file).read_text()
    except OSError as e:
        raise ParseError(f"cannot read state file: {e}") from e
    rho = DensityMatrix.from_json(text)
    cls = cfg.state_class or rho.state_class
    if cls is None:
        raise ParseError("state file has no class; pass --class/--d/--L")
    if rho.state_class is not None and cfg.state_class is not None and rho.state_class != cfg.state_class:
        raise ValidationError(f"state file is for {rho.state_class.label}, --class says {cls.label}")
    N = dim_space(cls)
    if rho.dim != N:
        raise ValidationError(f"state has dimension {rho.dim}, {cls.label} needs {N}")
    A = build_A(cls, max_bytes=cfg.max_bytes)
    return witness_value(A, rho, cfg.tol).to_json(), 0


def cmd_fraction(cfg: RunConfig) -> Tuple[str, int]:
    cls = cfg.state_class
    kind, value = cfg.spectrum_source
    spectrum = None if kind == "sweep" else resolve_spectrum(cfg, dim_space(cls))
    A = build_A(cls, max_bytes=cfg.max_bytes)
    if spectrum is None:
        estimates = purity_sweep(cls, value, cfg.n_samples, cfg.seed, A=A,
                                 threads=cfg.threads, tol=cfg.tol)
    else:
        estimates = [estimate_fraction(cls, spectrum, cfg.n_samples, cfg.seed,
                                       A=A, threads=cfg.threads, tol=cfg.tol)]
    if cfg.output_format == "csv":
        return dumps_csv(e.to_csv_row() for e in estimates).rstrip("\n"), 0
    payload = estimates[0].to_dict() if len(estimates) == 1 else [e.to_dict() for e in estimates]
    return dumps(payload), 0


def cmd_slater_example(cfg: RunConfig) -> Tuple[str, int]:
    rows = slater_example_rows(cfg.d, cfg.lambdas, cfg.p_grid, tol=cfg.tol)
    if cfg.output_format == "csv":
        return dumps_csv(rows, SLATER_COLUMNS, SLATER_SCHEMA).rstrip("\n"), 0
    return dumps({'d': cfg.d, 'lambdas': list(cfg.lambdas), 'rows': rows}), 0


def cmd_selftest(cfg: RunConfig) -> Tuple[str, int]:
    _require_json(cfg)
    report = run_selftest(cfg.level, cfg.seed, cfg.inject_fault, cfg.max_bytes)
    return report.to_json(), 0 if report.passed else SelftestFailure.exit_code


_DISPATCH = {
    "params": cmd_params,
    "witness": cmd_witness,
    "fraction": cmd_fraction,
    "slater-example": cmd_slater_example,
    "selftest": cmd_selftest,
}


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text + "\n")
        logger.info("wrote %s", out)
    else:
        sys.stdout.write(text + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg, log_level = parse_args(argv)
    except CorrwitError as e:
        print(f"[corrwit] ERROR: {e}", file=sys.stderr)
        return e.exit_code
    logging.basicConfig(level=log_level, format=config.LOG_FORMAT, stream=sys.stderr)
    try:
        text, status = _DISPATCH[cfg.command](cfg)
    except CorrwitError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    _emit(text, cfg.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
