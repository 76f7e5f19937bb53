"""Command-line entry point for relative-equilibrium stability analysis.

Usage
-----
    releq analyze --input problem.json [--output report.json] [--check-stable] [--seed 0]
    releq scan-alpha --input problem.json --alpha-grid 0.05:1.95:39 [--format csv|json]
    releq ngon-threshold --n-range 8:12
    releq spectral-flow --input problem.json [--interval 0.01:5] [--system essential|full]

Problem files are JSON::

    {"family": {"ngon": 3}, "potential": {"type": "alpha", "alpha": 1.0}}
    {"masses": [1, 2, 3], "positions": [[1, 0], [0, 1], [-1, -1]],
     "potential": {"type": "log"}, "tolerances": {"cc_residual": 1e-10}}

Exit codes: 0 ok, 1 input error, 2 stability check failed, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .analysis import analyze, default_interval, flow_matrix, flow_report, scan_row
from .central_config import (CentralConfiguration, central_configuration_from, ngon_configuration,
                             solve_central_config)
from .core_model import BodySystem, Tolerances
from .errors import InvalidSystemError, ReleqError, SingularEndpointError
from .linearization import build_linearization
from .potentials import PotentialSpec
from .reduction import build_reduction, restrict_blocks
from .stability import ngon_alpha_threshold

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNSTABLE = 2
EXIT_NUMERIC = 3

SCAN_SCHEMA = "releq.scan-alpha/v1"
SCAN_COLUMNS = ["alpha", "spectrally_stable", "linearly_stable", "diagonalizable_L3",
                "degenerate", "max_abs_re_L3", "inequality_fired", "inequality_margin"]


class InputError(Exception):
    """Bad command-line arguments or problem file."""


# ---------------------------------------------------------------------------
# Problem file schema
# ---------------------------------------------------------------------------

class AlphaPotential(BaseModel):
    model_config = ConfigDict(extra="forbid")
    type: Literal["alpha"]
    alpha: float = Field(gt=0.0, lt=2.0)


class LogPotential(BaseModel):
    model_config = ConfigDict(extra="forbid")
    type: Literal["log"]


class Family(BaseModel):
    model_config = ConfigDict(extra="forbid")
    ngon: int = Field(ge=3)


class ProblemFile(BaseModel):
    """Validated problem definition; exactly one of ``positions`` and ``family``."""

    model_config = ConfigDict(extra="forbid")
    masses: Optional[list[float]] = None
    positions: Optional[list[tuple[float, float]]] = None
    family: Optional[Family] = None
    potential: Union[AlphaPotential, LogPotential] = Field(discriminator="type")
    tolerances: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check(self):
        if (self.positions is None) == (self.family is None):
            raise ValueError("exactly one of 'positions' and 'family' must be given")
        if self.positions is not None:
            if self.masses is None:
                raise ValueError("'masses' is required together with 'positions'")
            if len(self.masses) != len(self.positions):
                raise ValueError(f"{len(self.masses)} masses but {len(self.positions)} positions")
        if self.family is not None and self.masses is not None:
            if len(self.masses) != self.family.ngon:
                raise ValueError("'masses' length must match the polygon size")
            if len(set(self.masses)) != 1:
                raise ValueError("a regular polygon relative equilibrium needs equal masses")
        if any(m <= 0 for m in self.masses or []):
            raise ValueError("masses must be strictly positive")
        unknown = set(self.tolerances) - set(Tolerances.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return self

    def spec(self, alpha: float | None = None) -> PotentialSpec:
        if alpha is not None:
            return PotentialSpec.homogeneous(alpha)
        if isinstance(self.potential, LogPotential):
            return PotentialSpec.logarithmic()
        return PotentialSpec.homogeneous(self.potential.alpha)

    def tolerance_set(self) -> Tolerances:
        return Tolerances().replace(**self.tolerances)

    def central_configuration(self, alpha: float | None = None) -> CentralConfiguration:
        spec = self.spec(alpha)
        tol = self.tolerance_set()
        if self.family is not None:
            n = self.family.ngon
            mass = self.masses[0] if self.masses else 1.0
            poly = ngon_configuration(n, unit_masses=False, mass=mass, phase=np.pi / 2)
            sys_ = BodySystem(poly.masses, poly.positions, True, tol)
            return central_configuration_from(sys_, spec, tol)
        sys_ = BodySystem(self.masses, np.asarray(self.positions).ravel(), False, tol)
        return solve_central_config(sys_, spec, tolerances=tol)


def load_problem(path: str) -> ProblemFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return ProblemFile.model_validate_json(text)
    except ValidationError as exc:
        raise InputError(f"invalid problem file {path}:\n{exc}") from exc


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def _split(text: str, parts: int, name: str) -> list[str]:
    items = text.split(":")
    if len(items) != parts:
        raise argparse.ArgumentTypeError(f"{name} must look like {':'.join('X' * parts)}")
    return items


def parse_alpha_grid(text: str) -> np.ndarray:
    a, b, steps = _split(text, 3, "alpha grid")
    try:
        a, b, steps = float(a), float(b), int(steps)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad alpha grid {text!r}") from exc
    if steps < 1:
        raise argparse.ArgumentTypeError("alpha grid needs at least one step")
    if not (0.0 < a < 2.0 and 0.0 < b < 2.0):
        raise argparse.ArgumentTypeError(f"alpha grid bounds must lie in (0, 2), got {a}, {b}")
    if b < a:
        raise argparse.ArgumentTypeError("alpha grid upper bound is below the lower bound")
    return np.array([a]) if steps == 1 else np.linspace(a, b, steps)


def parse_n_range(text: str) -> tuple[int, int]:
    lo, hi = _split(text, 2, "n range")
    try:
        lo, hi = int(lo), int(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad n range {text!r}") from exc
    if lo < 3:
        raise argparse.ArgumentTypeError("n range must start at 3 or above")
    if hi < lo:
        raise argparse.ArgumentTypeError(f"n range is reversed: {lo} > {hi}")
    return lo, hi


def parse_interval(text: str) -> tuple[float, float]:
    a, b = _split(text, 2, "interval")
    try:
        a, b = float(a), float(b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad interval {text!r}") from exc
    if not b > a:
        raise argparse.ArgumentTypeError("interval must satisfy A < B")
    return a, b


def dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    problem = load_problem(args.input)
    report = analyze(problem.central_configuration(), seed=args.seed).to_dict()
    _emit(dumps(report), args.output)
    if args.check_stable and not report["verdict"]["spectrally_stable"]:
        print("stability check failed: spectrally unstable", file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_OK


def _scan_point(payload: tuple[str, float, int]) -> dict:
    text, alpha, seed = payload
    problem = ProblemFile.model_validate_json(text)
    return scan_row(problem.central_configuration(alpha=float(alpha)), seed=seed)


def scan_rows(problem: ProblemFile, grid, seed: int = 0, jobs: int = 1) -> list[dict]:
    """One row per grid point, in grid order whatever the completion order."""
    work = [(problem.model_dump_json(), float(a), seed) for a in grid]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_point, work))
    return [_scan_point(w) for w in work]


def format_scan_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {SCAN_SCHEMA}\n")
    writer = csv.DictWriter(buf, fieldnames=SCAN_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v)
                         for k, v in row.items()})
    return buf.getvalue()


def cmd_scan_alpha(args) -> int:
    problem = load_problem(args.input)
    if isinstance(problem.potential, LogPotential):
        raise InputError("scan-alpha needs an alpha-homogeneous problem file")
    rows = scan_rows(problem, args.alpha_grid, seed=args.seed, jobs=args.jobs)
    if args.format == "csv":
        text = format_scan_csv(rows)
    else:
        text = dumps({"schema": SCAN_SCHEMA, "seed": args.seed, "rows": rows})
    _emit(text, args.output)
    return EXIT_OK


def threshold_table(lo: int, hi: int) -> dict:
    rows = [ngon_alpha_threshold(n)._asdict() for n in range(lo, hi + 1)]
    values = [r["value"] for r in rows]
    monotone = all(b < a for a, b in zip(values, values[1:]))
    return {"rows": rows, "monotone_decreasing": monotone}


def cmd_ngon_threshold(args) -> int:
    table = threshold_table(*args.n_range)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "alpha_bar", "meaningful"])
        for r in table["rows"]:
            writer.writerow([r["n"], repr(r["value"]), r["meaningful"]])
        text = buf.getvalue()
    else:
        text = dumps(table)
    _emit(text, args.output)
    if not table["monotone_decreasing"]:
        print("threshold values are not monotone on this range", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_spectral_flow(args) -> int:
    problem = load_problem(args.input)
    cc = problem.central_configuration()
    lin = build_linearization(cc)
    blocks = restrict_blocks(build_reduction(lin, seed=args.seed), lin)
    A = flow_matrix(lin, blocks, args.system)
    interval = args.interval if args.interval is not None else default_interval(A)
    try:
        report = flow_report(A, interval)
    except SingularEndpointError as exc:
        a, b = interval
        shift = 1e-3 * max(1.0, b - a)
        bad = exc.t if exc.t is not None else a
        hint = f"{a + shift}:{b}" if abs(bad - a) <= abs(bad - b) else f"{a}:{b - shift}"
        raise InputError(f"{exc}; the endpoint t = {bad} is singular, try --interval {hint}") \
            from exc
    payload = {"system": args.system, "seed": args.seed, **report.to_dict(),
               "consistent": report.consistent}
    _emit(dumps(payload), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="releq", description="Stability of planar relative equilibria.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="full stability report for one problem file")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--check-stable", action="store_true",
                   help="exit 2 unless the equilibrium is spectrally stable")
    p.add_argument("--seed", type=int, default=0, help="seed for the basis completion")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scan-alpha", help="verdicts over a grid of exponents")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha-grid", required=True, type=parse_alpha_grid, metavar="A:B:STEPS")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_scan_alpha)

    p = sub.add_parser("ngon-threshold", help="exponent threshold for regular polygons")
    p.add_argument("--n-range", required=True, type=parse_n_range, metavar="N1:N2")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--output")
    p.set_defaults(func=cmd_ngon_threshold)

    p = sub.add_parser("spectral-flow", help="crossings and flow of B + t iJ")
    p.add_argument("--input", required=True)
    p.add_argument("--interval", type=parse_interval, metavar="A:B")
    p.add_argument("--system", choices=["essential", "full"], default="essential")
    p.add_argument("--output")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_spectral_flow)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, InvalidSystemError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ReleqError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
