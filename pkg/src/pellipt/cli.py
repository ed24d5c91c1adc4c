"""Command-line front end: analyze matrices/fields, compute ranges, run verification.

Subcommands
-----------
analyze   pointwise/field ellipticity report for an inline matrix literal or a
          field file (``--oracle`` adds brute-force cross-check deltas,
          ``--psi`` adds the off-diagonal constant at that sector angle).
ranges    theorem intervals with exact rational endpoints.
verify    run the named invariant suites; nonzero exit on hard failure.

Matrix literals are semicolon-separated rows with comma-separated a+bi
entries, e.g. ``"1+1i, 0; 0, 2-0.5i"``.  Reports embed the tool version and
an input digest; for a fixed ``--seed`` the bytes are identical across runs.
``PELLIPT_THREADS`` caps worker parallelism of the field analysis.

Exit codes: 0 success; 2 parse error (analyze); 3 degenerate field (analyze);
4 inconsistent constants (ranges); 1 verification failure or internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__, core, oracle, ranges, verify
from .field import DegenerateFieldError, FieldFormatError, analyze_field, field_digest, load_field

__all__ = ["main", "cmd_analyze", "cmd_ranges", "cmd_verify", "RunConfig", "parse_matrix_literal"]


@dataclass
class RunConfig:
    """Flags of one invocation; a fixed config yields byte-identical reports."""

    command: str
    seed: int = 42
    tol: float = 1e-9
    out: str | None = None
    format: str = "json"
    params: dict = dc_field(default_factory=dict)


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def parse_matrix_literal(text: str) -> np.ndarray:
    """Parse 'a+bi, c; d, e-fi' into a complex square matrix."""
    rows = [r.strip() for r in text.strip().split(";") if r.strip()]
    if not rows:
        raise CliError(f"empty matrix literal {text!r}", 2)
    data = []
    for r, row in enumerate(rows):
        entries = [e.strip() for e in (row.split(",") if "," in row else row.split())]
        parsed = []
        for c, entry in enumerate(entries):
            token = entry.replace(" ", "")
            token = re.sub(r"i\b", "j", token)
            try:
                parsed.append(complex(token))
            except ValueError as exc:
                raise CliError(
                    f"bad matrix entry {entry!r} at row {r}, column {c}: {exc}", 2
                ) from exc
        data.append(parsed)
    if any(len(row) != len(data) for row in data):
        raise CliError(f"matrix literal is not square: row lengths {[len(r) for r in data]}", 2)
    return np.array(data, dtype=complex)


def _interval_json(iv):
    return iv.to_dict()


def _flatten_for_csv(obj, prefix="", out=None):
    """Scalars become columns; interval dicts expand to four columns."""
    if out is None:
        out = {}
    if isinstance(obj, dict):
        if {"lo", "hi", "lo_closed", "hi_closed"} <= set(obj.keys()):
            for key in ("lo", "hi", "lo_closed", "hi_closed"):
                out[f"{prefix}{key}"] = obj[key]
            return out
        for k, v in obj.items():
            _flatten_for_csv(v, f"{prefix}{k}." if prefix or True else k, out)
        return out
    if isinstance(obj, (int, float, str, bool)) or obj is None:
        out[prefix.rstrip(".")] = obj
    return out


def _emit(report: dict, config: RunConfig) -> None:
    """Serialize the report (sorted keys, repr floats) and write atomically."""
    if config.format == "json":
        payload = json.dumps(report, sort_keys=True, indent=2) + "\n"
    else:
        flat = _flatten_for_csv(report)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        keys = sorted(flat)
        writer.writerow(keys)
        writer.writerow([flat[k] for k in keys])
        payload = buf.getvalue()
    if config.out:
        directory = os.path.dirname(os.path.abspath(config.out))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".pellipt-")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp, config.out)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    else:
        sys.stdout.write(payload)


def _mu_json(mu: float):
    return "inf" if mu == math.inf else mu


def cmd_analyze(args) -> int:
    config = RunConfig(command="analyze", seed=args.seed, tol=args.tol,
                       out=args.out, format=args.format)
    ps = [float(p) for p in (args.p or [2.0])]
    report = {
        "tool": "pellipt",
        "version": __version__,
        "command": "analyze",
        "seed": config.seed,
        "tol": config.tol,
        "ps": ps,
    }

    if (args.matrix is None) == (args.field is None):
        raise CliError("analyze needs exactly one of --matrix or --field", 2)

    if args.matrix is not None:
        A = parse_matrix_literal(args.matrix)
        report["input"] = {
            "kind": "matrix",
            "d": A.shape[0],
            "digest": hashlib.sha256(np.ascontiguousarray(A).tobytes()).hexdigest(),
        }
        lam, Lam = core.bounds_point(A)
        if lam <= 0.0:
            raise CliError(f"matrix is not strictly accretive (lambda = {lam})", 3)
        pr = core.point_report(A, ps=ps, tol=config.tol)
        body = pr.to_dict()
        body["mu"] = _mu_json(pr.mu)
        body["p_elliptic"] = _interval_json(ranges.p_elliptic_interval(pr.mu))
        report["report"] = body
        if args.oracle:
            report["oracle"] = {
                "delta_gap": {
                    repr(p): pr.delta_p[p] - oracle.sphere_min_delta(
                        A, p, n_samples=20000, seed=config.seed)
                    for p in ps
                },
                "mu_gap": pr.mu - oracle.sphere_min_ratio(A, n_samples=20000, seed=config.seed),
                "n_samples": 20000,
            }
        if args.psi is not None:
            omega = pr.omega_pt
            if args.psi + omega >= math.pi / 2:
                raise CliError(f"psi + omega = {args.psi + omega} >= pi/2", 4)
            report["offdiag"] = {
                "psi": args.psi,
                "constant": ranges.offdiag_constant(lam, Lam, omega, args.psi),
                "rotated_lower_bound": ranges.rotated_lower_bound(lam, omega, args.psi),
            }
    else:
        try:
            fld = load_field(args.field)
        except FieldFormatError as exc:
            raise CliError(str(exc), 2) from exc
        report["input"] = {
            "kind": "field",
            "path": os.path.basename(args.field),
            "d": fld.dim,
            "shape": list(fld.shape),
            "digest": field_digest(fld),
        }
        try:
            fr = analyze_field(fld, ps=ps, tol=config.tol)
        except DegenerateFieldError as exc:
            raise CliError(f"degenerate field: cell {exc.cell_index}", 3) from exc
        body = fr.to_dict()
        body["mu"] = _mu_json(fr.mu)
        report["report"] = body
        if args.oracle:
            flat = fld.cells_flat()
            gaps = {}
            for p in ps:
                vals = [oracle.sphere_min_delta(flat[c], p, n_samples=20000, seed=config.seed)
                        for c in range(min(fld.n_cells, 8))]
                gaps[repr(p)] = fr.delta_p[p] - min(
                    min(vals), *(core.delta_p_point(flat[c], p)
                                 for c in range(min(fld.n_cells, 8)))
                ) if vals else 0.0
            report["oracle"] = {"delta_gap_first_cells": gaps, "n_samples": 20000}

    _emit(report, config)
    return 0


def cmd_ranges(args) -> int:
    config = RunConfig(command="ranges", seed=args.seed, out=args.out, format=args.format)
    report = {
        "tool": "pellipt",
        "version": __version__,
        "command": "ranges",
        "intervals": {},
    }
    digest_src = json.dumps(
        {"p": args.p, "d": args.d, "lambda": args.lam, "Lambda": args.Lam, "mu": args.mu},
        sort_keys=True,
    )
    report["input"] = {"digest": hashlib.sha256(digest_src.encode()).hexdigest()}

    try:
        if args.p:
            for p in args.p:
                key = f"p={p:g}"
                entry = {"contraction": _interval_json(ranges.contraction_interval(p))}
                if args.d is not None:
                    entry["extrapolation"] = _interval_json(
                        ranges.extrapolation_interval(p, args.d))
                report["intervals"][key] = entry
        if args.lam is not None or args.Lam is not None:
            if args.lam is None or args.Lam is None or args.d is None:
                raise ValueError("generic range needs --lambda, --Lambda, and --d")
            report["intervals"]["generic"] = _interval_json(
                ranges.generic_interval(args.lam, args.Lam, args.d))
        if args.mu is not None:
            report["intervals"]["p_elliptic"] = _interval_json(
                ranges.p_elliptic_interval(args.mu))
    except ValueError as exc:
        raise CliError(f"inconsistent constants: {exc}", 4) from exc

    if not report["intervals"]:
        raise CliError("nothing to compute: pass --p [--d], --lambda/--Lambda/--d, or --mu", 4)
    _emit(report, config)
    return 0


def cmd_verify(args) -> int:
    config = RunConfig(command="verify", seed=args.seed, out=args.out, format=args.format)
    report = verify.run_suite(args.suite, seed=config.seed)
    _emit(report, config)
    if report["failures"]:
        print(f"FAIL: {report['failures'][0]}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pellipt",
        description="p-ellipticity functionals, exponent ranges, and semigroup verification",
    )
    parser.add_argument("--version", action="version", version=f"pellipt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=42, help="battery seed (default 42)")
        sp.add_argument("--out", help="write the report to this path (atomic)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("analyze", help="pointwise/field ellipticity report")
    sp.add_argument("--matrix", help="inline matrix literal, rows ';', entries ',' with a+bi")
    sp.add_argument("--field", help="path to a field file (JSON header, inline or binary cells)")
    sp.add_argument("--p", action="append", type=float, help="exponent (repeatable; default 2)")
    sp.add_argument("--tol", type=float, default=1e-9, help="mu bisection tolerance")
    sp.add_argument("--oracle", action="store_true", help="add brute-force cross-check deltas")
    sp.add_argument("--psi", type=float, help="sector angle for the off-diagonal constant")
    sp.add_argument("--eps", type=float, default=0.0, help="semigroup shift (recorded)")
    sp.add_argument("--scheme", default="exponential", help="propagation scheme (recorded)")
    common(sp)
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("ranges", help="theorem intervals with exact endpoints")
    sp.add_argument("--p", action="append", type=float, help="exponent (repeatable)")
    sp.add_argument("--d", type=int, help="space dimension (>= 3 for theorem ranges)")
    sp.add_argument("--lambda", dest="lam", type=float, help="lower ellipticity constant")
    sp.add_argument("--Lambda", dest="Lam", type=float, help="upper ellipticity constant")
    sp.add_argument("--mu", type=float, help="decoupled ellipticity ratio")
    common(sp)
    sp.set_defaults(fn=cmd_ranges)

    sp = sub.add_parser("verify", help="run invariant suites")
    sp.add_argument("--suite", choices=("core", "lab", "all"), default="all")
    common(sp)
    sp.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"pellipt: error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # pragma: no cover - defensive
        print(f"pellipt: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
