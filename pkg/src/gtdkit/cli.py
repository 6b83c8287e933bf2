"""Command-line interface.

Subcommands::

    gtdkit systems                         list built-in systems and metrics
    gtdkit eval  --system vdw --point S=1,V=2 [--quantity curvature]
    gtdkit scan  --system rn_closed --range S=0.5:10:500 --pin Q=1 --quantity detg
    gtdkit check legendre --n 2 --transform total --trials 100

`--system` accepts a built-in system name, a closed-form metric name, or a
path to a definition file ([system] or [metric] sections). Flags follow the
pattern `--range VAR=start:stop:count` (inclusive endpoints), `--pin
VAR=value`, `--point VAR=value,...`, `--params name=value,...`.

Exit codes: 0 success / check within tolerance, 1 check failed, 2 user input
error, 3 degenerate geometry, 4 output write failure.

Reports are deterministic: CSV uses fixed column order (coordinates in
declaration order, then values, then status), LF line endings, and floats
with 17 significant digits; JSON carries a `schema_version` field.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis, fundeq, geometry, phase_space
from .analysis import Axis, GridSpec
from .errors import DegenerateMetricError, DomainError, GtdError, ParseError
from .geometry import HessianMetricField, MetricKind

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4

CHECKS = ("contact", "euler", "first-law", "gibbs-duhem", "legendre")

DEFAULT_TOLERANCES = {
    "legendre": 1e-9,
    "euler": 1e-10,
    "gibbs-duhem": 1e-10,
    "contact": 1e-12,
    "first-law": 1e-12,
}

# sampling boxes for randomized checks on the built-in systems
_CHECK_BOXES = {
    "vdw": {"S": (0.5, 2.0), "V": (0.7, 5.0)},
    "ideal_gas": {"S": (0.5, 2.0), "V": (0.7, 5.0)},
    "kerr_newman": {"S": (1.0, 10.0), "J": (0.1, 1.5), "Q": (0.3, 1.5)},
    "reissner_nordstrom": {"S": (1.0, 10.0), "Q": (0.3, 1.5)},
    "kerr": {"S": (1.0, 10.0), "J": (0.1, 1.5)},
}


class UsageError(Exception):
    """Bad flag values detected after argparse; maps to exit code 2."""


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _parse_assignments(text: str, flag: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise UsageError(f"{flag} expects NAME=VALUE items, got {chunk!r}")
        name, _, value = chunk.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"{flag}: {value!r} is not a number") from None
    if not out:
        raise UsageError(f"{flag} is empty")
    return out


def _parse_ranges(items: Sequence[str]) -> dict[str, Axis]:
    out: dict[str, Axis] = {}
    for item in items:
        for chunk in item.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            name, eq, rest = chunk.partition("=")
            parts = rest.split(":")
            if not eq or len(parts) != 3:
                raise UsageError(f"--range expects VAR=start:stop:count, got {chunk!r}")
            try:
                start, stop = float(parts[0]), float(parts[1])
                count = int(parts[2])
            except ValueError:
                raise UsageError(f"--range {chunk!r}: malformed numbers") from None
            try:
                out[name.strip()] = Axis(start, stop, count)
            except ValueError as exc:
                raise UsageError(f"--range {chunk!r}: {exc}") from None
    return out


def _parse_pins(items: Sequence[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in items:
        out.update(_parse_assignments(item, "--pin"))
    return out


def resolve_field(name: str, params: dict[str, float], kind: MetricKind):
    """Turn a --system value into a metric field."""
    if name in fundeq.BUILTIN_NAMES:
        spec = fundeq.builtin(name, **params)
        return HessianMetricField(spec, kind)
    if name in geometry.CLOSED_FORM_NAMES:
        if kind is not MetricKind.NATURAL:
            raise UsageError(f"{name} is a closed-form metric; --metric-kind does not apply")
        try:
            return geometry.closed_form_metric(name, **params)
        except TypeError:
            raise UsageError(f"{name} does not take parameters {sorted(params)}") from None
    path = Path(name)
    if path.exists():
        text = path.read_text()
        if "[metric]" in text:
            f = geometry.load_metric_file(path)
            if params:
                unknown = set(params) - set(f.parameters)
                if unknown:
                    raise UsageError(f"unknown parameters for {name}: {sorted(unknown)}")
                f.parameters.update(params)
            return f
        spec = fundeq.load_system_file(path)
        for key in params:
            if key not in spec.parameters:
                raise UsageError(f"unknown parameter {key!r} for system file {name}")
        return HessianMetricField(spec.with_parameters(**params), kind)
    raise UsageError(
        f"unknown system {name!r}: not a built-in "
        f"({', '.join(fundeq.BUILTIN_NAMES)}), not a closed-form metric "
        f"({', '.join(geometry.CLOSED_FORM_NAMES)}), and no such file"
    )


def _report_skeleton(args, command: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "system": getattr(args, "system", None),
        "parameters": getattr(args, "_params", {}),
        "command": command,
        "grid": None,
        "quantity": getattr(args, "quantity", None),
        "values": None,
        "singular_points": None,
        "fits": None,
        "residuals": None,
    }


def _write_csv(path_or_stream, header: Sequence[str], rows) -> None:
    def emit(stream):
        stream.write(",".join(header) + "\n")
        for row in rows:
            stream.write(",".join(row) + "\n")

    if isinstance(path_or_stream, (str, Path)):
        with open(path_or_stream, "w", newline="\n") as stream:
            emit(stream)
    else:
        emit(path_or_stream)


def _emit(args, report: dict, csv_header: Sequence[str], csv_rows) -> None:
    if args.output is None:
        return
    try:
        if args.format == "csv":
            _write_csv(args.output, csv_header, csv_rows)
        else:
            with open(args.output, "w", newline="\n") as stream:
                json.dump(report, stream, indent=2)
                stream.write("\n")
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc


class _IOFailure(Exception):
    pass


# -- systems -----------------------------------------------------------------------


def cmd_systems(args) -> int:
    print("built-in systems:")
    for name in fundeq.BUILTIN_NAMES:
        spec = fundeq.builtin(name)
        head = ", ".join(spec.variables)
        if spec.parameters:
            head += "; " + ", ".join(spec.parameters)
            defaults = ", ".join(f"{k}={v:g}" for k, v in spec.parameters.items())
            print(f"  {name} ({head})  [defaults: {defaults}]")
        else:
            print(f"  {name} ({head})")
    print("closed-form metrics:")
    for name in geometry.CLOSED_FORM_NAMES:
        f = geometry.closed_form_metric(name)
        print(f"  {name} ({', '.join(f.coordinates)})")
    return EXIT_OK


# -- eval --------------------------------------------------------------------------


def cmd_eval(args) -> int:
    params = args._params
    f = resolve_field(args.system, params, MetricKind(args.metric_kind))
    point_map = _parse_assignments(args.point, "--point")
    missing = [c for c in f.coordinates if c not in point_map]
    if missing:
        raise UsageError(f"--point is missing coordinates {missing}")
    point = [point_map[c] for c in f.coordinates]

    values: dict = {"point": dict(zip(f.coordinates, point))}
    want = args.quantity
    has_spec = isinstance(f, HessianMetricField)
    if want in ("potential", "intensive") and not has_spec:
        raise UsageError(f"{want!r} requires a fundamental-equation system")
    if want == "potential" or (want == "all" and has_spec):
        values["potential"] = fundeq.potential_value(f.spec, point)
    if want == "intensive" or (want == "all" and has_spec):
        intensive = fundeq.intensive_variables(f.spec, point)
        values["intensive"] = {f"I_{v}": float(x) for v, x in zip(f.spec.variables, intensive)}
    if want in ("metric", "detg", "all"):
        g = geometry.metric_at(f, point).components
        if want != "detg":
            values["metric"] = g.tolist()
        values["det_g"] = float(np.linalg.det(g))
    if want in ("curvature", "all"):
        report_c = geometry.scalar_curvature(f, point)
        values.setdefault("det_g", report_c.det_g)
        values["curvature"] = report_c.scalar

    for key, val in values.items():
        if key == "point":
            continue
        if key == "metric":
            for a, row in enumerate(val):
                for b, x in enumerate(row):
                    print(f"g_{f.coordinates[a]}_{f.coordinates[b]} = {fmt(x)}")
        elif key == "intensive":
            for name, x in val.items():
                print(f"{name} = {fmt(x)}")
        else:
            print(f"{key} = {fmt(val)}")

    report = _report_skeleton(args, "eval")
    report["values"] = values
    header = list(f.coordinates)
    row = [fmt(x) for x in point]
    for key in ("potential",):
        if key in values:
            header.append(key)
            row.append(fmt(values[key]))
    if "intensive" in values:
        for name, x in values["intensive"].items():
            header.append(name)
            row.append(fmt(x))
    if "metric" in values:
        for a in range(f.dim):
            for b in range(f.dim):
                header.append(f"g_{f.coordinates[a]}_{f.coordinates[b]}")
                row.append(fmt(values["metric"][a][b]))
    if "det_g" in values:
        header.append("det_g")
        row.append(fmt(values["det_g"]))
    if "curvature" in values:
        header.append("R")
        row.append(fmt(values["curvature"]))
    header.append("status")
    row.append(analysis.STATUS_OK)
    _emit(args, report, header, [row])
    return EXIT_OK


# -- scan --------------------------------------------------------------------------


def cmd_scan(args) -> int:
    f = resolve_field(args.system, args._params, MetricKind(args.metric_kind))
    ranges = _parse_ranges(args.range or [])
    pins = _parse_pins(args.pin or [])
    overlap = set(ranges) & set(pins)
    if overlap:
        raise UsageError(f"coordinates both ranged and pinned: {sorted(overlap)}")
    try:
        grid = GridSpec.build(f.coordinates, {**ranges, **pins})
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    report_data = analysis.grid_scan(f, grid, args.quantity, workers=args.workers)
    roots = analysis.find_singular_locus(f, grid)
    fits = []
    if args.fit_center:
        center_map = _parse_assignments(args.fit_center, "--fit-center")
        direction_map = _parse_assignments(args.fit_direction or "", "--fit-direction")
        for c in f.coordinates:
            if c not in center_map:
                raise UsageError(f"--fit-center is missing coordinate {c!r}")
        center = [center_map[c] for c in f.coordinates]
        direction = [direction_map.get(c, 0.0) for c in f.coordinates]
        base, count, factor = _parse_offsets(args.fit_offsets)
        fits.append(
            analysis.fit_divergence_exponent(
                f, center, direction, analysis.geometric_offsets(base, count, factor)
            )
        )
    report_data.singular_points = roots
    report_data.fits = fits

    n_ok = sum(1 for s in report_data.status if s == analysis.STATUS_OK)
    print(f"scanned {grid.size} points ({n_ok} ok, {grid.size - n_ok} marked)")
    for root in roots:
        coords = ", ".join(f"{k}={fmt(v)}" for k, v in root.coords.items())
        cat = f" [{root.category}]" if root.category else ""
        print(f"root: {coords}  det_g = {fmt(root.det_g)}{cat}")
    for fit in fits:
        if fit.diverges:
            print(f"divergence exponent: {fit.exponent:.4f} (correlation {fit.correlation:.6f})")
        else:
            print("no divergence detected (values below noise floor)")

    report = _report_skeleton(args, "scan")
    report["grid"] = grid.describe()
    report["values"] = {
        "columns": list(report_data.columns),
        "rows": [[None if np.isnan(x) else float(x) for x in row] for row in report_data.values],
        "status": report_data.status,
    }
    report["singular_points"] = [
        {"coords": r.coords, "det_g": r.det_g, "category": r.category} for r in roots
    ]
    report["fits"] = [
        {
            "exponent": fit.exponent,
            "intercept": fit.intercept,
            "correlation": fit.correlation,
            "samples": fit.samples,
            "diverges": fit.diverges,
        }
        for fit in fits
    ]

    header = list(grid.names) + list(report_data.columns) + ["status"]
    points = grid.points()
    rows = []
    for i in range(len(points)):
        row = [fmt(x) for x in points[i]]
        row += ["nan" if np.isnan(x) else fmt(x) for x in report_data.values[i]]
        row.append(report_data.status[i])
        rows.append(row)
    _emit(args, report, header, rows)
    return EXIT_OK


def _parse_offsets(text: str) -> tuple[float, int, float]:
    parts = (text or "").split(":")
    if len(parts) not in (2, 3):
        raise UsageError("--fit-offsets expects BASE:COUNT[:FACTOR]")
    try:
        base = float(parts[0])
        count = int(parts[1])
        factor = float(parts[2]) if len(parts) == 3 else 0.5
    except ValueError:
        raise UsageError(f"--fit-offsets {text!r}: malformed numbers") from None
    if base <= 0 or count < 4 or not 0 < factor < 1:
        raise UsageError("--fit-offsets needs BASE > 0, COUNT >= 4, 0 < FACTOR < 1")
    return base, count, factor


# -- check -------------------------------------------------------------------------


def _sample_box(spec, args, rng) -> np.ndarray:
    if args.box:
        box = {}
        for chunk in args.box.split(","):
            name, eq, rest = chunk.partition("=")
            lo, colon, hi = rest.partition(":")
            if not eq or not colon:
                raise UsageError(f"--box expects VAR=lo:hi items, got {chunk!r}")
            box[name.strip()] = (float(lo), float(hi))
    else:
        box = _CHECK_BOXES.get(spec.name)
        if box is None:
            raise UsageError(f"no default sampling box for {spec.name!r}; pass --box VAR=lo:hi,...")
    missing = [v for v in spec.variables if v not in box]
    if missing:
        raise UsageError(f"--box is missing variables {missing}")
    return np.array([rng.uniform(*box[v]) for v in spec.variables])


def _require_system(args) -> "fundeq.SystemSpec":
    if not args.system:
        raise UsageError("this check requires --system")
    f = resolve_field(args.system, args._params, MetricKind.NATURAL)
    if not isinstance(f, HessianMetricField):
        raise UsageError("this check requires a fundamental-equation system")
    return f.spec


def _parse_transform(text: str, n: int) -> phase_space.LegendreMap:
    if text == "identity":
        return phase_space.LegendreMap.identity(n)
    if text == "total":
        return phase_space.LegendreMap.total(n)
    if text.startswith("subset="):
        try:
            indices = [int(tok) - 1 for tok in text[len("subset=") :].split("+")]
        except ValueError:
            raise UsageError(f"--transform {text!r}: subset must be 1-based indices") from None
        if any(not 0 <= i < n for i in indices):
            raise UsageError(f"--transform subset indices must be in 1..{n}")
        return phase_space.LegendreMap.partial(n, indices)
    raise UsageError(f"--transform must be identity, total, or subset=i[+j...], got {text!r}")


def cmd_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    tol = args.tol if args.tol is not None else DEFAULT_TOLERANCES[args.identity]
    residuals: list[float] = []

    if args.identity == "legendre":
        lmap = _parse_transform(args.transform, args.n)
        for _ in range(args.trials):
            point = phase_space.PhasePoint.from_coords(rng.uniform(-2.0, 2.0, 2 * args.n + 1))
            residuals.append(phase_space.legendre_invariance_residual(lmap, point))
    elif args.identity == "contact":
        expected = phase_space.contact_volume_expected(args.n)
        for _ in range(args.trials):
            point = phase_space.PhasePoint.from_coords(rng.uniform(-2.0, 2.0, 2 * args.n + 1))
            coeff = phase_space.contact_volume_coefficient(point, args.n)
            residuals.append(abs(coeff - expected))
    elif args.identity == "first-law":
        spec = _require_system(args)
        for _ in range(args.trials):
            point = _sample_box(spec, args, rng)
            direction = _unit_direction(rng, spec.dim)
            residuals.append(abs(phase_space.theta_residual(spec, point, direction)))
    elif args.identity in ("euler", "gibbs-duhem"):
        spec = _require_system(args)
        weights = tuple(float(w) for w in args.weights.split(",")) if args.weights else None
        for _ in range(args.trials):
            point = _sample_box(spec, args, rng)
            if args.identity == "euler":
                raw = phase_space.euler_residual(spec, point, weights, args.beta)
            else:
                direction = _unit_direction(rng, spec.dim)
                raw = phase_space.gibbs_duhem_residual(spec, point, direction, weights, args.beta)
            residuals.append(abs(raw))
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown check {args.identity!r}")

    residuals = [float(r) for r in residuals]
    worst = max(residuals)
    passed = bool(worst <= tol)
    print(f"check {args.identity}: max residual {fmt(worst)} over {len(residuals)} trials")
    print(f"tolerance {fmt(tol)}: {'PASS' if passed else 'FAIL'}")

    report = _report_skeleton(args, "check")
    report["quantity"] = args.identity
    report["residuals"] = {
        "max": worst,
        "tolerance": tol,
        "trials": len(residuals),
        "pass": passed,
        "values": residuals,
    }
    header = ["trial", "residual"]
    rows = [[str(i), fmt(r)] for i, r in enumerate(residuals)]
    _emit(args, report, header, rows)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def _unit_direction(rng, n: int) -> np.ndarray:
    v = rng.normal(size=n)
    norm = float(np.linalg.norm(v))
    return v / norm if norm > 0 else np.ones(n) / math.sqrt(n)


# -- argument parsing -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtdkit",
        description="Legendre-invariant thermodynamic geometry: metrics, curvature, scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("systems", help="list built-in systems and closed-form metrics")

    def add_common(p):
        p.add_argument("--system", required=True, help="built-in name, closed-form name, or file")
        p.add_argument("--params", default=None, help="parameter overrides, name=value,...")
        p.add_argument(
            "--metric-kind",
            default="natural",
            choices=[k.value for k in MetricKind if k is not MetricKind.DIRECT],
            help="metric construction for fundamental-equation systems",
        )
        p.add_argument("--output", default=None, help="write a report file")
        p.add_argument("--format", default="json", choices=["csv", "json"], help="report format")

    p_eval = sub.add_parser(
        "eval",
        help="evaluate quantities at a point",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    add_common(p_eval)
    p_eval.add_argument("--point", required=True, help="coordinates, VAR=value,...")
    p_eval.add_argument(
        "--quantity",
        default="all",
        choices=["potential", "intensive", "metric", "detg", "curvature", "all"],
    )

    p_scan = sub.add_parser(
        "scan",
        help="scan a grid; find det-g roots; optional divergence fit",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    add_common(p_scan)
    p_scan.add_argument(
        "--range", action="append", help="VAR=start:stop:count (repeatable, comma-separable)"
    )
    p_scan.add_argument("--pin", action="append", help="VAR=value (repeatable)")
    p_scan.add_argument("--quantity", default="curvature", choices=list(analysis.QUANTITIES))
    p_scan.add_argument("--workers", type=int, default=os.cpu_count(), help="scan parallelism")
    p_scan.add_argument("--fit-center", default=None, help="divergence fit center, VAR=value,...")
    p_scan.add_argument("--fit-direction", default=None, help="approach direction, VAR=value,...")
    p_scan.add_argument("--fit-offsets", default="0.1:10", help="BASE:COUNT[:FACTOR]")

    p_check = sub.add_parser(
        "check",
        help="run an identity check and report residuals",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_check.add_argument("identity", choices=list(CHECKS))
    p_check.add_argument("--system", default=None, help="system for system-bound checks")
    p_check.add_argument("--params", default=None)
    p_check.add_argument("--n", type=int, default=2, help="degrees of freedom for phase-space checks")
    p_check.add_argument("--transform", default="total", help="identity, total, or subset=i[+j...]")
    p_check.add_argument("--trials", type=int, default=100)
    p_check.add_argument("--seed", type=int, default=20260810)
    tol_text = ", ".join(f"{k} {v:g}" for k, v in sorted(DEFAULT_TOLERANCES.items()))
    p_check.add_argument(
        "--tol", type=float, default=None, help=f"tolerance override (defaults: {tol_text})"
    )
    p_check.add_argument("--weights", default=None, help="comma-separated weights")
    p_check.add_argument("--beta", type=float, default=None, help="homogeneity degree")
    p_check.add_argument("--box", default=None, help="sampling box, VAR=lo:hi,...")
    p_check.add_argument("--output", default=None)
    p_check.add_argument("--format", default="json", choices=["csv", "json"])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args._params = _parse_assignments(args.params, "--params") if getattr(args, "params", None) else {}
        if args.command == "systems":
            return cmd_systems(args)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "scan":
            return cmd_scan(args)
        return cmd_check(args)
    except _IOFailure as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    except DegenerateMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, ParseError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GtdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
