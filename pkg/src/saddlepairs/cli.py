"""Command line driver.

Every command writes one report, either CSV (a ``#``-prefixed JSON metadata
line, a header, then rows) or JSON (``{"kind", "meta", "rows"}``).  Floats
are written with 17 significant digits so reports re-read without loss;
``check`` re-reads a report and re-validates its invariants.

Errors go to stderr as a single JSON line; the exit code names the class:
2 config, 3 surface, 4 insufficient radius, 5 internal invariant.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import counting, enumeration, lattice, poisson, siegelveech
from .errors import ConfigError, InvariantViolation, SaddlePairsError
from .planar import DEFAULT_ARC_TOL, auto_radius
from .surface import load_surface

TOOL = "saddlepairs"
THREADS_ENV = "SADDLEPAIRS_THREADS"


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.1.0"


# --------------------------------------------------------------------------
# report encoding


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return "" if value is None else str(value)


def _parse(text: str):
    if text in ("true", "false"):
        return text == "true"
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def encode(kind: str, meta: dict, columns: Sequence[str], rows: List[dict], fmt: str) -> str:
    meta = dict(meta, kind=kind, columns=list(columns))
    if fmt == "json":
        return json.dumps({"kind": kind, "meta": meta, "rows": rows}, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def decode(text: str) -> Tuple[str, dict, List[dict]]:
    """Inverse of :func:`encode` for either format."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        return doc["kind"], doc["meta"], doc["rows"]
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ConfigError("report is missing its metadata line")
    meta = json.loads(lines[0][2:])
    reader = csv.reader(lines[1:])
    header = next(reader)
    rows = [{c: _parse(v) for c, v in zip(header, rec)} for rec in reader]
    return meta["kind"], meta, rows


def _rows_equal(a: List[dict], b: List[dict]) -> bool:
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        if set(ra) != set(rb):
            return False
        for k in ra:
            x, y = ra[k], rb[k]
            if isinstance(x, float) or isinstance(y, float):
                if x is None or y is None or float(x) != float(y):
                    if not (isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y)):
                        return False
            elif x != y:
                return False
    return True


# --------------------------------------------------------------------------
# validation used by --check and the check command


def _close(a: float, b: float, rel: float = 1e-12) -> bool:
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def validate(kind: str, meta: dict, rows: List[dict]) -> None:
    """Raise InvariantViolation when a report breaks its documented invariants."""
    def fail(msg):
        raise InvariantViolation(f"{kind} report: {msg}")

    if kind == "enumerate":
        R = meta["config"]["radius"]
        seen = {(r["x"], r["y"]) for r in rows}
        for r in rows:
            if not _close(math.hypot(r["x"], r["y"]), r["length"]):
                fail(f"length mismatch at ({r['x']}, {r['y']})")
            if r["length"] > R * (1 + 1e-12):
                fail(f"vector ({r['x']}, {r['y']}) longer than radius {R}")
            if (-r["x"], -r["y"]) not in seen:
                fail(f"reversal of ({r['x']}, {r['y']}) missing")
    elif kind == "count":
        for r in rows:
            if min(r["N"], r["N_A"], r["N_A_star"], r["N_0"]) < 0:
                fail("negative count")
            if r["N_A"] > r["N"] ** 2 or r["N_A_star"] > r["N_A"]:
                fail(f"count ordering violated at R={r['R']}")
            if not _close(r["ratio"], r["N_A"] / r["R"] ** 2):
                fail(f"ratio mismatch at R={r['R']}")
    elif kind == "decompose":
        for r in rows:
            total = r["m_t"] + r["e1"] + r["e2"] + r["e3"] + r["e4"]
            resid = abs(r["N_A_star"] - r["pi_e2t_average"] - total)
            if resid > r["residual_bound"] + 1e-9 * max(1.0, abs(r["N_A_star"])):
                fail(f"residual {resid} above bound {r['residual_bound']}")
    elif kind == "circle-average":
        for r in rows:
            err = abs(r["N_A_star"] - r["pi_e2t_average"]) / math.exp(2 * r["t"])
            if not _close(err, r["normalized_error"], 1e-9):
                fail(f"normalized error mismatch at t={r['t']}")
    elif kind in ("estimate-ca", "parallel-growth"):
        for r in rows:
            if r["count"] < 0 or not _close(r["ratio"], r["count"] / r["R"] ** 2):
                fail(f"ratio mismatch at R={r['R']}")
    elif kind == "poisson":
        for r in rows:
            if r["N"] < 0 or r["N_A"] < 0:
                fail("negative count")
            if r["N_A"] > r["N"] * max(r["N"] - 1, 0):
                fail("more pairs than ordered distinct pairs")
    elif kind == "lattice-constant":
        for r in rows:
            if r["constant"] < 0:
                fail("negative constant")
    else:
        raise ConfigError(f"unknown report kind {kind!r}")


# --------------------------------------------------------------------------
# commands


def _meta(args, command: str, conventions: Optional[dict] = None, **extra) -> dict:
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "output", "check", "threads", "format", "command")}
    meta = {"tool": TOOL, "version": tool_version(), "command": command, "config": config,
            "conventions": conventions or {}}
    meta.update(extra)
    return meta


def _pair_conventions(args) -> dict:
    return {
        "pairs_include_equal": args.include_equal,
        "parallel_include_equal": args.parallel_include_equal,
        "parallel_include_opposite": not args.exclude_opposite,
        "weighting": "multiplicity" if args.multiplicity else "set",
        "shells": "R/2 < |z| <= R",
        "unit_area": args.normalize,
    }


def _unit_scale(args, surface) -> float:
    """Holonomy scale factor: ``1/sqrt(area)`` under --normalize, else 1."""
    return 1.0 / math.sqrt(float(surface.area())) if getattr(args, "normalize", False) else 1.0


def _surface_meta(surface) -> dict:
    orders = list(surface.zero_orders)
    return {"zero_orders": orders, "marked_points": orders.count(0), "area": float(surface.area())}


def _holonomies(args, surface, radius: float, dedupe: bool = True):
    """Holonomy set covering ``radius`` in report units."""
    f = _unit_scale(args, surface)
    lam = enumeration.holonomy_set(surface, radius / f, dedupe=dedupe, workers=args.threads)
    return lam.scaled(f)


def cmd_enumerate(args):
    surface = load_surface(args.surface)
    f = _unit_scale(args, surface)
    scs = enumeration.saddle_connections(surface, args.radius / f, workers=args.threads)
    if args.dedupe:
        keep, seen = [], set()
        for sc in scs:
            if sc.holonomy not in seen:
                seen.add(sc.holonomy)
                keep.append(sc)
        scs = keep

    def coord(c):
        if f == 1 and isinstance(c, int):
            return c
        return float(c) * f

    rows = [{
        "x": coord(sc.holonomy.x),
        "y": coord(sc.holonomy.y),
        "length": float(sc.length) * f,
        "start": sc.start_singularity,
        "end": sc.end_singularity,
        "fingerprint": ";".join(str(c) for c in sc.homology_fingerprint),
    } for sc in scs]
    meta = _meta(args, "enumerate", {"dedupe": args.dedupe, "unit_area": args.normalize,
                                     "marked_points_are_endpoints": True},
                 surface=_surface_meta(surface))
    return "enumerate", meta, list(enumeration.CSV_COLUMNS), rows


def cmd_count(args):
    surface = load_surface(args.surface)
    radii = sorted(args.radius)
    lam = _holonomies(args, surface, radii[-1], dedupe=not args.multiplicity)
    rows = []
    for R in radii:
        rep = counting.pair_count_report(lam, R, args.area_bound, args.include_equal,
                                         args.parallel_include_equal, not args.exclude_opposite)
        rows.append({"R": float(R), "A": float(args.area_bound), "N": rep.N, "N_A": rep.N_A,
                     "N_A_star": rep.N_A_star, "N_0": rep.N_0, "ratio": rep.normalized_N_A})
    meta = _meta(args, "count", _pair_conventions(args), surface=_surface_meta(surface))
    return "count", meta, list(counting.REPORT_COLUMNS), rows


def _decomposition_radius(args, t: float) -> float:
    need = counting.minimum_decomposition_radius(t, args.area_bound)
    return args.radius if args.radius is not None else max(auto_radius(t, args.area_bound), need)


def cmd_decompose(args):
    surface = load_surface(args.surface)
    rows = []
    for t in args.t:
        lam = _holonomies(args, surface, _decomposition_radius(args, t))
        d = counting.error_decomposition(lam, t, args.area_bound, args.tol)
        row = d.to_dict()
        counts = row.pop("region_counts")
        for name, value in sorted(counts.items()):
            row[f"count_{name}"] = value
        row["radius"] = float(lam.radius)
        rows.append(row)
    columns = ["t", "A", "radius", "N_A_star", "circle_average", "pi_e2t_average", "m_t", "e1", "e2",
               "e3", "e4", "residual", "residual_bound", "positive_arc_pairs", "tol"]
    columns += sorted(k for k in rows[0] if k.startswith("count_")) if rows else []
    meta = _meta(args, "decompose", {"shells": "half-open (lo, hi]", "unit_area": args.normalize},
                 surface=_surface_meta(surface))
    return "decompose", meta, columns, rows


def cmd_circle_average(args):
    surface = load_surface(args.surface)
    rows = []
    for t in args.t:
        radius = args.radius if args.radius is not None else auto_radius(t, args.area_bound)
        lam = _holonomies(args, surface, radius)
        rep = siegelveech.approximation_report(lam, t, args.area_bound, args.tol)
        rows.append(dict(rep.to_dict(), radius=float(lam.radius)))
    columns = ["t", "A", "radius", "N_A_star", "circle_average", "pi_e2t_average", "normalized_error"]
    meta = _meta(args, "circle-average", {"unit_area": args.normalize}, surface=_surface_meta(surface))
    return "circle-average", meta, columns, rows


def cmd_estimate_ca(args):
    surface = load_surface(args.surface)
    radii = counting.check_radii(args.radius)
    lam = _holonomies(args, surface, radii[-1], dedupe=not args.multiplicity)
    fit = counting.growth_fit(radii, [counting.count_pairs(lam, R, args.area_bound, args.include_equal)
                                      for R in radii])
    rows = [{"R": R, "A": float(args.area_bound), "count": int(c), "ratio": q}
            for R, c, q in zip(fit.radii, fit.counts, fit.ratios)]
    meta = _meta(args, "estimate-ca", _pair_conventions(args), mean=fit.mean,
                 coefficient_of_variation=fit.coefficient_of_variation, surface=_surface_meta(surface))
    return "estimate-ca", meta, ["R", "A", "count", "ratio"], rows


def cmd_poisson(args):
    radii = counting.check_radii(args.radius, minimum=1)
    table = poisson.trial_table(args.intensity, args.area_bound, radii, args.trials, args.seed,
                                workers=args.threads)
    rows = [{"trial": k, "R": R, "A": float(args.area_bound), "N": n, "N_A": na}
            for k, R, n, na in table]
    fit = poisson.summarize_pair_table(args.intensity, args.area_bound, radii, table, args.trials,
                                       args.seed, args.volume_samples)
    summary = {"empirical": list(fit.ratios), "predicted": list(fit.predicted),
               "ratio": list(fit.ratio_to_prediction), "standard_errors": list(fit.standard_errors)}
    extra = {"generator": poisson.GENERATOR, "summary": summary}
    if args.cells:
        cells = [tuple(float(v) for v in c.split(",")) for c in args.cells]
        rep = poisson.cell_count_test(args.intensity, cells, args.trials, args.seed)
        extra["cell_test"] = rep.to_dict()
    meta = _meta(args, "poisson", {"pairs_include_equal": False}, **extra)
    return "poisson", meta, ["trial", "R", "A", "N", "N_A"], rows


def cmd_lattice_constant(args):
    data = lattice.load_cusp_data(args.cusp_file)
    conventions = list(lattice.Convention) if args.convention == "both" else [lattice.Convention(args.convention)]
    rows = [{"convention": c.value, "constant": lattice.lattice_constant(data, c)} for c in conventions]
    return "lattice-constant", _meta(args, "lattice-constant"), ["convention", "constant"], rows


def cmd_parallel_growth(args):
    surface = load_surface(args.surface)
    radii = counting.check_radii(args.radius, minimum=1)
    lam = _holonomies(args, surface, radii[-1], dedupe=not args.multiplicity)
    fit = lattice.parallel_growth(lam, radii, args.parallel_include_equal, not args.exclude_opposite)
    rows = [{"R": R, "count": int(c), "ratio": q} for R, c, q in zip(fit.radii, fit.counts, fit.ratios)]
    meta = _meta(args, "parallel-growth", {"parallel_include_equal": args.parallel_include_equal,
                                           "parallel_include_opposite": not args.exclude_opposite,
                                           "unit_area": args.normalize},
                 mean=fit.mean, coefficient_of_variation=fit.coefficient_of_variation,
                 surface=_surface_meta(surface))
    return "parallel-growth", meta, ["R", "count", "ratio"], rows


def cmd_check(args):
    text = Path(args.report).read_text()
    kind, meta, rows = decode(text)
    validate(kind, meta, rows)
    return None


# --------------------------------------------------------------------------
# parser


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if value < 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be nonnegative: {text!r}")
    return value


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if not env:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}")


class _Parser(argparse.ArgumentParser):
    """Argument errors become the same single-line JSON record as runtime errors."""

    def error(self, message):
        sys.stderr.write(json.dumps({"error": "ConfigError", "exit_code": 2,
                                     "message": f"{self.prog}: {message}"}, sort_keys=True) + "\n")
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=TOOL, description="Saddle connection pair counting experiments.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {tool_version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt="csv"):
        p.add_argument("--format", choices=("csv", "json"), default=fmt)
        p.add_argument("--output", "-o", default=None, help="write here instead of stdout")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker cap (default ${THREADS_ENV} or 1)")
        p.add_argument("--check", action="store_true", help="re-read and re-validate the report")

    def surface_arg(p):
        p.add_argument("--surface", required=True, help="torus, l3, cyl2, or a JSON file")
        p.add_argument("--normalize", action="store_true",
                       help="rescale holonomies by 1/sqrt(area); radii and bounds are then in unit-area units")

    def pair_flags(p):
        p.add_argument("--exclude-equal", dest="include_equal", action="store_false",
                       help="drop diagonal pairs (z, z) from N_A")
        p.add_argument("--parallel-include-equal", action="store_true",
                       help="keep diagonal pairs in N_0")
        p.add_argument("--exclude-opposite", action="store_true", help="drop (z, -z) pairs from N_0")
        p.add_argument("--multiplicity", action="store_true",
                       help="weight vectors by saddle connection multiplicity")

    p = sub.add_parser("enumerate", help="saddle connections up to a radius")
    surface_arg(p)
    p.add_argument("--radius", type=_positive_float, required=True)
    p.add_argument("--dedupe", action="store_true", help="one row per holonomy vector")
    common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("count", help="N, N_A, N_A*, N_0 per radius")
    surface_arg(p)
    p.add_argument("--radius", type=_positive_float, nargs="+", required=True)
    p.add_argument("--area-bound", type=_nonneg_float, default=1.0)
    pair_flags(p)
    common(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("decompose", help="main term and error terms at time t")
    surface_arg(p)
    p.add_argument("--t", type=float, nargs="+", required=True)
    p.add_argument("--area-bound", type=_nonneg_float, default=1.0)
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_ARC_TOL)
    p.add_argument("--radius", type=_positive_float, default=None, help="enumeration radius (default: automatic)")
    common(p, "json")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("circle-average", help="circle average of the pair transform at time t")
    surface_arg(p)
    p.add_argument("--t", type=float, nargs="+", required=True)
    p.add_argument("--area-bound", type=_nonneg_float, default=1.0)
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_ARC_TOL)
    p.add_argument("--radius", type=_positive_float, default=None)
    common(p, "json")
    p.set_defaults(func=cmd_circle_average)

    p = sub.add_parser("estimate-ca", help="N_A / R^2 over increasing radii")
    surface_arg(p)
    p.add_argument("--radius", type=_positive_float, nargs="+", required=True)
    p.add_argument("--area-bound", type=_nonneg_float, default=1.0)
    pair_flags(p)
    common(p)
    p.set_defaults(func=cmd_estimate_ca)

    p = sub.add_parser("parallel-growth", help="N_0 / R^2 over increasing radii")
    surface_arg(p)
    p.add_argument("--radius", type=_positive_float, nargs="+", required=True)
    pair_flags(p)
    common(p)
    p.set_defaults(func=cmd_parallel_growth)

    p = sub.add_parser("poisson", help="Poisson process pair counts against the volume prediction")
    p.add_argument("--intensity", type=_positive_float, default=1.0)
    p.add_argument("--area-bound", type=_nonneg_float, default=1.0)
    p.add_argument("--radius", type=_positive_float, nargs="+", required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--volume-samples", type=int, default=10 ** 7)
    p.add_argument("--cells", nargs="*", default=None, metavar="X0,Y0,X1,Y1",
                   help="also run the cell-count test on these boxes")
    common(p)
    p.set_defaults(func=cmd_poisson)

    p = sub.add_parser("lattice-constant", help="parallel-pair constant from cusp data")
    p.add_argument("--cusp-file", required=True)
    p.add_argument("--convention", choices=("as-printed", "ordered-pairs", "both"), default="both")
    common(p, "json")
    p.set_defaults(func=cmd_lattice_constant)

    p = sub.add_parser("check", help="re-read and validate a report")
    p.add_argument("report")
    p.set_defaults(func=cmd_check, format=None, output=None, threads=None)
    return parser


def _error_record(exc: BaseException, code: int) -> str:
    return json.dumps({"error": type(exc).__name__, "exit_code": code, "message": str(exc)}, sort_keys=True)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "threads", None) is None:
            args.threads = _default_threads()
        elif args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        result = args.func(args)
        if result is None:
            return 0
        kind, meta, columns, rows = result
        text = encode(kind, meta, columns, rows, args.format)
        if args.check:
            k2, m2, r2 = decode(text)
            if k2 != kind or not _rows_equal(rows, r2):
                raise InvariantViolation("report did not survive a round trip")
            validate(k2, m2, r2)
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    except SaddlePairsError as exc:
        sys.stderr.write(_error_record(exc, exc.exit_code) + "\n")
        return exc.exit_code
    except (ValueError, OSError) as exc:
        sys.stderr.write(_error_record(exc, 2) + "\n")
        return 2
    except Exception as exc:  # pragma: no cover - last-resort mapping
        sys.stderr.write(_error_record(exc, 5) + "\n")
        return 5


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
