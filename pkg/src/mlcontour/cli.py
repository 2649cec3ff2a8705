"""Command line interface: ``mlcontour <subcommand> [flags]``.

Every output starts with a metadata record (tool version, the full
configuration, argv and RNG seed) so a file is enough to rerun the command
that produced it. CSV files carry it as ``#`` comment lines and use 17
significant digits; JSON documents carry it under ``"meta"`` next to
``"schema": 1``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure. Failures print
one JSON object ``{"error": ..., "type": ..., "exit_code": ...}`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from contextlib import contextmanager

import numpy as np

from . import __version__
from .contours import ContourKind, ContourSpec, build_nodes
from .errors import NoWideningSuffices, NumericalError, ValidationError
from .fov import (
    BoundaryCondition,
    Orientation,
    contour_clearance,
    flip_to_matrix_convention,
    fov_boundary,
    parabola_from_coefficients,
)
from .mlsolve import MlProblem, clamp_and_renormalize, ml_action
from .models import (
    ModelKind,
    ModelSpec,
    TridiagonalGenerator,
    build_generator,
    build_schlogl,
    initial_state,
    pde_coefficients,
)
from .pseudospectra import contour_resolvent_profile, ps_grid
from .ssa import RngStream, ensemble_histogram, simulate_path

__all__ = ["main", "build_parser", "run", "SCHEMA_VERSION", "THREADS_ENV"]

SCHEMA_VERSION = 1
THREADS_ENV = "MLCONTOUR_THREADS"


class _Parser(argparse.ArgumentParser):
    """Argument errors become :class:`ValidationError` (exit code 2, JSON on stderr)."""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


# ---------------------------------------------------------------------------
# flags


def _model_flags(p, matrix_file=True):
    g = p.add_argument_group("model")
    g.add_argument("--model", help="mono, bi, schlogl or walk")
    g.add_argument("--m", type=int, help="lattice endpoint (maximum molecule count)")
    g.add_argument("--n", type=int, help="matrix dimension (Schlogl truncation size)")
    for name in ("c1", "c2", "k1", "k2", "k3", "k4", "B1", "B2"):
        g.add_argument(f"--{name}", type=float)
    if matrix_file:
        g.add_argument("--matrix-file", help="JSON matrix record written by the 'model' subcommand")


def _contour_flags(p):
    g = p.add_argument_group("contour")
    g.add_argument("--contour", default="hyperbola", choices=[k.value for k in ContourKind])
    g.add_argument("--t", type=float, default=1.0, help="evaluation time")
    g.add_argument("--M", type=int, default=16, help="quadrature half-count")
    g.add_argument("--widen", type=float, default=1.0, help="factor applied to the contour scale")
    g.add_argument("--cutoff", type=float, help="drop nodes with real part left of this value")


def _output_flags(p, formats=("csv", "json"), default="csv"):
    p.add_argument("--out", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlcontour", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"mlcontour {__version__}")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"cap on worker threads (default: ${THREADS_ENV} or all cores)",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("model", help="emit a generator matrix")
    _model_flags(p, matrix_file=False)
    _output_flags(p, default="json")
    p.add_argument("--conservative", choices=["yes", "no"], default="yes",
                   help="Schlogl: drop births out of the last state so columns sum to zero")

    p = sub.add_parser("contour", help="emit contour nodes and quadrature coefficients")
    _contour_flags(p)
    _output_flags(p)

    p = sub.add_parser("solve", help="p(t) = E_alpha(A t^alpha) p0 by contour quadrature")
    _model_flags(p)
    _contour_flags(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--x0", type=int, default=0, help="lattice index of the delta initial condition")
    p.add_argument("--resolvent", action="store_true", help="report per-node resolvent norms")
    p.add_argument("--clamp", action="store_true", help="clip negatives and renormalize")
    p.add_argument("--diagnostics", help="write the diagnostics JSON here (CSV output only)")
    _output_flags(p)

    p = sub.add_parser("simulate", help="Mittag-Leffler SSA paths or ensemble histograms")
    _model_flags(p, matrix_file=False)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0, help="first RNG stream id")
    p.add_argument("--x0", type=int, default=0, help="lattice index of the initial state")
    p.add_argument("--record", choices=["path", "histogram"], default="histogram")
    p.add_argument("--coordinate", default="index",
                   help="histogram bins: 'index' (lattice index, S2 for mono) or a species component")
    p.add_argument("--max-events", type=int, default=10_000_000)
    _output_flags(p, formats=("csv",))

    p = sub.add_parser("fov", help="field-of-values boundary")
    _model_flags(p)
    p.add_argument("--angles", type=int, default=64)
    _output_flags(p, formats=("csv",))

    p = sub.add_parser("bound", help="parabolic field-of-values bound")
    _model_flags(p, matrix_file=False)
    p.add_argument("--bc", choices=[b.value for b in BoundaryCondition], default="zero-flux")
    p.add_argument("--convention", choices=[o.value for o in Orientation], default="matrix")
    p.add_argument("--samples", type=int, default=1024)
    _output_flags(p, formats=("json",), default="json")

    p = sub.add_parser("psgrid", help="log10 resolvent norms on a grid")
    _model_flags(p)
    for name in ("re-min", "re-max", "im-min", "im-max"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--nx", type=int, default=200)
    p.add_argument("--ny", type=int, default=200)
    p.add_argument("--no-mirror", action="store_true", help="evaluate Im z < 0 too")
    _output_flags(p, formats=("csv",))

    p = sub.add_parser("check-contour", help="clearance of contour nodes from a region")
    _model_flags(p)
    _contour_flags(p)
    p.add_argument("--region", choices=["bound", "fov"], default="bound")
    p.add_argument("--bc", choices=[b.value for b in BoundaryCondition], default="zero-flux")
    p.add_argument("--angles", type=int, default=256)
    p.add_argument("--eps-target", type=float, default=1e-3)
    p.add_argument("--resolvent", action="store_true", help="also evaluate the resolvent norm at each node")
    p.add_argument("--summary", help="write the summary JSON here (default: appended to stdout)")
    _output_flags(p, formats=("csv",))
    return parser


# ---------------------------------------------------------------------------
# helpers


def _spec_from_args(args) -> ModelSpec:
    if not args.model:
        raise ValidationError("--model is required (or --matrix-file where supported)")
    kw = {"kind": args.model, "m": args.m, "N": args.n}
    for name in ("c1", "c2", "k1", "k2", "k3", "k4", "B1", "B2"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    return ModelSpec(**kw)


def _load_matrix(path) -> TridiagonalGenerator:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read matrix file {path}: {exc}") from None
    if isinstance(data, dict) and "matrix" in data:
        data = data["matrix"]
    try:
        return TridiagonalGenerator.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"matrix file {path} lacks a {{n, sub, diag, sup}} record: {exc}") from None


def _matrix_from_args(args):
    """Returns ``(A, spec_or_None)``."""
    if getattr(args, "matrix_file", None):
        if args.model:
            raise ValidationError("give either --model or --matrix-file, not both")
        return _load_matrix(args.matrix_file), None
    spec = _spec_from_args(args)
    return build_generator(spec), spec


def _contour_spec(args) -> ContourSpec:
    return ContourSpec(kind=args.contour, M=args.M, t=args.t, widen=args.widen, cutoff=args.cutoff)


def _meta(args, argv, **extra):
    config = {k: v for k, v in sorted(vars(args).items())}
    meta = {
        "tool": "mlcontour",
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "config": config,
        "seed": getattr(args, "seed", None),
    }
    meta.update(extra)
    return meta


@contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_csv(path, meta, header, rows):
    with _sink(path) as fh:
        for line in json.dumps(meta, sort_keys=True, default=str).splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return str(obj)


def _write_json(path, meta, payload):
    doc = {"schema": SCHEMA_VERSION, "meta": meta}
    doc.update(payload)
    text = json.dumps(doc, indent=2, default=_json_default, allow_nan=True)
    with _sink(path) as fh:
        fh.write(text + "\n")


def _configure_threads(requested):
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise ValidationError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if requested is None:
        return None
    if requested < 1:
        raise ValidationError("--threads must be at least 1")
    import numba

    numba.set_num_threads(min(requested, numba.config.NUMBA_NUM_THREADS))
    return requested


# ---------------------------------------------------------------------------
# subcommands


def _cmd_model(args, argv):
    spec = _spec_from_args(args)
    if spec.kind is ModelKind.SCHLOGL:
        A = build_schlogl(spec, conservative=args.conservative == "yes")
    else:
        A = build_generator(spec)
    meta = _meta(args, argv, model=spec.to_dict())
    if args.format == "json":
        _write_json(args.out, meta, {"matrix": A.to_dict()})
    else:
        rows = [(i, i, A.diag[i]) for i in range(A.n)]
        rows += [(i + 1, i, A.sub[i]) for i in range(A.n - 1)]
        rows += [(i, i + 1, A.sup[i]) for i in range(A.n - 1)]
        rows.sort()
        _write_csv(args.out, meta, ["i", "j", "value"], rows)


def _cmd_contour(args, argv):
    nodes = build_nodes(_contour_spec(args))
    meta = _meta(args, argv, contour=nodes.spec.to_dict(), dropped=nodes.dropped)
    k = np.rint(nodes.param / nodes.spec.dxi).astype(int)
    if args.format == "json":
        _write_json(args.out, meta, {
            "k": k, "z_re": nodes.nodes.real, "z_im": nodes.nodes.imag,
            "c_re": nodes.coeffs.real, "c_im": nodes.coeffs.imag,
        })
    else:
        rows = zip(k, nodes.nodes.real, nodes.nodes.imag, nodes.coeffs.real, nodes.coeffs.imag)
        _write_csv(args.out, meta, ["k", "re_z", "im_z", "re_c", "im_c"], rows)


def _cmd_solve(args, argv, threads):
    A, spec = _matrix_from_args(args)
    if not 0 <= args.x0 < A.n:
        raise ValidationError(f"--x0 must lie in 0..{A.n - 1}")
    p0 = np.zeros(A.n)
    p0[args.x0] = 1.0
    nodes = build_nodes(_contour_spec(args))
    sol = ml_action(MlProblem(A, args.alpha, args.t, p0), nodes, resolvent=args.resolvent, workers=threads)
    if args.clamp:
        sol = clamp_and_renormalize(sol)
    diag = {
        "mass_defect": sol.mass_defect,
        "negative_mass": sol.negative_mass,
        "min_entry": float(sol.p.min()),
        "nodes_used": int(nodes.size),
        "nodes_dropped": int(nodes.dropped),
        "clamped": bool(args.clamp),
    }
    if sol.resolvent is not None:
        diag["resolvent"] = [None if not math.isfinite(r) else r for r in sol.resolvent]
        diag["max_resolvent"] = sol.max_resolvent if math.isfinite(sol.max_resolvent) else None
    meta = _meta(args, argv, model=None if spec is None else spec.to_dict(), contour=nodes.spec.to_dict())
    if args.format == "json":
        _write_json(args.out, meta, {"p": sol.p, "diagnostics": diag})
        return
    _write_csv(args.out, meta, ["state", "probability"], enumerate(sol.p))
    if args.diagnostics:
        _write_json(args.diagnostics, meta, {"diagnostics": diag})


def _cmd_simulate(args, argv):
    spec = _spec_from_args(args)
    x0 = initial_state(spec, args.x0)
    coord = None if args.coordinate == "index" else args.coordinate
    if args.record == "path":
        rng = RngStream(args.seed, args.stream)
        path = simulate_path(spec, x0, args.t_final, args.alpha, rng, max_events=args.max_events)
        meta = _meta(args, argv, model=spec.to_dict(), truncated=path.truncated, n_events=path.n_events)
        names = [f"x{i}" for i in range(path.states.shape[1])]
        rows = ([t, *s] for t, s in zip(path.times, path.states))
        _write_csv(args.out, meta, ["t", *names], rows)
        return
    hist = ensemble_histogram(
        spec, x0, args.t_final, args.alpha, args.samples,
        seed=args.seed, first_stream=args.stream, coordinate=coord, max_events=args.max_events,
    )
    meta = _meta(args, argv, model=spec.to_dict(), coordinate=hist.coordinate)
    rows = zip(range(hist.counts.size), hist.counts, hist.normalized)
    _write_csv(args.out, meta, ["state", "count", "probability"], rows)


def _cmd_fov(args, argv):
    A, spec = _matrix_from_args(args)
    F = fov_boundary(A, args.angles)
    meta = _meta(args, argv, model=None if spec is None else spec.to_dict())
    rows = zip(F.angles, F.points.real, F.points.imag, F.support)
    _write_csv(args.out, meta, ["theta", "re", "im", "support"], rows)


def _bound_for(spec, bc, samples=1024):
    return parabola_from_coefficients(pde_coefficients(spec), spec.m, bc, samples=samples)


def _cmd_bound(args, argv):
    spec = _spec_from_args(args)
    bound = _bound_for(spec, args.bc, args.samples)
    if args.convention == Orientation.MATRIX.value:
        bound = flip_to_matrix_convention(bound)
    meta = _meta(args, argv, model=spec.to_dict())
    _write_json(args.out, meta, bound.to_dict())


def _cmd_psgrid(args, argv):
    A, spec = _matrix_from_args(args)
    re_range = None if args.re_min is None and args.re_max is None else (args.re_min, args.re_max)
    im_range = None if args.im_min is None and args.im_max is None else (args.im_min, args.im_max)
    if (re_range and None in re_range) or (im_range and None in im_range):
        raise ValidationError("give both ends of a range or neither")
    g = ps_grid(A, re_range, im_range, args.nx, args.ny, mirror=not args.no_mirror)
    meta = _meta(args, argv, model=None if spec is None else spec.to_dict(),
                 re_range=g.re_range, im_range=g.im_range, unconverged=int((~g.converged).sum()))
    rows = ((g.re[i], g.im[j], g.values[i, j]) for i in range(g.nx) for j in range(g.ny))
    _write_csv(args.out, meta, ["re", "im", "log10_norm"], rows)


def _cmd_check_contour(args, argv):
    A, spec = _matrix_from_args(args)
    nodes = build_nodes(_contour_spec(args))
    if args.region == "bound":
        if spec is None:
            raise ValidationError("the parabolic region needs --model (not --matrix-file)")
        region = flip_to_matrix_convention(_bound_for(spec, args.bc))
        region_info = region.to_dict()
    else:
        region = fov_boundary(A, args.angles)
        region_info = {"fov_angles": args.angles}
    report = contour_clearance(nodes, region, args.eps_target, raise_on_failure=False)
    summary = report.to_dict()
    summary["region"] = region_info
    norms = None
    if args.resolvent:
        prof = contour_resolvent_profile(A, nodes, threshold=1.0 / args.eps_target)
        norms = prof.norms
        summary["resolvent"] = prof.to_dict()
    meta = _meta(args, argv, model=None if spec is None else spec.to_dict(), contour=nodes.spec.to_dict())
    header = ["k", "re_z", "im_z", "inside", "distance", "resolvent_bound"]
    k = np.rint(nodes.param / nodes.spec.dxi).astype(int)
    cols = [k, nodes.nodes.real, nodes.nodes.imag, report.inside.astype(int), report.distance,
            report.resolvent_bound]
    if norms is not None:
        header.append("resolvent_norm")
        cols.append(norms)
    _write_csv(args.out, meta, header, zip(*cols))
    if args.summary:
        _write_json(args.summary, meta, {"summary": summary})
    else:
        buf = io.StringIO()
        json.dump({"schema": SCHEMA_VERSION, "summary": summary}, buf, default=_json_default)
        print(buf.getvalue())
    if report.suggested_widen is None:
        raise NoWideningSuffices(
            f"no factor in {list(report.ladder)} clears the region at eps_target={args.eps_target}",
            worst_node=report.worst_node,
        )


def run(argv=None) -> int:
    """Parse ``argv``, dispatch, and return the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    # numba falls back to another threading layer; the notice is noise here
    warnings.filterwarnings("ignore", message=".*TBB threading layer.*")
    try:
        args = build_parser().parse_args(argv)
        threads = _configure_threads(args.threads)
        cmd = args.command
        if cmd == "model":
            _cmd_model(args, argv)
        elif cmd == "contour":
            _cmd_contour(args, argv)
        elif cmd == "solve":
            _cmd_solve(args, argv, threads)
        elif cmd == "simulate":
            _cmd_simulate(args, argv)
        elif cmd == "fov":
            _cmd_fov(args, argv)
        elif cmd == "bound":
            _cmd_bound(args, argv)
        elif cmd == "psgrid":
            _cmd_psgrid(args, argv)
        elif cmd == "check-contour":
            _cmd_check_contour(args, argv)
    except ValidationError as exc:
        return _fail(exc, 2)
    except NumericalError as exc:
        return _fail(exc, 3)
    return 0


def _fail(exc, code):
    record = {"error": str(exc), "type": type(exc).__name__, "exit_code": code}
    for attr in ("index", "node", "angle", "which", "x", "worst_node"):
        if getattr(exc, attr, None) is not None:
            record[attr] = getattr(exc, attr)
    print(json.dumps(record, default=_json_default), file=sys.stderr)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
