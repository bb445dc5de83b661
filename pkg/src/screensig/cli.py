"""Command-line interface: ``screensig <command> [options]``.

Every command writes a CSV (``--output``, default stdout) whose first line
is the format token, plus a JSON provenance record holding the fully
resolved configuration (``<output>.json``, or stderr when writing to
stdout). Options may also come from ``--config FILE`` with ``key = value``
lines; flags on the command line win.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import ast
import csv
import hashlib
import io
import json
import math
import operator
import os
import platform
import sys

import numpy as np
import scipy

from . import __version__
from .errors import ConfigurationError, NumericalError, ParameterError, ParseError
from .farfield import read_farfield, reciprocity_defect, uniform_directions, write_farfield
from .mesh import DomainSpec, generate_mesh, refine_mesh, write_mesh
from .oracle import SignConvention, annular_spectrum, sector_eigenfunction, sector_spectrum
from .steklov import (SigmaProfile, assemble_pencil, check_wavenumber_admissible, solve_pencil)

CSV_TOKEN = "# screensig-csv v1"
PROVENANCE_FORMAT = "screensig-provenance v1"

# -- value parsing ----------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def parse_number(text):
    """Real number or arithmetic expression in ``pi``, e.g. ``pi/2``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(text)
    try:
        value = ev(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return value


def parse_list(text):
    return [parse_number(t) for t in str(text).split(",") if t.strip()]


def parse_domain(text):
    """``half-disk``, ``quadrant``, ``sector:ALPHA,R2``, ``annular:ALPHA,R1,R2`` or ``disk:R``."""
    text = str(text).strip()
    if text == "half-disk":
        return DomainSpec.sector(math.pi, 1.0)
    if text == "quadrant":
        return DomainSpec.sector(math.pi / 2, 1.0)
    kind, _, rest = text.partition(":")
    try:
        vals = parse_list(rest)
        if kind == "sector" and len(vals) == 2:
            return DomainSpec.sector(*vals)
        if kind == "annular" and len(vals) == 3:
            return DomainSpec.annular_sector(*vals)
        if kind == "disk" and len(vals) == 1:
            return DomainSpec.disk(vals[0])
    except argparse.ArgumentTypeError:
        pass
    raise ParameterError(f"unknown domain {text!r}")


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ParseError("expected 'key = value'", line=lineno)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


# -- output -----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    buf.write(CSV_TOKEN + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def mesh_hash(mesh):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(mesh.vertices).tobytes())
    h.update(np.ascontiguousarray(mesh.triangles).tobytes())
    return h.hexdigest()[:16]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (int, str, bool)) or v is None:
        return v
    return str(v)


def write_provenance(args, results):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    record = {
        "format": PROVENANCE_FORMAT,
        "command": args.command,
        "config": config,
        "results": results,
        "versions": {"screensig": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
    }
    text = json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n"
    if args.output in (None, "-"):
        sys.stderr.write(text)
    else:
        with open(args.output + ".json", "w", encoding="utf-8") as fh:
            fh.write(text)


# -- shared builders --------------------------------------------------------

def _mesh_for(args, exterior=False):
    spec = parse_domain(args.domain)
    h = args.mesh_h
    if exterior:
        spec = DomainSpec.exterior_of(spec)
        if h is None:
            h = 2 * math.pi / args.k / 32
    elif h is None:
        h = 0.05
    mesh = generate_mesh(spec, h)
    for _ in range(args.refine):
        mesh = refine_mesh(mesh)
    return mesh


def _pml(args, mesh):
    from .scatter import PmlConfig
    return PmlConfig.for_mesh(mesh, s0=args.s0)


def _mesh_info(mesh):
    return {"n_vertices": mesh.n_vertices, "n_triangles": mesh.n_triangles,
            "h_max": mesh.h_max, "hash": mesh_hash(mesh)}


# -- commands ---------------------------------------------------------------

def cmd_mesh(args):
    mesh = _mesh_for(args, exterior=args.exterior)
    if args.mesh_file:
        write_mesh(mesh, args.mesh_file)
    rows = [("n_vertices", mesh.n_vertices), ("n_triangles", mesh.n_triangles),
            ("n_dofs", mesh.n_dofs), ("h_max", mesh.h_max), ("area", mesh.area())]
    for tag in ("GAMMA", "NEUMANN_REST", "FARFIELD_CIRCLE", "PML_OUTER"):
        rows.append((f"length_{tag}", mesh.tagged_length(tag)))
    write_csv(args.output, ["quantity", "value"], rows)
    return {"mesh": _mesh_info(mesh)}


def cmd_oracle(args):
    conv = SignConvention(args.convention)
    if args.kind == "sector":
        spec = sector_spectrum(args.k, args.alpha, args.r2, args.sigma, args.count, conv)
    elif args.kind == "annular":
        if args.r1 is None:
            raise ParameterError("annular spectra need --r1")
        spec = annular_spectrum(args.k, args.alpha, args.r1, args.r2, args.sigma, args.count, conv)
    else:
        n_pts = args.points
        r = np.linspace(0.0, args.r2, n_pts)
        pts = np.column_stack([r * math.cos(args.theta), r * math.sin(args.theta)])
        vals = sector_eigenfunction(args.mode, args.k, args.alpha, args.r2, pts)
        write_csv(args.output, ["r", "theta", "value"],
                  [(ri, args.theta, v) for ri, v in zip(r, vals)])
        return {}
    rows = [(int(n), v, bool(p)) for n, v, p in zip(spec.n, spec.values, spec.poles)]
    write_csv(args.output, ["n", "lambda", "pole"], rows)
    return {"values": spec.values.tolist()}


def cmd_eig(args):
    mesh = _mesh_for(args)
    sigma = SigmaProfile.parse(args.sigma)
    report = check_wavenumber_admissible(mesh, args.k)
    if not report.admissible and not args.force:
        raise NumericalError(
            f"k^2 = {args.k ** 2:g} is close to the mixed eigenvalue {report.nearest_mixed_eig:g};"
            " use --force to solve anyway")
    pencil = assemble_pencil(mesh, args.k, sigma)
    spec = solve_pencil(pencil, args.count)
    rows = [(j, float(np.real(v)), float(np.imag(v))) for j, v in enumerate(spec.values, start=1)]
    write_csv(args.output, ["index", "re_lambda", "im_lambda"], rows)
    if args.trace_out:
        xy = pencil.space.node_xy[spec.gamma_dofs]
        theta = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), 2 * math.pi)
        theta = np.where(theta > 2 * math.pi - 1e-9, 0.0, theta)
        order = np.argsort(theta)
        s = theta[order] * np.hypot(xy[order, 0], xy[order, 1])
        tr = spec.gamma_traces[order]
        write_csv(args.trace_out, ["arclength"] + [f"mode{j}" for j in range(1, tr.shape[1] + 1)],
                  [(si, *row) for si, row in zip(s, tr)])
    return {"mesh": _mesh_info(mesh), "admissible": report.admissible,
            "nearest_mixed_eig": report.nearest_mixed_eig, "eigenvalues": spec.values.tolist()}


def _screen_matrix(args, mesh):
    from .scatter import screen_farfield_matrix
    if getattr(args, "screen_matrix", None):
        A = read_farfield(args.screen_matrix)
        if A.provenance != "SCREEN" or A.n != args.dirs:
            raise ConfigurationError("screen matrix file does not match --dirs or is not SCREEN data")
        return A
    return screen_farfield_matrix(mesh, args.k, SigmaProfile.parse(args.sigma), args.dirs, _pml(args, mesh))


def cmd_farfield(args):
    from .scatter import aux_farfield_matrix
    mesh = _mesh_for(args, exterior=True)
    if args.problem == "screen":
        F = _screen_matrix(args, mesh)
    else:
        F = aux_farfield_matrix(mesh, args.k, args.lam, args.dirs, _pml(args, mesh))
    if args.matrix_out:
        write_farfield(F, args.matrix_out)
    col = args.column % F.n
    ang = 2 * math.pi * np.arange(F.n) / F.n
    rows = [(a, v.real, v.imag) for a, v in zip(ang, F.entries[:, col])]
    write_csv(args.output, ["angle", "re", "im"], rows)
    return {"mesh": _mesh_info(mesh), "reciprocity_defect": reciprocity_defect(F),
            "frobenius": float(np.linalg.norm(F.entries)), "column": col}


def _sweep_config(args, mesh):
    from .signature import SweepConfig
    kw = dict(lam_min=args.lam_min, lam_max=args.lam_max, step=args.step, gamma=args.gamma,
              n_z=args.zpoints, seed=args.seed, n_dirs=args.dirs)
    if args.z_centre is not None:
        kw["centre"] = tuple(args.z_centre)
    if args.z_radius is not None:
        kw["radius"] = args.z_radius
    cfg = SweepConfig.for_domain(mesh.spec, **kw)
    cfg.check_region(mesh.spec)
    return cfg


def cmd_sweep(args):
    from .scatter import AuxiliaryFarField
    from .signature import lsm_sweep
    mesh = _mesh_for(args, exterior=True)
    cfg = _sweep_config(args, mesh)
    A = _screen_matrix(args, mesh)
    provider = AuxiliaryFarField(mesh, args.k, args.dirs, _pml(args, mesh))
    curve = lsm_sweep(A, provider, cfg, prominence=args.prominence, threads=args.threads)
    peak_idx = {p.index for p in curve.peaks}
    rows = [(lam, ind, i in peak_idx) for i, (lam, ind) in enumerate(zip(curve.lam_values, curve.indicator))]
    write_csv(args.output, ["lambda", "indicator", "is_peak"], rows)
    return {"mesh": _mesh_info(mesh), "sweep": cfg.to_dict(), "z_points": curve.z_points,
            "peaks": [{"lambda": p.lam, "height": p.height, "unresolved": p.unresolved}
                      for p in curve.peaks], "gaps": curve.gaps}


def cmd_glsm(args):
    from .scatter import AuxiliaryFarField
    from .signature import detect_peaks, glsm_indicator, modified_operator
    mesh = _mesh_for(args, exterior=True)
    cfg = _sweep_config(args, mesh)
    A = _screen_matrix(args, mesh)
    provider = AuxiliaryFarField(mesh, args.k, args.dirs, _pml(args, mesh))
    z = cfg.z_points()
    penalty = args.penalty.upper()
    rows, values = [], []
    for lam in cfg.grid:
        B = provider(lam)
        M = modified_operator(A, B)
        P = A if penalty == "FSHARP" else B
        vals = [glsm_indicator(M, P, args.alpha_reg, zz, args.k, penalty).penalty for zz in z]
        values.append(math.fsum(vals) / len(vals))
    peaks = detect_peaks(cfg.grid, values, args.prominence)
    peak_idx = {p.index for p in peaks}
    rows = [(lam, v, i in peak_idx) for i, (lam, v) in enumerate(zip(cfg.grid, values))]
    write_csv(args.output, ["lambda", "indicator", "is_peak"], rows)
    return {"mesh": _mesh_info(mesh), "sweep": cfg.to_dict(),
            "peaks": [p.lam for p in peaks]}


def cmd_sensitivity(args):
    from .signature import sensitivity_table
    mesh = _mesh_for(args)
    rows = sensitivity_table(mesh, args.k, args.alphas, args.betas, args.count, args.order)
    write_csv(args.output, ["alpha", "beta", "j", "lambda", "rel_change"],
              [(r.alpha, r.beta, r.j, r.lam, r.rel_change) for r in rows])
    return {"mesh": _mesh_info(mesh)}


# -- parser -----------------------------------------------------------------

def _common(p, domain=True):
    p.add_argument("-o", "--output", default="-", help="CSV output path ('-' for stdout)")
    p.add_argument("--config", help="key = value file with option defaults")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="cap on internal parallelism")
    if domain:
        p.add_argument("--domain", default="half-disk",
                       help="half-disk, quadrant, sector:A,R2, annular:A,R1,R2 or disk:R")
        p.add_argument("--k", type=parse_number, default=2.0)
        p.add_argument("--mesh-h", type=parse_number, default=None,
                       help="target edge length (default wavelength/32 for scattering, 0.05 otherwise)")
        p.add_argument("--refine", type=int, default=0)


def _scattering(p):
    p.add_argument("--sigma", default="const:1")
    p.add_argument("--dirs", type=int, default=60)
    p.add_argument("--s0", type=parse_number, default=5.0, help="PML absorption")
    p.add_argument("--screen-matrix", help="read the screen matrix from an ffmv1 file")


def _sweep_opts(p):
    p.add_argument("--lam-min", type=parse_number, default=-8.0)
    p.add_argument("--lam-max", type=parse_number, default=8.0)
    p.add_argument("--step", type=parse_number, default=0.05)
    p.add_argument("--gamma", type=parse_number, default=1e-10)
    p.add_argument("--zpoints", type=int, default=20)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--z-centre", type=parse_list, default=None)
    p.add_argument("--z-radius", type=parse_number, default=None)
    p.add_argument("--prominence", type=parse_number, default=0.5)


def build_parser():
    parser = argparse.ArgumentParser(prog="screensig", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate and inspect a mesh")
    _common(p)
    p.add_argument("--exterior", action="store_true", help="mesh the exterior domain with PML")
    p.add_argument("--mesh-file", help="also write the mesh (meshv1)")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("oracle", help="separable reference spectra and eigenfunctions")
    _common(p, domain=False)
    p.add_argument("kind", choices=["sector", "annular", "eigenfunction"])
    p.add_argument("--k", type=parse_number, default=2.0)
    p.add_argument("--alpha", type=parse_number, default=math.pi)
    p.add_argument("--r1", type=parse_number, default=None)
    p.add_argument("--r2", type=parse_number, default=1.0)
    p.add_argument("--sigma", type=parse_number, default=0.0)
    p.add_argument("--count", type=int, default=9)
    p.add_argument("--convention", choices=[c.value for c in SignConvention], default="appendix")
    p.add_argument("--mode", type=int, default=0, help="eigenfunction mode number")
    p.add_argument("--theta", type=parse_number, default=0.0, help="eigenfunction ray angle")
    p.add_argument("--points", type=int, default=101)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("eig", help="finite element mixed Steklov eigenvalues")
    _common(p)
    p.add_argument("--sigma", default="const:0")
    p.add_argument("--count", type=int, default=6)
    p.add_argument("--force", action="store_true", help="solve even if k^2 is inadmissible")
    p.add_argument("--trace-out", help="write Gamma traces of the eigenvectors")
    p.set_defaults(func=cmd_eig)

    p = sub.add_parser("farfield", help="screen or auxiliary far-field matrices")
    _common(p)
    _scattering(p)
    p.add_argument("--problem", choices=["screen", "aux"], default="screen")
    p.add_argument("--lam", type=parse_number, default=0.0, help="auxiliary impedance")
    p.add_argument("--column", type=int, default=0, help="incidence index of the CSV slice")
    p.add_argument("--matrix-out", help="write the matrix (ffmv1)")
    p.set_defaults(func=cmd_farfield)

    p = sub.add_parser("sweep", help="linear sampling sweep over the Steklov parameter")
    _common(p)
    _scattering(p)
    _sweep_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("glsm", help="generalized linear sampling sweep")
    _common(p)
    _scattering(p)
    _sweep_opts(p)
    p.add_argument("--alpha-reg", type=parse_number, default=1e-6)
    p.add_argument("--penalty", choices=["fsharp", "aux"], default="fsharp")
    p.set_defaults(func=cmd_glsm)

    p = sub.add_parser("sensitivity", help="relative eigenvalue changes for the angular profile")
    _common(p)
    p.add_argument("--alphas", type=parse_list, default=[0.0, 1.0, 1.5, 2.0])
    p.add_argument("--betas", type=parse_list, default=[0.0])
    p.add_argument("--count", type=int, default=6)
    p.add_argument("--order", choices=["magnitude", "descending"], default="magnitude")
    p.set_defaults(func=cmd_sensitivity)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` so that flags still win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, text in values.items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise ConfigurationError(f"unknown config key {key!r} for '{args.command}'")
        if action.nargs == 0:
            defaults[key] = text.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(text)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ConfigurationError(f"bad value for {key!r}: {exc}") from None
        else:
            defaults[key] = text
        if action.choices is not None and defaults[key] not in action.choices:
            raise ConfigurationError(f"bad value for {key!r}: {text!r}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv=None):
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    except ConfigurationError as exc:
        print(f"screensig: configuration error: {exc}", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("screensig: configuration error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=args.threads):
            results = args.func(args)
        write_provenance(args, results)
    except ConfigurationError as exc:
        print(f"screensig: configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"screensig: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
