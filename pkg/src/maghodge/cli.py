"""Command line: analytic and mesh spectra, verification suites, mesh generation.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import analytic as an
from .assembly import (AssemblyError, assemble_lagrange_vector, assemble_phase_laplacian,
                       assemble_whitney_0form, assemble_whitney_mixed, constant_field,
                       preset_field, sample_potential)
from .bounds import reports_to_json, rows_to_csv
from .eigensolver import EigenRequest, SolverError, cluster, solve
from .mesh import MeshError, generate
from .meshio import read_mesh, write_mesh
from .suites import SUITES

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maghodge", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"maghodge {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp_ = sub.add_parser("spectrum", help="compute a spectrum")
    ssub = sp_.add_subparsers(dest="source", required=True)

    pa = ssub.add_parser("analytic", help="closed-form spectra")
    pa.add_argument("model", choices=["berger", "torus"])
    pa.add_argument("--epsilon", type=float, default=1.0)
    pa.add_argument("--t", type=float, default=0.0)
    pa.add_argument("--kmax", type=int, default=3)
    pa.add_argument("--alpha", type=_floats, default=[0.0, 0.0])
    pa.add_argument("--periods", type=_floats, default=None)
    pa.add_argument("--p", type=int, default=0)
    pa.add_argument("--count", type=int, default=10)
    _common(pa)

    pm = ssub.add_parser("mesh", help="discrete spectra on a mesh")
    src = pm.add_mutually_exclusive_group(required=True)
    src.add_argument("--gen", help="generator spec, e.g. torus:32, s3:2, icosphere:3, square:32")
    src.add_argument("--mesh", help="mesh file path")
    pot = pm.add_mutually_exclusive_group()
    pot.add_argument("--alpha-const", type=_floats, help="constant potential a1,a2,...")
    pot.add_argument("--potential", help="preset: berger-tY2:t, torus-constant:a1,a2, "
                                         "square-constant-field:B, zero")
    pm.add_argument("--p", type=int, default=0)
    pm.add_argument("--formulation", choices=["phase", "whitney", "mixed", "lagrange"],
                    default=None, help="default: whitney for p=0, mixed for p>=1")
    pm.add_argument("--weights", choices=["cotan", "unit"], default="cotan")
    pm.add_argument("--dirichlet", action="store_true")
    pm.add_argument("--quad-order", type=int, default=None)
    pm.add_argument("--k", type=int, default=6)
    pm.add_argument("--sigma", type=float, default=None)
    pm.add_argument("--tol", type=float, default=1e-9)
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--export-vectors", action="store_true")
    _common(pm)

    pv = sub.add_parser("verify", help="run a bound verification suite")
    pv.add_argument("suite", choices=sorted(SUITES))
    pv.add_argument("--gen", default=None, help="mesh generator for mesh-based suites")
    _common(pv)

    pg = sub.add_parser("mesh", help="generate a mesh file")
    pg.add_argument("--gen", required=True)
    pg.add_argument("-o", "--output", default=None)
    pg.add_argument("--output-dir", default=None)
    return ap


def _common(p):
    p.add_argument("--output-dir", default=".")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--no-plot", dest="plot", action="store_false")


def _manifest(args, out: Path, t0: float, outputs: list[str], mesh_hash=None, seed=None):
    man = {
        "command": " ".join(["maghodge"] + list(args.argv)),
        "argv": list(args.argv),
        "versions": {"maghodge": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "mesh_hash": mesh_hash, "seed": seed,
        "wall_time_s": round(time.perf_counter() - t0, 6),
        "outputs": outputs,
    }
    (out / "manifest.json").write_text(json.dumps(man, indent=1) + "\n")


def _write(out: Path, name: str, text: str, outputs: list):
    (out / name).write_text(text)
    outputs.append(name)


def cmd_spectrum_analytic(args, out: Path, t0: float) -> int:
    if args.model == "berger":
        if args.epsilon <= 0 or args.kmax < 0:
            raise UsageError("need --epsilon > 0 and --kmax >= 0")
        lines = an.berger_function_spectrum(an.BergerParams(args.epsilon, args.t), args.kmax)
    else:
        n = len(args.alpha)
        periods = args.periods or [1.0] * n
        if len(periods) != n or min(periods) <= 0 or args.count < 1 or not 0 <= args.p <= n:
            raise UsageError("torus needs matching --alpha/--periods, positive periods, "
                             "--count >= 1 and 0 <= p <= n")
        lines = an.torus_spectrum(an.TorusModel(n, tuple(periods), tuple(args.alpha)), args.p,
                                  args.count)
    outputs: list = []
    if args.format == "csv":
        _write(out, "spectrum.csv", an.lines_to_csv(lines), outputs)
    else:
        _write(out, "spectrum.json", an.lines_to_json(lines) + "\n", outputs)
    _manifest(args, out, t0, outputs)
    return EXIT_OK


def _load_mesh(args):
    if args.gen:
        mesh = generate(args.gen)
    else:
        mesh = read_mesh(args.mesh)
    return mesh


def cmd_spectrum_mesh(args, out: Path, t0: float) -> int:
    mesh = _load_mesh(args)
    if args.dirichlet:
        if mesh.is_closed:
            raise UsageError("--dirichlet needs a mesh with boundary")
        mesh = mesh.with_dirichlet(True)
    form = args.formulation or ("whitney" if args.p == 0 else "mixed")
    if not 0 <= args.p <= mesh.dim:
        raise UsageError(f"p must lie in 0..{mesh.dim}")
    if form in ("phase", "whitney") and args.p != 0:
        raise UsageError(f"formulation {form} is defined for p = 0 only")
    if form == "mixed" and args.p == 0:
        raise UsageError("mixed formulation needs p >= 1")
    quad = args.quad_order or (4 if form == "lagrange" else (3 if mesh.dim == 2 else 2))
    if args.alpha_const is not None:
        if len(args.alpha_const) != mesh.embed_dim:
            raise UsageError(f"--alpha-const needs {mesh.embed_dim} components")
        name, fld = "torus-constant:" + ",".join(map(repr, args.alpha_const)), constant_field(args.alpha_const)
    elif args.potential:
        name, fld = preset_field(args.potential)
    else:
        name, fld = "zero", None
    pot = sample_potential(fld, mesh, min(max(quad, 1), 5), name)
    if form == "phase":
        sys_ = assemble_phase_laplacian(mesh, pot, args.weights)
    elif form == "whitney":
        sys_ = assemble_whitney_0form(mesh, pot, max(quad, 2))
    elif form == "mixed":
        sys_ = assemble_whitney_mixed(mesh, pot, args.p, quad)
    else:
        sys_ = assemble_lagrange_vector(mesh, pot, args.p, quad)
    res = solve(sys_.stiffness, sys_.mass,
                EigenRequest(k=min(args.k, sys_.n_dofs), sigma=args.sigma, tol=args.tol,
                             seed=args.seed))
    rows = []
    mult = {}
    pos = 0
    for v, m in cluster(res.values):
        for _ in range(m):
            mult[pos] = m
            pos += 1
    for i, (v, r) in enumerate(zip(res.values, res.residuals)):
        rows.append({"index": i, "value": float(v), "residual": float(r), "cluster_size": mult[i]})
    outputs: list = []
    cols = ["index", "value", "residual", "cluster_size"]
    if args.format == "csv":
        _write(out, "spectrum.csv", rows_to_csv(rows, cols), outputs)
    else:
        _write(out, "spectrum.json", json.dumps(rows, indent=1) + "\n", outputs)
    report = {"system": sys_.metadata(), "mesh": mesh.summary(), "converged": res.converged,
              "sigma": res.sigma, "iterations": res.iterations}
    _write(out, "report.json", json.dumps(report, indent=1) + "\n", outputs)
    if args.export_vectors:
        np.save(out / "vectors.npy", res.vectors)
        outputs.append("vectors.npy")
    _manifest(args, out, t0, outputs, mesh.mesh_hash, args.seed)
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_verify(args, out: Path, t0: float) -> int:
    fn = SUITES[args.suite]
    if args.suite in ("shigekawa", "gap"):
        mesh = None
        if args.gen:
            mesh = generate(args.gen)
            if args.suite == "gap":
                mesh = mesh.with_dirichlet(True)
        result = fn(mesh)
    else:
        if args.gen:
            raise UsageError(f"suite {args.suite} does not take a mesh")
        result = fn()
    outputs: list = []
    _write(out, "report.json",
           json.dumps({"suite": result.name, "passed": result.passed, "summary": result.summary,
                       "reports": json.loads(reports_to_json(result.reports))}, indent=1) + "\n",
           outputs)
    if result.rows:
        _write(out, "spectrum.csv", rows_to_csv(result.rows, result.columns), outputs)
    if result.svg and args.plot:
        _write(out, "figure1.svg", result.svg, outputs)
    _manifest(args, out, t0, outputs, result.mesh_hash, 0)
    if result.summary.get("verdict"):
        print(f"{result.name}: {result.summary['verdict']} "
              f"(slope {result.summary.get('linear_slope')})")
    bad = [r for r in result.reports if r.verdict == "violated"]
    for r in bad:
        print(json.dumps(r.to_dict(), default=str), file=sys.stderr)
    print(f"{result.name}: {'PASS' if not bad else 'FAIL'} ({len(result.reports)} reports)")
    return EXIT_OK if not bad else EXIT_FAIL


def cmd_mesh(args, t0: float) -> int:
    mesh = generate(args.gen)
    summary = mesh.summary()
    if args.output:
        write_mesh(mesh, args.output)
        summary["file"] = args.output
    print(json.dumps(summary, indent=1))
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _manifest(args, out, t0, [args.output] if args.output else [], mesh.mesh_hash)
    return EXIT_OK


def _limit_threads():
    n = os.environ.get("MAGHODGE_THREADS")
    if not n:
        return None
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return None
    return threadpool_limits(limits=max(1, int(n)))


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    args.argv = argv
    t0 = time.perf_counter()
    _limiter = _limit_threads()
    try:
        if args.command == "mesh":
            return cmd_mesh(args, t0)
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "spectrum" and args.source == "analytic":
            return cmd_spectrum_analytic(args, out, t0)
        if args.command == "spectrum":
            return cmd_spectrum_mesh(args, out, t0)
        return cmd_verify(args, out, t0)
    except (UsageError, MeshError, AssemblyError, ValueError) as exc:
        print(f"maghodge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"maghodge: solver error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
