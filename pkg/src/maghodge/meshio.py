"""Line-based text format for simplicial complexes.

    maghodge-mesh v1 dim=<d> embed=<m> metric=<euclidean|sphere> [periods=L1,L2] [dirichlet=1]
    v x1 ... xm
    s<p> i0 ... ip          (0-based, increasing)
    bflag <p> <index>
    loop i0 i1 ... i0
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import LoopBasis, MeshError, SimplicialComplex

HEADER = "maghodge-mesh"


class MeshParseError(MeshError):
    pass


def format_mesh(mesh: SimplicialComplex) -> str:
    head = [f"{HEADER} v1", f"dim={mesh.dim}", f"embed={mesh.embed_dim}", f"metric={mesh.metric}"]
    if mesh.periods is not None:
        head.append("periods=" + ",".join(repr(float(x)) for x in mesh.periods))
    if mesh.dirichlet:
        head.append("dirichlet=1")
    lines = [" ".join(head)]
    lines += ["v " + " ".join(repr(float(x)) for x in row) for row in mesh.vertices]
    for p in range(1, mesh.dim + 1):
        lines += [f"s{p} " + " ".join(str(int(i)) for i in row) for row in mesh.simplices[p]]
    for p, flags in enumerate(mesh.boundary_flags):
        lines += [f"bflag {p} {i}" for i in np.nonzero(flags)[0]]
    for loop in mesh.loop_basis.loops:
        lines.append("loop " + " ".join(str(int(i)) for i in loop))
    return "\n".join(lines) + "\n"


def write_mesh(mesh: SimplicialComplex, path) -> None:
    Path(path).write_text(format_mesh(mesh), encoding="utf-8")


def parse_mesh(text: str) -> SimplicialComplex:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(HEADER + " v1"):
        raise MeshParseError("line 1: missing 'maghodge-mesh v1' header")
    opts = {}
    for tok in lines[0].split()[2:]:
        if "=" not in tok:
            raise MeshParseError(f"line 1: malformed header token {tok!r}")
        k, v = tok.split("=", 1)
        opts[k] = v
    try:
        dim, embed = int(opts["dim"]), int(opts["embed"])
    except (KeyError, ValueError):
        raise MeshParseError("line 1: header needs integer dim= and embed=") from None
    metric = opts.get("metric", "euclidean")
    periods = tuple(float(x) for x in opts["periods"].split(",")) if "periods" in opts else None
    dirichlet = opts.get("dirichlet", "0") == "1"

    verts, simp, bflags, loops = [], {p: [] for p in range(1, dim + 1)}, [], []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        tag, rest = parts[0], parts[1:]
        try:
            if tag == "v":
                if len(rest) != embed:
                    raise MeshParseError(f"line {ln}: expected {embed} coordinates")
                verts.append([float(x) for x in rest])
            elif tag.startswith("s") and tag[1:].isdigit():
                p = int(tag[1:])
                if p not in simp or len(rest) != p + 1:
                    raise MeshParseError(f"line {ln}: bad {tag} record")
                simp[p].append([int(x) for x in rest])
            elif tag == "bflag":
                bflags.append((int(rest[0]), int(rest[1])))
            elif tag == "loop":
                loops.append(np.array([int(x) for x in rest], dtype=np.int64))
            else:
                raise MeshParseError(f"line {ln}: unknown record {tag!r}")
        except MeshParseError:
            raise
        except (ValueError, IndexError):
            raise MeshParseError(f"line {ln}: cannot parse {line!r}") from None
    if not verts:
        raise MeshParseError("no vertices")
    simplices = [np.arange(len(verts)).reshape(-1, 1)]
    simplices += [np.array(simp[p], dtype=np.int64).reshape(-1, p + 1) for p in range(1, dim + 1)]
    mesh = SimplicialComplex(dim, np.array(verts), tuple(simplices), metric=metric,
                             periods=periods, dirichlet=dirichlet,
                             loop_basis=LoopBasis(tuple(loops)))
    if bflags:
        got = {(p, i) for p, i in bflags}
        want = {(p, int(i)) for p, f in enumerate(mesh.boundary_flags) for i in np.nonzero(f)[0]}
        if got != want:
            raise MeshError(f"boundary flags disagree with topology: "
                            f"{sorted(got ^ want)[:10]}")
    return mesh


def read_mesh(path) -> SimplicialComplex:
    return parse_mesh(Path(path).read_text(encoding="utf-8"))
