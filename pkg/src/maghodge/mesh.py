"""Oriented simplicial complexes, boundary operators and mesh generators.

Orientation convention: a simplex stored as an increasing vertex tuple is
positively oriented; the boundary of (v0..vp) is sum_k (-1)^k (v0..^vk..vp).
"""
from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp


class MeshError(ValueError):
    pass


def _keys(simplices: np.ndarray, nv: int) -> np.ndarray:
    """Encode sorted index rows as int64 keys (lexicographic order preserving)."""
    simplices = np.asarray(simplices, dtype=np.int64)
    k = np.zeros(len(simplices), dtype=np.int64)
    for j in range(simplices.shape[1]):
        k = k * nv + simplices[:, j]
    return k


class _Lookup:
    """Row lookup for a list of sorted simplices."""

    def __init__(self, simplices: np.ndarray, nv: int):
        keys = _keys(simplices, nv)
        self.order = np.argsort(keys, kind="stable")
        self.sorted = keys[self.order]
        self.nv = nv

    def find(self, rows: np.ndarray) -> np.ndarray:
        """Indices of the given sorted rows; -1 where absent."""
        rows = np.asarray(rows, dtype=np.int64)
        shape = rows.shape[:-1]
        q = _keys(rows.reshape(-1, rows.shape[-1]), self.nv)
        pos = np.searchsorted(self.sorted, q)
        pos = np.minimum(pos, len(self.sorted) - 1)
        hit = self.sorted[pos] == q if len(self.sorted) else np.zeros(len(q), bool)
        out = np.where(hit, self.order[pos] if len(self.sorted) else -1, -1)
        return out.reshape(shape)


@dataclass(frozen=True, eq=False)
class LoopBasis:
    """Closed vertex paths (first vertex repeated at the end) generating H_1."""

    loops: tuple = ()


@dataclass(frozen=True)
class BoundaryOperator:
    p: int
    matrix: sp.csr_matrix


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    dim: int
    vertices: np.ndarray
    simplices: tuple
    metric: str = "euclidean"
    periods: tuple | None = None
    dirichlet: bool = False
    loop_basis: LoopBasis = field(default_factory=LoopBasis)
    validate: bool = True

    def __post_init__(self):
        V = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        simp = []
        for p, s in enumerate(self.simplices):
            s = np.ascontiguousarray(np.asarray(s, dtype=np.int64).reshape(-1, p + 1))
            s.setflags(write=False)
            simp.append(s)
        object.__setattr__(self, "simplices", tuple(simp))
        if self.periods is not None:
            object.__setattr__(self, "periods", tuple(float(x) for x in self.periods))
        if self.metric not in ("euclidean", "sphere"):
            raise MeshError(f"unknown metric {self.metric!r}")
        if self.validate:
            self.check()

    # --- basic data ---
    @property
    def embed_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def count(self, p: int) -> int:
        return len(self.simplices[p])

    @property
    def counts(self) -> tuple:
        return tuple(len(s) for s in self.simplices)

    def euler_characteristic(self) -> int:
        return int(sum((-1) ** p * len(s) for p, s in enumerate(self.simplices)))

    @cached_property
    def _lookups(self) -> dict:
        return {}

    def lookup(self, p: int) -> _Lookup:
        if p not in self._lookups:
            self._lookups[p] = _Lookup(self.simplices[p], self.n_vertices)
        return self._lookups[p]

    @cached_property
    def _face_cache(self) -> dict:
        return {}

    def face_index(self, p: int, q: int | None = None) -> np.ndarray:
        """Global indices of the q-faces of every p-simplex (local faces in combinations order)."""
        q = p - 1 if q is None else q
        key = (p, q)
        if key not in self._face_cache:
            S = self.simplices[p]
            local = list(combinations(range(p + 1), q + 1))
            rows = S[:, np.array(local)] if len(S) else np.zeros((0, len(local), q + 1), np.int64)
            idx = self.lookup(q).find(rows) if len(S) else np.zeros((0, len(local)), np.int64)
            if np.any(idx < 0):
                bad = np.argwhere(idx < 0)[0]
                raise MeshError(f"{p}-simplex {tuple(S[bad[0]])} has a missing {q}-face")
            idx.setflags(write=False)
            self._face_cache[key] = idx
        return self._face_cache[key]

    def edge_index(self, u: int, v: int) -> tuple[int, int]:
        """(edge index, orientation sign) of the directed edge u -> v."""
        a, b = (u, v) if u < v else (v, u)
        idx = int(self.lookup(1).find(np.array([[a, b]]))[0])
        if idx < 0:
            raise MeshError(f"no edge between vertices {u} and {v}")
        return idx, (1 if u < v else -1)

    # --- topology ---
    def boundary(self, p: int) -> sp.csr_matrix:
        return boundary_operator(self, p).matrix

    @cached_property
    def coface_counts(self) -> np.ndarray:
        d = self.dim
        return np.bincount(self.face_index(d).ravel(), minlength=self.count(d - 1))

    @cached_property
    def boundary_flags(self) -> tuple:
        """Per-degree boolean arrays marking simplices that lie on the boundary."""
        d = self.dim
        flags = [None] * (d + 1)
        bnd = self.coface_counts == 1
        flags[d] = np.zeros(self.count(d), dtype=bool)
        flags[d - 1] = bnd
        bfaces = self.simplices[d - 1][bnd]
        for p in range(d - 1):
            f = np.zeros(self.count(p), dtype=bool)
            if len(bfaces):
                rows = bfaces[:, np.array(list(combinations(range(d), p + 1)))]
                f[self.lookup(p).find(rows).ravel()] = True
            flags[p] = f
        for f in flags:
            f.setflags(write=False)
        return tuple(flags)

    @property
    def is_closed(self) -> bool:
        return not self.boundary_flags[self.dim - 1].any()

    def check(self) -> None:
        d = self.dim
        if len(self.simplices) != d + 1:
            raise MeshError(f"expected simplex lists for degrees 0..{d}")
        if not np.array_equal(self.simplices[0].ravel(), np.arange(self.n_vertices)):
            raise MeshError("degree-0 simplices must enumerate the vertices")
        for p in range(1, d + 1):
            S = self.simplices[p]
            if len(S) and (S.min() < 0 or S.max() >= self.n_vertices):
                raise MeshError(f"{p}-simplex references a missing vertex")
            unsorted = np.nonzero(np.any(np.diff(S, axis=1) <= 0, axis=1))[0]
            if len(unsorted):
                raise MeshError(
                    f"orientation corrupted: {p}-simplices not in increasing vertex order: "
                    f"{[tuple(S[i]) for i in unsorted[:10]]}")
            keys = _keys(S, self.n_vertices)
            if len(np.unique(keys)) != len(keys):
                raise MeshError(f"duplicate {p}-simplices")
            self.face_index(p)
        for p in range(d):
            used = np.zeros(self.count(p), dtype=bool)
            used[self.face_index(p + 1).ravel()] = True
            if not used.all():
                bad = np.nonzero(~used)[0]
                raise MeshError(f"dangling {p}-simplices (no coface): "
                                f"{[tuple(self.simplices[p][i]) for i in bad[:10]]}")
        over = np.nonzero(self.coface_counts > 2)[0]
        if len(over):
            raise MeshError(f"non-manifold {d - 1}-simplices with more than two cofaces: "
                            f"{[tuple(self.simplices[d - 1][i]) for i in over[:10]]}")
        for p in range(2, d + 1):
            if (self.boundary(p - 1) @ self.boundary(p)).count_nonzero():
                raise MeshError(f"boundary of boundary nonzero in degree {p}")
        if self.metric == "sphere":
            r = np.linalg.norm(self.vertices, axis=1)
            if np.abs(r - 1).max() > 1e-14:
                raise MeshError("sphere mesh vertices must have unit norm")
        for loop in self.loop_basis.loops:
            if loop[0] != loop[-1]:
                raise MeshError("loop path is not closed")
            for u, v in zip(loop[:-1], loop[1:]):
                self.edge_index(int(u), int(v))

    # --- geometry ---
    def simplex_coordinates(self, p: int) -> np.ndarray:
        """Vertex coordinates per p-simplex, shape (N_p, p+1, m), unwrapped on tori."""
        X = self.vertices[self.simplices[p]]
        if self.periods is not None:
            L = np.array(self.periods)
            rel = X - X[:, :1]
            rel -= L * np.round(rel / L)
            X = X[:, :1] + rel
        return X

    def edge_lengths(self) -> np.ndarray:
        X = self.simplex_coordinates(1)
        return np.linalg.norm(X[:, 1] - X[:, 0], axis=1)

    @property
    def h_max(self) -> float:
        return float(self.edge_lengths().max())

    @cached_property
    def mesh_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.dim}|{self.metric}|{self.periods}|{self.dirichlet}".encode())
        h.update(self.vertices.tobytes())
        for s in self.simplices:
            h.update(s.tobytes())
        for loop in self.loop_basis.loops:
            h.update(np.asarray(loop, dtype=np.int64).tobytes())
        return h.hexdigest()

    def summary(self) -> dict:
        return {
            "dim": self.dim, "embed_dim": self.embed_dim, "metric": self.metric,
            "counts": list(self.counts), "euler_characteristic": self.euler_characteristic(),
            "boundary_simplices": int(self.boundary_flags[self.dim - 1].sum()),
            "loops": len(self.loop_basis.loops), "h_max": self.h_max,
            "mesh_hash": self.mesh_hash,
        }

    def with_dirichlet(self, flag: bool = True) -> "SimplicialComplex":
        return SimplicialComplex(self.dim, self.vertices, self.simplices, self.metric,
                                 self.periods, flag, self.loop_basis, validate=False)


def boundary_operator(mesh: SimplicialComplex, p: int) -> BoundaryOperator:
    if not 1 <= p <= mesh.dim:
        raise MeshError(f"boundary operator degree {p} out of range 1..{mesh.dim}")
    fi = mesh.face_index(p)   # local faces in combinations order: face k omits vertex p-k
    n = mesh.count(p)
    signs = np.array([(-1) ** (p - k) for k in range(p + 1)])
    rows = fi.ravel()
    cols = np.repeat(np.arange(n), p + 1)
    vals = np.tile(signs, n)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(mesh.count(p - 1), n), dtype=np.int64)
    return BoundaryOperator(p, M)


def orientation_signs(mesh: SimplicialComplex) -> np.ndarray:
    """Signs s_c making sum_c s_c * c a relative cycle (coherent orientation)."""
    d = mesh.dim
    D = mesh.boundary(d).tocsr()
    Dc = D.tocsc()
    n = mesh.count(d)
    s = np.zeros(n, dtype=np.int64)
    for start in range(n):
        if s[start]:
            continue
        s[start] = 1
        queue = deque([start])
        while queue:
            c = queue.popleft()
            col = slice(Dc.indptr[c], Dc.indptr[c + 1])
            for f, e in zip(Dc.indices[col], Dc.data[col]):
                row = slice(D.indptr[f], D.indptr[f + 1])
                for c2, e2 in zip(D.indices[row], D.data[row]):
                    if c2 == c:
                        continue
                    want = -s[c] * e * e2
                    if s[c2] == 0:
                        s[c2] = want
                        queue.append(c2)
                    elif s[c2] != want:
                        raise MeshError("mesh is not orientable")
    return s


def from_top_cells(vertices, cells, dim, **kw) -> SimplicialComplex:
    """Build the full complex from top-dimensional cells (vertex index rows)."""
    cells = np.sort(np.asarray(cells, dtype=np.int64), axis=1)
    cells = np.unique(cells, axis=0)
    simplices = [None] * (dim + 1)
    simplices[dim] = cells
    for p in range(dim):
        loc = np.array(list(combinations(range(dim + 1), p + 1)))
        faces = cells[:, loc].reshape(-1, p + 1)
        simplices[p] = np.unique(faces, axis=0)
    simplices[0] = np.arange(len(vertices)).reshape(-1, 1)
    return SimplicialComplex(dim, np.asarray(vertices, dtype=float), tuple(simplices), **kw)


# --- generators ---------------------------------------------------------

def _grid_triangles(n: int, periodic: bool) -> np.ndarray:
    m = n if periodic else n + 1

    def vid(i, j):
        return (i % m) * m + (j % m) if periodic else i * m + j

    tris = []
    for i in range(n):
        for j in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((a, b, d))
            tris.append((a, d, c))
    return np.array(tris)


def generate_flat_torus(n_per_side: int, periods=(1.0, 1.0)) -> SimplicialComplex:
    """Periodic n x n grid split along diagonals; coordinates lie in [0, L)."""
    n = int(n_per_side)
    if n < 3:
        raise MeshError("torus needs n_per_side >= 3 (smaller grids identify distinct simplices)")
    L = np.array(periods, dtype=float)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    verts = np.stack([i.ravel() * L[0] / n, j.ravel() * L[1] / n], axis=1)
    loops = (
        np.array([k * n for k in range(n)] + [0]),     # x-direction cycle
        np.array(list(range(n)) + [0]),                # y-direction cycle
    )
    return from_top_cells(verts, _grid_triangles(n, True), 2, periods=tuple(L),
                          loop_basis=LoopBasis(loops))


def generate_square(n_per_side: int, dirichlet: bool = False) -> SimplicialComplex:
    n = int(n_per_side)
    if n < 1:
        raise MeshError("square needs n_per_side >= 1")
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    verts = np.stack([i.ravel() / n, j.ravel() / n], axis=1)
    return from_top_cells(verts, _grid_triangles(n, False), 2, dirichlet=dirichlet)


def _icosahedron():
    phi = (1 + 5 ** 0.5) / 2
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1]], dtype=float)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


class _Midpoints:
    """Edge-midpoint cache that appends projected points to a vertex list."""

    def __init__(self, verts: list, project: bool):
        self.verts = verts
        self.project = project
        self.cache: dict = {}

    def __call__(self, a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        if key not in self.cache:
            m = 0.5 * (self.verts[a] + self.verts[b])
            if self.project:
                m = m / np.linalg.norm(m)
            self.cache[key] = len(self.verts)
            self.verts.append(m)
        return self.cache[key]


def _normalize(verts: np.ndarray) -> np.ndarray:
    out = verts / np.linalg.norm(verts, axis=1, keepdims=True)
    # a second pass pins the norm to within one ulp of 1
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def generate_icosphere(level: int) -> SimplicialComplex:
    v, f = _icosahedron()
    verts = list(v)
    for _ in range(int(level)):
        mid = _Midpoints(verts, project=True)
        nf = []
        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        f = np.array(nf)
    return from_top_cells(_normalize(np.array(verts)), f, 2, metric="sphere")


def _split_tet(tet, X, mid):
    a, b, c, d = tet
    ab, ac, ad, bc, bd, cd = mid(a, b), mid(a, c), mid(a, d), mid(b, c), mid(b, d), mid(c, d)
    out = [(a, ab, ac, ad), (b, ab, bc, bd), (c, ac, bc, cd), (d, ad, bd, cd)]
    # central octahedron: split along the shortest of its three diagonals
    pairs = [(ab, cd), (ac, bd), (ad, bc)]
    lens = [np.linalg.norm(X[p] - X[q]) for p, q in pairs]
    k = int(np.argmin(lens))
    x, xp = pairs[k]
    (y, yp), (z, zp) = [pairs[i] for i in range(3) if i != k]
    ring = [y, z, yp, zp]
    out += [(x, xp, ring[i], ring[(i + 1) % 4]) for i in range(4)]
    return out


def generate_s3_mesh(level: int) -> SimplicialComplex:
    """16-cell boundary refined by 1->8 tetrahedral subdivision, projected to S^3."""
    E = np.eye(4)
    verts = [E[i] for i in range(4)] + [-E[i] for i in range(4)]
    tets = []
    for signs in range(16):
        tets.append(tuple(i if not (signs >> i) & 1 else i + 4 for i in range(4)))
    for _ in range(int(level)):
        mid = _Midpoints(verts, project=True)
        new = []
        for tet in tets:
            # midpoints first so that the diagonal choice sees their coordinates
            for i, j in combinations(range(4), 2):
                mid(tet[i], tet[j])
            X = np.array(verts)
            new += _split_tet(tet, X, mid)
        tets = new
    return from_top_cells(_normalize(np.array(verts)), np.array(tets), 3, metric="sphere")


def generate(spec: str) -> SimplicialComplex:
    """Generator spec 'kind:arg' with kind in torus, square, icosphere, s3.

    torus:N and square:N give N cells per side; icosphere:L and s3:L give levels.
    """
    try:
        kind, arg = spec.split(":", 1)
        val = int(arg)
    except ValueError:
        raise MeshError(f"bad generator spec {spec!r}; expected kind:int") from None
    if kind == "torus":
        return generate_flat_torus(val)
    if kind == "square":
        return generate_square(val)
    if kind == "icosphere":
        return generate_icosphere(val)
    if kind == "s3":
        return generate_s3_mesh(val)
    raise MeshError(f"unknown generator {kind!r}")
