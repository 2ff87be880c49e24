"""Discrete magnetic operators d^a = d + i a^ and their Laplacians.

Formulations
  phase-cochain        graph Laplacian with edge phases exp(i theta_e); gauge exact
  whitney-primal-0form hat functions, quadratic form int |df + i f a|^2
  whitney-mixed-pform  saddle system with sigma = delta^a u imposed weakly
  lagrange-vector      componentwise P1 forms on flat meshes, full Dirichlet trace
"""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from math import comb
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .analytic import hopf_field
from .exterior import interior_basis_matrices, wedge_basis_matrices
from .mesh import SimplicialComplex
from .quadrature import segment_rule, simplex_rule
from .whitney import CellGeometry, cell_geometry, local_faces, whitney_d, whitney_values

log = logging.getLogger(__name__)

TANGENCY_TOL = 1e-10


class AssemblyError(ValueError):
    pass


# --- potentials ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MagneticPotential:
    """A real 1-form sampled on a mesh.

    `field` maps ambient points (k, m) to ambient covectors (k, m); on sphere
    meshes it is evaluated at the radial projection and pulled back to the
    chordal geometry. `edge_integrals[e]` integrates along edge e in the
    increasing-vertex direction. `cell_shift` adds a piecewise-constant covector
    per top cell (gauge transforms of Whitney systems).
    """

    name: str
    field: Callable | None
    edge_integrals: np.ndarray
    quad_order: int
    pullback: str = "identity"
    cell_shift: np.ndarray | None = None
    mesh_hash: str = ""

    def covector(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.field is None:
            return np.zeros_like(pts)
        if self.pullback == "radial":
            r = np.linalg.norm(pts, axis=-1, keepdims=True)
            return self.field(pts / r) / r
        return self.field(pts)

    @property
    def is_zero(self) -> bool:
        return self.field is None and self.cell_shift is None and not np.any(self.edge_integrals)


@dataclass(frozen=True)
class GaugeFunction:
    """Vertex phases f_v; the gauge is tau_v = exp(i f_v)."""

    phases: np.ndarray

    @property
    def tau(self) -> np.ndarray:
        return np.exp(1j * np.asarray(self.phases, dtype=float))

    @classmethod
    def from_unit(cls, tau) -> "GaugeFunction":
        tau = np.asarray(tau, dtype=complex)
        if np.abs(np.abs(tau) - 1).max(initial=0) > 1e-14:
            raise AssemblyError("gauge values must have unit modulus")
        return cls(np.angle(tau))


def zero_field(x):
    return np.zeros_like(x)


def constant_field(c) -> Callable:
    c = np.asarray(c, dtype=float)
    return lambda x: np.broadcast_to(c, np.shape(x)).copy()


def hopf_potential(t: float) -> Callable:
    """alpha = t * Y2 on R^4 (tangent to every sphere about the origin)."""
    return lambda x: t * hopf_field(x)


def uniform_magnetic_field(B: float, center=(0.5, 0.5)) -> Callable:
    """Symmetric gauge alpha = (B/2)(-(y-cy), x-cx), so d alpha = B dx^dy."""
    cx, cy = center

    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * B * np.stack([-(x[..., 1] - cy), x[..., 0] - cx], axis=-1)

    return f


def sample_potential(field: Callable | None, mesh: SimplicialComplex, quad_order: int = 3,
                     name: str = "custom") -> MagneticPotential:
    if not 1 <= quad_order <= 5:
        raise AssemblyError(f"quad_order must lie in 1..5, got {quad_order}")
    pullback = "radial" if mesh.metric == "sphere" else "identity"
    X = mesh.simplex_coordinates(1)
    disp = X[:, 1] - X[:, 0]
    theta = np.zeros(mesh.count(1))
    if field is not None:
        s, w = segment_rule(quad_order)
        for sq, wq in zip(s, w):
            pts = X[:, 0] + sq * disp
            if pullback == "radial":
                unit = pts / np.linalg.norm(pts, axis=1, keepdims=True)
                a = field(unit)
                radial = np.abs(np.sum(a * unit, axis=1))
                bad = np.nonzero(radial > TANGENCY_TOL * np.maximum(1, np.linalg.norm(a, axis=1)))[0]
                if len(bad):
                    e = bad[0]
                    raise AssemblyError(
                        f"potential not tangent to the sphere on edge {e} "
                        f"{tuple(mesh.simplices[1][e])}: radial part {radial[e]:.3e}")
            pot = MagneticPotential(name, field, theta, quad_order, pullback)
            theta = theta + wq * np.sum(pot.covector(pts) * disp, axis=1)
    theta.setflags(write=False)
    return MagneticPotential(name, field, theta, quad_order, pullback, None, mesh.mesh_hash)


def holonomy(pot: MagneticPotential, mesh: SimplicialComplex, loop) -> float:
    loop = [int(v) for v in loop]
    if len(loop) < 2 or loop[0] != loop[-1]:
        raise AssemblyError("holonomy needs a closed vertex path")
    total = 0.0
    for u, v in zip(loop[:-1], loop[1:]):
        e, s = mesh.edge_index(u, v)
        total += s * pot.edge_integrals[e]
    return float(total)


def face_fluxes(pot: MagneticPotential, mesh: SimplicialComplex) -> np.ndarray:
    """Discrete curvature: signed sum of edge integrals around each triangle."""
    D2 = mesh.boundary(2).T.tocsr()
    return D2 @ pot.edge_integrals


# --- assembled systems ---------------------------------------------------

class MixedOperator:
    """Schur complement S + B M_low^{-1} B^H of the mixed saddle system (implicit)."""

    def __init__(self, M_low: sp.csr_matrix, B: sp.csr_matrix, S: sp.csr_matrix):
        self.M_low, self.B, self.S = M_low.tocsc(), B.tocsr(), S.tocsr()
        self.shape = S.shape
        self.dtype = np.dtype(complex)
        self._mlu = spla.splu(self.M_low.astype(complex)) if M_low.shape[0] else None

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.S @ x
        if self._mlu is not None:
            y = y + self.B @ self._mlu.solve(np.asarray(self.B.conj().T @ x, dtype=complex))
        return y

    def __matmul__(self, x):
        x = np.asarray(x)
        if x.ndim == 1:
            return self.matvec(x)
        return np.column_stack([self.matvec(x[:, j]) for j in range(x.shape[1])])

    def saddle(self) -> sp.csc_matrix:
        """Block matrix [[-M_low, B^H], [B, S]]."""
        return sp.bmat([[-self.M_low, self.B.conj().T], [self.B, self.S]], format="csc")

    def toarray(self) -> np.ndarray:
        if self._mlu is None:
            return self.S.toarray()
        BH = self.B.conj().T.toarray()
        return self.S.toarray() + self.B @ self._mlu.solve(BH.astype(complex))


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    p: int
    formulation: str
    stiffness: object          # sparse Hermitian matrix, or MixedOperator
    mass: sp.csr_matrix
    dof_map: np.ndarray        # matrix row -> simplex (or vertex*C+component) index
    dirichlet: bool
    quad_order: int
    mesh_hash: str
    potential_name: str
    full: "AssembledSystem | None" = None   # pre-Dirichlet system, if restricted
    extra: dict = field(default_factory=dict)

    @property
    def n_dofs(self) -> int:
        return self.mass.shape[0]

    def metadata(self) -> dict:
        return {
            "formulation": self.formulation, "p": self.p, "quad_order": self.quad_order,
            "dofs": self.n_dofs, "dirichlet": self.dirichlet, "mesh_hash": self.mesh_hash,
            "potential": self.potential_name,
            **({"auxiliary_dofs": self.stiffness.M_low.shape[0]}
               if isinstance(self.stiffness, MixedOperator) else {}),
        }

    def metadata_json(self) -> str:
        return json.dumps(self.metadata(), indent=1, sort_keys=True)


def hermitize(A: sp.spmatrix) -> sp.csr_matrix:
    A = sp.csr_matrix(A)
    H = (0.5 * (A + A.conj().T)).tocsr()
    H.sort_indices()
    return H


def export_coordinate(A, path=None) -> str:
    """Coordinate text (row col re im), rows sorted."""
    C = sp.coo_matrix(A.toarray() if isinstance(A, MixedOperator) else A)
    order = np.lexsort((C.col, C.row))
    lines = [f"{C.row[i]} {C.col[i]} {float(np.real(C.data[i]))!r} {float(np.imag(C.data[i]))!r}" for i in order]
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _scatter(local: np.ndarray, rows: np.ndarray, cols: np.ndarray, shape) -> sp.csr_matrix:
    """Sum local blocks (nc, a, b) into a global matrix; canonical (row, col) ordering."""
    nc, a, b = local.shape
    R = np.repeat(rows[:, :, None], b, axis=2).ravel()
    C = np.repeat(cols[:, None, :], a, axis=1).ravel()
    M = sp.coo_matrix((local.ravel(), (R, C)), shape=shape).tocsr()
    M.sum_duplicates()
    M.sort_indices()
    return M


def _local_covector(pot: MagneticPotential, geom: CellGeometry, bary: np.ndarray) -> np.ndarray:
    a = np.zeros((len(geom.vol), geom.X.shape[2]))
    if pot.field is not None:
        a = pot.covector(geom.points(bary))
    if pot.cell_shift is not None:
        a = a + pot.cell_shift
    return geom.to_local(a)


def _wedge_with(a_loc: np.ndarray, d: int, p: int, forms: np.ndarray) -> np.ndarray:
    """a ^ w for per-cell covectors a (nc, d) and forms (nc, k, C(d,p))."""
    W = wedge_basis_matrices(d, p)
    return np.einsum("cr,rAB,ckB->ckA", a_loc, W, forms)


def _check_potential(mesh: SimplicialComplex, pot: MagneticPotential):
    if pot.mesh_hash and pot.mesh_hash != mesh.mesh_hash:
        raise AssemblyError("potential was sampled on a different mesh")


def _whitney_blocks(mesh: SimplicialComplex, pot: MagneticPotential, p: int, quad_order: int):
    """Global Whitney matrices for degree p: mass M_p, S = <d^a w_j, d^a w_i>, and
    (p >= 1) M_{p-1}, B = <d^a tau_j, w_i>."""
    d = mesh.dim
    geom = cell_geometry(mesh)
    bary, wts = simplex_rule(d, quad_order)
    idx_p = mesh.face_index(d, p)
    n_p = mesh.count(p)
    dw = whitney_d(geom, p)
    nc = len(geom.vol)
    nl = idx_p.shape[1]
    Mloc = np.zeros((nc, nl, nl))
    Sloc = np.zeros((nc, nl, nl), dtype=complex)
    if p >= 1:
        idx_q = mesh.face_index(d, p - 1)
        dtau = whitney_d(geom, p - 1)
        nq = idx_q.shape[1]
        Mqloc = np.zeros((nc, nq, nq))
        Bloc = np.zeros((nc, nl, nq), dtype=complex)
    for b, w in zip(bary, wts):
        a = _local_covector(pot, geom, b)
        wv = whitney_values(geom, p, b)
        Mloc += w * np.einsum("cjA,ciA->cij", wv, wv)
        Dw = dw + 1j * _wedge_with(a, d, p, wv) if p < d else dw.astype(complex)
        Sloc += w * np.einsum("cjA,ciA->cij", Dw, Dw.conj())
        if p >= 1:
            tv = whitney_values(geom, p - 1, b)
            Mqloc += w * np.einsum("cjA,ciA->cij", tv, tv)
            Dt = dtau + 1j * _wedge_with(a, d, p - 1, tv)
            Bloc += w * np.einsum("cjA,ciA->cij", Dt, wv)
    v = geom.vol[:, None, None]
    out = {
        "M": _scatter(Mloc * v, idx_p, idx_p, (n_p, n_p)),
        "S": _scatter(Sloc * v, idx_p, idx_p, (n_p, n_p)),
    }
    if p >= 1:
        n_q = mesh.count(p - 1)
        out["M_low"] = _scatter(Mqloc * v, idx_q, idx_q, (n_q, n_q))
        out["B"] = _scatter(Bloc * v, idx_p, idx_q, (n_p, n_q))
    return out


def _interior_rows(mesh: SimplicialComplex, p: int, dirichlet: bool) -> np.ndarray:
    n = mesh.count(p)
    if not dirichlet:
        return np.arange(n)
    return np.nonzero(~mesh.boundary_flags[p])[0]


def _restrict(A, keep_r, keep_c=None):
    keep_c = keep_r if keep_c is None else keep_c
    return sp.csr_matrix(A)[keep_r][:, keep_c].tocsr()


def assemble_whitney_0form(mesh: SimplicialComplex, pot: MagneticPotential,
                           quad_order: int = 3) -> AssembledSystem:
    if quad_order < 2:
        raise AssemblyError("0-form assembly needs quad_order >= 2")
    _check_potential(mesh, pot)
    blocks = _whitney_blocks(mesh, pot, 0, quad_order)
    sys_ = AssembledSystem(0, "whitney-primal-0form", hermitize(blocks["S"]),
                           hermitize(blocks["M"]), np.arange(mesh.count(0)), False,
                           quad_order, mesh.mesh_hash, pot.name)
    return apply_dirichlet(sys_, mesh) if mesh.dirichlet else sys_


def assemble_whitney_mixed(mesh: SimplicialComplex, pot: MagneticPotential, p: int,
                           quad_order: int = 3) -> AssembledSystem:
    if p < 1 or p > mesh.dim:
        raise AssemblyError(f"mixed assembly needs 1 <= p <= {mesh.dim}, got {p}")
    _check_potential(mesh, pot)
    blocks = _whitney_blocks(mesh, pot, p, quad_order)
    M_low = hermitize(blocks["M_low"]).real.tocsr()
    try:
        op = MixedOperator(M_low, blocks["B"], hermitize(blocks["S"]))
    except RuntimeError as exc:
        raise AssemblyError(f"singular mass block in degree {p - 1}: {exc}") from None
    sys_ = AssembledSystem(p, "whitney-mixed-pform", op, hermitize(blocks["M"]).real.tocsr(),
                           np.arange(mesh.count(p)), False, quad_order, mesh.mesh_hash, pot.name,
                           extra={"low_dof_map": np.arange(mesh.count(p - 1))})
    return apply_dirichlet(sys_, mesh) if mesh.dirichlet else sys_


def cotan_weights(mesh: SimplicialComplex) -> np.ndarray:
    """Edge weights w_uv = -K_uv from the P1 stiffness matrix (cotangent formula in 2D)."""
    zero = MagneticPotential("zero", None, np.zeros(mesh.count(1)), 2)
    K = _whitney_blocks(mesh, zero, 0, 2)["S"].real.tocsr()
    E = mesh.simplices[1]
    return -np.asarray(K[E[:, 0], E[:, 1]]).ravel()


def assemble_phase_laplacian(mesh: SimplicialComplex, pot: MagneticPotential,
                             weights: str = "cotan") -> AssembledSystem:
    _check_potential(mesh, pot)
    E = mesh.simplices[1]
    n = mesh.count(0)
    if weights == "cotan":
        w = cotan_weights(mesh)
        # right angles give weights that are zero up to roundoff
        neg = w < -1e-12 * np.abs(w).max(initial=0.0)
        if np.any(neg):
            warnings.warn(f"{int(np.sum(neg))} negative cotan weights (obtuse elements)")
        mass = sp.diags(np.bincount(mesh.simplices[mesh.dim].ravel(),
                                    weights=np.repeat(cell_geometry(mesh).vol, mesh.dim + 1),
                                    minlength=n) / (mesh.dim + 1)).tocsr()
    elif weights == "unit":
        w = np.ones(len(E))
        mass = sp.identity(n, format="csr")
    else:
        raise AssemblyError(f"unknown weights {weights!r}")
    off = -w * np.exp(1j * pot.edge_integrals)
    rows = np.concatenate([E[:, 0], E[:, 1], np.arange(n)])
    cols = np.concatenate([E[:, 1], E[:, 0], np.arange(n)])
    diag = np.bincount(E.ravel(), weights=np.repeat(w, 2), minlength=n)
    vals = np.concatenate([off, off.conj(), diag.astype(complex)])
    L = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    L.sort_indices()
    sys_ = AssembledSystem(0, "phase-cochain", L, mass.astype(float), np.arange(n), False, 0,
                           mesh.mesh_hash, pot.name, extra={"weights": weights})
    return apply_dirichlet(sys_, mesh) if mesh.dirichlet else sys_


def apply_dirichlet(system: AssembledSystem, mesh: SimplicialComplex) -> AssembledSystem:
    """Delete boundary degrees of freedom (and boundary (p-1)-simplices of the mixed block)."""
    if system.dirichlet:
        return system
    if mesh.is_closed:
        warnings.warn("apply_dirichlet on a closed mesh: nothing to eliminate")
        return system
    p = system.p
    if system.formulation == "lagrange-vector":
        C = system.extra["components"]
        interior_v = np.nonzero(~mesh.boundary_flags[0])[0]
        keep = (interior_v[:, None] * C + np.arange(C)).ravel()
    else:
        keep = _interior_rows(mesh, p, True)
    if len(keep) == 0:
        raise AssemblyError("empty system: every degree of freedom lies on the boundary")
    mass = _restrict(system.mass, keep)
    extra = dict(system.extra)
    if isinstance(system.stiffness, MixedOperator):
        op = system.stiffness
        keep_low = _interior_rows(mesh, p - 1, True)
        stiff = MixedOperator(_restrict(op.M_low, keep_low), _restrict(op.B, keep, keep_low),
                              _restrict(op.S, keep))
        extra["low_dof_map"] = keep_low
    else:
        stiff = _restrict(system.stiffness, keep)
    return replace(system, stiffness=stiff, mass=mass, dof_map=system.dof_map[keep],
                   dirichlet=True, full=system, extra=extra)


def assemble_lagrange_vector(mesh: SimplicialComplex, pot: MagneticPotential, p: int,
                             quad_order: int = 4) -> AssembledSystem:
    """Componentwise P1 p-forms on a flat mesh with form |d^a u|^2 + |delta^a u|^2.

    Every component vanishes on the boundary when the mesh carries the Dirichlet
    flag, which is the full trace condition u|_boundary = 0.
    """
    if mesh.metric != "euclidean" or mesh.embed_dim != mesh.dim:
        raise AssemblyError("vector Lagrange forms need a flat mesh embedded in its own dimension")
    _check_potential(mesh, pot)
    d = mesh.dim
    C = comb(d, p)
    geom = cell_geometry(mesh)
    bary, wts = simplex_rule(d, quad_order)
    nc = len(geom.vol)
    # coupling G[k, j] = W_k^T W_j + I_k^T I_j acting on Lambda^p
    Wm = wedge_basis_matrices(d, p)
    Im = interior_basis_matrices(d, p)
    G = np.einsum("kAI,jAJ->kjIJ", Wm, Wm) + np.einsum("kAI,jAJ->kjIJ", Im, Im)
    # frame is the identity up to orientation: use ambient coordinates directly
    grads = np.einsum("cmd,cvd->cvm", geom.frame, geom.grads)   # (nc, d+1, d) ambient
    T = np.zeros((nc, d + 1, d + 1, d, d), dtype=complex)
    Mloc = np.zeros((nc, d + 1, d + 1))
    for b, w in zip(bary, wts):
        a = np.zeros((nc, d)) if pot.field is None else pot.covector(geom.points(b))
        if pot.cell_shift is not None:
            a = a + pot.cell_shift
        Phi = grads[:, :, :] + 1j * a[:, None, :] * b[None, :, None]   # (nc, v, j)
        T += w * np.einsum("cak,cbj->cabkj", Phi.conj(), Phi)
        Mloc += w * np.outer(b, b)[None]
    v = geom.vol
    K = np.einsum("cabkj,kjIJ->caIbJ", T, G) * v[:, None, None, None, None]
    K = K.reshape(nc, (d + 1) * C, (d + 1) * C)
    M = np.einsum("cab,IJ->caIbJ", Mloc, np.eye(C)) * v[:, None, None, None, None]
    M = M.reshape(nc, (d + 1) * C, (d + 1) * C)
    cells = mesh.simplices[d]
    idx = (cells[:, :, None] * C + np.arange(C)).reshape(nc, -1)
    n = mesh.count(0) * C
    sys_ = AssembledSystem(p, "lagrange-vector", hermitize(_scatter(K, idx, idx, (n, n))),
                           hermitize(_scatter(M, idx, idx, (n, n))).real.tocsr(), np.arange(n),
                           False, quad_order, mesh.mesh_hash, pot.name, extra={"components": C})
    return apply_dirichlet(sys_, mesh) if mesh.dirichlet else sys_


# --- gauge transforms ---------------------------------------------------

def gauge_transform_potential(pot: MagneticPotential, mesh: SimplicialComplex,
                              g: GaugeFunction) -> MagneticPotential:
    """alpha -> alpha + df, with df the piecewise gradient of the interpolated phase."""
    f = np.asarray(g.phases, dtype=float)
    E = mesh.simplices[1]
    theta = pot.edge_integrals + (f[E[:, 1]] - f[E[:, 0]])
    theta.setflags(write=False)
    geom = cell_geometry(mesh)
    shift = geom.ambient_gradient(f[mesh.simplices[mesh.dim]])
    if pot.cell_shift is not None:
        shift = shift + pot.cell_shift
    return replace(pot, edge_integrals=theta, cell_shift=shift, name=pot.name + "+gauge")


def gauge_transform_system(system: AssembledSystem, g: GaugeFunction) -> AssembledSystem:
    """Unitary conjugation of a phase-cochain system by vertex phases."""
    if system.formulation != "phase-cochain":
        raise AssemblyError("exact conjugation is defined for the phase-cochain operator; "
                            "transform the potential and reassemble for Whitney systems")
    tau = g.tau[system.dof_map]
    U = sp.diags(tau)
    L = (U.conj() @ system.stiffness @ U).tocsr()
    L.sort_indices()
    return replace(system, stiffness=L)


# --- named presets ---------------------------------------------------------

PRESETS = ("zero", "berger-tY2", "torus-constant", "square-constant-field")


def preset_field(spec: str) -> tuple[str, Callable | None]:
    """Parse 'name:args' into (name, field). Args are comma separated floats."""
    name, _, arg = spec.partition(":")
    try:
        vals = [float(x) for x in arg.split(",")] if arg else []
    except ValueError:
        raise AssemblyError(f"bad potential arguments in {spec!r}") from None
    if name == "zero":
        return spec, None
    if name == "berger-tY2" and len(vals) == 1:
        return spec, hopf_potential(vals[0])
    if name == "torus-constant" and len(vals) >= 1:
        return spec, constant_field(vals)
    if name == "square-constant-field" and len(vals) == 1:
        return spec, uniform_magnetic_field(vals[0])
    raise AssemblyError(f"unknown potential preset {spec!r}; expected one of {', '.join(PRESETS)}")
