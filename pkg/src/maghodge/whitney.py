"""Lowest-order Whitney forms on affine simplices, evaluated cell-wise in a local frame.

Each top cell gets an orthonormal basis of its affine hull (columns of `frame`);
barycentric gradients, form values and ambient covectors are expressed in it.
Local p-faces are enumerated as itertools.combinations(range(d+1), p+1),
matching SimplicialComplex.face_index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import factorial

import numpy as np

from .exterior import decomposable
from .mesh import SimplicialComplex


@dataclass(frozen=True, eq=False)
class CellGeometry:
    X: np.ndarray        # (nc, d+1, m) vertex coordinates
    frame: np.ndarray    # (nc, m, d) orthonormal tangent basis
    grads: np.ndarray    # (nc, d+1, d) barycentric gradients in the frame
    vol: np.ndarray      # (nc,)

    @property
    def d(self) -> int:
        return self.grads.shape[2]

    def points(self, bary: np.ndarray) -> np.ndarray:
        """Ambient points for one barycentric node, shape (nc, m)."""
        return np.einsum("v,cvm->cm", bary, self.X)

    def to_local(self, cov: np.ndarray) -> np.ndarray:
        """Project ambient covectors (nc, m) onto the cell frame -> (nc, d)."""
        return np.einsum("cmd,cm->cd", self.frame, cov)

    def ambient_gradient(self, nodal: np.ndarray) -> np.ndarray:
        """Ambient gradient of the affine interpolant of per-vertex values (nc, d+1)."""
        g = np.einsum("cv,cvd->cd", nodal, self.grads)
        return np.einsum("cmd,cd->cm", self.frame, g)


def cell_geometry(mesh: SimplicialComplex) -> CellGeometry:
    d = mesh.dim
    X = mesh.simplex_coordinates(d)
    E = X[:, 1:] - X[:, :1]                       # (nc, d, m)
    Q, R = np.linalg.qr(np.transpose(E, (0, 2, 1)))   # Q (nc, m, d), R (nc, d, d)
    # local edge vectors are the columns of R; barycentric gradients solve R^T g = e
    Rinv = np.linalg.inv(R)                      # rows of Rinv are gradients of lambda_1..d
    g = Rinv
    grads = np.concatenate([-g.sum(axis=1, keepdims=True), g], axis=1)
    vol = np.abs(np.prod(np.diagonal(R, axis1=1, axis2=2), axis=1)) / factorial(d)
    if np.any(vol <= 0):
        raise ValueError("degenerate cell in mesh")
    return CellGeometry(X, Q, grads, vol)


@lru_cache(maxsize=None)
def local_faces(d: int, p: int) -> tuple:
    return tuple(combinations(range(d + 1), p + 1))


def whitney_values(geom: CellGeometry, p: int, bary: np.ndarray) -> np.ndarray:
    """Whitney p-form values at one barycentric node: (nc, C(d+1,p+1), C(d,p))."""
    d = geom.d
    out = []
    for F in local_faces(d, p):
        if p == 0:
            out.append(np.full((len(geom.vol), 1), bary[F[0]]))
            continue
        acc = 0
        for k, ik in enumerate(F):
            rest = list(F[:k] + F[k + 1:])
            acc = acc + (-1) ** k * bary[ik] * decomposable(geom.grads[:, rest, :])
        out.append(factorial(p) * acc)
    return np.stack(out, axis=1)


def whitney_d(geom: CellGeometry, p: int) -> np.ndarray:
    """Exterior derivative of each Whitney p-form (constant per cell): (nc, nloc, C(d,p+1))."""
    d = geom.d
    nc = len(geom.vol)
    if p >= d:
        return np.zeros((nc, len(local_faces(d, p)), 0))
    return np.stack([factorial(p + 1) * decomposable(geom.grads[:, list(F), :])
                     for F in local_faces(d, p)], axis=1)
