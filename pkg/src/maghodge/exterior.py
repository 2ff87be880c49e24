"""Exterior algebra on R^n with an orthonormal basis.

Forms are stored as a mapping from strictly increasing multi-indices (1-based)
to complex coefficients. Dense kernels (wedge/interior matrices, canonical
extension of endomorphisms) use the lexicographic basis of Lambda^p.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Mapping, Sequence

import numpy as np

MAX_DENSE_DIM = 8


class ExteriorError(ValueError):
    pass


def _check_index(idx: Sequence[int], n: int) -> tuple[int, ...]:
    idx = tuple(int(i) for i in idx)
    if any(i < 1 or i > n for i in idx):
        raise ExteriorError(f"index {idx} out of range for n={n}")
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise ExteriorError(f"multi-index {idx} is not strictly increasing")
    return idx


@lru_cache(maxsize=None)
def basis(n: int, p: int) -> tuple[tuple[int, ...], ...]:
    """Lexicographic basis of Lambda^p(R^n) as 1-based multi-indices."""
    if p < 0 or p > n:
        return ()
    return tuple(combinations(range(1, n + 1), p))


@lru_cache(maxsize=None)
def _position(n: int, p: int) -> dict:
    return {I: k for k, I in enumerate(basis(n, p))}


@dataclass(frozen=True)
class ExteriorElement:
    """Homogeneous p-form on R^n."""

    n: int
    p: int
    coeffs: Mapping[tuple[int, ...], complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.p < 0:
            raise ExteriorError(f"negative degree {self.p}")
        if self.p > self.n and any(c != 0 for c in self.coeffs.values()):
            raise ExteriorError(f"degree {self.p} exceeds n={self.n}; only the zero form exists")
        clean = {}
        for I, c in self.coeffs.items():
            I = _check_index(I, self.n)
            if len(I) != self.p:
                raise ExteriorError(f"multi-index {I} has wrong length for degree {self.p}")
            if c != 0:
                clean[I] = complex(c)
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def from_vector(cls, n: int, p: int, vec) -> "ExteriorElement":
        vec = np.asarray(vec)
        return cls(n, p, {I: vec[k] for k, I in enumerate(basis(n, p)) if vec[k] != 0})

    def to_vector(self) -> np.ndarray:
        if self.p > self.n:
            return np.zeros(0, dtype=complex)
        pos = _position(self.n, self.p)
        out = np.zeros(comb(self.n, self.p), dtype=complex)
        for I, c in self.coeffs.items():
            out[pos[I]] = c
        return out

    def __add__(self, other: "ExteriorElement") -> "ExteriorElement":
        if (self.n, self.p) != (other.n, other.p):
            raise ExteriorError("cannot add forms of different type")
        out = dict(self.coeffs)
        for I, c in other.coeffs.items():
            out[I] = out.get(I, 0) + c
        return ExteriorElement(self.n, self.p, out)

    def __mul__(self, s) -> "ExteriorElement":
        return ExteriorElement(self.n, self.p, {I: s * c for I, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1) * other

    def inner(self, other: "ExteriorElement") -> complex:
        """Hermitian pairing, linear in the first slot."""
        if (self.n, self.p) != (other.n, other.p):
            raise ExteriorError("degree mismatch in inner product")
        return sum(c * np.conj(other.coeffs.get(I, 0)) for I, c in self.coeffs.items())

    def norm(self) -> float:
        return float(np.sqrt(abs(self.inner(self))))

    def allclose(self, other, atol=1e-12) -> bool:
        return np.allclose(self.to_vector(), other.to_vector(), atol=atol)


def _merge_sign(I: Sequence[int], J: Sequence[int]) -> int:
    # sign of the permutation sorting the concatenation I+J (both increasing)
    inv = 0
    for a in I:
        for b in J:
            if a > b:
                inv += 1
    return -1 if inv % 2 else 1


def wedge(a: ExteriorElement, b: ExteriorElement) -> ExteriorElement:
    if a.n != b.n:
        raise ExteriorError("dimension mismatch in wedge")
    n, q = a.n, a.p + b.p
    if q > n:
        return ExteriorElement(n, q, {})
    out: dict = {}
    for I, x in a.coeffs.items():
        sI = set(I)
        for J, y in b.coeffs.items():
            if sI.intersection(J):
                continue
            K = tuple(sorted(I + J))
            out[K] = out.get(K, 0) + _merge_sign(I, J) * x * y
    return ExteriorElement(n, q, out)


def vector_form(v) -> ExteriorElement:
    v = np.asarray(v)
    return ExteriorElement(len(v), 1, {(j + 1,): v[j] for j in range(len(v)) if v[j] != 0})


def interior(v, a: ExteriorElement) -> ExteriorElement:
    """Contraction v _| a, complex-linear in v.

    Adjoint relation: <v _| a, b> = <a, conj(v) ^ b>.
    """
    v = np.asarray(v)
    if v.shape != (a.n,):
        raise ExteriorError(f"vector of length {v.shape} does not match n={a.n}")
    if a.p == 0:
        return ExteriorElement(a.n, 0, {})
    out: dict = {}
    for I, c in a.coeffs.items():
        for k, j in enumerate(I):
            if v[j - 1] == 0:
                continue
            J = I[:k] + I[k + 1:]
            out[J] = out.get(J, 0) + (-1) ** k * v[j - 1] * c
    return ExteriorElement(a.n, a.p - 1, out)


def hodge_star(a: ExteriorElement) -> ExteriorElement:
    """Complex-linear Hodge star; a ^ *conj(a) = |a|^2 vol."""
    n = a.n
    full = set(range(1, n + 1))
    out = {}
    for I, c in a.coeffs.items():
        Ic = tuple(sorted(full - set(I)))
        out[Ic] = _merge_sign(I, Ic) * c
    return ExteriorElement(n, n - a.p, out)


@lru_cache(maxsize=None)
def wedge_basis_matrices(n: int, p: int) -> np.ndarray:
    """Array W[j] of shape (n, C(n,p+1), C(n,p)) with W[j] w = e_j ^ w."""
    rows, cols = comb(n, p + 1) if p < n else 0, comb(n, p)
    W = np.zeros((n, rows, cols))
    if p >= n:
        return W
    pos = _position(n, p + 1)
    for c, I in enumerate(basis(n, p)):
        for j in range(1, n + 1):
            if j in I:
                continue
            k = sum(1 for i in I if i < j)
            K = tuple(sorted(I + (j,)))
            W[j - 1, pos[K], c] = (-1) ** k
    W.setflags(write=False)
    return W


@lru_cache(maxsize=None)
def interior_basis_matrices(n: int, p: int) -> np.ndarray:
    """Array I[j] of shape (n, C(n,p-1), C(n,p)) with I[j] w = e_j _| w."""
    if p == 0:
        out = np.zeros((n, 0, 1))
        out.setflags(write=False)
        return out
    # interior by e_j is the transpose of wedge by e_j (real orthonormal basis)
    out = np.ascontiguousarray(np.transpose(wedge_basis_matrices(n, p - 1), (0, 2, 1)))
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Endomorphism:
    """Linear map of C^n, optionally flagged symmetric or skew (verified)."""

    matrix: np.ndarray
    symmetric: bool = False
    skew: bool = False
    tol: float = 1e-12

    def __post_init__(self):
        A = np.asarray(self.matrix)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ExteriorError(f"endomorphism must be square, got shape {A.shape}")
        scale = max(1.0, float(np.abs(A).max(initial=0.0)))
        if self.symmetric and np.abs(A - A.T).max(initial=0.0) > self.tol * scale:
            raise ExteriorError("matrix flagged symmetric is not symmetric")
        if self.skew and np.abs(A + A.T).max(initial=0.0) > self.tol * scale:
            raise ExteriorError("matrix flagged skew is not skew-symmetric")
        object.__setattr__(self, "matrix", A)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def extend(A, p: int) -> np.ndarray:
    """Canonical extension A^[p] = sum_j e_j ^ (A e_j _| .) as a dense matrix.

    Acts on coefficient vectors in the lexicographic basis of Lambda^p.
    A^[0] is the zero map on Lambda^0.
    """
    if isinstance(A, Endomorphism):
        A = A.matrix
    A = np.asarray(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ExteriorError("extend needs a square matrix")
    if n > MAX_DENSE_DIM:
        raise ExteriorError(f"dense extension limited to n <= {MAX_DENSE_DIM}, got {n}")
    if not 0 <= p <= n:
        raise ExteriorError(f"degree {p} out of range for n={n}")
    if p == 0:
        return np.zeros((1, 1), dtype=A.dtype)
    W = wedge_basis_matrices(n, p - 1)    # e_j ^ : Lambda^{p-1} -> Lambda^p
    Ic = interior_basis_matrices(n, p)    # e_k _| : Lambda^p -> Lambda^{p-1}
    # (A e_j) _| = sum_k A[k, j] e_k _|
    return np.einsum("kj,jab,kbc->ac", A, W, Ic)


def sigma_p(eigenvalues, p: int) -> float:
    """p-eigenvalue: sum of the first p entries of an ascending list."""
    ev = np.asarray(eigenvalues, dtype=float)
    if np.any(np.diff(ev) < 0):
        raise ExteriorError("eigenvalues must be sorted ascending")
    if not 0 <= p <= len(ev):
        raise ExteriorError(f"p={p} out of range for {len(ev)} eigenvalues")
    return float(np.sum(ev[:p]))


def extension_bounds(eigenvalues, p: int) -> tuple[float, float]:
    """Lower/upper bounds sigma_p and sigma_n - sigma_{n-p} for the extension."""
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    n = len(ev)
    return sigma_p(ev, p), sigma_p(ev, n) - sigma_p(ev, n - p)


def decomposable(vectors: np.ndarray) -> np.ndarray:
    """Coefficients of v_1 ^ ... ^ v_p in the lexicographic basis.

    `vectors` has shape (..., p, n); the result has shape (..., C(n,p)).
    """
    vectors = np.asarray(vectors)
    p, n = vectors.shape[-2:]
    if p == 0:
        return np.ones(vectors.shape[:-2] + (1,), dtype=vectors.dtype)
    cols = np.array(basis(n, p)) - 1     # (C, p)
    sub = vectors[..., cols]             # (..., p, C, p)
    sub = np.moveaxis(sub, -2, -3)       # (..., C, p, p)
    return np.linalg.det(sub)
