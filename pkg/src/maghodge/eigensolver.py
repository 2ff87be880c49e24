"""Smallest eigenpairs of Hermitian pencils A x = lambda M x.

Shift-invert Lanczos (ARPACK) around a shift at or below the bottom of the
spectrum, followed by a Rayleigh-Ritz refinement that returns M-orthonormal
vectors and post-hoc residuals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import MixedOperator

DENSE_CAP = 2000
PIVOT_RATIO = 1e-8


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenRequest:
    k: int = 6
    sigma: float | None = None
    tol: float = 1e-9
    max_iter: int = 5000
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True, eq=False)
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool
    sigma: float
    info: dict = field(default_factory=dict)

    def multiplicities(self, rel_gap: float = 1e-6) -> list[tuple[float, int]]:
        return cluster(self.values, rel_gap)


def cluster(values, rel_gap: float = 1e-6, abs_floor: float = 1e-9) -> list[tuple[float, int]]:
    """Group ascending values whose gaps are below rel_gap * scale."""
    out: list[list] = []
    for v in values:
        if out and abs(v - out[-1][0]) <= max(rel_gap * max(abs(v), abs(out[-1][0])), abs_floor):
            out[-1][1] += 1
        else:
            out.append([float(v), 1])
    return [(v, m) for v, m in out]


def _as_operator_matrix(A):
    if isinstance(A, MixedOperator):
        return A
    if sp.issparse(A):
        return sp.csr_matrix(A, dtype=complex)
    return np.asarray(A, dtype=complex)


def _apply(A, X):
    return A @ X


def _shifted_factor(A, M, sigma: float):
    """Factorization object with .solve(rhs) for (A - sigma M)^{-1} (primal part)."""
    Ms = sp.csc_matrix(M, dtype=complex)
    if isinstance(A, MixedOperator):
        nlow = A.M_low.shape[0]
        Z = sp.csc_matrix((nlow, nlow))
        big = (A.saddle() - sigma * sp.bmat([[Z, None], [None, Ms]])).tocsc().astype(complex)
        lu = _splu_symmetric(big)

        class _F:
            U = lu.U
            perm_r, perm_c = lu.perm_r, lu.perm_c
            offset = nlow        # -M_low contributes nlow negative pivots

            def solve(self, rhs):
                full = np.concatenate([np.zeros(nlow, dtype=complex), rhs])
                return lu.solve(full)[nlow:]
        return _F()
    As = sp.csc_matrix(A, dtype=complex) if sp.issparse(A) else sp.csc_matrix(np.asarray(A, dtype=complex))
    return _splu_symmetric((As - sigma * Ms).tocsc())


def _splu_symmetric(K: sp.csc_matrix):
    # Hermitian quasi-definite matrices factor stably under any symmetric ordering,
    # so diagonal pivots are kept; tiny pivots are caught by the pivot-ratio check
    return spla.splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                     options={"SymmetricMode": True})


def _eigs_below_shift(lu) -> int | None:
    """Sylvester inertia: eigenvalues of the pencil below the shift.

    Valid when no row pivoting occurred (LU = L D L^H up to a symmetric
    permutation); returns None otherwise.
    """
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    neg = int(np.sum(np.real(lu.U.diagonal()) < 0))
    return neg - getattr(lu, "offset", 0)


def _pivot_ratio(lu) -> float:
    d = np.abs(lu.U.diagonal())
    if d.max() == 0:
        return 0.0
    return float(d.min() / d.max())


def _default_shift(A, M) -> float:
    """Negative shift at a small fraction of the mean diagonal Rayleigh quotient."""
    if isinstance(A, MixedOperator):
        diagA = np.real(A.S.diagonal())
    elif sp.issparse(A):
        diagA = np.real(A.diagonal())
    else:
        diagA = np.real(np.diag(A))
    diagM = np.real(sp.csr_matrix(M).diagonal())
    scale = float(np.sum(np.abs(diagA)) / np.sum(diagM))
    return -1e-3 * max(scale, 1e-12)


def _factor(A, M, sigma):
    try:
        lu = _shifted_factor(A, M, sigma)
    except RuntimeError:
        return None
    if _pivot_ratio(lu) < PIVOT_RATIO:
        return None
    return lu


def solve(A, M, req: EigenRequest = EigenRequest()) -> EigenResult:
    A = _as_operator_matrix(A)
    M = sp.csr_matrix(M)
    n = M.shape[0]
    if A.shape != (n, n):
        raise SolverError(f"shape mismatch: A {A.shape} vs M {M.shape}")
    if req.k > n:
        raise SolverError(f"requested {req.k} pairs from a pencil of dimension {n}")
    if req.sigma is None:
        # the unshifted saddle matrix is indefinite in its lower block, so mixed
        # systems start from a negative shift, which makes it quasi-definite
        sigma = 0.0
        lu = None if isinstance(A, MixedOperator) else _factor(A, M, sigma)
        if lu is None:
            sigma = _default_shift(A, M)
            lu = _factor(A, M, sigma)
        # indefinite pencils: walk the shift down until it lies below the spectrum
        step = abs(_default_shift(A, M)) * 1e3
        for _ in range(64):
            below = None if lu is None else _eigs_below_shift(lu)
            if lu is not None and (below is None or below <= 0):
                break
            sigma = min(sigma, 0.0) - step
            step *= 4
            lu = _factor(A, M, sigma)
    else:
        sigma = float(req.sigma)
        lu = _factor(A, M, sigma)
    if lu is None:
        raise SolverError(f"factorization of A - sigma M failed at sigma={sigma:g}; "
                          "try a different (more negative) shift")

    if req.k >= n - 1 or n <= 2 * req.k + 2:
        Ad = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
        w, V = sla.eigh(Ad, M.toarray().astype(complex))
        vals, X, iters, ok = w[: req.k], V[:, : req.k], 0, True
    else:
        rng = np.random.default_rng(req.seed)
        v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ncv = min(n, max(2 * req.k + 1, 20))
        Aop = spla.LinearOperator((n, n), matvec=lambda x: A @ x, dtype=complex)
        count = [0]

        def opinv(x):
            count[0] += 1
            return lu.solve(np.asarray(x, dtype=complex))

        OPinv = spla.LinearOperator((n, n), matvec=opinv, dtype=complex)
        Mop = M.astype(complex)
        ok = True
        try:
            w, X = spla.eigs(Aop, k=req.k, M=Mop, sigma=sigma, OPinv=OPinv, which="LM",
                             v0=v0, ncv=ncv, maxiter=req.max_iter, tol=req.tol * 1e-3)
        except spla.ArpackNoConvergence as exc:
            ok = False
            w, X = exc.eigenvalues, exc.eigenvectors
            if len(w) == 0:
                raise SolverError("eigensolver did not converge") from None
        iters = count[0]
        vals = np.real(w)
    vals, X, res = _rayleigh_ritz(A, M, X)
    passes = 0
    while np.any(res > req.tol) and passes < 3:
        # one block inverse-iteration sweep sharpens the Ritz pairs
        X = np.column_stack([lu.solve(np.asarray(M @ X[:, j], dtype=complex))
                             for j in range(X.shape[1])])
        vals, X, res = _rayleigh_ritz(A, M, X)
        passes += 1
    converged = bool(ok and np.all(res <= req.tol))
    return EigenResult(vals, X, res, iters, converged, sigma,
                       info={"dimension": n, "k": req.k, "refinement_passes": passes})


def _rayleigh_ritz(A, M, X):
    """Project onto span(X): ascending values, M-orthonormal vectors, residual norms."""
    Ar = X.conj().T @ _apply(A, X)
    Mr = X.conj().T @ (M @ X)
    Ar = 0.5 * (Ar + Ar.conj().T)
    Mr = 0.5 * (Mr + Mr.conj().T)
    try:
        w, Y = sla.eigh(Ar, Mr)
    except np.linalg.LinAlgError:
        raise SolverError("Ritz basis is numerically dependent") from None
    X = X @ Y
    # fix the phase of each vector for reproducible exports
    for j in range(X.shape[1]):
        i = int(np.argmax(np.abs(X[:, j])))
        X[:, j] *= np.abs(X[i, j]) / X[i, j]
    AX = _apply(A, X)
    MX = M @ X
    res = np.linalg.norm(AX - MX * w, axis=0) / np.linalg.norm(MX, axis=0)
    return w, X, res


def dense_oracle(A, M) -> np.ndarray:
    """Full ascending spectrum of a small Hermitian pencil (test oracle)."""
    A = _as_operator_matrix(A)
    n = A.shape[0]
    if n > DENSE_CAP:
        raise SolverError(f"dense oracle limited to dimension {DENSE_CAP}, got {n}")
    Ad = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M)
    return sla.eigh(0.5 * (Ad + Ad.conj().T), 0.5 * (Md + Md.conj().T).astype(complex),
                    eigvals_only=True)
