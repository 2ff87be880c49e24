"""Closed-form magnetic spectra: Berger spheres with a Hopf-direction potential, flat tori.

Conventions. On S^3 inside C^2 = R^4 with coordinates (x1, y1, x2, y2), the
left-invariant orthonormal frame is Y2 (Hopf direction), Y3, Y4; the Berger
metric rescales Y2 by epsilon and the potential is alpha = t*Y2 (1-forms and
vectors identified through the round metric). On a torus with periods L the
potential is a constant covector alpha and loop holonomies are alpha_j*L_j.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from itertools import product
from math import comb, pi, sqrt

import numpy as np

MERGE_TOL = 1e-9


@dataclass(frozen=True)
class BergerParams:
    epsilon: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class SpectrumLine:
    k: int
    p: int
    value: float
    multiplicity: int
    model: str = "berger"

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")


@dataclass(frozen=True)
class TorusModel:
    n: int = 2
    periods: tuple = (1.0, 1.0)
    alpha: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(float(x) for x in self.periods))
        object.__setattr__(self, "alpha", tuple(float(x) for x in self.alpha))
        if len(self.periods) != self.n or len(self.alpha) != self.n:
            raise ValueError("periods and alpha must have length n")
        if any(L <= 0 for L in self.periods):
            raise ValueError("torus periods must be positive")


# --- Berger spheres -------------------------------------------------------

def berger_eigenvalue(eps: float, t: float, k: int, p: int) -> float:
    q = 2 * p - k
    return k * (k + 2) + (1.0 / eps**2 - 1.0) * q * q + 2.0 * q * t + eps**2 * t * t


def berger_function_spectrum(params: BergerParams, k_max: int) -> list[SpectrumLine]:
    """One line per (k, p) with 0 <= p <= k <= k_max, multiplicity k+1."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    return [
        SpectrumLine(k, p, berger_eigenvalue(params.epsilon, params.t, k, p), k + 1)
        for k in range(k_max + 1)
        for p in range(k + 1)
    ]


def berger_table(eps: float) -> dict:
    """Eigenvalues of the unperturbed Berger Laplacian written in closed form per level."""
    e2 = 1.0 / eps**2
    return {
        (0, 0): 0.0,
        (1, 0): 2 + e2, (1, 1): 2 + e2,
        (2, 0): 4 + 4 * e2, (2, 1): 8.0, (2, 2): 4 + 4 * e2,
        (3, 0): 6 + 9 * e2, (3, 1): 14 + e2, (3, 2): 14 + e2, (3, 3): 6 + 9 * e2,
    }


def t_max() -> float:
    """Largest t for which the Lichnerowicz-type bound applies on the round S^3."""
    return sqrt(3) / (sqrt(3) + sqrt(8))


def berger_smallest_two(params: BergerParams, k_scan: int = 6) -> tuple[float, float]:
    """Two smallest eigenvalues (with multiplicity) of the round-sphere magnetic Laplacian."""
    if params.epsilon != 1:
        raise NotImplementedError("smallest-two scan is only supported for epsilon = 1")
    vals = []
    for line in berger_function_spectrum(params, k_scan):
        vals.extend([line.value] * line.multiplicity)
    vals.sort()
    return vals[0], vals[1]


def berger_oneform_eigenvalues(params: BergerParams) -> dict:
    """Eigenvalues on the explicit 1-form families du, dv, Y2 and (epsilon=2) Y3/Y4."""
    e, t = params.epsilon, params.t
    out = {
        "du": 2 + 1 / e**2 + 2 * t + e**2 * t * t,
        "dv": 2 + 1 / e**2 - 2 * t + e**2 * t * t,
        "Y2": e**2 * (4 + t * t),
    }
    if e == 2:
        out["Y34"] = 1 + 4 * t * t
    return out


def frame_structure(params: BergerParams) -> dict:
    """Connection coefficients, exterior derivatives and Ricci data of the Berger frame.

    christoffel[(j, k)] = s means nabla_{Y_j} Y_k = s * Y_l with {j,k,l} = {2,3,4}.
    exterior[j] = (c, (a, b)) means dY_j = c * Y_a ^ Y_b.
    """
    e = params.epsilon
    chris = {(j, j): 0.0 for j in (2, 3, 4)}
    chris[(2, 3)] = e - 2 / e
    chris[(2, 4)] = -(e - 2 / e)
    chris[(3, 2)] = e
    chris[(4, 3)] = e
    chris[(3, 4)] = -e
    chris[(4, 2)] = -e
    exterior = {2: (2 * e, (3, 4)), 3: (-2 / e, (2, 4)), 4: (2 / e, (2, 3))}
    ricci = 2 * e**2 if e <= 1 else 4 - 2 * e**2
    return {
        "christoffel": chris,
        "exterior": exterior,
        "codifferential": {2: 0.0, 3: 0.0, 4: 0.0},
        "ricci_lower_bound": ricci,
        "dalpha_sup": 2 * e**2 * abs(params.t),
    }


def _third(j, k):
    return ({2, 3, 4} - {j, k}).pop()


def connection_matrices(params: BergerParams) -> np.ndarray:
    """G[j] with G[j][l, k] the Y_l-coefficient of nabla_{Y_j} Y_k (indices shifted by 2)."""
    chris = frame_structure(params)["christoffel"]
    G = np.zeros((3, 3, 3))
    for (j, k), s in chris.items():
        if j != k:
            G[j - 2, _third(j, k) - 2, k - 2] = s
    return G


def bracket_coefficients(params: BergerParams) -> np.ndarray:
    """c[j, k, m]: [Y_j, Y_k] = sum_m c[j,k,m] Y_m, from torsion-freeness."""
    G = connection_matrices(params)
    c = np.zeros((3, 3, 3))
    for j in range(3):
        for k in range(3):
            c[j, k] = G[j][:, k] - G[k][:, j]
    return c


def ricci_matrix(params: BergerParams) -> np.ndarray:
    """Ricci tensor in the orthonormal frame, from curvature of the frame connection."""
    G = connection_matrices(params)
    c = bracket_coefficients(params)

    def R(j, k):
        return G[j] @ G[k] - G[k] @ G[j] - np.einsum("m,mab->ab", c[j, k], G)

    ric = np.zeros((3, 3))
    for a in range(3):
        for b in range(3):
            # Ric(Y_a, Y_b) = sum_j <R(Y_j, Y_a) Y_b, Y_j>
            ric[a, b] = sum(R(j, a)[j, b] for j in range(3))
    return ric


def frame_operator(params: BergerParams) -> np.ndarray:
    """Matrix of the magnetic Hodge Laplacian on span(Y2, Y3, Y4) (coefficient action)."""
    e, t = params.epsilon, params.t
    diag = 4 / e**2 + t * t * e**2
    off = 2j * e * t * (1 - e + 2 / e)
    F = np.zeros((3, 3), dtype=complex)
    F[0, 0] = e**2 * (4 + t * t)
    F[1, 1] = F[2, 2] = diag
    # column j holds the image of frame element j
    F[2, 1] = off
    F[1, 2] = -off
    return F


_LIE_LABELS = {"v": (1, 0), "u": (1, 1)}


def lie_derivative_action(params: BergerParams, which: str) -> complex:
    """Eigenvalue of the Lie derivative along Y2 on v, u (degree-1 harmonics) or Y2 itself."""
    if params.epsilon != 1:
        raise NotImplementedError("Lie-derivative eigenvalues tabulated for epsilon = 1")
    if which == "Y2":
        return 0j
    if which not in _LIE_LABELS:
        raise ValueError(f"unsupported label {which!r}; expected v, u or Y2")
    k, p = _LIE_LABELS[which]
    return 1j * (2 * p - k)


def hopf_field(x: np.ndarray) -> np.ndarray:
    """Y2 at points x of shape (..., 4), coordinates (x1, y1, x2, y2)."""
    x = np.asarray(x, dtype=float)
    return np.stack([-x[..., 1], x[..., 0], -x[..., 3], x[..., 2]], axis=-1)


def frame_fields(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Left-invariant orthonormal frame (Y2, Y3, Y4) of the round S^3 at points x."""
    x = np.asarray(x, dtype=float)
    x1, y1, x2, y2 = (x[..., i] for i in range(4))
    Y3 = np.stack([-y2, -x2, y1, x1], axis=-1)
    Y4 = np.stack([x2, -y2, -x1, y1], axis=-1)
    return hopf_field(x), Y3, Y4


# --- flat tori ------------------------------------------------------------

def torus_spectrum(model: TorusModel, p: int, count: int) -> list[SpectrumLine]:
    """First `count` Fourier modes |2 pi m / L + alpha|^2, each carrying C(n, p) copies."""
    if not 0 <= p <= model.n:
        raise ValueError(f"degree {p} out of range for n={model.n}")
    if count < 1:
        raise ValueError("count must be >= 1")
    L = np.array(model.periods)
    a = np.array(model.alpha)
    centre = np.round(-a * L / (2 * pi)).astype(int)
    W = 2
    while True:
        ranges = [range(c - W, c + W + 1) for c in centre]
        ms = np.array(list(product(*ranges)))
        vals = np.sum((2 * pi * ms / L + a) ** 2, axis=1)
        order = np.lexsort(tuple(ms[:, j] for j in reversed(range(model.n))) + (vals,))
        vals, ms = vals[order], ms[order]
        # any mode outside the window exceeds this threshold
        outside = np.min((2 * pi * (W + 0.5) / L) ** 2)
        if len(vals) >= count and vals[count - 1] < outside:
            break
        W *= 2
    mult = comb(model.n, p)
    return [SpectrumLine(i, p, float(vals[i]), mult, model="torus") for i in range(count)]


def torus_first_eigenvalue(model: TorusModel) -> float:
    return torus_spectrum(model, 0, 1)[0].value


def expand(lines: list[SpectrumLine]) -> np.ndarray:
    """Eigenvalues listed with multiplicity, ascending."""
    vals = [ln.value for ln in lines for _ in range(ln.multiplicity)]
    return np.sort(np.array(vals))


def merge_lines(lines: list[SpectrumLine], tol: float = MERGE_TOL) -> list[tuple[float, int]]:
    """Group numerically equal values: list of (value, total multiplicity)."""
    out: list[list] = []
    for ln in sorted(lines, key=lambda s: s.value):
        if out and abs(ln.value - out[-1][0]) <= tol * max(1.0, abs(ln.value)):
            out[-1][1] += ln.multiplicity
        else:
            out.append([ln.value, ln.multiplicity])
    return [(v, m) for v, m in out]


# --- serialization --------------------------------------------------------

def lines_to_csv(lines: list[SpectrumLine]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "k", "p", "value", "multiplicity"])
    for ln in lines:
        w.writerow([ln.model, ln.k, ln.p, repr(float(ln.value)), ln.multiplicity])
    return buf.getvalue()


def lines_to_json(lines: list[SpectrumLine]) -> str:
    return json.dumps([asdict(ln) for ln in lines], indent=1)
