"""Eigenvalue bounds for magnetic Laplacians evaluated as report records."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from itertools import product
from math import comb, isfinite, pi, sqrt

import numpy as np

from .analytic import BergerParams, berger_smallest_two, t_max
from .exterior import sigma_p

ANALYTIC_TOL = 1e-9


class NotApplicable(ValueError):
    """Raised when a bound's hypotheses fail; no number is produced."""


@dataclass(frozen=True)
class BoundReport:
    bound_name: str
    inputs: dict
    bound_value: float | None
    observed_value: float | None
    verdict: str                 # holds | violated | not-applicable
    margin: float | None
    tolerance: float = ANALYTIC_TOL
    kind: str = "lower"          # observed >= bound ("lower") or observed <= bound ("upper")
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_dict(self) -> dict:
        return asdict(self)


def compare(name: str, inputs: dict, bound: float, observed: float | None, kind: str = "lower",
            tol: float = ANALYTIC_TOL, details: dict | None = None) -> BoundReport:
    if observed is None:
        return BoundReport(name, inputs, bound, None, "holds", None, tol, kind, details or {})
    margin = observed - bound if kind == "lower" else bound - observed
    verdict = "holds" if margin >= -tol else "violated"
    return BoundReport(name, inputs, float(bound), float(observed), verdict, float(margin), tol,
                       kind, details or {})


def not_applicable(name: str, inputs: dict, reason: str) -> BoundReport:
    return BoundReport(name, inputs, None, None, "not-applicable", None, ANALYTIC_TOL, "lower",
                       {"reason": reason})


# --- Lichnerowicz-type two-sided bound -----------------------------------

@dataclass(frozen=True)
class LichnerowiczInput:
    C: float
    A: float
    n: int

    def __post_init__(self):
        if not self.C > 0 or self.A < 0 or self.n < 2:
            raise ValueError("need C > 0, A >= 0 and n >= 2")

    @property
    def admissible_limit(self) -> float:
        return self.C / (1 + 2 * sqrt((self.n - 1) / self.n))

    def admissible(self, rtol: float = 1e-12) -> bool:
        return self.A <= self.admissible_limit * (1 + rtol)


def lichnerowicz_a(inp: LichnerowiczInput) -> tuple[float, float]:
    if not inp.admissible():
        raise NotApplicable(f"A={inp.A} exceeds the admissible limit {inp.admissible_limit}")
    C, A, n = inp.C, inp.A, inp.n
    disc = (C - A) ** 2 - 4 * ((n - 1) / n) * A * A
    # at the admissibility boundary rounding can push the discriminant below zero
    disc = max(disc, 0.0)
    r = sqrt(disc)
    f = n / (2 * (n - 1))
    return f * ((C - A) - r), f * ((C - A) + r)


def lichnerowicz_report(inp: LichnerowiczInput, lam1: float, lam2: float,
                        tol: float = ANALYTIC_TOL) -> BoundReport:
    name = "lichnerowicz-chain"
    try:
        am, ap = lichnerowicz_a(inp)
    except NotApplicable as exc:
        return not_applicable(name, asdict(inp), str(exc))
    chain = [0.0, lam1, am, ap, lam2]
    gaps = [b - a for a, b in zip(chain, chain[1:])]
    margin = min(gaps)
    return BoundReport(name, asdict(inp), am, lam1, "holds" if margin >= -tol else "violated",
                       margin, tol, "chain", {"a_minus": am, "a_plus": ap, "lambda2": lam2})


def figure1_dataset(t_grid, tol: float = 1e-12) -> list[dict]:
    """Rows t, lambda1, a_minus, a_plus, lambda2 for the round S^3 with alpha = t*Y2."""
    rows = []
    tm = t_max()
    for t in t_grid:
        t = float(t)
        lam1, lam2 = berger_smallest_two(BergerParams(1.0, t))
        inp = LichnerowiczInput(2.0, 2 * t, 3)
        if t < 0 or t > tm * (1 + 1e-12):
            rows.append({"t": t, "lambda1": lam1, "a_minus": None, "a_plus": None,
                         "lambda2": lam2, "status": "not-applicable"})
            continue
        rep = lichnerowicz_report(inp, lam1, lam2, tol)
        rows.append({"t": t, "lambda1": lam1, "a_minus": rep.details["a_minus"],
                     "a_plus": rep.details["a_plus"], "lambda2": lam2, "status": rep.verdict,
                     "margin": rep.margin})
    return rows


def figure1_grid(n_points: int = 100) -> np.ndarray:
    return np.linspace(0.0, t_max(), n_points)


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else (repr(r[c]) if isinstance(r[c], float) else r[c])
                    for c in columns])
    return buf.getvalue()


def figure1_svg(rows: list[dict]) -> str:
    from .svg import line_chart

    ok = [r for r in rows if r["status"] != "not-applicable"]
    t = [r["t"] for r in ok]
    series = [
        ("lambda1 = t^2", t, [r["lambda1"] for r in ok], "#c0392b", False),
        ("lambda2 = 3-2t+t^2", t, [r["lambda2"] for r in ok], "#c0392b", True),
        ("a-", t, [r["a_minus"] for r in ok], "#2e5fa8", False),
        ("a+", t, [r["a_plus"] for r in ok], "#2e5fa8", True),
    ]
    return line_chart(series, title=f"S^3, alpha = t Y2: eigenvalues and bounds, "
                                    f"t in [0, {t_max():.4f}]",
                      xlabel="t", ylabel="eigenvalue")


# --- Gallot-Meyer type lower bound ---------------------------------------

def gallot_meyer_bound(K: float, n: int, p: int) -> float:
    if not 1 <= p <= n - 1:
        raise NotApplicable(f"degree {p} outside 1..{n - 1}")
    if not K > 0:
        raise NotApplicable(f"curvature term K={K} is not positive")
    C = max(p + 1, n - p + 1)
    return C / (C - 1) * K


def gallot_meyer_report(K: float, n: int, p: int, observed: float,
                        tol: float = ANALYTIC_TOL) -> BoundReport:
    inputs = {"K": K, "n": n, "p": p}
    try:
        b = gallot_meyer_bound(K, n, p)
    except NotApplicable as exc:
        return not_applicable("gallot-meyer", inputs, str(exc))
    return compare("gallot-meyer", inputs, b, observed, "lower", tol)


def hopf_profile(n: int) -> np.ndarray:
    """Eigenvalues of i*A for the Hopf Killing field on S^n (n odd), ascending."""
    h = (n - 1) // 2
    return np.array([-2.0] * h + [0.0] + [2.0] * h)


def sphere_killing_K(n: int, p: int, t: float) -> float:
    """Lower bound of the magnetic Bochner term on S^n for alpha = t * (Hopf field)."""
    if n % 2 == 0:
        raise NotApplicable("the Hopf Killing field needs odd n")
    if not 1 <= p <= n - 1:
        raise NotApplicable(f"degree {p} outside 1..{n - 1}")
    closed = p * (n - p - 2 * t) if p <= (n - 1) / 2 else (p - 2 * t) * (n - p)
    eta = hopf_profile(n)
    via_sigma = p * (n - p) - t * (sigma_p(eta, n) - sigma_p(eta, n - p))
    if abs(closed - via_sigma) > 1e-12 * max(1.0, abs(closed)):
        raise AssertionError(f"closed form {closed} disagrees with p-eigenvalue form {via_sigma}")
    return closed


def s3_oneform_first(t: float) -> float:
    """First eigenvalue on 1-forms (equivalently 2-forms) of the round S^3, alpha = t*Y2.

    Minimum over the exact families d(u), d(v) and the invariant co-exact frame block;
    valid for |t| <= 1/2 where the exact branch is lowest.
    """
    from .analytic import berger_oneform_eigenvalues, frame_operator

    p = BergerParams(1.0, t)
    fam = berger_oneform_eigenvalues(p)
    return float(min(fam["du"], fam["dv"], np.linalg.eigvalsh(frame_operator(p)).min()))


# --- upper bound through distance to the integral lattice ----------------

def cesis_forms_bound(lam_base: float, d2_sq: float, dinf_sq: float, ratio_inf_over_2: float) -> float:
    if min(lam_base, d2_sq, dinf_sq, ratio_inf_over_2) < 0:
        raise ValueError("all inputs must be nonnegative")
    return lam_base + min(dinf_sq, ratio_inf_over_2 * d2_sq)


def s3_cesis_inputs(t: float, lambda_coexact: float = 4.0) -> dict:
    """Inputs for functions on the round S^3 with alpha = t*Y2 (no harmonic 1-forms).

    The L2 distance to the lattice is bounded by |d alpha|_2^2 / lambda'' with
    |d alpha| = 2|t| pointwise; the constant function gives the sup/L2 ratio 1/vol.
    """
    vol = 2 * pi**2
    dalpha_l2_sq = (2 * t) ** 2 * vol
    return {"lam_base": 0.0, "d2_sq": dalpha_l2_sq / lambda_coexact, "dinf_sq": t * t,
            "ratio_inf_over_2": 1.0 / vol}


def lattice_distance_sq(alpha, periods, window: int = 8) -> tuple[float, tuple]:
    """min over m in Z^n, |m_j| <= window, of |alpha - 2 pi m / L|^2 (pointwise, constant forms)."""
    a = np.asarray(alpha, dtype=float)
    L = np.asarray(periods, dtype=float)
    best, arg = np.inf, None
    for m in product(range(-window, window + 1), repeat=len(a)):
        v = float(np.sum((a - 2 * pi * np.array(m) / L) ** 2))
        if v < best:
            best, arg = v, m
    return best, arg


def torus_cesis_report(alpha, periods, observed: float, tol: float = ANALYTIC_TOL) -> BoundReport:
    L = np.asarray(periods, dtype=float)
    vol = float(np.prod(L))
    d_pt, m = lattice_distance_sq(alpha, periods)
    d_pt2, _ = lattice_distance_sq(alpha, periods, window=16)
    if d_pt2 < d_pt:
        raise AssertionError("lattice window too small")
    # constant alpha: the L2 distance squared is vol * pointwise; constants give ratio 1/vol
    b = cesis_forms_bound(0.0, vol * d_pt, d_pt, 1.0 / vol)
    return compare("cesis-torus", {"alpha": list(map(float, alpha)), "periods": list(map(float, L))},
                   b, observed, "upper", tol, {"nearest_lattice_vector": list(m)})


# --- gauge criterion, diamagnetism, gap corollaries -----------------------

@dataclass(frozen=True)
class FluxVerdict:
    gaugeable: bool
    worst_defect: float
    closedness_residual: float

    @property
    def predicts_zero_mode(self) -> bool:
        return self.gaugeable


def flux_defect(h: float) -> float:
    """Distance of a holonomy to 2 pi Z."""
    return abs(h - 2 * pi * round(h / (2 * pi)))


def shigekawa_flux_test(loop_holonomies, closedness_residual: float, tol: float = 1e-9) -> FluxVerdict:
    defects = [flux_defect(float(h)) for h in loop_holonomies]
    worst = max(defects, default=0.0)
    return FluxVerdict(bool(closedness_residual <= tol and worst <= tol), worst,
                       float(closedness_residual))


@dataclass(frozen=True)
class DiamagneticVerdict:
    fails: bool
    linear_slope: float
    witness: str


def diamagnetic_predictor(beta: float, t_sign: int = 1) -> DiamagneticVerdict:
    """First-order behaviour lambda(t) ~ lambda(0) + 2 beta t for an eigenform with L w = i beta w.

    Any beta != 0 breaks the diamagnetic inequality: either the eigenform itself
    (when t_sign * beta < 0) or its complex conjugate lowers the eigenvalue.
    """
    if beta == 0:
        return DiamagneticVerdict(False, 0.0, "none")
    witness = "eigenform" if t_sign * beta < 0 else "conjugate"
    return DiamagneticVerdict(True, 2.0 * beta, witness)


@dataclass(frozen=True)
class GapInput:
    domain_kind: str
    n: int
    p: int
    dalpha_inf: float
    lam_prev: float

    def __post_init__(self):
        if self.domain_kind not in ("euclidean", "sphere"):
            raise ValueError(f"unknown domain kind {self.domain_kind!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.dalpha_inf < 0:
            raise ValueError("sup norm of d alpha must be nonnegative")


def gap_corollary_check(inp: GapInput, lam_curr: float, lam0: float | None = None,
                        tol: float = ANALYTIC_TOL) -> BoundReport:
    if inp.domain_kind == "euclidean":
        bound = inp.lam_prev - inp.dalpha_inf
        iterated = None if lam0 is None else lam0 - inp.p * inp.dalpha_inf
    else:
        bound = inp.lam_prev + inp.n - 2 * inp.p - inp.dalpha_inf
        iterated = None if lam0 is None else lam0 + inp.p * (inp.n - inp.p - 1 - inp.dalpha_inf)
    rep = compare(f"gap-{inp.domain_kind}", asdict(inp), bound, lam_curr, "lower", tol)
    details = {}
    if iterated is not None:
        details = {"iterated_bound": iterated, "iterated_margin": lam_curr - iterated,
                   "iterated_holds": lam_curr - iterated >= -tol}
        if not details["iterated_holds"]:
            rep = BoundReport(rep.bound_name, rep.inputs, rep.bound_value, rep.observed_value,
                              "violated", rep.margin, tol, "lower", details)
            return rep
    return BoundReport(rep.bound_name, rep.inputs, rep.bound_value, rep.observed_value,
                       rep.verdict, rep.margin, tol, "lower", details)


# --- serialization --------------------------------------------------------

def _clean(o):
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, (np.floating, float)):
        return float(o) if isfinite(o) else str(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def reports_to_json(reports: list[BoundReport]) -> str:
    return json.dumps([_clean(r.to_dict()) for r in reports], indent=1)


def reports_to_csv(reports: list[BoundReport]) -> str:
    cols = ["bound_name", "bound_value", "observed_value", "verdict", "margin", "tolerance", "kind"]
    return rows_to_csv([{c: getattr(r, c) for c in cols} for r in reports], cols)
