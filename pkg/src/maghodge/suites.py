"""Verification suites shared by the command line and the acceptance tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np

from . import analytic as an
from . import bounds as bd
from .assembly import (assemble_lagrange_vector, assemble_phase_laplacian, constant_field,
                       face_fluxes, holonomy, sample_potential, uniform_magnetic_field)
from .eigensolver import EigenRequest, solve
from .mesh import SimplicialComplex, generate_flat_torus, generate_square

# discretization allowance C * h^2 * (1 + |lambda|), declared before any mesh run
H2_ALLOWANCE = 0.1
SHIGEKAWA_GRID = (0.0, pi / 2, pi, 3 * pi / 2, 2 * pi)
ZERO_TOL = 1e-9
GAP_FLOOR = 1e-3


def allowance(h: float, lam: float, C: float = H2_ALLOWANCE) -> float:
    return C * h * h * (1 + abs(lam))


def fit_order(hs, errs) -> float:
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(np.asarray(hs, float)), np.log(np.asarray(errs, float)), 1)[0])


@dataclass
class SuiteResult:
    name: str
    reports: list
    rows: list = field(default_factory=list)
    columns: list = field(default_factory=list)
    svg: str | None = None
    mesh_hash: str | None = None
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.verdict != "violated" for r in self.reports)


def suite_figure1(n_points: int = 100) -> SuiteResult:
    rows = bd.figure1_dataset(bd.figure1_grid(n_points), tol=1e-12)
    reports = []
    for r in rows:
        inp = bd.LichnerowiczInput(2.0, 2 * r["t"], 3)
        reports.append(bd.lichnerowicz_report(inp, r["lambda1"], r["lambda2"], tol=1e-12))
    cols = ["t", "lambda1", "a_minus", "a_plus", "lambda2", "status"]
    return SuiteResult("figure1", reports, rows, cols, svg=bd.figure1_svg(rows),
                       summary={"t_max": an.t_max(), "points": n_points})


def suite_gallot_meyer(n_t: int = 20) -> SuiteResult:
    reports, rows = [], []
    for t in np.linspace(0.0, 0.4, n_t):
        obs = bd.s3_oneform_first(float(t))
        for p in (1, 2):
            K = bd.sphere_killing_K(3, p, float(t))
            rep = bd.gallot_meyer_report(K, 3, p, obs)
            reports.append(rep)
            rows.append({"t": float(t), "p": p, "K": K, "bound": rep.bound_value, "observed": obs,
                         "verdict": rep.verdict})
    return SuiteResult("gallot-meyer", reports, rows, ["t", "p", "K", "bound", "observed", "verdict"])


def suite_cesis() -> SuiteResult:
    reports, rows = [], []
    for t in (0.1, 0.2, 0.3):
        b = bd.cesis_forms_bound(**bd.s3_cesis_inputs(t))
        lam1 = an.berger_smallest_two(an.BergerParams(1.0, t))[0]
        rep = bd.compare("cesis-s3-functions", {"t": t}, b, lam1, "upper", 1e-12,
                         {"sharp": abs(b - lam1) <= 1e-12})
        reports.append(rep)
        rows.append({"case": f"s3 t={t}", "bound": b, "observed": lam1, "verdict": rep.verdict})
    model = an.TorusModel(2, (1.0, 1.0), (pi, 0.0))
    obs = an.torus_first_eigenvalue(model)
    rep = bd.torus_cesis_report(model.alpha, model.periods, obs)
    reports.append(rep)
    rows.append({"case": "torus alpha=(pi,0)", "bound": rep.bound_value, "observed": obs,
                 "verdict": rep.verdict})
    return SuiteResult("cesis", reports, rows, ["case", "bound", "observed", "verdict"])


def suite_diamagnetic(n_t: int = 99) -> SuiteResult:
    beta = an.lie_derivative_action(an.BergerParams(1.0, 0.0), "v").imag
    pred = bd.diamagnetic_predictor(beta, +1)
    reports, rows = [], []
    for t in np.linspace(0, 1, n_t + 2)[1:-1]:
        lam = an.berger_oneform_eigenvalues(an.BergerParams(1.0, float(t)))["dv"]
        # the diamagnetic inequality would demand lam >= 3; the report records its failure
        rep = bd.compare("diamagnetic-failure", {"t": float(t)}, 3.0, lam, "upper", 0.0)
        strict = lam < 3.0
        reports.append(bd.BoundReport(rep.bound_name, rep.inputs, 3.0, lam,
                                      "holds" if strict else "violated", 3.0 - lam, 0.0, "upper",
                                      {"strict": strict}))
        rows.append({"t": float(t), "dv": lam, "unperturbed": 3.0, "below": strict})
    verdict = "fails for 1-forms" if pred.fails and all(r["below"] for r in rows) else "holds"
    return SuiteResult("diamagnetic", reports, rows, ["t", "dv", "unperturbed", "below"],
                       summary={"beta": beta, "linear_slope": pred.linear_slope,
                                "witness": pred.witness, "verdict": verdict})


def shigekawa_torus(mesh: SimplicialComplex, grid=SHIGEKAWA_GRID, weights: str = "cotan"):
    """Phase-Laplacian first eigenvalue and flux verdict for constant potentials on a grid."""
    out = []
    for a1 in grid:
        for a2 in grid:
            pot = sample_potential(constant_field((a1, a2)), mesh, 3, f"torus-constant:{a1},{a2}")
            sys_ = assemble_phase_laplacian(mesh, pot, weights)
            lam = solve(sys_.stiffness, sys_.mass, EigenRequest(k=1, seed=0)).values[0]
            flux = face_fluxes(pot, mesh)
            closed = max(bd.flux_defect(f) for f in flux)
            hol = [holonomy(pot, mesh, loop) for loop in mesh.loop_basis.loops]
            verdict = bd.shigekawa_flux_test(hol, closed, 1e-9)
            out.append({"alpha1": a1, "alpha2": a2, "lambda1": float(lam),
                        "gaugeable": verdict.gaugeable, "holonomies": hol})
    return out


def suite_shigekawa(mesh: SimplicialComplex | None = None) -> SuiteResult:
    mesh = mesh or generate_flat_torus(24)
    rows = shigekawa_torus(mesh)
    reports = []
    for r in rows:
        zero = r["lambda1"] <= ZERO_TOL
        consistent = zero == r["gaugeable"] and (zero or r["lambda1"] >= GAP_FLOOR)
        reports.append(bd.BoundReport("shigekawa-dichotomy", {"alpha": [r["alpha1"], r["alpha2"]]},
                                      0.0 if r["gaugeable"] else GAP_FLOOR, r["lambda1"],
                                      "holds" if consistent else "violated",
                                      None, ZERO_TOL, "dichotomy",
                                      {"gaugeable": r["gaugeable"]}))
    cols = ["alpha1", "alpha2", "lambda1", "gaugeable"]
    return SuiteResult("shigekawa", reports, rows, cols, mesh_hash=mesh.mesh_hash)


def square_gap_spectra(mesh: SimplicialComplex, B: float = 1.0, quad_order: int = 4, k: int = 2):
    pot = sample_potential(uniform_magnetic_field(B), mesh, 3, f"square-constant-field:{B}")
    out = {}
    for p in range(mesh.dim + 1):
        s = assemble_lagrange_vector(mesh, pot, p, quad_order)
        out[p] = solve(s.stiffness, s.mass, EigenRequest(k=k))
    return out


def suite_gap(mesh: SimplicialComplex | None = None, B: float = 1.0) -> SuiteResult:
    mesh = mesh or generate_square(32, dirichlet=True)
    if not mesh.dirichlet:
        mesh = mesh.with_dirichlet(True)
    res = square_gap_spectra(mesh, B)
    lam0 = float(res[0].values[0])
    reports, rows = [], []
    h = mesh.h_max
    for p in range(1, mesh.dim + 1):
        prev, cur = float(res[p - 1].values[0]), float(res[p].values[0])
        tol = float(allowance(h, prev) + res[p].residuals[0] + res[p - 1].residuals[0])
        rep = bd.gap_corollary_check(bd.GapInput("euclidean", mesh.dim, p, abs(B), prev),
                                     cur, lam0, tol)
        reports.append(rep)
        rows.append({"p": p, "lambda_prev": prev, "lambda": cur, "bound": rep.bound_value,
                     "margin": rep.margin, "allowance": tol, "verdict": rep.verdict})
    return SuiteResult("gap", reports, rows,
                       ["p", "lambda_prev", "lambda", "bound", "margin", "allowance", "verdict"],
                       mesh_hash=mesh.mesh_hash)


SUITES = {
    "figure1": suite_figure1,
    "gallot-meyer": suite_gallot_meyer,
    "cesis": suite_cesis,
    "shigekawa": suite_shigekawa,
    "diamagnetic": suite_diamagnetic,
    "gap": suite_gap,
}
