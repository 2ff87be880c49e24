import json
import xml.etree.ElementTree as ET
from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maghodge import analytic as an
from maghodge import bounds as bd
from maghodge.exterior import sigma_p


def quadratic_roots(C, A, n):
    """a_- and a_+ are the roots of ((n-1)/n) a^2 - (C-A) a + A^2."""
    r = np.sort(np.roots([(n - 1) / n, -(C - A), A * A]).real)
    return r[0], r[1]


# --- Lichnerowicz ---------------------------------------------------------------

def test_lichnerowicz_examples():
    assert bd.lichnerowicz_a(bd.LichnerowiczInput(2, 0, 3)) == (0.0, 3.0)
    am, ap = bd.lichnerowicz_a(bd.LichnerowiczInput(2, 0.4, 3))
    # frozen from the quadratic-root oracle
    assert am == pytest.approx(0.10455488498966045, abs=1e-14)
    assert ap == pytest.approx(2.2954451150103395, abs=1e-14)
    ra, rb = quadratic_roots(2, 0.4, 3)
    assert (am, ap) == pytest.approx((ra, rb), abs=1e-12)


def test_t_max_is_admissibility_boundary():
    tm = an.t_max()
    inp = bd.LichnerowiczInput(2, 2 * tm, 3)
    assert inp.admissible()
    am, ap = bd.lichnerowicz_a(inp)
    assert am == pytest.approx(ap, abs=1e-6)
    assert not bd.LichnerowiczInput(2, 2 * tm * (1 + 1e-9), 3).admissible()
    rep = bd.lichnerowicz_report(bd.LichnerowiczInput(2, 1.0, 3), 0.25, 2.25)
    assert rep.verdict == "not-applicable" and rep.bound_value is None
    with pytest.raises(bd.NotApplicable):
        bd.lichnerowicz_a(bd.LichnerowiczInput(2, 1.0, 3))


@given(st.floats(0.1, 10), st.floats(0, 1), st.integers(2, 8))
def test_lichnerowicz_ordering(C, frac, n):
    inp = bd.LichnerowiczInput(C, frac * C / (1 + 2 * sqrt((n - 1) / n)), n)
    am, ap = bd.lichnerowicz_a(inp)
    assert am <= ap
    ra, rb = quadratic_roots(C, inp.A, n)
    assert am == pytest.approx(ra, abs=1e-6 * C) and ap == pytest.approx(rb, abs=1e-6 * C)


def test_figure1_dataset_chain():
    rows = bd.figure1_dataset(bd.figure1_grid(100))
    assert len(rows) == 100
    for r in rows:
        chain = [0, r["lambda1"], r["a_minus"], r["a_plus"], r["lambda2"]]
        assert all(b - a >= -1e-12 for a, b in zip(chain, chain[1:]))
        assert r["status"] == "holds"
    first, last = rows[0], rows[-1]
    assert (first["lambda1"], first["a_minus"], first["a_plus"], first["lambda2"]) == (0, 0, 3, 3)
    assert last["a_minus"] == pytest.approx(last["a_plus"], abs=1e-6)
    beyond = bd.figure1_dataset([0.39])
    assert beyond[0]["status"] == "not-applicable" and beyond[0]["a_minus"] is None


def test_figure1_svg_self_contained():
    svg = bd.figure1_svg(bd.figure1_dataset(bd.figure1_grid(100)))
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    lines = root.findall(f"{ns}polyline")
    labels = {pl.get("data-label"): pl.get("stroke") for pl in lines}
    assert len(lines) == 4
    reds = [l for l, c in labels.items() if c == "#c0392b"]
    blues = [l for l, c in labels.items() if c == "#2e5fa8"]
    assert len(reds) == 2 and len(blues) == 2
    assert "href" not in svg and "<image" not in svg
    texts = [t.text for t in root.iter(f"{ns}text")]
    assert "t" in texts and "0.3" in texts


# --- Gallot-Meyer and the sphere Killing term ---------------------------------------

def test_gallot_meyer_examples():
    assert bd.gallot_meyer_bound(2, 3, 1) == 3
    rep = bd.gallot_meyer_report(bd.sphere_killing_K(3, 1, 0.0), 3, 1, 3.0)
    assert rep.holds and rep.margin == 0
    K = bd.sphere_killing_K(3, 1, 0.25)
    assert K == 1.5 and bd.gallot_meyer_bound(K, 3, 1) == 2.25
    assert bd.gallot_meyer_report(K, 3, 1, 3 - 0.5 + 0.0625).holds
    assert bd.gallot_meyer_bound(1e-12, 3, 1) == pytest.approx(1.5e-12)
    assert bd.gallot_meyer_report(0.0, 3, 1, 1.0).verdict == "not-applicable"


def test_sphere_killing_examples():
    assert bd.sphere_killing_K(5, 2, 0.5) == 4
    assert bd.sphere_killing_K(3, 2, 0.25) == 1.5
    assert bd.sphere_killing_K(5, 2, 0.0) == 6
    with pytest.raises(bd.NotApplicable):
        bd.sphere_killing_K(4, 1, 0.1)


@given(st.sampled_from([3, 5, 7]), st.integers(1, 6), st.floats(-1, 1))
def test_killing_matches_p_eigenvalues(n, p, t):
    if p >= n:
        return
    eta = np.array([-2.0] * ((n - 1) // 2) + [0.0] + [2.0] * ((n - 1) // 2))
    expected = p * (n - p) - t * (sigma_p(eta, n) - sigma_p(eta, n - p))
    assert bd.sphere_killing_K(n, p, t) == pytest.approx(expected, abs=1e-12)
    assert sigma_p(eta, min(p, (n - 1) // 2)) == -2 * min(p, (n - 1) // 2)


@pytest.mark.parametrize("t", np.linspace(0, 0.4, 20))
def test_gallot_meyer_below_s3_spectrum(t):
    obs = bd.s3_oneform_first(float(t))
    assert obs == pytest.approx(3 - 2 * t + t * t, abs=1e-12)
    for p in (1, 2):
        assert bd.gallot_meyer_report(bd.sphere_killing_K(3, p, float(t)), 3, p, obs).holds


# --- CESIS ------------------------------------------------------------------------

@pytest.mark.parametrize("t", [0.1, 0.2, 0.3])
def test_cesis_sharp_on_s3(t):
    b = bd.cesis_forms_bound(**bd.s3_cesis_inputs(t))
    assert abs(b - t * t) <= 1e-12
    assert abs(b - an.berger_smallest_two(an.BergerParams(1.0, t))[0]) <= 1e-12


def test_cesis_lattice_point_and_torus():
    assert bd.cesis_forms_bound(2.5, 0.0, 0.0, 7.0) == 2.5
    obs = an.torus_first_eigenvalue(an.TorusModel(2, (1, 1), (pi, 0)))
    rep = bd.torus_cesis_report((pi, 0), (1, 1), obs)
    assert rep.holds and rep.bound_value == pytest.approx(pi**2)
    d, m = bd.lattice_distance_sq((pi, 0), (1, 1), 4)
    assert d == pytest.approx(pi**2)
    with pytest.raises(ValueError):
        bd.cesis_forms_bound(-1, 0, 0, 0)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_torus_cesis_bound_dominates(a1, a2):
    obs = an.torus_first_eigenvalue(an.TorusModel(2, (1, 1), (a1, a2)))
    assert bd.torus_cesis_report((a1, a2), (1, 1), obs).holds


# --- Shigekawa ---------------------------------------------------------------------

def test_shigekawa_examples():
    assert bd.shigekawa_flux_test([2 * pi, 4 * pi], 0.0).gaugeable
    v = bd.shigekawa_flux_test([pi, 0.0], 0.0)
    assert not v.gaugeable and not v.predicts_zero_mode
    # S^3: no loops, but d alpha = 2t != 0
    assert not bd.shigekawa_flux_test([], 2 * 0.2).gaugeable
    assert bd.shigekawa_flux_test([], 0.0).gaugeable


@given(st.lists(st.tuples(st.integers(-6, 6), st.integers(1, 5)), min_size=2, max_size=2))
def test_shigekawa_agrees_with_torus_zero_mode(fracs):
    alpha = tuple(2 * pi * a / q for a, q in fracs)
    verdict = bd.shigekawa_flux_test(list(alpha), 0.0, 1e-9)
    lam = an.torus_first_eigenvalue(an.TorusModel(2, (1, 1), alpha))
    assert verdict.gaugeable == (lam <= 1e-18)


# --- diamagnetic and gap ------------------------------------------------------------

def test_diamagnetic_predictor():
    beta = an.lie_derivative_action(an.BergerParams(1.0, 0.0), "v").imag
    v = bd.diamagnetic_predictor(beta, +1)
    assert v.fails and v.linear_slope == -2 and v.witness == "eigenform"
    assert bd.diamagnetic_predictor(1.0, +1).witness == "conjugate"
    assert not bd.diamagnetic_predictor(0.0).fails
    # first-order slope matches the analytic family 3 - 2t + t^2
    t = 1e-6
    dv = an.berger_oneform_eigenvalues(an.BergerParams(1.0, t))["dv"]
    assert (dv - 3) / t == pytest.approx(v.linear_slope, abs=1e-5)


def test_gap_corollary():
    r = bd.gap_corollary_check(bd.GapInput("euclidean", 2, 1, 0.0, 5.0), 5.0, 5.0)
    assert r.holds and r.details["iterated_holds"]
    r = bd.gap_corollary_check(bd.GapInput("euclidean", 2, 1, 1.0, 5.0), 3.9, 5.0)
    assert r.verdict == "violated"
    r = bd.gap_corollary_check(bd.GapInput("sphere", 3, 1, 0.0, 3.0), 4.0)
    assert r.bound_value == 4.0
    with pytest.raises(ValueError):
        bd.GapInput("euclidean", 2, 0, 0.0, 1.0)


def test_report_serialization():
    reps = [bd.gallot_meyer_report(2, 3, 1, 3.0), bd.not_applicable("x", {}, "why")]
    data = json.loads(bd.reports_to_json(reps))
    assert data[0]["verdict"] == "holds" and data[1]["verdict"] == "not-applicable"
    csv = bd.reports_to_csv(reps).splitlines()
    assert csv[0].startswith("bound_name,") and len(csv) == 3
