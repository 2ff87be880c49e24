"""Mesh spectra against continuum oracles: torus, icosphere and S^3.

Run:  python3 notebooks/02_discrete_convergence.py
"""
from math import pi

from maghodge import analytic as an
from maghodge.assembly import (assemble_whitney_0form, assemble_whitney_mixed, constant_field,
                               hopf_potential, sample_potential)
from maghodge.eigensolver import EigenRequest, solve
from maghodge.mesh import generate_flat_torus, generate_icosphere, generate_s3_mesh
from maghodge.suites import fit_order


def first(system, k=3):
    return solve(system.stiffness, system.mass, EigenRequest(k=k)).values


# %% Flat torus, constant potential (pi, 0): the first eigenvalue pi^2 is double.
target = an.torus_first_eigenvalue(an.TorusModel(2, (1.0, 1.0), (pi, 0.0)))
hs, errs = [], []
for n in (8, 16, 32):
    m = generate_flat_torus(n)
    vals = first(assemble_whitney_0form(m, sample_potential(constant_field((pi, 0.0)), m, 3), 3))
    hs.append(m.h_max)
    errs.append(abs(vals[:2] - target).max() / target)
    print(f"torus n={n:3d}: {vals[:2]}  rel err {errs[-1]:.2e}")
print(f"fitted order {fit_order(hs, errs):.2f}")

# %% Unit sphere, no field: eigenvalue 2 with multiplicity 3.
m = generate_icosphere(3)
print("icosphere level 3:", first(assemble_whitney_0form(m, sample_potential(None, m), 3), 4))

# %% S^3 with alpha = 0.2 Y2: functions approach 0.04, 1-forms approach 2.64.
for lvl in (2, 3):
    m = generate_s3_mesh(lvl)
    pot = sample_potential(hopf_potential(0.2), m, 2)
    print(f"S^3 level {lvl}: functions {first(assemble_whitney_0form(m, pot, 2), 2)[0]:.5f}, "
          f"1-forms {first(assemble_whitney_mixed(m, pot, 1, 2), 2)[0]:.5f}")
