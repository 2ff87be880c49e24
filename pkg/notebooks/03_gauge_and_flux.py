"""Gauge invariance and flux quantization with the phase-cochain Laplacian.

Run:  python3 notebooks/03_gauge_and_flux.py
"""
import numpy as np

from maghodge.assembly import (GaugeFunction, assemble_phase_laplacian, constant_field,
                               gauge_transform_system, sample_potential)
from maghodge.eigensolver import dense_oracle
from maghodge.mesh import generate
from maghodge.suites import suite_shigekawa

# %% A random vertex gauge conjugates the operator unitarily; spectra agree to roundoff.
m = generate("torus:8")
s = assemble_phase_laplacian(m, sample_potential(constant_field((1.3, -0.7)), m), "unit")
g = GaugeFunction(np.random.default_rng(0).uniform(0, 2 * np.pi, m.n_vertices))
t = gauge_transform_system(s, g)
print("spectral drift:", np.abs(dense_oracle(s.stiffness, s.mass)
                                - dense_oracle(t.stiffness, t.mass)).max())

# %% Zero modes appear exactly at the 2 pi lattice of constant potentials.
res = suite_shigekawa(generate("torus:24"))
for r in res.rows:
    mark = "zero" if r["lambda1"] <= 1e-9 else ""
    print(f"alpha=({r['alpha1']:.3f}, {r['alpha2']:.3f})  lambda1={r['lambda1']:.3e} {mark}")
