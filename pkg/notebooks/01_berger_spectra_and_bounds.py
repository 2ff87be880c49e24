"""Closed-form spectra on Berger spheres and the two-sided bound on the round S^3.

Run:  python3 notebooks/01_berger_spectra_and_bounds.py [output_dir]
"""
import sys
from pathlib import Path

import numpy as np

from maghodge import analytic as an
from maghodge.suites import suite_diamagnetic, suite_figure1

out = Path(sys.argv[1] if len(sys.argv) > 1 else "notebook_out")
out.mkdir(parents=True, exist_ok=True)

# %% Unperturbed eigenvalues by level k and index p, for three fibre lengths.
for eps in (0.5, 1.0, 2.0):
    lines = an.berger_function_spectrum(an.BergerParams(eps, 0.0), 3)
    print(f"eps={eps}:", " ".join(f"{ln.value:g}" for ln in lines))

# %% Switching on the field t*Y2 shifts each (k, p) line linearly in q = 2p - k.
p = an.BergerParams(1.0, 0.2)
print("two smallest at t=0.2:", an.berger_smallest_two(p))

# %% The bound chain on [0, t_max] and its figure.
fig = suite_figure1(100)
(out / "figure1.svg").write_text(fig.svg)
gap = np.array([r["a_plus"] - r["a_minus"] for r in fig.rows])
print(f"t_max = {an.t_max():.6f}; bracket width shrinks from {gap[0]:.3f} to {gap[-1]:.3f}")

# %% Magnetic field lowers the first 1-form eigenvalue below the field-free value 3.
dia = suite_diamagnetic()
print("1-forms:", dia.summary["verdict"], "with slope", dia.summary["linear_slope"])
