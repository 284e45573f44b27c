"""Compare the closed-form minimum sizes with discrete 1D experiments.

Run with ``python demos/error_sources.py``. Three effects are shown on small
meshes so the script finishes in a few seconds:

* rounding to whole elements on a coarse mesh, bounded by 2 / r_fil;
* the threshold shift caused by binarising a smoothed projection;
* the extra width needed when the eroded member must keep alpha r_fil elements.
"""

import numpy as np

from lenscale import analytic
from lenscale.numeric1d import study_alpha, study_cutoff, study_rounding


def table(curve):
    for p, a in zip(curve.points, curve.analytic):
        print(f"  eta_ero={p.eta_threshold:.2f}  numeric={p.normalized_size:.4f}  "
              f"analytic={a:.4f}  diff={p.normalized_size - a:+.4f}")


print("Rounding on coarse meshes (n = 10 r_fil)")
for curve in study_rounding(r_fils=(10, 20)):
    worst = np.abs(curve.deviations).max()
    print(f" {curve.label}: worst |diff| {worst:.3f}, band {curve.band:.3f}")

print("\nCut-off shift (beta = 30, r_fil = 200)")
for curve in study_cutoff(epsilons=(0.01, 0.5, 0.99)):
    print(f" {curve.label}: shift {analytic.cutoff_shift(0.0, 30.0, float(curve.label[8:])):+.4f}")
    table(curve)

print("\nEroded member of alpha r_fil elements (r_fil = 200)")
for curve in study_alpha(alphas=(0.0, 0.1, 0.3), n=2000, r_fil=200.0):
    print(f" {curve.label}: mean excess {np.mean(curve.deviations):+.4f}")
