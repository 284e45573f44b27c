"""Design a heat sink with imposed minimum radii and measure the result.

Run with ``python demos/heat_sink.py [n]`` (default ``n = 100``, about half a
minute). The parameters come from the free solve for equal radii of
``n / 100`` elements at ``eta_ero = 0.70``; the intermediate design is then
binarised and its smallest solid and void radii measured.
"""

import sys
from pathlib import Path

from lenscale.fields import Field2D
from lenscale.io import write_field
from lenscale.measure2d import measure
from lenscale.paramsolve import LengthScaleSpec, solve_free
from lenscale.topopt2d import HeatProblem, RobustConfig, optimize

n = int(sys.argv[1]) if len(sys.argv) > 1 else 100
target = n / 100
(rec,) = [r for r in solve_free(LengthScaleSpec(target, target)) if abs(r.eta_ero - 0.70) < 1e-9]
print(f"mesh {n}x{n}: target radius {target}, r_fil {rec.r_fil:.4f}, "
      f"thresholds {rec.eta_ero:.2f}/{rec.eta_int:.2f}/{rec.eta_dil:.2f}")

cfg = RobustConfig(rec.thresholds, r_fil=rec.r_fil, volume_fraction=0.2, track_compliances=False)
state = optimize(HeatProblem(nx=n, ny=n), cfg,
                 callback=lambda h: h.iteration % 40 == 0 and print(
                     f"  it {h.iteration:3d}  beta {h.beta:4.0f}  c_ero {h.c_ero:.5g}"))

report = measure(state.intermediate)
print(f"measured r_min_solid {report.r_min_solid_measured} ({report.solid_kind}), "
      f"r_min_void {report.r_min_void_measured} ({report.void_kind})")

out = Path("demo_output")
write_field(out / f"intermediate_{n}", Field2D(state.intermediate))
print(f"intermediate design written to {out}/intermediate_{n}.pgm")
