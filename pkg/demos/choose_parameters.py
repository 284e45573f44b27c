"""Pick filter radius and thresholds for requested minimum radii.

Run with ``python demos/choose_parameters.py``. The script walks through the
under-determined case (radii only), the determined case (radii plus erosion
and dilation distances) and the effect of binarising a smoothed design.
"""

from lenscale.paramsolve import LengthScaleSpec, apply_cutoff_correction, solve_determined, solve_free


def show(title, records):
    print(f"\n{title}")
    print(f"{'eta_ero':>8} {'eta_dil':>8} {'r_fil':>7} {'t_ero':>6} {'t_dil':>6}  zones")
    for r in records:
        mark = "*" if r.recommended else " "
        print(f"{r.eta_ero:8.3f} {r.eta_dil:8.4f} {r.r_fil:7.3f} {r.t_ero:6.3f} {r.t_dil:6.3f}"
              f"  {r.zone_solid}/{r.zone_void} {mark}")


# Equal radii: the dilation threshold mirrors the erosion threshold.
show("r_min_solid = r_min_void = 2 elements", solve_free(LengthScaleSpec(2, 2)))

# A larger void radius pushes the dilation threshold down.
show("r_min_solid = 2, r_min_void = 3 elements", solve_free(LengthScaleSpec(2, 3)))

# Fixing the distances as well leaves a single parameter set.
rec = solve_determined(LengthScaleSpec(3, 3, t_ero=1.76, t_dil=1.76))
show("radii 3/3 with t_ero = t_dil = 1.76", [rec])

# A smoothed design binarised at 0.99 behaves as if every threshold moved up.
shifted = apply_cutoff_correction(rec, beta=32.0, epsilon=0.99)
show("same design smoothed at beta = 32 and cut at 0.99", [shifted])
print("\n* marks records inside the recommended threshold band")
