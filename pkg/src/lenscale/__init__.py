"""Minimum length scale control for robust density-based topology optimization.

Subpackages and modules
-----------------------
fields      density filter and smoothed Heaviside projection
analytic    closed-form minimum sizes and erosion/dilation distances
paramsolve  threshold and filter-radius selection from target sizes
numeric1d   1D numerical verification of the analytic curves
topopt2d    robust 2D heat-sink optimization (SIMP, MMA)
measure2d   measured minimum length scale of binary 2D designs
"""

__version__ = "0.1.0"
