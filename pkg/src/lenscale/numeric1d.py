"""Discrete 1D length-scale experiments.

A centred solid slab (or cavity) of ``h`` elements is filtered, projected with
a smoothed Heaviside and binarised at a cut-off. ``h`` is chosen as the
smallest width whose eroded (dilated) projection still keeps a member (cavity)
of at least one element; the intermediate projection of that same filtered
field then gives the minimum size empirically. Sweeping the thresholds
produces curves comparable with :mod:`lenscale.analytic`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import analytic
from .analytic import Phase
from .fields import Field1D, ProjectionParams, _filter1d, binarize_cutoff, project_smooth


class SearchFailureError(RuntimeError):
    """No slab width in the search range satisfies the robustness condition."""


@dataclass(frozen=True)
class Numeric1DConfig:
    """Set-up of the discrete experiment. Lengths in elements."""

    n: int = 10_000
    r_fil: float = 1000.0
    beta: float = 500.0
    epsilon: float = 0.5
    alpha: float = 0.0
    phase: Phase = Phase.SOLID

    def __post_init__(self):
        object.__setattr__(self, "phase", Phase(self.phase))
        if not self.r_fil > 0:
            raise ValueError("r_fil must be positive")
        if self.n < 4 * self.r_fil:
            raise ValueError(f"n={self.n} must be at least 4*r_fil={4 * self.r_fil}")
        if not 0 <= self.alpha <= 0.5:
            raise ValueError("alpha must lie in [0, 0.5]")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def floor_width(self) -> int:
        """Smallest member (cavity) accepted in the eroded (dilated) design."""
        return max(1, int(round(self.alpha * self.r_fil)))


@dataclass(frozen=True)
class CurvePoint:
    eta_threshold: float
    eta_i: float
    normalized_size: float
    h_star: int


def measure_width(field, phase: Phase = Phase.SOLID) -> int:
    """Longest contiguous run of ``phase`` in a binary 1D field."""
    values = field.values if isinstance(field, Field1D) else np.asarray(field)
    mask = values >= 0.5 if Phase(phase) is Phase.SOLID else values < 0.5
    if not mask.any():
        return 0
    padded = np.concatenate(([0], mask.astype(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return int((edges[1::2] - edges[::2]).max())


def slab_field(cfg: Numeric1DConfig, h: int) -> np.ndarray:
    """Centred slab (solid phase) or cavity (void phase) of ``h`` elements."""
    x = np.zeros(cfg.n)
    start = (cfg.n - h) // 2
    x[start:start + h] = 1.0
    return x if cfg.phase is Phase.SOLID else 1.0 - x


def _filtered(cfg: Numeric1DConfig, h: int) -> np.ndarray:
    return np.clip(_filter1d(cfg.n, float(cfg.r_fil))(slab_field(cfg, h)), 0.0, 1.0)


def projected_width(cfg: Numeric1DConfig, filtered: np.ndarray, eta: float) -> int:
    """Width of the phase of interest after projection at ``eta`` and cut-off."""
    proj = project_smooth(filtered, ProjectionParams(cfg.beta, eta))
    return measure_width(binarize_cutoff(proj, cfg.epsilon), cfg.phase)


def find_robust_h(cfg: Numeric1DConfig, eta_threshold: float) -> int:
    """Smallest slab width whose threshold projection keeps ``cfg.floor_width`` elements.

    ``eta_threshold`` is the erosion threshold for the solid phase and the
    dilation threshold for the void phase.
    """
    target = cfg.floor_width
    lo, hi = 1, int(math.floor(2 * cfg.r_fil))

    def ok(h):
        return projected_width(cfg, _filtered(cfg, h), eta_threshold) >= target

    if not ok(hi):
        raise SearchFailureError(
            f"no slab width in [1, {hi}] keeps {target} element(s) at threshold {eta_threshold}"
        )
    if ok(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _n_threads() -> int:
    try:
        return max(1, int(os.environ.get("LENSCALE_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    threads = _n_threads()
    if threads == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _admissible(phase, eta_i, eta_t):
    return eta_i <= eta_t + 1e-12 if phase is Phase.SOLID else eta_i >= eta_t - 1e-12


def _sweep(cfg, eta_i_grid, eta_t_grid):
    eta_t_grid = [float(e) for e in eta_t_grid]
    eta_i_grid = [float(e) for e in eta_i_grid]

    def per_threshold(eta_t):
        h = find_robust_h(cfg, eta_t)
        filt = _filtered(cfg, h)
        out = []
        for eta_i in eta_i_grid:
            if not _admissible(cfg.phase, eta_i, eta_t):
                continue
            width = projected_width(cfg, filt, eta_i)
            out.append(CurvePoint(eta_t, eta_i, width / cfg.r_fil, h))
        return out

    return [pt for pts in _map(per_threshold, eta_t_grid) for pt in pts]


def sweep_solid(cfg: Numeric1DConfig, eta_i_grid, eta_ero_grid) -> list[CurvePoint]:
    """Measured normalised solid size for every admissible ``(eta_i, eta_ero)`` pair."""
    return _sweep(replace(cfg, phase=Phase.SOLID), eta_i_grid, eta_ero_grid)


def sweep_void(cfg: Numeric1DConfig, eta_i_grid, eta_dil_grid) -> list[CurvePoint]:
    """Measured normalised void size for every admissible ``(eta_i, eta_dil)`` pair."""
    return _sweep(replace(cfg, phase=Phase.VOID), eta_i_grid, eta_dil_grid)


def analytic_value(point: CurvePoint, phase: Phase, shift: float = 0.0) -> float:
    """Continuous prediction for a curve point, with optional threshold shift."""
    i, t = point.eta_i + shift, point.eta_threshold + shift
    if Phase(phase) is Phase.SOLID:
        return analytic.min_size_solid(i, t)
    return analytic.min_size_void(i, t)


def max_deviation(points, phase: Phase, shift: float = 0.0) -> float:
    return max(abs(p.normalized_size - analytic_value(p, phase, shift)) for p in points)


def grid(step: float = 0.05, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Threshold grid ``step, 2 step, ...`` strictly inside (0, 1), optionally clipped."""
    k = np.arange(1, int(round(1 / step)))
    g = np.round(k * step, 10)
    if lo is not None:
        g = g[g >= lo - 1e-12]
    if hi is not None:
        g = g[g <= hi + 1e-12]
    return g


# --------------------------------------------------------------------------
# Studies
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyCurve:
    """Numeric curve with its reference analytic values at the same points."""

    label: str
    points: tuple[CurvePoint, ...]
    analytic: tuple[float, ...]
    band: float

    @property
    def deviations(self) -> np.ndarray:
        return np.array([p.normalized_size for p in self.points]) - np.array(self.analytic)


def study_rounding(r_fils=(10, 20), beta=500.0, phase=Phase.SOLID, eta_i=0.5,
                   eta_grid=None):
    """Coarse-mesh curves (``n = 10 r_fil``) against analytic +/- ``2 / r_fil``.

    The projection threshold ``eta_i`` is fixed and the erosion (dilation)
    threshold is swept over the 0.05 grid strictly above (below) it.
    """
    phase = Phase(phase)
    if eta_grid is None:
        g = grid(0.05)
        eta_grid = g[g > eta_i + 1e-9] if phase is Phase.SOLID else g[g < eta_i - 1e-9]
    curves = []
    for r in r_fils:
        cfg = Numeric1DConfig(n=int(10 * r), r_fil=float(r), beta=beta, phase=phase)
        pts = _sweep(cfg, [eta_i], eta_grid)
        curves.append(StudyCurve(
            f"r_fil={r}", tuple(pts), tuple(analytic_value(p, phase) for p in pts),
            analytic.rounding_band(r),
        ))
    return curves


def study_cutoff(epsilons=(0.01, 0.5, 0.99), beta=30.0, r_fil=200.0, n=2000,
                 eta_i=0.5, eta_ero_grid=None):
    """Solid size versus ``eta_ero`` for several cut-offs, with shifted analytic references.

    Thresholds whose shifted value leaves (0, 1) are skipped.
    """
    if eta_ero_grid is None:
        eta_ero_grid = grid(0.05, lo=0.55, hi=0.95)
    curves = []
    for eps in epsilons:
        cfg = Numeric1DConfig(n=n, r_fil=r_fil, beta=beta, epsilon=eps)
        shift = analytic.cutoff_shift(0.0, beta, eps)
        usable = [e for e in eta_ero_grid if 0 < e + shift < 1 and 0 < eta_i + shift]
        pts = sweep_solid(cfg, [eta_i], usable)
        curves.append(StudyCurve(
            f"epsilon={eps}", tuple(pts),
            tuple(analytic_value(p, Phase.SOLID, shift) for p in pts),
            analytic.rounding_band(r_fil),
        ))
    return curves


def study_alpha(alphas=(0.0, 0.1, 0.3, 0.5), n=10_000, r_fil=1000.0, beta=500.0,
                eta_i=0.5, eta_ero_grid=None):
    """Solid size versus ``eta_ero`` when the eroded member keeps ``alpha r_fil`` elements."""
    if eta_ero_grid is None:
        eta_ero_grid = grid(0.05, lo=0.55, hi=0.95)
    curves = []
    for a in alphas:
        cfg = Numeric1DConfig(n=n, r_fil=r_fil, beta=beta, alpha=a)
        pts = sweep_solid(cfg, [eta_i], eta_ero_grid)
        curves.append(StudyCurve(
            f"alpha={a}", tuple(pts), tuple(analytic_value(p, Phase.SOLID) for p in pts),
            analytic.rounding_band(r_fil),
        ))
    return curves
