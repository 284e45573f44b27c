"""Filter and projection parameters that impose requested minimum radii.

Two modes:

* :func:`solve_free` -- only the intermediate-design radii are given. The
  problem is under-determined, so the erosion threshold is swept on a grid
  and, for each value, the filter radius and dilation threshold follow in
  closed form.
* :func:`solve_determined` -- erosion and dilation distances are given as
  well; the four unknowns are then fixed by a small root-finding problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import analytic
from .analytic import DomainError, ThresholdTriple, ZoneId

_EPS = 1e-9

# recommendation bands for thresholds
RECOMMENDED_ETA_ERO_MIN = 0.75
RECOMMENDED_ETA_DIL_MAX = 0.25
COMPROMISE_ETA_ERO = (0.60, 0.90)
COMPROMISE_ETA_DIL = (0.10, 0.40)


class UnsatisfiableSpecError(ValueError):
    """No admissible parameter set exists for the requested radii."""


class NoSolutionError(RuntimeError):
    """Root-finding for the determined system did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class LengthScaleSpec:
    """Requested length scales of the intermediate design, in elements."""

    r_min_solid_int: float
    r_min_void_int: float
    t_ero: float | None = None
    t_dil: float | None = None
    eta_int: float = 0.5
    grid_resolution: float = 0.05
    eta_ero_range: tuple[float, float] = (0.60, 0.90)
    epsilon: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if not (self.r_min_solid_int > 0 and self.r_min_void_int > 0):
            raise ValueError("minimum radii must be positive")
        if not 0 < self.grid_resolution <= 0.1:
            raise ValueError("grid_resolution must lie in (0, 0.1]")
        if not 0 < self.eta_int < 1:
            raise ValueError("eta_int must lie in (0, 1)")
        if (self.t_ero is None) != (self.t_dil is None):
            raise ValueError("give both t_ero and t_dil, or neither")


@dataclass(frozen=True)
class SolutionRecord:
    """One admissible parameter set and the length scales it produces."""

    thresholds: ThresholdTriple
    r_fil: float
    t_ero: float
    t_dil: float
    r_min_solid: float
    r_min_void: float
    zone_solid: ZoneId
    zone_void: ZoneId
    recommended: bool = False
    compromise: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def eta_ero(self):
        return self.thresholds.eta_ero

    @property
    def eta_int(self):
        return self.thresholds.eta_int

    @property
    def eta_dil(self):
        return self.thresholds.eta_dil

    def as_row(self) -> dict:
        return {
            "eta_ero": self.eta_ero,
            "eta_int": self.eta_int,
            "eta_dil": self.eta_dil,
            "r_fil": self.r_fil,
            "t_ero": self.t_ero,
            "t_dil": self.t_dil,
            "r_min_solid": self.r_min_solid,
            "r_min_void": self.r_min_void,
            "zone_solid": str(self.zone_solid),
            "zone_void": str(self.zone_void),
            "recommended": self.recommended,
            "compromise": self.compromise,
        }


def evaluate(thresholds: ThresholdTriple, r_fil: float) -> SolutionRecord:
    """Build a record by forward evaluation of the closed-form relations."""
    t = thresholds
    ms = analytic.min_size_solid(t.eta_int, t.eta_ero)
    mv = analytic.min_size_void(t.eta_int, t.eta_dil)
    t_ero, t_dil = analytic.distances(t, r_fil)
    return SolutionRecord(
        thresholds=t,
        r_fil=r_fil,
        t_ero=t_ero,
        t_dil=t_dil,
        r_min_solid=analytic.to_radius(ms, r_fil),
        r_min_void=analytic.to_radius(mv, r_fil),
        zone_solid=analytic.solid_zone(t.eta_int, t.eta_ero),
        zone_void=analytic.void_zone(t.eta_int, t.eta_dil),
        recommended=is_recommended(t.eta_ero, t.eta_dil),
        compromise=is_compromise(t.eta_ero, t.eta_dil),
    )


def is_recommended(eta_ero: float, eta_dil: float) -> bool:
    """Intersection of the low-filter-cost and the low-oscillation bands."""
    return (
        eta_ero >= RECOMMENDED_ETA_ERO_MIN - _EPS
        and eta_dil <= RECOMMENDED_ETA_DIL_MAX + _EPS
        and is_compromise(eta_ero, eta_dil)
    )


def is_compromise(eta_ero: float, eta_dil: float) -> bool:
    lo_e, hi_e = COMPROMISE_ETA_ERO
    lo_d, hi_d = COMPROMISE_ETA_DIL
    return lo_e - _EPS <= eta_ero <= hi_e + _EPS and lo_d - _EPS <= eta_dil <= hi_d + _EPS


def invert_void(eta_i: float, size: float) -> float | None:
    """Dilation threshold giving normalised void size ``size`` at projection ``eta_i``.

    Each void regime is inverted algebraically; a candidate is kept only if it
    falls inside its own regime. Returns ``None`` when no admissible
    ``eta_dil`` in ``(0, eta_i)`` exists.
    """
    if size <= 0:
        return None
    candidates = []
    # row 1: size = 2 sqrt(2 i) - 2 sqrt(d)
    q = math.sqrt(2 * eta_i) - size / 2
    if q > 0:
        candidates.append((1, q * q))
    # row 2: size = 2 sqrt(i - d)
    candidates.append((2, eta_i - size * size / 4))
    # row 3: size = 4 - 2 sqrt(d) - 2 sqrt(2 - 2 i)
    q = (4 - size - 2 * math.sqrt(2 - 2 * eta_i)) / 2
    if q > 0:
        candidates.append((3, q * q))
    # row 4: size = 2 - (1 - i) / (1 - sqrt(d))
    if size < 2:
        q = 1 - (1 - eta_i) / (2 - size)
        if q > 0:
            candidates.append((4, q * q))
    for row, d in candidates:
        if not 0 < d < eta_i:
            continue
        if analytic.void_zone(eta_i, d).row != row:
            continue
        if abs(analytic.void_row_value(row, eta_i, d) - size) < 1e-9:
            return d
    return None


def _eta_ero_grid(spec: LengthScaleSpec) -> np.ndarray:
    lo, hi = spec.eta_ero_range
    k0 = math.ceil(lo / spec.grid_resolution - 1e-9)
    k1 = math.floor(hi / spec.grid_resolution + 1e-9)
    grid = np.round(np.arange(k0, k1 + 1) * spec.grid_resolution, 10)
    return grid[(grid > spec.eta_int) & (grid < 1)]


def solve_free(spec: LengthScaleSpec) -> list[SolutionRecord]:
    """All grid parameter sets imposing the requested intermediate radii.

    Raises
    ------
    UnsatisfiableSpecError
        If no erosion threshold on the grid admits a dilation threshold.
    """
    records = []
    for eta_ero in _eta_ero_grid(spec):
        ms = analytic.min_size_solid(spec.eta_int, eta_ero)
        r_fil = 2 * spec.r_min_solid_int / ms
        eta_dil = invert_void(spec.eta_int, 2 * spec.r_min_void_int / r_fil)
        if eta_dil is None:
            continue
        records.append(evaluate(ThresholdTriple(float(eta_ero), spec.eta_int, eta_dil), r_fil))
    if not records:
        raise UnsatisfiableSpecError(
            f"no admissible (eta_ero, eta_dil) for r_min_solid={spec.r_min_solid_int}, "
            f"r_min_void={spec.r_min_void_int}, eta_int={spec.eta_int}"
        )
    return records


# --------------------------------------------------------------------------
# Determined system: radii and distances prescribed
# --------------------------------------------------------------------------

def _eliminate(eta_ero, eta_dil, rs, rv):
    """Intermediate threshold and filter radius matching both radii for (eta_ero, eta_dil)."""
    target = rs / rv

    def g(i):
        return analytic.min_size_solid(i, eta_ero) / analytic.min_size_void(i, eta_dil) - target

    lo, hi = eta_dil + 1e-12, eta_ero - 1e-12
    # ratio runs from +inf (void size -> 0) down to 0 (solid size -> 0)
    eta_int = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    r_fil = 2 * rs / analytic.min_size_solid(eta_int, eta_ero)
    return eta_int, r_fil


def _residual(x, spec):
    eta_ero, eta_dil = x
    if not (0 < eta_dil < eta_ero < 1):
        raise DomainError("out of range")
    eta_int, r_fil = _eliminate(eta_ero, eta_dil, spec.r_min_solid_int, spec.r_min_void_int)
    t_ero, t_dil = analytic.distances(ThresholdTriple(eta_ero, eta_int, eta_dil), r_fil)
    return np.array([t_ero - spec.t_ero, t_dil - spec.t_dil]), (eta_int, r_fil)


def _newton(x0, spec, tol, max_iter=100, fd_step=1e-7):
    x = np.array(x0, dtype=float)
    f, _ = _residual(x, spec)
    for _ in range(max_iter):
        if np.linalg.norm(f) < tol:
            return x, f
        jac = np.empty((2, 2))
        for k in range(2):
            dx = np.zeros(2)
            dx[k] = fd_step
            try:
                fp, _ = _residual(x + dx, spec)
                jac[:, k] = (fp - f) / fd_step
            except (DomainError, ValueError):
                fm, _ = _residual(x - dx, spec)
                jac[:, k] = (f - fm) / fd_step
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-8:
            trial = x + lam * step
            try:
                ft, _ = _residual(trial, spec)
            except (DomainError, ValueError):
                lam *= 0.5
                continue
            if np.linalg.norm(ft) < np.linalg.norm(f) or lam < 1e-3:
                x, f = trial, ft
                break
            lam *= 0.5
        else:
            break
    return x, f


def solve_determined(spec: LengthScaleSpec, tol: float = 1e-10) -> SolutionRecord:
    """Unique ``(r_fil, eta_ero, eta_int, eta_dil)`` matching radii and distances.

    ``eta_int`` and ``r_fil`` are eliminated through the two radius equations;
    the distance equations are solved for ``(eta_ero, eta_dil)`` by damped
    Newton from the corners of the recommended threshold box.
    """
    if spec.t_ero is None:
        raise ValueError("solve_determined needs t_ero and t_dil")
    starts = [(0.75, 0.25), (0.75, 0.10), (0.90, 0.25), (0.90, 0.10)]
    best = None
    for x0 in starts:
        try:
            x, f = _newton(x0, spec, tol)
        except (DomainError, ValueError):
            continue
        norm = float(np.linalg.norm(f))
        if best is None or norm < best[1]:
            best = (x, norm)
        if norm < tol:
            break
    if best is None or best[1] >= tol:
        raise NoSolutionError(
            "no parameter set reproduces the requested radii and distances",
            residual=None if best is None else best[1],
        )
    (eta_ero, eta_dil), _ = best
    _, (eta_int, r_fil) = _residual(best[0], spec)
    return evaluate(ThresholdTriple(float(eta_ero), float(eta_int), float(eta_dil)), float(r_fil))


def apply_cutoff_correction(record: SolutionRecord, beta: float, epsilon: float) -> SolutionRecord:
    """Effective record of a design smoothed at ``beta`` and binarised at ``epsilon``.

    All three thresholds are shifted by ``atanh(2 epsilon - 1) / beta`` and the
    radii and distances are re-evaluated at the same filter radius.
    """
    t = record.thresholds
    shifted = ThresholdTriple(
        analytic.cutoff_shift(t.eta_ero, beta, epsilon),
        analytic.cutoff_shift(t.eta_int, beta, epsilon),
        analytic.cutoff_shift(t.eta_dil, beta, epsilon),
        beta=beta,
    )
    out = evaluate(shifted, record.r_fil)
    return replace(out, notes=record.notes + (f"cut-off eps={epsilon} at beta={beta}",))
