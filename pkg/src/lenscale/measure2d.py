"""Minimum length scale of binary 2D designs.

Distances live on a half-element lattice: lattice index ``L`` along an axis
corresponds to element coordinate ``(L - 1) / 2``, so element centres sit on
odd indices and element edges/corners on even ones. For a lattice point ``p``
of one phase, ``r(p) = dist(p, nearest opposite element centre) - 0.5`` is the
largest circle centred at ``p`` that avoids every opposite element (the
half-element accounts for the element extent). Radii are reported in
half-element steps, ``floor(2 r) / 2``.

* Members: the minimum over ridge (medial-axis) points of the distance map.
  A point is on the ridge if, along one of four directions, the distance drops
  on both sides with slope at least ``ridge_slope``; square corners (slope
  ``1/sqrt(2)``) are not ridge points.
* Corners: for phase elements touching the other phase on two or more sides,
  the largest inscribed circle covering that element.

Before measuring, isolated specks and one-element bumps smaller than
``min_area`` elements are removed from the phase (projection noise).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .fields import Field2D

RIDGE_SLOPE = 0.85
_DIRECTIONS = ((0, 1), (1, 0), (1, 1), (1, -1))
_PERPENDICULAR = ((1, 0), (0, 1), (1, -1), (1, 1))


class EmptyPhaseError(ValueError):
    """The requested phase has no elements to measure."""


@dataclass(frozen=True)
class DistanceMap:
    """Inscribed radius ``r(p)`` on the half-element lattice.

    ``lattice`` has shape ``(2 ny + 1, 2 nx + 1)`` (plus padding, see
    ``pad``); :attr:`per_element` gives the values at element centres.
    """

    lattice: np.ndarray
    pad: int
    shape: tuple[int, int]

    @property
    def per_element(self) -> np.ndarray:
        p = self.pad
        ny, nx = self.shape
        return self.lattice[2 * p + 1:2 * (p + ny):2, 2 * p + 1:2 * (p + nx):2]


@dataclass(frozen=True)
class MinimumSize:
    radius: float
    location: tuple[float, float]  # (x, y) in element coordinates
    kind: str  # "member" or "corner"


@dataclass(frozen=True)
class MeasurementReport:
    r_min_solid_measured: float
    r_min_void_measured: float
    solid_location: tuple[float, float]
    void_location: tuple[float, float]
    solid_kind: str
    void_kind: str
    epsilon: float
    notes: tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "r_min_solid_measured": _finite_or_none(self.r_min_solid_measured),
            "r_min_void_measured": _finite_or_none(self.r_min_void_measured),
            "solid_location": [_finite_or_none(v) for v in self.solid_location],
            "void_location": [_finite_or_none(v) for v in self.void_location],
            "solid_kind": self.solid_kind,
            "void_kind": self.void_kind,
            "epsilon": self.epsilon,
            "notes": list(self.notes),
        }


def _finite_or_none(v):
    return float(v) if np.isfinite(v) else None


def _as_mask(binary) -> np.ndarray:
    values = binary.values if isinstance(binary, Field2D) else np.asarray(binary)
    if values.ndim != 2:
        raise ValueError("expected a 2D raster")
    return values >= 0.5


def remove_specks(mask: np.ndarray, min_area: int = 2) -> np.ndarray:
    """Drop 4-connected components of ``mask`` smaller than ``min_area`` elements."""
    if min_area <= 1:
        return mask.copy()
    labels, n = ndimage.label(mask)
    if n == 0:
        return mask.copy()
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_area
    keep[0] = False
    return keep[labels]


def remove_spurs(mask: np.ndarray, min_area: int = 2) -> np.ndarray:
    """Drop bumps thinner than two elements whose area is below ``min_area``.

    The residue of a 2x2 opening is the part of the phase no 2x2 block fits
    in; its 4-connected components smaller than ``min_area`` are one-element
    bumps on a boundary (or isolated specks), not members.
    """
    mask = np.asarray(mask, bool)
    if min_area <= 1 or not mask.any():
        return mask.copy()
    opened = ndimage.binary_opening(mask, structure=np.ones((2, 2), bool))
    residue = mask & ~opened
    labels, n = ndimage.label(residue)
    if n == 0:
        return mask.copy()
    small = np.bincount(labels.ravel()) < min_area
    small[0] = False
    return mask & ~small[labels]


def distance_transform(mask: np.ndarray, exterior_is_phase: bool = False,
                       margin: int = 10) -> DistanceMap:
    """Inscribed-radius map of the ``True`` phase of ``mask``.

    Outside the raster the design is treated as the opposite phase, or, with
    ``exterior_is_phase``, as the same phase over ``margin`` elements.
    """
    mask = np.asarray(mask, bool)
    ny, nx = mask.shape
    pad = margin if exterior_is_phase else 1
    padded = np.pad(mask, pad, constant_values=exterior_is_phase)
    Ny, Nx = padded.shape
    # zero at opposite-phase element centres, one elsewhere
    seeds = np.ones((2 * Ny + 1, 2 * Nx + 1), dtype=bool)
    seeds[1::2, 1::2] = padded
    if seeds.all():
        dist = np.full(seeds.shape, np.inf)
    else:
        dist = ndimage.distance_transform_edt(seeds, sampling=0.5)
    return DistanceMap(np.maximum(dist - 0.5, 0.0), pad, (ny, nx))


def quantize(r):
    """Round radii down to multiples of half an element."""
    return np.floor(2 * np.asarray(r) + 1e-9) / 2


def ridge_points(dmap: DistanceMap, slope: float = RIDGE_SLOPE,
                 end_caps: bool = True) -> np.ndarray:
    """Boolean lattice mask of member cross-section points inside the raster.

    A point qualifies when the radius drops on both sides along some direction
    (a local maximum across the member). With ``end_caps`` the point is also
    discarded when, along the perpendicular (member axis), the radius keeps
    falling with the same slope: such points sit on the tapering end of a
    branch or on a one-element bump, not on a cross-section.
    """
    r = dmap.lattice
    H, W = r.shape
    rp = np.pad(r, 1, constant_values=np.inf)
    ridge = np.zeros(r.shape, dtype=bool)

    def drops(dy, dx):
        drop = slope * 0.5 * np.hypot(dy, dx) - 1e-12
        fwd = rp[1 + dy:1 + dy + H, 1 + dx:1 + dx + W]
        bwd = rp[1 - dy:1 - dy + H, 1 - dx:1 - dx + W]
        return r - fwd >= drop, r - bwd >= drop

    for (dy, dx), (py, px) in zip(_DIRECTIONS, _PERPENDICULAR):
        f, b = drops(dy, dx)
        across = f & b
        if end_caps:
            # along the member axis the radius falls steeply towards a free end
            fa, ba = drops(py, px)
            across &= ~(fa | ba)
        ridge |= across
    ridge &= quantize(r) >= 0.5
    inside = np.zeros_like(ridge)
    p = dmap.pad
    ny, nx = dmap.shape
    inside[2 * p:2 * (p + ny) + 1, 2 * p:2 * (p + nx) + 1] = True
    return ridge & inside


def _lattice_to_xy(dmap: DistanceMap, iy: int, ix: int) -> tuple[float, float]:
    return ((ix - 1) / 2 - dmap.pad, (iy - 1) / 2 - dmap.pad)


def local_thickness(dmap: DistanceMap, elements) -> np.ndarray:
    """Largest half-step inscribed radius whose circle covers each given element.

    ``elements`` is an iterable of ``(iy, ix)`` element indices of the raster.
    A circle of radius ``rho`` centred at ``c`` covers element ``e`` when
    ``|e - c| < rho + 0.5``.
    """
    rq = quantize(dmap.lattice)
    elements = list(elements)
    out = np.zeros(len(elements))
    if not elements:
        return out
    rmax = float(rq.max())
    reach = int(np.ceil(2 * (rmax + 0.5))) + 1
    L = rq.shape
    p = dmap.pad
    for k, (ey, ex) in enumerate(elements):
        cy, cx = 2 * (ey + p) + 1, 2 * (ex + p) + 1
        y0, y1 = max(0, cy - reach), min(L[0], cy + reach + 1)
        x0, x1 = max(0, cx - reach), min(L[1], cx + reach + 1)
        win = rq[y0:y1, x0:x1]
        yy, xx = np.mgrid[y0:y1, x0:x1]
        dist = 0.5 * np.hypot(yy - cy, xx - cx)
        covered = (dist < win + 0.5 - 1e-9) & (win >= 0.5)
        out[k] = win[covered].max() if covered.any() else 0.0
    return out


def corner_elements(mask: np.ndarray) -> np.ndarray:
    """Phase elements with the opposite phase on at least two of their four sides.

    Only neighbours inside the raster count.
    """
    m = np.asarray(mask, bool)
    count = np.zeros(m.shape, dtype=int)
    opp = ~m
    count[1:, :] += opp[:-1, :]
    count[:-1, :] += opp[1:, :]
    count[:, 1:] += opp[:, :-1]
    count[:, :-1] += opp[:, 1:]
    return np.argwhere(m & (count >= 2))


def clean(mask: np.ndarray, min_area: int = 2) -> np.ndarray:
    """Mask with specks and one-element spurs below ``min_area`` removed."""
    return remove_spurs(remove_specks(mask, min_area), min_area)


def _measure(mask, exterior_is_phase, corners, min_area, margin, end_caps):
    mask = clean(mask, min_area)
    if not mask.any():
        raise EmptyPhaseError("the measured phase is empty")
    dmap = distance_transform(mask, exterior_is_phase, margin)
    rq = quantize(dmap.lattice)
    ridge = ridge_points(dmap, end_caps=end_caps)
    best = MinimumSize(np.inf, (np.nan, np.nan), "member")
    if ridge.any():
        vals = np.where(ridge, rq, np.inf)
        iy, ix = np.unravel_index(np.argmin(vals), vals.shape)
        best = MinimumSize(float(vals[iy, ix]), _lattice_to_xy(dmap, iy, ix), "member")
    if corners:
        elems = corner_elements(mask)
        if len(elems):
            lt = local_thickness(dmap, map(tuple, elems))
            k = int(np.argmin(lt))
            if lt[k] < best.radius:
                ey, ex = elems[k]
                best = MinimumSize(float(lt[k]), (float(ex), float(ey)), "corner")
    if not np.isfinite(best.radius):
        if exterior_is_phase:
            # every region of the phase opens to the unbounded exterior
            return MinimumSize(np.inf, (np.nan, np.nan), "unbounded")
        iy, ix = np.unravel_index(np.argmax(rq), rq.shape)
        best = MinimumSize(float(rq[iy, ix]), _lattice_to_xy(dmap, iy, ix), "member")
    return best


def measure_min_solid(binary, *, exterior_is_phase: bool = False, corners: bool = False,
                      min_area: int = 2, margin: int = 10, end_caps: bool = True) -> MinimumSize:
    """Radius of the thinnest solid member (half-element resolution).

    ``min_area=1`` and ``end_caps=False`` give the strict measurement, in which
    single-element bumps and tapering branch ends also count.
    """
    return _measure(_as_mask(binary), exterior_is_phase, corners, min_area, margin, end_caps)


def measure_min_void(binary, *, exterior_is_phase: bool = True, corners: bool = True,
                     min_area: int = 2, margin: int = 10, end_caps: bool = True) -> MinimumSize:
    """Radius of the smallest cavity or rounded re-entrant corner of the void phase.

    By default the region outside the raster is open void, so cavities that
    open to the boundary are not bounded by it.
    """
    return _measure(~_as_mask(binary), exterior_is_phase, corners, min_area, margin, end_caps)


def measure(field, epsilon: float = 0.5, min_area: int = 2,
            end_caps: bool = True) -> MeasurementReport:
    """Binarise at ``epsilon`` and measure both phases."""
    values = field.values if isinstance(field, Field2D) else np.asarray(field, float)
    binary = (values >= epsilon).astype(float)
    solid = measure_min_solid(binary, min_area=min_area, end_caps=end_caps)
    void = measure_min_void(binary, min_area=min_area, end_caps=end_caps)
    return MeasurementReport(
        solid.radius, void.radius, solid.location, void.location,
        solid.kind, void.kind, epsilon,
    )
