"""Closed-form minimum length scale for robust (eroded/intermediate/dilated) designs.

All sizes here are *normalised*: ``2 * r_min / r_fil``, the width of the
thinnest member (or cavity) of a projected 1D design divided by the filter
radius. Radii in elements are obtained with :func:`to_radius`.

The solid-phase relation has four regimes depending on where the projected
edge falls relative to the robust slab of width ``h`` and to the filter
support; the void relations are the mirror images (``eta -> 1 - eta``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

_TOL = 1e-12


class DomainError(ValueError):
    """Thresholds or parameters outside the range where a relation is defined."""


class Phase(str, enum.Enum):
    SOLID = "solid"
    VOID = "void"


@dataclass(frozen=True)
class ZoneId:
    """Regime of the size relation: phase plus row (1-4) within that phase."""

    phase: Phase
    row: int

    def __str__(self):
        return f"{self.phase.value}{self.row}"


@dataclass(frozen=True)
class ThresholdTriple:
    """Projection thresholds of the eroded, intermediate and dilated designs.

    ``beta = inf`` denotes the perfect (step) projection.
    """

    eta_ero: float
    eta_int: float
    eta_dil: float
    beta: float = math.inf

    def __post_init__(self):
        if not 0 < self.eta_dil < self.eta_int < self.eta_ero < 1:
            raise DomainError(
                "thresholds must satisfy 0 < eta_dil < eta_int < eta_ero < 1, got "
                f"({self.eta_ero}, {self.eta_int}, {self.eta_dil})"
            )
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")


def slab_width_h(eta_ero: float, r_fil: float = 1.0) -> float:
    """Width of the solid slab whose filtered peak equals ``eta_ero``.

    This is the robustness condition: the eroded projection of that slab is
    an infinitesimal member.
    """
    if not 0 < eta_ero < 1:
        raise DomainError(f"eta_ero must lie in (0, 1), got {eta_ero}")
    return 2.0 * r_fil * (1.0 - math.sqrt(1.0 - eta_ero))


def solid_zone(eta_i: float, eta_ero: float) -> ZoneId:
    """Regime of the solid relation for projection ``eta_i`` (lowest row on ties)."""
    _check_solid(eta_i, eta_ero)
    e, i = eta_ero, eta_i
    s = math.sqrt(1.0 - e)
    a = 2 * e - 1
    b = 2 * e - 2 + 2 * s
    c = 4 - 4 * s - 2 * e
    if i <= a + _TOL and i >= 0.5 - _TOL:
        return ZoneId(Phase.SOLID, 1)
    if i >= b - _TOL and i > a:
        return ZoneId(Phase.SOLID, 2)
    if i < c and i < 0.5:
        return ZoneId(Phase.SOLID, 3)
    if i >= c - _TOL and i < b:
        return ZoneId(Phase.SOLID, 4)
    raise AssertionError(f"no solid zone for eta_i={i}, eta_ero={e}")  # pragma: no cover


def void_zone(eta_i: float, eta_dil: float) -> ZoneId:
    """Regime of the void relation for projection ``eta_i`` (lowest row on ties)."""
    _check_void(eta_i, eta_dil)
    d, i = eta_dil, eta_i
    q = math.sqrt(d)
    if i >= 2 * d - _TOL and i <= 0.5 + _TOL:
        return ZoneId(Phase.VOID, 1)
    if i <= 2 * d + 1 - 2 * q + _TOL and i < 2 * d:
        return ZoneId(Phase.VOID, 2)
    if i >= 4 * q - 2 * d - 1 - _TOL and i > 0.5:
        return ZoneId(Phase.VOID, 3)
    if i < 4 * q - 2 * d - 1 and i > 2 * d + 1 - 2 * q:
        return ZoneId(Phase.VOID, 4)
    raise AssertionError(f"no void zone for eta_i={i}, eta_dil={d}")  # pragma: no cover


def solid_row_value(row: int, eta_i: float, eta_ero: float) -> float:
    """Evaluate one solid-phase formula regardless of its validity range."""
    s = math.sqrt(1.0 - eta_ero)
    if row == 1:
        return 2 * math.sqrt(2 - 2 * eta_i) - 2 * s
    if row == 2:
        return 2 * math.sqrt(max(eta_ero - eta_i, 0.0))
    if row == 3:
        return 4 - 2 * s - 2 * math.sqrt(2 * eta_i)
    if row == 4:
        return 2 - eta_i / (1 - s)
    raise ValueError(f"row must be 1..4, got {row}")


def void_row_value(row: int, eta_i: float, eta_dil: float) -> float:
    """Evaluate one void-phase formula regardless of its validity range."""
    q = math.sqrt(eta_dil)
    if row == 1:
        return 2 * math.sqrt(2 * eta_i) - 2 * q
    if row == 2:
        return 2 * math.sqrt(max(eta_i - eta_dil, 0.0))
    if row == 3:
        return 4 - 2 * q - 2 * math.sqrt(2 - 2 * eta_i)
    if row == 4:
        return 2 - (1 - eta_i) / (1 - q)
    raise ValueError(f"row must be 1..4, got {row}")


def min_size_solid(eta_i: float, eta_ero: float) -> float:
    """Normalised minimum solid size ``2 r_min.Solid / r_fil`` of the ``eta_i`` design."""
    return solid_row_value(solid_zone(eta_i, eta_ero).row, eta_i, eta_ero)


def min_size_void(eta_i: float, eta_dil: float) -> float:
    """Normalised minimum void size ``2 r_min.Void / r_fil`` of the ``eta_i`` design."""
    return void_row_value(void_zone(eta_i, eta_dil).row, eta_i, eta_dil)


def to_radius(normalized: float, r_fil: float) -> float:
    """Convert a normalised size to a radius in elements."""
    return 0.5 * normalized * r_fil


def distances(t: ThresholdTriple, r_fil: float) -> tuple[float, float]:
    """Erosion and dilation distances ``(t_ero, t_dil)`` in elements.

    ``t_dil`` is the growth of the solid radius from the intermediate to the
    dilated design; ``t_ero`` the growth of the void radius from the
    intermediate to the eroded design.
    """
    t_dil = to_radius(
        min_size_solid(t.eta_dil, t.eta_ero) - min_size_solid(t.eta_int, t.eta_ero), r_fil
    )
    t_ero = to_radius(
        min_size_void(t.eta_ero, t.eta_dil) - min_size_void(t.eta_int, t.eta_dil), r_fil
    )
    return t_ero, t_dil


def cutoff_shift(eta_i: float, beta: float, epsilon: float) -> float:
    """Threshold seen by a perfect step after smoothing at ``beta`` and cut-off ``epsilon``.

    Valid for ``beta > 10``; ``beta = inf`` returns ``eta_i`` unchanged.
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"cut-off epsilon must lie in (0, 1), got {epsilon}")
    if math.isinf(beta):
        return eta_i
    if not beta > 10:
        raise DomainError(f"the cut-off shift assumes beta > 10, got {beta}")
    return eta_i + math.atanh(2 * epsilon - 1) / beta


def cutoff_threshold_exact(eta_i: float, beta: float, epsilon: float) -> float:
    """Exact counterpart of :func:`cutoff_shift` (no ``tanh -> 1`` approximation).

    Solves ``project_smooth(x; beta, eta_i) = epsilon`` for ``x``. Differs from
    the shifted threshold when ``beta * eta_i`` or ``beta * (1 - eta_i)`` is
    small.
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"cut-off epsilon must lie in (0, 1), got {epsilon}")
    if math.isinf(beta):
        return eta_i
    den = math.tanh(beta * eta_i) + math.tanh(beta * (1 - eta_i))
    arg = epsilon * den - math.tanh(beta * eta_i)
    if not -1 < arg < 1:
        raise DomainError("cut-off not reachable by the smoothed projection")
    return eta_i + math.atanh(arg) / beta


def rounding_band(r_fil_elements: float) -> float:
    """Half-width of the discretisation band on normalised-size curves (``2 / r_fil``)."""
    if not r_fil_elements > 0:
        raise DomainError("r_fil must be positive")
    return 2.0 / r_fil_elements


def dilated_max_size(r_max_int: float, t_dil: float) -> float:
    """Maximum-size radius to impose on the dilated design."""
    return r_max_int + t_dil


def _check_solid(eta_i, eta_ero):
    if not 0 < eta_ero < 1:
        raise DomainError(f"eta_ero must lie in (0, 1), got {eta_ero}")
    if not 0 < eta_i <= eta_ero:
        raise DomainError(f"solid relation needs 0 < eta_i <= eta_ero, got eta_i={eta_i}")


def _check_void(eta_i, eta_dil):
    if not 0 < eta_dil < 1:
        raise DomainError(f"eta_dil must lie in (0, 1), got {eta_dil}")
    if not eta_dil <= eta_i < 1:
        raise DomainError(f"void relation needs eta_dil <= eta_i < 1, got eta_i={eta_i}")
