"""Density fields and the three-field scheme (filter, projection, cut-off).

Conventions
-----------
Distances and filter radii are measured in elements. Element centroids of a
1D field sit at ``0, 1, ..., n-1``; for 2D fields the row index is ``y`` and
the column index is ``x`` (row-major ``values[iy, ix]``).

The density filter uses the linear "hat" weight ``max(0, 1 - d / r_fil)`` and
is renormalised over the clipped neighbourhood at domain edges; no padding is
applied.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp


class InvalidInputError(ValueError):
    """Raised when a density field contains non-finite or out-of-range values."""


def _check_densities(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("density field contains non-finite values")
    if values.size and (values.min() < -1e-12 or values.max() > 1 + 1e-12):
        raise InvalidInputError("densities must lie in [0, 1]")
    return np.clip(values, 0.0, 1.0)


@dataclass(frozen=True)
class Field1D:
    """Densities of a one-dimensional bar of ``n`` equal elements."""

    values: np.ndarray
    element_size: float = 1.0

    def __post_init__(self):
        vals = _check_densities(np.ravel(self.values))
        if vals.size < 1:
            raise InvalidInputError("a field needs at least one element")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Field2D:
    """Densities on an ``ny x nx`` grid of square elements (row-major)."""

    values: np.ndarray
    element_size: float = 1.0

    def __post_init__(self):
        vals = _check_densities(self.values)
        if vals.ndim != 2 or vals.size < 1:
            raise InvalidInputError("Field2D values must be a non-empty 2D array")
        object.__setattr__(self, "values", vals)

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def element_volumes(self) -> np.ndarray:
        return np.full(self.values.shape, self.element_size**2)

    @classmethod
    def from_flat(cls, values, nx: int, ny: int, element_size: float = 1.0) -> "Field2D":
        values = np.asarray(values, dtype=float)
        if values.size != nx * ny:
            raise InvalidInputError(f"expected {nx * ny} values, got {values.size}")
        return cls(values.reshape(ny, nx), element_size)


@dataclass(frozen=True)
class ProjectionParams:
    """Steepness ``beta`` and threshold ``eta`` of the smoothed Heaviside."""

    beta: float
    eta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")


# --------------------------------------------------------------------------
# Density filter
# --------------------------------------------------------------------------

def hat_kernel_1d(r_fil: float) -> np.ndarray:
    """Weights ``max(0, 1 - |k|/r_fil)`` for integer offsets ``k`` (length ``2m+1``)."""
    if not r_fil > 0:
        raise ValueError(f"r_fil must be positive, got {r_fil}")
    m = int(np.ceil(r_fil)) - 1
    k = np.arange(-m, m + 1)
    return np.maximum(0.0, 1.0 - np.abs(k) / r_fil)


class Filter1D:
    """Precomputed density filter for a 1D grid of ``n`` elements."""

    def __init__(self, n: int, r_fil: float):
        self.n = int(n)
        self.r_fil = float(r_fil)
        self.kernel = hat_kernel_1d(r_fil)
        self._m = (self.kernel.size - 1) // 2
        self.denominator = self._conv(np.ones(self.n))

    def _conv(self, values: np.ndarray) -> np.ndarray:
        full = np.convolve(values, self.kernel, mode="full")
        return full[self._m:self._m + self.n]

    def __call__(self, values: np.ndarray) -> np.ndarray:
        return self._conv(np.asarray(values, dtype=float)) / self.denominator

    def transpose(self, grad: np.ndarray) -> np.ndarray:
        """Adjoint of the filter, for chain-rule sensitivities."""
        return self._conv(np.asarray(grad, dtype=float) / self.denominator)


class Filter2D:
    """Precomputed normalised density filter on an ``ny x nx`` grid.

    The weight matrix is built once and reused for the forward map and its
    transpose. Instances are immutable after construction.
    """

    def __init__(self, nx: int, ny: int, r_fil: float):
        if not r_fil > 0:
            raise ValueError(f"r_fil must be positive, got {r_fil}")
        self.nx, self.ny, self.r_fil = int(nx), int(ny), float(r_fil)
        m = int(np.ceil(r_fil)) - 1
        iy, ix = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
        iy, ix = iy.ravel(), ix.ravel()
        rows, cols, vals = [], [], []
        for dy in range(-m, m + 1):
            for dx in range(-m, m + 1):
                w = 1.0 - np.hypot(dx, dy) / r_fil
                if w <= 0:
                    continue
                jy, jx = iy + dy, ix + dx
                ok = (jy >= 0) & (jy < ny) & (jx >= 0) & (jx < nx)
                rows.append((iy * nx + ix)[ok])
                cols.append((jy * nx + jx)[ok])
                vals.append(np.full(ok.sum(), w))
        nel = nx * ny
        H = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nel, nel),
        )
        rowsum = np.asarray(H.sum(axis=1)).ravel()
        self.matrix = sp.diags(1.0 / rowsum) @ H
        self.matrix_t = self.matrix.T.tocsr()

    def __call__(self, values: np.ndarray) -> np.ndarray:
        shape = np.shape(values)
        return (self.matrix @ np.ravel(values)).reshape(shape)

    def transpose(self, grad: np.ndarray) -> np.ndarray:
        shape = np.shape(grad)
        return (self.matrix_t @ np.ravel(grad)).reshape(shape)


@lru_cache(maxsize=16)
def _filter1d(n: int, r_fil: float) -> Filter1D:
    return Filter1D(n, r_fil)


@lru_cache(maxsize=8)
def _filter2d(nx: int, ny: int, r_fil: float) -> Filter2D:
    return Filter2D(nx, ny, r_fil)


def filter_1d(field: Field1D, r_fil: float) -> Field1D:
    """Density-filter a 1D field with hat radius ``r_fil`` (elements)."""
    if not r_fil > 0:
        raise ValueError(f"r_fil must be positive, got {r_fil}")
    out = _filter1d(field.n, float(r_fil))(field.values)
    return Field1D(np.clip(out, 0.0, 1.0), field.element_size)


def filter_2d(field: Field2D, r_fil: float) -> Field2D:
    """Density-filter a 2D field with Euclidean hat radius ``r_fil`` (elements)."""
    if not r_fil > 0:
        raise ValueError(f"r_fil must be positive, got {r_fil}")
    out = _filter2d(field.nx, field.ny, float(r_fil))(field.values)
    return Field2D(np.clip(out, 0.0, 1.0), field.element_size)


def filtered_slab_value(x, h: float, r_fil: float):
    """Continuous hat-filtered value of a unit slab on ``[-h/2, h/2]`` at ``x``.

    Exact piecewise-quadratic evaluation of the convolution; accepts scalars
    or arrays for ``x``.
    """
    if h < 0:
        raise ValueError("slab width must be non-negative")
    if not r_fil > 0:
        raise ValueError("r_fil must be positive")
    x = np.asarray(x, dtype=float)
    out = _hat_cdf(x + h / 2, r_fil) - _hat_cdf(x - h / 2, r_fil)
    return float(out) if out.ndim == 0 else out


def _hat_cdf(t, r):
    # cumulative integral of (1/r)(1 - |t|/r) over [-r, t]
    t = np.clip(t, -r, r)
    return np.where(t <= 0, (t + r) ** 2 / (2 * r * r), 1 - (r - t) ** 2 / (2 * r * r))


# --------------------------------------------------------------------------
# Projection
# --------------------------------------------------------------------------

def project_smooth(value, p: ProjectionParams):
    """Smoothed Heaviside projection (tanh sum form).

    ``[tanh(b*eta) + tanh(b*(x - eta))] / [tanh(b*eta) + tanh(b*(1 - eta))]``.
    ``beta = inf`` falls back to the perfect step.
    """
    if np.isinf(p.beta):
        return project_perfect(value, p.eta)
    b, eta = p.beta, p.eta
    x = np.asarray(value, dtype=float)
    num = np.tanh(b * eta) + np.tanh(b * (x - eta))
    den = np.tanh(b * eta) + np.tanh(b * (1.0 - eta))
    out = num / den
    return float(out) if out.ndim == 0 else out


def project_smooth_derivative(value, p: ProjectionParams):
    """Derivative of :func:`project_smooth` with respect to the filtered density."""
    b, eta = p.beta, p.eta
    x = np.asarray(value, dtype=float)
    if np.isinf(b):
        out = np.zeros_like(x)
    else:
        den = np.tanh(b * eta) + np.tanh(b * (1.0 - eta))
        out = b / np.cosh(b * (x - eta)) ** 2 / den
    return float(out) if out.ndim == 0 else out


def project_perfect(value, eta: float):
    """Step projection: 1 where ``value >= eta`` else 0."""
    out = (np.asarray(value) >= eta).astype(float)
    return float(out) if out.ndim == 0 else out


def binarize_cutoff(field, epsilon: float):
    """Post-processing cut-off: densities ``>= epsilon`` become 1, the rest 0.

    Accepts :class:`Field1D`, :class:`Field2D` or a plain array and returns the
    same kind.
    """
    if isinstance(field, Field1D):
        return Field1D(project_perfect(field.values, epsilon), field.element_size)
    if isinstance(field, Field2D):
        return Field2D(project_perfect(field.values, epsilon), field.element_size)
    return project_perfect(field, epsilon)
