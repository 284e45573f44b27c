"""Bilinear finite elements for steady heat conduction on a square grid.

Element ``e = iy * nx + ix`` occupies ``[ix, ix+1] x [iy, iy+1]`` (in
element units); node ``(jx, jy)`` has index ``jy * (nx + 1) + jx``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

# conductivity matrix of a unit-conductivity Q4 element (independent of size in 2D)
KE = np.array([
    [2 / 3, -1 / 6, -1 / 3, -1 / 6],
    [-1 / 6, 2 / 3, -1 / 6, -1 / 3],
    [-1 / 3, -1 / 6, 2 / 3, -1 / 6],
    [-1 / 6, -1 / 3, -1 / 6, 2 / 3],
])


class SingularSystemError(RuntimeError):
    """The thermal system has no prescribed temperature to anchor it."""


@dataclass(frozen=True)
class HeatProblem:
    """Heat sink on a square grid of ``nx x ny`` elements.

    Uniform heat generation ``heat`` per element (split equally over its four
    nodes) and zero temperature on a segment of one boundary edge, given as a
    centre and an extent in fractions of the edge length.
    """

    nx: int = 100
    ny: int = 100
    k0: float = 1.0
    kmin: float = 1e-3
    penal: float = 3.0
    heat: float = 1e-4
    sink_side: str = "left"
    sink_center: float = 0.5
    sink_extent: float = 0.1
    symmetric: bool = False

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("mesh needs at least one element per direction")
        if not 0 < self.kmin < self.k0:
            raise ValueError("require 0 < kmin < k0")
        if self.penal < 1:
            raise ValueError("penalisation exponent must be >= 1")
        if self.sink_side not in ("left", "right", "bottom", "top"):
            raise ValueError(f"unknown sink side {self.sink_side!r}")
        if not 0 <= self.sink_extent <= 1:
            raise ValueError("sink_extent must lie in [0, 1]")

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    def conductivity(self, rho: np.ndarray) -> np.ndarray:
        """SIMP interpolation ``kmin + rho^p (k0 - kmin)``."""
        return self.kmin + np.power(rho, self.penal) * (self.k0 - self.kmin)

    def conductivity_derivative(self, rho: np.ndarray) -> np.ndarray:
        return self.penal * np.power(rho, self.penal - 1) * (self.k0 - self.kmin)

    def sink_nodes(self) -> np.ndarray:
        nxn, nyn = self.nx + 1, self.ny + 1
        if self.sink_side in ("left", "right"):
            length = self.ny
        else:
            length = self.nx
        lo = self.sink_center - self.sink_extent / 2
        hi = self.sink_center + self.sink_extent / 2
        t = np.arange(length + 1) / length
        along = np.flatnonzero((t >= lo - 1e-12) & (t <= hi + 1e-12))
        if self.sink_side == "left":
            return along * nxn
        if self.sink_side == "right":
            return along * nxn + self.nx
        if self.sink_side == "bottom":
            return along
        return (nyn - 1) * nxn + along

    def load_vector(self, scale: float = 1.0) -> np.ndarray:
        f = np.zeros(self.n_nodes)
        np.add.at(f, element_dofs(self.nx, self.ny).ravel(), scale * self.heat / 4)
        return f


def element_dofs(nx: int, ny: int) -> np.ndarray:
    """Node indices of every element, counter-clockwise from the lower-left corner."""
    iy, ix = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    n0 = (iy * (nx + 1) + ix).ravel()
    return np.stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1], axis=1)


@dataclass
class ThermalSolution:
    temperature: np.ndarray
    compliance: float


class ThermalModel:
    """Assembles and solves ``K(k) T = f`` for a fixed problem; reuses index arrays."""

    def __init__(self, problem: HeatProblem):
        self.problem = problem
        self.edof = element_dofs(problem.nx, problem.ny)
        self._rows = np.repeat(self.edof, 4, axis=1).ravel()
        self._cols = np.tile(self.edof, (1, 4)).ravel()
        fixed = problem.sink_nodes()
        if fixed.size == 0:
            raise SingularSystemError(
                "no prescribed-temperature nodes: the system is singular "
                f"(all {problem.n_nodes} nodes unconstrained)"
            )
        self.fixed = fixed
        self.free = np.setdiff1d(np.arange(problem.n_nodes), fixed)
        self.load = problem.load_vector()

    def stiffness(self, k: np.ndarray) -> sp.csc_matrix:
        vals = (k.ravel()[:, None] * KE.ravel()[None, :]).ravel()
        n = self.problem.n_nodes
        return sp.coo_matrix((vals, (self._rows, self._cols)), shape=(n, n)).tocsc()

    def solve(self, k: np.ndarray, load: np.ndarray | None = None) -> ThermalSolution:
        """Temperatures and thermal compliance ``f^T T`` for element conductivities ``k``."""
        f = self.load if load is None else load
        K = self.stiffness(np.asarray(k, float))
        free = self.free
        T = np.zeros(self.problem.n_nodes)
        Kff = K[free][:, free]
        T[free] = spsolve(Kff, f[free], permc_spec="MMD_AT_PLUS_A")
        if not np.all(np.isfinite(T)):
            raise SingularSystemError("thermal system could not be solved")
        return ThermalSolution(T, float(f @ T))

    def element_energy(self, T: np.ndarray) -> np.ndarray:
        """``T_e^T KE T_e`` per element, the compliance sensitivity kernel."""
        Te = T[self.edof]
        return np.einsum("ij,jk,ik->i", Te, KE, Te)


def solve_thermal(problem: HeatProblem, conductivity) -> ThermalSolution:
    """Solve for a field of element conductivities (``ny x nx`` or flat)."""
    return ThermalModel(problem).solve(np.ravel(np.asarray(conductivity, float)))
