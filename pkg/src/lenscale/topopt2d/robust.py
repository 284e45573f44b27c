"""Robust (eroded / intermediate / dilated) topology optimisation of the heat sink.

Three formulations are available:

* ``dilated`` (default): minimise the eroded compliance; the volume
  constraint acts on the dilated design with an upper bound rescaled from
  the intermediate target every few iterations.
* ``intermediate``: same objective but the volume constraint acts on the
  intermediate design. The dilated field never enters this problem.
* ``minmax``: minimise ``max(c_ero, c_int, c_dil)`` through an auxiliary
  bound variable; volume constraint as in ``dilated``.

For the heat problem compliance grows monotonically as material is removed,
so the eroded design is the worst case and the first two forms reduce the
min-max problem to a single objective.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..analytic import ThresholdTriple
from ..fields import Filter2D, ProjectionParams, project_smooth, project_smooth_derivative
from .fem import HeatProblem, ThermalModel
from .mma import MMA


class ConstraintMode(str, enum.Enum):
    INTERMEDIATE = "intermediate"
    DILATED = "dilated"
    MINMAX = "minmax"


@dataclass(frozen=True)
class BetaSchedule:
    """Piecewise-constant projection steepness.

    ``start`` raised by ``increment`` every ``every`` iterations up to
    ``max_beta``, followed by ``final_iterations`` at ``final_beta``.
    """

    start: float = 1.0
    increment: float = 1.0
    every: int = 20
    max_beta: float = 16.0
    final_beta: float = 32.0
    final_iterations: int = 20

    def __post_init__(self):
        if not (self.start > 0 and self.increment >= 0 and self.every >= 1):
            raise ValueError("invalid beta schedule")
        if self.max_beta < self.start or self.final_beta < self.max_beta:
            raise ValueError("beta schedule must be nondecreasing")

    @property
    def n_stages(self) -> int:
        if self.increment == 0:
            return 1
        return int(math.floor((self.max_beta - self.start) / self.increment + 1e-9)) + 1

    @property
    def total_iterations(self) -> int:
        return self.n_stages * self.every + self.final_iterations

    def beta_at(self, iteration: int) -> float:
        """Steepness for 0-based ``iteration``."""
        stage = iteration // self.every
        if stage < self.n_stages:
            return self.start + stage * self.increment
        return self.final_beta

    def is_final_stage(self, iteration: int) -> bool:
        return iteration >= self.n_stages * self.every


@dataclass(frozen=True)
class RobustConfig:
    thresholds: ThresholdTriple
    r_fil: float
    volume_fraction: float = 0.2
    constraint_mode: ConstraintMode = ConstraintMode.DILATED
    beta_schedule: BetaSchedule = field(default_factory=BetaSchedule)
    max_iterations: int | None = None
    move_limit: float = 0.2
    bound_update_every: int = 20
    track_compliances: bool = True
    tol_change: float = 0.0
    oscillation_window: int = 20

    def __post_init__(self):
        object.__setattr__(self, "constraint_mode", ConstraintMode(self.constraint_mode))
        if not 0 < self.volume_fraction < 1:
            raise ValueError("volume_fraction must lie in (0, 1)")
        if not self.r_fil > 0:
            raise ValueError("r_fil must be positive")
        if not 0 < self.move_limit <= 1:
            raise ValueError("move_limit must lie in (0, 1]")

    @property
    def iterations(self) -> int:
        total = self.beta_schedule.total_iterations
        return total if self.max_iterations is None else min(total, self.max_iterations)


@dataclass
class HistoryRow:
    iteration: int
    beta: float
    c_ero: float
    c_int: float
    c_dil: float
    vol_ero: float
    vol_int: float
    vol_dil: float
    v_dil_bound: float
    change: float


@dataclass
class DesignState2D:
    """Snapshot of the optimisation; fields are ``ny x nx`` arrays."""

    x: np.ndarray
    filtered: np.ndarray
    eroded: np.ndarray
    intermediate: np.ndarray
    dilated: np.ndarray
    beta: float
    iteration: int
    v_dil_bound: float
    history: list[HistoryRow] = field(default_factory=list)
    x_history: list[np.ndarray] = field(default_factory=list)
    status: str = "running"

    @property
    def projected(self):
        return self.eroded, self.intermediate, self.dilated


def scale_dilated_bound(vol_int: float, vol_dil: float, v_int_target: float,
                        current: float | None = None) -> float:
    """``V*_dil = V*_int vol_dil / vol_int``; keeps ``current`` when the ratio is 0/0."""
    if vol_int <= 0:
        return v_int_target if current is None else current
    return v_int_target * vol_dil / vol_int


class RobustHeatSink:
    """Evaluates objective, constraints and sensitivities for the three designs."""

    def __init__(self, problem: HeatProblem, config: RobustConfig):
        self.problem = problem
        self.config = config
        self.model = ThermalModel(problem)
        self.filter = Filter2D(problem.nx, problem.ny, config.r_fil)
        self.nel = problem.n_elements

    def _symmetrize(self, v):
        if not self.problem.symmetric:
            return v
        g = v.reshape(self.problem.ny, self.problem.nx)
        return (0.5 * (g + g[::-1, :])).ravel()

    def project(self, x: np.ndarray, beta: float):
        xt = self.filter(x)
        t = self.config.thresholds
        out = {}
        for name, eta in (("ero", t.eta_ero), ("int", t.eta_int), ("dil", t.eta_dil)):
            p = ProjectionParams(beta, eta)
            out[name] = (project_smooth(xt, p), project_smooth_derivative(xt, p))
        return xt, out

    def compliance(self, rho_bar: np.ndarray, dproj: np.ndarray | None = None, scale=1.0):
        """Compliance of a projected design and, if ``dproj`` is given, d c / d x."""
        sol = self.model.solve(self.problem.conductivity(rho_bar), self.model.load * scale)
        if dproj is None:
            return sol.compliance, None
        dc_drho = -self.problem.conductivity_derivative(rho_bar) * self.model.element_energy(
            sol.temperature)
        return sol.compliance, self._symmetrize(self.filter.transpose(dc_drho * dproj))

    def volume(self, rho_bar: np.ndarray, dproj: np.ndarray):
        return float(rho_bar.mean()), self._symmetrize(self.filter.transpose(dproj / self.nel))

    def sensitivities(self, x: np.ndarray, beta: float, scale: float = 1.0):
        """Compliances and their gradients w.r.t. ``x`` for (ero, int, dil)."""
        _, proj = self.project(x, beta)
        return {k: self.compliance(v[0], v[1], scale) for k, v in proj.items()}


def _detect_oscillation(values, window):
    if len(values) < window + 1:
        return False
    v = np.asarray(values[-(window + 1):])
    d = np.diff(v)
    flips = np.sum(np.sign(d[1:]) * np.sign(d[:-1]) < 0)
    amplitude = np.max(np.abs(d)) / max(abs(v[-1]), 1e-30)
    return flips >= 0.75 * (window - 1) and amplitude > 1e-3


def optimize(problem: HeatProblem, config: RobustConfig, x0=None, callback=None,
             keep_x_history: bool = False) -> DesignState2D:
    """Run the robust optimisation and return the final state.

    ``x0`` is the initial design (``ny x nx`` or flat); defaults to a uniform
    field at the target volume fraction.
    """
    rs = RobustHeatSink(problem, config)
    nel = problem.n_elements
    if x0 is None:
        x = np.full(nel, config.volume_fraction)
    else:
        x = np.clip(np.ravel(np.asarray(x0, float)), 0.0, 1.0).copy()
        if x.size != nel:
            raise ValueError(f"initial design has {x.size} values, expected {nel}")
    mode = config.constraint_mode
    v_int = config.volume_fraction
    v_dil_bound = v_int
    sched = config.beta_schedule

    if mode is ConstraintMode.MINMAX:
        opt = MMA(n=nel + 1, m=4, a0=1.0, a=np.array([1.0, 1.0, 1.0, 0.0]),
                  c=np.full(4, 1000.0), d=np.zeros(4), move=config.move_limit)
        x_ext = np.concatenate([x, [0.0]])
    else:
        opt = MMA(n=nel, m=1, a0=1.0, a=np.zeros(1), c=np.full(1, 1000.0), d=np.zeros(1),
                  move=config.move_limit)
    c_scale = None
    history: list[HistoryRow] = []
    x_hist: list[np.ndarray] = []
    status = "max_iterations"
    obj_track: list[float] = []

    n_iter = config.iterations
    it = 0
    for it in range(n_iter):
        beta = sched.beta_at(it)
        xt, proj = rs.project(x, beta)
        (r_ero, d_ero), (r_int, d_int), (r_dil, d_dil) = proj["ero"], proj["int"], proj["dil"]

        needs_dil = mode is not ConstraintMode.INTERMEDIATE
        if needs_dil and it > 0 and it % config.bound_update_every == 0:
            v_dil_bound = scale_dilated_bound(r_int.mean(), r_dil.mean(), v_int, v_dil_bound)

        c_ero, g_ero = rs.compliance(r_ero, d_ero)
        if c_scale is None:
            c_scale = c_ero if c_ero > 0 else 1.0
        want_all = mode is ConstraintMode.MINMAX or config.track_compliances
        if want_all:
            c_int, g_int = rs.compliance(r_int, d_int if mode is ConstraintMode.MINMAX else None)
            c_dil, g_dil = rs.compliance(r_dil, d_dil if mode is ConstraintMode.MINMAX else None)
        else:
            c_int = c_dil = float("nan")

        if mode is ConstraintMode.INTERMEDIATE:
            vol, dvol = rs.volume(r_int, d_int)
            g = np.array([vol / v_int - 1.0])
        else:
            vol, dvol = rs.volume(r_dil, d_dil)
            g = np.array([vol / v_dil_bound - 1.0])

        scale = 10.0 / c_scale
        if mode is ConstraintMode.MINMAX:
            fvals = np.array([c_ero * scale, c_int * scale, c_dil * scale, g[0]])
            dfdx = np.zeros((4, nel + 1))
            dfdx[0, :nel] = g_ero * scale
            dfdx[1, :nel] = g_int * scale
            dfdx[2, :nel] = g_dil * scale
            dfdx[3, :nel] = dvol / (v_int if mode is ConstraintMode.INTERMEDIATE else v_dil_bound)
            x_ext[-1] = max(x_ext[-1], fvals[:3].max())
            zmax = max(1e3, 10 * fvals[:3].max())
            lo = np.concatenate([np.maximum(0.0, x - config.move_limit), [0.0]])
            hi = np.concatenate([np.minimum(1.0, x + config.move_limit), [zmax]])
            df0 = np.zeros(nel + 1)
            x_new_ext = opt.update(x_ext, 0.0, df0, fvals, dfdx, lo, hi)
            x_new = x_new_ext[:nel]
            x_ext = x_new_ext
            objective = float(fvals[:3].max())
        else:
            f0 = c_ero * scale
            df0 = g_ero * scale
            dg = dvol / (v_int if mode is ConstraintMode.INTERMEDIATE else v_dil_bound)
            lo = np.maximum(0.0, x - config.move_limit)
            hi = np.minimum(1.0, x + config.move_limit)
            x_new = opt.update(x, f0, df0, g, dg[None, :], lo, hi)
            objective = f0
        x_new = np.clip(rs._symmetrize(x_new), 0.0, 1.0)
        change = float(np.max(np.abs(x_new - x)))

        history.append(HistoryRow(
            it, beta, c_ero, c_int, c_dil,
            float(r_ero.mean()), float(r_int.mean()), float(r_dil.mean()), v_dil_bound, change,
        ))
        if keep_x_history:
            x_hist.append(x.copy())
        if callback is not None:
            callback(history[-1])
        x = x_new
        if sched.is_final_stage(it):
            obj_track.append(objective)
            if config.tol_change > 0 and change < config.tol_change:
                status = "converged"
                break
            if _detect_oscillation(obj_track, config.oscillation_window):
                status = "oscillating"
                break

    beta = sched.beta_at(min(it, n_iter - 1))
    xt, proj = rs.project(x, beta)
    if keep_x_history:
        x_hist.append(x.copy())
    shape = (problem.ny, problem.nx)
    return DesignState2D(
        x=x.reshape(shape),
        filtered=xt.reshape(shape),
        eroded=proj["ero"][0].reshape(shape),
        intermediate=proj["int"][0].reshape(shape),
        dilated=proj["dil"][0].reshape(shape),
        beta=beta,
        iteration=len(history),
        v_dil_bound=v_dil_bound,
        history=history,
        x_history=x_hist,
        status=status,
    )
