import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lenscale.analytic import ThresholdTriple
from lenscale.fields import ProjectionParams, project_smooth
from lenscale.topopt2d import (
    KE,
    MMA,
    BetaSchedule,
    ConstraintMode,
    HeatProblem,
    RobustConfig,
    RobustHeatSink,
    SingularSystemError,
    ThermalModel,
    optimize,
    scale_dilated_bound,
    solve_thermal,
)


def oracle_ke():
    """Unit-square Q4 conductivity matrix by 2x2 Gauss quadrature."""
    g = 1 / np.sqrt(3)
    ke = np.zeros((4, 4))
    corners = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    for xi in (-g, g):
        for eta in (-g, g):
            # derivatives w.r.t. local coordinates, mapped to a unit square (dx/dxi = 1/2)
            dn = np.array([[0.25 * cx * (1 + cy * eta), 0.25 * cy * (1 + cx * xi)]
                           for cx, cy in corners]) * 2
            ke += dn @ dn.T * 0.25
    return ke


def oracle_dense_solve(problem, k):
    """Dense assembly by explicit element loop and a dense linear solve."""
    nx, ny = problem.nx, problem.ny
    n = problem.n_nodes
    K = np.zeros((n, n))
    f = np.zeros(n)
    ke = oracle_ke()
    for iy in range(ny):
        for ix in range(nx):
            n0 = iy * (nx + 1) + ix
            nodes = [n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]
            e = iy * nx + ix
            for a in range(4):
                f[nodes[a]] += problem.heat / 4
                for b in range(4):
                    K[nodes[a], nodes[b]] += k[e] * ke[a, b]
    fixed = problem.sink_nodes()
    free = np.setdiff1d(np.arange(n), fixed)
    T = np.zeros(n)
    T[free] = np.linalg.solve(K[np.ix_(free, free)], f[free])
    return T, f @ T


def small_config(**kw):
    base = dict(thresholds=ThresholdTriple(0.7, 0.5, 0.3), r_fil=2.5, volume_fraction=0.3)
    base.update(kw)
    return RobustConfig(**base)


# -- finite elements --------------------------------------------------------------------

def test_element_matrix_matches_quadrature():
    assert np.allclose(KE, oracle_ke(), atol=1e-14)
    assert np.allclose(KE.sum(axis=1), 0.0, atol=1e-15)
    assert np.allclose(KE, KE.T)


@pytest.mark.parametrize("nx,ny,side", [(2, 2, "left"), (3, 2, "bottom"), (4, 5, "top"),
                                        (5, 3, "right")])
def test_sparse_solve_matches_dense(nx, ny, side):
    problem = HeatProblem(nx=nx, ny=ny, sink_side=side, sink_extent=0.5)
    rng = np.random.default_rng(nx * 10 + ny)
    k = rng.uniform(0.1, 1.0, nx * ny)
    sol = ThermalModel(problem).solve(k)
    T_ref, c_ref = oracle_dense_solve(problem, k)
    assert np.allclose(sol.temperature, T_ref, rtol=1e-10, atol=1e-14)
    assert sol.compliance == pytest.approx(c_ref, rel=1e-10)


def test_two_by_two_uniform():
    problem = HeatProblem(nx=2, ny=2, sink_extent=0.0)
    assert list(problem.sink_nodes()) == [3]
    sol = solve_thermal(problem, np.ones((2, 2)))
    T_ref, c_ref = oracle_dense_solve(problem, np.ones(4))
    assert sol.compliance == pytest.approx(c_ref, rel=1e-12)
    assert sol.temperature[3] == 0.0
    assert np.all(sol.temperature >= 0)


def test_compliance_scales_with_load_squared():
    problem = HeatProblem(nx=6, ny=6)
    model = ThermalModel(problem)
    k = np.full(36, 0.5)
    c1 = model.solve(k).compliance
    c4 = model.solve(k, model.load * 4).compliance
    assert c4 == pytest.approx(16 * c1, rel=1e-12)


def test_compliance_scales_inversely_with_conductivity():
    problem = HeatProblem(nx=6, ny=6)
    model = ThermalModel(problem)
    k = np.random.default_rng(1).uniform(0.2, 1, 36)
    assert model.solve(3 * k).compliance == pytest.approx(model.solve(k).compliance / 3,
                                                          rel=1e-12)


def test_void_conductivity_ratio():
    problem = HeatProblem(nx=4, ny=4)
    k = problem.conductivity(np.array([0.0, 1.0]))
    assert k[1] / k[0] == pytest.approx(1e3)
    assert problem.conductivity_derivative(np.array([0.5]))[0] == pytest.approx(
        3 * 0.25 * (1 - 1e-3))


def test_sink_nodes_symmetric_segment():
    problem = HeatProblem(nx=10, ny=10)
    nodes = problem.sink_nodes()
    rows = nodes // 11
    assert list(rows) == [5] or list(rows) == list(range(rows.min(), rows.max() + 1))
    assert rows.min() + rows.max() == 10
    assert np.all(nodes % 11 == 0)


def test_singular_system():
    with pytest.raises(SingularSystemError):
        ThermalModel(HeatProblem(nx=4, ny=4, sink_center=2.0, sink_extent=0.1))


@pytest.mark.parametrize("kw", [{"nx": 0}, {"kmin": 2.0}, {"penal": 0.5},
                                {"sink_side": "middle"}, {"sink_extent": 1.5}])
def test_problem_validation(kw):
    with pytest.raises(ValueError):
        HeatProblem(**kw)


# -- sensitivities ----------------------------------------------------------------------------

@pytest.mark.parametrize("beta", [1.0, 8.0])
def test_adjoint_matches_finite_differences(beta):
    problem = HeatProblem(nx=20, ny=20)
    rs = RobustHeatSink(problem, small_config())
    rng = np.random.default_rng(7)
    x = rng.uniform(0.2, 0.8, 400)
    sens = rs.sensitivities(x, beta)
    h = 1e-4
    for name in ("ero", "int", "dil"):
        grad = sens[name][1]
        idx = np.argsort(-np.abs(grad))[:3].tolist() + [0, 210, 399]
        for e in idx:
            xp, xm = x.copy(), x.copy()
            xp[e] += h
            xm[e] -= h
            cp = rs.compliance(rs.project(xp, beta)[1][name][0])[0]
            cm = rs.compliance(rs.project(xm, beta)[1][name][0])[0]
            fd = (cp - cm) / (2 * h)
            assert abs(grad[e] - fd) <= 1e-4 * max(abs(fd), 1e-3 * np.abs(grad).max())


def test_volume_gradient_matches_finite_differences():
    problem = HeatProblem(nx=12, ny=12)
    rs = RobustHeatSink(problem, small_config())
    x = np.random.default_rng(3).uniform(0, 1, 144)
    _, proj = rs.project(x, 6.0)
    _, dvol = rs.volume(*proj["dil"])
    h = 1e-6
    for e in (0, 50, 143):
        xp, xm = x.copy(), x.copy()
        xp[e] += h
        xm[e] -= h
        fd = (rs.project(xp, 6.0)[1]["dil"][0].mean() - rs.project(xm, 6.0)[1]["dil"][0].mean())
        assert dvol[e] == pytest.approx(fd / (2 * h), rel=1e-6)


def test_projection_ordering():
    rs = RobustHeatSink(HeatProblem(nx=10, ny=10), small_config())
    x = np.random.default_rng(0).uniform(0, 1, 100)
    _, proj = rs.project(x, 8.0)
    ero, mid, dil = proj["ero"][0], proj["int"][0], proj["dil"][0]
    assert np.all(ero <= mid + 1e-12) and np.all(mid <= dil + 1e-12)
    c = [rs.compliance(v)[0] for v in (ero, mid, dil)]
    assert c[0] >= c[1] >= c[2]


def test_symmetric_gradient():
    problem = HeatProblem(nx=8, ny=8, symmetric=True)
    rs = RobustHeatSink(problem, small_config())
    x = np.random.default_rng(2).uniform(0, 1, (8, 8))
    x = 0.5 * (x + x[::-1])
    g = rs.sensitivities(x.ravel(), 4.0)["ero"][1].reshape(8, 8)
    assert np.allclose(g, g[::-1])


# -- volume bound -------------------------------------------------------------------------

def test_scale_dilated_bound():
    assert scale_dilated_bound(0.30, 0.36, 0.20) == pytest.approx(0.24)
    assert scale_dilated_bound(0.0, 0.0, 0.20) == 0.20
    assert scale_dilated_bound(0.0, 0.0, 0.20, current=0.27) == 0.27


@given(st.floats(0.01, 1), st.floats(0.01, 1), st.floats(0.05, 0.95))
def test_scale_dilated_bound_ratio(vi, vd, target):
    b = scale_dilated_bound(vi, vd, target)
    assert b / target == pytest.approx(vd / vi)


# -- continuation schedule ------------------------------------------------------------------

def test_default_beta_schedule():
    s = BetaSchedule()
    assert s.n_stages == 16
    assert s.total_iterations == 340
    assert [s.beta_at(i) for i in (0, 19, 20, 319, 320, 339)] == [1, 1, 2, 16, 32, 32]
    assert not s.is_final_stage(319) and s.is_final_stage(320)


def test_constant_schedule():
    s = BetaSchedule(start=8, increment=0, max_beta=8, final_beta=8, final_iterations=0)
    assert s.total_iterations == 20
    assert s.beta_at(100) == 8


@pytest.mark.parametrize("kw", [{"start": 0}, {"every": 0}, {"max_beta": 0.5},
                                {"final_beta": 4}])
def test_schedule_validation(kw):
    with pytest.raises(ValueError):
        BetaSchedule(**kw)


def test_config_iterations_and_validation():
    assert small_config().iterations == 340
    assert small_config(max_iterations=7).iterations == 7
    with pytest.raises(ValueError):
        small_config(volume_fraction=1.0)
    with pytest.raises(ValueError):
        small_config(r_fil=0)
    assert small_config(constraint_mode="intermediate").constraint_mode is \
        ConstraintMode.INTERMEDIATE


# -- MMA ----------------------------------------------------------------------------------

def test_mma_constrained_quadratic():
    # min |x - t|^2 s.t. sum(x) <= 1, 0 <= x <= 1 -> (0.5, 0.5, 0)
    t = np.array([0.8, 0.8, 0.1])
    opt = MMA(n=3, m=1, a=np.zeros(1), c=np.full(1, 1000.0), d=np.zeros(1))
    x = np.full(3, 0.3)
    for _ in range(60):
        x = opt.update(x, np.sum((x - t) ** 2), 2 * (x - t), np.array([x.sum() - 1]),
                       np.ones((1, 3)), np.zeros(3), np.ones(3))
    assert np.allclose(x, [0.5, 0.5, 0.0], atol=1e-3)


def test_mma_minmax_form():
    # min max(x, 1 - x) on [0, 1] -> 0.5 via the bound variable z
    opt = MMA(n=2, m=2, a0=1.0, a=np.ones(2), c=np.full(2, 1000.0), d=np.zeros(2))
    v = np.array([0.9, 1.0])
    for _ in range(80):
        x = v[0]
        fval = np.array([x - v[1], 1 - x - v[1]])
        dfdx = np.array([[1.0, -1.0], [-1.0, -1.0]])
        v = opt.update(v, v[1], np.array([0.0, 1.0]), fval, dfdx, [0, 0], [1, 2])
    assert v[0] == pytest.approx(0.5, abs=2e-3)


def test_mma_checks_shapes():
    opt = MMA(n=3, m=1)
    with pytest.raises(ValueError):
        opt.update(np.zeros(2), 0.0, np.zeros(2), np.zeros(1), np.zeros((1, 2)), 0, 1)


# -- optimisation runs ----------------------------------------------------------------------

SHORT = BetaSchedule(start=1, increment=1, every=5, max_beta=4, final_beta=8,
                     final_iterations=5)


def test_intermediate_runs_ignore_dilation_threshold():
    problem = HeatProblem(nx=16, ny=16)
    runs = []
    for eta_dil in (0.14, 0.40):
        cfg = small_config(thresholds=ThresholdTriple(0.6, 0.5, eta_dil), r_fil=2.0,
                           constraint_mode="intermediate", beta_schedule=SHORT,
                           track_compliances=True)
        runs.append(optimize(problem, cfg, keep_x_history=True))
    a, b = runs
    assert len(a.x_history) == len(b.x_history) == SHORT.total_iterations + 1
    for xa, xb in zip(a.x_history, b.x_history):
        assert np.array_equal(xa, xb)
    assert not np.allclose(a.dilated, b.dilated)


@pytest.mark.parametrize("mode", ["dilated", "intermediate", "minmax"])
def test_short_run_improves_and_respects_volume(mode):
    problem = HeatProblem(nx=16, ny=16)
    cfg = small_config(constraint_mode=mode, beta_schedule=SHORT)
    state = optimize(problem, cfg)
    h = state.history
    assert len(h) == SHORT.total_iterations == state.iteration
    assert h[-1].c_ero < h[0].c_ero
    assert state.x.shape == (16, 16)
    assert np.all((state.x >= 0) & (state.x <= 1))
    if mode == "intermediate":
        assert h[-1].vol_int <= cfg.volume_fraction * 1.05
    else:
        assert h[-1].vol_dil <= h[-1].v_dil_bound * 1.05
    assert h[-1].c_ero >= h[-1].c_int >= h[-1].c_dil


def test_dilated_bound_rescaled_on_schedule():
    cfg = small_config(beta_schedule=SHORT, bound_update_every=5)
    state = optimize(HeatProblem(nx=12, ny=12), cfg)
    bounds = [row.v_dil_bound for row in state.history]
    assert all(b == cfg.volume_fraction for b in bounds[:5])
    for i in (5, 10, 15):
        assert bounds[i] == bounds[i + 1] == bounds[i + 4]
    assert bounds[-1] > cfg.volume_fraction


def test_initial_design_checked():
    with pytest.raises(ValueError):
        optimize(HeatProblem(nx=4, ny=4), small_config(max_iterations=1), x0=np.zeros(5))


def test_callback_and_tolerance_stop():
    seen = []
    cfg = small_config(beta_schedule=SHORT, tol_change=0.5)
    state = optimize(HeatProblem(nx=8, ny=8), cfg, callback=seen.append)
    assert state.status == "converged"
    assert len(seen) == state.iteration <= SHORT.total_iterations
    assert seen[-1].beta == 8


def test_projection_matches_scalar_definition():
    rs = RobustHeatSink(HeatProblem(nx=6, ny=6), small_config(r_fil=1.5))
    x = np.random.default_rng(4).uniform(0, 1, 36)
    xt, proj = rs.project(x, 5.0)
    assert np.allclose(proj["int"][0], project_smooth(xt, ProjectionParams(5.0, 0.5)))
