import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from lenscale.fields import Field2D
from lenscale.measure2d import (
    RIDGE_SLOPE,
    EmptyPhaseError,
    clean,
    corner_elements,
    distance_transform,
    measure,
    measure_min_solid,
    measure_min_void,
    quantize,
    remove_specks,
    remove_spurs,
)

# ---------------------------------------------------------------------------
# Brute-force oracle: explicit scans over every lattice centre and every
# opposite-phase element, scalar ridge test and an exhaustive
# centres x radii coverage search.
# ---------------------------------------------------------------------------

DIRS = [((0, 1), (1, 0)), ((1, 0), (0, 1)), ((1, 1), (1, -1)), ((1, -1), (1, 1))]


def oracle_radius(mask, exterior_is_phase, margin):
    pad = margin if exterior_is_phase else 1
    padded = np.pad(mask, pad, constant_values=exterior_is_phase)
    Ny, Nx = padded.shape
    opp = np.argwhere(~padded).astype(float)  # (iy, ix) element indices
    H, W = 2 * Ny + 1, 2 * Nx + 1
    r = np.full((H, W), np.inf)
    if len(opp):
        for Ly in range(H):
            for Lx in range(W):
                y, x = (Ly - 1) / 2, (Lx - 1) / 2
                d = np.sqrt((opp[:, 0] - y) ** 2 + (opp[:, 1] - x) ** 2).min()
                r[Ly, Lx] = max(d - 0.5, 0.0)
    return r, pad


def oracle_ridge(r, pad, shape, end_caps=True):
    H, W = r.shape
    ny, nx = shape

    def at(y, x):
        return r[y, x] if 0 <= y < H and 0 <= x < W else math.inf

    out = np.zeros_like(r, dtype=bool)
    for y in range(2 * pad, 2 * (pad + ny) + 1):
        for x in range(2 * pad, 2 * (pad + nx) + 1):
            if math.floor(2 * r[y, x] + 1e-9) / 2 < 0.5:
                continue
            for (dy, dx), (py, px) in DIRS:
                drop = RIDGE_SLOPE * 0.5 * math.hypot(dy, dx) - 1e-12
                across = (r[y, x] - at(y + dy, x + dx) >= drop
                          and r[y, x] - at(y - dy, x - dx) >= drop)
                if across and end_caps:
                    drop_p = RIDGE_SLOPE * 0.5 * math.hypot(py, px) - 1e-12
                    if (r[y, x] - at(y + py, x + px) >= drop_p
                            or r[y, x] - at(y - py, x - px) >= drop_p):
                        across = False
                if across:
                    out[y, x] = True
                    break
    return out


def oracle_cover(r, pad, elements):
    """Largest half-step radius rho of a fitting circle that covers each element."""
    rq = np.floor(2 * r + 1e-9) / 2
    H, W = r.shape
    best = []
    for ey, ex in elements:
        cy, cx = ey + pad, ex + pad
        b = 0.0
        for Ly in range(H):
            for Lx in range(W):
                rho = 0.5
                while rho <= rq[Ly, Lx]:  # every radius that fits at this centre
                    dist = math.hypot((Ly - 1) / 2 - cy, (Lx - 1) / 2 - cx)
                    if dist < rho + 0.5 - 1e-9:
                        b = max(b, rho)
                    rho += 0.5
        best.append(b)
    return best


def oracle_measure(mask, exterior_is_phase, corners, margin=10):
    mask = clean(mask)
    r, pad = oracle_radius(mask, exterior_is_phase, margin)
    rq = np.floor(2 * r + 1e-9) / 2
    ridge = oracle_ridge(r, pad, mask.shape)
    best = rq[ridge].min() if ridge.any() else math.inf
    if corners:
        m = mask
        elems = []
        for iy in range(m.shape[0]):
            for ix in range(m.shape[1]):
                if not m[iy, ix]:
                    continue
                n = 0
                for jy, jx in ((iy - 1, ix), (iy + 1, ix), (iy, ix - 1), (iy, ix + 1)):
                    if 0 <= jy < m.shape[0] and 0 <= jx < m.shape[1] and not m[jy, jx]:
                        n += 1
                if n >= 2:
                    elems.append((iy, ix))
        if elems:
            best = min(best, min(oracle_cover(r, pad, elems)))
    if not math.isfinite(best):
        return math.inf if exterior_is_phase else float(rq.max())
    return float(best)


# ---------------------------------------------------------------------------
# Hand-built rasters
# ---------------------------------------------------------------------------

def bar(width, length=16, ny=12):
    a = np.zeros((ny, length))
    top = (ny - width) // 2
    a[top:top + width, :] = 1
    return a


def l_shape():
    a = np.zeros((20, 20))
    a[2:18, 3:6] = 1  # vertical leg, width 3
    a[13:18, 3:18] = 1  # horizontal leg, width 5
    return a


def pockets():
    """Solid lattice with 4x4 void pockets behind 2-element walls."""
    a = np.ones((20, 20))
    for y in (2, 8, 14):
        for x in (2, 8, 14):
            a[y:y + 4, x:x + 4] = 0
    return a


def wedge():
    """Two 3-wide bars meeting at an acute angle, rastered by centre sampling."""
    ny, nx = 24, 24
    yy, xx = np.mgrid[0:ny, 0:nx]
    a = np.zeros((ny, nx))
    for ang in (0.0, math.radians(35)):
        d = np.abs(-(xx - 2) * math.sin(ang) + (yy - 3) * math.cos(ang))
        along = (xx - 2) * math.cos(ang) + (yy - 3) * math.sin(ang)
        a[(d <= 1.5) & (along >= -1.5) & (along <= 22)] = 1
    return a


def test_full_square_gives_half_side():
    assert measure_min_solid(np.ones((8, 8))).radius == 4.0


@pytest.mark.parametrize("w, r", [(1, 0.5), (2, 1.0), (3, 1.5), (4, 2.0), (6, 3.0)])
def test_straight_bar(w, r):
    assert measure_min_solid(bar(w)).radius == r


def test_bar_of_three_is_one_and_a_half():
    m = measure_min_solid(bar(3))
    assert m.radius == 1.5
    assert m.kind == "member"
    x, y = m.location
    assert 5 <= y <= 6


def test_l_shape_matches_thinner_leg():
    a = l_shape()
    assert measure_min_solid(a).radius == 1.5
    assert oracle_measure(a > 0.5, False, False) == 1.5


def test_void_pockets():
    m = measure_min_void(pockets())
    assert m.radius == 2.0
    assert m.kind == "corner"


def test_single_slot():
    a = np.ones((20, 24))
    a[7:13, :] = 0
    m = measure_min_void(a)
    assert m.radius == 3.0


def test_wedge_matches_oracle():
    a = wedge()
    mask = a > 0.5
    assert measure_min_void(a).radius == oracle_measure(~mask, True, True)
    assert measure_min_solid(a).radius == oracle_measure(mask, False, False)


def test_open_void_is_unbounded():
    a = np.zeros((10, 10))
    a[4:6, :] = 1
    m = measure_min_void(a, corners=False)
    assert math.isinf(m.radius) and m.kind == "unbounded"


def test_empty_phase_errors():
    with pytest.raises(EmptyPhaseError):
        measure_min_solid(np.zeros((5, 5)))
    with pytest.raises(EmptyPhaseError):
        measure_min_void(np.ones((5, 5)))
    # a lone speck is noise, so the phase is empty after cleaning
    a = np.zeros((5, 5))
    a[2, 2] = 1
    with pytest.raises(EmptyPhaseError):
        measure_min_solid(a)


def test_non_2d_input_rejected():
    with pytest.raises(ValueError):
        measure_min_solid(np.ones(5))


# -- cleaning conventions -----------------------------------------------------

def test_specks_removed():
    a = bar(4)
    a[0, 0] = 1
    assert remove_specks(a > 0.5)[0, 0] == False  # noqa: E712
    assert measure_min_solid(a).radius == 2.0
    # a lone element has no cross-section either, only the strict mode counts it
    assert measure_min_solid(a, min_area=1).radius == 2.0
    assert measure_min_solid(a, min_area=1, end_caps=False).radius == 0.5


def test_one_element_bump_ignored():
    a = bar(4)
    a[3, 8] = 1  # bump on top of the 4-wide bar
    assert remove_spurs(a > 0.5)[3, 8] == False  # noqa: E712
    assert measure_min_solid(a).radius == 2.0
    assert measure_min_solid(a, min_area=1, end_caps=False).radius == 0.5


def test_one_element_dent_ignored():
    a = np.ones((20, 20))
    a[6:14, :] = 0  # slot of 8
    a[5, 10] = 0  # dent into the wall
    assert measure_min_void(a).radius == 4.0
    assert measure_min_void(a, min_area=1).radius == 0.5


def test_thin_member_is_not_a_spur():
    a = bar(1)
    assert clean(a > 0.5).sum() == a.sum()
    assert measure_min_solid(a).radius == 0.5


def test_branch_end_cap_not_a_member():
    # 4-wide bar ending in a one-long, 2-wide step: the step is not a cross-section
    a = np.zeros((14, 20))
    a[5:9, 0:14] = 1
    a[6:8, 14:15] = 1
    assert measure_min_solid(a).radius == 2.0
    assert measure_min_solid(a, end_caps=False).radius == 1.0


def test_short_stub_is_a_member():
    # a 2x2 stub has a full cross-section and is measured
    a = np.zeros((14, 20))
    a[5:9, 0:14] = 1
    a[6:8, 14:16] = 1
    assert measure_min_solid(a).radius == 1.0


def test_neck_is_measured():
    a = bar(6)
    a[3:5, 8] = 0
    a[7:9, 8] = 0  # hourglass neck of 2
    assert measure_min_solid(a).radius == 1.0


# -- distance transform -----------------------------------------------------

def test_isolated_element_radius():
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    assert distance_transform(m).per_element[2, 2] == pytest.approx(0.5)


def test_full_phase_distances_grow_from_border():
    d = distance_transform(np.ones((7, 7), bool)).per_element
    assert d[3, 3] == d.max()
    assert d[0, 0] == d.min() == pytest.approx(0.5)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(arrays(bool, (10, 12)), st.booleans())
def test_distance_map_matches_brute_force(mask, exterior):
    dm = distance_transform(mask, exterior_is_phase=exterior, margin=3)
    r, pad = oracle_radius(mask, exterior, 3)
    assert pad == dm.pad
    np.testing.assert_allclose(dm.lattice, r, atol=1e-12)


def test_distance_random_16_matches_brute_force():
    rng = np.random.default_rng(5)
    mask = rng.random((16, 16)) < 0.6
    r, _ = oracle_radius(mask, False, 1)
    np.testing.assert_allclose(distance_transform(mask).lattice, r, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(bool, (9, 9)))
def test_distance_map_lipschitz(mask):
    L = distance_transform(mask).lattice
    if not np.isfinite(L).all():
        return
    # neighbouring lattice points are 0.5 apart; r(p) = max(d - 0.5, 0) is 1-Lipschitz
    assert np.all(np.abs(np.diff(L, axis=0)) <= 0.5 + 1e-12)
    assert np.all(np.abs(np.diff(L, axis=1)) <= 0.5 + 1e-12)


def test_quantize_half_steps():
    np.testing.assert_array_equal(quantize([0.49, 0.5, 1.24, 1.5, 2.99]), [0, 0.5, 1.0, 1.5, 2.5])


def test_corner_elements_count_in_raster_sides_only():
    a = np.zeros((4, 4), bool)
    a[0:2, 0:2] = True
    # (1, 1) has void below and right; (0, 0) only raster edges
    # (0, 1) and (1, 0) touch void on one side only
    assert {tuple(int(v) for v in e) for e in corner_elements(a)} == {(1, 1)}


# -- oracle equivalence and properties --------------------------------------

def _smooth_raster(seed, shape, frac):
    rng = np.random.default_rng(seed)
    base = ndimage.gaussian_filter(rng.random(shape), 1.5)
    return base > np.quantile(base, 1 - frac)


@pytest.mark.parametrize("seed", range(12))
def test_oracle_equivalence_random_designs(seed):
    rng = np.random.default_rng(100 + seed)
    ny, nx = rng.integers(8, 33, size=2)
    mask = _smooth_raster(seed, (ny, nx), rng.uniform(0.3, 0.7))
    if mask.sum() < 4 or (~mask).sum() < 4:
        pytest.skip("degenerate draw")
    a = mask.astype(float)
    got_s = measure_min_solid(a).radius
    got_v = measure_min_void(a).radius
    assert got_s == oracle_measure(mask, False, False)
    assert got_v == oracle_measure(~mask, True, True)


@pytest.mark.parametrize("raster", [bar(3), l_shape(), pockets(), wedge()],
                         ids=["bar", "L", "pockets", "wedge"])
def test_oracle_equivalence_hand_rasters(raster):
    mask = raster > 0.5
    assert measure_min_solid(raster).radius == oracle_measure(mask, False, False)
    assert measure_min_void(raster).radius == oracle_measure(~mask, True, True)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), frac=st.floats(0.2, 0.8))
def test_duality(seed, frac):
    mask = _smooth_raster(seed, (14, 14), frac)
    if mask.sum() < 3 or (~mask).sum() < 3:
        return
    flags = dict(exterior_is_phase=False, corners=True)
    try:
        s = measure_min_solid(mask.astype(float), **flags).radius
    except EmptyPhaseError:
        return
    v = measure_min_void((~mask).astype(float), **flags).radius
    assert s == v


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), frac=st.floats(0.2, 0.8))
def test_radii_are_half_steps(seed, frac):
    mask = _smooth_raster(seed, (16, 12), frac)
    if clean(mask).sum() == 0 or clean(~mask).sum() == 0:
        return
    rep = measure(mask.astype(float))
    for r in (rep.r_min_solid_measured, rep.r_min_void_measured):
        assert r >= 0
        assert math.isinf(r) or (2 * r) == int(2 * r)


def _topology(m):
    return ndimage.label(m)[1], ndimage.label(np.pad(~m, 1, constant_values=True))[1]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), frac=st.floats(0.2, 0.7), conn=st.sampled_from([1, 2]))
def test_dilation_never_thins_when_topology_is_kept(seed, frac, conn):
    mask = _smooth_raster(seed, (14, 14), frac)
    if clean(mask).sum() == 0:
        return
    grown = ndimage.binary_dilation(mask, ndimage.generate_binary_structure(2, conn))
    if grown.all() or _topology(grown) != _topology(mask):
        return
    assert (measure_min_solid(grown.astype(float)).radius
            >= measure_min_solid(mask.astype(float)).radius)


def test_dilation_can_thin_by_merging_components():
    # two 3x3 blocks one element apart merge into a member with a narrow neck
    a = np.zeros((10, 10), bool)
    a[1:4, 1:4] = True
    a[3:6, 6:9] = True
    grown = ndimage.binary_dilation(a)
    assert _topology(grown) != _topology(a)
    assert measure_min_solid(a.astype(float)).radius == 1.5
    assert measure_min_solid(grown.astype(float)).radius == 0.5


def test_measure_report_roundtrip():
    f = Field2D(np.where(bar(3) > 0, 0.9, 0.1))
    rep = measure(f, epsilon=0.5)
    d = rep.as_dict()
    assert d["r_min_solid_measured"] == 1.5
    assert d["r_min_void_measured"] is None
    assert d["epsilon"] == 0.5


def test_measure_locations_lie_in_phase():
    a = l_shape()
    rep = measure(a)
    x, y = rep.solid_location
    iy, ix = int(round(y)), int(round(x))
    assert a[min(iy, a.shape[0] - 1), min(ix, a.shape[1] - 1)] == 1
