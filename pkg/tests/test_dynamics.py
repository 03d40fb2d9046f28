import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orderlab import dynamics as dyn
from orderlab.errors import AccuracyWarning, DomainError, NumericalError


def _packet(x0=10.0, y0=10.0, px=-1.5, py=-1.5, w=2.0, m1=1.0, m2=1.0):
    return dyn.TwoBodyConfig(m1, m2, dyn.Packet1D(x0, w, px), dyn.Packet1D(y0, w, py))


def _setup(plane, half, h, mask_fn=dyn.empty_mask, x_range=None, y_range=None):
    grid = dyn.make_grid(x_range or (-half, half), y_range or (-half, half), h)
    mask = mask_fn(grid)
    return dyn.gaussian_state(grid, plane, mask), mask


# ----------------------------------------------------------------- configs and mapping


def test_two_body_validation():
    with pytest.raises(DomainError):
        _packet(x0=5.0, w=2.0)
    with pytest.raises(DomainError):
        _packet(px=0.5)
    with pytest.raises(DomainError):
        _packet(m1=0.0)


def test_identity_mapping():
    tb = _packet(px=-1.2, py=-0.7)
    plane = dyn.map_two_body_to_plane(tb, 1.0)
    assert plane.center == (10.0, 10.0)
    assert plane.momentum == (-1.2, -0.7)
    assert plane.widths == (2.0, 2.0)


def test_mapping_heavy_x_particle():
    tb = _packet(px=-3.0, m1=4.0)
    plane = dyn.map_two_body_to_plane(tb, 1.0)
    # X = sqrt(m1/M) x and P_X = sqrt(M/m1) p_x; equivalently p_x = 2 P_X and x = X / 2
    assert plane.center[0] == pytest.approx(20.0)
    assert plane.momentum[0] == pytest.approx(-1.5)
    assert plane.widths[0] == pytest.approx(4.0)
    assert plane.scale == (2.0, 1.0)
    # coordinate and momentum factors multiply to one: phase-space area per axis is unchanged
    assert (plane.center[0] / tb.x.center) * (plane.momentum[0] / tb.x.momentum) == pytest.approx(1.0)
    assert plane.alpha_scale == pytest.approx(0.5)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.2, 5), st.floats(-5, -0.01), st.floats(-5, -0.01),
    st.floats(0.2, 3),
)
def test_mapping_preserves_energy(m1, m2, M, px, py, w):
    tb = dyn.TwoBodyConfig(m1, m2, dyn.Packet1D(6 * w, w, px), dyn.Packet1D(6 * w, w, py))
    plane = dyn.map_two_body_to_plane(tb, M)
    assert plane.mean_energy() == pytest.approx(tb.mean_energy(), rel=1e-12)


def test_mapping_rejects_bad_mass():
    with pytest.raises(DomainError):
        dyn.map_two_body_to_plane(_packet(), 0.0)


def test_plane_direction():
    plane = dyn.map_two_body_to_plane(_packet(px=-1.0, py=-1.0))
    assert plane.theta0 == pytest.approx(math.pi / 4)
    assert plane.k == pytest.approx(math.sqrt(2))


# ----------------------------------------------------------------- grids and masks


def test_grid_has_origin_node():
    g = dyn.make_grid((-3.1, 5.0), (-2.0, 2.0), 0.5)
    x, y = g.axes()
    assert x[g.origin[0]] == 0.0 and y[g.origin[1]] == 0.0
    assert x[0] <= -3.1 < x[1] and x[-2] < 5.0 <= x[-1]


def test_edge_mask_geometry():
    g = dyn.make_grid((-2, 2), (-2, 2), 0.5)
    m = dyn.edge_mask(g).nodes
    X, Y = g.mesh()
    assert np.array_equal(m, (X == 0) & (Y < 0))


def test_wall_disk_strip_masks():
    g = dyn.make_grid((-3, 3), (-3, 3), 0.25)
    X, Y = g.mesh()
    assert np.array_equal(dyn.wall_mask(g).nodes, X == 0)
    assert np.array_equal(dyn.disk_mask(g, 1.0).nodes, X**2 + Y**2 <= 1.0)
    strip = dyn.strip_mask(g, 1.0).nodes
    assert np.all(np.isclose(X[strip], -Y[strip]))
    assert np.all(np.abs(X[strip] - Y[strip]) / math.sqrt(2) <= 1.0)
    assert strip.sum() == 2 * int(1.0 / (0.25 * math.sqrt(2))) + 1


def test_gaussian_state_normalised_and_masked():
    plane = dyn.map_two_body_to_plane(_packet(x0=2.0, y0=2.0, w=0.4))
    state, mask = _setup(plane, 5.0, 0.05, dyn.edge_mask)
    assert dyn.norm(state) == pytest.approx(1.0, abs=1e-13)
    assert np.all(state.field[mask.nodes] == 0)


def test_domain_half_width_covers_path():
    plane = dyn.map_two_body_to_plane(_packet())
    half = dyn.domain_half_width(plane, 20.0)
    assert half > math.hypot(*plane.center)
    assert half > plane.k * 20.0 - math.hypot(*plane.center)


# ----------------------------------------------------------------- propagation


def test_free_dispersion():
    sigma, M = 1.0, 1.0
    plane = dyn.PlaneConfig(M, (0.0, 0.0), (sigma, sigma), (0.0, 0.0))
    state, mask = _setup(plane, 12.0, 0.1)
    t = 2 * M * sigma**2
    steps = 800
    out = dyn.evolve(state, mask, t / steps, steps)
    expected = sigma * math.sqrt(1 + (t / (2 * M * sigma**2)) ** 2)
    for s in dyn.position_moments(out)["std"]:
        assert s == pytest.approx(expected, rel=0.01)
    assert out.time == pytest.approx(t)


def test_free_packet_crosses_into_quadrant_iii():
    plane = dyn.map_two_body_to_plane(_packet(x0=8.0, y0=8.0, px=-3.0, py=-3.0, w=1.5))
    state, mask = _setup(plane, 18.0, 0.15)
    assert dyn.quadrant_probabilities(state).p1 > 0.999
    out = dyn.evolve(state, mask, 0.01, 540)
    assert dyn.quadrant_probabilities(out).p3 > 0.95


def test_wall_reverses_momentum():
    # mirror-image oracle: the reflected packet carries -<p_x>
    plane = dyn.map_two_body_to_plane(_packet(x0=10.0, y0=10.0, px=-2.0, py=-1e-9, w=2.0))
    state, mask = _setup(plane, 0, 0.2, dyn.wall_mask, x_range=(-1.0, 34.0), y_range=(-4.0, 24.0))
    before = dyn.mean_momentum(state)[0]
    out = dyn.evolve(state, mask, 0.02, 500)
    after = dyn.mean_momentum(out)[0]
    assert after == pytest.approx(-before, rel=0.02)


def test_norm_and_energy_conserved():
    plane = dyn.map_two_body_to_plane(_packet(x0=6.0, y0=6.0, px=-1.0, py=-1.0, w=1.2))
    state, mask = _setup(plane, 12.0, 0.2, dyn.edge_mask)
    e0 = dyn.energy(state)
    out = dyn.evolve(state, mask, 0.005, 10_000)
    assert abs(dyn.norm(out) - 1) < 1e-4
    assert dyn.energy(out) == pytest.approx(e0, rel=1e-3)
    assert np.all(out.field[mask.nodes] == 0)


def test_accuracy_warning_and_nan_abort():
    plane = dyn.map_two_body_to_plane(_packet(x0=3.0, y0=3.0, w=0.5))
    state, mask = _setup(plane, 5.0, 0.1)
    with pytest.warns(AccuracyWarning):
        dyn.evolve(state, mask, 1.0, 1)
    bad = state.copy()
    bad.field[3, 3] = np.nan
    with pytest.raises(NumericalError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AccuracyWarning)
            dyn.evolve(bad, mask, 0.001, 2)
    with pytest.raises(DomainError):
        dyn.evolve(state, mask, -0.1, 1)


def test_mapping_invariance_of_quadrants():
    # heavy x-particle simulated directly with masses (m1, m2) versus the mapped equal-mass twin
    tb = _packet(x0=8.0, y0=6.0, px=-4.0, py=-1.5, w=1.0, m1=4.0, m2=1.0)
    plane = dyn.map_two_body_to_plane(tb, 1.0)
    h = 0.12
    g_map = dyn.make_grid((-24, 24), (-24, 24), h)
    mask_map = dyn.edge_mask(g_map)
    s_map = dyn.gaussian_state(g_map, plane, mask_map)
    direct = dyn.PlaneConfig(1.0, (tb.x.center, tb.y.center), (tb.x.width, tb.y.width), (tb.x.momentum, tb.y.momentum))
    g_dir = dyn.make_grid((-12, 12), (-24, 24), (h / 2, h))
    mask_dir = dyn.edge_mask(g_dir)
    s_dir = dyn.gaussian_state(g_dir, direct, mask_dir)
    dt, steps = 0.006, 1200
    a = dyn.quadrant_probabilities(dyn.evolve(s_map, mask_map, dt, steps, (1.0, 1.0)))
    b = dyn.quadrant_probabilities(dyn.evolve(s_dir, mask_dir, dt, steps, (tb.m1, tb.m2)))
    np.testing.assert_allclose(a.as_tuple(), b.as_tuple(), atol=1e-10)


def test_disk_swap_symmetry():
    tb = _packet(x0=7.0, y0=9.0, px=-2.0, py=-2.5, w=1.2)
    swapped = _packet(x0=9.0, y0=7.0, px=-2.5, py=-2.0, w=1.2)
    res = []
    for cfg in (tb, swapped):
        plane = dyn.map_two_body_to_plane(cfg)
        state, mask = _setup(plane, 16.0, 0.15, lambda g: dyn.disk_mask(g, 1.0))
        res.append(dyn.quadrant_probabilities(dyn.evolve(state, mask, 0.01, 500)))
    a, b = res
    assert a.p3 == pytest.approx(b.p3, abs=1e-10)
    assert a.p1 == pytest.approx(b.p1, abs=1e-10)
    assert a.p2 == pytest.approx(b.p4, abs=1e-10)
    assert a.p4 == pytest.approx(b.p2, abs=1e-10)


def _edge_p_fail(ppw):
    tb = _packet(x0=10.0, y0=10.0, px=-2.5 / math.sqrt(2), py=-2.5 / math.sqrt(2), w=2.0)
    plane = dyn.map_two_body_to_plane(tb)
    t_final = 2 * math.hypot(*plane.center) / plane.k
    half = dyn.domain_half_width(plane, t_final)
    h = 2 * math.pi / (plane.k * ppw)
    state, mask = _setup(plane, half, h, dyn.edge_mask)
    steps = int(math.ceil(t_final / (0.95 * dyn.accuracy_bound(state.spacing))))
    out = dyn.evolve(state, mask, t_final / steps, steps)
    probs = dyn.quadrant_probabilities(out)
    assert probs.total == pytest.approx(1.0, abs=1e-6)
    return dyn.classify_outcome(probs).p_fail


def test_edge_failure_positive_and_grid_converged():
    coarse = _edge_p_fail(8)
    fine = _edge_p_fail(16)
    assert coarse > 0 and fine > 0
    assert abs(fine - coarse) / fine < 0.10


# ----------------------------------------------------------------- observables


def test_classify_outcome_examples():
    o = dyn.classify_outcome(dyn.QuadrantProbabilities(0, 0, 1, 0))
    assert (o.p_x_first, o.p_y_first, o.p_fail) == (1, 0, 0)
    o = dyn.classify_outcome(dyn.QuadrantProbabilities(0.5, 0.5, 0, 0))
    assert o.p_fail == 1
    assert o.reflected_into_I == 0.5


def test_axis_nodes_split_evenly():
    g = dyn.make_grid((-1, 1), (-1, 1), 1.0)
    g.field[1, 1] = 1.0  # the origin node
    q = dyn.quadrant_probabilities(g)
    assert q.as_tuple() == (0.25, 0.25, 0.25, 0.25)


def test_mean_momentum_of_plane_wave_packet():
    plane = dyn.PlaneConfig(1.0, (0.0, 0.0), (2.0, 2.0), (1.3, -0.4))
    state, _ = _setup(plane, 16.0, 0.1)
    px, py = dyn.mean_momentum(state)
    assert px == pytest.approx(1.3, abs=1e-6)
    assert py == pytest.approx(-0.4, abs=1e-6)


# ----------------------------------------------------------------- checkpoints


def test_checkpoint_round_trip(tmp_path):
    plane = dyn.map_two_body_to_plane(_packet(x0=3.0, y0=3.0, w=0.5))
    state, mask = _setup(plane, 5.0, 0.1, dyn.edge_mask)
    state = dyn.evolve(state, mask, 0.004, 3)
    path = dyn.save_state(tmp_path / "s.npz", state)
    back = dyn.load_state(path)
    assert back.field.tobytes() == state.field.tobytes()
    assert back.spacing == state.spacing
    assert back.origin == state.origin
    assert back.time == state.time


def test_checkpoint_version_checked(tmp_path):
    path = tmp_path / "bad.npz"
    np.savez(path, version=np.array("other/9"), field=np.zeros((2, 2), complex), spacing=np.ones(2), origin=np.zeros(2, int), time=np.array(0.0))
    with pytest.raises(ValueError):
        dyn.load_state(path)
