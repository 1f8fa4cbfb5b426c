import numpy as np
import pytest

import oracles
from ekg_axis.chart import (ChartInverter, column_consistency, cone_region, jacobian, metric_lambda_mismatch,
                            solve_cone_chart, trace_ray, transport_residuals, write_chart_csv)
from ekg_axis.errors import RangeError
from ekg_axis.io import read_csv
from ekg_axis.verify import roundoff_floor

R_MAX = 20.0


def test_flat_chart_is_minkowski(flat_chart):
    m = flat_chart.valid
    t = flat_chart.times[:, None]
    r = flat_chart.r[None, :]
    assert np.max(np.abs(flat_chart.u - (t - r))[m]) <= 1e-10
    assert np.max(np.abs(flat_chart.v - (t + r))[m]) <= 1e-10
    assert np.max(np.abs(flat_chart.F)[m]) <= 1e-10 and np.max(np.abs(flat_chart.lam)[m]) <= 1e-10


def test_flat_jacobian_pattern(flat_chart):
    j, j_inv = jacobian(flat_chart)
    m = flat_chart.valid
    assert np.max(np.abs(j[m] - np.array([[0.5, 0.5], [-0.5, 0.5]]))) <= 1e-10
    assert np.max(np.abs(j_inv[m] - np.array([[1.0, -1.0], [1.0, 1.0]]))) <= 1e-10


def test_initial_slice_labels(weak_chart, weak_traj):
    assert np.array_equal(weak_chart.u[0], -weak_chart.r)
    assert np.array_equal(weak_chart.v[0], weak_chart.r)
    m = weak_chart.valid[0]
    assert np.array_equal(weak_chart.F[0][m], weak_chart.G[0][m])
    assert np.max(np.abs(weak_chart.F[0] - weak_traj["beta"][0])[m]) <= 1e-6


def test_axis_labels_agree(weak_chart):
    m = weak_chart.valid[:, 0]
    assert np.max(np.abs(weak_chart.u[:, 0] - weak_chart.v[:, 0])[m]) <= 1e-8


def test_chart_algebra(weak_chart, weak_traj):
    j, j_inv = jacobian(weak_chart)
    m = weak_chart.valid
    prod = np.einsum("...ij,...jk->...ik", j[m], j_inv[m])
    assert np.max(np.abs(prod - np.eye(2))) <= 1e-8
    assert np.array_equal(2 * weak_chart.lam[m], (weak_chart.F + weak_chart.G)[m])
    assert np.nanmax(np.abs(metric_lambda_mismatch(weak_chart, weak_traj))) <= 1e-6


def test_jacobian_matches_closed_forms(weak_chart, weak_traj):
    # d(u, v)/d(t, r) = [[e^{alpha-G}, -e^{beta-G}], [e^{alpha-F}, e^{beta-F}]]
    c, a, b = weak_chart, weak_traj["alpha"], weak_traj["beta"]
    m = c.valid
    closed = np.stack([np.stack([np.exp(a - c.G), -np.exp(b - c.G)], -1),
                       np.stack([np.exp(a - c.F), np.exp(b - c.F)], -1)], -2)
    _, j_inv = jacobian(c)
    assert np.max(np.abs(j_inv[m] - closed[m])) <= 1e-6
    det_closed = 2 * np.exp(a + b - c.F - c.G)
    assert np.max(np.abs(c.det - det_closed)[m]) <= 1e-6


def test_column_consistency_small(weak_chart):
    cf, cg = column_consistency(weak_chart)
    assert max(cf, cg) <= 1e-6


def test_characteristics_reproduce_level_sets(weak_traj, weak_chart):
    inv = ChartInverter(weak_chart)
    worst = 0.0
    for r0 in (1.0, 3.0, 6.0):
        out = oracles.trace_characteristic(weak_traj, r0, 0.0, 6.0, +1)
        for t in (2.0, 4.0, 6.0):
            u, _ = inv.uv(t, float(out(t)[0]))
            worst = max(worst, abs(float(u) + r0))
        inward = oracles.trace_characteristic(weak_traj, -(r0 + 6.0), 0.0, 4.0, +1)
        for t in (2.0, 4.0):
            x = float(inward(t)[0])
            _, v = inv.uv(t, -x)
            worst = max(worst, abs(float(v) - (r0 + 6.0)))
    assert worst <= 5e-3 * R_MAX


@pytest.mark.parametrize("t_o", [4.0, 6.0])
def test_cone_boundary_matches_backward_tracing(weak_traj, weak_chart, t_o):
    cr = cone_region(weak_traj, t_o, weak_chart)
    back = oracles.trace_characteristic(weak_traj, 0.0, t_o, 0.0, -1)
    sel = weak_traj.times <= t_o
    assert np.max(np.abs(cr.r_C[sel] - np.abs(back(weak_traj.times[sel])[0]))) <= 5e-3 * R_MAX


@pytest.mark.parametrize("t_o", [4.0, 6.0])
def test_cone_region_nests(weak_traj, weak_chart, t_o):
    cr = cone_region(weak_traj, t_o, weak_chart)
    sel = weak_traj.times <= t_o
    r_c = cr.r_C[sel]
    assert np.all(np.diff(r_c) <= 1e-12)
    assert 0.0 <= r_c[-1] <= 1.1 * weak_traj.snapshot_dt


def test_cone_chart_axis_and_initial_slice(weak_traj, weak_chart):
    cc = solve_cone_chart(weak_traj, 4.0, weak_chart)
    ax = cc.valid[:, 0]
    np.testing.assert_allclose(cc.u[:, 0][ax], weak_traj.times[ax], atol=1e-8)
    np.testing.assert_allclose(cc.v[:, 0][ax], weak_traj.times[ax], atol=1e-8)
    assert np.max(np.abs(cc.F[:, 0] - cc.G[:, 0])[ax]) <= weak_traj.grid.h
    m0 = cc.valid[0]
    assert np.max(np.abs(cc.u[0] + cc.v[0])[m0]) <= 1e-12


def test_flat_cone_chart(flat_traj, flat_chart):
    cc = solve_cone_chart(flat_traj, 4.0, flat_chart)
    m = cc.valid
    t = flat_traj.times[:, None]
    r = flat_traj.grid.r[None, :]
    assert np.max(np.abs(cc.u - (t - r))[m]) <= 1e-8
    assert np.max(np.abs(cc.v - (t + r))[m]) <= 1e-8


def test_flat_cone_region(flat_traj, flat_chart):
    cr = cone_region(flat_traj, 1.0, flat_chart)
    sel = flat_traj.times <= 1.0
    np.testing.assert_allclose(cr.r_C[sel], 1.0 - flat_traj.times[sel], atol=1e-10)
    assert cr.v_O == pytest.approx(1.0, abs=1e-10)


def test_apex_at_zero_is_single_point(flat_traj, flat_chart):
    cr = cone_region(flat_traj, 0.0, flat_chart)
    assert cr.sigma[0].sum() == 1 and cr.sigma[0][0]
    assert not cr.sigma[1:].any()


def test_apex_beyond_run_is_range_error(flat_traj, flat_chart):
    with pytest.raises(RangeError):
        solve_cone_chart(flat_traj, 100.0, flat_chart)
    with pytest.raises(RangeError):
        cone_region(flat_traj, -1.0, flat_chart)


def test_vacuum_transport_residuals_vanish(flat_traj, flat_chart):
    res_g, res_f = transport_residuals(flat_chart, flat_traj)
    floor = roundoff_floor(flat_traj.grid.n_cells)
    assert np.nanmax(np.abs(res_g)) <= floor and np.nanmax(np.abs(res_f)) <= floor


def test_inverter_round_trip(weak_chart):
    inv = ChartInverter(weak_chart)
    t = np.array([1.0, 2.5, 4.0])
    r = np.array([2.0, 3.0, 1.5])
    u, v = inv.uv(t, r)
    t2, r2 = inv(u, v)
    np.testing.assert_allclose(t2, t, atol=1e-10)
    np.testing.assert_allclose(r2, r, atol=1e-10)


def test_trace_ray_flat(flat_traj):
    times = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(trace_ray(flat_traj, 0.0, 3.0, "out", times), [3.0, 4.0, 5.0], atol=1e-12)
    with pytest.raises(ValueError):
        trace_ray(flat_traj, 0.0, 3.0, "sideways", times)


def test_chart_csv(tmp_path, flat_chart):
    write_chart_csv(flat_chart, tmp_path / "chart.csv", stride=8)
    cols = read_csv(tmp_path / "chart.csv")
    assert list(cols) == ["t", "r", "u", "v", "F", "G", "lambda", "valid"]
    assert set(np.unique(cols["valid"])) <= {0.0, 1.0}
