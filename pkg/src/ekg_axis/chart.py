"""Null coordinates (u, v) built on top of a Cauchy trajectory.

Both labels are carried by one scalar w(t, x) on the doubled line
x in [-r_max, r_max]: u(t, r) = w(t, r) and v(t, r) = w(t, -r).  Ingoing rays
live at x < 0, outgoing ones at x > 0, and every ray moves to the right with
speed a(t, |x|) = e^{alpha - beta}.  An ingoing ray that reaches the axis simply
continues as the outgoing ray with the same label, which is the boundary
condition u = v on r = 0.  Initial data w(0, x) = -x gives u = -r, v = r.

w is advanced between stored snapshots semi-Lagrangianly: feet of the rays
are found by RK4 and w is re-sampled there with a quintic spline.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline, CubicSpline, make_interp_spline
from scipy.ndimage import map_coordinates, spline_filter

from .errors import ChartError, RangeError
from .grid import even_extend, fd4
from .io import write_csv
from .matter import densities_of

log = logging.getLogger(__name__)

SPLINE_ORDER = 5
DEFAULT_MARGIN = 8


class SpeedField:
    """Light speed a(t, |x|) interpolated from trajectory snapshots.

    Quintic splines in x on each stored level, cubic Lagrange in time.
    """

    def __init__(self, traj):
        self.times = np.asarray(traj.times)
        self.dt = float(traj.snapshot_dt)
        r = traj.grid.r
        self.x = np.concatenate([-r[:0:-1], r])
        a_ext = even_extend(traj.speed)
        spl = make_interp_spline(self.x, a_ext.T, k=SPLINE_ORDER)
        self._levels = [BSpline(spl.t, spl.c[:, k], SPLINE_ORDER) for k in range(a_ext.shape[0])]
        self.a_max = float(a_ext.max())

    def _weights(self, t):
        n = len(self.times)
        s = (t - self.times[0]) / self.dt
        if n < 4:
            k0 = int(np.clip(np.floor(s), 0, n - 2))
            w1 = s - k0
            return k0, np.array([1.0 - w1, w1])
        k0 = int(np.clip(np.floor(s) - 1, 0, n - 4))
        nodes = np.arange(k0, k0 + 4)
        w = np.ones(4)
        for j in range(4):
            for m in range(4):
                if m != j:
                    w[j] *= (s - nodes[m]) / (nodes[j] - nodes[m])
        return k0, w

    def __call__(self, t: float, x) -> np.ndarray:
        k0, w = self._weights(t)
        out = 0.0
        for j, wj in enumerate(w):
            out = out + wj * self._levels[k0 + j](x)
        return out


def trace(speed: SpeedField, x0, t0: float, t1: float, n_sub: int = 1) -> np.ndarray:
    """RK4 integration of dx/dt = a(t, |x|) from t0 to t1 (either direction)."""
    x = np.array(x0, dtype=float, copy=True)
    dt = (t1 - t0) / n_sub
    t = t0
    for _ in range(n_sub):
        k1 = speed(t, x)
        k2 = speed(t + 0.5 * dt, x + 0.5 * dt * k1)
        k3 = speed(t + 0.5 * dt, x + 0.5 * dt * k2)
        k4 = speed(t + dt, x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
    return x


def trace_ray(traj, t_start: float, r_start: float, direction: str, times, *,
              speed: SpeedField | None = None, n_sub: int = 4) -> np.ndarray:
    """Radius of a radial light ray at each of ``times`` (characteristic-tracing oracle).

    ``direction`` is "out" or "in" as seen from ``t_start`` going forward in time.
    Times may lie before or after ``t_start``; an ingoing ray continues through the
    axis as an outgoing one (reported with |x|).
    """
    speed = speed or SpeedField(traj)
    x = r_start if direction == "out" else -r_start
    if direction not in ("out", "in"):
        raise ValueError("direction must be 'out' or 'in'")
    out = np.empty(len(times))
    t_prev, x_prev = t_start, np.array([float(x)])
    order = np.argsort(np.abs(np.asarray(times) - t_start))
    # march outward from t_start in both directions
    for sgn in (1, -1):
        t_prev, x_cur = t_start, np.array([float(x)])
        idx = [i for i in order if np.sign(times[i] - t_start) in (sgn, 0)]
        idx.sort(key=lambda i: sgn * times[i])
        for i in idx:
            steps = max(1, int(np.ceil(abs(times[i] - t_prev) / speed.dt)) * n_sub)
            if times[i] != t_prev:
                x_cur = trace(speed, x_cur, t_prev, times[i], steps)
            t_prev = times[i]
            out[i] = abs(x_cur[0])
    return out


@dataclass
class NullChart:
    times: np.ndarray
    r: np.ndarray
    u: np.ndarray
    v: np.ndarray
    u_t: np.ndarray
    u_r: np.ndarray
    v_t: np.ndarray
    v_r: np.ndarray
    F: np.ndarray
    G: np.ndarray
    F_check: np.ndarray
    G_check: np.ndarray
    valid: np.ndarray
    F_t: np.ndarray = field(repr=False, default=None)
    F_r: np.ndarray = field(repr=False, default=None)
    G_t: np.ndarray = field(repr=False, default=None)
    G_r: np.ndarray = field(repr=False, default=None)
    kind: str = "global"
    apex_time: float | None = None
    aux: dict = field(repr=False, default_factory=dict)

    @property
    def lam(self) -> np.ndarray:
        return 0.5 * (self.F + self.G)

    @property
    def T(self):
        return 0.5 * (self.u + self.v)

    @property
    def R(self):
        return 0.5 * (self.v - self.u)

    @property
    def det(self):
        return self.u_t * self.v_r - self.u_r * self.v_t

    @property
    def t_u(self):
        return self.v_r / self.det

    @property
    def t_v(self):
        return -self.u_r / self.det

    @property
    def r_u(self):
        return -self.v_t / self.det

    @property
    def r_v(self):
        return self.u_t / self.det

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def _ext_views(ext, n):
    """(x >= 0 part, reflected x <= 0 part) of an array on the doubled line."""
    return ext[:, n - 1:], ext[:, n - 1::-1]


def _assemble(times, r, w, alpha, beta, valid, dt, h, kind="global", apex=None, aux=None):
    n = len(r)
    w_t = fd4(w, dt, axis=0)
    w_x = fd4(w, h, axis=1)
    u, v = _ext_views(w, n)
    u_t, v_t = _ext_views(w_t, n)
    u_r, v_rm = _ext_views(w_x, n)
    v_r = -v_rm
    # F on the doubled line: G(t, r) = F(t, -r)
    wt_rev, wx_rev = w_t[:, ::-1], w_x[:, ::-1]
    det_ext = -w_t * wx_rev - w_x * wt_rev
    alpha_ext, beta_ext = even_extend(alpha), even_extend(beta)
    with np.errstate(invalid="ignore", divide="ignore"):
        tv_ext = -w_x / det_ext
        rv_ext = w_t / det_ext
        F_ext = alpha_ext + np.log(2.0 * tv_ext)
        Fc_ext = beta_ext + np.log(2.0 * rv_ext)
    valid_ext = np.concatenate([valid[:, :0:-1], valid], axis=1)
    bad = valid_ext & ~(np.isfinite(F_ext) & np.isfinite(Fc_ext))
    if np.any(bad):
        k, j = np.argwhere(bad)[0]
        raise ChartError(f"chart not future directed at t = {times[k]:.6g}, r = {abs(j - n + 1) * h:.6g}")
    F_t_ext = fd4(F_ext, dt, axis=0)
    F_x_ext = fd4(F_ext, h, axis=1)
    F, G = _ext_views(F_ext, n)
    Fc, Gc = _ext_views(Fc_ext, n)
    F_t, G_t = _ext_views(F_t_ext, n)
    F_r, G_rm = _ext_views(F_x_ext, n)
    aux = dict(aux or {})
    aux.update(w=w, w_t=w_t, w_x=w_x)
    return NullChart(times, r, u, v, u_t, u_r, v_t, v_r, F, G, Fc, Gc, valid,
                     F_t, F_r, G_t, -G_rm, kind, apex, aux)


def solve_chart(traj, *, margin_cells: int = DEFAULT_MARGIN, max_courant: float = 2.0,
                speed: SpeedField | None = None) -> NullChart:
    """Global null chart u, v on the trajectory's (t, r) snapshot grid.

    Points whose ingoing characteristic left the grid through r_max (and a
    margin of ``margin_cells`` cells around them) are marked invalid.
    """
    grid = traj.grid
    h, n = grid.h, grid.n_points
    times = np.asarray(traj.times)
    if len(times) < 5:
        raise ChartError("chart construction needs at least 5 stored snapshots")
    dt = float(traj.snapshot_dt)
    courant = dt * float(np.max(traj.speed)) / h
    if courant > max_courant:
        raise ChartError(f"transport step too large: courant {courant:.3g} > {max_courant}")
    speed = speed or SpeedField(traj)
    x = speed.x
    w = np.empty((len(times), len(x)))
    w[0] = -x
    x_b = np.empty(len(times))
    x_b[0] = x[0]
    for k in range(len(times) - 1):
        feet = trace(speed, x, times[k + 1], times[k])
        w[k + 1] = make_interp_spline(x, w[k], k=SPLINE_ORDER)(feet)
        x_b[k + 1] = trace(speed, [x_b[k]], times[k], times[k + 1])[0]
    r = grid.r
    valid = r[None, :] <= (-x_b[:, None] - margin_cells * h)
    return _assemble(times, r, w, traj["alpha"], traj["beta"], valid, dt, h,
                     aux={"x_boundary": x_b, "speed": speed})


def jacobian(chart: NullChart):
    """(J, J_inv) with J_inv = d(u, v)/d(t, r) and J = d(t, r)/d(u, v), shape (K, N, 2, 2)."""
    j_inv = np.stack([np.stack([chart.u_t, chart.u_r], -1), np.stack([chart.v_t, chart.v_r], -1)], -2)
    det = chart.det
    small = chart.valid & (np.abs(det) < 1e-12)
    if np.any(small):
        raise ChartError("degenerate chart: |det J_inv| < 1e-12 at a valid point")
    with np.errstate(invalid="ignore", divide="ignore"):
        j = np.stack([np.stack([chart.t_u, chart.t_v], -1), np.stack([chart.r_u, chart.r_v], -1)], -2)
    return j, j_inv


def compute_FG(chart: NullChart):
    return chart.F, chart.G, chart.lam


def column_consistency(chart: NullChart):
    """|F - F'| and |G - G'| on valid points, F' and G' from the r-column of J."""
    m = chart.valid
    return (float(np.max(np.abs(chart.F - chart.F_check)[m])),
            float(np.max(np.abs(chart.G - chart.G_check)[m])))


def metric_lambda_mismatch(chart: NullChart, traj) -> np.ndarray:
    """e^{2 lambda} from -2 g(d_u, d_v) in the (t, r) metric, divided by e^{F+G}, minus 1."""
    alpha, beta = traj["alpha"], traj["beta"]
    e2l = 2.0 * np.exp(2 * alpha) * chart.t_u * chart.t_v - 2.0 * np.exp(2 * beta) * chart.r_u * chart.r_v
    out = e2l / np.exp(chart.F + chart.G) - 1.0
    return np.where(chart.valid, out, np.nan)


def transport_residuals(chart: NullChart, traj, dens=None):
    """Residuals of 2 d_v G = e^F r e^beta (e + m - f) and 2 d_u F = -e^G r e^beta (e - m - f)."""
    dens = dens or densities_of(traj)
    r = chart.r[None, :]
    eb = np.exp(traj["beta"])
    dv_g = chart.t_v * chart.G_t + chart.r_v * chart.G_r
    du_f = chart.t_u * chart.F_t + chart.r_u * chart.F_r
    res_g = 2.0 * dv_g - np.exp(chart.F) * r * eb * (dens.e + dens.m_hat - dens.f)
    res_f = 2.0 * du_f + np.exp(chart.G) * r * eb * (dens.e - dens.m_hat - dens.f)
    return np.where(chart.valid, res_g, np.nan), np.where(chart.valid, res_f, np.nan)


# ---------------------------------------------------------------------------
# light-cone chart


def axis_label_map(chart: NullChart):
    """Spline t*(v) inverting v(t, 0) on the axis, plus its derivative."""
    v_axis = chart.v[:, 0]
    if np.any(np.diff(v_axis) <= 0):
        raise ChartError("v is not increasing along the axis")
    return CubicSpline(v_axis, chart.times)


def solve_cone_chart(traj, t_O: float, chart: NullChart | None = None) -> NullChart:
    """Cone chart with u~ = v~ = t on the axis and u~ = -v~ at t = 0.

    Each ray of the global chart keeps its identity; only the labels change.
    v~ is the axis time t* at which the ingoing ray through the point arrives
    (the ray traced backward from (t*, 0)), u~ is the axis time at which the
    outgoing ray left, or minus the v~ label of its starting point on t = 0.
    """
    if not 0.0 <= t_O <= traj.times[-1] + 1e-12:
        raise RangeError(f"apex time {t_O} outside trajectory span [0, {traj.times[-1]:.6g}]")
    chart = chart or solve_chart(traj)
    tau = axis_label_map(chart)
    dtau = tau.derivative()
    v_top = chart.v[-1, 0]
    with np.errstate(invalid="ignore"):
        inside = (chart.v <= v_top) & (np.abs(chart.u) <= v_top)
        uu = np.where(inside, chart.u, 0.0)
        vv = np.where(inside, chart.v, 0.0)
        s_u = np.sign(uu)
        u_c = s_u * tau(np.abs(uu))
        v_c = tau(vv)
        du = dtau(np.abs(uu))
        dv = dtau(vv)
    v_O = float(np.interp(t_O, chart.times, chart.v[:, 0]))
    valid = chart.valid & inside & (chart.v <= v_O + 1e-12) & (chart.times[:, None] <= t_O + 1e-12)
    nan = np.where(inside, 1.0, np.nan)
    return NullChart(
        chart.times, chart.r, u_c * nan, v_c * nan,
        du * chart.u_t, du * chart.u_r, dv * chart.v_t, dv * chart.v_r,
        chart.F - np.log(dv), chart.G - np.log(du),
        chart.F_check - np.log(dv), chart.G_check - np.log(du), valid,
        None, None, None, None, "cone", float(t_O),
        dict(chart.aux, parent=chart, v_O=v_O),
    )


@dataclass
class ConeRegion:
    apex_time: float
    v_O: float
    times: np.ndarray
    r_C: np.ndarray
    sigma: np.ndarray

    def K(self, tau: float, s: float) -> np.ndarray:
        sel = (self.times >= tau - 1e-12) & (self.times <= s + 1e-12)
        return self.sigma & sel[:, None]

    def C(self, tau: float, s: float):
        """Boundary polyline (t, r_C(t)) of the cone between tau and s."""
        sel = (self.times >= tau - 1e-12) & (self.times <= s + 1e-12)
        return self.times[sel], self.r_C[sel]


def cone_region(traj, t_O: float, chart: NullChart | None = None) -> ConeRegion:
    """Past cone of the axis point (t_O, 0): boundary by backward ray tracing, slices as masks."""
    if not 0.0 <= t_O <= traj.times[-1] + 1e-12:
        raise RangeError(f"apex time {t_O} outside trajectory span")
    times = np.asarray(traj.times)
    speed = chart.aux.get("speed") if chart is not None else None
    r_c = np.full(len(times), np.nan)
    before = times <= t_O + 1e-12
    if t_O > 0:
        r_c[before] = trace_ray(traj, t_O, 0.0, "in", times[before], speed=speed)
    else:
        r_c[0] = 0.0
    r_c[np.isclose(times, t_O)] = 0.0
    with np.errstate(invalid="ignore"):
        sigma = traj.grid.r[None, :] <= r_c[:, None] + 1e-12
    v_O = float(np.interp(t_O, chart.times, chart.v[:, 0])) if chart is not None else float(t_O)
    return ConeRegion(float(t_O), v_O, times, r_c, sigma)


# ---------------------------------------------------------------------------
# sampling and inversion


class GridSampler:
    """Cubic-spline evaluation of (t, x)-gridded arrays at arbitrary points."""

    def __init__(self, values, t0, dt, x0, dx, mode="mirror"):
        self.coef = spline_filter(np.asarray(values, dtype=float), order=3, mode=mode)
        self.t0, self.dt, self.x0, self.dx, self.mode = t0, dt, x0, dx, mode

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        coords = np.array([((t - self.t0) / self.dt).ravel(), ((x - self.x0) / self.dx).ravel()])
        out = map_coordinates(self.coef, coords, order=3, mode=self.mode, prefilter=False)
        return out.reshape(np.broadcast(t, x).shape)


class TrajectorySampler:
    """Interpolate stored trajectory fields at off-grid (t, r)."""

    def __init__(self, traj):
        self.traj = traj
        self._cache = {}

    def __call__(self, name, t, r):
        if name not in self._cache:
            tr = self.traj
            vals = tr.fields[name] if name in tr.fields else getattr(tr, name)
            self._cache[name] = GridSampler(vals, tr.times[0], tr.snapshot_dt, 0.0, tr.grid.h)
        return self._cache[name](t, r)


class ChartInverter:
    """(u, v) -> (t, r) by Newton iteration on the spline-interpolated chart."""

    def __init__(self, chart: NullChart):
        w = chart.aux["w"]
        n = len(chart.r)
        h = chart.r[1] - chart.r[0]
        t0, dt = chart.times[0], chart.dt
        x0 = -chart.r[-1]
        self._w = GridSampler(w, t0, dt, x0, h, mode="nearest")
        self._wt = GridSampler(chart.aux["w_t"], t0, dt, x0, h, mode="nearest")
        self._wx = GridSampler(chart.aux["w_x"], t0, dt, x0, h, mode="nearest")
        self.chart = chart
        self._n = n

    def uv(self, t, r):
        return self._w(t, r), self._w(t, -np.asarray(r))

    def __call__(self, U, V, *, tol: float = 1e-13, max_iter: int = 50):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        t = 0.5 * (U + V)
        r = 0.5 * (V - U)
        for _ in range(max_iter):
            fu = self._w(t, r) - U
            fv = self._w(t, -r) - V
            a, b = self._wt(t, r), self._wx(t, r)
            c, d = self._wt(t, -r), -self._wx(t, -r)
            det = a * d - b * c
            dt_ = (d * fu - b * fv) / det
            dr_ = (a * fv - c * fu) / det
            t = t - dt_
            r = r - dr_
            if max(np.max(np.abs(fu)), np.max(np.abs(fv))) < tol:
                break
        return t, r


def write_chart_csv(chart: NullChart, path, stride: int = 1) -> None:
    k_idx = np.arange(0, len(chart.times), stride)
    i_idx = np.arange(0, len(chart.r), stride)
    kk, ii = np.meshgrid(k_idx, i_idx, indexing="ij")
    cols = {
        "t": chart.times[kk], "r": chart.r[ii], "u": chart.u[kk, ii], "v": chart.v[kk, ii],
        "F": chart.F[kk, ii], "G": chart.G[kk, ii], "lambda": chart.lam[kk, ii],
        "valid": chart.valid[kk, ii].astype(int),
    }
    write_csv(path, {k: np.ravel(v) for k, v in cols.items()})
