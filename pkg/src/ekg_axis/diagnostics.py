"""Energies, fluxes and bound certificates computed from stored trajectories."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .chart import ChartInverter, GridSampler, NullChart
from .grid import cumtrapz, ddr
from .io import write_csv
from .matter import MatterDensities, densities_from_fields, densities_of

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
DENSITY_SLACK = 1e-14
# weight of e(0) times h^2 added to the trapezoid rule on r e^beta e
AXIS_WEIGHT_EXACT = 1.0 / 12.0  # Euler-Maclaurin end correction, O(h^4) quadrature
AXIS_WEIGHT_SCHEME = 0.25  # norm conserved by the semi-discrete evolution scheme


def densities(state) -> MatterDensities:
    """e, m_hat, f for a state (or every snapshot of a trajectory); asserts e >= |m_hat|."""
    d = densities_of(state)
    scale = max(1.0, float(np.max(d.e, initial=0.0)))
    if np.any(d.e + DENSITY_SLACK * scale < np.abs(d.m_hat)):
        raise AssertionError("dominant energy condition e >= |m| violated")
    return d


def energy_profile(e, beta, r, h, axis_weight: float = AXIS_WEIGHT_EXACT) -> np.ndarray:
    """E(t, r) = 2 pi int_0^r e r' e^beta dr' on every node (last axis).

    Trapezoid rule plus ``axis_weight * h^2 * e(0)`` for r > 0.  Since the
    integrand is r e(0) + O(r^3) near the axis, the default weight 1/12 is the
    Euler-Maclaurin correction and makes the rule fourth order.  The weight 1/4
    gives the discrete norm that the evolution scheme conserves exactly in the
    linear limit; conservation checks use it.
    """
    integrand = r * np.exp(beta) * e
    prof = cumtrapz(integrand, h)
    prof[..., 1:] += axis_weight * h * h * e[..., :1] * np.exp(beta[..., :1])
    return TWO_PI * prof


def _interp_profile(prof, r, radius):
    """Local cubic interpolation of a cumulative profile (1D) at ``radius``."""
    h = r[1] - r[0]
    i = int(np.clip(np.floor(radius / h) - 1, 0, len(r) - 4))
    xs = r[i:i + 4]
    ys = prof[..., i:i + 4]
    w = np.ones(4)
    for j in range(4):
        for m in range(4):
            if m != j:
                w[j] *= (radius - xs[m]) / (xs[j] - xs[m])
    return ys @ w


def total_energy(state) -> float:
    d = densities_of(state)
    g = state.grid
    return float(energy_profile(d.e, state.beta, g.r, g.h)[-1])


def ball_energy(state, radius: float) -> float:
    g = state.grid
    if radius > g.r_max + 1e-12:
        raise ValueError("radius beyond r_max")
    if radius <= 0:
        return 0.0
    d = densities_of(state)
    prof = energy_profile(d.e, state.beta, g.r, g.h)
    return float(_interp_profile(prof, g.r, radius))


def energy_profiles(traj, axis_weight: float = AXIS_WEIGHT_EXACT) -> np.ndarray:
    d = densities_of(traj)
    return energy_profile(d.e, traj["beta"], traj.grid.r, traj.grid.h, axis_weight)


def diagnostic_radius(traj) -> float:
    """Largest node radius R with R + t_end <= r_max (its causal past lies in the slice)."""
    g = traj.grid
    return float(g.r[g.index_at_or_below(g.r_max - traj.times[-1])])


@dataclass
class EnergyBalance:
    times: np.ndarray
    radius: float
    ball: np.ndarray
    outflow: np.ndarray

    @property
    def balance(self) -> np.ndarray:
        return self.ball + self.outflow

    @property
    def relative_drift(self) -> float:
        b = self.balance
        if b[0] == 0:
            return float(np.max(np.abs(b - b[0])))
        return float(np.max(np.abs(b - b[0])) / b[0])


def energy_balance(traj, radius: float | None = None) -> EnergyBalance:
    """E(t, R) plus the energy radiated through r = R since t = 0.

    With R inside the causal diagnostic region this is the conserved total
    energy of the part of the slice unaffected by the outer boundary.
    """
    g = traj.grid
    radius = diagnostic_radius(traj) if radius is None else radius
    i = g.index_at_or_below(radius)
    radius = float(g.r[i])
    d = densities_of(traj)
    prof = energy_profile(d.e, traj["beta"], g.r, g.h, AXIS_WEIGHT_SCHEME)
    rate = TWO_PI * radius * np.exp(traj["alpha"][:, i]) * d.m_hat[:, i]
    dt = traj.snapshot_dt
    out = np.concatenate([[0.0], np.cumsum(0.5 * dt * (rate[1:] + rate[:-1]))])
    return EnergyBalance(np.asarray(traj.times), radius, prof[:, i], -out)


def beta_identity_residual(traj) -> float:
    """max |e^beta (1 - E(t, r)/2pi) - 1| over all stored (t, r)."""
    prof = energy_profiles(traj)
    return float(np.max(np.abs(np.exp(traj["beta"]) * (1.0 - prof / TWO_PI) - 1.0)))


def metric_bounds_report(traj, *, tol: float = 1e-8) -> dict:
    """Measured inf/sup of alpha, beta and the asymptotic-value checks."""
    beta, alpha = traj["beta"], traj["alpha"]
    e0 = float(energy_profiles(traj)[0, -1])
    beta_inf0 = -np.log1p(-e0 / TWO_PI)
    b_inf = beta[:, -1]
    rep = {
        "beta_min": float(beta.min()),
        "beta_max": float(beta.max()),
        "alpha_min": float(alpha.min()),
        "alpha_max": float(alpha.max()),
        "beta_inf0": float(beta_inf0),
        "beta_inf_drift": float(np.max(np.abs(b_inf - b_inf[0]))),
        "E0": e0,
    }
    rep["beta_nonnegative"] = bool(rep["beta_min"] >= -tol)
    rep["beta_below_inf"] = bool(rep["beta_max"] <= beta_inf0 + tol)
    rep["alpha_finite"] = bool(np.isfinite(alpha).all())
    rep["ok"] = rep["beta_nonnegative"] and rep["beta_below_inf"] and rep["alpha_finite"]
    return rep


def divergence_PT_series(traj) -> np.ndarray:
    """-d_t(r e^beta e) + d_r(r e^alpha m) at interior snapshots (shape (K-2, N))."""
    d = densities_of(traj)
    r, h = traj.grid.r, traj.grid.h
    dens = r * np.exp(traj["beta"]) * d.e
    flux = r * np.exp(traj["alpha"]) * d.m_hat
    dt = traj.snapshot_dt
    return -(dens[2:] - dens[:-2]) / (2.0 * dt) + ddr(flux[1:-1], h, 1.0)


def divergence_PT(prev, cur, nxt) -> np.ndarray:
    """Residual of the energy-momentum conservation law from three consecutive states."""
    dt = cur.t - prev.t
    dens = [s.grid.r * np.exp(s.beta) * densities_of(s).e for s in (prev, nxt)]
    d = densities_of(cur)
    flux = cur.grid.r * np.exp(cur.alpha) * d.m_hat
    return -(dens[1] - dens[0]) / (2.0 * dt) + ddr(flux, cur.grid.h, 1.0)


# ---------------------------------------------------------------------------
# cone energetics


def cone_energy_series(traj, cone) -> np.ndarray:
    """E^O(t) at every stored time (0 after the apex), in the scheme's energy norm."""
    prof = energy_profiles(traj, AXIS_WEIGHT_SCHEME)
    r = traj.grid.r
    out = np.zeros(len(traj.times))
    for k, rc in enumerate(cone.r_C):
        if np.isfinite(rc) and rc > 0:
            out[k] = _interp_profile(prof[k], r, rc)
    return out


def cone_energy(traj, cone, t: float) -> float:
    k = int(np.argmin(np.abs(np.asarray(traj.times) - t)))
    rc = cone.r_C[k]
    if not np.isfinite(rc) or rc <= 0:
        return 0.0
    prof = energy_profiles(traj, AXIS_WEIGHT_SCHEME)
    return float(_interp_profile(prof[k], traj.grid.r, rc))


def _boundary_rate(traj, cone, dens=None):
    dens = dens or densities_of(traj)
    r = traj.grid.r
    integrand = r * np.exp(traj["alpha"]) * (dens.e - dens.m_hat)
    out = np.zeros(len(traj.times))
    for k, rc in enumerate(cone.r_C):
        if np.isfinite(rc) and rc > 0:
            out[k] = _interp_profile(integrand[k], r, rc)
    return -TWO_PI * out


def cumulative_cone_flux(traj, cone) -> np.ndarray:
    rate = _boundary_rate(traj, cone)
    dt = traj.snapshot_dt
    return np.concatenate([[0.0], np.cumsum(0.5 * dt * (rate[1:] + rate[:-1]))])


def flux_PT(traj, cone, tau: float, s: float) -> float:
    """Flux of P_T through the cone mantle between t = tau and t = s (nonpositive)."""
    if not tau <= s:
        raise ValueError("need tau <= s")
    times = np.asarray(traj.times)
    cum = cumulative_cone_flux(traj, cone)
    return float(np.interp(s, times, cum) - np.interp(tau, times, cum))


@dataclass
class ConeCheck:
    apex_time: float
    energies: np.ndarray
    flux: np.ndarray
    monotonicity_violation: float
    stokes_error: float
    max_flux: float


def cone_checks(traj, cone) -> ConeCheck:
    """Monotonicity and Stokes closure over all stored pairs tau < s <= t_O."""
    times = np.asarray(traj.times)
    sel = times <= cone.apex_time + 1e-12
    E = cone_energy_series(traj, cone)[sel]
    cum = cumulative_cone_flux(traj, cone)[sel]
    running_min = np.minimum.accumulate(E)
    mono = float(np.max(E[1:] - running_min[:-1], initial=0.0))
    closure = E - cum
    stokes = float(closure.max() - closure.min())
    # Flux(tau, s) <= 0: largest increase of the cumulative flux over any pair
    cmin = np.minimum.accumulate(cum)
    max_flux = float(np.max(cum[1:] - cmin[:-1], initial=0.0))
    return ConeCheck(cone.apex_time, E, cum, max(mono, 0.0), stokes, max_flux)


# ---------------------------------------------------------------------------
# null-chart estimates


class ChartFields:
    """Cauchy and chart quantities sampled at arbitrary (t, r)."""

    def __init__(self, traj, chart: NullChart):
        self.traj, self.chart = traj, chart
        self._inv = ChartInverter(chart)
        t0, dt, h = traj.times[0], traj.snapshot_dt, traj.grid.h
        f = traj.fields
        a = traj.speed
        dens = densities_of(traj)
        grids = {
            "gamma_t": a * f["Pi_gamma"], "gamma_r": f["Phi_gamma"],
            "phi_t": a * f["Pi_phi"], "phi_r": f["Phi_phi"],
            "gamma": f["gamma"], "phi": f["phi"], "f": dens.f,
            "t_u": chart.t_u, "t_v": chart.t_v, "r_u": chart.r_u, "r_v": chart.r_v,
            "F": chart.F, "G": chart.G,
        }
        self._s = {k: GridSampler(np.nan_to_num(v), t0, dt, 0.0, h) for k, v in grids.items()}
        self._valid = chart.valid

    def at_uv(self, U, V):
        t, r = self._inv(U, V)
        return t, np.abs(r)

    def null_derivs(self, t, r):
        s = self._s
        tu, tv, ru, rv = (s[k](t, r) for k in ("t_u", "t_v", "r_u", "r_v"))
        gt, gr, pt, pr = (s[k](t, r) for k in ("gamma_t", "gamma_r", "phi_t", "phi_r"))
        return {
            "gamma_u": tu * gt + ru * gr, "gamma_v": tv * gt + rv * gr,
            "phi_u": tu * pt + ru * pr, "phi_v": tv * pt + rv * pr,
        }

    def __call__(self, name, t, r):
        return self._s[name](t, r)

    def is_valid(self, t, r) -> np.ndarray:
        k = np.clip(np.rint((t - self.traj.times[0]) / self.traj.snapshot_dt).astype(int), 0, len(self.traj.times) - 1)
        i = np.clip(np.rint(r / self.traj.grid.h).astype(int), 0, len(self.traj.grid.r) - 1)
        inside = (t >= self.traj.times[0] - 1e-12) & (t <= self.traj.times[-1] + 1e-12)
        return inside & self._valid[k, i]


def _trapz(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


@dataclass
class FluxBoundReport:
    T0: float
    T1: float
    E0: float
    kappa_u: float
    kappa_v: float
    u_line_fluxes: list = field(default_factory=list)
    v_line_fluxes: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        n = sum(f > self.kappa_u * self.E0 * (1 + 1e-12) for _, f in self.v_line_fluxes)
        n += sum(f > self.kappa_v * self.E0 * (1 + 1e-12) for _, f in self.u_line_fluxes)
        return int(n)

    @property
    def max_ratio(self) -> float:
        if self.E0 <= 0:
            return 0.0
        vals = [f / (self.kappa_u * self.E0) for _, f in self.v_line_fluxes]
        vals += [f / (self.kappa_v * self.E0) for _, f in self.u_line_fluxes]
        return float(max(vals, default=0.0))


def null_flux_bounds(traj, chart: NullChart, T0: float, T1: float, *, n_lines: int = 8,
                     n_samples: int = 401, fields: ChartFields | None = None) -> FluxBoundReport:
    """Line fluxes of (X_u^2 + ...) r along sampled null lines in the slab T0 <= T <= T1.

    Each flux is compared with kappa E(0); kappa follows from the pointwise
    identity e -/+ m = e^{-2G|F}(4 X^2 + 2 Y^2) + f/2 and the Stokes bound
    pi int e^{-F}(e - m) r e^{2 lambda} du <= E(0) on an ingoing line.
    """
    fields = fields or ChartFields(traj, chart)
    e0 = float(energy_profiles(traj)[0, -1])
    m = chart.valid
    G, F = chart.G[m], chart.F[m]
    kappa_u = max(np.exp(G.max()) / 2.0, 2.0 * np.exp(-G.min())) / np.pi
    kappa_v = max(np.exp(F.max()) / 2.0, 2.0 * np.exp(-F.min())) / np.pi
    rep = FluxBoundReport(T0, T1, e0, float(kappa_u), float(kappa_v))
    # ingoing lines v = const, integrate in u
    for v in np.linspace(2 * T0, 2 * T1, n_lines + 2)[1:-1]:
        lo, hi = 2 * T0 - v, min(v, 2 * T1 - v)
        if hi <= lo:
            continue
        us = np.linspace(lo, hi, n_samples)
        t, r = fields.at_uv(us, np.full_like(us, v))
        if not fields.is_valid(t, r).all():
            continue
        nd = fields.null_derivs(t, r)
        q = (nd["gamma_u"] ** 2 + nd["phi_u"] ** 2 + fields("f", t, r)) * r
        rep.v_line_fluxes.append((float(v), _trapz(q, us)))
    # outgoing lines u = const, integrate in v
    for u in np.linspace(2 * T0 - 2 * T1, 2 * T1, n_lines + 2)[1:-1]:
        lo, hi = max(u, 2 * T0 - u), 2 * T1 - u
        if hi <= lo:
            continue
        vs = np.linspace(lo, hi, n_samples)
        t, r = fields.at_uv(np.full_like(vs, u), vs)
        if not fields.is_valid(t, r).all():
            continue
        nd = fields.null_derivs(t, r)
        q = (nd["gamma_v"] ** 2 + nd["phi_v"] ** 2 + fields("f", t, r)) * r
        rep.u_line_fluxes.append((float(u), _trapz(q, vs)))
    return rep


@dataclass
class ConeTREnergy:
    T0: float
    energy: float
    kappa_prime: float
    E0: float

    @property
    def ok(self) -> bool:
        return self.energy <= self.kappa_prime * self.E0 * (1 + 1e-12) + 1e-300


def cone_TR_energy(traj, cone_chart: NullChart, T0: float, *, n_samples: int = 401,
                   fields: ChartFields | None = None) -> ConeTREnergy:
    """Energy of the slice T~ = T0 inside the cone, measured with the (T, R) density.

    Integrates e~ r e^{lambda} dR with e~ = e^{-2 lambda}(2 g_u^2 + 2 g_v^2 + p_u^2 + p_v^2) + f/2
    (cone-chart derivatives) and compares with kappa' E(0), kappa' = exp(max|F - G|/2).
    """
    glob = cone_chart.aux["parent"]
    fields = fields or ChartFields(traj, glob)
    t_O = cone_chart.apex_time
    e0 = float(energy_profiles(traj)[0, -1])
    m = cone_chart.valid
    diff = np.abs(cone_chart.F - cone_chart.G)[m]
    kappa = float(np.exp(0.5 * diff.max())) if diff.size else 1.0
    if T0 >= t_O:
        return ConeTREnergy(T0, 0.0, kappa, e0)
    V = CubicSpline(glob.times, glob.v[:, 0])
    dV = V.derivative()
    R = np.linspace(0.0, t_O - T0, n_samples)
    uc, vc = T0 - R, T0 + R
    U = np.sign(uc) * V(np.abs(uc))
    Vv = V(vc)
    t, r = fields.at_uv(U, Vv)
    nd = fields.null_derivs(t, r)
    du = dV(np.abs(uc))  # du/du~
    dv = dV(vc)
    lam_c = 0.5 * (fields("F", t, r) + np.log(dv) + fields("G", t, r) + np.log(du))
    g_u, g_v = nd["gamma_u"] * du, nd["gamma_v"] * dv
    p_u, p_v = nd["phi_u"] * du, nd["phi_v"] * dv
    e_tilde = np.exp(-2 * lam_c) * (2 * g_u**2 + 2 * g_v**2 + p_u**2 + p_v**2) + 0.5 * fields("f", t, r)
    energy = TWO_PI * _trapz(e_tilde * r * np.exp(lam_c), R)
    return ConeTREnergy(float(T0), float(energy), kappa, e0)


# ---------------------------------------------------------------------------
# gamma floor, regularity monitor, metric export


@dataclass
class GammaFloor:
    gamma_min: float
    shifted_positive: bool
    checked: bool

    @property
    def ok(self) -> bool:
        return (not self.checked) or (self.gamma_min >= -1.0 - 1e-6 and self.shifted_positive)


def gamma_floor(traj, data_compliant: bool = True) -> GammaFloor:
    """min gamma over the run and positivity of r^{1/2}(gamma + 1) off the axis."""
    g = traj["gamma"]
    gmin = float(g.min())
    r = traj.grid.r
    shifted = np.sqrt(r[1:])[None, :] * (g[:, 1:] + 1.0)
    if not data_compliant:
        log.warning("initial data outside the sign/derivative family: gamma floor not asserted")
    return GammaFloor(gmin, bool(np.all(shifted > 0)), data_compliant)


@dataclass
class ConeMonitor:
    apex: tuple
    scale: float
    M: float
    X: float

    @property
    def ratio(self) -> float:
        return self.X / self.M if self.M > 0 else 0.0


def cone_gradient_monitor(traj, chart: NullChart, apex_tr: tuple, scale: float, *,
                          n: int = 33, fields: ChartFields | None = None) -> ConeMonitor:
    """Sup of |gamma_v| + |phi_v| over a small null diamond versus its past edges.

    The diamond has future tip at the chart point of (t, r) = apex_tr and sides
    of length ``scale`` in u and v.  M is the sup of the same quantity (and of its
    u-counterpart) on the two past edges, X the sup over the whole diamond.
    """
    fields = fields or ChartFields(traj, chart)
    u_bar, v_bar = (float(x) for x in fields._inv.uv(np.array(apex_tr[0]), np.array(apex_tr[1])))
    us = np.linspace(u_bar - scale, u_bar, n)
    vs = np.linspace(v_bar - scale, v_bar, n)
    UU, VV = np.meshgrid(us, vs, indexing="ij")
    t, r = fields.at_uv(UU.ravel(), VV.ravel())
    if not fields.is_valid(t, r).all() or np.min(r) <= 0:
        raise ValueError("monitor diamond leaves the valid chart or touches the axis")
    nd = fields.null_derivs(t, r)
    gv = (np.abs(nd["gamma_v"]) + np.abs(nd["phi_v"])).reshape(n, n)
    gu = (np.abs(nd["gamma_u"]) + np.abs(nd["phi_u"])).reshape(n, n)
    edge = np.zeros((n, n), dtype=bool)
    edge[0, :] = True
    edge[:, 0] = True
    M = float(max(gv[edge].max(), gu[edge].max()))
    X = float(max(gv.max(), gu.max()))
    return ConeMonitor((float(apex_tr[0]), float(apex_tr[1])), float(scale), M, X)


def reconstruct_4d_metric(state) -> dict:
    """Nonzero components of e^{-2 gamma} g3 + e^{2 gamma} dx3^2 on the slice."""
    r, g, a, b = state.grid.r, state.gamma, state.alpha, state.beta
    return {
        "r": r,
        "g_tt": -np.exp(-2 * g + 2 * a),
        "g_rr": np.exp(-2 * g + 2 * b),
        "g_thth": np.exp(-2 * g) * r * r,
        "g_33": np.exp(2 * g),
    }


def write_metric_csv(state, path):
    return write_csv(path, reconstruct_4d_metric(state))


def write_energy_csv(traj, path, cone=None):
    prof = energy_profiles(traj, AXIS_WEIGHT_SCHEME)
    e_cone = cone_energy_series(traj, cone) if cone is not None else np.full(len(traj.times), np.nan)
    return write_csv(path, {
        "t": traj.times,
        "E_total": prof[:, -1],
        "E_cone": e_cone,
        "gamma_min": traj["gamma"].min(axis=1),
        "beta_max": traj["beta"].max(axis=1),
        "alpha_min": traj["alpha"].min(axis=1),
        "alpha_max": traj["alpha"].max(axis=1),
    })


def write_bounds_report(path, entries: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for k, v in entries.items():
        if isinstance(v, float):
            v = repr(v)
        lines.append(f"{k} = {v}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_bounds_report(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def chart_bounds(chart: NullChart, traj) -> dict:
    """Measured c_F, c_G, c_lambda, Jacobian entry bands and the r/R band on valid points."""
    m = chart.valid
    out = {}
    for name, arr in (("F", chart.F), ("G", chart.G), ("lambda", chart.lam)):
        out[f"c_{name}_minus"] = float(arr[m].min())
        out[f"c_{name}_plus"] = float(arr[m].max())
    for name in ("t_u", "t_v", "r_u", "r_v", "u_t", "u_r", "v_t", "v_r"):
        arr = getattr(chart, name)[m]
        out[f"J_{name}_min"] = float(arr.min())
        out[f"J_{name}_max"] = float(arr.max())
    R = chart.R
    sel = m & (R > 1e-9) & (chart.r[None, :] > 0)
    ratio = chart.r[None, :].repeat(len(chart.times), 0)[sel] / R[sel]
    out["r_over_R_min"] = float(ratio.min())
    out["r_over_R_max"] = float(ratio.max())
    return out
