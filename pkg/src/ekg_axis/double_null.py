"""Characteristic evolution in double-null form on a region away from the axis.

The lattice is ``u_i = u0 + i k``, ``v_j = v0 + j k`` for ``0 <= i, j <= M``.
Data on the two seed rays ``u = u0`` and ``v = v0`` are taken from a Cauchy
run mapped through the global null chart.  Each null cell is advanced with a
second-order diamond scheme for

    r_uv       = (m^2/4) r e^{2 lam - 2 gamma} phi^2
    lam_uv     = -gamma_u gamma_v - phi_u phi_v / 2 + (m^2/8) e^{2 lam - 2 gamma} phi^2
    2 r X_uv + r_u X_v + r_v X_u = S_X,
        S_gamma = (m^2/4) r e^{2 lam - 2 gamma} phi^2
        S_phi   = -(m^2/2) r e^{2 lam - 2 gamma} phi

The two first-order null equations for ``e^{-2 lam} r_u`` and ``e^{-2 lam} r_v``
are not used for stepping; they are evaluated afterwards as residuals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import ChartFields
from .errors import SeedingError, StepError
from .io import write_csv

FIELDS = ("r", "lam", "gamma", "phi")
MAX_PASSES = 8
PASS_TOL = 1e-10


@dataclass
class DoubleNullState:
    u: np.ndarray
    v: np.ndarray
    r: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray
    mass_param: float
    status: str = "seeded"
    reason: str = ""
    max_passes_used: int = 0
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def k(self) -> float:
        return float(self.u[1] - self.u[0])

    @property
    def M(self) -> int:
        return len(self.u) - 1

    @property
    def T(self) -> np.ndarray:
        return 0.5 * (self.u[:, None] + self.v[None, :])

    @property
    def R(self) -> np.ndarray:
        return 0.5 * (self.v[None, :] - self.u[:, None])

    def copy(self) -> "DoubleNullState":
        return DoubleNullState(self.u.copy(), self.v.copy(), self.r.copy(), self.lam.copy(),
                               self.gamma.copy(), self.phi.copy(), self.mass_param, self.status,
                               self.reason, self.max_passes_used, dict(self.meta))


def empty_state(u0: float, v0: float, side: float, n_cells: int, mass_param: float) -> DoubleNullState:
    if v0 - (u0 + side) <= 0.0:
        raise SeedingError("the diamond must satisfy v - u > 0 everywhere (away from the axis)")
    u = u0 + side * np.arange(n_cells + 1) / n_cells
    v = v0 + side * np.arange(n_cells + 1) / n_cells
    z = lambda: np.full((n_cells + 1, n_cells + 1), np.nan)
    return DoubleNullState(u, v, z(), z(), z(), z(), float(mass_param))


def flat_seed(u0, v0, side, n_cells, mass_param=0.0, gamma=None, phi=None) -> DoubleNullState:
    """Minkowski seed r = (v - u)/2, lam = 0, with optional scalar profiles on the rays."""
    st = empty_state(u0, v0, side, n_cells, mass_param)
    for arr, fn in ((st.gamma, gamma), (st.phi, phi)):
        for sl, uu, vv in (((0, slice(None)), st.u[0], st.v), ((slice(None), 0), st.u, st.v[0])):
            arr[sl] = 0.0 if fn is None else fn(uu, vv)
    st.r[0, :] = 0.5 * (st.v - st.u[0])
    st.r[:, 0] = 0.5 * (st.v[0] - st.u)
    st.lam[0, :] = 0.0
    st.lam[:, 0] = 0.0
    return st


def seed_from_cauchy(traj, chart, u0: float, v0: float, side: float, n_cells: int,
                     fields=None) -> DoubleNullState:
    """Seed the two initial rays from a Cauchy trajectory through its null chart.

    Values of r, lam = (F + G)/2, gamma and phi are sampled on the rays; their
    transverse derivatives are implied by the box scheme and not imposed.
    """
    cf = fields if fields is not None else ChartFields(traj, chart)
    st = empty_state(u0, v0, side, n_cells, traj.mass_param)
    rays = (((0, slice(None)), np.full_like(st.v, st.u[0]), st.v),
            ((slice(None), 0), st.u, np.full_like(st.u, st.v[0])))
    for sl, uu, vv in rays:
        t, r = cf.at_uv(uu, vv)
        if not np.all(np.isfinite(t) & np.isfinite(r)) or np.any(r <= 0):
            raise SeedingError("seed ray could not be located in the chart")
        ok = cf.is_valid(t, r)
        if not np.all(ok):
            bad = int(np.argmin(ok))
            raise SeedingError(f"seed ray leaves the chart's valid region at (t, r) = ({t[bad]:.4g}, {r[bad]:.4g})")
        st.r[sl] = r
        st.lam[sl] = 0.5 * (cf("F", t, r) + cf("G", t, r))
        st.gamma[sl] = cf("gamma", t, r)
        st.phi[sl] = cf("phi", t, r)
    st.meta["seeded_from"] = "cauchy"
    return st


def _center(n, e, w, s):
    return 0.25 * (n + e + w + s)


def _derivs(n, e, w, s, k):
    du = 0.5 * ((n - w) + (e - s)) / k
    dv = 0.5 * ((n - e) + (w - s)) / k
    return du, dv


def _solve_wave(e, w, s, rc, ru, rv, rhs, k):
    """Corner value X_N of 2 r X_uv + r_u X_v + r_v X_u = rhs on one cell."""
    coef = 2.0 * rc / k**2 + 0.5 * (ru + rv) / k
    const = (-2.0 * rc * (e + w - s) / k**2
             + 0.5 * ru * (w - e - s) / k + 0.5 * rv * (e - w - s) / k)
    return (rhs - const) / coef


def box_step(corners: dict, k: float, mass_param: float, *, max_passes: int = MAX_PASSES,
             tol: float = PASS_TOL):
    """Advance a batch of cells to their future corner.

    ``corners`` maps each field name to a tuple ``(E, W, S)`` of arrays holding the
    two past-null corners and the past corner.  Returns ``(values, passes)`` where
    ``values`` maps field names to the future-corner arrays.
    """
    m2 = mass_param**2
    old = {f: corners[f][0] + corners[f][1] - corners[f][2] for f in FIELDS}
    for p in range(1, max_passes + 1):
        c = {f: _center(old[f], *corners[f]) for f in FIELDS}
        d = {f: _derivs(old[f], *corners[f], k) for f in FIELDS}
        pot = np.exp(2.0 * c["lam"] - 2.0 * c["gamma"])
        new = {}
        E, W, S = corners["r"]
        new["r"] = E + W - S + k**2 * 0.25 * m2 * c["r"] * pot * c["phi"] ** 2
        E, W, S = corners["lam"]
        (gu, gv), (pu, pv) = d["gamma"], d["phi"]
        new["lam"] = E + W - S + k**2 * (-gu * gv - 0.5 * pu * pv + 0.125 * m2 * pot * c["phi"] ** 2)
        # geometry at the centre from the freshly updated r
        rc = _center(new["r"], *corners["r"])
        ru, rv = _derivs(new["r"], *corners["r"], k)
        new["gamma"] = _solve_wave(*corners["gamma"], rc, ru, rv, 0.25 * m2 * rc * pot * c["phi"] ** 2, k)
        new["phi"] = _solve_wave(*corners["phi"], rc, ru, rv, -0.5 * m2 * rc * pot * c["phi"], k)
        change = max(float(np.max(np.abs(new[f] - old[f]))) if new[f].size else 0.0 for f in FIELDS)
        old = new
        if p >= 2 and change <= tol:
            return new, p
    raise StepError(f"box fixed point did not converge: change {change:.3e} after {max_passes} passes")


def evolve_diamond(state: DoubleNullState, *, max_passes: int = MAX_PASSES, tol: float = PASS_TOL) -> DoubleNullState:
    """Fill the lattice diagonal by diagonal; cells on one anti-diagonal are independent."""
    st = state.copy()
    M, k = st.M, st.k
    arrs = {"r": st.r, "lam": st.lam, "gamma": st.gamma, "phi": st.phi}
    used = 0
    for dsum in range(2, 2 * M + 1):
        i = np.arange(max(1, dsum - M), min(M, dsum - 1) + 1)
        j = dsum - i
        corners = {f: (a[i, j - 1], a[i - 1, j], a[i - 1, j - 1]) for f, a in arrs.items()}
        vals, p = box_step(corners, k, st.mass_param, max_passes=max_passes, tol=tol)
        used = max(used, p)
        for f, a in arrs.items():
            a[i, j] = vals[f]
        if not np.all(np.isfinite(vals["r"])) or np.any(vals["r"] <= 0):
            st.status, st.reason = "failed", f"r left (0, inf) on diagonal {dsum}"
            break
    else:
        st.status = "ok"
    st.max_passes_used = used
    ru, rv = null_r_derivatives(st)
    if st.status == "ok" and (np.nanmax(ru) >= 0 or np.nanmin(rv) <= 0):
        st.status, st.reason = "trapped", "r_u < 0 < r_v violated"
    return st


def null_r_derivatives(state: DoubleNullState):
    """Cell-centred r_u and r_v."""
    r, k = state.r, state.k
    ru = 0.5 * ((r[1:, 1:] - r[:-1, 1:]) + (r[1:, :-1] - r[:-1, :-1])) / k
    rv = 0.5 * ((r[1:, 1:] - r[1:, :-1]) + (r[:-1, 1:] - r[:-1, :-1])) / k
    return ru, rv


def _null_residual(r, lam, gamma, phi, k):
    """Residual of d_s(e^{-2 lam} r_s) + e^{-2 lam} r (2 gamma_s^2 + phi_s^2) along axis 0."""
    lam_h = 0.5 * (lam[1:] + lam[:-1])
    q = np.exp(-2.0 * lam_h) * (r[1:] - r[:-1]) / k
    dq = (q[1:] - q[:-1]) / k
    gs = (gamma[2:] - gamma[:-2]) / (2.0 * k)
    ps = (phi[2:] - phi[:-2]) / (2.0 * k)
    return dq + np.exp(-2.0 * lam[1:-1]) * r[1:-1] * (2.0 * gs**2 + ps**2)


@dataclass(frozen=True)
class NullResiduals:
    res_u: np.ndarray  # on interior u-nodes of every v-line, shape (M-1, M+1)
    res_v: np.ndarray  # on every u-line at interior v-nodes, shape (M+1, M-1)

    @property
    def evolved_max(self) -> float:
        return max(float(np.max(np.abs(self.res_u[:, 1:]))), float(np.max(np.abs(self.res_v[1:, :]))))

    @property
    def seed_max(self) -> float:
        return max(float(np.max(np.abs(self.res_u[:, 0]))), float(np.max(np.abs(self.res_v[0, :]))))


def raychaudhuri_residuals(state: DoubleNullState) -> NullResiduals:
    """Both null constraints evaluated with centred differences (certification only)."""
    k = state.k
    res_u = _null_residual(state.r, state.lam, state.gamma, state.phi, k)
    res_v = _null_residual(state.r.T, state.lam.T, state.gamma.T, state.phi.T, k).T
    return NullResiduals(res_u, res_v)


def null_monotonicity(state: DoubleNullState) -> float:
    """Largest increase of e^{-2 lam} r_u along a v-line; nonpositive up to O(k^2)."""
    lam_h = 0.5 * (state.lam[1:] + state.lam[:-1])
    q = np.exp(-2.0 * lam_h) * (state.r[1:] - state.r[:-1]) / state.k
    return float(np.max(np.diff(q, axis=0)))


def _second(f, k):
    """u, v, uu, vv, uv differences on the lattice interior."""
    fu = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2 * k)
    fv = (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * k)
    fuu = (f[2:, 1:-1] - 2 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / k**2
    fvv = (f[1:-1, 2:] - 2 * f[1:-1, 1:-1] + f[1:-1, :-2]) / k**2
    fuv = (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4 * k**2)
    # T = (u+v)/2, R = (v-u)/2  =>  d_T = d_u + d_v, d_R = d_v - d_u
    return {
        "T": fu + fv, "R": fv - fu,
        "TT": fuu + 2 * fuv + fvv, "RR": fuu - 2 * fuv + fvv, "TR": fvv - fuu,
    }


def tr_residuals(state: DoubleNullState) -> dict:
    """Residuals of the (T, R)-form field equations on the lattice interior.

    Keys: ``R_constraint``, ``TR_constraint``, ``T_equation``, ``lambda_wave``,
    ``gamma_wave``, ``phi_wave``; each a (M-1, M-1) array.
    """
    k, m2 = state.k, state.mass_param**2
    r, lam, g, p = (state.r, state.lam, state.gamma, state.phi)
    dr, dl, dg, dp = (_second(x, k) for x in (r, lam, g, p))
    rc, lc, gc, pc = (x[1:-1, 1:-1] for x in (r, lam, g, p))
    quad = dg["T"] ** 2 + dg["R"] ** 2 + 0.5 * dp["T"] ** 2 + 0.5 * dp["R"] ** 2
    mass = 0.5 * m2 * np.exp(2 * lc - 2 * gc) * pc**2
    lhs_tr = dr["T"] * dl["T"] / rc + dr["R"] * dl["R"] / rc
    ie = np.exp(-2 * lc)
    box = lambda d: ie * (-d["TT"] + d["RR"] - dr["T"] / rc * d["T"] + dr["R"] / rc * d["R"])
    return {
        "R_constraint": lhs_tr - dr["RR"] / rc - quad - mass,
        "TR_constraint": -dr["TR"] / rc + dr["T"] / rc * dl["R"] + dr["R"] / rc * dl["T"]
                          - 2 * dg["T"] * dg["R"] - dp["T"] * dp["R"],
        "T_equation": lhs_tr - dr["TT"] / rc - quad + mass,
        "lambda_wave": ie * (dl["RR"] - dl["TT"]) + np.exp(-2 * gc) * 0.5 * m2 * pc**2
                       - ie * (dg["T"] ** 2 - dg["R"] ** 2 + 0.5 * dp["T"] ** 2 - 0.5 * dp["R"] ** 2),
        "gamma_wave": box(dg) + np.exp(-2 * gc) * 0.5 * m2 * pc**2,
        "phi_wave": box(dp) - np.exp(-2 * gc) * m2 * pc,
    }


@dataclass(frozen=True)
class DiscrepancyReport:
    sup: dict
    k: float

    @property
    def max(self) -> float:
        return max(self.sup.values())


def compare_with_cauchy(state: DoubleNullState, traj, chart, fields=None) -> DiscrepancyReport:
    """Sup-norm differences of r, lam, gamma, phi against the Cauchy run over the lattice."""
    cf = fields if fields is not None else ChartFields(traj, chart)
    U, V = np.meshgrid(state.u, state.v, indexing="ij")
    t, r = cf.at_uv(U, V)
    ref = {
        "r": r, "lam": 0.5 * (cf("F", t, r) + cf("G", t, r)),
        "gamma": cf("gamma", t, r), "phi": cf("phi", t, r),
    }
    sup = {f: float(np.max(np.abs(getattr(state, f) - ref[f]))) for f in FIELDS}
    return DiscrepancyReport(sup, state.k)


def refinement_order(coarse: float, fine: float, ratio: float = 2.0) -> float:
    if coarse == 0.0 and fine == 0.0:
        return np.inf
    if fine == 0.0:
        return np.inf
    return float(np.log(coarse / fine) / np.log(ratio))


def write_lattice_csv(state: DoubleNullState, path) -> None:
    U, V = np.meshgrid(state.u, state.v, indexing="ij")
    cols = {"u": U, "v": V, "r": state.r, "lambda": state.lam, "gamma": state.gamma, "phi": state.phi}
    write_csv(path, {k: np.ravel(a) for k, a in cols.items()})
