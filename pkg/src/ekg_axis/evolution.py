"""Fully constrained (t, r) evolution of gamma and phi.

First-order variables per matter field X in {gamma, phi}::

    Pi_X  = exp(beta - alpha) X_t      (even)
    Phi_X = X_r                        (odd)

so that the wave equations become

    X_t     = a Pi_X
    Phi_X_t = (a Pi_X)_r
    Pi_X_t  = (1/r) (r a Phi_X)_r - b S_X,     a = e^{alpha-beta}, b = e^{alpha+beta}

with S_gamma = -(m^2/2) e^{-2 gamma} phi^2 and S_phi = m^2 e^{-2 gamma} phi.  The
gauge (alpha, beta) is re-solved from the slice constraints at every RK stage.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CD1ViolationError, GaugeSingularityError, NumericalFailureError
from .grid import RadialGrid, cumtrapz, d2dr2, ddr
from .initial_data import InitialDataSet, alpha_from_beta, integrate_beta, potential_density
from .io import write_csv

log = logging.getLogger(__name__)

MATTER = ("gamma", "phi", "Pi_gamma", "Pi_phi", "Phi_gamma", "Phi_phi")
STORED = MATTER + ("alpha", "beta")
_EVEN_SIGN = 1.0


@dataclass
class CauchyState:
    grid: RadialGrid
    t: float
    gamma: np.ndarray
    phi: np.ndarray
    Pi_gamma: np.ndarray
    Pi_phi: np.ndarray
    Phi_gamma: np.ndarray
    Phi_phi: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    mass_param: float

    def matter(self) -> np.ndarray:
        return np.stack([getattr(self, k) for k in MATTER])

    @classmethod
    def from_matter(cls, grid, t, u, mass_param, alpha=None, beta=None):
        if alpha is None or beta is None:
            alpha, beta = _gauge(u, grid, mass_param, t)
        return cls(grid, t, *[u[i].copy() for i in range(6)], alpha, beta, mass_param)

    @classmethod
    def from_initial_data(cls, data: InitialDataSet) -> "CauchyState":
        grid = data.grid
        phi_g = data.Phi_gamma0 if data.Phi_gamma0 is not None else ddr(data.gamma0, grid.h, _EVEN_SIGN)
        phi_p = data.Phi_phi0 if data.Phi_phi0 is not None else ddr(data.phi0, grid.h, _EVEN_SIGN)
        u = np.stack([data.gamma0, data.phi0, data.Pi_gamma0, data.Pi_phi0, phi_g, phi_p])
        u[4:, 0] = 0.0
        return cls.from_matter(grid, 0.0, u, data.mass_param)

    @property
    def speed(self) -> np.ndarray:
        return np.exp(self.alpha - self.beta)

    @property
    def gamma_t(self):
        return self.speed * self.Pi_gamma

    @property
    def phi_t(self):
        return self.speed * self.Pi_phi


def _gauge(u, grid, mass_param, t=None):
    gamma, phi, pi_g, pi_p, phi_g, phi_p = u
    kinetic = pi_g * pi_g + phi_g * phi_g + 0.5 * (pi_p * pi_p + phi_p * phi_p)
    potential = potential_density(gamma, phi, mass_param)
    beta, d = integrate_beta(kinetic, potential, grid.r, grid.h)
    if not np.all(d < 1.0):
        bad = ~(d < 1.0)
        raise GaugeSingularityError(grid.r[int(np.argmax(bad))], t)
    alpha = alpha_from_beta(beta, gamma, phi, mass_param, grid.r, grid.h)
    return alpha, beta


def solve_gauge(state: CauchyState):
    """(alpha, beta) for the matter content of ``state`` (does not modify it)."""
    return _gauge(state.matter(), state.grid, state.mass_param, state.t)


def _div_r(g, r, h):
    """(1/r) d/dr (r g) for an odd field g; the axis value is the limit 2 g'(0)."""
    rg = r * g
    out = np.empty_like(g)
    out[1:-1] = (rg[2:] - rg[:-2]) / (2.0 * h * r[1:-1])
    out[0] = 2.0 * g[1] / h
    out[-1] = (3.0 * rg[-1] - 4.0 * rg[-2] + rg[-3]) / (2.0 * h * r[-1])
    return out


def _backward(f, h):
    return (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)


def rhs_arrays(u, grid: RadialGrid, mass_param: float, t=None, gauge=None):
    alpha, beta = gauge if gauge is not None else _gauge(u, grid, mass_param, t)
    gamma, phi, pi_g, pi_p, phi_g, phi_p = u
    r, h = grid.r, grid.h
    a = np.exp(alpha - beta)
    du = np.empty_like(u)
    a_pi_g = a * pi_g
    a_pi_p = a * pi_p
    du[0] = a_pi_g
    du[1] = a_pi_p
    du[4] = ddr(a_pi_g, h, _EVEN_SIGN)
    du[5] = ddr(a_pi_p, h, _EVEN_SIGN)
    du[2] = _div_r(a * phi_g, r, h)
    du[3] = _div_r(a * phi_p, r, h)
    if mass_param:
        b = np.exp(alpha + beta)
        weight = b * mass_param**2 * np.exp(-2.0 * gamma)
        du[2] += 0.5 * weight * phi * phi
        du[3] -= weight * phi
    # outgoing-radiation condition, f ~ g(t - r)/sqrt(r)
    rn, an = r[-1], a[-1]
    for k in (2, 3, 4, 5):
        du[k, -1] = -an * (_backward(u[k], h) + u[k, -1] / (2.0 * rn))
    du[4, 0] = 0.0
    du[5, 0] = 0.0
    return du


def rhs(state: CauchyState) -> np.ndarray:
    """Time derivatives of (gamma, phi, Pi_gamma, Pi_phi, Phi_gamma, Phi_phi)."""
    return rhs_arrays(state.matter(), state.grid, state.mass_param, state.t,
                      gauge=(state.alpha, state.beta))


def cfl_dt(state: CauchyState, courant: float = 0.5) -> float:
    if not 0.0 < courant <= 1.0:
        raise ValueError("courant must lie in (0, 1]")
    return courant * state.grid.h / float(np.max(state.speed))


def _rk4(u, t, dt, grid, m):
    k1 = rhs_arrays(u, grid, m, t)
    k2 = rhs_arrays(u + 0.5 * dt * k1, grid, m, t + 0.5 * dt)
    k3 = rhs_arrays(u + 0.5 * dt * k2, grid, m, t + 0.5 * dt)
    k4 = rhs_arrays(u + dt * k3, grid, m, t + dt)
    out = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[4:, 0] = 0.0
    return out


def step(state: CauchyState, dt: float) -> CauchyState:
    """One classical RK4 step; negative dt integrates backwards."""
    if dt == 0.0:
        return CauchyState.from_matter(state.grid, state.t, state.matter(), state.mass_param,
                                       state.alpha.copy(), state.beta.copy())
    u = _rk4(state.matter(), state.t, dt, state.grid, state.mass_param)
    if not np.all(np.isfinite(u)):
        raise NumericalFailureError(f"non-finite values after step to t = {state.t + dt:.6g}", state)
    return CauchyState.from_matter(state.grid, state.t + dt, u, state.mass_param)


@dataclass
class Trajectory:
    grid: RadialGrid
    mass_param: float
    dt: float
    output_every: int
    times: np.ndarray
    fields: dict
    dt_history: list = field(default_factory=list)
    status: str = "ok"
    reason: str = ""

    @property
    def n_snapshots(self) -> int:
        return len(self.times)

    @property
    def snapshot_dt(self) -> float:
        return self.dt * self.output_every

    def __getitem__(self, name) -> np.ndarray:
        return self.fields[name]

    def state(self, k: int) -> CauchyState:
        f = self.fields
        return CauchyState(self.grid, float(self.times[k]), *[f[n][k] for n in STORED], self.mass_param)

    def truncate(self, n: int) -> None:
        self.times = self.times[:n]
        self.fields = {k: v[:n] for k, v in self.fields.items()}

    @property
    def speed(self) -> np.ndarray:
        return np.exp(self.fields["alpha"] - self.fields["beta"])


def plan_steps(t_end: float, dt_cfl: float, output_every: int) -> tuple[int, float]:
    """Uniform dt <= dt_cfl landing exactly on t_end with whole output intervals."""
    n_out = max(1, math.ceil(t_end / (output_every * dt_cfl) - 1e-12))
    n_steps = n_out * output_every
    return n_steps, t_end / n_steps


def evolve(initial, t_end: float, *, courant: float = 0.5, output_every: int = 2,
           callbacks=(), callback_every: int = 1, raise_on_failure: bool = False) -> Trajectory:
    """Run RK4 steps from ``initial`` (InitialDataSet or CauchyState) up to ``t_end``.

    Snapshots are stored every ``output_every`` steps.  Numerical failure or a
    gauge singularity stops the run; the trajectory keeps what was computed and
    records the reason in ``status``/``reason``.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if isinstance(initial, InitialDataSet):
        if not initial.cd1_margin < 1.0:
            raise CD1ViolationError(float("nan"), initial.cd1_margin)
        state = CauchyState.from_initial_data(initial)
    else:
        state = initial
    grid, m = state.grid, state.mass_param
    dt_cfl = cfl_dt(state, courant)
    n_steps, dt = plan_steps(t_end, dt_cfl, output_every)
    n_out = n_steps // output_every + 1
    fields = {k: np.empty((n_out, grid.n_points)) for k in STORED}
    times = np.empty(n_out)

    def store(k, st):
        times[k] = st.t
        for name in STORED:
            fields[name][k] = getattr(st, name)

    traj = Trajectory(grid, m, dt, output_every, times, fields)
    store(0, state)
    for cb in callbacks:
        cb(state)
    u = state.matter()
    t0 = state.t
    k_out = 0
    for n in range(1, n_steps + 1):
        t_prev = t0 + (n - 1) * dt
        try:
            u = _rk4(u, t_prev, dt, grid, m)
            if not np.all(np.isfinite(u)):
                raise NumericalFailureError(f"non-finite values after step to t = {t_prev + dt:.6g}")
            t_now = t0 + n * dt
            if n % output_every == 0:
                alpha, beta = _gauge(u, grid, m, t_now)
        except (NumericalFailureError, GaugeSingularityError) as exc:
            traj.status = "numerical-failure" if isinstance(exc, NumericalFailureError) else "gauge-singularity"
            traj.reason = str(exc)
            log.warning("evolution stopped: %s", exc)
            traj.truncate(k_out + 1)
            if raise_on_failure:
                raise
            return traj
        traj.dt_history.append(dt)
        if n % output_every == 0:
            k_out += 1
            st = CauchyState.from_matter(grid, t_now, u, m, alpha, beta)
            store(k_out, st)
            if callbacks and k_out % callback_every == 0:
                for cb in callbacks:
                    cb(st)
    return traj


# ---------------------------------------------------------------------------
# consistency monitors for the redundant Einstein equations


def momentum_constraint_residual(state: CauchyState, dt: float | None = None) -> np.ndarray:
    """beta_t from gauge re-solves at t +/- dt minus r (2 gamma_t gamma_r + phi_t phi_r)."""
    if dt is None:
        dt = cfl_dt(state)
    ahead = step(state, dt)
    behind = step(state, -dt)
    beta_t = (ahead.beta - behind.beta) / (2.0 * dt)
    r = state.grid.r
    return beta_t - r * (2.0 * state.gamma_t * state.Phi_gamma + state.phi_t * state.Phi_phi)


def _time_derivs(f, dt):
    ft = (f[2:] - f[:-2]) / (2.0 * dt)
    ftt = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dt**2
    return ft, ftt


def momentum_residual_series(traj: Trajectory) -> np.ndarray:
    """Momentum-constraint residual at interior snapshots (shape (K-2, N))."""
    f = traj.fields
    dt = traj.snapshot_dt
    beta_t, _ = _time_derivs(f["beta"], dt)
    a = traj.speed[1:-1]
    r = traj.grid.r
    g_t = a * f["Pi_gamma"][1:-1]
    p_t = a * f["Pi_phi"][1:-1]
    return beta_t - r * (2.0 * g_t * f["Phi_gamma"][1:-1] + p_t * f["Phi_phi"][1:-1])


def second_order_residual_series(traj: Trajectory) -> np.ndarray:
    """LHS - RHS of the second-order angular Einstein equation at interior snapshots."""
    f = traj.fields
    dt, h, m = traj.snapshot_dt, traj.grid.h, traj.mass_param
    alpha, beta = f["alpha"], f["beta"]
    alpha_t, _ = _time_derivs(alpha, dt)
    beta_t, beta_tt = _time_derivs(beta, dt)
    al, be = alpha[1:-1], beta[1:-1]
    alpha_r = ddr(al, h, _EVEN_SIGN)
    beta_r = ddr(be, h, _EVEN_SIGN)
    alpha_rr = d2dr2(al, h, _EVEN_SIGN)
    ia2 = np.exp(-2.0 * al)
    ib2 = np.exp(-2.0 * be)
    lhs = ib2 * alpha_rr - ia2 * beta_tt + ib2 * alpha_r * (alpha_r - beta_r) + ia2 * beta_t * (alpha_t - beta_t)
    a = np.exp(al - be)
    g_t = a * f["Pi_gamma"][1:-1]
    p_t = a * f["Pi_phi"][1:-1]
    g_r = f["Phi_gamma"][1:-1]
    p_r = f["Phi_phi"][1:-1]
    gam, phi = f["gamma"][1:-1], f["phi"][1:-1]
    rhs_ = (-0.5 * m**2 * np.exp(-2.0 * gam) * phi**2
            + ia2 * (g_t**2 + 0.5 * p_t**2) - ib2 * (g_r**2 + 0.5 * p_r**2))
    return lhs - rhs_


def second_order_residual(prev: CauchyState, cur: CauchyState, nxt: CauchyState) -> np.ndarray:
    """Residual of the redundant second-order equation from three equally spaced states."""
    dt = cur.t - prev.t
    traj = Trajectory(cur.grid, cur.mass_param, dt, 1, np.array([prev.t, cur.t, nxt.t]),
                      {k: np.stack([getattr(s, k) for s in (prev, cur, nxt)]) for k in STORED})
    return second_order_residual_series(traj)[0]


def hamiltonian_residual_series(traj: Trajectory) -> np.ndarray:
    """Continuum Hamiltonian constraint residual in e^{-2 beta} with centered d_r."""
    f = traj.fields
    r, h, m = traj.grid.r, traj.grid.h, traj.mass_param
    y = np.exp(-2.0 * f["beta"])
    kin = f["Pi_gamma"] ** 2 + f["Phi_gamma"] ** 2 + 0.5 * (f["Pi_phi"] ** 2 + f["Phi_phi"] ** 2)
    pot = m**2 * np.exp(-2.0 * f["gamma"]) * f["phi"] ** 2
    return -ddr(y, h, _EVEN_SIGN) - 2.0 * r * y * kin - r * pot


def integrating_factor_residual_series(traj: Trajectory) -> np.ndarray:
    f = traj.fields
    r, h, m = traj.grid.r, traj.grid.h, traj.mass_param
    kin = f["Pi_gamma"] ** 2 + f["Phi_gamma"] ** 2 + 0.5 * (f["Pi_phi"] ** 2 + f["Phi_phi"] ** 2)
    pot = m**2 * np.exp(-2.0 * f["gamma"]) * f["phi"] ** 2
    big_i = cumtrapz(2.0 * r * kin, h)
    d = cumtrapz(r * pot * np.exp(big_i), h)
    return np.exp(-2.0 * f["beta"] + big_i) - (1.0 - d)


SNAPSHOT_COLUMNS = ("gamma", "phi", "Pi_gamma", "Pi_phi", "alpha", "beta")


def snapshot_name(t: float) -> str:
    return f"snap_t{t:.6f}.csv"


def write_snapshots(traj: Trajectory, out_dir, every: int = 1) -> list:
    """One CSV per written snapshot with columns t, r, gamma, phi, Pi_gamma, Pi_phi, alpha, beta."""
    out_dir = Path(out_dir)
    idx = list(range(0, traj.n_snapshots, every))
    if idx[-1] != traj.n_snapshots - 1:
        idx.append(traj.n_snapshots - 1)
    paths = []
    r = traj.grid.r
    for k in idx:
        cols = {"t": np.full_like(r, traj.times[k]), "r": r}
        cols.update({name: traj.fields[name][k] for name in SNAPSHOT_COLUMNS})
        paths.append(write_csv(out_dir / snapshot_name(traj.times[k]), cols))
    return paths
