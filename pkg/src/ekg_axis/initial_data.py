"""Time-slice constraint solving and the rational-bump data family.

On a slice the Hamiltonian constraint is linear in ``y = exp(-2 beta)``::

    -y' = 2 r y K + r P,   K = Pi_g^2 + Phi_g^2 + (Pi_p^2 + Phi_p^2)/2,
                           P = m^2 exp(-2 gamma) phi^2,

with ``y(0) = 1``.  Its integrating-factor solution is
``beta = I/2 - log(1 - D)/2`` where ``I = int_0^r 2 s K ds`` and
``D = int_0^r s P exp(I) ds``.  ``D < 1`` everywhere is the finite-energy
condition on the data.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CD1ViolationError, FamilyViolationError
from .grid import EVEN, RadialGrid, ScalarField, cumtrapz, ddr
from .io import write_csv

log = logging.getLogger(__name__)

DECAY_EXPONENT = 11.0 / 8.0
DERIVATIVE_FLOOR = 0.5  # gamma_0' > -C/r with C = 1/2


@dataclass(frozen=True)
class DataFamilyParams:
    a_gamma: float = 0.1
    a_phi: float = 0.1
    p: float = 1.0
    w: float = 1.0
    mass_param: float = 1.0
    gamma1_amp: float = 0.0

    def validate(self) -> None:
        vals = (self.a_gamma, self.a_phi, self.p, self.w, self.mass_param, self.gamma1_amp)
        if not all(np.isfinite(v) for v in vals):
            raise FamilyViolationError("data-family parameters must be finite")
        if self.a_gamma < 0:
            raise FamilyViolationError(f"a_gamma must be >= 0 so that gamma_0 >= 0, got {self.a_gamma}")
        if self.gamma1_amp < 0:
            raise FamilyViolationError(f"gamma1_amp must be >= 0 so that gamma_1 >= 0, got {self.gamma1_amp}")
        if self.w <= 0:
            raise FamilyViolationError(f"width w must be positive, got {self.w}")
        if self.p < DECAY_EXPONENT / 2:
            raise FamilyViolationError(f"p must be >= 11/16 for r^(-11/8) decay, got {self.p}")
        if self.mass_param < 0:
            raise FamilyViolationError(f"mass_param must be >= 0, got {self.mass_param}")


def bump(r, amp, w, p):
    return amp * (1.0 + (np.asarray(r) / w) ** 2) ** (-p)


def bump_dr(r, amp, w, p):
    r = np.asarray(r)
    return -2.0 * p * amp * r / w**2 * (1.0 + (r / w) ** 2) ** (-p - 1.0)


@dataclass(frozen=True)
class FamilySample:
    gamma0: np.ndarray
    gamma1: np.ndarray
    phi0: np.ndarray
    phi1: np.ndarray
    gamma0_r: np.ndarray = field(repr=False, default=None)
    phi0_r: np.ndarray = field(repr=False, default=None)

    def __iter__(self):
        return iter((self.gamma0, self.gamma1, self.phi0, self.phi1))


def check_family(gamma0, gamma0_r, gamma1, r) -> None:
    """Pointwise gamma_0 >= 0, gamma_1 >= 0 and gamma_0' > -1/(2r) off the axis."""
    if np.any(gamma0 < 0):
        i = int(np.argmax(gamma0 < 0))
        raise FamilyViolationError(f"gamma_0 < 0 at r = {r[i]:.6g}")
    if np.any(gamma1 < 0):
        i = int(np.argmax(gamma1 < 0))
        raise FamilyViolationError(f"gamma_1 < 0 at r = {r[i]:.6g}")
    off = r > 0
    bad = gamma0_r[off] * r[off] <= -DERIVATIVE_FLOOR
    if np.any(bad):
        i = int(np.argmax(bad))
        raise FamilyViolationError(f"gamma_0' <= -1/(2r) at r = {r[off][i]:.6g}")


def sample_family(params: DataFamilyParams, grid: RadialGrid) -> FamilySample:
    params.validate()
    r = grid.r
    g0 = bump(r, params.a_gamma, params.w, params.p)
    g0_r = bump_dr(r, params.a_gamma, params.w, params.p)
    g1 = bump(r, params.gamma1_amp, params.w, params.p)
    check_family(g0, g0_r, g1, r)
    p0 = bump(r, params.a_phi, params.w, params.p)
    p0_r = bump_dr(r, params.a_phi, params.w, params.p)
    return FamilySample(g0, g1, p0, np.zeros_like(r), g0_r, p0_r)


def potential_density(gamma, phi, mass_param):
    return mass_param**2 * np.exp(-2.0 * gamma) * phi**2


def integrate_beta(kinetic, potential, r, h):
    """Closed-form constraint solve. Returns (beta, D) with D the (cd1) integral."""
    big_i = cumtrapz(2.0 * r * kinetic, h)
    d = cumtrapz(r * potential * np.exp(big_i), h)
    with np.errstate(invalid="ignore", divide="ignore"):
        beta = 0.5 * big_i - 0.5 * np.log1p(-d)
    return beta, d


def _raise_if_cd1(d, r):
    bad = d >= 1.0
    if np.any(bad):
        i = int(np.argmax(bad))
        raise CD1ViolationError(r[i], d[i])


def solve_beta0(gamma0, phi0, mass_param: float, grid: RadialGrid, *,
                gamma0_r=None, phi0_r=None) -> ScalarField:
    """beta on a time-symmetric slice from gamma_0, phi_0 (inputs even in r).

    Radial derivatives default to centered differences; pass exact ones when known.
    """
    gamma0 = np.asarray(getattr(gamma0, "values", gamma0), dtype=float)
    phi0 = np.asarray(getattr(phi0, "values", phi0), dtype=float)
    g_r = ddr(gamma0, grid.h, 1.0) if gamma0_r is None else np.asarray(gamma0_r, dtype=float)
    p_r = ddr(phi0, grid.h, 1.0) if phi0_r is None else np.asarray(phi0_r, dtype=float)
    kinetic = g_r**2 + 0.5 * p_r**2
    beta, d = integrate_beta(kinetic, potential_density(gamma0, phi0, mass_param), grid.r, grid.h)
    _raise_if_cd1(d, grid.r)
    return ScalarField(beta, EVEN)


def solve_alpha(beta, gamma, phi, mass_param: float, grid: RadialGrid) -> ScalarField:
    """alpha from alpha_r = beta_r - m^2 r exp(2 beta - 2 gamma) phi^2, alpha(0) = 0."""
    beta = np.asarray(getattr(beta, "values", beta), dtype=float)
    gamma = np.asarray(getattr(gamma, "values", gamma), dtype=float)
    phi = np.asarray(getattr(phi, "values", phi), dtype=float)
    return ScalarField(alpha_from_beta(beta, gamma, phi, mass_param, grid.r, grid.h), EVEN)


def alpha_from_beta(beta, gamma, phi, mass_param, r, h):
    if mass_param == 0.0:
        return beta.copy()
    lapse_drop = cumtrapz(mass_param**2 * r * np.exp(2.0 * beta - 2.0 * gamma) * phi**2, h)
    return beta - lapse_drop


@dataclass
class InitialDataSet:
    grid: RadialGrid
    params: DataFamilyParams
    gamma0: np.ndarray
    gamma1: np.ndarray
    phi0: np.ndarray
    phi1: np.ndarray
    beta0: np.ndarray
    alpha0: np.ndarray
    K_rr: np.ndarray
    cd1_margin: float
    Pi_gamma0: np.ndarray = field(repr=False, default=None)
    Pi_phi0: np.ndarray = field(repr=False, default=None)
    Phi_gamma0: np.ndarray = field(repr=False, default=None)
    Phi_phi0: np.ndarray = field(repr=False, default=None)

    @property
    def mass_param(self) -> float:
        return self.params.mass_param

    @property
    def time_symmetric(self) -> bool:
        return not (np.any(self.gamma1) or np.any(self.phi1))


def build_initial_data(params: DataFamilyParams, grid: RadialGrid, *,
                       max_iter: int = 100, tol: float = 1e-14) -> InitialDataSet:
    """Sample the family and solve the constraints for beta, alpha and K_rr.

    With gamma_1 = phi_1 = 0 this is a single closed-form solve.  Otherwise the
    momenta Pi = exp(beta - alpha) X_t depend on the gauge being solved for, so
    the closed form is iterated to a fixed point.
    """
    s = sample_family(params, grid)
    return initial_data_from_fields(s.gamma0, s.gamma1, s.phi0, s.phi1, params, grid,
                                    gamma0_r=s.gamma0_r, phi0_r=s.phi0_r,
                                    max_iter=max_iter, tol=tol)


def initial_data_from_fields(g0, g1, p0, p1, params, grid, *, gamma0_r=None, phi0_r=None,
                             max_iter=100, tol=1e-14):
    """Constraint solve for arbitrary even profiles; exact derivatives are optional."""
    r, h, m = grid.r, grid.h, params.mass_param
    g_r = ddr(g0, h, 1.0) if gamma0_r is None else np.asarray(gamma0_r, dtype=float)
    p_r = ddr(p0, h, 1.0) if phi0_r is None else np.asarray(phi0_r, dtype=float)
    potential = potential_density(g0, p0, m)
    beta = solve_beta0(g0, p0, m, grid, gamma0_r=g_r, phi0_r=p_r).values
    alpha = alpha_from_beta(beta, g0, p0, m, r, h)
    pi_g = np.zeros_like(r)
    pi_p = np.zeros_like(r)
    if np.any(g1) or np.any(p1):
        for it in range(max_iter):
            pi_g = np.exp(beta - alpha) * g1
            pi_p = np.exp(beta - alpha) * p1
            kinetic = pi_g**2 + g_r**2 + 0.5 * (pi_p**2 + p_r**2)
            beta_new, d = integrate_beta(kinetic, potential, r, h)
            _raise_if_cd1(d, r)
            alpha_new = alpha_from_beta(beta_new, g0, p0, m, r, h)
            change = max(np.abs(beta_new - beta).max(), np.abs(alpha_new - alpha).max())
            beta, alpha = beta_new, alpha_new
            if change <= tol:
                break
        else:
            log.warning("gauge fixed point stopped after %d iterations (change %.3e)", max_iter, change)
        pi_g = np.exp(beta - alpha) * g1
        pi_p = np.exp(beta - alpha) * p1
    kinetic = pi_g**2 + g_r**2 + 0.5 * (pi_p**2 + p_r**2)
    _, d = integrate_beta(kinetic, potential, r, h)
    _raise_if_cd1(d, r)
    beta_t = r * (2.0 * g1 * g_r + p1 * p_r)
    k_rr = np.exp(-alpha + 2.0 * beta) * beta_t
    return InitialDataSet(grid, params, g0, g1, p0, p1, beta, alpha, k_rr,
                          float(d.max()), pi_g, pi_p, g_r, p_r)


def hamiltonian_residual(beta, kinetic, potential, grid: RadialGrid) -> np.ndarray:
    """-(e^{-2b})' - 2 r e^{-2b} K - r P with a centered derivative; O(h^2)."""
    y = np.exp(-2.0 * beta)
    r = grid.r
    return -ddr(y, grid.h, 1.0) - 2.0 * r * y * kinetic - r * potential


def integrating_factor_residual(beta, kinetic, potential, grid: RadialGrid) -> np.ndarray:
    """Discrete identity y e^I = 1 - D that the closed form satisfies to rounding."""
    r, h = grid.r, grid.h
    big_i = cumtrapz(2.0 * r * kinetic, h)
    d = cumtrapz(r * potential * np.exp(big_i), h)
    return np.exp(-2.0 * beta + big_i) - (1.0 - d)


@dataclass(frozen=True)
class DecayReport:
    exponent: float
    identically_zero: bool
    too_slow: bool
    per_field: dict

    @property
    def ok(self) -> bool:
        return not self.too_slow


def _fit_exponent(values, r, lo):
    sel = (r >= lo) & (np.abs(values) > 0)
    if sel.sum() < 2:
        return None
    slope = np.polyfit(np.log(r[sel]), np.log(np.abs(values[sel])), 1)[0]
    return float(-slope)


def check_decay(gamma0, phi0, grid: RadialGrid, tol: float = 0.05) -> DecayReport:
    """Fit |field| ~ r^(-q) on the outer third and flag q < 11/8 - tol."""
    r = grid.r
    lo = r[-1] * 2.0 / 3.0
    per_field = {}
    for name, vals in (("gamma0", gamma0), ("phi0", phi0)):
        vals = np.asarray(getattr(vals, "values", vals), dtype=float)
        per_field[name] = None if not np.any(vals) else _fit_exponent(vals, r, lo)
    fitted = [q for q in per_field.values() if q is not None]
    if not fitted:
        return DecayReport(np.inf, True, False, per_field)
    q = min(fitted)
    return DecayReport(q, False, q < DECAY_EXPONENT - tol, per_field)


def with_mass(params: DataFamilyParams, mass_param: float) -> DataFamilyParams:
    return replace(params, mass_param=mass_param)


def write_initial_data_csv(data: InitialDataSet, path):
    return write_csv(path, {
        "r": data.grid.r, "gamma0": data.gamma0, "gamma1": data.gamma1, "phi0": data.phi0,
        "phi1": data.phi1, "beta0": data.beta0, "alpha0": data.alpha0,
    })
