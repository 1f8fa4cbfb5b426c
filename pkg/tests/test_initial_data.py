import numpy as np
import pytest

import oracles
from conftest import STANDARD
from ekg_axis.errors import CD1ViolationError, FamilyViolationError
from ekg_axis.grid import make_grid
from ekg_axis.initial_data import (DataFamilyParams, build_initial_data, check_decay, hamiltonian_residual,
                                   initial_data_from_fields, integrating_factor_residual, potential_density,
                                   sample_family, solve_alpha, solve_beta0, write_initial_data_csv)
from ekg_axis.io import read_csv
from ekg_axis.diagnostics import total_energy
from ekg_axis.evolution import CauchyState


def test_zero_amplitudes_give_zero_data():
    s = sample_family(DataFamilyParams(0.0, 0.0), make_grid(20.0, 64))
    for f in s:
        assert not np.any(f)


def test_standard_profile_value_and_derivative_floor():
    g = make_grid(20.0, 20000)
    s = sample_family(STANDARD, g)
    assert s.gamma0[g.index_at_or_below(1.0)] == pytest.approx(0.05, abs=1e-15)
    r = g.r[1:]
    assert np.all(s.gamma0_r[1:] > -0.5 / r)


@pytest.mark.parametrize("kwargs", [dict(gamma1_amp=-0.1), dict(a_gamma=-0.1), dict(p=0.5), dict(w=0.0),
                                    dict(mass_param=-1.0), dict(a_phi=float("inf"))])
def test_family_violations(kwargs):
    with pytest.raises(FamilyViolationError):
        sample_family(DataFamilyParams(**kwargs), make_grid(20.0, 64))


def test_steep_negative_slope_is_a_family_violation():
    # gamma_0 = 3 (1 + r^2)^-1 has r gamma_0' = -6 r^2 / (1 + r^2)^2 reaching -1.5 at r = 1
    with pytest.raises(FamilyViolationError, match="-1/\\(2r\\)"):
        sample_family(DataFamilyParams(a_gamma=3.0), make_grid(20.0, 64))


def test_vacuum_gauge_is_zero():
    d = build_initial_data(DataFamilyParams(0.0, 0.0), make_grid(20.0, 64))
    assert not np.any(d.beta0) and not np.any(d.alpha0)
    assert d.cd1_margin == 0.0


def test_closed_form_matches_massless_gaussian_oracle():
    # m = 0, phi = 0: beta = int_0^r s gamma_r^2 ds
    g = make_grid(6.0, 6000)
    gam = 0.3 * np.exp(-g.r**2)
    gam_r = -2 * g.r * gam
    beta = solve_beta0(gam, np.zeros_like(gam), 0.0, g, gamma0_r=gam_r).values
    coarse = g.r[::10]
    kin = lambda r: (0.6 * r * np.exp(-r * r)) ** 2
    ref = oracles.rk4_beta(kin, lambda r: 0.0 * r, coarse)
    assert np.max(np.abs(beta[::10] - ref)) <= 1e-8
    exact = 0.09 * (1 - (1 + 2 * g.r**2) * np.exp(-2 * g.r**2)) / 2  # int 4 s^3 e^{-2 s^2} (0.09) ds
    assert np.max(np.abs(beta - exact)) <= 1e-8


def test_closed_form_matches_oracle_at_tenfold_resolution():
    base = make_grid(20.0, 1024)
    fine = make_grid(20.0, 10240)
    s = sample_family(STANDARD, fine)
    beta = solve_beta0(s.gamma0, s.phi0, 1.0, fine, gamma0_r=s.gamma0_r, phi0_r=s.phi0_r).values
    ref = oracles.family_beta_oracle(base.r, substeps=10)
    assert np.max(np.abs(beta[::10] - ref)) <= 1e-8


def test_gauge_normalisation_and_positivity():
    d = build_initial_data(STANDARD, make_grid(20.0, 512))
    assert d.beta0[0] == 0.0 and d.alpha0[0] == 0.0
    y = np.exp(-2 * d.beta0)
    assert np.all((y > 0) & (y <= 1))
    assert np.all(np.diff(np.exp(-d.beta0)) <= 0)
    assert d.time_symmetric and not np.any(d.K_rr)


def test_massless_lapse_equals_beta():
    d = build_initial_data(DataFamilyParams(mass_param=0.0), make_grid(20.0, 256))
    assert np.array_equal(d.alpha0, d.beta0)


def test_massive_lapse_below_beta():
    g = make_grid(20.0, 256)
    gam = 0.1 * np.exp(-g.r**2)
    phi = 0.2 * np.exp(-g.r**2 / 4)
    beta = solve_beta0(gam, phi, 1.0, g)
    alpha = solve_alpha(beta, gam, phi, 1.0, g).values
    assert np.all(alpha <= beta.values)
    assert alpha[0] == 0.0


def test_constraint_residuals():
    errs = []
    for n in (256, 512, 1024):
        g = make_grid(20.0, n)
        d = build_initial_data(STANDARD, g)
        kin = d.Phi_gamma0**2 + 0.5 * d.Phi_phi0**2
        pot = potential_density(d.gamma0, d.phi0, 1.0)
        errs.append(np.max(np.abs(hamiltonian_residual(d.beta0, kin, pot, g))))
        assert np.max(np.abs(integrating_factor_residual(d.beta0, kin, pot, g))) <= 1e-12
    assert np.all(np.log2(np.array(errs[:-1]) / np.array(errs[1:])) >= 1.9)


def test_cd1_violation_names_radius():
    g = make_grid(20.0, 64)
    phi = np.full(g.n_points, 2.0)
    with pytest.raises(CD1ViolationError, match=r"\(cd1\) violated at r = "):
        solve_beta0(np.zeros_like(phi), phi, 1.0, g)


def test_nonzero_gamma1_fixed_point():
    g = make_grid(20.0, 256)
    d = build_initial_data(DataFamilyParams(gamma1_amp=0.05), g)
    assert not d.time_symmetric
    np.testing.assert_allclose(d.Pi_gamma0, np.exp(d.beta0 - d.alpha0) * d.gamma1, rtol=1e-13)
    assert np.any(d.K_rr != 0)


def test_fields_entry_point_matches_family():
    g = make_grid(20.0, 128)
    s = sample_family(STANDARD, g)
    a = build_initial_data(STANDARD, g)
    b = initial_data_from_fields(s.gamma0, s.gamma1, s.phi0, s.phi1, STANDARD, g,
                                 gamma0_r=s.gamma0_r, phi0_r=s.phi0_r)
    assert np.array_equal(a.beta0, b.beta0) and np.array_equal(a.alpha0, b.alpha0)


@pytest.mark.parametrize("n", [1024, 2048])
def test_golden_initial_energy(n):
    d = build_initial_data(STANDARD, make_grid(20.0, n))
    e0 = total_energy(CauchyState.from_initial_data(d))
    assert abs(e0 - oracles.GOLDEN_E0) <= 1e-6 * oracles.GOLDEN_E0


def test_golden_asymptotic_beta():
    d = build_initial_data(STANDARD, make_grid(20.0, 2048))
    assert d.beta0[-1] == pytest.approx(oracles.GOLDEN_BETA_INF, rel=1e-5)
    assert oracles.GOLDEN_BETA_INF == pytest.approx(-np.log(1 - oracles.GOLDEN_E0 / (2 * np.pi)), rel=1e-10)


def test_decay_fit():
    g = make_grid(100.0, 4096)
    ok = check_decay((1 + g.r**2) ** (-11 / 16), np.zeros(g.n_points), g)
    assert ok.exponent == pytest.approx(11 / 8, abs=0.05) and ok.ok
    slow = check_decay((1 + g.r**2) ** (-0.25), np.zeros(g.n_points), g)
    assert slow.too_slow and not slow.ok
    zero = check_decay(np.zeros(g.n_points), np.zeros(g.n_points), g)
    assert zero.identically_zero and zero.ok


def test_csv_round_trip(tmp_path):
    d = build_initial_data(STANDARD, make_grid(20.0, 64))
    path = write_initial_data_csv(d, tmp_path / "init.csv")
    cols = read_csv(path)
    assert list(cols) == ["r", "gamma0", "gamma1", "phi0", "phi1", "beta0", "alpha0"]
    assert np.array_equal(cols["beta0"], d.beta0) and np.array_equal(cols["phi0"], d.phi0)
