import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ekg_axis.errors import ConfigurationError, ParityError
from ekg_axis.grid import (EVEN, ODD, ScalarField, axis_limit_ratio, d_r, d_rr, even_extend, fd4, ghost_extend,
                           join_mirror, make_grid, parity_residual, radial_integrate)

finite = st.floats(-1e3, 1e3, allow_nan=False)


@pytest.mark.parametrize("r_max, n, h", [(10.0, 1000, 0.01), (1.0, 16, 0.0625), (20.0, 512, 0.0390625)])
def test_make_grid_spacing(r_max, n, h):
    g = make_grid(r_max, n)
    assert g.h == pytest.approx(h, abs=1e-15)
    assert g.r[0] == 0.0 and g.r[-1] == pytest.approx(r_max)
    assert g.n_points == n + 1


@pytest.mark.parametrize("r_max, n", [(-1.0, 100), (0.0, 100), (float("nan"), 100), (1.0, 8), (1.0, 16.5)])
def test_make_grid_rejects_bad_input(r_max, n):
    with pytest.raises(ConfigurationError):
        make_grid(r_max, n)


def test_derivative_of_r_squared_is_exact():
    g = make_grid(5.0, 64)
    d = d_r(g.r**2, g, EVEN)
    assert d.parity == ODD
    np.testing.assert_allclose(d.values, 2 * g.r, atol=1e-12)


def test_derivative_of_constant_vanishes():
    g = make_grid(5.0, 64)
    assert np.max(np.abs(d_r(np.full(g.n_points, 3.0), g).values)) == 0.0


def test_derivative_of_sine_is_second_order():
    errs = []
    for n in (64, 128, 256):
        g = make_grid(3.0, n)
        errs.append(np.max(np.abs(d_r(np.sin(g.r), g, ODD).values - np.cos(g.r))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9)


def test_second_derivative_even_field():
    g = make_grid(2.0, 128)
    d = d_rr(np.cos(g.r), g, EVEN).values
    assert np.max(np.abs(d + np.cos(g.r))) < 1e-3


@pytest.mark.parametrize("f, expected", [(lambda r: r**2, 2.0), (lambda r: 0 * r + 4.0, 0.0),
                                         (np.cos, -1.0)])
def test_axis_limit_ratio(f, expected):
    g = make_grid(1.0, 1024)
    assert axis_limit_ratio(f(g.r), g, EVEN) == pytest.approx(expected, abs=1e-6)


def test_axis_limit_ratio_needs_even_field():
    g = make_grid(1.0, 16)
    with pytest.raises(ParityError):
        axis_limit_ratio(ScalarField(g.r, ODD), g)


def test_integral_of_one_is_r():
    g = make_grid(7.0, 112)
    np.testing.assert_allclose(radial_integrate(np.ones(g.n_points), g).values, g.r, atol=1e-13)


def test_integral_of_gaussian_moment():
    g = make_grid(4.0, 1024)
    out = radial_integrate(g.r * np.exp(-g.r**2), g, ODD)
    assert out.values[0] == 0.0
    np.testing.assert_allclose(out.values, 0.5 * (1 - np.exp(-g.r**2)), atol=5e-6)


def test_unknown_parity_rejected():
    with pytest.raises(ParityError):
        ScalarField(np.zeros(3), "sideways")


@pytest.mark.parametrize("n", [32, 64, 128])
def test_fd4_is_fourth_order(n):
    errs = []
    for m in (n, 2 * n):
        x = np.linspace(0.0, 2.0, m + 1)
        errs.append(np.max(np.abs(fd4(np.exp(x), x[1] - x[0]) - np.exp(x))))
    assert np.log2(errs[0] / errs[1]) >= 3.8


def test_fd4_needs_five_samples():
    with pytest.raises(ValueError):
        fd4(np.zeros(4), 1.0)


@given(arrays(float, st.integers(4, 40), elements=finite), st.sampled_from([EVEN, ODD]))
def test_ghost_extend_reflects(f, parity):
    ext = ghost_extend(f, parity)
    s = 1.0 if parity == EVEN else -1.0
    assert np.array_equal(ext[2:], f)
    assert ext[0] == s * f[2] and ext[1] == s * f[1]


@given(arrays(float, st.integers(2, 40), elements=finite))
def test_even_extend_is_symmetric(f):
    ext = even_extend(f)
    assert len(ext) == 2 * len(f) - 1
    assert np.array_equal(ext, ext[::-1])


@given(arrays(float, st.integers(2, 30), elements=finite), arrays(float, 30, elements=finite))
def test_join_mirror_layout(right, left_full):
    left = left_full[: len(right)]
    out = join_mirror(right, left)
    n = len(right)
    assert np.array_equal(out[n - 1:], right)
    assert np.array_equal(out[: n - 1], left[:0:-1])


@given(arrays(float, st.integers(5, 40), elements=finite))
def test_odd_parity_residual_reads_axis_value(f):
    assert parity_residual(f, ODD) == abs(f[0])


@settings(max_examples=30)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_derivative_is_linear(a, b):
    g = make_grid(3.0, 48)
    f1, f2 = np.cos(g.r), g.r**2
    lhs = d_r(a * f1 + b * f2, g).values
    rhs = a * d_r(f1, g).values + b * d_r(f2, g).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-7 * (1 + abs(a) + abs(b))
