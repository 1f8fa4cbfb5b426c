"""Uniform radial mesh with the axis as a node, plus parity-aware radial calculus.

Every field lives on the nodes ``r_i = i*h``, ``i = 0..n``.  Smooth axisymmetric
fields are either even or odd in ``r``; two ghost nodes behind the axis are filled
by reflection so that centered stencils can be used right up to ``r = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ParityError

EVEN = "even"
ODD = "odd"
MIN_CELLS = 16


@dataclass(frozen=True)
class RadialGrid:
    n_cells: int
    r_max: float

    @property
    def h(self) -> float:
        return self.r_max / self.n_cells

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.h

    @property
    def n_points(self) -> int:
        return self.n_cells + 1

    def index_at_or_below(self, radius: float) -> int:
        return int(np.floor(radius / self.h + 1e-9))


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    parity: str = EVEN

    def __post_init__(self):
        if self.parity not in (EVEN, ODD):
            raise ParityError(f"unknown parity {self.parity!r}")


def make_grid(r_max: float, n_cells: int) -> RadialGrid:
    if not np.isfinite(r_max) or r_max <= 0:
        raise ConfigurationError(f"r_max must be positive, got {r_max}")
    if int(n_cells) != n_cells or n_cells < MIN_CELLS:
        raise ConfigurationError(f"n_cells must be an integer >= {MIN_CELLS}, got {n_cells}")
    return RadialGrid(int(n_cells), float(r_max))


def _sign(parity: str) -> float:
    return 1.0 if parity == EVEN else -1.0


def _unwrap(field, parity):
    if isinstance(field, ScalarField):
        return np.asarray(field.values, dtype=float), field.parity
    return np.asarray(field, dtype=float), parity


def flip(parity: str) -> str:
    return ODD if parity == EVEN else EVEN


def ddr(f: np.ndarray, h: float, sign: float) -> np.ndarray:
    """Centered first derivative along the last axis; ``sign`` is the axis parity.

    Works on 1D slices or stacks of slices (time x radius).
    """
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * h)
    out[..., 0] = (1.0 - sign) * f[..., 1] / (2.0 * h)
    out[..., -1] = (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) / (2.0 * h)
    return out


def d2dr2(f: np.ndarray, h: float, sign: float) -> np.ndarray:
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - 2.0 * f[..., 1:-1] + f[..., :-2]) / (h * h)
    out[..., 0] = ((1.0 + sign) * f[..., 1] - 2.0 * f[..., 0]) / (h * h)
    out[..., -1] = (2.0 * f[..., -1] - 5.0 * f[..., -2] + 4.0 * f[..., -3] - f[..., -4]) / (h * h)
    return out


def cumtrapz(f: np.ndarray, h: float) -> np.ndarray:
    """Cumulative trapezoid integral from the axis along the last axis."""
    out = np.zeros_like(f)
    np.cumsum(0.5 * h * (f[..., 1:] + f[..., :-1]), axis=-1, out=out[..., 1:])
    return out


def d_r(field, grid: RadialGrid, parity: str = EVEN) -> ScalarField:
    """Second-order radial derivative; the output has the opposite parity."""
    values, parity = _unwrap(field, parity)
    return ScalarField(ddr(values, grid.h, _sign(parity)), flip(parity))


def d_rr(field, grid: RadialGrid, parity: str = EVEN) -> ScalarField:
    values, parity = _unwrap(field, parity)
    return ScalarField(d2dr2(values, grid.h, _sign(parity)), parity)


def axis_limit_ratio(field, grid: RadialGrid, parity: str = EVEN) -> float:
    """Limit of (d_r f)/r at the axis, i.e. f''(0), for an even field."""
    values, parity = _unwrap(field, parity)
    if parity != EVEN:
        raise ParityError("axis_limit_ratio needs an even field")
    return float(2.0 * (values[1] - values[0]) / grid.h**2)


def radial_integrate(density, grid: RadialGrid, parity: str = EVEN) -> ScalarField:
    """Cumulative trapezoid integral int_0^r density dr'; the value at the axis is 0."""
    values, parity = _unwrap(density, parity)
    return ScalarField(cumtrapz(values, grid.h), flip(parity))


def ghost_extend(f: np.ndarray, parity: str, n_ghost: int = 2) -> np.ndarray:
    """Prepend reflected ghost nodes (f[-k] = +/- f[k])."""
    s = _sign(parity)
    ghosts = s * f[..., n_ghost:0:-1]
    return np.concatenate([ghosts, f], axis=-1)


def parity_residual(f: np.ndarray, parity: str) -> float:
    """Axis parity defect: |f(0)| for odd fields, |f(h) - f(-h)| after reflection for even ones.

    For even fields the reflected ghost is exact by construction, so the check
    is only informative for odd fields (which must vanish on the axis).
    """
    if parity == ODD:
        return float(np.max(np.abs(f[..., 0])))
    ext = ghost_extend(f, parity)
    return float(np.max(np.abs(ext[..., 3] - ext[..., 1])))


def fd4(f: np.ndarray, d: float, axis: int = -1) -> np.ndarray:
    """Fourth-order first derivative along ``axis`` (centered inside, one-sided at the ends).

    Used for post-processing derivatives (charts, Jacobians) where the
    second-order evolution stencils would dominate the error budget.
    """
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    if f.shape[0] < 5:
        raise ValueError("fd4 needs at least 5 samples along the axis")
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * d)
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * d)
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * d)
    out[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * d)
    out[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * d)
    return np.moveaxis(out, 0, axis)


def even_extend(f: np.ndarray) -> np.ndarray:
    """Values on [-r_max, r_max] from values on [0, r_max] of an even field (last axis)."""
    return np.concatenate([f[..., :0:-1], f], axis=-1)


def join_mirror(right: np.ndarray, left: np.ndarray) -> np.ndarray:
    """x >= 0 from ``right``, x < 0 from ``left`` reflected: g(x) = left(-x)."""
    return np.concatenate([left[..., :0:-1], right], axis=-1)
