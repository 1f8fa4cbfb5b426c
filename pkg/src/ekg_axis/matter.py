"""Pointwise matter densities shared by the chart and the diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MatterDensities:
    e: np.ndarray
    m_hat: np.ndarray
    f: np.ndarray


def densities_from_fields(gamma, phi, pi_g, pi_p, phi_g, phi_p, alpha, beta, mass_param) -> MatterDensities:
    """Energy, momentum and potential densities from first-order variables.

    Works elementwise, so any stack of slices (e.g. a whole trajectory) is accepted.
    With Pi = e^{beta-alpha} X_t the time-derivative parts simplify to e^{-2 beta} Pi^2.
    """
    ib2 = np.exp(-2.0 * beta)
    f = mass_param**2 * np.exp(-2.0 * gamma) * phi * phi
    e = ib2 * (pi_g**2 + phi_g**2 + 0.5 * (pi_p**2 + phi_p**2)) + 0.5 * f
    m_hat = ib2 * (2.0 * pi_g * phi_g + pi_p * phi_p)
    return MatterDensities(e, m_hat, f)


def densities_of(obj) -> MatterDensities:
    """Densities of a CauchyState or of every snapshot of a Trajectory."""
    get = (lambda k: obj.fields[k]) if hasattr(obj, "fields") else (lambda k: getattr(obj, k))
    return densities_from_fields(get("gamma"), get("phi"), get("Pi_gamma"), get("Pi_phi"),
                                 get("Phi_gamma"), get("Phi_phi"), get("alpha"), get("beta"),
                                 obj.mass_param)
