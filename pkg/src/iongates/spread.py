"""Gauss-Hermite averaging over a Gaussian spread of Rabi frequency."""
from __future__ import annotations

import numpy as np


def spread_nodes(sigma_frac: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Relative scale factors ``1 + sigma_frac * x_i`` and normalized weights."""
    if nodes < 1:
        raise ValueError(f"nodes must be >= 1, got {nodes}")
    if sigma_frac < 0:
        raise ValueError(f"sigma_frac must be >= 0, got {sigma_frac}")
    if sigma_frac == 0:
        return np.ones(1), np.ones(1)
    x, w = np.polynomial.hermite_e.hermegauss(int(nodes))
    return 1.0 + sigma_frac * x, w / w.sum()


def rabi_spread_average(f, omega_f: float, sigma_frac: float = 0.04, nodes: int = 15):
    """Average ``f(omega)`` over omega ~ Normal(omega_f, (sigma_frac * omega_f)**2).

    ``f`` may return anything supporting scalar multiplication and addition
    (floats, numpy arrays).
    """
    scales, weights = spread_nodes(sigma_frac, nodes)
    total = None
    for s, w in zip(scales, weights):
        term = w * np.asarray(f(omega_f * s))
        total = term if total is None else total + term
    return float(total) if np.ndim(total) == 0 else total
