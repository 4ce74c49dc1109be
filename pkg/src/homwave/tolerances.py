"""Versioned pass/fail tolerances for ``reproduce`` and ``selftest``.

Changing any number here is a contract change: bump ``VERSION``.
"""

VERSION = "2026.10-1"

# (expected value, absolute tolerance) per reported quantity
REPRODUCE = {
    "ex-8.7": {
        "g0": ([[1.0, 0.0, 0.0], [0.0, 4.0, 0.0], [0.0, 0.0, 1.0]], 1e-8),
        "germ_max_dev": (0.0, 1e-8),  # |gamma - (1 +- theta1 theta2)| over the fan
        "N_theta3": (0.0, 1e-8),
        "N_theta4": (0.0, 1e-8),
        "mu_theta1": (0.125, 1e-6),
    },
    "ex-13.2": {
        "N_rel_dev": (0.0, 1e-6),  # relative, against -alpha theta2^3 / pi
    },
    "iso-15.3": {
        "a": (145.6581, 1e-3),
        "S_imag": (65.6650, 1e-3),
        "T_imag": (76.2833, 1e-3),
        "theta1_sq": (0.5394, 1e-3),
        "mu_hat": (0.09850, 1e-4),
    },
    "hill": {
        "g0_dev": (0.0, 1e-8),  # against diag(underline beta, mu0/2)
        "N_max": (0.0, 1e-8),
    },
}

SELFTEST = {
    "constant_g0": 1e-12,
    "constant_fiber_error": 1e-10,
    "harmonic_g0": 1e-10,
    "branch_mu_rel": 1e-4,
    "residual_ratio_min": 3.5,
}


def check(value, expected, tol) -> bool:
    import numpy as np

    return bool(np.max(np.abs(np.asarray(value, dtype=float) - np.asarray(expected, dtype=float))) <= tol)
