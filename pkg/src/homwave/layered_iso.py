"""Semi-analytic pipeline for a layered 2D isotropic elastic medium with a degenerate germ.

The medium has shear modulus mu(x1) = 1 + c cos^2 x1 and a piecewise constant
bulk modulus K(x1) = a - b on [0, pi/2), a + b on [pi/2, 2 pi).  The shift ``a``
is tuned so that the off-diagonal germ entry B + C/4 vanishes; then the two
germ eigenvalues cross on the directions with theta_1^2 = (E - C/4)/(A + E - C/2)
and the threshold matrix there has eigenvalues +-mu_hat.

Everything is one-dimensional, so cell means are computed by adaptive
quadrature on the smooth pieces instead of by Fourier truncation (a jump in K
makes truncation converge slowly).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

B_DEFAULT = 100.0
C_DEFAULT = 624.0
_BREAKS = (0.0, 0.5 * np.pi, 1.5 * np.pi, 2.0 * np.pi)


class BracketError(ValueError):
    pass


def _qr(a, b, c):
    q = np.sqrt((a - b + c + 1) * (a - b + 1))
    rho = np.sqrt((a + b + c + 1) * (a + b + 1))
    return q, rho


def coefficients(a: float, b: float = B_DEFAULT, c: float = C_DEFAULT) -> dict:
    """Closed forms of q, rho and the effective entries A, B, C, E."""
    q, rho = _qr(a, b, c)
    A = 1.0 / (1.0 / (4 * q) + 3.0 / (4 * rho))
    B = (6 * (a + b) * q + 2 * (a - b) * rho - 4 * q * rho) / (rho + 3 * q)
    C = 4.0 * np.sqrt(c + 1.0)
    E = (6 * b * rho - 6 * b * q - 12 * b**2 + 4 * q * rho) / (rho + 3 * q)
    return {"q": q, "rho": rho, "A": A, "B": B, "C": C, "E": E}


def solve_shift(b: float = B_DEFAULT, c: float = C_DEFAULT, lo: float = 130.0, hi: float = 150.0,
                xtol: float = 1e-12) -> float:
    """Root a of B(a) + C/4 = 0 by bisection on [lo, hi]."""
    quarter = np.sqrt(c + 1.0)

    def h(a):
        return coefficients(a, b, c)["B"] + quarter

    if h(lo) * h(hi) > 0:
        raise BracketError(f"B + C/4 does not change sign on [{lo}, {hi}]")
    return float(bisect(h, lo, hi, xtol=xtol, maxiter=200))


def _K(x, a, b):
    return np.where(x < 0.5 * np.pi, a - b, a + b)


def _mu(x, c):
    return 1.0 + c * np.cos(x) ** 2


def lambda22(x):
    """Imaginary-valued periodic corrector entry on [0, 2 pi], continuous across the branch cuts."""
    x = np.asarray(x, dtype=float)
    shift = np.where(x < 0.5 * np.pi, 0.0, np.where(x < 1.5 * np.pi, 2 * np.pi, 4 * np.pi))
    return 1j * (2 * np.arctan(np.tan(x) / 25.0) - 2 * x + shift)


def cell_mean(func) -> complex:
    """(1/2pi) int_0^{2pi} func, split at the jumps of K and the cuts of lambda22."""
    re = im = 0.0
    for lo, hi in zip(_BREAKS[:-1], _BREAKS[1:]):
        # evaluate strictly inside each piece so the branch choice is unambiguous
        re += quad(lambda x: float(np.real(func(x))), lo, hi, epsabs=1e-9, epsrel=1e-10, limit=200)[0]
        im += quad(lambda x: float(np.imag(func(x))), lo, hi, epsabs=1e-9, epsrel=1e-10, limit=200)[0]
    return complex(re, im) / (2 * np.pi)


def quadrature_coefficients(a: float, b: float = B_DEFAULT, c: float = C_DEFAULT) -> dict:
    """A, B, C, E from the defining cell means (independent of the closed forms)."""
    K = lambda x: _K(x, a, b)
    mu = lambda x: _mu(x, c)
    A = 1.0 / cell_mean(lambda x: 1.0 / (K(x) + mu(x))).real
    ratio = cell_mean(lambda x: (K(x) - mu(x)) / (K(x) + mu(x))).real
    C = 4.0 / cell_mean(lambda x: 1.0 / mu(x)).real
    E = 4 * cell_mean(lambda x: K(x) * mu(x) / (K(x) + mu(x))).real + ratio**2 * A
    return {"A": A, "B": A * ratio, "C": C, "E": E}


def threshold_constants(a: float, b: float = B_DEFAULT, c: float = C_DEFAULT) -> tuple[complex, complex]:
    """(S, T): cell means of the weighted lambda22 products entering L(theta)."""
    K = lambda x: _K(x, a, b)
    mu = lambda x: _mu(x, c)
    coef = coefficients(a, b, c)
    A = coef["A"]
    ratio = coef["B"] / A
    S = A * cell_mean(lambda x: (K(x) - mu(x)) / (K(x) + mu(x)) * lambda22(x))
    T = cell_mean(lambda x: (4 * K(x) * mu(x) / (K(x) + mu(x))
                             + (K(x) - mu(x)) / (K(x) + mu(x)) * ratio * A) * lambda22(x))
    return S, T


def germ(theta, coef: dict) -> np.ndarray:
    t1, t2 = theta
    A, B, C, E = coef["A"], coef["B"], coef["C"], coef["E"]
    off = (B + 0.25 * C) * t1 * t2
    return np.array([[A * t1**2 + 0.25 * C * t2**2, off], [off, E * t2**2 + 0.25 * C * t1**2]])


def threshold(theta, S: complex, T: complex) -> np.ndarray:
    t1, t2 = theta
    z = S * t1**2 * t2 + np.conj(T) * t2**3
    return 0.5 * np.array([[0.0, z], [np.conj(z), 0.0]])


@dataclass
class IsoReport:
    a: float
    q: float
    rho: float
    A: float
    B: float
    C: float
    E: float
    theta1_sq: float
    S_imag: float
    T_imag: float
    mu_hat: float
    germ_gap: float
    bracket: tuple

    def to_dict(self) -> dict:
        out = asdict(self)
        out["bracket"] = list(self.bracket)
        return out


def pipeline(b: float = B_DEFAULT, c: float = C_DEFAULT, lo: float = 130.0, hi: float = 150.0) -> IsoReport:
    a = solve_shift(b, c, lo, hi)
    coef = coefficients(a, b, c)
    A, C, E = coef["A"], coef["C"], coef["E"]
    th1_sq = (E - 0.25 * C) / (A + E - 0.5 * C)
    theta = np.array([np.sqrt(th1_sq), np.sqrt(1.0 - th1_sq)])
    S, T = threshold_constants(a, b, c)
    gam = np.linalg.eigvalsh(germ(theta, coef))
    mu_hat = float(np.abs(np.linalg.eigvalsh(threshold(theta, S, T))).max())
    bracket = (coefficients(lo, b, c)["B"], coefficients(hi, b, c)["B"])
    return IsoReport(a=a, q=float(coef["q"]), rho=float(coef["rho"]), A=float(A), B=float(coef["B"]),
                     C=float(C), E=float(E), theta1_sq=float(th1_sq), S_imag=float(S.imag),
                     T_imag=float(T.imag), mu_hat=mu_hat, germ_gap=float(gam[1] - gam[0]),
                     bracket=tuple(float(v) for v in bracket))
