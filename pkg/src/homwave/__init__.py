"""Numerical toolkit for periodic homogenization of second-order hyperbolic systems.

The operator is A_eps = b(D)^* g(x/eps) b(D) on R^d, possibly with a density
Q(x/eps).  The package computes the effective matrix g0 from the cell problem,
spectral germs and the threshold operators N(theta), Bloch fibers of the
oscillating and effective operators, and measures convergence rates of the
cosine and sine operator families and of the Cauchy problem.
"""

__version__ = "0.1.0"

from .lattice import Lattice, ModeSet, cubic_lattice, make_lattice  # noqa: E402
from .symbol import DiffSymbol, acoustics_symbol, elasticity_symbol, hill_symbol, make_symbol  # noqa: E402
from .coeff import PeriodicMatrixField  # noqa: E402
from .cell import EffectiveModel, build_model  # noqa: E402
from .germ import condition_scan, germ_at  # noqa: E402
from .presets import PRESET_NAMES, get_preset  # noqa: E402

__all__ = [
    "Lattice", "ModeSet", "cubic_lattice", "make_lattice",
    "DiffSymbol", "acoustics_symbol", "elasticity_symbol", "hill_symbol", "make_symbol",
    "PeriodicMatrixField", "EffectiveModel", "build_model",
    "condition_scan", "germ_at", "PRESET_NAMES", "get_preset",
]
