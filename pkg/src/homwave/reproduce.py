"""Reference reproductions: computed values, expected values and pass/fail per quantity."""

from __future__ import annotations

import numpy as np

from . import layered_iso
from .germ import N_matrix, germ_at
from .lattice import direction_fan
from .presets import get_preset
from .tolerances import REPRODUCE, VERSION, check


def _finish(rid: str, values: dict, extra: dict | None = None) -> dict:
    checks = {}
    for key, (expected, tol) in REPRODUCE[rid].items():
        checks[key] = {"value": values[key], "expected": expected, "tol": tol,
                       "pass": check(values[key], expected, tol)}
    return {"id": rid, "tolerance_version": VERSION, "checks": checks,
            "pass": all(c["pass"] for c in checks.values()), "details": extra or {}}


def crossing_elasticity(fan_size: int = 64) -> dict:
    model = get_preset("example-8.7").model()
    fan = direction_fan(2, fan_size)
    dev = 0.0
    for th in fan:
        gam = germ_at(model, th).gammas
        ref = np.sort([1 - th[0] * th[1], 1 + th[0] * th[1]])
        dev = max(dev, float(np.abs(gam - ref).max()))
    n3 = float(np.abs(N_matrix(model, [1.0, 0.0])).max())
    n4 = float(np.abs(N_matrix(model, [-1.0, 0.0])).max())
    mus = germ_at(model, np.array([0.0, 1.0])).mus
    values = {"g0": np.real(model.g0).tolist(), "germ_max_dev": dev, "N_theta3": n3, "N_theta4": n4,
              "mu_theta1": float(np.abs(mus).max())}
    return _finish("ex-8.7", values, {"mus_theta1": mus.tolist(), "cell_residual": model.residual})


def complex_scalar(fan_size: int = 32) -> dict:
    p = get_preset("example-13.2")
    c = p.extra["c"]
    model = p.model()
    alpha = -1.5 * np.pi * c**3
    fan = direction_fan(2, fan_size)
    got = np.array([np.real(N_matrix(model, th)[0, 0]) for th in fan])
    ref = -alpha / np.pi * fan[:, 1] ** 3
    rel = float(np.abs(got - ref).max() / np.abs(ref).max())
    return _finish("ex-13.2", {"N_rel_dev": rel},
                   {"c": c, "alpha": alpha, "theta": fan.tolist(), "N": got.tolist(), "N_ref": ref.tolist()})


def layered_isotropic() -> dict:
    rep = layered_iso.pipeline()
    values = rep.to_dict()
    return _finish("iso-15.3", values, values)


def hill(fan_size: int = 32) -> dict:
    p = get_preset("hill")
    model = p.model()
    target = np.diag([p.extra["underline_beta"], 0.5 * p.extra["mu0"]])
    dev = float(np.abs(model.g0 - target).max())
    nmax = max(float(np.abs(N_matrix(model, th)).max()) for th in direction_fan(2, fan_size))
    return _finish("hill", {"g0_dev": dev, "N_max": nmax},
                   {"g0": np.real(model.g0).tolist(), "underline_beta": p.extra["underline_beta"]})


REPRODUCTIONS = {"ex-8.7": crossing_elasticity, "ex-13.2": complex_scalar, "iso-15.3": layered_isotropic, "hill": hill}
