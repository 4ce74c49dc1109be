"""Run configuration: JSON or TOML files, environment overrides and model construction.

A config either names a preset or spells out the medium::

    {"lattice": {"basis": [[6.283, 0], [0, 6.283]]},
     "symbol": {"kind": "acoustics", "d": 2},
     "coefficients": {"g": {"kind": "fourier",
                            "terms": [{"n": [0, 0], "re": [[2, 0], [0, 1]]},
                                      {"n": [1, 0], "re": [[0.2, 0], [0, 0]]},
                                      {"n": [-1, 0], "re": [[0.2, 0], [0, 0]]}]}},
     "cutoff": 6}

Every field can be overridden by an environment variable ``HOMWAVE_<FIELD>``
holding a JSON literal (for example ``HOMWAVE_TAU=2.0``).
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cell import EffectiveModel, build_model
from .coeff import PeriodicMatrixField
from .lattice import GridSpec, cubic_lattice, make_lattice
from .presets import get_preset
from .symbol import make_symbol

ENV_PREFIX = "HOMWAVE_"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str | None = None
    lattice: dict | None = None
    symbol: dict | None = None
    coefficients: dict | None = None
    cutoff: int | None = None
    grid: dict = field(default_factory=dict)
    eps_list: list = field(default_factory=lambda: [2.0**-j for j in range(3, 8)])
    tau: float = 1.0
    s: float = 2.0
    r: float = 0.0
    functional: str = "J1"
    weighted: bool = False
    theta: list | None = None
    time_uniform: bool = True
    seed: int = 0
    out_dir: str = "out"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        if self.preset is None and (self.symbol is None or self.coefficients is None):
            raise ConfigError("config needs either 'preset' or both 'symbol' and 'coefficients'")
        if self.functional not in ("J1", "J2"):
            raise ConfigError("functional must be J1 or J2")
        try:
            self.eps_list = [float(e) for e in self.eps_list]
        except (TypeError, ValueError) as exc:
            raise ConfigError("eps_list must be a list of numbers") from exc
        if any(e <= 0 for e in self.eps_list):
            raise ConfigError("eps values must be positive")

    def grid_spec(self) -> GridSpec:
        return GridSpec(**self.grid) if self.grid else GridSpec()


def _read_file(path: Path) -> dict:
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib as toml
        except ImportError:  # Python < 3.11
            import tomli as toml
        try:
            return toml.loads(text)
        except toml.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML in {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def _env_overrides(environ) -> dict:
    out = {}
    for f in dataclasses.fields(RunConfig):
        key = ENV_PREFIX + f.name.upper()
        if key in environ:
            raw = environ[key]
            try:
                out[f.name] = json.loads(raw)
            except json.JSONDecodeError:
                out[f.name] = raw  # bare strings such as preset names
    return out


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None,
                environ=None) -> RunConfig:
    """File values, then environment overrides, then explicit ``overrides`` (CLI flags)."""
    data = _read_file(Path(path)) if path else {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    data.update(_env_overrides(os.environ if environ is None else environ))
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_dict(data)


def _complex_matrix(entry: dict, key_re="re", key_im="im") -> np.ndarray:
    re = np.asarray(entry.get(key_re, 0.0), dtype=float)
    im = np.asarray(entry.get(key_im, 0.0), dtype=float)
    return np.atleast_2d(re + 1j * im)


def field_from_spec(spec: dict, lattice) -> PeriodicMatrixField:
    kind = spec.get("kind")
    if kind == "fourier":
        terms = spec.get("terms")
        if not terms:
            raise ConfigError("fourier coefficient needs a non-empty 'terms' list")
        table = {}
        for t in terms:
            n = tuple(int(v) for v in t["n"])
            if len(n) != lattice.d:
                raise ConfigError(f"mode {n} has wrong dimension for d = {lattice.d}")
            table[n] = _complex_matrix(t)
        return PeriodicMatrixField.from_fourier(table, lattice)
    if kind == "preset":
        p = get_preset(spec["name"])
        which = spec.get("field", "g")
        return p.g if which == "g" else p.Q
    raise ConfigError(f"coefficient kind must be 'fourier' or 'preset', got {kind!r}")


def model_from_config(cfg: RunConfig) -> EffectiveModel:
    if cfg.preset is not None:
        p = get_preset(cfg.preset)
        if cfg.cutoff is None or cfg.cutoff == p.cutoff:
            return p.model()
        return build_model(p.sym, p.g, cfg.cutoff, Q=p.Q)
    sym_spec = cfg.symbol
    sym = make_symbol(sym_spec.get("kind", "acoustics"), int(sym_spec.get("d", 1)), sym_spec.get("mats"))
    if cfg.lattice and "basis" in cfg.lattice:
        lattice = make_lattice(cfg.lattice["basis"])
    else:
        lattice = cubic_lattice(sym.d)
    g = field_from_spec(cfg.coefficients["g"], lattice)
    Q = cfg.coefficients.get("Q")
    Q = field_from_spec(Q, lattice) if Q else None
    cutoff = cfg.cutoff if cfg.cutoff is not None else max(4, g.cutoff)
    return build_model(sym, g, cutoff, Q=Q)


def default_theta(cfg: RunConfig, d: int) -> np.ndarray:
    if cfg.theta is not None:
        th = np.asarray(cfg.theta, dtype=float)
    elif cfg.preset is not None:
        th = np.asarray(get_preset(cfg.preset).theta, dtype=float)
    else:
        th = np.ones(d)
    if th.shape != (d,):
        raise ConfigError(f"theta must have {d} components")
    return th / np.linalg.norm(th)
