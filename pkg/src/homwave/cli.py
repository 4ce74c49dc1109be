"""Command-line front end.

Every command reads a RunConfig (``--config`` file, ``HOMWAVE_*`` environment
variables, then flags), writes ``<out-dir>/<command>.json`` and, where there is
tabular data, ``<out-dir>/<command>.csv``.  Exit codes: 0 success, 1 usage or
configuration error, 2 tolerance failure in ``reproduce`` / ``selftest``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cell import voigt_reuss_check
from .config import RunConfig, default_theta, load_config, model_from_config
from .evolve import cauchy_rate, gaussian_packet, solve_cauchy
from .fiber import default_grid, residual_scaling, sharpness_probe, sweep
from .germ import ProbeInapplicableError, condition_scan, germ_at
from .presets import PRESET_NAMES, get_preset
from .reproduce import REPRODUCTIONS
from .tolerances import SELFTEST, VERSION

CSV_COLUMNS = {
    "effective": "row,col,re,im  (entries of g0)",
    "germ": "index,gamma,mu  (germ eigenvalues and cubic coefficients at theta)",
    "threshold": "theta_1..theta_d,max_abs_N,max_abs_N0  (per fan direction)",
    "fiber-sweep": "eps,E,k_1..k_d  (sup over the k grid and its maximizer)",
    "rate": "eps,E  (same data as fiber-sweep; JSON adds slope and expected exponent)",
    "sharpness": "k,eps,t,E,ratio",
    "simulate": "xi_1..xi_d,component,re,im  (spectrum of v at tau)",
    "cauchy-rate": "eps,error",
    "reproduce": "quantity,value,expected,tol,pass",
    "selftest": "check,value,threshold,pass",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _write(out_dir: Path, name: str, summary: dict, header=None, rows=None):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / f"{name}.json", "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if header is not None:
        with open(out_dir / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])


# -- commands ----------------------------------------------------------------

def cmd_effective(cfg: RunConfig, args):
    model = model_from_config(cfg)
    vr = voigt_reuss_check(model.g, model.g0)
    g0 = model.g0
    rows = [(i, j, g0[i, j].real, g0[i, j].imag) for i in range(g0.shape[0]) for j in range(g0.shape[1])]
    summary = {"g0": g0, "cell_residual": model.residual, "voigt_reuss": vr,
               "window": vars(model.window), "weighted": model.weighted}
    if model.weighted:
        summary["Q_bar"] = model.Q_bar
    return 0, summary, ["row", "col", "re", "im"], rows


def cmd_germ(cfg, args):
    model = model_from_config(cfg)
    th = default_theta(cfg, model.sym.d)
    gm = germ_at(model, th, weighted=cfg.weighted and model.weighted)
    rows = [(l, gm.gammas[l], gm.mus[l]) for l in range(len(gm.gammas))]
    summary = {"theta": th, "gammas": gm.gammas, "mus": gm.mus, "clusters": gm.clusters,
               "N_full": gm.N_full, "S_hat": gm.S_hat}
    return 0, summary, ["index", "gamma", "mu"], rows


def cmd_threshold(cfg, args):
    model = model_from_config(cfg)
    rep = condition_scan(model, weighted=cfg.weighted and model.weighted, fan_size=args.fan)
    from .lattice import direction_fan

    fan = direction_fan(model.sym.d, args.fan)
    rows = []
    for th in fan:
        gm = germ_at(model, th, weighted=cfg.weighted and model.weighted)
        rows.append((*th, np.abs(gm.N_full).max(), np.abs(gm.N0).max()))
    header = [f"theta_{j + 1}" for j in range(model.sym.d)] + ["max_abs_N", "max_abs_N0"]
    return 0, rep.to_dict(), header, rows


def _curve(cfg, model):
    grid = default_grid(model, min(cfg.eps_list), **cfg.grid)
    return sweep(model, grid, cfg.eps_list, cfg.tau, cfg.s, functional=cfg.functional,
                 weighted=cfg.weighted and model.weighted, time_uniform=cfg.time_uniform)


def cmd_fiber_sweep(cfg, args):
    model = model_from_config(cfg)
    cur = _curve(cfg, model)
    d = model.sym.d
    rows = [(e, E, *k) for e, E, k in zip(cur.eps, cur.E, cur.argmax_k)]
    return 0, cur.to_dict(), ["eps", "E"] + [f"k_{j + 1}" for j in range(d)], rows


def cmd_rate(cfg, args):
    model = model_from_config(cfg)
    cur = _curve(cfg, model)
    rep = condition_scan(model, weighted=cfg.weighted and model.weighted, fan_size=32)
    improved = rep.N_zero or rep.condition_A
    expected = min(2.0 * cfg.s / 3.0, 1.0) if improved else min(cfg.s / 2.0, 1.0)
    if cfg.functional == "J2":
        expected = None
    summary = {**cur.to_dict(), "improved_regime": improved, "expected_exponent": expected}
    return 0, summary, ["eps", "E"], list(zip(cur.eps, cur.E))


def cmd_sharpness(cfg, args):
    model = model_from_config(cfg)
    th = default_theta(cfg, model.sym.d)
    try:
        rep = sharpness_probe(model, th, cfg.s, tau=cfg.tau, functional=cfg.functional)
    except ProbeInapplicableError as exc:
        raise UsageError(str(exc)) from exc
    rows = list(zip(rep.ks, rep.eps, rep.t, rep.E, rep.ratio))
    return 0, rep.to_dict(), ["k", "eps", "t", "E", "ratio"], rows


def _data(cfg, model):
    d, n = model.sym.d, model.sym.n
    return gaussian_packet(d, n, width=1.0, spacing=0.125 if d == 1 else 0.25, radius=4.0 if d == 1 else 2.0)


def cmd_simulate(cfg, args):
    model = model_from_config(cfg)
    phi = _data(cfg, model)
    eps = args.eps if args.eps is not None else cfg.eps_list[0]
    st = solve_cauchy(model, phi, None, cfg.tau, eps, weighted=cfg.weighted and model.weighted)
    d, n = model.sym.d, model.sym.n
    rows = [(*xi, c, a[c].real, a[c].imag) for xi, a in zip(st.freqs, st.amps) for c in range(n)]
    summary = {"eps": eps, "tau": cfg.tau, "norm": st.norm(), "energy": st.energy, "modes": len(st.freqs)}
    if args.samples and d == 1:
        x = np.linspace(-args.extent, args.extent, args.samples)
        vals = st.sample(x[:, None])
        _write(Path(cfg.out_dir), "simulate_samples", {"points": args.samples},
               ["x", "re", "im"], [(xi, v[0].real, v[0].imag) for xi, v in zip(x, vals)])
    header = [f"xi_{j + 1}" for j in range(d)] + ["component", "re", "im"]
    return 0, summary, header, rows


def cmd_cauchy_rate(cfg, args):
    model = model_from_config(cfg)
    phi = _data(cfg, model)
    rep = cauchy_rate(model, phi, None, cfg.eps_list, cfg.tau, weighted=cfg.weighted and model.weighted,
                      s=cfg.s, time_uniform=cfg.time_uniform)
    return 0, rep.to_dict(), ["eps", "error"], list(zip(rep.eps, rep.errors))


def cmd_reproduce(cfg, args):
    if args.id not in REPRODUCTIONS:
        raise UsageError(f"unknown reproduction {args.id!r}; choose from {', '.join(REPRODUCTIONS)}")
    res = REPRODUCTIONS[args.id]()
    rows = [(k, json.dumps(_jsonable(c["value"])), json.dumps(_jsonable(c["expected"])), c["tol"], c["pass"])
            for k, c in res["checks"].items()]
    return (0 if res["pass"] else 2), res, ["quantity", "value", "expected", "tol", "pass"], rows


def _selftest_checks(quick: bool, seed: int = 0):
    from .fiber import fiber_error

    rng = np.random.default_rng(seed)
    const = get_preset("const").model()
    yield "constant_g0", float(np.abs(const.g0 - const.g.mean()).max()), SELFTEST["constant_g0"], "<="
    errs = [fiber_error(const, rng.uniform(-0.5, 0.5, 2), 2.0 ** -rng.integers(2, 7), rng.uniform(0, 3),
                        rng.uniform(0, 2), "J1") for _ in range(5)]
    yield "constant_fiber_error", float(max(errs)), SELFTEST["constant_fiber_error"], "<="
    harm = get_preset("acoustics-1d-harmonic").model()
    yield "harmonic_g0", float(abs(harm.g0[0, 0] - 0.5)), SELFTEST["harmonic_g0"], "<="
    names = ["acoustics-1d", "example-13.2", "hill"] if quick else \
        [n for n in PRESET_NAMES if n != "isotropic-elasticity-15.3"]
    for name in names:
        p = get_preset(name)
        model = p.model()
        th = np.asarray(p.theta, dtype=float)
        th /= np.linalg.norm(th)
        ratios, fit, _ = residual_scaling(model, th)
        mus = germ_at(model, th).mus
        scale = max(float(np.abs(mus).max()), 1e-3 * float(np.abs(fit.gammas).max()))
        yield f"branch_mu:{name}", float(np.abs(fit.mus - mus).max() / scale), SELFTEST["branch_mu_rel"], "<="
        finite = ratios[np.isfinite(ratios)]
        if finite.size:
            yield f"residual_ratio:{name}", float(finite.min()), SELFTEST["residual_ratio_min"], ">="


def cmd_selftest(cfg, args):
    rows, ok = [], True
    for name, value, thr, op in _selftest_checks(args.quick, cfg.seed):
        passed = value <= thr if op == "<=" else value >= thr
        ok &= passed
        rows.append((name, value, thr, passed))
    for rid, fn in REPRODUCTIONS.items():
        res = fn()
        ok &= res["pass"]
        rows.append((f"reproduce:{rid}", float(res["pass"]), 1.0, res["pass"]))
    summary = {"pass": ok, "tolerance_version": VERSION,
               "checks": [{"name": r[0], "value": r[1], "threshold": r[2], "pass": r[3]} for r in rows]}
    return (0 if ok else 2), summary, ["check", "value", "threshold", "pass"], rows


COMMANDS = {
    "effective": cmd_effective, "germ": cmd_germ, "threshold": cmd_threshold,
    "fiber-sweep": cmd_fiber_sweep, "rate": cmd_rate, "sharpness": cmd_sharpness,
    "simulate": cmd_simulate, "cauchy-rate": cmd_cauchy_rate, "reproduce": cmd_reproduce,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="homwave", description="Periodic homogenization of hyperbolic systems: "
                "effective coefficients, threshold operators and convergence-rate experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON or TOML run configuration")
    common.add_argument("--preset", help=f"named medium: {', '.join(PRESET_NAMES)}")
    common.add_argument("--out-dir", dest="out_dir", help="output directory (default: out)")
    common.add_argument("--cutoff", type=int, help="Galerkin mode cutoff N")
    common.add_argument("--tau", type=float)
    common.add_argument("--s", type=float, help="smoothing exponent")
    common.add_argument("--functional", choices=["J1", "J2"])
    common.add_argument("--eps", dest="eps_list", type=float, nargs="+", help="list of eps values")
    common.add_argument("--theta", type=float, nargs="+", help="direction for germ / sharpness")
    common.add_argument("--weighted", action="store_true", default=None, help="use the density Q")
    common.add_argument("--seed", type=int)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        if name == "reproduce":
            continue
        sp = sub.add_parser(name, parents=[common], help=CSV_COLUMNS[name].split("(")[-1].rstrip(")"),
                            description=f"CSV columns: {CSV_COLUMNS[name]}")
        if name == "threshold":
            sp.add_argument("--fan", type=int, default=64, help="number of fan directions")
        if name == "simulate":
            sp.add_argument("--at-eps", dest="eps", type=float, help="scale (0 for the homogenized problem)")
            sp.add_argument("--samples", type=int, default=0, help="real-space samples (d = 1)")
            sp.add_argument("--extent", type=float, default=10.0, help="half-width of the sample window")
        if name == "selftest":
            sp.add_argument("--quick", action="store_true", help="subset of presets")
    sp = sub.add_parser("reproduce", parents=[common], help="reference reproductions",
                        description=f"CSV columns: {CSV_COLUMNS['reproduce']}")
    sp.add_argument("id", help=f"one of {', '.join(REPRODUCTIONS)}")
    return p


_CFG_KEYS = ("preset", "out_dir", "cutoff", "tau", "s", "functional", "eps_list", "theta", "weighted", "seed")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in _CFG_KEYS}
    needs_medium = args.command not in ("reproduce", "selftest")
    try:
        if needs_medium:
            cfg = load_config(args.config, overrides)
        else:
            overrides.setdefault("preset", None)
            overrides["preset"] = overrides["preset"] or "const"
            cfg = load_config(args.config, overrides)
        t = time.perf_counter()
        code, summary, header, rows = COMMANDS[args.command](cfg, args)
    except (ValueError, KeyError, UsageError, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"homwave: error: {msg}", file=sys.stderr)
        return 1
    summary = {"command": args.command, "config": cfg.to_dict(), "result": summary}
    _write(Path(cfg.out_dir), args.command if args.command != "reproduce" else f"reproduce_{args.id}",
           summary, header, rows)
    status = "ok" if code == 0 else "TOLERANCE FAILURE"
    print(f"{args.command}: {status} ({time.perf_counter() - t:.1f}s) -> {cfg.out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
