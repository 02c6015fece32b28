"""Command-line front door.

Exit codes: 0 success, 2 usage error (message names the offending flag or
config key), 3 resource-budget error. Randomized commands require an
explicit --seed; nothing falls back to wall-clock entropy. A plain-text
config file (`key = value` lines, `#` comments) can supply any flag's
value; explicit flags win, unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .asymptotics import (LogWindow, MiFlavor, ResolutionMode, SecondOrderQuery,
                          adaptivity_gain_lb, joint_resolution, joint_window,
                          mi_resolution, mi_window, separate_resolution,
                          separate_window)
from .bounds import BoundMode, achievability_bound, converse_bound, default_eta
from .capacity import capacity
from .channels import ChannelKind, ChannelSpec, bec, bsc, fixed, z_channel
from .errors import ResourceLimitError
from .harness import (ExperimentMode, ExperimentSpec, MarginRule, figure_series,
                      run_adaptive_batch, run_experiment, summaries_to_csv)

_LN2 = math.log(2.0)


class UsageError(Exception):
    """Bad flag or config input; maps to exit code 2."""


def _load_config(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"--config: cannot read {path!r}: {e}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config: line {lineno} is not 'key = value': {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _cast_int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise UsageError(f"expected an integer, got {s!r}") from None


def _cast_float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise UsageError(f"expected a number, got {s!r}") from None


def _merge(args: argparse.Namespace, cfg: dict[str, str], casts: dict) -> dict:
    """Overlay config values under explicit flags; reject unknown keys."""
    unknown = sorted(set(cfg) - set(casts))
    if unknown:
        raise UsageError(f"--config: unknown key {unknown[0]!r} for this command")
    merged = {}
    for key, cast in casts.items():
        value = getattr(args, key, None)
        if value is None and key in cfg:
            try:
                value = cast(cfg[key])
            except UsageError as e:
                raise UsageError(f"--config: key {key!r}: {e}") from None
        merged[key] = value
    return merged


def _require(d: dict, key: str, flag: str):
    if d[key] is None:
        raise UsageError(f"{flag} is required")
    return d[key]


def _check(cond: bool, message: str):
    if not cond:
        raise UsageError(message)


def _build_channel(d: dict) -> ChannelSpec:
    kind = _require(d, "channel", "--channel")
    if kind in ("bsc", "bec", "z"):
        param = _require(d, "param", "--param")
        _check(0.0 <= param <= 1.0, f"--param must lie in [0, 1], got {param}")
        return {"bsc": bsc, "bec": bec, "z": z_channel}[kind](param)
    if kind == "fixed":
        raw = _require(d, "matrix", "--matrix")
        try:
            matrix = json.loads(raw)
        except json.JSONDecodeError as e:
            raise UsageError(f"--matrix: not valid JSON: {e}") from None
        try:
            return fixed(matrix)
        except (ValueError, TypeError, IndexError) as e:
            raise UsageError(f"--matrix: {e}") from None
    raise UsageError(f"--channel must be one of bsc, bec, z, fixed, got {kind!r}")


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _emit_json(obj: dict, out: str | None):
    _emit(json.dumps(obj, indent=2) + "\n", out)


def _threads(d: dict) -> int:
    value = d.get("threads")
    if value is None:
        env = os.environ.get("QSEARCH_THREADS")
        value = _cast_int(env) if env else 1
    _check(value >= 0, f"--threads must be nonnegative, got {value}")
    return value


def _cmd_capacity(d: dict) -> int:
    spec = _build_channel(d)
    grid = d["grid"] if d["grid"] is not None else 20001
    tol = d["tol"] if d["tol"] is not None else 1e-10
    _check(grid >= 3, f"--grid must be at least 3, got {grid}")
    _check(tol > 0.0, f"--tol must be positive, got {tol}")
    rep = capacity(spec, grid_size=grid, tolerance=tol)
    _emit_json({
        "C": rep.capacity,
        "achievers": [float(a) for a in rep.achievers],
        "V_low": rep.v_low,
        "V_high": rep.v_high,
        "T": rep.third_moment,
        "grid": rep.grid_size,
        "tol": rep.tolerance,
    }, d["out"])
    return 0


_SO_MODES = ("joint", "separate", "adaptive", "gain", "mi")


def _cmd_second_order(d: dict) -> int:
    spec = _build_channel(d)
    n = _require(d, "n", "-n")
    dim = _require(d, "d", "-d")
    eps = _require(d, "eps", "--eps")
    mode = d["mode"] if d["mode"] is not None else "joint"
    _check(mode in _SO_MODES, f"--mode must be one of {', '.join(_SO_MODES)}, got {mode!r}")
    _check(n >= 1, f"-n must be at least 1, got {n}")
    _check(dim >= 1, f"-d must be at least 1, got {dim}")
    if mode == "adaptive":
        _check(0.0 <= eps < 1.0, f"--eps must lie in [0, 1) for adaptive mode, got {eps}")
    else:
        _check(0.0 < eps < 1.0, f"--eps must lie in (0, 1), got {eps}")
    window = (0.0, 0.0)
    if mode == "joint":
        value = joint_resolution(spec, SecondOrderQuery(n, dim, eps, ResolutionMode.JOINT,
                                                        LogWindow.NONE))
        window = joint_window(n, dim)
    elif mode == "separate":
        value = separate_resolution(spec, SecondOrderQuery(n, dim, eps,
                                                           ResolutionMode.SEPARATE,
                                                           LogWindow.NONE))
        window = separate_window(n, dim)
    elif mode == "adaptive":
        value = _adaptive_value(spec, n, dim, eps)
    elif mode == "gain":
        value = adaptivity_gain_lb(spec, n, dim, eps)
    else:
        value = _mi_value(spec, n, dim, eps)
        window = mi_window(n)
    unit = _LN2 if d["bits"] else 1.0
    _emit_json({
        "value_nats": value,
        "value_bits": value / _LN2,
        "window_low": window[0] / unit,
        "window_high": window[1] / unit,
    }, d["out"])
    return 0


def _adaptive_value(spec: ChannelSpec, n: int, dim: int, eps: float) -> float:
    c = capacity(spec).capacity
    return n * c / (dim * (1.0 - eps))


def _mi_value(spec: ChannelSpec, n: int, dim: int, eps: float) -> float:
    if spec.kind is ChannelKind.FIXED:
        return mi_resolution(n, dim, eps, MiFlavor.GENERIC, spec=spec)
    flavor = {ChannelKind.BSC: MiFlavor.BSC, ChannelKind.BEC: MiFlavor.BEC,
              ChannelKind.Z: MiFlavor.Z}[spec.kind]
    return mi_resolution(n, dim, eps, flavor, param=spec.param)


def _cmd_bounds(d: dict) -> int:
    spec = _build_channel(d)
    n = _require(d, "n", "-n")
    dim = _require(d, "d", "-d")
    _check(n >= 1, f"-n must be at least 1, got {n}")
    _check(dim >= 1, f"-d must be at least 1, got {dim}")
    if d["which"] == "ach":
        m = _require(d, "m", "--M")
        _check(m >= 2, f"--M must be at least 2, got {m}")
        p = d["p"] if d["p"] is not None else capacity(spec).achievers[0]
        _check(0.0 <= p <= 1.0, f"--p must lie in [0, 1], got {p}")
        mode = d["mode"] if d["mode"] is not None else "md"
        _check(mode in ("md", "mi"), f"--mode must be md or mi, got {mode!r}")
        eta = d["eta"]
        if mode == "md" and eta is None:
            eta = default_eta(m, dim)
        if eta is not None:
            _check(eta > 0.0, f"--eta must be positive, got {eta}")
        try:
            value = achievability_bound(spec, n, dim, m, p, eta,
                                        BoundMode.MD if mode == "md" else BoundMode.MI)
        except ValueError as e:
            raise UsageError(str(e)) from None
        _emit_json({
            "bound_kind": "achievability", "mode": mode, "n": n, "d": dim, "m": m,
            "p": p, "eta": eta, "excess_upper_bound": value,
        }, d["out"])
        return 0
    eps = _require(d, "eps", "--eps")
    _check(0.0 < eps < 1.0, f"--eps must lie in (0, 1), got {eps}")
    beta = d["beta"] if d["beta"] is not None else 1.0 / math.sqrt(n)
    kappa = d["kappa"] if d["kappa"] is not None else 1.0 / math.sqrt(n)
    q_grid = d["qgrid"] if d["qgrid"] is not None else 201
    _check(q_grid >= 1, f"--qgrid must be at least 1, got {q_grid}")
    try:
        value = converse_bound(spec, n, dim, eps, beta, kappa, q_grid=q_grid)
    except ValueError as e:
        raise UsageError(str(e)) from None
    _emit_json({
        "bound_kind": "converse", "n": n, "d": dim, "eps": eps, "beta": beta,
        "kappa": kappa, "q_grid": q_grid, "resolution_exponent_nats": value,
    }, d["out"])
    return 0


def _cmd_simulate(d: dict) -> int:
    spec = _build_channel(d)
    n = _require(d, "n", "-n")
    dim = _require(d, "d", "-d")
    eps = _require(d, "eps", "--eps")
    trials = _require(d, "trials", "--trials")
    seed = _require(d, "seed", "--seed")
    _check(n >= 1, f"-n must be at least 1, got {n}")
    _check(dim >= 1, f"-d must be at least 1, got {dim}")
    _check(0.0 < eps < 1.0, f"--eps must lie in (0, 1), got {eps}")
    _check(trials >= 1, f"--trials must be at least 1, got {trials}")
    _check(seed >= 0, f"--seed must be nonnegative, got {seed}")
    mode = ExperimentMode.JOINT
    if d["separate"] and d["adaptive"]:
        raise UsageError("--separate and --adaptive are mutually exclusive")
    if d["separate"]:
        mode = ExperimentMode.SEPARATE
    if d["adaptive"]:
        mode = ExperimentMode.ADAPTIVE
    margin = d["margin"] if d["margin"] is not None else "none"
    _check(margin in ("none", "halflog"), f"--margin must be none or halflog, got {margin!r}")
    exp = ExperimentSpec(
        channel=spec, n=n, d=dim, eps_target=eps, trials=trials, master_seed=seed,
        mode=mode,
        margin_rule=MarginRule.MINUS_HALF_LOG_N if margin == "halflog" else MarginRule.NONE)
    summary = run_experiment(exp, threads=_threads(d))
    _emit(summaries_to_csv([summary]), d["out"])
    return 0


def _cmd_adaptive_sim(d: dict) -> int:
    spec = _build_channel(d)
    m = _require(d, "m", "--M")
    dim = _require(d, "d", "-d")
    threshold = _require(d, "threshold", "--lambda")
    trials = _require(d, "trials", "--trials")
    seed = _require(d, "seed", "--seed")
    _check(m >= 1, f"--M must be at least 1, got {m}")
    _check(dim >= 1, f"-d must be at least 1, got {dim}")
    _check(threshold >= 0.0, f"--lambda must be nonnegative, got {threshold}")
    _check(trials >= 1, f"--trials must be at least 1, got {trials}")
    _check(seed >= 0, f"--seed must be nonnegative, got {seed}")
    p = d["p"] if d["p"] is not None else capacity(spec).achievers[0]
    _check(0.0 <= p <= 1.0, f"--p must lie in [0, 1], got {p}")
    max_steps = d["max_steps"]
    if max_steps is not None:
        _check(max_steps >= 1, f"--max-steps must be at least 1, got {max_steps}")
    batch = run_adaptive_batch(spec, m=m, d=dim, p=p, threshold=threshold,
                               trials=trials, master_seed=seed, max_steps=max_steps,
                               threads=_threads(d))
    _emit(batch.to_csv(), d["out"])
    return 0


def _cmd_figure(d: dict) -> int:
    fig = d["id"]
    out_dir = _require(d, "out", "--out")
    params = dict(d["extra"])
    if d["trials"] is not None:
        _check(d["trials"] >= 1, f"--trials must be at least 1, got {d['trials']}")
        params["trials"] = d["trials"]
    if fig in ("f5_ddim", "f6_separate"):
        seed = _require(d, "seed", "--seed")
        _check(seed >= 0, f"--seed must be nonnegative, got {seed}")
        params["seed"] = seed
    try:
        table = figure_series(fig, params or None, threads=_threads(d))
    except ValueError as e:
        raise UsageError(str(e)) from None
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / f"{table.figure_id}.csv"
    target.write_text(table.to_csv())
    sys.stdout.write(f"{target}\n")
    return 0


def _figure_extra_params(fig: str, cfg: dict[str, str]) -> dict:
    """Cast figure config overrides by the type of each default."""
    from .harness import _FIGURE_DEFAULTS

    if fig not in _FIGURE_DEFAULTS:
        raise UsageError(f"unknown figure id {fig!r}")
    defaults = _FIGURE_DEFAULTS[fig]
    reserved = {"out", "seed", "trials", "threads"}
    extra = {}
    for key, raw in cfg.items():
        if key in reserved:
            continue
        if key not in defaults:
            raise UsageError(f"--config: unknown key {key!r} for figure {fig}")
        default = defaults[key]
        if isinstance(default, tuple):
            elem = type(default[0]) if default else float
            extra[key] = tuple(elem(part.strip()) for part in raw.split(","))
        elif isinstance(default, bool):
            extra[key] = raw.lower() in ("1", "true", "yes")
        elif isinstance(default, int):
            extra[key] = _cast_int(raw)
        elif isinstance(default, float):
            extra[key] = _cast_float(raw)
        else:
            extra[key] = raw
    return extra


def _add_channel_flags(sp: argparse.ArgumentParser):
    sp.add_argument("--channel", choices=["bsc", "bec", "z", "fixed"],
                    help="channel family")
    sp.add_argument("--param", type=float, help="family parameter in [0, 1]")
    sp.add_argument("--matrix", help="fixed kind only: 2-row stochastic matrix as JSON")


def _add_common_flags(sp: argparse.ArgumentParser):
    sp.add_argument("--config", help="plain-text config file (key = value per line)")
    sp.add_argument("--out", help="output path (default: stdout)")
    sp.add_argument("--threads", type=int,
                    help="worker cap, 0 = auto (env QSEARCH_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsearch",
        description="Noisy-search simulation and bound toolkit over the unit cube.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("capacity", help="channel capacity report (JSON)")
    _add_channel_flags(sp)
    sp.add_argument("--grid", type=int, help="coarse grid size (default 20001)")
    sp.add_argument("--tol", type=float, help="achiever tolerance in nats (default 1e-10)")
    _add_common_flags(sp)

    sp = sub.add_parser("second-order", help="closed-form resolution formulas (JSON)")
    _add_channel_flags(sp)
    sp.add_argument("-n", type=int, help="number of queries")
    sp.add_argument("-d", type=int, help="target dimension")
    sp.add_argument("--eps", type=float, help="target excess probability")
    sp.add_argument("--mode", choices=list(_SO_MODES), help="formula (default joint)")
    sp.add_argument("--bits", action="store_const", const=True,
                    help="report the log window in bits instead of nats")
    _add_common_flags(sp)

    sp = sub.add_parser("bounds", help="non-asymptotic bounds (JSON)")
    sp.add_argument("which", choices=["ach", "conv"], help="bound family")
    _add_channel_flags(sp)
    sp.add_argument("-n", type=int, help="number of queries")
    sp.add_argument("-d", type=int, help="target dimension")
    sp.add_argument("--M", dest="m", type=int, help="ach: bins per dimension")
    sp.add_argument("--p", type=float, help="ach: design fraction (default: capacity achiever)")
    sp.add_argument("--eta", type=float, help="ach: deviation radius (default: balanced)")
    sp.add_argument("--mode", choices=["md", "mi"], help="ach: bound variant (default md)")
    sp.add_argument("--eps", type=float, help="conv: target excess probability")
    sp.add_argument("--beta", type=float, help="conv: resolution slack (default 1/sqrt(n))")
    sp.add_argument("--kappa", type=float, help="conv: quantile slack (default 1/sqrt(n))")
    sp.add_argument("--qgrid", type=int, help="conv: fraction grid size (default 201)")
    _add_common_flags(sp)

    sp = sub.add_parser("simulate", help="Monte Carlo excess-rate experiment (CSV)")
    _add_channel_flags(sp)
    sp.add_argument("-n", type=int, help="number of queries")
    sp.add_argument("-d", type=int, help="target dimension")
    sp.add_argument("--eps", type=float, help="target excess probability")
    sp.add_argument("--trials", type=int, help="Monte Carlo trials")
    sp.add_argument("--seed", type=int, help="master seed (required)")
    sp.add_argument("--separate", action="store_const", const=True,
                    help="independent per-dimension searches")
    sp.add_argument("--adaptive", action="store_const", const=True,
                    help="sequential sessions instead of fixed-length trials")
    sp.add_argument("--margin", choices=["none", "halflog"],
                    help="grid-size margin rule (default none)")
    _add_common_flags(sp)

    sp = sub.add_parser("adaptive-sim", help="sequential-session batch (CSV)")
    _add_channel_flags(sp)
    sp.add_argument("--M", dest="m", type=int, help="bins per dimension")
    sp.add_argument("-d", type=int, help="target dimension")
    sp.add_argument("--p", type=float, help="bit bias (default: capacity achiever)")
    sp.add_argument("--lambda", dest="threshold", type=float, help="stop threshold in nats")
    sp.add_argument("--trials", type=int, help="session count")
    sp.add_argument("--seed", type=int, help="master seed (required)")
    sp.add_argument("--max-steps", dest="max_steps", type=int,
                    help="hard step cap (default: 50 threshold / C1)")
    _add_common_flags(sp)

    sp = sub.add_parser("figure", help="write one figure's data CSV")
    sp.add_argument("id", help="figure id (f1_phase f2_bscC f3_becC f4_gain "
                               "f4z_gain f5_ddim f6_separate)")
    sp.add_argument("--seed", type=int, help="master seed (required for f5/f6)")
    sp.add_argument("--trials", type=int, help="override simulated trial count")
    _add_common_flags(sp)
    return parser


_CASTS = {
    "capacity": {"channel": str, "param": _cast_float, "matrix": str,
                 "grid": _cast_int, "tol": _cast_float, "out": str},
    "second-order": {"channel": str, "param": _cast_float, "matrix": str,
                     "n": _cast_int, "d": _cast_int, "eps": _cast_float,
                     "mode": str, "bits": lambda s: s.lower() in ("1", "true", "yes"),
                     "out": str},
    "bounds": {"channel": str, "param": _cast_float, "matrix": str,
               "n": _cast_int, "d": _cast_int, "m": _cast_int, "p": _cast_float,
               "eta": _cast_float, "mode": str, "eps": _cast_float,
               "beta": _cast_float, "kappa": _cast_float, "qgrid": _cast_int,
               "out": str},
    "simulate": {"channel": str, "param": _cast_float, "matrix": str,
                 "n": _cast_int, "d": _cast_int, "eps": _cast_float,
                 "trials": _cast_int, "seed": _cast_int,
                 "separate": lambda s: s.lower() in ("1", "true", "yes"),
                 "adaptive": lambda s: s.lower() in ("1", "true", "yes"),
                 "margin": str, "out": str, "threads": _cast_int},
    "adaptive-sim": {"channel": str, "param": _cast_float, "matrix": str,
                     "m": _cast_int, "d": _cast_int, "p": _cast_float,
                     "threshold": _cast_float, "trials": _cast_int,
                     "seed": _cast_int, "max_steps": _cast_int, "out": str,
                     "threads": _cast_int},
}

_DISPATCH = {
    "capacity": _cmd_capacity,
    "second-order": _cmd_second_order,
    "bounds": _cmd_bounds,
    "simulate": _cmd_simulate,
    "adaptive-sim": _cmd_adaptive_sim,
}


def parse_and_dispatch(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config) if args.config else {}
        if args.command == "figure":
            extra = _figure_extra_params(args.id, cfg)
            d = {"id": args.id, "out": args.out, "seed": args.seed,
                 "trials": args.trials, "threads": args.threads, "extra": extra}
            if d["threads"] is None and "threads" in cfg:
                d["threads"] = _cast_int(cfg["threads"])
            if d["seed"] is None and "seed" in cfg:
                d["seed"] = _cast_int(cfg["seed"])
            if d["trials"] is None and "trials" in cfg:
                d["trials"] = _cast_int(cfg["trials"])
            if d["out"] is None and "out" in cfg:
                d["out"] = cfg["out"]
            return _cmd_figure(d)
        casts = _CASTS[args.command]
        d = _merge(args, cfg, casts)
        if args.command == "bounds":
            d["which"] = args.which
        return _DISPATCH[args.command](d)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except ResourceLimitError as e:
        sys.stderr.write(f"resource error: {e}\n")
        return 3


def main() -> int:
    return parse_and_dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
