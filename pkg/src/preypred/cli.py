"""Command-line front end: configuration, scenario presets and CSV artifacts.

Configuration files are INI-style ``key = value`` lines grouped in sections.
Every key has a default (see ``DEFAULTS``); unknown sections or keys are
rejected.  Values are layered as defaults < scenario preset < config file <
command-line flags, and the fully resolved configuration is echoed to the
output directory as ``config.ini``.  Feeding that file back through
``--config`` reproduces the run.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 sweep did not converge.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass, fields
from importlib import metadata
from pathlib import Path as FsPath

import numpy as np

from .model import InvalidInputError, ModelParams, State, equilibria
from .montecarlo import TargetSpec, estimate_objective, run_ensemble, write_hitting_csv, write_stats_csv
from .noise import DEFAULT_SEED, NoiseParams, derive_stream
from .optctl import (
    ConfigurationError,
    StreamSet,
    SweepConfig,
    SweepResult,
    forward_backward_sweep,
    write_adjoint_csv,
    write_controls_csv,
    write_history_csv,
)
from .sim import ControlSchedule, NumericalOverflowError, SimConfig, fmt, simulate_path, write_path_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NOT_CONVERGED = 4

COMMANDS = ("simulate", "optimize-quality", "optimize-quantity", "ensemble", "equilibria", "scenario")

# section -> key -> default (as written in a config file)
DEFAULTS: dict[str, dict[str, str]] = {
    "model": {"r": "1.5", "gamma": "12", "omega": "15", "e": "0.4", "m1": "0.15",
              "m2": "0.01", "alpha": "1", "xi": "1"},
    "noise": {"sigma1": "0.02", "sigma2": "0.02", "lam": "1", "jump1": "1", "jump2": "1",
              "shared_jumps": "true"},
    "sim": {"dt": "0.001", "horizon": "50", "positivity_floor": "1e-12"},
    "sweep": {"max_iters": "200", "relaxation": "0.5", "tol": "1e-4", "q_mode": "pathwise-zero",
              "max_backtracks": "40", "paths": "1000"},
    "control": {"alpha_min": "0", "alpha_max": "10", "xi_min": "0", "xi_max": "10"},
    "target": {"kind": "equilibrium", "x": "auto", "y": "auto", "epsilon": "0.5"},
    "run": {"x0": "2", "y0": "8", "seed": str(DEFAULT_SEED), "paths": "10000"},
}

# settings without a value in the model source; every manifest lists them with their value
FLAGGED_DEFAULTS = (("control", "alpha_max"), ("control", "xi_max"), ("target", "epsilon"),
                    ("noise", "lam"))

PRESETS: dict[str, dict[str, dict[str, str]]] = {
    # predator-friendly food keeps both species alive under unit-rate jumps
    "conservation": {"model": {"alpha": "0.25", "xi": "2"}, "sim": {"dt": "0.01"},
                     "target": {"kind": "equilibrium"}},
    # abundant, fully available food; target is prey near zero with the predator on its axis
    "pest": {"model": {"alpha": "0", "xi": "10"}, "sim": {"dt": "0.01"},
             "target": {"kind": "pest"}},
}

PEST_PREY_LEVEL = 0.5


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    noise: NoiseParams
    sim: SimConfig
    sweep: SweepConfig
    alpha_bounds: tuple[float, float]
    xi_bounds: tuple[float, float]
    target_kind: str
    target: TargetSpec
    x0: float
    y0: float
    seed: int
    paths: int
    sweep_paths: int

    def bounds(self, mode: str) -> tuple[float, float]:
        return self.alpha_bounds if mode == "quality" else self.xi_bounds


# -- parsing ------------------------------------------------------------------

def _read_layer(path) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: key outside of a section") from exc
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{path}: line {lineno}: cannot parse {line}") from exc
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.message}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    layer: dict[str, dict[str, str]] = {}
    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, value in cp.items(section):
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{path}: unknown key {section}.{key}")
            layer.setdefault(section, {})[key] = value
    return layer


def _merge(*layers) -> dict[str, dict[str, str]]:
    out = {s: dict(v) for s, v in DEFAULTS.items()}
    for layer in layers:
        for section, values in layer.items():
            for key, value in values.items():
                if key not in out.get(section, {}):
                    raise ConfigError(f"unknown key {section}.{key}")
                out[section][key] = value
    return out


def _num(raw, section, key, kind=float):
    text = raw[section][key].strip()
    try:
        if kind is int:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected {kind.__name__}, got {text!r}") from None


def _flag(raw, section, key) -> bool:
    text = raw[section][key].strip().lower()
    if text in ("true", "yes", "on", "1"):
        return True
    if text in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{section}.{key}: expected a boolean, got {text!r}")


def _build(cls, section, values: dict):
    """Construct ``cls`` and, on a constraint violation, name the offending key."""
    try:
        return cls(**values)
    except InvalidInputError as exc:
        base = {f.name: f.default for f in fields(cls) if f.name in values}
        for key, value in values.items():
            try:
                cls(**{**base, key: value})
            except InvalidInputError as single:
                raise ConfigError(f"{section}.{key}: {single}") from None
        raise ConfigError(f"[{section}]: {exc}") from None


def _resolve_target(kind: str, raw, mp: ModelParams) -> tuple[float, float]:
    x_text, y_text = raw["target"]["x"].strip(), raw["target"]["y"].strip()
    if kind == "equilibrium":
        interior = [q.state for q in equilibria(mp) if q.kind == "interior"]
        auto = max(interior, key=lambda s: s.x) if interior else None
    elif kind == "pest":
        axial = [q.state for q in equilibria(mp) if q.kind == "axial-predator"]
        auto = State(PEST_PREY_LEVEL, axial[0].y) if axial else None
    else:
        raise ConfigError(f"target.kind: expected 'equilibrium' or 'pest', got {kind!r}")
    coords = []
    for key, text, fallback in (("x", x_text, auto and auto.x), ("y", y_text, auto and auto.y)):
        if text.lower() == "auto":
            if fallback is None:
                raise ConfigError(f"target.{key}: no {kind} target exists for these model parameters")
            coords.append(float(fallback))
        else:
            coords.append(_num(raw, "target", key))
    return coords[0], coords[1]


def resolve(raw: dict[str, dict[str, str]]) -> RunConfig:
    m = raw["model"]
    model = _build(ModelParams, "model", {k: _num(raw, "model", k) for k in m})
    noise = _build(NoiseParams, "noise", {
        **{k: _num(raw, "noise", k) for k in ("sigma1", "sigma2", "lam", "jump1", "jump2")},
        "shared_jumps": _flag(raw, "noise", "shared_jumps"),
    })
    sim = _build(SimConfig, "sim", {k: _num(raw, "sim", k) for k in raw["sim"]})
    sweep_vals = {
        "max_iters": _num(raw, "sweep", "max_iters", int),
        "relaxation": _num(raw, "sweep", "relaxation"),
        "tol": _num(raw, "sweep", "tol"),
        "q_mode": raw["sweep"]["q_mode"].strip(),
        "max_backtracks": _num(raw, "sweep", "max_backtracks", int),
        "objective_paths": _num(raw, "run", "paths", int),
    }
    try:
        sweep = SweepConfig(**sweep_vals)
    except (InvalidInputError, ConfigurationError) as exc:
        for key in sweep_vals:
            try:
                SweepConfig(**{key: sweep_vals[key]})
            except (InvalidInputError, ConfigurationError) as single:
                section = "run" if key == "objective_paths" else "sweep"
                name = "paths" if key == "objective_paths" else key
                raise ConfigError(f"{section}.{name}: {single}") from None
        raise ConfigError(f"[sweep]: {exc}") from None

    bounds = {}
    for ctl in ("alpha", "xi"):
        lo, hi = _num(raw, "control", f"{ctl}_min"), _num(raw, "control", f"{ctl}_max")
        if not (math.isfinite(lo) and lo >= 0):
            raise ConfigError(f"control.{ctl}_min: must be finite and >= 0, got {lo!r}")
        if not (math.isfinite(hi) and hi >= lo):
            raise ConfigError(f"control.{ctl}_max: must be finite and >= {ctl}_min, got {hi!r}")
        bounds[ctl] = (lo, hi)

    kind = raw["target"]["kind"].strip()
    tx, ty = _resolve_target(kind, raw, model)
    eps = _num(raw, "target", "epsilon")
    try:
        target = TargetSpec(State(tx, ty), eps)
    except InvalidInputError as exc:
        key = "epsilon" if "epsilon" in str(exc) else "x"
        raise ConfigError(f"target.{key}: {exc}") from None

    x0, y0 = _num(raw, "run", "x0"), _num(raw, "run", "y0")
    for key, v in (("x0", x0), ("y0", y0)):
        if not (math.isfinite(v) and v >= 0):
            raise ConfigError(f"run.{key}: must be finite and >= 0, got {v!r}")
    seed = _num(raw, "run", "seed", int)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"run.seed: must be an unsigned 64-bit integer, got {seed}")
    paths = _num(raw, "run", "paths", int)
    if paths < 1:
        raise ConfigError(f"run.paths: must be >= 1, got {paths}")
    sweep_paths = _num(raw, "sweep", "paths", int)
    if sweep_paths < 1:
        raise ConfigError(f"sweep.paths: must be >= 1, got {sweep_paths}")
    return RunConfig(model, noise, sim, sweep, bounds["alpha"], bounds["xi"], kind, target,
                     x0, y0, seed, paths, sweep_paths)


def parse_config(path=None, preset: str | None = None,
                 overrides: dict[str, dict[str, str]] | None = None) -> RunConfig:
    """Resolve defaults, an optional preset, an optional file and overrides into a RunConfig."""
    layers = []
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown scenario {preset!r}; choose from {sorted(PRESETS)}")
        layers.append(PRESETS[preset])
    if path is not None:
        layers.append(_read_layer(path))
    if overrides:
        layers.append(overrides)
    return resolve(_merge(*layers))


def _text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config(cfg: RunConfig) -> str:
    """INI text of the resolved configuration; floats use their shortest round-trip repr."""
    m, nz, s, sw = cfg.model, cfg.noise, cfg.sim, cfg.sweep
    sections = {
        "model": {f.name: getattr(m, f.name) for f in fields(m)},
        "noise": {"sigma1": nz.sigma1, "sigma2": nz.sigma2, "lam": nz.lam, "jump1": nz.jump1,
                  "jump2": nz.jump2, "shared_jumps": nz.shared_jumps},
        "sim": {"dt": s.dt, "horizon": s.horizon, "positivity_floor": s.positivity_floor},
        "sweep": {"max_iters": sw.max_iters, "relaxation": sw.relaxation, "tol": sw.tol,
                  "q_mode": sw.q_mode, "max_backtracks": sw.max_backtracks,
                  "paths": cfg.sweep_paths},
        "control": {"alpha_min": cfg.alpha_bounds[0], "alpha_max": cfg.alpha_bounds[1],
                    "xi_min": cfg.xi_bounds[0], "xi_max": cfg.xi_bounds[1]},
        "target": {"kind": cfg.target_kind, "x": cfg.target.target.x, "y": cfg.target.target.y,
                   "epsilon": cfg.target.epsilon},
        "run": {"x0": cfg.x0, "y0": cfg.y0, "seed": cfg.seed, "paths": cfg.paths},
    }
    lines = []
    for name, values in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {_text(v)}" for k, v in values.items())
        lines.append("")
    return "\n".join(lines)


# -- artifacts ----------------------------------------------------------------

def _versions() -> dict[str, str]:
    def ver(name):
        try:
            return metadata.version(name)
        except metadata.PackageNotFoundError:
            return "unknown"
    import scipy

    return {"artifact": ver("artifact"), "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _sha256(path: FsPath) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_phase(xy: np.ndarray, target: FsPath) -> None:
    with open(target, "w") as fh:
        fh.write("x,y\n")
        for x, y in xy:
            fh.write(f"{fmt(x)},{fmt(y)}\n")


def _write_equilibria(items, target: FsPath) -> None:
    with open(target, "w") as fh:
        fh.write("x,y,kind,drift_residual\n")
        for q in items:
            fh.write(f"{fmt(q.state.x)},{fmt(q.state.y)},{q.kind},{fmt(q.drift_residual)}\n")


def write_sweep_artifacts(result: SweepResult, out: FsPath) -> list[str]:
    write_path_csv(result.state_path, out / "trajectory.csv")
    write_controls_csv(result, out / "controls.csv")
    write_adjoint_csv(result, out / "adjoint.csv")
    write_history_csv(result, out / "history.csv")
    _write_phase(result.mean_states, out / "phase.csv")
    names = ["trajectory.csv", "controls.csv", "adjoint.csv", "history.csv", "phase.csv"]
    if result.stats is not None:
        write_stats_csv(result.stats, out / "stats.csv")
        write_hitting_csv(result.stats, out / "hitting.csv")
        names += ["stats.csv", "hitting.csv"]
    return names


def run_sweep(cfg: RunConfig, mode: str, workers: int = 1) -> SweepResult:
    if not (cfg.x0 > 0 and cfg.y0 > 0):
        raise ConfigError("run.x0: optimization needs a strictly positive initial state")
    return forward_backward_sweep(
        cfg.x0, cfg.y0, mode, cfg.model, cfg.noise, cfg.sim, cfg.sweep, cfg.bounds(mode),
        StreamSet(cfg.seed, cfg.sweep_paths), cfg.target, workers=workers,
    )


def run_scenario(name: str, cfg: RunConfig, out: FsPath, mode: str = "quality",
                 workers: int = 1) -> tuple[int, SweepResult]:
    """Sweep plus final ensemble for a preset; writes all artifacts into ``out``."""
    result = run_sweep(cfg, mode, workers)
    names = write_sweep_artifacts(result, out)
    _finish(out, cfg, f"scenario {name}", mode, names, _sweep_summary(result, cfg),
            scenario=name)
    return (EXIT_OK if result.converged else EXIT_NOT_CONVERGED), result


def _sweep_summary(result: SweepResult, cfg: RunConfig) -> dict:
    q = len(result.mean_states) * 3 // 4
    tail = result.stats.mean[q:] if result.stats is not None else result.mean_states[q:]
    return {
        "objective": result.objective,
        "objective_se": result.objective_se,
        "censored_fraction": result.censored_fraction,
        "clamp_events": result.stats.clamp_events if result.stats is not None else None,
        "fixed_horizon_objective": result.fixed_horizon_objective,
        "converged": result.converged,
        "stalled": result.stalled,
        "iterations": len(result.history),
        "mean_control": float(np.mean(result.schedule.values)),
        "terminal_mean": [float(v) for v in (result.stats.mean[-1] if result.stats is not None
                                             else result.mean_states[-1])],
        "final_quarter_mean": [float(v) for v in tail.mean(axis=0)],
        "target": [cfg.target.target.x, cfg.target.target.y],
    }


def _flagged_value(cfg: RunConfig, section: str, key: str) -> float:
    return {
        ("control", "alpha_max"): cfg.alpha_bounds[1],
        ("control", "xi_max"): cfg.xi_bounds[1],
        ("target", "epsilon"): cfg.target.epsilon,
        ("noise", "lam"): cfg.noise.lam,
    }[(section, key)]


def _finish(out: FsPath, cfg: RunConfig, command: str, mode: str | None, names: list[str],
            summary: dict, scenario: str | None = None) -> None:
    text = render_config(cfg)
    (out / "config.ini").write_text(text)
    manifest = {
        "command": command,
        "scenario": scenario,
        "mode": mode,
        "seed": cfg.seed,
        "config_file": "config.ini",
        "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "versions": _versions(),
        "flagged_defaults": {f"{s}.{k}": _flagged_value(cfg, s, k) for s, k in FLAGGED_DEFAULTS},
        "epsilon": cfg.target.epsilon,
        "summary": summary,
        "outputs": {n: _sha256(out / n) for n in sorted(names)},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="preypred", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("name", nargs="?", help="scenario name (conservation or pest)")
    ap.add_argument("--config", help="INI configuration file")
    ap.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--paths", type=int, help="ensemble paths (objective estimate and ensemble)")
    ap.add_argument("--dt", type=float)
    ap.add_argument("--horizon", type=float)
    ap.add_argument("--workers", type=int, default=1, help="worker processes for ensembles")
    ap.add_argument("--mode", choices=("quality", "quantity"), default="quality",
                    help="control mode for scenario runs")
    return ap


def _flag_overrides(args) -> dict[str, dict[str, str]]:
    ov: dict[str, dict[str, str]] = {}
    if args.seed is not None:
        ov.setdefault("run", {})["seed"] = str(args.seed)
    if args.paths is not None:
        ov.setdefault("run", {})["paths"] = str(args.paths)
    if args.dt is not None:
        ov.setdefault("sim", {})["dt"] = repr(args.dt)
    if args.horizon is not None:
        ov.setdefault("sim", {})["horizon"] = repr(args.horizon)
    return ov


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "scenario" and args.name is None:
        print("error: scenario needs a name (conservation or pest)", file=sys.stderr)
        return EXIT_CONFIG
    if args.command != "scenario" and args.name is not None:
        print(f"error: unexpected argument {args.name!r}", file=sys.stderr)
        return EXIT_CONFIG
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    preset = args.name if args.command == "scenario" else None
    overrides = _flag_overrides(args)
    try:
        cfg = parse_config(args.config, preset=preset, overrides=overrides)
        out = FsPath(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: output directory {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return _dispatch(args, cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalOverflowError, FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _dispatch(args, cfg: RunConfig, out: FsPath) -> int:
    cmd = args.command
    if cmd == "equilibria":
        items = equilibria(cfg.model)
        _write_equilibria(items, out / "equilibria.csv")
        for q in items:
            print(f"{q.kind:15s} x={q.state.x:.6g} y={q.state.y:.6g}")
        _finish(out, cfg, cmd, None, ["equilibria.csv"], {"count": len(items)})
        return EXIT_OK

    if cmd == "simulate":
        sched = ControlSchedule.constant(cfg.model.alpha, cfg.sim.n_steps + 1, "quality",
                                         (cfg.model.alpha, cfg.model.alpha))
        path = simulate_path(cfg.x0, cfg.y0, sched, cfg.model, cfg.noise, cfg.sim,
                             derive_stream(cfg.seed, 0))
        write_path_csv(path, out / "trajectory.csv")
        _write_phase(path.states, out / "phase.csv")
        x, y = path.states[-1]
        print(f"terminal state x={x:.6g} y={y:.6g} clamp_events={path.clamp_events}")
        _finish(out, cfg, cmd, None, ["trajectory.csv", "phase.csv"],
                {"terminal": [float(x), float(y)], "clamp_events": path.clamp_events})
        return EXIT_OK

    if cmd == "ensemble":
        stats = run_ensemble(cfg.paths, cfg.x0, cfg.y0, None, cfg.model, cfg.noise, cfg.sim,
                             cfg.seed, cfg.target, workers=args.workers)
        write_stats_csv(stats, out / "stats.csv")
        write_hitting_csv(stats, out / "hitting.csv")
        J, se = estimate_objective(stats, cfg.sim.horizon)
        print(f"J={J:.6g} se={se:.3g} censored={stats.censored_fraction:.3f} "
              f"clamp_events={stats.clamp_events}")
        _finish(out, cfg, cmd, None, ["stats.csv", "hitting.csv"],
                {"objective": J, "objective_se": se, "censored_fraction": stats.censored_fraction,
                 "clamp_events": stats.clamp_events})
        return EXIT_OK

    if cmd == "scenario":
        mode = args.mode
        _, result = run_scenario(args.name, cfg, out, mode, args.workers)
    else:
        mode = "quality" if cmd == "optimize-quality" else "quantity"
        result = run_sweep(cfg, mode, args.workers)
        names = write_sweep_artifacts(result, out)
        summary = _sweep_summary(result, cfg)
        _finish(out, cfg, cmd, mode, names, summary)
    print(f"{mode}: J={result.objective:.6g} se={result.objective_se:.3g} "
          f"censored={result.censored_fraction:.3f} iterations={len(result.history)} "
          f"converged={result.converged}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
