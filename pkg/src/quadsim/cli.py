"""Command-line front end: ``quadsim <command> ...``.

Exit codes: 0 success, 2 input or config error, 3 missing artifact,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__, control_fuzzy, experiments
from ._io import atomic_write_text
from .control_fuzzy import TrainConfig
from .errors import (
    DegenerateFiring,
    InvalidRange,
    OutOfWindow,
    ParseError,
    ScenarioDiverged,
    SingularAttitude,
    SingularLSQ,
    ValidationError,
)
from .params import (
    PARAM_KEYS,
    bifilar_inertia,
    format_config,
    load_bifilar,
    params_from_mapping,
    read_keyvalue,
    to_float,
    to_float_list,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MISSING = 3
EXIT_NUMERIC = 4

CONFIG_ENV = "QUADSIM_CONFIG"
MANIFEST = "manifest.txt"

SCENARIO_KEYS = ("duration", "dt", "integrator", "z0", "phi0", "theta0", "psi0", "z_d", "phi_d", "theta_d", "psi_d")
TRAIN_KEYS = ("epochs", "learning_rate", "holdout", "teacher_z", "teacher_tilt", "teacher_yaw")


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# config


class RunConfig:
    """Raw config mapping split into vehicle parameters and run options."""

    def __init__(self, raw: dict[str, str] | None = None, source: str = "defaults"):
        raw = dict(raw or {})
        self.source = source
        allowed = set(PARAM_KEYS) | set(SCENARIO_KEYS) | set(TRAIN_KEYS)
        unknown = sorted(set(raw) - allowed)
        if unknown:
            raise ValidationError(f"unknown config key {unknown[0]!r}")
        self.options = {k: raw.pop(k) for k in list(raw) if k not in PARAM_KEYS}
        self.params = params_from_mapping(raw)

    def number(self, key: str, default: float) -> float:
        return to_float(key, self.options[key]) if key in self.options else float(default)

    def numbers(self, key: str, default) -> tuple[float, ...]:
        return tuple(to_float_list(key, self.options[key])) if key in self.options else tuple(default)

    def text(self, key: str, default: str) -> str:
        return self.options.get(key, default)

    def snapshot(self, extra_keys=()) -> dict:
        """Resolved values: all parameters plus options that were set."""
        out: dict = dict(self.params.to_config())
        for key in extra_keys:
            if key in self.options:
                out[key] = self.options[key]
        return out


def load_config(path: str | None) -> RunConfig:
    path = path or os.environ.get(CONFIG_ENV) or None
    if path is None:
        return RunConfig()
    if not os.path.isfile(path):
        raise CommandError(f"config file not found: {path}", EXIT_INPUT)
    return RunConfig(read_keyvalue(path), source=path)


def scenario_from(cfg: RunConfig, kind: str, case: str | None) -> experiments.ScenarioConfig:
    desired = (
        cfg.number("z_d", 0.0),
        math.radians(cfg.number("phi_d", 0.0)),
        math.radians(cfg.number("theta_d", 0.0)),
        math.radians(cfg.number("psi_d", 0.0)),
    )
    common = dict(
        kind=kind,
        desired=desired,
        dt=cfg.number("dt", 0.01),
        params=cfg.params,
        integrator=cfg.text("integrator", "rk4"),
    )
    if kind == "open_loop":
        del common["kind"]
        return experiments.ScenarioConfig.open_loop(duration=cfg.number("duration", experiments.OPEN_LOOP_DURATION), **common)
    common["duration"] = cfg.number("duration", 20.0)
    if case == "custom":
        missing = [k for k in ("z0", "phi0", "theta0", "psi0") if k not in cfg.options]
        if missing:
            raise CommandError(f"--case custom needs initial-state keys in the config: {', '.join(missing)}", EXIT_INPUT)
        init = [cfg.number(k, 0.0) for k in ("z0", "phi0", "theta0", "psi0")]
        return experiments.ScenarioConfig.regulation(*init, name="custom", **common)
    return experiments.ScenarioConfig.from_case(case, **common)


# ---------------------------------------------------------------------------
# outputs


def write_manifest(out: Path, command: str, argv: list[str], seed: int, config: dict, outputs: list[str],
                   inputs: list[str] = ()) -> None:
    lines = [
        "# quadsim run manifest",
        f"command = {command}",
        f"tool_version = {__version__}",
        f"seed = {seed}",
        f"argv = {shlex.join(argv)}",
    ]
    lines += [f"input = {p}" for p in inputs]
    lines += [f"output.{i} = {name}" for i, name in enumerate(sorted(outputs))]
    lines += [f"config.{line}" for line in format_config(config).splitlines()]
    atomic_write_text(out / MANIFEST, "\n".join(lines) + "\n")


def trace_plots(trace: experiments.SimTrace, out: Path, title: str) -> list[str]:
    from . import plots

    t = trace.t
    s = trace.states
    plots.line_panels(out / "positions.svg", t, [("x", "m", s[:, 0]), ("y", "m", s[:, 1]), ("z", "m", s[:, 2])], title)
    plots.line_panels(
        out / "angles.svg",
        t,
        [("phi", "deg", np.degrees(s[:, 6])), ("theta", "deg", np.degrees(s[:, 7])), ("psi", "deg", np.degrees(s[:, 8]))],
        title,
    )
    plots.multi_line(out / "inputs.svg", t, [(f"w{i + 1}", trace.speeds[:, i]) for i in range(4)], "rotor speed [rpm]", title)
    return ["positions.svg", "angles.svg", "inputs.svg"]


def metrics_text(trace: experiments.SimTrace, config: experiments.ScenarioConfig, controller: str) -> str:
    ms = experiments.trace_metrics(trace, config.desired)
    lines = [
        f"closed-loop run: case={config.name or 'custom'} controller={controller} dt={config.dt:g} s duration={config.duration:g} s",
        f"{'axis':<6} {'unit':<4} {'initial':>9} {'settling_s':>10} {'overshoot':>10} {'peak_dev':>9} {'final':>10}",
    ]
    for axis, m in ms.items():
        unit = "deg" if axis in experiments.ANGLE_AXES else "m"
        settle = f"{m.settling_time:10.2f}" if m.settled else f"{'n/s':>10}"
        over = f"{m.overshoot:9.2f}%" if m.overshoot_kind == "pct" else f"{m.overshoot:7.3f}{unit:>3}"
        lines.append(f"{axis:<6} {unit:<4} {m.initial:9.3f} {settle} {over} {m.peak_deviation:9.3f} {m.final:10.5f}")
    w = trace.speeds
    lines.append(f"max rotor speed: {np.max(w):.1f} rpm")
    lines.append("terminal rotor speeds: " + ", ".join(f"{v:.1f}" for v in w[-1]) + " rpm")
    lines.append(f"saturated samples: {int(np.any(trace.saturated, axis=1).sum())}")
    lines.append(f"final position: x={trace.states[-1, 0]:.3f} m, y={trace.states[-1, 1]:.3f} m")
    lines.append("settling band: 2% of the initial deviation (peak deviation when starting on the setpoint)")
    return "\n".join(lines) + "\n"


def _save_partial(exc: Exception, out: Path) -> None:
    trace = getattr(exc, "trace", None)
    if trace is not None and len(trace):
        trace.write_csv(out / "trace_partial.csv")


# ---------------------------------------------------------------------------
# commands


def cmd_open_loop(ns, cfg: RunConfig, out: Path) -> list[str]:
    config = scenario_from(cfg, "open_loop", None)
    try:
        trace = experiments.run_open_loop(config)
    except SingularAttitude as exc:
        _save_partial(exc, out)
        raise
    trace.write_csv(out / "trace.csv")
    names = ["trace.csv"] + trace_plots(trace, out, "open loop")
    print(f"open loop: {len(trace)} samples written to {out}")
    return names


def _load_models(ns):
    base = Path(ns.models) if ns.models else None
    alt = Path(ns.altitude_model) if ns.altitude_model else (base / "altitude.fis" if base else None)
    att = Path(ns.attitude_model) if ns.attitude_model else (base / "attitude.fis" if base else None)
    if alt is None or att is None:
        raise CommandError("fuzzy control needs --models DIR or --altitude-model and --attitude-model", EXIT_MISSING)
    for p in (alt, att):
        if not p.is_file():
            raise CommandError(f"model file not found: {p}", EXIT_MISSING)
    return control_fuzzy.load_model(alt), control_fuzzy.load_model(att)


def cmd_closed_loop(ns, cfg: RunConfig, out: Path) -> list[str]:
    kind = "closed_loop_pd" if ns.controller == "pd" else "closed_loop_fuzzy"
    config = scenario_from(cfg, kind, ns.case)
    artifacts = _load_models(ns) if ns.controller == "fuzzy" else None
    try:
        trace = experiments.run_closed_loop(config, ns.controller, artifacts)
    except (SingularAttitude, DegenerateFiring) as exc:
        _save_partial(exc, out)
        raise
    trace.write_csv(out / "trace.csv")
    report = metrics_text(trace, config, ns.controller)
    atomic_write_text(out / "metrics.txt", report)
    print(report, end="")
    return ["trace.csv", "metrics.txt"] + trace_plots(trace, out, f"{config.name} {ns.controller}")


def cmd_train_anfis(ns, cfg: RunConfig, out: Path) -> list[str]:
    battery = control_fuzzy.default_teacher_battery(
        cfg.numbers("teacher_z", control_fuzzy.DEFAULT_TEACHER_Z),
        cfg.numbers("teacher_tilt", control_fuzzy.DEFAULT_TEACHER_TILT),
        cfg.numbers("teacher_yaw", control_fuzzy.DEFAULT_TEACHER_YAW),
        duration=cfg.number("duration", 20.0),
    )
    # command-line flags win over config keys, which win over defaults
    epochs = ns.epochs if ns.epochs is not None else cfg.number("epochs", 30)
    if epochs != int(epochs):
        raise ValidationError("epochs must be an integer")
    config = TrainConfig(
        epochs=int(epochs),
        learning_rate=ns.learning_rate if ns.learning_rate is not None else cfg.number("learning_rate", 0.02),
        holdout=ns.holdout if ns.holdout is not None else cfg.number("holdout", 0.2),
        seed=ns.seed,
    )
    datasets = control_fuzzy.generate_training_data(battery, cfg.params, dt=cfg.number("dt", 0.01))
    results = control_fuzzy.train_controllers(datasets, config)
    names = []
    rows = ["model,epoch,train_rmse,holdout_rmse,post_premise_rmse,step_size"]
    for key, res in results.items():
        control_fuzzy.save_model(res.model, out / f"{key}.fis")
        names.append(f"{key}.fis")
        for i, r in enumerate(res.rmse_history):
            hold = f"{res.holdout_history[i]:.9g}" if res.holdout_history else ""
            rows.append(f"{key},{i + 1},{r:.9g},{hold},{res.premise_history[i]:.9g},{res.step_sizes[i]:.9g}")
        std = float(np.std(datasets[key].u))
        print(f"{key}: {len(datasets[key])} rows, final rmse {res.final_rmse:.3g} (teacher output std {std:.3g})")
    atomic_write_text(out / "rmse_history.csv", "\n".join(rows) + "\n")
    names.append("rmse_history.csv")
    return names


def cmd_compare(ns, cfg: RunConfig, out: Path) -> list[str]:
    from . import plots

    traces = []
    for p in (ns.trace_a, ns.trace_b):
        if not os.path.isfile(p):
            raise CommandError(f"trace file not found: {p}", EXIT_MISSING)
        traces.append(experiments.SimTrace.read_csv(p))
    report = experiments.compare_controllers(traces[0], traces[1], tuple(ns.labels))
    atomic_write_text(out / "report.txt", report.to_text())
    atomic_write_text(out / "report.csv", report.to_csv())
    names = ["report.txt", "report.csv"]
    t = traces[0].t
    for axis in experiments.AXES:
        scale = experiments.display_scale(axis)
        unit = "deg" if axis in experiments.ANGLE_AXES else "m"
        plots.multi_line(
            out / f"overlay_{axis}.svg",
            t,
            [(label, tr.axis(axis) * scale) for label, tr in zip(ns.labels, traces)],
            f"{axis} [{unit}]",
        )
        names.append(f"overlay_{axis}.svg")
    print(report.to_text(), end="")
    return names


def cmd_estimate_inertia(ns, cfg: RunConfig, out: Path) -> list[str]:
    if not os.path.isfile(ns.measurements):
        raise CommandError(f"measurement file not found: {ns.measurements}", EXIT_INPUT)
    meas = load_bifilar(ns.measurements)
    configured = {"x": cfg.params.ixx, "y": cfg.params.iyy, "z": cfg.params.izz}
    lines = [f"{'axis':<5} {'period_s':>9} {'inertia_kgm2':>13} {'configured':>11} {'deviation%':>11}"]
    for axis, m in meas.items():
        value = bifilar_inertia(m)
        dev = (value - configured[axis]) / configured[axis] * 100.0
        lines.append(f"I{axis}{'':<3} {m.period:9.4f} {value:13.4e} {configured[axis]:11.4e} {dev:+11.2f}")
    text = "\n".join(lines) + "\n"
    atomic_write_text(out / "inertia.txt", text)
    print(text, end="")
    return ["inertia.txt"]


COMMANDS = {
    "open-loop": cmd_open_loop,
    "closed-loop": cmd_closed_loop,
    "train-anfis": cmd_train_anfis,
    "compare": cmd_compare,
    "estimate-inertia": cmd_estimate_inertia,
}

INPUT_ARGS = {
    "compare": ("trace_a", "trace_b"),
    "estimate-inertia": ("measurements",),
    "closed-loop": ("models", "altitude_model", "attitude_model"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadsim", description="Quadcopter simulation, PD and fuzzy control.")
    parser.add_argument("--version", action="version", version=f"quadsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help=f"key = value config file (default: ${CONFIG_ENV} or built-in values)")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=42, help="seed for all randomness (default: 42)")
        return p

    common(sub.add_parser("open-loop", help="8 s open-loop excitation"))

    p = common(sub.add_parser("closed-loop", help="hover regulation with PD or fuzzy control"))
    p.add_argument("--controller", choices=("pd", "fuzzy"), default="pd")
    p.add_argument("--case", choices=(*experiments.CASES, "custom"), default="nominal")
    p.add_argument("--models", help="directory holding altitude.fis and attitude.fis")
    p.add_argument("--altitude-model")
    p.add_argument("--attitude-model")

    p = common(sub.add_parser("train-anfis", help="train fuzzy controllers on PD teacher data"))
    p.add_argument("--epochs", type=int, help="training epochs (default 30)")
    p.add_argument("--learning-rate", type=float, help="initial premise step size (default 0.02)")
    p.add_argument("--holdout", type=float, help="holdout fraction (default 0.2)")

    p = common(sub.add_parser("compare", help="compare two closed-loop traces"))
    p.add_argument("trace_a", help="baseline trace CSV")
    p.add_argument("trace_b", help="candidate trace CSV")
    p.add_argument("--labels", nargs=2, default=["pd", "fuzzy"], metavar=("A", "B"))

    p = common(sub.add_parser("estimate-inertia", help="bifilar-pendulum inertia estimate"))
    p.add_argument("measurements", help="measurement file (times_x, times_y, times_z, n_osc, d, L, ...)")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="output directory (default: the manifest's directory)")
    return parser


def _strip_out(argv: list[str]) -> list[str]:
    """Drop ``--out``/``--config`` from an argv list; the manifest records both separately."""
    kept, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok in ("--out", "--config"):
            skip = True
            continue
        if tok.startswith("--out=") or tok.startswith("--config="):
            continue
        kept.append(tok)
    return kept


def execute(ns, cfg: RunConfig, argv: list[str]) -> int:
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = COMMANDS[ns.command](ns, cfg, out)
    keys = SCENARIO_KEYS + (TRAIN_KEYS if ns.command == "train-anfis" else ())
    inputs = [str(getattr(ns, a)) for a in INPUT_ARGS.get(ns.command, ()) if getattr(ns, a, None)]
    write_manifest(out, ns.command, _strip_out(argv), ns.seed, cfg.snapshot(keys), outputs, inputs)
    return EXIT_OK


def replay(ns, parser) -> int:
    path = Path(ns.manifest)
    if not path.is_file():
        raise CommandError(f"manifest not found: {path}", EXIT_MISSING)
    raw = read_keyvalue(path)
    if "argv" not in raw:
        raise ParseError("manifest has no argv entry", None, str(path))
    argv = shlex.split(raw["argv"])
    snap = {k[len("config."):]: v for k, v in raw.items() if k.startswith("config.")}
    inner = parser.parse_args(argv)
    inner.out = ns.out or str(path.parent)
    return execute(inner, RunConfig(snap, source=str(path)), argv)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.command == "replay":
            return replay(ns, parser)
        cfg = load_config(ns.config)
        return execute(ns, cfg, argv)
    except CommandError as exc:
        print(f"quadsim: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, ValidationError, OutOfWindow, InvalidRange) as exc:
        print(f"quadsim: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SingularLSQ as exc:
        print(f"quadsim: {exc}; the teacher battery lacks data diversity, widen the teacher grid", file=sys.stderr)
        return EXIT_NUMERIC
    except (SingularAttitude, DegenerateFiring, ScenarioDiverged) as exc:
        print(f"quadsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
