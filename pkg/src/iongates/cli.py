"""Command-line front end.

Usage::

    iongates {dressed|scan|truth-table|error-table|converge|sweep} [--config PATH] [--out DIR] [--dry-run]

The config file is TOML restricted to flat dotted keys (``system.nbar = 0.1``)
or the equivalent ``[system]`` tables.  Frequencies are Omega/(2 pi) in Hz,
rates in 1/s and times in s.  Every key is optional; see ``SCHEMA``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .analytics import table_s1
from .dynamics import IntegrationError, IntegratorConfig, convergence_check
from .gates import (
    GATE_KINDS,
    LOGICAL_INPUTS,
    PAPER_PROBE_DURATION,
    GateSpec,
    build_sequence,
    cooling_scan,
    gate_params,
    pair_str,
    probe_scan,
    spread_truth_table,
)
from .model import TWO_PI, SystemParams
from .operators import Level, TruncationError
from .spectral import dressed_spectrum, excited_subspace, resonance_offsets, resonances_to_dict, spectrum_to_dict

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE = 0, 2, 3
COMMANDS = ("dressed", "scan", "truth-table", "error-table", "converge", "sweep")
INPUT_NAMES = tuple(pair_str(p) for p in LOGICAL_INPUTS)
OBJECTIVES = ("average_fidelity",) + tuple(f"success_{i}" for i in INPUT_NAMES)


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _any(v):
    return True


@dataclass(frozen=True)
class Key:
    kind: type  # float, int, bool, str or list
    default: object
    check: object = _any  # predicate on the value (not applied to "auto")
    rule: str = ""
    auto: bool = False  # whether the string "auto" is accepted
    choices: tuple = ()


SCHEMA: dict[str, Key] = {
    "system.omega_f_hz": Key(float, 1.15e3, _positive, "> 0"),
    "system.omega_sb_hz": Key(float, 8.0e3, _positive, "> 0"),
    "system.delta_mode_hz": Key(float, 0.0),
    "system.nbar": Key(float, 0.14, _nonneg, ">= 0"),
    "system.heating_rate": Key(float, 106.0, _nonneg, ">= 0"),
    "system.gamma_f": Key(float, 4.5e3, _nonneg, ">= 0"),
    "system.gamma_f_units": Key(str, "per_second", choices=("per_second", "angular_hz")),
    "system.gamma_e": Key(float, 1.0e5, _nonneg, ">= 0"),
    "system.fock_cutoff": Key(int, 5, lambda v: v >= 1, ">= 1"),
    "gate.kind": Key(str, "OR", choices=GATE_KINDS),
    "gate.probe_duration": Key(float, "paper", _positive, "> 0", auto=True, choices=("paper",)),
    "gate.probe_detuning_hz": Key(float, "auto", auto=True),
    "gate.dissipation_duration": Key(float, 1e-3, _positive, "> 0"),
    "gate.pump_duration": Key(float, "auto", _positive, "> 0", auto=True),
    "gate.readout_merge": Key(bool, True),
    "gate.init_error": Key(float, 0.0, lambda v: 0 <= v < 1, "in [0, 1)"),
    "gate.spread_sigma": Key(float, 0.04, _nonneg, ">= 0"),
    "gate.spread_nodes": Key(int, 7, lambda v: v >= 1, ">= 1"),
    "integrator.rel_tol": Key(float, 1e-8, _positive, "> 0"),
    "integrator.abs_tol": Key(float, 1e-10, _positive, "> 0"),
    "integrator.max_step": Key(float, "auto", _positive, "> 0", auto=True),
    "integrator.method": Key(str, "DOP853", choices=("DOP853", "RK45", "RK23")),
    "integrator.samples": Key(int, 200, lambda v: v >= 2, ">= 2"),
    "integrator.check_state": Key(bool, True),
    "scan.kind": Key(str, "probe", choices=("probe", "cooling")),
    "scan.t_max": Key(float, "auto", _positive, "> 0", auto=True),
    "scan.points": Key(int, 121, lambda v: v >= 2, ">= 2"),
    "converge.input": Key(str, "01", choices=INPUT_NAMES),
    "converge.cutoffs": Key(list, [4, 5, 6]),
    "converge.tol": Key(float, 1e-4, _positive, "> 0"),
    "sweep.objective": Key(str, "average_fidelity", choices=OBJECTIVES),
    "sweep.inputs": Key(list, list(INPUT_NAMES)),
    "sweep.axis1_name": Key(str, "system.heating_rate"),
    "sweep.axis1_min": Key(float, 0.0),
    "sweep.axis1_max": Key(float, 200.0),
    "sweep.axis1_points": Key(int, 5, lambda v: v >= 1, ">= 1"),
    "sweep.axis1_scale": Key(str, "linear", choices=("linear", "log")),
    "sweep.axis2_name": Key(str, ""),
    "sweep.axis2_min": Key(float, 0.0),
    "sweep.axis2_max": Key(float, 0.0),
    "sweep.axis2_points": Key(int, 1, lambda v: v >= 1, ">= 1"),
    "sweep.axis2_scale": Key(str, "linear", choices=("linear", "log")),
    "sweep.max_points": Key(int, 441, lambda v: v >= 1, ">= 1"),
    "sweep.cache": Key(bool, True),
    "output.dir": Key(str, "results"),
}

SWEEPABLE = tuple(k for k, spec in SCHEMA.items() if spec.kind is float and k.startswith(("system.", "gate.")))
INTEGER_SWEEPABLE = ("system.fock_cutoff", "gate.spread_nodes")


def _defaults() -> dict:
    return {k: list(s.default) if isinstance(s.default, list) else s.default for k, s in SCHEMA.items()}


def _coerce(key: str, value):
    spec = SCHEMA[key]
    if isinstance(value, str) and (value == "auto" and spec.auto or value in spec.choices and spec.kind is not str):
        return value
    if spec.kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{key}: must be finite, got {value}")
    elif spec.kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
    elif spec.kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {value!r}")
    elif spec.kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        if key == "gate.kind":
            value = value.upper()
        if spec.choices and value not in spec.choices:
            raise ConfigError(f"{key}: must be one of {', '.join(spec.choices)}, got {value!r}")
    elif spec.kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected an array, got {value!r}")
        value = list(value)
    if spec.kind is not list and not spec.check(value):
        raise ConfigError(f"{key}: must be {spec.rule}, got {value!r}")
    return value


def _flatten(doc: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in doc.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, name + "."))
        else:
            flat[name] = v
    return flat


@dataclass(frozen=True, eq=True)
class RunConfig:
    """Validated configuration; ``values`` holds every schema key."""

    values: dict = field(default_factory=lambda: _defaults())

    def __getitem__(self, key: str):
        return self.values[key]

    def with_value(self, key: str, value) -> "RunConfig":
        return validate({**self.values, key: value})

    # Derived objects -----------------------------------------------------
    def system_params(self) -> SystemParams:
        v = self.values
        gamma_f = v["system.gamma_f"] * (TWO_PI if v["system.gamma_f_units"] == "angular_hz" else 1.0)
        return SystemParams.from_hz(
            omega_f_hz=v["system.omega_f_hz"],
            omega_sb_hz=v["system.omega_sb_hz"],
            delta_mode_hz=v["system.delta_mode_hz"],
            gamma_f=gamma_f,
            gamma_e=v["system.gamma_e"],
            nbar=v["system.nbar"],
            heating_rate=v["system.heating_rate"],
            fock_cutoff=v["system.fock_cutoff"],
        )

    def gate_spec(self) -> GateSpec:
        v = self.values
        kind = v["gate.kind"]
        duration = v["gate.probe_duration"]
        if duration == "paper":
            duration = PAPER_PROBE_DURATION[kind]
        elif duration == "auto":
            duration = None
        detuning = v["gate.probe_detuning_hz"]
        return GateSpec(
            kind,
            probe_duration=duration,
            dissipation_duration=v["gate.dissipation_duration"],
            pump_duration=None if v["gate.pump_duration"] == "auto" else v["gate.pump_duration"],
            detuning=None if detuning == "auto" else TWO_PI * detuning,
        )

    def integrator(self) -> IntegratorConfig:
        v = self.values
        return IntegratorConfig(
            rel_tol=v["integrator.rel_tol"],
            abs_tol=v["integrator.abs_tol"],
            max_step=None if v["integrator.max_step"] == "auto" else v["integrator.max_step"],
            method=v["integrator.method"],
            samples=v["integrator.samples"],
            check_state=v["integrator.check_state"],
        )

    def sweep_axes(self) -> list[tuple[str, np.ndarray]]:
        axes = []
        for a in ("axis1", "axis2"):
            name = self.values[f"sweep.{a}_name"]
            if not name:
                continue
            lo, hi, n = (self.values[f"sweep.{a}_{x}"] for x in ("min", "max", "points"))
            if self.values[f"sweep.{a}_scale"] == "log":
                grid = np.geomspace(lo, hi, n)
            else:
                grid = np.linspace(lo, hi, n)
            if name in INTEGER_SWEEPABLE:
                grid = np.round(grid).astype(int)
            axes.append((name, grid))
        return axes


def validate(values: dict) -> RunConfig:
    unknown = sorted(set(values) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    out = _defaults()
    for k, v in values.items():
        out[k] = _coerce(k, v)
    cutoffs = out["converge.cutoffs"]
    if not cutoffs or not all(isinstance(c, int) and not isinstance(c, bool) and c >= 1 for c in cutoffs):
        raise ConfigError(f"converge.cutoffs: expected a non-empty array of integers >= 1, got {cutoffs!r}")
    inputs = out["sweep.inputs"]
    if not inputs or any(i not in INPUT_NAMES for i in inputs) or len(set(inputs)) != len(inputs):
        raise ConfigError(f"sweep.inputs: expected distinct entries from {', '.join(INPUT_NAMES)}, got {inputs!r}")
    objective = out["sweep.objective"]
    if objective.startswith("success_") and objective[len("success_"):] not in inputs:
        raise ConfigError(f"sweep.objective {objective!r} needs its input listed in sweep.inputs")
    for a in ("axis1", "axis2"):
        name = out[f"sweep.{a}_name"]
        if not name:
            if a == "axis1":
                raise ConfigError("sweep.axis1_name must name a parameter")
            continue
        if name not in SWEEPABLE + INTEGER_SWEEPABLE:
            raise ConfigError(f"sweep.{a}_name: unknown sweep parameter {name!r}; choose from {', '.join(SWEEPABLE + INTEGER_SWEEPABLE)}")
        lo, hi, n = (out[f"sweep.{a}_{x}"] for x in ("min", "max", "points"))
        if hi < lo:
            raise ConfigError(f"sweep.{a}: max must be >= min")
        if n < 2 and lo != hi:
            raise ConfigError(f"sweep.{a}_points must be >= 2 unless min == max")
        if out[f"sweep.{a}_scale"] == "log" and lo <= 0:
            raise ConfigError(f"sweep.{a}: log scale needs min > 0")
    if out["sweep.axis2_name"] and out["sweep.axis2_name"] == out["sweep.axis1_name"]:
        raise ConfigError("sweep axes must name different parameters")
    return RunConfig(out)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML config document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    return validate(_flatten(doc))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(type(v))


def serialize_config(config: RunConfig) -> str:
    return "".join(f"{k} = {_toml_value(v)}\n" for k, v in config.values.items())


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


# Serialization ---------------------------------------------------------------

def to_jsonable(obj):
    """Convert to plain JSON types with floats at 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.12g}")
    return obj


def dump_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2) + "\n"


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(obj))


def params_echo(config: RunConfig) -> dict:
    return {"version": __version__, "config": dict(config.values)}


# Subcommands -----------------------------------------------------------------

def _input_states() -> list[tuple]:
    # Only inputs with ion 1 in |0> are addressed by the probe.
    return [(Level(a), Level(b), n) for a, b in LOGICAL_INPUTS if a == 0 for n in (0, 1)]


def cmd_dressed(config: RunConfig, out: Path, dry_run: bool = False) -> int:
    if dry_run:
        print(f"dressed: diagonalize probe subspaces of {len(_input_states())} initial states at the "
              f"{config['gate.kind']} detuning; write {out / 'dressed.json'}")
        return EXIT_OK
    params = gate_params(config.gate_spec(), config.system_params())
    entries = []
    for init in _input_states():
        sub = excited_subspace(init, params)
        if len(sub) == 0:
            continue
        entry = spectrum_to_dict(sub, dressed_spectrum(sub))
        bare = float(np.trace(sub.hamiltonian).real) / len(sub) / TWO_PI
        entry["shifts_Hz"] = [e - bare for e in entry["eigenvalues_Hz"]]
        entry["resonances"] = resonances_to_dict(resonance_offsets(init, params))
        entries.append(entry)
        shifts = ", ".join(f"{e:+.1f}" for e in entry["shifts_Hz"])
        print(f"{entry['initial']:>9}: {len(sub)} dressed states, shifts from bare energy [Hz] {shifts}")
    write_json(out / "dressed.json", {"params_echo": params_echo(config),
                                      "probe_detuning_Hz": params.delta_probe / TWO_PI, "subspaces": entries})
    return EXIT_OK


def _scan_grid(config: RunConfig, spec: GateSpec, params: SystemParams) -> np.ndarray:
    t_max = config["scan.t_max"]
    if t_max == "auto":
        t_max = spec.probe_time(params) if config["scan.kind"] == "probe" else spec.dissipation_duration
    return np.linspace(0.0, t_max, config["scan.points"])


def cmd_scan(config: RunConfig, out: Path, dry_run: bool = False) -> int:
    spec, params, cfg = config.gate_spec(), config.system_params(), config.integrator()
    grid = _scan_grid(config, spec, params)
    kind = config["scan.kind"]
    if dry_run:
        n = len(LOGICAL_INPUTS) if kind == "probe" else 1
        print(f"scan ({kind}): {n} trajectories to t={grid[-1]:.6g} s with {len(grid)} samples; "
              f"detuning {spec.probe_detuning(params) / TWO_PI:.6g} Hz; write {out}")
        return EXIT_OK
    out.mkdir(parents=True, exist_ok=True)
    if kind == "probe":
        result = probe_scan(spec, params, cfg, grid, readout_merge=config["gate.readout_merge"])
        names = list(result.remaining)
        with open(out / "probe_scan.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s"] + [f"remaining_{n}" for n in names])
            for i, t in enumerate(grid):
                w.writerow([f"{t:.12g}"] + [f"{result.remaining[n][i]:.12g}" for n in names])
        for name, traj in result.trajectories.items():
            traj.to_csv(out / f"probe_trajectory_{name}.csv")
        depletion = {n: 1.0 - float(result.remaining[n][-1]) for n in names}
        summary = {"kind": "probe", "t_end_s": grid[-1], "depletion_at_end": depletion}
        for n in names:
            print(f"|{n}>: depletion {100 * depletion[n]:.1f}% at t = {1e6 * grid[-1]:.0f} us")
    else:
        result = cooling_scan(params, cfg, grid, probe_duration=spec.probe_time(params),
                              detuning=spec.probe_detuning(params))
        with open(out / "cooling_scan.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s", "P_f0", "P_10", "P_10_n0", "ground_frac"])
            for row in zip(grid, result.p_f0, result.p_10, result.p_10_ground, result.ground_frac):
                w.writerow([f"{x:.12g}" for x in row])
        result.trajectory.to_csv(out / "cooling_trajectory.csv")
        summary = {"kind": "cooling", "t_end_s": grid[-1], "P_10_n0_at_end": result.p_10_ground[-1],
                   "P_10_at_end": result.p_10[-1], "P_f0_at_end": result.p_f0[-1]}
        print(f"after {1e6 * grid[-1]:.0f} us: |10>|0> = {result.p_10_ground[-1]:.3f}, "
              f"|10> = {result.p_10[-1]:.3f}, |f0> = {result.p_f0[-1]:.3f}")
    write_json(out / "scan.json", {"params_echo": params_echo(config), **summary})
    return EXIT_OK


def _truth_table(config: RunConfig, inputs=LOGICAL_INPUTS):
    return spread_truth_table(
        config.gate_spec(), config.system_params(), config.integrator(),
        sigma_frac=config["gate.spread_sigma"], nodes=config["gate.spread_nodes"], inputs=inputs,
        readout_merge=config["gate.readout_merge"], init_error=config["gate.init_error"],
    )


def _node_count(config: RunConfig) -> int:
    return 1 if config["gate.spread_sigma"] == 0 else config["gate.spread_nodes"]


def cmd_truth_table(config: RunConfig, out: Path, dry_run: bool = False) -> int:
    if dry_run:
        print(f"truth-table ({config['gate.kind']}): {4 * _node_count(config)} gate simulations "
              f"({_node_count(config)} spread nodes); write {out / 'truth_table.json'}")
        return EXIT_OK
    tt = _truth_table(config)
    data = tt.to_dict(params_echo(config))
    data["hygiene"] = tt.hygiene
    write_json(out / "truth_table.json", data)
    print(f"{tt.kind} truth table (rows: input, columns: output {' '.join(tt.outputs)})")
    for name, row in tt.rows.items():
        print(f"  {name}: " + " ".join(f"{100 * p:5.1f}" for p in row.values()))
    print(f"average fidelity {100 * tt.average_fidelity:.1f}%")
    return EXIT_OK


def cmd_error_table(config: RunConfig, out: Path, dry_run: bool = False) -> int:
    if config["gate.kind"] != "OR":
        raise ConfigError("error-table describes the OR gate; set gate.kind = \"OR\"")
    if dry_run:
        print(f"error-table: closed-form branches plus {2 * _node_count(config)} OR gate simulations; "
              f"write {out / 'error_table.json'}")
        return EXIT_OK
    report = table_s1(config.system_params(), config.integrator(), config.gate_spec(),
                      sigma_frac=config["gate.spread_sigma"], numeric_nodes=config["gate.spread_nodes"])
    write_json(out / "error_table.json", report.to_dict(params_echo(config)))
    print(report.format_table())
    return EXIT_OK


def cmd_converge(config: RunConfig, out: Path, dry_run: bool = False) -> int:
    cutoffs = config["converge.cutoffs"]
    if dry_run:
        print(f"converge: {config['gate.kind']} sequence from |{config['converge.input']}> at cutoffs "
              f"{cutoffs}; write {out / 'converge.json'}")
        return EXIT_OK
    spec, params = config.gate_spec(), config.system_params()
    p = gate_params(spec, params)
    pair = tuple(int(c) for c in config["converge.input"])
    report = convergence_check(pair, build_sequence(spec, p), p, config.integrator(), cutoffs,
                               config["converge.tol"], merge=config["gate.readout_merge"])
    write_json(out / "converge.json", {"params_echo": params_echo(config), **report.to_dict()})
    for c, d in zip(cutoffs[1:], report.differences):
        print(f"n_max {c}: max population change {d:.3g}")
    print("converged" if report.passed else "not converged")
    return EXIT_OK


@dataclass
class SweepResult:
    axes: list  # [(name, values)]
    objective_name: str
    objective: np.ndarray  # shape (len(axis1), len(axis2) or 1)
    rows: list  # per point: {"index", "values", "success", "objective"}

    @property
    def argmax(self) -> dict:
        # np.argmax returns the first maximum in C order, i.e. the smallest axis values.
        flat = int(np.argmax(self.objective))
        idx = np.unravel_index(flat, self.objective.shape)
        return {
            "index": [int(i) for i in idx[: len(self.axes)]],
            "values": {name: vals[i] for (name, vals), i in zip(self.axes, idx)},
            "objective": float(self.objective[idx]),
        }

    def to_dict(self, echo: dict) -> dict:
        return {
            "params_echo": echo,
            "objective_name": self.objective_name,
            "axes": [{"name": n, "values": v} for n, v in self.axes],
            "objective": self.objective,
            "argmax": self.argmax,
            "points": self.rows,
        }


def _point_config(config: RunConfig, assignment: dict) -> RunConfig:
    values = dict(config.values)
    values.update(assignment)
    return validate(values)


def _evaluate_point(config: RunConfig) -> dict:
    inputs = tuple(tuple(int(c) for c in name) for name in config["sweep.inputs"])
    tt = _truth_table(config, inputs)
    return {"success": tt.success, "rows": tt.rows, "hygiene": tt.hygiene}


def _objective(name: str, success: dict) -> float:
    if name == "average_fidelity":
        return float(np.mean(list(success.values())))
    return float(success[name[len("success_"):]])


def run_sweep(config: RunConfig, cache_dir: Path | None = None, progress=None) -> SweepResult:
    axes = config.sweep_axes()
    shape = tuple(len(v) for _, v in axes) + ((1,) if len(axes) == 1 else ())
    objective = np.empty(shape)
    rows = []
    for index in np.ndindex(*shape[: len(axes)]):
        assignment = {name: vals[i].item() for (name, vals), i in zip(axes, index)}
        point_cfg = _point_config(config, assignment)
        key = hashlib.sha256(serialize_config(point_cfg).encode()).hexdigest()[:16]
        cache = cache_dir / f"point_{key}.json" if cache_dir is not None else None
        if cache is not None and cache.exists():
            result = json.loads(cache.read_text())
        else:
            result = to_jsonable(_evaluate_point(point_cfg))
            if cache is not None:
                write_json(cache, result)
        value = _objective(config["sweep.objective"], result["success"])
        objective[index if len(axes) == 2 else (index[0], 0)] = value
        rows.append({"index": list(index), "values": assignment, "success": result["success"], "objective": value,
                     "hygiene": result.get("hygiene", {})})
        if progress is not None:
            progress(index, assignment, value)
    if not np.all(np.isfinite(objective)):
        raise RuntimeError("sweep objective is not finite")
    return SweepResult(axes, config["sweep.objective"], objective, rows)


def cmd_sweep(config: RunConfig, out: Path, dry_run: bool = False) -> int:
    axes = config.sweep_axes()
    n_points = int(np.prod([len(v) for _, v in axes]))
    if n_points > config["sweep.max_points"]:
        raise ConfigError(f"sweep has {n_points} points, above sweep.max_points = {config['sweep.max_points']}")
    if dry_run:
        desc = " x ".join(f"{name}[{len(v)}]" for name, v in axes)
        sims = n_points * len(config["sweep.inputs"]) * _node_count(config)
        print(f"sweep: {desc} = {n_points} points, {sims} gate simulations, objective "
              f"{config['sweep.objective']}; write {out / 'sweep.json'}")
        return EXIT_OK

    def progress(index, assignment, value):
        desc = ", ".join(f"{k}={v:.6g}" for k, v in assignment.items())
        print(f"  point {list(index)}: {desc} -> {value:.4f}")

    cache_dir = out / "sweep_cache" if config["sweep.cache"] else None
    result = run_sweep(config, cache_dir, progress)
    write_json(out / "sweep.json", result.to_dict(params_echo(config)))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([name for name, _ in axes] + ["objective"])
        for row in result.rows:
            w.writerow([f"{v:.12g}" for v in row["values"].values()] + [f"{row['objective']:.12g}"])
    best = result.argmax
    print("argmax: " + ", ".join(f"{k}={v:.6g}" for k, v in best["values"].items()) + f" -> {best['objective']:.4f}")
    return EXIT_OK


HANDLERS = {
    "dressed": cmd_dressed,
    "scan": cmd_scan,
    "truth-table": cmd_truth_table,
    "error-table": cmd_error_table,
    "converge": cmd_converge,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iongates", description="Dissipative two-ion logic gate simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="TOML config file (defaults for every key if omitted)")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides output.dir)")
        p.add_argument("--dry-run", action="store_true", help="validate the config and print the plan only")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out = args.out if args.out is not None else Path(config["output.dir"])
        return HANDLERS[args.command](config, out, args.dry_run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, TruncationError, ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
