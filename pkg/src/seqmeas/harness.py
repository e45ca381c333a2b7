"""Experiment configuration, parameter sweeps and report files.

A config is a YAML mapping, for example::

    scenarios: [one, two]
    lattice: {n_points: 1024, window: [-12, 12]}
    states:
      - {kind: gaussian, sigma: 1.0}
      - {kind: random, count: 10, seed: 7}
    f: {shape: gaussian, widths: [0.05, 0.2, 1.0]}
    orders: [1.25, 2.0]
    bins: [null, {zeta: 0.05, xi: 0.05}]
    families: [renyi, tsallis]

``g`` defaults to the same profile as ``f``. Each ``bins`` entry is ``null``
(differential entropies) or uniform widths / explicit marks for both variables.
Tsallis rows are produced only for binned entries.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
import yaml

from .conjugate_limit import LimitSchedule, limit_study
from .detector import gaussian_profile, tophat_profile
from .entropy import BinSpec, EntropyOrderPair
from .exceptions import CoverageError, NegligibleWeightError, SeqMeasError, WindowError
from .lattice import Lattice, make_gaussian, make_mixture, make_superposition
from .scenarios import bound_constant, kappa, prepare_preparation, prepare_scenario_one, prepare_scenario_two

log = logging.getLogger("seqmeas")

FORMAT_VERSION = 1
THREADS_ENV = "SEQMEAS_THREADS"

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_COVERAGE = 3

COLUMNS = [
    "row", "scenario", "state", "f_shape", "f_width", "g_shape", "g_width", "alpha", "beta",
    "family", "bound_family", "zeta_bin", "xi_bin", "first", "second", "total", "bound", "margin",
    "min_pointwise_margin", "discarded_mass", "budget", "d", "pb_deviation", "pb_residual", "status",
]

_profile_schema = {
    "type": "object",
    "properties": {
        "shape": {"enum": ["gaussian", "tophat"]},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "widths": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
    },
    "required": ["shape"],
    "oneOf": [{"required": ["width"]}, {"required": ["widths"]}],
    "additionalProperties": False,
}

_component = {"type": "array", "minItems": 4, "maxItems": 4, "items": {"type": "number"}}

_state_schema = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["gaussian", "gaussian-mixture", "superposition", "random"]},
        "name": {"type": "string"},
        "y0": {"type": "number"},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "p0": {"type": "number"},
        "components": {"type": "array", "minItems": 1, "items": _component},
        "count": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "max_components": {"type": "integer", "minimum": 1},
        "center_range": {"type": "number", "minimum": 0},
        "sigma_range": {"type": "array", "minItems": 2, "maxItems": 2,
                        "items": {"type": "number", "exclusiveMinimum": 0}},
        "p0_range": {"type": "number", "minimum": 0},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_bins_schema = {
    "oneOf": [
        {"type": "null"},
        {
            "type": "object",
            "properties": {
                "zeta": {"type": "number", "exclusiveMinimum": 0},
                "xi": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["zeta", "xi"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "zeta_marks": {"type": "array", "minItems": 2, "items": {"type": "number"}},
                "xi_marks": {"type": "array", "minItems": 2, "items": {"type": "number"}},
            },
            "required": ["zeta_marks", "xi_marks"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "scenarios": {"type": "array", "minItems": 1,
                      "items": {"enum": ["prep", "one", "two", "pegg-barnett"]}},
        "lattice": {
            "type": "object",
            "properties": {
                "n_points": {"type": "integer", "minimum": 8},
                "window": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
            },
            "required": ["n_points", "window"],
            "additionalProperties": False,
        },
        "states": {"type": "array", "minItems": 1, "items": _state_schema},
        "f": _profile_schema,
        "g": _profile_schema,
        "orders": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "bins": {"type": "array", "minItems": 1, "items": _bins_schema},
        "families": {"type": "array", "minItems": 1, "items": {"enum": ["renyi", "tsallis"]}},
        "bound_family": {"enum": ["general", "xp"]},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "coverage_tol": {"type": "number", "exclusiveMinimum": 0},
        "zeta_stride": {"type": "integer", "minimum": 1},
        "pegg_barnett": {
            "type": "object",
            "properties": {
                "dims": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
                "theta": {"type": "number"},
                "c": {"type": "number", "exclusiveMinimum": 0},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["dims"],
            "additionalProperties": False,
        },
    },
    "required": ["scenarios"],
    "additionalProperties": False,
}

DEFAULTS = {
    "orders": [1.0],
    "bins": [None],
    "families": ["renyi"],
    "bound_family": "general",
    "tolerance": 1e-3,
    "coverage_tol": 1e-8,
    "zeta_stride": 1,
}


class ConfigError(ValueError):
    """Raised with one message per validation failure."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# -- config --------------------------------------------------------------------


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"YAML parse error: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a mapping"])
    return raw


def _widths(spec) -> list:
    return list(spec["widths"]) if "widths" in spec else [spec["width"]]


def _profile(shape: str, width: float):
    return gaussian_profile(width) if shape == "gaussian" else tophat_profile(width)


def validate_config(raw: dict) -> dict:
    """Schema and consistency checks; returns the config with defaults filled in."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    problems = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}"
                for e in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))]
    if problems:
        raise ConfigError(problems)
    cfg = {**DEFAULTS, **raw}
    scenarios = cfg["scenarios"]
    physical = [s for s in scenarios if s != "pegg-barnett"]
    if physical:
        for key in ("lattice", "states", "f"):
            if key not in cfg:
                problems.append(f"{key}: required for scenarios {physical}")
    if "pegg-barnett" in scenarios and "pegg_barnett" not in cfg:
        problems.append("pegg_barnett: required for the pegg-barnett scenario")
    for a in cfg["orders"]:
        if not a > 0.5:
            problems.append(f"orders: alpha = {a} gives a non-positive beta (1/beta = 2 - 1/alpha)")
    binned = [b for b in cfg["bins"] if b is not None]
    if "tsallis" in cfg["families"] and not binned:
        problems.append("families: Tsallis entropies need at least one binned entry in bins")
    for b in binned:
        if "zeta_marks" in b:
            for key in ("zeta_marks", "xi_marks"):
                if any(v >= w for v, w in zip(b[key], b[key][1:])):
                    problems.append(f"bins: {key} must be strictly increasing")
    if "lattice" in cfg:
        lo, hi = cfg["lattice"]["window"]
        if not hi > lo:
            problems.append("lattice: window must have hi > lo")
        elif "f" in cfg and "two" in scenarios:
            dy = (hi - lo) / cfg["lattice"]["n_points"]
            for w in _widths(cfg["f"]):
                if not _profile(cfg["f"]["shape"], w).resolves(dy):
                    problems.append(f"f: width {w} is not resolved by the lattice spacing {dy:.4g}")
    pb = cfg.get("pegg_barnett")
    if pb is not None and not 0.0 < pb.get("theta", 0.5) < 1.0:
        problems.append("pegg_barnett: theta must lie strictly between 0 and 1")
    if problems:
        raise ConfigError(problems)
    return cfg


def derived_quantities(cfg: dict) -> list:
    out = []
    for a in cfg["orders"]:
        pair = EntropyOrderPair.from_alpha(a)
        out.append({"alpha": pair.alpha, "beta": pair.beta, "mu": pair.mu, "kappa": kappa(pair)})
    return out


# -- states --------------------------------------------------------------------


@dataclass(frozen=True)
class StateSpec:
    label: str
    kind: str
    components: tuple


def _random_specs(spec: dict) -> list:
    rng = np.random.default_rng(spec.get("seed", 0))
    count = spec.get("count", 1)
    kmax = spec.get("max_components", 4)
    c_range = spec.get("center_range", 2.5)
    s_lo, s_hi = spec.get("sigma_range", [0.4, 1.0])
    p_range = spec.get("p0_range", 2.0)
    out = []
    for i in range(count):
        k = int(rng.integers(1, kmax + 1))
        mixture = bool(rng.integers(0, 2))
        comps = []
        for _ in range(k):
            y0 = float(rng.uniform(-c_range, c_range))
            sigma = float(rng.uniform(s_lo, s_hi))
            p0 = float(rng.uniform(-p_range, p_range))
            if mixture:
                weight = float(rng.uniform(0.1, 1.0))
            else:
                weight = complex(rng.normal(), rng.normal())
            comps.append((weight, y0, sigma, p0))
        kind = "gaussian-mixture" if mixture else "superposition"
        name = spec.get("name", "random")
        out.append(StateSpec(f"{name}[{i}]", kind, tuple(comps)))
    return out


def expand_states(cfg: dict) -> list:
    out = []
    for i, spec in enumerate(cfg["states"]):
        kind = spec["kind"]
        if kind == "random":
            out.extend(_random_specs(spec))
            continue
        label = spec.get("name", f"{kind}[{i}]")
        if kind == "gaussian":
            comps = ((1.0, spec.get("y0", 0.0), spec.get("sigma", 1.0), spec.get("p0", 0.0)),)
        else:
            if "components" not in spec:
                raise ConfigError([f"states/{i}: {kind} needs components [weight, y0, sigma, p0]"])
            comps = tuple(tuple(c) for c in spec["components"])
        out.append(StateSpec(label, kind, comps))
    return out


def build_state(spec: StateSpec, lattice: Lattice):
    if spec.kind == "gaussian":
        _, y0, sigma, p0 = spec.components[0]
        return make_gaussian(lattice, y0, sigma, p0)
    if spec.kind == "superposition":
        return make_superposition(lattice, spec.components)
    return make_mixture(lattice, spec.components)


# -- sweep ---------------------------------------------------------------------


@dataclass(frozen=True)
class Task:
    scenario: str
    state: Optional[StateSpec]
    f: tuple
    g: tuple


def _bin_specs(b, lattice: Lattice):
    if b is None:
        return None, None
    if "zeta" in b:
        return BinSpec.covering(lattice.y, b["zeta"]), BinSpec.covering(lattice.x, b["xi"])
    return BinSpec(b["zeta_marks"]), BinSpec(b["xi_marks"])


def plan_tasks(cfg: dict) -> list:
    tasks = []
    states = expand_states(cfg) if "states" in cfg else []
    for scenario in cfg["scenarios"]:
        if scenario == "pegg-barnett":
            tasks.append(Task(scenario, None, (), ()))
            continue
        f_shape = cfg["f"]["shape"]
        for state in states:
            for fw in _widths(cfg["f"]):
                if "g" in cfg:
                    g_list = [(cfg["g"]["shape"], gw) for gw in _widths(cfg["g"])]
                else:
                    g_list = [(f_shape, fw)]
                for g in g_list:
                    tasks.append(Task(scenario, state, (f_shape, fw), g))
    return tasks


def _fmt_bins(b):
    if b is None:
        return "", ""
    if "zeta" in b:
        return float(b["zeta"]), float(b["xi"])
    return "marks", "marks"


def run_task(task: Task, cfg: dict) -> list:
    """All rows of one (scenario, state, f, g) combination, or of the Pegg-Barnett study."""
    budget = cfg["tolerance"]
    t0 = time.perf_counter()
    if task.scenario == "pegg-barnett":
        pb = cfg["pegg_barnett"]
        schedule = LimitSchedule.from_dims(pb["dims"], pb.get("theta", 0.5), pb.get("c", 1.0))
        rows = []
        for r in limit_study(schedule, pb.get("sigma", 1.5), threads=1):
            ok = r.identity_residual <= 1e-10 and r.shift_deviation <= 1e-9
            rows.append({
                "scenario": task.scenario, "state": f"discrete-gaussian(sigma={pb.get('sigma', 1.5)})",
                "d": r.d, "pb_deviation": r.deviation, "pb_residual": r.identity_residual,
                "budget": budget, "status": "ok" if ok else "violation",
            })
        elapsed = (time.perf_counter() - t0) * 1e3
        for row in rows:
            row["runtime_ms"] = elapsed / len(rows)
        return rows
    lattice = Lattice(cfg["lattice"]["n_points"], *cfg["lattice"]["window"])
    state = build_state(task.state, lattice)
    f = _profile(*task.f)
    g = _profile(*task.g)
    if task.scenario == "one":
        data = prepare_scenario_one(state, f, g, cfg["coverage_tol"])
    elif task.scenario == "two":
        data = prepare_scenario_two(state, f, g, cfg["zeta_stride"])
    else:
        data = prepare_preparation(state, f, g, cfg["coverage_tol"])
    pairs = [EntropyOrderPair.from_alpha(a) for a in cfg["orders"]]
    bin_pairs = [_bin_specs(b, lattice) for b in cfg["bins"]]
    for pair in pairs:
        const = bound_constant(pair, cfg["bound_family"])
        for zb, xb in bin_pairs:
            if zb is not None and zb.max_width * xb.max_width >= const:
                msg = (f"bin cell {zb.max_width * xb.max_width:.4g} is not below the phase cell "
                       f"{const:.4g}; the binned bound is not positive")
                log.warning(msg)
                warnings.warn(msg, stacklevel=2)
    reports = iter(data.reports(pairs, cfg["families"], bin_pairs, cfg["bound_family"], budget))
    rows = []
    for pair in pairs:
        for b in cfg["bins"]:
            for family in cfg["families"]:
                if family == "tsallis" and b is None:
                    continue
                rep = next(reports)
                zeta_bin, xi_bin = _fmt_bins(b)
                rows.append({
                    "scenario": task.scenario, "state": task.state.label,
                    "f_shape": task.f[0], "f_width": task.f[1], "g_shape": task.g[0], "g_width": task.g[1],
                    "alpha": pair.alpha, "beta": pair.beta, "family": family,
                    "bound_family": cfg["bound_family"], "zeta_bin": zeta_bin, "xi_bin": xi_bin,
                    "first": rep.first, "second": rep.second, "total": rep.total, "bound": rep.bound,
                    "margin": rep.margin,
                    "min_pointwise_margin": "" if rep.min_pointwise_margin is None else rep.min_pointwise_margin,
                    "discarded_mass": rep.diagnostics["discarded_mass"],
                    "budget": budget, "status": "ok" if rep.holds else "violation",
                })
    elapsed = (time.perf_counter() - t0) * 1e3
    for row in rows:
        row["runtime_ms"] = elapsed / max(1, len(rows))
    return rows


@dataclass
class SweepResult:
    rows: list
    errors: list

    @property
    def violations(self) -> list:
        return [r for r in self.rows if r["status"] != "ok"]

    @property
    def exit_code(self) -> int:
        if self.errors:
            return EXIT_COVERAGE
        if self.violations:
            return EXIT_VIOLATION
        return EXIT_OK


def _guarded(task: Task, cfg: dict):
    try:
        return run_task(task, cfg), None
    except (CoverageError, WindowError, NegligibleWeightError) as exc:
        return [], (task, exc)


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(value)) if value else 1
    except ValueError:
        log.warning("ignoring %s=%r", THREADS_ENV, value)
        return 1


def run_sweep(cfg: dict, threads: Optional[int] = None) -> SweepResult:
    """Execute all tasks; rows come back in config order whatever the worker count."""
    threads = threads or default_threads()
    tasks = plan_tasks(cfg)
    log.info("running %d tasks on %d threads", len(tasks), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda t: _guarded(t, cfg), tasks))
    rows, errors = [], []
    for task_rows, err in results:
        rows.extend(task_rows)
        if err is not None:
            task, exc = err
            label = task.state.label if task.state else task.scenario
            log.error("coverage error in scenario %s, state %s, f=%s, g=%s: %s",
                      task.scenario, label, task.f, task.g, exc)
            errors.append({"scenario": task.scenario, "state": label, "f": list(task.f),
                           "g": list(task.g), "error": str(exc)})
    for i, row in enumerate(rows):
        row["row"] = i
    for row in rows:
        if row["status"] != "ok":
            log.warning("bound violated: %s", {k: row.get(k, "") for k in COLUMNS})
    return SweepResult(rows, errors)


# -- output --------------------------------------------------------------------


def _csv_value(v):
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError(f"refusing to emit non-finite value {v}")
        return f"{v:.9g}"
    return v


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# seqmeas results format {FORMAT_VERSION}; columns: {','.join(COLUMNS)}\n")
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_value(row.get(k, "")) for k in COLUMNS})
    return buf.getvalue()


def rows_to_json(result: SweepResult, cfg: dict, budget: float, threads: int) -> str:
    from . import __version__, kernels

    meta = {
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
        "tolerance_budget": budget,
        "threads": threads,
        "backend": kernels.BACKEND,
        "config": cfg,
    }
    doc = {"metadata": meta, "rows": result.rows, "errors": result.errors}
    # Python's float repr is the shortest string that round-trips exactly
    return json.dumps(doc, indent=2, allow_nan=False, default=str)


def write_reports(result: SweepResult, cfg: dict, out_dir, fmt: str = "both", threads: int = 1):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        p = out / "results.csv"
        p.write_text(rows_to_csv(result.rows))
        written.append(p)
    if fmt in ("json", "both"):
        p = out / "results.json"
        p.write_text(rows_to_json(result, cfg, cfg["tolerance"], threads))
        written.append(p)
    return written


def attach_log(out_dir) -> logging.Handler:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    logging.captureWarnings(True)
    return handler


def run(path, out_dir="out", threads: Optional[int] = None, tolerance: Optional[float] = None,
        fmt: str = "both") -> int:
    """Run a config file end to end and return the exit code."""
    handler = attach_log(out_dir)
    try:
        try:
            cfg = validate_config(load_config(path))
        except ConfigError as exc:
            for p in exc.problems:
                log.error("config: %s", p)
            return EXIT_CONFIG
        if tolerance is not None:
            cfg["tolerance"] = tolerance
        threads = threads or default_threads()
        try:
            result = run_sweep(cfg, threads)
        except SeqMeasError as exc:
            log.error("numerical error: %s", exc)
            return EXIT_COVERAGE
        write_reports(result, cfg, out_dir, fmt, threads)
        log.info("%d rows, %d violations, %d errors", len(result.rows), len(result.violations),
                 len(result.errors))
        return result.exit_code
    finally:
        log.removeHandler(handler)
        handler.close()
