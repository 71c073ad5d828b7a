"""Workbench configuration: a single versioned JSON document.

Lengths are in mm, forces in N, masses in kg, frequencies in Hz and times in
s; the unit is part of every field name. Blocks that are omitted take their
defaults; a block that is present must be complete and may not carry unknown
keys.
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path
from typing import Any

from .kinetostatics import Material
from .mcpf import FAMILIES, McpfParams
from .motion import FfPidController, PathSpec, Plant2, plant_from_axis, plant_from_tf
from .optimize import OptProblem, xy_problem, z_problem
from .presets import (CHOSEN_MM, F_MAX, LAYERS, LINK_SPAN_MM, LUMPED_MASS, MM, PID_GAINS, STROKE,
                      TRANSFER_FUNCTIONS, WIDTHS_MM)
from .stage import ChainMasses, StageConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


NUM, POS, NONNEG, INT, STR, BOOL = "num", "pos", "nonneg", "int", "str", "bool"

_FAMILY = {"t_mm": POS, "l_mm": POS, "b_mm": POS, "layers": INT, "link_span_mm": POS}
_BOUNDS = {"lower_mm": [POS] * 4, "upper_mm": [POS] * 4, "eta_d_min": POS, "eta_g_min": POS}
_PLANT = {"gain_mm_per_N_s2": POS, "a1_per_s": NONNEG, "a0_per_s2": POS}
_FF = {"mass_kg": POS, "damping_N_s_per_m": NONNEG, "stiffness_N_per_m": POS}

SCHEMA: dict[str, Any] = {
    "schema_version": INT,
    "material": {"youngs_modulus_GPa": POS, "shear_modulus_GPa": POS, "shear_factor": POS,
                 "density_kg_per_m3": POS},
    "families": {f: _FAMILY for f in FAMILIES},
    "stage": {"lumped_masses_kg": [POS] * 3, "chain_masses_kg": {f"m{i}": POS for i in range(1, 6)},
              "c5": POS, "c8": POS},
    "sweep": {"family": ("choice", FAMILIES), "t_mm": ("list", POS), "l_mm": ("list", POS),
              "b_mm": ("list", POS)},
    "optimizer": {"xy": _BOUNDS, "z": _BOUNDS, "population": INT, "generations": INT,
                  "mutation_prob": NONNEG, "seed": INT, "slack": NONNEG, "f_max_N": POS, "stroke_mm": POS,
                  "t_min_mm": POS, "workers": INT},
    "simulation": {
        "plants": {ax: _PLANT for ax in "xyz"},
        "controller": {"kp_N_per_mm": NONNEG, "ki": NONNEG, "kd": NONNEG, "Ts_s": POS, "Nf": POS,
                       "integral_form": ("choice", ("reciprocal", "integral_time")), "ff_offset": NONNEG},
        "feedforward": {ax: _FF for ax in "xyz"},
        "path": {"kind": ("choice", ("circle", "crown", "raster")), "amplitude_mm": POS, "frequency_Hz": POS,
                 "plane": ("choice", ("xy", "yz", "xz")), "duration_s": POS},
        "sweep_sine": {"f_start_Hz": POS, "f_stop_Hz": POS, "amplitude_N": POS, "duration_s": POS},
    },
}


def default_config() -> dict:
    fams = {f: {"t_mm": CHOSEN_MM[f][0], "l_mm": CHOSEN_MM[f][1], "b_mm": WIDTHS_MM[f], "layers": LAYERS[f],
                "link_span_mm": LINK_SPAN_MM[f]} for f in FAMILIES}
    xy, z = xy_problem(), z_problem()
    plants = {ax: dict(zip(_PLANT, TRANSFER_FUNCTIONS[ax])) for ax in "xyz"}
    ff = {}
    for ax in "xyz":
        m, c, k = plant_from_tf(*TRANSFER_FUNCTIONS[ax]).physical()
        ff[ax] = {"mass_kg": m, "damping_N_s_per_m": c, "stiffness_N_per_m": k}
    cm = ChainMasses()
    return {
        "schema_version": SCHEMA_VERSION,
        "material": {"youngs_modulus_GPa": 71.0, "shear_modulus_GPa": 26.7, "shear_factor": 1.2,
                     "density_kg_per_m3": 2810.0},
        "families": fams,
        "stage": {"lumped_masses_kg": list(LUMPED_MASS),
                  "chain_masses_kg": {f"m{i}": getattr(cm, f"m{i}") for i in range(1, 6)}, "c5": 1.0, "c8": 1.0},
        "sweep": {"family": "xd", "t_mm": [0.3, 0.35, 0.4], "l_mm": [25.0, 30.0, 35.0], "b_mm": [8.0, 10.0, 12.0]},
        "optimizer": {
            "xy": {"lower_mm": list(xy.lower), "upper_mm": list(xy.upper), "eta_d_min": xy.eta_d_min,
                   "eta_g_min": xy.eta_g_min},
            "z": {"lower_mm": list(z.lower), "upper_mm": list(z.upper), "eta_d_min": z.eta_d_min,
                  "eta_g_min": z.eta_g_min},
            "population": 200, "generations": 100, "mutation_prob": 0.3, "seed": 0, "slack": 0.1,
            "f_max_N": F_MAX, "stroke_mm": STROKE / MM, "t_min_mm": 0.3, "workers": 1,
        },
        "simulation": {
            "plants": plants,
            "controller": {"kp_N_per_mm": PID_GAINS["kp"], "ki": PID_GAINS["ki"], "kd": PID_GAINS["kd"],
                           "Ts_s": PID_GAINS["Ts"], "Nf": PID_GAINS["Nf"], "integral_form": "integral_time",
                           "ff_offset": 0.5},
            "feedforward": ff,
            "path": {"kind": "circle", "amplitude_mm": 4.8, "frequency_Hz": 3.0, "plane": "xy", "duration_s": 1.0},
            "sweep_sine": {"f_start_Hz": 0.1, "f_stop_Hz": 100.0, "amplitude_N": 5.0, "duration_s": 40.0},
        },
    }


def _check(value, schema, path: str):
    if isinstance(schema, dict):
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        unknown = sorted(set(value) - set(schema))
        if unknown:
            raise ConfigError(path, f"unknown key(s) {unknown}")
        for key, sub in schema.items():
            p = f"{path}.{key}" if path else key
            if key not in value:
                raise ConfigError(p, "missing required key")
            _check(value[key], sub, p)
        return
    if isinstance(schema, list):
        if not isinstance(value, list) or len(value) != len(schema):
            raise ConfigError(path, f"expected a list of {len(schema)} values")
        for i, (v, s) in enumerate(zip(value, schema)):
            _check(v, s, f"{path}[{i}]")
        return
    if isinstance(schema, tuple):
        if schema[0] == "choice":
            if value not in schema[1]:
                raise ConfigError(path, f"expected one of {list(schema[1])}, got {value!r}")
            return
        if not isinstance(value, list) or not value:
            raise ConfigError(path, "expected a nonempty list")
        for i, v in enumerate(value):
            _check(v, schema[1], f"{path}[{i}]")
        return
    if schema == INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "expected an integer")
        return
    if schema == STR:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(path, "expected a finite number")
    if schema == POS and value <= 0:
        raise ConfigError(path, "must be positive")
    if schema == NONNEG and value < 0:
        raise ConfigError(path, "must be non-negative")


def validate(cfg: dict) -> dict:
    """Fill omitted top-level blocks from defaults and validate the result."""
    if not isinstance(cfg, dict):
        raise ConfigError("", "configuration must be a JSON object")
    unknown = sorted(set(cfg) - set(SCHEMA))
    if unknown:
        raise ConfigError("", f"unknown key(s) {unknown}")
    version = cfg.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r} (expected {SCHEMA_VERSION})")
    full = default_config()
    for key, block in cfg.items():
        full[key] = copy.deepcopy(block)
    _check(full, SCHEMA, "")
    for ax in ("xy", "z"):
        b = full["optimizer"][ax]
        if any(lo >= hi for lo, hi in zip(b["lower_mm"], b["upper_mm"])):
            raise ConfigError(f"optimizer.{ax}", "each lower bound must be below its upper bound")
    for f, fam in full["families"].items():
        if fam["layers"] < 1:
            raise ConfigError(f"families.{f}.layers", "must be >= 1")
        try:
            family_params(fam)
        except ValueError as exc:
            raise ConfigError(f"families.{f}", str(exc)) from exc
    ctrl = full["simulation"]["controller"]
    if ctrl["kd"] > 0 and ctrl["kp_N_per_mm"] == 0:
        raise ConfigError("simulation.controller.kp_N_per_mm", "derivative filter needs kp > 0")
    if ctrl["ff_offset"] > 1:
        raise ConfigError("simulation.controller.ff_offset", "must lie in [0, 1]")
    opt = full["optimizer"]
    if opt["population"] < 4 or opt["population"] % 2:
        raise ConfigError("optimizer.population", "must be an even number >= 4")
    if opt["generations"] < 1:
        raise ConfigError("optimizer.generations", "must be >= 1")
    if opt["mutation_prob"] > 1:
        raise ConfigError("optimizer.mutation_prob", "must lie in [0, 1]")
    ss = full["simulation"]["sweep_sine"]
    if ss["f_start_Hz"] >= ss["f_stop_Hz"]:
        raise ConfigError("simulation.sweep_sine", "f_start_Hz must be below f_stop_Hz")
    return full


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return validate({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc
    return validate(raw)


# ------------------------------------------------------------------ builders

def material(cfg: dict) -> Material:
    m = cfg["material"]
    try:
        return Material(m["youngs_modulus_GPa"] * 1e9, m["shear_modulus_GPa"] * 1e9, m["shear_factor"],
                        m["density_kg_per_m3"])
    except ValueError as exc:
        raise ConfigError("material", str(exc)) from exc


def family_params(fam: dict) -> McpfParams:
    return McpfParams(fam["t_mm"] * MM, fam["l_mm"] * MM, fam["b_mm"] * MM, fam["layers"],
                      fam["link_span_mm"] * MM)


def families(cfg: dict) -> dict[str, McpfParams]:
    return {f: family_params(cfg["families"][f]) for f in FAMILIES}


def stage_config(cfg: dict) -> StageConfig:
    st = cfg["stage"]
    return StageConfig(families(cfg), material(cfg), tuple(st["lumped_masses_kg"]),
                       c5=st["c5"], c8=st["c8"], chain_masses=ChainMasses(**st["chain_masses_kg"]))


def problem(cfg: dict, axis: str) -> OptProblem:
    opt = cfg["optimizer"]
    b = opt[axis]
    fam = cfg["families"]
    g, d = ("xg", "xd") if axis == "xy" else ("zg", "zd")
    return OptProblem(axis, tuple(b["lower_mm"]), tuple(b["upper_mm"]), b["eta_d_min"], b["eta_g_min"],
                      opt["f_max_N"], opt["stroke_mm"] * MM, opt["t_min_mm"], material(cfg),
                      (fam[g]["b_mm"], fam[d]["b_mm"]), (fam[g]["layers"], fam[d]["layers"]),
                      (fam[g]["link_span_mm"], fam[d]["link_span_mm"]))


def plants(cfg: dict) -> dict[str, Plant2]:
    return {ax: plant_from_tf(*p.values()) for ax, p in cfg["simulation"]["plants"].items()}


def controllers(cfg: dict) -> dict[str, FfPidController]:
    c = cfg["simulation"]["controller"]
    out = {}
    for ax, ff in cfg["simulation"]["feedforward"].items():
        out[ax] = FfPidController(c["kp_N_per_mm"], c["ki"], c["kd"], c["Ts_s"], c["Nf"], ff["mass_kg"],
                                  ff["damping_N_s_per_m"], ff["stiffness_N_per_m"], c["integral_form"],
                                  c["ff_offset"])
    return out


def path_spec(cfg: dict, kind: str | None = None, plane: str | None = None) -> PathSpec:
    p = dict(cfg["simulation"]["path"])
    if kind is not None and kind != p["kind"]:
        p["kind"] = kind
        if kind == "crown":
            p.update(amplitude_mm=5.0, frequency_Hz=1.0, duration_s=2.0)
        elif kind == "raster":
            p.update(amplitude_mm=5.0, frequency_Hz=1.0, duration_s=10.0)
    if plane is not None:
        p["plane"] = plane
    return PathSpec(p["kind"], p["amplitude_mm"], p["frequency_Hz"], p["plane"], p["duration_s"])


def dump(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"
