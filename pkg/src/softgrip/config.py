"""Scenario configuration: JSON file with strict validation, embedded physical
defaults, and builders for the plant / probe / fixture objects.

Config units are external: mm, degrees, kPa, N/mm. Unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
from copy import deepcopy

from .contact import ObjectModel, StiffnessProfile
from .errors import ConfigError
from .geometry import FingerGeometry
from .pneumatics import RingModel, SensorModel
from .probing import ProbeConfig

DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "plant": {
        "geometry": {
            "a_mm": 15.0,
            "b_mm": 40.0,
            "beta_deg": None,  # None -> atan(a/b)
            "total_length_mm": 80.0,
            "alpha_max_deg": 80.0,
            "tip_arm_mm": 40.0,
        },
        "ring": {
            "v0_mm3": 5000.0,
            "kappa_per_rad": 0.28,
            "alpha_slack_deg": 20.0,
            "c1_nmm_per_rad": 30000.0,
            "c2_nmm_per_rad_kpa": 600.0,
            "p_atm_kpa": 101.325,
            "leak_rate_per_s": 5.0e-4,
        },
        "sensor": {
            "full_scale_kpa": 700.0,
            "noise_frac": 0.025 / 3.0,
            "quant_step_kpa": 0.68,
        },
    },
    "gripper": {"max_open_mm": 45.0},
    "calibration": {
        "regulated": {
            "alpha_max_deg": 80.0,
            "alpha_step_deg": 5.0,
            "p_max_kpa": 150.0,
            "p_step_kpa": 5.0,
        },
        "locked": {
            "alpha_max_deg": 80.0,
            "alpha_step_deg": 1.0,
            "p0_grid_kpa": [0.0, 20.0, 40.0, 60.0, 80.0],
        },
        "hysteresis": {"p0_kpa": 60.0, "dt_per_step_s": 1.0},
    },
    "probe": {
        "p0_kpa": 60.0,
        "approach_step_mm": 2.0,
        "probe_step_mm": 6.0,
        "n_probe_steps": 5,
        "contact_threshold_kpa": None,
        "settle_reads": 512,
    },
    "fixtures": {},
    "plan": {
        "shape": "elongated",
        "span": 90.0,
        "n": 10,
        "fixture": "",
        "avoid_fraction": 0.6,
    },
    "sensitivity": {
        "fixture_a": "",
        "fixture_b": "",
        "p0_grid_kpa": [0.0, 20.0, 40.0, 60.0, 80.0],
        "dc_grid_mm": [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0],
    },
}

_FIXTURE_KEYS = {
    "kind",
    "base_k_n_per_mm",
    "samples",
    "surface_offset_mm",
    "damage_threshold_n",
}


def _merge(defaults, user, path=""):
    """Deep-merge user config over the defaults, rejecting unknown keys."""
    if not isinstance(user, dict):
        raise ConfigError(f"config section '{path or '<root>'}' must be an object")
    out = deepcopy(defaults)
    for key, value in user.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key '{here}'")
        if isinstance(defaults[key], dict) and here != "fixtures":
            out[key] = _merge(defaults[key], value, here)
        else:
            out[key] = deepcopy(value)
    return out


def _check_fixture(name, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"fixture '{name}' must be an object")
    for key in raw:
        if key not in _FIXTURE_KEYS:
            raise ConfigError(f"unknown config key 'fixtures.{name}.{key}'")
    if "surface_offset_mm" not in raw:
        raise ConfigError(f"fixture '{name}' is missing 'surface_offset_mm'")


def load_config(path) -> dict:
    """Load, validate and resolve a scenario config file to a plain dict."""
    try:
        with open(path) as fh:
            user = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    resolved = _merge(DEFAULTS, user)
    for name, raw in resolved["fixtures"].items():
        _check_fixture(name, raw)
    return resolved


def resolve_defaults() -> dict:
    return deepcopy(DEFAULTS)


def config_hash(cfg: dict) -> str:
    """Stable hash of the resolved config for run provenance."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def build_geometry(cfg: dict) -> FingerGeometry:
    g = cfg["plant"]["geometry"]
    beta = None if g["beta_deg"] is None else math.radians(g["beta_deg"])
    return FingerGeometry(
        a=g["a_mm"],
        b=g["b_mm"],
        beta=beta,
        total_length=g["total_length_mm"],
        alpha_max=math.radians(g["alpha_max_deg"]),
        tip_arm=g["tip_arm_mm"],
    )


def build_ring(cfg: dict) -> RingModel:
    r = cfg["plant"]["ring"]
    return RingModel(
        v0=r["v0_mm3"],
        kappa=r["kappa_per_rad"],
        alpha_slack=math.radians(r["alpha_slack_deg"]),
        c1=r["c1_nmm_per_rad"],
        c2=r["c2_nmm_per_rad_kpa"],
        p_atm=r["p_atm_kpa"],
        leak_rate=r["leak_rate_per_s"],
    )


def build_sensor(cfg: dict, noise: bool = True) -> SensorModel:
    s = cfg["plant"]["sensor"]
    model = SensorModel(
        full_scale=s["full_scale_kpa"],
        noise_frac=s["noise_frac"],
        quant_step=s["quant_step_kpa"],
        seed=cfg["seed"],
    )
    return model if noise else model.noiseless()


def build_probe_config(cfg: dict) -> ProbeConfig:
    p = cfg["probe"]
    return ProbeConfig(
        p0=p["p0_kpa"],
        approach_step=p["approach_step_mm"],
        probe_step=p["probe_step_mm"],
        n_probe_steps=p["n_probe_steps"],
        contact_threshold=p["contact_threshold_kpa"],
        settle_reads=p["settle_reads"],
    )


def build_fixture(cfg: dict, name: str) -> ObjectModel:
    fixtures = cfg["fixtures"]
    if name not in fixtures:
        available = ", ".join(sorted(fixtures)) or "<none>"
        raise ConfigError(f"unknown fixture '{name}'; available: {available}")
    raw = fixtures[name]
    kind = raw.get("kind", "uniform")
    if kind == "uniform":
        profile = StiffnessProfile(kind="uniform", base_k=raw.get("base_k_n_per_mm", 0.0))
    else:
        samples = tuple((float(c), float(k)) for c, k in raw.get("samples", []))
        profile = StiffnessProfile(kind=kind, samples=samples)
    damage = raw.get("damage_threshold_n")
    return ObjectModel(
        profile=profile,
        surface_offset=raw["surface_offset_mm"],
        damage_threshold=damage,
    )
