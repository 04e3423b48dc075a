"""Probe-location planning, stiffness-map assembly from per-location probes,
and grasp-location selection with soft-region avoidance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .calibration import CalibrationTable
from .contact import ObjectModel, stiffness_at
from .errors import ConfigError, PlanningError
from .geometry import FingerGeometry
from .pneumatics import RingModel, SensorModel
from .probing import GripperSim, ProbeConfig, run_probe

DEFAULT_AVOID_FRACTION = 0.6  # entries below this fraction of the map maximum are avoided


@dataclass(frozen=True)
class ProbePlan:
    """Ordered probing locations: mm along the body (linear) or degrees (angular)."""

    kind: str  # linear | angular
    locations: tuple

    def __post_init__(self):
        if self.kind not in ("linear", "angular"):
            raise ConfigError(f"unknown plan kind '{self.kind}'")
        if len(self.locations) < 2:
            raise ConfigError("a probe plan needs at least 2 locations")
        if any(b <= a for a, b in zip(self.locations, self.locations[1:])):
            raise ConfigError("plan locations must be strictly increasing")


def make_plan(shape: str, span: float, n: int) -> ProbePlan:
    """Equally spaced probing locations over [0, span] for the given object shape.

    elongated -> linear positions (mm); round -> wrist angles (deg).
    """
    if n < 2:
        raise ConfigError(f"need at least 2 probing locations, got {n}")
    if span <= 0:
        raise ConfigError(f"span must be positive, got {span}")
    if shape == "elongated":
        kind = "linear"
    elif shape == "round":
        kind = "angular"
    else:
        raise ConfigError(f"unknown object shape '{shape}'")
    locations = tuple(float(x) for x in np.linspace(0.0, span, n))
    return ProbePlan(kind, locations)


@dataclass
class StiffnessMap:
    """Per-location relative stiffness, the chosen grasp location, and avoided spots."""

    entries: list  # [(coordinate, k_r, flags tuple), ...] sorted by coordinate
    chosen: float
    avoided: list

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"coord": c, "k_r": k, "flags": list(f)} for c, k, f in self.entries
            ],
            "chosen": self.chosen,
            "avoided": list(self.avoided),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        lines = ["coord,k_r_n_per_mm,flag"]
        for c, k, f in self.entries:
            lines.append(f"{c!r},{'' if k is None else repr(k)},{'|'.join(f)}")
        return "\n".join(lines) + "\n"

    def to_long_csv(self) -> str:
        """Plot-ready long format: one row per (coordinate, quantity)."""
        lines = ["coord,quantity,value"]
        for c, k, f in self.entries:
            lines.append(f"{c!r},k_r,{'' if k is None else repr(k)}")
            lines.append(f"{c!r},avoided,{int(c in self.avoided)}")
            lines.append(f"{c!r},chosen,{int(c == self.chosen)}")
        return "\n".join(lines) + "\n"


def execute_plan(
    plan: ProbePlan,
    fixture: ObjectModel,
    geom: FingerGeometry,
    ring: RingModel,
    sensor: SensorModel,
    table: CalibrationTable,
    cfg: ProbeConfig,
    seed: int = 0,
    avoid_fraction: float = DEFAULT_AVOID_FRACTION,
    max_open: float = 45.0,
) -> StiffnessMap:
    """Probe every planned location against the fixture's local stiffness.

    Each location gets its own simulation handle and a noise stream derived from
    (seed, location index), so the assembled map does not depend on execution
    order. Locations are avoided when flagged, when the estimated force exceeds
    the fixture's damage threshold, or when k_r falls below avoid_fraction of
    the map maximum. The chosen location maximizes k_r among the remainder,
    ties broken by the smallest coordinate.
    """
    if not 0.0 <= avoid_fraction <= 1.0:
        raise ConfigError(f"avoid_fraction must be in [0, 1], got {avoid_fraction}")
    entries = []
    for idx, coord in enumerate(plan.locations):
        k_local = stiffness_at(fixture, coord)  # raises RangeError outside the span
        child_seed = np.random.SeedSequence([int(seed), idx])
        sim = GripperSim(
            geom, ring, sensor, k_local, fixture.surface_offset,
            max_open=max_open, seed=child_seed,
        )
        report = run_probe(sim, table, cfg)
        flags = list(report.flags)
        if (
            fixture.damage_threshold is not None
            and report.est_force is not None
            and report.est_force > fixture.damage_threshold
        ):
            flags.append("damage_risk")
        entries.append((float(coord), report.k_r, tuple(flags)))

    valid = [(c, k) for c, k, f in entries if k is not None and not f]
    if not valid:
        raise PlanningError("no safe grasp location: every probed entry is flagged")
    k_max = max(k for _, k in valid)
    avoided = [
        c
        for c, k, f in entries
        if f or k is None or k < avoid_fraction * k_max
    ]
    candidates = [(c, k) for c, k in valid if c not in avoided]
    if not candidates:
        raise PlanningError("no safe grasp location: all entries avoided")
    best_k = max(k for _, k in candidates)
    chosen = min(c for c, k in candidates if k == best_k)
    return StiffnessMap(entries=entries, chosen=chosen, avoided=avoided)
