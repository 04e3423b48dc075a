"""The probing protocol: approach until the pressure signal reveals contact,
refine the contact opening from the free-bend pressure rise, close in fixed
increments, and convert the measured pressure change into estimated force,
relative stiffness and Hooke stiffness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import CalibrationTable, angle_from_dp, force_from_dp, interp_torque
from .contact import ObjectModel, solve_equilibrium, stiffness_at
from .errors import ConfigError, DomainError, RangeError, SaturationError, StateError
from .geometry import FingerGeometry, object_deformation, tip_extent
from .pneumatics import (
    PressureSensor,
    RingModel,
    RingState,
    SensorModel,
    lock,
    measurement_sigma,
    pressure_at_angle,
)


def default_contact_threshold(sensor: SensorModel, settle_reads: int) -> float:
    """Detection threshold: 6 sigma of the settle-averaged measurement plus one
    quantization step, bounding the false-positive rate far below 1e-6 per step."""
    return 6.0 * measurement_sigma(sensor, settle_reads) + sensor.quant_step


@dataclass(frozen=True)
class ProbeConfig:
    """Knobs of one probing session; distances mm, pressures gauge kPa."""

    p0: float = 60.0
    approach_step: float = 2.0
    probe_step: float = 6.0
    n_probe_steps: int = 5
    contact_threshold: float | None = None  # None -> default_contact_threshold
    settle_reads: int = 512

    def __post_init__(self):
        if self.n_probe_steps < 1:
            raise ConfigError(f"n_probe_steps must be >= 1, got {self.n_probe_steps}")
        if self.approach_step <= 0 or self.probe_step <= 0:
            raise ConfigError("approach_step and probe_step must be positive")
        if self.contact_threshold is not None and self.contact_threshold <= 0:
            raise ConfigError("contact_threshold must be positive when set")
        if self.settle_reads < 1:
            raise ConfigError(f"settle_reads must be >= 1, got {self.settle_reads}")
        if self.p0 < 0:
            raise ConfigError(f"p0 must be non-negative, got {self.p0}")

    @property
    def d_c(self) -> float:
        """Total commanded closing distance after contact (mm)."""
        return self.n_probe_steps * self.probe_step

    def threshold(self, sensor: SensorModel) -> float:
        if self.contact_threshold is not None:
            return self.contact_threshold
        return default_contact_threshold(sensor, self.settle_reads)


@dataclass
class ProbeReport:
    """Outcome of one probe: measured trace and the derived stiffness estimates."""

    contact_opening: float | None
    dp_trace: list  # [(cumulative d_c mm, dp kPa rel. contact baseline), ...]
    est_force: float | None
    k_r: float | None
    k_o_est: float | None
    est_delta: float | None
    flags: list = field(default_factory=list)
    p0: float = 0.0
    d_c: float = 0.0

    def to_dict(self) -> dict:
        return {
            "contact_opening": self.contact_opening,
            "dp_trace": [[dc, dp] for dc, dp in self.dp_trace],
            "est_force": self.est_force,
            "k_r": self.k_r,
            "k_o_est": self.k_o_est,
            "est_delta": self.est_delta,
            "flags": list(self.flags),
            "p0": self.p0,
            "d_c": self.d_c,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def trace_csv(self) -> str:
        lines = ["step,dc_mm,dp_kpa"]
        for i, (dc, dp) in enumerate(self.dp_trace, start=1):
            lines.append(f"{i},{dc!r},{dp!r}")
        return "\n".join(lines) + "\n"


class GripperSim:
    """Simulation handle: one finger, one locked ring, one object, one sensor stream.

    The handle owns its seeded noise stream; concurrent sessions need distinct
    handles. The gripper closes by commanded opening width; each commanded
    opening yields one quasi-static equilibrium of the plant.
    """

    def __init__(
        self,
        geom: FingerGeometry,
        ring: RingModel,
        sensor: SensorModel,
        k_object: float | None,
        surface_offset: float | None,
        max_open: float = 45.0,
        seed=None,
    ):
        if max_open <= 0:
            raise ConfigError(f"max_open must be positive, got {max_open}")
        if surface_offset is not None and surface_offset > max_open:
            raise ConfigError("surface_offset exceeds the gripper's travel range")
        self.geom = geom
        self.ring = ring
        self.k_object = k_object
        self.surface_offset = surface_offset
        self.max_open = max_open
        self.stream = PressureSensor(sensor, seed=seed)
        self.opening = max_open
        self.state: RingState | None = None
        self.lock_reading: float | None = None
        self.contact_opening: float | None = None
        self.contact_dp: float | None = None

    def pressurize_and_lock(self, p0: float, settle_reads: int) -> None:
        """Open fully, regulate to p0 at rest, close the valve, record the baseline."""
        self.opening = self.max_open
        self.state = lock(RingState(p_gauge=p0, alpha=0.0), self.ring)
        self.lock_reading = self.stream.read_avg(p0, settle_reads)

    def _plant_pressure(self) -> float:
        pen = 0.0
        if self.surface_offset is not None:
            pen = max(0.0, self.surface_offset - self.opening)
        if pen <= 0.0 or self.k_object is None:
            return pressure_at_angle(self.state, self.ring, 0.0)
        eq = solve_equilibrium(self.geom, self.ring, self.state, self.k_object, pen)
        p0 = pressure_at_angle(self.state, self.ring, 0.0)
        return p0 + eq.dp

    def close_to(self, opening: float, settle_reads: int) -> float:
        """Command an opening width and return the measured dp from the lock baseline."""
        if self.state is None:
            raise StateError("gripper must be pressurized and locked first")
        self.opening = max(0.0, opening)
        reading = self.stream.read_avg(self._plant_pressure(), settle_reads)
        return reading - self.lock_reading

    def true_equilibrium(self):
        """Ground-truth equilibrium at the current opening (tests and reporting)."""
        pen = max(0.0, (self.surface_offset or 0.0) - self.opening)
        return solve_equilibrium(self.geom, self.ring, self.state, self.k_object or 0.0, pen)


def detect_contact(sim: GripperSim, table: CalibrationTable, cfg: ProbeConfig):
    """Close in approach_step increments until the pressure signal crosses the
    threshold, then refine the contact opening from the free-bend pressure rise.

    Returns (contact_opening, flags). Travel exhaustion yields (None, ['no_contact']).
    """
    sim.pressurize_and_lock(cfg.p0, cfg.settle_reads)
    threshold = cfg.threshold(sim.stream.model)
    while sim.opening > 0.0:
        dp = sim.close_to(sim.opening - cfg.approach_step, cfg.settle_reads)
        if dp > threshold:
            # invert the dead-zone free bend to estimate the true contact opening
            alpha_deg = angle_from_dp(table, dp, cfg.p0)
            pen_hat = tip_extent(sim.geom, math.radians(alpha_deg))
            sim.contact_opening = sim.opening + pen_hat
            sim.contact_dp = dp
            return sim.contact_opening, []
    return None, ["no_contact"]


def probe(
    sim: GripperSim,
    table: CalibrationTable,
    cfg: ProbeConfig,
    contact_opening: float | None = None,
) -> ProbeReport:
    """Execute the fixed-increment probing steps and derive the stiffness estimates.

    Requires a detected (or supplied) contact opening. The trace stores dp
    relative to the contact baseline so approach-phase offsets do not bias k_r;
    the estimation uses the lock-referenced dp, which the table is built from.
    """
    if contact_opening is not None:
        if sim.state is None:
            sim.pressurize_and_lock(cfg.p0, cfg.settle_reads)
        sim.contact_opening = contact_opening
        sim.contact_dp = sim.close_to(contact_opening, cfg.settle_reads)
    if sim.contact_opening is None:
        raise StateError("probe requires a detected or supplied contact opening")

    baseline = sim.contact_dp
    trace = []
    dp_lock = baseline
    for i in range(1, cfg.n_probe_steps + 1):
        dp_lock = sim.close_to(sim.contact_opening - i * cfg.probe_step, cfg.settle_reads)
        trace.append((i * cfg.probe_step, dp_lock - baseline))

    report = ProbeReport(
        contact_opening=sim.contact_opening,
        dp_trace=trace,
        est_force=None,
        k_r=None,
        k_o_est=None,
        est_delta=None,
        p0=cfg.p0,
        d_c=cfg.d_c,
    )
    try:
        alpha_deg = angle_from_dp(table, max(dp_lock, 0.0), cfg.p0)
    except SaturationError:
        report.flags.append("out_of_table")
        return report
    except RangeError:
        report.flags.append("out_of_table")
        return report

    alpha = math.radians(alpha_deg)
    report.est_force = force_from_dp(table, sim.geom, max(dp_lock, 0.0), cfg.p0)
    report.k_r = report.est_force / cfg.d_c
    delta_hat = object_deformation(sim.geom, cfg.d_c, alpha)
    report.est_delta = delta_hat
    if delta_hat > 1e-9:
        report.k_o_est = report.est_force / delta_hat
    elif report.est_force > 1e-9:
        report.flags.append("degenerate_deformation")
    else:
        report.k_o_est = 0.0
    true_eq = sim.true_equilibrium()
    if true_eq.saturated:
        report.flags.append("saturated")
    return report


def run_probe(sim: GripperSim, table: CalibrationTable, cfg: ProbeConfig) -> ProbeReport:
    """Full session: detect contact, then probe. no_contact yields an empty report."""
    opening, flags = detect_contact(sim, table, cfg)
    if opening is None:
        return ProbeReport(
            contact_opening=None,
            dp_trace=[],
            est_force=None,
            k_r=None,
            k_o_est=None,
            est_delta=None,
            flags=flags,
            p0=cfg.p0,
            d_c=cfg.d_c,
        )
    return probe(sim, table, cfg)


def sensitivity_sweep(
    geom: FingerGeometry,
    ring: RingModel,
    sensor: SensorModel,
    table: CalibrationTable,
    k_a: float,
    k_b: float,
    p0_grid=(0.0, 20.0, 40.0, 60.0, 80.0),
    dc_grid=(10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0),
    base_cfg: ProbeConfig = ProbeConfig(),
    surface_offset: float = 40.0,
    max_open: float = 45.0,
):
    """Rank (p0, d_c) pairs by noise-free dp separation over the measurement sigma.

    Returns a list of (p0, d_c, separation_kpa, z) sorted by descending z;
    deterministic (probes run without noise, sigma from the sensor model).
    """
    quiet = sensor.noiseless()
    sigma = measurement_sigma(sensor, base_cfg.settle_reads)
    out = []
    for p0 in p0_grid:
        for dc in dc_grid:
            cfg = replace(base_cfg, p0=float(p0), probe_step=float(dc) / base_cfg.n_probe_steps)
            dps = []
            for k in (k_a, k_b):
                sim = GripperSim(geom, ring, quiet, k, surface_offset, max_open=max_open)
                rep = run_probe(sim, table, cfg)
                dps.append(rep.dp_trace[-1][1] if rep.dp_trace else 0.0)
            sep = abs(dps[0] - dps[1])
            z = sep / sigma if sigma > 0 else math.inf
            out.append((float(p0), float(dc), sep, z))
    out.sort(key=lambda t: (-t[3], t[0], t[1]))
    return out
