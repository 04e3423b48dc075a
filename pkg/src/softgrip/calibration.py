"""Characterization sweeps of the plant, gridded lookup tables with bilinear
interpolation, and the inverse queries used by the estimator
(dp -> angle -> torque -> force).

Table grids are stored in external units: degrees, kPa, N*mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError, ParseError, RangeError, SaturationError, StateError
from .geometry import FingerGeometry
from .pneumatics import RingModel, RingState, joint_torque, leak_step, lock, pressure_at_angle

ANGLE_TOL_DEG = 1e-3  # inversion tolerance, well under the 1 deg sweep resolution


@dataclass
class CalibrationTable:
    """Gridded dp(alpha, p0) and torque(alpha, p0) surfaces with provenance metadata."""

    alpha_grid: np.ndarray  # deg, strictly increasing
    p0_grid: np.ndarray  # kPa, strictly increasing
    dp_surface: np.ndarray  # kPa, shape (n_alpha, n_p0)
    torque_surface: np.ndarray  # N*mm, shape (n_alpha, n_p0)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha_grid = np.asarray(self.alpha_grid, dtype=float)
        self.p0_grid = np.asarray(self.p0_grid, dtype=float)
        self.dp_surface = np.asarray(self.dp_surface, dtype=float)
        self.torque_surface = np.asarray(self.torque_surface, dtype=float)
        if self.alpha_grid.size < 2 or self.p0_grid.size < 2:
            raise ConfigError("calibration grids need at least 2 points per axis")
        for name, grid in (("alpha_grid", self.alpha_grid), ("p0_grid", self.p0_grid)):
            if np.any(np.diff(grid) <= 0):
                raise ParseError(f"{name} is not strictly increasing")
        shape = (self.alpha_grid.size, self.p0_grid.size)
        if self.dp_surface.shape != shape or self.torque_surface.shape != shape:
            raise ParseError(
                f"surface shape mismatch: expected {shape}, "
                f"got dp {self.dp_surface.shape}, torque {self.torque_surface.shape}"
            )
        if self.alpha_grid[0] == 0.0 and np.any(np.abs(self.dp_surface[0]) > 1e-9):
            raise ParseError("dp_surface row at alpha=0 must be zero")
        if np.any(np.diff(self.dp_surface, axis=0) < -1e-9):
            raise ParseError("dp_surface must be non-decreasing along the alpha axis")


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    n = int(round((stop - start) / step))
    if n < 1:
        raise ConfigError(f"degenerate grid: start={start}, stop={stop}, step={step}")
    return start + step * np.arange(n + 1)


def generate_regulated_sweep(
    model: RingModel,
    alpha_max_deg: float = 80.0,
    alpha_step_deg: float = 5.0,
    p_max_kpa: float = 150.0,
    p_step_kpa: float = 5.0,
) -> CalibrationTable:
    """Torque surface with the regulator holding each pressure (no volume coupling).

    dp_surface is zeroed; it is meaningless in this mode.
    """
    alpha_grid = _grid(0.0, alpha_max_deg, alpha_step_deg)
    p_grid = _grid(0.0, p_max_kpa, p_step_kpa)
    torque = np.empty((alpha_grid.size, p_grid.size))
    for i, a_deg in enumerate(alpha_grid):
        for j, p in enumerate(p_grid):
            torque[i, j] = joint_torque(model, math.radians(a_deg), p)
    meta = {
        "mode": "regulated",
        "alpha_step_deg": repr(alpha_step_deg),
        "p_step_kpa": repr(p_step_kpa),
    }
    return CalibrationTable(alpha_grid, p_grid, np.zeros_like(torque), torque, meta)


def generate_locked_sweep(
    model: RingModel,
    p0_grid_kpa=(0.0, 20.0, 40.0, 60.0, 80.0),
    alpha_max_deg: float = 80.0,
    alpha_step_deg: float = 1.0,
) -> CalibrationTable:
    """Locked-air-volume sweep: pressurize at alpha=0, lock, sweep alpha upward.

    Records dp relative to the lock baseline and the torque at the instantaneous
    trapped-gas pressure. The sweep is treated as instantaneous (no leakage);
    use hysteresis_sweep for the timed forward/backward comparison.
    """
    alpha_grid = _grid(0.0, alpha_max_deg, alpha_step_deg)
    p0_grid = np.asarray(p0_grid_kpa, dtype=float)
    if p0_grid.size < 2:
        raise ConfigError("locked sweep needs at least 2 initial pressures")
    dp = np.empty((alpha_grid.size, p0_grid.size))
    torque = np.empty_like(dp)
    for j, p0 in enumerate(p0_grid):
        state = lock(RingState(p_gauge=float(p0), alpha=0.0), model)
        for i, a_deg in enumerate(alpha_grid):
            alpha = math.radians(a_deg)
            p = pressure_at_angle(state, model, alpha)
            # the baseline row is zero by definition; drop float residue
            dp[i, j] = p - p0 if a_deg > 0.0 else 0.0
            torque[i, j] = joint_torque(model, alpha, p)
    meta = {"mode": "locked", "alpha_step_deg": repr(alpha_step_deg)}
    return CalibrationTable(alpha_grid, p0_grid, dp, torque, meta)


def hysteresis_sweep(
    model: RingModel,
    p0: float = 60.0,
    alpha_max_deg: float = 80.0,
    alpha_step_deg: float = 1.0,
    dt_per_step: float = 1.0,
):
    """Timed forward then backward locked sweep; leakage separates the two phases.

    Returns (alpha_deg, p_forward, p_backward) with pressures in gauge kPa.
    """
    alpha_grid = _grid(0.0, alpha_max_deg, alpha_step_deg)
    state = lock(RingState(p_gauge=float(p0), alpha=0.0), model)
    forward = np.empty(alpha_grid.size)
    backward = np.empty(alpha_grid.size)
    for i, a_deg in enumerate(alpha_grid):
        state = leak_step(replace(state, alpha=math.radians(a_deg)), model, dt_per_step)
        forward[i] = pressure_at_angle(state, model, state.alpha)
    for i in range(alpha_grid.size - 1, -1, -1):
        state = leak_step(replace(state, alpha=math.radians(alpha_grid[i])), model, dt_per_step)
        backward[i] = pressure_at_angle(state, model, state.alpha)
    return alpha_grid, forward, backward


def _cell(grid: np.ndarray, value: float, label: str) -> tuple[int, float]:
    if not grid[0] - 1e-9 <= value <= grid[-1] + 1e-9:
        raise RangeError(f"{label}={value} outside calibrated hull [{grid[0]}, {grid[-1]}]")
    i = int(np.searchsorted(grid, value, side="right")) - 1
    i = min(max(i, 0), grid.size - 2)
    t = (value - grid[i]) / (grid[i + 1] - grid[i])
    return i, min(max(t, 0.0), 1.0)


def _bilinear(table_surface: np.ndarray, table: CalibrationTable, alpha_deg: float, p0: float) -> float:
    i, ta = _cell(table.alpha_grid, alpha_deg, "alpha_deg")
    j, tp = _cell(table.p0_grid, p0, "p0_kpa")
    s = table_surface
    return float(
        (1 - ta) * (1 - tp) * s[i, j]
        + ta * (1 - tp) * s[i + 1, j]
        + (1 - ta) * tp * s[i, j + 1]
        + ta * tp * s[i + 1, j + 1]
    )


def interp_dp(table: CalibrationTable, alpha_deg: float, p0: float) -> float:
    """Bilinear dp lookup (kPa); exact at grid nodes, no extrapolation."""
    return _bilinear(table.dp_surface, table, alpha_deg, p0)


def interp_torque(table: CalibrationTable, alpha_deg: float, p0: float) -> float:
    """Bilinear torque lookup (N*mm); exact at grid nodes, no extrapolation."""
    return _bilinear(table.torque_surface, table, alpha_deg, p0)


def angle_from_dp(table: CalibrationTable, dp: float, p0: float) -> float:
    """Bending angle (deg) whose interpolated dp matches the measurement.

    Monotone inversion by bisection on the interpolated curve, to 1e-3 deg.
    """
    if dp < 0:
        raise DomainError(f"dp must be non-negative, got {dp}")
    lo, hi = float(table.alpha_grid[0]), float(table.alpha_grid[-1])
    dp_max = interp_dp(table, hi, p0)
    if dp > dp_max + 1e-12:
        raise SaturationError(f"dp={dp} kPa above the table maximum {dp_max} kPa at p0={p0}")
    if dp <= interp_dp(table, lo, p0):
        return lo
    while hi - lo > ANGLE_TOL_DEG:
        mid = 0.5 * (lo + hi)
        if interp_dp(table, mid, p0) < dp:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def force_from_dp(table: CalibrationTable, geom: FingerGeometry, dp: float, p0: float) -> float:
    """Normal contact force (N) inferred from a measured pressure change.

    The locked-sweep torque column at (alpha, p0) is recorded at the trapped-gas
    pressure reached at that angle, i.e. already at the current pressure p0 + dp,
    so no further pressure adjustment is applied.
    """
    alpha_deg = angle_from_dp(table, dp, p0)
    return interp_torque(table, alpha_deg, p0) / geom.tip_arm


# ---------------------------------------------------------------------------
# CSV schema: `# caltab v1`, `# meta: k=v;...`, header row, row-major (alpha outer)

_HEADER = "alpha_deg,p0_kpa,dp_kpa,torque_nmm"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(table: CalibrationTable, path) -> None:
    """Write a table losslessly; full float precision, LF line endings."""
    lines = ["# caltab v1"]
    meta = ";".join(f"{k}={v}" for k, v in table.meta.items())
    lines.append(f"# meta: {meta}")
    lines.append(_HEADER)
    for i, a in enumerate(table.alpha_grid):
        for j, p in enumerate(table.p0_grid):
            lines.append(
                f"{_fmt(a)},{_fmt(p)},{_fmt(table.dp_surface[i, j])},{_fmt(table.torque_surface[i, j])}"
            )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> CalibrationTable:
    """Read a table written by write_csv, enforcing schema and grid invariants."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "# caltab v1":
        raise ParseError(f"{path}: line 1: missing '# caltab v1' header")
    if len(lines) < 3 or not lines[1].startswith("# meta: "):
        raise ParseError(f"{path}: line 2: missing '# meta:' line")
    meta_raw = lines[1][len("# meta: "):]
    meta = {}
    if meta_raw:
        for item in meta_raw.split(";"):
            k, _, v = item.partition("=")
            meta[k] = v
    header = lines[2]
    for col, token in enumerate(_HEADER.split(",")):
        got = header.split(",")
        if col >= len(got) or got[col] != token:
            raise ParseError(f"{path}: line 3, column {col + 1}: expected header token '{token}'")
    rows = []
    for ln_no, ln in enumerate(lines[3:], start=4):
        if not ln:
            continue
        parts = ln.split(",")
        if len(parts) != 4:
            raise ParseError(f"{path}: line {ln_no}: expected 4 columns, got {len(parts)}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError as exc:
            raise ParseError(f"{path}: line {ln_no}: {exc}") from None
    data = np.asarray(rows)
    if data.size == 0:
        raise ParseError(f"{path}: no data rows")
    alpha_grid = np.unique(data[:, 0])
    p0_grid = np.unique(data[:, 1])
    if data.shape[0] != alpha_grid.size * p0_grid.size:
        raise ParseError(f"{path}: grid is not complete ({data.shape[0]} rows)")
    # enforce row-major (alpha outer) order exactly as written
    expect_a = np.repeat(alpha_grid, p0_grid.size)
    expect_p = np.tile(p0_grid, alpha_grid.size)
    if not (np.array_equal(data[:, 0], expect_a) and np.array_equal(data[:, 1], expect_p)):
        raise ParseError(f"{path}: rows are not in row-major (alpha outer) order")
    shape = (alpha_grid.size, p0_grid.size)
    return CalibrationTable(
        alpha_grid, p0_grid, data[:, 2].reshape(shape), data[:, 3].reshape(shape), meta
    )
