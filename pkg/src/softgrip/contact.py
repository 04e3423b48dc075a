"""Object models with optional spatial stiffness profiles, and the quasi-static
equilibrium between the pressurized joint and a linear-spring object, plus the
brute-force grid oracle used in verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, RangeError, StateError
from .geometry import FingerGeometry, tip_extent, tip_extent_inverse
from .pneumatics import RingModel, RingState, joint_torque, pressure_at_angle

# Contact torques below this are treated as no resistance at all: the finger
# does not move. Keeps the zero-stiffness limit well defined.
TORQUE_FLOOR = 1e-3  # N*mm

ALPHA_TOL = 1e-7  # rad, bisection tolerance of the equilibrium solver
_SCAN_POINTS = 241


@dataclass(frozen=True)
class StiffnessProfile:
    """Spatial stiffness of an object: uniform, or sampled along a line / around an axis.

    Sampled kinds interpolate piecewise-linearly between (coordinate, stiffness)
    pairs; coordinates are mm for linear_positions, degrees in [0, 180] for
    angular_positions.
    """

    kind: str = "uniform"
    base_k: float = 0.0
    samples: tuple = ()

    def __post_init__(self):
        if self.kind not in ("uniform", "linear_positions", "angular_positions"):
            raise ConfigError(f"unknown stiffness profile kind '{self.kind}'")
        if self.kind == "uniform":
            if self.base_k <= 0:
                raise ConfigError(f"uniform profile needs base_k > 0, got {self.base_k}")
            return
        if len(self.samples) < 2:
            raise ConfigError("sampled profile needs at least 2 samples")
        coords = [c for c, _ in self.samples]
        if any(c2 <= c1 for c1, c2 in zip(coords, coords[1:])):
            raise ConfigError("sample coordinates must be strictly increasing")
        if any(k <= 0 for _, k in self.samples):
            raise ConfigError("all sampled stiffness values must be positive")
        if self.kind == "angular_positions" and not (
            0.0 <= coords[0] and coords[-1] <= 180.0
        ):
            raise ConfigError("angular coordinates must lie in [0, 180] deg")


@dataclass(frozen=True)
class ObjectModel:
    """A linear-spring object: stiffness profile, contact opening, damage limit."""

    profile: StiffnessProfile
    surface_offset: float  # gripper opening (mm) at which first contact occurs
    damage_threshold: float | None = None  # N, optional

    def __post_init__(self):
        if self.surface_offset < 0:
            raise ConfigError(f"surface_offset must be non-negative, got {self.surface_offset}")
        if self.damage_threshold is not None and self.damage_threshold <= 0:
            raise ConfigError("damage_threshold must be positive when set")


def stiffness_at(obj: ObjectModel | StiffnessProfile, coord: float) -> float:
    """Local stiffness (N/mm) at a probing coordinate."""
    profile = obj.profile if isinstance(obj, ObjectModel) else obj
    if profile.kind == "uniform":
        return profile.base_k
    coords = np.array([c for c, _ in profile.samples])
    ks = np.array([k for _, k in profile.samples])
    if not coords[0] <= coord <= coords[-1]:
        raise RangeError(f"coordinate {coord} outside sampled span [{coords[0]}, {coords[-1]}]")
    return float(np.interp(coord, coords, ks))


@dataclass(frozen=True)
class EquilibriumResult:
    alpha_star: float  # rad
    force: float  # N
    delta: float  # mm, object deformation
    dp: float  # kPa, pressure change from the lock baseline
    contact: bool
    saturated: bool = False


def _residual(geom, model, state, k_o, d_c, alpha):
    p = pressure_at_angle(state, model, alpha)
    delta = d_c - tip_extent(geom, alpha)
    return joint_torque(model, alpha, p) - k_o * delta * geom.tip_arm


def solve_equilibrium(
    geom: FingerGeometry,
    model: RingModel,
    state: RingState,
    k_o: float,
    d_c: float,
) -> EquilibriumResult:
    """Bending angle, force, deformation and dp once the gripper has closed d_c.

    Inside the fabric dead zone the joint exerts no torque, so the finger yields
    freely until the object force vanishes; a closing shallower than the dead-zone
    extent therefore produces bending but no force. Beyond that, the first sign
    change of the torque balance past alpha_slack is bracketed and bisected.
    """
    if not state.locked:
        raise StateError("solve_equilibrium requires a locked ring")
    if d_c < 0:
        raise DomainError(f"closing distance must be non-negative, got {d_c}")
    p0 = pressure_at_angle(state, model, 0.0)

    if k_o * geom.tip_arm * d_c <= TORQUE_FLOOR:
        # object offers no measurable resistance; nothing bends
        return EquilibriumResult(0.0, k_o * d_c, d_c, 0.0, contact=d_c > 0)

    slack = min(model.alpha_slack, geom.alpha_max)
    e_slack = tip_extent(geom, slack)
    if d_c <= e_slack:
        # free bend: zero-torque yield until the deformation is absorbed
        alpha = tip_extent_inverse(geom, d_c)
        dp = pressure_at_angle(state, model, alpha) - p0
        return EquilibriumResult(alpha, 0.0, 0.0, dp, contact=True)

    grid = np.linspace(slack, geom.alpha_max, _SCAN_POINTS)
    res = [_residual(geom, model, state, k_o, d_c, a) for a in grid]
    hit = next((i for i in range(1, len(grid)) if res[i - 1] < 0.0 <= res[i]), None)
    if hit is None:
        if res[0] >= 0.0:
            # balance already non-negative at the slack edge: root at the edge
            lo, hi = slack, slack
        else:
            # spring dominates everywhere: rigid-object limit, no fingertip yield
            return EquilibriumResult(0.0, k_o * d_c, d_c, 0.0, contact=True, saturated=True)
    else:
        lo, hi = float(grid[hit - 1]), float(grid[hit])
        while hi - lo > ALPHA_TOL:
            mid = 0.5 * (lo + hi)
            if _residual(geom, model, state, k_o, d_c, mid) < 0.0:
                lo = mid
            else:
                hi = mid
    alpha = 0.5 * (lo + hi)
    delta = d_c - tip_extent(geom, alpha)
    dp = pressure_at_angle(state, model, alpha) - p0
    return EquilibriumResult(alpha, k_o * delta, delta, dp, contact=True)


def solve_equilibrium_bruteforce(
    geom: FingerGeometry,
    model: RingModel,
    state: RingState,
    k_o: float,
    d_c: float,
    step_deg: float = 1e-3,
) -> EquilibriumResult:
    """Grid-scan oracle: residual on a dense angle grid, sign-change cell midpoint.

    Verification only; O(alpha_max / step) residual evaluations, vectorized.
    """
    if not state.locked:
        raise StateError("solve_equilibrium_bruteforce requires a locked ring")
    if d_c < 0:
        raise DomainError(f"closing distance must be non-negative, got {d_c}")
    p0 = pressure_at_angle(state, model, 0.0)

    if k_o * geom.tip_arm * d_c <= TORQUE_FLOOR:
        return EquilibriumResult(0.0, k_o * d_c, d_c, 0.0, contact=d_c > 0)

    alphas = np.arange(0.0, geom.alpha_max + 1e-12, math.radians(step_deg))
    p = state.nv_const / (model.v0 * (1.0 - model.kappa * alphas)) - model.p_atm
    np.maximum(p, 0.0, out=p)
    extent = geom.a + geom.radius * np.sin(alphas - geom.beta)
    tau = (model.c1 + model.c2 * p) * np.maximum(0.0, alphas - model.alpha_slack)
    res = tau - k_o * (d_c - extent) * geom.tip_arm
    signs = np.signbit(res)
    crossings = np.nonzero(signs[:-1] & ~signs[1:])[0]
    if crossings.size == 0:
        return EquilibriumResult(0.0, k_o * d_c, d_c, 0.0, contact=True, saturated=True)
    i = int(crossings[0])
    alpha = 0.5 * (alphas[i] + alphas[i + 1])
    delta = d_c - tip_extent(geom, alpha)
    # free-bend roots carry no force by construction
    force = 0.0 if alpha <= model.alpha_slack else k_o * delta
    dp = pressure_at_angle(state, model, alpha) - p0
    return EquilibriumResult(alpha, force, max(delta, 0.0) if alpha <= model.alpha_slack else delta, dp, contact=True)
