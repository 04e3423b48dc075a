"""Rigid-finger kinematics: fingertip pose on the arc around the passive joint,
the fingertip x-extent, and object deformation for a commanded closing distance.

Angles are radians internally; degrees appear only at external interfaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(angle + math.pi, TWO_PI)
    if a <= 0.0:
        a += TWO_PI
    return a - math.pi


@dataclass(frozen=True)
class Pose2D:
    """Planar pose: x, y in mm, yaw in rad wrapped to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


@dataclass(frozen=True)
class FingerGeometry:
    """Dimensions of one hybrid finger.

    a, b are the two link offsets (mm) that place the fingertip contact point on a
    circle of radius sqrt(a^2 + b^2) around the joint; beta is the design angle.
    With the default beta = atan(a/b) the fingertip extent is exactly zero at rest,
    which makes the deformation bookkeeping self-consistent at first contact.
    tip_arm is the moment arm (mm) of the fingertip contact force about the joint.
    """

    a: float = 15.0
    b: float = 40.0
    beta: float | None = None
    total_length: float = 80.0
    alpha_max: float = math.radians(80.0)
    tip_arm: float = 40.0

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", math.atan2(self.a, self.b))
        if self.a <= 0 or self.b <= 0:
            raise DomainError(f"link lengths must be positive, got a={self.a}, b={self.b}")
        if self.total_length <= 0:
            raise DomainError(f"total_length must be positive, got {self.total_length}")
        if not 0.0 < self.alpha_max <= math.radians(80.0) + 1e-12:
            raise DomainError(f"alpha_max must be in (0, 80 deg], got {self.alpha_max} rad")
        if self.tip_arm <= 0:
            raise DomainError(f"tip_arm must be positive, got {self.tip_arm}")

    @property
    def radius(self) -> float:
        """Distance from joint axis to fingertip contact point (mm)."""
        return math.hypot(self.a, self.b)

    def check_alpha(self, alpha: float) -> None:
        if not 0.0 <= alpha <= self.alpha_max + 1e-12:
            raise DomainError(
                f"bending angle {alpha} rad outside [0, {self.alpha_max}] rad"
            )


def end_effector_pose(geom: FingerGeometry, origin: Pose2D, alpha: float) -> Pose2D:
    """Fingertip pose at bending angle alpha about the joint at `origin`."""
    geom.check_alpha(alpha)
    r = geom.radius
    return Pose2D(
        x=origin.x + r * math.sin(alpha - geom.beta),
        y=origin.y + r * math.cos(alpha - geom.beta),
        yaw=wrap_angle(origin.yaw - alpha),
    )


def tip_extent(geom: FingerGeometry, alpha: float) -> float:
    """Inward x-extent of the fingertip at bending angle alpha (mm).

    Zero at alpha = 0 under the default beta = atan(a/b); strictly increasing
    in alpha while alpha - beta stays within (-pi/2, pi/2).
    """
    geom.check_alpha(alpha)
    return geom.a + geom.radius * math.sin(alpha - geom.beta)


def tip_extent_inverse(geom: FingerGeometry, extent: float) -> float:
    """Bending angle whose fingertip extent equals `extent` (mm)."""
    lo = tip_extent(geom, 0.0)
    hi = tip_extent(geom, geom.alpha_max)
    if not lo - 1e-9 <= extent <= hi + 1e-9:
        raise DomainError(f"extent {extent} mm outside reachable [{lo}, {hi}] mm")
    s = (extent - geom.a) / geom.radius
    s = min(1.0, max(-1.0, s))
    alpha = geom.beta + math.asin(s)
    return min(max(alpha, 0.0), geom.alpha_max)


def object_deformation(geom: FingerGeometry, d_c: float, alpha: float) -> float:
    """Object deformation along the closing axis for closing distance d_c (mm).

    May be negative, meaning the fingertip has swung back past the commanded
    closing; callers treat that as loss of contact.
    """
    if d_c < 0:
        raise DomainError(f"closing distance must be non-negative, got {d_c}")
    return d_c - tip_extent(geom, alpha)
