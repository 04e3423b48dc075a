"""Ground-truth pneumatic plant: ring cavity volume vs bending, isothermal
locked-air pressure, the joint torque surface with its fabric-slack dead zone,
valve leakage, and the quantized noisy pressure sensor.

Pressures are gauge kPa unless named otherwise; volumes mm^3; torques N*mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, StateError


@dataclass(frozen=True)
class RingModel:
    """Parameters of one soft pneumatic ring and its torque surface.

    Volume follows v0 * (1 - kappa * alpha); the trapped-gas pressure then obeys
    the isothermal law (p + p_atm) * V = const while the valve is locked.
    Torque is (c1 + c2 * p) * max(0, alpha - alpha_slack): zero inside the fabric
    dead zone, growing with both bending and pressure beyond it.
    """

    v0: float = 5000.0
    kappa: float = 0.28
    alpha_slack: float = math.radians(20.0)
    c1: float = 30000.0
    c2: float = 600.0
    p_atm: float = 101.325
    leak_rate: float = 5.0e-4

    def __post_init__(self):
        if self.v0 <= 0:
            raise DomainError(f"v0 must be positive, got {self.v0}")
        if not 0.0 <= self.kappa * math.radians(80.0) < 1.0:
            raise DomainError(f"kappa={self.kappa} empties the cavity within the joint range")
        if not 0.0 <= self.alpha_slack <= math.radians(30.0):
            raise DomainError(f"alpha_slack must be in [0, 30 deg], got {self.alpha_slack} rad")
        if self.c1 < 0 or self.c2 < 0:
            raise DomainError("torque coefficients must be non-negative")
        if self.leak_rate < 0:
            raise DomainError(f"leak_rate must be non-negative, got {self.leak_rate}")


@dataclass(frozen=True)
class RingState:
    """Instantaneous ring state; nv_const is the conserved (p_abs * V) when locked."""

    p_gauge: float = 0.0
    alpha: float = 0.0
    locked: bool = False
    nv_const: float = 0.0

    def __post_init__(self):
        if self.p_gauge < 0:
            raise DomainError(f"gauge pressure must be non-negative, got {self.p_gauge}")


def volume_at_angle(model: RingModel, alpha: float) -> float:
    """Ring cavity volume at bending angle alpha (mm^3); strictly decreasing."""
    if alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    frac = 1.0 - model.kappa * alpha
    if frac <= 0:
        raise DomainError(f"alpha={alpha} rad collapses the cavity")
    return model.v0 * frac


def lock(state: RingState, model: RingModel) -> RingState:
    """Close the valve, trapping the current amount of air."""
    if state.locked:
        raise StateError("ring is already locked")
    nv = (state.p_gauge + model.p_atm) * volume_at_angle(model, state.alpha)
    return replace(state, locked=True, nv_const=nv)


def pressure_at_angle(state: RingState, model: RingModel, alpha: float) -> float:
    """Gauge pressure of the trapped air at bending angle alpha."""
    if not state.locked:
        raise StateError("pressure_at_angle requires a locked ring")
    p = state.nv_const / volume_at_angle(model, alpha) - model.p_atm
    return max(p, 0.0)


def joint_torque(model: RingModel, alpha: float, p_gauge: float) -> float:
    """Joint torque (N*mm) at bending angle alpha and instantaneous gauge pressure."""
    if alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    if p_gauge < 0:
        raise DomainError(f"p_gauge must be non-negative, got {p_gauge}")
    return (model.c1 + model.c2 * p_gauge) * max(0.0, alpha - model.alpha_slack)


def leak_step(state: RingState, model: RingModel, dt: float) -> RingState:
    """Reduce the trapped gas quantity by leak_rate * dt, floored at atmospheric."""
    if dt < 0:
        raise DomainError(f"dt must be non-negative, got {dt}")
    if not state.locked:
        raise StateError("leak_step requires a locked ring")
    if model.leak_rate == 0.0 or dt == 0.0:
        return state
    floor = model.p_atm * volume_at_angle(model, state.alpha)
    nv = max(state.nv_const * (1.0 - model.leak_rate * dt), floor)
    return replace(state, nv_const=nv)


@dataclass(frozen=True)
class SensorModel:
    """Pressure sensor: gaussian noise as a fraction of full scale, ADC quantization."""

    full_scale: float = 700.0
    noise_frac: float = 0.025 / 3.0  # 2.5% max deviation read as a 3-sigma bound
    quant_step: float = 0.68  # 10-bit ADC over the full scale
    seed: int = 0

    def __post_init__(self):
        if self.full_scale <= 0:
            raise DomainError(f"full_scale must be positive, got {self.full_scale}")
        if self.noise_frac < 0 or self.quant_step < 0:
            raise DomainError("noise_frac and quant_step must be non-negative")

    @property
    def sigma(self) -> float:
        """1-sigma noise of a single raw reading (kPa)."""
        return self.noise_frac * self.full_scale

    def noiseless(self) -> "SensorModel":
        return replace(self, noise_frac=0.0, quant_step=0.0)


def quantize(value: float, step: float) -> float:
    """Round-half-up onto a grid of the given step; step 0 passes through."""
    if step <= 0:
        return value
    return math.floor(value / step + 0.5) * step


def measurement_sigma(sensor: SensorModel, settle_reads: int) -> float:
    """1-sigma of a settle-averaged measurement, quantization included."""
    per_read = math.sqrt(sensor.sigma**2 + sensor.quant_step**2 / 12.0)
    return per_read / math.sqrt(max(settle_reads, 1))


class PressureSensor:
    """Stateful seeded sampling stream for one SensorModel.

    Deterministic for a fixed seed and call sequence; one instance must be
    confined to a single simulation at a time.
    """

    def __init__(self, model: SensorModel, seed=None):
        self.model = model
        self._rng = np.random.default_rng(model.seed if seed is None else seed)

    def read(self, p_true: float) -> float:
        """One noisy quantized reading of the true pressure."""
        noisy = p_true
        if self.model.noise_frac > 0:
            noisy += self._rng.normal(0.0, self.model.sigma)
        return quantize(noisy, self.model.quant_step)

    def read_avg(self, p_true: float, n: int) -> float:
        """Settle-averaged measurement over n consecutive readings."""
        if n < 1:
            raise DomainError(f"settle read count must be >= 1, got {n}")
        if self.model.noise_frac == 0 and self.model.quant_step == 0:
            return p_true
        noise = self._rng.normal(0.0, self.model.sigma, n) if self.model.noise_frac > 0 else np.zeros(n)
        reads = p_true + noise
        if self.model.quant_step > 0:
            reads = np.floor(reads / self.model.quant_step + 0.5) * self.model.quant_step
        return float(reads.mean())


def sensor_read(stream: PressureSensor, p_true: float) -> float:
    """Functional alias for a single sensor reading."""
    return stream.read(p_true)
