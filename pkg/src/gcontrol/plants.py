"""
Fixed-step plant models for closed-loop runs.

All plants integrate with semi-implicit Euler (velocity first, then position)
and are pure functions of their inputs: they return a new ``PlantState``.
Altitude is positive up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import ContractViolation, DivergenceError

GRAVITY = 9.81


@dataclass(frozen=True)
class PlantState:
    position: float = 0.0
    velocity: float = 0.0
    extra: Tuple[float, ...] = ()


def _checked(state: PlantState, t: float) -> PlantState:
    vals = (state.position, state.velocity) + tuple(state.extra)
    if not all(math.isfinite(v) for v in vals):
        raise DivergenceError(f"plant state became non-finite at t={t:.6g}", t=t)
    return state


@dataclass(frozen=True)
class GustModel:
    """Half-sine vertical gust pulse pushing the vehicle down."""

    peak_velocity: float = 40.0
    onset_time: float = 2.0
    duration: float = 1.0
    drag_coeff: float = 0.05    # N per m/s of gust velocity

    def __post_init__(self):
        if self.peak_velocity < 0 or self.onset_time < 0 or self.duration <= 0:
            raise ContractViolation("gust needs peak >= 0, onset >= 0, duration > 0")

    @property
    def end_time(self) -> float:
        return self.onset_time + self.duration

    def velocity(self, t: float) -> float:
        if t < self.onset_time or t > self.end_time:
            return 0.0
        return self.peak_velocity * math.sin(math.pi * (t - self.onset_time) / self.duration)

    def force(self, t: float) -> float:
        return self.drag_coeff * self.velocity(t)


def _gust_force(gust, t):
    return 0.0 if gust is None else gust.force(t)


# -- second-order LTI test plant --------------------------------------------

@dataclass(frozen=True)
class LtiParams:
    zeta: float = 0.7
    wn: float = 2.0
    gain: float = 4.0


def step_lti2(state: PlantState, u: float, dt: float, params: LtiParams = LtiParams(),
              disturbance: float = 0.0, t: float = 0.0) -> PlantState:
    """``x'' = -2 zeta wn x' - wn^2 x + K u - disturbance``."""
    if dt <= 0:
        raise ContractViolation("dt must be positive")
    p = params
    acc = -2.0 * p.zeta * p.wn * state.velocity - p.wn ** 2 * state.position + p.gain * u - disturbance
    v = state.velocity + dt * acc
    return _checked(PlantState(state.position + dt * v, v, state.extra), t)


# -- hexacopter altitude surrogate ------------------------------------------

@dataclass(frozen=True)
class HexaParams:
    mass: float = 1.5
    gravity: float = GRAVITY
    drag: float = 0.05          # quadratic drag, N s^2 / m^2

    @property
    def hover_thrust(self) -> float:
        return self.mass * self.gravity


def step_hexa_altitude(state: PlantState, thrust: float, gust, t: float, dt: float,
                       params: HexaParams = HexaParams()) -> PlantState:
    if dt <= 0:
        raise ContractViolation("dt must be positive")
    p = params
    v0 = state.velocity
    acc = (thrust - p.mass * p.gravity - p.drag * v0 * abs(v0) - _gust_force(gust, t)) / p.mass
    v = v0 + dt * acc
    return _checked(PlantState(state.position + dt * v, v, state.extra), t)


# -- flapping-wing vehicle ----------------------------------------------------

@dataclass(frozen=True)
class FlappingParams:
    amplitude: float = math.pi / 2     # rad
    frequency: float = 2.0             # Hz
    mean_aoa: float = math.pi / 4      # rad
    pitch_amp: float = math.pi / 4     # rad
    phase: float = math.pi / 2         # rad
    dt: float = 0.01                   # s

    def __post_init__(self):
        if self.frequency <= 0 or self.dt <= 0:
            raise ContractViolation("flapping frequency and dt must be positive")


# Pressure-center layout, mirror symmetric about both body axes.
DEFAULT_CP = ((0.08, 0.05, 0.0), (-0.08, 0.05, 0.0), (0.08, -0.05, 0.0), (-0.08, -0.05, 0.0))


@dataclass(frozen=True)
class WingGeometry:
    cg: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    cp: Tuple[Tuple[float, float, float], ...] = DEFAULT_CP
    mass: float = 0.1
    gravity: float = GRAVITY

    def __post_init__(self):
        if self.mass <= 0:
            raise ContractViolation("mass must be positive")
        if len(self.cp) != 4:
            raise ContractViolation("four wing pressure centers are required")


def flapping_angle(p: FlappingParams, t: float) -> float:
    if t < 0:
        raise ContractViolation("t must be non-negative")
    return p.amplitude * math.cos(math.pi * p.frequency * t)


def angle_of_attack(p: FlappingParams, omega: float, t: float) -> float:
    """Pitching profile; ``omega * t`` is the accumulated phase."""
    return p.mean_aoa - p.pitch_amp * math.sin(omega * t + p.phase)


def forces_and_moments(wing_forces, geo: WingGeometry, dcm_gravity=(0.0, 0.0, -1.0)):
    """
    Aggregate four wing forces into body force and moment.

    ``M = sum_i F_i x (CG - CP_i)`` and ``F = sum_i F_i + m g dcm_gravity``.
    """
    fr = np.asarray(wing_forces, dtype=float).reshape(4, 3)
    arms = np.asarray(geo.cg, dtype=float)[None, :] - np.asarray(geo.cp, dtype=float)
    moment = np.cross(fr, arms).sum(axis=0)
    force = fr.sum(axis=0) + geo.mass * geo.gravity * np.asarray(dcm_gravity, dtype=float)
    return force, moment


def hover_lift_coefficient(geo: WingGeometry, amplitude: float = math.pi / 2,
                           frequency: float = 2.0) -> float:
    """Stub constant ``c_L`` such that four wings at this amplitude/frequency carry ``m g``."""
    return geo.mass * geo.gravity / (4.0 * amplitude * frequency ** 2)


def wing_forces(flap: FlappingParams, c_lift: float) -> np.ndarray:
    """Mean vertical force per wing, ``c_L * amplitude * f^2`` (aerodynamics stub)."""
    fz = c_lift * flap.amplitude * flap.frequency ** 2
    return np.tile([0.0, 0.0, fz], (4, 1))


def step_bifw(state: PlantState, flap: FlappingParams, geo: WingGeometry, gust, t: float,
              dt: float, c_lift: float = None) -> PlantState:
    """Altitude channel of the flapping-wing vehicle driven by the force stub."""
    if dt <= 0:
        raise ContractViolation("dt must be positive")
    if c_lift is None:
        c_lift = hover_lift_coefficient(geo)
    force, moment = forces_and_moments(wing_forces(flap, c_lift), geo)
    acc = (force[2] - _gust_force(gust, t)) / geo.mass
    v = state.velocity + dt * acc
    omega = 2.0 * math.pi * flap.frequency
    extra = (flapping_angle(flap, t), angle_of_attack(flap, omega, t)) + tuple(float(m) for m in moment)
    return _checked(PlantState(state.position + dt * v, v, extra), t)
