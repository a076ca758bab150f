"""Shared value types and the airframe parameter set.

Frames: NED inertial, body z axis down along the motor axis. Thrust
coefficients are stored as positive magnitudes; propeller thrust acts along
-z_B. Vane angles use a single "angle unit" matching the denominator of
``c_m_delta`` (degrees in the default fixture).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

import numpy as np

THETA_SINGULAR_GUARD = math.radians(80.0)


class ParamsError(ValueError):
    """Raised when a parameter set violates one or more invariants.

    ``problems`` holds one ``(field_name, message)`` pair per violation.
    """

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{name}: {msg}" for name, msg in problems))


@dataclass(frozen=True)
class VehicleParams:
    mass_total: float = 1.59  # kg, whole airframe incl. battery
    inertia_diag: tuple[float, float, float] = (0.02, 0.02, 0.03)  # kg m^2
    c_tz1: float = 2.0e-6  # N / (rad/s)^2, upper rotor
    c_tz2: float = 2.0e-6  # N / (rad/s)^2, lower rotor
    c_mz1: float = 4.0e-8  # N m / (rad/s)^2
    c_mz2: float = -4.0e-8
    c_m_delta: float = 0.0014  # N m per angle unit of differential deflection
    c_mz_vane: float = 0.0  # yaw moment per angle unit of summed deflection
    vane_arm_l1: float = 0.06  # m
    vane_arm_l2: float = 0.10  # m
    gravity: float = 9.81  # m/s^2
    motor_speed_max: float = 2800.0  # rad/s
    vane_deflection_max: float = 43.0  # angle units, per vane
    control_period: float = 0.005  # s

    @property
    def inertia(self) -> np.ndarray:
        return np.asarray(self.inertia_diag, dtype=float)

    @property
    def weight(self) -> float:
        return self.mass_total * self.gravity

    @property
    def vane_moment_max(self) -> float:
        """Largest roll/pitch moment the opposing vane pair can produce."""
        return self.c_m_delta * 2.0 * self.vane_deflection_max

    def with_mass(self, mass_total: float) -> VehicleParams:
        return replace(self, mass_total=mass_total)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> VehicleParams:
        """Build from a key = field-name mapping; omitted keys keep defaults."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParamsError([(k, "unknown parameter") for k in unknown])
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key == "inertia_diag":
                value = tuple(float(v) for v in value)
                if len(value) != 3:
                    raise ParamsError([(key, "expected three entries (Ix, Iy, Iz)")])
            else:
                value = float(value)
            kwargs[key] = value
        return validate_params(cls(**kwargs))


def validate_params(raw: VehicleParams) -> VehicleParams:
    """Check every invariant and return ``raw`` untouched, or raise ParamsError."""
    problems: list[tuple[str, str]] = []

    def finite(name: str, value: float) -> bool:
        if not math.isfinite(value):
            problems.append((name, f"{name} must be finite"))
            return False
        return True

    for f in fields(raw):
        value = getattr(raw, f.name)
        if isinstance(value, tuple):
            for v in value:
                finite(f.name, v)
        else:
            finite(f.name, value)

    if not raw.mass_total > 0:
        problems.append(("mass_total", "mass_total must be positive"))
    if len(raw.inertia_diag) != 3 or not all(i > 0 for i in raw.inertia_diag):
        problems.append(("inertia_diag", "inertia entries must be positive"))
    for name in ("c_tz1", "c_tz2"):
        if not getattr(raw, name) > 0:
            problems.append((name, f"{name} must be positive (thrust magnitude)"))
    if not raw.c_mz1 * raw.c_mz2 < 0:
        problems.append(("c_mz1", "yaw coefficients must have opposite signs"))
    if not raw.c_m_delta > 0:
        problems.append(("c_m_delta", "c_m_delta must be positive"))
    if not raw.vane_deflection_max > 0:
        problems.append(("vane_deflection_max", "vane_deflection_max must be positive"))
    if not raw.motor_speed_max > 0:
        problems.append(("motor_speed_max", "motor_speed_max must be positive"))
    if not raw.gravity > 0:
        problems.append(("gravity", "gravity must be positive"))
    if not raw.control_period > 0:
        problems.append(("control_period", "control_period must be positive"))
    if problems:
        raise ParamsError(problems)
    return raw


def default_params() -> VehicleParams:
    return validate_params(VehicleParams())


def _vec3(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class RigidBodyState:
    position_ned: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity_ned: np.ndarray = field(default_factory=lambda: np.zeros(3))
    euler: np.ndarray = field(default_factory=lambda: np.zeros(3))  # phi, theta, psi
    body_rates: np.ndarray = field(default_factory=lambda: np.zeros(3))  # p, q, r

    def __post_init__(self):
        for name in ("position_ned", "velocity_ned", "euler", "body_rates"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))

    def to_array(self) -> np.ndarray:
        return np.concatenate(
            (self.position_ned, self.velocity_ned, self.euler, self.body_rates)
        )

    @classmethod
    def from_array(cls, x) -> RigidBodyState:
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_array())))


@dataclass(frozen=True)
class ActuatorCommand:
    omega1: float = 0.0  # rad/s, upper motor
    omega2: float = 0.0  # rad/s, lower motor
    delta: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    # names of channels clamped during allocation: omega1, omega2, vane_x, vane_y
    saturated: tuple[str, ...] = ()

    @property
    def is_saturated(self) -> bool:
        return bool(self.saturated)


@dataclass(frozen=True)
class Wrench:
    force_body: np.ndarray = field(default_factory=lambda: np.zeros(3))
    moment_body: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "force_body", _vec3(self.force_body))
        object.__setattr__(self, "moment_body", _vec3(self.moment_body))

    def __add__(self, other: Wrench) -> Wrench:
        return Wrench(
            self.force_body + other.force_body, self.moment_body + other.moment_body
        )

    @classmethod
    def zero(cls) -> Wrench:
        return cls()
