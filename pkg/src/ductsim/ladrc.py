"""Linear active disturbance rejection attitude control.

Each axis is treated as a double integrator ``y'' = b0 * u + f`` where ``f``
lumps everything the model leaves out (coupling, Q != I, payload moments,
inertia errors). A third-order extended state observer estimates
(y, y', f); a PD law on the estimates plus ``-f_hat / b0`` cancels the
disturbance. Roll, pitch and yaw use the same structure with their own b0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .actuation import DesiredWrench
from .faults import ObserverDivergence
from .vehicle import VehicleParams

AXES = ("roll", "pitch", "yaw")
STABILITY_MARGIN = 0.3  # omega_obs * dt upper bound for the Euler-discretised ESO
DIVERGENCE_BOUND = 1e6


@dataclass(frozen=True)
class EsoGains:
    l1: float
    l2: float
    l3: float
    b0: float
    omega_obs: float

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0 and self.l3 > 0):
            raise ValueError("observer gains l1, l2, l3 must be positive")
        if self.b0 == 0 or not math.isfinite(self.b0):
            raise ValueError("b0 must be finite and non-zero")

    @classmethod
    def from_bandwidth(cls, omega_obs: float, b0: float) -> EsoGains:
        """Place all three observer poles at -omega_obs."""
        w = float(omega_obs)
        return cls(3.0 * w, 3.0 * w * w, w ** 3, float(b0), w)


@dataclass(frozen=True)
class EsoState:
    z1: float = 0.0  # angle estimate, rad
    z2: float = 0.0  # rate estimate, rad/s
    z3: float = 0.0  # total disturbance estimate, rad/s^2

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.z1, self.z2, self.z3)


@dataclass(frozen=True)
class AxisControlGains:
    kp: float  # 1/s^2
    kd: float  # 1/s

    def __post_init__(self):
        if not (self.kp > 0 and self.kd > 0):
            raise ValueError("kp and kd must be positive")


def eso_step(
    z: EsoState,
    y_meas: float,
    u: float,
    gains: EsoGains,
    dt: float,
    bound: float = DIVERGENCE_BOUND,
) -> EsoState:
    """One forward-Euler observer update driven by the current measurement."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not gains.omega_obs * dt < STABILITY_MARGIN:
        raise ValueError(
            f"omega_obs*dt = {gains.omega_obs * dt:.3g} violates the "
            f"{STABILITY_MARGIN} stability margin"
        )
    e = y_meas - z.z1
    z1 = z.z1 + dt * (z.z2 + gains.l1 * e)
    z2 = z.z2 + dt * (z.z3 + gains.b0 * u + gains.l2 * e)
    z3 = z.z3 + dt * (gains.l3 * e)
    for name, value in (("z1", z1), ("z2", z2), ("z3", z3)):
        if not abs(value) <= bound:
            raise ObserverDivergence(f"observer {name} = {value:.3g} exceeds bound {bound:.3g}")
    return EsoState(z1, z2, z3)


def _control(z: EsoState, setpoint: float, gains: AxisControlGains, eso: EsoGains,
             torque_limit: float) -> tuple[float, float, bool]:
    u0 = gains.kp * (setpoint - z.z1) - gains.kd * z.z2
    u = (u0 - z.z3) / eso.b0
    saturated = abs(u) > torque_limit
    if saturated:
        u = math.copysign(torque_limit, u)
    return u0, u, saturated


def control_law(
    z: EsoState,
    setpoint: float,
    gains: AxisControlGains,
    eso: EsoGains,
    torque_limit: float = math.inf,
) -> float:
    """Axis torque: PD on the estimates, minus the disturbance estimate, over b0."""
    return _control(z, setpoint, gains, eso, torque_limit)[1]


@dataclass(frozen=True)
class AxisConfig:
    control: AxisControlGains
    eso: EsoGains
    torque_limit: float  # N m


@dataclass(frozen=True)
class ControllerConfig:
    roll: AxisConfig
    pitch: AxisConfig
    yaw: AxisConfig
    dt: float = 0.005
    divergence_bound: float = DIVERGENCE_BOUND

    @property
    def axes(self) -> tuple[AxisConfig, AxisConfig, AxisConfig]:
        return (self.roll, self.pitch, self.yaw)


def default_controller_config(
    params: VehicleParams,
    kp: float = 100.0,
    kd: float = 20.0,
    omega_obs: float = 50.0,
    yaw_torque_limit: float = 0.1,
) -> ControllerConfig:
    """Same gains on every axis, b0 = 1/I for the axis.

    kp=100, kd=20 puts the tracking poles at a double -10 rad/s; omega_obs=50
    keeps the observer five times faster while omega_obs*dt stays at 0.25.
    """
    ix, iy, iz = params.inertia_diag
    gains = AxisControlGains(kp, kd)
    vane_limit = params.vane_moment_max
    return ControllerConfig(
        roll=AxisConfig(gains, EsoGains.from_bandwidth(omega_obs, 1.0 / ix), vane_limit),
        pitch=AxisConfig(gains, EsoGains.from_bandwidth(omega_obs, 1.0 / iy), vane_limit),
        yaw=AxisConfig(gains, EsoGains.from_bandwidth(omega_obs, 1.0 / iz), yaw_torque_limit),
        dt=params.control_period,
    )


class AxisTelemetry(NamedTuple):
    z1: float
    z2: float
    z3: float
    u0: float
    u: float
    saturated: bool


def attitude_controller_step(
    meas_euler: Sequence[float],
    setpoints: Sequence[float],
    thrust_setpoint: float,
    observers: Sequence[EsoState],
    config: ControllerConfig,
    last_torque: Sequence[float] = (0.0, 0.0, 0.0),
) -> tuple[DesiredWrench, tuple[EsoState, EsoState, EsoState], tuple[AxisTelemetry, ...]]:
    """Advance all three axis observers and compute the desired wrench.

    ``last_torque`` is the torque applied over the previous period; it drives
    the observers so they stay consistent when the output saturates.
    """
    new_obs = []
    torques = []
    telemetry = []
    for name, axis, z, y, sp, u_prev in zip(
        AXES, config.axes, observers, meas_euler, setpoints, last_torque
    ):
        try:
            z_next = eso_step(z, float(y), float(u_prev), axis.eso, config.dt,
                              config.divergence_bound)
        except ObserverDivergence as exc:
            raise ObserverDivergence(f"{name}: {exc}", axis=name) from None
        u0, u, sat = _control(z_next, float(sp), axis.control, axis.eso, axis.torque_limit)
        new_obs.append(z_next)
        torques.append(u)
        telemetry.append(AxisTelemetry(z_next.z1, z_next.z2, z_next.z3, u0, u, sat))
    wrench = DesiredWrench(float(thrust_setpoint), tuple(torques))
    return wrench, tuple(new_obs), tuple(telemetry)


@dataclass
class AttitudeController:
    """Stateful wrapper that owns the observers and the last applied torque."""

    config: ControllerConfig
    observers: tuple[EsoState, EsoState, EsoState] = field(
        default_factory=lambda: (EsoState(), EsoState(), EsoState())
    )
    last_torque: tuple[float, float, float] = (0.0, 0.0, 0.0)
    telemetry: tuple[AxisTelemetry, ...] = ()

    def reset(self, euler: Sequence[float] = (0.0, 0.0, 0.0)) -> None:
        """Start converged at the given attitude, at rest, with no disturbance."""
        self.observers = tuple(EsoState(float(a), 0.0, 0.0) for a in euler)
        self.last_torque = (0.0, 0.0, 0.0)
        self.telemetry = ()

    def step(self, meas_euler, setpoints, thrust_setpoint: float) -> DesiredWrench:
        wrench, self.observers, self.telemetry = attitude_controller_step(
            meas_euler, setpoints, thrust_setpoint, self.observers, self.config,
            self.last_torque,
        )
        self.last_torque = wrench.torque_body
        return wrench
