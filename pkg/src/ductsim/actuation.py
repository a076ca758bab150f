"""Forward actuator models and control allocation.

Yaw is handled only by the rotor speed differential; roll and pitch only by
opposing vane pairs deflected equal and opposite (delta1 = -delta3,
delta2 = -delta4). That removes the redundancy so the inverse map is a
closed-form solve. ``c_m_delta`` multiplies the pair differential
(-delta1 + delta3), so each vane carries half of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .faults import AllocationInfeasible, AllocationSingular
from .vehicle import ActuatorCommand, VehicleParams, Wrench

SINGULAR_EPS = 1e-12


@dataclass(frozen=True)
class DesiredWrench:
    thrust: float  # N, magnitude along -z_B
    torque_body: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.thrust >= 0:
            raise ValueError(f"thrust must be non-negative, got {self.thrust}")
        object.__setattr__(self, "torque_body", tuple(float(t) for t in self.torque_body))


def propeller_wrench(omega1: float, omega2: float, params: VehicleParams) -> Wrench:
    w1 = omega1 * omega1
    w2 = omega2 * omega2
    thrust = params.c_tz1 * w1 + params.c_tz2 * w2
    yaw = params.c_mz1 * w1 + params.c_mz2 * w2
    return Wrench(np.array([0.0, 0.0, -thrust]), np.array([0.0, 0.0, yaw]))


def vane_moment(delta, params: VehicleParams) -> Wrench:
    d1, d2, d3, d4 = (float(d) for d in delta)
    moment = np.array(
        [
            params.c_m_delta * (-d1 + d3),
            params.c_m_delta * (-d2 + d4),
            params.c_mz_vane * (d1 + d2 + d3 + d4),
        ]
    )
    return Wrench(np.zeros(3), moment)


def actuator_wrench(cmd: ActuatorCommand, params: VehicleParams) -> Wrench:
    """Total propeller plus vane wrench for a command."""
    return propeller_wrench(cmd.omega1, cmd.omega2, params) + vane_moment(cmd.delta, params)


def allocate(desired: DesiredWrench, params: VehicleParams) -> ActuatorCommand:
    """Map a desired thrust and body torque onto motor speeds and vane angles.

    Vane differentials are clamped first, then the 2x2 rotor system
    ``[c_tz1 c_tz2; c_mz1 c_mz2] [W1 W2]^T = [T, tau_z]`` is solved for the
    squared speeds. Speeds above ``motor_speed_max`` are clamped; clamped
    channels are listed in ``ActuatorCommand.saturated``. A negative squared
    speed cannot be realised and raises AllocationInfeasible.
    """
    tau_x, tau_y, tau_z = desired.torque_body
    saturated = []
    limit = params.vane_deflection_max

    # differential -delta1 + delta3 = tau_x / c_m_delta, split evenly over the pair
    hx = 0.5 * tau_x / params.c_m_delta
    hy = 0.5 * tau_y / params.c_m_delta
    if abs(hx) > limit:
        hx = math.copysign(limit, hx)
        saturated.append("vane_x")
    if abs(hy) > limit:
        hy = math.copysign(limit, hy)
        saturated.append("vane_y")
    delta = (-hx, -hy, hx, hy)

    # vane yaw coupling is removed from what the rotors must supply
    tau_z_rotor = tau_z - params.c_mz_vane * sum(delta)

    det = params.c_tz1 * params.c_mz2 - params.c_tz2 * params.c_mz1
    # products of the raw coefficients are ~1e-13, so the threshold is relative
    scale = abs(params.c_tz1 * params.c_mz2) + abs(params.c_tz2 * params.c_mz1)
    if not abs(det) >= SINGULAR_EPS * scale or scale == 0.0:
        raise AllocationSingular(f"rotor allocation matrix is singular (det={det:.3g})")

    thrust = desired.thrust
    w1 = (params.c_mz2 * thrust - params.c_tz2 * tau_z_rotor) / det
    w2 = (params.c_tz1 * tau_z_rotor - params.c_mz1 * thrust) / det
    for name, w in (("omega1", w1), ("omega2", w2)):
        if w < 0:
            raise AllocationInfeasible(
                f"{name} squared speed {w:.6g} is negative "
                f"(thrust={thrust:.6g} N, tau_z={tau_z:.6g} N m)",
                channel=name,
            )

    w_max = params.motor_speed_max ** 2
    if w1 > w_max:
        w1 = w_max
        saturated.append("omega1")
    if w2 > w_max:
        w2 = w_max
        saturated.append("omega2")

    return ActuatorCommand(
        omega1=math.sqrt(w1),
        omega2=math.sqrt(w2),
        delta=delta,
        saturated=tuple(saturated),
    )
