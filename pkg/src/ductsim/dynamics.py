"""Rigid-body equations of motion and the fixed-step integrator.

Rotational: J w_dot + w x (J w) = M in the body frame, with Z-Y-X Euler
kinematics eta_dot = Q(eta) w. Translational: m v_dot = R_bg F_body in NED.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actuation import actuator_wrench
from .faults import SingularityFault
from .vehicle import (
    THETA_SINGULAR_GUARD,
    ActuatorCommand,
    RigidBodyState,
    VehicleParams,
    Wrench,
)


@dataclass(frozen=True)
class StateDerivative:
    d_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d_euler: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d_body_rates: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def to_array(self) -> np.ndarray:
        return np.concatenate(
            (self.d_position, self.d_velocity, self.d_euler, self.d_body_rates)
        )


def _check_guard(theta: float, guard: float = THETA_SINGULAR_GUARD) -> None:
    if not abs(theta) < guard:
        raise SingularityFault(
            f"pitch {math.degrees(theta):.2f} deg reached the "
            f"{math.degrees(guard):.1f} deg Euler singularity guard"
        )


def rotation_body_to_ned(euler) -> np.ndarray:
    """R_bg = Rz(psi) Ry(theta) Rx(phi)."""
    phi, theta, psi = euler
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array(
        [
            [ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp],
            [ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp],
            [-st, sf * ct, cf * ct],
        ]
    )


def rotation_ned_to_body(euler) -> np.ndarray:
    return rotation_body_to_ned(euler).T


def gravity_body(euler, mass: float, g: float) -> np.ndarray:
    """Weight m*g along NED down, expressed in the body frame."""
    phi, theta, _ = euler
    w = mass * g
    return np.array(
        [
            -w * math.sin(theta),
            w * math.sin(phi) * math.cos(theta),
            w * math.cos(phi) * math.cos(theta),
        ]
    )


def euler_rate_matrix(euler, guard: float = THETA_SINGULAR_GUARD) -> np.ndarray:
    """Q such that eta_dot = Q @ (p, q, r) for Z-Y-X angles."""
    phi, theta, _ = euler
    _check_guard(theta, guard)
    sf, cf = math.sin(phi), math.cos(phi)
    tt = math.tan(theta)
    ct = math.cos(theta)
    return np.array(
        [
            [1.0, sf * tt, cf * tt],
            [0.0, cf, -sf],
            [0.0, sf / ct, cf / ct],
        ]
    )


def _derivative(
    x: np.ndarray,
    force_applied: tuple[float, float, float],
    moment_applied: tuple[float, float, float],
    params: VehicleParams,
    inertia: tuple[float, float, float],
) -> np.ndarray:
    # Scalar form of gravity_body / euler_rate_matrix / rotation_body_to_ned;
    # this is the integrator hot path. force/moment exclude gravity.
    phi, theta, psi = float(x[6]), float(x[7]), float(x[8])
    p, q, r = float(x[9]), float(x[10]), float(x[11])
    _check_guard(theta)
    sf, cf = math.sin(phi), math.cos(phi)
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(psi), math.cos(psi)
    m = params.mass_total
    w = m * params.gravity
    fx = -w * st + force_applied[0]
    fy = w * sf * ct + force_applied[1]
    fz = w * cf * ct + force_applied[2]
    ix, iy, iz = inertia
    tt = st / ct
    return np.array(
        [
            x[3],
            x[4],
            x[5],
            (ct * cp * fx + (sf * st * cp - cf * sp) * fy + (cf * st * cp + sf * sp) * fz) / m,
            (ct * sp * fx + (sf * st * sp + cf * cp) * fy + (cf * st * sp - sf * cp) * fz) / m,
            (-st * fx + sf * ct * fy + cf * ct * fz) / m,
            p + sf * tt * q + cf * tt * r,
            cf * q - sf * r,
            (sf * q + cf * r) / ct,
            (moment_applied[0] - (q * iz * r - r * iy * q)) / ix,
            (moment_applied[1] - (r * ix * p - p * iz * r)) / iy,
            (moment_applied[2] - (p * iy * q - q * ix * p)) / iz,
        ]
    )


def _applied(cmd: ActuatorCommand, extra_wrench: Wrench | None, params: VehicleParams):
    wrench = actuator_wrench(cmd, params)
    if extra_wrench is not None:
        wrench = wrench + extra_wrench
    return wrench.force_body, wrench.moment_body


def state_derivative(
    state: RigidBodyState,
    cmd: ActuatorCommand,
    extra_wrench: Wrench | None,
    params: VehicleParams,
) -> StateDerivative:
    force, moment = _applied(cmd, extra_wrench, params)
    d = _derivative(state.to_array(), force, moment, params, tuple(params.inertia_diag))
    return StateDerivative(d[0:3], d[3:6], d[6:9], d[9:12])


def rk4_step(
    state: RigidBodyState,
    cmd: ActuatorCommand,
    extra_wrench: Wrench | None,
    params: VehicleParams,
    dt: float,
) -> RigidBodyState:
    """Classical RK4 advance by ``dt`` with command and extra wrench held."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    force, moment = _applied(cmd, extra_wrench, params)
    force = tuple(float(v) for v in force)
    moment = tuple(float(v) for v in moment)
    inertia = tuple(params.inertia_diag)
    x = state.to_array()

    def f(y):
        return _derivative(y, force, moment, params, inertia)

    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_guard(x_next[7])
    return RigidBodyState.from_array(x_next)


def rotational_energy(state: RigidBodyState, params: VehicleParams) -> float:
    w = state.body_rates
    return 0.5 * float(w @ (params.inertia * w))
