"""Electromagnet payload attachment statics and the load wrench on the airframe.

Two-contact model: the load touches the duct wall at A (upper) and B
(lower), separated by ``contact_span_le``. Magnets pull each contact inward
with F_e; the wall pushes back with support force F_s; friction at the
contacts carries the weight. Taking B as the pivot:

    F_s_a = F_e_a - G_p * l_p / l_e
    F_s_b = F_e_b + G_p * l_p / l_e
    friction capacity f_max = k_f * F_s
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .dynamics import gravity_body
from .vehicle import VehicleParams, Wrench

N_ATTACH_POINTS = 8
DEFAULT_CONTACT_RADIUS = 0.13  # m, duct wall to body z axis (l_3)
DEFAULT_DEPTH = 0.05  # m below the centre of gravity
DEFAULT_GRAVITY_ARM = 0.045  # m, l_p; l_p + l_3 = 0.175
DEFAULT_CONTACT_SPAN = 0.09  # m, l_e; l_p / l_e = 0.5

STABLE = "stable"
SEPARATION_AT_A = "separation_at_A"
VERTICAL_SLIP = "vertical_slip"


def attach_point_direction(index: int) -> np.ndarray:
    """Unit horizontal body direction of attach point ``index``.

    Points are 45 deg apart, index 0 on +x_B, numbered counter-clockwise when
    seen from above (so index 2 sits on -y_B).
    """
    if not 0 <= index < N_ATTACH_POINTS:
        raise ValueError(f"attach point index must be in 0..{N_ATTACH_POINTS - 1}")
    a = 2.0 * math.pi * index / N_ATTACH_POINTS
    return np.array([math.cos(a), -math.sin(a), 0.0])


@dataclass(frozen=True)
class PayloadAttachment:
    mass: float  # kg, including the mounting module
    attach_point_index: int = 0
    magnet_force_a: float = 1.0  # N, effective pull at contact A
    magnet_force_b: float = 1.0  # N
    friction_coeff: float = 0.4
    contact_span_le: float = DEFAULT_CONTACT_SPAN
    gravity_arm_lp: float = DEFAULT_GRAVITY_ARM
    axis_offset_l3: float = DEFAULT_CONTACT_RADIUS
    # load centre of gravity in the body frame; derived from the attach
    # point when omitted
    body_position: np.ndarray | None = field(default=None)

    def __post_init__(self):
        problems = []
        if not self.mass >= 0:
            problems.append("mass must be non-negative")
        if not self.friction_coeff > 0:
            problems.append("friction_coeff must be positive")
        if not self.contact_span_le > 0:
            problems.append("contact_span_le must be positive")
        if not (self.magnet_force_a >= 0 and self.magnet_force_b >= 0):
            problems.append("magnet forces must be non-negative")
        if not 0 <= self.attach_point_index < N_ATTACH_POINTS:
            problems.append(f"attach_point_index must be in 0..{N_ATTACH_POINTS - 1}")
        if problems:
            raise ValueError("; ".join(problems))
        if self.body_position is None:
            radius = self.axis_offset_l3 + self.gravity_arm_lp
            pos = attach_point_direction(self.attach_point_index) * radius
            pos[2] = DEFAULT_DEPTH
        else:
            pos = np.asarray(self.body_position, dtype=float)
            if pos.shape != (3,):
                raise ValueError("body_position must be a 3-vector")
        object.__setattr__(self, "body_position", pos)

    @property
    def trim_arm(self) -> float:
        return self.gravity_arm_lp + self.axis_offset_l3


@dataclass(frozen=True)
class StabilityVerdict:
    outcome: str
    support_forces: tuple[float, float]  # F_s_a, F_s_b
    friction_capacity: tuple[float, float]  # f_a_max, f_b_max
    load_weight: float
    load_share_beta: float

    @property
    def stable(self) -> bool:
        return self.outcome == STABLE

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "support_forces": list(self.support_forces),
            "friction_capacity": list(self.friction_capacity),
            "load_weight": self.load_weight,
            "load_share_beta": self.load_share_beta,
        }


def classify(f_s_a: float, f_a_max: float, f_b_max: float, weight: float, beta: float) -> str:
    if f_s_a <= 0:
        return SEPARATION_AT_A
    if f_a_max < beta * weight or f_a_max + f_b_max < weight:
        return VERTICAL_SLIP
    return STABLE


def attachment_stability(
    p: PayloadAttachment, load_share_beta: float = 0.5, g: float = 9.81
) -> StabilityVerdict:
    """Decide whether a two-contact magnetic attachment holds.

    Contact A must stay pressed (F_s_a > 0) and its friction must carry at
    least ``load_share_beta`` of the weight; both contacts together must carry
    all of it.
    """
    if not 0 < load_share_beta < 1:
        raise ValueError("load_share_beta must lie in (0, 1)")
    weight = p.mass * g
    lever = weight * p.gravity_arm_lp / p.contact_span_le
    f_s_a = p.magnet_force_a - lever
    f_s_b = p.magnet_force_b + lever
    f_a_max = p.friction_coeff * f_s_a
    f_b_max = p.friction_coeff * f_s_b
    return StabilityVerdict(
        outcome=classify(f_s_a, f_a_max, f_b_max, weight, load_share_beta),
        support_forces=(f_s_a, f_s_b),
        friction_capacity=(f_a_max, f_b_max),
        load_weight=weight,
        load_share_beta=load_share_beta,
    )


def max_unilateral_load(tau_max: float, arm: float, g: float = 9.81) -> float:
    """Heaviest single-side load (kg) whose gravity moment the vanes can hold."""
    if not arm > 0:
        raise ValueError("arm must be positive")
    return tau_max / (g * arm)


class TrimResult(NamedTuple):
    deflection: float  # angle units of differential vane deflection
    over_budget: bool


def trim_deflection(p: PayloadAttachment, params: VehicleParams) -> TrimResult:
    """Differential vane deflection spent holding the load's gravity moment."""
    moment = p.mass * params.gravity * p.trim_arm
    deflection = moment / params.c_m_delta
    return TrimResult(deflection, deflection > 2.0 * params.vane_deflection_max)


def load_disturbance_wrench(
    attachments: Iterable[PayloadAttachment], euler: Sequence[float], g: float = 9.81
) -> Wrench:
    """Summed gravity force of the loads and its moment about the body origin."""
    force = np.zeros(3)
    moment = np.zeros(3)
    for p in attachments:
        f = gravity_body(euler, p.mass, g)
        force += f
        moment += np.cross(p.body_position, f)
    return Wrench(force, moment)
