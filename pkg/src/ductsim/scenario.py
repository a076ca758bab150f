"""Scripted closed-loop flight scenarios.

A scenario file is YAML with four top-level sections, all optional::

    vehicle:      # VehicleParams overrides, key = field name, SI units
      mass_total: 1.59
    controller:   # gains shared by all axes, per-axis overrides below
      kp: 100
      kd: 20
      omega_obs: 50
      yaw_torque_limit: 0.1
      roll: {kp: 120, torque_limit: 0.12}
    simulation:
      duration: 30.0
      thrust_mode: weight        # or "fixed"
      initial_attitude_deg: [0, 0, 0]
      measurement_noise_deg: 0.0
      seed: 0
      load_share_beta: 0.5
    events:
      - {time: 2.0, set_attitude: [10, 0, 0]}    # degrees
      - {time: 5.0, attach_payload: {mass: 0.025, attach_point_index: 0}}
      - {time: 9.0, detach_payload: 0}
      - {time: 12.0, set_thrust: 16.0}           # N, switches to fixed thrust

Every loop iteration applies due events, runs the attitude controller on
the measured attitude, allocates, adds the payload moment and advances the
rigid body one control period with RK4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .actuation import actuator_wrench, allocate
from .dynamics import rk4_step
from .faults import SimulationFault
from .ladrc import (
    AXES,
    AttitudeController,
    AxisConfig,
    AxisControlGains,
    AxisTelemetry,
    ControllerConfig,
    EsoGains,
)
from .payload import (
    PayloadAttachment,
    attachment_stability,
    load_disturbance_wrench,
    trim_deflection,
)
from .vehicle import ActuatorCommand, ParamsError, RigidBodyState, VehicleParams, Wrench

EVENT_KINDS = ("set_attitude", "set_thrust", "attach_payload", "detach_payload")
THRUST_MODES = ("weight", "fixed")


class ScenarioError(ValueError):
    """Invalid scenario text; the message names the offending line or key."""


@dataclass(frozen=True)
class ScenarioEvent:
    time: float
    kind: str
    value: Any  # (phi, theta, psi) rad | thrust N | PayloadAttachment | attach index

    @property
    def label(self) -> str:
        if self.kind == "attach_payload":
            return f"attach_payload:{self.value.attach_point_index}"
        if self.kind == "detach_payload":
            return f"detach_payload:{self.value}"
        return self.kind


@dataclass(frozen=True)
class SimulationSettings:
    duration: float = 30.0
    thrust_mode: str = "weight"
    thrust: float | None = None  # fixed-mode thrust; vehicle weight when omitted
    initial_attitude: tuple[float, float, float] = (0.0, 0.0, 0.0)  # rad
    measurement_noise: float = 0.0  # rad, std per axis
    seed: int = 0
    load_share_beta: float = 0.5


@dataclass(frozen=True)
class Scenario:
    params: VehicleParams
    controller: ControllerConfig
    settings: SimulationSettings
    events: tuple[ScenarioEvent, ...] = ()
    name: str = "scenario"


# --------------------------------------------------------------------------
# parsing

_CONTROLLER_SHARED = ("kp", "kd", "omega_obs", "yaw_torque_limit", "divergence_bound")
_CONTROLLER_AXIS = ("kp", "kd", "omega_obs", "b0", "torque_limit")
_SIM_KEYS = ("duration", "thrust_mode", "thrust", "initial_attitude_deg",
             "measurement_noise_deg", "seed", "load_share_beta")
_PAYLOAD_KEYS = ("mass", "attach_point_index", "magnet_force_a", "magnet_force_b",
                 "friction_coeff", "contact_span_le", "gravity_arm_lp", "axis_offset_l3",
                 "body_position")


def _mapping(value: Any, where: str) -> Mapping[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ScenarioError(f"{where}: expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(data: Mapping[str, Any], allowed, where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {', '.join(map(str, unknown))}")


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ScenarioError(f"{where}: must be finite")
    return value


def _triple(value: Any, where: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ScenarioError(f"{where}: expected a list of three numbers")
    return tuple(_number(v, f"{where}[{i}]") for i, v in enumerate(value))


def _parse_controller(data: Mapping[str, Any], params: VehicleParams) -> ControllerConfig:
    _reject_unknown(data, _CONTROLLER_SHARED + AXES, "controller")
    shared = {k: _number(data[k], f"controller.{k}") for k in _CONTROLLER_SHARED if k in data}
    inertia = dict(zip(AXES, params.inertia_diag))
    axes = {}
    for axis in AXES:
        over = _mapping(data.get(axis), f"controller.{axis}")
        _reject_unknown(over, _CONTROLLER_AXIS, f"controller.{axis}")
        vals = {k: _number(v, f"controller.{axis}.{k}") for k, v in over.items()}
        default_limit = (shared.get("yaw_torque_limit", 0.1) if axis == "yaw"
                         else params.vane_moment_max)
        where = f"controller.{axis}"
        try:
            axes[axis] = AxisConfig(
                control=AxisControlGains(vals.get("kp", shared.get("kp", 100.0)),
                                         vals.get("kd", shared.get("kd", 20.0))),
                eso=EsoGains.from_bandwidth(vals.get("omega_obs", shared.get("omega_obs", 50.0)),
                                            vals.get("b0", 1.0 / inertia[axis])),
                torque_limit=vals.get("torque_limit", default_limit),
            )
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from None
        if not axes[axis].torque_limit > 0:
            raise ScenarioError(f"{where}.torque_limit: must be positive")
        if not axes[axis].eso.omega_obs * params.control_period < 0.3:
            raise ScenarioError(
                f"{where}.omega_obs: omega_obs * control_period must stay below 0.3"
            )
    return ControllerConfig(
        roll=axes["roll"], pitch=axes["pitch"], yaw=axes["yaw"],
        dt=params.control_period,
        divergence_bound=shared.get("divergence_bound", 1e6),
    )


def _parse_settings(data: Mapping[str, Any]) -> SimulationSettings:
    _reject_unknown(data, _SIM_KEYS, "simulation")
    kw: dict[str, Any] = {}
    if "duration" in data:
        kw["duration"] = _number(data["duration"], "simulation.duration")
        if not kw["duration"] > 0:
            raise ScenarioError("simulation.duration: must be positive")
    if "thrust_mode" in data:
        if data["thrust_mode"] not in THRUST_MODES:
            raise ScenarioError(f"simulation.thrust_mode: expected one of {THRUST_MODES}")
        kw["thrust_mode"] = data["thrust_mode"]
    if data.get("thrust") is not None:
        kw["thrust"] = _number(data["thrust"], "simulation.thrust")
        if kw["thrust"] < 0:
            raise ScenarioError("simulation.thrust: must be non-negative")
    if "initial_attitude_deg" in data:
        att = _triple(data["initial_attitude_deg"], "simulation.initial_attitude_deg")
        kw["initial_attitude"] = tuple(math.radians(a) for a in att)
    if "measurement_noise_deg" in data:
        noise = _number(data["measurement_noise_deg"], "simulation.measurement_noise_deg")
        if noise < 0:
            raise ScenarioError("simulation.measurement_noise_deg: must be non-negative")
        kw["measurement_noise"] = math.radians(noise)
    if "seed" in data:
        if isinstance(data["seed"], bool) or not isinstance(data["seed"], int):
            raise ScenarioError("simulation.seed: expected an integer")
        kw["seed"] = data["seed"]
    if "load_share_beta" in data:
        beta = _number(data["load_share_beta"], "simulation.load_share_beta")
        if not 0 < beta < 1:
            raise ScenarioError("simulation.load_share_beta: must lie in (0, 1)")
        kw["load_share_beta"] = beta
    return SimulationSettings(**kw)


def parse_payload(data: Any, where: str) -> PayloadAttachment:
    data = _mapping(data, where)
    _reject_unknown(data, _PAYLOAD_KEYS, where)
    if "mass" not in data:
        raise ScenarioError(f"{where}: missing required key 'mass'")
    kw: dict[str, Any] = {}
    for key, value in data.items():
        if key == "attach_point_index":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioError(f"{where}.attach_point_index: expected an integer")
            kw[key] = value
        elif key == "body_position":
            kw[key] = np.array(_triple(value, f"{where}.body_position"))
        else:
            kw[key] = _number(value, f"{where}.{key}")
    try:
        return PayloadAttachment(**kw)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _parse_event(data: Any, where: str) -> ScenarioEvent:
    data = _mapping(data, where)
    _reject_unknown(data, ("time",) + EVENT_KINDS, where)
    if "time" not in data:
        raise ScenarioError(f"{where}: missing required key 'time'")
    t = _number(data["time"], f"{where}.time")
    if t < 0:
        raise ScenarioError(f"{where}.time: must be non-negative, got {t}")
    kinds = [k for k in EVENT_KINDS if k in data]
    if len(kinds) != 1:
        raise ScenarioError(f"{where}: expected exactly one of {', '.join(EVENT_KINDS)}")
    kind = kinds[0]
    raw = data[kind]
    if kind == "set_attitude":
        value = tuple(math.radians(a) for a in _triple(raw, f"{where}.set_attitude"))
    elif kind == "set_thrust":
        value = _number(raw, f"{where}.set_thrust")
        if value < 0:
            raise ScenarioError(f"{where}.set_thrust: must be non-negative")
    elif kind == "attach_payload":
        value = parse_payload(raw, f"{where}.attach_payload")
    else:
        if isinstance(raw, bool) or not isinstance(raw, int) or not 0 <= raw < 8:
            raise ScenarioError(f"{where}.detach_payload: expected an attach point index 0..7")
        value = raw
    return ScenarioEvent(t, kind, value)


def _check_occupancy(events: list[ScenarioEvent]) -> None:
    occupied: set[int] = set()
    for ev in events:
        if ev.kind == "attach_payload":
            idx = ev.value.attach_point_index
            if idx in occupied:
                raise ScenarioError(
                    f"event at t={ev.time}: attach point {idx} already carries a payload"
                )
            occupied.add(idx)
        elif ev.kind == "detach_payload":
            if ev.value not in occupied:
                raise ScenarioError(
                    f"event at t={ev.time}: attach point {ev.value} carries no payload"
                )
            occupied.discard(ev.value)


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse and fully validate scenario YAML text."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioError(f"{where}{problem}") from None
    doc = _mapping(doc, "scenario")
    _reject_unknown(doc, ("vehicle", "controller", "simulation", "events"), "scenario")

    try:
        params = VehicleParams.from_mapping(_mapping(doc.get("vehicle"), "vehicle"))
    except ParamsError as exc:
        raise ScenarioError("; ".join(f"vehicle.{k}: {m}" for k, m in exc.problems)) from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"vehicle: {exc}") from None

    controller = _parse_controller(_mapping(doc.get("controller"), "controller"), params)
    settings = _parse_settings(_mapping(doc.get("simulation"), "simulation"))

    raw_events = doc.get("events") or []
    if not isinstance(raw_events, list):
        raise ScenarioError("events: expected a list")
    events = [_parse_event(e, f"events[{i}]") for i, e in enumerate(raw_events)]
    events.sort(key=lambda e: e.time)  # stable: same-time events keep file order
    _check_occupancy(events)
    return Scenario(params, controller, settings, tuple(events), name)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        return parse_scenario(path.read_text(), name=path.stem)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------
# running

@dataclass(frozen=True)
class TraceRecord:
    time: float
    state: RigidBodyState
    setpoints: tuple[float, float, float]  # rad
    thrust_setpoint: float
    actuator: ActuatorCommand
    axes: tuple[AxisTelemetry, AxisTelemetry, AxisTelemetry]
    residual_torque: tuple[float, float, float]  # desired minus achieved, N m
    extra_wrench: Wrench
    mass_total: float
    events: tuple[str, ...] = ()

    @property
    def attitude_error(self) -> np.ndarray:
        """Setpoint minus attitude, yaw wrapped to (-pi, pi]."""
        err = np.asarray(self.setpoints) - self.state.euler
        err[2] = math.remainder(err[2], 2.0 * math.pi)
        return err

    @property
    def saturated(self) -> bool:
        return self.actuator.is_saturated or any(a.saturated for a in self.axes)


@dataclass(frozen=True)
class FaultRecord:
    time: float
    kind: str
    message: str
    axis: str | None = None

    def to_dict(self) -> dict:
        return {"time": self.time, "kind": self.kind, "message": self.message, "axis": self.axis}


@dataclass(frozen=True)
class AttachmentReport:
    time: float
    attach_point_index: int
    mass: float
    verdict: dict
    trim_deflection: float
    trim_over_budget: bool

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "attach_point_index": self.attach_point_index,
            "mass": self.mass,
            "stability": self.verdict,
            "trim_deflection": self.trim_deflection,
            "trim_over_budget": self.trim_over_budget,
        }


@dataclass
class RunResult:
    scenario: Scenario
    trace: list[TraceRecord] = field(default_factory=list)
    faults: list[FaultRecord] = field(default_factory=list)
    attachments: list[AttachmentReport] = field(default_factory=list)


def run_scenario(scenario: Scenario) -> RunResult:
    """Fixed-step closed-loop run; a fault ends the run with a partial trace."""
    params = scenario.params
    settings = scenario.settings
    dt = params.control_period
    n_steps = int(round(settings.duration / dt))
    rng = np.random.default_rng(settings.seed)

    state = RigidBodyState(euler=settings.initial_attitude)
    controller = AttitudeController(scenario.controller)
    controller.reset(settings.initial_attitude)
    setpoints = tuple(settings.initial_attitude)
    thrust_mode = settings.thrust_mode
    fixed_thrust = settings.thrust if settings.thrust is not None else params.weight
    payloads: dict[int, PayloadAttachment] = {}

    result = RunResult(scenario)
    pending = list(scenario.events)
    ev_i = 0
    t = 0.0
    for k in range(n_steps):
        t = k * dt
        labels = []
        # events are due once their time has been reached on the dt grid
        while ev_i < len(pending) and pending[ev_i].time <= t + 0.5 * dt:
            ev = pending[ev_i]
            ev_i += 1
            labels.append(ev.label)
            if ev.kind == "set_attitude":
                setpoints = ev.value
            elif ev.kind == "set_thrust":
                thrust_mode = "fixed"
                fixed_thrust = ev.value
            elif ev.kind == "attach_payload":
                p = ev.value
                payloads[p.attach_point_index] = p
                verdict = attachment_stability(p, settings.load_share_beta, params.gravity)
                trim = trim_deflection(p, params)
                result.attachments.append(AttachmentReport(
                    t, p.attach_point_index, p.mass, verdict.to_dict(),
                    trim.deflection, trim.over_budget,
                ))
            else:
                payloads.pop(ev.value)

        mass = params.mass_total + sum(p.mass for p in payloads.values())
        eff_params = replace(params, mass_total=mass)
        thrust = mass * params.gravity if thrust_mode == "weight" else fixed_thrust

        meas = state.euler
        if settings.measurement_noise > 0:
            meas = meas + rng.normal(0.0, settings.measurement_noise, 3)

        try:
            desired = controller.step(meas, setpoints, thrust)
            cmd = allocate(desired, eff_params)
            achieved = actuator_wrench(cmd, eff_params).moment_body
            controller.last_torque = tuple(float(v) for v in achieved)
            # payload gravity is carried by the effective mass; only its
            # moment about the airframe origin is added here
            load = load_disturbance_wrench(payloads.values(), state.euler, params.gravity)
            extra = Wrench(np.zeros(3), load.moment_body)
            result.trace.append(TraceRecord(
                time=t,
                state=state,
                setpoints=setpoints,
                thrust_setpoint=thrust,
                actuator=cmd,
                axes=controller.telemetry,
                residual_torque=tuple(float(d - a) for d, a in zip(desired.torque_body, achieved)),
                extra_wrench=extra,
                mass_total=mass,
                events=tuple(labels),
            ))
            state = rk4_step(state, cmd, extra, eff_params, dt)
        except SimulationFault as exc:
            result.faults.append(FaultRecord(t, exc.kind, str(exc), exc.axis))
            break
        if not state.is_finite():
            result.faults.append(FaultRecord(t + dt, "non_finite_state", "state became non-finite"))
            break
    return result
