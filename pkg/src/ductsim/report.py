"""Trace CSV input/output and per-stage run summaries.

Trace CSV: one header row followed by one row per control period, columns
in ``TRACE_COLUMNS`` order. Angles are radians, everything SI. Floats are
written with ``repr`` so a trace read back is bit-identical.

Summary JSON (``schema_version`` 1)::

    {
      "schema_version": 1,
      "n_records": int, "t_start": s, "t_end": s,
      "fault": null | {"time", "kind", "message", "axis"},
      "stable": bool,                 # no fault and every stage recovered
      "stages_completed": int,
      "band_deg": 2.0,
      "max_error_deg": [roll, pitch, yaw],
      "stages": [{
          "index", "label", "payload_stage", "events", "t_start", "t_end",
          "n_records",                 # label "III.2": third payload stage, 2nd segment
          "rms_error_deg": [3], "max_error_deg": [3],
          "steady_error_deg": [3],     # max |error| over the stage's last settle_window s
          "recovery_time_s": s | null, # null: still outside the band at stage end
          "recovered": bool,
          "saturation_duty": 0..1,
          "final_disturbance_estimate": [3]   # observer z3, rad/s^2
      }, ...],
      "attachments": [...]            # only when produced from a run
    }
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ladrc import AXES, AxisTelemetry
from .scenario import FaultRecord, RunResult, TraceRecord
from .vehicle import ActuatorCommand, RigidBodyState, Wrench

SCHEMA_VERSION = 1

TRACE_COLUMNS = (
    "time",
    "pos_n", "pos_e", "pos_d",
    "vel_n", "vel_e", "vel_d",
    "phi", "theta", "psi",
    "p", "q", "r",
    "phi_sp", "theta_sp", "psi_sp",
    "thrust_sp",
    "omega1", "omega2",
    "delta1", "delta2", "delta3", "delta4",
    "alloc_saturated",
    *(f"{name}_{axis}" for axis in AXES for name in ("z1", "z2", "z3", "u0", "u", "sat")),
    "residual_tx", "residual_ty", "residual_tz",
    "extra_fx", "extra_fy", "extra_fz",
    "extra_mx", "extra_my", "extra_mz",
    "mass_total",
    "events",
)


def _row(rec: TraceRecord) -> list[str]:
    nums = [rec.time, *rec.state.to_array(), *rec.setpoints, rec.thrust_setpoint,
            rec.actuator.omega1, rec.actuator.omega2, *rec.actuator.delta]
    row = [repr(float(v)) for v in nums]
    row.append("|".join(rec.actuator.saturated))
    for a in rec.axes:
        row += [repr(float(v)) for v in (a.z1, a.z2, a.z3, a.u0, a.u)]
        row.append("1" if a.saturated else "0")
    tail = [*rec.residual_torque, *rec.extra_wrench.force_body,
            *rec.extra_wrench.moment_body, rec.mass_total]
    row += [repr(float(v)) for v in tail]
    row.append(";".join(rec.events))
    return row


def write_trace_csv(path: str | Path, trace: Iterable[TraceRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for rec in trace:
            w.writerow(_row(rec))


def read_trace_csv(path: str | Path) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: header does not match the trace column layout")
        out = []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_COLUMNS):
                raise ValueError(f"{path}:{line}: expected {len(TRACE_COLUMNS)} fields")
            v = dict(zip(TRACE_COLUMNS, row))
            try:
                out.append(_record_from_row(v))
            except ValueError as exc:
                raise ValueError(f"{path}:{line}: {exc}") from None
    return out


def _record_from_row(v: dict[str, str]) -> TraceRecord:
    f = lambda *keys: [float(v[k]) for k in keys]  # noqa: E731
    state = RigidBodyState.from_array(
        f("pos_n", "pos_e", "pos_d", "vel_n", "vel_e", "vel_d",
          "phi", "theta", "psi", "p", "q", "r")
    )
    sat = tuple(s for s in v["alloc_saturated"].split("|") if s)
    cmd = ActuatorCommand(float(v["omega1"]), float(v["omega2"]),
                          tuple(f("delta1", "delta2", "delta3", "delta4")), sat)
    axes = tuple(
        AxisTelemetry(*f(f"z1_{a}", f"z2_{a}", f"z3_{a}", f"u0_{a}", f"u_{a}"),
                      v[f"sat_{a}"] == "1")
        for a in AXES
    )
    return TraceRecord(
        time=float(v["time"]),
        state=state,
        setpoints=tuple(f("phi_sp", "theta_sp", "psi_sp")),
        thrust_setpoint=float(v["thrust_sp"]),
        actuator=cmd,
        axes=axes,
        residual_torque=tuple(f("residual_tx", "residual_ty", "residual_tz")),
        extra_wrench=Wrench(f("extra_fx", "extra_fy", "extra_fz"),
                            f("extra_mx", "extra_my", "extra_mz")),
        mass_total=float(v["mass_total"]),
        events=tuple(e for e in v["events"].split(";") if e),
    )


def stage_bounds(trace: Sequence[TraceRecord]) -> list[tuple[int, int]]:
    """Half-open index ranges split at every record that carries an event."""
    starts = [0] + [i for i, rec in enumerate(trace) if rec.events and i > 0]
    ends = starts[1:] + [len(trace)]
    return list(zip(starts, ends))


def _roman(n: int) -> str:
    out = []
    for value, digits in ((1000, "M"), (900, "CM"), (500, "D"), (400, "CD"), (100, "C"),
                          (90, "XC"), (50, "L"), (40, "XL"), (10, "X"), (9, "IX"),
                          (5, "V"), (4, "IV"), (1, "I")):
        count, n = divmod(n, value)
        out.append(digits * count)
    return "".join(out)


def summarize_trace(
    trace: Sequence[TraceRecord],
    faults: Sequence[FaultRecord] = (),
    band_deg: float = 2.0,
    settle_window: float = 1.0,
) -> dict:
    """Per-stage tracking statistics for a run; see module docstring for the layout."""
    if not trace:
        raise ValueError("cannot summarise an empty trace")
    err = np.degrees(np.array([rec.attitude_error for rec in trace]))
    times = np.array([rec.time for rec in trace])
    sat = np.array([rec.saturated for rec in trace])
    abs_err = np.abs(err)
    worst = abs_err.max(axis=1)

    stages = []
    payload_stage, segment = 1, 0
    for idx, (i0, i1) in enumerate(stage_bounds(trace)):
        # payload stages count attachments (I = no load); segments split manoeuvres
        if any(ev.startswith("attach_payload") for ev in trace[i0].events):
            payload_stage, segment = payload_stage + 1, 0
        else:
            segment += 1 if idx > 0 else 0
        e = err[i0:i1]
        t = times[i0:i1]
        outside = np.nonzero(worst[i0:i1] > band_deg)[0]
        if outside.size == 0:
            recovery = 0.0
        elif outside[-1] == len(t) - 1:
            recovery = None
        else:
            # first in-band sample after the last excursion
            recovery = float(t[outside[-1] + 1] - t[0])
        tail = e[t >= t[-1] - settle_window + 1e-12]
        last = trace[i1 - 1]
        stages.append({
            "index": idx,
            "label": f"{_roman(payload_stage)}.{segment}",
            "payload_stage": _roman(payload_stage),
            "events": list(trace[i0].events),
            "t_start": float(t[0]),
            "t_end": float(t[-1]),
            "n_records": int(i1 - i0),
            "rms_error_deg": [float(x) for x in np.sqrt(np.mean(e * e, axis=0))],
            "max_error_deg": [float(x) for x in np.abs(e).max(axis=0)],
            "steady_error_deg": [float(x) for x in np.abs(tail).max(axis=0)],
            "recovery_time_s": recovery,
            "recovered": recovery is not None,
            "saturation_duty": float(sat[i0:i1].mean()),
            "final_disturbance_estimate": [float(a.z3) for a in last.axes],
        })

    fault = faults[0].to_dict() if faults else None
    return {
        "schema_version": SCHEMA_VERSION,
        "n_records": len(trace),
        "t_start": float(times[0]),
        "t_end": float(times[-1]),
        "fault": fault,
        "stable": fault is None and all(s["recovered"] for s in stages),
        "stages_completed": len(stages) - (1 if fault else 0),
        "band_deg": band_deg,
        "max_error_deg": [float(x) for x in abs_err.max(axis=0)],
        "stages": stages,
    }


def summarize_run(result: RunResult, **kwargs) -> dict:
    """Trace summary plus the statics report of every attachment in the run."""
    if not result.trace:
        summary = {
            "schema_version": SCHEMA_VERSION, "n_records": 0, "t_start": None,
            "t_end": None, "fault": result.faults[0].to_dict() if result.faults else None,
            "stable": False, "stages_completed": 0, "band_deg": kwargs.get("band_deg", 2.0),
            "max_error_deg": None, "stages": [],
        }
    else:
        summary = summarize_trace(result.trace, result.faults, **kwargs)
    summary["scenario"] = result.scenario.name
    summary["attachments"] = [a.to_dict() for a in result.attachments]
    return summary

