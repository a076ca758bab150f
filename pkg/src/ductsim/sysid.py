"""Synthetic test-bench data and least-squares actuator identification.

Bench samples use the body-frame sign convention of the forward models:
``force_z`` is negative for positive thrust. Speeds and vane angles are
taken as exact; noise goes on the measured force/moment channels only.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .actuation import propeller_wrench, vane_moment
from .vehicle import VehicleParams

MEASURED_CHANNELS = ("force_z", "moment_x", "moment_y", "moment_z")
CSV_COLUMNS = (
    "time", "omega1", "omega2", "delta1", "delta2", "delta3", "delta4",
    "force_z", "moment_x", "moment_y", "moment_z",
)
COLLINEAR_COND = 1e10


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class BenchSample:
    time: float
    omega1: float
    omega2: float
    delta: tuple[float, float, float, float]
    force_z: float
    moment_z: float
    moment_x: float
    moment_y: float

    def __post_init__(self):
        values = (self.time, self.omega1, self.omega2, *self.delta, self.force_z,
                  self.moment_z, self.moment_x, self.moment_y)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite bench sample at t={self.time}")
        if self.omega1 < 0 or self.omega2 < 0:
            raise ValueError(f"negative motor speed at t={self.time}")


@dataclass(frozen=True)
class ScheduleRow:
    time: float
    omega1: float
    omega2: float
    delta: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)


def hover_speed(params: VehicleParams) -> float:
    """Equal rotor speed whose thrust matches the vehicle weight."""
    return math.sqrt(params.weight / (params.c_tz1 + params.c_tz2))


def vane_sweep_schedule(params: VehicleParams, n: int = 500, pair: str = "x",
                        omega: float | None = None, dt: float = 0.02) -> list[ScheduleRow]:
    """Triangle sweep of one opposing vane pair to both mechanical limits.

    Rotors hold ``omega`` (hover speed by default); the pair is deflected
    equal and opposite, 0 -> +max -> -max -> 0.
    """
    if omega is None:
        omega = hover_speed(params)
    lim = params.vane_deflection_max
    phase = np.arange(n) / max(n - 1, 1)
    # piecewise-linear triangle with peaks at 1/4 and 3/4 of the run
    tri = np.interp(phase, [0.0, 0.25, 0.75, 1.0], [0.0, lim, -lim, 0.0])
    rows = []
    for k, d in enumerate(tri):
        d = float(d)
        delta = (-d, 0.0, d, 0.0) if pair == "x" else (0.0, -d, 0.0, d)
        rows.append(ScheduleRow(k * dt, omega, omega, delta))
    return rows


def motor_sweep_schedule(params: VehicleParams, n: int = 1000, omega_min: float = 500.0,
                         omega_max: float | None = None, dt: float = 0.02) -> list[ScheduleRow]:
    """Sweep each rotor on its own while the other idles at ``omega_min``."""
    if omega_max is None:
        omega_max = params.motor_speed_max
    half = n // 2
    ramp1 = np.linspace(omega_min, omega_max, half)
    ramp2 = np.linspace(omega_min, omega_max, n - half)
    rows = [ScheduleRow(k * dt, float(w), omega_min) for k, w in enumerate(ramp1)]
    rows += [ScheduleRow((half + k) * dt, omega_min, float(w)) for k, w in enumerate(ramp2)]
    return rows


def _clean_sample(row: ScheduleRow, truth: VehicleParams) -> BenchSample:
    prop = propeller_wrench(row.omega1, row.omega2, truth)
    vane = vane_moment(row.delta, truth)
    return BenchSample(
        time=row.time,
        omega1=row.omega1,
        omega2=row.omega2,
        delta=tuple(float(d) for d in row.delta),
        force_z=float(prop.force_body[2]),
        moment_z=float(prop.moment_body[2] + vane.moment_body[2]),
        moment_x=float(vane.moment_body[0]),
        moment_y=float(vane.moment_body[1]),
    )


def relative_noise_std(truth: VehicleParams, schedule: Sequence[ScheduleRow],
                       fraction: float) -> dict[str, float]:
    """Per-channel noise std equal to ``fraction`` of the clean channel RMS."""
    clean = [_clean_sample(r, truth) for r in schedule]
    out = {}
    for ch in MEASURED_CHANNELS:
        v = np.array([getattr(s, ch) for s in clean])
        out[ch] = fraction * float(np.sqrt(np.mean(v * v)))
    return out


def generate_bench_data(
    truth: VehicleParams,
    schedule: Sequence[ScheduleRow],
    noise_std: float | Mapping[str, float] = 0.0,
    seed: int = 0,
) -> list[BenchSample]:
    """Evaluate the forward actuator models on a schedule and add Gaussian noise."""
    if isinstance(noise_std, Mapping):
        unknown = set(noise_std) - set(MEASURED_CHANNELS)
        if unknown:
            raise ValueError(f"unknown noise channels: {sorted(unknown)}")
        std = {ch: float(noise_std.get(ch, 0.0)) for ch in MEASURED_CHANNELS}
    else:
        std = {ch: float(noise_std) for ch in MEASURED_CHANNELS}
    if any(s < 0 for s in std.values()):
        raise ValueError("noise_std must be non-negative")

    rng = np.random.default_rng(seed)
    n = len(schedule)
    noise = {ch: rng.normal(0.0, 1.0, n) * std[ch] for ch in MEASURED_CHANNELS}
    samples = []
    for k, row in enumerate(schedule):
        s = _clean_sample(row, truth)
        samples.append(BenchSample(
            time=s.time, omega1=s.omega1, omega2=s.omega2, delta=s.delta,
            force_z=s.force_z + float(noise["force_z"][k]),
            moment_z=s.moment_z + float(noise["moment_z"][k]),
            moment_x=s.moment_x + float(noise["moment_x"][k]),
            moment_y=s.moment_y + float(noise["moment_y"][k]),
        ))
    return samples


@dataclass(frozen=True)
class VaneFit:
    c_m_delta: float
    residual_rms: float
    n_samples: int


@dataclass(frozen=True)
class PropellerFit:
    c_tz1: float
    c_tz2: float
    c_mz1: float
    c_mz2: float
    residual_rms_force: float
    residual_rms_moment: float
    condition_number: float
    n_samples: int


def fit_vane_coefficient(samples: Sequence[BenchSample], axis: str = "x") -> VaneFit:
    """Least-squares slope of the measured moment on the differential deflection.

    The model has no offset term, so this is a regression through the origin.
    """
    if axis == "x":
        x = np.array([-s.delta[0] + s.delta[2] for s in samples])
        y = np.array([s.moment_x for s in samples])
    elif axis == "y":
        x = np.array([-s.delta[1] + s.delta[3] for s in samples])
        y = np.array([s.moment_y for s in samples])
    else:
        raise ValueError("axis must be 'x' or 'y'")
    if len(samples) < 2 or np.unique(x).size < 2:
        raise RankDeficientError("need at least two distinct differential deflections")
    sxx = float(x @ x)
    slope = float(x @ y) / sxx
    resid = y - slope * x
    return VaneFit(slope, float(np.sqrt(np.mean(resid * resid))), len(samples))


def fit_propeller_coefficients(samples: Sequence[BenchSample]) -> PropellerFit:
    """Least squares of thrust and yaw moment on the two squared rotor speeds."""
    if len(samples) < 2:
        raise RankDeficientError("need at least two samples")
    X = np.array([[s.omega1 ** 2, s.omega2 ** 2] for s in samples])
    cond = float(np.linalg.cond(X))
    if not cond < COLLINEAR_COND:
        raise RankDeficientError(
            f"squared rotor speeds are collinear (condition number {cond:.3g}); "
            "sweep each motor separately"
        )
    thrust = np.array([-s.force_z for s in samples])
    yaw = np.array([s.moment_z for s in samples])
    # normal equations; columns share a scale so no preconditioning needed
    gram = X.T @ X
    c_t = np.linalg.solve(gram, X.T @ thrust)
    c_m = np.linalg.solve(gram, X.T @ yaw)
    rf = thrust - X @ c_t
    rm = yaw - X @ c_m
    return PropellerFit(
        c_tz1=float(c_t[0]), c_tz2=float(c_t[1]),
        c_mz1=float(c_m[0]), c_mz2=float(c_m[1]),
        residual_rms_force=float(np.sqrt(np.mean(rf * rf))),
        residual_rms_moment=float(np.sqrt(np.mean(rm * rm))),
        condition_number=cond,
        n_samples=len(samples),
    )


def write_bench_csv(path: str | Path, samples: Iterable[BenchSample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for s in samples:
            w.writerow([repr(float(v)) for v in (s.time, s.omega1, s.omega2, *s.delta, s.force_z,
                                          s.moment_x, s.moment_y, s.moment_z)])


def read_bench_csv(path: str | Path) -> list[BenchSample]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"bench CSV header is missing columns: {missing}")
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                v = {c: float(row[c]) for c in CSV_COLUMNS}
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line}: {exc}") from None
            out.append(BenchSample(
                time=v["time"], omega1=v["omega1"], omega2=v["omega2"],
                delta=(v["delta1"], v["delta2"], v["delta3"], v["delta4"]),
                force_z=v["force_z"], moment_z=v["moment_z"],
                moment_x=v["moment_x"], moment_y=v["moment_y"],
            ))
    return out
