import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ductsim.dynamics import rk4_step
from ductsim.actuation import allocate, actuator_wrench
from ductsim.faults import ObserverDivergence
from ductsim.ladrc import (
    AttitudeController,
    AxisControlGains,
    EsoGains,
    EsoState,
    attitude_controller_step,
    control_law,
    default_controller_config,
    eso_step,
)
from ductsim.vehicle import RigidBodyState, Wrench

DT = 0.005
GAINS = EsoGains.from_bandwidth(50.0, 50.0)
PD = AxisControlGains(100.0, 20.0)


def test_bandwidth_parameterisation():
    assert (GAINS.l1, GAINS.l2, GAINS.l3) == (150.0, 7500.0, 125000.0)


def test_fixed_point_at_zero():
    assert eso_step(EsoState(), 0.0, 0.0, GAINS, DT) == EsoState()


def test_one_euler_step():
    z = eso_step(EsoState(), 0.1, 0.0, GAINS, DT)
    assert z.as_tuple() == pytest.approx((0.075, 3.75, 62.5), rel=1e-12)


def test_stability_gate():
    with pytest.raises(ValueError, match="stability margin"):
        eso_step(EsoState(), 0.0, 0.0, EsoGains.from_bandwidth(60.0, 1.0), DT)


def test_divergence_detected():
    with pytest.raises(ObserverDivergence):
        eso_step(EsoState(), 1e9, 0.0, GAINS, DT)


def double_integrator_run(d, b0, b_true, omega=50.0, t_end=1.0, u=0.0):
    """Exact-discretised plant y'' = b_true*u + d, observer with nominal b0."""
    gains = EsoGains.from_bandwidth(omega, b0)
    y, v = 0.0, 0.0
    z = EsoState()
    for _ in range(round(t_end / DT)):
        z = eso_step(z, y, u, gains, DT)
        a = b_true * u + d
        y, v = y + v * DT + 0.5 * a * DT * DT, v + a * DT
    return z, y, v


def test_step_disturbance_estimated_within_one_second():
    z, _, _ = double_integrator_run(1.0, 50.0, 50.0)
    assert abs(z.z3 - 1.0) < 0.05


@pytest.mark.parametrize("omega", [30.0, 40.0, 50.0])
def test_convergence_over_bandwidths(omega):
    z, _, _ = double_integrator_run(1.0, 50.0, 50.0, omega=omega)
    assert abs(z.z3 - 1.0) < 0.05


@pytest.mark.parametrize("scale", [0.5, 1.5])
def test_bounded_error_under_inertia_mismatch(scale):
    # plant effectiveness off by 50 %; the mismatch is absorbed into z3
    u = 0.01
    z, y, v = double_integrator_run(0.5, 50.0, 50.0 * scale, t_end=10.0, u=u)
    true_total = 0.5 + 50.0 * (scale - 1.0) * u
    assert abs(z.z3 - true_total) < 0.05 * abs(true_total)
    assert abs(z.z1 - y) < 1e-3 * max(1.0, abs(y))


finite = st.floats(-10.0, 10.0)


@given(finite, finite, finite, finite, finite, finite, finite, finite, finite, finite)
def test_eso_superposition(a1, a2, a3, b1, b2, b3, y1, y2, u1, u2):
    za, zb = EsoState(a1, a2, a3), EsoState(b1, b2, b3)
    bound = math.inf
    ra = np.array(eso_step(za, y1, u1, GAINS, DT, bound).as_tuple())
    rb = np.array(eso_step(zb, y2, u2, GAINS, DT, bound).as_tuple())
    rs = np.array(eso_step(EsoState(a1 + b1, a2 + b2, a3 + b3), y1 + y2, u1 + u2,
                           GAINS, DT, bound).as_tuple())
    scale = max(1.0, np.abs(ra).max(), np.abs(rb).max())
    assert np.abs(rs - (ra + rb)).max() <= 1e-12 * scale


def test_control_law_examples():
    assert control_law(EsoState(0.3, 0, 0), 0.3, PD, GAINS) == 0.0
    assert control_law(EsoState(), 0.1, PD, GAINS) == pytest.approx(0.2, rel=1e-12)
    assert control_law(EsoState(0, 0, 5.0), 0.0, PD, GAINS) == pytest.approx(-0.1, rel=1e-12)


@given(st.floats(-1, 1), st.floats(0, 1), st.floats(-5, 5), st.floats(-50, 50))
def test_control_monotone_in_error(err, extra, z2, z3):
    lo = control_law(EsoState(0.0, z2, z3), err, PD, GAINS, 0.12)
    hi = control_law(EsoState(0.0, z2, z3), err + extra, PD, GAINS, 0.12)
    assert hi >= lo
    assert abs(hi) <= 0.12


def test_converged_at_setpoint_gives_zero_torque(params):
    cfg = default_controller_config(params)
    sp = (0.1, -0.05, 0.2)
    obs = tuple(EsoState(a, 0.0, 0.0) for a in sp)
    wrench, new_obs, tel = attitude_controller_step(sp, sp, params.weight, obs, cfg)
    assert wrench.torque_body == (0.0, 0.0, 0.0)
    assert wrench.thrust == params.weight
    assert new_obs == obs
    assert len(tel) == 3 and not any(t.saturated for t in tel)


def test_divergence_tagged_with_axis(params):
    cfg = default_controller_config(params)
    with pytest.raises(ObserverDivergence) as info:
        attitude_controller_step((0, 1e9, 0), (0, 0, 0), 10.0, (EsoState(),) * 3, cfg)
    assert info.value.axis == "pitch"


def closed_loop(params, setpoint, t_end, extra=None, start=(0.0, 0.0, 0.0)):
    ctl = AttitudeController(default_controller_config(params))
    ctl.reset(start)
    s = RigidBodyState(euler=list(start))
    hist = []
    for k in range(round(t_end / DT)):
        desired = ctl.step(s.euler, setpoint, params.weight)
        cmd = allocate(desired, params)
        ctl.last_torque = tuple(float(m) for m in actuator_wrench(cmd, params).moment_body)
        s = rk4_step(s, cmd, extra, params, DT)
        hist.append(((k + 1) * DT, s.euler.copy()))
    return hist


def test_roll_step_settles(params):
    sp = (math.radians(10), 0.0, 0.0)
    hist = closed_loop(params, sp, 4.0)
    late = [abs(math.degrees(e[0]) - 10) for t, e in hist if t >= 2.0]
    assert max(late) < 0.5


def test_constant_disturbance_rejected(params):
    extra = Wrench([0, 0, 0], [0.10, 0, 0])
    hist = closed_loop(params, (0.0, 0.0, 0.0), 6.0, extra)
    late = [abs(math.degrees(e[0])) for t, e in hist if t >= 4.0]
    assert max(late) < 0.5
