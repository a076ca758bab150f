"""Coaxial ducted-fan UAV simulator with LADRC attitude control and payload statics."""
from .actuation import DesiredWrench, allocate, propeller_wrench, vane_moment
from .dynamics import euler_rate_matrix, gravity_body, rk4_step, state_derivative
from .ladrc import AttitudeController, EsoGains, EsoState, control_law, eso_step
from .payload import (
    PayloadAttachment,
    attachment_stability,
    load_disturbance_wrench,
    max_unilateral_load,
    trim_deflection,
)
from .scenario import load_scenario, parse_scenario, run_scenario
from .vehicle import (
    ActuatorCommand,
    RigidBodyState,
    VehicleParams,
    Wrench,
    default_params,
    validate_params,
)

__version__ = "0.1.0"
