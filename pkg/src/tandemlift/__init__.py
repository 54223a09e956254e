"""Two-quadrotor rigid payload transport: simulator, control stack, guidance.

Library layout:

* :mod:`tandemlift.dynamics` -- composite rigid-body plant and integrator
* :mod:`tandemlift.allocation` -- wrench-to-actuator distribution, rotor map
* :mod:`tandemlift.position` -- adaptive backstepping outer loop
* :mod:`tandemlift.attitude` -- terminal sliding-mode inner loop
* :mod:`tandemlift.admittance` -- force-guided reference generation
* :mod:`tandemlift.scenario` / :mod:`tandemlift.simulation` -- scripted runs
* :mod:`tandemlift.telemetry` -- live socket service for operator consoles
"""

from .admittance import AdmittanceFilter, AdmittanceParams, ReferenceTrajectory
from .allocation import AllocationWeights, Allocator, rotor_speeds, wrench_matrix
from .attitude import AttitudeController, AttitudeGains, reaching_time_bound
from .dynamics import SimState, WrenchCommand, rk4_step, state_derivative
from .params import RotorModel, SystemParams
from .position import PositionController, PositionGains
from .scenario import Scenario, load_scenario
from .simulation import RunLog, metrics, run

__version__ = "0.1.0"

__all__ = [
    "AdmittanceFilter", "AdmittanceParams", "ReferenceTrajectory",
    "AllocationWeights", "Allocator", "rotor_speeds", "wrench_matrix",
    "AttitudeController", "AttitudeGains", "reaching_time_bound",
    "SimState", "WrenchCommand", "rk4_step", "state_derivative",
    "RotorModel", "SystemParams",
    "PositionController", "PositionGains",
    "Scenario", "load_scenario",
    "RunLog", "metrics", "run",
    "__version__",
]
