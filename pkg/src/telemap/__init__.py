"""Invertible, differentiable workspace pose mappings for bilateral teleoperation.

Two backends build the same mapping surface from paired object poses: an
iterative stack of locally weighted translations/rotations (fast to fit,
exact at the objects) and a trained invertible coupling-flow network (fast
to evaluate).  A desk-scale impedance-coupled simulator, a benchmark CLI,
and a streaming bridge for live operation sit on top.
"""

from . import quat
from .diffeo import DiffeoMap, fit
from .errors import (
    NumericalError,
    ScenarioError,
    ScenarioFormatError,
    TelemapError,
    TrainingError,
)
from .flow import FlowArch, FlowMap, TrainConfig, build_flow, train
from .mapping import IdentityMap, load_map, map_state
from .scenario import (
    Correspondence,
    MappedState,
    ObjectPose,
    bundled_scenario,
    load_scenario,
    orientation_error,
    position_error,
    save_scenario,
)
from .sim import (
    ImpedanceGains,
    PoseTarget,
    RobotState,
    ScriptPoint,
    SimConfig,
    TeleopSim,
    impedance_force,
    run_scripted,
    write_log_csv,
)

__version__ = "0.1.0"

__all__ = [
    "quat",
    "DiffeoMap",
    "fit",
    "FlowArch",
    "FlowMap",
    "TrainConfig",
    "build_flow",
    "train",
    "IdentityMap",
    "load_map",
    "map_state",
    "Correspondence",
    "MappedState",
    "ObjectPose",
    "bundled_scenario",
    "load_scenario",
    "save_scenario",
    "position_error",
    "orientation_error",
    "ImpedanceGains",
    "PoseTarget",
    "RobotState",
    "ScriptPoint",
    "SimConfig",
    "TeleopSim",
    "impedance_force",
    "run_scripted",
    "write_log_csv",
    "TelemapError",
    "ScenarioError",
    "ScenarioFormatError",
    "NumericalError",
    "TrainingError",
]
