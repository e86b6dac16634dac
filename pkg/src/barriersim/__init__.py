"""Deterministic multi-vehicle coordination simulator.

Bicycle-model vehicles steer down the gradient of a per-agent barrier
field that encodes goal convergence, containment in a connectivity disc,
and pairwise collision avoidance, including against scripted misbehaving
vehicles. Runtime monitors check the safety properties every step.
"""

from .barrier import (
    BarrierEvaluation,
    BarrierParams,
    blend_coefficients,
    blend_derivative,
    blend_weight,
    collision_margin,
    combine_and_normalize,
    connectivity_margin,
    evaluate_barrier,
    fd_gradient,
    log_barrier,
    recentered_collision,
    recentered_connectivity,
)
from .control import (
    STEERING_CLOSED_FORM,
    STEERING_TRACKING,
    ControlDecision,
    ControllerGains,
    HeadingFilter,
    VehicleController,
    closed_form_steering_rate,
    conflict_set,
    desired_heading,
    follower_speed,
    goal_speed,
    tracking_steering_rate,
)
from .errors import (
    BarrierSimError,
    ConstraintViolated,
    ParseError,
    SteeringSingularity,
    ValidationError,
    ZeroGradient,
)
from .misbehavior import (
    CircularOrbit,
    MotionSample,
    RandomWalk,
    WaypointOscillator,
    misbehaving_position,
)
from .model import (
    AgentDescriptor,
    AgentKind,
    AgentState,
    BodySnapshot,
    ControlCommand,
    VehicleParams,
    WorldConfig,
    bicycle_step,
    distance,
    wrap_angle,
)
from .sim import (
    RunOutcome,
    Scenario,
    StepRecord,
    Violation,
    convergence_check,
    monitor_step,
    run,
)

__version__ = "0.1.0"
