"""Vehicle and world domain types plus the kinematic integration step.

All types here are immutable value objects and all operations are pure
functions, so they are safe to evaluate concurrently.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import SteeringSingularity
from .misbehavior import MisbehaviorSpec

TWO_PI = 2.0 * math.pi

# Guard band around |gamma| = pi/2 where tan() blows up.
STEER_GUARD = 0.01

# Integration step used when a scenario does not choose one.
DEFAULT_DT = 0.01


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, TWO_PI)
    if a <= 0.0:
        a += TWO_PI
    return a - math.pi


def distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Euclidean distance between two points."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _require_finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return float(value)


class AgentKind(enum.Enum):
    LEADER = "leader"
    FOLLOWER = "follower"
    MISBEHAVING = "misbehaving"


@dataclass(frozen=True)
class AgentState:
    """Full kinematic configuration of one vehicle.

    theta is the frame heading w.r.t. the x-axis, gamma the front-wheel
    angle w.r.t. the frame; both are stored wrapped to (-pi, pi].
    """

    x: float
    y: float
    theta: float
    gamma: float

    def __post_init__(self):
        for name in ("x", "y", "theta", "gamma"):
            _require_finite(name, getattr(self, name))
        object.__setattr__(self, "theta", wrap_angle(self.theta))
        object.__setattr__(self, "gamma", wrap_angle(self.gamma))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 0.25  # front-to-rear wheel distance (m)
    body_radius: float = 0.75  # physical radius of the vehicle (m)

    def __post_init__(self):
        if not (self.wheelbase > 0.0):
            raise ValueError("wheelbase must be > 0")
        if not (self.body_radius > 0.0):
            raise ValueError("body_radius must be > 0")


@dataclass(frozen=True)
class WorldConfig:
    """Shared geometry: the connectivity disc and the per-agent radii.

    Requires 0 < d_s < R_z < R_s (the blend cubic needs that ordering).
    R_c is only required to be positive; published parameter sets exist
    with R_c on either side of R_z.
    """

    center: tuple[float, float]
    R0: float  # connectivity disc radius (m)
    body_radius: float  # agent radius, shrinks the usable disc
    d_s: float  # minimum separation distance (m)
    R_s: float  # sensing radius (m)
    R_z: float  # avoidance-active radius (m)
    R_c: float  # safety-region radius for the speed switch (m)

    def __post_init__(self):
        object.__setattr__(
            self, "center", (float(self.center[0]), float(self.center[1]))
        )
        _require_finite("center.x", self.center[0])
        _require_finite("center.y", self.center[1])
        if not (0.0 < self.d_s < self.R_z < self.R_s):
            raise ValueError(
                f"need 0 < d_s < R_z < R_s, got d_s={self.d_s}, "
                f"R_z={self.R_z}, R_s={self.R_s}"
            )
        if not (self.R_c > 0.0):
            raise ValueError("R_c must be > 0")
        if not (self.R0 > self.body_radius > 0.0):
            raise ValueError("need R0 > body_radius > 0")

    @property
    def r_effective(self) -> float:
        """Usable disc radius: R0 minus the agent body radius."""
        return self.R0 - self.body_radius


@dataclass(frozen=True)
class ControlCommand:
    """One step's control input: rear-wheel speed and front-wheel steering rate."""

    u: float  # m/s, forward only
    omega: float  # rad/s

    def __post_init__(self):
        _require_finite("u", self.u)
        _require_finite("omega", self.omega)
        if self.u < 0.0:
            raise ValueError(f"u must be >= 0, got {self.u}")


@dataclass(frozen=True)
class AgentDescriptor:
    """Static description of one agent in a scenario."""

    agent_id: int
    kind: AgentKind
    initial_state: AgentState
    destination: Optional[tuple[float, float]] = None  # controllable agents only
    misbehavior: Optional[MisbehaviorSpec] = None  # misbehaving agents only

    def __post_init__(self):
        if self.kind is AgentKind.MISBEHAVING:
            if self.misbehavior is None:
                raise ValueError(f"agent {self.agent_id}: misbehaving needs a trajectory spec")
            if self.destination is not None:
                raise ValueError(f"agent {self.agent_id}: misbehaving agents have no destination")
        else:
            if self.destination is None:
                raise ValueError(f"agent {self.agent_id}: controllable agents need a destination")
            if self.misbehavior is not None:
                raise ValueError(f"agent {self.agent_id}: only misbehaving agents carry a trajectory spec")

    @property
    def controllable(self) -> bool:
        return self.kind is not AgentKind.MISBEHAVING


@dataclass(frozen=True)
class BodySnapshot:
    """One agent as seen by the others at a fixed instant.

    speed and heading are the values the agent broadcasts: the last
    applied command and desired heading for controllable agents, the
    scripted motion for misbehaving ones.
    """

    agent_id: int
    kind: AgentKind
    position: tuple[float, float]
    speed: float
    heading: float


def check_steering(gamma: float):
    """Raise if the front-wheel angle is inside the tan() guard band."""
    if abs(gamma) >= math.pi / 2.0 - STEER_GUARD:
        raise SteeringSingularity(
            f"|gamma|={abs(gamma):.4f} within {STEER_GUARD} of pi/2"
        )


def bicycle_step(
    state: AgentState,
    cmd: ControlCommand,
    params: VehicleParams,
    dt: float,
) -> AgentState:
    """Advance the bicycle kinematics one explicit-Euler step.

    Rear-wheel position (x, y) integrates along the frame heading, the
    frame heading turns at u/B * tan(gamma), and gamma integrates the
    steering rate. All derivatives are evaluated at the incoming state.
    """
    if not (dt > 0.0):
        raise ValueError("dt must be > 0")
    check_steering(state.gamma)
    x = state.x + cmd.u * math.cos(state.theta) * dt
    y = state.y + cmd.u * math.sin(state.theta) * dt
    theta = state.theta + (cmd.u / params.wheelbase) * math.tan(state.gamma) * dt
    gamma = state.gamma + cmd.omega * dt
    check_steering(wrap_angle(gamma))
    return AgentState(x=x, y=y, theta=theta, gamma=gamma)
