"""Per-step control laws for leader and follower vehicles.

Speed comes from a saturated distance-to-goal law plus a conflict switch
that blends toward speed-matching against neighbors inside the safety
radius. Steering tracks the heading of the negated barrier gradient by
steering the front wheel; the desired-heading derivatives the law needs
are estimated with backward differences over the fixed step, so the
controller stays causal and distributed.

Each agent owns a private HeadingFilter; everything else it reads is an
immutable snapshot, so controllers for different agents may run
concurrently within a step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .barrier import BarrierEvaluation, BarrierParams, evaluate_barrier
from .errors import ZeroGradient
from .model import (
    AgentDescriptor,
    AgentKind,
    AgentState,
    BodySnapshot,
    ControlCommand,
    VehicleParams,
    WorldConfig,
    wrap_angle,
)

GRAD_EPS = 1e-12  # below this gradient norm the heading is held
DEN_EPS = 1e-9  # steering-rate denominator guard
MATCH_EPS = 1e-9  # speed-matching denominator guard
SPEED_EPS = 1e-9  # below this the wheel cannot be steered meaningfully

# Wheel-angle command ceiling, two guard bands inside the tan() pole.
GAMMA_CMD_MAX = math.pi / 2.0 - 0.02

# Within this band of a full heading reversal the turn direction is
# tie-broken to one side; otherwise the wrapped error chatters across
# +/-pi and the vehicle never commits to a U-turn.
REVERSAL_BAND = 0.2

# Notes a controller can attach to a decision.
NOTE_ZERO_GRADIENT = "zero_gradient_hold"
NOTE_DEGENERATE_DENOMINATOR = "degenerate_denominator"
NOTE_MATCHING_DEGENERATE = "matching_degenerate"

# Steering-law selectors for VehicleController.
STEERING_TRACKING = "tracking"
STEERING_CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class ControllerGains:
    k: float  # speed gain
    lam: float  # heading gain

    def __post_init__(self):
        if not (self.k > 0.0 and self.lam > 0.0):
            raise ValueError("gains must be > 0")

    @property
    def u_max(self) -> float:
        """Speed clamp for the conflict blend: one octave above saturation."""
        return 2.0 * self.k


@dataclass
class HeadingFilter:
    """Backward-difference memory for the desired heading and speed.

    Derivatives are zero until enough history exists: the heading rate
    after one update, its rate after two.
    """

    dt: float
    phi: float = 0.0
    phi_dot: float = 0.0
    phi_ddot: float = 0.0
    u_prev: float = 0.0
    u_dot: float = 0.0
    steps: int = field(default=0)

    def update(self, phi_new: float, u_new: float):
        if self.steps == 0:
            self.phi = phi_new
            self.u_prev = u_new
        else:
            phi_dot_new = wrap_angle(phi_new - self.phi) / self.dt
            if self.steps >= 2:
                self.phi_ddot = (phi_dot_new - self.phi_dot) / self.dt
            self.phi_dot = phi_dot_new
            self.u_dot = (u_new - self.u_prev) / self.dt
            self.phi = phi_new
            self.u_prev = u_new
        self.steps += 1


def desired_heading(grad: tuple[float, float]) -> float:
    """Heading of the negated gradient: the direction of steepest descent."""
    gx, gy = grad
    if math.hypot(gx, gy) < GRAD_EPS:
        raise ZeroGradient("gradient too small to orient")
    return math.atan2(-gy, -gx)


def goal_speed(
    r: tuple[float, float], r_dest: tuple[float, float], gains: ControllerGains
) -> float:
    """Saturated approach speed: k * tanh(distance to destination)."""
    return gains.k * math.tanh(math.hypot(r[0] - r_dest[0], r[1] - r_dest[1]))


def closed_form_steering_rate(
    state: AgentState,
    filt: HeadingFilter,
    u: float,
    gains: ControllerGains,
    params: VehicleParams,
) -> tuple[float, bool]:
    """Closed-form steering rate: the published rational expression.

    Returns (omega, degenerate). The heading error uses the wrapped
    difference; a vanishing denominator yields omega = 0 with the
    degenerate flag set instead of an exception.

    Note this expression only differentiates the consistent wheel angle;
    it carries no feedback on the wheel-angle error itself, so the closed
    loop cannot recover a heading offset once perturbed (see the paired
    regression test). The controllers therefore default to
    tracking_steering_rate and this form is kept as the documented
    variant.
    """
    b = params.wheelbase
    lam = gains.lam
    err = wrap_angle(state.theta - filt.phi)
    track = filt.phi_dot - lam * err
    den = u * u + b * track * track
    if den < DEN_EPS:
        return 0.0, True
    num = (
        b * lam * filt.phi_dot - lam * u * math.tan(state.gamma) + b * filt.phi_ddot
    ) * u + track * filt.u_dot
    return num / den, False


def tracking_steering_rate(
    state: AgentState,
    filt: HeadingFilter,
    u: float,
    gains: ControllerGains,
    params: VehicleParams,
) -> tuple[float, bool]:
    """One-step wheel-angle tracking: invert the turn-rate map over dt.

    The frame turns at u/B * tan(gamma); commanding the heading rate
    phi_dot - lam * (theta - phi) therefore asks for the wheel angle
    atan(B * rate / u), and omega closes that gap in one step. The atan
    saturates, so the command stays bounded however fast the desired
    heading moves. Near a full reversal the turn direction is tie-broken
    to the clockwise side to avoid chattering across the +/-pi branch.

    Returns (omega, degenerate); a vehicle at rest cannot steer its
    frame, so u ~ 0 yields omega = 0 with the degenerate flag.
    """
    if u < SPEED_EPS:
        return 0.0, True
    err = wrap_angle(state.theta - filt.phi)
    if err < -(math.pi - REVERSAL_BAND):
        err += 2.0 * math.pi
    track = filt.phi_dot - gains.lam * err
    gamma_des = math.atan(params.wheelbase * track / u)
    gamma_des = max(-GAMMA_CMD_MAX, min(GAMMA_CMD_MAX, gamma_des))
    return (gamma_des - state.gamma) / filt.dt, False


def conflict_set(
    position: tuple[float, float],
    phi: float,
    neighbors: Sequence[BodySnapshot],
) -> list[int]:
    """Neighbors the desired motion points toward.

    A neighbor is in conflict when the offset from it to us has negative
    projection on our desired heading. Callers pass only the neighbors
    inside the safety radius.
    """
    ex, ey = math.cos(phi), math.sin(phi)
    out = []
    for n in neighbors:
        rx = position[0] - n.position[0]
        ry = position[1] - n.position[1]
        if rx * ex + ry * ey < 0.0:
            out.append(n.agent_id)
    return out


def follower_speed(
    position: tuple[float, float],
    destination: tuple[float, float],
    phi: float,
    neighbors: Sequence[BodySnapshot],
    gains: ControllerGains,
    world: WorldConfig,
) -> tuple[float, list[str]]:
    """Goal-seeking speed, throttled by the worst conflicting neighbor.

    For each conflicting neighbor inside the safety radius the speed is a
    convex blend (by distance) of the goal speed and a matching speed that
    would hold the current gap; the commanded speed is the minimum over
    conflicts, clamped to [0, u_max].
    """
    notes: list[str] = []
    u_goal = goal_speed(position, destination, gains)
    ex, ey = math.cos(phi), math.sin(phi)
    candidates: list[float] = []
    span = world.R_c - world.d_s
    if span <= 0.0:  # safety radius inside the separation floor: switch is inert
        return min(max(u_goal, 0.0), gains.u_max), notes
    for n in neighbors:
        rx = position[0] - n.position[0]
        ry = position[1] - n.position[1]
        d = math.hypot(rx, ry)
        if d > world.R_c:
            continue
        if rx * ex + ry * ey >= 0.0:
            continue  # not heading toward this neighbor
        own_proj = rx * ex + ry * ey
        if abs(own_proj) < MATCH_EPS:
            u_match = 0.0
            notes.append(NOTE_MATCHING_DEGENERATE)
        else:
            their_proj = rx * math.cos(n.heading) + ry * math.sin(n.heading)
            u_match = n.speed * their_proj / own_proj
        w = (d - world.d_s) / span
        candidates.append(u_goal * w + u_match * (1.0 - w))
    u = min(candidates) if candidates else u_goal
    return min(max(u, 0.0), gains.u_max), notes


@dataclass(frozen=True)
class ControlDecision:
    """Everything a controller produces in one step."""

    command: ControlCommand
    barrier: BarrierEvaluation
    phi: float
    notes: tuple[str, ...] = ()


class VehicleController:
    """Stateful per-agent controller (leader or follower).

    The only state carried between steps is the HeadingFilter. The
    neighbor set is picked by agent kind: the leader only reacts to
    misbehaving agents, followers react to everyone sensed.
    """

    def __init__(
        self,
        descriptor: AgentDescriptor,
        gains: ControllerGains,
        world: WorldConfig,
        vehicle: VehicleParams,
        barrier_params: BarrierParams,
        dt: float,
        steering_law: str = STEERING_TRACKING,
    ):
        if not descriptor.controllable:
            raise ValueError("misbehaving agents have no controller")
        if steering_law not in (STEERING_TRACKING, STEERING_CLOSED_FORM):
            raise ValueError(f"unknown steering law {steering_law!r}")
        self.descriptor = descriptor
        self.gains = gains
        self.world = world
        self.vehicle = vehicle
        self.barrier_params = barrier_params
        self.steering_law = steering_law
        self.filter = HeadingFilter(dt=dt)

    def _sensed_neighbors(
        self, state: AgentState, bodies: Sequence[BodySnapshot]
    ) -> list[BodySnapshot]:
        me = self.descriptor
        out = []
        for b in bodies:
            if b.agent_id == me.agent_id:
                continue
            if me.kind is AgentKind.LEADER and b.kind is not AgentKind.MISBEHAVING:
                continue
            dx = state.x - b.position[0]
            dy = state.y - b.position[1]
            if math.hypot(dx, dy) <= self.world.R_s:
                out.append(b)
        return out

    def decide(
        self, state: AgentState, bodies: Sequence[BodySnapshot]
    ) -> ControlDecision:
        notes: list[str] = []
        evaluation = evaluate_barrier(
            self.descriptor.agent_id,
            bodies,
            self.descriptor.destination,
            self.world,
            self.barrier_params,
            position=state.position,
        )
        try:
            phi = desired_heading(evaluation.grad)
        except ZeroGradient:
            phi = self.filter.phi if self.filter.steps > 0 else state.theta
            notes.append(NOTE_ZERO_GRADIENT)

        neighbors = self._sensed_neighbors(state, bodies)
        u, speed_notes = follower_speed(
            state.position,
            self.descriptor.destination,
            phi,
            neighbors,
            self.gains,
            self.world,
        )
        notes.extend(speed_notes)

        self.filter.update(phi, u)
        law = (
            tracking_steering_rate
            if self.steering_law == STEERING_TRACKING
            else closed_form_steering_rate
        )
        omega, degenerate = law(state, self.filter, u, self.gains, self.vehicle)
        if degenerate:
            notes.append(NOTE_DEGENERATE_DENOMINATOR)
        return ControlDecision(
            command=ControlCommand(u=u, omega=omega),
            barrier=evaluation,
            phi=phi,
            notes=tuple(notes),
        )
