"""Fixed-step closed-loop simulation with runtime safety monitors.

The step loop is sequential and deterministic: snapshot the world,
compute every controllable agent's command against that snapshot,
integrate, advance scripted agents, then run the monitors on the
post-step state. A safety violation is a recorded outcome, never an
exception escaping the loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .barrier import BarrierParams
from .control import ControlDecision, ControllerGains, VehicleController
from .errors import ConstraintViolated, SteeringSingularity, ValidationError
from .misbehavior import misbehaving_position, path_clearance
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
)

DEFAULT_CONVERGENCE_RADIUS = 0.1
MONITOR_SLACK = 1e-9

STATUS_CONVERGED = "converged"
STATUS_TIMEOUT = "timeout"
STATUS_SAFETY_VIOLATION = "safety_violation"

VIOLATION_COLLISION = "collision"
VIOLATION_CONNECTIVITY = "connectivity"
VIOLATION_BARRIER_INFEASIBLE = "barrier_infeasible"
VIOLATION_STEERING_SINGULARITY = "steering_singularity"


@dataclass(frozen=True)
class Scenario:
    """Declarative simulation input; validated on construction."""

    world: WorldConfig
    vehicle: VehicleParams
    agents: tuple[AgentDescriptor, ...]
    gains: ControllerGains
    dt: float = 0.01
    t_max: float = 60.0
    seed: int = 0
    convergence_radius: float = DEFAULT_CONVERGENCE_RADIUS
    delta: float = 1.0
    agent_gains: dict[int, ControllerGains] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.dt > 0.0):
            raise ValidationError("sim.dt must be > 0")
        if not (self.t_max > self.dt):
            raise ValidationError("sim.t_max must exceed dt")
        if not (self.convergence_radius > 0.0):
            raise ValidationError("sim.convergence_radius must be > 0")

        ids = sorted(a.agent_id for a in self.agents)
        if ids != list(range(1, len(self.agents) + 1)):
            raise ValidationError(f"agent ids must be unique and contiguous from 1, got {ids}")
        leaders = [a.agent_id for a in self.agents if a.kind is AgentKind.LEADER]
        if len(leaders) != 1:
            raise ValidationError(f"exactly one leader required, got agents {leaders}")

        world = self.world
        starts = {a.agent_id: self._start_position(a) for a in self.agents}
        for a in self.agents:
            sx, sy = starts[a.agent_id]
            if distance((sx, sy), world.center) >= world.r_effective:
                raise ValidationError(
                    f"agent {a.agent_id} starts outside the connectivity disc"
                )
            if a.kind is AgentKind.MISBEHAVING:
                tol = distance(a.initial_state.position, a.misbehavior.start_position())
                if tol > 1e-9:
                    raise ValidationError(
                        f"agent {a.agent_id}: start does not match its trajectory at t=0 "
                        f"(off by {tol:.3g} m)"
                    )
        items = sorted(starts.items())
        for i, (ia, pa) in enumerate(items):
            for ib, pb in items[i + 1 :]:
                if distance(pa, pb) <= world.d_s:
                    raise ValidationError(f"initial states overlap: agents {ia},{ib}")

        dests = {a.agent_id: a.destination for a in self.agents if a.controllable}
        for aid, dest in sorted(dests.items()):
            if distance(dest, world.center) >= world.r_effective:
                raise ValidationError(
                    f"agent {aid} destination not strictly inside the connectivity disc"
                )
        dest_items = sorted(dests.items())
        for i, (ia, pa) in enumerate(dest_items):
            for ib, pb in dest_items[i + 1 :]:
                if distance(pa, pb) <= world.d_s:
                    raise ValidationError(f"destinations overlap: agents {ia},{ib}")

        for a in self.agents:
            if a.kind is not AgentKind.MISBEHAVING:
                continue
            for aid, dest in dest_items:
                clearance = path_clearance(a.misbehavior, dest, self.t_max)
                if clearance <= world.d_s:
                    raise ValidationError(
                        f"agent {a.agent_id} trajectory passes within d_s of "
                        f"agent {aid}'s destination ({clearance:.3g} m)"
                    )

    @staticmethod
    def _start_position(a: AgentDescriptor) -> tuple[float, float]:
        return a.initial_state.position

    def gains_for(self, agent_id: int) -> ControllerGains:
        return self.agent_gains.get(agent_id, self.gains)

    def barrier_params(self) -> BarrierParams:
        return BarrierParams.for_world(self.world, delta=self.delta)

    @property
    def controllable_ids(self) -> list[int]:
        return [a.agent_id for a in self.agents if a.controllable]

    @property
    def misbehaving_ids(self) -> list[int]:
        return [a.agent_id for a in self.agents if not a.controllable]


@dataclass(frozen=True)
class Violation:
    kind: str
    t: float
    agents: tuple[int, ...]


@dataclass(frozen=True)
class AgentRecord:
    agent_id: int
    state: AgentState
    command: ControlCommand
    barrier_value: Optional[float]  # None for misbehaving agents
    min_neighbor_distance: Optional[float]  # None when the agent is alone
    center_distance: float


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    agents: tuple[AgentRecord, ...]
    min_pairwise_distance: Optional[float]
    max_center_distance: float  # over controllable agents


@dataclass
class RunOutcome:
    scenario: Scenario
    status: str
    t_end: float
    t_converged: Optional[float]
    violation: Optional[Violation]
    records: list[StepRecord]
    note_counts: dict[str, int]

    def final_states(self) -> dict[int, AgentState]:
        return {a.agent_id: a.state for a in self.records[-1].agents}

    def distance_to_destination(self, agent_id: int) -> list[tuple[float, float]]:
        dest = next(
            a.destination for a in self.scenario.agents if a.agent_id == agent_id
        )
        out = []
        for rec in self.records:
            st = next(a.state for a in rec.agents if a.agent_id == agent_id)
            out.append((rec.t, distance(st.position, dest)))
        return out

    def min_window_displacement(self, agent_id: int, window: float = 2.0) -> float:
        """Smallest displacement over any trailing window; near-zero means a stall."""
        pts = [
            (rec.t, next(a.state.position for a in rec.agents if a.agent_id == agent_id))
            for rec in self.records
        ]
        if len(pts) < 2:
            return 0.0
        best = math.inf
        j = 0
        for i in range(len(pts)):
            while pts[i][0] - pts[j][0] > window:
                j += 1
            if j < i and pts[i][0] - pts[j][0] >= window * 0.5:
                best = min(best, distance(pts[i][1], pts[j][1]))
        return 0.0 if best is math.inf else best


def monitor_step(bodies: list[BodySnapshot], world: WorldConfig) -> list[Violation]:
    """Post-step safety assertions: separation for every pair, containment
    for every controllable agent. Boundary-inclusive with a small slack."""
    found: list[Violation] = []
    ordered = sorted(bodies, key=lambda b: b.agent_id)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            if distance(a.position, b.position) < world.d_s - MONITOR_SLACK:
                found.append(
                    Violation(VIOLATION_COLLISION, 0.0, (a.agent_id, b.agent_id))
                )
    for a in ordered:
        if a.kind is AgentKind.MISBEHAVING:
            continue
        if distance(a.position, world.center) > world.r_effective + MONITOR_SLACK:
            found.append(Violation(VIOLATION_CONNECTIVITY, 0.0, (a.agent_id,)))
    return found


def convergence_check(
    bodies: list[BodySnapshot],
    destinations: dict[int, tuple[float, float]],
    radius: float,
) -> bool:
    """True iff every controllable agent is within radius of its destination."""
    for b in bodies:
        if b.kind is AgentKind.MISBEHAVING:
            continue
        if distance(b.position, destinations[b.agent_id]) > radius:
            return False
    return True


def run(scenario: Scenario) -> RunOutcome:
    """Simulate a scenario to convergence, timeout, or a recorded violation."""
    world = scenario.world
    params = scenario.barrier_params()
    by_id = {a.agent_id: a for a in scenario.agents}
    controllable = scenario.controllable_ids
    misbehaving = scenario.misbehaving_ids
    destinations = {i: by_id[i].destination for i in controllable}

    controllers = {
        i: VehicleController(
            by_id[i], scenario.gains_for(i), world, scenario.vehicle, params, scenario.dt
        )
        for i in controllable
    }
    states: dict[int, AgentState] = {
        i: by_id[i].initial_state for i in controllable
    }
    # Broadcast (speed, heading) starts at standstill along the initial heading.
    broadcast: dict[int, tuple[float, float]] = {
        i: (0.0, by_id[i].initial_state.theta) for i in controllable
    }

    def snapshot(t: float) -> list[BodySnapshot]:
        bodies = []
        for i in controllable:
            speed, heading = broadcast[i]
            bodies.append(
                BodySnapshot(i, by_id[i].kind, states[i].position, speed, heading)
            )
        for i in misbehaving:
            s = misbehaving_position(by_id[i].misbehavior, t)
            bodies.append(
                BodySnapshot(i, AgentKind.MISBEHAVING, s.position, math.hypot(*s.velocity), s.heading)
            )
        return bodies

    def make_record(step: int, t: float, bodies: list[BodySnapshot],
                    decisions: dict[int, ControlDecision]) -> StepRecord:
        positions = {b.agent_id: b.position for b in bodies}
        entries = []
        min_pair = None
        max_center = 0.0
        for b in sorted(bodies, key=lambda x: x.agent_id):
            others = [
                distance(b.position, p)
                for j, p in positions.items()
                if j != b.agent_id
            ]
            min_d = min(others) if others else None
            if min_d is not None:
                min_pair = min_d if min_pair is None else min(min_pair, min_d)
            d0 = distance(b.position, world.center)
            if b.agent_id in controllable:
                max_center = max(max_center, d0)
                dec = decisions[b.agent_id]
                entries.append(
                    AgentRecord(
                        b.agent_id,
                        states[b.agent_id],
                        dec.command,
                        dec.barrier.value,
                        min_d,
                        d0,
                    )
                )
            else:
                s = misbehaving_position(by_id[b.agent_id].misbehavior, t)
                entries.append(
                    AgentRecord(
                        b.agent_id,
                        AgentState(s.position[0], s.position[1], s.heading, 0.0),
                        ControlCommand(math.hypot(*s.velocity), 0.0),
                        None,
                        min_d,
                        d0,
                    )
                )
        return StepRecord(step, t, tuple(entries), min_pair, max_center)

    records: list[StepRecord] = []
    note_counts: dict[str, int] = {}
    status = STATUS_TIMEOUT
    t_end = scenario.t_max
    t_converged = None
    violation = None

    n_steps = int(round(scenario.t_max / scenario.dt))
    k = 0
    while True:
        t = k * scenario.dt
        bodies = snapshot(t)

        decisions: dict[int, ControlDecision] = {}
        infeasible = None
        for i in controllable:
            try:
                decisions[i] = controllers[i].decide(states[i], bodies)
            except ConstraintViolated:
                infeasible = i
                break
        if infeasible is not None:
            status = STATUS_SAFETY_VIOLATION
            violation = Violation(VIOLATION_BARRIER_INFEASIBLE, t, (infeasible,))
            t_end = t
            break

        for dec in decisions.values():
            for note in dec.notes:
                note_counts[note] = note_counts.get(note, 0) + 1

        records.append(make_record(k, t, bodies, decisions))
        for i in controllable:
            broadcast[i] = (decisions[i].command.u, decisions[i].phi)

        if convergence_check(bodies, destinations, scenario.convergence_radius):
            status = STATUS_CONVERGED
            t_converged = t
            t_end = t
            break
        if k >= n_steps:
            status = STATUS_TIMEOUT
            t_end = t
            break

        singular = None
        for i in controllable:
            try:
                states[i] = bicycle_step(
                    states[i], decisions[i].command, scenario.vehicle, scenario.dt
                )
            except SteeringSingularity:
                singular = i
                break
        t_next = (k + 1) * scenario.dt
        if singular is not None:
            status = STATUS_SAFETY_VIOLATION
            violation = Violation(VIOLATION_STEERING_SINGULARITY, t_next, (singular,))
            t_end = t_next
            break

        post = snapshot(t_next)
        viols = monitor_step(post, world)
        if viols:
            first = viols[0]
            status = STATUS_SAFETY_VIOLATION
            violation = Violation(first.kind, t_next, first.agents)
            t_end = t_next
            break
        k += 1

    return RunOutcome(
        scenario=scenario,
        status=status,
        t_end=t_end,
        t_converged=t_converged,
        violation=violation,
        records=records,
        note_counts=note_counts,
    )
