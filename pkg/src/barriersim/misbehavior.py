"""Scripted trajectories for uncontrollable agents.

A misbehaving agent's controller is assumed broken: it follows one of the
trajectory generators below, broadcasts its state, and receives nothing.
Each generator is deterministic, so a scenario replays identically.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

# Internal tick for the random walk's piecewise-constant velocity.
WALK_TICK = 0.1


@dataclass(frozen=True)
class MotionSample:
    position: tuple[float, float]
    velocity: tuple[float, float]
    heading: float  # atan2 of velocity


@dataclass(frozen=True)
class WaypointOscillator:
    """Constant-speed shuttle between two fixed points (triangular wave)."""

    point_a: tuple[float, float]
    point_b: tuple[float, float]
    speed: float

    def __post_init__(self):
        if not (self.speed > 0.0):
            raise ValueError("oscillator speed must be > 0")
        if self.point_a == self.point_b:
            raise ValueError("oscillator endpoints must differ")

    def start_position(self) -> tuple[float, float]:
        return self.point_a

    def sample(self, t: float) -> MotionSample:
        ax, ay = self.point_a
        bx, by = self.point_b
        seg = math.hypot(bx - ax, by - ay)
        ux, uy = (bx - ax) / seg, (by - ay) / seg
        leg = seg / self.speed
        tau = math.fmod(t, 2.0 * leg)
        if tau < leg:
            s = self.speed * tau
            vel = (self.speed * ux, self.speed * uy)
            pos = (ax + s * ux, ay + s * uy)
        else:
            s = self.speed * (tau - leg)
            vel = (-self.speed * ux, -self.speed * uy)
            pos = (bx - s * ux, by - s * uy)
        return MotionSample(pos, vel, math.atan2(vel[1], vel[0]))


@dataclass(frozen=True)
class CircularOrbit:
    """Uniform motion on a circle."""

    center: tuple[float, float]
    radius: float
    angular_speed: float
    phase: float = 0.0

    def __post_init__(self):
        if not (self.radius > 0.0):
            raise ValueError("orbit radius must be > 0")
        if self.angular_speed == 0.0:
            raise ValueError("orbit angular_speed must be nonzero")

    def start_position(self) -> tuple[float, float]:
        return self.sample(0.0).position

    def sample(self, t: float) -> MotionSample:
        a = self.angular_speed * t + self.phase
        cx, cy = self.center
        pos = (cx + self.radius * math.cos(a), cy + self.radius * math.sin(a))
        rw = self.radius * self.angular_speed
        vel = (-rw * math.sin(a), rw * math.cos(a))
        return MotionSample(pos, vel, math.atan2(vel[1], vel[0]))


@dataclass
class RandomWalk:
    """Seeded bounded walk, reflected at the containment circle.

    Heading diffuses by a Gaussian increment once per WALK_TICK; position
    is piecewise linear between ticks. Segments are generated lazily from
    a private RNG, so sampling at any t is reproducible.
    """

    seed: int
    speed: float
    heading_diffusion: float  # rad per tick, std-dev of the increment
    start: tuple[float, float]
    bound_center: tuple[float, float]
    bound_radius: float

    _rng: random.Random = field(init=False, repr=False, compare=False)
    _points: list[tuple[float, float]] = field(init=False, repr=False, compare=False)
    _headings: list[float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.speed > 0.0):
            raise ValueError("walk speed must be > 0")
        if self.heading_diffusion < 0.0:
            raise ValueError("heading_diffusion must be >= 0")
        self._rng = random.Random(self.seed)
        self._points = [self.start]
        self._headings = [self._rng.uniform(-math.pi, math.pi)]

    def start_position(self) -> tuple[float, float]:
        return self.start

    def _extend_to(self, k: int):
        while len(self._points) <= k:
            px, py = self._points[-1]
            h = self._headings[-1]
            vx, vy = self.speed * math.cos(h), self.speed * math.sin(h)
            nx, ny = px + vx * WALK_TICK, py + vy * WALK_TICK
            cx, cy = self.bound_center
            if math.hypot(nx - cx, ny - cy) > self.bound_radius:
                # Reflect the velocity about the inward normal.
                d = math.hypot(px - cx, py - cy)
                if d > 0.0:
                    ux, uy = (px - cx) / d, (py - cy) / d
                    dot = vx * ux + vy * uy
                    vx, vy = vx - 2.0 * dot * ux, vy - 2.0 * dot * uy
                else:
                    vx, vy = -vx, -vy
                nx, ny = px + vx * WALK_TICK, py + vy * WALK_TICK
                if math.hypot(nx - cx, ny - cy) > self.bound_radius:
                    # Still escaping (started on the boundary); aim at the center.
                    h_in = math.atan2(cy - py, cx - px)
                    vx = self.speed * math.cos(h_in)
                    vy = self.speed * math.sin(h_in)
                    nx, ny = px + vx * WALK_TICK, py + vy * WALK_TICK
                h = math.atan2(vy, vx)
            self._points.append((nx, ny))
            self._headings.append(h + self.heading_diffusion * self._rng.gauss(0.0, 1.0))

    def sample(self, t: float) -> MotionSample:
        k = int(t / WALK_TICK)
        self._extend_to(k + 1)
        px, py = self._points[k]
        qx, qy = self._points[k + 1]
        vx, vy = (qx - px) / WALK_TICK, (qy - py) / WALK_TICK
        frac = t - k * WALK_TICK
        pos = (px + vx * frac, py + vy * frac)
        return MotionSample(pos, (vx, vy), math.atan2(vy, vx))

    def segment_endpoints(self, t_max: float) -> list[tuple[float, float]]:
        """Walk vertices covering [0, t_max]; used by scenario validation."""
        k = int(t_max / WALK_TICK) + 1
        self._extend_to(k)
        return list(self._points[: k + 1])


MisbehaviorSpec = WaypointOscillator | CircularOrbit | RandomWalk


def misbehaving_position(spec: MisbehaviorSpec, t: float) -> MotionSample:
    """Position, velocity and motion heading of a scripted agent at time t."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return spec.sample(t)


def segment_point_distance(
    a: tuple[float, float], b: tuple[float, float], p: tuple[float, float]
) -> float:
    """Distance from point p to segment ab."""
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    if den == 0.0:
        return math.hypot(px - ax, py - ay)
    s = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / den))
    return math.hypot(px - (ax + s * dx), py - (ay + s * dy))


def path_clearance(spec: MisbehaviorSpec, p: tuple[float, float], t_max: float) -> float:
    """Minimum distance from a fixed point to the trajectory over [0, t_max]."""
    if isinstance(spec, WaypointOscillator):
        return segment_point_distance(spec.point_a, spec.point_b, p)
    if isinstance(spec, CircularOrbit):
        d_center = math.hypot(p[0] - spec.center[0], p[1] - spec.center[1])
        return abs(d_center - spec.radius)
    pts = spec.segment_endpoints(t_max)
    return min(
        segment_point_distance(pts[i], pts[i + 1], p) for i in range(len(pts) - 1)
    )
