"""Barrier construction: per-agent scalar field and its spatial gradient.

Each controllable agent descends a normalized barrier value built from
two ingredients:

* a goal-recentered log barrier on the connectivity disc, zero at the
  agent's destination and divergent at the disc boundary;
* one goal-recentered log barrier per visible neighbor, divergent at the
  separation distance d_s and faded to zero beyond the sensing radius by
  a C^1 cubic blend.

The leader only counts misbehaving agents as neighbors; followers count
everyone. All functions are pure, so per-agent evaluation can run in
parallel over one immutable snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConstraintViolated
from .model import AgentKind, BodySnapshot, WorldConfig

# Below this distance from the disc center the barrier gradient is taken
# as zero (the norm is not differentiable at the center; by symmetry the
# limit direction is arbitrary).
CENTER_EPS = 1e-12

# Tolerance for the blend cubic's boundary conditions at construction.
BLEND_TOL = 1e-9


def connectivity_margin(r: tuple[float, float], world: WorldConfig) -> float:
    """Margin to the connectivity boundary: R_effective - |r - center|.

    Negative when the agent has left the usable disc.
    """
    return world.r_effective - math.hypot(
        r[0] - world.center[0], r[1] - world.center[1]
    )


def collision_margin(
    r_i: tuple[float, float], r_j: tuple[float, float], world: WorldConfig
) -> float:
    """Margin to the separation constraint: |r_i - r_j|^2 - d_s^2."""
    dx = r_i[0] - r_j[0]
    dy = r_i[1] - r_j[1]
    return dx * dx + dy * dy - world.d_s * world.d_s


def log_barrier(c: float) -> float:
    """-ln(c); diverges as the margin c approaches zero from above."""
    if c <= 0.0:
        raise ConstraintViolated("log_barrier argument", c)
    return -math.log(c)


def blend_coefficients(R_z: float, R_s: float) -> tuple[float, float, float, float]:
    """Cubic coefficients (A, B, C, D) of the fade-out blend.

    Derived as the Hermite cubic with value 1 and slope 0 at R_z, value 0
    and slope 0 at R_s. Note the constant term is +R_s^2(3R_z - R_s)/(R_z - R_s)^3;
    a sign-flipped constant fails the boundary conditions (see tests).
    """
    den = (R_z - R_s) ** 3
    a = -2.0 / den
    b = 3.0 * (R_z + R_s) / den
    c = -6.0 * R_z * R_s / den
    d = R_s * R_s * (3.0 * R_z - R_s) / den
    return (a, b, c, d)


def blend_weight(d: float, world: WorldConfig) -> float:
    """Fade factor for a neighbor at distance d: 1 up to R_z, 0 beyond R_s."""
    if d <= world.R_z:
        return 1.0
    if d >= world.R_s:
        return 0.0
    a, b, c, k = blend_coefficients(world.R_z, world.R_s)
    return ((a * d + b) * d + c) * d + k


def blend_derivative(d: float, world: WorldConfig) -> float:
    """d/dd of blend_weight; nonzero only strictly inside (R_z, R_s)."""
    if d <= world.R_z or d >= world.R_s:
        return 0.0
    a, b, c, _ = blend_coefficients(world.R_z, world.R_s)
    return (3.0 * a * d + 2.0 * b) * d + c


@dataclass(frozen=True)
class BarrierParams:
    """Combination exponent plus the verified blend coefficients."""

    delta: float
    sigma_coeffs: tuple[float, float, float, float]

    def __post_init__(self):
        if not (self.delta >= 1.0):
            raise ValueError(f"delta must be >= 1, got {self.delta}")

    @classmethod
    def for_world(cls, world: WorldConfig, delta: float = 1.0) -> "BarrierParams":
        coeffs = blend_coefficients(world.R_z, world.R_s)
        a, b, c, k = coeffs
        val = lambda d: ((a * d + b) * d + c) * d + k
        slope = lambda d: (3.0 * a * d + 2.0 * b) * d + c
        checks = (
            ("value at R_z", val(world.R_z) - 1.0),
            ("value at R_s", val(world.R_s)),
            ("slope at R_z", slope(world.R_z)),
            ("slope at R_s", slope(world.R_s)),
        )
        for name, err in checks:
            if abs(err) > BLEND_TOL:
                raise ValueError(f"blend cubic failed boundary check: {name} off by {err:.3e}")
        return cls(delta=delta, sigma_coeffs=coeffs)


def _connectivity_gradient(
    p: tuple[float, float], world: WorldConfig
) -> tuple[float, float]:
    """Gradient of -ln(connectivity margin) at p; zero at the disc center."""
    dx = p[0] - world.center[0]
    dy = p[1] - world.center[1]
    d = math.hypot(dx, dy)
    if d < CENTER_EPS:
        return (0.0, 0.0)
    c = world.r_effective - d
    if c <= 0.0:
        raise ConstraintViolated("connectivity", c)
    s = 1.0 / (d * c)
    return (dx * s, dy * s)


def recentered_connectivity(
    r: tuple[float, float], r_dest: tuple[float, float], world: WorldConfig
) -> float:
    """Connectivity barrier shifted and tilted to vanish at the destination."""
    b_r = log_barrier(connectivity_margin(r, world))
    b_d = log_barrier(connectivity_margin(r_dest, world))
    gx, gy = _connectivity_gradient(r_dest, world)
    return b_r - b_d - (gx * (r[0] - r_dest[0]) + gy * (r[1] - r_dest[1]))


def recentered_collision(
    r_i: tuple[float, float],
    r_j: tuple[float, float],
    r_dest: tuple[float, float],
    world: WorldConfig,
) -> float:
    """Pair barrier shifted to vanish when the agent reaches its destination.

    Unlike the connectivity version there is no gradient tilt term; the
    shift alone recenters it.
    """
    c_here = collision_margin(r_i, r_j, world)
    if c_here <= 0.0:
        raise ConstraintViolated(f"separation from agent at {r_j}", c_here)
    c_dest = collision_margin(r_dest, r_j, world)
    if c_dest <= 0.0:
        raise ConstraintViolated(f"separation of destination from agent at {r_j}", c_dest)
    return math.log(c_dest) - math.log(c_here)


def combine_and_normalize(components: Iterable[float], delta: float) -> float:
    """Map nonnegative component values to [0, 1) through the delta-norm.

    v = (sum V_n^delta)^(1/delta), returned as v / (1 + v). delta = 1 is a
    plain sum; larger delta weights the worst component more.
    """
    if delta < 1.0:
        raise ValueError("delta must be >= 1")
    vals = list(components)
    if any(v < 0.0 for v in vals):
        raise ValueError("components must be >= 0")
    if delta == 1.0:
        v = sum(vals)
    else:
        s = sum(v**delta for v in vals)
        v = s ** (1.0 / delta)
    return v / (1.0 + v)


@dataclass(frozen=True)
class BarrierEvaluation:
    """Normalized barrier value, its spatial gradient, and the raw components."""

    value: float  # in [0, 1)
    grad: tuple[float, float]
    components: tuple[tuple[int, float], ...]  # (constraint id, raw value); 0 = connectivity


CONNECTIVITY_ID = 0


def barrier_neighbor_ids(
    agent_id: int, kind: AgentKind, bodies: Sequence[BodySnapshot]
) -> list[int]:
    """Ids whose separation terms enter this agent's barrier.

    The leader converges regardless of the followers (they yield to it)
    and only treats misbehaving agents as obstacles; followers treat every
    other agent as an obstacle.
    """
    out = []
    for b in bodies:
        if b.agent_id == agent_id:
            continue
        if kind is AgentKind.LEADER and b.kind is not AgentKind.MISBEHAVING:
            continue
        out.append(b.agent_id)
    return out


def evaluate_barrier(
    agent_id: int,
    bodies: Sequence[BodySnapshot],
    destination: tuple[float, float],
    world: WorldConfig,
    params: BarrierParams,
    position: tuple[float, float] | None = None,
) -> BarrierEvaluation:
    """Assemble the agent's barrier value and analytic gradient.

    `bodies` is the full snapshot; neighbor terms are selected by the
    agent's kind and faded out beyond the sensing radius. `position`
    overrides the agent's snapshot position (used by the finite-difference
    oracle).
    """
    by_id = {b.agent_id: b for b in bodies}
    me = by_id[agent_id]
    r = me.position if position is None else position

    # Connectivity component and its gradient.
    rec = recentered_connectivity(r, destination, world)
    g_here = _connectivity_gradient(r, world)
    g_dest = _connectivity_gradient(destination, world)
    comp_vals = [rec * rec]
    comp_grads = [(2.0 * rec * (g_here[0] - g_dest[0]), 2.0 * rec * (g_here[1] - g_dest[1]))]
    comp_ids = [CONNECTIVITY_ID]

    for j in barrier_neighbor_ids(agent_id, me.kind, bodies):
        q = by_id[j].position
        dx, dy = r[0] - q[0], r[1] - q[1]
        d = math.hypot(dx, dy)
        if d >= world.R_s:
            continue  # out of sensing range: contributes exactly zero
        sigma = blend_weight(d, world)
        sigma_d = blend_derivative(d, world)
        qv = recentered_collision(r, q, destination, world)
        c_here = collision_margin(r, q, world)
        val = sigma * qv * qv
        # d(sigma)/dr through d, plus sigma * d(qv^2)/dr through the margin.
        s1 = sigma_d * qv * qv / d if d > 0.0 else 0.0
        s2 = -4.0 * sigma * qv / c_here
        comp_vals.append(val)
        comp_grads.append((s1 * dx + s2 * dx, s1 * dy + s2 * dy))
        comp_ids.append(j)

    delta = params.delta
    if delta == 1.0:
        v = sum(comp_vals)
        dvx = sum(g[0] for g in comp_grads)
        dvy = sum(g[1] for g in comp_grads)
    else:
        s = sum(val**delta for val in comp_vals)
        if s == 0.0:
            v, dvx, dvy = 0.0, 0.0, 0.0
        else:
            v = s ** (1.0 / delta)
            scale = s ** ((1.0 - delta) / delta)
            dvx = scale * sum(
                val ** (delta - 1.0) * g[0] for val, g in zip(comp_vals, comp_grads)
            )
            dvy = scale * sum(
                val ** (delta - 1.0) * g[1] for val, g in zip(comp_vals, comp_grads)
            )

    norm = 1.0 / (1.0 + v) ** 2
    return BarrierEvaluation(
        value=v / (1.0 + v),
        grad=(dvx * norm, dvy * norm),
        components=tuple(zip(comp_ids, comp_vals)),
    )


def fd_gradient(
    agent_id: int,
    bodies: Sequence[BodySnapshot],
    destination: tuple[float, float],
    world: WorldConfig,
    params: BarrierParams,
    h: float = 1e-6,
) -> tuple[float, float]:
    """Central-difference gradient of the barrier value; the oracle for grad checks."""
    me = next(b for b in bodies if b.agent_id == agent_id)
    x, y = me.position

    def value_at(px: float, py: float) -> float:
        return evaluate_barrier(
            agent_id, bodies, destination, world, params, position=(px, py)
        ).value

    gx = (value_at(x + h, y) - value_at(x - h, y)) / (2.0 * h)
    gy = (value_at(x, y + h) - value_at(x, y - h)) / (2.0 * h)
    return (gx, gy)
