"""Scenario definitions, safety constraints, and random sphere worlds.

A scenario is a set of agents with boundary states and a set of circular
obstacles. Safety is expressed through the squared-distance constraint
g = combined_r**2 - ||p - center||**2, which is nonpositive exactly when
the agent (treated as a point against inflated obstacles) is safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import GenerationError, ScenarioLookupError, SchemaError, ValidationError
from .trajectory import (
    KinematicState,
    PiecewiseTrajectory,
    _vec2,
    sample_positions_held,
    sample_trajectory,
)

# g values up to this count as safe; matches linear-solve precision and
# keeps exact boundary contact (g = 0) feasible.
SAFETY_TOL = 1e-9

DEFAULT_SAMPLE_COUNT = 2001
DEFAULT_RADIUS_RANGE = (0.5, 2.5)
GENERATION_ATTEMPT_BUDGET = 10_000


@dataclass(frozen=True, eq=False)
class Obstacle:
    """A circular obstacle."""

    id: int
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec2(self.center, "center"))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"obstacle radius must be positive, got {self.radius}")


@dataclass(frozen=True, eq=False)
class AgentSpec:
    """One agent's size, boundary states, and nominal horizon."""

    id: int
    radius: float
    start: KinematicState
    goal: KinematicState
    t0: float
    tf_nominal: float

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"agent radius must be positive, got {self.radius}")
        if not self.tf_nominal > self.t0:
            raise ValueError(
                f"horizon [{self.t0}, {self.tf_nominal}] must be non-empty"
            )


@dataclass(frozen=True, eq=False)
class Scenario:
    """Agents plus obstacles; validates ids and start/goal feasibility."""

    agents: tuple[AgentSpec, ...]
    obstacles: tuple[Obstacle, ...]

    def __post_init__(self):
        agents = tuple(self.agents)
        obstacles = tuple(self.obstacles)
        if len({a.id for a in agents}) != len(agents):
            raise ValidationError("agent ids must be unique")
        if len({o.id for o in obstacles}) != len(obstacles):
            raise ValidationError("obstacle ids must be unique")
        for agent in agents:
            for obs in obstacles:
                combined = inflated_radius(obs, agent)
                for label, state in (("start", agent.start), ("goal", agent.goal)):
                    if constraint_value(state.p, obs.center, combined) >= 0:
                        raise ValidationError(
                            f"agent {agent.id} {label} inside inflated obstacle {obs.id}"
                        )
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "obstacles", obstacles)

    def agent(self, agent_id: int) -> AgentSpec:
        for agent in self.agents:
            if agent.id == agent_id:
                return agent
        raise ScenarioLookupError(f"unknown agent id {agent_id}")

    def obstacle(self, obstacle_id: int) -> Obstacle:
        for obs in self.obstacles:
            if obs.id == obstacle_id:
                return obs
        raise ScenarioLookupError(f"unknown obstacle id {obstacle_id}")


@dataclass(frozen=True, eq=False)
class ViolationRecord:
    """A sampled constraint violation along a trajectory.

    depth is the penetration of the required separation, in meters.
    constraint names either an obstacle id or an (i, j) agent pair.
    """

    time: float
    constraint: Union[int, tuple[int, int]]
    depth: float

    def __post_init__(self):
        if not self.depth > 0:
            raise ValueError(f"violation depth must be positive, got {self.depth}")


class Bounds(NamedTuple):
    """Axis-aligned rectangle used for obstacle placement."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float


def constraint_value(p, center, combined_r: float) -> float:
    """Squared-form distance constraint; nonpositive means safe."""
    d = np.asarray(p, dtype=float) - np.asarray(center, dtype=float)
    return float(combined_r**2 - d @ d)


def inflated_radius(obstacle: Obstacle, agent: AgentSpec) -> float:
    """Obstacle radius grown by the agent's circumscribed radius."""
    return obstacle.radius + agent.radius


def first_violation(
    traj: PiecewiseTrajectory,
    scenario: Scenario,
    agent_id: int,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
) -> Optional[ViolationRecord]:
    """Earliest sampled obstacle violation, or None if the path is safe.

    Samples the trajectory at sample_count uniform times and reports the
    deepest-penetrated obstacle at the first offending sample.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be at least 2")
    agent = scenario.agent(agent_id)
    if not scenario.obstacles:
        return None
    times = np.linspace(traj.t_start, traj.t_end, sample_count)
    positions, _, _ = sample_trajectory(traj, times)
    combined = np.array([inflated_radius(o, agent) for o in scenario.obstacles])
    centers = np.array([o.center for o in scenario.obstacles])
    # g has shape (samples, obstacles)
    d2 = ((positions[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    g = combined[None, :] ** 2 - d2
    violated = g > SAFETY_TOL
    rows = np.nonzero(violated.any(axis=1))[0]
    if rows.size == 0:
        return None
    row = int(rows[0])
    col = int(np.argmax(g[row]))
    depth = float(combined[col] - np.sqrt(d2[row, col]))
    return ViolationRecord(
        time=float(times[row]), constraint=scenario.obstacles[col].id, depth=depth
    )


def min_separation(
    traj_a: PiecewiseTrajectory,
    traj_b: PiecewiseTrajectory,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
) -> tuple[float, float]:
    """Sampled time and value of the minimum inter-agent distance.

    Sampling covers the union of both horizons; an agent outside its own
    horizon holds its endpoint state.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be at least 2")
    t_lo = min(traj_a.t_start, traj_b.t_start)
    t_hi = max(traj_a.t_end, traj_b.t_end)
    times = np.linspace(t_lo, t_hi, sample_count)
    pa = sample_positions_held(traj_a, times)
    pb = sample_positions_held(traj_b, times)
    dist = np.linalg.norm(pa - pb, axis=1)
    k = int(np.argmin(dist))
    return float(times[k]), float(dist[k])


def gen_world(
    seed: int,
    obstacle_count: int,
    bounds: Bounds,
    agents: tuple[AgentSpec, ...],
    radius_range: tuple[float, float] = DEFAULT_RADIUS_RANGE,
) -> Scenario:
    """Generate a random sphere world by rejection sampling.

    Deterministic for a given seed. Obstacles are placed uniformly in
    bounds with radii uniform in radius_range, rejecting any placement
    that swallows an agent's start or goal once inflated.
    """
    if obstacle_count < 0:
        raise ValueError("obstacle_count must be nonnegative")
    bounds = Bounds(*bounds)
    if not (bounds.xmax > bounds.xmin and bounds.ymax > bounds.ymin):
        raise ValueError(f"degenerate bounds {bounds}")
    rng = np.random.default_rng(seed)
    agents = tuple(agents)
    obstacles: list[Obstacle] = []
    attempts = 0
    for k in range(obstacle_count):
        while True:
            attempts += 1
            if attempts > GENERATION_ATTEMPT_BUDGET:
                raise GenerationError(
                    f"gave up after {GENERATION_ATTEMPT_BUDGET} placement attempts"
                )
            cx = rng.uniform(bounds.xmin, bounds.xmax)
            cy = rng.uniform(bounds.ymin, bounds.ymax)
            radius = rng.uniform(*radius_range)
            candidate = Obstacle(id=k, center=(cx, cy), radius=radius)
            ok = all(
                constraint_value(state.p, candidate.center, radius + agent.radius) < 0
                for agent in agents
                for state in (agent.start, agent.goal)
            )
            if ok:
                obstacles.append(candidate)
                break
    return Scenario(agents=agents, obstacles=tuple(obstacles))


# --- JSON schema -----------------------------------------------------------
#
# {"agents":[{"id":int,"radius":num,"start":{"p":[x,y],"v":[x,y]},
#             "goal":{"p":[x,y],"v":[x,y]},"t0":num,"tf":num}],
#  "obstacles":[{"id":int,"center":[x,y],"radius":num}]}
#
# Unknown fields are rejected.


def _require_keys(obj: dict, keys: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    extra = set(obj) - keys
    if extra:
        raise SchemaError(f"{where}: unknown fields {sorted(extra)}")
    missing = keys - set(obj)
    if missing:
        raise SchemaError(f"{where}: missing fields {sorted(missing)}")


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_pair(value, where: str) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaError(f"{where}: expected [x, y]")
    return (_as_float(value[0], where), _as_float(value[1], where))


def _state_from_json(obj, where: str) -> KinematicState:
    _require_keys(obj, {"p", "v"}, where)
    return KinematicState(
        p=_as_pair(obj["p"], f"{where}.p"), v=_as_pair(obj["v"], f"{where}.v")
    )


def state_to_json(state: KinematicState) -> dict:
    return {"p": [float(state.p[0]), float(state.p[1])],
            "v": [float(state.v[0]), float(state.v[1])]}


def scenario_to_json(scenario: Scenario) -> dict:
    return {
        "agents": [
            {
                "id": a.id,
                "radius": a.radius,
                "start": state_to_json(a.start),
                "goal": state_to_json(a.goal),
                "t0": a.t0,
                "tf": a.tf_nominal,
            }
            for a in scenario.agents
        ],
        "obstacles": [
            {"id": o.id, "center": [float(o.center[0]), float(o.center[1])],
             "radius": o.radius}
            for o in scenario.obstacles
        ],
    }


def scenario_from_json(obj) -> Scenario:
    _require_keys(obj, {"agents", "obstacles"}, "scenario")
    if not isinstance(obj["agents"], list) or not isinstance(obj["obstacles"], list):
        raise SchemaError("scenario: agents and obstacles must be arrays")
    agents = []
    for i, item in enumerate(obj["agents"]):
        where = f"agents[{i}]"
        _require_keys(item, {"id", "radius", "start", "goal", "t0", "tf"}, where)
        try:
            agents.append(
                AgentSpec(
                    id=_as_int(item["id"], f"{where}.id"),
                    radius=_as_float(item["radius"], f"{where}.radius"),
                    start=_state_from_json(item["start"], f"{where}.start"),
                    goal=_state_from_json(item["goal"], f"{where}.goal"),
                    t0=_as_float(item["t0"], f"{where}.t0"),
                    tf_nominal=_as_float(item["tf"], f"{where}.tf"),
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    obstacles = []
    for i, item in enumerate(obj["obstacles"]):
        where = f"obstacles[{i}]"
        _require_keys(item, {"id", "center", "radius"}, where)
        try:
            obstacles.append(
                Obstacle(
                    id=_as_int(item["id"], f"{where}.id"),
                    center=_as_pair(item["center"], f"{where}.center"),
                    radius=_as_float(item["radius"], f"{where}.radius"),
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    return Scenario(agents=tuple(agents), obstacles=tuple(obstacles))


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_json(scenario), fh, indent=2)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON in {path}: {exc}") from exc
    return scenario_from_json(obj)
