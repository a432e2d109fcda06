"""Strategic coordination layer: messages, payoffs, and negotiation.

Because a converged plan is fully determined by its boundary data and
junction sequence, an agent can broadcast its entire trajectory as a
short list of real numbers instead of a sampled path. Receivers rebuild
the exact trajectory with one linear solve. Conflicts between agents
are resolved by shifting arrival times: the accepted assignment is the
smallest total deviation (on a fixed grid) that makes every pairwise
separation safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import (
    DecodeError,
    EncodingError,
    NegotiationError,
    PlannerError,
    SchemaError,
    UnsupportedScenarioError,
    ValidationError,
)
from .solver import (
    Junction,
    JunctionSolveConfig,
    SolveReport,
    plan_agent,
    solve_coefficients,
)
from .trajectory import (
    KinematicState,
    PiecewiseTrajectory,
    sample_positions_held,
    trajectory_energy,
)
from .world import (
    AgentSpec,
    Scenario,
    first_violation,
    state_to_json,
    _state_from_json,
    _require_keys,
    _as_float,
    _as_int,
)

# Penetration of the required separation deeper than this counts as a
# conflict; consistent with the world-model safety tolerance.
SEPARATION_TOL = 1e-9

DEFAULT_SAMPLE_COUNT = 2001


@dataclass(frozen=True, eq=False)
class Message:
    """Finite-real encoding of one agent's optimal trajectory.

    Carries boundary data, the horizon, and the junction sequence; no
    sampled states or polynomial coefficients. Real-number tally:
    10 + 2 * len(junctions) floats (t0, tf, four state 2-vectors, and
    theta/time per junction) plus 1 + len(junctions) integers (agent id
    and one obstacle id per junction).
    """

    agent_id: int
    t0: float
    tf: float
    start: KinematicState
    goal: KinematicState
    junctions: tuple[Junction, ...]

    def __post_init__(self):
        object.__setattr__(self, "junctions", tuple(self.junctions))
        times = [j.time for j in self.junctions]
        if any(not self.t0 < t < self.tf for t in times):
            raise ValidationError(
                f"junction times {times} outside horizon ({self.t0}, {self.tf})"
            )
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError(f"junction times {times} not strictly increasing")


def message_real_count(msg: Message) -> int:
    """Number of real values in the wire encoding."""
    return 10 + 2 * len(msg.junctions)


def message_int_count(msg: Message) -> int:
    """Number of integer values in the wire encoding."""
    return 1 + len(msg.junctions)


@dataclass(frozen=True, order=True)
class Payoff:
    """Energy cost of a joint plan for one agent; infinite if unsafe.

    The infeasible payoff compares greater than every finite one.
    """

    value: float

    def __post_init__(self):
        if not (self.value >= 0):
            raise ValueError(f"payoff must be nonnegative, got {self.value}")

    @classmethod
    def infeasible(cls) -> "Payoff":
        return cls(value=math.inf)

    @property
    def is_infeasible(self) -> bool:
        return math.isinf(self.value)

    def to_json(self):
        return "infeasible" if self.is_infeasible else self.value


@dataclass(frozen=True)
class NegotiationConfig:
    """Grid search settings for arrival-time negotiation."""

    step: float = 0.5
    max_deviation: float = 5.0
    sample_count: int = DEFAULT_SAMPLE_COUNT

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        ratio = self.max_deviation / self.step
        if self.max_deviation < 0 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("max_deviation must be a nonneg multiple of step")
        if self.sample_count < 2:
            raise ValueError("sample_count must be at least 2")


@dataclass(frozen=True, eq=False)
class ConflictRecord:
    """Deepest sampled separation violation for one agent pair."""

    pair: tuple[int, int]
    time: float
    penetration: float


def encode_message(agent: AgentSpec, report: SolveReport) -> Message:
    """Compress a converged plan into its finite-real message."""
    if not report.converged:
        raise EncodingError(
            f"agent {agent.id}: refusing to encode a non-converged plan "
            f"(residual {report.residual_norm:.3e})"
        )
    return Message(
        agent_id=agent.id,
        t0=agent.t0,
        tf=agent.tf_nominal,
        start=agent.start,
        goal=agent.goal,
        junctions=report.junction_sequence,
    )


def decode_message(msg: Message, scenario: Scenario) -> PiecewiseTrajectory:
    """Rebuild the sender's exact trajectory from its message.

    One linear solve on the message's junctions; no re-optimization.
    """
    try:
        radius = scenario.agent(msg.agent_id).radius
        for junction in msg.junctions:
            scenario.obstacle(junction.obstacle_id)
    except Exception as exc:
        raise DecodeError(str(exc)) from exc
    sender = AgentSpec(
        id=msg.agent_id, radius=radius, start=msg.start, goal=msg.goal,
        t0=msg.t0, tf_nominal=msg.tf,
    )
    return solve_coefficients(sender, msg.junctions, scenario)


def _pair_min_separation(traj_a, traj_b, sample_count: int):
    t_lo = min(traj_a.t_start, traj_b.t_start)
    t_hi = max(traj_a.t_end, traj_b.t_end)
    times = np.linspace(t_lo, t_hi, sample_count)
    dist = np.linalg.norm(
        sample_positions_held(traj_a, times) - sample_positions_held(traj_b, times),
        axis=1,
    )
    k = int(np.argmin(dist))
    return float(times[k]), float(dist[k])


def _conflicts_between(
    entries: list[tuple[int, float, PiecewiseTrajectory]], sample_count: int
) -> list[ConflictRecord]:
    """entries holds (agent_id, radius, trajectory) sorted by caller."""
    conflicts = []
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            id_a, r_a, traj_a = entries[i]
            id_b, r_b, traj_b = entries[j]
            t_min, d_min = _pair_min_separation(traj_a, traj_b, sample_count)
            penetration = (r_a + r_b) - d_min
            if penetration > SEPARATION_TOL:
                conflicts.append(
                    ConflictRecord(pair=(id_a, id_b), time=t_min,
                                   penetration=penetration)
                )
    return conflicts


def detect_conflicts(
    msgs: list[Message], scenario: Scenario, sample_count: int = DEFAULT_SAMPLE_COUNT
) -> list[ConflictRecord]:
    """Deepest pairwise separation violations among decoded messages.

    Each pair is sampled over the union of its two horizons; agents hold
    their endpoint state outside their own horizon.
    """
    entries = [
        (msg.agent_id, scenario.agent(msg.agent_id).radius,
         decode_message(msg, scenario))
        for msg in msgs
    ]
    return _conflicts_between(entries, sample_count)


def payoff(
    msg: Message,
    all_msgs: list[Message],
    scenario: Scenario,
    sample_count: int = DEFAULT_SAMPLE_COUNT,
) -> Payoff:
    """Energy of the agent's decoded trajectory, infeasible if unsafe.

    Unsafe means an obstacle violation or a sampled approach within the
    combined radius of any other agent's decoded trajectory.
    """
    traj = decode_message(msg, scenario)
    if first_violation(traj, scenario, msg.agent_id, sample_count) is not None:
        return Payoff.infeasible()
    radius = scenario.agent(msg.agent_id).radius
    for other in all_msgs:
        if other.agent_id == msg.agent_id:
            continue
        other_radius = scenario.agent(other.agent_id).radius
        other_traj = decode_message(other, scenario)
        _, d_min = _pair_min_separation(traj, other_traj, sample_count)
        if (radius + other_radius) - d_min > SEPARATION_TOL:
            return Payoff.infeasible()
    return Payoff(value=trajectory_energy(traj))


def negotiate_arrival_times(
    scenario: Scenario,
    config: NegotiationConfig = NegotiationConfig(),
    solver_config: JunctionSolveConfig = JunctionSolveConfig(),
) -> dict[int, float]:
    """Pick arrival times that remove all inter-agent conflicts.

    Deviations are multiples of the grid step up to the budget. The
    search enumerates joint assignments in increasing total absolute
    deviation, breaking ties by the smaller worst-case deviation and
    then by giving the earlier (more negative) deviation to the lower
    agent id, and accepts the first assignment whose replanned
    trajectories are conflict-free. Requires all goals at rest so
    finished agents can hold their goal state.
    """
    agents = sorted(scenario.agents, key=lambda a: a.id)
    for agent in agents:
        if not np.all(agent.goal.v == 0.0):
            raise UnsupportedScenarioError(
                f"agent {agent.id} has nonzero goal velocity; arrival-time "
                "negotiation requires goals at rest"
            )
    m = int(round(config.max_deviation / config.step))
    plan_cache: dict[tuple[int, int], PiecewiseTrajectory | None] = {}

    def plan_with_deviation(agent: AgentSpec, ticks: int):
        key = (agent.id, ticks)
        if key not in plan_cache:
            shifted = AgentSpec(
                id=agent.id, radius=agent.radius, start=agent.start,
                goal=agent.goal, t0=agent.t0,
                tf_nominal=agent.tf_nominal + ticks * config.step,
            )
            try:
                traj, report = plan_agent(shifted, scenario, solver_config)
                plan_cache[key] = traj if report.converged else None
            except PlannerError:
                plan_cache[key] = None
        return plan_cache[key]

    # Nominal plans must exist; surface their failure immediately.
    for agent in agents:
        nominal = plan_with_deviation(agent, 0)
        if nominal is None:
            raise NegotiationError(
                f"agent {agent.id} has no converged plan at its nominal horizon"
            )

    candidates = sorted(
        product(range(-m, m + 1), repeat=len(agents)),
        key=lambda ticks: (
            sum(abs(t) for t in ticks),
            max(abs(t) for t in ticks),
            ticks,
        ),
    )
    for ticks in candidates:
        entries = []
        for agent, tick in zip(agents, ticks):
            traj = plan_with_deviation(agent, tick)
            if traj is None:
                break
            entries.append((agent.id, agent.radius, traj))
        else:
            if not _conflicts_between(entries, config.sample_count):
                return {
                    agent.id: agent.tf_nominal + tick * config.step
                    for agent, tick in zip(agents, ticks)
                }
    raise NegotiationError(
        f"no conflict-free assignment within +/-{config.max_deviation} s"
    )


# --- JSON ------------------------------------------------------------------


def message_to_json(msg: Message) -> dict:
    return {
        "agent_id": msg.agent_id,
        "t0": msg.t0,
        "tf": msg.tf,
        "start": state_to_json(msg.start),
        "goal": state_to_json(msg.goal),
        "junctions": [
            {"obstacle": j.obstacle_id, "theta": j.theta, "time": j.time}
            for j in msg.junctions
        ],
    }


def message_from_json(obj) -> Message:
    _require_keys(obj, {"agent_id", "t0", "tf", "start", "goal", "junctions"},
                  "message")
    if not isinstance(obj["junctions"], list):
        raise SchemaError("message.junctions must be an array")
    junctions = []
    for i, item in enumerate(obj["junctions"]):
        where = f"message.junctions[{i}]"
        _require_keys(item, {"obstacle", "theta", "time"}, where)
        junctions.append(
            Junction(
                obstacle_id=_as_int(item["obstacle"], f"{where}.obstacle"),
                theta=_as_float(item["theta"], f"{where}.theta"),
                time=_as_float(item["time"], f"{where}.time"),
            )
        )
    return Message(
        agent_id=_as_int(obj["agent_id"], "message.agent_id"),
        t0=_as_float(obj["t0"], "message.t0"),
        tf=_as_float(obj["tf"], "message.tf"),
        start=_state_from_json(obj["start"], "message.start"),
        goal=_state_from_json(obj["goal"], "message.goal"),
        junctions=tuple(junctions),
    )


def negotiation_to_json(arrival_times: dict[int, float],
                        nominal: dict[int, float]) -> dict:
    total = sum(abs(arrival_times[k] - nominal[k]) for k in arrival_times)
    return {
        "arrival_times": {str(k): v for k, v in sorted(arrival_times.items())},
        "total_deviation": total,
    }
