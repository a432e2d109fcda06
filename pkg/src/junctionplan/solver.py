"""Constrained trajectory generation through junction parameterization.

A junction is an instant where an obstacle constraint becomes active and
immediately inactive again: the path touches the inflated circle and
leaves. Fixing the junctions (which obstacle, where on the circle, and
when) makes the whole trajectory the solution of one block linear
system, because position, velocity, and control continuity plus the
boundary conditions are all linear in the cubic coefficients.

The two remaining optimality conditions per junction are nonlinear in
the contact angle and time:

  tangency   v(t_k) . n(theta_k) = 0, with n the outward contact normal,
  jump       (udot_before - udot_after) . v(t_k) = 0, where udot = 6*c1
             is constant on each segment.

An outer damped least-squares iteration drives both residuals to zero
over the stacked (theta_k, t_k) parameters, with Jacobians from forward
finite differences. Activation sequences are discovered greedily: plan,
find the first violated obstacle, seed a junction there, replan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConditioningError,
    OrderingError,
    PlanningFailure,
)
from .trajectory import (
    CubicSegment,
    PiecewiseTrajectory,
    eval_trajectory,
    solve_refined,
    trajectory_energy,
)
from .world import (
    AgentSpec,
    Obstacle,
    Scenario,
    ViolationRecord,
    first_violation,
    inflated_radius,
)

# Condition-number ceiling for the block system; beyond it junction
# times are too close to each other or to the horizon boundary.
CONDITION_LIMIT = 1e12

# Below this speed at a junction both residuals vanish identically and
# the contact angle is unobservable; flagged on the report.
DEGENERATE_SPEED = 1e-6

# Offsets smaller than this count as "path aims through the center",
# triggering the deterministic left-side contact guess.
CENTER_COINCIDENCE = 1e-12


def _wrap_angle(theta: float) -> float:
    """Normalize an angle into [-pi, pi)."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped >= math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


@dataclass(frozen=True, eq=False)
class Junction:
    """One constraint activation: which obstacle, where, and when."""

    obstacle_id: int
    theta: float
    time: float

    def __post_init__(self):
        if not (np.isfinite(self.theta) and np.isfinite(self.time)):
            raise ValueError("junction parameters must be finite")
        object.__setattr__(self, "theta", _wrap_angle(float(self.theta)))


@dataclass(frozen=True)
class JunctionSolveConfig:
    """Tolerances and budgets for the junction least-squares solve."""

    residual_tol: float = 1e-7
    max_iterations: int = 200
    fd_step: float = 1e-6
    sample_count: int = 2001
    max_junctions: int = 8
    time_margin: float = 1e-3

    def __post_init__(self):
        for name in (
            "residual_tol", "max_iterations", "fd_step",
            "sample_count", "max_junctions", "time_margin",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of one junction solve."""

    converged: bool
    residual_norm: float
    iterations: int
    junction_sequence: tuple[Junction, ...]
    energy: float
    # Junction indices where |v| < DEGENERATE_SPEED; the residuals carry
    # no information there, so convergence is only nominal.
    degenerate_junctions: tuple[int, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "residual": self.residual_norm,
            "iterations": self.iterations,
            "energy": self.energy,
            "junctions": [
                {"obstacle": j.obstacle_id, "theta": j.theta, "time": j.time}
                for j in self.junction_sequence
            ],
        }


def contact_point(obstacle: Obstacle, combined_r: float, theta: float) -> np.ndarray:
    """Point on the inflated circle at contact angle theta."""
    return obstacle.center + combined_r * np.array(
        [math.cos(theta), math.sin(theta)]
    )


def _pos_row(t: float) -> np.ndarray:
    return np.array([t**3, t**2, t, 1.0])


def _vel_row(t: float) -> np.ndarray:
    return np.array([3.0 * t**2, 2.0 * t, 1.0, 0.0])


def _ctrl_row(t: float) -> np.ndarray:
    return np.array([6.0 * t, 2.0, 0.0, 0.0])


def _place(matrix: np.ndarray, row: int, seg: int, scalar_row: np.ndarray,
           sign: float = 1.0) -> None:
    block = sign * np.kron(scalar_row, np.eye(2))
    matrix[row : row + 2, 8 * seg : 8 * seg + 8] = (
        matrix[row : row + 2, 8 * seg : 8 * seg + 8] + block
    )


def assemble_system(
    agent: AgentSpec, junctions: tuple[Junction, ...], scenario: Scenario
):
    """Build the square block system for all segment coefficients.

    With n junctions there are n+1 segments and 8(n+1) unknowns. Rows:
    boundary position/velocity at t0 and tf, and per junction the
    position of both adjacent segments pinned to the contact point plus
    velocity and control continuity. Constraint satisfaction at the
    junction holds identically because the contact point lies on the
    inflated circle.
    """
    junctions = tuple(junctions)
    times = [j.time for j in junctions]
    if any(not agent.t0 < t < agent.tf_nominal for t in times):
        raise OrderingError(
            f"junction times {times} must lie strictly inside "
            f"({agent.t0}, {agent.tf_nominal})"
        )
    if any(t_next <= t_prev for t_prev, t_next in zip(times, times[1:])):
        raise OrderingError(f"junction times {times} must be strictly increasing")
    n = len(junctions)
    size = 8 * (n + 1)
    a = np.zeros((size, size))
    b = np.zeros(size)
    _place(a, 0, 0, _pos_row(agent.t0))
    b[0:2] = agent.start.p
    _place(a, 2, 0, _vel_row(agent.t0))
    b[2:4] = agent.start.v
    row = 4
    for k, junction in enumerate(junctions):
        obstacle = scenario.obstacle(junction.obstacle_id)
        contact = contact_point(
            obstacle, inflated_radius(obstacle, agent), junction.theta
        )
        t = junction.time
        _place(a, row, k, _pos_row(t))
        b[row : row + 2] = contact
        _place(a, row + 2, k + 1, _pos_row(t))
        b[row + 2 : row + 4] = contact
        _place(a, row + 4, k, _vel_row(t))
        _place(a, row + 4, k + 1, _vel_row(t), sign=-1.0)
        _place(a, row + 6, k, _ctrl_row(t))
        _place(a, row + 6, k + 1, _ctrl_row(t), sign=-1.0)
        row += 8
    _place(a, row, n, _pos_row(agent.tf_nominal))
    b[row : row + 2] = agent.goal.p
    _place(a, row + 2, n, _vel_row(agent.tf_nominal))
    b[row + 2 : row + 4] = agent.goal.v
    return a, b


def solve_coefficients(
    agent: AgentSpec, junctions: tuple[Junction, ...], scenario: Scenario
) -> PiecewiseTrajectory:
    """Solve the block system and split the result at junction times."""
    a, b = assemble_system(agent, junctions, scenario)
    condition = np.linalg.cond(a)
    if not condition < CONDITION_LIMIT:
        raise ConditioningError(
            f"block system condition {condition:.3e} exceeds {CONDITION_LIMIT:.0e}; "
            "junction times too close together or to the boundary"
        )
    coeffs = solve_refined(a, b)
    knots = [agent.t0] + [j.time for j in junctions] + [agent.tf_nominal]
    segments = []
    for k in range(len(junctions) + 1):
        c = coeffs[8 * k : 8 * (k + 1)]
        segments.append(
            CubicSegment(
                c1=c[0:2], c2=c[2:4], c3=c[4:6], c4=c[6:8],
                t_start=knots[k], t_end=knots[k + 1],
            )
        )
    return PiecewiseTrajectory(segments=tuple(segments))


def _junction_residuals(
    traj: PiecewiseTrajectory, junctions: tuple[Junction, ...]
) -> np.ndarray:
    res = np.empty(2 * len(junctions))
    for k, junction in enumerate(junctions):
        seg_before = traj.segments[k]
        seg_after = traj.segments[k + 1]
        _, v, _ = eval_trajectory(traj, junction.time)
        normal = np.array([math.cos(junction.theta), math.sin(junction.theta)])
        res[2 * k] = v @ normal
        res[2 * k + 1] = 6.0 * (seg_before.c1 - seg_after.c1) @ v
    return res


def residuals(
    agent: AgentSpec, junctions: tuple[Junction, ...], scenario: Scenario
) -> np.ndarray:
    """Optimality residuals (tangency, jump) for each junction."""
    junctions = tuple(junctions)
    traj = solve_coefficients(agent, junctions, scenario)
    return _junction_residuals(traj, junctions)


def _clamp_times(
    times: np.ndarray, t0: float, tf: float, margin: float
) -> np.ndarray:
    """Clamp junction times into [t0+margin, tf-margin] with pairwise
    margins between neighbors, preserving order."""
    clamped = np.clip(times, t0 + margin, tf - margin)
    for k in range(1, len(clamped)):
        clamped[k] = max(clamped[k], clamped[k - 1] + margin)
    if len(clamped):
        clamped[-1] = min(clamped[-1], tf - margin)
    for k in range(len(clamped) - 2, -1, -1):
        clamped[k] = min(clamped[k], clamped[k + 1] - margin)
    if len(clamped) and (
        clamped[0] < t0 + margin - 1e-12
        or any(b - a < margin - 1e-12 for a, b in zip(clamped, clamped[1:]))
    ):
        raise OrderingError("horizon too short for the requested junction count")
    return clamped


def _params_to_junctions(
    params: np.ndarray, junctions: tuple[Junction, ...]
) -> tuple[Junction, ...]:
    return tuple(
        replace(j, theta=_wrap_angle(float(params[2 * k])), time=float(params[2 * k + 1]))
        for k, j in enumerate(junctions)
    )


def solve_junctions(
    agent: AgentSpec,
    initial_junctions: tuple[Junction, ...],
    scenario: Scenario,
    config: JunctionSolveConfig = JunctionSolveConfig(),
) -> tuple[PiecewiseTrajectory, SolveReport]:
    """Damped least-squares iteration over junction parameters.

    Gauss-Newton steps on the stacked (tangency, jump) residuals with
    adaptive Levenberg damping; the Jacobian comes from forward finite
    differences. Proposed junction times are clamped to keep the
    configured margin from the horizon and from each other. Convergence
    is a residual 2-norm at or below the configured tolerance.
    """
    junctions = tuple(initial_junctions)
    t0, tf = agent.t0, agent.tf_nominal
    margin = config.time_margin
    if junctions:
        times = _clamp_times(
            np.array([j.time for j in junctions], dtype=float), t0, tf, margin
        )
        junctions = tuple(
            replace(j, time=float(t)) for j, t in zip(junctions, times)
        )

    def evaluate(curr: tuple[Junction, ...]):
        traj = solve_coefficients(agent, curr, scenario)
        return traj, _junction_residuals(traj, curr)

    try:
        traj, res = evaluate(junctions)
    except ConditioningError:
        # One retry with times nudged off the degenerate geometry.
        times = _clamp_times(
            np.array([j.time for j in junctions]) + 10.0 * margin, t0, tf, margin
        )
        junctions = tuple(replace(j, time=float(t)) for j, t in zip(junctions, times))
        traj, res = evaluate(junctions)

    n = len(junctions)
    if n == 0:
        report = SolveReport(
            converged=True, residual_norm=0.0, iterations=0,
            junction_sequence=(), energy=trajectory_energy(traj),
        )
        return traj, report

    params = np.empty(2 * n)
    for k, j in enumerate(junctions):
        params[2 * k] = j.theta
        params[2 * k + 1] = j.time
    norm = float(np.linalg.norm(res))
    damping = 1e-3
    iterations = 0
    jac = None
    while iterations < config.max_iterations and norm > config.residual_tol:
        iterations += 1
        if jac is None:
            jac = np.empty((2 * n, 2 * n))
            for i in range(2 * n):
                probe = params.copy()
                probe[i] += config.fd_step
                if i % 2 == 1:
                    probe[1::2] = _clamp_times(probe[1::2], t0, tf, margin)
                    if probe[i] == params[i]:
                        # Pinned against a neighbor margin; probe backward.
                        probe = params.copy()
                        probe[i] -= config.fd_step
                        probe[1::2] = _clamp_times(probe[1::2], t0, tf, margin)
                delta = probe[i] - params[i]
                if delta == 0.0:
                    jac[:, i] = 0.0
                    continue
                try:
                    _, res_probe = evaluate(_params_to_junctions(probe, junctions))
                except ConditioningError:
                    jac[:, i] = 0.0
                    continue
                jac[:, i] = (res_probe - res) / delta
        gram = jac.T @ jac
        rhs = -jac.T @ res
        # Marquardt scaling keeps the damping visible whatever the
        # magnitude of the residual surface.
        scale = np.diag(np.maximum(np.diag(gram), 1e-30))
        try:
            step = np.linalg.solve(gram + damping * scale, rhs)
        except np.linalg.LinAlgError:
            damping = min(damping * 10.0, 1e12)
            continue
        candidate = params + step
        candidate[1::2] = _clamp_times(candidate[1::2], t0, tf, margin)
        try:
            cand_junctions = _params_to_junctions(candidate, junctions)
            cand_traj, cand_res = evaluate(cand_junctions)
            cand_norm = float(np.linalg.norm(cand_res))
        except (ConditioningError, OrderingError):
            cand_norm = math.inf
        if cand_norm < norm:
            params = candidate
            params[0::2] = [_wrap_angle(v) for v in params[0::2]]
            junctions = _params_to_junctions(params, junctions)
            traj, res, norm = cand_traj, cand_res, cand_norm
            damping = max(damping * 0.3, 1e-12)
            jac = None
        else:
            damping = min(damping * 10.0, 1e12)

    degenerate = tuple(
        k for k, j in enumerate(junctions)
        if float(np.linalg.norm(eval_trajectory(traj, j.time)[1])) < DEGENERATE_SPEED
    )
    report = SolveReport(
        converged=norm <= config.residual_tol,
        residual_norm=norm,
        iterations=iterations,
        junction_sequence=junctions,
        energy=trajectory_energy(traj),
        degenerate_junctions=degenerate,
    )
    return traj, report


def _bisect_crossing(g, t_inside: float, t_outside: float, tol: float = 1e-9) -> float:
    """Bisect g(t) = 0 between a violated and a safe time, to tol seconds."""
    lo, hi = t_inside, t_outside
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def initial_guess(
    traj: PiecewiseTrajectory,
    violation: ViolationRecord,
    scenario: Scenario,
    agent: AgentSpec,
) -> Junction:
    """Seed junction parameters from a sampled violation.

    The time guess is the midpoint of the contiguous violated window
    around the violation, with window endpoints located by bisection.
    The angle guess points from the obstacle center toward the path's
    cross-track offset; when the path aims straight through the center
    the left side (path direction rotated +pi/2) breaks the tie.
    """
    if not isinstance(violation.constraint, int):
        raise ValueError("initial_guess requires an obstacle violation")
    obstacle = scenario.obstacle(violation.constraint)
    combined = inflated_radius(obstacle, agent)

    def g(t: float) -> float:
        p, _, _ = eval_trajectory(traj, t)
        d = p - obstacle.center
        return combined**2 - float(d @ d)

    # Walk outward to bracket the window; start and goal are feasible so
    # a safe sample exists on each side.
    step = (traj.t_end - traj.t_start) / 2000.0
    lo = violation.time
    while g(lo) > 0 and lo - step > traj.t_start:
        lo -= step
    lo = max(lo, traj.t_start)
    hi = violation.time
    while g(hi) > 0 and hi + step < traj.t_end:
        hi += step
    hi = min(hi, traj.t_end)
    t_enter = _bisect_crossing(g, violation.time, lo) if g(lo) <= 0 else lo
    t_exit = _bisect_crossing(g, violation.time, hi) if g(hi) <= 0 else hi
    t_guess = 0.5 * (t_enter + t_exit)

    p, v, _ = eval_trajectory(traj, t_guess)
    offset = p - obstacle.center
    speed = float(np.linalg.norm(v))
    if speed > CENTER_COINCIDENCE:
        direction = v / speed
    else:
        chord = agent.goal.p - agent.start.p
        length = float(np.linalg.norm(chord))
        direction = chord / length if length > 0 else np.array([1.0, 0.0])
    cross = offset - (offset @ direction) * direction
    if float(np.linalg.norm(cross)) < CENTER_COINCIDENCE:
        # Path runs through the center: take the left side of travel.
        left = np.array([-direction[1], direction[0]])
        theta = math.atan2(left[1], left[0])
    else:
        theta = math.atan2(cross[1], cross[0])
    return Junction(obstacle_id=obstacle.id, theta=theta, time=float(t_guess))


# Junctions on the same obstacle closer than this multiple of the time
# margin are treated as duplicates of an existing activation.
DUPLICATE_MARGIN_FACTOR = 10.0


def plan_agent(
    agent: AgentSpec,
    scenario: Scenario,
    config: JunctionSolveConfig = JunctionSolveConfig(),
) -> tuple[PiecewiseTrajectory, SolveReport]:
    """Plan one agent with greedy activation-sequence discovery.

    Solve with the current junction set (initially empty); while the
    result still violates some obstacle, seed a junction at the first
    violation and resolve. Stops when the trajectory is feasible,
    returning the report (converged or not), or fails once the junction
    budget is exhausted or the violated obstacle already has a junction
    at a neighboring time.
    """
    junctions: tuple[Junction, ...] = ()
    best: tuple = (None, None)
    while True:
        try:
            traj, report = solve_junctions(agent, junctions, scenario, config)
        except ConditioningError as exc:
            # the freshly inserted junction crowded an existing one past
            # what the retry could fix; surface the best iterate instead
            raise PlanningFailure(
                f"agent {agent.id}: junction system became ill-conditioned "
                f"during sequence discovery: {exc}",
                trajectory=best[0], report=best[1],
            ) from exc
        best = (traj, report)
        violation = first_violation(traj, scenario, agent.id, config.sample_count)
        if violation is None:
            return traj, report
        guess = initial_guess(traj, violation, scenario, agent)
        near_duplicate = any(
            j.obstacle_id == guess.obstacle_id
            and abs(j.time - guess.time) < DUPLICATE_MARGIN_FACTOR * config.time_margin
            for j in report.junction_sequence
        )
        if near_duplicate:
            raise PlanningFailure(
                f"agent {agent.id}: obstacle {guess.obstacle_id} still violated "
                f"next to an existing junction at t={guess.time:.4f}",
                trajectory=traj, report=report,
            )
        if len(report.junction_sequence) + 1 > config.max_junctions:
            raise PlanningFailure(
                f"agent {agent.id}: junction budget of {config.max_junctions} "
                "exhausted without a feasible trajectory",
                trajectory=traj, report=report,
            )
        junctions = tuple(
            sorted(report.junction_sequence + (guess,), key=lambda j: j.time)
        )
