"""Brute-force verification by discrete-time transcription.

This module is the independent check on the junction planner. It
discretizes the control trajectory into N zero-order-hold steps (the
hold dynamics of a double integrator are exact, so no integration error
enters), solves the unconstrained minimum-energy problem through the
normal equations of the control-to-terminal-state map, and handles
obstacle constraints with an increasing quadratic penalty minimized by
projected gradient descent. Nothing here shares code with the junction
solver beyond the scenario types.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ComparisonError, DegenerateHorizonError
from .trajectory import KinematicState, PiecewiseTrajectory, trajectory_energy
from .world import AgentSpec, Scenario, inflated_radius

# Residual penetration (in squared-meter constraint units) above which
# the constrained oracle flags itself as unreliable.
PENETRATION_WARNING = 1e-4

DEFAULT_PENALTY_WEIGHTS = (1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8)


@dataclass(frozen=True)
class OracleConfig:
    """Discretization and penalty-descent settings."""

    steps: int = 2000
    penalty_weights: tuple[float, ...] = DEFAULT_PENALTY_WEIGHTS
    descent_iterations: int = 500
    gradient_tol: float = 1e-8

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        weights = tuple(float(w) for w in self.penalty_weights)
        if any(w <= 0 for w in weights) or any(
            b <= a for a, b in zip(weights, weights[1:])
        ):
            raise ValueError("penalty weights must be positive and increasing")
        object.__setattr__(self, "penalty_weights", weights)
        if self.descent_iterations <= 0 or self.gradient_tol <= 0:
            raise ValueError("descent budget and tolerance must be positive")


@dataclass(frozen=True, eq=False)
class DiscretePlan:
    """A zero-order-hold control plan with its simulated states.

    positions and velocities have N+1 rows, controls N rows. cost is the
    control energy sum(|u_k|^2)*dt, excluding any penalty terms.
    """

    t_start: float
    t_end: float
    dt: float
    controls: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    cost: float
    max_penetration: float = 0.0
    penetration_warning: bool = False

    def __post_init__(self):
        for name in ("controls", "positions", "velocities"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.controls.shape[0]
        if self.positions.shape != (n + 1, 2) or self.velocities.shape != (n + 1, 2):
            raise ValueError("state arrays must have one more row than controls")

    @property
    def states(self) -> tuple[KinematicState, ...]:
        return tuple(
            KinematicState(p=self.positions[k], v=self.velocities[k])
            for k in range(self.positions.shape[0])
        )


def _simulate(p0, v0, controls: np.ndarray, dt: float):
    """Exact hold dynamics: p' = p + v dt + u dt^2/2, v' = v + u dt."""
    n = controls.shape[0]
    velocities = np.empty((n + 1, 2))
    velocities[0] = v0
    velocities[1:] = v0 + dt * np.cumsum(controls, axis=0)
    positions = np.empty((n + 1, 2))
    positions[0] = p0
    positions[1:] = (
        p0
        + dt * np.cumsum(velocities[:-1], axis=0)
        + 0.5 * dt**2 * np.cumsum(controls, axis=0)
    )
    return positions, velocities


def _terminal_map(n: int, dt: float) -> np.ndarray:
    """Rows map a control sequence to terminal (position, velocity) per axis."""
    j = np.arange(n)
    return np.vstack([dt**2 * (n - j - 0.5), np.full(n, dt)])


def _control_cost(controls: np.ndarray, dt: float) -> float:
    return float(np.sum(controls**2) * dt)


def discrete_min_energy(
    x0: KinematicState, xf: KinematicState, t0: float, tf: float, n: int
) -> DiscretePlan:
    """Exact discrete minimum-energy transfer between two states.

    Minimizes sum(|u_k|^2)*dt subject to the terminal state equality,
    via the minimum-norm solution of the linear control-to-terminal map.
    """
    if tf <= t0:
        raise DegenerateHorizonError(f"horizon [{t0}, {tf}] is empty")
    if n < 2:
        raise ValueError("need at least 2 steps")
    dt = (tf - t0) / n
    gmap = _terminal_map(n, dt)
    gram = gmap @ gmap.T
    # Reachability cannot fail for this system with n >= 2.
    assert np.linalg.matrix_rank(gram) == 2, "terminal map lost rank"
    horizon = tf - t0
    controls = np.empty((n, 2))
    for axis in range(2):
        free_p = x0.p[axis] + x0.v[axis] * horizon
        rhs = np.array([xf.p[axis] - free_p, xf.v[axis] - x0.v[axis]])
        controls[:, axis] = gmap.T @ np.linalg.solve(gram, rhs)
    positions, velocities = _simulate(x0.p, x0.v, controls, dt)
    terminal_err = max(
        float(np.linalg.norm(positions[-1] - xf.p)),
        float(np.linalg.norm(velocities[-1] - xf.v)),
    )
    assert terminal_err <= 1e-9, f"terminal state error {terminal_err:.3e}"
    return DiscretePlan(
        t_start=t0, t_end=tf, dt=dt, controls=controls,
        positions=positions, velocities=velocities,
        cost=_control_cost(controls, dt),
    )


def _penalty_terms(positions: np.ndarray, centers: np.ndarray, radii: np.ndarray):
    """Constraint values g and their positive parts at every state."""
    d = positions[:, None, :] - centers[None, :, :]
    g = radii[None, :] ** 2 - np.sum(d * d, axis=2)
    return g, np.maximum(g, 0.0)


def _objective(controls, p0, v0, dt, centers, radii, weight):
    positions, _ = _simulate(p0, v0, controls, dt)
    _, gplus = _penalty_terms(positions, centers, radii)
    return _control_cost(controls, dt) + weight * float(np.sum(gplus**2)), positions


def _gradient(controls, positions, dt, centers, radii, weight):
    """Gradient of cost plus penalty with respect to every control.

    d p_k / d u_j = dt^2 (k - j - 1/2) for j < k; the double sum
    collapses into two suffix sums over the per-state penalty forces.
    """
    n = controls.shape[0]
    _, gplus = _penalty_terms(positions, centers, radii)
    d = positions[:, None, :] - centers[None, :, :]
    forces = -4.0 * weight * np.sum(gplus[:, :, None] * d, axis=1)
    k = np.arange(n + 1)[:, None]
    suffix_f = np.cumsum((forces)[::-1], axis=0)[::-1]
    suffix_kf = np.cumsum((k * forces)[::-1], axis=0)[::-1]
    grad = 2.0 * dt * controls.copy()
    j = np.arange(n)[:, None]
    # states k = j+1 .. n feel control j
    grad += dt**2 * (suffix_kf[1:] - (j + 0.5) * suffix_f[1:])
    return grad


def _project_out_terminal(grad: np.ndarray, gmap: np.ndarray,
                          gram_inv: np.ndarray) -> np.ndarray:
    """Remove the component that would change the terminal state."""
    out = grad.copy()
    for axis in range(2):
        coeff = gram_inv @ (gmap @ grad[:, axis])
        out[:, axis] -= gmap.T @ coeff
    return out


def _min_norm_waypoint_bump(
    n: int, dt: float, k_star: int, delta_p: np.ndarray, gmap: np.ndarray
) -> np.ndarray:
    """Minimum-norm control change moving state k_star by delta_p while
    leaving the terminal state untouched."""
    j = np.arange(n)
    pos_row = np.where(j < k_star, dt**2 * (k_star - j - 0.5), 0.0)
    m = np.vstack([pos_row, gmap])
    gram = m @ m.T
    bump = np.empty((n, 2))
    for axis in range(2):
        rhs = np.array([delta_p[axis], 0.0, 0.0])
        bump[:, axis] = m.T @ np.linalg.solve(gram, rhs)
    return bump


def _steer_initial_plan(controls, p0, v0, dt, centers, radii, chord):
    """Deterministically push the straight plan out of violated obstacles.

    Plain gradient descent cannot break an exact symmetry (a path aimed
    through an obstacle center has identically zero cross-track
    gradient), so the start plan is pre-shaped: the deepest-violation
    state of each offending obstacle is moved to just outside the
    inflated circle, on the cross-track side of the path, with ties
    broken to the left of travel. The move is the minimum-norm control
    change that keeps the terminal state exact.
    """
    n = controls.shape[0]
    gmap = _terminal_map(n, dt)
    for idx in range(centers.shape[0]):
        positions, velocities = _simulate(p0, v0, controls, dt)
        g, _ = _penalty_terms(positions, centers[idx : idx + 1], radii[idx : idx + 1])
        k_star = int(np.argmax(g[:, 0]))
        if g[k_star, 0] <= 0:
            continue
        offset = positions[k_star] - centers[idx]
        speed = float(np.linalg.norm(velocities[k_star]))
        direction = velocities[k_star] / speed if speed > 1e-9 else chord
        cross = offset - (offset @ direction) * direction
        cross_norm = float(np.linalg.norm(cross))
        if cross_norm < 1e-9:
            push = np.array([-direction[1], direction[0]])
        else:
            push = cross / cross_norm
        target = centers[idx] + 1.05 * radii[idx] * push
        k_star = int(np.clip(k_star, 1, n - 1))
        controls = controls + _min_norm_waypoint_bump(
            n, dt, k_star, target - positions[k_star], gmap
        )
    return controls


def discrete_min_energy_constrained(
    agent: AgentSpec,
    scenario: Scenario,
    config: OracleConfig = OracleConfig(),
    objective_trace: list | None = None,
) -> DiscretePlan:
    """Penalty-method solve of the obstacle-constrained discrete problem.

    Starts from the unconstrained plan (pre-shaped around any violated
    obstacle), then for each weight in the increasing penalty schedule
    runs projected gradient descent with a backtracking line search.
    Terminal equality is preserved exactly by projecting every step onto
    the null space of the control-to-terminal-state map.

    When objective_trace is a list, every accepted iterate appends a
    (weight, objective) pair so descent monotonicity can be audited.
    """
    base = discrete_min_energy(
        agent.start, agent.goal, agent.t0, agent.tf_nominal, config.steps
    )
    if not scenario.obstacles:
        return base
    n = config.steps
    dt = base.dt
    p0, v0 = agent.start.p, agent.start.v
    centers = np.array([o.center for o in scenario.obstacles])
    radii = np.array([inflated_radius(o, agent) for o in scenario.obstacles])
    chord = agent.goal.p - agent.start.p
    chord_norm = float(np.linalg.norm(chord))
    chord = chord / chord_norm if chord_norm > 0 else np.array([1.0, 0.0])

    controls = _steer_initial_plan(base.controls, p0, v0, dt, centers, radii, chord)
    gmap = _terminal_map(n, dt)
    gram_inv = np.linalg.inv(gmap @ gmap.T)
    alpha = 1.0
    for weight in config.penalty_weights:
        value, positions = _objective(controls, p0, v0, dt, centers, radii, weight)
        if objective_trace is not None:
            objective_trace.append((weight, value))
        for _ in range(config.descent_iterations):
            grad = _gradient(controls, positions, dt, centers, radii, weight)
            grad = _project_out_terminal(grad, gmap, gram_inv)
            gnorm2 = float(np.sum(grad**2))
            if np.sqrt(gnorm2) <= config.gradient_tol:
                break
            alpha = min(alpha * 2.0, 1e3)
            while True:
                trial = controls - alpha * grad
                trial_value, trial_positions = _objective(
                    trial, p0, v0, dt, centers, radii, weight
                )
                if trial_value <= value - 1e-4 * alpha * gnorm2:
                    break
                alpha *= 0.5
                if alpha < 1e-18:
                    break
            if alpha < 1e-18:
                break
            controls, value, positions = trial, trial_value, trial_positions
            if objective_trace is not None:
                objective_trace.append((weight, value))

    positions, velocities = _simulate(p0, v0, controls, dt)
    g, gplus = _penalty_terms(positions, centers, radii)
    max_pen = float(np.max(gplus))
    return DiscretePlan(
        t_start=agent.t0, t_end=agent.tf_nominal, dt=dt, controls=controls,
        positions=positions, velocities=velocities,
        cost=_control_cost(controls, dt),
        max_penetration=max_pen,
        penetration_warning=max_pen > PENETRATION_WARNING,
    )


def compare(traj: PiecewiseTrajectory, plan: DiscretePlan) -> float:
    """Relative energy gap between a continuous trajectory and a plan.

    Positive means the trajectory spends more energy than the oracle;
    small negative values are expected because the oracle is discretized.
    """
    if abs(traj.t_start - plan.t_start) > 1e-9 or abs(traj.t_end - plan.t_end) > 1e-9:
        raise ComparisonError(
            f"horizons differ: [{traj.t_start}, {traj.t_end}] vs "
            f"[{plan.t_start}, {plan.t_end}]"
        )
    return (trajectory_energy(traj) - plan.cost) / max(plan.cost, 1e-12)
