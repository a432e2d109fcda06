"""Cubic motion primitives for planar double-integrator agents.

A minimum-energy trajectory between two fixed states of a double
integrator is a cubic polynomial in position. This module represents
those cubics, solves the two-point boundary value problem that fixes
their coefficients, and evaluates exact control energies.

Positions are in meters, times in seconds, and the energy is the
integral of the squared control magnitude over the segment.

Coefficients are in absolute time, matching the boundary system below,
so the tight accuracy contracts (boundary residuals below 1e-9) apply
to SI-scale worlds: coordinates up to tens of meters, times up to tens
of seconds. Far outside that envelope the cubic's monomial terms grow
large enough that evaluating their near-cancellation costs precision.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, DegenerateHorizonError, OutOfRangeError

# Horizons shorter than this make the boundary system numerically singular.
MIN_HORIZON = 1e-9

# Acceptable residual of the boundary linear solve, in SI units.
BOUNDARY_RESIDUAL_TOL = 1e-10


def _vec2(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(2)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class KinematicState:
    """Stacked position and velocity of one agent at one instant."""

    p: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _vec2(self.p, "p"))
        object.__setattr__(self, "v", _vec2(self.v, "v"))

    @staticmethod
    def at_rest(px: float, py: float) -> "KinematicState":
        return KinematicState(p=(px, py), v=(0.0, 0.0))


@dataclass(frozen=True, eq=False)
class CubicSegment:
    """One unconstrained motion primitive.

    Position is c1*t**3 + c2*t**2 + c3*t + c4 with absolute time t, so
    velocity and control follow by differentiation. Units: c1 in m/s^3,
    c2 in m/s^2, c3 in m/s, c4 in m.
    """

    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    t_start: float
    t_end: float

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "c4"):
            object.__setattr__(self, name, _vec2(getattr(self, name), name))
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)):
            raise ValueError("segment times must be finite")
        if not self.t_start < self.t_end:
            raise ValueError(
                f"t_start must precede t_end, got [{self.t_start}, {self.t_end}]"
            )


@dataclass(frozen=True, eq=False)
class PiecewiseTrajectory:
    """Ordered cubic segments joined end to end."""

    segments: tuple[CubicSegment, ...]

    def __post_init__(self):
        segments = tuple(self.segments)
        if not segments:
            raise ValueError("trajectory needs at least one segment")
        for prev, nxt in zip(segments, segments[1:]):
            if prev.t_end != nxt.t_start:
                raise ValueError(
                    f"segments not contiguous: {prev.t_end} != {nxt.t_start}"
                )
        object.__setattr__(self, "segments", segments)

    @property
    def t_start(self) -> float:
        return self.segments[0].t_start

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end


def eval_segment(seg: CubicSegment, t: float):
    """Evaluate position, velocity, and control of a segment at time t."""
    if not seg.t_start <= t <= seg.t_end:
        raise OutOfRangeError(
            f"t={t} outside segment interval [{seg.t_start}, {seg.t_end}]"
        )
    p = seg.c1 * t**3 + seg.c2 * t**2 + seg.c3 * t + seg.c4
    v = 3.0 * seg.c1 * t**2 + 2.0 * seg.c2 * t + seg.c3
    u = 6.0 * seg.c1 * t + 2.0 * seg.c2
    return p, v, u


def solve_refined(a: np.ndarray, b: np.ndarray, sweeps: int = 2) -> np.ndarray:
    """Direct solve with mixed-precision iterative refinement.

    Residuals are accumulated in extended precision so refinement can
    push the true residual of these small stiff systems down to the
    rounding level of the right-hand side, which the boundary and
    continuity contracts need.
    """
    x = np.linalg.solve(a, b)
    a_hi = a.astype(np.longdouble)
    b_hi = b.astype(np.longdouble)
    for _ in range(sweeps):
        r = np.asarray(b_hi - a_hi @ x.astype(np.longdouble), dtype=float)
        x = x + np.linalg.solve(a, r)
    return x


def residual_norm(a: np.ndarray, x: np.ndarray, b: np.ndarray) -> float:
    """System residual measured in extended precision."""
    r = a.astype(np.longdouble) @ x.astype(np.longdouble) - b.astype(np.longdouble)
    return float(np.linalg.norm(np.asarray(r, dtype=float)))


def boundary_matrix(t0: float, tf: float) -> np.ndarray:
    """The 8x8 system mapping coefficients to boundary states.

    Rows fix position and velocity at t0, then at tf; the 4x4 scalar
    block is expanded with a 2x2 identity so both axes share one solve.
    """
    block = np.array(
        [
            [t0**3, t0**2, t0, 1.0],
            [3.0 * t0**2, 2.0 * t0, 1.0, 0.0],
            [tf**3, tf**2, tf, 1.0],
            [3.0 * tf**2, 2.0 * tf, 1.0, 0.0],
        ]
    )
    return np.kron(block, np.eye(2))


def solve_boundary(
    x0: KinematicState, xf: KinematicState, t0: float, tf: float
) -> CubicSegment:
    """Solve the two-point boundary value problem on [t0, tf].

    Returns the unique cubic whose position and velocity match x0 at t0
    and xf at tf. Uses a direct factorization with partial pivoting.
    """
    if tf <= t0:
        raise DegenerateHorizonError(f"horizon [{t0}, {tf}] is empty")
    if tf - t0 < MIN_HORIZON:
        raise ConditioningError(f"horizon of {tf - t0} s is below {MIN_HORIZON} s")
    a = boundary_matrix(t0, tf)
    b = np.concatenate([x0.p, x0.v, xf.p, xf.v])
    coeffs = solve_refined(a, b)
    residual = residual_norm(a, coeffs, b)
    if residual > BOUNDARY_RESIDUAL_TOL:
        raise ConditioningError(f"boundary solve residual {residual:.3e}")
    return CubicSegment(
        c1=coeffs[0:2], c2=coeffs[2:4], c3=coeffs[4:6], c4=coeffs[6:8],
        t_start=t0, t_end=tf,
    )


def segment_energy(seg: CubicSegment) -> float:
    """Exact integral of the squared control over the segment.

    The control is linear in t, so the integrand is quadratic and the
    antiderivative is closed form.
    """
    a, b = seg.t_start, seg.t_end
    return float(
        12.0 * (seg.c1 @ seg.c1) * (b**3 - a**3)
        + 12.0 * (seg.c1 @ seg.c2) * (b**2 - a**2)
        + 4.0 * (seg.c2 @ seg.c2) * (b - a)
    )


def trajectory_energy(traj: PiecewiseTrajectory) -> float:
    """Total control energy, summed over segments."""
    return float(sum(segment_energy(seg) for seg in traj.segments))


def _segment_index(traj: PiecewiseTrajectory, t: float) -> int:
    starts = [seg.t_start for seg in traj.segments]
    # bisect_right sends an exact junction time to the later segment
    return min(bisect_right(starts, t) - 1, len(starts) - 1)


def eval_trajectory(traj: PiecewiseTrajectory, t: float):
    """Evaluate the trajectory at time t, delegating to its segment."""
    if not traj.t_start <= t <= traj.t_end:
        raise OutOfRangeError(
            f"t={t} outside trajectory horizon [{traj.t_start}, {traj.t_end}]"
        )
    return eval_segment(traj.segments[_segment_index(traj, t)], t)


def sample_trajectory(traj: PiecewiseTrajectory, times: np.ndarray):
    """Vectorized evaluation at an array of times inside the horizon.

    Returns (positions, velocities, controls), each of shape (len(times), 2).
    """
    times = np.asarray(times, dtype=float)
    if times.size and (times.min() < traj.t_start or times.max() > traj.t_end):
        raise OutOfRangeError("sample times outside trajectory horizon")
    starts = np.array([seg.t_start for seg in traj.segments])
    idx = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(starts) - 1)
    c1 = np.array([seg.c1 for seg in traj.segments])[idx]
    c2 = np.array([seg.c2 for seg in traj.segments])[idx]
    c3 = np.array([seg.c3 for seg in traj.segments])[idx]
    c4 = np.array([seg.c4 for seg in traj.segments])[idx]
    t = times[:, None]
    p = c1 * t**3 + c2 * t**2 + c3 * t + c4
    v = 3.0 * c1 * t**2 + 2.0 * c2 * t + c3
    u = 6.0 * c1 * t + 2.0 * c2
    return p, v, u


def sample_positions_held(traj: PiecewiseTrajectory, times: np.ndarray) -> np.ndarray:
    """Positions at arbitrary times, holding the endpoint states outside
    the horizon. Used for separation checks between agents whose
    horizons differ."""
    clamped = np.clip(np.asarray(times, dtype=float), traj.t_start, traj.t_end)
    p, _, _ = sample_trajectory(traj, clamped)
    return p
