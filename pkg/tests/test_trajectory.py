import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from junctionplan import (
    ConditioningError,
    CubicSegment,
    DegenerateHorizonError,
    KinematicState,
    OutOfRangeError,
    PiecewiseTrajectory,
    eval_segment,
    eval_trajectory,
    sample_trajectory,
    segment_energy,
    solve_boundary,
    trajectory_energy,
)

# The accuracy contracts target SI-scale worlds (tens of meters and
# seconds); the strategies cover that envelope with margin.
finite = st.floats(-20.0, 20.0, allow_nan=False)
small = st.floats(-5.0, 5.0, allow_nan=False)


def rest(x, y):
    return KinematicState.at_rest(x, y)


def make_segment(c1, c2, c3, c4, t0=0.0, tf=1.0):
    return CubicSegment(c1=c1, c2=c2, c3=c3, c4=c4, t_start=t0, t_end=tf)


def simpson_energy(seg, intervals=1000):
    """Independent quadrature of the squared control magnitude.

    The integrand is quadratic in t, so composite Simpson is exact up
    to rounding.
    """
    if intervals % 2:
        intervals += 1
    t = np.linspace(seg.t_start, seg.t_end, intervals + 1)
    u = 6.0 * np.outer(t, seg.c1) + 2.0 * seg.c2
    f = np.sum(u * u, axis=1)
    h = (seg.t_end - seg.t_start) / intervals
    return h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-1:2].sum())


class TestEvalSegment:
    def test_constant_rest_case(self):
        seg = make_segment((0, 0), (0, 0), (0, 0), (1, 2))
        p, v, u = eval_segment(seg, 0.7)
        assert np.array_equal(p, [1.0, 2.0])
        assert np.array_equal(v, [0.0, 0.0])
        assert np.array_equal(u, [0.0, 0.0])

    def test_rest_to_rest_midpoint(self):
        seg = make_segment((-2, 0), (3, 0), (0, 0), (0, 0))
        p, _, _ = eval_segment(seg, 0.5)
        assert p == pytest.approx([0.5, 0.0], abs=1e-15)

    def test_rest_to_rest_endpoint(self):
        # direct substitution: p(1) = c1 + c2, v(1) = 3c1 + 2c2, u(1) = 6c1 + 2c2
        seg = make_segment((-2, 0), (3, 0), (0, 0), (0, 0))
        p, v, u = eval_segment(seg, 1.0)
        assert p == pytest.approx([1.0, 0.0], abs=1e-15)
        assert v == pytest.approx([0.0, 0.0], abs=1e-15)
        assert u == pytest.approx([-6.0, 0.0], abs=1e-15)

    def test_out_of_range(self):
        seg = make_segment((0, 0), (0, 0), (0, 0), (0, 0))
        with pytest.raises(OutOfRangeError):
            eval_segment(seg, 1.5)
        with pytest.raises(OutOfRangeError):
            eval_segment(seg, -0.1)


class TestSegmentInvariants:
    def test_reversed_interval_rejected(self):
        with pytest.raises(ValueError):
            make_segment((0, 0), (0, 0), (0, 0), (0, 0), t0=1.0, tf=0.0)

    def test_nonfinite_coefficient_rejected(self):
        with pytest.raises(ValueError):
            make_segment((np.nan, 0), (0, 0), (0, 0), (0, 0))

    def test_state_requires_finite_components(self):
        with pytest.raises(ValueError):
            KinematicState(p=(np.inf, 0.0), v=(0.0, 0.0))


class TestSolveBoundary:
    def test_stationary(self):
        seg = solve_boundary(rest(3, 4), rest(3, 4), 0.0, 7.3)
        assert seg.c1 == pytest.approx([0, 0], abs=1e-12)
        assert seg.c2 == pytest.approx([0, 0], abs=1e-12)
        assert seg.c3 == pytest.approx([0, 0], abs=1e-12)
        assert seg.c4 == pytest.approx([3, 4], abs=1e-12)

    def test_unit_displacement_coefficients(self):
        seg = solve_boundary(rest(0, 0), rest(1, 0), 0.0, 1.0)
        assert seg.c1 == pytest.approx([-2.0, 0.0], rel=1e-12, abs=1e-12)
        assert seg.c2 == pytest.approx([3.0, 0.0], rel=1e-12, abs=1e-12)
        assert seg.c3 == pytest.approx([0.0, 0.0], abs=1e-12)
        assert seg.c4 == pytest.approx([0.0, 0.0], abs=1e-12)

    @pytest.mark.parametrize("d,T", [((1.0, 0.0), 1.0), ((3.0, -4.0), 2.5),
                                     ((-2.0, 7.0), 10.0)])
    def test_rest_to_rest_midpoint_symmetry(self, d, T):
        start = rest(0.5, -1.5)
        goal = rest(0.5 + d[0], -1.5 + d[1])
        seg = solve_boundary(start, goal, 2.0, 2.0 + T)
        p, _, _ = eval_segment(seg, 2.0 + T / 2.0)
        assert p == pytest.approx(start.p + np.asarray(d) / 2.0, abs=1e-9)

    def test_degenerate_horizon(self):
        with pytest.raises(DegenerateHorizonError):
            solve_boundary(rest(0, 0), rest(1, 0), 1.0, 1.0)
        with pytest.raises(DegenerateHorizonError):
            solve_boundary(rest(0, 0), rest(1, 0), 1.0, 0.5)

    def test_near_singular_horizon(self):
        with pytest.raises(ConditioningError):
            solve_boundary(rest(0, 0), rest(1, 0), 0.0, 1e-10)

    @given(px=finite, py=finite, vx=small, vy=small,
           sx=st.floats(-3.0, 3.0), sy=st.floats(-3.0, 3.0),
           wx=small, wy=small, t0=st.floats(-10, 10),
           horizon=st.floats(0.5, 20.0))
    @settings(max_examples=200, deadline=None)
    def test_boundary_conditions_met(self, px, py, vx, vy, sx, sy, wx, wy,
                                     t0, horizon):
        # goal drawn from a bounded average speed, the regime the planner
        # operates in; teleport-style transfers are out of envelope
        x0 = KinematicState(p=(px, py), v=(vx, vy))
        xf = KinematicState(p=(px + sx * horizon, py + sy * horizon), v=(wx, wy))
        seg = solve_boundary(x0, xf, t0, t0 + horizon)
        p0, v0, _ = eval_segment(seg, t0)
        pf, vf, _ = eval_segment(seg, t0 + horizon)
        assert np.abs(p0 - x0.p).max() < 1e-9
        assert np.abs(v0 - x0.v).max() < 1e-9
        assert np.abs(pf - xf.p).max() < 1e-9
        assert np.abs(vf - xf.v).max() < 1e-9

    @given(shift=st.floats(-10, 10), horizon=st.floats(0.5, 10.0))
    @settings(max_examples=50, deadline=None)
    def test_time_translation_invariance(self, shift, horizon):
        x0 = KinematicState(p=(1.0, -2.0), v=(0.5, 0.25))
        xf = KinematicState(p=(-3.0, 4.0), v=(0.0, -1.0))
        base = solve_boundary(x0, xf, 0.0, horizon)
        moved = solve_boundary(x0, xf, shift, shift + horizon)
        for frac in (0.0, 0.31, 0.5, 0.77, 1.0):
            t = frac * horizon
            p_base, v_base, u_base = eval_segment(base, t)
            p_moved, v_moved, u_moved = eval_segment(moved, t + shift)
            assert np.abs(p_base - p_moved).max() < 1e-9
            assert np.abs(v_base - v_moved).max() < 1e-9


class TestSegmentEnergy:
    def test_zero_control(self):
        seg = make_segment((0, 0), (0, 0), (1.5, 0), (0, 2))
        assert segment_energy(seg) == 0.0

    def test_unit_rest_to_rest(self):
        # analytic integral of (6 - 12 t)^2 over [0, 1] is 12
        seg = make_segment((-2, 0), (3, 0), (0, 0), (0, 0))
        assert segment_energy(seg) == pytest.approx(12.0, rel=1e-12)

    @pytest.mark.parametrize("d", [(1.0, 0.0), (0.6, -0.8), (-2.0, 3.0)])
    def test_displacement_scaling(self, d):
        seg = solve_boundary(rest(0, 0), KinematicState(p=d, v=(0, 0)), 0.0, 1.0)
        expected = 12.0 * (d[0] ** 2 + d[1] ** 2)
        assert segment_energy(seg) == pytest.approx(expected, rel=1e-9)

    def test_nonnegative_and_zero_iff_linear(self):
        seg = make_segment((0.1, 0), (0, 0), (0, 0), (0, 0))
        assert segment_energy(seg) > 0
        seg = make_segment((0, 0), (0, 0.2), (0, 0), (0, 0))
        assert segment_energy(seg) > 0

    @given(
        c1x=small, c1y=small, c2x=small, c2y=small,
        c3x=small, c3y=small, c4x=small, c4y=small,
        t0=st.floats(-5, 5), dt=st.floats(0.01, 10.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_quadrature(self, c1x, c1y, c2x, c2y, c3x, c3y, c4x, c4y,
                                t0, dt):
        seg = make_segment((c1x, c1y), (c2x, c2y), (c3x, c3y), (c4x, c4y),
                           t0=t0, tf=t0 + dt)
        closed = segment_energy(seg)
        quad = simpson_energy(seg, 1000)
        assert closed >= 0.0
        assert closed == pytest.approx(quad, rel=1e-8, abs=1e-10)


class TestTrajectoryEnergy:
    def test_singleton(self):
        seg = solve_boundary(rest(0, 0), rest(1, 0), 0.0, 1.0)
        traj = PiecewiseTrajectory(segments=(seg,))
        assert trajectory_energy(traj) == segment_energy(seg)

    def test_split_additivity(self):
        seg = solve_boundary(rest(0, 0), rest(1, 0), 0.0, 1.0)
        first = CubicSegment(c1=seg.c1, c2=seg.c2, c3=seg.c3, c4=seg.c4,
                             t_start=0.0, t_end=0.5)
        second = CubicSegment(c1=seg.c1, c2=seg.c2, c3=seg.c3, c4=seg.c4,
                              t_start=0.5, t_end=1.0)
        split = PiecewiseTrajectory(segments=(first, second))
        whole = PiecewiseTrajectory(segments=(seg,))
        assert trajectory_energy(split) == pytest.approx(
            trajectory_energy(whole), rel=1e-12
        )


class TestPiecewiseTrajectory:
    def test_needs_segments(self):
        with pytest.raises(ValueError):
            PiecewiseTrajectory(segments=())

    def test_rejects_gap(self):
        a = make_segment((0, 0), (0, 0), (0, 0), (0, 0), t0=0.0, tf=1.0)
        b = make_segment((0, 0), (0, 0), (0, 0), (0, 0), t0=1.5, tf=2.0)
        with pytest.raises(ValueError):
            PiecewiseTrajectory(segments=(a, b))

    def test_eval_at_global_start_and_end(self):
        seg = solve_boundary(rest(0, 0), rest(1, 0), 0.0, 1.0)
        traj = PiecewiseTrajectory(segments=(seg,))
        p, v, _ = eval_trajectory(traj, 0.0)
        assert p == pytest.approx([0, 0], abs=1e-9)
        p, v, _ = eval_trajectory(traj, 1.0)
        assert p == pytest.approx([1, 0], abs=1e-9)
        assert v == pytest.approx([0, 0], abs=1e-9)

    def test_junction_instant_resolves_to_later_segment(self):
        seg = solve_boundary(rest(0, 0), rest(1, 0), 0.0, 1.0)
        first = CubicSegment(c1=seg.c1, c2=seg.c2, c3=seg.c3, c4=seg.c4,
                             t_start=0.0, t_end=0.5)
        second = CubicSegment(c1=seg.c1, c2=seg.c2, c3=seg.c3, c4=seg.c4,
                              t_start=0.5, t_end=1.0)
        traj = PiecewiseTrajectory(segments=(first, second))
        pa, va, _ = eval_segment(first, 0.5)
        pb, vb, _ = eval_segment(second, 0.5)
        p, v, _ = eval_trajectory(traj, 0.5)
        assert np.abs(pa - pb).max() < 1e-9
        assert np.abs(va - vb).max() < 1e-9
        assert np.array_equal(p, pb)

    def test_later_segment_rule_observable_on_control_jump(self):
        # only time contiguity is validated, so a control-discontinuous
        # pair pins down which side an exact junction time resolves to
        first = make_segment((0, 0), (1, 0), (0, 0), (0, 0), t0=0.0, tf=0.5)
        second = make_segment((0, 0), (2, 0), (0, 0), (0, 0), t0=0.5, tf=1.0)
        traj = PiecewiseTrajectory(segments=(first, second))
        _, _, u = eval_trajectory(traj, 0.5)
        assert u == pytest.approx([4.0, 0.0])

    def test_eval_outside_horizon(self):
        seg = make_segment((0, 0), (0, 0), (0, 0), (0, 0))
        traj = PiecewiseTrajectory(segments=(seg,))
        with pytest.raises(OutOfRangeError):
            eval_trajectory(traj, 2.0)

    def test_sample_matches_pointwise_eval(self):
        seg = solve_boundary(rest(0, 0), rest(2, 1), 0.0, 3.0)
        traj = PiecewiseTrajectory(segments=(seg,))
        times = np.linspace(0.0, 3.0, 17)
        p, v, u = sample_trajectory(traj, times)
        for k, t in enumerate(times):
            pe, ve, ue = eval_trajectory(traj, t)
            assert np.abs(p[k] - pe).max() < 1e-12
            assert np.abs(v[k] - ve).max() < 1e-12
            assert np.abs(u[k] - ue).max() < 1e-12
