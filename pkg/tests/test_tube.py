"""Tests for the tube synthesis laws."""

import math

import numpy as np
import pytest

from sttk.errors import BarrierBreach, RadiusCollapse, StepCollapse
from sttk.tube import (
    SetSpec,
    SynthesisMemory,
    TubeGains,
    TubeState,
    _radius_from_clearance,
    _soft_min,
    analytic_center_obstacle_free,
    center_derivative,
    convergence_time,
    evaluate,
    radius,
    repulsion_vector,
    signed_cbrt,
    soft_min_distance,
    tangential_vector,
    theta,
    tube_step,
)
from sttk.world import PiecewisePath, UncertainObstacle, World, d_hat, q_center, snapshot


def make_world(obstacle_specs, dim=2):
    obstacles = []
    for spec in obstacle_specs:
        obstacles.append(
            UncertainObstacle(
                mean_motion=PiecewisePath(spec.get("times", [0.0]), spec["path"]),
                sigma_profile=PiecewisePath.constant(spec.get("sigma", 0.3)),
                radius_profile=PiecewisePath.constant(spec.get("r_o", 0.15)),
                epsilon=spec.get("epsilon", 0.8),
                p_d=spec.get("p_d", 0.9999),
                k2=spec.get("k2", 0.4),
                k3=spec.get("k3", 0.4),
            )
        )
    return World(obstacles=tuple(obstacles), dim=dim)


EMPTY_2D = make_world([])
SETS = SetSpec(s=np.array([0.0, 0.0]), d_s=0.5, eta=np.array([3.0, 3.0]), d_t=0.5)
GAINS = TubeGains(k1=0.7, nu=20.0, r_min=0.21, r_max=0.27)


class TestTheta:
    def test_switching_boundary(self):
        assert theta(0.9999, 0.9999) == 0.0

    def test_direct_formula(self):
        assert theta(0.5, 0.9999) == pytest.approx(2.0 - 1.0 / 0.9999, abs=1e-12)

    def test_safe_region(self):
        assert theta(1.0, 0.9) == 0.0

    def test_continuous_at_threshold(self):
        p_d = 0.97
        below = theta(p_d - 1e-9, p_d)
        assert below == pytest.approx(0.0, abs=1e-6)

    def test_rejects_nonpositive_probability(self):
        with pytest.raises(ValueError):
            theta(0.0, 0.9)


def snap(mu, sigma=0.5, r_o=0.15):
    from sttk.world import ObstacleSnapshot

    return ObstacleSnapshot(
        mu=np.asarray(mu, dtype=float),
        sigma=sigma,
        r_o=r_o,
        mu_dot=np.zeros(len(mu)),
        sigma_dot=0.0,
    )


class TestRepulsion:
    def test_direct_formula(self):
        m = repulsion_vector(np.array([1.0, 0.0]), snap([0.0, 0.0]), q=0.6, epsilon=0.1)
        assert np.allclose(m, [2.0, 0.0])

    def test_zero_at_mean(self):
        m = repulsion_vector(np.array([0.5, 0.5]), snap([0.5, 0.5]), q=0.3, epsilon=0.1)
        assert np.allclose(m, [0.0, 0.0])

    def test_barrier_divergence(self):
        c = np.array([1.0, 0.0])
        norms = [
            np.linalg.norm(repulsion_vector(c, snap([0.0, 0.0]), q=0.1 + gap, epsilon=0.1))
            for gap in (1e-2, 1e-4, 1e-6)
        ]
        assert norms[0] < norms[1] < norms[2]
        assert norms[2] == pytest.approx(1e6, rel=1e-6)

    def test_breach_raises(self):
        with pytest.raises(BarrierBreach):
            repulsion_vector(np.array([1.0, 0.0]), snap([0.0, 0.0]), q=0.1, epsilon=0.1)


class TestTangential:
    def test_orthogonal_projection(self):
        v = tangential_vector(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
        assert np.allclose(v, [0.0, 1.0])

    def test_parallel_fallback_with_sign_persistence(self):
        m = np.array([0.0, 2.0])
        goal = np.array([0.0, 5.0])
        v = tangential_vector(m, goal)
        assert abs(v[0]) == pytest.approx(1.0) and v[1] == 0.0
        flipped = tangential_vector(m, goal, prev=-v)
        assert np.allclose(flipped, -v)

    def test_zero_m_returns_goal_direction(self):
        v = tangential_vector(np.zeros(2), np.array([3.0, 4.0]))
        assert np.allclose(v, [0.6, 0.8])

    @pytest.mark.parametrize("dim", [2, 3, 5])
    def test_postconditions_random(self, dim):
        rng = np.random.default_rng(dim)
        for _ in range(200):
            m = rng.standard_normal(dim)
            goal = rng.standard_normal(dim)
            v = tangential_vector(m, goal)
            assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
            assert abs(np.dot(m, v)) <= 1e-12 * max(1.0, np.linalg.norm(m))

    @pytest.mark.parametrize("dim", [2, 3, 5])
    def test_fallback_orthonormal(self, dim):
        rng = np.random.default_rng(10 + dim)
        for _ in range(50):
            m = rng.standard_normal(dim)
            v = tangential_vector(m, 2.5 * m)  # goal parallel to m
            assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
            assert abs(np.dot(m, v)) <= 1e-12 * np.linalg.norm(m)


class TestCenterDerivative:
    def test_signed_cube_root_pull(self):
        sets = SetSpec(s=np.zeros(2), d_s=1.0, eta=np.array([-8.0, 27.0]), d_t=1.0)
        gains = TubeGains(k1=1.0, nu=20.0, r_min=0.21, r_max=0.27)
        dc, diags = center_derivative(np.zeros(2), 0.0, EMPTY_2D, sets, gains)
        assert np.allclose(dc, [-2.0, 3.0])
        assert diags.q.size == 0

    def test_equilibrium_at_target(self):
        dc, _ = center_derivative(SETS.eta, 0.0, EMPTY_2D, SETS, GAINS)
        assert np.allclose(dc, [0.0, 0.0])

    def test_single_active_obstacle_term_wise(self):
        world = make_world(
            [{"path": [[1.2, 0.9]], "sigma": 0.4, "epsilon": 0.7, "p_d": 0.9999}]
        )
        c = np.array([1.0, 1.0])
        obs = world.obstacles[0]
        s = snapshot(obs, 0.0)
        q = q_center(c, s, GAINS.r_min)
        th = 1.0 / q - 1.0 / obs.p_d
        assert th > 0.0  # obstacle must actually be active in this layout
        m = (c - s.mu) / (q - obs.epsilon)
        v = tangential_vector(m, SETS.eta - c)
        expected = GAINS.k1 * signed_cbrt(SETS.eta - c) + (obs.k2 * m + obs.k3 * v) * th
        dc, diags = center_derivative(c, 0.0, world, SETS, GAINS)
        assert np.allclose(dc, expected, atol=1e-12)
        assert diags.theta[0] == pytest.approx(th)
        assert diags.m_norm[0] == pytest.approx(np.linalg.norm(m))

    def test_breach_propagates(self):
        world = make_world([{"path": [[0.0, 0.0]], "sigma": 0.2, "epsilon": 0.9}])
        with pytest.raises(BarrierBreach):
            center_derivative(np.array([0.0, 0.0]), 0.0, world, SETS, GAINS)

    def test_theta_zero_iff_q_above_threshold(self):
        world = make_world(
            [
                {"path": [[1.5, 1.5]], "sigma": 0.3, "epsilon": 0.5, "p_d": 0.995},
                {"path": [[40.0, 40.0]], "sigma": 0.3, "epsilon": 0.5, "p_d": 0.995},
            ]
        )
        _, diags = center_derivative(np.array([1.0, 1.0]), 0.0, world, SETS, GAINS)
        for q, th, obs in zip(diags.q, diags.theta, world.obstacles):
            assert (th == 0.0) == (q > obs.p_d)


class TestSoftMin:
    def test_single_term_identity(self):
        world = make_world([{"path": [[2.0, 0.5]], "sigma": 0.4, "epsilon": 0.8}])
        c = np.array([0.2, 0.1])
        d = soft_min_distance(c, 0.0, world, GAINS)
        clearance = d_hat(c, snapshot(world.obstacles[0], 0.0), 0.8)
        assert d == pytest.approx(clearance, abs=1e-12)

    def test_two_equal_terms(self):
        assert _soft_min(np.array([1.0, 1.0]), 10.0) == pytest.approx(
            1.0 - math.log(2.0) / 10.0, abs=1e-12
        )

    def test_dominated_term(self):
        got = _soft_min(np.array([1.0, 5.0]), 10.0)
        assert got == pytest.approx(1.0 - math.log(1.0 + math.exp(-40.0)) / 10.0, abs=1e-12)

    def test_underestimates_minimum(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            vals = rng.uniform(-1.0, 3.0, size=rng.integers(1, 8))
            assert _soft_min(vals, 15.0) <= np.min(vals) + 1e-15

    def test_zero_obstacles_sentinel(self):
        assert soft_min_distance(np.zeros(2), 0.0, EMPTY_2D, GAINS) == math.inf


class TestRadius:
    def test_saturates_exactly_at_cap_without_obstacles(self):
        assert radius(np.zeros(2), 0.0, EMPTY_2D, GAINS) == GAINS.r_max

    def test_equal_argument_soft_min(self):
        gains = TubeGains(k1=0.7, nu=20.0, r_min=0.05, r_max=0.4)
        assert _radius_from_clearance(0.4, gains, 0.0) == pytest.approx(
            0.4 - math.log(2.0) / 20.0, abs=1e-12
        )

    def test_paper_hardware_cap(self):
        # far clearance with the hardware radius band: radius ~ 0.27
        assert _radius_from_clearance(50.0, GAINS, 0.0) == pytest.approx(0.27, abs=1e-9)

    def test_collapse_raises(self):
        with pytest.raises(RadiusCollapse):
            _radius_from_clearance(-5.0, GAINS, 0.0)

    def test_never_exceeds_cap_or_clearance(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            d = rng.uniform(-0.1, 2.0)
            try:
                r = _radius_from_clearance(float(d), GAINS, 0.0)
            except RadiusCollapse:
                continue
            assert r <= min(GAINS.r_max, d) + 1e-15


class TestAnalyticCenter:
    def test_initial_condition(self):
        c1 = np.array([0.3, -0.7])
        eta = np.array([1.0, 1.0])
        assert np.allclose(analytic_center_obstacle_free(c1, 2.0, eta, 0.7, 2.0), c1)

    def test_component_arrival(self):
        c1 = np.array([0.0, 0.5])
        eta = np.array([1.0, 1.0])
        k1 = 0.7
        t_arr0 = 3.0 * abs(eta[0] - c1[0]) ** (2.0 / 3.0) / (2.0 * k1)
        c = analytic_center_obstacle_free(c1, 0.0, eta, k1, t_arr0)
        assert c[0] == pytest.approx(eta[0], abs=1e-12)
        # and it stays clamped afterwards
        c_later = analytic_center_obstacle_free(c1, 0.0, eta, k1, t_arr0 + 1.0)
        assert c_later[0] == eta[0]

    def test_rk4_cross_check(self):
        # independent fixed-step RK4 of dc/dt = k1 cbrt(eta - c)
        k1 = 0.7
        c = np.array([0.0, 0.0])
        eta = np.array([1.0, 1.0])
        dt = 1e-3
        t_end = convergence_time(c, eta, k1, 0.0) + 0.5
        steps = int(round(t_end / dt))
        sample_every = max(1, steps // 100)
        worst = 0.0
        ci = c.copy()
        for i in range(steps):
            t = i * dt

            def f(x):
                return k1 * signed_cbrt(eta - x)

            a = f(ci)
            b = f(ci + 0.5 * dt * a)
            cc = f(ci + 0.5 * dt * b)
            d = f(ci + dt * cc)
            ci = ci + dt / 6.0 * (a + 2 * b + 2 * cc + d)
            if (i + 1) % sample_every == 0:
                exact = analytic_center_obstacle_free(c, 0.0, eta, k1, (i + 1) * dt)
                worst = max(worst, float(np.max(np.abs(ci - exact))))
        assert worst <= 1e-4


class TestConvergenceTime:
    def test_already_at_target(self):
        assert convergence_time(np.array([1.0, 1.0]), np.array([1.0, 1.0]), 0.7, 5.0) == 5.0

    def test_scalar_case(self):
        assert convergence_time(np.array([0.0]), np.array([1.0]), 0.5, 1.0) == pytest.approx(4.0)

    def test_component_max(self):
        got = convergence_time(np.array([0.0, 0.0]), np.array([1.0, 8.0]), 1.5, 0.0)
        assert got == pytest.approx(4.0)


class TestTubeStep:
    def test_rk4_local_order_without_obstacles(self):
        state = TubeState(c=np.array([0.0, 0.0]), r=GAINS.r_max, t=0.0)
        dt = 0.01
        new, _ = tube_step(state, dt, EMPTY_2D, SETS, GAINS)
        exact = analytic_center_obstacle_free(state.c, 0.0, SETS.eta, GAINS.k1, dt)
        assert float(np.max(np.abs(new.c - exact))) <= 1e-9
        assert new.r == GAINS.r_max

    def test_inactive_obstacle_matches_obstacle_free(self):
        far = make_world([{"path": [[80.0, 80.0]], "sigma": 0.1, "epsilon": 0.8}])
        state = TubeState(c=np.array([0.0, 0.0]), r=GAINS.r_max, t=0.0)
        with_obs, _ = tube_step(state, 0.005, far, SETS, GAINS)
        without, _ = tube_step(state, 0.005, EMPTY_2D, SETS, GAINS)
        assert np.array_equal(with_obs.c, without.c)
        assert with_obs.r == without.r == GAINS.r_max

    def test_stiff_approach_fails_loudly(self):
        # obstacle whose uncertainty blows up on top of the center faster
        # than any evasion can compensate
        obs = UncertainObstacle(
            mean_motion=PiecewisePath([0.0], [[0.45, 0.0]]),
            sigma_profile=PiecewisePath([0.0, 0.5], [0.05, 4.0]),
            radius_profile=PiecewisePath.constant(0.15),
            epsilon=0.9,
            p_d=0.9999,
            k2=0.4,
            k3=0.4,
        )
        world = World(obstacles=(obs,), dim=2)
        state = TubeState(c=np.array([0.0, 0.0]), r=0.21, t=0.0)
        with pytest.raises((BarrierBreach, StepCollapse)):
            s = state
            mem = SynthesisMemory()
            for _ in range(200):
                s, _ = tube_step(s, 0.01, world, SETS, GAINS, memory=mem)

    def test_radius_tracks_clearance_bound(self):
        world = make_world(
            [{"path": [[1.4, 1.4]], "sigma": 0.25, "epsilon": 0.85, "p_d": 0.9999}]
        )
        mem = SynthesisMemory()
        state = TubeState(
            c=SETS.s, r=radius(SETS.s, 0.0, world, GAINS), t=0.0
        )
        for _ in range(600):
            state, ev = tube_step(state, 0.005, world, SETS, GAINS, memory=mem)
            assert state.r <= GAINS.r_max + 1e-12
            assert state.r <= np.min(ev.diags.d_hat) + 1e-12
            assert state.r > 0.0
            for q, obs in zip(ev.diags.q, world.obstacles):
                assert q > obs.epsilon

    def test_far_clearance_shortcut_keeps_radius_exact(self):
        # mix of near and very far obstacles: the aggregated radius must be
        # bit-identical to evaluating every clearance exactly
        world = make_world(
            [
                {"path": [[1.2, 1.0]], "sigma": 0.3, "epsilon": 0.8},
                {"path": [[40.0, -3.0]], "sigma": 0.05, "epsilon": 0.9},
                {"path": [[-25.0, 60.0]], "sigma": 0.2, "epsilon": 0.7},
            ]
        )
        rng = np.random.default_rng(9)
        for _ in range(25):
            c = rng.uniform(-1.0, 3.0, size=2)
            r_fast = radius(c, 0.0, world, GAINS)
            exact = np.array(
                [
                    d_hat(c, snapshot(obs, 0.0), obs.epsilon)
                    for obs in world.obstacles
                ]
            )
            r_exact = _radius_from_clearance(_soft_min(exact, GAINS.nu), GAINS, 0.0)
            assert r_fast == r_exact

    def test_memory_sign_persistence_smooths_tangent(self):
        # symmetric head-on approach: without persistence the fallback could
        # flip; with it, consecutive evaluations keep a consistent side
        world = make_world(
            [{"path": [[0.0, 1.5]], "sigma": 0.3, "epsilon": 0.6, "p_d": 0.9999}]
        )
        sets = SetSpec(s=np.array([0.0, 0.0]), d_s=0.5, eta=np.array([0.0, 3.0]), d_t=0.5)
        mem = SynthesisMemory()
        ev1 = evaluate(np.array([0.0, 0.2]), 0.0, world, sets, GAINS, memory=mem)
        assert 0 in mem.tangents
        first = mem.tangents[0].copy()
        evaluate(np.array([0.0, 0.25]), 0.005, world, sets, GAINS, memory=mem)
        assert float(np.dot(first, mem.tangents[0])) > 0.0
