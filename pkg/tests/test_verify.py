"""Tests for Monte Carlo certification and the deterministic audit."""

import dataclasses
import math

import numpy as np
import pytest

from sttk.engine import TrajectoryLog, StepRecord, run
from sttk.ncx2 import Ncx2Params, ncx2_cdf
from sttk.verify import audit, mc_avoidance
from sttk.world import PiecewisePath, UncertainObstacle, World

from test_engine import hw_like_scenario, obstacle


def one_record_log(c, r, n_obstacles=1):
    c = np.asarray(c, dtype=float)
    rec = StepRecord(
        t=0.0, c=c, r=r, y=c.copy(), xbar=c.copy(), u=np.zeros_like(c),
        q=np.ones(n_obstacles), d_hat=np.ones(n_obstacles), theta=np.zeros(n_obstacles),
    )
    return TrajectoryLog(
        meta={"dim": len(c), "n_obstacles": n_obstacles, "dt": 1.0},
        records=[rec],
    )


class TestMcAvoidance:
    def test_distant_obstacle_full_avoidance(self):
        world = World(obstacles=(obstacle([(0.0, 1e6, 1e6)], sigma=0.5, eps=0.9),), dim=2)
        log = one_record_log([0.0, 0.0], 0.3)
        rep = mc_avoidance(log, world, samples=10_000, times=1, seed=5)
        assert rep.all_passed
        assert rep.checks[0].statistic == 1.0

    def test_matches_chi_squared_formula_at_the_mean(self):
        # tube center sitting exactly on the obstacle mean: the avoidance
        # probability has the closed central chi-squared form
        sigma, r_o, r_tube = 0.5, 0.3, 0.25
        world = World(
            obstacles=(obstacle([(0.0, 1.0, 2.0)], sigma=sigma, r_o=r_o, eps=0.05),),
            dim=2,
        )
        log = one_record_log([1.0, 2.0], r_tube)
        samples = 200_000
        rep = mc_avoidance(log, world, samples=samples, times=1, seed=9)
        analytic = 1.0 - ncx2_cdf(((r_o + r_tube) / sigma) ** 2, Ncx2Params(2, 0.0))
        se = math.sqrt(analytic * (1.0 - analytic) / samples)
        assert abs(rep.checks[0].statistic - analytic) <= 3.0 * se

    def test_reproducible(self):
        world = World(obstacles=(obstacle([(0.0, 1.5, 0.5)], sigma=0.4, eps=0.6),), dim=2)
        log = one_record_log([0.0, 0.0], 0.3)
        a = mc_avoidance(log, world, samples=20_000, times=1, seed=13)
        b = mc_avoidance(log, world, samples=20_000, times=1, seed=13)
        assert a.checks[0].statistic == b.checks[0].statistic

    def test_small_sample_count_rejected(self):
        world = World(obstacles=(obstacle([(0.0, 1.5, 0.5)], sigma=0.4, eps=0.6),), dim=2)
        with pytest.raises(ValueError):
            mc_avoidance(one_record_log([0.0, 0.0], 0.3), world, samples=100, times=1)


@pytest.fixture(scope="module")
def clean_run():
    scn = hw_like_scenario(horizon=8.0)
    return scn, run(scn)


class TestAudit:
    def test_clean_run_passes_everything(self, clean_run):
        scn, log = clean_run
        rep = audit(log, scn)
        assert rep.all_passed, [c for c in rep.checks if not c.passed]
        names = {c.name for c in rep.checks}
        assert {
            "containment", "radius_bounds", "avoidance_floor_center",
            "avoidance_tube_radius", "log_consistency_q", "reach", "stay",
            "initial_tube_in_start_ball", "clean_completion",
        } <= names

    def test_every_check_listed_even_when_passing(self, clean_run):
        scn, log = clean_run
        rep = audit(log, scn)
        assert all(isinstance(c.passed, bool) for c in rep.checks)
        assert len(rep.checks) >= 8

    def test_tampered_radius_fails_at_that_step(self, clean_run):
        scn, log = clean_run
        k_bad = len(log.records) // 2
        tampered = TrajectoryLog(meta=log.meta, records=list(log.records),
                                 events=list(log.events), status=log.status,
                                 t_reach=log.t_reach, t_final_entry=log.t_final_entry,
                                 stayed=log.stayed)
        tampered.records[k_bad] = dataclasses.replace(
            tampered.records[k_bad], r=scn.tube_gains.r_max * 2.0
        )
        rep = audit(tampered, scn)
        bad = {c.name: c for c in rep.checks}
        assert not bad["radius_bounds"].passed
        assert f"step {k_bad}" in bad["radius_bounds"].detail

    def test_tampered_q_breaks_log_consistency(self, clean_run):
        scn, log = clean_run
        tampered = TrajectoryLog(meta=log.meta, records=list(log.records),
                                 status=log.status)
        rec = tampered.records[10]
        q = rec.q.copy()
        q[0] += 1e-6
        tampered.records[10] = dataclasses.replace(rec, q=q)
        rep = audit(tampered, scn)
        bad = {c.name: c for c in rep.checks}
        assert not bad["log_consistency_q"].passed

    def test_truncated_log_reports_not_reached(self, clean_run):
        scn, log = clean_run
        reach_idx = next(i for i, (k, kind, _) in enumerate(log.events) if kind == "reach")
        cut = log.events[reach_idx][0] - 10
        truncated = TrajectoryLog(meta=log.meta, records=log.records[:cut],
                                  status="truncated")
        rep = audit(truncated, scn)
        by_name = {c.name: c for c in rep.checks}
        assert not by_name["reach"].passed
        assert not by_name["stay"].passed
        assert by_name["stay"].detail == "not reached"
        # the rest still evaluated
        assert by_name["containment"].passed
        assert by_name["radius_bounds"].passed

    def test_empty_log_reported(self, clean_run):
        scn, _ = clean_run
        rep = audit(TrajectoryLog(meta={}, records=[]), scn)
        assert not rep.all_passed
