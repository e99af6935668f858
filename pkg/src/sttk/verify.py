"""Post-hoc certification of trajectory logs.

Two independent routes: Monte Carlo estimation of the avoidance
probabilities at sampled instants (fresh Gaussian draws, not the
chi-squared formula), and a deterministic audit that recomputes every
invariant from the logged trajectory without trusting logged derived
quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller import funnel_gamma, stage1_reference, stage_k_reference
from .engine import Scenario, TrajectoryLog, resolve_controller
from .errors import SttkError
from .tube import TubeState
from .world import World, noncentrality, q_center, snapshot
from .ncx2 import Ncx2Params, ncx2_cdf


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    margin: float
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    mc_settings: dict | None = None

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, statistic, threshold, margin, detail=""):
        self.checks.append(
            CheckResult(
                name=name,
                passed=bool(passed),
                statistic=float(statistic),
                threshold=float(threshold),
                margin=float(margin),
                detail=detail,
            )
        )


def _sample_indices(n_records: int, times: int) -> np.ndarray:
    return np.unique(np.linspace(0, n_records - 1, times).round().astype(int))


def mc_avoidance(
    log: TrajectoryLog,
    world: World,
    samples: int = 100_000,
    times: int = 100,
    seed: int = 0,
) -> VerificationReport:
    """Empirical check of the tube-level avoidance guarantee.

    At sampled logged instants, draws obstacle centers from the Gaussian
    obstacle law and counts how often the tube ball clears the obstacle
    ball; each obstacle passes if the frequency stays above
    epsilon - 3*sqrt(eps(1-eps)/samples) at every sampled instant.  RNG
    streams are derived per (instant, obstacle), so the report is
    reproducible and order-independent."""
    if samples < 10_000:
        raise ValueError("mc_avoidance needs at least 1e4 samples")
    if not log.records:
        raise ValueError("empty log")
    idx = _sample_indices(len(log.records), times)
    report = VerificationReport(
        mc_settings={"samples": samples, "seed": seed, "times_checked": len(idx)}
    )
    for j, obs in enumerate(world.obstacles):
        worst_freq = math.inf
        worst_thresh = 0.0
        worst_t = None
        eps = obs.epsilon
        thresh = eps - 3.0 * math.sqrt(eps * (1.0 - eps) / samples)
        for k in idx:
            rec = log.records[k]
            snap = snapshot(obs, rec.t)
            rng = np.random.default_rng([seed, int(k), j])
            centers = snap.mu + snap.sigma * rng.standard_normal((samples, len(snap.mu)))
            dist = np.linalg.norm(rec.c - centers, axis=1)
            freq = float(np.mean(dist >= snap.r_o + rec.r))
            if freq - thresh < worst_freq - worst_thresh:
                worst_freq, worst_thresh, worst_t = freq, thresh, rec.t
        report.add(
            name=f"mc_avoidance_obstacle_{j}",
            passed=worst_freq >= worst_thresh,
            statistic=worst_freq,
            threshold=worst_thresh,
            margin=worst_freq - worst_thresh,
            detail=f"worst sampled instant t={worst_t:.6g}, epsilon={eps}",
        )
    return report


def audit(log: TrajectoryLog, scenario: Scenario) -> VerificationReport:
    """Deterministic re-check of every per-step invariant from scratch.

    Derived quantities (avoidance probabilities, funnel references) are
    recomputed from the logged trajectory; logged values are only used to
    cross-check log consistency.  Report-only: never raises on failures."""
    report = VerificationReport()
    sets, gains, world = scenario.sets, scenario.tube_gains, scenario.world
    recs = log.records
    if not recs:
        report.add("nonempty_log", False, 0.0, 1.0, -1.0, "log holds no records")
        return report

    # (a) output containment
    e1 = np.array([float(np.linalg.norm(r.y - r.c)) / r.r for r in recs])
    k_worst = int(np.argmax(e1))
    report.add(
        "containment", float(e1.max()) < 1.0, float(e1.max()), 1.0,
        1.0 - float(e1.max()),
        f"max |y-c|/r at step {k_worst} (t={recs[k_worst].t:.6g})",
    )

    # (b) radius bounds
    radii = np.array([r.r for r in recs])
    k_min, k_max = int(np.argmin(radii)), int(np.argmax(radii))
    ok_b = radii[k_min] > 0.0 and radii[k_max] <= gains.r_max + 1e-12
    report.add(
        "radius_bounds", ok_b, float(radii[k_max]), gains.r_max,
        gains.r_max - float(radii[k_max]),
        f"min r={radii[k_min]:.6g} at step {k_min} (t={recs[k_min].t:.6g}), "
        f"max r at step {k_max} (t={recs[k_max].t:.6g})",
    )

    # (c) avoidance floor at the center, recomputed from scratch, plus log
    # consistency of the recorded q values
    floor_margin = math.inf
    q_mismatch = 0.0
    # (g) tube-level avoidance with the instantaneous radius
    tube_margin = math.inf
    for rec in recs:
        for j, obs in enumerate(world.obstacles):
            snap = snapshot(obs, rec.t)
            q = q_center(rec.c, snap, gains.r_min)
            floor_margin = min(floor_margin, q - obs.epsilon)
            if rec.q.size:
                q_mismatch = max(q_mismatch, abs(q - rec.q[j]))
            lam = noncentrality(rec.c, snap)
            q_tube = 1.0 - ncx2_cdf(
                ((snap.r_o + rec.r) / snap.sigma) ** 2, Ncx2Params(len(rec.c), lam)
            )
            tube_margin = min(tube_margin, q_tube - obs.epsilon)
    if world.obstacles:
        report.add(
            "avoidance_floor_center", floor_margin > 0.0, floor_margin, 0.0,
            floor_margin, "min over steps/obstacles of q(c) - epsilon (buffer radius)",
        )
        report.add(
            "avoidance_tube_radius", tube_margin > 0.0, tube_margin, 0.0,
            tube_margin, "min margin of P(clear r_o + r(t)) - epsilon",
        )
        report.add(
            "log_consistency_q", q_mismatch <= 1e-9, q_mismatch, 1e-9,
            1e-9 - q_mismatch, "max |recomputed q - logged q|",
        )

    # (d) funnel bounds per stage, references recomputed along the cascade
    try:
        tube0 = TubeState(c=recs[0].c, r=recs[0].r, t=recs[0].t)
        config = resolve_controller(scenario, tube0)
    except (ValueError, SttkError) as err:
        report.add("funnel_config", False, 0.0, 1.0, -1.0, f"cannot resolve controller: {err}")
        config = None
    if config is not None and scenario.plant.stages > 1:
        n = len(recs[0].c)
        worst = 0.0
        broken = None
        for rec in recs:
            tube_t = TubeState(c=rec.c, r=rec.r, t=max(rec.t, 1e-300))
            try:
                ref = stage1_reference(rec.y, tube_t, config.kappa1)
            except SttkError:
                broken = f"stage-1 reference undefined at t={rec.t:.6g}"
                break
            for k in range(2, scenario.plant.stages + 1):
                params = config.stages[k - 2]
                xk = rec.xbar[(k - 1) * n : k * n]
                gamma = np.array(
                    [funnel_gamma(params, i, rec.t) for i in range(n)]
                )
                e = np.abs(xk - ref) / gamma
                worst = max(worst, float(e.max()))
                if float(e.max()) >= 1.0:
                    broken = f"stage {k} exceeded its funnel at t={rec.t:.6g}"
                    break
                ref = stage_k_reference(xk, ref, params, rec.t, stage=k)
            if broken:
                break
        report.add(
            "funnel_bounds", broken is None and worst < 1.0, worst, 1.0,
            1.0 - worst, broken or "max normalized stage error",
        )

    # (e) reach-and-stay bookkeeping recomputed from the c/r trajectory
    inside = np.array(
        [float(np.linalg.norm(r.c - sets.eta)) + r.r <= sets.d_t for r in recs]
    )
    if not inside.any():
        report.add("reach", False, 0.0, 1.0, -1.0, "target ball never contained the tube")
        report.add("stay", False, 0.0, scenario.stay_window_value, -scenario.stay_window_value,
                   "not reached")
    else:
        t_reach = recs[int(np.argmax(inside))].t
        report.add("reach", True, t_reach, scenario.horizon,
                   scenario.horizon - t_reach, "first time the tube fits in the target ball")
        # final entry: last switch from outside to inside
        entries = [k for k in range(len(recs)) if inside[k] and (k == 0 or not inside[k - 1])]
        t_final = recs[entries[-1]].t
        stayed_span = recs[-1].t - t_final if inside[-1] else 0.0
        report.add(
            "stay", bool(inside[-1] and stayed_span >= scenario.stay_window_value),
            stayed_span, scenario.stay_window_value,
            stayed_span - scenario.stay_window_value,
            f"containment persisted from final entry t={t_final:.6g}",
        )

    # (f) initial tube inside the initial ball
    d0 = float(np.linalg.norm(recs[0].c - sets.s)) + recs[0].r
    report.add(
        "initial_tube_in_start_ball", d0 <= sets.d_s + 1e-12, d0, sets.d_s,
        sets.d_s - d0, "|c(0) - s| + r(0) vs d_S",
    )

    # run status recorded in the log
    report.add(
        "clean_completion", log.status == "completed",
        1.0 if log.status == "completed" else 0.0, 1.0,
        0.0 if log.status == "completed" else -1.0, f"status={log.status}",
    )
    return report
