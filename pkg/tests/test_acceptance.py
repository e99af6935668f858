"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with `pytest tests/test_acceptance.py -s` to watch).

Expensive runs are shared across criteria through session fixtures; every
tolerance here is fixed, not tuned at runtime.
"""

import math
import time

import numpy as np
import pytest

from sttk.cli import resolve_scenario_path
from sttk.engine import run
from sttk.logio import write_log
from sttk.ncx2 import Ncx2Params, ncx2_cdf, ncx2_quantile
from sttk.scenario_io import load_scenario
from sttk.tube import analytic_center_obstacle_free, convergence_time
from sttk.verify import audit, mc_avoidance

MC_ORACLE_SEED = 7


def _report(name: str, passed: bool, detail: str = ""):
    line = f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line, flush=True)
    assert passed, line


def _budget(name: str, elapsed: float, budget: float):
    _report(f"{name} runtime", elapsed < budget, f"{elapsed:.1f}s < {budget:.0f}s")


@pytest.fixture(scope="session")
def hw_case():
    scenario = load_scenario(resolve_scenario_path("paper_2d_hw_case"))
    t0 = time.perf_counter()
    log = run(scenario)
    return scenario, log, time.perf_counter() - t0


@pytest.fixture(scope="session")
def sim50_case():
    scenario = load_scenario(resolve_scenario_path("paper_2d_sim50"))
    t0 = time.perf_counter()
    log = run(scenario)
    return scenario, log, time.perf_counter() - t0


@pytest.fixture(scope="session")
def uav_case():
    scenario = load_scenario(resolve_scenario_path("paper_uav3d"))
    t0 = time.perf_counter()
    log = run(scenario)
    return scenario, log, time.perf_counter() - t0


def test_special_function_correctness():
    t0 = time.perf_counter()
    # central closed form, 50-point grid
    params0 = Ncx2Params(2, 0.0)
    worst_central = max(
        abs(ncx2_cdf(float(x), params0) - (1.0 - math.exp(-0.5 * x)))
        for x in np.linspace(0.05, 20.0, 50)
    )
    _report("ncx2 central closed form", worst_central <= 1e-12,
            f"max err {worst_central:.2e} <= 1e-12")

    # Monte Carlo oracle, 1e7 samples per (n, lam)
    worst_mc = 0.0
    for n in (1, 2, 3):
        for lam in (0.5, 4.0, 25.0):
            rng = np.random.default_rng([MC_ORACLE_SEED, n, int(lam * 2)])
            mean = np.full(n, math.sqrt(lam / n))
            samples = np.empty(10_000_000)
            done = 0
            while done < samples.size:
                m = min(2_500_000, samples.size - done)
                z = rng.standard_normal((m, n)) + mean
                samples[done:done + m] = np.einsum("ij,ij->i", z, z)
                done += m
            params = Ncx2Params(n, lam)
            for x in (0.5 * (n + lam), float(n + lam), 2.0 * (n + lam)):
                emp = float(np.mean(samples <= x))
                worst_mc = max(worst_mc, abs(ncx2_cdf(x, params) - emp))
    _report("ncx2 MC oracle agreement", worst_mc <= 5e-4,
            f"max |cdf - empirical| {worst_mc:.2e} <= 5e-4")

    # quantile round trips
    worst_rt = 0.0
    for n in (1, 2, 3):
        for lam in (0.5, 4.0, 25.0):
            params = Ncx2Params(n, lam)
            for p in np.arange(0.01, 1.0, 0.01):
                x = ncx2_quantile(float(p), params)
                worst_rt = max(worst_rt, abs(ncx2_cdf(x, params) - p))
    _report("ncx2 quantile round trip", worst_rt <= 1e-9,
            f"max |F(inv(p)) - p| {worst_rt:.2e} <= 1e-9")
    _budget("special functions", time.perf_counter() - t0, 60.0)


def test_noncentrality_sign_property():
    t0 = time.perf_counter()
    h = 1e-4
    worst = -math.inf
    for n in (1, 2, 3):
        for lam in (0.5, 2.0, 8.0, 25.0):
            for x in (0.5, 2.0, 8.0, 30.0):
                up = ncx2_cdf(x, Ncx2Params(n, lam + h))
                dn = ncx2_cdf(x, Ncx2Params(n, lam - h))
                worst = max(worst, (up - dn) / (2.0 * h))
    _report("CDF strictly decreasing in noncentrality", worst < 0.0,
            f"max finite-difference slope {worst:.3e} < 0")
    _budget("sign property", time.perf_counter() - t0, 5.0)


def test_obstacle_free_finite_time_convergence():
    t0 = time.perf_counter()
    base = load_scenario(resolve_scenario_path("obstacle_free"))
    import dataclasses

    from sttk.tube import SetSpec, TubeGains

    for k1 in (0.35, 0.7):
        dt = base.dt
        band = ((2.0 / 3.0) * k1 * 0.5 * dt) ** 1.5
        gains = TubeGains(k1=k1, nu=base.tube_gains.nu,
                          r_min=base.tube_gains.r_min, r_max=base.tube_gains.r_max)
        sets = SetSpec(s=base.sets.s, d_s=base.sets.d_s, eta=base.sets.eta,
                       d_t=base.tube_gains.r_max + band)
        scn = dataclasses.replace(base, tube_gains=gains, sets=sets, horizon=12.0)
        log = run(scn)
        t_c = convergence_time(scn.sets.s, scn.sets.eta, k1, 0.0)
        worst = max(
            float(np.max(np.abs(
                rec.c - analytic_center_obstacle_free(scn.sets.s, 0.0, scn.sets.eta, k1, rec.t)
            )))
            for rec in log.records
        )
        _report(f"obstacle-free center error (k1={k1})", worst <= 1e-4,
                f"max |c - closed form| {worst:.2e} <= 1e-4")
        _report(
            f"obstacle-free arrival time (k1={k1})",
            log.t_reach is not None and abs(log.t_reach - t_c) <= dt,
            f"|t_reach - t_c| = {abs(log.t_reach - t_c):.2e} <= dt={dt}",
        )
    _budget("obstacle-free convergence", time.perf_counter() - t0, 10.0)


def test_hw_case_run_and_audit(hw_case):
    scenario, log, elapsed = hw_case
    _report("hw case completes", log.status == "completed", f"status={log.status}")
    rep = audit(log, scenario)
    failed = [c.name for c in rep.checks if not c.passed]
    _report("hw case audit", rep.all_passed, "failed: " + ", ".join(failed) if failed else "all checks pass")
    _budget("hw case", elapsed, 60.0)


def test_sim50_reaches_and_audits(sim50_case):
    scenario, log, elapsed = sim50_case
    _report(
        "sim50 reaches the target",
        log.t_reach is not None and log.t_reach <= 120.0,
        f"t_reach={log.t_reach}",
    )
    rep = audit(log, scenario)
    failed = [c.name for c in rep.checks if not c.passed]
    _report("sim50 audit", rep.all_passed, "failed: " + ", ".join(failed) if failed else "all checks pass")
    _budget("sim50", elapsed, 300.0)


def test_uav_run_and_audit(uav_case):
    scenario, log, elapsed = uav_case
    _report("uav case completes", log.status == "completed", f"status={log.status}")
    rep = audit(log, scenario)
    by_name = {c.name: c for c in rep.checks}
    _report("uav stage-2 funnel containment", by_name["funnel_bounds"].passed,
            f"max normalized stage error {by_name['funnel_bounds'].statistic:.3f} < 1")
    failed = [c.name for c in rep.checks if not c.passed]
    _report("uav audit", rep.all_passed, "failed: " + ", ".join(failed) if failed else "all checks pass")
    _budget("uav case", elapsed, 120.0)


def test_monte_carlo_certification(hw_case):
    scenario, log, _ = hw_case
    t0 = time.perf_counter()
    rep = mc_avoidance(log, scenario.world, samples=100_000, times=100,
                       seed=scenario.seed)
    worst = min(c.margin for c in rep.checks)
    _report("MC avoidance certification", rep.all_passed,
            f"worst margin over obstacles/instants {worst:.4f} >= 0")
    _budget("MC certification", time.perf_counter() - t0, 120.0)


def test_disturbance_robustness():
    t0 = time.perf_counter()
    scenario = load_scenario(resolve_scenario_path("disturbed_double_integrator"))
    assert max(scenario.plant.disturbance_bound) == 0.3
    log = run(scenario)
    rep = audit(log, scenario)
    by_name = {c.name: c for c in rep.checks}
    _report("disturbed case completes", log.status == "completed", f"status={log.status}")
    _report("disturbed containment audit", by_name["containment"].passed,
            f"max e1 {by_name['containment'].statistic:.3f} < 1")
    _report("disturbed funnel audit", by_name["funnel_bounds"].passed,
            f"max stage error {by_name['funnel_bounds'].statistic:.3f} < 1")
    _budget("disturbance robustness", time.perf_counter() - t0, 120.0)


def test_determinism(hw_case, tmp_path):
    scenario, log, _ = hw_case
    a = tmp_path / "a.log"
    b = tmp_path / "b.log"
    write_log(log, a)
    write_log(run(scenario), b)
    _report("determinism (byte-identical reruns)", a.read_bytes() == b.read_bytes())
