"""Simulation orchestrator: validation, the lockstep run loop and the
trajectory log it produces.

Each logged step is assembled in a fixed order: obstacle snapshots and
tube evaluation at t, then the control input at t, then one tube step and
one plant step to t + dt.  All randomness flows from the scenario seed,
so identical scenarios produce bit-identical logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller import (
    ControllerConfig,
    FunnelStageParams,
    check_initialization,
    control_input,
    make_default_stages,
)
from .errors import SttkError
from .plants import DisturbanceGen, PlantSpec, plant_step
from .tube import (
    SetSpec,
    SynthesisMemory,
    TubeEval,
    TubeGains,
    TubeState,
    evaluate,
    radius,
    tube_step,
)
from .world import World, q_center, snapshot


@dataclass(frozen=True)
class ControllerSetup:
    """Controller gains as configured; funnel stages may be left to the
    guaranteed-feasible defaults computed at t=0."""

    kappa1: float
    stages: tuple[FunnelStageParams, ...] | None = None
    stage_kappas: tuple[float, ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    sets: SetSpec
    world: World
    tube_gains: TubeGains
    controller: ControllerSetup
    plant: PlantSpec
    dt: float
    horizon: float
    stay_window: float | None = None  # None: 20% of the horizon
    seed: int = 0
    derivative_bound_assert: float | None = None
    disturbance_correlation_time: float = 1.0

    @property
    def stay_window_value(self) -> float:
        return 0.2 * self.horizon if self.stay_window is None else self.stay_window


@dataclass(frozen=True)
class StepRecord:
    t: float
    c: np.ndarray
    r: float
    y: np.ndarray
    xbar: np.ndarray
    u: np.ndarray
    q: np.ndarray
    d_hat: np.ndarray
    theta: np.ndarray


@dataclass
class TrajectoryLog:
    meta: dict
    records: list[StepRecord] = field(default_factory=list)
    events: list[tuple[int, str, str]] = field(default_factory=list)
    status: str = "completed"
    t_reach: float | None = None
    t_final_entry: float | None = None
    stayed: bool = False


def _initial_tube(scenario: Scenario) -> tuple[TubeState, TubeEval, SynthesisMemory]:
    memory = SynthesisMemory()
    ev = evaluate(
        scenario.sets.s, 0.0, scenario.world, scenario.sets, scenario.tube_gains, memory
    )
    r0 = radius(scenario.sets.s, 0.0, scenario.world, scenario.tube_gains)
    return TubeState(c=scenario.sets.s, r=r0, t=0.0), ev, memory


def resolve_controller(scenario: Scenario, tube0: TubeState) -> ControllerConfig:
    """Materialize the funnel stages, computing safe defaults when the
    scenario left them out."""
    setup = scenario.controller
    n_stages = scenario.plant.stages
    if setup.stages is not None:
        return ControllerConfig(kappa1=setup.kappa1, stages=setup.stages)
    kappas = setup.stage_kappas or (5.0,) * (n_stages - 1)
    if len(kappas) != n_stages - 1:
        raise ValueError(
            f"need {n_stages - 1} stage gains for a {n_stages}-stage plant, got {len(kappas)}"
        )
    stages = make_default_stages(
        scenario.plant.initial_state, tube0, setup.kappa1, kappas
    )
    return ControllerConfig(kappa1=setup.kappa1, stages=stages)


def validate(scenario: Scenario) -> list[str]:
    """Cross-component scenario checks; an empty list means runnable."""
    out: list[str] = []
    sets, gains, world, plant = (
        scenario.sets,
        scenario.tube_gains,
        scenario.world,
        scenario.plant,
    )
    n = len(sets.s)
    if world.dim != n:
        out.append(f"dimension mismatch: world dim {world.dim}, sets dim {n}")
    if plant.dim != n:
        out.append(f"dimension mismatch: plant dim {plant.dim}, sets dim {n}")
    if not gains.r_min < gains.r_max:
        out.append("radius ordering: need r_min < r_max")
    if gains.r_max > min(sets.d_s, sets.d_t):
        out.append(
            f"radius cap: r_max={gains.r_max} exceeds min(d_S, d_T)="
            f"{min(sets.d_s, sets.d_t)}"
        )
    if scenario.dt <= 0.0:
        out.append("dt must be positive")
    if scenario.horizon <= scenario.dt:
        out.append("horizon must exceed dt")
    if scenario.stay_window is not None and not (0.0 <= scenario.stay_window <= scenario.horizon):
        out.append("stay_window must lie within [0, horizon]")
    if scenario.derivative_bound_assert is not None and scenario.derivative_bound_assert <= 0.0:
        out.append("derivative_bound_assert must be positive when given")
    if out:
        return out  # geometry below needs the basics to hold

    for j, obs in enumerate(world.obstacles):
        q0 = q_center(sets.s, snapshot(obs, 0.0), gains.r_min)
        if not q0 > obs.epsilon:
            out.append(
                f"initial avoidance: obstacle {j} has q(s,0)={q0:.6g} <= "
                f"epsilon={obs.epsilon}"
            )
    if out:
        return out

    try:
        tube0, _, _ = _initial_tube(scenario)
    except SttkError as err:
        out.append(f"initial tube: {err}")
        return out

    y0 = plant.initial_state[:n]
    if not float(np.linalg.norm(y0 - sets.s)) < tube0.r:
        out.append(
            "initial containment: y(0) must start strictly inside "
            f"the tube of radius {tube0.r:.6g} around s"
        )
        return out

    try:
        config = resolve_controller(scenario, tube0)
    except ValueError as err:
        out.append(f"controller: {err}")
        return out
    if len(config.stages) != plant.stages - 1:
        out.append(
            f"controller: {plant.stages}-stage plant needs {plant.stages - 1} "
            f"funnel stages, got {len(config.stages)}"
        )
        return out
    out.extend(check_initialization(plant.initial_state, tube0, config))
    return out


def _event_name(err: SttkError) -> str:
    return {
        "BarrierBreach": "barrier_breach",
        "RadiusCollapse": "radius_collapse",
        "StepCollapse": "step_collapse",
        "TubeViolation": "tube_violation",
        "FunnelViolation": "funnel_violation",
        "NumericalBlowup": "numerical_blowup",
    }.get(type(err).__name__, "error")


def run(scenario: Scenario) -> TrajectoryLog:
    """Execute the scenario to its horizon (or first failure).

    The log carries one record per grid time plus reach / exit events and
    the final reach-and-stay verdict; failures become events and a failure
    status rather than exceptions."""
    problems = validate(scenario)
    if problems:
        raise ValueError("scenario invalid: " + "; ".join(problems))

    sets, gains, world, plant = (
        scenario.sets,
        scenario.tube_gains,
        scenario.world,
        scenario.plant,
    )
    n = len(sets.s)
    dt = scenario.dt
    n_steps = int(round(scenario.horizon / dt))
    log = TrajectoryLog(
        meta={
            "scenario": scenario.name,
            "dim": n,
            "n_obstacles": len(world.obstacles),
            "dt": dt,
            "horizon": scenario.horizon,
            "stay_window": scenario.stay_window_value,
            "seed": scenario.seed,
            "plant_kind": plant.kind,
            "plant_stages": plant.stages,
        }
    )

    tube_state, ev, memory = _initial_tube(scenario)
    config = resolve_controller(scenario, tube_state)
    gen = DisturbanceGen(
        seed=scenario.seed,
        bounds=plant.disturbance_bound,
        dim=n,
        correlation_time=scenario.disturbance_correlation_time,
    )
    xbar = plant.initial_state.copy()

    inside = False
    bound = scenario.derivative_bound_assert
    try:
        for k in range(n_steps + 1):
            t = k * dt
            u = control_input(xbar, tube_state, config, t)
            log.records.append(
                StepRecord(
                    t=t,
                    c=tube_state.c.copy(),
                    r=tube_state.r,
                    y=xbar[:n].copy(),
                    xbar=xbar.copy(),
                    u=np.asarray(u, dtype=float),
                    q=ev.diags.q.copy(),
                    d_hat=ev.diags.d_hat.copy(),
                    theta=ev.diags.theta.copy(),
                )
            )

            contained = (
                float(np.linalg.norm(tube_state.c - sets.eta)) + tube_state.r <= sets.d_t
            )
            if contained and not inside:
                if log.t_reach is None:
                    log.t_reach = t
                    log.events.append((k, "reach", f"t={t:.6g}"))
                else:
                    log.events.append((k, "re_reach", f"t={t:.6g}"))
                log.t_final_entry = t
                inside = True
            elif not contained and inside:
                log.events.append((k, "exit", f"t={t:.6g}"))
                inside = False

            if k == n_steps:
                break

            prev_c, prev_r = tube_state.c, tube_state.r
            tube_state, ev = tube_step(
                tube_state, dt, world, sets, gains, memory=memory, start_eval=ev
            )
            xbar = plant_step(plant, xbar, u, gen, t, dt)
            if bound is not None:
                step_change = max(
                    float(np.max(np.abs(tube_state.c - prev_c))),
                    abs(tube_state.r - prev_r),
                )
                if step_change > bound * dt:
                    raise SttkError(
                        f"derivative bound breached at t={t + dt:.6g}: "
                        f"step change {step_change:.6g} > {bound} * dt"
                    )
    except SttkError as err:
        log.events.append((len(log.records) - 1, _event_name(err), str(err)))
        log.status = f"failed:{_event_name(err)}"

    if log.status == "completed" and inside and log.t_final_entry is not None:
        last_t = log.records[-1].t
        log.stayed = last_t - log.t_final_entry >= scenario.stay_window_value
    return log
