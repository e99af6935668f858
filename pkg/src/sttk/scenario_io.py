"""Scenario file loading.

Scenarios are YAML with five sections: sets, tube, obstacles, controller,
plant, run.  Every parse/shape problem is reported with the offending key
path so a broken file points at itself.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
import yaml

from .controller import FunnelStageParams
from .engine import ControllerSetup, Scenario
from .plants import PlantSpec
from .tube import SetSpec, TubeGains
from .world import PiecewisePath, UncertainObstacle, World


class ScenarioFormatError(ValueError):
    """Malformed scenario file; the message carries the key path."""


def _need(mapping, key, path):
    if not isinstance(mapping, dict):
        raise ScenarioFormatError(f"{path}: expected a mapping")
    if key not in mapping:
        raise ScenarioFormatError(f"{path}.{key}: missing required key")
    return mapping[key]


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioFormatError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _vector(value, path):
    if not isinstance(value, (list, tuple)) or not value:
        raise ScenarioFormatError(f"{path}: expected a non-empty list of numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _profile(value, path) -> PiecewisePath:
    """Scalar -> constant profile; [[t, value], ...] -> piecewise linear."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return PiecewisePath.constant(float(value))
    if isinstance(value, (list, tuple)) and value:
        times, vals = [], []
        for i, pair in enumerate(value):
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ScenarioFormatError(f"{path}[{i}]: expected a [t, value] pair")
            times.append(_number(pair[0], f"{path}[{i}][0]"))
            vals.append(_number(pair[1], f"{path}[{i}][1]"))
        try:
            return PiecewisePath(times, vals)
        except ValueError as err:
            raise ScenarioFormatError(f"{path}: {err}") from err
    raise ScenarioFormatError(f"{path}: expected a number or list of [t, value] pairs")


def _obstacle(raw, path) -> UncertainObstacle:
    waypoints = _need(raw, "waypoints", path)
    if not isinstance(waypoints, (list, tuple)) or not waypoints:
        raise ScenarioFormatError(f"{path}.waypoints: expected rows of [t, x, y, ...]")
    times, points = [], []
    width = None
    for i, row in enumerate(waypoints):
        if not isinstance(row, (list, tuple)) or len(row) < 2:
            raise ScenarioFormatError(
                f"{path}.waypoints[{i}]: expected [t, x, y, ...] with at least one coordinate"
            )
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ScenarioFormatError(f"{path}.waypoints[{i}]: inconsistent row width")
        times.append(_number(row[0], f"{path}.waypoints[{i}][0]"))
        points.append([_number(v, f"{path}.waypoints[{i}][{k + 1}]") for k, v in enumerate(row[1:])])
    try:
        return UncertainObstacle(
            mean_motion=PiecewisePath(times, points),
            sigma_profile=_profile(_need(raw, "sigma", path), f"{path}.sigma"),
            radius_profile=_profile(_need(raw, "r_o", path), f"{path}.r_o"),
            epsilon=_number(_need(raw, "epsilon", path), f"{path}.epsilon"),
            p_d=_number(_need(raw, "p_d", path), f"{path}.p_d"),
            k2=_number(_need(raw, "k2", path), f"{path}.k2"),
            k3=_number(_need(raw, "k3", path), f"{path}.k3"),
        )
    except ValueError as err:
        if isinstance(err, ScenarioFormatError):
            raise
        raise ScenarioFormatError(f"{path}: {err}") from err


def _stage(raw, path) -> FunnelStageParams:
    try:
        return FunnelStageParams(
            kappa=_number(_need(raw, "kappa", path), f"{path}.kappa"),
            p=_vector(_need(raw, "p", path), f"{path}.p"),
            q=_vector(_need(raw, "q", path), f"{path}.q"),
            mu=_vector(_need(raw, "mu", path), f"{path}.mu"),
        )
    except ValueError as err:
        if isinstance(err, ScenarioFormatError):
            raise
        raise ScenarioFormatError(f"{path}: {err}") from err


def parse_scenario(raw: dict, name: str, default_seed: int = 0) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioFormatError("top level: expected a mapping")

    sets_raw = _need(raw, "sets", "top level")
    try:
        sets = SetSpec(
            s=_vector(_need(sets_raw, "s", "sets"), "sets.s"),
            d_s=_number(_need(sets_raw, "d_S", "sets"), "sets.d_S"),
            eta=_vector(_need(sets_raw, "eta", "sets"), "sets.eta"),
            d_t=_number(_need(sets_raw, "d_T", "sets"), "sets.d_T"),
        )
    except ValueError as err:
        if isinstance(err, ScenarioFormatError):
            raise
        raise ScenarioFormatError(f"sets: {err}") from err

    tube_raw = _need(raw, "tube", "top level")
    try:
        gains = TubeGains(
            k1=_number(_need(tube_raw, "k1", "tube"), "tube.k1"),
            nu=_number(_need(tube_raw, "nu", "tube"), "tube.nu"),
            r_min=_number(_need(tube_raw, "r_min", "tube"), "tube.r_min"),
            r_max=_number(_need(tube_raw, "r_max", "tube"), "tube.r_max"),
        )
    except ValueError as err:
        if isinstance(err, ScenarioFormatError):
            raise
        raise ScenarioFormatError(f"tube: {err}") from err
    dt = _number(_need(tube_raw, "dt", "tube"), "tube.dt")

    obstacles_raw = raw.get("obstacles") or []
    if not isinstance(obstacles_raw, (list, tuple)):
        raise ScenarioFormatError("obstacles: expected a list")
    obstacles = tuple(
        _obstacle(o, f"obstacles[{j}]") for j, o in enumerate(obstacles_raw)
    )
    try:
        world = World(obstacles=obstacles, dim=len(sets.s))
    except ValueError as err:
        raise ScenarioFormatError(f"obstacles: {err}") from err

    ctrl_raw = _need(raw, "controller", "top level")
    stages = None
    if ctrl_raw.get("stages") is not None:
        stages_raw = ctrl_raw["stages"]
        if not isinstance(stages_raw, (list, tuple)):
            raise ScenarioFormatError("controller.stages: expected a list")
        stages = tuple(
            _stage(s, f"controller.stages[{i}]") for i, s in enumerate(stages_raw)
        )
    stage_kappas = ()
    if ctrl_raw.get("stage_kappas") is not None:
        stage_kappas = tuple(
            _number(v, f"controller.stage_kappas[{i}]")
            for i, v in enumerate(ctrl_raw["stage_kappas"])
        )
    controller = ControllerSetup(
        kappa1=_number(_need(ctrl_raw, "kappa1", "controller"), "controller.kappa1"),
        stages=stages,
        stage_kappas=stage_kappas,
    )

    plant_raw = _need(raw, "plant", "top level")
    kind = _need(plant_raw, "kind", "plant")
    n_stages = int(_number(_need(plant_raw, "stages", "plant"), "plant.stages"))
    bound_raw = _need(plant_raw, "disturbance_bound", "plant")
    if isinstance(bound_raw, (int, float)) and not isinstance(bound_raw, bool):
        bounds = (float(bound_raw),) * n_stages
    else:
        bounds = tuple(
            _number(v, f"plant.disturbance_bound[{i}]") for i, v in enumerate(bound_raw)
        )
    try:
        plant = PlantSpec(
            kind=kind,
            dim=int(_number(_need(plant_raw, "dim", "plant"), "plant.dim")),
            stages=n_stages,
            disturbance_bound=bounds,
            initial_state=_vector(
                _need(plant_raw, "initial_state", "plant"), "plant.initial_state"
            ),
        )
    except ValueError as err:
        if isinstance(err, ScenarioFormatError):
            raise
        raise ScenarioFormatError(f"plant: {err}") from err

    run_raw = _need(raw, "run", "top level")
    stay = run_raw.get("stay_window")
    derivative_bound = run_raw.get("derivative_bound")
    seed = run_raw.get("seed")
    return Scenario(
        name=name,
        sets=sets,
        world=world,
        tube_gains=gains,
        controller=controller,
        plant=plant,
        dt=dt,
        horizon=_number(_need(run_raw, "horizon", "run"), "run.horizon"),
        stay_window=None if stay is None else _number(stay, "run.stay_window"),
        seed=default_seed if seed is None else int(_number(seed, "run.seed")),
        derivative_bound_assert=(
            None if derivative_bound is None else _number(derivative_bound, "run.derivative_bound")
        ),
        disturbance_correlation_time=_number(
            plant_raw.get("correlation_time", 1.0), "plant.correlation_time"
        ),
    )


def load_scenario(path, seed_override: int | None = None, default_seed: int = 0) -> Scenario:
    """Load a scenario file.

    `default_seed` fills in when the file omits run.seed (the CLI passes
    the STTK_SEED environment fallback there); `seed_override` replaces
    the seed unconditionally (the --seed flag)."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as err:
        raise ScenarioFormatError(f"{path}: YAML parse failure: {err}") from err
    scenario = parse_scenario(raw, name=path.stem, default_seed=default_seed)
    if seed_override is not None:
        scenario = dataclasses.replace(scenario, seed=int(seed_override))
    return scenario
