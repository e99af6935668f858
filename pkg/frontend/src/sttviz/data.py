"""Input parsing: trajectory logs (JSON-lines) and scenario files (YAML).

Only the fields the plots need are extracted; unknown keys are ignored so
the formats can grow without breaking the viewer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

LOG_FORMAT = "sttk-log"
LOG_VERSION = 1


@dataclass
class Trajectory:
    meta: dict
    t: np.ndarray          # (steps,)
    c: np.ndarray          # (steps, n) tube center
    r: np.ndarray          # (steps,) tube radius
    y: np.ndarray          # (steps, n) plant output
    q: np.ndarray          # (steps, n_obstacles)
    d_hat: np.ndarray      # (steps, n_obstacles)
    theta: np.ndarray      # (steps, n_obstacles)
    status: str = "unknown"
    t_reach: float | None = None

    @property
    def dim(self) -> int:
        return self.c.shape[1]


def read_trajectory(path) -> Trajectory:
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty log")
    header = json.loads(lines[0])
    if header.get("format") != LOG_FORMAT or header.get("version") != LOG_VERSION:
        raise ValueError(f"{path}: expected {LOG_FORMAT} v{LOG_VERSION}")
    t, c, r, y, q, dh, th = [], [], [], [], [], [], []
    status, t_reach = "unknown", None
    for line in lines[1:]:
        obj = json.loads(line)
        if obj.get("end"):
            status = obj.get("status", "unknown")
            t_reach = obj.get("t_reach")
            continue
        t.append(obj["t"])
        c.append(obj["c"])
        r.append(obj["r"])
        y.append(obj["y"])
        obs = obj.get("obs", [])
        q.append([o[0] for o in obs])
        dh.append([o[1] for o in obs])
        th.append([o[2] for o in obs])
    return Trajectory(
        meta=header,
        t=np.array(t),
        c=np.array(c),
        r=np.array(r),
        y=np.array(y),
        q=np.array(q),
        d_hat=np.array(dh),
        theta=np.array(th),
        status=status,
        t_reach=t_reach,
    )


@dataclass
class ObstacleSpec:
    times: np.ndarray       # waypoint times
    points: np.ndarray      # waypoint positions (m, n)
    sigma: object           # scalar or [[t, v], ...] profile
    r_o: object
    epsilon: float
    p_d: float

    def mean_at(self, t: float) -> np.ndarray:
        return _interp_path(self.times, self.points, t)

    def sigma_at(self, t: float) -> float:
        return _interp_profile(self.sigma, t)

    def radius_at(self, t: float) -> float:
        return _interp_profile(self.r_o, t)


@dataclass
class Scene:
    s: np.ndarray
    d_s: float
    eta: np.ndarray
    d_t: float
    r_min: float
    r_max: float
    nu: float
    obstacles: list[ObstacleSpec] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.s)


def _interp_path(times, points, t):
    t = float(np.clip(t, times[0], times[-1]))
    out = np.array(
        [np.interp(t, times, points[:, k]) for k in range(points.shape[1])]
    )
    return out


def _interp_profile(profile, t):
    if isinstance(profile, (int, float)):
        return float(profile)
    arr = np.asarray(profile, dtype=float)
    return float(np.interp(t, arr[:, 0], arr[:, 1]))


def read_scene(path) -> Scene:
    raw = yaml.safe_load(Path(path).read_text())
    sets = raw["sets"]
    tube = raw["tube"]
    obstacles = []
    for o in raw.get("obstacles") or []:
        wp = np.asarray(o["waypoints"], dtype=float)
        obstacles.append(
            ObstacleSpec(
                times=wp[:, 0],
                points=wp[:, 1:],
                sigma=o["sigma"],
                r_o=o["r_o"],
                epsilon=float(o["epsilon"]),
                p_d=float(o["p_d"]),
            )
        )
    return Scene(
        s=np.asarray(sets["s"], dtype=float),
        d_s=float(sets["d_S"]),
        eta=np.asarray(sets["eta"], dtype=float),
        d_t=float(sets["d_T"]),
        r_min=float(tube["r_min"]),
        r_max=float(tube["r_max"]),
        nu=float(tube["nu"]),
        obstacles=obstacles,
    )
