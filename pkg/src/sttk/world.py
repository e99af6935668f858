"""Time-varying Gaussian-uncertain obstacles and pointwise queries.

Each obstacle is a ball of known radius whose center is only known through
a Gaussian distribution: mean following a waypoint path, isotropic standard
deviation following a piecewise-linear profile.  All avoidance-probability
queries reduce to noncentral chi-squared evaluations of the normalized
squared distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ncx2 import Ncx2Params, ncx2_cdf, ncx2_quantile


class PiecewisePath:
    """Piecewise-linear interpolant over (time, value) breakpoints.

    Values clamp to the endpoints outside the breakpoint range.  The slope
    is the containing segment's slope, and zero at and beyond the final
    breakpoint (also before the first).
    """

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.times.ndim != 1 or len(self.times) == 0:
            raise ValueError("path needs at least one breakpoint")
        if len(self.times) != len(self.values):
            raise ValueError("times and values length mismatch")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("breakpoint times must be strictly increasing")

    @classmethod
    def constant(cls, value) -> "PiecewisePath":
        return cls([0.0], [value])

    def _segment(self, t: float) -> int:
        # index k with times[k] <= t < times[k+1]
        return int(np.searchsorted(self.times, t, side="right")) - 1

    def value(self, t: float):
        ts = self.times
        if len(ts) == 1 or t <= ts[0]:
            return np.array(self.values[0], copy=True)
        if t >= ts[-1]:
            return np.array(self.values[-1], copy=True)
        k = self._segment(t)
        w = (t - ts[k]) / (ts[k + 1] - ts[k])
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]

    def slope(self, t: float):
        ts = self.times
        zero = np.zeros_like(np.asarray(self.values[0], dtype=float))
        if len(ts) == 1 or t < ts[0] or t >= ts[-1]:
            return zero
        k = self._segment(t)
        return (self.values[k + 1] - self.values[k]) / (ts[k + 1] - ts[k])


@dataclass(frozen=True)
class ObstacleSnapshot:
    """Obstacle parameters evaluated at one time instant."""

    mu: np.ndarray
    sigma: float
    r_o: float
    mu_dot: np.ndarray
    sigma_dot: float

    def __post_init__(self):
        if self.sigma <= 0.0 or self.r_o <= 0.0:
            raise ValueError("snapshot needs sigma > 0 and r_o > 0")


@dataclass(frozen=True)
class UncertainObstacle:
    """Moving obstacle with Gaussian-uncertain center.

    mean_motion: waypoint path of the center mean (piecewise constant
    velocity).  sigma_profile / radius_profile: piecewise-linear standard
    deviation and obstacle radius.  epsilon: minimum avoidance probability;
    p_d: activation threshold for the repulsion term; k2 / k3: radial and
    tangential avoidance gains.
    """

    mean_motion: PiecewisePath
    sigma_profile: PiecewisePath
    radius_profile: PiecewisePath
    epsilon: float
    p_d: float
    k2: float
    k3: float

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not (self.epsilon < self.p_d <= 1.0):
            raise ValueError(
                f"p_d must lie in (epsilon, 1], got p_d={self.p_d}, epsilon={self.epsilon}"
            )
        if self.k2 <= 0.0 or self.k3 <= 0.0:
            raise ValueError("avoidance gains k2, k3 must be positive")
        if np.any(self.sigma_profile.values <= 0.0):
            raise ValueError("sigma profile must be positive everywhere")
        if np.any(self.radius_profile.values <= 0.0):
            raise ValueError("radius profile must be positive everywhere")

    @property
    def dim(self) -> int:
        return int(np.atleast_2d(self.mean_motion.values).shape[1])


@dataclass(frozen=True)
class World:
    """Immutable obstacle collection in an n-dimensional output space."""

    obstacles: tuple[UncertainObstacle, ...]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for j, obs in enumerate(self.obstacles):
            if obs.dim != self.dim:
                raise ValueError(
                    f"obstacle {j} has dimension {obs.dim}, world has {self.dim}"
                )


def snapshot(obstacle: UncertainObstacle, t: float) -> ObstacleSnapshot:
    """Evaluate an obstacle's parameters and their slopes at time t."""
    return ObstacleSnapshot(
        mu=np.atleast_1d(obstacle.mean_motion.value(t)),
        sigma=float(obstacle.sigma_profile.value(t)),
        r_o=float(obstacle.radius_profile.value(t)),
        mu_dot=np.atleast_1d(obstacle.mean_motion.slope(t)),
        sigma_dot=float(obstacle.sigma_profile.slope(t)),
    )


def noncentrality(x: np.ndarray, snap: ObstacleSnapshot) -> float:
    """Squared distance to the mean, normalized by the variance."""
    diff = np.asarray(x, dtype=float) - snap.mu
    return float(np.dot(diff, diff)) / (snap.sigma * snap.sigma)


def _avoid_probability(x, snap: ObstacleSnapshot, radius: float) -> float:
    lam = noncentrality(x, snap)
    arg = (radius / snap.sigma) ** 2
    return 1.0 - ncx2_cdf(arg, Ncx2Params(len(snap.mu), lam))


def q_center(x: np.ndarray, snap: ObstacleSnapshot, r_min: float) -> float:
    """Probability that x clears the obstacle's safety ball r_o + r_min."""
    if r_min <= 0.0:
        raise ValueError(f"r_min must be positive, got {r_min}")
    return _avoid_probability(x, snap, snap.r_o + r_min)


def q_hat_point(x: np.ndarray, snap: ObstacleSnapshot) -> float:
    """Probability that x clears the obstacle ball itself (no buffer)."""
    return _avoid_probability(x, snap, snap.r_o)


def d_hat(
    x: np.ndarray,
    snap: ObstacleSnapshot,
    epsilon: float,
    quantile_hint: float | None = None,
) -> float:
    """Clearance from x to the boundary where the collision probability
    with this obstacle reaches 1 - epsilon.  Negative deep inside the
    high-collision region; callers handle the sign."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    lam = noncentrality(x, snap)
    q = ncx2_quantile(
        1.0 - epsilon, Ncx2Params(len(snap.mu), lam), bracket_hint=quantile_hint
    )
    return snap.sigma * math.sqrt(q) - snap.r_o
