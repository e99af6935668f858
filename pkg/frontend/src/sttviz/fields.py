"""Pointwise avoidance-probability fields, recomputed from the scenario.

The clear-the-obstacle probability of a point x against a Gaussian-center
obstacle is 1 - F((r_o/sigma)^2; n, |x - mu|^2/sigma^2) with F the
noncentral chi-squared CDF (scipy's implementation here, independent of
the simulator's own)."""

from __future__ import annotations

import numpy as np
from scipy.stats import ncx2

from .data import ObstacleSpec, Scene


def q_hat_grid(obs: ObstacleSpec, t: float, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Probability that each 2D grid point clears the obstacle ball."""
    mu = obs.mean_at(t)
    sigma = obs.sigma_at(t)
    r_o = obs.radius_at(t)
    gx, gy = np.meshgrid(xs, ys)
    lam = ((gx - mu[0]) ** 2 + (gy - mu[1]) ** 2) / sigma**2
    return 1.0 - ncx2.cdf((r_o / sigma) ** 2, 2, lam)


def q_hat_points(obs: ObstacleSpec, t: float, points: np.ndarray) -> np.ndarray:
    mu = obs.mean_at(t)
    sigma = obs.sigma_at(t)
    r_o = obs.radius_at(t)
    points = np.atleast_2d(points)
    lam = np.sum((points - mu) ** 2, axis=1) / sigma**2
    return 1.0 - ncx2.cdf((r_o / sigma) ** 2, len(mu), lam)


def scene_bounds(scene: Scene, trajectory_points: np.ndarray, pad: float = 0.8):
    """Bounding box covering the sets, the trajectory and every obstacle
    waypoint."""
    pts = [scene.s[None, :2], scene.eta[None, :2], trajectory_points[:, :2]]
    for obs in scene.obstacles:
        pts.append(obs.points[:, :2])
    allpts = np.vstack(pts)
    lo = allpts.min(axis=0) - pad
    hi = allpts.max(axis=0) + pad
    return lo, hi


def soft_min(values: np.ndarray, nu: float) -> np.ndarray:
    """Row-wise log-sum-exp soft minimum (the radius law's aggregation)."""
    values = np.atleast_2d(values)
    m = values.min(axis=1)
    return m - np.log(np.exp(-nu * (values - m[:, None])).sum(axis=1)) / nu
