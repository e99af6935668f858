#!/usr/bin/env python3
"""Deterministic generator for the bundled 50-obstacle scenario.

Obstacle positions, headings, uncertainty levels and avoidance floors are
drawn from a fixed stream; candidates whose clamped endpoint leaves the
arena, parks on the goal, or starts too close to the start point (initial
avoidance margin below 0.02) are rejected.  Rerun to regenerate the YAML:

    python tools/gen_sim50.py > src/sttk/scenarios/paper_2d_sim50.yaml
"""

import numpy as np

from sttk.world import PiecewisePath, UncertainObstacle, q_center, snapshot

LAYOUT_SEED = 404
S = np.array([0.5, 0.5])
ETA = np.array([9.0, 9.0])
R_MIN = 0.1
PATH_SPAN = 70.0
RUN_HORIZON = 45.0


def generate():
    rng = np.random.default_rng(LAYOUT_SEED)
    rows = []
    while len(rows) < 50:
        pos = rng.uniform(1.2, 8.8, size=2)
        ang = rng.uniform(0, 2 * np.pi)
        speed = rng.uniform(0.0, 0.10)
        vel = speed * np.array([np.cos(ang), np.sin(ang)])
        end = pos + vel * PATH_SPAN
        if np.any(end < 0.6) or np.any(end > 9.4):
            continue
        if np.linalg.norm(end - ETA) < 1.5 or np.linalg.norm(pos - ETA) < 1.5:
            continue
        sigma = float(rng.uniform(0.05, 0.15))
        eps = float(rng.uniform(0.70, 0.95))
        obs = UncertainObstacle(
            mean_motion=PiecewisePath([0.0, PATH_SPAN], [pos.tolist(), end.tolist()]),
            sigma_profile=PiecewisePath.constant(sigma),
            radius_profile=PiecewisePath.constant(0.25),
            epsilon=eps,
            p_d=0.99,
            k2=0.4,
            k3=0.8,
        )
        if q_center(S, snapshot(obs, 0.0), R_MIN) <= eps + 0.02:
            continue
        rows.append((pos, end, sigma, eps))
    return rows


def emit(rows):
    print("# Cluttered-field case: 50 obstacles with randomized positions,")
    print("# headings, uncertainty levels and avoidance floors (generated by")
    print(f"# tools/gen_sim50.py, layout seed {LAYOUT_SEED}).")
    print("sets:")
    print("  s: [0.5, 0.5]")
    print("  d_S: 1.0")
    print("  eta: [9.0, 9.0]")
    print("  d_T: 1.0")
    print("tube:")
    print("  k1: 0.35")
    print("  nu: 40.0")
    print("  r_min: 0.1")
    print("  r_max: 0.8")
    print("  dt: 0.005")
    print("obstacles:")
    for pos, end, sigma, eps in rows:
        print(
            f"  - waypoints: [[0.0, {float(pos[0])!r}, {float(pos[1])!r}], "
            f"[{PATH_SPAN}, {float(end[0])!r}, {float(end[1])!r}]]"
        )
        print(f"    sigma: {sigma!r}")
        print("    r_o: 0.25")
        print(f"    epsilon: {eps!r}")
        print("    p_d: 0.99")
        print("    k2: 0.4")
        print("    k3: 0.8")
    print("controller:")
    print("  kappa1: 4.0")
    print("plant:")
    print("  kind: single_integrator")
    print("  dim: 2")
    print("  stages: 1")
    print("  disturbance_bound: 0.02")
    print("  initial_state: [0.52, 0.45]")
    print("run:")
    print(f"  horizon: {RUN_HORIZON}")
    print("  seed: 3")


if __name__ == "__main__":
    emit(generate())
