"""Tube-evolution frames: obstacle uncertainty regions, the tube ball,
the trajectory trace and the task sets, one image per requested time."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle

from .data import Scene, Trajectory, read_scene, read_trajectory
from .fields import q_hat_grid, scene_bounds

# red shades, outermost (activation threshold) to innermost (deep collision)
_REGION_COLORS = ("#ffd6d6", "#ff9d9d", "#e05252")


@dataclass
class PlotSpec:
    """What to render: which log, which scenario, at which times.

    levels: per-frame avoidance sub-level thresholds, strictly decreasing
    (defaults to each obstacle's activation threshold, its avoidance floor
    and 0.7).  grid: level-set evaluation resolution per axis."""

    log_path: str
    scenario_path: str
    frame_times: list[float] | None = None
    n_frames: int = 6
    fps: float | None = None
    levels: tuple[float, ...] | None = None
    grid: int = 300
    out_dir: str = "frames"

    def load(self) -> tuple[Trajectory, Scene]:
        return read_trajectory(self.log_path), read_scene(self.scenario_path)


def obstacle_levels(spec: PlotSpec, obs) -> tuple[float, ...]:
    levels = spec.levels if spec.levels is not None else (obs.p_d, obs.epsilon, 0.7)
    if any(a <= b for a, b in zip(levels, levels[1:])):
        raise ValueError(
            f"levels must be strictly decreasing in avoidance probability, got {levels}"
        )
    return levels


def _frame_indices(traj: Trajectory, spec: PlotSpec) -> list[int]:
    if spec.frame_times:
        return [int(np.argmin(np.abs(traj.t - ft))) for ft in spec.frame_times]
    return list(np.unique(np.linspace(0, len(traj.t) - 1, spec.n_frames).round().astype(int)))


def _draw_frame_2d(ax, traj: Trajectory, scene: Scene, spec: PlotSpec, k: int):
    t = traj.t[k]
    lo, hi = scene_bounds(scene, traj.c)
    xs = np.linspace(lo[0], hi[0], spec.grid)
    ys = np.linspace(lo[1], hi[1], spec.grid)
    for obs in scene.obstacles:
        levels = obstacle_levels(spec, obs)
        q = q_hat_grid(obs, t, xs, ys)
        # shade {q_hat <= level}, outermost level first
        for level, color in zip(levels, _REGION_COLORS):
            ax.contourf(xs, ys, q, levels=[-1.0, level], colors=[color], alpha=0.8)
        ax.contour(xs, ys, q, levels=[obs.epsilon], colors="#b03030", linewidths=0.8)
        mu = obs.mean_at(t)
        ax.plot(*mu, "x", color="#701010", markersize=5)
        ax.add_patch(Circle(mu, obs.radius_at(t), fill=False, color="#701010", lw=0.8))

    ax.add_patch(Circle(scene.s, scene.d_s, fill=False, color="tab:blue", lw=1.2))
    ax.add_patch(Circle(scene.eta, scene.d_t, fill=False, color="tab:green", lw=1.2))
    ax.plot(*scene.eta, "*", color="tab:green", markersize=10)
    ax.plot(traj.y[: k + 1, 0], traj.y[: k + 1, 1], "-", color="black", lw=1.0)
    ax.add_patch(Circle(traj.c[k], traj.r[k], fill=False, color="tab:blue", lw=1.6))
    ax.plot(*traj.c[k], ".", color="tab:blue")
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    ax.set_title(f"t = {t:.2f} s")


def _sphere(ax, center, radius, color, alpha):
    u = np.linspace(0, 2 * np.pi, 24)
    v = np.linspace(0, np.pi, 16)
    x = center[0] + radius * np.outer(np.cos(u), np.sin(v))
    y = center[1] + radius * np.outer(np.sin(u), np.sin(v))
    z = center[2] + radius * np.outer(np.ones_like(u), np.cos(v))
    ax.plot_surface(x, y, z, color=color, alpha=alpha, linewidth=0)


def _draw_frame_3d(ax, traj: Trajectory, scene: Scene, k: int):
    t = traj.t[k]
    sigmas = [obs.sigma_at(t) for obs in scene.obstacles]
    smax = max(sigmas) if sigmas else 1.0
    for obs, sigma in zip(scene.obstacles, sigmas):
        # darker red = more uncertain
        shade = 0.25 + 0.75 * (sigma / smax)
        _sphere(ax, obs.mean_at(t), obs.radius_at(t), (shade, 0.1, 0.1), 0.45)
    _sphere(ax, traj.c[k], traj.r[k], "tab:blue", 0.25)
    _sphere(ax, scene.eta, scene.d_t, "tab:green", 0.12)
    ax.plot(traj.y[: k + 1, 0], traj.y[: k + 1, 1], traj.y[: k + 1, 2],
            "-", color="black", lw=1.0)
    ax.set_title(f"t = {t:.2f} s")


def render_frames(spec: PlotSpec) -> list[Path]:
    """Render one PNG per requested frame time; returns the written paths."""
    traj, scene = spec.load()
    if traj.dim not in (2, 3):
        raise ValueError(
            f"unsupported dimension {traj.dim}: frame rendering handles 2D and 3D only"
        )
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for frame_no, k in enumerate(_frame_indices(traj, spec)):
        if traj.dim == 2:
            fig, ax = plt.subplots(figsize=(7, 7))
            _draw_frame_2d(ax, traj, scene, spec, k)
        else:
            fig = plt.figure(figsize=(7, 7))
            ax = fig.add_subplot(projection="3d")
            _draw_frame_3d(ax, traj, scene, k)
        path = out_dir / f"frame_{frame_no:04d}.png"
        fig.savefig(path, dpi=110, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def render_animation(spec: PlotSpec, out_path: str) -> Path | None:
    """GIF of the run when an encoder is available; returns None (with a
    notice) otherwise."""
    from matplotlib.animation import FuncAnimation, PillowWriter

    traj, scene = spec.load()
    if traj.dim != 2:
        raise ValueError("animation supports 2D logs only")
    fps = spec.fps or 10.0
    idx = np.unique(
        np.linspace(0, len(traj.t) - 1, max(int(fps * traj.t[-1]), 2)).round().astype(int)
    )
    fig, ax = plt.subplots(figsize=(6, 6))

    def draw(i):
        ax.clear()
        _draw_frame_2d(ax, traj, scene, spec, int(idx[i]))

    anim = FuncAnimation(fig, draw, frames=len(idx))
    out = Path(out_path)
    try:
        anim.save(out, writer=PillowWriter(fps=fps))
    except (ImportError, RuntimeError) as err:
        print(f"animation encoder unavailable ({err}); skipped")
        plt.close(fig)
        return None
    plt.close(fig)
    return out
