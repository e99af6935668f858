"""Radius timeline: the tube radius against its clearance aggregate and
the configured radius band."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .data import read_scene, read_trajectory
from .fields import soft_min


def render_radius_timeline(log_path, scenario_path, out_path) -> Path:
    traj = read_trajectory(log_path)
    scene = read_scene(scenario_path)

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(traj.t, traj.r, color="tab:blue", lw=1.4, label="tube radius r(t)")
    if traj.d_hat.size:
        d = soft_min(traj.d_hat, scene.nu)
        ax.plot(traj.t, np.minimum(d, 1.5 * scene.r_max), color="tab:orange", lw=1.0,
                label="clearance soft-min d(t) (clipped)")
    ax.axhline(scene.r_max, color="gray", ls="--", lw=0.9, label="r_max")
    ax.axhline(scene.r_min, color="gray", ls=":", lw=0.9, label="r_min")
    if traj.t_reach is not None:
        ax.axvline(traj.t_reach, color="tab:green", ls="--", lw=0.9, label="reach")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("radius [m]")
    ax.set_ylim(0.0, 1.6 * scene.r_max)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    out = Path(out_path)
    fig.savefig(out, dpi=110)
    plt.close(fig)
    return out
