"""Trajectory log serialization.

Native format: one JSON object per line — a versioned header, one record
per step (with a variable-width per-obstacle block), and a footer with
the run verdict and events.  Floats are emitted in shortest round-trip
form, so identical runs produce identical bytes and re-imports are exact.
CSV is a flat export of the output-facing columns, not the native format.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .engine import StepRecord, TrajectoryLog

FORMAT_NAME = "sttk-log"
VERSION = 1


def _floats(arr) -> list[float]:
    return [float(v) for v in np.asarray(arr).ravel()]


def write_log(log: TrajectoryLog, path) -> None:
    header = {"format": FORMAT_NAME, "version": VERSION}
    header.update(log.meta)
    lines = [json.dumps(header, separators=(",", ":"))]
    for rec in log.records:
        obs = [
            [float(q), float(dh), float(th)]
            for q, dh, th in zip(rec.q, rec.d_hat, rec.theta)
        ]
        lines.append(
            json.dumps(
                {
                    "t": float(rec.t),
                    "c": _floats(rec.c),
                    "r": float(rec.r),
                    "y": _floats(rec.y),
                    "x": _floats(rec.xbar),
                    "u": _floats(rec.u),
                    "obs": obs,
                },
                separators=(",", ":"),
            )
        )
    footer = {
        "end": True,
        "status": log.status,
        "t_reach": log.t_reach,
        "t_final_entry": log.t_final_entry,
        "stayed": log.stayed,
        "events": [[int(i), kind, detail] for i, kind, detail in log.events],
    }
    lines.append(json.dumps(footer, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n")


def read_log(path) -> TrajectoryLog:
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"{path}: empty log file")
    header = json.loads(text[0])
    if header.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not a {FORMAT_NAME} file")
    if header.get("version") != VERSION:
        raise ValueError(f"{path}: unsupported log version {header.get('version')}")
    meta = {k: v for k, v in header.items() if k not in ("format", "version")}

    log = TrajectoryLog(meta=meta)
    footer = None
    for line in text[1:]:
        obj = json.loads(line)
        if obj.get("end"):
            footer = obj
            continue
        obs = obj.get("obs", [])
        log.records.append(
            StepRecord(
                t=obj["t"],
                c=np.array(obj["c"]),
                r=obj["r"],
                y=np.array(obj["y"]),
                xbar=np.array(obj["x"]),
                u=np.array(obj["u"]),
                q=np.array([o[0] for o in obs]),
                d_hat=np.array([o[1] for o in obs]),
                theta=np.array([o[2] for o in obs]),
            )
        )
    if footer is not None:
        log.status = footer.get("status", "completed")
        log.t_reach = footer.get("t_reach")
        log.t_final_entry = footer.get("t_final_entry")
        log.stayed = bool(footer.get("stayed", False))
        log.events = [(int(i), k, d) for i, k, d in footer.get("events", [])]
    else:
        log.status = "truncated"
    return log


def csv_header(dim: int, n_obstacles: int) -> list[str]:
    cols = ["t"]
    cols += [f"c_{i + 1}" for i in range(dim)]
    cols += ["r"]
    cols += [f"y_{i + 1}" for i in range(dim)]
    cols += [f"u_{i + 1}" for i in range(dim)]
    for j in range(1, n_obstacles + 1):
        cols += [f"q_{j}", f"dhat_{j}", f"theta_{j}"]
    return cols


def export_csv(log: TrajectoryLog, path) -> None:
    dim = int(log.meta["dim"])
    n_obstacles = int(log.meta["n_obstacles"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(dim, n_obstacles))
        for rec in log.records:
            row = [repr(float(rec.t))]
            row += [repr(v) for v in _floats(rec.c)]
            row += [repr(float(rec.r))]
            row += [repr(v) for v in _floats(rec.y)]
            row += [repr(v) for v in _floats(rec.u)]
            for q, dh, th in zip(rec.q, rec.d_hat, rec.theta):
                row += [repr(float(q)), repr(float(dh)), repr(float(th))]
            writer.writerow(row)


def import_csv(path) -> tuple[list[str], np.ndarray]:
    """Read an exported CSV back into (header, value matrix); floats parse
    exactly thanks to the shortest round-trip printing."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        values = np.array([[float(v) for v in row] for row in reader])
    return header, values
