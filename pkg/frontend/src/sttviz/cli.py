"""Command line: render frames, an animation, or the radius timeline.

Usage:
    sttviz frames LOG SCENARIO [--out-dir DIR] [--n-frames N | --times t1 t2 ...]
    sttviz animate LOG SCENARIO [--out GIF] [--fps FPS]
    sttviz radius LOG SCENARIO [--out PNG]
"""

from __future__ import annotations

import argparse
import sys

from .frames import PlotSpec, render_animation, render_frames
from .timeline import render_radius_timeline


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sttviz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("frames", help="render tube-evolution frames")
    p.add_argument("log")
    p.add_argument("scenario")
    p.add_argument("--out-dir", default="frames")
    p.add_argument("--n-frames", type=int, default=6)
    p.add_argument("--times", type=float, nargs="+")
    p.add_argument("--grid", type=int, default=300)
    p.add_argument("--levels", type=float, nargs="+")

    p = sub.add_parser("animate", help="render a GIF of the run")
    p.add_argument("log")
    p.add_argument("scenario")
    p.add_argument("--out", default="run.gif")
    p.add_argument("--fps", type=float, default=10.0)
    p.add_argument("--grid", type=int, default=150)

    p = sub.add_parser("radius", help="render the radius timeline")
    p.add_argument("log")
    p.add_argument("scenario")
    p.add_argument("--out", default="radius.png")

    args = parser.parse_args(argv)
    try:
        if args.command == "frames":
            spec = PlotSpec(
                log_path=args.log,
                scenario_path=args.scenario,
                frame_times=args.times,
                n_frames=args.n_frames,
                grid=args.grid,
                levels=tuple(args.levels) if args.levels else None,
                out_dir=args.out_dir,
            )
            written = render_frames(spec)
            print(f"{len(written)} frames -> {args.out_dir}")
        elif args.command == "animate":
            spec = PlotSpec(log_path=args.log, scenario_path=args.scenario,
                            fps=args.fps, grid=args.grid)
            out = render_animation(spec, args.out)
            print(f"animation -> {out}" if out else "animation skipped")
        else:
            out = render_radius_timeline(args.log, args.scenario, args.out)
            print(f"radius timeline -> {out}")
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
