"""Command-line entry point.

Subcommands: validate, run, verify, export.  Scenario arguments accept
either a file path or the name of a bundled scenario.  Exit codes:
0 success, 1 usage/parse/validation failure, 2 invariant violation
(failed run or failed verification), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .engine import run as run_scenario
from .engine import validate as validate_scenario
from .logio import export_csv, read_log, write_log
from .scenario_io import ScenarioFormatError, load_scenario
from .verify import VerificationReport, audit, mc_avoidance

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2
EXIT_NUMERICS = 3


def bundled_scenarios() -> list[str]:
    base = resources.files("sttk") / "scenarios"
    return sorted(p.name[: -len(".yaml")] for p in base.iterdir() if p.name.endswith(".yaml"))


def resolve_scenario_path(spec: str) -> Path:
    p = Path(spec)
    if p.exists():
        return p
    candidate = resources.files("sttk") / "scenarios" / f"{spec}.yaml"
    if candidate.is_file():
        return Path(str(candidate))
    raise ScenarioFormatError(
        f"{spec}: no such scenario file or bundled scenario "
        f"(bundled: {', '.join(bundled_scenarios())})"
    )


def _default_seed() -> int | None:
    raw = os.environ.get("STTK_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        print(f"STTK_SEED={raw!r} is not an integer", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load(spec: str, seed_flag: int | None):
    path = resolve_scenario_path(spec)
    return load_scenario(
        path, seed_override=seed_flag, default_seed=_default_seed() or 0
    )


def cmd_validate(args) -> int:
    try:
        scenario = _load(args.scenario, None)
    except ScenarioFormatError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_USAGE
    problems = validate_scenario(scenario)
    if problems:
        print(f"{scenario.name}: {len(problems)} violation(s)")
        for p in problems:
            print(f"  - {p}")
        return EXIT_USAGE
    print(f"{scenario.name}: valid")
    return EXIT_OK


def _run_one(scenario, out_path: Path) -> int:
    problems = validate_scenario(scenario)
    if problems:
        print(f"{scenario.name}: invalid, no log written", file=sys.stderr)
        for p in problems:
            print(f"  - {p}", file=sys.stderr)
        return EXIT_USAGE
    log = run_scenario(scenario)
    write_log(log, out_path)
    reach = "t_reach=%.6g" % log.t_reach if log.t_reach is not None else "target not reached"
    print(
        f"{scenario.name}: {log.status}, {len(log.records)} records, {reach}, "
        f"stayed={log.stayed} -> {out_path}"
    )
    if log.status == "completed":
        return EXIT_OK
    if "numerical_blowup" in log.status:
        return EXIT_NUMERICS
    return EXIT_VIOLATION


def cmd_run(args) -> int:
    try:
        if args.all:
            directory = Path(args.scenario)
            if not directory.is_dir():
                print(f"{directory}: not a directory", file=sys.stderr)
                return EXIT_USAGE
            out_dir = Path(args.out) if args.out else directory
            out_dir.mkdir(parents=True, exist_ok=True)
            worst = EXIT_OK
            for path in sorted(directory.glob("*.yaml")):
                scenario = load_scenario(path, default_seed=_default_seed() or 0)
                scenario = _apply_overrides(scenario, args)
                code = _run_one(scenario, out_dir / f"{path.stem}.log")
                worst = max(worst, code)
            return worst
        scenario = _apply_overrides(_load(args.scenario, args.seed), args)
        out = Path(args.out) if args.out else Path(f"{scenario.name}.log")
        return _run_one(scenario, out)
    except ScenarioFormatError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_USAGE


def _apply_overrides(scenario, args):
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = int(args.seed)
    if getattr(args, "dt", None) is not None:
        updates["dt"] = float(args.dt)
    if getattr(args, "horizon", None) is not None:
        updates["horizon"] = float(args.horizon)
    return dataclasses.replace(scenario, **updates) if updates else scenario


def _render_report(title: str, reports: list[tuple[str, VerificationReport]]) -> str:
    lines = [f"# sttk verification report: {title}"]
    overall = all(rep.all_passed for _, rep in reports)
    lines.append(f"# overall: {'PASS' if overall else 'FAIL'}")
    body = {"title": title, "overall_pass": overall, "sections": []}
    for section, rep in reports:
        lines.append(f"# [{section}]")
        sec = {"name": section, "mc_settings": rep.mc_settings, "checks": []}
        for c in rep.checks:
            flag = "PASS" if c.passed else "FAIL"
            lines.append(
                f"#   [{flag}] {c.name}: statistic={c.statistic:.6g} "
                f"threshold={c.threshold:.6g} margin={c.margin:.6g}"
                + (f" ({c.detail})" if c.detail else "")
            )
            sec["checks"].append(dataclasses.asdict(c))
        body["sections"].append(sec)
    lines.append(json.dumps(body, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def cmd_verify(args) -> int:
    try:
        scenario = _load(args.scenario, None)
    except ScenarioFormatError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        log = read_log(args.log)
    except (OSError, ValueError) as err:
        print(f"log error: {err}", file=sys.stderr)
        return EXIT_USAGE
    seed = args.seed if args.seed is not None else scenario.seed
    reports = [("audit", audit(log, scenario))]
    if scenario.world.obstacles:
        reports.append(
            (
                "monte_carlo",
                mc_avoidance(
                    log, scenario.world, samples=args.samples, times=args.times, seed=seed
                ),
            )
        )
    text = _render_report(f"{scenario.name} / {args.log}", reports)
    out = Path(args.out) if args.out else Path(f"{args.log}.report")
    out.write_text(text)
    sys.stdout.write(text)
    print(f"report -> {out}")
    return EXIT_OK if all(rep.all_passed for _, rep in reports) else EXIT_VIOLATION


def cmd_export(args) -> int:
    try:
        log = read_log(args.log)
    except (OSError, ValueError) as err:
        print(f"log error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if args.format != "csv":
        print(f"unsupported format {args.format!r}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out) if args.out else Path(args.log).with_suffix(".csv")
    export_csv(log, out)
    print(f"{len(log.records)} records -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sttk",
        description=(
            "Spatiotemporal tube synthesis, funnel control and probabilistic "
            "verification for reach-avoid-stay tasks among uncertain moving obstacles."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file without running it")
    p.add_argument("scenario", help="scenario file or bundled scenario name")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate a scenario and write a trajectory log")
    p.add_argument("scenario", help="scenario file, bundled name, or directory with --all")
    p.add_argument("--out", help="log output path (default <scenario>.log)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--dt", type=float, help="override the integration step")
    p.add_argument("--horizon", type=float, help="override the simulated horizon")
    p.add_argument("--all", action="store_true", help="run every *.yaml in a directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="audit a log and Monte-Carlo check avoidance")
    p.add_argument("log", help="trajectory log file")
    p.add_argument("scenario", help="scenario file or bundled name the log came from")
    p.add_argument("--samples", type=int, default=100_000, help="MC samples per instant")
    p.add_argument("--times", type=int, default=100, help="number of sampled instants")
    p.add_argument("--seed", type=int, help="MC seed (default: scenario seed)")
    p.add_argument("--out", help="report output path (default <log>.report)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="export a trajectory log")
    p.add_argument("log", help="trajectory log file")
    p.add_argument("--format", default="csv", help="export format (csv)")
    p.add_argument("--out", help="output path (default <log>.csv)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("scenarios", help="list bundled scenarios")
    p.set_defaults(func=lambda a: (print("\n".join(bundled_scenarios())), EXIT_OK)[1])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
