"""Command-line interface: ``nashflow run|verify|enumerate|basin|br|list-scenarios``.

Exit codes for ``run``: 0 converged, 10 cycle, 11 diverged, 12 max steps.
Any command exits 1 on bad input and 3 on an expression evaluation error.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import export
from .basin import InitialGrid, sweep
from .bestresponse import ArgmaxConfig, BestResponseSpec, br_map
from .dynamics import Converged, Cycle, Diverged, MaxStepsExceeded, simulate
from .equilibrium import NotComputableError, certify, certify_converged_point, enumerate_grid
from .expr import EvaluationError
from .game import ProfileError, check_profile
from .scenario import Scenario, ScenarioError, builtin_names, load_scenario

EXIT_CODES = {Converged: 0, Cycle: 10, Diverged: 11, MaxStepsExceeded: 12}
EXIT_INPUT = 1
EXIT_EVAL = 3


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _profile(s: Scenario, text: str | None) -> tuple[float, ...]:
    if text is None:
        if s.initial is None:
            raise UsageError(f"scenario {s.name!r} has no default initial profile; pass one")
        return check_profile(s.game, s.initial)
    return check_profile(s.game, _floats(text))


def _spec(s: Scenario, args) -> BestResponseSpec:
    return BestResponseSpec.for_game(s.game, "argmax" if args.argmax else "closed_form",
                                     ArgmaxConfig(grid_points=args.grid_points))


def _write(out: Path | None, name: str, text: str) -> str | None:
    if out is None:
        return None
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def parse_grid(text: str, n: int) -> InitialGrid:
    """``"0,50,100;0:100:5;50"``: one axis per player separated by ``;``. An axis is a
    comma list of values or ``min:max:count``. A single axis is reused for every player."""
    parts = [p.strip() for p in text.split(";")] if text.strip() else []
    if not parts or any(not p for p in parts):
        raise UsageError("empty grid specification")
    if len(parts) == 1:
        parts = parts * n
    axes = []
    for p in parts:
        if ":" in p:
            bits = p.split(":")
            if len(bits) != 3:
                raise UsageError(f"bad range axis {p!r}; use min:max:count")
            try:
                axes.append({"min": float(bits[0]), "max": float(bits[1]), "count": int(bits[2])})
            except ValueError:
                raise UsageError(f"bad range axis {p!r}") from None
        else:
            axes.append(_floats(p))
    return InitialGrid.from_axes(axes)


def cmd_run(args) -> int:
    s = load_scenario(args.scenario)
    spec = _spec(s, args)
    initial = _profile(s, args.initial)
    rule = s.rule(alpha=args.alpha, mode=args.mode)
    stop = s.stop(max_steps=args.steps, eps_converge=args.eps)
    t0 = time.perf_counter()
    traj, outcome = simulate(s.game, spec, initial, rule, stop)
    cert = certify_converged_point(s.game, spec, outcome)
    wall = time.perf_counter() - t0

    out = Path(args.out) if args.out else None
    traj_path = _write(out, "trajectory.csv", export.trajectory_csv(traj))
    if args.plot:
        if out is None:
            raise UsageError("--plot needs --out")
        _write(out, "trajectory.svg", export.trajectory_svg(traj, s.name))
    report = {
        "scenario": s.name,
        "rule": asdict(rule),
        "stop": asdict(stop),
        "initial": list(initial),
        "outcome": export.outcome_dict(outcome),
        "certificate": cert.to_dict() if cert else None,
        "trajectory": traj_path,
        "wall_time_s": wall,
    }
    text = export.dumps(report)
    _write(out, "report.json", text)
    sys.stdout.write(text)
    return EXIT_CODES[type(outcome)]


def cmd_verify(args) -> int:
    s = load_scenario(args.scenario)
    spec = _spec(s, args)
    cert = certify(s.game, spec, _profile(s, args.profile))
    sys.stdout.write(export.dumps({"scenario": s.name, **cert.to_dict()}))
    for note in cert.notes:
        print(f"warning: {note}", file=sys.stderr)
    return 0


def cmd_enumerate(args) -> int:
    s = load_scenario(args.scenario)
    result = enumerate_grid(s.game, args.step, args.eps, lower=args.lower, upper=args.upper,
                            cap=args.cap)
    summary = {
        "scenario": s.name,
        "step": args.step,
        "eps": args.eps,
        "grid_size": result.grid_size,
        "accepted": len(result.accepted),
        "clusters": [export.cluster_dict(c, k) for k, c in enumerate(result.clusters)],
    }
    out = Path(args.out) if args.out else None
    _write(out, "accepted.csv", export.accepted_csv(result, s.game.n))
    text = export.dumps(summary)
    _write(out, "clusters.json", text)
    sys.stdout.write(text)
    return 0


def cmd_basin(args) -> int:
    s = load_scenario(args.scenario)
    spec = _spec(s, args)
    grid = parse_grid(args.grid, s.game.n)
    rule = s.rule(alpha=args.alpha, mode=args.mode)
    stop = s.stop(max_steps=args.steps, eps_converge=args.eps)
    basin = sweep(s.game, spec, rule, stop, grid, radius=args.radius, threads=args.threads)
    csv = export.basin_csv(basin, s.game.n)
    if args.out:
        out = Path(args.out)
        _write(out, "basin.csv", csv)
        _write(out, "equilibria.json", export.dumps(
            [export.cluster_dict(c, k) for k, c in enumerate(basin.equilibria)]))
        sys.stdout.write(export.dumps({"scenario": s.name, "points": len(basin.points),
                                       "labels": basin.label_counts()}))
    else:
        sys.stdout.write(csv)
    return 0


def cmd_br(args) -> int:
    s = load_scenario(args.scenario)
    spec = _spec(s, args)
    a = _profile(s, args.profile)
    sys.stdout.write(export.dumps({"scenario": s.name, "profile": list(a),
                                   "best_response": list(br_map(s.game, spec, a)),
                                   "br_sources": spec.describe()}))
    return 0


def cmd_list(args) -> int:
    for name in builtin_names():
        s = load_scenario(name)
        print(f"{name}\t{s.game.n} players\t{s.game.description.split('. ')[0]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nashflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, profile_flag=None):
        p.add_argument("scenario", help="built-in scenario name or path to a scenario JSON file")
        p.add_argument("--argmax", action="store_true",
                       help="use numeric argmax best responses instead of closed forms")
        p.add_argument("--grid-points", type=int, default=ArgmaxConfig.grid_points)
        if profile_flag:
            p.add_argument(profile_flag, dest=profile_flag.lstrip("-"),
                           help="comma-separated profile (default: scenario initial)")

    def dynamics_flags(p):
        p.add_argument("--alpha", type=float, help="relaxation in (0, 1]")
        p.add_argument("--mode", choices=["simultaneous", "sequential"])
        p.add_argument("--steps", type=int, help="maximum number of steps")
        p.add_argument("--eps", type=float, help="convergence tolerance")

    p = sub.add_parser("run", help="simulate best-response dynamics")
    common(p, "--initial")
    dynamics_flags(p)
    p.add_argument("--out", help="directory for trajectory.csv, report.json, trajectory.svg")
    p.add_argument("--plot", action="store_true", help="also write trajectory.svg")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="residual certificate for a profile")
    common(p, "--profile")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("enumerate", help="brute-force grid equilibria")
    p.add_argument("scenario")
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--lower", type=float, help="override every player's lower bound")
    p.add_argument("--upper", type=float, help="override every player's upper bound")
    p.add_argument("--cap", type=int, default=10**7)
    p.add_argument("--out", help="directory for accepted.csv and clusters.json")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("basin", help="sweep initial profiles and label their outcomes")
    common(p)
    dynamics_flags(p)
    p.add_argument("--grid", required=True,
                   help="axes separated by ';', each 'v1,v2,…' or 'min:max:count'")
    p.add_argument("--radius", type=float, default=1e-4)
    p.add_argument("--threads", type=int, help="worker threads (default: NASHFLOW_THREADS)")
    p.add_argument("--out", help="directory for basin.csv and equilibria.json")
    p.set_defaults(func=cmd_basin)

    p = sub.add_parser("br", help="print the best-response map at a profile")
    common(p, "--profile")
    p.set_defaults(func=cmd_br)

    p = sub.add_parser("list-scenarios", help="list built-in scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EvaluationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_EVAL
    except (ScenarioError, ProfileError, UsageError, NotComputableError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
