"""Command-line entry point.

Subcommands:
  run     one episode of a built-in task; writes a JSONL trace
  bench   a batch of tasks x trials; writes metrics JSON + CSV and traces
  replay  re-verify a trace offline; optional SVG trajectory plot

Exit codes: 0 success, 2 usage error, 3 backend failure, 4 corrupt trace.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import trace as tracemod
from .controller import BackendFailure, HttpChat
from .loop import LoopConfig
from .tasks import TASKS, aggregate, run_trial
from .trace import CorruptTrace

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_CORRUPT = 4

_DEFAULT_NOISE = (1.0, 0.05)  # centroid jitter sigma mm, dropout probability


def _parse_task_ids(text: str) -> list[int]:
    ids = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            ids.extend(range(int(lo), int(hi) + 1))
        elif part:
            ids.append(int(part))
    known = {t.id for t in TASKS}
    bad = [i for i in ids if i not in known]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown task ids: {bad}")
    return ids


def _build_backend(args):
    if args.backend == "http":
        return HttpChat(base_url=args.base_url, model=args.model)
    return None  # oracle is built per-trial by the harness


def _loop_config(args) -> LoopConfig:
    return LoopConfig(seed=args.seed)


def _trial_args(args, noise):
    return dict(robot=args.robot, seed=args.seed, noise=noise,
                config=_loop_config(args))


def _noise_of(args):
    return (0.0, 0.0) if args.no_noise else _DEFAULT_NOISE


def cmd_run(args) -> int:
    noise = _noise_of(args)
    try:
        result = run_trial(args.task, **_trial_args(args, noise),
                           trial=args.trial, backend=_build_backend(args))
    except BackendFailure as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    if result.outcome == "backend_failure":
        print("backend failure during episode", file=sys.stderr)
        return EXIT_BACKEND
    if args.out:
        result.trace.write(args.out)
    print(f"task {result.task_id} trial {result.trial}: "
          f"outcome={result.outcome} success={result.success} "
          f"sim_time={result.sim_time:.1f}s")
    return EXIT_OK


def _bench_one(payload):
    task_id, trial, robot, seed, noise, backend_name, base_url, model = payload
    backend = None
    if backend_name == "http":
        backend = HttpChat(base_url=base_url, model=model)
    try:
        return run_trial(task_id, robot=robot, seed=seed, trial=trial,
                         noise=noise, config=LoopConfig(seed=seed),
                         backend=backend)
    finally:
        if backend is not None:
            backend.close()


def cmd_bench(args) -> int:
    noise = _noise_of(args)
    jobs = [(tid, trial, args.robot, args.seed, noise, args.backend,
             args.base_url, args.model)
            for tid in args.tasks for trial in range(args.trials)]
    try:
        if args.parallel > 1:
            with ProcessPoolExecutor(max_workers=args.parallel) as pool:
                results = list(pool.map(_bench_one, jobs))
        else:
            results = [_bench_one(j) for j in jobs]
    except BackendFailure as exc:
        print(f"backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    results.sort(key=lambda r: (r.task_id, r.trial))

    os.makedirs(args.out, exist_ok=True)
    for r in results:
        r.trace.write(os.path.join(args.out,
                                   f"task{r.task_id:02d}_trial{r.trial}.jsonl"))
    metrics = aggregate(results)
    report = {
        "robot": args.robot,
        "seed": args.seed,
        "trials_per_task": args.trials,
        "noise": {"sigma": noise[0], "dropout": noise[1]},
        "overall_success_rate": metrics.overall,
        "tasks": [
            {
                "task_id": m.task_id,
                "trials": m.trials,
                "successes": m.successes,
                "success_rate": m.success_rate,
                "mean_completion_time_s": m.mean_time,
            }
            for m in metrics.per_task
        ],
    }
    with open(os.path.join(args.out, "metrics.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(args.out, "metrics.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "trials", "successes", "success_rate",
                         "mean_completion_time_s"])
        for m in metrics.per_task:
            writer.writerow([m.task_id, m.trials, m.successes,
                             m.success_rate,
                             "" if m.mean_time is None else m.mean_time])
    for m in metrics.per_task:
        act = "-" if m.mean_time is None else f"{m.mean_time:.1f}s"
        print(f"task {m.task_id:2d}: {m.successes}/{m.trials} "
              f"({m.success_rate:.1f}%)  mean time {act}")
    print(f"overall: {metrics.successes}/{metrics.trials} "
          f"({metrics.overall:.1f}%)")
    return EXIT_OK


def _svg_plot(trace, path) -> None:
    """Hand-rolled SVG: end-effector path plus perceived object paths."""
    ee = [(e["pose"][0], e["pose"][1]) for e in trace.events
          if e["ev"] == tracemod.EV_ROBOT]
    objects: dict[int, list] = {}
    for e in trace.events:
        if e["ev"] == tracemod.EV_SNAPSHOT:
            for d in e.get("detections", ()):
                objects.setdefault(d[0], []).append((d[2], d[3]))
    pts = ee + [p for ps in objects.values() for p in ps]
    if not pts:
        pts = [(0.0, 0.0)]
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    pad = 30.0
    x0, y0 = min(xs) - pad, min(ys) - pad
    w, h = max(xs) + pad - x0, max(ys) + pad - y0

    def fmt(points):
        return " ".join(f"{x - x0:.1f},{h - (y - y0):.1f}" for x, y in points)

    palette = ("#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 '
             f'{w:.0f} {h:.0f}">',
             f'<rect width="{w:.0f}" height="{h:.0f}" fill="white"/>']
    for i, (oid, ps) in enumerate(sorted(objects.items())):
        color = palette[i % len(palette)]
        lines.append(f'<polyline points="{fmt(ps)}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5" '
                     f'stroke-dasharray="4 3"/>')
    if ee:
        lines.append(f'<polyline points="{fmt(ee)}" fill="none" '
                     f'stroke="#1f77b4" stroke-width="2"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_replay(args) -> int:
    try:
        trace = tracemod.read(args.trace)
    except CorruptTrace as exc:
        print(f"corrupt trace: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    report = tracemod.replay(trace)
    if args.svg:
        _svg_plot(trace, args.svg)
    print(f"replay: {report.summary()}")
    for v in report.violations:
        print(f"  violation: {json.dumps(v, sort_keys=True)}")
    return EXIT_OK if report.ok else EXIT_CORRUPT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armsim",
        description="Deterministic desk-scale robot arm control simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config",
                       help="flat JSON config file; flags override it")
        p.add_argument("--robot", choices=("scara", "delta"),
                       default="scara")
        p.add_argument("--backend", choices=("oracle", "http"),
                       default="oracle")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-noise", action="store_true",
                       help="disable perception jitter and dropout")
        p.add_argument("--base-url", default="http://localhost:8080/v1")
        p.add_argument("--model", default="gpt-4")

    p_run = sub.add_parser("run", help="run one task episode")
    p_run.add_argument("--task", type=int, required=True)
    p_run.add_argument("--trial", type=int, default=0)
    p_run.add_argument("--out", help="trace output path (JSONL)")
    common(p_run)

    p_bench = sub.add_parser("bench", help="run a task batch and report")
    p_bench.add_argument("--tasks", type=_parse_task_ids,
                         default=[t.id for t in TASKS],
                         help="e.g. 1-7 or 1,3,8-12")
    p_bench.add_argument("--trials", type=int, default=5)
    p_bench.add_argument("--parallel", type=int, default=1)
    p_bench.add_argument("--out", default="bench_out",
                         help="output directory")
    common(p_bench)

    p_replay = sub.add_parser("replay", help="verify a recorded trace")
    p_replay.add_argument("trace")
    p_replay.add_argument("--svg", help="write a trajectory plot")
    return parser


def _apply_config_file(parser, argv):
    """Precedence: flags > config file > built-in defaults."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config) as fh:
        values = json.load(fh)
    if not isinstance(values, dict):
        raise ValueError("config file must hold a flat JSON object")
    if "tasks" in values and isinstance(values["tasks"], str):
        values["tasks"] = _parse_task_ids(values["tasks"])
    for sub_action in parser._subparsers._group_actions:
        for sub in sub_action.choices.values():
            sub.set_defaults(**{k: v for k, v in values.items()
                                if any(a.dest == k for a in sub._actions)})


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        _apply_config_file(parser, argv)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"bad config file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "bench":
        return cmd_bench(args)
    return cmd_replay(args)


if __name__ == "__main__":
    sys.exit(main())
