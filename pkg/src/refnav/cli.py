"""Command-line entry points: gen-world, run-bench, score, train, serve."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .agents import (
    AgentConfig,
    make_agent_factory,
    model_pointer,
    navpoint_agent,
    run_suite,
    shortest_agent,
)
from .episode import write_trajectories, read_trajectories
from .metrics import ScoringError, score_trajectories
from .model import ModelConfig
from .model.network import load_checkpoint, save_checkpoint
from .model.training import parse_train_config, TrainConfig, train, write_loss_curve
from .reporting import render_text_table, save_loss_curve_figure, write_report_bundle
from .world import (
    EnvironmentFormatError,
    ValidationError,
    load_environment,
    load_tasks,
    save_environment,
    save_tasks,
)
from .worldgen import SynthesisParams, generate_synthetic_world

PORT_ENV_VAR = "REFNAV_PORT"


def _add_world_args(p: argparse.ArgumentParser):
    p.add_argument("--env", action="append", required=True,
                   help="environment JSON (repeatable)")
    p.add_argument("--tasks", action="append", required=True,
                   help="task JSON (repeatable, paired with --env by order)")


def _load_worlds(args) -> list:
    if len(args.env) != len(args.tasks):
        raise SystemExit("--env and --tasks must be paired")
    worlds = []
    for env_path, task_path in zip(args.env, args.tasks):
        env = load_environment(env_path)
        worlds.append((env, load_tasks(task_path, env)))
    return worlds


def cmd_gen_world(args) -> int:
    params = SynthesisParams(
        n_viewpoints=args.viewpoints,
        n_objects=args.objects,
        n_categories=args.categories,
        room_extent=args.extent,
        rng_seed=args.seed,
    )
    env, tasks = generate_synthetic_world(params)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    env_path = Path(str(out) + ".env.json")
    tasks_path = Path(str(out) + ".tasks.json")
    save_environment(env, env_path)
    save_tasks(tasks, tasks_path)
    print(env_path)
    print(tasks_path)
    return 0


def _agent_factory(args):
    """Returns (factory, episode config); model-based agents carry their
    checkpoint's feature dimensions into the episode config."""
    if args.agent == "shortest" and args.checkpoint:
        model = load_checkpoint(args.checkpoint)
        return (shortest_agent(pointer=model_pointer(model)),
                model.config.episode_config())
    if args.agent == "navpoint":
        if not args.checkpoint:
            raise SystemExit("--checkpoint is required for the navpoint agent")
        model = load_checkpoint(args.checkpoint)
        return navpoint_agent(model), model.config.episode_config()
    make = make_agent_factory(AgentConfig(kind=args.agent, seed=args.seed,
                                          checkpoint=args.checkpoint))
    return make, ModelConfig().episode_config()


def cmd_run_bench(args) -> int:
    worlds = _load_worlds(args)
    make, config = _agent_factory(args)
    report, trajectories = run_suite(worlds, make, config)
    reports = {args.agent: report}
    text = render_text_table(reports)
    print(text, end="")
    if args.report:
        paths = write_report_bundle(args.report, reports)
        traj_path = Path(args.report) / f"trajectories_{args.agent}.jsonl"
        write_trajectories(traj_path, trajectories)
        print(f"report written to {paths['csv'].parent}")
    return 0


def cmd_score(args) -> int:
    worlds = _load_worlds(args)
    task_index = {task.id: (env, task) for env, tasks in worlds for task in tasks}
    records = read_trajectories(args.trajectories)
    if not records:
        raise SystemExit(f"{args.trajectories}: no trajectories to score (N=0)")
    report = score_trajectories(task_index, records)
    reports = {args.label: report}
    print(render_text_table(reports), end="")
    if args.report:
        write_report_bundle(args.report, reports)
    return 0


def cmd_train(args) -> int:
    worlds = _load_worlds(args)
    train_config = parse_train_config(args.config) if args.config else TrainConfig()
    result = train(worlds, train_config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    checkpoint = out / "checkpoint.json"
    save_checkpoint(result.model, checkpoint)
    write_loss_curve(out / "loss_curve.csv", result.curve)
    save_loss_curve_figure(out / "loss_curve.png", result.curve)
    print(f"checkpoint: {checkpoint}")
    print(f"final loss: {result.curve[-1][2]:.6f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    worlds = _load_worlds(args)
    idle_timeout = args.idle_timeout
    if args.config:
        for line in Path(args.config).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if line.startswith("idle_timeout"):
                idle_timeout = float(line.partition("=")[2].strip())
    app = create_app(worlds, ModelConfig().episode_config(), idle_timeout=idle_timeout)
    port = args.port or int(os.environ.get(PORT_ENV_VAR, "8321"))
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refnav",
        description="Simulator, benchmark, and agents for remote referring-expression navigation tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-world", help="generate a synthetic world + tasks")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--viewpoints", type=int, required=True)
    p.add_argument("--objects", type=int, required=True)
    p.add_argument("--categories", type=int, default=8)
    p.add_argument("--extent", type=float, default=10.0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(fn=cmd_gen_world)

    p = sub.add_parser("run-bench", help="run an agent over a suite and score it")
    _add_world_args(p)
    p.add_argument("--agent", required=True,
                   choices=["random", "shortest", "stopnow", "navpoint"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", help="model checkpoint (navpoint, or shortest's pointer)")
    p.add_argument("--report", help="directory for csv/text/figure/trajectories")
    p.set_defaults(fn=cmd_run_bench)

    p = sub.add_parser("score", help="score a recorded trajectory file")
    _add_world_args(p)
    p.add_argument("--trajectories", required=True)
    p.add_argument("--label", default="submitted")
    p.add_argument("--report", help="directory for csv/text/figure")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("train", help="two-phase training on a suite")
    _add_world_args(p)
    p.add_argument("--config", help="flat key=value training config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("serve", help="serve the episode wire protocol")
    _add_world_args(p)
    p.add_argument("--port", type=int, help=f"default: ${PORT_ENV_VAR} or 8321")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--idle-timeout", type=float, default=600.0)
    p.add_argument("--config", help="key=value file (idle_timeout)")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (EnvironmentFormatError, ValidationError, ScoringError,
            ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
