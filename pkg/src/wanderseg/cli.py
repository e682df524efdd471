"""Command-line interface.

Subcommands:
  gen-scenes   generate and save a set of scenes
  run          evaluate an agent over scenes (episodic or lifelong)
  train-rl     point-goal pretraining plus full-environment training
  report       rebuild metric reports from saved episode logs
  bench        compare compiled vs pure-Python kernels
"""

import argparse
import csv
import glob
import json
import os
import sys

import numpy as np

from . import kernels
from .agents import OracleAgent, RandomAgent, UniformAgent
from .config import load_config, seed_override
from .harness.episode import EpisodeConfig, run_sequence
from .harness.report import write_report
from .harness.episode import EpisodeLog
from .perception import load_model
from .world import WorldParams, generate_scene, load_scene, save_scene


def _world_params(cfg: dict) -> WorldParams:
    kwargs = {}
    for key, value in cfg.items():
        if key.startswith("world."):
            kwargs[key[len("world."):]] = value
    if "room_range" in kwargs:
        kwargs["room_range"] = tuple(kwargs["room_range"])
    return WorldParams(**kwargs)


def _load_cfg(path) -> dict:
    return load_config(path) if path else {}


def cmd_gen_scenes(args):
    cfg = _load_cfg(args.config)
    params = _world_params(cfg)
    seed = seed_override(args.seed)
    os.makedirs(args.out, exist_ok=True)
    for i in range(args.count):
        scene = generate_scene(params, seed + i)
        path = os.path.join(args.out, f"{scene.id}.json")
        save_scene(scene, path)
        print(f"wrote {path}")
    return 0


def load_scenes(scenes_dir, ordering="fixed"):
    paths = sorted(glob.glob(os.path.join(scenes_dir, "scene-*.json")))
    if not paths:
        raise SystemExit(f"no scene files under {scenes_dir}")
    scenes = [load_scene(p) for p in paths]
    if ordering != "fixed":
        if not ordering.startswith("seed:"):
            raise SystemExit(f"ordering must be 'fixed' or 'seed:N', got {ordering!r}")
        rng = np.random.default_rng(int(ordering.split(":", 1)[1]))
        scenes = [scenes[i] for i in rng.permutation(len(scenes))]
    return scenes


def _build_agent(args, cfg, params):
    turn = params.turn_angle_deg
    if args.agent == "oracle":
        return OracleAgent(turn, threshold=cfg.get("oracle.threshold", 0.7))
    if args.agent == "uniform":
        return UniformAgent(turn, period=int(cfg.get("uniform.period", 20)))
    if args.agent == "random":
        return RandomAgent(turn, p_annotate=cfg.get("random.p", 0.05),
                           seed=args.agent_seed)
    if args.agent == "rl":
        if not args.policy:
            raise SystemExit("--policy CKPT is required for the rl agent")
        from .rl.agent import RLAgent
        from .rl.train import load_policy
        return RLAgent(load_policy(args.policy), params, seed=args.agent_seed)
    raise SystemExit(f"unknown agent {args.agent!r}")


def cmd_run(args):
    cfg = _load_cfg(args.config)
    scenes = load_scenes(args.scenes, args.ordering)
    params = scenes[0].params
    agent = _build_agent(args, cfg, params)
    episode_cfg = EpisodeConfig(max_steps=args.max_steps)
    warm = load_model(args.warm_start) if args.warm_start else None
    logs = run_sequence(scenes, agent, episode_cfg, setup=args.setup,
                        model_seed=seed_override(args.model_seed),
                        warm_model=warm)
    paths = write_report(logs, args.out)
    for p in paths.values():
        print(f"wrote {p}")
    return 0


def cmd_train_rl(args):
    import torch

    from .rl.pointgoal import pretrain_pointgoal
    from .rl.ppo import PPOParams
    from .rl.train import Ablations, TrainConfig, make_policy, save_policy, train_lifelong

    cfg = _load_cfg(args.config)
    scenes = load_scenes(args.scenes)
    params = scenes[0].params
    seed = seed_override(args.seed)
    ablations = Ablations.from_flags(args.ablation)
    ppo = PPOParams(**{k[len("ppo."):]: v for k, v in cfg.items() if k.startswith("ppo.")})
    tcfg = TrainConfig(**{k[len("train."):]: v for k, v in cfg.items() if k.startswith("train.")})

    net = make_policy(params, seed=seed)
    curve_rows = []

    def log_cb(row):
        curve_rows.append(row)
        print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in row.items()))

    if args.pretrain_steps > 0 and not ablations.no_nav_pretrain:
        print(f"point-goal pretraining for {args.pretrain_steps} steps")
        pretrain_pointgoal(net, scenes, args.pretrain_steps, ppo, seed=seed,
                           log_cb=log_cb)
    print(f"full-environment training for {args.steps} steps")
    train_lifelong(net, scenes, args.steps, ablations, ppo, tcfg, seed=seed,
                   log_cb=log_cb)
    save_policy(net, args.out, params,
                extra={"ablations": ablations.__dict__, "seed": seed})
    print(f"wrote {args.out}")
    if args.curve:
        with open(args.curve, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "mean_return", "mean_episode_annotations"])
            for row in curve_rows:
                writer.writerow([row.get("step", ""),
                                 row.get("mean_return", ""),
                                 row.get("mean_episode_annotations", "")])
        print(f"wrote {args.curve}")
    return 0


def cmd_report(args):
    src = args.inp
    if os.path.isdir(src):
        src = os.path.join(src, "episodes.json")
    with open(src) as fh:
        logs = [EpisodeLog.from_dict(d) for d in json.load(fh)]
    paths = write_report(logs, args.out)
    for p in paths.values():
        print(f"wrote {p}")
    return 0


def cmd_bench(args):
    from .benchmark import format_results, run_benchmark
    print(f"active backend: {kernels.BACKEND}")
    print(format_results(run_benchmark(repeats=args.repeats)))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="wanderseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenes", help="generate scene files")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_gen_scenes)

    p = sub.add_parser("run", help="evaluate an agent over a scene set")
    p.add_argument("--agent", choices=["oracle", "uniform", "random", "rl"],
                   required=True)
    p.add_argument("--setup", choices=["episodic", "lifelong"], default="episodic")
    p.add_argument("--scenes", required=True)
    p.add_argument("--ordering", default="fixed", help="'fixed' or 'seed:N'")
    p.add_argument("--out", required=True)
    p.add_argument("--max-steps", type=int, default=2000)
    p.add_argument("--model-seed", type=int, default=0)
    p.add_argument("--agent-seed", type=int, default=0)
    p.add_argument("--policy", help="policy checkpoint for --agent rl")
    p.add_argument("--warm-start", help="segmentation model JSON to start from")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("train-rl", help="train the RL annotation agent")
    p.add_argument("--scenes", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--pretrain-steps", type=int, default=50_000)
    p.add_argument("--ablation", action="append", default=[],
                   help="episodic-training | no-acc-reward | no-nav-pretrain "
                        "| no-global-exploration")
    p.add_argument("--out", required=True)
    p.add_argument("--curve", help="write the training curve CSV here")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_train_rl)

    p = sub.add_parser("report", help="rebuild reports from episode logs")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--repeats", type=int, default=200)
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
