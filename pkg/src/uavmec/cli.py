"""Command-line entry point: train, eval, sweep, selftest."""

from __future__ import annotations

import argparse
import os
import sys

from . import agent as ag
from . import harness
from .config import ConfigError, load_config


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--override expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavmec",
        description="Three-tier UAV edge-computing simulator and DQN trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="config override, repeatable")

    p_train = sub.add_parser("train", help="train a DQN and save a checkpoint")
    common(p_train)

    p_eval = sub.add_parser("eval", help="evaluate one frozen policy")
    common(p_eval)
    p_eval.add_argument("--policy", required=True,
                        choices=["dqn", "random", "uav_heavy", "cloud_heavy"])
    p_eval.add_argument("--dump-trajectory", action="store_true",
                        help="also write a per-interval trajectory CSV")

    p_sweep = sub.add_parser("sweep", help="run the arrival-rate sweep grid")
    common(p_sweep)

    p_self = sub.add_parser("selftest", help="run the built-in oracle checks")
    common(p_self)
    return parser


def cmd_train(args, config) -> int:
    os.makedirs(args.out, exist_ok=True)
    tc = ag.TrainConfig.from_sim_config(config)
    from .environment import MecEnvironment
    result = ag.train(lambda: MecEnvironment(config), tc, seed=args.seed)
    path = harness.checkpoint_path(args.out, config.i_max, args.seed)
    ag.save_checkpoint(result.net, path)
    curve_path = os.path.join(args.out,
                              f"curve_{int(config.i_max)}_{args.seed}.csv")
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write("episode,cumulative_reward\n")
        for ep, r in enumerate(result.episode_rewards):
            fh.write(f"{ep},{r!r}\n")
    print(f"saved checkpoint to {path}")
    print(f"saved learning curve to {curve_path}")
    return 0


def cmd_eval(args, config) -> int:
    os.makedirs(args.out, exist_ok=True)
    net = None
    if args.policy == "dqn":
        path = harness.checkpoint_path(args.out, config.i_max, args.seed)
        if not os.path.exists(path):
            print(f"error: no checkpoint at {path}; run 'uavmec train' first",
                  file=sys.stderr)
            return 1
        net = ag.load_checkpoint(path)
    row, records = harness.run_eval(args.policy, config, args.seed,
                                    config.eval_realizations, net=net,
                                    collect_records=True)
    out_path = os.path.join(
        args.out, f"eval_{args.policy}_{int(config.i_max)}_{args.seed}.csv")
    harness.emit_csv([row], out_path)
    print(f"wrote {out_path}")
    if args.dump_trajectory:
        traj_path = out_path.replace("eval_", "trajectory_")
        harness.dump_trajectory(records, traj_path)
        print(f"wrote {traj_path}")
    return 0


def cmd_sweep(args, config) -> int:
    os.makedirs(args.out, exist_ok=True)
    spec = harness.SweepSpec(
        i_max_values=tuple(config.sweep_i_max),
        seeds=tuple(args.seed + i for i in range(config.sweep_seeds)),
        policies=tuple(config.sweep_policies),
        realizations=config.eval_realizations,
        shared_model=config.shared_model)
    rows = harness.run_sweep(spec, config, out_dir=args.out)
    out_path = os.path.join(args.out, "sweep.csv")
    harness.emit_csv(rows, out_path)
    print(f"wrote {out_path} ({len(rows)} rows)")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, _parse_overrides(args.override))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "train":
        return cmd_train(args, config)
    if args.command == "eval":
        return cmd_eval(args, config)
    if args.command == "sweep":
        return cmd_sweep(args, config)
    if args.command == "selftest":
        return 0 if harness.selftest(config) else 1
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
