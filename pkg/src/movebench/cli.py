"""movebench command line: gen, train, eval, repro."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import config as cfgmod
from .datagen import FormatError, Paradigm, Sampling, build_dataset, read_dataset, write_dataset
from .evaluation import EXPERIMENTS, eval_grid, run_comparison, write_comparison, write_report
from .expert import GenerationError
from .nn import CheckpointFormatError
from .policy import load_checkpoint, save_checkpoint, train, train_bc_baseline

log = logging.getLogger("movebench")


class UsageError(Exception):
    """Bad flags, missing input files or invalid combinations; exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one-line diagnostic, exit 2
        raise UsageError(f"{self.prog}: {message}")


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="flat key=value overrides of world/motion/policy/eval defaults")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], help="single override, repeatable")
    common.add_argument("--jobs", type=_positive, default=None, help="worker processes (default: available cores)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="movebench", description="MOVE data-collection benchmark in a 2-D pick-and-place world.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a budget-matched demonstration dataset")
    g.add_argument("--paradigm", choices=[x.value for x in Paradigm], required=True)
    g.add_argument("--sampling", choices=[x.value for x in Sampling], required=True)
    g.add_argument("--budget", type=_positive, required=True)
    g.add_argument("--level", type=int, choices=(1, 2, 3), default=1)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", parents=[common], help="train a policy on a dataset file")
    t.add_argument("--dataset", required=True)
    t.add_argument("--policy", choices=("diffusion", "bc"), default="diffusion")
    t.add_argument("--steps", type=_positive, default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--out", required=True)

    e = sub.add_parser("eval", parents=[common], help="grid-evaluate a checkpoint (or 'expert' / 'random')")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--grid", type=_positive, default=None)
    e.add_argument("--episodes", type=_positive, default=None)
    e.add_argument("--level", type=int, choices=(1, 2, 3), default=1)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--out", required=True)
    e.add_argument("--no-figures", action="store_true")

    r = sub.add_parser("repro", parents=[common], help="run a canned comparison across seeds")
    r.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    r.add_argument("--budget", type=_positive, default=20_000)
    r.add_argument("--seeds", type=_seed_list, default=None)
    r.add_argument("--policy", choices=("diffusion", "bc"), default="diffusion")
    r.add_argument("--steps", type=_positive, default=None)
    r.add_argument("--grid", type=_positive, default=None)
    r.add_argument("--episodes", type=_positive, default=None)
    r.add_argument("--out", required=True)
    r.add_argument("--no-figures", action="store_true")
    return p


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {p}")
    return p


def _settings(args) -> cfgmod.Settings:
    overrides: dict[str, str] = {}
    if args.config:
        _require_file(args.config, "config file")
        overrides.update(cfgmod.load_config_file(args.config))
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    # explicit flags win over the file
    flag_map = {"steps": "policy.steps", "grid": "eval.grid", "episodes": "eval.episodes"}
    for attr, key in flag_map.items():
        if getattr(args, attr, None) is not None:
            overrides[key] = str(getattr(args, attr))
    try:
        return cfgmod.resolve(overrides)
    except (cfgmod.ConfigFileError, TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _banner(args, settings: cfgmod.Settings, extra: dict) -> None:
    print(f"== movebench {args.command} ==")
    for k, v in extra.items():
        print(f"  {k} = {v}")
    print(settings.banner())
    print("==", flush=True)


def _seed(args) -> int:
    return args.seed if args.seed is not None else cfgmod.default_seed()


def cmd_gen(args, settings, jobs) -> int:
    seed = _seed(args)
    _banner(args, settings, dict(paradigm=args.paradigm, sampling=args.sampling, budget=args.budget,
                                 level=args.level, seed=seed, out=args.out, jobs=jobs))
    t0 = time.time()
    ds = build_dataset(args.paradigm, args.sampling, args.budget, args.level, seed,
                       params=settings.motion, cfg=settings.world, jobs=jobs)
    write_dataset(ds, args.out)
    print(f"wrote {args.out}: {len(ds)} trajectories, {ds.total_timesteps} timesteps, "
          f"generation success {ds.generation_success_rate:.3f} ({time.time() - t0:.1f}s)")
    return 0


def cmd_train(args, settings, jobs) -> int:
    path = _require_file(args.dataset, "dataset file")
    seed = _seed(args)
    tc = replace(settings.policy, seed=seed)
    _banner(args, settings, dict(dataset=path, policy=args.policy, seed=seed, out=args.out))
    ds = read_dataset(path)
    t0 = time.time()
    ckpt = train(ds, tc, log_every=1000) if args.policy == "diffusion" else train_bc_baseline(ds, tc, log_every=1000)
    save_checkpoint(ckpt, args.out)
    print(f"wrote {args.out}: {args.policy} policy, final loss {ckpt.final_loss:.5f} ({time.time() - t0:.1f}s)")
    return 0


def cmd_eval(args, settings, jobs) -> int:
    seed = _seed(args)
    if args.checkpoint in ("expert", "random"):
        policy = args.checkpoint
    else:
        policy = load_checkpoint(_require_file(args.checkpoint, "checkpoint file"))
    ev = settings.eval
    _banner(args, settings, dict(checkpoint=args.checkpoint, level=args.level, seed=seed, out=args.out, jobs=jobs))
    report = eval_grid(policy, ev.grid, ev.episodes, args.level, seed, cfg=settings.world, params=settings.motion, jobs=jobs)
    paths = write_report(report, args.out, figures=not args.no_figures)
    s = report.summary()
    print(f"success {s['success_rate']:.3f}  normalized score {s['normalized_score']:.3f}  "
          f"in-circle {s['in_circle_success']:.3f}  out-of-circle {s['out_circle_success']:.3f}")
    for name, p in paths.items():
        print(f"  {name}: {p}")
    return 0


def cmd_repro(args, settings, jobs) -> int:
    seeds = args.seeds or [cfgmod.default_seed() + k for k in (1, 2, 3)]
    ev = settings.eval
    _banner(args, settings, dict(experiment=args.experiment, budget=args.budget, seeds=",".join(map(str, seeds)),
                                 policy=args.policy, out=args.out, jobs=jobs))
    report = run_comparison(args.experiment, args.budget, seeds, settings.policy, args.policy,
                            ev.grid, ev.episodes, cfg=settings.world, params=settings.motion, jobs=jobs)
    paths = write_comparison(report, args.out, figures=not args.no_figures)
    for a in report.arms:
        status = f"FAILED ({a.failed})" if a.failed else f"{a.mean():.3f} +- {a.std():.3f}"
        print(f"  {a.arm.name:>14s}  success {status}")
    print(json.dumps({k: str(v) for k, v in paths.items()}))
    return 0 if not any(a.failed for a in report.arms) else 1


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "repro": cmd_repro}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
        settings = _settings(args)
        jobs = args.jobs or os.cpu_count() or 1
        return COMMANDS[args.command](args, settings, jobs)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, CheckpointFormatError, cfgmod.ConfigFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GenerationError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
