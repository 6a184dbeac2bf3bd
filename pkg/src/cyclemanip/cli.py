"""Command-line harness: gen / train / rollout / report / inspect-sampler.

Every command resolves its configuration from defaults, then an optional
TOML or JSON config file, then command-line flags (highest priority),
prints the resolved result as JSON, and only then acts. Exit codes:
0 success, 2 configuration or validation problem, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import glob as globlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .core.episode_io import (
    ParseError,
    atomic_write_text,
    load_dataset,
)
from .core.types import Instruction, ValidationError
from .env.dataset import GenerationError, generate_dataset
from .env.tasks import TaskSpec
from .evalcycle.judge import (
    aggregate,
    judge_episode,
    render_table,
    report_from_dict,
)
from .nn.tensor import NumericError
from .policy.checkpoint import (
    CheckpointBundle,
    load_checkpoint,
    save_checkpoint,
)
from .policy.config import PolicyConfig
from .policy.runtime import rollout as run_rollout
from .policy.training import train as train_policy
from .rng import derive_seed
from .sampler import SamplerConfig, sample_high_indices

DEFAULT_SEEDS = {"data": 0, "train": 1, "eval": 2}
CONFIG_SECTIONS = {"task", "sampler", "policy", "counter", "seeds", "trials",
                   "output_dir"}


class CLIError(Exception):
    """Configuration-level failure; maps to exit code 2."""


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise CLIError(f"config file not found: {path}")
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise CLIError(f"{path}: invalid JSON: {e}") from e
    else:
        try:
            import tomllib as toml
        except ModuleNotFoundError:
            import tomli as toml

        try:
            raw = toml.loads(text)
        except toml.TOMLDecodeError as e:
            raise CLIError(f"{path}: invalid TOML: {e}") from e
    if not isinstance(raw, dict):
        raise CLIError(f"{path}: config root must be a table/object")
    unknown = set(raw) - CONFIG_SECTIONS
    if unknown:
        raise CLIError(f"{path}: unknown config keys {sorted(unknown)}")
    return raw


def _resolve_task(cfg: dict, task_flag: Optional[str]) -> TaskSpec:
    section = dict(cfg.get("task", {}))
    if task_flag is not None:
        section["task_id"] = task_flag
    if "task_id" not in section:
        raise CLIError("no task given: use --task or a [task] config section")
    try:
        return TaskSpec.from_dict(section)
    except TypeError as e:
        raise CLIError(f"bad [task] section: {e}") from e


def _resolve_policy(cfg: dict, args: argparse.Namespace) -> PolicyConfig:
    psec = dict(cfg.get("policy", {}))
    ssec = dict(cfg.get("sampler", {}))
    samp_over = dict(psec.pop("sampler", {}))
    samp_over.update(ssec)
    if getattr(args, "k_high", None) is not None:
        samp_over["k_high"] = args.k_high
    for flag in ("epochs", "batch"):
        v = getattr(args, flag, None)
        if v is not None:
            psec[flag] = v
    if getattr(args, "beta", None) is not None:
        psec["beta_loss"] = args.beta
    try:
        base = PolicyConfig.from_dict({"sampler": {}, **psec})
        samp = replace(base.sampler, **samp_over) if samp_over else base.sampler
        return replace(base, sampler=samp)
    except TypeError as e:
        raise CLIError(f"bad policy/sampler config: {e}") from e


def _resolve_seed(cfg: dict, flag: Optional[int], which: str) -> int:
    if flag is not None:
        return flag
    seeds = {**DEFAULT_SEEDS, **cfg.get("seeds", {})}
    if which not in seeds:
        raise CLIError(f"no {which!r} seed configured")
    return int(seeds[which])


def _print_resolved(command: str, config: dict, run: dict) -> None:
    print(json.dumps({"command": command, "config": config, "run": run},
                     indent=2, sort_keys=False))


def _parse_cycles_range(text: str) -> Tuple[int, int]:
    parts = text.split("..") if ".." in text else [text, text]
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except (ValueError, IndexError) as e:
        raise CLIError(f"bad --cycles value {text!r}: use N or LO..HI") from e
    if not 1 <= lo <= hi <= 8:
        raise CLIError(f"--cycles {text}: range must lie inside 1..8")
    return lo, hi


def _cmd_gen(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    spec = _resolve_task(cfg, args.task)
    if args.episodes < 1:
        raise CLIError("--episodes must be >= 1")
    lo, hi = _parse_cycles_range(args.cycles)
    seed = _resolve_seed(cfg, args.seed, "data")
    out_dir = Path(args.out or Path(cfg.get("output_dir", ".")) / "data")
    _print_resolved("gen", {"task": spec.to_dict()},
                    {"episodes": args.episodes, "cycles": f"{lo}..{hi}",
                     "seed": seed, "out": str(out_dir)})
    manifest = generate_dataset(spec, args.episodes, (lo, hi), seed, out_dir)
    _, demos = load_dataset(manifest)
    tally: dict = {}
    for d in demos:
        tally[d.instruction.target_cycles] = (
            tally.get(d.instruction.target_cycles, 0) + 1
        )
    print(f"manifest: {manifest}")
    for n in sorted(tally):
        print(f"  cycles {n}: {tally[n]} episodes")
    return 0


def _find_manifest(data: str) -> Path:
    p = Path(data)
    if p.is_dir():
        p = p / "manifest.json"
    if not p.exists():
        raise CLIError(f"manifest not found at {p}")
    return p


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    manifest = _find_manifest(args.data)
    policy_cfg = _resolve_policy(cfg, args)
    seed = _resolve_seed(cfg, args.seed, "train")
    out = Path(args.out)
    curve_path = Path(str(out) + ".curve.jsonl")
    _print_resolved(
        "train",
        {"policy": policy_cfg.to_dict()},
        {"data": str(manifest), "seed": seed, "out": str(out),
         "no_history": args.no_history, "curve": str(curve_path)},
    )
    man, demos = load_dataset(manifest)
    stats = man["stats"]

    def on_epoch(epoch: int, step: int, mean_loss: float) -> None:
        if not args.quiet:
            print(f"epoch {epoch + 1}/{policy_cfg.epochs} "
                  f"step {step} loss {mean_loss:.5f}", flush=True)

    model, meta, curve = train_policy(
        demos, stats, policy_cfg, seed,
        no_history=args.no_history, on_epoch=on_epoch,
    )
    meta["data_manifest"] = str(manifest)
    bundle = CheckpointBundle(cfg=policy_cfg, stats=stats, model=model,
                              meta=meta)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out, bundle)
    atomic_write_text(
        curve_path,
        "".join(json.dumps(row, separators=(",", ":")) + "\n" for row in curve),
    )
    acc = meta["holdout_progress_accuracy"]
    acc_txt = "n/a" if acc is None else f"{acc:.3f}"
    print(f"checkpoint: {out}")
    print(f"curve: {curve_path}")
    print(f"final loss {meta['final_loss']:.5f}  "
          f"holdout progress accuracy {acc_txt}")
    return 0


_WORK: dict = {}


def _run_trial(i: int) -> dict:
    spec = _WORK["spec"]
    ins = _WORK["instruction"]
    try:
        traj = run_rollout(
            spec, ins, _WORK["bundle"],
            derive_seed(_WORK["seed"], "trial", ins.target_cycles, i),
            t_max=_WORK["t_max"],
        )
        report = judge_episode(traj, spec, ins)
        return {"trial": i, "report": report.to_dict()}
    except Exception as e:  # recorded per trial, the run continues
        return {"trial": i, "error": f"{type(e).__name__}: {e}"}


def _cmd_rollout(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    try:
        bundle = load_checkpoint(args.ckpt)
    except (OSError, ParseError) as e:
        raise CLIError(f"cannot load checkpoint: {e}") from e
    task_id = args.task or (bundle.meta.get("task_ids") or [None])[0]
    if task_id is None:
        raise CLIError("no task given and checkpoint does not record one")
    spec = _resolve_task(cfg, task_id)
    if not 1 <= args.cycles <= 8:
        raise CLIError(f"--cycles {args.cycles}: outside the trained "
                       "instruction range 1..8")
    trials = args.trials if args.trials is not None else int(cfg.get("trials", 100))
    if trials < 1:
        raise CLIError("--trials must be >= 1")
    seed = _resolve_seed(cfg, args.seed, "eval")
    jobs = args.jobs or int(os.environ.get("CYCLEMANIP_JOBS", "1"))
    label = args.label or _default_label(bundle.meta)
    ins = Instruction(task_id=task_id, target_cycles=args.cycles)
    _print_resolved(
        "rollout",
        {"task": spec.to_dict()},
        {"ckpt": args.ckpt, "cycles": args.cycles, "trials": trials,
         "seed": seed, "jobs": jobs, "label": label,
         "report": args.report},
    )

    _WORK.update(spec=spec, instruction=ins, bundle=bundle, seed=seed,
                 t_max=args.t_max)
    if jobs > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(jobs) as pool:
            rows = pool.map(_run_trial, range(trials))
    else:
        rows = [_run_trial(i) for i in range(trials)]

    reports = [report_from_dict(r["report"]) for r in rows if "report" in r]
    errors = [r for r in rows if "error" in r]
    for r in errors:
        print(f"trial {r['trial']} failed: {r['error']}", file=sys.stderr)
    if not reports:
        print("all trials failed", file=sys.stderr)
        return 3

    summary = aggregate(reports)
    payload = {
        "label": label,
        "task": task_id,
        "cycles": args.cycles,
        "trials": trials,
        "seed": seed,
        "summary": summary.to_dict(),
        "reports": [r.to_dict() for r in reports],
        "errors": errors,
    }
    if args.report:
        path = Path(args.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(
            path, json.dumps(payload, separators=(",", ":")) + "\n"
        )
        print(f"report: {path}")
    print(f"Suc. {summary.suc:.3f}  Cyc. {summary.cyc:.3f}  "
          f"({len(reports)}/{trials} trials judged)")
    return 0


def _default_label(meta: dict) -> str:
    if meta.get("no_history"):
        return "no-history"
    if meta.get("beta_loss", None) == 0 or meta.get("beta", None) == 0:
        return "beta0"
    return "full"


def _cmd_report(args: argparse.Namespace) -> int:
    paths = sorted(globlib.glob(args.glob))
    if not paths:
        raise CLIError(f"no files match {args.glob!r}")
    _print_resolved("report", {}, {"glob": args.glob, "files": paths,
                                   "json": args.json})
    groups: dict = {}
    for path in paths:
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise CLIError(f"{path}: cannot read report: {e}") from e
        if "label" not in payload or "reports" not in payload:
            raise CLIError(f"{path}: not a rollout report")
        groups.setdefault(payload["label"], []).extend(
            report_from_dict(r) for r in payload["reports"]
        )
    rows = [(label, aggregate(reports)) for label, reports in groups.items()]
    rows.sort(key=lambda r: (-r[1].suc, r[0]))
    print(render_table(rows))
    if args.json:
        doc = [{"run": label, **m.to_dict()} for label, m in rows]
        atomic_write_text(
            Path(args.json), json.dumps(doc, separators=(",", ":")) + "\n"
        )
        print(f"json: {args.json}")
    return 0


def _cmd_inspect_sampler(args: argparse.Namespace) -> int:
    if args.k % 2 != 0 or args.k < 2:
        raise CLIError(f"--k {args.k}: must be even and >= 2")
    if args.t < 0:
        raise CLIError(f"--t {args.t}: must be >= 0")
    _print_resolved("inspect-sampler", {}, {"t": args.t, "k": args.k})
    print(" ".join(str(i) for i in sample_high_indices(args.t, args.k)))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cyclemanip",
        description="Cyclic-manipulation imitation lab: data generation, "
                    "policy training, evaluation, reporting.",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate an expert demonstration dataset")
    g.add_argument("--task", choices=("shake", "hammer", "stir"))
    g.add_argument("--episodes", type=int, required=True)
    g.add_argument("--cycles", default="1..8",
                   help="target cycle range, N or LO..HI inside 1..8")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output directory")
    g.add_argument("--config")
    g.set_defaults(fn=_cmd_gen)

    t = sub.add_parser("train", help="train a policy on a dataset")
    t.add_argument("--data", required=True,
                   help="dataset directory or manifest path")
    t.add_argument("--out", required=True, help="checkpoint output path")
    t.add_argument("--config")
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--beta", type=float, help="progress loss weight override")
    t.add_argument("--k-high", type=int, dest="k_high",
                   help="number of sampled history frames")
    t.add_argument("--no-history", action="store_true",
                   help="current-frame-only ablation")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(fn=_cmd_train)

    r = sub.add_parser("rollout", help="run and judge seeded policy rollouts")
    r.add_argument("--ckpt", required=True)
    r.add_argument("--task", choices=("shake", "hammer", "stir"))
    r.add_argument("--cycles", type=int, required=True)
    r.add_argument("--trials", type=int,
                   help="rollouts to run (default: config trials or 100)")
    r.add_argument("--seed", type=int)
    r.add_argument("--report", help="write per-trial reports to this JSON file")
    r.add_argument("--jobs", type=int,
                   help="parallel trial workers (default $CYCLEMANIP_JOBS or 1)")
    r.add_argument("--label", help="run label used in report tables")
    r.add_argument("--t-max", type=int, dest="t_max")
    r.add_argument("--config")
    r.set_defaults(fn=_cmd_rollout)

    p = sub.add_parser("report", help="aggregate rollout reports into a table")
    p.add_argument("--glob", required=True)
    p.add_argument("--json", help="also write the table as JSON")
    p.set_defaults(fn=_cmd_report)

    i = sub.add_parser("inspect-sampler",
                       help="print the sampled history indices for (t, k)")
    i.add_argument("--t", type=int, required=True)
    i.add_argument("--k", type=int, required=True)
    i.set_defaults(fn=_cmd_inspect_sampler)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CLIError, ValidationError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (NumericError, GenerationError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
