"""Command line front end.

Subcommands: train, rank, eval, compare, report.  Exit codes: 0 success,
1 usage error (bad flags or config), 2 runtime failure (divergence, worker
crash, corrupt artifacts).
"""

import argparse
import json
import os
import re
import sys

from .attention import ranking_records, snapshot_and_average, top_k, write_weight_history_csv
from .experiment import (
    ArtifactError,
    ExperimentConfig,
    compare,
    config_hash,
    evaluate_subset,
    load_train_run,
    render_markdown,
    write_return_curve_csv,
    write_train_run,
)
from .training import TrainConfig, Trainer, TrainingDiverged, WorkerFailure


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the contract reserves 2 for
    # runtime failures, so route parse errors through UsageError instead
    def error(self, message):
        raise UsageError(message)


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} {path} is not valid JSON: {exc}") from exc


def _parse_int_list(text, flag):
    try:
        items = [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from None
    if not items:
        raise UsageError(f"{flag} lists no values")
    return items


def _slug(text):
    return re.sub(r"[^A-Za-z0-9._-]+", "-", text)


def _experiment_doc(doc):
    return isinstance(doc, dict) and "train" in doc


# --- train -------------------------------------------------------------------

def cmd_train(args):
    doc = _load_json(args.config, "config")
    try:
        if _experiment_doc(doc):
            exp = ExperimentConfig.from_dict(doc)
            cfg = exp.train
        else:
            exp = None
            cfg = TrainConfig.from_dict(doc)
        if args.seed is not None:
            cfg = TrainConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
            if exp is not None:
                exp = ExperimentConfig.from_dict({**exp.to_dict(), "train": cfg.to_dict()})
    except ValueError as exc:
        raise UsageError(f"invalid config: {exc}") from exc

    if args.out:
        run_dir = args.out
    elif exp is not None:
        run_dir = exp.train_dir
    else:
        run_dir = os.path.join(
            "runs", f"{_slug(cfg.env)}-{cfg.algorithm}-seed{cfg.seed}"
        )

    try:
        trainer = Trainer(cfg)
    except ValueError as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    report = trainer.run()

    config_doc = exp.to_dict() if exp is not None else cfg.to_dict()
    write_train_run(run_dir, trainer, report, config_doc)

    print(f"run directory: {run_dir}")
    print(f"config hash: {config_hash(config_doc)[:12]}")
    final = report.mean_returns[-1] if report.mean_returns else float("nan")
    print(f"iterations: {report.iterations}  final mean return: {final:.2f}")
    if report.ranking:
        head = ", ".join(r["name"] for r in report.ranking[:4])
        print(f"top features: {head}")
    return 0


# --- rank --------------------------------------------------------------------

def cmd_rank(args):
    report, config_doc = load_train_run(args.run)
    m = len(report.feature_names)
    if not 1 <= args.k <= m:
        raise UsageError(f"k={args.k} outside [1, {m}] for this run")
    if not report.weight_history:
        raise UsageError(
            "run has no attention weight history (plain single-world run); "
            "nothing to rank"
        )
    ranking = snapshot_and_average(report.weight_history, report.ranking_window)
    selected = top_k(ranking, args.k)
    records = ranking_records(ranking, report.feature_names)

    print(f"{'rank':>4}  {'index':>5}  {'weight':>12}  name")
    for rec in records:
        marker = "*" if rec["index"] in selected else " "
        print(
            f"{rec['rank']:>4}  {rec['index']:>5}  {rec['mean_weight']:>12.6g}"
            f"  {rec['name']} {marker}"
        )
    out = {
        "k": args.k,
        "selected_indices": selected,
        "selected_names": [report.feature_names[i] for i in selected],
        "ranking": records,
        "ranking_window": report.ranking_window,
        "config_hash": config_hash(config_doc),
    }
    path = os.path.join(args.run, f"ranking_top{args.k}.json")
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    print(f"wrote {path}")
    return 0


# --- eval --------------------------------------------------------------------

def cmd_eval(args):
    indices = _parse_int_list(args.features, "--features")
    seeds = _parse_int_list(args.seeds, "--seeds")
    base = {}
    if args.train_config:
        doc = _load_json(args.train_config, "train config")
        base = dict(doc["train"]) if _experiment_doc(doc) else dict(doc)
    base["env"] = args.env
    base["algorithm"] = args.algo
    if args.iterations is not None:
        base["iterations"] = args.iterations
    if args.steps is not None:
        base["steps_per_iteration"] = args.steps
    try:
        cfg = TrainConfig.from_dict(base)
        result = evaluate_subset(cfg, indices, seeds, args.episodes)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    for row in result["per_seed"]:
        if row["status"] == "ok":
            print(
                f"seed {row['seed']}: mean {row['mean_return']:.2f} "
                f"± {row['std_return']:.2f} over {row['episodes']} episodes"
            )
        else:
            print(f"seed {row['seed']}: FAILED ({row['error']})")
    subset = ",".join(str(i) for i in result["subset"])
    if result["mean_return"] is None:
        print(f"subset [{subset}]: every seed failed")
        return 2
    print(
        f"subset [{subset}]: mean return {result['mean_return']:.2f} "
        f"± {result['std_return']:.2f} across seeds"
    )
    if result["failed_seeds"]:
        print(f"failed seeds: {result['failed_seeds']}")
    return 0


# --- compare -------------------------------------------------------------------

def cmd_compare(args):
    doc = _load_json(args.config, "config")
    try:
        exp = ExperimentConfig.from_dict(doc)
    except ValueError as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    result = compare(exp)

    os.makedirs(exp.output_dir, exist_ok=True)
    path = os.path.join(exp.output_dir, "comparison.json")
    with open(path, "w") as fh:
        json.dump(result, fh, indent=2)
        fh.write("\n")

    print(f"config hash: {result['config_hash'][:12]}")
    for e in result["entries"]:
        mean = "failed" if e["mean_return"] is None else f"{e['mean_return']:.2f}"
        idx = ",".join(str(i) for i in e["subset"])
        print(f"{e['label']:>16}  k={e['k']:<3} subset=[{idx}]  mean={mean}")
    for k, block in result["random_baselines"].items():
        for t in block["trials"]:
            mean = "failed" if t["mean_return"] is None else f"{t['mean_return']:.2f}"
            idx = ",".join(str(i) for i in t["subset"])
            print(f"{t['label']:>16}  k={k:<3} subset=[{idx}]  mean={mean}")
        if block["best_trial"] is not None:
            print(
                f"best-of-{len(block['trials'])} random k={k}: trial "
                f"{block['best_trial']} ({block['best_mean_return']:.2f})"
            )
    print(f"wrote {path}")
    return 0


# --- report --------------------------------------------------------------------

def _resolve_run(path):
    """Accepts either a train run dir or an experiment output dir."""
    if os.path.exists(os.path.join(path, "report.json")):
        train_dir = path
        root = os.path.dirname(os.path.abspath(path)) or "."
    elif os.path.exists(os.path.join(path, "train", "report.json")):
        train_dir = os.path.join(path, "train")
        root = path
    else:
        raise ArtifactError(
            f"no training report under {path} "
            "(expected report.json or train/report.json)"
        )
    comp = os.path.join(root, "comparison.json")
    return train_dir, comp if os.path.exists(comp) else None


def cmd_report(args):
    runs = []
    comparison = None
    for raw in args.run:
        train_dir, comp_path = _resolve_run(raw)
        report, config_doc = load_train_run(train_dir)
        runs.append((train_dir, report, config_doc))
        if comparison is None and comp_path is not None:
            try:
                with open(comp_path) as fh:
                    comparison = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ArtifactError(f"corrupt comparison {comp_path}: {exc}") from exc

    selected_k = args.k
    if selected_k is None and comparison is not None:
        ks = comparison.get("config", {}).get("top_k") or []
        selected_k = ks[0] if ks else None

    out_dir = args.out or os.path.dirname(os.path.abspath(runs[0][0])) or "."
    os.makedirs(out_dir, exist_ok=True)
    written = []

    md_path = os.path.join(out_dir, "summary.md")
    with open(md_path, "w") as fh:
        fh.write(render_markdown(runs, selected_k=selected_k, comparison=comparison))
        fh.write("\n")
    written.append(md_path)

    seen = {}
    for train_dir, report, _ in runs:
        label = _slug(f"{report.algorithm}-{report.env}-seed{report.seed}")
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f"{label}-{seen[label]}"
        curve_path = os.path.join(out_dir, f"return_curve_{label}.csv")
        write_return_curve_csv(curve_path, report)
        written.append(curve_path)
        if report.weight_history:
            weights_path = os.path.join(out_dir, f"weight_history_{label}.csv")
            write_weight_history_csv(
                weights_path, list(range(report.iterations)), report.weight_history
            )
            written.append(weights_path)

    for path in written:
        print(f"wrote {path}")
    return 0


# --- entry point ------------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="dafs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a dual-world agent, write run artifacts")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", help="run directory (default derives from config)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rank", help="rank features of a completed run")
    p.add_argument("--run", required=True, help="run directory from `dafs train`")
    p.add_argument("--k", required=True, type=int, help="subset size to select")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="re-evaluate a feature subset with a plain agent")
    p.add_argument("--env", required=True)
    p.add_argument("--features", required=True, help="comma-separated indices")
    p.add_argument("--algo", required=True, choices=("ppo", "dqn", "ddpg"))
    p.add_argument("--seeds", required=True, help="comma-separated training seeds")
    p.add_argument("--episodes", type=int, default=10, help="greedy eval episodes")
    p.add_argument("--iterations", type=int, help="training iterations override")
    p.add_argument("--steps", type=int, help="steps per iteration override")
    p.add_argument("--train-config", help="JSON with further trainer settings")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="compare Top-K, full, and random subsets")
    p.add_argument("--config", required=True, help="experiment JSON config path")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render markdown + CSV summaries of runs")
    p.add_argument("--run", required=True, action="append",
                   help="run directory; repeat for multi-run tables")
    p.add_argument("--k", type=int, help="bold the top k features")
    p.add_argument("--out", help="output directory (default: beside the run)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (TrainingDiverged, WorkerFailure, ArtifactError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
