"""Experiment orchestration around the trainer.

Run directories, greedy checkpoint evaluation, subset re-evaluation with a
plain agent, subset comparison against full/random baselines, and markdown
rendering of the results.  Everything here is plumbing: the training
semantics live in dafs.training.
"""

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .attention import (
    ranking_records,
    snapshot_and_average,
    top_k,
    write_weight_history_csv,
)
from .envs.mask import MaskedEnv
from .envs.registry import make as make_env_by_name
from .nn import save_snapshot
from .training import TrainConfig, Trainer, TrainingDiverged, TrainReport


class ArtifactError(RuntimeError):
    """A run directory is missing or holds unreadable artifacts."""


def canonical_json(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(doc):
    """Content hash of a config document; the provenance key on reports."""
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


@dataclass
class ExperimentConfig:
    """A training run plus the subset-evaluation protocol around it."""

    train: TrainConfig = field(default_factory=TrainConfig)
    top_k: tuple = (4,)
    random_trials: int = 5
    eval_episodes: int = 10
    eval_seeds: tuple = (0, 1, 2)
    output_dir: str = "runs/experiment"

    def __post_init__(self):
        if isinstance(self.train, dict):
            self.train = TrainConfig.from_dict(self.train)
        self.top_k = tuple(int(k) for k in self.top_k)
        self.eval_seeds = tuple(int(s) for s in self.eval_seeds)
        if not self.top_k:
            raise ValueError("top_k must name at least one subset size")
        m = make_env_by_name(self.train.env).spec.state_dim
        for k in self.top_k:
            if not 1 <= k <= m:
                raise ValueError(f"top_k value {k} outside [1, {m}] for {self.train.env}")
        if self.random_trials < 1:
            raise ValueError("random_trials must be >= 1")
        if self.eval_episodes < 1:
            raise ValueError("eval_episodes must be >= 1")
        if not self.eval_seeds:
            raise ValueError("eval_seeds must name at least one seed")

    @property
    def train_dir(self):
        return os.path.join(self.output_dir, "train")

    def to_dict(self):
        return {
            "train": self.train.to_dict(),
            "top_k": list(self.top_k),
            "random_trials": self.random_trials,
            "eval_episodes": self.eval_episodes,
            "eval_seeds": list(self.eval_seeds),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown config field: {sorted(extra)[0]}")
        return cls(**doc)


# --- run directory artifacts ------------------------------------------------

def write_train_run(run_dir, trainer, report, config_doc):
    """Persist a completed training run: config, report, weights, params."""
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "config.json"), "w") as fh:
        json.dump(config_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    report.save_json(os.path.join(run_dir, "report.json"))
    if report.weight_history:
        write_weight_history_csv(
            os.path.join(run_dir, "weight_history.csv"),
            list(range(report.iterations)),
            report.weight_history,
        )
    save_snapshot(
        os.path.join(run_dir, "params"),
        trainer.agent.snapshot_nets(),
        extra={"env": report.env, "algorithm": report.algorithm, "seed": report.seed},
    )


def load_train_run(run_dir):
    """Read back (TrainReport, config doc); errors always name the file."""
    report_path = os.path.join(run_dir, "report.json")
    config_path = os.path.join(run_dir, "config.json")
    if not os.path.exists(report_path):
        raise ArtifactError(
            f"no training report at {report_path}; "
            "run `dafs train --config <path>` first"
        )
    try:
        report = TrainReport.load_json(report_path)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        raise ArtifactError(f"corrupt training report {report_path}: {exc}") from exc
    try:
        with open(config_path) as fh:
            config_doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"corrupt run config {config_path}: {exc}") from exc
    return report, config_doc


# --- greedy evaluation --------------------------------------------------------

def greedy_policy(algorithm, agent):
    if algorithm == "ppo":
        return agent.act_eval
    if algorithm == "dqn":
        return lambda obs: agent.act(obs, 0.0, None)
    return agent.act  # ddpg default noise_std=0.0 is already deterministic


def run_episode(env, policy, seed):
    obs = env.reset(seed=seed)
    total = 0.0
    while True:
        res = env.step(policy(obs))
        total += res.reward
        obs = res.state
        if res.done:
            return total


def evaluate_checkpoint(env_factory, algorithm, agent, episodes, seed):
    """Greedy returns over `episodes` episodes with seed-derived env seeds."""
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 997)))
    env = env_factory()
    policy = greedy_policy(algorithm, agent)
    ep_seeds = rng.integers(2**31 - 1, size=int(episodes))
    return [run_episode(env, policy, int(s)) for s in ep_seeds]


def evaluate_subset(train_cfg, indices, seeds, episodes, diagnostics_dir=None):
    """Train a plain single-world agent per seed on the masked env, then
    evaluate greedily.  A diverged seed is reported as failed, never dropped.

    Returns a dict with per-seed rows and statistics over the seeds that
    finished.
    """
    subset = sorted(int(i) for i in indices)
    rows = []
    for seed in seeds:
        cfg = dataclasses.replace(train_cfg, seed=int(seed))
        trainer = Trainer(
            cfg,
            use_attention=False,
            env_wrapper=lambda e: MaskedEnv(e, subset),
            diagnostics_dir=diagnostics_dir,
        )
        try:
            trainer.run()
        except TrainingDiverged as exc:
            rows.append({"seed": int(seed), "status": "diverged", "error": str(exc)})
            continue
        returns = evaluate_checkpoint(
            trainer.make_env, cfg.algorithm, trainer.agent, episodes, seed
        )
        rows.append({
            "seed": int(seed),
            "status": "ok",
            "episodes": int(episodes),
            "returns": [float(r) for r in returns],
            "mean_return": float(np.mean(returns)),
            "std_return": float(np.std(returns)),
        })
    ok = [r["mean_return"] for r in rows if r["status"] == "ok"]
    return {
        "subset": subset,
        "seeds": [int(s) for s in seeds],
        "per_seed": rows,
        "mean_return": float(np.mean(ok)) if ok else None,
        "std_return": float(np.std(ok)) if ok else None,
        "failed_seeds": [r["seed"] for r in rows if r["status"] != "ok"],
    }


# --- comparison ---------------------------------------------------------------

def random_subset(seed, k, m, trial):
    """Seed-derived subset of k feature indices; reproducible by construction."""
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), int(k), int(trial))))
    return sorted(int(i) for i in rng.choice(m, size=int(k), replace=False))


def ranking_from_report(report):
    if not report.weight_history:
        raise ArtifactError(
            "run has no attention weight history to rank "
            "(plain single-world runs cannot be ranked)"
        )
    return snapshot_and_average(report.weight_history, report.ranking_window)


def compare(config, diagnostics_dir=None):
    """Evaluate Top-K subsets against full and best-of-n random baselines.

    Requires a completed dual-world run under config.train_dir.  Every
    statistic in the result carries (config hash, seed set, subset).
    """
    report, run_config_doc = load_train_run(config.train_dir)
    # the run dir may hold either a bare trainer config or a full experiment doc
    run_train_doc = run_config_doc.get("train", run_config_doc)
    if run_train_doc != config.train.to_dict():
        raise ArtifactError(
            f"training run at {config.train_dir} was produced by a different "
            "config; re-run `dafs train` with this experiment file"
        )
    m = len(report.feature_names)
    for k in config.top_k:
        if k > m:
            raise ValueError(f"top_k value {k} exceeds feature count {m}")

    exp_doc = config.to_dict()
    exp_hash = config_hash(exp_doc)
    ranking = ranking_from_report(report)

    def entry(label, k, subset):
        out = evaluate_subset(
            config.train, subset, config.eval_seeds, config.eval_episodes,
            diagnostics_dir=diagnostics_dir,
        )
        out.update({"label": label, "k": int(k), "config_hash": exp_hash})
        return out

    entries = [entry(f"dafs-top{k}", k, top_k(ranking, k)) for k in config.top_k]
    entries.append(entry("full", m, list(range(m))))

    random_baselines = {}
    for k in config.top_k:
        trials = []
        for t in range(config.random_trials):
            subset = random_subset(config.train.seed, k, m, t)
            row = entry(f"random-k{k}-trial{t}", k, subset)
            row["trial"] = t
            trials.append(row)
        scored = [t for t in trials if t["mean_return"] is not None]
        best = max(scored, key=lambda t: t["mean_return"]) if scored else None
        random_baselines[str(k)] = {
            "trials": trials,
            "best_trial": best["trial"] if best else None,
            "best_mean_return": best["mean_return"] if best else None,
        }

    return {
        "config_hash": exp_hash,
        "config": exp_doc,
        "env": report.env,
        "algorithm": report.algorithm,
        "feature_names": report.feature_names,
        "ranking": ranking_records(ranking, report.feature_names),
        "ranking_window": report.ranking_window,
        "entries": entries,
        "random_baselines": random_baselines,
    }


# --- report rendering -----------------------------------------------------------

def _fmt(w):
    return "%.3g" % w


def weight_table(runs, selected_k):
    """Markdown table: one row per run (algorithm), one column per feature,
    cells hold window-averaged weights.  The selected subset is bold."""
    names = runs[0][1].feature_names
    lines = ["| algorithm | " + " | ".join(names) + " |",
             "|---" * (len(names) + 1) + "|"]
    for _, report, _ in runs:
        if report.feature_names != names:
            continue
        by_index = {rec["index"]: rec for rec in report.ranking}
        cells = []
        for i in range(len(names)):
            rec = by_index.get(i)
            if rec is None:
                cells.append("-")
            elif selected_k is not None and rec["rank"] <= selected_k:
                cells.append(f"**{_fmt(rec['mean_weight'])}**")
            else:
                cells.append(_fmt(rec["mean_weight"]))
        lines.append(f"| {report.algorithm} | " + " | ".join(cells) + " |")
    return "\n".join(lines)


def comparison_table(comparison):
    lines = [
        "| subset | k | indices | mean return | std | seeds | failed |",
        "|---|---|---|---|---|---|---|",
    ]

    def fmt_row(e):
        mean = "-" if e["mean_return"] is None else "%.2f" % e["mean_return"]
        std = "-" if e["std_return"] is None else "%.2f" % e["std_return"]
        failed = ",".join(str(s) for s in e["failed_seeds"]) or "-"
        idx = ",".join(str(i) for i in e["subset"])
        seeds = ",".join(str(s) for s in e["seeds"])
        return f"| {e['label']} | {e['k']} | {idx} | {mean} | {std} | {seeds} | {failed} |"

    for e in comparison["entries"]:
        lines.append(fmt_row(e))
    for k, block in comparison["random_baselines"].items():
        for t in block["trials"]:
            lines.append(fmt_row(t))
        best = block["best_trial"]
        if best is not None:
            lines.append(
                f"| best-of-{len(block['trials'])} random (k={k}) "
                f"= trial {best} | {k} | - | %.2f | - | - | - |"
                % block["best_mean_return"]
            )
    return "\n".join(lines)


def render_markdown(runs, selected_k=None, comparison=None):
    """Human-readable summary for one or more runs over the same env."""
    out = ["# Feature selection summary", ""]
    for run_dir, report, config_doc in runs:
        h = config_hash(config_doc)[:12]
        final = "%.2f" % report.mean_returns[-1] if report.mean_returns else "n/a"
        plateau = (
            f"iteration {report.plateau_index}" if report.plateaued else "not reached"
        )
        out += [
            f"## {report.algorithm} on {report.env} (seed {report.seed})",
            "",
            f"- run directory: `{run_dir}`",
            f"- config hash: `{h}`",
            f"- iterations: {report.iterations}, workers: {report.workers}",
            f"- final mean return: {final}",
            f"- plateau: {plateau}",
            f"- ranking window: last {report.ranking_window} iterations",
            "",
        ]
    ranked_runs = [r for r in runs if r[1].ranking]
    if ranked_runs:
        out += ["## Feature weights", ""]
        if selected_k is not None:
            out += [f"Bold cells mark the {selected_k} selected features.", ""]
        out += [weight_table(ranked_runs, selected_k), ""]
    if comparison is not None:
        out += [
            "## Subset comparison",
            "",
            f"Config hash: `{comparison['config_hash'][:12]}`. Every row lists "
            "its exact index set and seed set.",
            "",
            comparison_table(comparison),
            "",
        ]
    return "\n".join(out)


def write_return_curve_csv(path, report):
    """One row per training iteration: mean return plus any loss curves."""
    loss_keys = sorted(report.losses)
    cols = ["iteration", "mean_return"] + loss_keys
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(report.iterations):
            row = [str(i), "%.17g" % report.mean_returns[i]]
            for key in loss_keys:
                v = report.losses[key][i]
                row.append("" if v is None else "%.17g" % v)
            fh.write(",".join(row) + "\n")
