"""CLI + experiment plumbing: artifacts, exit codes, provenance,
subset comparison bookkeeping."""

import json
import os

import numpy as np
import pytest

import dafs.cli as cli
import dafs.experiment as experiment
from dafs.cli import main
from dafs.experiment import (
    ArtifactError,
    ExperimentConfig,
    compare,
    config_hash,
    evaluate_checkpoint,
    evaluate_subset,
    load_train_run,
    random_subset,
    render_markdown,
    write_return_curve_csv,
)
from dafs.training import TrainConfig, TrainingDiverged, TrainReport

TINY_TRAIN = {
    "env": "cartpole", "algorithm": "ppo", "iterations": 3,
    "steps_per_iteration": 48, "workers": 1, "seed": 0,
    "actor_hidden": [8], "critic_hidden": [12], "n_e": 6,
    "minibatch": 24, "ppo_epochs": 2,
}


def write_config(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture(scope="module")
def train_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-train")
    cfg = write_config(root / "cfg.json", TINY_TRAIN)
    run_dir = root / "run"
    assert main(["train", "--config", cfg, "--out", str(run_dir)]) == 0
    return run_dir


@pytest.fixture(scope="module")
def experiment_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-exp")
    doc = {
        "train": {**TINY_TRAIN, "iterations": 2},
        "top_k": [2],
        "random_trials": 2,
        "eval_episodes": 1,
        "eval_seeds": [0],
        "output_dir": str(root / "exp"),
    }
    cfg = write_config(root / "exp.json", doc)
    assert main(["train", "--config", cfg]) == 0
    assert main(["compare", "--config", cfg]) == 0
    return root, doc


class TestTrainCommand:
    def test_artifacts_exist_and_parse(self, train_run):
        report, config_doc = load_train_run(str(train_run))
        assert report.iterations == 3
        assert len(report.weight_history) == 3
        assert (train_run / "weight_history.csv").exists()
        assert (train_run / "params" / "params.bin").exists()
        # the saved config is self-describing: every default materialized
        assert set(config_doc) == set(TrainConfig().to_dict())

    def test_invalid_env_names_options(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", {**TINY_TRAIN, "env": "lunar"})
        assert main(["train", "--config", cfg, "--out", str(tmp_path / "r")]) == 1
        err = capsys.readouterr().err
        assert "cartpole" in err and "pendulum" in err

    def test_invalid_field_named(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", {**TINY_TRAIN, "workers": 0})
        assert main(["train", "--config", cfg, "--out", str(tmp_path / "r")]) == 1
        assert "workers" in capsys.readouterr().err

    def test_fixed_seed_gives_byte_identical_weight_csvs(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {**TINY_TRAIN, "iterations": 2})
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["train", "--config", cfg, "--out", str(a), "--seed", "7"]) == 0
        assert main(["train", "--config", cfg, "--out", str(b), "--seed", "7"]) == 0
        assert (a / "weight_history.csv").read_bytes() == (b / "weight_history.csv").read_bytes()

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {**TINY_TRAIN, "iterations": 0})
        out = tmp_path / "r"
        assert main(["train", "--config", cfg, "--out", str(out), "--seed", "9"]) == 0
        saved = json.loads((out / "config.json").read_text())
        assert saved["seed"] == 9

    def test_divergence_exits_two(self, tmp_path, monkeypatch, capsys):
        class Boom:
            def __init__(self, cfg, **kw):
                pass

            def run(self):
                raise TrainingDiverged("non-finite critic_loss at iteration 0")

        monkeypatch.setattr(cli, "Trainer", Boom)
        cfg = write_config(tmp_path / "c.json", TINY_TRAIN)
        assert main(["train", "--config", cfg, "--out", str(tmp_path / "r")]) == 2
        assert "non-finite" in capsys.readouterr().err

    def test_unreadable_config(self, tmp_path, capsys):
        assert main(["train", "--config", str(tmp_path / "nope.json")]) == 1
        assert "nope.json" in capsys.readouterr().err


class TestRankCommand:
    def test_full_list_in_weight_order(self, train_run, capsys):
        assert main(["rank", "--run", str(train_run), "--k", "8"]) == 0
        rows = [l.split() for l in capsys.readouterr().out.splitlines()
                if l.strip() and l.split()[0].isdigit()]
        assert len(rows) == 8
        weights = [float(r[2]) for r in rows]
        assert weights == sorted(weights, reverse=True)

    def test_k_above_feature_count_rejected(self, train_run, capsys):
        assert main(["rank", "--run", str(train_run), "--k", "9"]) == 1
        assert "outside [1, 8]" in capsys.readouterr().err

    def test_smaller_k_is_a_prefix(self, train_run):
        assert main(["rank", "--run", str(train_run), "--k", "2"]) == 0
        assert main(["rank", "--run", str(train_run), "--k", "5"]) == 0
        two = json.loads((train_run / "ranking_top2.json").read_text())
        five = json.loads((train_run / "ranking_top5.json").read_text())
        assert five["selected_indices"][:2] == two["selected_indices"]
        assert two["config_hash"] == five["config_hash"]

    def test_equal_weights_break_ties_by_index(self, tmp_path):
        report = TrainReport(
            env="cartpole", algorithm="ppo", seed=0, workers=1, iterations=2,
            feature_names=["a", "b", "c"], mean_returns=[1.0, 1.0], losses={},
            weight_history=[[0.5, 0.5, 0.5]] * 2, plateau_index=1,
            plateaued=False, ranking_window=2, ranking=[],
            wall_clock_seconds=0.0, config={},
        )
        run = tmp_path / "run"
        run.mkdir()
        report.save_json(run / "report.json")
        (run / "config.json").write_text("{}")
        assert main(["rank", "--run", str(run), "--k", "3"]) == 0
        out = json.loads((run / "ranking_top3.json").read_text())
        assert out["selected_indices"] == [0, 1, 2]

    def test_missing_run_is_instructive(self, tmp_path, capsys):
        assert main(["rank", "--run", str(tmp_path / "void"), "--k", "2"]) == 2
        assert "dafs train" in capsys.readouterr().err

    def test_corrupt_report_names_file(self, tmp_path, capsys):
        run = tmp_path / "run"
        run.mkdir()
        (run / "report.json").write_text("{broken")
        (run / "config.json").write_text("{}")
        assert main(["rank", "--run", str(run), "--k", "1"]) == 2
        assert "report.json" in capsys.readouterr().err


class TestEvalCommand:
    EVAL_ARGS = [
        "eval", "--env", "cartpole", "--features", "0,2,3", "--algo", "ppo",
        "--seeds", "0", "--episodes", "2", "--iterations", "2", "--steps", "48",
    ]

    def test_repeated_evaluation_is_identical(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.json", TINY_TRAIN)
        args = self.EVAL_ARGS + ["--train-config", cfg]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first
        assert "mean" in first

    def test_bad_feature_string(self, capsys):
        assert main(["eval", "--env", "cartpole", "--features", "a,b",
                     "--algo", "ppo", "--seeds", "0"]) == 1
        assert "--features" in capsys.readouterr().err

    def test_out_of_range_index(self, capsys):
        args = list(self.EVAL_ARGS)
        args[args.index("0,2,3")] = "99"
        assert main(args) == 1
        assert "outside" in capsys.readouterr().err

    def test_unknown_algo_rejected(self, capsys):
        assert main(["eval", "--env", "cartpole", "--features", "0",
                     "--algo", "sac", "--seeds", "0"]) == 1

    def test_all_seeds_failing_exits_two(self, monkeypatch, capsys):
        class Boom:
            def __init__(self, cfg, **kw):
                pass

            def run(self):
                raise TrainingDiverged("blew up")

        monkeypatch.setattr(experiment, "Trainer", Boom)
        assert main(self.EVAL_ARGS) == 2
        out = capsys.readouterr().out
        assert "FAILED" in out and "every seed failed" in out


class TestEvaluateSubset:
    def tiny_cfg(self, **kw):
        return TrainConfig(**{**TINY_TRAIN, "iterations": 1,
                              "actor_hidden": (8,), "critic_hidden": (12,), **kw})

    def test_diverged_seed_reported_not_dropped(self, monkeypatch):
        real = experiment.Trainer

        class Flaky:
            def __init__(self, cfg, **kw):
                self._fail = cfg.seed == 1
                self._real = real(cfg, **kw)
                self.agent = self._real.agent
                self.make_env = self._real.make_env

            def run(self):
                if self._fail:
                    raise TrainingDiverged("seed 1 went non-finite")
                return self._real.run()

        monkeypatch.setattr(experiment, "Trainer", Flaky)
        result = evaluate_subset(self.tiny_cfg(), [0, 2], [0, 1], episodes=1)
        by_seed = {r["seed"]: r for r in result["per_seed"]}
        assert by_seed[0]["status"] == "ok"
        assert by_seed[1]["status"] == "diverged"
        assert result["failed_seeds"] == [1]
        assert result["mean_return"] == by_seed[0]["mean_return"]

    def test_subset_recorded_sorted(self):
        result = evaluate_subset(self.tiny_cfg(), [3, 0], [0], episodes=1)
        assert result["subset"] == [0, 3]
        assert result["per_seed"][0]["status"] == "ok"

    def test_checkpoint_evaluation_deterministic(self):
        from dafs.training import Trainer
        tr = Trainer(self.tiny_cfg(), use_attention=False)
        tr.run()
        a = evaluate_checkpoint(tr.make_env, "ppo", tr.agent, 3, seed=0)
        b = evaluate_checkpoint(tr.make_env, "ppo", tr.agent, 3, seed=0)
        assert a == b


class TestExperimentConfig:
    def test_roundtrip(self):
        exp = ExperimentConfig(train=TrainConfig(**TINY_TRAIN), top_k=(2, 4))
        clone = ExperimentConfig.from_dict(exp.to_dict())
        assert clone == exp

    def test_top_k_bounded_by_feature_count(self):
        with pytest.raises(ValueError, match="top_k"):
            ExperimentConfig(train=TrainConfig(**TINY_TRAIN), top_k=(9,))

    def test_unknown_field(self):
        with pytest.raises(ValueError, match="budget"):
            ExperimentConfig.from_dict({"budget": 3})

    def test_validation(self):
        with pytest.raises(ValueError, match="top_k"):
            ExperimentConfig(top_k=())
        with pytest.raises(ValueError, match="eval_episodes"):
            ExperimentConfig(eval_episodes=0)
        with pytest.raises(ValueError, match="random_trials"):
            ExperimentConfig(random_trials=0)

    def test_config_hash_ignores_key_order(self):
        a = {"x": 1, "y": [2, 3]}
        b = {"y": [2, 3], "x": 1}
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash({"x": 2, "y": [2, 3]})


class TestRandomSubsets:
    def test_reproducible_and_well_formed(self):
        a = random_subset(seed=3, k=4, m=10, trial=2)
        b = random_subset(seed=3, k=4, m=10, trial=2)
        assert a == b
        assert len(set(a)) == 4
        assert all(0 <= i < 10 for i in a)

    def test_trials_differ(self):
        subsets = {tuple(random_subset(0, 3, 30, t)) for t in range(5)}
        assert len(subsets) > 1


class TestCompareCommand:
    def test_missing_prior_run_is_instructive(self, tmp_path, capsys):
        doc = {
            "train": {**TINY_TRAIN, "iterations": 1},
            "top_k": [2], "eval_seeds": [0], "eval_episodes": 1,
            "random_trials": 1, "output_dir": str(tmp_path / "exp"),
        }
        cfg = write_config(tmp_path / "e.json", doc)
        assert main(["compare", "--config", cfg]) == 2
        assert "dafs train" in capsys.readouterr().err

    def test_stale_run_config_rejected(self, tmp_path, capsys):
        doc = {
            "train": {**TINY_TRAIN, "iterations": 1},
            "top_k": [2], "eval_seeds": [0], "eval_episodes": 1,
            "random_trials": 1, "output_dir": str(tmp_path / "exp"),
        }
        cfg = write_config(tmp_path / "e.json", doc)
        assert main(["train", "--config", cfg]) == 0
        doc["train"]["seed"] = 5  # config drifted after the run completed
        cfg = write_config(tmp_path / "e.json", doc)
        assert main(["compare", "--config", cfg]) == 2
        assert "different config" in capsys.readouterr().err

    def test_comparison_bookkeeping(self, experiment_run):
        root, doc = experiment_run
        result = json.loads(
            (root / "exp" / "comparison.json").read_text()
        )
        labels = [e["label"] for e in result["entries"]]
        assert labels == ["dafs-top2", "full"]
        full = result["entries"][1]
        assert full["subset"] == list(range(8))
        block = result["random_baselines"]["2"]
        assert len(block["trials"]) == 2  # every trial listed, not just the best
        best = block["best_trial"]
        means = [t["mean_return"] for t in block["trials"]]
        assert block["best_mean_return"] == max(means)
        assert block["trials"][best]["mean_return"] == max(means)
        # traceability: every statistic carries (config hash, seeds, subset)
        exp_hash = config_hash(result["config"])
        for entry in result["entries"] + block["trials"]:
            assert entry["config_hash"] == exp_hash
            assert entry["seeds"] == [0]
            assert entry["subset"] == sorted(entry["subset"])
            for row in entry["per_seed"]:
                assert row["status"] in ("ok", "diverged")

    def test_compare_is_deterministic(self, experiment_run):
        root, doc = experiment_run
        exp = ExperimentConfig.from_dict(doc)
        assert compare(exp) == compare(exp)


class TestReportCommand:
    def test_outputs_for_single_run(self, train_run, tmp_path, capsys):
        out = tmp_path / "rep"
        assert main(["report", "--run", str(train_run), "--k", "3",
                     "--out", str(out)]) == 0
        md = (out / "summary.md").read_text()
        assert "| algorithm |" in md
        assert "**" in md  # selected features are bold
        assert "x | v | theta" in md
        curve = [p for p in out.iterdir() if p.name.startswith("return_curve")]
        assert len(curve) == 1
        lines = curve[0].read_text().splitlines()
        assert len(lines) == 3 + 1  # one row per iteration plus header
        weights = [p for p in out.iterdir() if p.name.startswith("weight_history")]
        assert len(weights) == 1

    def test_multi_run_table_has_one_row_per_algorithm(self, train_run,
                                                       tmp_path):
        dqn_cfg = {
            "env": "cartpole", "algorithm": "dqn", "iterations": 2,
            "steps_per_iteration": 48, "seed": 0, "critic_hidden": [12],
            "n_e": 6, "batch_size": 16, "updates_per_iteration": 4,
            "warmup_steps": 24,
        }
        cfg = write_config(tmp_path / "dqn.json", dqn_cfg)
        dqn_run = tmp_path / "dqn-run"
        assert main(["train", "--config", cfg, "--out", str(dqn_run)]) == 0
        out = tmp_path / "rep"
        assert main(["report", "--run", str(train_run), "--run", str(dqn_run),
                     "--k", "2", "--out", str(out)]) == 0
        md = (out / "summary.md").read_text()
        table = [l for l in md.splitlines() if l.startswith("|")]
        assert any(l.startswith("| ppo |") for l in table)
        assert any(l.startswith("| dqn |") for l in table)

    def test_experiment_dir_includes_comparison(self, experiment_run, tmp_path):
        root, doc = experiment_run
        out = tmp_path / "rep"
        assert main(["report", "--run", str(root / "exp"),
                     "--out", str(out)]) == 0
        md = (out / "summary.md").read_text()
        assert "Subset comparison" in md
        assert "dafs-top2" in md and "full" in md
        assert "random-k2-trial0" in md and "random-k2-trial1" in md

    def test_corrupt_artifact_names_file(self, tmp_path, capsys):
        run = tmp_path / "run"
        run.mkdir()
        (run / "report.json").write_text("][")
        (run / "config.json").write_text("{}")
        assert main(["report", "--run", str(run)]) == 2
        assert "report.json" in capsys.readouterr().err

    def test_missing_run(self, tmp_path, capsys):
        assert main(["report", "--run", str(tmp_path / "void")]) == 2
        assert "report.json" in capsys.readouterr().err


class TestReturnCurveCsv:
    def test_none_losses_leave_empty_cells(self, tmp_path):
        report = TrainReport(
            env="e", algorithm="dqn", seed=0, workers=1, iterations=2,
            feature_names=["a"], mean_returns=[1.0, 2.0],
            losses={"loss": [None, 0.5]}, weight_history=[],
            plateau_index=1, plateaued=False, ranking_window=0, ranking=[],
            wall_clock_seconds=0.0, config={},
        )
        path = tmp_path / "curve.csv"
        write_return_curve_csv(path, report)
        lines = path.read_text().splitlines()
        assert lines[0] == "iteration,mean_return,loss"
        assert lines[1].endswith(",")  # warmup iteration has no loss yet
        assert lines[2].split(",")[2] == "0.5"


class TestMarkdownRendering:
    def make_report(self, algorithm, weights):
        names = [f"f{i}" for i in range(len(weights))]
        ranking = [
            {"index": i, "name": names[i], "mean_weight": w, "rank": r + 1}
            for r, (i, w) in enumerate(
                sorted(enumerate(weights), key=lambda t: -t[1])
            )
        ]
        return TrainReport(
            env="e", algorithm=algorithm, seed=0, workers=1, iterations=1,
            feature_names=names, mean_returns=[3.0], losses={},
            weight_history=[list(weights)], plateau_index=0, plateaued=True,
            ranking_window=1, ranking=ranking, wall_clock_seconds=1.0,
            config={},
        )

    def test_selected_cells_are_bold(self):
        report = self.make_report("ppo", [0.9, 0.1, 0.8])
        md = render_markdown([("d", report, {})], selected_k=2)
        row = [l for l in md.splitlines() if l.startswith("| ppo |")][0]
        cells = [c.strip() for c in row.split("|")[2:-1]]
        assert cells[0] == "**0.9**"
        assert cells[1] == "0.1"
        assert cells[2] == "**0.8**"

    def test_no_k_means_no_bold(self):
        report = self.make_report("ppo", [0.9, 0.1])
        md = render_markdown([("d", report, {})], selected_k=None)
        assert "**" not in md


class TestEntryPoint:
    def test_no_command_is_usage_error(self, capsys):
        assert main([]) == 1

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_console_script_registered(self):
        import importlib.metadata as md
        eps = md.entry_points()
        scripts = eps.select(group="console_scripts", name="dafs")
        assert any(ep.value == "dafs.cli:main" for ep in scripts)
