"""Experiment driver and command line behavior on small configurations."""
import numpy as np
import pytest

from autotab.cli import main
from autotab.data import write_csv
from autotab.datagen import synthetic_heart
from autotab.harness import (
    ENSEMBLE_NAME,
    LEADERBOARD_HEADER,
    ExperimentConfig,
    HarnessError,
    LeaderboardRow,
    emit_leaderboard,
    parse_leaderboard,
    run_experiment,
)
from autotab.preprocess import ScenarioId
from autotab.serialize import load_artifacts, load_model

FAST_PRESETS = ("knn-uniform", "gbt-default", "rf-gini")


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "small.csv"
    write_csv(synthetic_heart(160, seed=1), path)
    return path


@pytest.fixture(scope="module")
def fast_result(small_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = ExperimentConfig(
        data_path=small_csv,
        scenario=ScenarioId.S1,
        out_dir=out,
        seed=0,
        folds=2,
        presets=FAST_PRESETS,
        tune_budget=0,
    )
    return run_experiment(cfg)


class TestConfigValidation:
    def test_missing_data_file(self, tmp_path):
        cfg = ExperimentConfig(tmp_path / "nope.csv", ScenarioId.S1, tmp_path)
        with pytest.raises(HarnessError, match=r"\[config\]"):
            run_experiment(cfg)

    def test_bad_values_rejected_before_training(self, small_csv, tmp_path):
        bad = [
            {"test_ratio": 1.5},
            {"folds": 1},
            {"repeats": 0},
            {"tune_budget": -1},
            {"presets": ("no-such-model",)},
            {"presets": ()},
        ]
        for overrides in bad:
            cfg = ExperimentConfig(small_csv, ScenarioId.S1, tmp_path, **overrides)
            with pytest.raises(ValueError):
                cfg.validate()


class TestEmit:
    def _row(self, model="gbt-default", level=1):
        return LeaderboardRow(
            model=model,
            stack_level=level,
            accuracy_test=0.9125,
            accuracy_val=0.8875,
            roc_auc=0.95,
            precision=0.9,
            f1=0.88,
            recall=0.8612345,
        )

    def test_single_row_gives_header_plus_one_line(self, tmp_path):
        files = emit_leaderboard([self._row()], tmp_path)
        lines = files["csv"].read_text().splitlines()
        assert lines == [
            LEADERBOARD_HEADER,
            "gbt-default,1,0.9125,0.8875,0.9500,0.9000,0.8800,0.8612",
        ]

    def test_undefined_cells(self, tmp_path):
        row = self._row()
        row.precision = None
        row.f1 = None
        files = emit_leaderboard([row], tmp_path)
        line = files["csv"].read_text().splitlines()[1]
        assert ",undefined,undefined," in line

    def test_parse_back_round_trip(self, tmp_path):
        row = self._row()
        row.recall = None
        files = emit_leaderboard([row], tmp_path)
        back = parse_leaderboard(files["csv"])
        assert len(back) == 1
        assert back[0].model == row.model
        assert back[0].accuracy_test == pytest.approx(0.9125)
        assert back[0].recall is None

    def test_text_table_aligns_and_lists_skips(self, tmp_path):
        files = emit_leaderboard([self._row()], tmp_path, skips={"knn-uniform": "because"})
        text = files["txt"].read_text()
        assert "skipped models:" in text
        assert "knn-uniform: because" in text
        header, first = text.splitlines()[:2]
        assert len(header) == len(first)

    def test_empty_leaderboard_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_leaderboard([], tmp_path)


class TestRunExperiment:
    def test_rows_sorted_with_ensemble_last(self, fast_result):
        rows = fast_result.rows
        assert rows[-1].model == ENSEMBLE_NAME
        assert rows[-1].stack_level == 2
        level1 = rows[:-1]
        assert all(r.stack_level == 1 for r in level1)
        keys = [(-r.accuracy_test, r.model) for r in level1]
        assert keys == sorted(keys)
        assert len(level1) == len(FAST_PRESETS)

    def test_ensemble_validation_dominates_singles(self, fast_result):
        ens_val = fast_result.rows[-1].accuracy_val
        assert all(ens_val >= r.accuracy_val - 1e-12 for r in fast_result.rows[:-1])

    def test_output_files_exist_and_reload(self, fast_result):
        files = fast_result.files
        for key in ("csv", "txt", "artifacts", "train", "test", ENSEMBLE_NAME):
            assert files[key].exists()
        loaded = load_model(files[ENSEMBLE_NAME])
        assert loaded.ensemble == fast_result.ensemble
        artifacts, schema = load_artifacts(files["artifacts"])
        assert artifacts.scenario == fast_result.artifacts.scenario
        back = parse_leaderboard(files["csv"])
        assert [r.model for r in back] == [r.model for r in fast_result.rows]

    def test_split_files_partition_cleaned_rows(self, fast_result):
        train_rows = fast_result.train_ds.row_count
        test_rows = fast_result.test_ds.row_count
        assert train_rows + test_rows == fast_result.artifacts.cleaning.rows_after

    def test_rerun_is_byte_identical(self, small_csv, tmp_path):
        outs = []
        for sub in ("a", "b"):
            cfg = ExperimentConfig(
                data_path=small_csv,
                scenario=ScenarioId.S3,
                out_dir=tmp_path / sub,
                seed=3,
                folds=2,
                presets=("knn-distance", "xt-gini"),
                tune_budget=0,
            )
            run_experiment(cfg)
            outs.append((tmp_path / sub / "leaderboard.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_s2_skips_neighbour_models(self, small_csv, tmp_path):
        cfg = ExperimentConfig(
            data_path=small_csv,
            scenario=ScenarioId.S2,
            out_dir=tmp_path,
            folds=2,
            presets=("knn-uniform", "knn-distance", "gbt-default"),
            tune_budget=0,
        )
        result = run_experiment(cfg)
        assert set(result.skips) == {"knn-uniform", "knn-distance"}
        assert [r.model for r in result.rows] == ["gbt-default", ENSEMBLE_NAME]


class TestCli:
    def test_run_and_score_agree(self, small_csv, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main(
            [
                "run",
                "--data", str(small_csv),
                "--scenario", "s1",
                "--out", str(out),
                "--folds", "2",
                "--presets", "gbt-default,rf-gini",
                "--tune-budget", "0",
            ]
        )
        assert rc == 0
        rows = parse_leaderboard(out / "leaderboard.csv")
        target = next(r for r in rows if r.model == "gbt-default")

        rc = main(
            [
                "score",
                "--model", str(out / "model_gbt-default.json"),
                "--data", str(out / "test.csv"),
                "--out", str(out / "preds.csv"),
            ]
        )
        assert rc == 0
        printed = capsys.readouterr().out
        assert f"accuracy:  {target.accuracy_test:.4f}" in printed

        lines = (out / "preds.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "row,proba,predicted"
        n_test = len((out / "test.csv").read_text(encoding="utf-8").splitlines()) - 1
        assert len(lines) - 1 == n_test
        for line in lines[1:]:
            _, proba, predicted = line.split(",")
            p = float(proba)
            assert 0.0 <= p <= 1.0
            assert predicted == ("1" if p >= 0.5 else "0")

    def test_prep_writes_splits_and_reports_cleaning(self, small_csv, tmp_path, capsys):
        out = tmp_path / "prep"
        rc = main(
            ["prep", "--data", str(small_csv), "--scenario", "s2", "--out", str(out)]
        )
        assert rc == 0
        assert (out / "train.csv").exists()
        assert (out / "test.csv").exists()
        assert (out / "artifacts.json").exists()
        printed = capsys.readouterr().out
        assert "after cleaning" in printed
        assert "train rows:" in printed

    def test_error_paths_exit_nonzero(self, tmp_path, capsys):
        rc = main(
            [
                "run",
                "--data", str(tmp_path / "missing.csv"),
                "--scenario", "s1",
                "--out", str(tmp_path),
            ]
        )
        assert rc == 1
        err = capsys.readouterr().err
        assert "[config]" in err

        rc = main(["score", "--model", str(tmp_path / "no.json"), "--data", str(tmp_path / "no.csv")])
        assert rc == 1

    def test_unknown_scenario_rejected(self, small_csv, tmp_path, capsys):
        rc = main(
            ["run", "--data", str(small_csv), "--scenario", "s9", "--out", str(tmp_path)]
        )
        assert rc == 1
