"""End-to-end exercises of the command-line surface via `cli.main`."""

import numpy as np
import pytest

from mvm import (
    TrainConfig,
    ViewSchema,
    init_model,
    load_dataset,
    load_model,
    predict_dataset,
    serialize_model,
)
from mvm.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def synth_files(tmp_path, capsys):
    data = tmp_path / "train.mv"
    teacher = tmp_path / "teacher.model"
    code, _, err = run(
        capsys, "synth", "--dims", "6,5,4", "--k", "2", "--n", "300",
        "--density", "0.5", "--noise", "0.0", "--seed", "5",
        "--out", str(data), "--teacher-out", str(teacher),
    )
    assert code == 0, err
    return data, teacher


class TestSynth:
    def test_writes_parseable_dataset(self, synth_files):
        data, teacher = synth_files
        dataset = load_dataset(data)
        assert dataset.schema == ViewSchema((6, 5, 4))
        assert len(dataset) == 300
        assert load_model(teacher).family == "mvm"

    def test_deterministic(self, tmp_path, capsys):
        paths = [tmp_path / "a.mv", tmp_path / "b.mv"]
        for path in paths:
            code, _, _ = run(
                capsys, "synth", "--m", "2", "--n", "50", "--seed", "9",
                "--out", str(path),
            )
            assert code == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_dims_parsing_error(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "synth", "--dims", "4,x", "--out", str(tmp_path / "d.mv")
        )
        assert code == 2
        assert err.count("\n") == 1 and "--dims" in err

    def test_invalid_density(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "synth", "--m", "2", "--density", "0",
            "--out", str(tmp_path / "d.mv"),
        )
        assert code == 1
        assert "density" in err


class TestTrain:
    def test_reports_trace_and_writes_model(self, synth_files, tmp_path, capsys):
        data, _ = synth_files
        model_path = tmp_path / "out.model"
        code, out, err = run(
            capsys, "train", "--data", str(data), "--model-out", str(model_path),
            "--k", "2", "--epochs", "5", "--eta", "0.02", "--sigma", "0.1",
            "--seed", "3",
        )
        assert code == 0, err
        lines = out.splitlines()
        assert sum(1 for l in lines if l.startswith("epoch ")) == 5
        assert any(l.startswith("final_objective ") for l in lines)
        assert any(l.startswith("converged ") for l in lines)
        assert load_model(model_path).family == "mvm"

    def test_zero_epochs_writes_serialized_init(self, synth_files, tmp_path, capsys):
        data, _ = synth_files
        model_path = tmp_path / "init.model"
        code, _, _ = run(
            capsys, "train", "--data", str(data), "--model-out", str(model_path),
            "--k", "3", "--epochs", "0", "--seed", "21",
        )
        assert code == 0
        expected = init_model(ViewSchema((6, 5, 4)), TrainConfig(k=3, seed=21))
        assert model_path.read_text() == serialize_model(expected)

    def test_lambda_grid_reports_selection(self, synth_files, tmp_path, capsys):
        data, _ = synth_files
        valid = tmp_path / "valid.mv"
        code, _, _ = run(
            capsys, "synth", "--dims", "6,5,4", "--n", "60", "--seed", "6",
            "--out", str(valid),
        )
        assert code == 0
        code, out, err = run(
            capsys, "train", "--data", str(data), "--valid", str(valid),
            "--lambda-grid", "0,1e-4,1e-2", "--k", "2", "--epochs", "3",
            "--eta", "0.02", "--sigma", "0.1",
        )
        assert code == 0, err
        lines = out.splitlines()
        assert sum(1 for l in lines if l.startswith("lambda ")) == 3
        selected = [l for l in lines if l.startswith("selected_lambda ")]
        assert len(selected) == 1
        assert float(selected[0].split()[1]) in (0.0, 1e-4, 1e-2)

    def test_lambda_grid_requires_valid(self, synth_files, capsys):
        data, _ = synth_files
        code, _, err = run(
            capsys, "train", "--data", str(data), "--lambda-grid", "0,1e-4"
        )
        assert code == 2
        assert err.count("\n") == 1

    def test_baseline_flag(self, synth_files, tmp_path, capsys):
        data, _ = synth_files
        model_path = tmp_path / "lin.model"
        code, _, err = run(
            capsys, "train", "--data", str(data), "--baseline", "linear",
            "--epochs", "3", "--model-out", str(model_path),
        )
        assert code == 0, err
        assert load_model(model_path).family == "linear"

    def test_divergence_reports_epoch(self, synth_files, capsys):
        data, _ = synth_files
        code, _, err = run(
            capsys, "train", "--data", str(data), "--loss", "square",
            "--eta", "100", "--sigma", "1.0", "--epochs", "5",
        )
        assert code == 1
        assert err.count("\n") == 1 and "epoch" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "train", "--data", "/nonexistent/x.mv")
        assert code == 1
        assert err.count("\n") == 1

    def test_parse_error_carries_path_and_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.mv"
        bad.write_text("@schema 2 2\n1 1:9:1.0\n")
        code, _, err = run(capsys, "train", "--data", str(bad))
        assert code == 1
        assert str(bad) in err and "line 2" in err


class TestPredict:
    def test_scores_match_library_bit_for_bit(self, synth_files, tmp_path, capsys):
        data, teacher = synth_files
        out_path = tmp_path / "scores.txt"
        code, _, err = run(
            capsys, "predict", "--model", str(teacher), "--data", str(data),
            "--out", str(out_path),
        )
        assert code == 0, err
        written = [float(l) for l in out_path.read_text().splitlines()]
        expected = predict_dataset(load_model(teacher), load_dataset(data))
        np.testing.assert_array_equal(written, expected)

    def test_stdout_when_no_out(self, synth_files, capsys):
        data, teacher = synth_files
        code, out, _ = run(capsys, "predict", "--model", str(teacher), "--data", str(data))
        assert code == 0
        assert len(out.splitlines()) == 300

    def test_schema_mismatch(self, synth_files, tmp_path, capsys):
        _, teacher = synth_files
        other = tmp_path / "other.mv"
        run(capsys, "synth", "--dims", "3,3", "--n", "5", "--out", str(other))
        code, _, err = run(
            capsys, "predict", "--model", str(teacher), "--data", str(other)
        )
        assert code == 1
        assert err.count("\n") == 1 and "schema" in err

    def test_empty_dataset_gives_empty_output(self, synth_files, tmp_path, capsys):
        _, teacher = synth_files
        empty = tmp_path / "empty.mv"
        empty.write_text("@schema 6 5 4\n")
        out_path = tmp_path / "scores.txt"
        code, _, _ = run(
            capsys, "predict", "--model", str(teacher), "--data", str(empty),
            "--out", str(out_path),
        )
        assert code == 0
        assert out_path.read_text() == ""


class TestEval:
    def test_teacher_on_own_noiseless_data(self, synth_files, capsys):
        data, teacher = synth_files
        code, out, err = run(
            capsys, "eval", "--model", str(teacher), "--data", str(data),
            "--metrics", "acc,auc,logloss",
        )
        assert code == 0, err
        fields = out.strip().split("\t")
        values = dict(zip(fields[::2], (float(v) for v in fields[1::2])))
        assert values["acc"] == 1.0
        assert values["auc"] == 1.0
        assert values["logloss"] >= 0.0

    def test_rmse_matches_metrics_module(self, synth_files, capsys):
        from mvm import rmse

        data, teacher = synth_files
        code, out, _ = run(
            capsys, "eval", "--model", str(teacher), "--data", str(data),
            "--metrics", "rmse",
        )
        assert code == 0
        reported = float(out.strip().split("\t")[1])
        dataset = load_dataset(data)
        expected = rmse(predict_dataset(load_model(teacher), dataset), dataset.labels)
        assert reported == expected

    def test_single_class_auc_fails(self, synth_files, tmp_path, capsys):
        _, teacher = synth_files
        single = tmp_path / "single.mv"
        single.write_text("@schema 6 5 4\n1 1:1:1.0\n1 2:1:1.0\n")
        code, _, err = run(
            capsys, "eval", "--model", str(teacher), "--data", str(single),
            "--metrics", "auc",
        )
        assert code == 1
        assert err.count("\n") == 1 and "single class" in err

    def test_unknown_metric(self, synth_files, capsys):
        data, teacher = synth_files
        code, _, err = run(
            capsys, "eval", "--model", str(teacher), "--data", str(data),
            "--metrics", "acc,f1",
        )
        assert code == 2
        assert "f1" in err


class TestGradcheck:
    def test_passes_and_reports(self, capsys):
        code, out, err = run(
            capsys, "gradcheck", "--dims", "3,2,3", "--k", "2",
            "--trials", "10", "--seed", "1",
        )
        assert code == 0, err
        assert out.startswith("max_rel_error ")
        assert float(out.split()[1]) <= 1e-6


class TestUsageErrors:
    def test_unknown_flag(self, capsys):
        code, _, err = run(capsys, "train", "--data", "x", "--bogus")
        assert code == 2
        assert err.count("\n") == 1

    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 2
        assert err.count("\n") == 1

    def test_pipeline_reproducible(self, tmp_path, capsys):
        outputs = []
        for tag in ("a", "b"):
            data = tmp_path / f"{tag}.mv"
            model = tmp_path / f"{tag}.model"
            scores = tmp_path / f"{tag}.scores"
            run(capsys, "synth", "--dims", "4,4", "--n", "40", "--seed", "2",
                "--out", str(data))
            run(capsys, "train", "--data", str(data), "--model-out", str(model),
                "--k", "2", "--epochs", "4", "--seed", "8")
            run(capsys, "predict", "--model", str(model), "--data", str(data),
                "--out", str(scores))
            outputs.append((data.read_bytes(), model.read_bytes(), scores.read_bytes()))
        assert outputs[0] == outputs[1]
