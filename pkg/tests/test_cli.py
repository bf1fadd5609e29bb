import json

import numpy as np
import pytest

from plapreg.cli import main
from plapreg.dataio import load_csv, load_schema


def run_synth(tmp_path, name="data.csv", n=70, dim=4, seed=9, extra=()):
    out = tmp_path / name
    code = main([
        "synth", "--n", str(n), "--dim", str(dim), "--noise-sd", "0.05",
        "--seed", str(seed), "--out", str(out), *extra,
    ])
    assert code == 0
    return out, out.with_name(out.name + ".schema.json")


class TestSynth:
    def test_same_seed_byte_identical(self, tmp_path):
        a, _ = run_synth(tmp_path, "a.csv", seed=7)
        b, _ = run_synth(tmp_path, "b.csv", seed=7)
        assert a.read_bytes() == b.read_bytes()

    def test_reingest_drops_nothing(self, tmp_path):
        csv_path, schema_path = run_synth(tmp_path)
        out = tmp_path / "ingested"
        assert main(["ingest", "--input", str(csv_path), "--schema", str(schema_path), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["rows_before"] == summary["rows_after"] == 70

    def test_invalid_spec_exits_2(self, tmp_path):
        assert main(["synth", "--n", "0", "--out", str(tmp_path / "x.csv")]) == 2


class TestIngest:
    def test_summary_counts(self, tmp_path):
        csv_path = tmp_path / "raw.csv"
        csv_path.write_text("a,b,alm,gender\n1,2,3,M\n4,,6,F\n7,8,9,M\n1,1,1,F\n2,2,2,F\n")
        schema_path = tmp_path / "schema.json"
        schema_path.write_text(json.dumps({"a": "feature", "b": "feature", "alm": "target", "gender": "categorical"}))
        out = tmp_path / "out"
        assert main(["ingest", "--input", str(csv_path), "--schema", str(schema_path), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["rows_before"] == 5
        assert summary["rows_after"] == 4
        assert summary["missing_per_column"]["b"] == 1
        counts = summary["dataset_counts"]
        assert counts["male"] + counts["female"] == counts["combined"] == 4
        cleaned = load_csv(out / "cleaned.csv", load_schema(schema_path))
        assert cleaned.n_rows == 4

    def test_malformed_csv_exits_2(self, tmp_path):
        csv_path = tmp_path / "bad.csv"
        csv_path.write_text("a,b\n1\n")
        schema_path = tmp_path / "schema.json"
        schema_path.write_text(json.dumps({"a": "feature", "b": "feature"}))
        assert main(["ingest", "--input", str(csv_path), "--schema", str(schema_path), "--out", str(tmp_path / "o")]) == 2

    def test_missing_input_exits_2(self, tmp_path):
        assert main(["ingest", "--out", str(tmp_path / "o")]) == 2

    def test_full_size_complete_fixture_keeps_all_rows(self, tmp_path):
        csv_path, schema_path = run_synth(tmp_path, n=515, dim=44, seed=44)
        out = tmp_path / "full"
        assert main(["ingest", "--input", str(csv_path), "--schema", str(schema_path), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["rows_after"] == 515


class TestEval:
    def test_plaplace_report_files(self, tmp_path, capsys):
        csv_path, schema_path = run_synth(tmp_path)
        out = tmp_path / "eval"
        code = main([
            "eval", "--input", str(csv_path), "--schema", str(schema_path),
            "--target", "target", "--model", "plaplace", "--p", "3", "--k", "8",
            "--folds", "5", "--fold-mode", "standard", "--repeats", "2", "--seed", "1",
            "--out", str(out),
        ])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        [r] = report["reports"]
        assert np.asarray(r["rmse"], dtype=float).shape == (2, 5)
        assert report["config"]["p"] == 3.0
        table = capsys.readouterr().out
        assert "plaplace" in table and "rmse_mean" in table
        csv_text = (out / "report.csv").read_text()
        assert csv_text.startswith("target,dataset,model,p,k,")

    def test_ridge_on_linear_data_low_rmse(self, tmp_path, capsys):
        csv_path = tmp_path / "lin.csv"
        assert main([
            "synth", "--n", "80", "--dim", "3", "--target-fn", "linear",
            "--noise-sd", "0", "--seed", "3", "--out", str(csv_path),
        ]) == 0
        out = tmp_path / "eval"
        code = main([
            "eval", "--input", str(csv_path), "--schema", str(csv_path) + ".schema.json",
            "--model", "ridge", "--lambda", "1e-9", "--repeats", "2", "--out", str(out),
        ])
        assert code == 0
        [r] = json.loads((out / "report.json").read_text())["reports"]
        assert r["rmse_mean"] <= 0.1

    def test_invalid_fold_count_exits_3(self, tmp_path, capsys):
        csv_path, schema_path = run_synth(tmp_path)
        code = main([
            "eval", "--input", str(csv_path), "--schema", str(schema_path),
            "--model", "plaplace", "--folds", "1", "--out", str(tmp_path / "e"),
        ])
        assert code == 3
        assert "KOutOfRange" in capsys.readouterr().err

    def test_dataset_filter_male(self, tmp_path):
        csv_path, schema_path = run_synth(tmp_path, n=90)
        out = tmp_path / "eval"
        code = main([
            "eval", "--input", str(csv_path), "--schema", str(schema_path),
            "--dataset", "male", "--model", "plaplace", "--k", "5",
            "--folds", "3", "--repeats", "1", "--out", str(out),
        ])
        assert code == 0
        cfg = json.loads((out / "report.json").read_text())["config"]
        assert cfg["dataset"] == "male" and cfg["rows"] < 90


class TestSweep:
    def test_byte_identical_outputs(self, tmp_path):
        csv_path, schema_path = run_synth(tmp_path)
        args = [
            "sweep", "--input", str(csv_path), "--schema", str(schema_path),
            "--grid-p", "2,4", "--grid-k", "6,9", "--grid-train-pct", "20,50",
            "--repeats", "1", "--seed", "5",
        ]
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()
        assert (out1 / "optima.csv").read_bytes() == (out2 / "optima.csv").read_bytes()

    def test_optima_has_one_row_per_training_pct(self, tmp_path):
        csv_path, schema_path = run_synth(tmp_path)
        out = tmp_path / "s"
        assert main([
            "sweep", "--input", str(csv_path), "--schema", str(schema_path),
            "--grid-p", "2,3", "--grid-k", "6", "--grid-train-pct", "10,25,50",
            "--repeats", "1", "--seed", "2", "--out", str(out),
        ]) == 0
        lines = (out / "optima.csv").read_text().strip().split("\n")
        assert lines[0] == "training_pct,best_p,best_k,rmse_mean"
        assert len(lines) == 4


class TestAsymptotic:
    def test_series_files_per_k(self, tmp_path):
        csv_path, schema_path = run_synth(tmp_path, n=80)
        out = tmp_path / "a"
        code = main([
            "asymptotic", "--input", str(csv_path), "--schema", str(schema_path),
            "--grid-k", "5,9", "--grid-p", "2,10,100,inf", "--train-pct", "25",
            "--repeats", "1", "--seed", "4", "--out", str(out),
        ])
        assert code == 0
        assert (out / "asymptotic_k5.csv").exists()
        assert (out / "asymptotic_k9.csv").exists()
        body = (out / "asymptotic_k5.csv").read_text().strip().split("\n")
        assert body[0] == "p,rmse_mean" and body[-1].startswith("inf,")
        series = json.loads((out / "asymptotic.json").read_text())["series"]
        assert [s["k"] for s in series] == [5, 9]


class TestConfigFile:
    def test_config_supplies_values_and_flags_override(self, tmp_path):
        csv_path, schema_path = run_synth(tmp_path)
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({
            "input": str(csv_path), "schema": str(schema_path),
            "model": "plaplace", "k": 5, "folds": 3, "repeats": 1,
        }))
        out = tmp_path / "e1"
        assert main(["eval", "--config", str(config), "--out", str(out)]) == 0
        cfg = json.loads((out / "report.json").read_text())["config"]
        assert cfg["folds"] == 3 and cfg["k"] == 5

        out2 = tmp_path / "e2"
        assert main(["eval", "--config", str(config), "--folds", "4", "--out", str(out2)]) == 0
        cfg2 = json.loads((out2 / "report.json").read_text())["config"]
        assert cfg2["folds"] == 4

    def test_bad_config_exits_2(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text("not json")
        assert main(["eval", "--config", str(config), "--out", str(tmp_path / "o")]) == 2
