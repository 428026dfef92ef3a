from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from hitpredict.cli import main
from hitpredict.records_io import load_labeled, load_records

from .conftest import make_record


def run(args: list[str]) -> int:
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def synth_file(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "labeled.csv"
    assert run(["synth", "--n", 400, "--hits", 60, "--seed", 5, "--out", path]) == 0
    return path


class TestSynth:
    def test_default_scale(self, tmp_path, capsys):
        out = tmp_path / "full.csv"
        assert run(["synth", "--out", out]) == 0
        assert "1826 non hits, 237 hits" in capsys.readouterr().out
        records, labels = load_labeled(out)
        assert len(records) == 2063
        assert int(labels.sum()) == 237

    def test_small_even_split(self, tmp_path, capsys):
        out = tmp_path / "ten.csv"
        assert run(["synth", "--n", 10, "--hits", 5, "--out", out]) == 0
        assert "5 non hits, 5 hits" in capsys.readouterr().out

    def test_bad_counts_exit_2(self, tmp_path):
        assert run(["synth", "--n", 10, "--hits", 10, "--out", tmp_path / "x.csv"]) == 2


class TestLabel:
    def test_distribution_line(self, tmp_path, capsys):
        src = tmp_path / "records.csv"
        from hitpredict.records_io import save_records

        records = [make_record(f"t{i}", title=f"S{i}", popularity=p) for i, p in enumerate([10, 48, 82, 47])]
        save_records(records, src)
        out = tmp_path / "labeled.csv"
        assert run(["label", "--in", src, "--out", out]) == 0
        assert "2 non hits, 2 hits" in capsys.readouterr().out
        _, labels = load_labeled(out)
        assert labels.tolist() == [0, 1, 1, 0]

    def test_lower_threshold_finds_more_hits(self, synth_file, tmp_path):
        at47 = tmp_path / "47.csv"
        at25 = tmp_path / "25.csv"
        assert run(["label", "--in", synth_file, "--out", at47, "--threshold", 47]) == 0
        assert run(["label", "--in", synth_file, "--out", at25, "--threshold", 25]) == 0
        _, l47 = load_labeled(at47)
        _, l25 = load_labeled(at25)
        assert int(l25.sum()) > int(l47.sum())

    def test_empty_input_exits_2(self, tmp_path):
        src = tmp_path / "empty.csv"
        from hitpredict.records_io import save_records

        save_records([], src)
        assert run(["label", "--in", src, "--out", tmp_path / "o.csv"]) == 2

    def test_relabels_labeled_files(self, synth_file, tmp_path):
        out = tmp_path / "relabel.csv"
        assert run(["label", "--in", synth_file, "--out", out, "--threshold", 0]) == 0
        _, labels = load_labeled(out)
        assert labels.min() >= 0


class TestTrain:
    def test_manifest_records_three_way_sizes(self, tmp_path):
        data = tmp_path / "big.csv"
        assert run(["synth", "--out", data, "--seed", 3]) == 0
        model = tmp_path / "rf.json"
        assert run(["train", "--in", data, "--model", "rf", "--seed", 3, "--out", model,
                    "--n-estimators", 5]) == 0
        manifest = json.loads(Path(str(model) + ".manifest.json").read_text())
        assert manifest["extra"]["sizes"] == {"train": 1237, "validation": 413, "test": 413}
        assert manifest["inputs"]  # input digest recorded

    def test_nn_two_way_sizes(self, tmp_path):
        data = tmp_path / "big.csv"
        assert run(["synth", "--out", data, "--seed", 4]) == 0
        model = tmp_path / "nn.json"
        assert run(["train", "--in", data, "--model", "nn", "--split", "nn-two-way",
                    "--seed", 4, "--epochs", 1, "--out", model]) == 0
        manifest = json.loads(Path(str(model) + ".manifest.json").read_text())
        assert manifest["extra"]["sizes"]["test"] == 619
        assert manifest["extra"]["sizes"]["validation"] == 0

    def test_same_seed_byte_identical_models(self, synth_file, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        args = ["train", "--in", synth_file, "--model", "xgb", "--seed", 11,
                "--n-estimators", 4]
        assert run(args + ["--out", a]) == 0
        assert run(args + ["--out", b]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_single_class_exits_4(self, tmp_path):
        from hitpredict.records_io import save_labeled

        src = tmp_path / "mono.csv"
        records = [make_record(f"t{i}", title=f"S{i}") for i in range(8)]
        save_labeled(records, np.zeros(8, dtype=int), src)
        assert run(["train", "--in", src, "--model", "dt", "--out", tmp_path / "m.json"]) == 4
        assert not (tmp_path / "m.json").exists()  # nothing written on failure

    def test_export_indices(self, synth_file, tmp_path):
        model = tmp_path / "dt.json"
        indices = tmp_path / "split.json"
        assert run(["train", "--in", synth_file, "--model", "dt", "--seed", 2,
                    "--out", model, "--export-indices", indices]) == 0
        doc = json.loads(indices.read_text())
        n = len(doc["train"]) + len(doc["validation"]) + len(doc["test"])
        assert n == 400
        assert doc["seed"] == 2

    def test_unknown_hyperparameter_for_variant_exits_2(self, synth_file, tmp_path):
        # epochs belongs to the nn variant, not dt
        assert run(["train", "--in", synth_file, "--model", "dt", "--epochs", 5,
                    "--out", tmp_path / "m.json"]) == 2


class TestEvaluate:
    @pytest.fixture(scope="class")
    def trained(self, tmp_path_factory):
        root = tmp_path_factory.mktemp("evalrun")
        data = root / "labeled.csv"
        assert run(["synth", "--n", 500, "--hits", 70, "--seed", 9, "--out", data]) == 0
        model = root / "rf.json"
        assert run(["train", "--in", data, "--model", "rf", "--seed", 9,
                    "--n-estimators", 20, "--out", model]) == 0
        return data, model

    def test_report_schema(self, trained, tmp_path):
        data, model = trained
        report_path = tmp_path / "report.json"
        roc_path = tmp_path / "roc.csv"
        assert run(["evaluate", "--model", model, "--in", data, "--partition", "validation",
                    "--out", report_path, "--roc-csv", roc_path]) == 0
        doc = json.loads(report_path.read_text())
        assert set(doc["metrics"]) == {"per_class_0", "per_class_1", "weighted"}
        assert doc["model_variant"] == "rf"
        assert doc["partition"] == "validation"
        assert doc["roc"]["points"][0] == [0.0, 0.0]
        importance = dict(doc["feature_importance"])
        assert sum(importance.values()) == pytest.approx(1.0, abs=1e-4)
        assert roc_path.read_text().startswith("false_positive_rate,true_positive_rate")

    def test_perfect_model_on_train_partition(self, tmp_path):
        # labels derivable from one feature: a tree fits the train rows exactly
        from hitpredict.records_io import save_labeled

        data = tmp_path / "easy.csv"
        records = []
        labels = []
        for i in range(60):
            hit = i % 3 == 0
            records.append(
                make_record(f"t{i}", title=f"S{i}", danceability=0.9 if hit else 0.1,
                            popularity=60 if hit else 10)
            )
            labels.append(int(hit))
        save_labeled(records, np.array(labels), data)
        model = tmp_path / "dt.json"
        assert run(["train", "--in", data, "--model", "dt", "--seed", 1, "--out", model]) == 0
        report_path = tmp_path / "train-report.json"
        assert run(["evaluate", "--model", model, "--in", data, "--partition", "train",
                    "--out", report_path]) == 0
        doc = json.loads(report_path.read_text())
        assert doc["metrics"]["weighted"]["accuracy"] == 1.0

    def test_empty_partition_exits_2(self, tmp_path):
        data = tmp_path / "d.csv"
        assert run(["synth", "--n", 50, "--hits", 10, "--seed", 2, "--out", data]) == 0
        model = tmp_path / "nn.json"
        assert run(["train", "--in", data, "--model", "nn", "--split", "nn-two-way",
                    "--seed", 2, "--epochs", 1, "--out", model]) == 0
        assert run(["evaluate", "--model", model, "--in", data, "--partition", "validation",
                    "--out", tmp_path / "r.json"]) == 2


class TestGridsearch:
    def test_single_cell_grid(self, synth_file, tmp_path):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"batch_size": [8], "epochs": [1], "learning_rate": [0.01]}))
        out = tmp_path / "result.json"
        assert run(["gridsearch", "--model", "nn", "--grid", grid, "--in", synth_file,
                    "--seed", 1, "--out", out]) == 0
        doc = json.loads(out.read_text())
        assert doc["best_config"]["batch_size"] == 8
        assert doc["best_config"]["learning_rate"] == 0.01
        assert len(doc["cells"]) == 1

    def test_two_by_two_grid_lists_four_cells(self, synth_file, tmp_path):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"max_depth": [2, 4], "min_samples_split": [2, 10]}))
        out = tmp_path / "result.json"
        assert run(["gridsearch", "--model", "dt", "--grid", grid, "--in", synth_file,
                    "--seed", 1, "--out", out]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["cells"]) == 4

    def test_rerun_identical_output(self, synth_file, tmp_path):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"max_depth": [2, 3]}))
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        args = ["gridsearch", "--model", "dt", "--grid", grid, "--in", synth_file, "--seed", 7]
        assert run(args + ["--out", a]) == 0
        assert run(args + ["--out", b]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestReport:
    def _make_reports(self, synth_file, tmp_path, variants):
        paths = []
        for i, variant in enumerate(variants):
            model = tmp_path / f"{variant}{i}.json"
            extra = []
            if variant == "nn":
                extra = ["--epochs", 1]
            if variant in ("rf", "xgb"):
                extra = ["--n-estimators", 4]
            assert run(["train", "--in", synth_file, "--model", variant, "--seed", i,
                        "--out", model] + extra) == 0
            report = tmp_path / f"report-{variant}{i}.json"
            assert run(["evaluate", "--model", model, "--in", synth_file,
                        "--partition", "test", "--out", report]) == 0
            paths.append(report)
        return paths

    def test_five_reports_make_five_rows(self, synth_file, tmp_path):
        reports = self._make_reports(synth_file, tmp_path, ["lr", "dt", "rf", "xgb", "nn"])
        out = tmp_path / "summary.md"
        assert run(["report", "--reports", *reports, "--out", out]) == 0
        body = out.read_text()
        rows = [line for line in body.splitlines() if line.startswith("|") and "---" not in line]
        assert len(rows) - 1 == 5  # header + one row per model

    def test_importance_tables_sum_to_one(self, synth_file, tmp_path):
        reports = self._make_reports(synth_file, tmp_path, ["rf"])
        out = tmp_path / "summary.md"
        assert run(["report", "--reports", *reports, "--out", out]) == 0
        body = out.read_text()
        assert "Feature importance (rf):" in body
        # two-column rows after the importance header are (feature, share)
        shares = []
        for line in body.splitlines():
            cells = [c.strip() for c in line.split("|")]
            if len(cells) == 4 and cells[2] not in ("share", "---") and cells[2]:
                shares.append(float(cells[2]))
        assert len(shares) == 13
        assert sum(shares) == pytest.approx(1.0, abs=2e-3)  # rounded to 4 d.p. per row

    def test_missing_field_exits_2_naming_it(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"model_variant": "lr", "metrics": {"weighted": {"accuracy": 1.0}}}))
        assert run(["report", "--reports", bad, "--out", tmp_path / "s.md"]) == 2
        assert "precision" in capsys.readouterr().err

    def test_csv_output(self, synth_file, tmp_path):
        reports = self._make_reports(synth_file, tmp_path, ["dt"])
        out = tmp_path / "summary.csv"
        assert run(["report", "--reports", *reports, "--out", out]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "model,accuracy,precision,recall,f1"
        assert lines[1].startswith("dt,")


class TestIngest:
    def test_offline_fixture_run(self, spotify_fixtures_dir, tmp_path, capsys):
        out = tmp_path / "records.csv"
        playlists = tmp_path / "playlists.txt"
        playlists.write_text("afrobeats-fixture-137 seed playlist\n")
        assert run(["ingest", "--playlists", playlists, "--out", out,
                    "--offline-fixtures", spotify_fixtures_dir]) == 0
        records = load_records(out)
        assert len(records) == 137
        assert "wrote 137 records" in capsys.readouterr().out

    def test_rerun_byte_identical(self, spotify_fixtures_dir, tmp_path):
        playlists = tmp_path / "playlists.txt"
        playlists.write_text("afrobeats-fixture-137\n")
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for out in (a, b):
            assert run(["ingest", "--playlists", playlists, "--out", out,
                        "--offline-fixtures", spotify_fixtures_dir]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_missing_credentials_exit_2_names_env_vars(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("SPOTIFY_CLIENT_ID", raising=False)
        monkeypatch.delenv("SPOTIFY_CLIENT_SECRET", raising=False)
        playlists = tmp_path / "playlists.txt"
        playlists.write_text("whatever\n")
        assert run(["ingest", "--playlists", playlists, "--out", tmp_path / "o.csv"]) == 2
        err = capsys.readouterr().err
        assert "SPOTIFY_CLIENT_ID" in err and "SPOTIFY_CLIENT_SECRET" in err

    def test_year_filter_flag(self, spotify_fixtures_dir, tmp_path):
        playlists = tmp_path / "playlists.txt"
        playlists.write_text("afrobeats-fixture-137\n")
        out = tmp_path / "filtered.csv"
        assert run(["ingest", "--playlists", playlists, "--out", out,
                    "--offline-fixtures", spotify_fixtures_dir, "--years", "2015..2018"]) == 0
        for record in load_records(out):
            assert 2015 <= record.release_year <= 2018

    def test_summary_json(self, spotify_fixtures_dir, tmp_path):
        playlists = tmp_path / "playlists.txt"
        playlists.write_text("afrobeats-fixture-137\n")
        summary = tmp_path / "summary.json"
        assert run(["ingest", "--playlists", playlists, "--out", tmp_path / "o.csv",
                    "--offline-fixtures", spotify_fixtures_dir, "--summary-json", summary]) == 0
        doc = json.loads(summary.read_text())
        assert doc["kept"] == 137


class TestConfigFile:
    def test_config_supplies_defaults_and_flags_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 12, "hits": 3, "seed": 2}))
        out = tmp_path / "a.csv"
        assert run(["synth", "--config", cfg, "--out", out]) == 0
        assert "9 non hits, 3 hits" in capsys.readouterr().out
        out2 = tmp_path / "b.csv"
        assert run(["synth", "--config", cfg, "--hits", 5, "--out", out2]) == 0
        assert "7 non hits, 5 hits" in capsys.readouterr().out

    def test_bad_config_exits_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1,2,3]")
        assert run(["synth", "--config", cfg, "--out", tmp_path / "x.csv"]) == 2
        assert run(["synth", "--config", tmp_path / "missing.json", "--out", tmp_path / "y.csv"]) == 2
