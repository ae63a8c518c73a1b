"""End-to-end tests of the command-line surface and its exit codes."""


import pytest

from attnboost.cli import run_command

FAST_TRAIN = [
    "--boost.n_estimators", "12", "--boost.max_depth", "3",
    "--boost.min_child_weight", "0.5", "--boost.gamma", "0",
    "--attention.k", "6", "--attention.epochs", "2",
]


def _run(*argv):
    return run_command(list(argv))


@pytest.fixture()
def synth_csv(tmp_path):
    path = str(tmp_path / "data.csv")
    assert _run("synth", "--rows", "300", "--seed", "7", "--out", path) == 0
    return path


@pytest.fixture()
def trained(tmp_path, synth_csv):
    model = str(tmp_path / "model.bin")
    metrics = str(tmp_path / "metrics.csv")
    test_csv = str(tmp_path / "test.csv")
    code = _run("train", "--data", synth_csv, *FAST_TRAIN,
                "--out", model, "--metrics-out", metrics, "--test-out", test_csv)
    assert code == 0
    return model, metrics, test_csv


class TestSynth:
    def test_row_count_and_header(self, tmp_path):
        path = str(tmp_path / "s.csv")
        assert _run("synth", "--rows", "500", "--seed", "7", "--out", path) == 0
        lines = open(path).read().splitlines()
        assert len(lines) == 501
        assert lines[0].split(",")[0] == "Order Date"

    def test_deterministic_output(self, tmp_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert _run("synth", "--rows", "100", "--seed", "3", "--out", a) == 0
        assert _run("synth", "--rows", "100", "--seed", "3", "--out", b) == 0
        assert open(a, "rb").read() == open(b, "rb").read()


class TestTrainEvaluatePredict:
    def test_train_then_evaluate_matches(self, tmp_path, trained):
        model, metrics, test_csv = trained
        eval_out = str(tmp_path / "eval.csv")
        assert _run("evaluate", "--model", model, "--data", test_csv,
                    "--out", eval_out) == 0
        train_rows = {line.split(",")[0]: line.split(",")[1:]
                      for line in open(metrics).read().splitlines()[1:]}
        eval_row = open(eval_out).read().splitlines()[1].split(",")[1:]
        assert eval_row == train_rows["test"]

    def test_predict_row_count_and_header(self, tmp_path, trained):
        model, _, test_csv = trained
        out = str(tmp_path / "pred.csv")
        assert _run("predict", "--model", model, "--data", test_csv, "--out", out) == 0
        lines = open(out).read().splitlines()
        assert lines[0] == "row_index,probability,label"
        assert len(lines) - 1 == len(open(test_csv).read().splitlines()) - 1
        for line in lines[1:3]:
            _, proba, label = line.split(",")
            assert 0.0 <= float(proba) <= 1.0
            assert label in ("0", "1")

    def test_predict_accepts_unlabeled_csv(self, tmp_path, trained):
        model, _, test_csv = trained
        lines = open(test_csv).read().splitlines()
        header = lines[0].split(",")
        drop = header.index("Returned")
        unlabeled = str(tmp_path / "unlabeled.csv")
        with open(unlabeled, "w") as handle:
            for line in lines:
                cells = line.split(",")
                del cells[drop]
                handle.write(",".join(cells) + "\n")
        out = str(tmp_path / "pred2.csv")
        assert _run("predict", "--model", model, "--data", unlabeled, "--out", out) == 0
        assert len(open(out).read().splitlines()) == len(lines)

    def test_train_twice_byte_identical_outputs(self, tmp_path, synth_csv):
        results = []
        for tag in ("x", "y"):
            model = str(tmp_path / f"{tag}.bin")
            metrics = str(tmp_path / f"{tag}.csv")
            assert _run("train", "--data", synth_csv, *FAST_TRAIN,
                        "--out", model, "--metrics-out", metrics) == 0
            results.append((open(model, "rb").read(), open(metrics, "rb").read()))
        assert results[0] == results[1]

    def test_variant_flag(self, tmp_path, synth_csv):
        model = str(tmp_path / "na.bin")
        assert _run("train", "--data", synth_csv, *FAST_TRAIN,
                    "--model.variant", "no_attention", "--out", model) == 0
        from attnboost.model_io import load_model

        assert load_model(model).variant == "no_attention"


class TestImportanceCommand:
    def test_report_and_csv(self, tmp_path, trained, capsys):
        model, _, _ = trained
        csv_out = str(tmp_path / "imp.csv")
        assert _run("importance", "--model", model, "--top", "3",
                    "--csv-out", csv_out) == 0
        printed = capsys.readouterr().out
        assert "feature" in printed
        lines = open(csv_out).read().splitlines()
        assert lines[0] == "rank,feature,gain,share,splits"
        assert len(lines) == 4


class TestAblateAndRemoveFeatures:
    def test_ablate_writes_seven_rows(self, tmp_path):
        out = str(tmp_path / "results.csv")
        code = _run("ablate", "--synthetic", "--synth.rows", "400",
                    *FAST_TRAIN, "--out", out)
        assert code == 0
        lines = [l for l in open(out).read().splitlines() if not l.startswith("#")]
        assert len(lines) == 8  # header + 7 conditions
        assert any(l.startswith("# fingerprint=") for l in open(out).read().splitlines())

    def test_remove_features_rows(self, tmp_path):
        out = str(tmp_path / "removal.csv")
        code = _run("remove-features", "--synthetic", "--synth.rows", "400",
                    *FAST_TRAIN, "--features", "Discount,Sales", "--out", out)
        assert code == 0
        names = [l.split(",")[0] for l in open(out).read().splitlines()
                 if l and not l.startswith("#")][1:]
        assert names == ["Discount Removed", "Sales Removed", "None (Full Model)"]


class TestConfigHandling:
    def test_config_file_applied_and_cli_overrides(self, tmp_path, synth_csv):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("boost.n_estimators=12\nboost.max_depth=3\n"
                       "boost.min_child_weight=0.5\nboost.gamma=0\n"
                       "attention.k=6\nattention.epochs=2\nsplit.seed=5\n")
        model = str(tmp_path / "m.bin")
        assert _run("train", "--data", synth_csv, "--config", str(cfg),
                    "--split.seed", "9", "--out", model) == 0

    def test_unknown_config_key_exits_2(self, tmp_path, synth_csv):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("boost.n_estimatorz=12\n")
        model = str(tmp_path / "m.bin")
        assert _run("train", "--data", synth_csv, "--config", str(cfg),
                    "--out", model) == 2

    def test_both_sources_rejected(self, tmp_path, synth_csv):
        assert _run("train", "--data", synth_csv, "--synthetic",
                    "--out", str(tmp_path / "m.bin")) == 2

    def test_thread_cap_env_validated(self, synth_csv, tmp_path, monkeypatch):
        monkeypatch.setenv("ATTNBOOST_THREADS", "zero")
        assert _run("synth", "--rows", "10", "--out", str(tmp_path / "t.csv")) == 2
        monkeypatch.setenv("ATTNBOOST_THREADS", "1")
        assert _run("synth", "--rows", "10", "--out", str(tmp_path / "t.csv")) == 0


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert _run("frobnicate") == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert _run("synth", "--bogus", "1") == 2

    def test_missing_data_file(self, tmp_path):
        assert _run("train", "--data", "/no/such.csv",
                    "--out", str(tmp_path / "m.bin")) == 1

    def test_missing_model_file(self, synth_csv):
        assert _run("predict", "--model", "/no/such.bin", "--data", synth_csv) == 1

    def test_help_exits_zero(self, capsys):
        assert _run("--help") == 0
        assert "attnboost" in capsys.readouterr().out
