"""Harness subcommands: outputs, determinism, exit codes, config layering."""

import json
import hashlib

import numpy as np
import pytest

from avqfuse import cli


def run(*argv):
    return cli.main(list(argv))


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    code = run("synth-gen", "--outdir", str(out), "--n-total", "40")
    assert code == 0
    return out


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, dataset_dir):
    out = tmp_path_factory.mktemp("train")
    code = run(
        "train",
        "--data", str(dataset_dir),
        "--outdir", str(out),
        "--seeds", "0,1",
        "--max-epochs", "3",
    )
    assert code == 0
    return out


class TestSynthGen:
    def test_writes_three_splits_at_default_ratio(self, dataset_dir):
        sizes = {}
        for name, expected in (("train", 28), ("val", 6), ("test", 6)):
            path = dataset_dir / f"{name}.avqd"
            assert path.exists()
            from avqfuse.synth import load_dataset

            sizes[name] = len(load_dataset(path))
            assert sizes[name] == expected

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("synth-gen", "--outdir", str(a), "--n-total", "20") == 0
        assert run("synth-gen", "--outdir", str(b), "--n-total", "20") == 0
        for name in ("train.avqd", "val.avqd", "test.avqd"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_zero_count_is_usage_error(self, tmp_path, capsys):
        out = tmp_path / "zero"
        assert run("synth-gen", "--outdir", str(out), "--n-total", "0") == cli.EXIT_USAGE
        assert not (out / "train.avqd").exists()

    def test_prints_content_hashes(self, tmp_path, capsys):
        out = tmp_path / "hashed"
        assert run("synth-gen", "--outdir", str(out), "--n-total", "20") == 0
        stdout = capsys.readouterr().out
        expected = hashlib.sha256((out / "train.avqd").read_bytes()).hexdigest()
        assert expected in stdout

    def test_run_meta_written(self, dataset_dir):
        meta = json.loads((dataset_dir / "run-meta-synth-gen.json").read_text())
        assert meta["command"] == "synth-gen"
        assert meta["preset"] == "desk"
        assert len(meta["config_hash"]) == 64


class TestTrain:
    def test_history_structure(self, trained_dir):
        header, rows = read_csv(trained_dir / "history_seed0.csv")
        assert header == ["epoch", "train_loss", "val_plcc", "val_srocc"]
        assert len(rows) == 3
        assert [r[0] for r in rows] == ["0", "1", "2"]

    def test_two_seeds_two_distinct_artifacts(self, trained_dir):
        h0 = (trained_dir / "history_seed0.csv").read_bytes()
        h1 = (trained_dir / "history_seed1.csv").read_bytes()
        assert h0 != h1
        c0 = (trained_dir / "model_seed0.avqc").read_bytes()
        c1 = (trained_dir / "model_seed1.avqc").read_bytes()
        assert c0 != c1

    def test_rerun_byte_identical_outputs(self, tmp_path, dataset_dir):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(
                "train", "--data", str(dataset_dir), "--outdir", str(out),
                "--seeds", "0", "--max-epochs", "2",
            ) == 0
        assert (a / "history_seed0.csv").read_bytes() == (b / "history_seed0.csv").read_bytes()
        assert (a / "model_seed0.avqc").read_bytes() == (b / "model_seed0.avqc").read_bytes()

    def test_does_not_mutate_input_dataset(self, tmp_path, dataset_dir):
        before = {n: (dataset_dir / n).read_bytes() for n in ("train.avqd", "val.avqd", "test.avqd")}
        assert run(
            "train", "--data", str(dataset_dir), "--outdir", str(tmp_path / "t"),
            "--seeds", "0", "--max-epochs", "2",
        ) == 0
        for name, blob in before.items():
            assert (dataset_dir / name).read_bytes() == blob

    def test_missing_dataset_is_io_error(self, tmp_path):
        assert run(
            "train", "--data", str(tmp_path / "nowhere"), "--outdir", str(tmp_path / "o"),
            "--seeds", "0",
        ) == cli.EXIT_IO

    def test_corrupt_dataset_is_format_error(self, tmp_path, dataset_dir, capsys):
        bad = tmp_path / "corrupt"
        bad.mkdir()
        blob = (dataset_dir / "train.avqd").read_bytes()
        (bad / "train.avqd").write_bytes(blob[: len(blob) - 11])
        (bad / "val.avqd").write_bytes((dataset_dir / "val.avqd").read_bytes())
        assert run("train", "--data", str(bad), "--outdir", str(tmp_path / "o"), "--seeds", "0") == cli.EXIT_FORMAT
        assert "byte offset" in capsys.readouterr().err


class TestEval:
    def test_eval_outputs(self, tmp_path, dataset_dir, trained_dir):
        out = tmp_path / "eval"
        assert run(
            "eval",
            "--checkpoint", str(trained_dir / "model_seed0.avqc"),
            "--data", str(dataset_dir / "test.avqd"),
            "--outdir", str(out),
        ) == 0
        header, rows = read_csv(out / "eval_report.csv")
        assert header == ["n", "plcc_raw", "plcc_fitted", "srocc", "beta1", "beta2", "beta3", "beta4"]
        assert rows[0][0] == "6"
        preds = [float(x) for x in (out / "eval_predictions.txt").read_text().split()]
        mos = [float(x) for x in (out / "eval_mos.txt").read_text().split()]
        assert len(preds) == len(mos) == 6
        assert all(0.0 <= p <= 1.0 for p in preds)


class TestAblate:
    def test_row_structure_and_labels(self, tmp_path, dataset_dir):
        out = tmp_path / "abl"
        assert run(
            "ablate", "--data", str(dataset_dir), "--outdir", str(out),
            "--seeds", "0", "--max-epochs", "2",
        ) == 0
        header, rows = read_csv(out / "ablation.csv")
        assert header == ["avm", "vcm", "acm", "seed", "plcc_fitted", "srocc"]
        assert len(rows) == 5 * (1 + 1)  # per-seed rows plus one mean row per config
        labels = [tuple(r[:3]) for r in rows[::2]]
        assert labels == [
            ("-", "-", "-"),
            ("+", "-", "-"),
            ("+", "+", "-"),
            ("+", "-", "+"),
            ("+", "+", "+"),
        ]
        mean_rows = [r for r in rows if r[3] == "mean"]
        assert len(mean_rows) == 5


class TestAsymmetric:
    def test_rows_and_recomputable_summaries(self, tmp_path):
        out = tmp_path / "asym"
        assert run(
            "asymmetric", "--outdir", str(out),
            "--n-train", "14", "--n-val", "6", "--n-test", "6",
            "--runs", "2", "--max-epochs", "2",
        ) == 0
        header, rows = read_csv(out / "asymmetric.csv")
        assert header == ["row_type", "model", "condition", "run", "srocc", "median", "iqr"]
        run_rows = [r for r in rows if r[0] == "run"]
        summary_rows = [r for r in rows if r[0] == "summary"]
        assert len(run_rows) == 3 * 2 * 2  # models x conditions x runs
        assert len(summary_rows) == 3 * 2
        for srow in summary_rows:
            vals = np.array(
                [float(r[4]) for r in run_rows if r[1] == srow[1] and r[2] == srow[2]]
            )
            q25, q75 = np.percentile(vals, [25.0, 75.0])
            assert srow[5] == cli.fmt(np.median(vals))
            assert srow[6] == cli.fmt(q75 - q25)


class TestSignificance:
    def _write(self, path, values):
        path.write_text("".join(f"{v:.17g}\n" for v in values))

    def test_shifted_fixture_exact_wilcoxon(self, tmp_path, capsys):
        pred_a = np.arange(1.0, 11.0)
        pred_b = pred_a + 1.0
        mos = np.zeros(10)
        self._write(tmp_path / "a.txt", pred_a)
        self._write(tmp_path / "b.txt", pred_b)
        self._write(tmp_path / "m.txt", mos)
        out = tmp_path / "sig"
        assert run(
            "significance", "--pred-a", str(tmp_path / "a.txt"), "--pred-b", str(tmp_path / "b.txt"),
            "--mos", str(tmp_path / "m.txt"), "--outdir", str(out),
        ) == 0
        header, rows = read_csv(out / "significance.csv")
        table = dict(rows)
        assert float(table["wilcoxon_p_two_sided"]) == pytest.approx(2.0 / 1024.0, abs=1e-8)
        assert float(table["wilcoxon_p_one_sided"]) == pytest.approx(1.0 / 1024.0, abs=1e-8)
        assert float(table["alpha"]) == 0.05
        assert float(table["mean_abs_err_diff"]) == pytest.approx(-1.0, abs=1e-9)
        assert table["degenerate"] == "false"

    def test_identical_predictions_degenerate_flag(self, tmp_path):
        vals = np.linspace(0.1, 0.9, 8)
        self._write(tmp_path / "a.txt", vals)
        self._write(tmp_path / "b.txt", vals)
        self._write(tmp_path / "m.txt", np.zeros(8))
        out = tmp_path / "sig"
        assert run(
            "significance", "--pred-a", str(tmp_path / "a.txt"), "--pred-b", str(tmp_path / "b.txt"),
            "--mos", str(tmp_path / "m.txt"), "--outdir", str(out),
        ) == 0
        table = dict(read_csv(out / "significance.csv")[1])
        assert table["degenerate"] == "true"

    def test_length_mismatch_is_usage_error(self, tmp_path):
        self._write(tmp_path / "a.txt", np.ones(6))
        self._write(tmp_path / "b.txt", np.ones(6))
        self._write(tmp_path / "m.txt", np.ones(5))
        assert run(
            "significance", "--pred-a", str(tmp_path / "a.txt"), "--pred-b", str(tmp_path / "b.txt"),
            "--mos", str(tmp_path / "m.txt"), "--outdir", str(tmp_path / "s"),
        ) == cli.EXIT_USAGE

    def test_non_numeric_file_is_format_error(self, tmp_path):
        (tmp_path / "a.txt").write_text("0.5\nnot-a-number\n")
        self._write(tmp_path / "b.txt", np.ones(2))
        self._write(tmp_path / "m.txt", np.ones(2))
        assert run(
            "significance", "--pred-a", str(tmp_path / "a.txt"), "--pred-b", str(tmp_path / "b.txt"),
            "--mos", str(tmp_path / "m.txt"), "--outdir", str(tmp_path / "s"),
        ) == cli.EXIT_FORMAT


class TestGradcheck:
    def test_passes_and_reports_all_groups(self, tmp_path, capsys):
        out = tmp_path / "gc"
        assert run("gradcheck", "--outdir", str(out)) == 0
        stdout = capsys.readouterr().out
        header, rows = read_csv(out / "gradcheck.csv")
        assert header == ["group", "max_rel_err", "status"]
        groups = {r[0] for r in rows}
        assert groups == {
            "mixer.w_audio", "mixer.w_visual", "mixer.w_gate",
            "vcm.kernel", "vcm.heads", "vcm.combiner",
            "fusion.hidden", "fusion.output",
        }
        assert len(rows) == 8
        assert all(r[2] == "ok" for r in rows)
        assert all(float(r[1]) < 1e-5 for r in rows)
        assert "worst group error" in stdout

    def test_injected_backward_bug_fails_with_check_exit(self, capsys):
        assert run("gradcheck", "--selftest-corrupt-grad") == cli.EXIT_CHECK
        stdout = capsys.readouterr().out
        assert "FAIL" in stdout


class TestConfigLayering:
    def test_config_file_applies_and_flags_override(self, tmp_path):
        cfg = tmp_path / "run.ini"
        outdir = tmp_path / "from-config"
        cfg.write_text(f"[common]\noutdir = {outdir}\n\n[synth-gen]\nn-total = 20\n")
        assert run("synth-gen", "--config", str(cfg)) == 0
        from avqfuse.synth import load_dataset

        assert len(load_dataset(outdir / "train.avqd")) == 14
        override = tmp_path / "override"
        assert run("synth-gen", "--config", str(cfg), "--outdir", str(override), "--n-total", "40") == 0
        assert len(load_dataset(override / "train.avqd")) == 28

    def test_unknown_config_key_is_usage_error(self, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[synth-gen]\nmystery-knob = 1\n")
        assert run("synth-gen", "--config", str(cfg), "--outdir", str(tmp_path / "o")) == cli.EXIT_USAGE

    def test_missing_config_file_is_io_error(self, tmp_path):
        assert run("synth-gen", "--config", str(tmp_path / "none.ini"), "--outdir", str(tmp_path / "o")) == cli.EXIT_IO

    def test_paper_hparams_recorded_in_meta(self, tmp_path, dataset_dir):
        out = tmp_path / "paper"
        assert run(
            "train", "--data", str(dataset_dir), "--outdir", str(out),
            "--seeds", "0", "--max-epochs", "2", "--paper-hparams",
        ) == 0
        meta = json.loads((out / "run-meta-train.json").read_text())
        assert meta["preset"] == "paper"

    def test_missing_outdir_is_usage_error(self):
        assert run("synth-gen", "--n-total", "20") == cli.EXIT_USAGE
