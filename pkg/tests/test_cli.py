import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from helpers import make_items
from ragcal import dump_dataset
from ragcal.cli import main


@pytest.fixture
def dataset_path(tmp_path):
    path = tmp_path / "items.jsonl"
    dump_dataset(make_items(6), path)
    return path


def run_cli(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


class TestRunCommand:
    def test_full_grid(self, dataset_path, tmp_path):
        out = tmp_path / "run"
        result = run_cli(
            "run",
            "--dataset", dataset_path,
            "--out", out,
            "--cache-dir", tmp_path / "cache",
            "--seed", 3,
            "--synth-relevance", 2.0,
            "--synth-noise", 0.5,
            "--no-figures",
        )
        assert result.exit_code == 0, result.output
        assert "scored 60/60 grid cells" in result.output
        assert (out / "records.jsonl").exists()
        assert (out / "report.md").exists()

    def test_figures_rendered(self, dataset_path, tmp_path):
        out = tmp_path / "run"
        result = run_cli(
            "run",
            "--dataset", dataset_path,
            "--out", out,
            "--cache-dir", tmp_path / "cache",
            "--synth-noise", 1.0,
            "--mixtures", "none,ans1",
            "--positions", "pre-q",
        )
        assert result.exit_code == 0, result.output
        assert (out / "violin.png").exists()

    def test_mixture_subset_and_counts(self, dataset_path, tmp_path):
        result = run_cli(
            "run",
            "--dataset", dataset_path,
            "--out", tmp_path / "run",
            "--cache-dir", tmp_path / "cache",
            "--mixtures", "none,oth3",
            "--positions", "aft-q,aft-c",
            "--no-figures",
        )
        assert result.exit_code == 0
        assert "scored 18/18" in result.output  # 6 * (1*2 + 1)

    def test_unknown_mixture_rejected(self, dataset_path, tmp_path):
        result = CliRunner().invoke(
            main,
            ["run", "--dataset", str(dataset_path), "--mixtures", "nonsense"],
        )
        assert result.exit_code == 2
        assert "unknown mixture" in result.output

    def test_remote_requires_endpoint(self, dataset_path):
        result = CliRunner().invoke(
            main, ["run", "--dataset", str(dataset_path), "--backend", "remote"]
        )
        assert result.exit_code == 2
        assert "endpoint" in result.output

    def test_partial_run_exits_3(self, tmp_path):
        # items without rationale and --all-items: doc mixtures fail per cell
        path = tmp_path / "bare.jsonl"
        dump_dataset(make_items(4, with_rationale=False), path)
        result = CliRunner().invoke(
            main,
            [
                "run",
                "--dataset", str(path),
                "--out", str(tmp_path / "run"),
                "--cache-dir", str(tmp_path / "cache"),
                "--all-items",
                "--no-figures",
            ],
        )
        assert result.exit_code == 3
        assert "cells failed" in result.output
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["complete"] is False
        assert len(manifest["failed_cells"]) == 4 * 9

    def test_config_file_overrides_flags(self, dataset_path, tmp_path):
        config = {
            "mixtures": ["none", "ans1"],
            "positions": ["aft-c"],
            "seed": 11,
            "out": str(tmp_path / "from-config"),
            "synthetic": {"relevance_sensitivity": 3.0},
        }
        config_path = tmp_path / "run.json"
        config_path.write_text(json.dumps(config))
        result = run_cli(
            "run",
            "--dataset", dataset_path,
            "--out", tmp_path / "ignored",
            "--cache-dir", tmp_path / "cache",
            "--seed", 1,
            "--no-figures",
            "--config", config_path,
        )
        assert result.exit_code == 0, result.output
        assert not (tmp_path / "ignored").exists()
        records = (tmp_path / "from-config" / "records.jsonl").read_text().splitlines()
        assert len(records) == 12  # 6 items x (ans1 x aft-c + baseline)
        assert all(json.loads(r)["seed"] == 11 for r in records)

    def test_toml_config(self, dataset_path, tmp_path):
        config_path = tmp_path / "run.toml"
        config_path.write_text(
            'mixtures = ["none"]\npositions = ["pre-q"]\n'
            f'out = "{tmp_path / "toml-run"}"\n'
        )
        result = run_cli(
            "run",
            "--dataset", dataset_path,
            "--cache-dir", tmp_path / "cache",
            "--no-figures",
            "--config", config_path,
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "toml-run" / "records.jsonl").exists()


@pytest.fixture
def finished_run(dataset_path, tmp_path):
    out = tmp_path / "run"
    result = run_cli(
        "run",
        "--dataset", dataset_path,
        "--out", out,
        "--cache-dir", tmp_path / "cache",
        "--synth-relevance", 1.0,
        "--synth-noise", 0.8,
        "--no-figures",
    )
    assert result.exit_code == 0
    return out


class TestReportCommands:
    def test_report_reaggregates(self, finished_run, tmp_path):
        out = tmp_path / "rereport"
        result = run_cli(
            "report",
            "--records", finished_run / "records.jsonl",
            "--out", out,
            "--no-figures",
        )
        assert result.exit_code == 0, result.output
        assert (out / "report.csv").read_bytes() == (finished_run / "report.csv").read_bytes()

    def test_report_respects_bins(self, finished_run, tmp_path):
        out = tmp_path / "bins5"
        result = run_cli(
            "report",
            "--records", finished_run / "records.jsonl",
            "--out", out,
            "--ece-bins", 5,
            "--ace-bins", 5,
            "--no-figures",
        )
        assert result.exit_code == 0
        assert (out / "report.csv").read_text() != (finished_run / "report.csv").read_text()

    def test_export_violin(self, finished_run, tmp_path):
        target = tmp_path / "v.csv"
        result = run_cli("export-violin", "--records", finished_run / "records.jsonl", "--out", target)
        assert result.exit_code == 0
        assert target.read_bytes() == (finished_run / "violin.csv").read_bytes()

    def test_confusion(self, finished_run, tmp_path):
        target = tmp_path / "c.csv"
        result = run_cli("confusion", "--records", finished_run / "records.jsonl", "--out", target)
        assert result.exit_code == 0
        assert target.read_text().splitlines()[0] == (
            "backend,dataset,mixture,position,gold_label,predicted_label,count"
        )
