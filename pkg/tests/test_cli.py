from __future__ import annotations

import argparse
import re

import pytest

from faultforge.classifiers import MODEL_KINDS
from faultforge.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_arg_parser, main
from faultforge.config import DEFAULT_JOBS, DEFAULT_OUT, DEFAULT_SEED
from faultforge.crossval import DEFAULT_FOLDS
from faultforge.feature_selection import SelectorConfig
from faultforge.search import DEFAULT_RANDOM_SAMPLES, GaConfig


def test_help_lists_flags_with_defaults(capsys):
    assert main(["run", "--help"]) == EXIT_OK
    out = capsys.readouterr().out
    for flag in ("--model", "--fs", "--tuner", "--folds", "--seed", "--jobs", "--out", "--space", "--param"):
        assert flag in out
    assert "default: rf" in out


def test_unknown_flag_is_usage_error(capsys):
    assert main(["run", "--no-such-flag"]) == EXIT_USAGE


def test_unknown_model_choice_is_usage_error(capsys):
    assert main(["matrix", "--models", "knn"]) == EXIT_USAGE


def test_run_without_datasets_is_usage_error(capsys):
    assert main(["run", "--model", "lr"]) == EXIT_USAGE
    assert "no datasets" in capsys.readouterr().err


def test_missing_dataset_file_is_usage_error(tmp_path, capsys):
    assert main(["run", "--dataset", str(tmp_path / "missing.csv"), "--jobs", "1"]) == EXIT_USAGE


def test_malformed_csv_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "ant-1.7.csv"
    bad.write_text("", encoding="utf-8")
    assert main(["inspect", str(bad)]) == EXIT_USAGE
    assert capsys.readouterr().err.startswith("ERROR:")


def test_grid_over_interval_fails_before_running(promise_csv, tmp_path, capsys):
    path = promise_csv("ant-1.7.csv", 40, 10)
    code = main(
        ["run", "--dataset", str(path), "--model", "lr", "--tuner", "grid",
         "--space", "C=log:0.1:10", "--out", str(tmp_path / "out"), "--jobs", "1"]
    )
    assert code == EXIT_FAILURE
    assert "finite domains" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_inspect_prints_summary_and_reference_check(promise_csv, tmp_path, capsys):
    ant = promise_csv("ant-1.7.csv", 746, 166)
    other = promise_csv("mine-0.1.csv", 10, 2)
    csv_out = tmp_path / "summary.csv"
    assert main(["inspect", str(ant), str(other), "--check", "--csv", str(csv_out)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ant-1.7 746 166 0.223" in out
    assert "mine-0.1 10 2 0.200" in out
    assert "total 756 168 0.222" in out
    assert "✓ ant-1.7: 746 / 166" in out
    assert "not in the reference table" in out
    assert csv_out.exists()


def test_run_writes_reports(promise_csv, tmp_path, capsys):
    path = promise_csv("ant-1.7.csv", 60, 15)
    out = tmp_path / "out"
    code = main(
        ["run", "--dataset", str(path), "--model", "lr", "--fs", "mi", "--tuner", "none",
         "--folds", "3", "--jobs", "1", "--seed", "5", "--out", str(out), "-q"]
    )
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert "【Results】" in printed
    assert "mi lr none pooled accuracy=" in printed
    assert (out / "tables" / "summary_mi.csv").exists()
    assert (out / "ledger.jsonl").exists()


def test_partial_failure_still_succeeds(promise_csv, tmp_path, capsys):
    path = promise_csv("ant-1.7.csv", 60, 15)
    code = main(
        ["matrix", "--dataset", str(path), "--models", "lr", "--selectors", "l1,mi", "--tuners", "none",
         "--fs-c", "1e-6", "--folds", "3", "--jobs", "1", "--out", str(tmp_path / "out"), "-q"]
    )
    assert code == EXIT_OK
    err = capsys.readouterr().err
    assert "1 of 2 cell(s) failed" in err


def test_all_cells_failing_is_runtime_failure(promise_csv, tmp_path, capsys):
    path = promise_csv("ant-1.7.csv", 60, 15)
    code = main(
        ["run", "--dataset", str(path), "--model", "lr", "--fs", "l1", "--tuner", "none",
         "--fs-c", "1e-6", "--folds", "3", "--jobs", "1", "--out", str(tmp_path / "out"), "-q"]
    )
    assert code == EXIT_FAILURE


@pytest.mark.parametrize("command", ["inspect", "run", "matrix"])
def test_every_subcommand_parses(command):
    args = build_arg_parser().parse_args([command])
    assert args.command == command


def _subcommands():
    parser = build_arg_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return sub.choices


def _flag_defaults(subparser):
    out = {}
    for action in subparser._actions:
        if not action.option_strings or action.help == argparse.SUPPRESS or "-h" in action.option_strings:
            continue
        m = re.search(r"default: ([^)]*)\)", action.help or "")
        out[action.option_strings[0]] = m.group(1) if m else None
    return out


_COMMON = {
    "--dataset": "the config file's datasets",
    "--pool": "on",
    "--per-project": "off",
    "--config": "none",
    "--folds": str(DEFAULT_FOLDS),
    "--seed": f"{DEFAULT_SEED}, env FAULTFORGE_SEED",
    "--jobs": f"{DEFAULT_JOBS}, env FAULTFORGE_JOBS",
    "--out": f"{DEFAULT_OUT}, env FAULTFORGE_OUT",
    "--fs-k": str(SelectorConfig().target_count),
    "--fs-c": str(SelectorConfig().l1_strength),
    "--fs-bins": str(SelectorConfig().mi_bins),
    "--tuner-budget": str(DEFAULT_RANDOM_SAMPLES),
    "--ga-pop": str(GaConfig().population),
    "--ga-gens": str(GaConfig().generations),
    "--space": "built-in spaces",
    "--param": "model defaults",
    "--schema": "the 20 CK / OO metrics",
    "--dedup": "off",
    "--global-resample": "off",
    "--verbose": "off",
    "--quiet": "off",
}

HELP_SNAPSHOT = {
    "inspect": {
        "--dataset": "none",
        "--csv": "off",
        "--check": "off",
        "--dedup": "off",
        "--schema": "the 20 CK / OO metrics",
        "--verbose": "off",
        "--quiet": "off",
    },
    "run": {"--model": "rf", "--fs": "cfs", "--tuner": "ga", **_COMMON},
    "matrix": {
        "--models": ",".join(MODEL_KINDS),
        "--selectors": "rfe,l1,mi,cfs",
        "--tuners": "grid,random,ga",
        "--baseline": "off",
        **_COMMON,
    },
}


@pytest.mark.parametrize("command", sorted(HELP_SNAPSHOT))
def test_help_lists_every_flag_with_its_default(command, capsys):
    assert _flag_defaults(_subcommands()[command]) == HELP_SNAPSHOT[command]
    assert main([command, "--help"]) == EXIT_OK
    out = capsys.readouterr().out
    for flag in HELP_SNAPSHOT[command]:
        assert flag in out
