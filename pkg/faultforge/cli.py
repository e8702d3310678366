"""cli.py

faultforge command line.

  faultforge inspect --dataset data/ant-1.7.csv data/camel-1.6.csv --check
  faultforge run --dataset data/*.csv --model rf --fs cfs --tuner ga --folds 10 --seed 42
  faultforge matrix --dataset data/*.csv --models rf --tuners ga,none --baseline

Exit codes: 0 success, 1 runtime failure, 2 usage / parse error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .classifiers import DEFAULT_PARAMS, MODEL_KINDS
from .config import (
    DEFAULT_JOBS,
    DEFAULT_OUT,
    DEFAULT_SEED,
    ExperimentConfig,
    load_config,
)
from .corpus import FeatureSchema, check_reference, deduplicate, load_csv, summarize, summary_frame
from .crossval import DEFAULT_FOLDS
from .errors import ConfigError, CorpusParseError, FaultForgeError, SchemaError
from .feature_selection import SELECTORS, SelectorConfig
from .pipeline import RunLedger, run_matrix
from .reports import emit_reports
from .search import DEFAULT_RANDOM_SAMPLES, TUNERS, GaConfig, default_space, parse_assignment, parse_domain, parse_value

_logger = logging.getLogger("faultforge")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class _UsageError(Exception):
    pass


def _csv_list(allowed: Sequence[str]):
    def parse(text: str) -> List[str]:
        values = [v.strip().lower() for v in text.split(",") if v.strip()]
        bad = [v for v in values if v not in allowed]
        if not values or bad:
            raise argparse.ArgumentTypeError(
                f"invalid choice(s) {', '.join(bad) or text!r}; choose from {', '.join(allowed)}"
            )
        return values

    return parse


# ----------------------------
# Parser
# ----------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    _sel = SelectorConfig()
    _ga = GaConfig()
    p.add_argument("--dataset", nargs="+", metavar="PATH",
                   help="PROMISE CSV file(s) (default: the config file's datasets)")
    pool = p.add_mutually_exclusive_group()
    pool.add_argument("--pool", dest="pool", action="store_true", default=None,
                      help="pool all dataset files into one project (default: on)")
    pool.add_argument("--per-project", dest="pool", action="store_false",
                      help="run every dataset file as its own project (default: off)")
    p.add_argument("--config", help="YAML experiment config, CLI flags override it (default: none)")
    p.add_argument("--folds", type=int, help=f"outer cross-validation folds (default: {DEFAULT_FOLDS})")
    p.add_argument("--seed", type=int, help=f"master seed (default: {DEFAULT_SEED}, env FAULTFORGE_SEED)")
    p.add_argument("--jobs", type=int, help=f"parallel workers (default: {DEFAULT_JOBS}, env FAULTFORGE_JOBS)")
    p.add_argument("--out", help=f"output directory (default: {DEFAULT_OUT}, env FAULTFORGE_OUT)")
    p.add_argument("--fs-k", type=int, help=f"features kept by rfe / mi (default: {_sel.target_count})")
    p.add_argument("--fs-c", type=float, help=f"L1 selector strength C (default: {_sel.l1_strength})")
    p.add_argument("--fs-bins", type=int, help=f"MI equal-frequency bins (default: {_sel.mi_bins})")
    p.add_argument("--tuner-budget", type=int,
                   help=f"random-search samples (default: {DEFAULT_RANDOM_SAMPLES})")
    p.add_argument("--ga-pop", type=int, help=f"GA population (default: {_ga.population})")
    p.add_argument("--ga-gens", type=int, help=f"GA generations (default: {_ga.generations})")
    p.add_argument("--space", action="append", default=[], metavar="NAME=V1,V2|log:LO:HI",
                   help="override one search dimension (repeatable; default: built-in spaces)")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                   help="fixed hyperparameter used when --tuner none (repeatable; default: model defaults)")
    p.add_argument("--schema", metavar="M1,M2,...",
                   help="metric columns in file order (default: the 20 CK / OO metrics)")
    p.add_argument("--dedup", action="store_true", default=None,
                   help="drop duplicate rows (metrics + label) before running (default: off)")
    p.add_argument("--global-resample", action="store_true", default=None,
                   help="ADASYN on the whole dataset before CV; leaks synthetic rows into test folds (default: off)")
    _add_verbosity(p)


def _add_verbosity(p: argparse.ArgumentParser) -> None:
    v = p.add_mutually_exclusive_group()
    v.add_argument("--verbose", "-v", action="store_true", help="debug logging (default: off)")
    v.add_argument("--quiet", "-q", action="store_true", help="warnings and errors only (default: off)")


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faultforge",
        description="Software fault prediction: feature selection x classifiers x hyperparameter tuning",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="{inspect,run,matrix}")
    sub.required = True

    p_inspect = sub.add_parser("inspect", help="per-project instances / defective / rate")
    p_inspect.add_argument("paths", nargs="*", metavar="PATH", help="PROMISE CSV file(s)")
    p_inspect.add_argument("--dataset", nargs="+", metavar="PATH", default=[],
                           help="PROMISE CSV file(s), same as the positional paths (default: none)")
    p_inspect.add_argument("--csv", metavar="PATH", help="also write the summary as CSV (default: off)")
    p_inspect.add_argument("--check", action="store_true",
                           help="compare counts with the 19-project reference table (default: off)")
    p_inspect.add_argument("--dedup", action="store_true", help="deduplicate before counting (default: off)")
    p_inspect.add_argument("--schema", metavar="M1,M2,...",
                           help="metric columns in file order (default: the 20 CK / OO metrics)")
    _add_verbosity(p_inspect)

    p_run = sub.add_parser("run", help="one (selector, model, tuner) cell")
    p_run.add_argument("--model", choices=MODEL_KINDS, default="rf", help="classifier (default: rf)")
    p_run.add_argument("--fs", choices=SELECTORS, default="cfs", help="feature selector (default: cfs)")
    p_run.add_argument("--tuner", choices=TUNERS, default="ga", help="hyperparameter tuner (default: ga)")
    _add_common(p_run)

    p_matrix = sub.add_parser("matrix", help="selectors x models x tuners, full report tree")
    p_matrix.add_argument("--models", type=_csv_list(MODEL_KINDS),
                          help=f"comma-separated models (default: {','.join(MODEL_KINDS)})")
    p_matrix.add_argument("--selectors", type=_csv_list(SELECTORS),
                          help="comma-separated selectors (default: rfe,l1,mi,cfs)")
    p_matrix.add_argument("--tuners", type=_csv_list(TUNERS),
                          help="comma-separated tuners (default: grid,random,ga)")
    p_matrix.add_argument("--baseline", action="store_true", default=None,
                          help="add one (none, model, none) cell per model (default: off)")
    _add_common(p_matrix)
    return parser


# ----------------------------
# Flags -> ExperimentConfig
# ----------------------------

def _targets(name: str, models: Sequence[str], known: Dict[str, Sequence[str]], flag: str) -> List[str]:
    hits = [m for m in models if name in known[m]]
    if not hits:
        raise ConfigError(f"{flag} {name}: no selected model has a parameter named {name!r}")
    return hits


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    updates: Dict[str, Any] = {}

    if args.command == "run":
        updates.update(selectors=(args.fs,), models=(args.model,), tuners=(args.tuner,), baseline=False)
    else:
        for name in ("models", "selectors", "tuners"):
            if getattr(args, name):
                updates[name] = tuple(getattr(args, name))
        if args.baseline is not None:
            updates["baseline"] = args.baseline

    simple = {
        "pool": args.pool, "k_folds": args.folds, "seed": args.seed, "jobs": args.jobs,
        "out": args.out, "tuner_budget": args.tuner_budget, "dedup": args.dedup,
        "global_resample": args.global_resample,
    }
    updates.update({k: v for k, v in simple.items() if v is not None})
    if args.dataset:
        updates["datasets"] = tuple(args.dataset)
    if args.schema:
        updates["schema"] = tuple(s.strip() for s in args.schema.split(",") if s.strip())

    sel = {"target_count": args.fs_k, "l1_strength": args.fs_c, "mi_bins": args.fs_bins}
    sel = {k: v for k, v in sel.items() if v is not None}
    ga = {"population": args.ga_pop, "generations": args.ga_gens}
    ga = {k: v for k, v in ga.items() if v is not None}
    try:
        if sel:
            updates["selector"] = replace(cfg.selector, **sel)
        if ga:
            updates["ga"] = replace(cfg.ga, **ga)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    models = updates.get("models", cfg.models)
    if args.space:
        space = {k: dict(v) for k, v in cfg.space.items()}
        spaces = {m: default_space(m).names for m in MODEL_KINDS}
        for item in args.space:
            name, text = parse_assignment(item)
            parse_domain(text)
            for m in _targets(name, models, spaces, "--space"):
                space.setdefault(m, {})[name] = text
        updates["space"] = space
    if args.param:
        params = {k: dict(v) for k, v in cfg.params.items()}
        for item in args.param:
            name, value = parse_assignment(item)
            for m in _targets(name, models, DEFAULT_PARAMS, "--param"):
                params.setdefault(m, {})[name] = parse_value(value)
        updates["params"] = params

    return replace(cfg, **updates)


# ----------------------------
# Commands
# ----------------------------

def cmd_inspect(args: argparse.Namespace) -> int:
    paths = list(args.paths) + list(args.dataset)
    if not paths:
        print("ERROR: inspect needs at least one dataset file", file=sys.stderr)
        return EXIT_USAGE
    schema = FeatureSchema(tuple(s.strip() for s in args.schema.split(",") if s.strip())) if args.schema else None
    summaries = []
    for path in paths:
        d = load_csv(path, schema)
        if args.dedup:
            d = deduplicate(d)
        summaries.extend(summarize(d))

    for s in summaries:
        print(s.line())
    if len(summaries) > 1:
        inst = sum(s.instances for s in summaries)
        dfct = sum(s.defective for s in summaries)
        print(f"total {inst} {dfct} {dfct / inst if inst else 0.0:.3f}")

    if args.check:
        print()
        print("【Reference check】")
        results = check_reference(summaries)
        for project, ok, note in results:
            print(f"  {'✓' if ok else '✗'} {project}: {note}")
        unknown = len(summaries) - len(results)
        if unknown:
            print(f"  ({unknown} project(s) not in the reference table)")

    if args.csv:
        out = Path(args.csv)
        out.parent.mkdir(parents=True, exist_ok=True)
        summary_frame(summaries).to_csv(out, index=False, float_format="%.3f")
        print(f"✅ Summary saved to: {out}")
    return EXIT_OK


def _check_grid(cfg: ExperimentConfig) -> Optional[str]:
    if "grid" not in cfg.tuners:
        return None
    for model in cfg.models:
        bad = cfg.space_for(model).interval_dims()
        if bad:
            return f"grid search needs finite domains; {model} has interval dimension(s): {', '.join(bad)}"
    return None


def _print_ledger(ledger: RunLedger) -> None:
    print("【Results】")
    for cell in ledger:
        k = cell.key
        if cell.ok:
            m, s = cell.report.mean, cell.report.std
            print(
                f"  {k.selector} {k.model} {k.tuner} {k.project} "
                f"accuracy={m['accuracy']:.4f}±{s['accuracy']:.4f} precision={m['precision']:.4f} "
                f"recall={m['recall']:.4f} f1={m['f1']:.4f} train_accuracy={m['train_accuracy']:.4f}"
            )
        else:
            print(f"  ✗ {k.selector} {k.model} {k.tuner} {k.project} FAILED: {cell.error}")


def _execute(cfg: ExperimentConfig, title: str) -> int:
    problem = _check_grid(cfg)
    if problem:
        print(f"ERROR: {problem}", file=sys.stderr)
        return EXIT_FAILURE

    print("=" * 60)
    print(title)
    print("=" * 60)
    print(f"  datasets: {len(cfg.datasets)} file(s), {'pooled' if cfg.pool else 'per project'}")
    print(f"  folds: {cfg.k_folds} | seed: {cfg.seed} | jobs: {cfg.jobs}")
    print()

    ledger = run_matrix(cfg)
    _print_ledger(ledger)
    print()
    written = emit_reports(ledger, cfg.out)
    print(f"✅ {len(written)} report file(s) written to: {cfg.out}")

    failed = ledger.failed()
    if failed:
        for cell in failed:
            print(f"ERROR: {cell.key.label}: {cell.error}", file=sys.stderr)
        if len(failed) == len(ledger):
            return EXIT_FAILURE
        print(f"⚠️ {len(failed)} of {len(ledger)} cell(s) failed", file=sys.stderr)
    return EXIT_OK


def cmd_run(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    return _execute(cfg, f"faultforge run: {args.fs} × {args.model} × {args.tuner}")


def cmd_matrix(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    cells = len(cfg.selectors) * len(cfg.models) * len(cfg.tuners)
    return _execute(cfg, f"faultforge matrix: {cells} cell(s){' + baseline' if cfg.baseline else ''}")


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    _configure_logging(args)

    try:
        if args.command == "inspect":
            return cmd_inspect(args)
        cfg = config_from_args(args)
        if not cfg.datasets:
            raise _UsageError("no datasets; pass --dataset or a config with 'datasets'")
        return cmd_run(args, cfg) if args.command == "run" else cmd_matrix(args, cfg)
    except (_UsageError, ConfigError, SchemaError, CorpusParseError, FileNotFoundError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FaultForgeError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        _logger.debug("unhandled error", exc_info=True)
        print(f"ERROR: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
