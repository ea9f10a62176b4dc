"""Command-line pipeline: ingest, synth, rank, evaluate, cv and report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, PipelineConfig, load_config
from .dataset import BOTH_TARGETS, Target, clean, ingest, synthesize, write_csv
from .evaluation import (EvaluationReport, cv_table, grid_tables, parse_ratio, run_cv,
                         run_grid, summary_table)
from .exceptions import DataError
from .models import MODEL_KINDS, make_model
from .sade import rank_features, write_trace

logger = logging.getLogger("trackml")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
STAGES = {"synth": 1, "rank": 2, "evaluate": 3, "cv": 4}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def stage_seed(seed: int, stage: str) -> int:
    """Independent sub-seed of the master seed for one pipeline stage."""
    return int(np.random.SeedSequence([seed, STAGES[stage]]).generate_state(1)[0])


def _common(parser):
    parser.add_argument("--data", help="input CSV")
    parser.add_argument("--target", choices=["light", "distance", "both"])
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trackml", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"trackml {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="clean a tracker CSV (drop missing and duplicate rows)")
    _common(p)

    p = sub.add_parser("synth", help="write a synthetic tracker dataset")
    _common(p)
    p.add_argument("--n", type=int, default=10, help="records per condition")
    p.add_argument("--noise", type=float, nargs="+", default=[1.0],
                   help="noise scale: one value or six (yaw pitch roll x y z)")
    p.add_argument("--noise-model", choices=["gaussian", "student_t"], default="gaussian")
    p.add_argument("--df", type=float, default=2.0, help="Student-t degrees of freedom")

    p = sub.add_parser("rank", help="rank pose coordinates by fitted weight")
    _common(p)
    p.add_argument("--runs", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)

    for name, text in (("evaluate", "train/test accuracy over the partition grid"),
                       ("cv", "k-fold cross-validation")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--models", help=f"comma list from {','.join(MODEL_KINDS)}")
        if name == "evaluate":
            p.add_argument("--ratios", help="comma list, e.g. 70-30,80-20")
            p.add_argument("--cv", type=int, metavar="K", help="also run K-fold CV")
        else:
            p.add_argument("--k", type=int)

    p = sub.add_parser("report", help="print tables from grid.csv / cv.csv in --out")
    _common(p)
    return parser


def _resolve(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    for name in ("data", "target", "seed", "jobs", "out"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "models", None):
        cfg.models = [m.strip() for m in args.models.split(",") if m.strip()]
        unknown = [m for m in cfg.models if m not in MODEL_KINDS]
        if unknown:
            raise UsageError(f"unknown model kinds: {unknown}")
    if getattr(args, "ratios", None):
        try:
            cfg.ratios = [parse_ratio(r) for r in args.ratios.split(",")]
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if getattr(args, "runs", None) is not None:
        cfg.runs = args.runs
    if getattr(args, "population", None) is not None:
        cfg.sade["population_size"] = args.population
    if getattr(args, "generations", None) is not None:
        cfg.sade["max_generations"] = args.generations
    if getattr(args, "k", None) is not None:
        cfg.k = args.k
    if cfg.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if cfg.out is None:
        raise UsageError("--out is required")
    return cfg


def _targets(cfg):
    return BOTH_TARGETS if cfg.target == "both" else (Target.parse(cfg.target),)


def _load_clean(cfg):
    if cfg.data is None:
        raise UsageError("--data is required")
    dataset, report = clean(ingest(cfg.data))
    print(f"clean: {report.summary()}", file=sys.stderr)
    return dataset, report


def _models(cfg):
    return {kind: make_model(kind, **cfg.model_params.get(kind, {})) for kind in cfg.models}


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(cfg):
    dataset, report = _load_clean(cfg)
    out = _outdir(cfg)
    write_csv(dataset, out / "cleaned.csv")
    (out / "clean_summary.txt").write_text(report.summary() + "\n", encoding="utf-8")


def cmd_synth(cfg, args):
    noise = args.noise[0] if len(args.noise) == 1 else args.noise
    if len(args.noise) not in (1, 6):
        raise UsageError("--noise takes one or six values")
    seed = stage_seed(cfg.seed, "synth")
    dataset = synthesize(n_per_condition=args.n, noise_scale=noise, seed=seed,
                         noise=args.noise_model, df=args.df)
    out = _outdir(cfg)
    write_csv(dataset, out / "synthetic.csv")
    print(f"synth: {len(dataset)} records, seed {seed}", file=sys.stderr)


def cmd_rank(cfg):
    dataset, _ = _load_clean(cfg)
    seed = stage_seed(cfg.seed, "rank")
    table = rank_features(dataset, cfg.sade_config(seed), runs=cfg.runs, targets=_targets(cfg))
    out = _outdir(cfg)
    table.write_csv(out / "ranking.csv")
    (out / "ranking.txt").write_text(
        f"Perturbation ranking (weights x 100), seed {seed}, {cfg.runs} runs\n"
        + table.to_text(), encoding="utf-8")
    trace_dir = out / "traces"
    trace_dir.mkdir(exist_ok=True)
    for target, traces in table.traces.items():
        for run, trace in enumerate(traces):
            write_trace(trace, trace_dir / f"trace_{target.value}_run{run}.csv")
    print(table.to_text(), end="")


def _write_cv(cfg, dataset, k, out):
    seed = stage_seed(cfg.seed, "cv")
    report = run_cv(dataset, _models(cfg), _targets(cfg), k=k, seed=seed, n_jobs=cfg.jobs)
    report.write_csv(out / "cv.csv")
    (out / "cv.txt").write_text(cv_table(report), encoding="utf-8")
    return report


def cmd_evaluate(cfg, args):
    dataset, _ = _load_clean(cfg)
    seed = stage_seed(cfg.seed, "evaluate")
    report = run_grid(dataset, _models(cfg), _targets(cfg), cfg.ratios, seed=seed,
                      n_jobs=cfg.jobs)
    out = _outdir(cfg)
    report.write_csv(out / "grid.csv")
    (out / "grid.txt").write_text(grid_tables(report), encoding="utf-8")
    summary_ratio = "70-30" if "70-30" in cfg.ratios else cfg.ratios[-1]
    (out / "summary.txt").write_text(summary_table(report, summary_ratio), encoding="utf-8")
    print(grid_tables(report), end="")
    if args.cv:
        print(cv_table(_write_cv(cfg, dataset, args.cv, out)), end="")


def cmd_cv(cfg):
    dataset, _ = _load_clean(cfg)
    out = _outdir(cfg)
    print(cv_table(_write_cv(cfg, dataset, cfg.k, out)), end="")


def cmd_report(cfg):
    out = Path(cfg.out)
    found = False
    if (out / "grid.csv").is_file():
        report = EvaluationReport.read_csv(out / "grid.csv")
        print(grid_tables(report))
        ratios = [r.ratio_or_fold for r in report.rows]
        print(summary_table(report, "70-30" if "70-30" in ratios else ratios[-1]), end="")
        found = True
    if (out / "cv.csv").is_file():
        print(cv_table(EvaluationReport.read_csv(out / "cv.csv")), end="")
        found = True
    if (out / "ranking.txt").is_file():
        print((out / "ranking.txt").read_text(encoding="utf-8"), end="")
        found = True
    if not found:
        raise DataError(f"no grid.csv, cv.csv or ranking.txt in {out}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        if args.command == "ingest":
            cmd_ingest(cfg)
        elif args.command == "synth":
            cmd_synth(cfg, args)
        elif args.command == "rank":
            cmd_rank(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args)
        elif args.command == "cv":
            cmd_cv(cfg)
        else:
            cmd_report(cfg)
    except (UsageError, ConfigError) as exc:
        print(f"trackml: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, OSError) as exc:
        print(f"trackml: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
