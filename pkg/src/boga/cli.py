"""Command line: ``boga run``, ``boga sweep`` and ``boga report``.

Exit codes: 0 success, 1 unexpected error, 2 configuration error,
3 evaluator failure.
"""

from __future__ import annotations

import argparse
import csv
import functools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import SweepSpec, load_campaign, load_sweep
from .engine import CampaignLog, ConfigError, run_campaign
from .evaluator import EvaluatorError
from .report import MalformedLog, emit_report

logger = logging.getLogger("boga")

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_EVALUATOR = 0, 1, 2, 3

SWEEP_FIELDS = [
    "k_propose",
    "seed",
    "status",
    "final_window_mean",
    "best_score",
    "best_sequence",
    "objective_evals",
    "failed_evals",
    "surrogate_fits",
    "surrogate_predictions",
    "output_dir",
    "error",
]


_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging(verbosity: int) -> None:
    env = os.environ.get("BOGA_LOG_LEVEL")
    if env is not None and env.lower() in _LEVELS:
        level = _LEVELS[env.lower()]
    else:
        if env is not None:
            print(f"ignoring unknown BOGA_LOG_LEVEL {env!r}", file=sys.stderr)
        level = logging.DEBUG if verbosity > 1 else logging.INFO if verbosity == 1 else logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _guarded(fn):
    """Map library exceptions onto exit statuses."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs) -> int:
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except EvaluatorError as exc:
            print(f"evaluator failure: {exc}", file=sys.stderr)
            return EXIT_EVALUATOR
        except MalformedLog as exc:
            print(f"malformed log: {exc}", file=sys.stderr)
            return EXIT_ERROR
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG if fn.__name__ in ("cmd_run", "cmd_sweep") else EXIT_ERROR

    return wrapper


def final_window_mean(log: CampaignLog, window: int) -> float:
    """Mean score of everything evaluated in the last `window` generations."""
    last = max(e.generation for e in log.dataset)
    scores = [e.score for e in log.dataset if e.generation > last - window and e.generation > 0]
    return float(np.mean(scores)) if scores else float("nan")


def _summary(log: CampaignLog) -> dict:
    best = log.best
    return {
        "best_sequence": best.sequence,
        "best_score": best.score,
        "generations": len(log.records) - 1,
        "counters": log.counters.counts(),
        "wall_clock": {k: round(v, 3) for k, v in log.counters.wall_clock.items()},
        "objective_time_fraction": round(log.counters.objective_fraction(), 4),
    }


@_guarded
def cmd_run(config_path: str | Path, overrides: dict | None = None) -> int:
    """Run one campaign; `overrides` may set ``seed``, ``out`` and ``resume``."""
    overrides = overrides or {}
    config = load_campaign(config_path, seed=overrides.get("seed"), output_dir=overrides.get("out"))
    if config.output_dir is None:
        config = config.replace(output_dir=str(Path("runs") / f"seed{config.master_seed}"))
    log = run_campaign(config, resume=bool(overrides.get("resume", False)))
    print(json.dumps(_summary(log), indent=2))
    return EXIT_OK


def _run_cell(config_path: str, k: int, seed: int) -> dict:
    spec = load_sweep(config_path)
    return run_sweep_cell(spec, k, seed)


def run_sweep_cell(spec: SweepSpec, k: int, seed: int) -> dict:
    """Run one (k_propose, seed) cell; failures are recorded in the row instead of raised."""
    row: dict = {"k_propose": k, "seed": seed}
    try:
        config = spec.cell_config(k, seed)
        row["output_dir"] = config.output_dir
        log = run_campaign(config)
    except (ConfigError, EvaluatorError, RuntimeError, OSError, ValueError) as exc:
        logger.error("sweep cell k=%d seed=%d failed: %s", k, seed, exc)
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return row
    c = log.counters
    row.update(
        status="ok",
        final_window_mean=final_window_mean(log, spec.final_window),
        best_score=log.best.score,
        best_sequence=log.best.sequence,
        objective_evals=c.objective_evals,
        failed_evals=c.failed_evals,
        surrogate_fits=c.surrogate_fits,
        surrogate_predictions=c.surrogate_predictions,
        error="",
    )
    return row


def run_sweep(spec: SweepSpec, jobs: int = 1, config_path: str | None = None) -> list[dict]:
    """Every (k_propose, seed) pair; a seed shares its rng streams across all k values."""
    cells = [(k, s) for k in spec.k_propose for s in spec.seeds]
    if jobs > 1 and config_path is not None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, [config_path] * len(cells), *zip(*cells)))
    else:
        rows = [run_sweep_cell(spec, k, s) for k, s in cells]
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep_comparison.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in SWEEP_FIELDS})
    return rows


@_guarded
def cmd_sweep(sweep_path: str | Path, jobs: int = 1) -> int:
    """Run a k_propose x seed sweep; exits 3 if any cell failed (the others still run)."""
    spec = load_sweep(sweep_path)
    rows = run_sweep(spec, jobs, str(sweep_path))
    print(f"{'k_propose':>9} {'seed':>5} {'status':>7} {'final_mean':>11} {'best':>9}")
    for r in rows:
        fm = r.get("final_window_mean")
        best = r.get("best_score")
        print(
            f"{r['k_propose']:>9} {r['seed']:>5} {r['status']:>7} "
            f"{'' if fm is None else f'{fm:.4f}':>11} {'' if best is None else f'{best:.4f}':>9}"
        )
    print(f"comparison table: {Path(spec.output_dir) / 'sweep_comparison.csv'}")
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_EVALUATOR


@_guarded
def cmd_report(log_dirs: Sequence[str | Path], out_dir: str | Path, window: int = 40, plots: bool = True) -> int:
    for p in emit_report(log_dirs, out_dir, window=window, plots=plots):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boga", description="Surrogate-filtered genetic algorithm for peptides.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (overridden by BOGA_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one campaign from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--out", default=None, help="override output_dir")
    p.add_argument("--resume", action="store_true", help="continue from the checkpoint in the output directory")
    p.set_defaults(func=lambda a: cmd_run(a.config, {"seed": a.seed, "out": a.out, "resume": a.resume}))

    p = sub.add_parser("sweep", help="cross k_propose values with seeds and compare")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1, help="cells to run in parallel processes")
    p.set_defaults(func=lambda a: cmd_sweep(a.config, a.jobs))

    p = sub.add_parser("report", help="tables and plots from one or more campaign logs")
    p.add_argument("--log", required=True, action="append", help="campaign output directory (repeatable)")
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=40, help="running top-quartile window, in evaluations")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=lambda a: cmd_report(a.log, a.out, a.window, not a.no_plots))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    return args.func(args)


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
