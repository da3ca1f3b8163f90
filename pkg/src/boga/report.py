"""Trajectory, surrogate-quality and fitness-distribution tables and plots from campaign logs."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

TOP_FRACTION = 0.25
DEFAULT_WINDOW = 40
DEFAULT_BANDS: tuple[tuple[str, int, int], ...] = (("early", 0, 10), ("intermediate", 10, 50), ("late", 50, 100))


class MalformedLog(ValueError):
    def __init__(self, path: str | Path, line: int, message: str) -> None:
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def running_top_quartile(values: Sequence[float], window: int = DEFAULT_WINDOW, direction: str = "maximize") -> np.ndarray:
    """At each index, the mean of the best quarter of the trailing `window` values.

    The quarter is rounded up and never below one value; early indices use
    however many values exist so far.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    v = np.asarray(values, dtype=float)
    out = np.empty(v.size)
    for i in range(v.size):
        w = v[max(0, i - window + 1) : i + 1]
        k = max(1, math.ceil(TOP_FRACTION * w.size))
        ordered = np.sort(w)
        out[i] = (ordered[-k:] if direction == "maximize" else ordered[:k]).mean()
    return out


@dataclass
class RunLog:
    """One campaign's parsed evaluation log."""

    path: Path
    config: dict
    evaluations: list[dict] = field(default_factory=list)
    generations: list[dict] = field(default_factory=list)
    phases: list[dict] = field(default_factory=list)
    counters: dict | None = None

    @property
    def direction(self) -> str:
        return self.config.get("objective", {}).get("direction", "maximize")

    @property
    def seed(self) -> int | None:
        return self.config.get("master_seed")

    @property
    def k_propose(self) -> str:
        ks = sorted({p.get("k_propose") for p in self.config.get("schedule", [])})
        return "/".join(str(k) for k in ks) if ks else "?"

    @property
    def label(self) -> str:
        return f"k={self.k_propose} seed={self.seed}"


_REQUIRED = {
    "evaluation": ("generation", "sequence", "score"),
    "generation": ("generation",),
    "failure": ("generation", "sequence"),
    "phase": ("phase",),
    "counters": ("objective_evals",),
}


def read_log(log_dir: str | Path) -> RunLog:
    """Parse ``evaluations.jsonl`` (and ``config.json`` when present) from a campaign directory."""
    d = Path(log_dir)
    path = d / "evaluations.jsonl"
    if not path.exists():
        raise FileNotFoundError(f"no evaluations.jsonl in {d}")
    cfg_path = d / "config.json"
    config = json.loads(cfg_path.read_text()) if cfg_path.exists() else {}
    run = RunLog(d, config)
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLog(path, no, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or rec.get("type") not in _REQUIRED:
                raise MalformedLog(path, no, f"unknown record type {rec.get('type') if isinstance(rec, dict) else rec!r}")
            missing = [k for k in _REQUIRED[rec["type"]] if k not in rec]
            if missing:
                raise MalformedLog(path, no, f"{rec['type']} record lacks {', '.join(missing)}")
            kind = rec["type"]
            if kind == "evaluation":
                if not isinstance(rec["score"], (int, float)) or not math.isfinite(rec["score"]):
                    raise MalformedLog(path, no, "evaluation score is not a finite number")
                run.evaluations.append(rec)
            elif kind == "generation":
                run.generations.append(rec)
            elif kind == "phase":
                run.phases.append(rec)
            elif kind == "counters":
                run.counters = rec
    return run


def trajectory_rows(run: RunLog, window: int = DEFAULT_WINDOW) -> list[dict]:
    """Per generation: best so far, batch mean and the running top quartile at its last evaluation."""
    scores = [e["score"] for e in run.evaluations]
    rtq = running_top_quartile(scores, window, run.direction) if scores else np.array([])
    better = max if run.direction == "maximize" else min
    last_index: dict[int, int] = {}
    batch: dict[int, list[float]] = {}
    for i, e in enumerate(run.evaluations):
        last_index[e["generation"]] = i
        batch.setdefault(e["generation"], []).append(e["score"])
    rows = []
    best = None
    for g in sorted({rec["generation"] for rec in run.generations} | set(batch)):
        vals = batch.get(g, [])
        if vals:
            best = better(vals) if best is None else better(best, better(vals))
        rows.append(
            {
                "generation": g,
                "n_evaluated": len(vals),
                "best_so_far": best,
                "batch_mean": float(np.mean(vals)) if vals else None,
                "running_top_quartile": float(rtq[last_index[g]]) if g in last_index else None,
            }
        )
    return rows


def r2_rows(run: RunLog) -> list[dict]:
    return [
        {"generation": g["generation"], "surrogate_r2": g.get("surrogate_r2")}
        for g in run.generations
        if g.get("surrogate_r2") is not None
    ]


def distribution_rows(run: RunLog, bands: Sequence[tuple[str, int, int]] = DEFAULT_BANDS) -> list[dict]:
    """Summary statistics of evaluated fitness per generation band.

    Bands are half-open ``[start, stop)`` except the last, which includes `stop`.
    """
    rows = []
    for (name, lo, hi), vals in zip(bands, band_scores(run, bands)):
        row: dict = {"band": name, "start": lo, "stop": hi, "count": int(vals.size)}
        if vals.size:
            q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
            row.update(
                mean=float(vals.mean()), std=float(vals.std()), min=q[0], q25=q[1], median=q[2], q75=q[3], max=q[4]
            )
        else:
            row.update({k: None for k in ("mean", "std", "min", "q25", "median", "q75", "max")})
        rows.append(row)
    return rows


def band_scores(run: RunLog, bands: Sequence[tuple[str, int, int]] = DEFAULT_BANDS) -> list[np.ndarray]:
    out = []
    for j, (_, lo, hi) in enumerate(bands):
        last = j == len(bands) - 1
        out.append(
            np.array([e["score"] for e in run.evaluations if lo <= e["generation"] < hi or (last and e["generation"] == hi)])
        )
    return out


def _write_csv(path: Path, rows: list[dict], fields: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else _fmt(r.get(k))) for k in fields})


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _provenance(runs: Sequence[RunLog]) -> str:
    parts = []
    for r in runs:
        parts.append(f"run={r.path.name} seed={r.seed} k_propose={r.k_propose} config_digest={_digest(r.config)}")
    return "; ".join(parts)


def _digest(config: dict) -> str:
    """Same hash as `CampaignConfig.digest`, recomputed from the stored ``config.json``."""
    d = json.loads(json.dumps(config))
    for key in ("output_dir", "n_jobs", "save_models"):
        d.pop(key, None)
    d.get("objective", {}).pop("n_jobs", None)
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _save_svg(fig, path: Path, provenance: str) -> None:
    import matplotlib.pyplot as plt

    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    text = path.read_text(encoding="utf-8")
    comment = f"<!-- boga report: {provenance.replace('--', '- -')} -->\n"
    head, sep, rest = text.partition("?>\n")
    path.write_text(head + sep + comment + rest if sep else comment + text, encoding="utf-8")


def _plots(runs: Sequence[RunLog], out: Path, window: int, bands) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "boga-report"
    prov = _provenance(runs)
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4))
    for r in runs:
        rows = trajectory_rows(r, window)
        g = [x["generation"] for x in rows]
        ax.plot(g, [x["running_top_quartile"] for x in rows], label=f"{r.label} top quartile")
        ax.plot(g, [x["best_so_far"] for x in rows], linestyle="--", label=f"{r.label} best")
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness")
    ax.legend(fontsize="small")
    paths.append(out / "trajectory.svg")
    _save_svg(fig, paths[-1], prov)

    fig, ax = plt.subplots(figsize=(7, 4))
    for r in runs:
        rows = r2_rows(r)
        ax.plot([x["generation"] for x in rows], [x["surrogate_r2"] for x in rows], marker=".", label=r.label)
    ax.set_xlabel("generation")
    ax.set_ylabel("surrogate validation R²")
    if runs:
        ax.legend(fontsize="small")
    paths.append(out / "surrogate_r2.svg")
    _save_svg(fig, paths[-1], prov)

    fig, ax = plt.subplots(figsize=(7, 4))
    n_bands = len(bands)
    width = 0.8 / max(1, len(runs))
    for j, r in enumerate(runs):
        data = band_scores(r, bands)
        pos = [b + j * width for b in range(n_bands)]
        keep = [(p, d) for p, d in zip(pos, data) if d.size]
        if keep:
            bp = ax.boxplot([d for _, d in keep], positions=[p for p, _ in keep], widths=width * 0.9, patch_artist=True)
            color = f"C{j}"
            for box in bp["boxes"]:
                box.set_facecolor(color)
            ax.plot([], [], color=color, linewidth=6, label=r.label)
    ax.set_xticks([b + 0.4 - width / 2 for b in range(n_bands)])
    ax.set_xticklabels([f"{name}\n[{lo}, {hi}]" for name, lo, hi in bands])
    ax.set_ylabel("fitness")
    if runs:
        ax.legend(fontsize="small")
    paths.append(out / "distributions.svg")
    _save_svg(fig, paths[-1], prov)
    return paths


def emit_report(
    log_dirs: Sequence[str | Path],
    out_dir: str | Path,
    window: int = DEFAULT_WINDOW,
    bands: Sequence[tuple[str, int, int]] = DEFAULT_BANDS,
    plots: bool = True,
) -> list[Path]:
    """Write CSV tables (and SVG plots) for one or more campaign logs; returns the written paths.

    Several logs are overlaid in the plots and stacked in the tables with a
    ``run`` column, so sweeps over proposal size can be compared directly.
    """
    runs = [read_log(d) for d in log_dirs]
    if not runs:
        raise ValueError("no logs given")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def stacked(fn):
        rows = []
        for r in runs:
            for row in fn(r):
                rows.append({"run": r.path.name, "k_propose": r.k_propose, "seed": r.seed, **row})
        return rows

    traj = stacked(lambda r: trajectory_rows(r, window))
    _write_csv(
        out / "trajectory.csv",
        traj,
        ["run", "k_propose", "seed", "generation", "n_evaluated", "best_so_far", "batch_mean", "running_top_quartile"],
    )
    _write_csv(out / "surrogate_r2.csv", stacked(r2_rows), ["run", "k_propose", "seed", "generation", "surrogate_r2"])
    _write_csv(
        out / "distributions.csv",
        stacked(lambda r: distribution_rows(r, bands)),
        ["run", "k_propose", "seed", "band", "start", "stop", "count", "mean", "std", "min", "q25", "median", "q75", "max"],
    )
    written += [out / "trajectory.csv", out / "surrogate_r2.csv", out / "distributions.csv"]
    if plots:
        written += _plots(runs, out, window, bands)
    return written
