"""TOML campaign and sweep configuration files.

Errors carry the 1-based line of the offending key when it can be located.
See ``docs/config_schema.md`` for the full schema.
"""

from __future__ import annotations

import dataclasses
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .acquisition import AcquisitionSpec
from .engine import CampaignConfig, ConfigError, EmbeddingConfig, SchedulePhase
from .objectives import ObjectiveSpec
from .seqcore import MutationParams, SelectionStrategy, SequenceError, parse_sequence, random_sequences
from .surrogate import SurrogateConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigFileError(ConfigError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None) -> None:
        where = f"{path or '<config>'}" + (f":{line}" if line else "")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path


_HEADER = re.compile(r"^\s*(\[\[?)\s*([A-Za-z0-9_.\-]+)\s*\]\]?")


class _Locator:
    """Best-effort map from (section, occurrence, key) to a source line."""

    def __init__(self, text: str) -> None:
        self.lines = text.splitlines()

    def find(self, section: str = "", key: str | None = None, index: int = 0) -> int | None:
        current, seen = "", -1
        header_line = None
        key_re = re.compile(rf"^\s*{re.escape(key)}\s*=") if key else None
        for no, line in enumerate(self.lines, start=1):
            m = _HEADER.match(line)
            if m:
                current = m.group(2)
                if current == section:
                    seen += 1
                    if seen == index:
                        header_line = no
                continue
            if current == section and (section == "" or seen == index) and key_re and key_re.match(line):
                return no
        return header_line


def _fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _blamed_key(message: str, keys) -> str | None:
    """The key mentioned earliest in a validation message."""
    hits = [(message.find(k), k) for k in keys if k in message]
    return min(hits)[1] if hits else None


class _Builder:
    def __init__(self, text: str, path: str | None) -> None:
        self.loc = _Locator(text)
        self.path = path

    def error(self, message: str, section: str = "", key: str | None = None, index: int = 0) -> ConfigFileError:
        return ConfigFileError(message, self.loc.find(section, key, index), self.path)

    def build(self, cls, table: dict, section: str, index: int = 0, rename: dict | None = None, **extra):
        if not isinstance(table, dict):
            raise self.error(f"[{section}] must be a table", section, None, index)
        allowed = _fields(cls)
        kwargs: dict[str, Any] = {}
        for key, value in table.items():
            name = (rename or {}).get(key, key)
            if name not in allowed:
                raise self.error(f"unknown key '{key}' in [{section}]", section, key, index)
            kwargs[name] = tuple(value) if isinstance(value, list) else value
        kwargs.update(extra)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise self.error(f"[{section}] {exc}", section, _blamed_key(str(exc), table), index) from None


def _initial_sequences(b: _Builder, raw: dict, base: Path, master_seed: int, mutation: MutationParams) -> tuple[str, ...]:
    if not isinstance(raw, dict):
        raise b.error("[initial] must be a table", "initial")
    unknown = set(raw) - {"sequences", "file", "random"}
    if unknown:
        k = sorted(unknown)[0]
        raise b.error(f"unknown key '{k}' in [initial]", "initial", k)
    seqs: list[str] = []
    for s in raw.get("sequences", []):
        try:
            seqs.append(parse_sequence(str(s)))
        except SequenceError as exc:
            raise b.error(f"initial sequence {s!r}: {exc}", "initial", "sequences") from None
    if "file" in raw:
        path = (base / raw["file"]).resolve()
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise b.error(f"cannot read initial sequence file: {exc}", "initial", "file") from None
        for s in lines:
            s = s.strip()
            if s and not s.startswith(("#", ">")):
                try:
                    seqs.append(parse_sequence(s))
                except SequenceError as exc:
                    raise b.error(f"{path}: {exc}", "initial", "file") from None
    if "random" in raw:
        r = raw["random"]
        count = int(r.get("count", 0))
        if count < 1:
            raise b.error("initial.random.count must be >= 1", "initial", "random")
        rng = np.random.default_rng(int(r.get("seed", master_seed)))
        seqs += random_sequences(
            count, rng, int(r.get("min_length", mutation.min_length)), int(r.get("max_length", mutation.max_length))
        )
    if not seqs:
        raise b.error("[initial] provides no sequences", "initial")
    return tuple(seqs)


TOP_LEVEL = {
    "master_seed",
    "n_init",
    "output_dir",
    "elite_source",
    "refit_interval",
    "n_jobs",
    "save_models",
    "objective",
    "initial",
    "mutation",
    "embedding",
    "surrogate",
    "schedule",
    "sweep",
}


def campaign_from_dict(
    data: dict,
    text: str = "",
    path: str | None = None,
    base_dir: Path | None = None,
    seed: int | None = None,
    output_dir: str | None = None,
) -> CampaignConfig:
    """Build a `CampaignConfig` from parsed TOML; `seed`/`output_dir` override the file."""
    b = _Builder(text, path)
    base = base_dir or Path(".")
    for key in data:
        if key not in TOP_LEVEL:
            raise b.error(f"unknown top-level key '{key}'", "", key)
    for required in ("objective", "initial", "schedule"):
        if required not in data:
            raise ConfigFileError(f"missing required field '{required}'", None, path)

    master_seed = int(seed if seed is not None else data.get("master_seed", 0))
    obj = dict(data["objective"])
    if "command" in obj:
        cmd = obj["command"].split() if isinstance(obj["command"], str) else list(obj["command"])
        # "{python}" stands for the running interpreter, so configs stay portable across environments
        obj["command"] = [sys.executable if part == "{python}" else str(part) for part in cmd]
    objective = b.build(ObjectiveSpec, obj, "objective")

    mut_raw = dict(data.get("mutation", {}))
    if "mutation_rate" in mut_raw:
        rate = mut_raw.pop("mutation_rate")
        for k in ("substitution_rate", "insertion_rate", "deletion_rate"):
            mut_raw.setdefault(k, rate)
    mutation = b.build(MutationParams, mut_raw, "mutation")
    embedding = b.build(EmbeddingConfig, dict(data.get("embedding", {})), "embedding")
    if embedding.table_path:
        embedding = dataclasses.replace(embedding, table_path=str((base / embedding.table_path).resolve()))
    surrogate = b.build(SurrogateConfig, dict(data.get("surrogate", {})), "surrogate")

    phases_raw = data["schedule"]
    if not isinstance(phases_raw, list):
        raise b.error("schedule must be an array of tables ([[schedule]])", "", "schedule")
    phases = []
    for i, ph in enumerate(phases_raw):
        ph = dict(ph)
        acq_kw = dict(ph.pop("acquisition_kwargs", {}))
        acq = b.build(
            AcquisitionSpec,
            acq_kw,
            "schedule",
            i,
            kind=ph.pop("acquisition", "expected_improvement"),
            direction=objective.direction,
        )
        sel = b.build(SelectionStrategy, dict(ph.pop("selection", {})), "schedule.selection", i)
        phases.append(b.build(SchedulePhase, ph, "schedule", i, acquisition=acq, elite_strategy=sel))

    initial = _initial_sequences(b, data["initial"], base, master_seed, mutation)
    top = {k: data[k] for k in ("n_init", "elite_source", "refit_interval", "n_jobs", "save_models") if k in data}
    out = output_dir if output_dir is not None else data.get("output_dir")
    if out is not None and base_dir is not None and not Path(out).is_absolute():
        out = str((base / out).resolve())
    try:
        return CampaignConfig(
            objective=objective,
            initial_sequences=initial,
            mutation=mutation,
            embedding=embedding,
            surrogate=surrogate,
            schedule=tuple(phases),
            master_seed=master_seed,
            output_dir=out,
            **top,
        )
    except (TypeError, ValueError) as exc:
        raise b.error(str(exc), "", _blamed_key(str(exc), top)) from None


def read_toml(path: str | Path) -> tuple[dict, str]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return tomllib.loads(text), text
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigFileError(str(exc), int(m.group(1)) if m else None, str(path)) from None


def load_campaign(path: str | Path, seed: int | None = None, output_dir: str | None = None) -> CampaignConfig:
    data, text = read_toml(path)
    return campaign_from_dict(data, text, str(path), Path(path).resolve().parent, seed, output_dir)


@dataclass(frozen=True)
class SweepSpec:
    base: dict
    k_propose: tuple[int, ...]
    seeds: tuple[int, ...]
    m_select: int
    output_dir: str
    final_window: int = 10
    text: str = ""
    path: str | None = None
    base_dir: Path | None = None

    def cell_config(self, k: int, seed: int) -> CampaignConfig:
        data = {key: value for key, value in self.base.items() if key != "sweep"}
        data["schedule"] = [dict(p, k_propose=k) for p in data["schedule"]]
        out = str(Path(self.output_dir) / f"k{k}_seed{seed}")
        return campaign_from_dict(data, self.text, self.path, self.base_dir, seed=seed, output_dir=out)


def load_sweep(path: str | Path) -> SweepSpec:
    data, text = read_toml(path)
    b = _Builder(text, str(path))
    if "sweep" not in data:
        raise ConfigFileError("missing required field 'sweep'", None, str(path))
    sw = data["sweep"]
    unknown = set(sw) - {"k_propose", "seeds", "output_dir", "final_window"}
    if unknown:
        k = sorted(unknown)[0]
        raise b.error(f"unknown key '{k}' in [sweep]", "sweep", k)
    ks = [int(k) for k in sw.get("k_propose", [])]
    seeds = [int(s) for s in sw.get("seeds", [])]
    if not ks or not seeds:
        raise b.error("sweep needs non-empty k_propose and seeds", "sweep")
    if len(set(ks)) != len(ks):
        raise b.error("duplicate k_propose values", "sweep", "k_propose")
    if len(set(seeds)) != len(seeds):
        raise b.error("duplicate seeds", "sweep", "seeds")
    # validates the base config and fixes m_select from the schedule
    base_cfg = campaign_from_dict(data, text, str(path), Path(path).resolve().parent, seed=seeds[0])
    m_values = {p.m_select for p in base_cfg.schedule}
    if len(m_values) != 1:
        raise b.error("sweep requires one m_select across all schedule phases", "schedule", "m_select")
    m_select = m_values.pop()
    for k in ks:
        if k < m_select:
            raise b.error(f"k_propose {k} is below m_select {m_select}", "sweep", "k_propose")
    base_dir = Path(path).resolve().parent
    out = sw.get("output_dir") or data.get("output_dir") or "sweep_out"
    if not Path(out).is_absolute():
        out = str((base_dir / out).resolve())
    return SweepSpec(
        base=data,
        k_propose=tuple(ks),
        seeds=tuple(seeds),
        m_select=m_select,
        output_dir=out,
        final_window=int(sw.get("final_window", 10)),
        text=text,
        path=str(path),
        base_dir=base_dir,
    )
