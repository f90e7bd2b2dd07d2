"""Workspace layout, flat key-value config, run manifests and the results store.

Layout under the workspace root::

    domaincraft.conf                 key = value settings (# comments)
    corpora/<lang>/<domain>/<split>.src.txt / .tgt.txt
    tokenizer/<lang>.json            subword model shared by all runs of a pair
    manifests/<schedule_id>.json     one per planned schedule
    checkpoints/<schedule_id>.stageN.ckpt
    results.csv                      append-only result rows
    reports/
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from filelock import FileLock

from domaincraft import DomaincraftError, __version__
from domaincraft.corpus import DomainId, LangPair, ParallelCorpus, load_stem, save_parallel

ENV_VAR = "DOMAINCRAFT_WORKSPACE"
CONFIG_NAME = "domaincraft.conf"
MANIFEST_VERSION = 1
RESULT_FIELDS = ("schedule_id", "strategy", "mode", "test_domain", "im_size", "fi_size", "metric", "score")

# built-in defaults: the stock fine-tuning hyperparameters
DEFAULTS: dict[str, Any] = {
    "seed": 222,
    "lang": "",
    "train.epochs": 3,
    "train.lr": 3e-5,
    "train.batch_size": 32,
    "train.dropout": 0.3,
    "train.attention_dropout": 0.1,
    "continue.epochs": 0,
    "continue.lr": 0.0,
    "model.layers": 2,
    "model.heads": 4,
    "model.d_model": 128,
    "model.d_ff": 256,
    "model.max_len": 128,
    "noise.mask_ratio": 0.35,
    "noise.span_lambda": 3.5,
    "bpe.vocab_size": 2000,
    "eval.tokenizer": "subword",
}


class WorkspaceError(DomaincraftError):
    pass


class ConfigError(WorkspaceError):
    pass


class ManifestError(WorkspaceError):
    pass


class ManifestVersionError(ManifestError):
    pass


class UnknownDomainError(WorkspaceError):
    pass


class ResultConflictError(WorkspaceError):
    pass


class OrphanRowError(WorkspaceError):
    pass


def parse_config(text: str, origin: str = "<config>") -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{origin}:{n}: empty key")
        out[key] = value
    return out


def _coerce(key: str, value: Any) -> Any:
    default = DEFAULTS.get(key)
    if value is None or default is None or isinstance(value, type(default)) and not isinstance(value, str):
        return value
    try:
        if isinstance(default, bool):
            return str(value).lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return str(value)


def resolve_settings(config: Mapping[str, str], flags: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Command-line flag > workspace config file > built-in default."""
    unknown = set(config) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = dict(DEFAULTS)
    for key, value in config.items():
        out[key] = _coerce(key, value)
    for key, value in (flags or {}).items():
        if value is not None:
            out[key] = _coerce(key, value)
    return out


def settings_hash(settings: Mapping[str, Any]) -> str:
    return hashlib.sha256(json.dumps(dict(settings), sort_keys=True).encode()).hexdigest()


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class Workspace:
    root: Path

    @classmethod
    def locate(cls, path=None, must_exist: bool = True) -> "Workspace":
        """``--workspace`` flag, else ``$DOMAINCRAFT_WORKSPACE``, else the current directory."""
        chosen = path or os.environ.get(ENV_VAR) or "."
        ws = cls(Path(chosen))
        if must_exist and not ws.config_path.exists():
            raise WorkspaceError(f"no workspace at {ws.root} (missing {CONFIG_NAME}; run ingest or synth first)")
        return ws

    def init(self) -> "Workspace":
        for sub in ("corpora", "tokenizer", "manifests", "checkpoints", "reports"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        if not self.config_path.exists():
            lines = ["# domaincraft workspace settings: key = value"]
            lines += [f"# {k} = {v}" for k, v in DEFAULTS.items()]
            self.config_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return self

    @property
    def config_path(self) -> Path:
        return self.root / CONFIG_NAME

    def config(self) -> dict[str, str]:
        return parse_config(self.config_path.read_text(encoding="utf-8"), str(self.config_path))

    def settings(self, flags: Mapping[str, Any] | None = None) -> dict[str, Any]:
        return resolve_settings(self.config(), flags)

    # corpora

    def corpus_stem(self, lang: str, domain: str, split: str) -> Path:
        return self.root / "corpora" / lang / DomainId(domain) / split

    def add_corpus(self, corpus: ParallelCorpus) -> tuple[Path, Path]:
        stem = self.corpus_stem(str(corpus.lang), corpus.domain, corpus.split)
        stem.parent.mkdir(parents=True, exist_ok=True)
        return save_parallel(corpus, stem)

    def languages(self) -> list[str]:
        base = self.root / "corpora"
        return sorted(p.name for p in base.iterdir() if p.is_dir()) if base.exists() else []

    def resolve_lang(self, lang: str | None) -> str:
        langs = self.languages()
        if lang:
            if lang not in langs:
                raise UnknownDomainError(f"no corpora for language pair {lang}")
            return lang
        if len(langs) != 1:
            raise WorkspaceError(f"workspace holds {len(langs)} language pairs; pass --lang")
        return langs[0]

    def corpus_index(self, lang: str) -> dict[tuple[str, str], Path]:
        out = {}
        for src in sorted((self.root / "corpora" / lang).glob("*/*.src.txt")):
            split = src.name[: -len(".src.txt")]
            out[src.parent.name, split] = src.with_name(split)
        return out

    def domains(self, lang: str, split: str = "train") -> list[str]:
        return sorted(d for d, s in self.corpus_index(lang) if s == split)

    def load_corpus(self, lang: str, domain: str, split: str) -> ParallelCorpus:
        stem = self.corpus_stem(lang, domain, split)
        if not Path(str(stem) + ".src.txt").exists():
            raise UnknownDomainError(f"no {split} corpus for domain {domain!r} ({lang})")
        return load_stem(stem, domain, LangPair.parse(lang), split)

    # tokenizer

    def tokenizer_path(self, lang: str) -> Path:
        return self.root / "tokenizer" / f"{lang}.json"

    # manifests

    def manifest_path(self, schedule_id: str) -> Path:
        return self.root / "manifests" / f"{schedule_id}.json"

    def write_manifest(self, manifest: Mapping) -> Path:
        path = self.manifest_path(manifest["schedule"]["id"])
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)
        return path

    def read_manifest(self, schedule_id: str) -> dict:
        path = self.manifest_path(schedule_id)
        if not path.exists():
            raise ManifestError(f"no manifest for schedule {schedule_id!r}")
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("manifest_version") != MANIFEST_VERSION:
            raise ManifestVersionError(
                f"manifest {schedule_id} has version {data.get('manifest_version')}, expected {MANIFEST_VERSION}"
            )
        return data

    def manifest_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "manifests").glob("*.json"))

    @property
    def results(self) -> "ResultsStore":
        return ResultsStore(self.root / "results.csv")

    def checkpoint_dir(self) -> Path:
        d = self.root / "checkpoints"
        d.mkdir(parents=True, exist_ok=True)
        return d

    def reports_dir(self) -> Path:
        d = self.root / "reports"
        d.mkdir(parents=True, exist_ok=True)
        return d


def new_manifest(schedule_json: Mapping, settings: Mapping[str, Any]) -> dict:
    return {
        "manifest_version": MANIFEST_VERSION,
        "toolkit_version": __version__,
        "schedule": dict(schedule_json),
        "seeds": {"base": settings["seed"], "data": [s["data"]["seed"] for s in schedule_json["stages"]]},
        "settings": dict(settings),
        "config_hash": settings_hash(settings),
        "created": now(),
        "inputs": {},
        "outputs": {},
        "runs": [],
    }


def format_score(score: float) -> str:
    return f"{score:.4f}"


class ResultsStore:
    """Append-only CSV of result rows, keyed by (schedule_id, test_domain, metric).

    Appends hold an exclusive file lock. Re-adding an identical row is a
    no-op; a differing row for an existing key is an error, never an update.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self.lock = FileLock(str(self.path) + ".lock")

    def rows(self) -> list[dict[str, str]]:
        if not self.path.exists():
            return []
        with self.path.open(newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if tuple(reader.fieldnames or ()) != RESULT_FIELDS:
                raise WorkspaceError(f"{self.path}: unexpected header {reader.fieldnames}")
            return list(reader)

    @staticmethod
    def key(row: Mapping[str, Any]) -> tuple[str, str, str]:
        return str(row["schedule_id"]), str(row["test_domain"]), str(row["metric"])

    def append(self, row: Mapping[str, Any]) -> bool:
        """Returns True if a row was written, False if an identical row existed."""
        row = {k: str(row[k]) for k in RESULT_FIELDS}
        with self.lock:
            for old in self.rows():
                if self.key(old) == self.key(row):
                    if old == row:
                        return False
                    raise ResultConflictError(
                        f"results row for {'/'.join(self.key(row))} already exists with score {old['score']}"
                        f" (new {row['score']})"
                    )
            new_file = not self.path.exists()
            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=RESULT_FIELDS, lineterminator="\n")
            if new_file:
                writer.writeheader()
            writer.writerow(row)
            with self.path.open("a", encoding="utf-8", newline="") as f:
                f.write(buf.getvalue())
            return True
