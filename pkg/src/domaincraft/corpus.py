"""Multi-domain parallel corpora: loading, validation, saving and seeded sampling."""

from __future__ import annotations

import hashlib
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from domaincraft import DomaincraftError

log = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")

_LANG_CODE = re.compile(r"^[a-z]{2,3}$")


class CorpusError(DomaincraftError):
    pass


class AlignmentError(CorpusError):
    pass


class CorpusEncodingError(CorpusError):
    pass


class SizeError(CorpusError):
    pass


class DomainId(str):
    """Domain name; compared case-insensitively (stored casefolded)."""

    def __new__(cls, name: str) -> "DomainId":
        name = str(name).strip()
        if not name:
            raise CorpusError("domain id must be non-empty")
        if any(c in name for c in "/\\:\t\n ,"):
            raise CorpusError(f"domain id {name!r} contains a reserved character")
        return super().__new__(cls, name.casefold())


@dataclass(frozen=True)
class LangPair:
    source: str
    target: str

    def __post_init__(self):
        for code in (self.source, self.target):
            if not _LANG_CODE.match(code):
                raise CorpusError(f"invalid language code {code!r}")
        if self.source == self.target:
            raise CorpusError("source and target language must differ")

    @classmethod
    def parse(cls, text: str) -> "LangPair":
        try:
            src, tgt = text.strip().lower().split("-")
        except ValueError:
            raise CorpusError(f"language pair must look like 'en-si', got {text!r}") from None
        return cls(src, tgt)

    def __str__(self) -> str:
        return f"{self.source}-{self.target}"


@dataclass(frozen=True)
class SentencePair:
    source: str
    target: str
    index: int = 0

    def __post_init__(self):
        for side in (self.source, self.target):
            if not side.strip():
                raise CorpusError(f"empty side in sentence pair {self.index}")
            if "\n" in side or "\r" in side:
                raise CorpusError(f"newline inside sentence pair {self.index}")


@dataclass(frozen=True)
class ParallelCorpus:
    domain: DomainId
    lang: LangPair
    split: str
    pairs: tuple[SentencePair, ...]
    # lines dropped at load time because one side was blank
    dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "domain", DomainId(self.domain))
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if self.split not in SPLITS:
            raise CorpusError(f"split must be one of {SPLITS}, got {self.split!r}")
        if not self.pairs:
            raise CorpusError(f"corpus {self.domain}/{self.split} has no pairs")
        for i, pair in enumerate(self.pairs):
            if pair.index != i:
                raise CorpusError(f"pair indices must be dense 0..n-1 (found {pair.index} at {i})")

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def label(self) -> str:
        return f"{self.lang}/{self.domain}/{self.split}"

    @property
    def sources(self) -> list[str]:
        return [p.source for p in self.pairs]

    @property
    def targets(self) -> list[str]:
        return [p.target for p in self.pairs]

    def digest(self) -> str:
        h = hashlib.sha256()
        for p in self.pairs:
            h.update(p.source.encode("utf-8") + b"\t" + p.target.encode("utf-8") + b"\n")
        return h.hexdigest()


def make_corpus(
    pairs: Iterable[tuple[str, str]], domain: str, lang: LangPair | str, split: str = "train"
) -> ParallelCorpus:
    """Build a corpus from (source, target) tuples, re-indexing densely."""
    if isinstance(lang, str):
        lang = LangPair.parse(lang)
    items = tuple(SentencePair(s, t, i) for i, (s, t) in enumerate(pairs))
    return ParallelCorpus(DomainId(domain), lang, split, items)


def _read_lines(path: Path) -> list[str]:
    raw = Path(path).read_bytes()
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    out = []
    for lineno, line in enumerate(lines, start=1):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusEncodingError(f"{path}: line {lineno} is not valid UTF-8 ({exc.reason})") from None
        out.append(text.rstrip("\r"))
    return out


def _build(rows: Sequence[tuple[str, str]], domain, lang, split, origin: str) -> ParallelCorpus:
    kept = [(s.strip(), t.strip()) for s, t in rows if s.strip() and t.strip()]
    dropped = len(rows) - len(kept)
    if dropped:
        log.warning("%s: %d dropped (blank on one side)", origin, dropped)
    if isinstance(lang, str):
        lang = LangPair.parse(lang)
    pairs = tuple(SentencePair(s, t, i) for i, (s, t) in enumerate(kept))
    return ParallelCorpus(DomainId(domain), lang, split, pairs, dropped=dropped)


def load_parallel(source_path, target_path, domain, lang, split: str = "train") -> ParallelCorpus:
    """Load two line-aligned UTF-8 files; line i of each becomes pair i.

    Pairs that are blank on either side are dropped and counted in
    ``corpus.dropped``.
    """
    src = _read_lines(source_path)
    tgt = _read_lines(target_path)
    if len(src) != len(tgt):
        raise AlignmentError(
            f"line count mismatch: {source_path} has {len(src)}, {target_path} has {len(tgt)}"
        )
    return _build(list(zip(src, tgt)), domain, lang, split, str(source_path))


def load_tsv(path, domain, lang, split: str = "train") -> ParallelCorpus:
    rows = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            rows.append(("", ""))
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise AlignmentError(f"{path}: line {lineno} has {len(cols)} columns, expected 2")
        rows.append((cols[0], cols[1]))
    return _build(rows, domain, lang, split, str(path))


def save_parallel(corpus: ParallelCorpus, stem) -> tuple[Path, Path]:
    """Write ``<stem>.src.txt`` and ``<stem>.tgt.txt``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    src_path = stem.parent / f"{stem.name}.src.txt"
    tgt_path = stem.parent / f"{stem.name}.tgt.txt"
    src_path.write_text("".join(p.source + "\n" for p in corpus.pairs), encoding="utf-8")
    tgt_path.write_text("".join(p.target + "\n" for p in corpus.pairs), encoding="utf-8")
    return src_path, tgt_path


def load_stem(stem, domain, lang, split: str) -> ParallelCorpus:
    """Load ``<stem>.src.txt``/``<stem>.tgt.txt`` or, failing that, ``<stem>.tsv``."""
    stem = Path(stem)
    src = stem.parent / f"{stem.name}.src.txt"
    tgt = stem.parent / f"{stem.name}.tgt.txt"
    if src.exists() and tgt.exists():
        return load_parallel(src, tgt, domain, lang, split)
    tsv = stem.parent / f"{stem.name}.tsv"
    if tsv.exists():
        return load_tsv(tsv, domain, lang, split)
    raise CorpusError(f"no corpus files found for {stem}")


def with_pairs(corpus: ParallelCorpus, pairs: Iterable[SentencePair]) -> ParallelCorpus:
    items = tuple(SentencePair(p.source, p.target, i) for i, p in enumerate(pairs))
    return ParallelCorpus(corpus.domain, corpus.lang, corpus.split, items)


def sample(corpus: ParallelCorpus, n: int, seed: int) -> ParallelCorpus:
    """Uniform sample of ``n`` pairs without replacement, in random order."""
    if not 1 <= n <= len(corpus):
        raise SizeError(
            f"cannot sample {n} pairs from {corpus.label} of size {len(corpus)}"
            " (use mixing.upsample to grow a corpus)"
        )
    idx = random.Random(seed).sample(range(len(corpus)), n)
    return with_pairs(corpus, (corpus.pairs[i] for i in idx))


@dataclass(frozen=True)
class CorpusStats:
    pairs: int
    source_tokens: int
    target_tokens: int
    source_types: int
    target_types: int


def corpus_stats(corpus: ParallelCorpus) -> CorpusStats:
    from domaincraft.divergence import normalize_tokenize

    src_tokens: list[str] = []
    tgt_tokens: list[str] = []
    for p in corpus.pairs:
        src_tokens.extend(normalize_tokenize(p.source))
        tgt_tokens.extend(normalize_tokenize(p.target))
    return CorpusStats(
        pairs=len(corpus),
        source_tokens=len(src_tokens),
        target_tokens=len(tgt_tokens),
        source_types=len(set(src_tokens)),
        target_types=len(set(tgt_tokens)),
    )
