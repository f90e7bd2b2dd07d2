"""Multi-domain training mixtures with seeded shuffling and random oversampling."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from domaincraft.corpus import (
    CorpusError,
    DomainId,
    ParallelCorpus,
    SentencePair,
    SizeError,
    sample,
    with_pairs,
)


def derive_seed(seed: int, *labels) -> int:
    """Stable child seed from a parent seed and labels."""
    h = hashlib.sha256(repr((int(seed),) + tuple(str(x) for x in labels)).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little") & 0x7FFFFFFF


@dataclass(frozen=True)
class Component:
    domain: DomainId
    size: int
    upsample: bool = False

    def __post_init__(self):
        object.__setattr__(self, "domain", DomainId(self.domain))
        if self.size < 1:
            raise ValueError(f"component {self.domain} size must be >= 1")

    def __str__(self) -> str:
        return f"{self.domain}:{self.size}" + (":upsample" if self.upsample else "")

    @classmethod
    def parse(cls, text: str) -> "Component":
        parts = text.strip().split(":")
        if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] != "upsample"):
            raise ValueError(f"expected 'domain:size[:upsample]', got {text!r}")
        try:
            size = int(parts[1])
        except ValueError:
            raise ValueError(f"bad size in {text!r}") from None
        return cls(DomainId(parts[0]), size, len(parts) == 3)


@dataclass(frozen=True)
class DatasetSpec:
    components: tuple[Component, ...]
    seed: int = 222

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("dataset spec needs at least one component")
        names = [c.domain for c in self.components]
        if len(set(names)) != len(names):
            raise ValueError(f"component domains must be distinct: {names}")

    @property
    def domains(self) -> tuple[DomainId, ...]:
        return tuple(c.domain for c in self.components)

    @property
    def size(self) -> int:
        return sum(c.size for c in self.components)

    def __str__(self) -> str:
        return "+".join(str(c) for c in self.components) + f"@{self.seed}"

    @classmethod
    def parse(cls, entries: Iterable[str] | str, seed: int = 222) -> "DatasetSpec":
        if isinstance(entries, str):
            entries = [e for e in entries.replace(",", " ").split() if e]
        return cls(tuple(Component.parse(e) for e in entries), seed)

    def to_json(self) -> dict:
        return {"components": [str(c) for c in self.components], "seed": self.seed}

    @classmethod
    def from_json(cls, data: Mapping) -> "DatasetSpec":
        return cls.parse(data["components"], int(data["seed"]))


@dataclass(frozen=True)
class MixedDataset:
    pairs: tuple[tuple[SentencePair, DomainId], ...]
    spec: DatasetSpec

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def sentence_pairs(self) -> list[SentencePair]:
        return [p for p, _ in self.pairs]

    def domain_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for _, d in self.pairs:
            counts[d] = counts.get(d, 0) + 1
        return counts


def upsample(corpus: ParallelCorpus, target: int, seed: int) -> ParallelCorpus:
    """Grow a corpus to ``target`` pairs by balanced replication.

    Every pair is repeated ``target // n`` times and a seeded sample of
    ``target % n`` distinct pairs gets one extra copy; the result is shuffled.
    """
    n = len(corpus)
    if target < n:
        raise SizeError(f"upsample target {target} is smaller than corpus size {n}; use sample")
    copies, extra = divmod(target, n)
    rng = random.Random(seed)
    out = list(corpus.pairs) * copies
    out.extend(corpus.pairs[i] for i in rng.sample(range(n), extra))
    rng.shuffle(out)
    return with_pairs(corpus, out)


def _resolve(corpora, domain: DomainId) -> ParallelCorpus:
    if isinstance(corpora, Mapping):
        for key, c in corpora.items():
            if DomainId(key) == domain:
                return c
    else:
        for c in corpora:
            if c.domain == domain:
                return c
    raise CorpusError(f"no loaded corpus for domain {domain!r}")


def mix(corpora: Sequence[ParallelCorpus] | Mapping[str, ParallelCorpus], spec: DatasetSpec) -> MixedDataset:
    """Sample each component with ``spec.seed`` then shuffle the concatenation.

    A single-component spec therefore yields exactly the pairs of
    ``corpus.sample(c, size, spec.seed)``.
    """
    parts: list[tuple[SentencePair, DomainId]] = []
    for comp in spec.components:
        corpus = _resolve(corpora, comp.domain)
        if comp.size <= len(corpus):
            chosen = sample(corpus, comp.size, spec.seed)
        elif comp.upsample:
            chosen = upsample(corpus, comp.size, spec.seed)
        else:
            raise SizeError(
                f"{comp.domain} requests {comp.size} pairs but only {len(corpus)} exist"
                " (add ':upsample' to oversample)"
            )
        parts.extend((p, comp.domain) for p in chosen.pairs)
    random.Random(derive_seed(spec.seed, "shuffle")).shuffle(parts)
    return MixedDataset(tuple(parts), spec)
