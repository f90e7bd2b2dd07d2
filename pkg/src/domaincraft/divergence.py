"""Jensen-Shannon divergence between token frequency distributions of corpora.

Text is tokenized on whitespace and punctuation, clock times become ``<TIME>``,
numerals become ``<NUMBER>``, stopwords are removed and cased scripts are
lowercased. JSD uses log base 2 so values lie in [0, 1].
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from domaincraft import DomaincraftError
from domaincraft.corpus import ParallelCorpus

TIME_TOKEN = "<TIME>"
NUMBER_TOKEN = "<NUMBER>"

_TIME = re.compile(r"(?<!\w)\d{1,2}:\d{2}(?::\d{2})?(?:\s?[aApP]\.?[mM]\.?(?!\w))?(?![\w:])")
_NUMBER = re.compile(r"(?<!\w)[+-]?\d+(?:[.,٫٬]\d+)*(?!\w)")
_PLACEHOLDER = re.compile(r"\x00([TN])\x00")

SIDE_POLICIES = ("both", "source", "target")


class EmptyDistributionError(DomaincraftError):
    pass


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


def normalize_tokenize(text: str, stopwords: Iterable[str] = frozenset()) -> list[str]:
    text = _TIME.sub(" \x00T\x00 ", text)
    text = _NUMBER.sub(" \x00N\x00 ", text)
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    tokens: list[str] = []
    for chunk in text.split():
        m = _PLACEHOLDER.fullmatch(chunk)
        if m:
            tokens.append(TIME_TOKEN if m.group(1) == "T" else NUMBER_TOKEN)
            continue
        word: list[str] = []
        for ch in chunk + " ":
            if ch == " " or _is_punct(ch):
                if word:
                    tok = "".join(word).lower()
                    if tok not in stop:
                        tokens.append(tok)
                    word = []
            else:
                word.append(ch)
    return tokens


def load_stopwords(path) -> frozenset[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(line.strip().lower() for line in lines if line.strip())


@dataclass(frozen=True)
class FreqDist:
    prob: Mapping[str, float]

    def __post_init__(self):
        if not self.prob:
            raise EmptyDistributionError("frequency distribution has empty support")
        if any(p <= 0 for p in self.prob.values()):
            raise ValueError("probabilities must be positive over the support")
        total = math.fsum(self.prob.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    @property
    def support(self) -> frozenset[str]:
        return frozenset(self.prob)

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "FreqDist":
        counts = {t: c for t, c in counts.items() if c > 0}
        total = sum(counts.values())
        if total == 0:
            raise EmptyDistributionError("no tokens to build a distribution from")
        return cls({t: c / total for t, c in counts.items()})


def freq_dist(streams: Sequence[Sequence[str]]) -> FreqDist:
    counts: Counter[str] = Counter()
    for stream in streams:
        counts.update(stream)
    return FreqDist.from_counts(counts)


def jsd(p: FreqDist, q: FreqDist) -> float:
    """JSD(P||Q) = KL(P||M)/2 + KL(Q||M)/2 with M = (P+Q)/2, in bits."""
    keys = sorted(p.prob.keys() | q.prob.keys())
    a = np.fromiter((p.prob.get(k, 0.0) for k in keys), dtype=np.float64, count=len(keys))
    b = np.fromiter((q.prob.get(k, 0.0) for k in keys), dtype=np.float64, count=len(keys))
    m = 0.5 * a + 0.5 * b
    # M > 0 wherever either side is, so only 0*log(0) terms need masking
    kl_pm = np.sum(a[a > 0] * np.log2(a[a > 0] / m[a > 0]))
    kl_qm = np.sum(b[b > 0] * np.log2(b[b > 0] / m[b > 0]))
    value = 0.5 * kl_pm + 0.5 * kl_qm
    return float(min(1.0, max(0.0, value)))


@dataclass(frozen=True)
class DivergenceMatrix:
    labels: tuple[tuple[str, str], ...]
    values: np.ndarray

    def __post_init__(self):
        n = len(self.labels)
        if self.values.shape != (n, n):
            raise ValueError("matrix shape does not match labels")

    def get(self, a: tuple[str, str], b: tuple[str, str]) -> float:
        return float(self.values[self.labels.index(a), self.labels.index(b)])

    def to_csv(self) -> str:
        names = [f"{d}/{s}" for d, s in self.labels]
        lines = ["," + ",".join(names)]
        for name, row in zip(names, self.values):
            lines.append(name + "," + ",".join(f"{v:.6f}" for v in row))
        return "\n".join(lines) + "\n"


def corpus_side_dist(
    corpus: ParallelCorpus, side: str, stopwords: Iterable[str] = frozenset()
) -> FreqDist:
    texts = corpus.sources if side == "source" else corpus.targets
    stop = frozenset(stopwords)
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(normalize_tokenize(text, stop))
    if not counts:
        raise EmptyDistributionError(f"corpus {corpus.label} ({side} side) is empty after normalization")
    return FreqDist.from_counts(counts)


def corpus_jsd(
    a: ParallelCorpus,
    b: ParallelCorpus,
    side_policy: str = "both",
    stopwords: Mapping[str, Iterable[str]] | None = None,
) -> float:
    """JSD between two corpora of the same language pair, averaged over sides."""
    if side_policy not in SIDE_POLICIES:
        raise ValueError(f"side_policy must be one of {SIDE_POLICIES}")
    if a.lang != b.lang:
        raise ValueError(f"corpora have different language pairs: {a.lang} vs {b.lang}")
    stopwords = stopwords or {}
    sides = ("source", "target") if side_policy == "both" else (side_policy,)
    vals = []
    for side in sides:
        lang = a.lang.source if side == "source" else a.lang.target
        stop = stopwords.get(lang, ())
        vals.append(jsd(corpus_side_dist(a, side, stop), corpus_side_dist(b, side, stop)))
    return sum(vals) / len(vals)


def divergence_matrix(
    corpora: Sequence[ParallelCorpus],
    side_policy: str = "both",
    stopwords: Mapping[str, Iterable[str]] | None = None,
) -> DivergenceMatrix:
    """Pairwise JSD over (domain, split) labels, averaged across language pairs.

    Corpora sharing a label but differing in language pair contribute one
    value per language pair; those values are averaged.
    """
    if len(corpora) < 2:
        raise ValueError("need at least two corpora")
    if side_policy not in SIDE_POLICIES:
        raise ValueError(f"side_policy must be one of {SIDE_POLICIES}")
    stopwords = stopwords or {}
    sides = ("source", "target") if side_policy == "both" else (side_policy,)

    by_label: dict[tuple[str, str], dict[str, ParallelCorpus]] = {}
    for c in corpora:
        by_label.setdefault((str(c.domain), c.split), {})[str(c.lang)] = c
    labels = tuple(sorted(by_label))

    dists: dict[tuple[tuple[str, str], str, str], FreqDist] = {}
    for label, per_lang in by_label.items():
        for lang, c in per_lang.items():
            for side in sides:
                code = c.lang.source if side == "source" else c.lang.target
                dists[label, lang, side] = corpus_side_dist(c, side, stopwords.get(code, ()))

    n = len(labels)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            li, lj = labels[i], labels[j]
            shared = sorted(by_label[li].keys() & by_label[lj].keys())
            if not shared:
                raise ValueError(f"{li} and {lj} share no language pair")
            per_lang = [
                sum(jsd(dists[li, lang, s], dists[lj, lang, s]) for s in sides) / len(sides)
                for lang in shared
            ]
            values[i, j] = values[j, i] = sum(per_lang) / len(per_lang)
    return DivergenceMatrix(labels, values)
