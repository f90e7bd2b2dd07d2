"""Synthetic multi-domain parallel corpora with controllable divergence.

Every domain draws tokens from ``vocab_size`` Zipf-weighted rank slots. A slot
holds a word from the shared core vocabulary when it falls inside the
domain's core arc, otherwise a domain-private word. Slot ``r`` is placed at
``frac(r * phi)`` on the unit circle (a low-discrepancy sequence), and the
domain's arc is ``[offset, offset + overlap)``, so roughly ``overlap`` of the
slots (and of the probability mass) come from the core. Core slots hold the
same word with the same weight in every domain, which makes coverage between
two domains symmetric.

The target side applies a fixed bijective word mapping and then swaps each
adjacent pair of tokens.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from domaincraft import DomaincraftError
from domaincraft.corpus import LangPair, ParallelCorpus, make_corpus
from domaincraft.mixing import derive_seed

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

SRC_CONSONANTS = "bdfgklmnprstvz"
TGT_CONSONANTS = "chjqwxy"
VOWELS = "aeiou"


class CalibrationError(DomaincraftError):
    pass


@dataclass(frozen=True)
class SynthDomain:
    name: str
    vocab_size: int = 200
    overlap: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError(f"{self.name}: overlap must be in [0, 1]")
        if self.vocab_size < 1:
            raise ValueError(f"{self.name}: vocab_size must be >= 1")


@dataclass(frozen=True)
class SynthSpec:
    domains: tuple[SynthDomain, ...]
    length_range: tuple[int, int] = (6, 12)
    sizes: Mapping[str, int] = field(default_factory=lambda: {"train": 2000, "test": 300})
    translation_seed: int = 7
    generation_seed: int = 222
    lang: str = "qaa-qab"
    zipf_shift: float = 2.7
    zipf_exponent: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        lo, hi = self.length_range
        if not 1 <= lo <= hi:
            raise ValueError("length_range must satisfy 1 <= min <= max")
        if any(n < 1 for n in self.sizes.values()):
            raise ValueError("corpus sizes must be >= 1")
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ValueError("domain names must be unique")

    def with_overlap(self, index: int, overlap: float) -> "SynthSpec":
        doms = list(self.domains)
        doms[index] = replace(doms[index], overlap=overlap)
        return replace(self, domains=tuple(doms))


def _word_pool(consonants: str, rng: random.Random, count: int) -> list[str]:
    syllables = [c + v for c in consonants for v in VOWELS]
    seen: set[str] = set()
    out: list[str] = []
    while len(out) < count:
        n = rng.choice((2, 2, 3))
        w = "".join(rng.choice(syllables) for _ in range(n))
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def in_core(rank: int, overlap: float, offset: float = 0.0) -> bool:
    if overlap >= 1.0:
        return True
    return ((rank * GOLDEN - offset) % 1.0) < overlap


def zipf_weights(n: int, shift: float = 2.7, exponent: float = 1.0) -> np.ndarray:
    w = 1.0 / (np.arange(n) + shift) ** exponent
    return w / w.sum()


@dataclass(frozen=True)
class Lexicon:
    core: tuple[str, ...]
    private: Mapping[str, tuple[str, ...]]
    mapping: Mapping[str, str]


def build_lexicon(spec: SynthSpec) -> Lexicon:
    """Core and private source words plus the bijective source->target mapping.

    Words depend only on ``translation_seed`` and vocabulary sizes, so the
    core is stable across domain overlap settings.
    """
    rng = random.Random(derive_seed(spec.translation_seed, "words"))
    core_n = max(d.vocab_size for d in spec.domains)
    total = core_n + sum(d.vocab_size for d in spec.domains)
    words = _word_pool(SRC_CONSONANTS, rng, total)
    core = tuple(words[:core_n])
    private = {}
    pos = core_n
    for d in spec.domains:
        private[d.name] = tuple(words[pos : pos + d.vocab_size])
        pos += d.vocab_size
    targets = _word_pool(TGT_CONSONANTS, rng, total)
    rng.shuffle(targets)
    return Lexicon(core, private, dict(zip(words, targets)))


def domain_vocabulary(spec: SynthSpec, domain: SynthDomain, lexicon: Lexicon) -> list[str]:
    """Word occupying each rank slot of the domain."""
    priv = lexicon.private[domain.name]
    return [lexicon.core[r] if in_core(r, domain.overlap, domain.offset) else priv[r]
            for r in range(domain.vocab_size)]


def translate_tokens(tokens: Sequence[str], mapping: Mapping[str, str]) -> list[str]:
    out = [mapping[t] for t in tokens]
    for i in range(0, len(out) - 1, 2):
        out[i], out[i + 1] = out[i + 1], out[i]
    return out


def generate(spec: SynthSpec, splits: Sequence[str] | None = None) -> list[ParallelCorpus]:
    """One corpus per (domain, split), in spec order."""
    lexicon = build_lexicon(spec)
    lang = LangPair.parse(spec.lang)
    lo, hi = spec.length_range
    out = []
    for dom in spec.domains:
        vocab = domain_vocabulary(spec, dom, lexicon)
        weights = zipf_weights(dom.vocab_size, spec.zipf_shift, spec.zipf_exponent)
        for split, n in spec.sizes.items():
            if splits is not None and split not in splits:
                continue
            rng = np.random.default_rng(derive_seed(spec.generation_seed, dom.name, split))
            lengths = rng.integers(lo, hi + 1, size=n)
            ids = rng.choice(dom.vocab_size, size=int(lengths.sum()), p=weights)
            pairs = []
            pos = 0
            for length in lengths:
                toks = [vocab[i] for i in ids[pos : pos + length]]
                pos += length
                pairs.append((" ".join(toks), " ".join(translate_tokens(toks, lexicon.mapping))))
            out.append(make_corpus(pairs, dom.name, lang, split))
    return out


def measured_jsd(spec: SynthSpec, a: int = 0, b: int = 1, split: str = "train") -> float:
    from domaincraft.divergence import corpus_jsd

    pair = replace(spec, domains=(spec.domains[a], spec.domains[b]))
    ca, cb = generate(pair, splits=[split])
    return corpus_jsd(ca, cb)


def default_template(vocab_size: int = 200, train_size: int = 2000) -> SynthSpec:
    return SynthSpec(
        domains=(SynthDomain("ref", vocab_size, 1.0), SynthDomain("probe", vocab_size, 1.0)),
        sizes={"train": train_size},
    )


def calibrate_overlap(target_jsd: float, template: SynthSpec | None = None, tol: float = 0.05,
                      max_iter: int = 30) -> float:
    """Overlap for ``template.domains[1]`` whose measured JSD to ``domains[0]`` hits the target.

    Bisection on the overlap fraction; measured JSD is non-increasing in it.
    """
    if not 0.0 <= target_jsd <= 1.0:
        raise ValueError("target_jsd must be in [0, 1]")
    template = template or default_template()

    def jsd_at(o: float) -> float:
        return measured_jsd(template.with_overlap(1, o))

    hi_jsd, lo_jsd = jsd_at(0.0), jsd_at(1.0)
    if target_jsd > hi_jsd + tol or target_jsd < lo_jsd - tol:
        raise CalibrationError(
            f"target JSD {target_jsd:.3f} outside achievable range [{lo_jsd:.3f}, {hi_jsd:.3f}]"
        )
    if abs(lo_jsd - target_jsd) <= tol and target_jsd <= lo_jsd:
        return 1.0
    if abs(hi_jsd - target_jsd) <= tol and target_jsd >= hi_jsd:
        return 0.0
    lo, hi = 0.0, 1.0
    best = (abs(hi_jsd - target_jsd), 0.0)
    for _ in range(max_iter):
        mid = (lo + hi) / 2
        val = jsd_at(mid)
        best = min(best, (abs(val - target_jsd), mid))
        if abs(val - target_jsd) <= tol / 5:
            break
        if val > target_jsd:
            lo = mid
        else:
            hi = mid
    err, overlap = best
    if err > tol:
        raise CalibrationError(f"could not reach JSD {target_jsd:.3f} within {tol} (best error {err:.3f})")
    return overlap
