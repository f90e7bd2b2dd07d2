"""Byte-pair-encoding subword model over characters.

Spaces are mapped to the marker ``▁`` and every chunk starts at a marker, so
``decode(encode(s)) == s`` for any string whose characters were seen in
training. Special tokens occupy fixed ids 0..6.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from domaincraft import DomaincraftError

SPACE = "▁"

PAD, BOS, EOS, UNK, MASK, SRC_TAG, TGT_TAG = range(7)
SPECIALS = ("<pad>", "<s>", "</s>", "<unk>", "<mask>", "<src>", "<tgt>")


class VocabSizeError(DomaincraftError):
    pass


def _chunks(text: str) -> list[str]:
    text = text.replace(" ", SPACE)
    out: list[str] = []
    start = 0
    for i in range(1, len(text)):
        if text[i] == SPACE:
            out.append(text[start:i])
            start = i
    if text:
        out.append(text[start:])
    return out


@dataclass
class SubwordModel:
    merges: list[tuple[str, str]]
    vocab: dict[str, int]
    languages: tuple[str, str] = ("src", "tgt")
    _ids: list[str] = field(init=False, repr=False)
    _ranks: dict[tuple[str, str], int] = field(init=False, repr=False)
    _cache: dict[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        for i, tok in enumerate(SPECIALS):
            if self.vocab.get(tok) != i:
                raise ValueError(f"special token {tok} must have id {i}")
        self._ids = [""] * len(self.vocab)
        for tok, i in self.vocab.items():
            self._ids[i] = tok
        self._ranks = {pair: r for r, pair in enumerate(self.merges)}
        self._cache = {}

    def __len__(self) -> int:
        return len(self.vocab)

    @property
    def specials(self) -> dict[str, int]:
        names = ("PAD", "BOS", "EOS", "UNK", "MASK", f"<2{self.languages[0]}>", f"<2{self.languages[1]}>")
        return dict(zip(names, range(7)))

    def _encode_chunk(self, chunk: str) -> tuple[str, ...]:
        hit = self._cache.get(chunk)
        if hit is not None:
            return hit
        parts = list(chunk)
        while len(parts) > 1:
            best = None
            for i in range(len(parts) - 1):
                r = self._ranks.get((parts[i], parts[i + 1]))
                if r is not None and (best is None or r < best[0]):
                    best = (r, i)
            if best is None:
                break
            i = best[1]
            parts[i : i + 2] = [parts[i] + parts[i + 1]]
        out = tuple(parts)
        if len(self._cache) < 200_000:
            self._cache[chunk] = out
        return out

    def pieces(self, text: str) -> list[str]:
        out: list[str] = []
        for chunk in _chunks(text):
            out.extend(self._encode_chunk(chunk))
        return out

    def encode(self, text: str) -> list[int]:
        vocab = self.vocab
        return [vocab.get(p, UNK) for p in self.pieces(text)]

    def decode(self, ids: Iterable[int]) -> str:
        toks = []
        for i in ids:
            i = int(i)
            if i < len(SPECIALS):
                continue
            toks.append(self._ids[i] if i < len(self._ids) else "")
        return "".join(toks).replace(SPACE, " ")

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()

    def to_json(self) -> dict:
        return {
            "format": "domaincraft-bpe/1",
            "languages": list(self.languages),
            "merges": [list(m) for m in self.merges],
            "vocab": self._ids,
        }

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SubwordModel":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("format") != "domaincraft-bpe/1":
            raise ValueError(f"{path}: not a subword model file")
        vocab = {tok: i for i, tok in enumerate(data["vocab"])}
        return cls([tuple(m) for m in data["merges"]], vocab, tuple(data["languages"]))


def train_bpe(texts: Iterable[str], vocab_size: int, languages: Sequence[str] = ("src", "tgt")) -> SubwordModel:
    """Learn merges until the vocabulary reaches ``vocab_size`` (or no pair repeats).

    Ties between equally frequent pairs break lexicographically, so training
    is deterministic.
    """
    word_freq: Counter[str] = Counter()
    for text in texts:
        word_freq.update(_chunks(text))
    alphabet = sorted({ch for w in word_freq for ch in w})
    if vocab_size <= len(alphabet) + len(SPECIALS):
        raise VocabSizeError(
            f"vocab_size {vocab_size} must exceed {len(alphabet)} characters + {len(SPECIALS)} specials"
        )

    words = [list(w) for w in word_freq]
    freqs = [word_freq[w] for w in word_freq]
    pair_counts: Counter[tuple[str, str]] = Counter()
    where: dict[tuple[str, str], set[int]] = defaultdict(set)
    for wi, syms in enumerate(words):
        for a, b in zip(syms, syms[1:]):
            pair_counts[a, b] += freqs[wi]
            where[a, b].add(wi)

    heap = [(-c, p) for p, c in pair_counts.items()]
    heapq.heapify(heap)
    merges: list[tuple[str, str]] = []
    vocab = {tok: i for i, tok in enumerate(SPECIALS)}
    for ch in alphabet:
        vocab[ch] = len(vocab)

    while len(vocab) < vocab_size and heap:
        negc, pair = heapq.heappop(heap)
        if pair_counts.get(pair, 0) != -negc:
            continue  # stale heap entry
        if -negc < 2:
            break
        merges.append(pair)
        new = pair[0] + pair[1]
        if new not in vocab:
            vocab[new] = len(vocab)
        touched: Counter[tuple[str, str]] = Counter()
        for wi in sorted(where.pop(pair, ())):
            syms = words[wi]
            f = freqs[wi]
            for a, b in zip(syms, syms[1:]):
                pair_counts[a, b] -= f
                touched[a, b] += 0
            merged: list[str] = []
            i = 0
            while i < len(syms):
                if i < len(syms) - 1 and syms[i] == pair[0] and syms[i + 1] == pair[1]:
                    merged.append(new)
                    i += 2
                else:
                    merged.append(syms[i])
                    i += 1
            words[wi] = merged
            for a, b in zip(merged, merged[1:]):
                pair_counts[a, b] += f
                where[a, b].add(wi)
                touched[a, b] += 0
        pair_counts.pop(pair, None)
        for p in touched:
            c = pair_counts.get(p, 0)
            if c > 0:
                heapq.heappush(heap, (-c, p))
            else:
                pair_counts.pop(p, None)
    return SubwordModel(merges, vocab, tuple(languages))
