"""Corpus-level BLEU over word or subword tokens (unsmoothed, single reference)."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from domaincraft import DomaincraftError, __version__
from domaincraft.corpus import ParallelCorpus


class EvaluationError(DomaincraftError):
    pass


@dataclass(frozen=True)
class BleuStats:
    matches: tuple[int, ...]
    totals: tuple[int, ...]
    hyp_len: int
    ref_len: int

    @property
    def precisions(self) -> list[float]:
        return [m / t if t else 0.0 for m, t in zip(self.matches, self.totals)]

    @property
    def brevity_penalty(self) -> float:
        if self.hyp_len == 0:
            return 0.0
        if self.hyp_len >= self.ref_len:
            return 1.0
        return math.exp(1.0 - self.ref_len / self.hyp_len)

    @property
    def score(self) -> float:
        if self.hyp_len == 0 or any(m == 0 for m in self.matches):
            return 0.0
        log_p = sum(math.log(m / t) for m, t in zip(self.matches, self.totals)) / len(self.matches)
        return min(100.0, 100.0 * self.brevity_penalty * math.exp(log_p))


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def tokenize_for_bleu(text: str, tokenizer="word") -> list[str]:
    if tokenizer == "word":
        return text.split()
    return tokenizer.pieces(text.strip())


def bleu_stats(hyp_tokens: Sequence[Sequence[str]], ref_tokens: Sequence[Sequence[str]], max_n: int = 4) -> BleuStats:
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hyp_tokens, ref_tokens):
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_n + 1):
            hc = _ngrams(h, n)
            rc = _ngrams(r, n)
            totals[n - 1] += sum(hc.values())
            matches[n - 1] += sum((hc & rc).values())
    return BleuStats(tuple(matches), tuple(totals), hyp_len, ref_len)


def bleu(hypotheses: Sequence[str], references: Sequence[str], tokenizer="word", max_n: int = 4) -> float:
    """Corpus BLEU on a 0-100 scale.

    ``tokenizer`` is ``"word"`` (whitespace) or a subword model exposing
    ``pieces(text)``. No smoothing: any n-gram order without matches gives 0.
    """
    if len(hypotheses) != len(references):
        raise EvaluationError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise EvaluationError("need at least one hypothesis/reference pair")
    hyp = [tokenize_for_bleu(h, tokenizer) for h in hypotheses]
    ref = [tokenize_for_bleu(r, tokenizer) for r in references]
    return bleu_stats(hyp, ref, max_n).score


def signature(tokenizer="word") -> str:
    tok = "word" if tokenizer == "word" else f"bpe-{tokenizer.digest()[:8]}"
    return f"nrefs:1|case:mixed|eff:no|tok:{tok}|smooth:none|version:domaincraft-{__version__}"


def metric_name(tokenizer="word") -> str:
    return "bleu" if tokenizer == "word" else "spbleu"


@dataclass(frozen=True)
class EvalResult:
    schedule_id: str
    test_domain: str
    metric: str
    score: float
    n_hypotheses: int
    signature: str = ""

    def __post_init__(self):
        if not 0.0 <= self.score <= 100.0:
            raise ValueError(f"score {self.score} outside [0, 100]")


def evaluate(model, subword, test: ParallelCorpus, tokenizer_mode: str = "subword", schedule_id: str = "",
             max_len: int | None = None, batch_size: int = 64) -> tuple[EvalResult, list[str]]:
    """Translate every test source and score against the references.

    Returns the result and the hypotheses (in corpus order).
    """
    from domaincraft.model.decoding import translate_batch

    if len(test) == 0:
        raise EvaluationError("empty test corpus")
    tokenizer = subword if tokenizer_mode == "subword" else "word"
    if max_len is None:
        max_len = min(model.cfg.max_len - 2, 2 * max(len(subword.encode(s)) for s in test.sources) + 10)
    hyps = translate_batch(model, subword, test.sources, max_len=max_len, batch_size=batch_size)
    score = bleu(hyps, test.targets, tokenizer)
    result = EvalResult(schedule_id, str(test.domain), metric_name(tokenizer), score, len(hyps), signature(tokenizer))
    return result, hyps
