import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domaincraft.corpus import LangPair, make_corpus
from domaincraft.evaluation import EvalResult, EvaluationError, bleu, bleu_stats, evaluate, metric_name, signature
from domaincraft.model.network import ModelConfig
from domaincraft.model.training import new_model

LANG = LangPair("en", "si")


def oracle_bleu(hyps: list[str], refs: list[str], max_n: int = 4) -> float:
    """Brute-force corpus BLEU: explicit n-gram lists and list.count clipping."""
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hyps, refs):
        ht, rt = h.split(), r.split()
        hyp_len += len(ht)
        ref_len += len(rt)
        for n in range(1, max_n + 1):
            hg = [tuple(ht[i:i + n]) for i in range(len(ht) - n + 1)]
            rg = [tuple(rt[i:i + n]) for i in range(len(rt) - n + 1)]
            totals[n - 1] += len(hg)
            for g in set(hg):
                matches[n - 1] += min(hg.count(g), rg.count(g))
    if hyp_len == 0 or 0 in matches:
        return 0.0
    geo = math.exp(sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1 - ref_len / hyp_len)
    return 100 * bp * geo


def random_corpus(rng: random.Random, vocab: str = "abcde"):
    n = rng.randint(1, 8)
    hyps, refs = [], []
    for _ in range(n):
        ref = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
        hyp = [w if rng.random() < 0.7 else rng.choice(vocab) for w in ref]
        if rng.random() < 0.3:
            hyp = hyp[: rng.randint(1, len(hyp))]
        hyps.append(" ".join(hyp))
        refs.append(" ".join(ref))
    return hyps, refs


def test_perfect_and_disjoint():
    refs = ["the cat is on the mat", "a dog barks at night"]
    assert bleu(refs, refs) == 100.0
    assert bleu(["x y z w v", "q r s t u"], refs) == 0.0


def test_hand_computed_repetition_example():
    stats = bleu_stats([["the"] * 7], ["the cat is on the mat".split()])
    assert stats.precisions[0] == pytest.approx(2 / 7)
    assert stats.matches == (2, 0, 0, 0)
    assert stats.totals == (7, 6, 5, 4)
    assert stats.brevity_penalty == 1.0
    # no bigram matches, and without smoothing the geometric mean collapses
    assert bleu(["the the the the the the the"], ["the cat is on the mat"]) == 0.0


def test_hand_computed_partial_match():
    # hyp "the cat sat on the mat" vs ref "the cat is on the mat":
    # 1-grams 5/6, 2-grams 3/5, 3-grams 1/4, 4-grams 0/3 -> 0; with max_n=3 the score is defined
    hyp, ref = "the cat sat on the mat", "the cat is on the mat"
    expected = 100 * (5 / 6 * 3 / 5 * 1 / 4) ** (1 / 3)
    assert bleu([hyp], [ref], max_n=3) == pytest.approx(expected, abs=1e-12)
    assert bleu([hyp], [ref]) == 0.0


def test_brevity_penalty_hand_value():
    hyp, ref = "a b c d", "a b c d e f g h"
    assert bleu([hyp], [ref]) == pytest.approx(100 * math.exp(1 - 8 / 4), abs=1e-12)


def test_matches_brute_force_oracle():
    rng = random.Random(17)
    for _ in range(200):
        hyps, refs = random_corpus(rng)
        assert bleu(hyps, refs) == pytest.approx(oracle_bleu(hyps, refs), abs=1e-9)


def test_subword_mode_perfect(tiny_subword):
    refs = ["abc def", "gah"]
    assert bleu(refs, refs, tiny_subword) == 100.0
    assert metric_name(tiny_subword) == "spbleu" and metric_name() == "bleu"
    assert "tok:bpe-" in signature(tiny_subword) and "smooth:none" in signature()


def test_errors():
    with pytest.raises(EvaluationError):
        bleu(["a"], ["a", "b"])
    with pytest.raises(EvaluationError):
        bleu([], [])
    with pytest.raises(ValueError):
        EvalResult("x", "d", "bleu", 101.0, 1)


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False))
def test_bleu_bounds_and_permutation_invariance(rng):
    hyps, refs = random_corpus(rng)
    v = bleu(hyps, refs)
    assert 0.0 <= v <= 100.0
    order = list(range(len(hyps)))
    rng.shuffle(order)
    assert bleu([hyps[i] for i in order], [refs[i] for i in order]) == pytest.approx(v, abs=1e-12)
    long_refs = [r for r in refs if len(r.split()) >= 4]
    if long_refs:
        assert bleu(long_refs, long_refs) == 100.0


def test_untrained_model_scores_near_zero(tiny_subword):
    rng = random.Random(3)
    rows = []
    for _ in range(30):
        words = ["".join(rng.choice("abcdefgh") for _ in range(4)) for _ in range(6)]
        rows.append((" ".join(words), " ".join(reversed(words))))
    test = make_corpus(rows, "d", LANG, "test")
    model = new_model(ModelConfig(len(tiny_subword), layers=1, heads=2, d_model=32, d_ff=64, max_len=64), 0)
    result, hyps = evaluate(model, tiny_subword, test, "word", "sched")
    assert result.score < 5
    assert result.n_hypotheses == len(hyps) == 30
    assert (result.schedule_id, result.test_domain, result.metric) == ("sched", "d", "bleu")
    again, hyps2 = evaluate(model, tiny_subword, test, "word", "sched")
    assert hyps2 == hyps and again == result
