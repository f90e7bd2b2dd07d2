import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from domaincraft.corpus import (AlignmentError, CorpusEncodingError, CorpusError, DomainId, LangPair, SentencePair,
                                SizeError, corpus_stats, load_parallel, load_stem, load_tsv, make_corpus, sample,
                                save_parallel)

LANG = LangPair("en", "si")


def write_pair(tmp_path, src_lines, tgt_lines):
    s, t = tmp_path / "a.src.txt", tmp_path / "a.tgt.txt"
    s.write_text("\n".join(src_lines) + "\n", encoding="utf-8")
    t.write_text("\n".join(tgt_lines) + "\n", encoding="utf-8")
    return s, t


def test_load_three_lines(tmp_path):
    s, t = write_pair(tmp_path, ["a", "b", "c"], ["x", "y", "z"])
    c = load_parallel(s, t, "pmi", LANG, "train")
    assert len(c) == 3
    assert [p.index for p in c.pairs] == [0, 1, 2]
    assert c.dropped == 0


def test_blank_line_is_dropped_and_counted(tmp_path):
    s, t = write_pair(tmp_path, ["a", "b", "", "d", "e"], ["v", "w", "x", "y", "z"])
    c = load_parallel(s, t, "pmi", LANG, "train")
    assert len(c) == 4
    assert c.dropped == 1
    assert c.sources == ["a", "b", "d", "e"]
    assert [p.index for p in c.pairs] == [0, 1, 2, 3]


def test_unequal_line_counts(tmp_path):
    s, t = write_pair(tmp_path, ["a", "b"], ["x"])
    with pytest.raises(AlignmentError):
        load_parallel(s, t, "pmi", LANG, "train")


def test_bad_utf8_reports_line(tmp_path):
    s, t = write_pair(tmp_path, ["a", "b", "c"], ["x", "y", "z"])
    s.write_bytes(b"a\nb\n\xff\xfe\n")
    with pytest.raises(CorpusEncodingError, match="line 3"):
        load_parallel(s, t, "pmi", LANG, "train")


def test_large_corpus_size(tmp_path):
    n = 25_000
    s, t = write_pair(tmp_path, [f"s{i}" for i in range(n)], [f"t{i}" for i in range(n)])
    assert len(load_parallel(s, t, "cc", LANG, "train")) == n


def test_tsv_and_round_trip(tmp_path):
    p = tmp_path / "c.tsv"
    p.write_text("hello world\tha lo\nfoo\tbar\n", encoding="utf-8")
    c = load_tsv(p, "gvt", LANG, "test")
    assert c.pairs[1] == SentencePair("foo", "bar", 1)
    save_parallel(c, tmp_path / "out" / "test")
    back = load_stem(tmp_path / "out" / "test", "gvt", LANG, "test")
    assert back.pairs == c.pairs


def test_types_validation():
    assert DomainId("Bible") == DomainId("bible")
    with pytest.raises(CorpusError):
        DomainId("")
    with pytest.raises(CorpusError):
        LangPair("en", "en")
    with pytest.raises(CorpusError):
        SentencePair("a\nb", "c", 0)
    with pytest.raises(CorpusError):
        make_corpus([], "x", LANG, "train")
    with pytest.raises(CorpusError):
        make_corpus([("a", "b")], "x", LANG, "valid")


def test_sample_full_is_permutation(small_corpus):
    s = sample(small_corpus, len(small_corpus), 5)
    assert Counter((p.source, p.target) for p in s.pairs) == Counter((p.source, p.target) for p in small_corpus.pairs)
    assert [p.index for p in s.pairs] == list(range(len(small_corpus)))


def test_sample_deterministic_and_seed_sensitive(small_corpus):
    a = sample(small_corpus, 20, 222)
    b = sample(small_corpus, 20, 222)
    c = sample(small_corpus, 20, 223)
    assert a.pairs == b.pairs
    assert a.pairs != c.pairs
    orig = Counter((p.source, p.target) for p in small_corpus.pairs)
    assert not Counter((p.source, p.target) for p in c.pairs) - orig


def test_sample_too_large(small_corpus):
    with pytest.raises(SizeError):
        sample(small_corpus, len(small_corpus) + 1, 0)
    with pytest.raises(SizeError):
        sample(small_corpus, 0, 0)


def test_sample_inclusion_is_uniform():
    # each pair should be included with probability 1/2 when n = |c|/2
    c = make_corpus([(f"s{i}", f"t{i}") for i in range(20)], "x", LANG, "train")
    trials = 2000
    hits = Counter()
    for seed in range(trials):
        hits.update(p.source for p in sample(c, 10, seed).pairs)
    observed = [hits[f"s{i}"] for i in range(20)]
    chi2 = stats.chisquare(observed, [trials / 2] * 20)
    assert chi2.pvalue > 1e-3


def test_corpus_stats_hand_count():
    c = make_corpus([("a b", "x"), ("a", "x y")], "x", LANG, "train")
    st_ = corpus_stats(c)
    assert (st_.pairs, st_.source_tokens, st_.target_tokens, st_.source_types, st_.target_types) == (2, 3, 3, 2, 2)


def test_corpus_stats_permutation_invariant(small_corpus):
    assert corpus_stats(sample(small_corpus, len(small_corpus), 9)) == corpus_stats(small_corpus)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.text("abc xyz", min_size=1, max_size=8), st.text("pqr st", min_size=1, max_size=8)),
                min_size=1, max_size=20))
def test_save_load_round_trip(tmp_path_factory, rows):
    rows = [(a, b) for a, b in rows if a.strip() and b.strip()]
    if not rows:
        return
    c = make_corpus(rows, "d", LANG, "train")
    stem = tmp_path_factory.mktemp("rt") / "train"
    save_parallel(c, stem)
    back = load_stem(stem, "d", LANG, "train")
    # loading trims surrounding whitespace on each side
    assert [(p.source, p.target) for p in back.pairs] == [(p.source.strip(), p.target.strip()) for p in c.pairs]


def test_digest_changes_with_content(small_corpus):
    other = sample(small_corpus, len(small_corpus), random.Random(0).randint(0, 99))
    assert small_corpus.digest() == make_corpus([(p.source, p.target) for p in small_corpus.pairs], "pmi",
                                                LANG, "train").digest()
    assert other.digest() != small_corpus.digest()
