import random

import pytest
import torch

from domaincraft.corpus import LangPair, make_corpus
from domaincraft.model.bpe import train_bpe
from domaincraft.model.network import ModelConfig
from domaincraft.model.training import new_model

torch.set_num_threads(1)

LANG = LangPair("en", "si")


def random_words(rng: random.Random, n: int, alphabet: str = "abcdefgh", max_len: int = 5) -> list[str]:
    return ["".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len))) for _ in range(n)]


@pytest.fixture
def small_corpus():
    rng = random.Random(0)
    pairs = [(" ".join(random_words(rng, 4)), " ".join(random_words(rng, 3))) for _ in range(50)]
    return make_corpus(pairs, "pmi", LANG, "train")


@pytest.fixture(scope="session")
def tiny_subword():
    rng = random.Random(1)
    texts = [" ".join(random_words(rng, 6)) for _ in range(200)]
    return train_bpe(texts, 60)


@pytest.fixture
def tiny_model_f64(tiny_subword):
    cfg = ModelConfig(len(tiny_subword), layers=2, heads=2, d_model=32, d_ff=64, max_len=32,
                      dropout=0.0, attention_dropout=0.0)
    return new_model(cfg, seed=3, dtype=torch.float64)


def pytest_terminal_summary(terminalreporter):
    # scorecard of the acceptance criteria that ran in this session
    import sys
    module = sys.modules.get("test_acceptance")
    criteria = getattr(module, "CRITERIA", None)
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(criteria):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if criteria[n] else 'FAIL'}")
