"""Desk-scale experiment presets on synthetic domain families.

Two experiments mirror the qualitative findings the toolkit is built
around: out-domain score versus domain divergence (with and without
auxiliary data), and the in-domain gain of multi-domain ITTL over vanilla
fine-tuning as the target set grows.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from domaincraft.analysis import RunResult, r_squared, spearman
from domaincraft.corpus import ParallelCorpus
from domaincraft.divergence import corpus_jsd
from domaincraft.model.bpe import SubwordModel, train_bpe
from domaincraft.model.network import ModelConfig
from domaincraft.model.training import TrainConfig
from domaincraft.pipeline import run_schedule
from domaincraft.strategy import Mode, Schedule, Strategy, build_schedule
from domaincraft.synth import SynthDomain, SynthSpec, calibrate_overlap, generate

log = logging.getLogger(__name__)

# The stock fine-tuning values (lr 3e-5, 3 epochs, dropout 0.3) assume a large
# pre-trained model. A randomly initialised desk-scale model needs a larger
# step size, more passes and no dropout to converge within minutes. Later
# stages fine-tune an already trained model: 3 epochs at a smaller step.
DESK_TRAIN = TrainConfig(epochs=10, lr=2e-3, batch_size=32, seed=222)
DESK_CONTINUE = TrainConfig(epochs=3, lr=5e-4, batch_size=32, seed=222)
DESK_MODEL = dict(layers=2, heads=4, d_model=128, d_ff=256, max_len=64, dropout=0.0, attention_dropout=0.0)

FAMILY = ("alpha", "beta", "gamma", "delta")
# JSD of each member to the reference member ``alpha`` (which uses only core words)
FAMILY_TARGETS = {"beta": 0.1, "gamma": 0.5, "delta": 0.9}


def desk_model_config(subword: SubwordModel, **overrides) -> ModelConfig:
    return ModelConfig(vocab_size=len(subword), **{**DESK_MODEL, **overrides})


def divergence_family(vocab_size: int = 100, train_size: int = 2000, test_size: int = 300,
                      seed: int = 222, targets: Mapping[str, float] = FAMILY_TARGETS) -> SynthSpec:
    """Four domains with nested core arcs calibrated to span low to high divergence."""
    template = SynthSpec(
        domains=(SynthDomain(FAMILY[0], vocab_size, 1.0), SynthDomain("probe", vocab_size, 1.0)),
        sizes={"train": train_size}, generation_seed=seed,
    )
    domains = [SynthDomain(FAMILY[0], vocab_size, 1.0)]
    for name, target in targets.items():
        # calibrate under the member's own name so the sample matches the generated corpus
        t = replace(template, domains=(template.domains[0], SynthDomain(name, vocab_size, 1.0)))
        domains.append(SynthDomain(name, vocab_size, round(calibrate_overlap(target, t), 4)))
    return SynthSpec(domains=tuple(domains), sizes={"train": train_size, "test": test_size}, generation_seed=seed)


@dataclass
class Workbench:
    train: dict[str, ParallelCorpus]
    test: dict[str, ParallelCorpus]
    subword: SubwordModel
    model_cfg: ModelConfig
    train_cfg: TrainConfig = DESK_TRAIN
    continuation: TrainConfig | None = DESK_CONTINUE
    cache: dict = field(default_factory=dict)

    def run(self, schedule: Schedule) -> RunResult:
        out = run_schedule(schedule, self.train, self.test[str(schedule.test[0])], self.subword,
                           self.model_cfg, self.train_cfg, cache=self.cache,
                           continuation=self.continuation)
        final = schedule.final_stage.data.domains
        jsd = corpus_jsd(self.train[str(final[0])], self.test[str(schedule.test[0])]) if len(final) == 1 else None
        log.info("%s: %.2f (%.0fs)", schedule.id, out.result.score, out.seconds)
        return RunResult(schedule.id, schedule.strategy, schedule.mode, schedule.im_size, schedule.fi_size,
                         str(schedule.test[0]), out.result.score, jsd)


def workbench(spec: SynthSpec, bpe_vocab: int | None = None, train_cfg: TrainConfig = DESK_TRAIN,
              **model_overrides) -> Workbench:
    corpora = generate(spec)
    train = {str(c.domain): c for c in corpora if c.split == "train"}
    test = {str(c.domain): c for c in corpora if c.split == "test"}
    texts = [t for c in train.values() for t in c.sources + c.targets]
    if bpe_vocab is None:
        # enough merges to reach whole-word pieces for every synthetic word
        bpe_vocab = 2 * len({w for t in texts for w in t.split()}) + 64
    subword = train_bpe(texts, bpe_vocab)
    return Workbench(train, test, subword, desk_model_config(subword, **model_overrides), train_cfg)


@dataclass(frozen=True)
class DivergenceReport:
    baseline: list[RunResult]
    multi_ittl: list[RunResult]
    spearman_baseline: float
    r2_baseline: float
    r2_multi_ittl: float
    seconds: float


def out_domain_divergence(bench: Workbench, size: int | None = None, domains: Sequence[str] = FAMILY,
                          seed: int = 222) -> DivergenceReport:
    """Vanilla FT on every ordered (train, test) pair, and multi-domain ITTL
    out-domain runs (all other domains as D, each as final) on the same grid."""
    start = time.perf_counter()
    base, multi = [], []
    for test in domains:
        others = [d for d in domains if d != test]
        for final in others:
            n = size or len(bench.train[final])
            s = build_schedule(Strategy.VANILLA_FT, {final: n}, final, Mode.OUT_DOMAIN, seed, test=test)
            base.append(bench.run(s))
    for test in domains:
        others = [d for d in domains if d != test]
        for final in others:
            sizes = {d: size or len(bench.train[d]) for d in others}
            s = build_schedule(Strategy.MULTI_DOMAIN_ITTL, sizes, final, Mode.OUT_DOMAIN, seed, test=test)
            multi.append(bench.run(s))

    def xy(rows):
        return [r.jsd_final_to_test for r in rows], [r.score for r in rows]

    bx, by = xy(base)
    mx, my = xy(multi)
    return DivergenceReport(base, multi, spearman(bx, by), r_squared(bx, by), r_squared(mx, my),
                            time.perf_counter() - start)


@dataclass(frozen=True)
class GainReport:
    small: int
    large: int
    gain_small: float
    gain_large: float
    rows: list[RunResult]
    seconds: float


def in_domain_gain(bench: Workbench, targets: Sequence[str], aux: Sequence[str], im_size: int,
                   small: int = 1000, large: int = 10000, seed: int = 222) -> GainReport:
    """Mean (multi-domain ITTL - vanilla FT) in-domain score at a small and a large target size."""
    start = time.perf_counter()
    rows = []
    gains = {}
    for fi in (small, large):
        diffs = []
        for target in targets:
            sizes = {**{d: im_size for d in aux if d != target}, target: fi}
            v = bench.run(build_schedule(Strategy.VANILLA_FT, {target: fi}, target, Mode.IN_DOMAIN, seed))
            m = bench.run(build_schedule(Strategy.MULTI_DOMAIN_ITTL, sizes, target, Mode.IN_DOMAIN, seed))
            rows += [v, m]
            diffs.append(m.score - v.score)
        gains[fi] = sum(diffs) / len(diffs)
    return GainReport(small, large, gains[small], gains[large], rows, time.perf_counter() - start)
