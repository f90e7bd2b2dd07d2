"""Execute a compiled Schedule: mix data per stage, train stages in order, evaluate."""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, MutableMapping

from domaincraft.corpus import ParallelCorpus
from domaincraft.evaluation import EvalResult, evaluate
from domaincraft.mixing import derive_seed, mix
from domaincraft.model.bpe import SubwordModel
from domaincraft.model.network import ModelConfig, Seq2Seq
from domaincraft.model.noising import NoiseConfig
from domaincraft.model.training import TrainConfig, new_model, train_stage
from domaincraft.strategy import Schedule

log = logging.getLogger(__name__)


@dataclass
class RunOutput:
    result: EvalResult
    model: Seq2Seq
    stage_losses: list[list[float]]
    hypotheses: list[str]
    checkpoints: list[str] = field(default_factory=list)
    seconds: float = 0.0


def stage_configs(schedule: Schedule, train_cfg: TrainConfig,
                  continuation: TrainConfig | None = None) -> list[TrainConfig]:
    """Resolved per-stage config.

    Stage 0 uses ``train_cfg``; later stages use ``continuation`` when given
    (fine-tuning an already trained model usually wants a smaller step).
    Stage-level overrides win, and seeds differ per stage index.
    """
    out = []
    for k, stage in enumerate(schedule.stages):
        base = continuation if (k > 0 and continuation is not None) else train_cfg
        cfg = base.with_overrides(stage.train)
        if "seed" not in stage.train:
            cfg = cfg.with_overrides({"seed": derive_seed(cfg.seed, "stage", k)})
        out.append(cfg)
    return out


def _prefix_keys(schedule, cfgs, corpora, subword, model_cfg, noise_cfg, init_seed) -> list[str]:
    """Hash of everything that determines the weights after each stage."""
    h = hashlib.sha256(json.dumps(
        {"model": model_cfg.to_json(), "subword": subword.digest(), "noise": [noise_cfg.mask_ratio, noise_cfg.span_lambda],
         "init_seed": init_seed},
        sort_keys=True).encode())
    keys = []
    for stage, cfg in zip(schedule.stages, cfgs):
        digests = {d: corpora[d].digest() for d in stage.data.domains}
        h.update(json.dumps({"stage": stage.to_json(), "train": cfg.to_json(), "corpora": digests},
                            sort_keys=True).encode())
        keys.append(h.copy().hexdigest())
    return keys


def run_schedule(
    schedule: Schedule,
    corpora: Mapping[str, ParallelCorpus],
    test: ParallelCorpus,
    subword: SubwordModel,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig = TrainConfig(),
    noise_cfg: NoiseConfig = NoiseConfig(),
    checkpoint_dir=None,
    tokenizer_mode: str = "subword",
    cache: MutableMapping[str, tuple[dict, list[float]]] | None = None,
    continuation: TrainConfig | None = None,
) -> RunOutput:
    """Train every stage of ``schedule`` sequentially, then score on ``test``.

    ``corpora`` maps domain -> training corpus. Each stage gets a fresh
    optimizer. With a ``cache`` dict, weights after each stage prefix are
    memoised, so schedules sharing leading stages (same data, objective and
    config) train them once; results are identical to an uncached run.
    """
    if str(test.domain) != str(schedule.test[0]):
        raise ValueError(f"test corpus is {test.domain}, schedule expects {schedule.test[0]}")
    start = time.perf_counter()
    corpora = {str(k): v for k, v in corpora.items()}
    cfgs = stage_configs(schedule, train_cfg, continuation)
    keys = _prefix_keys(schedule, cfgs, corpora, subword, model_cfg, noise_cfg, train_cfg.seed)
    model = new_model(model_cfg, train_cfg.seed)
    losses: list[list[float]] = []
    paths: list[str] = []
    for k, (stage, cfg) in enumerate(zip(schedule.stages, cfgs)):
        ckpt = None
        if checkpoint_dir is not None:
            ckpt = Path(checkpoint_dir) / f"{schedule.id}.stage{k}.ckpt"
            paths.append(str(ckpt))
        if cache is not None and keys[k] in cache and ckpt is None:
            state, epoch_losses = cache[keys[k]]
            model.load_state_dict(state)
            model.eval()
            losses.append(list(epoch_losses))
            log.info("%s stage %d: reused cached weights", schedule.id, k)
            continue
        data = mix(corpora, stage.data)
        log.info("%s stage %d (%s, %s): %d pairs", schedule.id, k, stage.role, stage.objective.value, len(data))
        model, epoch_losses = train_stage(model, data, stage.objective, cfg, subword, noise_cfg, ckpt)
        losses.append(epoch_losses)
        if cache is not None:
            cache[keys[k]] = (copy.deepcopy(model.state_dict()), list(epoch_losses))
    result, hyps = evaluate(model, subword, test, tokenizer_mode, schedule.id)
    return RunOutput(result, model, losses, hyps, paths, time.perf_counter() - start)
