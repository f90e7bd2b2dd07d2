from __future__ import annotations

import copy
import logging
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import torch

from domaincraft.corpus import ParallelCorpus, SentencePair
from domaincraft.mixing import MixedDataset, derive_seed
from domaincraft.model.bpe import SubwordModel
from domaincraft.model.checkpoint import save_checkpoint
from domaincraft.model.network import ModelConfig, Seq2Seq
from domaincraft.model.noising import NoiseConfig
from domaincraft.model.objectives import NumericError, batch_for, batch_loss
from domaincraft.strategy import Objective

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Per-stage optimisation settings; defaults are the fine-tuning values
    used for the mBART experiments (3 epochs, lr 3e-5, batch 32, seed 222)."""

    epochs: int = 3
    lr: float = 3e-5
    batch_size: int = 32
    seed: int = 222
    dropout: float | None = None
    attention_dropout: float | None = None
    clip_norm: float | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.lr < 0:
            raise ValueError("learning rate must be non-negative")

    def with_overrides(self, overrides: Mapping[str, object] | None) -> "TrainConfig":
        if not overrides:
            return self
        fields = asdict(self)
        unknown = set(overrides) - set(fields)
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        typed = {k: (type(fields[k])(v) if fields[k] is not None and v is not None else v)
                 for k, v in overrides.items()}
        return replace(self, **typed)

    def to_json(self) -> dict:
        return asdict(self)


class TrainingDiverged(NumericError):
    def __init__(self, message: str, last_good_state: dict):
        super().__init__(message)
        self.last_good_state = last_good_state


def new_model(cfg: ModelConfig, seed: int = 222, dtype=torch.float32) -> Seq2Seq:
    torch.manual_seed(seed)
    model = Seq2Seq(cfg)
    return model.to(dtype)


def encode_pairs(data, subword: SubwordModel) -> list[tuple[list[int], list[int]]]:
    if isinstance(data, MixedDataset):
        pairs: Iterable[SentencePair] = data.sentence_pairs
    elif isinstance(data, ParallelCorpus):
        pairs = data.pairs
    else:
        pairs = data
    return [(subword.encode(p.source), subword.encode(p.target)) for p in pairs]


def train_stage(
    model: Seq2Seq,
    data: MixedDataset | ParallelCorpus | Sequence[SentencePair],
    objective: Objective,
    cfg: TrainConfig,
    subword: SubwordModel,
    noise_cfg: NoiseConfig = NoiseConfig(),
    checkpoint_path=None,
) -> tuple[Seq2Seq, list[float]]:
    """Train in place for ``cfg.epochs`` epochs with Adam; returns (model, per-epoch mean loss).

    A fresh optimizer is created on every call. Batch order, dropout and
    noising all derive from ``cfg.seed``.
    """
    encoded = encode_pairs(data, subword)
    if not encoded:
        raise ValueError("empty training set")
    model.set_dropout(cfg.dropout, cfg.attention_dropout)
    torch.manual_seed(cfg.seed)
    order_rng = np.random.default_rng(derive_seed(cfg.seed, "batch-order"))
    noise_seed = derive_seed(cfg.seed, "noise")
    optim = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=(0.9, 0.98), eps=1e-8)

    last_good = copy.deepcopy(model.state_dict())
    epoch_losses: list[float] = []
    step = 0
    model.train()
    for epoch in range(cfg.epochs):
        perm = order_rng.permutation(len(encoded))
        total, n_batches = 0.0, 0
        for start in range(0, len(perm), cfg.batch_size):
            pairs = [encoded[i] for i in perm[start : start + cfg.batch_size]]
            batch = batch_for(pairs, objective, model.cfg.max_len, noise_cfg, noise_seed, step)
            optim.zero_grad(set_to_none=True)
            value = batch_loss(model, batch)
            if not torch.isfinite(value):
                model.load_state_dict(last_good)
                if checkpoint_path is not None:
                    save_checkpoint(model, checkpoint_path)
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch} batch {step}; restored last finite weights", last_good
                )
            value.backward()
            if cfg.clip_norm:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.clip_norm)
            optim.step()
            total += value.item()
            n_batches += 1
            step += 1
        if not all(torch.isfinite(p).all() for p in model.parameters()):
            model.load_state_dict(last_good)
            raise TrainingDiverged(f"non-finite weights after epoch {epoch}", last_good)
        last_good = copy.deepcopy(model.state_dict())
        epoch_losses.append(total / n_batches)
        log.info("epoch %d/%d loss %.4f", epoch + 1, cfg.epochs, epoch_losses[-1])
    model.eval()
    if checkpoint_path is not None:
        save_checkpoint(model, checkpoint_path)
    return model, epoch_losses


def mean_loss(model: Seq2Seq, data, objective: Objective, subword: SubwordModel, batch_size: int = 64,
              noise_cfg: NoiseConfig = NoiseConfig(), seed: int = 0) -> float:
    """Token-weighted evaluation loss, no dropout, no gradients."""
    encoded = encode_pairs(data, subword)
    model.eval()
    total, tokens = 0.0, 0
    with torch.no_grad():
        for step, start in enumerate(range(0, len(encoded), batch_size)):
            batch = batch_for(encoded[start : start + batch_size], objective, model.cfg.max_len, noise_cfg, seed, step)
            n = batch.n_tokens
            total += float(batch_loss(model, batch)) * n
            tokens += n
    if tokens == 0:
        raise NumericError("no target tokens to score")
    return total / tokens
