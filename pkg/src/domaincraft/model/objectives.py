"""Training objectives: NMT, bitext denoising and monolingual denoising.

A raw batch is a list of ``(source_ids, target_ids)`` pairs of subword ids.
Encoder inputs are ``[lang_tag] + ids + [EOS]``; decoder inputs are
``[BOS, lang_tag] + ids`` with labels ``[ignore] + ids + [EOS]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from domaincraft import DomaincraftError
from domaincraft.model.bpe import BOS, EOS, PAD, SRC_TAG, TGT_TAG
from domaincraft.model.noising import NoiseConfig, noise
from domaincraft.strategy import Objective

IGNORE = -100


class NumericError(DomaincraftError):
    pass


@dataclass
class Batch:
    src: torch.Tensor
    tgt_in: torch.Tensor
    labels: torch.Tensor

    @property
    def n_tokens(self) -> int:
        return int((self.labels != IGNORE).sum())


def _pad(rows: Sequence[Sequence[int]], value: int) -> torch.Tensor:
    width = max(len(r) for r in rows)
    out = torch.full((len(rows), width), value, dtype=torch.long)
    for i, r in enumerate(rows):
        out[i, : len(r)] = torch.as_tensor(r, dtype=torch.long)
    return out


def make_batch(examples, max_len: int) -> Batch:
    """``examples``: (enc_tag, enc_ids, dec_tag, dec_ids) tuples."""
    src, tgt_in, labels = [], [], []
    for enc_tag, enc_ids, dec_tag, dec_ids in examples:
        enc = [enc_tag] + list(enc_ids)[: max_len - 2] + [EOS]
        body = list(dec_ids)[: max_len - 2]
        src.append(enc)
        tgt_in.append([BOS, dec_tag] + body)
        labels.append([IGNORE] + body + [EOS])
    return Batch(_pad(src, PAD), _pad(tgt_in, PAD), _pad(labels, IGNORE))


def _noise_seed(seed: int, step: int, i: int, side: int) -> int:
    return int(np.random.SeedSequence([seed & 0xFFFFFFFF, step, i, side]).generate_state(1)[0])


def build_examples(pairs, objective: Objective, noise_cfg: NoiseConfig, seed: int = 0, step: int = 0):
    objective = Objective(objective)
    if objective is Objective.BITEXT_PLUS_MONO:
        # alternate batch-wise 1:1 between the two denoising objectives
        objective = Objective.BITEXT_DENOISE if step % 2 == 0 else Objective.MONO_DENOISE
    out = []
    if objective is Objective.NMT:
        for s, t in pairs:
            out.append((SRC_TAG, s, TGT_TAG, t))
    elif objective is Objective.BITEXT_DENOISE:
        for i, (s, t) in enumerate(pairs):
            out.append((SRC_TAG, noise(s, noise_cfg, _noise_seed(seed, step, i, 0)) if s else s, TGT_TAG, t))
    elif objective is Objective.MONO_DENOISE:
        for i, (s, _) in enumerate(pairs):
            out.append((SRC_TAG, noise(s, noise_cfg, _noise_seed(seed, step, i, 0)) if s else s, SRC_TAG, s))
        for i, (_, t) in enumerate(pairs):
            out.append((TGT_TAG, noise(t, noise_cfg, _noise_seed(seed, step, i, 1)) if t else t, TGT_TAG, t))
    else:
        raise ValueError(f"unknown objective {objective}")
    return out


def batch_for(pairs, objective: Objective, max_len: int, noise_cfg: NoiseConfig = NoiseConfig(),
              seed: int = 0, step: int = 0) -> Batch:
    return make_batch(build_examples(pairs, objective, noise_cfg, seed, step), max_len)


def batch_loss(model, batch: Batch) -> torch.Tensor:
    """Mean token-level cross-entropy over non-padding label positions."""
    logits = model(batch.src, batch.tgt_in)
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), batch.labels.reshape(-1), ignore_index=IGNORE)


def loss(model, pairs, objective: Objective, noise_cfg: NoiseConfig = NoiseConfig(), seed: int = 0,
         step: int = 0, backward: bool = True, batch_index: int | None = None):
    """Loss (and, with ``backward``, parameter gradients) for one raw batch.

    Returns ``(loss_value, {param_name: grad})``.
    """
    batch = batch_for(pairs, objective, model.cfg.max_len, noise_cfg, seed, step)
    model.zero_grad(set_to_none=True)
    value = batch_loss(model, batch)
    if not torch.isfinite(value):
        raise NumericError(f"non-finite loss in batch {step if batch_index is None else batch_index}")
    grads = {}
    if backward:
        value.backward()
        grads = {n: p.grad.detach().clone() for n, p in model.named_parameters() if p.grad is not None}
    return value.item(), grads
