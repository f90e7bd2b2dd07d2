from __future__ import annotations

from typing import Sequence

import torch

from domaincraft.model.bpe import EOS, PAD, SRC_TAG, TGT_TAG, BOS, MASK, SubwordModel
from domaincraft.model.network import Seq2Seq
from domaincraft.model.objectives import _pad

_BLOCKED = (PAD, BOS, MASK, SRC_TAG, TGT_TAG)


@torch.no_grad()
def greedy_decode(model: Seq2Seq, sources: Sequence[Sequence[int]], max_len: int) -> list[list[int]]:
    """Greedy decoding from ``[BOS, TGT_TAG]``; returns ids up to (excluding) EOS."""
    model.eval()
    limit = min(max_len, model.cfg.max_len - 2)
    src = _pad([[SRC_TAG] + list(s)[: model.cfg.max_len - 2] + [EOS] for s in sources], PAD)
    memory, mask = model.encode(src)
    ys = torch.tensor([[BOS, TGT_TAG]] * len(sources), dtype=torch.long)
    done = torch.zeros(len(sources), dtype=torch.bool)
    for _ in range(limit):
        logits = model.decode(ys, memory, mask)[:, -1]
        logits[:, list(_BLOCKED)] = torch.finfo(logits.dtype).min
        nxt = logits.argmax(-1)
        nxt = torch.where(done, torch.full_like(nxt, PAD), nxt)
        ys = torch.cat([ys, nxt[:, None]], dim=1)
        done |= nxt == EOS
        if bool(done.all()):
            break
    out = []
    for row in ys[:, 2:].tolist():
        ids = []
        for t in row:
            if t in (EOS, PAD):
                break
            ids.append(t)
        out.append(ids)
    return out


def translate_batch(model: Seq2Seq, subword: SubwordModel, sources: Sequence[str], max_len: int = 64,
                    batch_size: int = 64) -> list[str]:
    # sort by length so padding stays small; restore input order afterwards
    encoded = [subword.encode(s) for s in sources]
    order = sorted(range(len(encoded)), key=lambda i: (len(encoded[i]), i))
    result: list[str] = [""] * len(encoded)
    for start in range(0, len(order), batch_size):
        idx = order[start : start + batch_size]
        for i, ids in zip(idx, greedy_decode(model, [encoded[i] for i in idx], max_len)):
            result[i] = subword.decode(ids).strip()
    return result


def translate(model: Seq2Seq, subword: SubwordModel, source: str, max_len: int = 64) -> str:
    return translate_batch(model, subword, [source], max_len)[0]
