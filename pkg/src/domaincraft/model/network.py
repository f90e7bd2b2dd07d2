"""A small pre-norm transformer encoder-decoder with a shared vocabulary."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from domaincraft.model.bpe import PAD


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    layers: int = 2
    heads: int = 4
    d_model: int = 128
    d_ff: int = 256
    max_len: int = 128
    dropout: float = 0.3
    attention_dropout: float = 0.1

    def __post_init__(self):
        if self.d_model % self.heads:
            raise ValueError(f"d_model {self.d_model} not divisible by heads {self.heads}")
        for name in ("dropout", "attention_dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        if min(self.vocab_size, self.layers, self.heads, self.d_ff, self.max_len) < 1:
            raise ValueError("model dimensions must be positive")

    def to_json(self) -> dict:
        return asdict(self)


class Dropout(nn.Dropout):
    """Dropout that skips mask generation entirely when p == 0 (CPU RNG is costly)."""

    def forward(self, x):
        if not self.training or self.p == 0.0:
            return x
        return super().forward(x)


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model: int, heads: int, attention_dropout: float):
        super().__init__()
        self.heads = heads
        self.d_head = d_model // heads
        self.q = nn.Linear(d_model, d_model)
        self.k = nn.Linear(d_model, d_model)
        self.v = nn.Linear(d_model, d_model)
        self.out = nn.Linear(d_model, d_model)
        self.attn_drop = Dropout(attention_dropout)

    def _split(self, x):
        b, n, _ = x.shape
        return x.view(b, n, self.heads, self.d_head).transpose(1, 2)

    def forward(self, query, key, mask=None):
        # mask: bool, True where attention is blocked; broadcastable to (B, H, Lq, Lk)
        q, k, v = self._split(self.q(query)), self._split(self.k(key)), self._split(self.v(key))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        if mask is not None:
            scores = scores.masked_fill(mask, torch.finfo(scores.dtype).min)
        weights = self.attn_drop(torch.softmax(scores, dim=-1))
        ctx = (weights @ v).transpose(1, 2).reshape(query.shape[0], query.shape[1], -1)
        return self.out(ctx)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, d_ff: int, dropout: float):
        super().__init__()
        self.fc1 = nn.Linear(d_model, d_ff)
        self.fc2 = nn.Linear(d_ff, d_model)
        self.drop = Dropout(dropout)

    def forward(self, x):
        return self.fc2(self.drop(F.gelu(self.fc1(x))))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.attn = MultiHeadAttention(cfg.d_model, cfg.heads, cfg.attention_dropout)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.ff = FeedForward(cfg.d_model, cfg.d_ff, cfg.dropout)
        self.drop = Dropout(cfg.dropout)

    def forward(self, x, pad_mask):
        h = self.ln1(x)
        x = x + self.drop(self.attn(h, h, pad_mask))
        return x + self.drop(self.ff(self.ln2(x)))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.self_attn = MultiHeadAttention(cfg.d_model, cfg.heads, cfg.attention_dropout)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.cross_attn = MultiHeadAttention(cfg.d_model, cfg.heads, cfg.attention_dropout)
        self.ln3 = nn.LayerNorm(cfg.d_model)
        self.ff = FeedForward(cfg.d_model, cfg.d_ff, cfg.dropout)
        self.drop = Dropout(cfg.dropout)

    def forward(self, y, memory, self_mask, memory_mask):
        h = self.ln1(y)
        y = y + self.drop(self.self_attn(h, h, self_mask))
        y = y + self.drop(self.cross_attn(self.ln2(y), memory, memory_mask))
        return y + self.drop(self.ff(self.ln3(y)))


class Seq2Seq(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.embed = nn.Embedding(cfg.vocab_size, cfg.d_model, padding_idx=PAD)
        self.pos = nn.Embedding(cfg.max_len, cfg.d_model)
        self.emb_drop = Dropout(cfg.dropout)
        self.encoder = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.layers))
        self.decoder = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.layers))
        self.enc_norm = nn.LayerNorm(cfg.d_model)
        self.dec_norm = nn.LayerNorm(cfg.d_model)
        self.output = nn.Linear(cfg.d_model, cfg.vocab_size)
        self.reset_parameters()

    def reset_parameters(self):
        for name, p in self.named_parameters():
            if name.endswith("bias"):
                nn.init.zeros_(p)
            elif "ln" in name or "norm" in name:
                nn.init.ones_(p)
            elif name.startswith("embed") or name.startswith("pos"):
                nn.init.normal_(p, std=self.cfg.d_model ** -0.5)
            elif name.startswith("output"):
                nn.init.normal_(p, std=0.02)
            else:
                nn.init.xavier_uniform_(p)
        with torch.no_grad():
            self.embed.weight[PAD].zero_()

    def set_dropout(self, dropout: float | None = None, attention_dropout: float | None = None):
        attn = {id(m.attn_drop) for m in self.modules() if isinstance(m, MultiHeadAttention)}
        for m in self.modules():
            if not isinstance(m, nn.Dropout):
                continue
            if id(m) in attn:
                if attention_dropout is not None:
                    m.p = attention_dropout
            elif dropout is not None:
                m.p = dropout

    def _embed(self, ids):
        positions = torch.arange(ids.shape[1], device=ids.device)
        x = self.embed(ids) * math.sqrt(self.cfg.d_model) + self.pos(positions)
        return self.emb_drop(x)

    def encode(self, src):
        pad = (src == PAD)[:, None, None, :]
        x = self._embed(src)
        for layer in self.encoder:
            x = layer(x, pad)
        return self.enc_norm(x), pad

    def decode(self, tgt_in, memory, memory_mask):
        n = tgt_in.shape[1]
        causal = torch.ones(n, n, dtype=torch.bool, device=tgt_in.device).triu(1)
        self_mask = causal[None, None] | (tgt_in == PAD)[:, None, None, :]
        y = self._embed(tgt_in)
        for layer in self.decoder:
            y = layer(y, memory, self_mask, memory_mask)
        return self.output(self.dec_norm(y))

    def forward(self, src, tgt_in):
        memory, mask = self.encode(src)
        return self.decode(tgt_in, memory, mask)
