from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from domaincraft.model.bpe import MASK


@dataclass(frozen=True)
class NoiseConfig:
    """Span masking: ``mask_ratio`` of the tokens are covered by spans whose
    lengths are Poisson(``span_lambda``); each span collapses to one MASK."""

    mask_ratio: float = 0.35
    span_lambda: float = 3.5

    def __post_init__(self):
        if not 0.0 <= self.mask_ratio <= 1.0:
            raise ValueError("mask_ratio must be in [0, 1]")
        if self.span_lambda <= 0:
            raise ValueError("span_lambda must be positive")


def mask_positions(n: int, cfg: NoiseConfig, rng: np.random.Generator) -> np.ndarray:
    """Boolean mask covering exactly round(mask_ratio * n) of n positions."""
    masked = np.zeros(n, dtype=bool)
    budget = int(round(cfg.mask_ratio * n))
    while budget > 0:
        length = min(max(1, int(rng.poisson(cfg.span_lambda))), budget)
        free = np.flatnonzero(~masked)
        start = int(free[rng.integers(len(free))])
        end = start
        while end < n and end - start < length and not masked[end]:
            end += 1
        masked[start:end] = True
        budget -= end - start
    return masked


def noise(tokens, cfg: NoiseConfig, seed: int) -> list[int]:
    tokens = list(tokens)
    if not tokens:
        raise ValueError("cannot noise an empty sequence")
    if cfg.mask_ratio == 0.0:
        return tokens
    masked = mask_positions(len(tokens), cfg, np.random.default_rng(seed))
    return _collapse(tokens, masked)


def _collapse(tokens: list[int], masked: np.ndarray) -> list[int]:
    out: list[int] = []
    prev = False
    for tok, m in zip(tokens, masked):
        if m:
            if not prev:
                out.append(MASK)
        else:
            out.append(tok)
        prev = bool(m)
    return out
