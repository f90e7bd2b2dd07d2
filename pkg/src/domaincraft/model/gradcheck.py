from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from domaincraft.model.noising import NoiseConfig
from domaincraft.model.objectives import batch_for, batch_loss
from domaincraft.strategy import Objective


@dataclass
class GradCheckReport:
    max_rel_error: float
    coordinate_errors: list[float]
    directional_errors: list[float]


def _loss_at(model, batch) -> float:
    with torch.no_grad():
        return float(batch_loss(model, batch))


def gradient_check(model, pairs, objective: Objective, noise_cfg: NoiseConfig = NoiseConfig(),
                   seed: int = 0, step: int = 0, n_coords: int = 24, n_directions: int = 4,
                   eps: float = 1e-6, rng_seed: int = 0) -> GradCheckReport:
    """Compare autograd gradients against central finite differences.

    Checks individual coordinates (largest-gradient entries of randomly chosen
    tensors) and random directional derivatives. Intended for float64 models;
    dropout is disabled for the check.
    """
    model.eval()
    batch = batch_for(pairs, objective, model.cfg.max_len, noise_cfg, seed, step)
    model.zero_grad(set_to_none=True)
    batch_loss(model, batch).backward()
    params = [(n, p) for n, p in model.named_parameters() if p.grad is not None]
    grads = {n: p.grad.detach().clone() for n, p in params}
    rng = np.random.default_rng(rng_seed)

    coord_errs = []
    for k in range(n_coords):
        name, p = params[rng.integers(len(params))]
        g = grads[name].reshape(-1)
        # bias towards informative coordinates: pick among the top decile by |grad|
        top = torch.argsort(g.abs(), descending=True)[: max(1, g.numel() // 10)]
        idx = int(top[rng.integers(len(top))])
        flat = p.data.view(-1)
        orig = flat[idx].item()
        flat[idx] = orig + eps
        up = _loss_at(model, batch)
        flat[idx] = orig - eps
        down = _loss_at(model, batch)
        flat[idx] = orig
        numeric = (up - down) / (2 * eps)
        analytic = g[idx].item()
        coord_errs.append(abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-7))

    dir_errs = []
    originals = {n: p.detach().clone() for n, p in params}
    for _ in range(n_directions):
        dirs = {n: torch.from_numpy(rng.standard_normal(tuple(p.shape))).to(p.dtype) for n, p in params}
        norm = float(torch.sqrt(sum((d ** 2).sum() for d in dirs.values())))
        analytic = float(sum((grads[n] * d).sum() for n, d in dirs.items())) / norm
        values = []
        for sign in (1.0, -1.0):
            with torch.no_grad():
                for n, p in params:
                    p.copy_(originals[n] + sign * eps * dirs[n] / norm)
            values.append(_loss_at(model, batch))
        with torch.no_grad():
            for n, p in params:
                p.copy_(originals[n])
        numeric = (values[0] - values[1]) / (2 * eps)
        dir_errs.append(abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-7))

    return GradCheckReport(max(coord_errs + dir_errs), coord_errs, dir_errs)
