"""Meta-analysis of result rows and rule-based strategy recommendations."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from domaincraft import DomaincraftError
from domaincraft.strategy import Mode, Strategy


class AnalysisError(DomaincraftError):
    pass


@dataclass(frozen=True)
class RunResult:
    schedule_id: str
    strategy: Strategy
    mode: Mode
    im_size: int
    fi_size: int
    test_domain: str
    score: float
    jsd_final_to_test: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0.0 <= self.score <= 100.0:
            raise ValueError(f"score {self.score} outside [0, 100]")
        if self.jsd_final_to_test is not None and not 0.0 <= self.jsd_final_to_test <= 1.0:
            raise ValueError(f"jsd {self.jsd_final_to_test} outside [0, 1]")


def r_squared(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Squared Pearson correlation; 0 when ``ys`` has no variance."""
    if len(xs) != len(ys):
        raise AnalysisError("xs and ys differ in length")
    if len(xs) < 2:
        raise AnalysisError("need at least two points")
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0:
        raise AnalysisError("all x values are equal")
    if syy == 0:
        return 0.0
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return min(1.0, sxy * sxy / (sxx * syy))


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares (slope, intercept)."""
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        raise AnalysisError("all x values are equal")
    slope = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    return slope, my - slope * mx


def variance(scores: Sequence[float]) -> float:
    """Population variance (divides by n)."""
    if len(scores) < 2:
        raise AnalysisError("need at least two scores")
    n = len(scores)
    mean = math.fsum(scores) / n
    return math.fsum((s - mean) ** 2 for s in scores) / n


def _rank(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation (average ranks for ties)."""
    rx, ry = _rank(xs), _rank(ys)
    n = len(rx)
    mx, my = sum(rx) / n, sum(ry) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        return 0.0
    return sxy / math.sqrt(sxx * syy)


COMPUTE_MARGIN = 1.0


@dataclass(frozen=True)
class Cell:
    im_size: int
    fi_size: int
    mode: Mode
    scores: dict[Strategy, float]
    ranking: tuple[Strategy, ...]
    note: str = ""

    @property
    def best(self) -> Strategy:
        return self.ranking[0]

    @property
    def second(self) -> Strategy | None:
        return self.ranking[1] if len(self.ranking) > 1 else None

    def marker(self, strategy: Strategy) -> str:
        if strategy == self.best:
            return "best"
        if strategy == self.second:
            return "second"
        return ""


def tabulate(results: Sequence[RunResult]) -> list[Cell]:
    """Group rows by (im_size, fi_size, mode) and rank strategies by mean score.

    Ties go to the cheaper strategy (vanilla FT < multi-domain FT <
    single-domain ITTL < multi-domain ITTL). When the best strategy beats a
    cheaper runner-up by less than one point, the cell notes the cheaper one
    as the compute-limited pick. Vanilla FT rows join every cell that shares
    their final size and mode.
    """
    groups: dict[tuple[int, int, Mode], dict[Strategy, list[float]]] = {}
    baseline = [r for r in results if r.strategy is Strategy.VANILLA_FT]
    for r in results:
        if r.strategy is not Strategy.VANILLA_FT:
            groups.setdefault((r.im_size, r.fi_size, r.mode), {}).setdefault(r.strategy, []).append(r.score)
    # vanilla FT has no intermediate stage: it is the baseline row of every
    # cell with its final size and mode, or its own cell if there is none
    keys = list(groups)
    for r in baseline:
        cells = [k for k in keys if k[1:] == (r.fi_size, r.mode)] or [(r.im_size, r.fi_size, r.mode)]
        for k in cells:
            groups.setdefault(k, {}).setdefault(Strategy.VANILLA_FT, []).append(r.score)
    cells = []
    for (im, fi, mode) in sorted(groups, key=lambda k: (k[0], k[1], k[2].value)):
        scores = {s: math.fsum(v) / len(v) for s, v in groups[im, fi, mode].items()}
        ranking = tuple(sorted(scores, key=lambda s: (-scores[s], s.compute_rank)))
        note = ""
        if len(ranking) > 1:
            best, second = ranking[0], ranking[1]
            if second.compute_rank < best.compute_rank and scores[best] - scores[second] < COMPUTE_MARGIN:
                note = f"compute-limited pick: {second.short.upper()}"
        cells.append(Cell(im, fi, mode, scores, ranking, note))
    return cells


# rule table: id -> citation text printed with every recommendation
RULES = {
    "R1": "With less than 50k parallel sentences, continued pre-training with bitext denoising gave no gains.",
    "R2": "With 25k target-domain sentences, no technique significantly outperformed vanilla fine-tuning.",
    "R3": "With little target data and a large auxiliary set, multi-domain ITTL performed best.",
    "R4": "With small target and auxiliary sets, multi-domain ITTL edges out multi-domain FT by under "
          "1 point; under limited compute, multi-domain FT is the better option.",
    "R5": "Out-domain performance tracks divergence: use the auxiliary domain closest to the test "
          "domain for the final stage; multi-domain FT is less sensitive to divergence than "
          "multi-domain ITTL.",
}

PRETRAIN_THRESHOLD = 50_000
LARGE_SIZE = 25_000


@dataclass(frozen=True)
class Recommendation:
    strategy: Strategy
    rule: str
    rationale: str
    confidence: str
    final_domain: str | None = None
    caveats: tuple[str, ...] = field(default_factory=tuple)


def recommend(
    target_size: int,
    aux_sizes: Sequence[int] | Mapping[str, int],
    mode: Mode | str,
    jsd_to_test: Mapping[str, float] | None = None,
    compute_budget: str = "limited",
    prefer_robust: bool | None = None,
    pretrain_threshold: int = PRETRAIN_THRESHOLD,
    large_size: int = LARGE_SIZE,
) -> Recommendation:
    """Apply rules R1-R5 in order and return the deciding rule's strategy.

    R1 only excludes continued pre-training; it is recorded as a caveat and
    the decision comes from R2-R5. For out-domain use ``target_size`` is 0.
    """
    mode = Mode(mode)
    if compute_budget not in ("limited", "ample"):
        raise ValueError("compute_budget must be 'limited' or 'ample'")
    aux = list(aux_sizes.values()) if isinstance(aux_sizes, Mapping) else list(aux_sizes)
    if any(s <= 0 for s in aux) or target_size < 0 or (mode is Mode.IN_DOMAIN and target_size == 0):
        raise ValueError("sizes must be positive")
    total = target_size + sum(aux)
    caveats = []
    if total < pretrain_threshold:
        caveats.append(f"R1: {total} sentences < {pretrain_threshold}; continued pre-training excluded")

    if mode is Mode.IN_DOMAIN:
        if target_size >= large_size:
            return Recommendation(Strategy.VANILLA_FT, "R2", RULES["R2"], "high", caveats=tuple(caveats))
        if sum(aux) >= large_size:
            return Recommendation(Strategy.MULTI_DOMAIN_ITTL, "R3", RULES["R3"], "high", caveats=tuple(caveats))
        strat = Strategy.MULTI_DOMAIN_ITTL if compute_budget == "ample" else Strategy.MULTI_DOMAIN_FT
        return Recommendation(strat, "R4", RULES["R4"], "medium", caveats=tuple(caveats))

    robust = prefer_robust if prefer_robust is not None else compute_budget == "limited"
    strat = Strategy.MULTI_DOMAIN_FT if robust else Strategy.MULTI_DOMAIN_ITTL
    final = None
    confidence = "medium"
    if jsd_to_test:
        final = min(sorted(jsd_to_test), key=lambda d: jsd_to_test[d])
    else:
        msg = "R5 degraded: no divergence values given, final-stage domain not chosen"
        warnings.warn(msg, stacklevel=2)
        caveats.append(msg)
        confidence = "low"
    if len(aux) < 2:
        strat = Strategy.VANILLA_FT
        caveats.append("only one auxiliary domain: multi-domain strategies unavailable")
    return Recommendation(strat, "R5", RULES["R5"], confidence, final, tuple(caveats))
