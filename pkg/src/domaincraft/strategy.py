"""Compile fine-tuning and continued pre-training strategies into stage schedules.

``domains`` are the domains with training data, ``target`` is the
final-stage domain, ``intermediate`` is the optional first-stage domain, and
out-domain schedules are tested on a domain no stage has seen.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from domaincraft import DomaincraftError
from domaincraft.corpus import DomainId
from domaincraft.mixing import Component, DatasetSpec


class ScheduleError(DomaincraftError):
    pass


class Objective(str, Enum):
    NMT = "nmt"
    BITEXT_DENOISE = "bitext-denoise"
    MONO_DENOISE = "mono-denoise"
    BITEXT_PLUS_MONO = "bitext+mono-denoise"


class Strategy(str, Enum):
    # declaration order doubles as the compute ranking used for tie-breaks
    VANILLA_FT = "vanilla-ft"
    MULTI_DOMAIN_FT = "multi-domain-ft"
    SINGLE_DOMAIN_ITTL = "single-domain-ittl"
    MULTI_DOMAIN_ITTL = "multi-domain-ittl"
    PRETRAIN_BITEXT = "pretrain-bitext"
    PRETRAIN_BITEXT_MONO = "pretrain-bitext-mono"

    @property
    def short(self) -> str:
        return _SHORT[self]

    @property
    def compute_rank(self) -> int:
        return list(Strategy).index(self)


_SHORT = {
    Strategy.VANILLA_FT: "vft",
    Strategy.MULTI_DOMAIN_FT: "mdft",
    Strategy.SINGLE_DOMAIN_ITTL: "sdittl",
    Strategy.MULTI_DOMAIN_ITTL: "mdittl",
    Strategy.PRETRAIN_BITEXT: "ptb",
    Strategy.PRETRAIN_BITEXT_MONO: "ptbm",
}


class Mode(str, Enum):
    IN_DOMAIN = "in-domain"
    OUT_DOMAIN = "out-domain"


@dataclass(frozen=True)
class Stage:
    data: DatasetSpec
    objective: Objective = Objective.NMT
    role: str = "final"
    train: Mapping[str, object] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "role": self.role,
            "objective": self.objective.value,
            "data": self.data.to_json(),
            "train": dict(self.train),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "Stage":
        return cls(DatasetSpec.from_json(d["data"]), Objective(d["objective"]), d["role"], dict(d.get("train", {})))


@dataclass(frozen=True)
class Schedule:
    id: str
    strategy: Strategy
    stages: tuple[Stage, ...]
    test: tuple[DomainId, str]
    mode: Mode
    lang: str | None = None
    im_size: int = 0
    fi_size: int = 0

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "test", (DomainId(self.test[0]), self.test[1]))
        self.validate()

    def validate(self) -> None:
        if not self.stages:
            raise ScheduleError(f"{self.id}: a schedule needs at least one stage")
        test_domain = self.test[0]
        if self.mode is Mode.IN_DOMAIN:
            if test_domain not in self.stages[-1].data.domains:
                raise ScheduleError(f"{self.id}: in-domain test domain {test_domain} missing from final stage")
        else:
            for k, st in enumerate(self.stages):
                if test_domain in st.data.domains:
                    raise ScheduleError(f"{self.id}: out-domain test domain {test_domain} used in stage {k}")

    @property
    def final_stage(self) -> Stage:
        return self.stages[-1]

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "strategy": self.strategy.value,
            "mode": self.mode.value,
            "lang": self.lang,
            "im_size": self.im_size,
            "fi_size": self.fi_size,
            "test": {"domain": self.test[0], "split": self.test[1]},
            "stages": [s.to_json() for s in self.stages],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "Schedule":
        return cls(
            id=d["id"],
            strategy=Strategy(d["strategy"]),
            stages=tuple(Stage.from_json(s) for s in d["stages"]),
            test=(DomainId(d["test"]["domain"]), d["test"]["split"]),
            mode=Mode(d["mode"]),
            lang=d.get("lang"),
            im_size=int(d.get("im_size", 0)),
            fi_size=int(d.get("fi_size", 0)),
        )


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9+._-]+", "-", text.lower()).strip("-")


def schedule_id(strategy: Strategy, mode: Mode, domains: Iterable[str], target: str, test: str,
                im_size: int, fi_size: int, lang: str | None = None, extra: str = "") -> str:
    parts = [
        lang or "",
        strategy.short,
        "in" if mode is Mode.IN_DOMAIN else "out",
        f"im{im_size}-fi{fi_size}",
        "+".join(domains),
        f"to-{target}",
        f"test-{test}",
    ]
    if extra:
        parts.append(extra)
    return _slug("_".join(p for p in parts if p))


def build_schedule(
    strategy: Strategy | str,
    domains: Mapping[str, int],
    target: str,
    mode: Mode | str,
    seed: int = 222,
    *,
    test: str | None = None,
    intermediate: str | None = None,
    im_size: int | None = None,
    lang: str | None = None,
    test_split: str = "test",
    schedule_id_: str | None = None,
) -> Schedule:
    """Compile one strategy into a Schedule.

    ``domains`` maps each training domain in D to the number of pairs drawn
    from it; the target's entry is its final-stage size. ``im_size`` (if
    given) overrides the size of auxiliary components in intermediate or
    pre-training stages. Out-domain schedules need ``test``, a domain outside D.
    """
    strategy = Strategy(strategy)
    mode = Mode(mode)
    sizes = {DomainId(k): int(v) for k, v in domains.items()}
    target = DomainId(target)
    if target not in sizes:
        raise ScheduleError(f"target domain {target} not among available domains {sorted(sizes)}")
    if mode is Mode.IN_DOMAIN:
        if test is not None and DomainId(test) != target:
            raise ScheduleError("in-domain schedules are tested on the target domain")
        test_domain = target
    else:
        if test is None:
            raise ScheduleError("out-domain schedules need a test domain")
        test_domain = DomainId(test)
        if test_domain in sizes:
            raise ScheduleError(f"out-domain test domain {test_domain} must not have training data")

    fi = sizes[target]
    aux = [d for d in sizes if d != target]

    def aux_size(d):
        return im_size if im_size is not None else sizes[d]

    def spec(items):
        # canonical component order: equal mixtures compile to equal stages
        return DatasetSpec(tuple(Component(d, n) for d, n in sorted(items)), seed)

    final = Stage(spec([(target, fi)]), Objective.NMT, "final")
    used = [target]
    ims = 0

    if strategy is Strategy.VANILLA_FT:
        stages = [final]
    elif strategy is Strategy.MULTI_DOMAIN_FT:
        items = [(d, aux_size(d)) for d in aux] + [(target, fi)]
        stages = [Stage(spec(items), Objective.NMT, "final")]
        used = aux + [target]
        ims = aux_size(aux[0]) if aux else 0
    elif strategy is Strategy.SINGLE_DOMAIN_ITTL:
        if intermediate is None:
            raise ScheduleError("single-domain ITTL needs an intermediate domain")
        mid = DomainId(intermediate)
        if mid == target:
            raise ScheduleError("single-domain ITTL intermediate and final domains must differ")
        if mid not in sizes:
            raise ScheduleError(f"intermediate domain {mid} not among available domains")
        stages = [Stage(spec([(mid, aux_size(mid))]), Objective.NMT, "intermediate"), final]
        used = [mid, target]
        ims = aux_size(mid)
    elif strategy is Strategy.MULTI_DOMAIN_ITTL:
        if not aux:
            raise ScheduleError("multi-domain ITTL needs at least two domains")
        items = [(d, aux_size(d)) for d in aux] + [(target, fi)]
        stages = [Stage(spec(items), Objective.NMT, "intermediate"), final]
        used = aux + [target]
        ims = aux_size(aux[0])
    else:
        if not aux:
            raise ScheduleError("continued pre-training needs auxiliary-domain data")
        objective = (Objective.BITEXT_DENOISE if strategy is Strategy.PRETRAIN_BITEXT
                     else Objective.BITEXT_PLUS_MONO)
        stages = [Stage(spec([(d, aux_size(d)) for d in aux]), objective, "pretrain"), final]
        used = aux + [target]
        ims = aux_size(aux[0])

    sid = schedule_id_ or schedule_id(strategy, mode, used, target, test_domain, ims, fi, lang)
    return Schedule(sid, strategy, tuple(stages), (test_domain, test_split), mode, lang, ims, fi)


@dataclass(frozen=True)
class DomainSetup:
    """Which domains a grid cell draws from.

    ``aux`` are auxiliary domains, ``target`` the final-stage domain and
    ``test`` the unseen domain for out-domain runs.
    """

    aux: tuple[str, ...]
    target: str
    test: str | None = None


def enumerate_grid(
    sizes: Mapping[str, Sequence[int]],
    strategies: Sequence[Strategy | str],
    setups: Sequence[DomainSetup],
    modes: Sequence[Mode | str],
    seed: int = 222,
    lang: str | None = None,
) -> list[Schedule]:
    """Cross product of intermediate sizes x final sizes x strategies x setups x modes.

    Vanilla FT ignores the intermediate size, so it contributes one schedule
    per final size. Single-domain ITTL takes the first auxiliary domain as
    the intermediate domain. Out-domain setups without a ``test`` are skipped.
    """
    out: list[Schedule] = []
    seen: set[str] = set()
    for im, fi, strat, setup, mode in itertools.product(
        sizes["intermediate"], sizes["final"], strategies, setups, modes
    ):
        strat, mode = Strategy(strat), Mode(mode)
        if mode is Mode.OUT_DOMAIN and setup.test is None:
            continue
        aux = list(setup.aux)
        if strat is Strategy.VANILLA_FT:
            domains = {setup.target: fi}
        elif strat is Strategy.SINGLE_DOMAIN_ITTL:
            domains = {aux[0]: im, setup.target: fi}
        else:
            domains = {**{d: im for d in aux}, setup.target: fi}
        sched = build_schedule(
            strat, domains, setup.target, mode, seed,
            test=setup.test if mode is Mode.OUT_DOMAIN else None,
            intermediate=aux[0] if strat is Strategy.SINGLE_DOMAIN_ITTL else None,
            lang=lang,
        )
        if sched.id in seen:
            continue
        seen.add(sched.id)
        out.append(sched)
    return out
