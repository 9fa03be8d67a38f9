"""Lossy single-photon sources and inefficient number-resolving detectors."""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

from .fock import (
    BasisState,
    Mode,
    Pol,
    PureState,
    WeightedEnsemble,
    basis_state,
    occupation,
)
from .optics import loss_channel

# One entry per detector, sorted by spatial index: (spatial, H count, V count).
Pattern = tuple[tuple[int, int, int], ...]


def _check_probability(name: str, x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name}={x} outside [0, 1]")


@dataclass(frozen=True)
class SourceBankSpec:
    """One source per mode, each emitting an H photon with probability eta_s."""

    modes: tuple[int, ...]
    eta_s: float

    def __post_init__(self) -> None:
        _check_probability("eta_s", self.eta_s)
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("source modes must be distinct")


@dataclass(frozen=True)
class PresencePattern:
    present: tuple[bool, ...]

    def weight(self, eta_s: float) -> float:
        k = sum(self.present)
        return eta_s**k * (1.0 - eta_s) ** (len(self.present) - k)

    @property
    def photons(self) -> int:
        return sum(self.present)


def presence_branches(spec: SourceBankSpec) -> Iterator[tuple[PresencePattern, float, PureState]]:
    """All 2^n emission patterns with their weights and input states."""
    for present in itertools.product((True, False), repeat=len(spec.modes)):
        pattern = PresencePattern(present)
        occ = [(Mode(i, Pol.H), 1) for i, p in zip(spec.modes, present) if p]
        state = PureState.build({basis_state(occ): 1.0}, spec.modes)
        yield pattern, pattern.weight(spec.eta_s), state


def source_bank(spec: SourceBankSpec) -> WeightedEnsemble:
    # zero-weight branches are kept so the branch count is always 2^n
    return WeightedEnsemble(tuple((w, s) for _, w, s in presence_branches(spec)))


@dataclass(frozen=True)
class DetectorSpec:
    spatial: int
    eta_d: float = 1.0
    number_resolving: bool = True

    def __post_init__(self) -> None:
        _check_probability("eta_d", self.eta_d)
        if not self.number_resolving:
            raise NotImplementedError("only number-resolving detectors are modeled")


@dataclass(frozen=True, eq=False)
class DetectionOutcome:
    pattern: Pattern
    probability: float
    conditional: WeightedEnsemble  # normalized, on the undetected modes


def pattern_label(pattern: Pattern) -> str:
    """``((1,1,0),(4,0,1))`` -> ``"H1V4"``; empty detectors show as ``0_i``."""
    parts = []
    for i, nh, nv in pattern:
        s = "H" * nh + "V" * nv
        parts.append("".join(f"{c}{i}" for c in s) if s else f"0_{i}")
    return "".join(parts)


def _project(state: PureState, spatials: Sequence[int]) -> dict[Pattern, PureState]:
    """Split a pure state by the photon counts found in the detected modes."""
    watched = set(spatials)
    groups: dict[Pattern, dict[BasisState, complex]] = defaultdict(dict)
    for b, a in state.amplitudes.items():
        counts = {i: [0, 0] for i in spatials}
        rest = []
        for mode, n in b:
            if mode.spatial in watched:
                counts[mode.spatial][int(mode.pol)] += n
            else:
                rest.append((mode, n))
        key = tuple((i, *counts[i]) for i in sorted(spatials))
        groups[key][tuple(rest)] = a
    remaining = state.spatial - watched
    return {k: PureState.build(v, remaining) for k, v in groups.items()}


@lru_cache(maxsize=4096)
def _thinning(counts: tuple[int, int], eta_d: float) -> tuple[tuple[tuple[int, int], float], ...]:
    """Registered (H, V) counts for a Fock state entering one lossy detector.

    Computed by literally inserting the variable beamsplitter in front of the
    detector and tracing out its loss mode.
    """
    nh, nv = counts
    probe = PureState.build({basis_state([(Mode(0, Pol.H), nh), (Mode(0, Pol.V), nv)]): 1.0}, [0])
    acc: dict[tuple[int, int], float] = defaultdict(float)
    for w, s in loss_channel(WeightedEnsemble.pure(probe), [0], eta_d):
        (b, a), = s.amplitudes.items()
        acc[(occupation(b, Mode(0, Pol.H)), occupation(b, Mode(0, Pol.V)))] += w * abs(a) ** 2
    return tuple(sorted(acc.items()))


def detect(
    ensemble: WeightedEnsemble,
    detectors: Sequence[DetectorSpec],
    where: Callable[[Pattern], bool] | None = None,
) -> list[DetectionOutcome]:
    """Exact detection statistics.

    Each detector is a variable beamsplitter of transmissivity eta_d followed by
    a perfect polarization-resolving photon counter. The state is first split
    by the photon numbers arriving at the detectors; within each part the
    detector modes hold a Fock state, so the loss acts on that Fock state
    alone and the rest of the state is untouched. Outcomes come back in
    canonical pattern order; only patterns with nonzero probability appear,
    and with ``where`` given only the patterns it accepts.
    """
    spatials = [d.spatial for d in detectors]
    if len(set(spatials)) != len(spatials):
        raise ValueError("two detectors on one spatial mode")
    eta = {d.spatial: d.eta_d for d in detectors}
    acc: dict[Pattern, list[tuple[float, PureState]]] = defaultdict(list)
    for w, state in ensemble:
        if w == 0.0:
            continue
        missing = set(spatials) - state.spatial
        if missing:
            raise ValueError(f"no spatial modes {sorted(missing)} to detect")
        for arriving, part in _project(state, spatials).items():
            p = part.norm2()
            if p == 0.0:
                continue
            cond = part.normalized()
            per_detector = [_thinning((nh, nv), eta[i]) for i, nh, nv in arriving]
            for combo in itertools.product(*per_detector):
                q = 1.0
                for _, x in combo:
                    q *= x
                if q > 0.0:
                    seen = tuple((i, *c) for (i, _, _), (c, _) in zip(arriving, combo))
                    if where is None or where(seen):
                        acc[seen].append((w * p * q, cond))
    outcomes = []
    for pattern in sorted(acc):
        branches = acc[pattern]
        total = sum(x for x, _ in branches)
        cond = WeightedEnsemble(tuple((x / total, s) for x, s in branches)).merged()
        outcomes.append(DetectionOutcome(pattern, total, cond))
    return outcomes


@dataclass(frozen=True, eq=False)
class Herald:
    """Result of post-selection; ``ensemble`` is None when nothing matched."""

    probability: float
    ensemble: WeightedEnsemble | None

    @property
    def empty(self) -> bool:
        return self.ensemble is None


def post_select(outcomes: Iterable[DetectionOutcome], predicate: Callable[[Pattern], bool]) -> Herald:
    matched = [o for o in outcomes if predicate(o.pattern)]
    total = sum(o.probability for o in matched)
    if total <= 0.0:
        return Herald(0.0, None)
    branches = []
    for o in matched:
        branches.extend((o.probability / total * w, s) for w, s in o.conditional)
    return Herald(total, WeightedEnsemble(tuple(branches)))


def one_photon_each(pattern: Pattern) -> bool:
    """True when every detector saw exactly one photon."""
    return all(nh + nv == 1 for _, nh, nv in pattern)
