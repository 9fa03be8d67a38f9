"""Type-II fusion: a rotated PBS on one photon from each of two states, both outputs detected.

Success is one photon at each of the two detectors. The two polarization
outcomes that differ herald the bit-flipped Bell projection, undone by a
Pauli X on every surviving photon that came with the second state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

from .detection import DetectorSpec, Pattern, detect, one_photon_each
from .fock import (
    PureState,
    WeightedEnsemble,
    density_operator,
    ghz,
    inner_product,
    mix,
    tensor_ensembles,
    trace_out,
)
from .optics import apply_transform, pauli, pbs45

# (Pauli on every surviving mode of the first state, Pauli on every surviving mode of the second)
FusionCorrection = tuple[str, str]


@dataclass(frozen=True)
class IdState:
    """An ideal state whose photons each go missing independently with probability epsilon."""

    ideal: PureState
    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon={self.epsilon} outside [0, 1]")

    @property
    def photon_modes(self) -> tuple[int, ...]:
        return tuple(sorted({m.spatial for b in self.ideal.amplitudes for m, _ in b}))


def id_expand(state: IdState) -> WeightedEnsemble:
    """Enumerate the loss patterns of an ID state.

    A lost photon's spatial mode is traced out and left behind as vacuum, so
    one loss pattern can split into several pure branches (tracing a photon
    out of a GHZ state leaves a classical mixture).
    """
    eps = state.epsilon
    modes = state.photon_modes
    ideal = state.ideal.normalized()
    branches: list[tuple[float, PureState]] = []
    for kept in itertools.product((True, False), repeat=len(modes)):
        k = sum(kept)
        w = (1.0 - eps) ** k * eps ** (len(modes) - k)
        if w == 0.0:
            continue
        lost = [i for i, keep in zip(modes, kept) if not keep]
        for w2, s in trace_out(ideal, lost, keep_modes=True):
            branches.append((w * w2, s))
    return WeightedEnsemble(tuple(branches))


def p_ii(epsilon: float, eta_d: float) -> float:
    """Success probability (1-eps)^2 eta_d^2 / 2 of one fusion on ID inputs."""
    for name, x in (("epsilon", epsilon), ("eta_d", eta_d)):
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"{name}={x} outside [0, 1]")
    return (1.0 - epsilon) ** 2 * eta_d**2 / 2.0


def _apply_side(state: PureState, modes, name: str) -> PureState:
    if name == "I":
        return state
    for i in sorted(modes):
        state = apply_transform(state, pauli(i, name))
    return state


def _outcome_key(pattern: Pattern, mode_a: int, mode_b: int) -> tuple[str, str]:
    pols = {i: ("H" if nh else "V") for i, nh, nv in pattern}
    return pols[mode_a], pols[mode_b]


@lru_cache(maxsize=None)
def correction_table() -> dict[tuple[str, str], FusionCorrection]:
    """Corrections per (polarization at first detector, polarization at second).

    Found by search on the reference fusion GHZ_3 + GHZ_3 -> GHZ_4 with
    lossless detectors: every success outcome is tried against all side-wise
    Pauli pairs, fewest non-identity first, until the result is |GHZ_4>.
    """
    a_modes, b_modes = (1, 2, 3), (11, 12, 13)
    a, b = WeightedEnsemble.pure(ghz(a_modes)), WeightedEnsemble.pure(ghz(b_modes))
    raw = _fuse_raw(a, 3, b, 11, 1.0)
    target = ghz((1, 2, 12, 13))
    order = "IZXY"
    candidates = sorted(
        itertools.product(order, repeat=2), key=lambda c: (sum(x != "I" for x in c), [order.index(x) for x in c])
    )
    table = {}
    for pattern, (_, cond) in raw.items():
        (_, state), = cond.branches
        for pa, pb in candidates:
            fixed = _apply_side(_apply_side(state, (1, 2), pa), (12, 13), pb)
            if abs(abs(inner_product(target, fixed)) - 1.0) < 1e-10:
                table[_outcome_key(pattern, 3, 11)] = (pa, pb)
                break
        else:
            raise RuntimeError(f"no side-wise Pauli correction for fusion outcome {pattern}")
    if len(table) != 4:
        raise RuntimeError("reference fusion did not produce all four success outcomes")
    return table


def _fuse_raw(a: WeightedEnsemble, mode_a: int, b: WeightedEnsemble, mode_b: int, eta_d: float, success_only: bool = True):
    shared = a.spatial & b.spatial
    if shared:
        raise ValueError(f"fusion inputs share spatial modes {sorted(shared)}")
    if mode_a not in a.spatial or mode_b not in b.spatial:
        raise ValueError("fused modes must belong to their states")
    t = pbs45(mode_a, mode_b)
    joint = tensor_ensembles(a, b).map_states(lambda s: apply_transform(s, t))
    where = one_photon_each if success_only else None
    outcomes = detect(joint, [DetectorSpec(mode_a, eta_d), DetectorSpec(mode_b, eta_d)], where=where)
    return {o.pattern: (o.probability, o.conditional) for o in outcomes}


@dataclass(frozen=True, eq=False)
class FusionResult:
    success_probability: float
    fused: WeightedEnsemble  # normalized, corrections applied; empty on certain failure
    failure_probability: float
    per_pattern: dict[Pattern, float] = field(default_factory=dict)


def type_ii_fuse(a: WeightedEnsemble, mode_a: int, b: WeightedEnsemble, mode_b: int, eta_d: float = 1.0) -> FusionResult:
    """Fuse photon ``mode_a`` of ``a`` with photon ``mode_b`` of ``b``."""
    if not 0.0 <= eta_d <= 1.0:
        raise ValueError(f"eta_d={eta_d} outside [0, 1]")
    raw = _fuse_raw(a, mode_a, b, mode_b, eta_d)
    table = correction_table()
    side_a = a.spatial - {mode_a}
    side_b = b.spatial - {mode_b}
    parts, per_pattern = [], {}
    for pattern, (p, cond) in sorted(raw.items()):
        pa, pb = table[_outcome_key(pattern, mode_a, mode_b)]
        fixed = cond.map_states(lambda s: _apply_side(_apply_side(s, side_a, pa), side_b, pb))
        parts.append(fixed.scaled(p))
        per_pattern[pattern] = p
    success = sum(per_pattern.values())
    fused = mix(parts).scaled(1.0 / success) if success > 0 else WeightedEnsemble.empty()
    failure = a.total_weight() * b.total_weight() - success
    return FusionResult(success, fused, failure, per_pattern)


def arrival_statistics(a: WeightedEnsemble, mode_a: int, b: WeightedEnsemble, mode_b: int) -> dict[tuple[int, int], float]:
    """Probability of each (photons into detector a, photons into detector b) before detector loss."""
    raw = _fuse_raw(a, mode_a, b, mode_b, 1.0, success_only=False)
    out: dict[tuple[int, int], float] = {}
    for pattern, (p, _) in raw.items():
        n = {i: nh + nv for i, nh, nv in pattern}
        key = (n[mode_a], n[mode_b])
        out[key] = out.get(key, 0.0) + p
    return out


def fuse_id_ghz(n: int, m: int, epsilon: float, eta_d: float = 1.0) -> tuple[FusionResult, WeightedEnsemble]:
    """Fuse ID-GHZ_n (modes 1..n) with ID-GHZ_m (modes 101..) on modes n and 101.

    Returns the fusion result and the ID-GHZ_{n+m-2} ensemble at the same
    epsilon on the surviving modes, which the fused state should equal.
    """
    if n < 2 or m < 2:
        raise ValueError("GHZ inputs need at least two photons")
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    a_modes = tuple(range(1, n + 1))
    b_modes = tuple(range(101, 101 + m))
    a = id_expand(IdState(ghz(a_modes), epsilon))
    b = id_expand(IdState(ghz(b_modes), epsilon))
    res = type_ii_fuse(a, a_modes[-1], b, b_modes[0], eta_d)
    survivors = a_modes[:-1] + b_modes[1:]
    return res, id_expand(IdState(ghz(survivors), epsilon))


def id_preservation_residuals(n: int, m: int, epsilon: float, eta_d: float = 1.0) -> dict[str, float]:
    """Deviation of the fused ID states from ID-GHZ_{n+m-2} and of the success rate from p_ii."""
    res, expected = fuse_id_ghz(n, m, epsilon, eta_d)
    return {
        "success_probability": abs(res.success_probability - p_ii(epsilon, eta_d)),
        "density": density_operator(res.fused).max_abs_diff(density_operator(expected)),
    }


def verify_id_preservation(n: int, m: int, epsilon: float, tol: float = 1e-10, eta_d: float = 1.0) -> bool:
    return all(r <= tol for r in id_preservation_residuals(n, m, epsilon, eta_d).values())
