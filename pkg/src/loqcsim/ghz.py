"""Six single photons in, a heralded three-photon ID-GHZ state out.

The circuit: rotated PBSs on the pairs (1,2), (3,4), (5,6); PBSs mixing
modes (1,4) and then (1,6); 45-degree rotators on 1, 4, 6; number-resolving
detectors on 1, 4, 6. Success means exactly one photon at each detector and
leaves a state on modes 2, 3, 5. Spatial modes keep their label through a PBS.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from .detection import (
    DetectorSpec,
    Pattern,
    PresencePattern,
    SourceBankSpec,
    detect,
    one_photon_each,
    presence_branches,
    source_bank,
)
from .fock import (
    DensityOperator,
    Mode,
    Pol,
    PureState,
    WeightedEnsemble,
    basis_state,
    density_operator,
    ghz,
    inner_product,
    mix,
    vacuum,
)
from .optics import (
    LinearModeTransform,
    apply_transform,
    loss_channel,
    pauli,
    pbs,
    pbs45,
    rotate45,
)

INPUT_MODES = (1, 2, 3, 4, 5, 6)
PAIRS = ((1, 2), (3, 4), (5, 6))
DETECTED_MODES = (1, 4, 6)
OUTPUT_MODES = (2, 3, 5)

Correction = tuple[str, str, str]  # Pauli names for modes 2, 3, 5


def build_ghz_circuit(
    eta_d: float = 1.0, rotator: str = "hadamard"
) -> list[LinearModeTransform | DetectorSpec]:
    """The fixed element list: 8 mode transforms followed by 3 detectors."""
    elements: list[LinearModeTransform | DetectorSpec] = [
        pbs45(1, 2),
        pbs45(3, 4),
        pbs45(5, 6),
        pbs(1, 4),
        pbs(1, 6),
        rotate45(1, rotator),
        rotate45(4, rotator),
        rotate45(6, rotator),
    ]
    elements.extend(DetectorSpec(i, eta_d) for i in DETECTED_MODES)
    return elements


def _split(elements):
    transforms = [e for e in elements if isinstance(e, LinearModeTransform)]
    detectors = [e for e in elements if isinstance(e, DetectorSpec)]
    return transforms, detectors


@lru_cache(maxsize=256)
def _evolve(key: tuple, rotator: str) -> PureState:
    # the optical part does not depend on any efficiency, so it is shared across runs
    amplitudes, spatial = key
    state = PureState.build(dict(amplitudes), spatial)
    transforms, _ = _split(build_ghz_circuit(1.0, rotator))
    for t in transforms:
        state = apply_transform(state, t)
    return state


def _herald_raw(inputs: WeightedEnsemble, eta_d: float, rotator: str) -> dict[Pattern, tuple[float, WeightedEnsemble]]:
    """Unnormalized success branches per detection pattern, before corrections."""
    _, detectors = _split(build_ghz_circuit(eta_d, rotator))
    evolved = []
    for w, s in inputs:
        if w == 0.0:
            continue
        key = (tuple(sorted(s.amplitudes.items())), s.spatial)
        evolved.append((w, _evolve(key, rotator)))
    out = {}
    for o in detect(WeightedEnsemble(tuple(evolved)), detectors, where=one_photon_each):
        out[o.pattern] = (o.probability, o.conditional)
    return out


def success_patterns() -> list[Pattern]:
    """The 8 accepted patterns: one photon, of either polarization, per detector."""
    out = []
    for pols in itertools.product((Pol.H, Pol.V), repeat=3):
        out.append(tuple((i, int(p == Pol.H), int(p == Pol.V)) for i, p in zip(DETECTED_MODES, pols)))
    return sorted(out)


def apply_correction(state: PureState, correction: Correction) -> PureState:
    for i, name in zip(OUTPUT_MODES, correction):
        if name != "I":
            state = apply_transform(state, pauli(i, name))
    return state


def _ideal_input() -> WeightedEnsemble:
    occ = [(Mode(i, Pol.H), 1) for i in INPUT_MODES]
    return WeightedEnsemble.pure(PureState.build({basis_state(occ): 1.0}, INPUT_MODES))


def correction_table(rotator: str = "hadamard") -> dict[Pattern, Correction]:
    """Local Pauli corrections found by search against the lossless circuit.

    For each accepted pattern the lossless conditional state is compared with
    |GHZ>_235 under all 4^3 Pauli products, fewest non-identity factors first;
    an overlap of +1 is preferred over -1 (a global sign).
    """
    return dict(_correction_table(rotator))


@lru_cache(maxsize=None)
def _correction_table(rotator: str) -> dict[Pattern, Correction]:
    raw = _herald_raw(_ideal_input(), 1.0, rotator)
    target = ghz(OUTPUT_MODES)
    order = "IZXY"
    candidates = sorted(
        itertools.product(order, repeat=3),
        key=lambda c: (sum(x != "I" for x in c), [order.index(x) for x in c]),
    )
    table = {}
    for pattern in success_patterns():
        if pattern not in raw:
            raise RuntimeError(f"pattern {pattern} never heralds in the lossless circuit")
        (_, state), = raw[pattern][1].branches
        found = None
        for cand in candidates:
            ov = inner_product(target, apply_correction(state, cand))
            if abs(ov.real - 1) < 1e-10 and abs(ov.imag) < 1e-10:
                found = cand
                break
            if found is None and abs(abs(ov) - 1) < 1e-10:
                found = cand
        if found is None:
            raise RuntimeError(f"no Pauli correction maps pattern {pattern} onto GHZ")
        table[pattern] = found
    return table


def local_correction_for_pattern(pattern: Pattern, rotator: str = "hadamard") -> dict[int, LinearModeTransform]:
    """Single-mode unitaries on modes 2, 3, 5 that undo the pattern's byproduct."""
    table = correction_table(rotator)
    if pattern not in table:
        raise ValueError(f"{pattern} is not an accepted detection pattern")
    return {i: pauli(i, name) for i, name in zip(OUTPUT_MODES, table[pattern])}


@dataclass(frozen=True, eq=False)
class PatternResult:
    probability: float
    conditional: WeightedEnsemble  # after correction, normalized
    correction: Correction
    raw: WeightedEnsemble  # before correction


@dataclass(frozen=True, eq=False)
class GhzFactoryResult:
    success_probability: float
    output: WeightedEnsemble  # normalized; empty when nothing heralds
    per_pattern: dict[Pattern, PatternResult] = field(default_factory=dict)

    def unnormalized(self) -> WeightedEnsemble:
        return self.output.scaled(self.success_probability)

    def density(self) -> DensityOperator:
        return density_operator(self.output)

    def mean_photon_number(self) -> float:
        return float(
            sum(w * sum(abs(a) ** 2 * sum(n for _, n in b) for b, a in s.amplitudes.items()) for w, s in self.output)
        )


def run_ghz_circuit(inputs: WeightedEnsemble, eta_d: float = 1.0, rotator: str = "hadamard") -> GhzFactoryResult:
    """Run arbitrary input ensembles on modes 1..6 through the factory."""
    raw = _herald_raw(inputs, eta_d, rotator)
    table = correction_table(rotator)
    per_pattern = {}
    parts = []
    for pattern, (p, cond) in sorted(raw.items()):
        corr = table[pattern]
        fixed = cond.map_states(lambda s: apply_correction(s, corr))
        per_pattern[pattern] = PatternResult(p, fixed, corr, cond)
        parts.append(fixed.scaled(p))
    total = sum(r.probability for r in per_pattern.values())
    output = mix(parts).scaled(1.0 / total) if total > 0 else WeightedEnsemble.empty()
    return GhzFactoryResult(total, output, per_pattern)


def run_ghz_factory(eta_s: float, eta_d: float, rotator: str = "hadamard") -> GhzFactoryResult:
    """Exact heralded output for source efficiency eta_s and detector efficiency eta_d."""
    return run_ghz_circuit(source_bank(SourceBankSpec(INPUT_MODES, eta_s)), eta_d, rotator)


def presence_contributions(eta_s: float, eta_d: float, rotator: str = "hadamard") -> list[tuple[PresencePattern, float, GhzFactoryResult]]:
    """Factory run separately for each of the 64 emission patterns.

    Returns ``(pattern, weight, result)`` where ``result`` treats the pattern
    as a certain input; the pattern's share of the overall success is
    ``weight * result.success_probability``.
    """
    out = []
    for pattern, w, state in presence_branches(SourceBankSpec(INPUT_MODES, eta_s)):
        out.append((pattern, w, run_ghz_circuit(WeightedEnsemble.pure(state), eta_d, rotator)))
    return out


def id_ghz_ensemble(survival: float, modes: Sequence[int] = OUTPUT_MODES) -> WeightedEnsemble:
    """Three-photon GHZ after independent per-photon loss, written out term by term."""
    if not 0.0 <= survival <= 1.0:
        raise ValueError(f"survival {survival} outside [0, 1]")
    s, f = survival, 1.0 - survival
    branches: list[tuple[float, PureState]] = [(s**3, ghz(modes))]
    for pair in itertools.combinations(modes, 2):
        for pol in (Pol.H, Pol.V):
            st = PureState.build({basis_state((Mode(i, pol), 1) for i in pair): 1.0}, modes)
            branches.append((s**2 * f / 2, st))
    for i in modes:
        for pol in (Pol.H, Pol.V):
            st = PureState.build({basis_state([(Mode(i, pol), 1)]): 1.0}, modes)
            branches.append((s * f**2 / 2, st))
    branches.append((f**3, vacuum(modes)))
    return WeightedEnsemble(tuple((w, st) for w, st in branches if w > 0.0))


def analytic_id_ghz(survival: float) -> DensityOperator:
    return density_operator(id_ghz_ensemble(survival))


def effective_survival(eta_s: float, eta_d: float) -> float:
    """Per-photon survival of the heralded state, eta_s / (2 - eta_d eta_s)."""
    for name, x in (("eta_s", eta_s), ("eta_d", eta_d)):
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"{name}={x} outside [0, 1]")
    return eta_s / (2.0 - eta_d * eta_s)


def fitted_survival(result: GhzFactoryResult) -> float:
    """Survival estimated from the mean photon number (3s for an ID-GHZ state)."""
    return result.mean_photon_number() / len(OUTPUT_MODES)


def sector_weights(result: GhzFactoryResult) -> dict[int, float]:
    """Unnormalized weight of each output photon-number sector."""
    acc: dict[int, float] = defaultdict(float)
    for w, s in result.output:
        for b, a in s.amplitudes.items():
            acc[sum(n for _, n in b)] += result.success_probability * w * abs(a) ** 2
    return {n: acc.get(n, 0.0) for n in range(4)}


def closed_form_sector_weights(eta_s: float) -> dict[int, float]:
    """Per-term unnormalized weights of the 3, 2, 1 and 0 photon parts."""
    e = eta_s
    return {
        3: e**6 / 32,
        2: e**5 * (1 - e) / 32,
        1: e**4 * (1 - e) ** 2 / 16,
        0: e**3 * (1 - e) ** 3 / 4,
    }


def closed_form_unnormalized_output(eta_s: float) -> DensityOperator:
    """Sum of the four case contributions, each term with its own prefactor."""
    w = closed_form_sector_weights(eta_s)
    branches: list[tuple[float, PureState]] = [(w[3], ghz(OUTPUT_MODES))]
    for pair in itertools.combinations(OUTPUT_MODES, 2):
        for pol in (Pol.H, Pol.V):
            branches.append((w[2], PureState.build({basis_state((Mode(i, pol), 1) for i in pair): 1.0})))
    for i in OUTPUT_MODES:
        for pol in (Pol.H, Pol.V):
            branches.append((w[1], PureState.build({basis_state([(Mode(i, pol), 1)]): 1.0})))
    branches.append((w[0], vacuum()))
    return density_operator(WeightedEnsemble(tuple(branches)))


def measurement_distribution(ensemble: WeightedEnsemble, eta_d: float) -> dict[Pattern, float]:
    """H/V photon-count statistics on modes 2, 3, 5 with eta_d-efficient detectors."""
    return {o.pattern: o.probability for o in detect(ensemble, [DetectorSpec(i, eta_d) for i in OUTPUT_MODES])}


def equivalence_residuals(eta_s: float, eta_d: float) -> dict[str, float]:
    """Compare (eta_s sources, eta_d detectors) with (eta_s*eta_d sources, perfect detectors).

    The first scenario's output still has to pass eta_d-efficient detectors
    later; that loss is applied before comparing states. Residuals are the
    success-probability difference, the largest density-matrix entry
    difference, and the largest difference of H/V detection probabilities.
    """
    a = run_ghz_factory(eta_s, eta_d)
    b = run_ghz_factory(eta_s * eta_d, 1.0)
    out = {"success_probability": abs(a.success_probability - b.success_probability)}
    if a.success_probability == 0.0 or b.success_probability == 0.0:
        out["density"] = 0.0
        out["measurement"] = 0.0
        return out
    a_seen = loss_channel(a.output, OUTPUT_MODES, eta_d)
    out["density"] = density_operator(a_seen).max_abs_diff(b.density())
    da = measurement_distribution(a.output, eta_d)
    db = measurement_distribution(b.output, 1.0)
    keys = set(da) | set(db)
    out["measurement"] = max(abs(da.get(k, 0.0) - db.get(k, 0.0)) for k in keys)
    return out


def verify_equivalence(eta_s: float, eta_d: float, tol: float = 1e-10) -> bool:
    return all(r <= tol for r in equivalence_residuals(eta_s, eta_d).values())
