"""Linear mode transformations for the optical elements of the circuits.

A ``LinearModeTransform`` maps creation operators of its input modes to
linear combinations of creation operators of its output modes. The matrix has
one column per input mode and one row per output mode, and must be an
isometry. Elements that model loss have more outputs than inputs; the extra
outputs are loss modes that are traced away with :func:`discard_loss_modes`.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .fock import (
    BasisState,
    Mode,
    Pol,
    PureState,
    WeightedEnsemble,
    trace_out,
)

ISOMETRY_TOL = 1e-12
LOSS_INDEX_START = 1_000_000


class LossModeAllocator:
    """Hands out fresh spatial indices for loss modes.

    Indices start in a reserved range that circuit modes never use, and are
    never reused by the same allocator.
    """

    def __init__(self, start: int = LOSS_INDEX_START):
        self._counter = itertools.count(start)

    def fresh(self) -> int:
        return next(self._counter)


@dataclass(frozen=True, eq=False)
class LinearModeTransform:
    input_modes: tuple[Mode, ...]
    output_modes: tuple[Mode, ...]
    matrix: np.ndarray
    name: str = ""

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.shape != (len(self.output_modes), len(self.input_modes)):
            raise ValueError(f"{self.name}: matrix shape {m.shape} does not match modes")
        if len(set(self.input_modes)) != len(self.input_modes) or len(set(self.output_modes)) != len(
            self.output_modes
        ):
            raise ValueError(f"{self.name}: repeated mode labels")
        if not set(self.input_modes) <= set(self.output_modes):
            raise ValueError(f"{self.name}: every input mode must also be an output mode")
        gram = m.conj().T @ m
        if np.max(np.abs(gram - np.eye(len(self.input_modes)))) > ISOMETRY_TOL:
            raise ValueError(f"{self.name}: matrix is not an isometry")

    @property
    def input_spatial(self) -> frozenset[int]:
        return frozenset(m.spatial for m in self.input_modes)

    @property
    def loss_modes(self) -> tuple[Mode, ...]:
        inputs = set(self.input_modes)
        return tuple(m for m in self.output_modes if m not in inputs)

    @property
    def loss_spatial(self) -> frozenset[int]:
        return frozenset(m.spatial for m in self.loss_modes) - self.input_spatial

    def is_unitary(self) -> bool:
        return len(self.input_modes) == len(self.output_modes)

    def image(self, mode: Mode) -> dict[Mode, complex]:
        """Output-mode expansion of one input creation operator."""
        j = self.input_modes.index(mode)
        return {self.output_modes[i]: complex(c) for i, c in enumerate(self.matrix[:, j]) if c != 0}

    def __repr__(self) -> str:
        return f"LinearModeTransform({self.name or '?'}: {[str(m) for m in self.input_modes]})"


def _images(t: LinearModeTransform) -> dict[Mode, list[tuple[Mode, complex]]]:
    out = {}
    for j, mode in enumerate(t.input_modes):
        col = t.matrix[:, j]
        out[mode] = [(t.output_modes[i], complex(c)) for i, c in enumerate(col) if abs(c) > 0]
    return out


def apply_transform(state: PureState, t: LinearModeTransform) -> PureState:
    """Substitute every creation operator by its image and re-expand in the Fock basis.

    A basis state with occupations n_k is prod_k (a_k^dag)^{n_k}/sqrt(n_k!) |0>,
    and a monomial prod_k (b_k^dag)^{m_k} |0> equals prod_k sqrt(m_k!) |m>.
    """
    missing = t.input_spatial - state.spatial
    if missing:
        raise ValueError(f"{t.name}: state has no spatial modes {sorted(missing)}")
    clash = t.loss_spatial & state.spatial
    if clash:
        raise ValueError(f"{t.name}: loss modes {sorted(clash)} already belong to the state")

    images = _images(t)
    out: dict[BasisState, complex] = defaultdict(complex)
    for b, amp in state.amplitudes.items():
        coeff = amp
        fixed: list[Mode] = []
        factors: list[list[tuple[Mode, complex]]] = []
        for mode, n in b:
            coeff /= math.sqrt(math.factorial(n))
            if mode in images:
                factors.extend([images[mode]] * n)
            else:
                fixed.extend([mode] * n)
        poly: dict[tuple[Mode, ...], complex] = {tuple(sorted(fixed)): coeff}
        for factor in factors:
            nxt: dict[tuple[Mode, ...], complex] = defaultdict(complex)
            for mono, c in poly.items():
                for mode, x in factor:
                    nxt[tuple(sorted(mono + (mode,)))] += c * x
            poly = nxt
        for mono, c in poly.items():
            counts = Counter(mono)
            for n in counts.values():
                c *= math.sqrt(math.factorial(n))
            out[tuple(sorted(counts.items()))] += c
    spatial = state.spatial | frozenset(m.spatial for m in t.output_modes)
    return PureState.build(out, spatial)


def apply_to_ensemble(ensemble: WeightedEnsemble, t: LinearModeTransform) -> WeightedEnsemble:
    return ensemble.map_states(lambda s: apply_transform(s, t))


def _hv(i: int) -> tuple[Mode, Mode]:
    return Mode(i, Pol.H), Mode(i, Pol.V)


def identity(spatials: Iterable[int]) -> LinearModeTransform:
    modes = tuple(m for i in spatials for m in _hv(i))
    return LinearModeTransform(modes, modes, np.eye(len(modes)), "identity")


def single_mode(i: int, matrix: Sequence[Sequence[complex]], name: str = "") -> LinearModeTransform:
    """2x2 polarization transform on spatial mode ``i``; columns are the images of H and V."""
    return LinearModeTransform(_hv(i), _hv(i), np.asarray(matrix, dtype=complex), name or f"U{i}")


PAULIS: dict[str, np.ndarray] = {
    "I": np.array([[1, 0], [0, 1]]),
    "Z": np.array([[1, 0], [0, -1]]),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1], [1, 0]]),  # X.Z, kept real
}


def pauli(i: int, name: str) -> LinearModeTransform:
    """Polarization Pauli (I, X, Z or the real Y = XZ) on spatial mode ``i``."""
    return single_mode(i, PAULIS[name], f"{name}{i}")


def pbs(i: int, j: int) -> LinearModeTransform:
    """Polarizing beamsplitter: transmits H, reflects V between modes i and j."""
    if i == j:
        raise ValueError("pbs needs two distinct spatial modes")
    hi, vi = _hv(i)
    hj, vj = _hv(j)
    modes = (hi, vi, hj, vj)
    # columns: H_i -> H_i, V_i -> V_j, H_j -> H_j, V_j -> V_i
    m = np.array(
        [
            [1, 0, 0, 0],
            [0, 0, 0, 1],
            [0, 0, 1, 0],
            [0, 1, 0, 0],
        ]
    )
    return LinearModeTransform(modes, modes, m, f"PBS{i},{j}")


def pbs45(i: int, j: int) -> LinearModeTransform:
    """PBS acting in the diagonal polarization basis.

    H_i -> (H_i + V_i + H_j - V_j)/2 and H_j -> (H_i - V_i + H_j + V_j)/2. The
    V columns are those of a PBS sandwiched between 45-degree rotators on both
    ports, which makes the matrix real, symmetric and orthogonal.
    """
    if i == j:
        raise ValueError("pbs45 needs two distinct spatial modes")
    modes = _hv(i) + _hv(j)
    # rows/cols ordered H_i, V_i, H_j, V_j
    m = 0.5 * np.array(
        [
            [1, 1, 1, -1],
            [1, 1, -1, 1],
            [1, -1, 1, 1],
            [-1, 1, 1, 1],
        ]
    )
    return LinearModeTransform(modes, modes, m, f"PBS45{i},{j}")


ROTATOR_CONVENTIONS = ("hadamard", "rotation")


def rotate45(i: int, convention: str = "hadamard") -> LinearModeTransform:
    """45-degree polarization rotator on spatial mode ``i``.

    ``"hadamard"``: H -> (H+V)/sqrt2, V -> (H-V)/sqrt2 (the default).
    ``"rotation"``: H -> (H+V)/sqrt2, V -> (V-H)/sqrt2, a proper rotation.
    """
    r = 1 / math.sqrt(2)
    if convention == "hadamard":
        m = [[r, r], [r, -r]]
    elif convention == "rotation":
        m = [[r, -r], [r, r]]
    else:
        raise ValueError(f"unknown rotator convention {convention!r}")
    return single_mode(i, m, f"R45_{i}")


def variable_bs(i: int, transmissivity: float, allocator: LossModeAllocator) -> LinearModeTransform:
    """Beamsplitter that sends part of mode ``i`` into a fresh loss mode.

    Both polarizations are treated alike: p_i -> sqrt(t) p_i + sqrt(1-t) p_loss.
    """
    if not 0.0 <= transmissivity <= 1.0:
        raise ValueError(f"transmissivity {transmissivity} outside [0, 1]")
    loss = allocator.fresh()
    hi, vi = _hv(i)
    hl, vl = _hv(loss)
    st, sr = math.sqrt(transmissivity), math.sqrt(1.0 - transmissivity)
    m = np.array(
        [
            [st, 0],
            [0, st],
            [sr, 0],
            [0, sr],
        ]
    )
    return LinearModeTransform((hi, vi), (hi, vi, hl, vl), m, f"VBS{i}")


def discard_loss_modes(state: PureState, loss_modes: Iterable[Mode | int]) -> WeightedEnsemble:
    """Trace out loss modes; branches are labeled by what was lost.

    ``loss_modes`` may hold ``Mode`` labels or bare spatial indices; a spatial
    index is always discarded with both of its polarizations.
    """
    spatials = {m.spatial if isinstance(m, Mode) else int(m) for m in loss_modes}
    return trace_out(state, spatials)


def loss_channel(
    ensemble: WeightedEnsemble,
    spatials: Iterable[int],
    transmissivity: float,
    allocator: LossModeAllocator | None = None,
) -> WeightedEnsemble:
    """Uniform photon loss on the given spatial modes, loss modes discarded."""
    if transmissivity == 1.0:
        return ensemble
    allocator = allocator or LossModeAllocator()
    spatials = list(spatials)
    branches: list[tuple[float, PureState]] = []
    for w, s in ensemble:
        lost = []
        for i in spatials:
            t = variable_bs(i, transmissivity, allocator)
            s = apply_transform(s, t)
            lost.extend(t.loss_spatial)
        for w2, s2 in discard_loss_modes(s, lost):
            branches.append((w * w2, s2))
    return WeightedEnsemble(tuple(branches))
