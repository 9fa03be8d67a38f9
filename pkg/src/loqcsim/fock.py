"""Few-photon states over labeled polarization modes.

States are sparse maps from Fock basis states to complex amplitudes. A basis
state is a sorted tuple of ``(Mode, count)`` pairs with every count positive;
the vacuum is the empty tuple. Every state also carries its *universe*, the
set of spatial indices it is defined on (each spatial index owns an H and a V
mode), so that empty modes still count as part of the state.

Mixed states only ever come from classical loss patterns, so they are kept as
weighted lists of pure states (``WeightedEnsemble``) and density operators are
built only when two ensembles have to be compared.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from enum import IntEnum
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

import numpy as np

PRUNE_TOL = 1e-12
DENSITY_TOL = 1e-10


class Pol(IntEnum):
    H = 0
    V = 1


class Mode(NamedTuple):
    spatial: int
    pol: Pol

    def __str__(self) -> str:
        return f"{self.pol.name}{self.spatial}"

    @classmethod
    def parse(cls, label: str) -> "Mode":
        """``"H3"`` -> ``Mode(3, Pol.H)``."""
        label = label.strip()
        if len(label) < 2 or label[0] not in "HV" or not label[1:].isdigit():
            raise ValueError(f"bad mode label {label!r}")
        return cls(int(label[1:]), Pol[label[0]])


BasisState = tuple[tuple[Mode, int], ...]

VACUUM: BasisState = ()


def basis_state(occupations: Mapping[Mode, int] | Iterable[tuple[Mode, int]]) -> BasisState:
    """Canonical basis-state key; zero counts are dropped, repeated modes add up."""
    items = occupations.items() if isinstance(occupations, Mapping) else occupations
    acc: dict[Mode, int] = defaultdict(int)
    for mode, n in items:
        if n < 0:
            raise ValueError(f"negative photon count for {mode}")
        acc[Mode(mode.spatial, Pol(mode.pol))] += n
    return tuple(sorted((m, n) for m, n in acc.items() if n > 0))


def photon_number(b: BasisState) -> int:
    return sum(n for _, n in b)


def occupation(b: BasisState, mode: Mode) -> int:
    for m, n in b:
        if m == mode:
            return n
    return 0


def basis_label(b: BasisState) -> str:
    if not b:
        return "vac"
    return "".join(str(m) + (f"^{n}" if n > 1 else "") for m, n in b)


def _sort_key(b: BasisState) -> tuple:
    return tuple((m.spatial, int(m.pol), n) for m, n in b)


def sort_basis(states: Iterable[BasisState]) -> list[BasisState]:
    """Lexicographic order in (spatial, polarization, count)."""
    return sorted(set(states), key=_sort_key)


@dataclass(frozen=True, eq=False)
class PureState:
    """Sparse superposition of Fock basis states.

    Build through :meth:`build` (or the helpers :func:`ket`, :func:`vacuum`)
    so that tiny amplitudes are pruned and the universe is filled in.
    """

    amplitudes: Mapping[BasisState, complex]
    spatial: frozenset[int]

    @classmethod
    def build(
        cls,
        amplitudes: Mapping[BasisState, complex],
        spatial: Iterable[int] = (),
        prune: float = PRUNE_TOL,
    ) -> "PureState":
        amps = {b: complex(a) for b, a in amplitudes.items() if abs(a) >= prune}
        universe = set(spatial)
        for b in amps:
            universe.update(m.spatial for m, _ in b)
        return cls(MappingProxyType(amps), frozenset(universe))

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalized(self) -> "PureState":
        n2 = self.norm2()
        if n2 == 0.0:
            raise ValueError("cannot normalize the zero vector")
        s = 1.0 / math.sqrt(n2)
        return PureState.build({b: a * s for b, a in self.amplitudes.items()}, self.spatial)

    def is_zero(self) -> bool:
        return not self.amplitudes

    def photon_numbers(self) -> set[int]:
        return {photon_number(b) for b in self.amplitudes}

    def with_spatial(self, spatial: Iterable[int]) -> "PureState":
        return PureState.build(self.amplitudes, set(self.spatial) | set(spatial))

    def __add__(self, other: "PureState") -> "PureState":
        amps: dict[BasisState, complex] = defaultdict(complex)
        for src in (self, other):
            for b, a in src.amplitudes.items():
                amps[b] += a
        return PureState.build(amps, self.spatial | other.spatial)

    def __sub__(self, other: "PureState") -> "PureState":
        return self + other * -1

    def __mul__(self, c: complex) -> "PureState":
        return PureState.build({b: a * c for b, a in self.amplitudes.items()}, self.spatial)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        terms = " + ".join(
            f"({_fmt(a)})|{basis_label(b)}>" for b, a in sorted(self.amplitudes.items(), key=lambda t: _sort_key(t[0]))
        )
        return f"PureState({terms or '0'}; modes={sorted(self.spatial)})"


def _fmt(a: complex) -> str:
    if abs(a.imag) < 1e-15:
        return f"{a.real:.6g}"
    return f"{a:.6g}"


def vacuum(spatial: Iterable[int] = ()) -> PureState:
    return PureState.build({VACUUM: 1.0}, spatial)


def ket(*labels: str, spatial: Iterable[int] = ()) -> PureState:
    """Normalized basis ket from mode labels; repeats put several photons in one mode.

    >>> ket("H1", "H1")  # |H_1^2>
    """
    return PureState.build({basis_state((Mode.parse(s), 1) for s in labels): 1.0}, spatial)


def ghz(spatials: Iterable[int]) -> PureState:
    """(|H...H> + |V...V>)/sqrt(2) on the given spatial modes."""
    idx = list(spatials)
    hs = basis_state((Mode(i, Pol.H), 1) for i in idx)
    vs = basis_state((Mode(i, Pol.V), 1) for i in idx)
    r = 1 / math.sqrt(2)
    return PureState.build({hs: r, vs: r}, idx)


def tensor(a: PureState, b: PureState) -> PureState:
    overlap = a.spatial & b.spatial
    if overlap:
        raise ValueError(f"tensor product of states sharing spatial modes {sorted(overlap)}")
    amps = {}
    for ba, xa in a.amplitudes.items():
        for bb, xb in b.amplitudes.items():
            amps[tuple(sorted(ba + bb))] = xa * xb
    return PureState.build(amps, a.spatial | b.spatial)


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    small, large = (a, b) if len(a.amplitudes) <= len(b.amplitudes) else (b, a)
    total = 0j
    for key in small.amplitudes:
        if key in large.amplitudes:
            total += a.amplitudes[key].conjugate() * b.amplitudes[key]
    return total


def fidelity(a: PureState, b: PureState) -> float:
    return abs(inner_product(a, b)) ** 2 / (a.norm2() * b.norm2())


def trace_out(state: PureState, spatials: Iterable[int], keep_modes: bool = False) -> "WeightedEnsemble":
    """Partial trace over whole spatial modes, returned as an ensemble.

    Amplitudes are grouped by the occupation of the traced modes; each group is
    one branch, weighted by its squared norm and renormalized. With
    ``keep_modes`` the traced spatial indices stay in the universe as vacuum.
    """
    drop = set(spatials)
    groups: dict[BasisState, dict[BasisState, complex]] = defaultdict(dict)
    for b, a in state.amplitudes.items():
        traced = tuple(x for x in b if x[0].spatial in drop)
        kept = tuple(x for x in b if x[0].spatial not in drop)
        groups[traced][kept] = a
    universe = state.spatial if keep_modes else state.spatial - drop
    branches = []
    for traced in sort_basis(groups):
        part = PureState.build(groups[traced], universe)
        w = part.norm2()
        if w > 0.0:
            branches.append((w, part.normalized()))
    return WeightedEnsemble(tuple(branches))


@dataclass(frozen=True, eq=False)
class WeightedEnsemble:
    """Mixture sum_k w_k |psi_k><psi_k| kept as explicit branches.

    Weights may sum to less than one; that is how heralded (sub-normalized)
    branches are carried around before renormalization.
    """

    branches: tuple[tuple[float, PureState], ...]

    def __post_init__(self) -> None:
        for w, _ in self.branches:
            if w < 0:
                raise ValueError("negative branch weight")
        if self.total_weight() > 1 + 1e-12:
            raise ValueError(f"ensemble weight {self.total_weight()} exceeds 1")

    @classmethod
    def pure(cls, state: PureState, weight: float = 1.0) -> "WeightedEnsemble":
        return cls(((weight, state),))

    @classmethod
    def empty(cls) -> "WeightedEnsemble":
        return cls(())

    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.branches))

    @property
    def spatial(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for _, s in self.branches:
            out |= s.spatial
        return out

    def normalized(self) -> "WeightedEnsemble":
        t = self.total_weight()
        if t == 0.0:
            raise ValueError("cannot normalize an empty ensemble")
        return WeightedEnsemble(tuple((w / t, s) for w, s in self.branches))

    def scaled(self, factor: float) -> "WeightedEnsemble":
        return WeightedEnsemble(tuple((w * factor, s) for w, s in self.branches))

    def merged(self, decimals: int = 12) -> "WeightedEnsemble":
        """Combine branches whose states agree to ``decimals`` places (amplitudes and universe)."""
        seen: dict[tuple, int] = {}
        out: list[list] = []
        for w, st in self.branches:
            key = (
                st.spatial,
                tuple(
                    sorted((b, round(a.real, decimals) + 0.0, round(a.imag, decimals) + 0.0) for b, a in st.amplitudes.items())
                ),
            )
            if key in seen:
                out[seen[key]][0] += w
            else:
                seen[key] = len(out)
                out.append([w, st])
        return WeightedEnsemble(tuple((w, st) for w, st in out))

    def map_states(self, fn) -> "WeightedEnsemble":
        return WeightedEnsemble(tuple((w, fn(s)) for w, s in self.branches))

    def __add__(self, other: "WeightedEnsemble") -> "WeightedEnsemble":
        return WeightedEnsemble(self.branches + other.branches)

    def __len__(self) -> int:
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)


def mix(parts: Iterable[WeightedEnsemble]) -> WeightedEnsemble:
    branches: list[tuple[float, PureState]] = []
    for p in parts:
        branches.extend(p.branches)
    return WeightedEnsemble(tuple(branches))


def tensor_ensembles(a: WeightedEnsemble, b: WeightedEnsemble) -> WeightedEnsemble:
    return WeightedEnsemble(tuple((wa * wb, tensor(sa, sb)) for wa, sa in a for wb, sb in b))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Dense density matrix over an explicit, canonically ordered basis."""

    basis: tuple[BasisState, ...]
    matrix: np.ndarray

    def index(self) -> dict[BasisState, int]:
        return {b: i for i, b in enumerate(self.basis)}

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def embed(self, basis: Iterable[BasisState]) -> np.ndarray:
        """Matrix expressed on a larger basis (missing rows/cols are zero)."""
        target = list(basis)
        pos = {b: i for i, b in enumerate(target)}
        missing = [b for b in self.basis if b not in pos]
        if missing:
            raise ValueError(f"basis does not contain {basis_label(missing[0])}")
        idx = np.array([pos[b] for b in self.basis], dtype=int)
        out = np.zeros((len(target), len(target)), dtype=complex)
        if len(idx):
            out[np.ix_(idx, idx)] = self.matrix
        return out

    def element(self, bra: BasisState, ket_: BasisState) -> complex:
        pos = self.index()
        if bra not in pos or ket_ not in pos:
            return 0j
        return complex(self.matrix[pos[bra], pos[ket_]])

    def max_abs_diff(self, other: "DensityOperator") -> float:
        union = sort_basis(list(self.basis) + list(other.basis))
        if not union:
            return 0.0
        return float(np.max(np.abs(self.embed(union) - other.embed(union))))

    def photon_sector_weights(self) -> dict[int, float]:
        out: dict[int, float] = defaultdict(float)
        for i, b in enumerate(self.basis):
            out[photon_number(b)] += float(self.matrix[i, i].real)
        return dict(sorted(out.items()))


def density_operator(ensemble: WeightedEnsemble, basis: Iterable[BasisState] | None = None) -> DensityOperator:
    states = [s for _, s in ensemble]
    if basis is None:
        basis = sort_basis(b for s in states for b in s.amplitudes)
    basis = tuple(basis)
    pos = {b: i for i, b in enumerate(basis)}
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for w, s in ensemble:
        v = np.zeros(len(basis), dtype=complex)
        for b, a in s.amplitudes.items():
            v[pos[b]] = a
        rho += w * np.outer(v, v.conj())
    return DensityOperator(basis, rho)


def ensembles_equal_as_density(e1: WeightedEnsemble, e2: WeightedEnsemble, tol: float = DENSITY_TOL) -> bool:
    return density_operator(e1).max_abs_diff(density_operator(e2)) <= tol
