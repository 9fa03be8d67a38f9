"""2-tree bookkeeping for growing tree clusters with discard-on-failure fusions.

Construction of a tree with branching profile [b_0, ..., b_m], bottom up:

* level m: fuse 2-trees pairwise into 4-trees, 8-trees, ... until the top
  branching reaches b_m (rounded up to a power of two);
* every higher level i: join two finished level-(i+1) trees and one fresh
  2-tree with two fusions (both must succeed), giving a top of branching 2,
  then double that top up to b_i like the bottom level.

A failed fusion throws away everything it touched. All costs are counted in
2-trees. Branching values that are not powers of two are padded up; a
branching of 1 is built as 2 and pruned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class TreeSpec:
    branching: tuple[int, ...]

    def __post_init__(self) -> None:
        b = tuple(int(x) for x in self.branching)
        if not b:
            raise ValueError("a tree needs at least one branching value")
        if any(x < 1 for x in b):
            raise ValueError("branching values must be positive")
        object.__setattr__(self, "branching", b)

    @classmethod
    def parse(cls, text: str) -> "TreeSpec":
        return cls(tuple(int(x) for x in text.split(",") if x.strip()))

    @property
    def depth(self) -> int:
        """m, the index of the last level."""
        return len(self.branching) - 1

    @property
    def qubit_count(self) -> int:
        total, layer = 1, 1
        for b in self.branching:
            layer *= b
            total += layer
        return total

    def __str__(self) -> str:
        return ",".join(map(str, self.branching))


@dataclass(frozen=True)
class ResourceEstimate:
    mean_2trees: float
    std_error: float
    trials: int
    p_ii_used: float
    analytic_mean: float
    analytic_bound: float

    def within(self, n_sigma: float = 3.0) -> bool:
        return abs(self.mean_2trees - self.analytic_mean) <= n_sigma * self.std_error


def _check_p(p_ii: float) -> None:
    if not 0.0 < p_ii <= 1.0:
        raise ValueError(f"p_ii={p_ii} must lie in (0, 1]; at 0 the cost diverges")


def doublings(b: int) -> int:
    """Pairwise fusion rounds that take a branching-2 top up to at least b."""
    return max(math.ceil(math.log2(max(b, 2))) - 1, 0)


def expected_power_tree_cost(l: int, p_ii: float) -> float:
    """Expected 2-trees consumed by one 2^l-tree: (2/p)^(l-1)."""
    if l < 1:
        raise ValueError("l must be at least 1")
    _check_p(p_ii)
    return (2.0 / p_ii) ** (l - 1)


def analytic_tree_cost(spec: TreeSpec, p_ii: float) -> float:
    _check_p(p_ii)
    grow = 2.0 / p_ii
    b = spec.branching
    cost = grow ** doublings(b[-1])
    for bi in reversed(b[:-1]):
        cost = grow ** doublings(bi) * (2.0 * cost + 1.0) / p_ii**2
    return cost


def poly(b: int, p_ii: float) -> float:
    return (2.0 / p_ii) ** math.log2(max(b, 2))


def tree_cost_bound(spec: TreeSpec, p_ii: float) -> float:
    """(2/p^2)^m prod_i poly(b_i) with poly(b) = (2/p)^log2(b)."""
    _check_p(p_ii)
    out = (2.0 / p_ii**2) ** spec.depth
    for b in spec.branching:
        out *= poly(b, p_ii)
    return out


def _sample_costs(spec: TreeSpec, p_ii: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Cost of ``n`` independent builds.

    Making k objects by fusions that each succeed with probability q takes
    k + NegBinomial(k, q) attempts, and every attempt consumes its full set of
    inputs, so the process can be run top-down on object counts alone.
    """
    need = np.ones(n, dtype=np.int64)
    direct = np.zeros(n, dtype=np.int64)
    b = spec.branching
    for i, bi in enumerate(b):
        for _ in range(doublings(bi)):
            attempts = need + rng.negative_binomial(need, p_ii)
            need = 2 * attempts
        if i < len(b) - 1:
            attempts = need + rng.negative_binomial(need, p_ii * p_ii)
            direct += attempts
            need = 2 * attempts
    return (need + direct).astype(float)


def monte_carlo_tree_cost(
    spec: TreeSpec, p_ii: float, trials: int, seed: int, block_size: int = BLOCK_SIZE
) -> ResourceEstimate:
    """Sample the build process; reproducible for a given (seed, trials, block_size).

    Trials are processed in blocks; block k draws from its own stream seeded by
    (seed, k), so blocks can be evaluated in any order or in parallel.
    """
    _check_p(p_ii)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    root = np.random.SeedSequence(seed)
    total = 0.0
    total_sq = 0.0
    for k, start in enumerate(range(0, trials, block_size)):
        n = min(block_size, trials - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(root.entropy, spawn_key=(k,))))
        costs = _sample_costs(spec, p_ii, n, rng)
        total += float(costs.sum())
        total_sq += float(np.square(costs).sum())
    mean = total / trials
    if trials > 1:
        var = max(total_sq - trials * mean * mean, 0.0) / (trials - 1)
        stderr = math.sqrt(var / trials)
    else:
        stderr = 0.0
    return ResourceEstimate(
        mean_2trees=mean,
        std_error=stderr,
        trials=trials,
        p_ii_used=p_ii,
        analytic_mean=analytic_tree_cost(spec, p_ii),
        analytic_bound=tree_cost_bound(spec, p_ii),
    )


def encoded_cluster_cost(n: int, p_ii: float, n_tree: float) -> float:
    """2-trees for an n-qubit loss-encoded linear cluster: n (3/p^3 + 3 N_tree) / p^3."""
    if n < 1:
        raise ValueError("n must be at least 1")
    _check_p(p_ii)
    if n_tree <= 0:
        raise ValueError("n_tree must be positive")
    return n * (3.0 / p_ii**3 + 3.0 * n_tree) / p_ii**3


def growth_ratio(k: int, p_ii: float) -> float:
    """cost([2^(k+1)]) / cost([2^k])."""
    return analytic_tree_cost(TreeSpec((2 ** (k + 1),)), p_ii) / analytic_tree_cost(TreeSpec((2**k,)), p_ii)


__all__: Sequence[str] = (
    "TreeSpec",
    "ResourceEstimate",
    "expected_power_tree_cost",
    "analytic_tree_cost",
    "tree_cost_bound",
    "monte_carlo_tree_cost",
    "encoded_cluster_cost",
    "doublings",
    "poly",
    "growth_ratio",
)
