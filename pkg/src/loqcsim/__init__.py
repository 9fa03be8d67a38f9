"""Exact few-photon simulation of a loss-tolerant linear-optics pipeline.

Submodules: ``fock`` (states), ``optics`` (linear elements and loss),
``detection`` (sources and detectors), ``ghz`` (the heralded GHZ factory),
``fusion`` (Type-II fusion), ``trees`` (2-tree resource counting),
``thresholds`` (closed-form loss thresholds) and ``cli``.
"""

from .fock import PureState, WeightedEnsemble, ghz, ket, tensor, vacuum
from .fusion import p_ii, type_ii_fuse
from .ghz import effective_survival, run_ghz_factory
from .thresholds import loss_tolerance_condition, measured_survival, threshold_sweep
from .trees import TreeSpec, analytic_tree_cost, monte_carlo_tree_cost

__version__ = "0.1.0"
