"""Closed-form loss thresholds for the factory + fusion + tree pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .fusion import p_ii as fusion_p_ii
from .ghz import effective_survival

# the tree protocol tolerates loss when the measured survival exceeds this
SURVIVAL_THRESHOLD = Fraction(1, 2)
PRODUCT_THRESHOLD = Fraction(2, 3)


def _check(eta_s: float, eta_d: float) -> None:
    for name, x in (("eta_s", eta_s), ("eta_d", eta_d)):
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"{name}={x} outside [0, 1]")


def measured_survival(eta_s: float, eta_d: float) -> float:
    """Survival of a factory photon that is later measured with efficiency eta_d."""
    _check(eta_s, eta_d)
    x = eta_s * eta_d
    return x / (2.0 - x)


def loss_tolerance_condition(eta_s: float, eta_d: float) -> bool:
    """measured_survival > 1/2, decided in exact arithmetic on the given floats.

    Exact evaluation keeps the boundary eta_s * eta_d == 2/3 on the
    not-tolerant side regardless of rounding.
    """
    _check(eta_s, eta_d)
    x = Fraction(eta_s) * Fraction(eta_d)
    return x / (2 - x) > SURVIVAL_THRESHOLD


def product_condition(eta_s: float, eta_d: float) -> bool:
    """eta_s * eta_d > 2/3 in exact arithmetic."""
    _check(eta_s, eta_d)
    return Fraction(eta_s) * Fraction(eta_d) > PRODUCT_THRESHOLD


@dataclass(frozen=True)
class ThresholdRow:
    eta_s: float
    eta_d: float
    epsilon: float
    state_survival: float
    measured_survival: float
    p_ii: float
    tolerant: bool


def threshold_row(eta_s: float, eta_d: float) -> ThresholdRow:
    s = effective_survival(eta_s, eta_d)
    eps = 1.0 - s
    return ThresholdRow(
        eta_s=eta_s,
        eta_d=eta_d,
        epsilon=eps,
        state_survival=s,
        measured_survival=measured_survival(eta_s, eta_d),
        p_ii=fusion_p_ii(eps, eta_d),
        tolerant=loss_tolerance_condition(eta_s, eta_d),
    )


def threshold_sweep(eta_s_values: Iterable[float], eta_d_values: Iterable[float]) -> list[ThresholdRow]:
    """One row per grid point, eta_s in the outer loop."""
    ds = [float(d) for d in eta_d_values]
    return [threshold_row(float(s), d) for s in eta_s_values for d in ds]
