"""Regularized Online Balanced Descent for exactly revealed hitting costs."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import ContractError
from .inner import robd_argmin
from .model import CostGeometry, OcoInstance, SwitchingStructure, Trajectory, evaluate_trajectory


@dataclass(frozen=True)
class RobdParams:
    lambda1: float
    lambda2: float = 0.0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ContractError(f"ROBD weights must be >= 0, got {self.lambda1}, {self.lambda2}")

    @classmethod
    def balanced(cls, m: float, alpha: float) -> "RobdParams":
        """Weights that balance both branches of the ratio bound, with lambda2 = 0."""
        if m <= 0:
            raise ContractError(f"need m > 0, got {m}")
        b = m + alpha**2 - 1.0
        xi = 0.5 * (b + sqrt(b * b + 4.0 * m))
        return cls(m / xi, 0.0)


def robd_step(
    params: RobdParams,
    geometry: CostGeometry,
    v,
    history,
    structure: SwitchingStructure,
) -> np.ndarray:
    """One ROBD decision given ``history = [y_{t-1}, ..., y_{t-p}]``."""
    s = structure.memory_sum(history)
    return robd_argmin(geometry, v, params.lambda1, params.lambda2, s).minimizer


def run_robd(instance: OcoInstance, params: RobdParams) -> Trajectory:
    """Run ROBD with the true minimizers revealed before each decision."""
    st = instance.structure
    hist = [np.zeros(st.d) for _ in range(st.p)]
    ys = []
    for step in instance.steps:
        y = robd_step(params, step.geometry, step.v, hist, st)
        ys.append(y)
        hist = [y] + hist[:-1]
    return evaluate_trajectory(instance, np.array(ys).reshape(instance.T, instance.d))
