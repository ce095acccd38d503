"""Optimistic ROBD and its lambda = 0 projection variant.

Both handle rounds where only an estimation set for the minimizer is known
when the decision is made; the true minimizer arrives one round later.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InconsistentInstanceError
from .inner import optimistic_v, robd_argmin
from .model import (
    CostGeometry,
    EstimationSet,
    OcoInstance,
    SwitchingStructure,
    Trajectory,
    evaluate_trajectory,
)


@dataclass
class OptimisticState:
    """Mutable per-run state of Optimistic ROBD.

    ``y_hat`` holds the accurate sequence (what ROBD with ``lambda1 = lam``,
    ``lambda2 = 0`` would have played had each minimizer been known in time),
    newest first. It lags the played sequence by one round.
    """

    structure: SwitchingStructure
    lam: float
    y_hat: list = field(default_factory=list)
    y: list = field(default_factory=list)
    prev: tuple | None = None
    y_hat_log: list = field(default_factory=list)
    v_tilde_log: list = field(default_factory=list)
    v_log: list = field(default_factory=list)

    def __post_init__(self):
        if self.lam <= 0:
            raise ContractError(f"Optimistic ROBD needs lam > 0, got {self.lam}")
        d, p = self.structure.d, self.structure.p
        if not self.y_hat:
            self.y_hat = [np.zeros(d) for _ in range(p)]
        if not self.y:
            self.y = [np.zeros(d) for _ in range(p)]

    @property
    def t(self) -> int:
        """Number of decisions made so far."""
        return len(self.v_tilde_log)

    def reveal(self, v_prev) -> np.ndarray:
        """Absorb the previous round's minimizer and extend the accurate sequence."""
        if self.prev is None:
            raise ContractError("no pending round to reveal")
        geometry, omega = self.prev
        v_prev = np.asarray(v_prev, dtype=float)
        if not omega.contains(v_prev):
            raise InconsistentInstanceError(
                f"revealed minimizer {v_prev} is outside the announced estimation set"
            )
        s = self.structure.memory_sum(self.y_hat)
        y_hat = robd_argmin(geometry, v_prev, self.lam, 0.0, s).minimizer
        self.y_hat = [y_hat] + self.y_hat[:-1]
        self.y_hat_log.append(y_hat)
        self.v_log.append(v_prev)
        self.prev = None
        return y_hat


def optimistic_step(
    state: OptimisticState,
    v_prev,
    geometry: CostGeometry,
    omega: EstimationSet,
) -> np.ndarray:
    """One round of Optimistic ROBD.

    Parameters
    ----------
    state : OptimisticState
        Updated in place.
    v_prev : array_like or None
        Minimizer of the previous round; ``None`` only in the first round.
    geometry : CostGeometry
        Shape ``h_t`` of this round's hitting cost.
    omega : EstimationSet
        Set known to contain this round's minimizer.

    Returns
    -------
    numpy.ndarray
        The decision ``y_t``.
    """
    if state.prev is not None:
        if v_prev is None:
            raise ContractError("previous minimizer must be revealed after the first round")
        state.reveal(v_prev)
    elif v_prev is not None:
        raise ContractError("no previous round exists to attach v_prev to")

    s = state.structure.memory_sum(state.y_hat)
    v_tilde = optimistic_v(geometry, state.lam, s, omega)
    y = robd_argmin(geometry, v_tilde, state.lam, 0.0, s).minimizer
    state.v_tilde_log.append(v_tilde)
    state.y = [y] + state.y[:-1]
    state.prev = (geometry, omega)
    return y


@dataclass(frozen=True)
class OptimisticDiagnostics:
    y_hat: np.ndarray
    v_tilde: np.ndarray
    estimation_error: np.ndarray

    @property
    def sum_sq_error_half(self) -> float:
        """``sum_t ||v_t - v~_t||^2 / 2``, the quantity scaled by K2."""
        return 0.5 * float(np.sum(self.estimation_error**2))


def run_optimistic(instance: OcoInstance, lam: float):
    """Run Optimistic ROBD; each ``v_t`` is revealed only after ``y_t`` is played.

    Returns
    -------
    (Trajectory, OptimisticDiagnostics)
    """
    state = OptimisticState(instance.structure, lam)
    ys = []
    v_prev = None
    for step in instance.steps:
        ys.append(optimistic_step(state, v_prev, step.geometry, step.omega))
        v_prev = step.v
    if instance.T:
        state.reveal(v_prev)
    d = instance.d
    v_tilde = np.array(state.v_tilde_log).reshape(instance.T, d)
    diag = OptimisticDiagnostics(
        y_hat=np.array(state.y_hat_log).reshape(instance.T, d),
        v_tilde=v_tilde,
        estimation_error=np.linalg.norm(instance.v - v_tilde, axis=1),
    )
    return evaluate_trajectory(instance, np.array(ys).reshape(instance.T, d)), diag


def lambda_zero_step(v_history, omega: EstimationSet, structure: SwitchingStructure) -> np.ndarray:
    """Project ``sum_i C_i v_{t-i}`` onto ``omega``; ``v_history`` is newest first."""
    return omega.project(structure.memory_sum(v_history))


def run_lambda_zero(instance: OcoInstance) -> Trajectory:
    """Run the projection variant, which plays no regularized solve at all."""
    st = instance.structure
    hist = [np.zeros(st.d) for _ in range(st.p)]
    ys = []
    for step in instance.steps:
        ys.append(lambda_zero_step(hist, step.omega, st))
        hist = [step.v] + hist[:-1]
    return evaluate_trajectory(instance, np.array(ys).reshape(instance.T, instance.d))
