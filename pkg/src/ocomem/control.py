"""Input-disturbed squared-regulator control and its reduction to structured-memory OCO.

Dynamics are ``x_{t+1} = A x_t + B (u_t + w_t)`` with ``(A, B)`` in controllable
canonical form and stage cost ``q_t/2 ||x_t||^2 + 1/2 ||u_t||^2``. Row indices
are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractError, InconsistentInstanceError
from .inner import optimistic_v, robd_argmin
from .model import (
    CostGeometry,
    EstimationSet,
    OcoInstance,
    Step,
    SwitchingStructure,
    _frozen,
)
from .optimistic import OptimisticState, optimistic_step


# --------------------------------------------------------------------------
# canonical form
# --------------------------------------------------------------------------


def validate_canonical(A, B):
    """Check the canonical form and return ``(rows, block_lengths, p)``.

    ``rows`` are the 0-based actuated rows ``k_1 < ... < k_d``,
    ``block_lengths[i] = k_i - k_{i-1}`` (with ``k_0 = -1`` in 0-based terms)
    and ``p`` is the controllability index.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ContractError(f"A must be square, got {A.shape}")
    if B.shape[0] != n:
        raise ContractError(f"B has {B.shape[0]} rows, A has {n}")
    d = B.shape[1]
    if d < 1:
        raise ContractError("B needs at least one column")

    rows = []
    for j in range(d):
        nz = np.flatnonzero(B[:, j])
        if len(nz) != 1 or B[nz[0], j] != 1.0:
            raise ContractError(f"column {j} of B must contain a single 1 and zeros elsewhere")
        rows.append(int(nz[0]))
    if any(b <= a for a, b in zip(rows, rows[1:])):
        raise ContractError(f"actuated rows must be strictly increasing, got {rows}")

    actuated = set(rows)
    for r in range(n):
        if r in actuated:
            continue
        expected = np.zeros(n)
        if r + 1 >= n:
            raise ContractError(f"row {r} is unactuated but has no successor to shift from")
        expected[r + 1] = 1.0
        if not np.array_equal(A[r], expected):
            raise ContractError(f"row {r} of A must be the unit shift e_{r + 1}")

    block_lengths = []
    prev = -1
    for k in rows:
        block_lengths.append(k - prev)
        prev = k
    return tuple(rows), tuple(block_lengths), max(block_lengths)


def psi(x, rows) -> np.ndarray:
    """Extract the actuated coordinates of a state vector."""
    return np.asarray(x, dtype=float)[list(rows)]


def build_C(A, rows, block_lengths, p) -> list:
    """Regroup the actuated rows of ``A`` into memory matrices ``C_1 .. C_p``."""
    A = np.asarray(A, dtype=float)
    A_I = A[list(rows), :]
    d = len(rows)
    mats = []
    for i in range(1, p + 1):
        C = np.zeros((d, d))
        for j, (k, pj) in enumerate(zip(rows, block_lengths)):
            if i <= pj:
                C[:, j] = A_I[:, k + 1 - i]
        mats.append(C)
    return mats


def build_h(q_window: Sequence[float], block_lengths) -> CostGeometry:
    """Diagonal hitting geometry from ``q_window = [q_{t+1}, ..., q_{t+p}]``.

    Coordinate ``i`` gets weight ``sum_{j=1}^{p_i} q_{t+j}``. Zero weights are
    allowed and show up as ``geometry.degenerate``.
    """
    q = np.asarray(q_window, dtype=float)
    weights = [float(np.sum(q[:pi])) for pi in block_lengths]
    return CostGeometry.diagonal(weights, allow_degenerate=True)


@dataclass(frozen=True)
class CanonicalSystem:
    A: np.ndarray
    B: np.ndarray
    rows: tuple = field(init=False)
    block_lengths: tuple = field(init=False)
    p: int = field(init=False)
    structure: SwitchingStructure = field(init=False, repr=False)

    def __post_init__(self):
        A = _frozen(np.atleast_2d(self.A))
        B = np.asarray(self.B, dtype=float)
        B = _frozen(B.reshape(-1, 1) if B.ndim == 1 else B)
        rows, blocks, p = validate_canonical(A, B)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "block_lengths", blocks)
        object.__setattr__(self, "p", p)
        object.__setattr__(
            self, "structure", SwitchingStructure(tuple(build_C(A, rows, blocks, p)))
        )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.B.shape[1]

    @classmethod
    def scalar(cls, a: float) -> "CanonicalSystem":
        return cls(np.array([[a]]), np.array([[1.0]]))

    @classmethod
    def double_integrator(cls) -> "CanonicalSystem":
        return cls(np.array([[0.0, 1.0], [-1.0, 2.0]]), np.array([[0.0], [1.0]]))


@dataclass(frozen=True)
class ControlCostSpec:
    """State weights ``q_0 .. q_T``; ``q_t = 0`` past the horizon."""

    q: np.ndarray

    def __post_init__(self):
        q = _frozen(np.atleast_1d(self.q))
        if q.ndim != 1 or len(q) < 2:
            raise ContractError("need q_0 .. q_T with T >= 1")
        if np.any(q <= 0):
            raise ContractError("state weights q_t must be positive for 0 <= t <= T")
        object.__setattr__(self, "q", q)

    @classmethod
    def constant(cls, q: float, T: int) -> "ControlCostSpec":
        return cls(np.full(T + 1, float(q)))

    @property
    def T(self) -> int:
        return len(self.q) - 1

    def q_at(self, t: int) -> float:
        return float(self.q[t]) if 0 <= t <= self.T else 0.0

    def window(self, t: int, p: int) -> np.ndarray:
        """``[q_{t+1}, ..., q_{t+p}]`` with the past-horizon convention."""
        return np.array([self.q_at(t + j) for j in range(1, p + 1)])

    def geometry(self, t: int, system: CanonicalSystem) -> CostGeometry:
        return build_h(self.window(t, system.p), system.block_lengths)


@dataclass(frozen=True)
class ControlTrace:
    """Realized closed-loop record: ``x_0..x_T``, ``u_0..u_T``, ``w_0..w_{T-1}``."""

    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    stage_cost: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.stage_cost))


def stage_costs(x, u, costspec: ControlCostSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    q = np.array([costspec.q_at(t) for t in range(len(x))])
    return 0.5 * q * np.sum(x * x, axis=1) + 0.5 * np.sum(u * u, axis=1)


def cost_of_trace(trace: ControlTrace, costspec: ControlCostSpec) -> float:
    """``sum_t q_t/2 ||x_t||^2 + 1/2 ||u_t||^2`` recomputed from the trace."""
    return float(np.sum(stage_costs(trace.x, trace.u, costspec)))


def _as_rows(a, T, d, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1 and d == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2 or a.shape[1] != d or a.shape[0] < T:
        raise ContractError(f"{name} must have at least {T} rows of dimension {d}, got {a.shape}")
    return a[:T]


def simulate_inputs(system: CanonicalSystem, costspec: ControlCostSpec, u, w) -> ControlTrace:
    """Open-loop rollout of ``u_0..u_{T-1}`` (``u_T`` is taken as zero)."""
    T = costspec.T
    u = _as_rows(u, T, system.d, "u")
    w = _as_rows(w, T, system.d, "w")
    x = np.zeros((T + 1, system.n))
    for t in range(T):
        x[t + 1] = system.A @ x[t] + system.B @ (u[t] + w[t])
    u_full = np.vstack([u, np.zeros((1, system.d))])
    return ControlTrace(x, u_full, w, stage_costs(x, u_full, costspec))


# --------------------------------------------------------------------------
# offline reduction
# --------------------------------------------------------------------------


def accumulate(structure: SwitchingStructure, seq) -> np.ndarray:
    """``a_t = seq_t + sum_i C_i a_{t-i}`` with zero history.

    This is the accumulation used for both the disturbance (``zeta``) and the
    decisions (``y``). It may grow without bound for unstable memory.
    """
    seq = np.asarray(seq, dtype=float)
    out = np.zeros_like(seq)
    p = structure.p
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(len(seq)):
            acc = seq[t].copy()
            for i in range(1, p + 1):
                if t - i >= 0:
                    acc += structure.C[i - 1] @ out[t - i]
            out[t] = acc
    return out


def inputs_to_decisions(structure: SwitchingStructure, u) -> np.ndarray:
    """Decisions ``y_t = u_t + sum_i C_i y_{t-i}`` induced by a control sequence."""
    return accumulate(structure, u)


def reduce_offline(
    system: CanonicalSystem,
    costspec: ControlCostSpec,
    w,
    W: Sequence[EstimationSet] | None = None,
) -> OcoInstance:
    """Translate a control instance with known disturbances into an OCO instance.

    Round ``t+1`` of the OCO instance corresponds to control step ``t``
    (``t = 0..T-1``). Its minimizer is ``-zeta_t`` and its estimation set is
    ``{-w - sum_i C_i zeta_{t-i} : w in W_t}`` (a singleton when ``W`` is None).
    """
    T = costspec.T
    w = _as_rows(w, T, system.d, "w")
    st = system.structure
    zeta = accumulate(st, w)
    steps = []
    for t in range(T):
        mem = np.zeros(system.d)
        for i in range(1, st.p + 1):
            if t - i >= 0:
                mem += st.C[i - 1] @ zeta[t - i]
        v = -zeta[t]
        if W is None:
            omega = EstimationSet.singleton(v)
        else:
            omega = W[t].reflect_shift(-mem)
        steps.append(Step(costspec.geometry(t, system), omega, v))
    return OcoInstance(st, tuple(steps))


# --------------------------------------------------------------------------
# online controllers
# --------------------------------------------------------------------------


class StableController:
    """Optimistic ROBD controller that never forms the accumulated sequences.

    It keeps the accurate sequence in state space, ``zhat_{t+1} = yhat_t +
    zeta_t``, which obeys a bounded recursion driven by the true disturbances:

        zhat_{t+1} = argmin_z h_t(z) + lam/2 ||z - w_t - sum_i C_i zhat_{t+1-i}||^2

    The planned state ``z*_t`` solves the same problem with the optimistic
    estimate ``w~_t`` in place of ``w_t``, and the emitted input is
    ``u_t = z*_t - w~_t - A[rows] x_t``. This equals the naive reduction's
    input exactly.
    """

    def __init__(self, system: CanonicalSystem, costspec: ControlCostSpec, lam: float):
        if lam <= 0:
            raise ContractError(f"controller needs lam > 0, got {lam}")
        self.system = system
        self.costspec = costspec
        self.lam = float(lam)
        st = system.structure
        self._zhat = [np.zeros(system.d) for _ in range(st.p)]
        self._A_I = system.A[list(system.rows), :]
        self._prev = None
        self.t = 0
        self.w_tilde: list = []
        self.w_seen: list = []

    def observe(self, x_t) -> None:
        """Recover the previous disturbance from ``x_t`` and advance the accurate sequence."""
        if self._prev is None:
            return
        x_prev, u_prev, h_prev, W_prev = self._prev
        sysm = self.system
        w_prev = psi(np.asarray(x_t) - sysm.A @ x_prev - sysm.B @ u_prev, sysm.rows)
        if not W_prev.contains(w_prev):
            raise InconsistentInstanceError(
                f"realized disturbance {w_prev} at t={self.t - 1} is outside its estimation set"
            )
        r = sysm.structure.memory_sum(self._zhat)
        zhat = robd_argmin(h_prev, np.zeros(sysm.d), self.lam, 0.0, w_prev + r).minimizer
        self._zhat = [zhat] + self._zhat[:-1]
        self.w_seen.append(w_prev)
        self._prev = None

    def act(self, x_t, W_t: EstimationSet) -> np.ndarray:
        x_t = np.asarray(x_t, dtype=float)
        if self.t >= self.costspec.T:
            raise ContractError("horizon exhausted; u_T is zero by construction")
        self.observe(x_t)
        sysm = self.system
        h_t = self.costspec.geometry(self.t, sysm)
        r = sysm.structure.memory_sum(self._zhat)
        w_tilde = optimistic_v(h_t, self.lam, -r, W_t)
        z_plan = robd_argmin(h_t, np.zeros(sysm.d), self.lam, 0.0, w_tilde + r).minimizer
        u = z_plan - w_tilde - self._A_I @ x_t
        self.w_tilde.append(w_tilde)
        self._prev = (x_t, u, h_t, W_t)
        self.t += 1
        return u

    def state_magnitude(self) -> float:
        """Largest absolute entry of the internal state (for boundedness checks)."""
        vals = [np.max(np.abs(z)) for z in self._zhat]
        if self._prev is not None:
            vals += [np.max(np.abs(self._prev[0])), np.max(np.abs(self._prev[1]))]
        return float(max(vals))


class NaiveReductionController:
    """The reduction run literally: accumulated ``zeta`` and ``y`` plus Optimistic ROBD.

    Numerically fragile for unstable memory; kept as the reference the stable
    controller is checked against.
    """

    def __init__(self, system: CanonicalSystem, costspec: ControlCostSpec, lam: float):
        self.system = system
        self.costspec = costspec
        st = system.structure
        self.state = OptimisticState(st, lam)
        self._zeta = [np.zeros(system.d) for _ in range(st.p)]
        self._y = [np.zeros(system.d) for _ in range(st.p)]
        self._prev = None
        self.t = 0

    def observe(self, x_t):
        if self._prev is None:
            return None
        x_prev, u_prev, W_prev = self._prev
        sysm = self.system
        w_prev = psi(np.asarray(x_t) - sysm.A @ x_prev - sysm.B @ u_prev, sysm.rows)
        if not W_prev.contains(w_prev):
            raise InconsistentInstanceError("realized disturbance outside its estimation set")
        zeta = w_prev + sysm.structure.memory_sum(self._zeta)
        self._zeta = [zeta] + self._zeta[:-1]
        self._prev = None
        return -zeta

    def act(self, x_t, W_t: EstimationSet) -> np.ndarray:
        x_t = np.asarray(x_t, dtype=float)
        v_prev = self.observe(x_t)
        sysm = self.system
        st = sysm.structure
        h_t = self.costspec.geometry(self.t, sysm)
        omega = W_t.reflect_shift(-st.memory_sum(self._zeta))
        y = optimistic_step(self.state, v_prev, h_t, omega)
        u = y - st.memory_sum(self._y)
        self._y = [y] + self._y[:-1]
        self._prev = (x_t, u, W_t)
        self.t += 1
        return u


class _ObservingController:
    """Shared bookkeeping: recover ``w_{t-1}`` from ``x_t`` and check it against ``W_{t-1}``."""

    def __init__(self, system: CanonicalSystem, costspec: ControlCostSpec):
        self.system = system
        self.costspec = costspec
        self._A_I = system.A[list(system.rows), :]
        self._prev = None
        self.t = 0

    def observe(self, x_t) -> None:
        if self._prev is None:
            return
        x_prev, u_prev, W_prev = self._prev
        sysm = self.system
        w_prev = psi(np.asarray(x_t) - sysm.A @ x_prev - sysm.B @ u_prev, sysm.rows)
        if not W_prev.contains(w_prev):
            raise InconsistentInstanceError(
                f"realized disturbance {w_prev} at t={self.t - 1} is outside its estimation set"
            )
        self._prev = None

    def _emit(self, x_t, u, W_t):
        self._prev = (x_t, u, W_t)
        self.t += 1
        return u


class RobdController(_ObservingController):
    """ROBD on the reduced problem, written in actuated-state variables.

    Needs exact prediction (singleton ``W_t``). The planned state solves
    ``min_z h_t(z) + l1/2 ||z - w_t - A[rows] x_t||^2 + l2/2 ||z||^2``.
    """

    def __init__(self, system, costspec, lambda1: float, lambda2: float = 0.0):
        super().__init__(system, costspec)
        self.lambda1 = float(lambda1)
        self.lambda2 = float(lambda2)

    def act(self, x_t, W_t: EstimationSet) -> np.ndarray:
        if W_t.kind != "singleton":
            raise ContractError("ROBD needs the disturbance revealed exactly (singleton W_t)")
        x_t = np.asarray(x_t, dtype=float)
        self.observe(x_t)
        h_t = self.costspec.geometry(self.t, self.system)
        drift = self._A_I @ x_t
        w_t = np.array(W_t.point)
        z = robd_argmin(h_t, np.zeros(self.system.d), self.lambda1, self.lambda2, w_t + drift).minimizer
        return self._emit(x_t, z - w_t - drift, W_t)


class LambdaZeroController(_ObservingController):
    """Projection variant in actuated-state variables.

    Projecting the memory prediction onto the reduced estimation set amounts to
    cancelling the drift and the point of ``W_t`` closest to zero:
    ``u_t = -proj_{W_t}(0) - A[rows] x_t``.
    """

    def act(self, x_t, W_t: EstimationSet) -> np.ndarray:
        x_t = np.asarray(x_t, dtype=float)
        self.observe(x_t)
        w_hat = W_t.project(np.zeros(self.system.d))
        return self._emit(x_t, -w_hat - self._A_I @ x_t, W_t)


def simulate(system: CanonicalSystem, costspec: ControlCostSpec, controller, w, W) -> ControlTrace:
    """Closed-loop rollout: ``W_t`` is shown before ``u_t``, ``w_t`` is applied after."""
    T = costspec.T
    w = _as_rows(w, T, system.d, "w")
    if len(W) < T:
        raise ContractError(f"need {T} estimation sets, got {len(W)}")
    x = np.zeros((T + 1, system.n))
    u = np.zeros((T + 1, system.d))
    for t in range(T):
        u[t] = controller.act(x[t], W[t])
        x[t + 1] = system.A @ x[t] + system.B @ (u[t] + w[t])
    controller.observe(x[T])
    return ControlTrace(x, u, w, stage_costs(x, u, costspec))


def run_controller(
    system: CanonicalSystem,
    costspec: ControlCostSpec,
    w,
    W: Sequence[EstimationSet] | None,
    lam: float,
) -> ControlTrace:
    """Closed-loop run of the numerically stable Optimistic ROBD controller.

    ``W=None`` means exact prediction (``W_t = {w_t}``).
    """
    w = _as_rows(w, costspec.T, system.d, "w")
    if W is None:
        W = [EstimationSet.singleton(wt) for wt in w]
    return simulate(system, costspec, StableController(system, costspec, lam), w, W)


def run_naive_controller(system, costspec, w, W, lam) -> ControlTrace:
    """Closed-loop run of the literal reduction with Optimistic ROBD as solver."""
    w = _as_rows(w, costspec.T, system.d, "w")
    if W is None:
        W = [EstimationSet.singleton(wt) for wt in w]
    return simulate(system, costspec, NaiveReductionController(system, costspec, lam), w, W)


def run_robd_controller(system, costspec, w, lambda1: float, lambda2: float = 0.0) -> ControlTrace:
    """Closed-loop ROBD with each disturbance revealed before acting."""
    w = _as_rows(w, costspec.T, system.d, "w")
    W = [EstimationSet.singleton(wt) for wt in w]
    return simulate(system, costspec, RobdController(system, costspec, lambda1, lambda2), w, W)


def run_lambda_zero_controller(system, costspec, w, W) -> ControlTrace:
    """Closed-loop projection variant."""
    w = _as_rows(w, costspec.T, system.d, "w")
    if W is None:
        W = [EstimationSet.singleton(wt) for wt in w]
    return simulate(system, costspec, LambdaZeroController(system, costspec), w, W)
