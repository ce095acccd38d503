"""Offline benchmarks: the hindsight optimum and the best static linear controller."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import solveh_banded

from .control import CanonicalSystem, ControlCostSpec
from .errors import ContractError, ConvergenceError, NoStableControllerError, SearchSpaceError
from .model import OcoInstance, SwitchingStructure, Trajectory, evaluate_trajectory

KKT_TOL = 1e-9


# --------------------------------------------------------------------------
# banded quadratic program
# --------------------------------------------------------------------------


def _difference_operator(structure: SwitchingStructure, T: int) -> sparse.csr_matrix:
    """Block lower-banded ``D`` with ``(D y)_t = y_t - sum_i C_i y_{t-i}``."""
    d, p = structure.d, structure.p
    blocks = [sparse.kron(sparse.eye(T, format="csr"), sparse.eye(d))]
    for i, C in enumerate(structure.C, start=1):
        if i >= T:
            break
        shift = sparse.eye(T, k=-i, format="csr")
        blocks.append(-sparse.kron(shift, sparse.csr_matrix(C)))
    return sparse.csr_matrix(sum(blocks[1:], blocks[0]))


def _to_upper_banded(H: sparse.spmatrix, u: int) -> np.ndarray:
    N = H.shape[0]
    ab = np.zeros((u + 1, N))
    coo = sparse.triu(H).tocoo()
    keep = coo.col - coo.row <= u
    ab[u + coo.row[keep] - coo.col[keep], coo.col[keep]] = coo.data[keep]
    return ab


def solve_banded_qp(structure: SwitchingStructure, Qs, v, b):
    """Minimize ``sum_t 1/2 (y_t-v_t)^T Q_t (y_t-v_t) + 1/2 ||y_t - sum_i C_i y_{t-i} - b_t||^2``.

    Parameters
    ----------
    structure : SwitchingStructure
    Qs : sequence of (d, d) arrays
        Hitting-cost Hessians, one per round.
    v, b : (T, d) arrays
        Hitting-cost minimizers and switching offsets.

    Returns
    -------
    y : (T, d) array
    kkt : float
        ``||H y - g||_inf / (1 + ||g||_inf)`` for the normal equations ``H y = g``.
    """
    v = np.asarray(v, dtype=float)
    b = np.asarray(b, dtype=float)
    T, d = v.shape
    if T == 0:
        return np.zeros((0, d)), 0.0
    D = _difference_operator(structure, T)
    Qblk = sparse.block_diag([np.asarray(Q, dtype=float) for Q in Qs], format="csr")
    H = (Qblk + D.T @ D).tocsr()
    g = Qblk @ v.ravel() + D.T @ b.ravel()
    u = (min(structure.p, T - 1) + 1) * d - 1
    y = solveh_banded(_to_upper_banded(H, u), g, lower=False)
    kkt = float(np.max(np.abs(H @ y - g)) / (1.0 + np.max(np.abs(g))))
    return y.reshape(T, d), kkt


def _qp_objective(structure, Qs, v, b, y) -> float:
    D = _difference_operator(structure, len(y))
    r = D @ y.ravel() - b.ravel()
    hit = sum(0.5 * float((yt - vt) @ Q @ (yt - vt)) for Q, yt, vt in zip(Qs, y, v))
    return hit + 0.5 * float(r @ r)


# --------------------------------------------------------------------------
# OCO hindsight optimum
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OfflineSolution:
    trajectory: Trajectory
    cost: float
    kkt_residual: float


def offline_optimal_oco(instance: OcoInstance, tol: float = 1e-8, max_iter: int = 500_000) -> OfflineSolution:
    """Hindsight-optimal decisions for an OCO instance.

    Quadratic instances are solved exactly through the banded normal
    equations. Instances with generic geometries use full-horizon gradient
    descent, which raises ``ConvergenceError`` past ``max_iter``.
    """
    st = instance.structure
    T, d = instance.T, instance.d
    if all(s.geometry.is_quadratic for s in instance.steps):
        Qs = [s.geometry.matrix() for s in instance.steps]
        y, kkt = solve_banded_qp(st, Qs, instance.v, np.zeros((T, d)))
        traj = evaluate_trajectory(instance, y)
        return OfflineSolution(traj, traj.total, kkt)

    D = _difference_operator(st, T)
    L = max(s.geometry.l for s in instance.steps) + (1.0 + st.alpha) ** 2
    y = instance.v.copy()

    def grad(y):
        gh = np.array([s.geometry.grad(yt - s.v) for s, yt in zip(instance.steps, y)])
        return gh + (D.T @ (D @ y.ravel())).reshape(T, d)

    g = grad(y)
    it = 0
    while np.linalg.norm(g) > tol:
        if it >= max_iter:
            raise ConvergenceError("offline gradient descent did not converge")
        y = y - g / L
        g = grad(y)
        it += 1
    traj = evaluate_trajectory(instance, y)
    return OfflineSolution(traj, traj.total, float(np.max(np.abs(g))))


def brute_force_oracle(instance: OcoInstance, lo: float, hi: float, n: int,
                       max_points: int = 20_000_000) -> float:
    """Smallest total cost over the grid ``linspace(lo, hi, n)^T`` (scalar instances only)."""
    if instance.d != 1:
        raise SearchSpaceError("brute-force search supports d = 1 only")
    T = instance.T
    if T > 4 or n**T > max_points:
        raise SearchSpaceError(f"search space n^T = {n}^{T} is too large")
    grid = np.linspace(lo, hi, n)
    st = instance.structure
    c = [float(C[0, 0]) for C in st.C]
    mesh = np.meshgrid(*([grid] * T), indexing="ij", sparse=True)
    total = np.zeros([1] * T)
    for t, step in enumerate(instance.steps):
        yt = mesh[t]
        q = float(step.geometry.matrix()[0, 0])
        total = total + 0.5 * q * (yt - step.v[0]) ** 2
        pred = 0.0
        for i in range(1, st.p + 1):
            if t - i >= 0:
                pred = pred + c[i - 1] * mesh[t - i]
        total = total + 0.5 * (yt - pred) ** 2
    return float(np.min(total))


# --------------------------------------------------------------------------
# control hindsight optimum
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlOptimum:
    cost: float
    u: np.ndarray
    z: np.ndarray
    kkt_residual: float


def offline_optimal_control(system: CanonicalSystem, costspec: ControlCostSpec, w) -> ControlOptimum:
    """Hindsight-optimal control cost.

    The problem is posed in the actuated-state variables ``z_{t+1} = psi(x_{t+1})``
    rather than in the reduced decisions. Both give the same optimum, but this
    form never builds the accumulated disturbance, which overflows for
    unstable memory.
    """
    T = costspec.T
    w = np.asarray(w, dtype=float).reshape(-1, system.d)[:T]
    if len(w) != T:
        raise ContractError(f"need {T} disturbances, got {len(w)}")
    st = system.structure
    Qs = [costspec.geometry(t, system).matrix() for t in range(T)]
    z, kkt = solve_banded_qp(st, Qs, np.zeros((T, system.d)), w)
    zz = np.vstack([np.zeros((st.p, system.d)), z])
    u = np.empty((T, system.d))
    for t in range(T):
        # z_{t+1} sits at zz[st.p + t]
        mem = sum(st.C[i - 1] @ zz[st.p + t - i] for i in range(1, st.p + 1))
        u[t] = z[t] - w[t] - mem
    cost = _qp_objective(st, Qs, np.zeros_like(z), w, z)
    return ControlOptimum(cost, u, z, kkt)


def direct_qp_control(system: CanonicalSystem, costspec: ControlCostSpec, w) -> float:
    """Hindsight optimum from the full state-space model by dense elimination.

    Independent of the reduction: states are written as ``x = G (u + w)`` and the
    unconstrained quadratic in ``u_0..u_{T-1}`` is solved directly.
    """
    T = costspec.T
    n, d = system.n, system.d
    w = np.asarray(w, dtype=float).reshape(-1, d)[:T]
    A, B = system.A, system.B
    powers = [np.eye(n)]
    for _ in range(T):
        powers.append(A @ powers[-1])
    # x_t = sum_{s<t} A^{t-1-s} B (u_s + w_s), t = 1..T
    G = np.zeros((T * n, T * d))
    for t in range(1, T + 1):
        for s in range(t):
            G[(t - 1) * n:t * n, s * d:(s + 1) * d] = powers[t - 1 - s] @ B
    qdiag = np.repeat([costspec.q_at(t) for t in range(1, T + 1)], n)
    wf = w.ravel()
    H = np.eye(T * d) + G.T @ (qdiag[:, None] * G)
    g = -G.T @ (qdiag * (G @ wf))
    u = np.linalg.solve(H, g)
    x = G @ (u + wf)
    return float(0.5 * np.sum(qdiag * x * x) + 0.5 * u @ u)


# --------------------------------------------------------------------------
# best linear controller in hindsight
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearController:
    """Static feedback ``u_t = -K x_t``; stability is recomputed, never supplied."""

    K: np.ndarray
    system: CanonicalSystem = field(repr=False)
    stable: bool = field(init=False)
    spectral_radius: float = field(init=False)

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        if K.shape != (self.system.d, self.system.n):
            raise ContractError(f"K has shape {K.shape}, expected {(self.system.d, self.system.n)}")
        object.__setattr__(self, "K", K)
        rho = float(np.max(np.abs(np.linalg.eigvals(self.system.A - self.system.B @ K))))
        object.__setattr__(self, "spectral_radius", rho)
        object.__setattr__(self, "stable", rho < 1.0)


@dataclass(frozen=True)
class LcSearchSpec:
    """Search box ``center +/- half_width`` per gain entry, then coordinate descent.

    ``center=None`` uses the dead-beat gain ``A[rows, :]``, which makes the
    closed loop a pure shift and is therefore always stable.
    """

    center: np.ndarray | None = None
    half_width: float = 2.0
    points_per_dim: int | None = None
    max_grid: int = 20_000
    step_tol: float = 1e-7
    cost_tol: float = 1e-8
    max_rounds: int = 2_000


def closed_loop_costs(system: CanonicalSystem, costspec: ControlCostSpec, w, Ks) -> np.ndarray:
    """Realized cost of ``u_t = -K x_t`` for a batch of gains ``Ks`` of shape (N, d, n).

    The horizon includes ``u_T = -K x_T``. Unstable gains cost ``inf``.
    """
    Ks = np.asarray(Ks, dtype=float)
    N = Ks.shape[0]
    T = costspec.T
    w = np.asarray(w, dtype=float).reshape(-1, system.d)[:T]
    A, B = system.A, system.B
    Acl = A[None] - B[None] @ Ks
    rho = np.max(np.abs(np.linalg.eigvals(Acl)), axis=1)
    stable = rho < 1.0
    cost = np.zeros(N)
    x = np.zeros((N, system.n))
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(T + 1):
            u = -np.einsum("kij,kj->ki", Ks, x)
            cost += 0.5 * costspec.q_at(t) * np.sum(x * x, axis=1) + 0.5 * np.sum(u * u, axis=1)
            if t < T:
                x = np.einsum("kij,kj->ki", Acl, x) + (B @ w[t])[None]
    cost[~stable] = np.inf
    cost[~np.isfinite(cost)] = np.inf
    return cost


def _pick(costs, Ks):
    best = np.min(costs)
    if not np.isfinite(best):
        return None
    near = np.flatnonzero(costs <= best + 1e-12 * max(1.0, abs(best)))
    norms = np.linalg.norm(Ks[near].reshape(len(near), -1), axis=1)
    return int(near[np.argmin(norms)])


def best_linear_controller(system: CanonicalSystem, costspec: ControlCostSpec, w,
                           spec: LcSearchSpec | None = None):
    """Best stable static gain in hindsight for a given disturbance realization.

    Parameters
    ----------
    system, costspec : CanonicalSystem, ControlCostSpec
    w : array_like
        Disturbances ``w_0 .. w_{T-1}``.
    spec : LcSearchSpec, optional

    Returns
    -------
    (LinearController, float)

    Raises
    ------
    NoStableControllerError
        If no grid point is stabilizing.
    """
    spec = spec or LcSearchSpec()
    d, n = system.d, system.n
    dim = d * n
    center = (np.asarray(spec.center, dtype=float).reshape(d, n)
              if spec.center is not None else system.A[list(system.rows), :])
    k = spec.points_per_dim or max(3, int(spec.max_grid ** (1.0 / dim)))
    if k % 2 == 0:
        k += 1
    axis = np.linspace(-spec.half_width, spec.half_width, k)
    offsets = np.array(list(itertools.product(axis, repeat=dim)))
    Ks = center[None] + offsets.reshape(-1, d, n)
    costs = closed_loop_costs(system, costspec, w, Ks)
    idx = _pick(costs, Ks)
    if idx is None:
        raise NoStableControllerError("no stabilizing gain on the search grid")
    K, cost = Ks[idx].copy(), float(costs[idx])

    step = axis[1] - axis[0] if k > 1 else spec.half_width
    eye = np.eye(dim).reshape(dim, d, n)
    for _ in range(spec.max_rounds):
        if step < spec.step_tol:
            break
        cand = np.concatenate([K[None] + step * eye, K[None] - step * eye])
        cc = closed_loop_costs(system, costspec, w, cand)
        j = int(np.argmin(cc))
        if cc[j] < cost - spec.cost_tol:
            K, cost = cand[j].copy(), float(cc[j])
        else:
            step *= 0.5
    return LinearController(K, system), cost
