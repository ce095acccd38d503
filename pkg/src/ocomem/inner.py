"""Subproblem solvers used by ROBD and Optimistic ROBD.

Quadratic geometries get closed forms. Generic geometries fall back to
fixed-step gradient methods, which converge linearly because every objective
here is strongly convex and smooth with known moduli.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ConvergenceError
from .model import CostGeometry, EstimationSet

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200_000


@dataclass(frozen=True)
class SolveReport:
    minimizer: np.ndarray
    value: float
    iterations: int
    grad_norm: float


def _robd_objective(geometry, v, lambda1, lambda2, s, y):
    val = geometry.value(y - v) + 0.5 * lambda1 * float((y - s) @ (y - s))
    return val + 0.5 * lambda2 * float((y - v) @ (y - v))


def _robd_gradient(geometry, v, lambda1, lambda2, s, y):
    return geometry.grad(y - v) + lambda1 * (y - s) + lambda2 * (y - v)


def robd_argmin(
    geometry: CostGeometry,
    v,
    lambda1: float,
    lambda2: float,
    s,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SolveReport:
    """Minimize ``h(y - v) + lambda1/2 ||y - s||^2 + lambda2/2 ||y - v||^2``.

    Parameters
    ----------
    geometry : CostGeometry
        Hitting-cost shape ``h``.
    v : array_like
        Minimizer of the hitting cost.
    lambda1, lambda2 : float
        Switching and proximal regularization weights, both nonnegative.
    s : array_like
        Memory prediction ``sum_i C_i y_{t-i}``.

    Returns
    -------
    SolveReport
    """
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)
    if lambda1 < 0 or lambda2 < 0:
        raise ContractError(f"regularization weights must be >= 0, got {lambda1}, {lambda2}")
    if lambda1 + lambda2 + geometry.m <= 0:
        raise ContractError("subproblem is not strictly convex (lambda1 + lambda2 + m <= 0)")
    lam = lambda1 + lambda2

    if geometry.kind == "diagonal":
        w = geometry.weights
        y = (w * v + lambda1 * s + lambda2 * v) / (w + lam)
        iters = 0
    elif geometry.kind == "dense":
        Q = geometry.Q
        rhs = Q @ v + lambda1 * s + lambda2 * v
        y = np.linalg.solve(Q + lam * np.eye(len(v)), rhs)
        iters = 0
    else:
        step = 1.0 / (geometry.l + lam)
        y = v.copy()
        iters = 0
        g = _robd_gradient(geometry, v, lambda1, lambda2, s, y)
        while np.linalg.norm(g) > tol:
            if iters >= max_iter:
                report = SolveReport(y, _robd_objective(geometry, v, lambda1, lambda2, s, y),
                                     iters, float(np.linalg.norm(g)))
                raise ConvergenceError("robd_argmin did not converge", report)
            y = y - step * g
            g = _robd_gradient(geometry, v, lambda1, lambda2, s, y)
            iters += 1

    g = _robd_gradient(geometry, v, lambda1, lambda2, s, y)
    return SolveReport(
        y, _robd_objective(geometry, v, lambda1, lambda2, s, y), iters, float(np.linalg.norm(g))
    )


def project(omega: EstimationSet, x) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``omega``."""
    return omega.project(x)


# --------------------------------------------------------------------------
# optimistic estimate of the minimizer
# --------------------------------------------------------------------------


def envelope_matrix(geometry: CostGeometry, lam: float) -> np.ndarray:
    """Hessian ``lam * Q (Q + lam I)^{-1}`` of the envelope for quadratic ``h``."""
    if geometry.kind == "diagonal":
        w = geometry.weights
        return np.diag(lam * w / (w + lam))
    Q = geometry.matrix()
    return lam * Q @ np.linalg.inv(Q + lam * np.eye(Q.shape[0]))


def envelope_value(geometry: CostGeometry, lam: float, s, v) -> float:
    """``min_y h(y - v) + lam/2 ||y - s||^2`` as a function of ``v``."""
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    if geometry.is_quadratic:
        r = v - s
        return 0.5 * float(r @ envelope_matrix(geometry, lam) @ r)
    rep = robd_argmin(geometry, np.zeros_like(s), lam, 0.0, s - v)
    return rep.value


def envelope_grad(geometry: CostGeometry, lam: float, s, v) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    if geometry.is_quadratic:
        return envelope_matrix(geometry, lam) @ (v - s)
    z = robd_argmin(geometry, np.zeros_like(s), lam, 0.0, s - v).minimizer
    return lam * (z + v - s)


def _envelope_lipschitz(geometry: CostGeometry, lam: float) -> float:
    if geometry.is_quadratic:
        return float(np.linalg.eigvalsh(envelope_matrix(geometry, lam))[-1])
    return lam * geometry.l / (lam + geometry.l)


def optimality_residual(geometry: CostGeometry, lam: float, s, omega: EstimationSet, v) -> float:
    """Norm of the projected-gradient mapping at ``v``; zero exactly at the optimum."""
    L = _envelope_lipschitz(geometry, lam)
    v = np.asarray(v, dtype=float)
    nxt = omega.project(v - envelope_grad(geometry, lam, s, v) / L)
    return float(L * np.linalg.norm(nxt - v))


def optimistic_v(
    geometry: CostGeometry,
    lam: float,
    s,
    omega: EstimationSet,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Point of ``omega`` minimizing ``min_y h(y - v) + lam/2 ||y - s||^2``.

    The envelope is ``lam*m/(lam+m)``-strongly convex in ``v`` and is minimized
    without constraints at ``v = s``.
    """
    if lam <= 0:
        raise ContractError(f"optimistic estimate needs lam > 0, got {lam}")
    s = np.asarray(s, dtype=float)
    if omega.kind == "singleton":
        return np.array(omega.point)
    if omega.kind == "whole":
        return s.copy()
    if omega.contains(s, tol=0.0):
        return s.copy()
    if geometry.kind == "diagonal":
        if omega.kind == "box":
            return np.clip(s, omega.lo, omega.hi)
        w = geometry.weights
        if np.all(w == w[0]):
            # isotropic envelope: plain Euclidean projection
            return omega.project(s)

    L = _envelope_lipschitz(geometry, lam)
    v = omega.project(s)
    for it in range(max_iter):
        nxt = omega.project(v - envelope_grad(geometry, lam, s, v) / L)
        if L * np.linalg.norm(nxt - v) <= tol:
            return nxt
        v = nxt
    report = SolveReport(v, envelope_value(geometry, lam, s, v), max_iter,
                         optimality_residual(geometry, lam, s, omega, v))
    raise ConvergenceError("optimistic_v projected gradient did not converge", report)
