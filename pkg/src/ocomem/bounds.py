"""Closed-form competitive-ratio bounds, coefficients and the lower-bound recursion.

All functions are pure. Violated preconditions raise ``DomainError`` naming
the failed condition.
"""

from __future__ import annotations

from math import sqrt

import numpy as np

from .errors import DomainError


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DomainError(message)


# --------------------------------------------------------------------------
# exact prediction
# --------------------------------------------------------------------------


def robd_cr_upper(
    m: float, alpha: float, lambda1: float, lambda2: float = 0.0, strict: bool = False
) -> float:
    """Ratio guarantee of ROBD with weights ``(lambda1, lambda2)``.

    ``max{(m+l2)/(m l1), (l1+l2+m)/((1-alpha^2) l1 + l2 + m)}``.

    Parameters
    ----------
    strict : bool
        The plain formula divides ``H + l1 M`` by ``l1`` to bound ``H + M``,
        which only holds for ``l1 <= 1``. With ``strict`` the factor
        ``max(1, 1/l1) * max{(m+l2)/m, l1 (l1+l2+m)/(...)}`` is returned
        instead; it agrees with the plain formula for ``l1 <= 1`` and stays
        valid above it.
    """
    _require(m > 0, f"m > 0 required, got {m}")
    _require(lambda1 > 0, f"lambda1 > 0 required, got {lambda1}")
    _require(lambda2 >= 0, f"lambda2 >= 0 required, got {lambda2}")
    den = (1.0 - alpha**2) * lambda1 + lambda2 + m
    _require(den > 0, f"(1 - alpha^2) lambda1 + lambda2 + m > 0 required, got {den}")
    if strict and lambda1 > 1.0:
        return max((m + lambda2) / m, lambda1 * (lambda1 + lambda2 + m) / den)
    return max((m + lambda2) / (m * lambda1), (lambda1 + lambda2 + m) / den)


def robd_optimal_cr(m: float, alpha: float) -> tuple[float, float]:
    """Best ROBD weight with ``lambda2 = 0`` and the resulting ratio.

    Returns
    -------
    (lambda1, cr)
    """
    _require(m > 0, f"m > 0 required, got {m}")
    b = m + alpha**2 - 1.0
    xi = 0.5 * (b + sqrt(b * b + 4.0 * m))
    k = 1.0 + (alpha**2 - 1.0) / m
    cr = 0.5 * (k + sqrt(k * k + 4.0 / m))
    return m / xi, cr


def is_balanced_pair(m: float, alpha: float, lambda1: float, lambda2: float, rtol: float = 1e-9) -> bool:
    """True when both branches of the ROBD ratio bound coincide.

    Every such pair attains the optimal ratio; ``robd_optimal_cr`` picks the
    member with ``lambda2 = 0``.
    """
    den = (1.0 - alpha**2) * lambda1 + lambda2 + m
    if lambda1 <= 0 or den <= 0:
        return False
    left = (m + lambda2) / (m * lambda1)
    right = (lambda1 + lambda2 + m) / den
    return abs(left - right) <= rtol * max(abs(left), abs(right))


def lower_bound_cr(m: float, alpha: float) -> float:
    """Ratio no online algorithm can beat when ``alpha >= 1``."""
    _require(m > 0, f"m > 0 required, got {m}")
    _require(alpha >= 1, f"alpha >= 1 required, got {alpha}")
    b = m + alpha**2 - 1.0
    return (b + sqrt(b * b + 4.0 * m)) / (2.0 * m)


def an_recursion(m: float, alpha: float, n: int) -> float:
    """``a_n`` from ``a_0 = 1`` and ``a_{k+1} = (a_k + m) / (a_k + m + alpha^2)``."""
    _require(n >= 0, f"n >= 0 required, got {n}")
    a = 1.0
    for _ in range(n):
        a = (a + m) / (a + m + alpha**2)
    return a


def an_fixed_point(m: float, alpha: float) -> float:
    """Positive fixed point of the ``a_n`` recursion (cancellation-free form)."""
    _require(m > 0, f"m > 0 required, got {m}")
    b = m + alpha**2 - 1.0
    return 2.0 * m / (b + sqrt(b * b + 4.0 * m))


# --------------------------------------------------------------------------
# inexact prediction
# --------------------------------------------------------------------------


def _k2_expr(m, l, alpha, lam, eta):
    return lam * (l / (1.0 + eta - lam) + 4.0 * alpha**2 / eta - m / (lam + m))


def optimistic_coeffs(m: float, l: float, alpha: float, lam: float, eta: float) -> tuple[float, float]:
    """``(K1, K2_coef)`` with ``cost <= K1 * OPT + K2_coef * sum ||v - v~||^2 / 2``."""
    _require(m > 0, f"m > 0 required, got {m}")
    _require(l >= m, f"l >= m required, got l={l}, m={m}")
    _require(lam > 0, f"lambda > 0 required, got {lam}")
    _require(eta > 0, f"eta > 0 required, got {eta}")
    den = (1.0 - alpha**2) * lam + m
    _require(den > 0, f"(1 - alpha^2) lambda + m > 0 required, got {den}")
    _require(1.0 + eta - lam > 0, f"1 + eta - lambda > 0 required, got {1.0 + eta - lam}")
    K1 = (1.0 + eta) * max(1.0 / lam, (lam + m) / den)
    return K1, _k2_expr(m, l, alpha, lam, eta)


def eta_star(m: float, l: float, alpha: float, lam: float, tol: float = 1e-10) -> float:
    """Smallest ``eta`` for which the estimation-error coefficient is nonpositive.

    Found by bisection; the returned point is always on the nonpositive side.
    """
    _require(m > 0, f"m > 0 required, got {m}")
    _require(lam > 0, f"lambda > 0 required, got {lam}")
    lo = max(0.0, lam - 1.0)
    hi = max(1.0, 2.0 * lo)
    while _k2_expr(m, l, alpha, lam, hi) > 0:
        lo, hi = hi, 2.0 * hi
        _require(hi < 1e300, "eta search diverged")
    lo = np.nextafter(lo, np.inf)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _k2_expr(m, l, alpha, lam, mid) > 0:
            lo = mid
        else:
            hi = mid
    return float(hi)


def q_extrema(q, block_lengths, T: int) -> tuple[float, float]:
    """Extreme window sums ``sum_{j=1}^{p_i} q_{t+j}`` over ``0 <= t <= T-1``.

    ``q`` holds ``q_0 .. q_T``; terms past ``T`` are zero.
    """
    q = np.asarray(q, dtype=float)
    _require(T >= 1, f"T >= 1 required, got {T}")

    def at(t):
        return float(q[t]) if 0 <= t <= T and t < len(q) else 0.0

    sums = [sum(at(t + j) for j in range(1, pi + 1)) for t in range(T) for pi in block_lengths]
    return min(sums), max(sums)


def control_optimistic_coeffs(q_min: float, q_max: float, alpha: float, lam: float) -> tuple[float, float]:
    """Control-side ``(K1, K2_coef)`` for disturbance sets of diameter ``eps_t``.

    ``K2_coef`` multiplies ``sum eps_t^2 / 2``.
    """
    _require(q_min > 0, f"q_min > 0 required, got {q_min}")
    _require(lam > 0, f"lambda > 0 required, got {lam}")
    den = (1.0 - alpha**2) * lam + q_min
    _require(den > 0, f"(1 - alpha^2) lambda + q_min > 0 required, got {den}")
    K1 = (2.0 + lam) * max(1.0 / lam, (lam + q_min) / den)
    K2 = lam * (q_max / 2.0 + 4.0 * alpha**2 / (1.0 + lam) - q_min / (lam + q_min))
    return K1, K2


def control_ratio_bound(q_min: float, q_max: float, alpha: float, lam: float) -> tuple[float, float]:
    """Ratio guarantee when disturbance sets are unbounded.

    Returns
    -------
    (k1_at_eta_star, order_factor)
        The rigorous ``K1(eta*)`` and the factor ``(q_max + 4 alpha^2) max{...}``
        that sets the order of growth.
    """
    _require(q_min > 0, f"q_min > 0 required, got {q_min}")
    _require(lam > 0, f"lambda > 0 required, got {lam}")
    den = (1.0 - alpha**2) * lam + q_min
    _require(den > 0, f"(1 - alpha^2) lambda + q_min > 0 required, got {den}")
    branch = max(1.0 / lam, (lam + q_min) / den)
    eta = eta_star(q_min, q_max, alpha, lam)
    return (1.0 + eta) * branch, (q_max + 4.0 * alpha**2) * branch


def lambda0_bounds(m: float, l: float, alpha: float, eta: float) -> tuple[float, float, float]:
    """``(exact_cr, K1, K2_coef)`` for the projection variant.

    ``K2_coef`` multiplies ``sum ||y_t - v_t||^2 / 2``.
    """
    _require(m > 0, f"m > 0 required, got {m}")
    _require(eta > 0, f"eta > 0 required, got {eta}")
    cr = 1.0 + (1.0 + alpha) ** 2 / m
    return cr, (1.0 + eta) * cr, l + (1.0 + 1.0 / eta) * alpha**2 - (1.0 + eta)


def scalar_example_bounds(a: float, q: float) -> dict:
    """Linear-controller floor and ratio targets for the scalar system ``x' = a x + u + w``.

    ``lc_floor`` lower-bounds ``cost(LC) / sum w_t^2``; the two ratios are the
    asymptotic ``cost(LC) / cost(OPT)`` for constant and alternating disturbances.
    """
    _require(a > 1, f"a > 1 required, got {a}")
    _require(q > 0, f"q > 0 required, got {q}")
    floor = (q + (a - 1.0) ** 2) / 4.0
    return {
        "lc_floor": floor,
        "const_ratio": floor * (q + (a - 1.0) ** 2) / q,
        "alt_ratio": floor * (q + (a + 1.0) ** 2) / q,
    }
