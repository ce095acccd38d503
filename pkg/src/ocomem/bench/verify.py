"""Self-checks of the closed-form bounds, run by ``ocomem verify-bounds``."""

from __future__ import annotations

from math import sqrt

import numpy as np

from .. import bounds

GOLDEN = (1.0 + sqrt(5.0)) / 2.0


def _check(name, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed check, not a crash of the table
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return name, bool(ok), detail


def _golden():
    cr = bounds.robd_optimal_cr(1.0, 1.0)[1]
    return abs(cr - GOLDEN) <= 1e-12, f"cr={cr!r}"


def _upper_meets_lower():
    worst = 0.0
    for m in (0.5, 1.0, 2.0, 8.0):
        for a in (1.0, 1.5, 2.0, 3.0):
            worst = max(worst, abs(bounds.robd_optimal_cr(m, a)[1] - bounds.lower_bound_cr(m, a)))
    return worst <= 1e-12, f"max gap {worst:.2e}"


def _preset_balances():
    worst = 0.0
    for m in (0.5, 1.0, 2.0, 8.0):
        for a in (0.0, 0.5, 1.0, 2.0, 3.0):
            lam1, cr = bounds.robd_optimal_cr(m, a)
            worst = max(worst, abs(bounds.robd_cr_upper(m, a, lam1, 0.0) - cr) / cr)
    return worst <= 1e-12, f"max relative gap {worst:.2e}"


def _recursion():
    worst_lim, worst_fp = 0.0, 0.0
    for m in (0.5, 1.0, 2.0, 8.0):
        for a in (1.0, 2.0, 3.0):
            y = bounds.an_fixed_point(m, a)
            worst_lim = max(worst_lim, abs(bounds.an_recursion(m, a, 200) - y))
            worst_fp = max(worst_fp, abs(y - (y + m) / (y + m + a * a)))
    ok = worst_lim <= 1e-9 and worst_fp <= 1e-12
    return ok, f"|a_200 - y| <= {worst_lim:.1e}, residual <= {worst_fp:.1e}"


def _grid_minimizer():
    worst = 0.0
    for m, a in ((1.0, 1.0), (2.0, 2.0), (0.5, 3.0)):
        lam1, _ = bounds.robd_optimal_cr(m, a)
        hi = min(2.0 * lam1, 0.999 * m / (a * a - 1.0)) if a > 1 else 2.0 * lam1
        grid = np.linspace(hi / 1e4, hi, 10_000)
        vals = [bounds.robd_cr_upper(m, a, g, 0.0) for g in grid]
        best = grid[int(np.argmin(vals))]
        worst = max(worst, abs(best - lam1) / (grid[1] - grid[0]))
    return worst <= 1.0, f"offset {worst:.2f} grid steps"


def _eta_star():
    worst = -np.inf
    for m, l, a, lam in ((1.0, 1.0, 0.0, 1.0), (8.0, 8.0, 2.0, 1.0), (1.0, 4.0, 0.5, 0.5)):
        eta = bounds.eta_star(m, l, a, lam)
        worst = max(worst, bounds.optimistic_coeffs(m, l, a, lam, eta)[1])
    return worst <= 1e-9, f"max K2 coefficient at eta* {worst:.2e}"


def _alpha_scaling():
    ratios = [bounds.robd_optimal_cr(1.0, a)[1] / a**2 for a in np.linspace(1.0, 16.0, 61)]
    return max(ratios) <= 3.0, f"max cr/alpha^2 {max(ratios):.3f}"


def _scalar_example():
    got = bounds.scalar_example_bounds(2.0, 8.0)
    want = (2.25, 81 / 32, 153 / 32)
    ok = all(abs(g - w) <= 1e-12 for g, w in zip(got.values(), want))
    return ok, ", ".join(f"{k}={v:g}" for k, v in got.items())


CHECKS = (
    ("optimal ratio for SOCO is the golden ratio", _golden),
    ("upper bound meets lower bound", _upper_meets_lower),
    ("optimal preset balances both branches", _preset_balances),
    ("a_n recursion converges to its fixed point", _recursion),
    ("grid minimizer of the bound matches the preset", _grid_minimizer),
    ("estimation-error coefficient vanishes at eta*", _eta_star),
    ("optimal ratio grows like alpha^2", _alpha_scaling),
    ("scalar example targets", _scalar_example),
)


def run_bound_checks() -> list:
    """``[(name, passed, detail), ...]`` for every check in ``CHECKS``."""
    return [_check(name, fn) for name, fn in CHECKS]
