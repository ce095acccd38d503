import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_geometry
from ocomem.errors import ContractError, ConvergenceError
from ocomem.inner import (
    envelope_value,
    optimality_residual,
    optimistic_v,
    project,
    robd_argmin,
)
from ocomem.model import CostGeometry, EstimationSet


def test_robd_argmin_examples():
    g1 = CostGeometry.diagonal([1.0])
    assert robd_argmin(g1, [1.0], 1.0, 0.0, [0.0]).minimizer[0] == pytest.approx(0.5)
    g2 = CostGeometry.diagonal([2.0])
    assert robd_argmin(g2, [1.0], 1.0, 1.0, [2.0]).minimizer[0] == pytest.approx(1.25)


def test_robd_argmin_unregularized_returns_minimizer():
    rng = np.random.default_rng(1)
    for _ in range(5):
        g = random_geometry(rng, 3)
        v = rng.normal(size=3)
        assert np.allclose(robd_argmin(g, v, 0.0, 0.0, rng.normal(size=3)).minimizer, v)


def test_robd_argmin_rejects_negative_weights():
    with pytest.raises(ContractError):
        robd_argmin(CostGeometry.diagonal([1.0]), [0.0], -1.0, 0.0, [0.0])


def test_robd_argmin_generic_matches_closed_form():
    Q = np.array([[3.0, 1.0], [1.0, 2.0]])
    g = CostGeometry.dense(Q)
    gen = CostGeometry.generic(lambda y: 0.5 * y @ Q @ y, lambda y: Q @ y, m=g.m, l=g.l)
    v, s = np.array([1.0, -2.0]), np.array([0.5, 0.5])
    a = robd_argmin(g, v, 0.7, 0.3, s)
    b = robd_argmin(gen, v, 0.7, 0.3, s)
    assert b.grad_norm <= 1e-10
    assert np.allclose(a.minimizer, b.minimizer, atol=1e-9)


def test_robd_argmin_reports_nonconvergence():
    w = np.array([1.0, 100.0])
    g = CostGeometry.generic(lambda y: 0.5 * y @ (w * y), lambda y: w * y, m=1.0, l=100.0)
    with pytest.raises(ConvergenceError) as info:
        robd_argmin(g, [100.0, 1.0], 1.0, 0.0, [0.0, 0.0], max_iter=3)
    assert info.value.report.iterations == 3


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 4), st.floats(0, 10), st.floats(0, 10), st.integers(0, 2**31))
def test_robd_argmin_stationary(d, l1, l2, seed):
    rng = np.random.default_rng(seed)
    g = random_geometry(rng, d)
    v, s = rng.normal(size=d), rng.normal(size=d)
    rep = robd_argmin(g, v, l1, l2, s)
    Q = g.matrix()
    lhs = (Q + (l1 + l2) * np.eye(d)) @ rep.minimizer
    rhs = Q @ v + l1 * s + l2 * v
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs)) * 10
    assert rep.grad_norm <= 1e-9


def test_optimistic_v_examples():
    g = CostGeometry.diagonal([8.0])
    assert optimistic_v(g, 1.0, [0.9], EstimationSet.singleton([0.3]))[0] == 0.3
    assert optimistic_v(g, 1.0, [0.5], EstimationSet.box([-0.2], [0.2]))[0] == pytest.approx(0.2)
    v = optimistic_v(CostGeometry.diagonal([3.0]), 2.0, [-1.7], EstimationSet.whole(1))
    assert v[0] == pytest.approx(-1.7)
    assert envelope_value(CostGeometry.diagonal([3.0]), 2.0, [-1.7], v) == pytest.approx(0.0)


def test_optimistic_v_needs_positive_lambda():
    with pytest.raises(ContractError):
        optimistic_v(CostGeometry.diagonal([1.0]), 0.0, [0.0], EstimationSet.whole(1))


def test_envelope_value_matches_inner_minimum():
    rng = np.random.default_rng(5)
    g = random_geometry(rng, 3)
    s, v = rng.normal(size=3), rng.normal(size=3)
    inner = robd_argmin(g, v, 1.3, 0.0, s).value
    assert envelope_value(g, 1.3, s, v) == pytest.approx(inner, rel=1e-10)


def _random_set(rng, d):
    c = rng.normal(size=d)
    k = rng.integers(3)
    if k == 0:
        return EstimationSet.ball(c, rng.uniform(0.1, 1.0))
    if k == 1:
        return EstimationSet.box(c - rng.uniform(0.1, 1, d), c + rng.uniform(0.1, 1, d))
    return EstimationSet.singleton(c)


def _sample_in(rng, omega, d):
    if omega.kind == "singleton":
        return omega.point
    if omega.kind == "box":
        return rng.uniform(omega.lo, omega.hi)
    u = rng.normal(size=d)
    return omega.center + u / np.linalg.norm(u) * omega.radius * rng.uniform() ** (1 / d)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.floats(0.1, 10), st.integers(0, 2**31))
def test_optimistic_v_is_optimal_over_set(d, lam, seed):
    rng = np.random.default_rng(seed)
    g = random_geometry(rng, d)
    omega = _random_set(rng, d)
    s = rng.normal(scale=3.0, size=d)
    v = optimistic_v(g, lam, s, omega)
    assert omega.contains(v, tol=1e-9)
    assert optimality_residual(g, lam, s, omega, v) <= 1e-8
    best = envelope_value(g, lam, s, v)
    for _ in range(100):
        assert best <= envelope_value(g, lam, s, _sample_in(rng, omega, d)) + 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.floats(0.1, 10), st.integers(0, 2**31))
def test_singleton_is_its_own_estimate(d, lam, seed):
    rng = np.random.default_rng(seed)
    pt = rng.normal(size=d)
    v = optimistic_v(random_geometry(rng, d), lam, rng.normal(size=d), EstimationSet.singleton(pt))
    assert np.array_equal(v, pt)


def test_project_delegates():
    assert np.allclose(project(EstimationSet.box([-1.0], [1.0]), [4.0]), [1.0])
