import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ocomem.errors import ContractError, InconsistentInstanceError
from ocomem.model import (
    CostGeometry,
    EstimationSet,
    OcoInstance,
    Step,
    SwitchingStructure,
    compute_alpha,
    evaluate_trajectory,
    switching_cost,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vec(d):
    return arrays(np.float64, (d,), elements=finite)


# switching cost ------------------------------------------------------------


def test_switching_cost_identity_memory_equal_points():
    s = SwitchingStructure.identity(2)
    assert switching_cost(s, [np.array([3.0, -1.0]), np.array([3.0, -1.0])]) == 0.0


def test_switching_cost_scalar():
    s = SwitchingStructure((np.array([[2.0]]),))
    assert switching_cost(s, [np.array([3.0]), np.array([1.0])]) == pytest.approx(0.5)


def test_switching_cost_second_difference_annihilates_constants():
    s = SwitchingStructure((np.array([[2.0]]), np.array([[-1.0]])))
    assert switching_cost(s, [np.ones(1)] * 3) == 0.0


def test_switching_cost_rejects_bad_window():
    s = SwitchingStructure.identity(2)
    with pytest.raises(ContractError):
        switching_cost(s, [np.zeros(2)])
    with pytest.raises(ContractError):
        switching_cost(s, [np.zeros(3), np.zeros(2)])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.data())
def test_switching_cost_nonnegative_and_zero_on_prediction(d, p, data):
    mats = [data.draw(arrays(np.float64, (d, d), elements=finite)) for _ in range(p)]
    s = SwitchingStructure(tuple(mats))
    hist = [data.draw(vec(d)) for _ in range(p)]
    y = data.draw(vec(d))
    assert switching_cost(s, [y] + hist) >= 0
    assert switching_cost(s, [s.memory_sum(hist)] + hist) == pytest.approx(0.0, abs=1e-12)


# alpha ----------------------------------------------------------------------


def test_alpha_identity():
    for d in (1, 2, 4):
        assert compute_alpha(SwitchingStructure.identity(d)) == pytest.approx(1.0)


def test_alpha_scalar_pair():
    assert compute_alpha([np.array([[2.0]]), np.array([[-1.0]])]) == pytest.approx(3.0)


def test_alpha_binomial_memory():
    # squared p-th difference has alpha = 2^p - 1
    for p in (1, 2, 3, 4):
        assert SwitchingStructure.binomial(p, d=2).alpha == pytest.approx(2**p - 1)


def test_alpha_matches_svd():
    rng = np.random.default_rng(0)
    mats = [rng.normal(size=(3, 3)) for _ in range(3)]
    want = sum(np.linalg.svd(m, compute_uv=False)[0] for m in mats)
    assert SwitchingStructure(tuple(mats)).alpha == pytest.approx(want, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.data())
def test_alpha_sign_flip_invariant(d, p, data):
    mats = [data.draw(arrays(np.float64, (d, d), elements=finite)) for _ in range(p)]
    flips = data.draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=p, max_size=p))
    a = compute_alpha(mats)
    b = compute_alpha([f * m for f, m in zip(flips, mats)])
    assert a == pytest.approx(b, abs=1e-12)


def test_structure_rejects_mismatched_shapes():
    with pytest.raises(ContractError):
        SwitchingStructure((np.eye(2), np.eye(3)))
    with pytest.raises(ContractError):
        SwitchingStructure(())


# geometry -------------------------------------------------------------------


def test_dense_geometry_moduli():
    Q = np.array([[2.0, 1.0], [1.0, 2.0]])
    g = CostGeometry.dense(Q)
    assert g.m == pytest.approx(1.0, abs=1e-10)
    assert g.l == pytest.approx(3.0, abs=1e-10)
    assert g.value(np.zeros(2)) == 0.0
    assert np.all(g.grad(np.zeros(2)) == 0.0)


def test_geometry_validation():
    with pytest.raises(ContractError):
        CostGeometry.diagonal([1.0, 0.0])
    assert CostGeometry.diagonal([1.0, 0.0], allow_degenerate=True).degenerate
    with pytest.raises(ContractError):
        CostGeometry.dense([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ContractError):
        CostGeometry.dense([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ContractError):
        CostGeometry.generic(lambda y: 0.0, lambda y: y, m=2.0, l=1.0)


# estimation sets --------------------------------------------------------------


def test_projection_examples():
    assert np.allclose(EstimationSet.ball([0.0, 0.0], 1.0).project([3.0, 4.0]), [0.6, 0.8])
    assert np.allclose(EstimationSet.box([-1, -1], [1, 1]).project([2.0, 0.5]), [1.0, 0.5])
    assert np.allclose(EstimationSet.singleton([7.0]).project([-3.0]), [7.0])
    assert np.allclose(EstimationSet.whole(2).project([5.0, -5.0]), [5.0, -5.0])


def _sets(d):
    c = vec(d)
    return st.one_of(
        c.map(EstimationSet.singleton),
        st.tuples(c, arrays(np.float64, (d,), elements=st.floats(0, 5))).map(
            lambda t: EstimationSet.box(t[0], t[0] + t[1])),
        st.tuples(c, st.floats(0, 5)).map(lambda t: EstimationSet.ball(*t)),
        st.just(EstimationSet.whole(d)),
    )


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3).flatmap(lambda d: st.tuples(_sets(d), vec(d))))
def test_projection_idempotent_member(args):
    omega, x = args
    p = omega.project(x)
    assert omega.contains(p)
    assert np.allclose(omega.project(p), p, atol=1e-12)
    if omega.kind == "singleton":
        assert np.array_equal(p, omega.point)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda d: st.tuples(_sets(d), vec(d), vec(d))))
def test_reflect_shift_maps_members(args):
    omega, x, off = args
    w = omega.project(x)
    assert omega.reflect_shift(off).contains(off - w)


def test_set_validation():
    with pytest.raises(ContractError):
        EstimationSet.box([1.0], [0.0])
    with pytest.raises(ContractError):
        EstimationSet.ball([0.0], -1.0)


# instances and trajectories ---------------------------------------------------


def test_instance_membership_check():
    s = SwitchingStructure.identity(1)
    g = CostGeometry.diagonal([1.0])
    with pytest.raises(InconsistentInstanceError):
        OcoInstance(s, (Step(g, EstimationSet.box([0.0], [1.0]), np.array([2.0])),))


def test_evaluate_trajectory_follow_minimizer():
    s = SwitchingStructure.identity(2)
    v = np.array([1.5, -2.0])
    inst = OcoInstance.exact(s, [CostGeometry.diagonal([1.0, 3.0])] * 4, [v] * 4)
    tr = evaluate_trajectory(inst, np.tile(v, (4, 1)))
    assert tr.total == pytest.approx(0.5 * v @ v)


def test_evaluate_trajectory_zero():
    s = SwitchingStructure.identity(1)
    inst = OcoInstance.exact(s, [CostGeometry.diagonal([1.0])] * 3, np.zeros((3, 1)))
    assert evaluate_trajectory(inst, np.zeros((3, 1))).total == 0.0


def test_evaluate_trajectory_hand_values():
    s = SwitchingStructure.identity(1)
    inst = OcoInstance.exact(s, [CostGeometry.diagonal([1.0])] * 2, [[1.0], [1.0]])
    tr = evaluate_trajectory(inst, [0.5, 0.75])
    assert np.allclose(tr.hitting, [0.125, 0.03125])
    assert np.allclose(tr.switching, [0.125, 0.03125])
    assert tr.cumulative[-1] == pytest.approx(tr.total)


def test_evaluate_trajectory_reevaluation_consistent():
    rng = np.random.default_rng(3)
    s = SwitchingStructure((rng.normal(size=(2, 2)), rng.normal(size=(2, 2))))
    inst = OcoInstance.exact(s, [CostGeometry.diagonal([1.0, 2.0])] * 6, rng.normal(size=(6, 2)))
    ys = rng.normal(size=(6, 2))
    tr = evaluate_trajectory(inst, ys)
    assert np.all(tr.hitting >= 0) and np.all(tr.switching >= 0)
    again = evaluate_trajectory(inst, tr.y)
    assert again.total == pytest.approx(tr.total, abs=1e-9)
    with pytest.raises(ContractError):
        evaluate_trajectory(inst, ys[:5])


def test_json_roundtrip():
    s = SwitchingStructure((np.array([[2.0, 0.1], [0.0, 1.0]]), -np.eye(2)))
    steps = (
        Step(CostGeometry.diagonal([1.0, 2.0]), EstimationSet.ball([0.0, 0.0], 1.0), np.array([0.5, 0.5])),
        Step(CostGeometry.dense([[2.0, 0.5], [0.5, 1.0]]), EstimationSet.box([-1, -1], [1, 1]), np.zeros(2)),
        Step(CostGeometry.diagonal([1.0, 1.0]), EstimationSet.whole(2), np.array([3.0, 4.0])),
        Step(CostGeometry.diagonal([1.0, 1.0]), EstimationSet.singleton([1.0, 1.0]), np.array([1.0, 1.0])),
    )
    inst = OcoInstance(s, steps)
    back = OcoInstance.from_json(inst.to_json())
    assert back.T == 4 and back.structure.p == 2
    assert np.array_equal(back.v, inst.v)
    ys = np.arange(8.0).reshape(4, 2)
    assert evaluate_trajectory(back, ys).total == evaluate_trajectory(inst, ys).total
    assert json.loads(inst.to_json())["steps"][0]["omega"]["kind"] == "ball"


def test_json_rejects_inconsistent_header():
    data = {"T": 2, "C": [[[1.0]]], "steps": [{"diag": [1.0], "omega": {"kind": "whole"}, "v": [0.0]}]}
    with pytest.raises(ContractError):
        OcoInstance.from_dict(data)
    with pytest.raises(ContractError):
        OcoInstance.from_dict({"C": [[[1.0]]]})
