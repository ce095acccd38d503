import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_canonical_system, random_exact_instance, random_structure
from ocomem.bench.disturbances import generate_disturbance
from ocomem.bounds import scalar_example_bounds
from ocomem.control import CanonicalSystem, ControlCostSpec, reduce_offline, run_controller
from ocomem.errors import NoStableControllerError, SearchSpaceError
from ocomem.model import CostGeometry, OcoInstance, SwitchingStructure, evaluate_trajectory
from ocomem.optimistic import run_lambda_zero
from ocomem.oracles import (
    KKT_TOL,
    LcSearchSpec,
    LinearController,
    best_linear_controller,
    brute_force_oracle,
    closed_loop_costs,
    direct_qp_control,
    offline_optimal_control,
    offline_optimal_oco,
)
from ocomem.robd import RobdParams, run_robd

ONE = SwitchingStructure.identity(1)


# OCO hindsight optimum ---------------------------------------------------------


def test_zero_instance_optimum():
    inst = OcoInstance.exact(SwitchingStructure.identity(2), [CostGeometry.diagonal([1.0, 2.0])] * 4,
                             np.zeros((4, 2)))
    sol = offline_optimal_oco(inst)
    assert sol.cost == 0.0 and np.all(sol.trajectory.y == 0)


def test_single_step_optimum():
    inst = OcoInstance.exact(ONE, [CostGeometry.diagonal([1.0])], [[1.0]])
    sol = offline_optimal_oco(inst)
    assert sol.trajectory.y[0, 0] == pytest.approx(0.5)
    assert sol.cost == pytest.approx(0.25)


def test_brute_force_matches_single_step():
    inst = OcoInstance.exact(ONE, [CostGeometry.diagonal([1.0])], [[1.0]])
    h = 2.0 / 400
    assert brute_force_oracle(inst, -1.0, 1.0, 401) == pytest.approx(0.25, abs=h * h)
    zero = OcoInstance.exact(ONE, [CostGeometry.diagonal([1.0])] * 3, np.zeros((3, 1)))
    assert brute_force_oracle(zero, -1.0, 1.0, 21) == 0.0


def test_brute_force_refinement_never_worse():
    rng = np.random.default_rng(4)
    inst = random_exact_instance(rng, 3, 1, random_structure(rng, 1, 2, 1.5))
    coarse = brute_force_oracle(inst, -3.0, 3.0, 31)
    fine = brute_force_oracle(inst, -3.0, 3.0, 61)  # superset of the coarse grid
    assert fine <= coarse
    assert fine >= offline_optimal_oco(inst).cost - 1e-12


def test_brute_force_refuses_large_spaces():
    inst = OcoInstance.exact(ONE, [CostGeometry.diagonal([1.0])] * 5, np.zeros((5, 1)))
    with pytest.raises(SearchSpaceError):
        brute_force_oracle(inst, -1.0, 1.0, 5)
    wide = OcoInstance.exact(SwitchingStructure.identity(2), [CostGeometry.diagonal([1.0, 1.0])],
                             np.zeros((1, 2)))
    with pytest.raises(SearchSpaceError):
        brute_force_oracle(wide, -1.0, 1.0, 5)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.floats(0.0, 3.0), st.integers(1, 80), st.integers(0, 2**31))
def test_optimum_beats_every_algorithm(d, p, alpha, T, seed):
    rng = np.random.default_rng(seed)
    inst = random_exact_instance(rng, T, d, random_structure(rng, d, p, alpha))
    sol = offline_optimal_oco(inst)
    assert sol.kkt_residual <= KKT_TOL
    assert sol.cost == pytest.approx(evaluate_trajectory(inst, sol.trajectory.y).total, rel=1e-12)
    for cand in (run_robd(inst, RobdParams(1.0)).total, run_lambda_zero(inst).total,
                 evaluate_trajectory(inst, inst.v).total,
                 evaluate_trajectory(inst, sol.trajectory.y + 1e-3 * rng.normal(size=(T, d))).total):
        assert sol.cost <= cand + 1e-10


def test_generic_geometry_falls_back_to_descent():
    rng = np.random.default_rng(8)
    inst = random_exact_instance(rng, 10, 2, random_structure(rng, 2, 2, 1.0))
    gen_steps = []
    for s in inst.steps:
        Q = s.geometry.matrix()
        gen = CostGeometry.generic(lambda y, Q=Q: 0.5 * y @ Q @ y, lambda y, Q=Q: Q @ y,
                                   m=s.geometry.m, l=s.geometry.l)
        gen_steps.append(gen)
    ginst = OcoInstance.exact(inst.structure, gen_steps, inst.v)
    assert offline_optimal_oco(ginst).cost == pytest.approx(offline_optimal_oco(inst).cost, rel=1e-6)


# control hindsight optimum ---------------------------------------------------------


def test_zero_disturbance_control_optimum():
    sysm = CanonicalSystem.double_integrator()
    spec = ControlCostSpec.constant(8.0, 20)
    assert offline_optimal_control(sysm, spec, np.zeros(20)).cost == 0.0
    assert direct_qp_control(sysm, spec, np.zeros(20)) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 25))
def test_three_routes_agree(seed, T):
    rng = np.random.default_rng(seed)
    sysm = random_canonical_system(rng)
    spec = ControlCostSpec(rng.uniform(0.5, 4.0, T + 1))
    w = rng.normal(size=(T, sysm.d))
    z_route = offline_optimal_control(sysm, spec, w)
    oco_route = offline_optimal_oco(reduce_offline(sysm, spec, w)).cost
    dense = direct_qp_control(sysm, spec, w)
    assert z_route.kkt_residual <= KKT_TOL
    assert z_route.cost == pytest.approx(dense, rel=1e-7, abs=1e-12)
    assert oco_route == pytest.approx(dense, rel=1e-7, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_greedy_correction_bound(seed):
    # cancelling each disturbance one step late costs half its square
    sysm = CanonicalSystem.scalar(2.0)
    spec = ControlCostSpec.constant(8.0, 100)
    w = np.random.default_rng(seed).uniform(-1, 1, 100)
    assert offline_optimal_control(sysm, spec, w).cost <= 0.5 * np.sum(w**2)


@pytest.mark.parametrize("T", [5, 50, 500])
def test_constant_disturbance_bound(T):
    # steady input -8/9 keeps x at -1/9; the transient costs at most 100/81
    sysm = CanonicalSystem.scalar(2.0)
    spec = ControlCostSpec.constant(8.0, T)
    opt = offline_optimal_control(sysm, spec, np.ones(T)).cost
    assert opt <= 0.5 * ((8 / 9) * T + 100 / 81)


def test_optimal_control_beats_online_controller():
    sysm = CanonicalSystem.double_integrator()
    spec = ControlCostSpec.constant(8.0, 60)
    w = np.random.default_rng(2).uniform(-1, 1, 60)
    assert offline_optimal_control(sysm, spec, w).cost <= run_controller(sysm, spec, w, None, 1.0).total


# linear controller in hindsight ------------------------------------------------------


def test_scalar_stability_region():
    sysm = CanonicalSystem.scalar(2.0)
    for k, stable in ((1.01, True), (2.0, True), (2.99, True), (1.0, False), (3.0, False), (0.0, False)):
        assert LinearController(np.array([[k]]), sysm).stable is stable


def test_zero_disturbance_picks_smallest_gain():
    sysm = CanonicalSystem.scalar(2.0)
    K, cost = best_linear_controller(sysm, ControlCostSpec.constant(8.0, 20), np.zeros(20))
    assert cost == 0.0
    assert K.stable
    # the stable interval is (1, 3); the smallest-norm grid point sits just above 1
    assert 1.0 < K.K[0, 0] < 1.01


def test_no_stable_gain_raises():
    sysm = CanonicalSystem.scalar(2.0)
    spec = LcSearchSpec(center=np.array([[10.0]]), half_width=1.0)
    with pytest.raises(NoStableControllerError):
        best_linear_controller(sysm, ControlCostSpec.constant(8.0, 5), np.ones(5), spec)


@pytest.mark.parametrize("system", [CanonicalSystem.scalar(2.0), CanonicalSystem.double_integrator()])
def test_best_gain_beats_random_stable_gains(system):
    T = 80
    spec = ControlCostSpec.constant(8.0, T)
    w = np.random.default_rng(6).uniform(-1, 1, T)
    K, cost = best_linear_controller(system, spec, w)
    assert K.stable
    rng = np.random.default_rng(7)
    center = system.A[list(system.rows), :]
    samples = []
    while len(samples) < 100:
        cand = center + rng.uniform(-2, 2, size=center.shape)
        if LinearController(cand, system).stable:
            samples.append(cand)
    costs = closed_loop_costs(system, spec, w, np.array(samples))
    assert cost <= np.min(costs) + 1e-9


def test_closed_loop_cost_includes_final_input():
    sysm = CanonicalSystem.scalar(2.0)
    spec = ControlCostSpec.constant(8.0, 1)
    # x_1 = w_0 = 1, u_1 = -k x_1
    cost = closed_loop_costs(sysm, spec, [1.0], np.array([[[2.0]]]))[0]
    assert cost == pytest.approx(0.5 * 8 + 0.5 * 4)
    assert closed_loop_costs(sysm, spec, [1.0], np.array([[[0.0]]]))[0] == np.inf


@pytest.mark.parametrize("kind", ["iid-uniform", "random-walk"])
def test_linear_controller_floor(kind):
    sysm = CanonicalSystem.scalar(2.0)
    spec = ControlCostSpec.constant(8.0, 200)
    floor = scalar_example_bounds(2.0, 8.0)["lc_floor"]
    for seed in range(3):
        w, _ = generate_disturbance({"kind": kind}, 200, seed)
        _, cost = best_linear_controller(sysm, spec, w)
        # costs carry a factor 1/2 relative to the unhalved floor
        assert cost > 0.5 * floor * np.sum(w**2)
