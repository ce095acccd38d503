"""Experiment runner, result emission and the canned benchmark settings."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..control import (
    CanonicalSystem,
    ControlCostSpec,
    run_controller,
    run_lambda_zero_controller,
    run_robd_controller,
)
from ..errors import InconsistentInstanceError
from ..model import CostGeometry, EstimationSet, OcoInstance, Step, SwitchingStructure
from ..oracles import LcSearchSpec, best_linear_controller, offline_optimal_control
from .config import AlgorithmSpec, ExperimentConfig
from .disturbances import check_membership, generate_disturbance

CSV_COLUMNS = ("t", "algorithm", "lambda", "seed", "cost_alg", "cost_opt", "cost_lc")
FIGURE1_LAMBDAS = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class ResultRow:
    """One (algorithm, setting, seed) cell. ``t`` is the horizon length."""

    experiment: str
    t: int
    algorithm: str
    lam: float
    seed: int
    cost_alg: float
    cost_opt: float
    cost_lc: float
    wall_time: float = 0.0
    error: str = ""

    @property
    def ratio_opt(self) -> float:
        return self.cost_alg / self.cost_opt if self.cost_opt > 0 else float("nan")

    @property
    def ratio_lc(self) -> float:
        return self.cost_alg / self.cost_lc if self.cost_lc > 0 else float("nan")

    def csv_fields(self) -> list:
        return [self.t, self.algorithm, repr(float(self.lam)), self.seed,
                repr(float(self.cost_alg)), repr(float(self.cost_opt)), repr(float(self.cost_lc))]


def _run_algorithm(alg: AlgorithmSpec, setting: str, system, costspec, w, W):
    """Closed-loop cost of one algorithm, or None when it does not apply to the setting."""
    W_used = None if setting == "known" else W
    if alg.name == "optimistic-robd":
        return run_controller(system, costspec, w, W_used, alg.lam).total
    if alg.name == "robd":
        if setting != "known":
            return None
        return run_robd_controller(system, costspec, w, alg.lam, alg.lambda2).total
    return run_lambda_zero_controller(system, costspec, w, W_used).total


def run_seed(system: CanonicalSystem, costspec: ControlCostSpec, w, W, algorithms, settings,
             seed: int, experiment: str = "experiment", lc_spec: LcSearchSpec | None = None) -> list:
    """All rows for a single disturbance realization.

    The hindsight optimum and best linear controller depend only on ``w`` and
    are computed once.
    """
    bad = check_membership(w, W)
    if bad is not None:
        raise InconsistentInstanceError(f"seed {seed}: w_{bad} lies outside W_{bad}")
    opt = offline_optimal_control(system, costspec, w).cost
    _, lc = best_linear_controller(system, costspec, w, lc_spec)
    rows = []
    for setting in settings:
        for alg in algorithms:
            start = time.perf_counter()
            cost = _run_algorithm(alg, setting, system, costspec, w, W)
            if cost is None:
                continue
            rows.append(ResultRow(experiment, costspec.T, f"{alg.name}-{setting}", alg.lam, seed,
                                  cost, opt, lc, time.perf_counter() - start))
    return rows


def run_experiment(config: ExperimentConfig, on_row=None) -> list:
    """Run every (seed, setting, algorithm) cell of a configuration.

    ``on_row`` is called with each finished row, so callers can flush partial
    results if a later cell fails.
    """
    rows = []
    for seed in config.seeds:
        w, W = generate_disturbance(config.disturbance, config.T, seed, config.system.d,
                                    config.estimation)
        for row in run_seed(config.system, config.costspec, w, W, config.algorithms,
                            config.settings, seed, config.id, config.lc_search):
            rows.append(row)
            if on_row is not None:
                on_row(row)
    return rows


# --------------------------------------------------------------------------
# emission
# --------------------------------------------------------------------------


def rows_to_csv(rows, error: str | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(r.csv_fields())
    if error:
        buf.write(f"# error: {error}\n")
    return buf.getvalue()


def rows_to_json(rows, error: str | None = None) -> str:
    payload = {"columns": list(CSV_COLUMNS), "rows": [asdict(r) for r in rows]}
    if error:
        payload["error"] = error
    return json.dumps(payload, indent=2)


def write_rows(rows, path, fmt: str = "csv", error: str | None = None) -> None:
    text = rows_to_csv(rows, error) if fmt == "csv" else rows_to_json(rows, error)
    Path(path).write_text(text, encoding="utf-8")


def median_by(rows, key=lambda r: (r.algorithm, r.lam), value=lambda r: r.cost_alg) -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(key(r), []).append(value(r))
    return {k: float(np.median(v)) for k, v in groups.items()}


# --------------------------------------------------------------------------
# canned settings
# --------------------------------------------------------------------------

FIGURE1_PANELS = {
    "scalar_iid": ("scalar-a2q8", {"kind": "iid-uniform", "lo": -1.0, "hi": 1.0}),
    "scalar_random_walk": ("scalar-a2q8", {"kind": "random-walk", "lo": -0.2, "hi": 0.2}),
    "double_integrator_iid": ("double-integrator", {"kind": "iid-uniform", "lo": -1.0, "hi": 1.0}),
    "double_integrator_random_walk": ("double-integrator", {"kind": "random-walk", "lo": -0.2, "hi": 0.2}),
}


def figure1_system(preset: str) -> CanonicalSystem:
    return CanonicalSystem.scalar(2.0) if preset == "scalar-a2q8" else CanonicalSystem.double_integrator()


def run_figure1_panel(panel: str, seeds=range(10), lambdas=FIGURE1_LAMBDAS, T: int = 200, q: float = 8.0) -> list:
    """Optimistic ROBD with known and unknown disturbances on one panel's setting."""
    preset, dist = FIGURE1_PANELS[panel]
    system = figure1_system(preset)
    costspec = ControlCostSpec.constant(q, T)
    algs = [AlgorithmSpec("optimistic-robd", float(lam)) for lam in lambdas]
    rows = []
    for seed in seeds:
        w, W = generate_disturbance(dist, T, seed, system.d)
        rows.extend(run_seed(system, costspec, w, W, algs, ("known", "unknown"), seed, panel))
    return rows


def build_lower_bound_instance(m: float, m_prime: float, alpha: float, n: int) -> OcoInstance:
    """Scalar instance with ``n`` rounds of ``m/2 y^2`` followed by ``m'/2 (y - 1)^2``.

    Memory is ``C_1 = [alpha]``; every minimizer is revealed exactly.
    """
    structure = SwitchingStructure((np.array([[float(alpha)]]),))
    steps = [Step(CostGeometry.diagonal([m]), EstimationSet.singleton([0.0]), np.zeros(1))
             for _ in range(n)]
    steps.append(Step(CostGeometry.diagonal([m_prime]), EstimationSet.singleton([1.0]), np.ones(1)))
    return OcoInstance(structure, tuple(steps))
