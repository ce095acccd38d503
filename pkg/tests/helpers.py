"""Random instance builders shared by the test modules."""

import numpy as np

from ocomem.control import CanonicalSystem
from ocomem.model import CostGeometry, EstimationSet, OcoInstance, Step, SwitchingStructure


def random_spd(rng, d, lo=1.0, hi=5.0, pin_min=True):
    """SPD matrix with spectrum in [lo, hi]; the smallest eigenvalue is exactly lo when pinned."""
    eig = rng.uniform(lo, hi, size=d)
    if pin_min:
        eig[0] = lo
    Qm, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return Qm @ np.diag(eig) @ Qm.T


def random_geometry(rng, d, lo=1.0, hi=5.0, pin_min=True):
    if rng.random() < 0.5:
        w = rng.uniform(lo, hi, size=d)
        if pin_min:
            w[rng.integers(d)] = lo
        return CostGeometry.diagonal(w)
    return CostGeometry.dense(random_spd(rng, d, lo, hi, pin_min))


def random_structure(rng, d, p, alpha):
    """Random memory matrices rescaled so the spectral norms sum to ``alpha``."""
    mats = [rng.normal(size=(d, d)) for _ in range(p)]
    raw = SwitchingStructure(tuple(mats)).alpha
    return SwitchingStructure(tuple(m * (alpha / raw) for m in mats))


def random_minimizers(rng, T, d, scale=1.0):
    kind = rng.integers(3)
    if kind == 0:
        return rng.normal(scale=scale, size=(T, d))
    if kind == 1:
        return np.cumsum(rng.normal(scale=0.3 * scale, size=(T, d)), axis=0)
    base = rng.normal(scale=scale, size=(1, d))
    return base + (-1.0) ** np.arange(T)[:, None] * rng.normal(scale=0.2 * scale, size=(1, d))


def random_exact_instance(rng, T, d, structure, m=1.0, l=5.0):
    geoms = [random_geometry(rng, d, m, l) for _ in range(T)]
    return OcoInstance.exact(structure, geoms, random_minimizers(rng, T, d))


def random_ball_instance(rng, T, d, structure, m=1.0, l=5.0, radius=0.5):
    """Each ``v_t`` sits inside a ball whose center is a noisy guess of it."""
    v = random_minimizers(rng, T, d)
    steps = []
    for t in range(T):
        r = rng.uniform(0.0, radius)
        u = rng.normal(size=d)
        u *= rng.uniform(0, r) / max(np.linalg.norm(u), 1e-12)
        steps.append(Step(random_geometry(rng, d, m, l), EstimationSet.ball(v[t] - u, r), v[t]))
    return OcoInstance(structure, tuple(steps))


def random_canonical_system(rng, n_max=5, d_max=2, scale=0.5):
    d = int(rng.integers(1, d_max + 1))
    n = int(rng.integers(d, n_max + 1))
    cuts = np.sort(rng.choice(np.arange(1, n), size=d - 1, replace=False)) if d > 1 else np.array([], int)
    bounds_ = np.concatenate([[0], cuts, [n]])
    block = np.diff(bounds_)
    rows = np.cumsum(block) - 1
    A = np.zeros((n, n))
    for r in range(n):
        if r in rows:
            A[r] = rng.uniform(-scale, scale, size=n)
        else:
            A[r, r + 1] = 1.0
    B = np.zeros((n, d))
    for j, k in enumerate(rows):
        B[k, j] = 1.0
    return CanonicalSystem(A, B)
