"""Seeded disturbance sequences and their per-step estimation sets.

Random draws use numpy's ``Philox`` counter-based bit generator, whose stream
for a given seed is fixed across platforms and numpy releases.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..model import EstimationSet

DISTURBANCE_KINDS = ("iid-uniform", "random-walk", "constant", "alternating", "file")
ESTIMATION_KINDS = ("exact", "box-around-previous", "fixed-box", "ball", "none")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _sample(spec: dict, T: int, d: int, seed: int) -> np.ndarray:
    kind = spec.get("kind")
    if kind == "iid-uniform":
        lo, hi = float(spec.get("lo", -1.0)), float(spec.get("hi", 1.0))
        return make_rng(seed).uniform(lo, hi, size=(T, d))
    if kind == "random-walk":
        lo, hi = float(spec.get("lo", -0.2)), float(spec.get("hi", 0.2))
        steps = make_rng(seed).uniform(lo, hi, size=(T, d))
        return np.cumsum(steps, axis=0)
    if kind == "constant":
        w = np.broadcast_to(np.asarray(spec.get("w", 1.0), dtype=float), (d,))
        return np.tile(w, (T, 1))
    if kind == "alternating":
        w = np.broadcast_to(np.asarray(spec.get("w", 1.0), dtype=float), (d,))
        signs = (-1.0) ** np.arange(T)
        return signs[:, None] * w[None, :]
    if kind == "file":
        path = Path(spec.get("path", ""))
        if not path.is_file():
            raise ConfigError(f"disturbance file not found: {path}")
        try:
            data = np.loadtxt(path, delimiter=None if path.suffix != ".csv" else ",", ndmin=2)
        except ValueError as exc:
            raise ConfigError(f"malformed disturbance file {path}: {exc}") from None
        if data.shape[1] != d and data.size == T * d:
            data = data.reshape(T, d)
        if data.shape[0] < T or data.shape[1] != d:
            raise ConfigError(f"disturbance file {path} has shape {data.shape}, need ({T}, {d})")
        return data[:T]
    raise ConfigError(f"unknown disturbance kind {kind!r}; expected one of {DISTURBANCE_KINDS}")


def default_estimation(spec: dict) -> dict:
    """Estimation sets implied by the disturbance law itself."""
    kind = spec.get("kind")
    if kind == "iid-uniform":
        return {"kind": "fixed-box", "lo": spec.get("lo", -1.0), "hi": spec.get("hi", 1.0)}
    if kind == "random-walk":
        return {"kind": "box-around-previous", "lo": spec.get("lo", -0.2), "hi": spec.get("hi", 0.2)}
    return {"kind": "exact"}


def estimation_sets(w: np.ndarray, est: dict) -> list:
    """Per-step sets ``W_t`` for a realization; ``w_{-1}`` is taken as zero."""
    T, d = w.shape
    kind = est.get("kind")
    prev = np.vstack([np.zeros((1, d)), w[:-1]])
    if kind == "exact":
        return [EstimationSet.singleton(wt) for wt in w]
    if kind == "box-around-previous":
        r = est.get("radius")
        lo = -float(r) if r is not None else float(est.get("lo", -0.2))
        hi = float(r) if r is not None else float(est.get("hi", 0.2))
        return [EstimationSet.box(pt + lo, pt + hi) for pt in prev]
    if kind == "fixed-box":
        lo = np.broadcast_to(np.asarray(est.get("lo", -1.0), dtype=float), (d,))
        hi = np.broadcast_to(np.asarray(est.get("hi", 1.0), dtype=float), (d,))
        box = EstimationSet.box(lo, hi)
        return [box] * T
    if kind == "ball":
        r = float(est.get("radius", 0.2))
        return [EstimationSet.ball(pt, r) for pt in prev]
    if kind == "none":
        return [EstimationSet.whole(d)] * T
    raise ConfigError(f"unknown estimation kind {kind!r}; expected one of {ESTIMATION_KINDS}")


def generate_disturbance(spec: dict, T: int, seed: int, d: int = 1, estimation: dict | None = None):
    """Draw ``w_0 .. w_{T-1}`` and the matching estimation sets.

    Parameters
    ----------
    spec : dict
        ``{"kind": ...}`` with kind-specific fields (``lo``/``hi``, ``w``, ``path``).
    T, seed, d : int
    estimation : dict, optional
        ``{"kind": ...}``; defaults to the sets implied by the law.

    Returns
    -------
    (w, W) : ((T, d) array, list of EstimationSet)
    """
    w = _sample(spec, T, d, seed)
    W = estimation_sets(w, estimation or default_estimation(spec))
    return w, W


def check_membership(w, W) -> int | None:
    """Index of the first ``w_t`` outside ``W_t``, or None."""
    for t, (wt, Wt) in enumerate(zip(w, W)):
        if not Wt.contains(wt):
            return t
    return None
