"""Data model for online convex optimization with structured memory.

A round ``t`` charges a hitting cost ``h_t(y_t - v_t)`` plus the switching cost
``0.5 * ||y_t - sum_i C_i y_{t-i}||^2``. Decisions before the first round are
fixed at zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError, InconsistentInstanceError

MEMBERSHIP_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def spectral_norm(M: np.ndarray) -> float:
    """Largest singular value, from the symmetric eigenproblem of M^T M."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    eig = np.linalg.eigvalsh(M.T @ M)
    return float(np.sqrt(max(eig[-1], 0.0)))


# --------------------------------------------------------------------------
# switching structure
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SwitchingStructure:
    """Memory matrices ``C_1 .. C_p`` of the switching cost.

    ``alpha`` is always recomputed from ``C`` as the sum of spectral norms.
    """

    C: tuple
    alpha: float = field(init=False)

    def __post_init__(self):
        mats = tuple(_frozen(np.atleast_2d(c)) for c in self.C)
        if len(mats) < 1:
            raise ContractError("switching structure needs p >= 1 memory matrices")
        d = mats[0].shape[0]
        for i, c in enumerate(mats, start=1):
            if c.shape != (d, d):
                raise ContractError(f"C_{i} has shape {c.shape}, expected ({d}, {d})")
        object.__setattr__(self, "C", mats)
        object.__setattr__(self, "alpha", compute_alpha(mats))

    @property
    def p(self) -> int:
        return len(self.C)

    @property
    def d(self) -> int:
        return self.C[0].shape[0]

    @classmethod
    def identity(cls, d: int) -> "SwitchingStructure":
        """SOCO memory: p = 1, C_1 = I."""
        return cls((np.eye(d),))

    @classmethod
    def binomial(cls, p: int, d: int = 1) -> "SwitchingStructure":
        """Memory whose switching cost is the squared p-th finite difference."""
        from math import comb

        mats = [(-1) ** (i + 1) * comb(p, i) * np.eye(d) for i in range(1, p + 1)]
        return cls(tuple(mats))

    def memory_sum(self, history: Sequence[np.ndarray]) -> np.ndarray:
        """``sum_i C_i y_{t-i}`` with ``history = [y_{t-1}, ..., y_{t-p}]``."""
        if len(history) != self.p:
            raise ContractError(f"history has length {len(history)}, expected p={self.p}")
        s = np.zeros(self.d)
        for c, y in zip(self.C, history):
            y = np.asarray(y, dtype=float)
            if y.shape != (self.d,):
                raise ContractError(f"history entry has shape {y.shape}, expected ({self.d},)")
            s += c @ y
        return s


def compute_alpha(C: Iterable[np.ndarray] | SwitchingStructure) -> float:
    """Sum of spectral norms of the memory matrices."""
    if isinstance(C, SwitchingStructure):
        C = C.C
    return float(sum(spectral_norm(c) for c in C))


def switching_cost(structure: SwitchingStructure, window: Sequence[np.ndarray]) -> float:
    """``0.5 * ||y_t - sum_i C_i y_{t-i}||^2`` for ``window = [y_t, ..., y_{t-p}]``."""
    if len(window) != structure.p + 1:
        raise ContractError(
            f"window has length {len(window)}, expected p+1={structure.p + 1}"
        )
    y_t = np.asarray(window[0], dtype=float)
    if y_t.shape != (structure.d,):
        raise ContractError(f"y_t has shape {y_t.shape}, expected ({structure.d},)")
    r = y_t - structure.memory_sum(window[1:])
    return 0.5 * float(r @ r)


# --------------------------------------------------------------------------
# hitting-cost geometry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CostGeometry:
    """Hitting-cost shape ``h`` with minimizer at the origin and ``h(0) = 0``.

    Quadratic kinds store ``Q`` so that ``h(y) = 0.5 * y^T Q y``. The
    ``diagonal`` kind keeps only the diagonal in ``weights``. ``generic``
    geometries carry their own value/gradient callables and declared moduli.
    """

    kind: str
    m: float
    l: float
    weights: np.ndarray | None = None
    Q: np.ndarray | None = None
    value_fn: Callable | None = field(default=None, compare=False, repr=False)
    grad_fn: Callable | None = field(default=None, compare=False, repr=False)

    @classmethod
    def diagonal(cls, weights, allow_degenerate: bool = False) -> "CostGeometry":
        w = _frozen(np.atleast_1d(weights))
        if w.ndim != 1:
            raise ContractError("diagonal weights must be a vector")
        if np.any(w < 0) or (not allow_degenerate and np.any(w <= 0)):
            raise ContractError(f"diagonal weights must be positive, got {w}")
        return cls("diagonal", float(w.min()), float(w.max()), weights=w)

    @classmethod
    def dense(cls, Q) -> "CostGeometry":
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise ContractError(f"Q must be square, got {Q.shape}")
        if not np.allclose(Q, Q.T, atol=1e-12, rtol=1e-12):
            raise ContractError("Q must be symmetric")
        Q = _frozen(0.5 * (Q + Q.T))
        eig = np.linalg.eigvalsh(Q)
        if eig[0] <= 0:
            raise ContractError(f"Q must be positive definite, min eigenvalue {eig[0]}")
        return cls("dense", float(eig[0]), float(eig[-1]), Q=Q)

    @classmethod
    def generic(cls, value_fn, grad_fn, m: float, l: float) -> "CostGeometry":
        if not (m > 0 and l >= m):
            raise ContractError(f"need 0 < m <= l, got m={m}, l={l}")
        return cls("generic", float(m), float(l), value_fn=value_fn, grad_fn=grad_fn)

    @property
    def is_quadratic(self) -> bool:
        return self.kind in ("diagonal", "dense")

    @property
    def degenerate(self) -> bool:
        """True when some diagonal weight is zero (strong convexity lost)."""
        return self.m <= 0

    @property
    def d(self) -> int | None:
        if self.kind == "diagonal":
            return self.weights.shape[0]
        if self.kind == "dense":
            return self.Q.shape[0]
        return None

    def matrix(self) -> np.ndarray:
        if self.kind == "diagonal":
            return np.diag(self.weights)
        if self.kind == "dense":
            return np.array(self.Q)
        raise ContractError("generic geometry has no Hessian matrix")

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if self.kind == "diagonal":
            return 0.5 * float(np.sum(self.weights * y * y))
        if self.kind == "dense":
            return 0.5 * float(y @ self.Q @ y)
        return float(self.value_fn(y))

    def grad(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind == "diagonal":
            return self.weights * y
        if self.kind == "dense":
            return self.Q @ y
        return np.asarray(self.grad_fn(y), dtype=float)


# --------------------------------------------------------------------------
# estimation sets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimationSet:
    """Convex set known to contain the round's true minimizer.

    One of ``singleton``, ``box``, ``ball`` or ``whole``. Unused fields are
    ``None``.
    """

    kind: str
    dim: int
    point: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    radius: float | None = None

    @classmethod
    def singleton(cls, v) -> "EstimationSet":
        v = _frozen(np.atleast_1d(v))
        return cls("singleton", v.shape[0], point=v)

    @classmethod
    def box(cls, lo, hi) -> "EstimationSet":
        lo, hi = _frozen(np.atleast_1d(lo)), _frozen(np.atleast_1d(hi))
        if lo.shape != hi.shape:
            raise ContractError("box bounds differ in shape")
        if np.any(lo > hi):
            raise ContractError(f"box needs lo <= hi, got lo={lo}, hi={hi}")
        return cls("box", lo.shape[0], lo=lo, hi=hi)

    @classmethod
    def ball(cls, center, radius: float) -> "EstimationSet":
        if radius < 0:
            raise ContractError(f"ball radius must be >= 0, got {radius}")
        c = _frozen(np.atleast_1d(center))
        return cls("ball", c.shape[0], point=c, radius=float(radius))

    @classmethod
    def whole(cls, d: int) -> "EstimationSet":
        return cls("whole", int(d))

    @property
    def center(self) -> np.ndarray | None:
        return self.point if self.kind == "ball" else None

    def diameter(self) -> float:
        if self.kind == "singleton":
            return 0.0
        if self.kind == "box":
            return float(np.linalg.norm(self.hi - self.lo))
        if self.kind == "ball":
            return 2.0 * self.radius
        return float("inf")

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ContractError(f"point has shape {x.shape}, expected ({self.dim},)")
        if self.kind == "singleton":
            return bool(np.linalg.norm(x - self.point) <= tol)
        if self.kind == "box":
            return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))
        if self.kind == "ball":
            return bool(np.linalg.norm(x - self.point) <= self.radius + tol)
        return True

    def project(self, x) -> np.ndarray:
        """Euclidean projection onto the set."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ContractError(f"point has shape {x.shape}, expected ({self.dim},)")
        if self.kind == "singleton":
            return np.array(self.point)
        if self.kind == "box":
            return np.clip(x, self.lo, self.hi)
        if self.kind == "ball":
            r = x - self.point
            dist = np.linalg.norm(r)
            if dist <= self.radius:
                return np.array(x)
            return self.point + r * (self.radius / dist)
        return np.array(x)

    def reflect_shift(self, offset) -> "EstimationSet":
        """The image ``{offset - w : w in self}``."""
        offset = np.asarray(offset, dtype=float)
        if self.kind == "singleton":
            return EstimationSet.singleton(offset - self.point)
        if self.kind == "box":
            return EstimationSet.box(offset - self.hi, offset - self.lo)
        if self.kind == "ball":
            return EstimationSet.ball(offset - self.point, self.radius)
        return self

    def to_dict(self) -> dict:
        if self.kind == "singleton":
            return {"kind": "singleton", "v": self.point.tolist()}
        if self.kind == "box":
            return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}
        if self.kind == "ball":
            return {"kind": "ball", "center": self.point.tolist(), "radius": self.radius}
        return {"kind": "whole", "d": self.dim}

    @classmethod
    def from_dict(cls, data: dict, d: int | None = None) -> "EstimationSet":
        kind = data.get("kind")
        if kind == "singleton":
            return cls.singleton(data["v"])
        if kind == "box":
            return cls.box(data["lo"], data["hi"])
        if kind == "ball":
            return cls.ball(data["center"], data["radius"])
        if kind == "whole":
            return cls.whole(data.get("d", d))
        raise ContractError(f"unknown estimation-set kind {kind!r}")


# --------------------------------------------------------------------------
# instances and trajectories
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    geometry: CostGeometry
    omega: EstimationSet
    v: np.ndarray


@dataclass(frozen=True)
class OcoInstance:
    """A full horizon of hitting-cost geometries, estimation sets and minimizers."""

    structure: SwitchingStructure
    steps: tuple

    def __post_init__(self):
        d = self.structure.d
        fixed = []
        for t, step in enumerate(self.steps, start=1):
            v = _frozen(np.atleast_1d(step.v))
            if v.shape != (d,):
                raise ContractError(f"v_{t} has shape {v.shape}, expected ({d},)")
            if step.geometry.d is not None and step.geometry.d != d:
                raise ContractError(f"geometry at t={t} has dimension {step.geometry.d}")
            if step.omega.dim != d:
                raise ContractError(f"estimation set at t={t} has dimension {step.omega.dim}")
            if not step.omega.contains(v):
                raise InconsistentInstanceError(f"v_{t}={v} is not in its estimation set")
            fixed.append(Step(step.geometry, step.omega, v))
        object.__setattr__(self, "steps", tuple(fixed))

    @property
    def T(self) -> int:
        return len(self.steps)

    @property
    def d(self) -> int:
        return self.structure.d

    @property
    def v(self) -> np.ndarray:
        return np.array([s.v for s in self.steps]).reshape(self.T, self.d)

    @classmethod
    def exact(cls, structure: SwitchingStructure, geometries, vs) -> "OcoInstance":
        """Instance whose estimation sets are the singletons ``{v_t}``."""
        steps = tuple(
            Step(g, EstimationSet.singleton(v), v) for g, v in zip(geometries, vs)
        )
        return cls(structure, steps)

    def with_exact_sets(self) -> "OcoInstance":
        steps = tuple(Step(s.geometry, EstimationSet.singleton(s.v), s.v) for s in self.steps)
        return OcoInstance(self.structure, steps)

    # JSON --------------------------------------------------------------

    def to_dict(self) -> dict:
        steps = []
        for s in self.steps:
            g = s.geometry
            if g.kind == "diagonal":
                entry = {"diag": g.weights.tolist()}
            elif g.kind == "dense":
                entry = {"Q": g.Q.tolist()}
            else:
                raise ContractError("generic geometries cannot be serialized")
            entry["omega"] = s.omega.to_dict()
            entry["v"] = s.v.tolist()
            steps.append(entry)
        return {
            "T": self.T,
            "d": self.d,
            "p": self.structure.p,
            "C": [c.tolist() for c in self.structure.C],
            "steps": steps,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "OcoInstance":
        try:
            structure = SwitchingStructure(tuple(np.array(c, dtype=float) for c in data["C"]))
            if "p" in data and data["p"] != structure.p:
                raise ContractError(f"p={data['p']} but {structure.p} matrices given")
            if "d" in data and data["d"] != structure.d:
                raise ContractError(f"d={data['d']} but matrices are {structure.d}x{structure.d}")
            steps = []
            for entry in data["steps"]:
                if "diag" in entry:
                    g = CostGeometry.diagonal(entry["diag"])
                else:
                    g = CostGeometry.dense(entry["Q"])
                omega = EstimationSet.from_dict(entry["omega"], structure.d)
                steps.append(Step(g, omega, np.asarray(entry["v"], dtype=float)))
        except KeyError as exc:
            raise ContractError(f"instance is missing field {exc}") from None
        inst = cls(structure, tuple(steps))
        if "T" in data and data["T"] != inst.T:
            raise ContractError(f"T={data['T']} but {inst.T} steps given")
        return inst

    @classmethod
    def from_json(cls, text: str) -> "OcoInstance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Trajectory:
    """Decisions with their per-round hitting and switching costs."""

    y: np.ndarray
    hitting: np.ndarray
    switching: np.ndarray

    @property
    def T(self) -> int:
        return self.y.shape[0]

    @property
    def total(self) -> float:
        return float(np.sum(self.hitting) + np.sum(self.switching))

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.hitting + self.switching)


def history_window(ys: Sequence[np.ndarray], t: int, p: int, d: int) -> list:
    """``[y_{t-1}, ..., y_{t-p}]`` from 0-based decisions, zero before the start."""
    return [ys[t - i] if t - i >= 0 else np.zeros(d) for i in range(1, p + 1)]


def evaluate_trajectory(instance: OcoInstance, ys) -> Trajectory:
    """Charge a decision sequence against an instance (zero history before t=1)."""
    ys = np.asarray(ys, dtype=float)
    if ys.ndim == 1 and instance.d == 1:
        ys = ys.reshape(-1, 1)
    if ys.shape != (instance.T, instance.d):
        raise ContractError(f"decisions have shape {ys.shape}, expected {(instance.T, instance.d)}")
    st = instance.structure
    hit = np.empty(instance.T)
    sw = np.empty(instance.T)
    for t, step in enumerate(instance.steps):
        hit[t] = step.geometry.value(ys[t] - step.v)
        sw[t] = switching_cost(st, [ys[t]] + history_window(ys, t, st.p, st.d))
    return Trajectory(_frozen(ys), _frozen(hit), _frozen(sw))
