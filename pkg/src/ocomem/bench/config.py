"""Experiment configuration files (JSON) with line-numbered validation errors.

Schema::

    {
      "id": "scalar-iid",
      "system": {"preset": "scalar-a2q8"} | {"preset": "double-integrator"}
                | {"scalar": {"a": 2.0}} | {"A": [[...]], "B": [[...]]},
      "q": 8.0 | [q_0, ..., q_T],
      "T": 200,
      "disturbance": {"kind": "iid-uniform", "lo": -1, "hi": 1},
      "estimation": {"kind": "fixed-box", "lo": -1, "hi": 1},      (optional)
      "algorithms": [{"name": "optimistic-robd", "lambda": 1.0},
                     {"name": "robd", "lambda1": 1.0, "lambda2": 0.0},
                     {"name": "lambda0"}],
      "settings": ["known", "unknown"],                            (optional)
      "seed": 0 | "seeds": [0, 1, 2],
      "lc_search": {"half_width": 2.0, "max_grid": 20000},         (optional)
      "output": {"csv": "out.csv", "json": "out.json"}             (optional)
    }
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

import numpy as np

from ..control import CanonicalSystem, ControlCostSpec
from ..errors import ConfigError, ContractError
from ..oracles import LcSearchSpec
from .disturbances import DISTURBANCE_KINDS, ESTIMATION_KINDS

PRESETS = {
    "scalar-a2q8": (lambda: CanonicalSystem.scalar(2.0), 8.0),
    "double-integrator": (CanonicalSystem.double_integrator, 8.0),
}
ALGORITHMS = ("optimistic-robd", "robd", "lambda0")
SETTINGS = ("known", "unknown")


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    lam: float = 0.0
    lambda2: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    system: CanonicalSystem
    costspec: ControlCostSpec
    disturbance: dict
    estimation: dict | None
    algorithms: tuple
    settings: tuple = SETTINGS
    seeds: tuple = (0,)
    lc_search: LcSearchSpec = field(default_factory=LcSearchSpec)
    output: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.costspec.T

    def with_seeds(self, seeds) -> "ExperimentConfig":
        return replace(self, seeds=tuple(int(s) for s in seeds))

    def with_algorithms(self, algorithms) -> "ExperimentConfig":
        return replace(self, algorithms=tuple(algorithms))


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(r'"%s"\s*:' % re.escape(key))
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return i
    return None


def _num(data, key, text, default=None, positive=False):
    if key not in data:
        if default is None:
            raise ConfigError(f"missing required field {key!r}", _line_of(text, key))
        return default
    val = data[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"field {key!r} must be a number, got {val!r}", _line_of(text, key))
    if positive and val <= 0:
        raise ConfigError(f"field {key!r} must be positive, got {val}", _line_of(text, key))
    return val


def _parse_system(data, text):
    spec = data.get("system")
    line = _line_of(text, "system")
    if not isinstance(spec, dict):
        raise ConfigError("field 'system' must be an object", line)
    try:
        if "preset" in spec:
            if spec["preset"] not in PRESETS:
                raise ConfigError(f"unknown preset {spec['preset']!r}; expected one of {sorted(PRESETS)}", line)
            make, q = PRESETS[spec["preset"]]
            return make(), q
        if "scalar" in spec:
            return CanonicalSystem.scalar(float(spec["scalar"]["a"])), None
        if "A" in spec and "B" in spec:
            return CanonicalSystem(np.array(spec["A"], dtype=float), np.array(spec["B"], dtype=float)), None
    except ContractError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid system: {exc}", line) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid system: {exc}", line) from None
    raise ConfigError("system needs 'preset', 'scalar' or both 'A' and 'B'", line)


def _parse_algorithms(data, text):
    algs = data.get("algorithms")
    line = _line_of(text, "algorithms")
    if not isinstance(algs, list) or not algs:
        raise ConfigError("field 'algorithms' must be a nonempty list", line)
    out = []
    for a in algs:
        if not isinstance(a, dict) or a.get("name") not in ALGORITHMS:
            raise ConfigError(f"algorithm entry {a!r} needs 'name' in {ALGORITHMS}", line)
        name = a["name"]
        if name == "optimistic-robd":
            lam = _num(a, "lambda", text, positive=True)
            out.append(AlgorithmSpec(name, float(lam)))
        elif name == "robd":
            lam = _num(a, "lambda1", text, positive=True)
            out.append(AlgorithmSpec(name, float(lam), float(_num(a, "lambda2", text, default=0.0))))
        else:
            out.append(AlgorithmSpec(name))
    return tuple(out)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text; errors carry the offending line."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", 1)

    system, preset_q = _parse_system(data, text)
    T = int(_num(data, "T", text, positive=True))
    q = data.get("q", preset_q)
    try:
        if q is None:
            raise ConfigError("missing required field 'q'", _line_of(text, "system"))
        if isinstance(q, list):
            if len(q) != T + 1:
                raise ConfigError(f"q list needs T+1 = {T + 1} entries, got {len(q)}", _line_of(text, "q"))
            costspec = ControlCostSpec(np.array(q, dtype=float))
        else:
            costspec = ControlCostSpec.constant(float(q), T)
    except ContractError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), _line_of(text, "q")) from None

    dist = data.get("disturbance")
    if not isinstance(dist, dict) or dist.get("kind") not in DISTURBANCE_KINDS:
        raise ConfigError(f"'disturbance' needs 'kind' in {DISTURBANCE_KINDS}", _line_of(text, "disturbance"))
    est = data.get("estimation")
    if est is not None and (not isinstance(est, dict) or est.get("kind") not in ESTIMATION_KINDS):
        raise ConfigError(f"'estimation' needs 'kind' in {ESTIMATION_KINDS}", _line_of(text, "estimation"))

    settings = data.get("settings", list(SETTINGS))
    if not isinstance(settings, list) or not settings or any(s not in SETTINGS for s in settings):
        raise ConfigError(f"'settings' must be a nonempty subset of {SETTINGS}", _line_of(text, "settings"))

    if "seeds" in data:
        seeds = data["seeds"]
        if not isinstance(seeds, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
            raise ConfigError("'seeds' must be a list of integers", _line_of(text, "seeds"))
    else:
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ConfigError("'seed' must be a 64-bit unsigned integer", _line_of(text, "seed"))
        seeds = [seed]

    lc = data.get("lc_search", {})
    try:
        lc_spec = LcSearchSpec(**lc)
    except TypeError as exc:
        raise ConfigError(f"invalid lc_search: {exc}", _line_of(text, "lc_search")) from None

    output = data.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("'output' must be an object", _line_of(text, "output"))

    return ExperimentConfig(
        id=str(data.get("id", "experiment")),
        system=system,
        costspec=costspec,
        disturbance=dist,
        estimation=est,
        algorithms=_parse_algorithms(data, text),
        settings=tuple(settings),
        seeds=tuple(seeds),
        lc_search=lc_spec,
        output=output,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
