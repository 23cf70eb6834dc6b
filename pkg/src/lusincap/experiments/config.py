"""Scenario configuration: defaults plus validation.

Configs are JSON objects.  Rationals are written as ``[num, den]`` pairs
(plain integers are accepted too).  Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from ..capacity import (
    Capacity,
    WeightVector,
    huber_contamination,
    measure_from_weights,
    restrict_normalize,
    sup_of_measures,
)
from ..errors import InvalidArgument, ScenarioInvalid
from ..finite_space import (
    FiniteMetricSpace,
    SetDescriptor,
    as_rational,
    build_interval_grid,
    realize_descriptor,
)

SCHEMA_VERSION = 1
KINDS = ("chain-probe", "counterexample", "positive-case", "lusin-sweep", "property-sweep",
         "set-equality")

_HUBER = {"kind": "huber", "mu": "uniform", "eps": [1, 10], "delta": [1, 20]}
_SUP = {"kind": "sup", "measures": ["uniform", "tent"]}
_HALF_OPEN_CHAIN = {"family": "shrinking-interval", "left": [0, 1], "width": [1, 1],
                    "left_closed": False, "right_closed": True, "limit": "empty", "k_max": "auto"}
_OPEN_CHAIN = dict(_HALF_OPEN_CHAIN, right_closed=False)

DEFAULTS: dict[str, dict[str, Any]] = {
    "chain-probe": {
        "resolutions": [11, 101, 1001],
        "interval": [[0, 1], [1, 1]],
        "capacities": [{"kind": "measure", "weights": "uniform"}, _HUBER],
        "chain": _OPEN_CHAIN,
    },
    "counterexample": {
        "resolutions": [11, 101, 1001],
        "interval": [[0, 1], [1, 1]],
        "capacity": _HUBER,
        "u": {"kind": "indicator-point", "at": [0, 1]},
        "eta": [1, 2],
        "scale_steps": [2, 1],
        "chain": _HALF_OPEN_CHAIN,
        "floor": None,
        "oracle_max_n": 15,
    },
    "positive-case": {
        "resolutions": [11, 101, 1001],
        "interval": [[0, 1], [1, 1]],
        "capacity": _SUP,
        "u": {"kind": "indicator-point", "at": [0, 1]},
        "eta": [1, 2],
        "scale_steps": [2, 1],
        "chain": _HALF_OPEN_CHAIN,
        "target": [1, 100],
        "gap_target": [1, 100],
        "oracle_max_n": 15,
    },
    "lusin-sweep": {
        "resolutions": [11, 13, 15],
        "interval": [[0, 1], [1, 1]],
        "capacities": [{"kind": "measure", "weights": "uniform"}, _HUBER, _SUP],
        "u": {"kind": "identity", "quantize": 4},
        "eta": [1, 8],
        "scale_steps": [3, 1],
        "oracle_max_n": 15,
        "constructive": None,
    },
    "property-sweep": {
        "sizes": [4, 6, 8, 10],
        "zoo": [
            {"kind": "measure", "weights": "uniform"},
            {"kind": "measure", "weights": "random"},
            {"kind": "sup", "measures": ["uniform", "tent", "random"]},
            {"kind": "huber", "mu": "uniform", "eps": [1, 10], "delta": [1, 20]},
            {"kind": "huber", "mu": "uniform", "eps": [1, 10], "delta": [1, 10]},
            {"kind": "huber", "mu": "uniform", "eps": [1, 10], "delta": [1, 5]},
            {"kind": "huber", "mu": "ramp", "eps": [1, 20], "delta": [3, 10]},
            {"kind": "restricted", "base": _HUBER, "O": ["[", 0, 1, 1, 4, "]"]},
            {"kind": "pinned-sup-violation"},
        ],
        "trials": 1000000,
    },
    "set-equality": {
        "resolutions": [11, 101, 1001],
        "interval": [[0, 1], [1, 1]],
        "chain": {"family": "shrinking-interval", "left": [0, 1], "width": [1, 1],
                  "left_closed": True, "right_closed": True, "limit": ["[", 0, 1, 0, 1, "]"],
                  "k_max": "auto"},
        "delta": [1, 10],
    },
}

COMMON = {"version": SCHEMA_VERSION, "kind": None, "seed": 0}

# two-alternation is not expected of a general sup of measures
EXPECTED = {
    "measure": {"capacity": True, "subadditive": True, "two-alternating": True},
    "sup": {"capacity": True, "subadditive": True, "two-alternating": None},
    "huber": {"capacity": True, "subadditive": True, "two-alternating": True},
    "restricted": {"capacity": True, "subadditive": True, "two-alternating": True},
    "pinned-sup-violation": {"capacity": True, "subadditive": True, "two-alternating": False},
}

# sup of two measures on four points; A = {0, 1}, B = {0, 2} gives 1 + 1/2 > 2/3 + 2/3
PINNED_SUP_VIOLATION = {
    "measures": [["1/4", "3/8", "3/8", "0"], ["1/2", "1/6", "1/6", "1/6"]],
    "A": 0b0011,
    "B": 0b0101,
}


def _jsonable(x):
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass
class ScenarioConfig:
    kind: str
    params: dict
    seed: int = 0

    def resolved(self) -> dict:
        out = {"version": SCHEMA_VERSION, "kind": self.kind, "seed": self.seed}
        out.update(_jsonable(self.params))
        return out

    def canonical(self) -> str:
        return json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def rational(self, key) -> Fraction:
        try:
            return as_rational(self.params[key], key)
        except InvalidArgument as exc:
            raise ScenarioInvalid(str(exc)) from exc


def load_config(data: dict | None, kind: str, seed: int | None = None) -> ScenarioConfig:
    """Merge ``data`` over the defaults for ``kind`` and validate."""
    if kind not in KINDS:
        raise ScenarioInvalid(f"unknown run kind {kind!r}")
    data = dict(data or {})
    if data.get("kind", kind) != kind:
        raise ScenarioInvalid(f"config kind {data.get('kind')!r} does not match subcommand {kind!r}")
    if data.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ScenarioInvalid(f"unsupported config version {data.get('version')!r}")
    allowed = set(DEFAULTS[kind]) | set(COMMON)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ScenarioInvalid(f"unknown config fields for {kind}: {unknown}")
    params = copy.deepcopy(DEFAULTS[kind])
    for key, value in data.items():
        if key not in COMMON:
            params[key] = value
    cfg_seed = data.get("seed", 0) if seed is None else seed
    if not isinstance(cfg_seed, int) or cfg_seed < 0 or cfg_seed >= 2**64:
        raise ScenarioInvalid("seed must be an unsigned 64-bit integer")
    cfg = ScenarioConfig(kind, params, cfg_seed)
    _validate(cfg)
    return cfg


def load_config_file(path: str, kind: str, seed: int | None = None) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioInvalid(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioInvalid("config must be a JSON object")
    return load_config(data, kind, seed)


def _validate(cfg: ScenarioConfig) -> None:
    p = cfg.params
    try:
        if "resolutions" in p:
            res = p["resolutions"]
            if not isinstance(res, list) or not res or any(
                not isinstance(r, int) or r < 2 for r in res
            ) or res != sorted(set(res)):
                raise ScenarioInvalid("resolutions must be a strictly increasing list of integers >= 2")
        if "interval" in p:
            a, b = (as_rational(x, "interval") for x in p["interval"])
            if not a < b:
                raise ScenarioInvalid("interval needs a < b")
        for key in ("eta", "target", "gap_target", "delta"):
            if p.get(key) is not None and as_rational(p[key], key) < 0:
                raise ScenarioInvalid(f"{key} must be >= 0")
        if p.get("floor") is not None:
            as_rational(p["floor"], "floor")
        if "scale_steps" in p and as_rational(p["scale_steps"], "scale_steps") <= 0:
            raise ScenarioInvalid("scale_steps must be > 0")
        if "capacity" in p:
            _check_capacity_spec(p["capacity"])
        for spec in p.get("capacities", []) or []:
            _check_capacity_spec(spec)
        for spec in p.get("zoo", []) or []:
            _check_capacity_spec(spec)
        if "chain" in p:
            parse_chain(p["chain"])
        if "u" in p:
            _check_u_spec(p["u"])
        if "sizes" in p and (not isinstance(p["sizes"], list) or any(
            not isinstance(s, int) or not 1 <= s <= 12 for s in p["sizes"]
        )):
            raise ScenarioInvalid("sizes must be integers in 1..12")
        if p.get("constructive") is not None:
            c = p["constructive"]
            if not isinstance(c, dict) or set(c) - {"eps_budget"}:
                raise ScenarioInvalid("constructive takes only eps_budget")
    except InvalidArgument as exc:
        raise ScenarioInvalid(str(exc)) from exc


# --- capacities ------------------------------------------------------------------

WEIGHT_FAMILIES = ("uniform", "tent", "ramp", "random")


def _check_weights(spec) -> None:
    if isinstance(spec, str):
        if spec not in WEIGHT_FAMILIES:
            raise ScenarioInvalid(f"unknown weight family {spec!r}")
    elif isinstance(spec, list):
        for w in spec:
            as_rational(w, "weight")
    else:
        raise ScenarioInvalid(f"bad weight spec {spec!r}")


def _check_capacity_spec(spec) -> None:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ScenarioInvalid(f"capacity spec needs a kind: {spec!r}")
    kind = spec["kind"]
    fields = {
        "measure": {"weights"},
        "sup": {"measures"},
        "huber": {"mu", "eps", "delta"},
        "restricted": {"base", "O"},
        "pinned-sup-violation": set(),
    }
    if kind not in fields:
        raise ScenarioInvalid(f"unknown capacity kind {kind!r}")
    extra = set(spec) - fields[kind] - {"kind", "expect"}
    if extra:
        raise ScenarioInvalid(f"unknown fields for {kind} capacity: {sorted(extra)}")
    if kind == "measure":
        _check_weights(spec.get("weights", "uniform"))
    elif kind == "sup":
        ms = spec.get("measures")
        if not isinstance(ms, list) or not ms:
            raise ScenarioInvalid("sup needs a nonempty list of measures")
        for m in ms:
            _check_weights(m)
    elif kind == "huber":
        _check_weights(spec.get("mu", "uniform"))
        if as_rational(spec.get("eps", [1, 10]), "eps") < 0:
            raise ScenarioInvalid("huber eps must be >= 0")
        if as_rational(spec.get("delta", [1, 20]), "delta") <= 0:
            raise ScenarioInvalid("huber delta must be > 0")
    elif kind == "restricted":
        _check_capacity_spec(spec["base"])
        SetDescriptor.from_json(spec["O"])


def weights_for(spec, n: int, rng: np.random.Generator) -> WeightVector:
    if spec == "uniform":
        return WeightVector.uniform(n)
    if spec == "tent":
        return WeightVector.tent(n)
    if spec == "ramp":
        return WeightVector.ramp(n)
    if spec == "random":
        return WeightVector.random(n, rng)
    if len(spec) != n:
        raise ScenarioInvalid(f"explicit weights have length {len(spec)}, space has {n} points")
    return WeightVector([as_rational(w, "weight") for w in spec])


def build_capacity(spec: dict, space: FiniteMetricSpace, rng: np.random.Generator) -> Capacity:
    kind = spec["kind"]
    n = space.n
    if kind == "measure":
        return measure_from_weights(space, weights_for(spec.get("weights", "uniform"), n, rng))
    if kind == "sup":
        return sup_of_measures(space, [weights_for(m, n, rng) for m in spec["measures"]])
    if kind == "huber":
        return huber_contamination(space, weights_for(spec.get("mu", "uniform"), n, rng),
                                   as_rational(spec.get("eps", [1, 10])),
                                   as_rational(spec.get("delta", [1, 20])))
    if kind == "restricted":
        base = build_capacity(spec["base"], space, rng)
        return restrict_normalize(base, realize_descriptor(space, SetDescriptor.from_json(spec["O"])))
    if kind == "pinned-sup-violation":
        if n != len(PINNED_SUP_VIOLATION["measures"][0]):
            raise ScenarioInvalid("the pinned violation lives on four points")
        return sup_of_measures(space, [WeightVector(m) for m in PINNED_SUP_VIOLATION["measures"]])
    raise ScenarioInvalid(f"unknown capacity kind {kind!r}")


def capacity_label(spec: dict) -> str:
    kind = spec["kind"]
    if kind == "measure":
        return f"measure[{_wlabel(spec.get('weights', 'uniform'))}]"
    if kind == "sup":
        return "sup[" + ",".join(_wlabel(m) for m in spec["measures"]) + "]"
    if kind == "huber":
        eps = as_rational(spec.get("eps", [1, 10]))
        delta = as_rational(spec.get("delta", [1, 20]))
        return f"huber[{_wlabel(spec.get('mu', 'uniform'))},eps={eps},delta={delta}]"
    if kind == "restricted":
        return f"restricted[{capacity_label(spec['base'])},O={SetDescriptor.from_json(spec['O'])}]"
    return kind


def _wlabel(spec) -> str:
    return spec if isinstance(spec, str) else "explicit"


# --- functions u -----------------------------------------------------------------


def _check_u_spec(spec) -> None:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ScenarioInvalid(f"u spec needs a kind: {spec!r}")
    kind = spec["kind"]
    if kind == "indicator-point":
        if set(spec) - {"kind", "at"}:
            raise ScenarioInvalid("indicator-point takes only 'at'")
        as_rational(spec.get("at", 0), "at")
    elif kind == "indicator-set":
        if set(spec) - {"kind", "set"}:
            raise ScenarioInvalid("indicator-set takes only 'set'")
        SetDescriptor.from_json(spec["set"])
    elif kind == "identity":
        if set(spec) - {"kind", "quantize"}:
            raise ScenarioInvalid("identity takes only 'quantize'")
        q = spec.get("quantize")
        if q is not None and (not isinstance(q, int) or q < 1):
            raise ScenarioInvalid("quantize must be a positive integer")
    else:
        raise ScenarioInvalid(f"unknown u kind {kind!r}")


def build_u(spec: dict, space: FiniteMetricSpace) -> np.ndarray:
    from ..lusin import quantize_function

    kind = spec["kind"]
    u = np.zeros(space.n)
    if kind == "indicator-point":
        u[space.nearest_index(spec.get("at", 0))] = 1.0
    elif kind == "indicator-set":
        mask = realize_descriptor(space, SetDescriptor.from_json(spec["set"]))
        for i in range(space.n):
            if mask >> i & 1:
                u[i] = 1.0
    else:
        u = np.array([float(x) for x in space.coords])
        if spec.get("quantize"):
            u = quantize_function([Fraction(x) for x in space.coords], spec["quantize"])
    return u


# --- chains ------------------------------------------------------------------------


@dataclass
class ChainSpec:
    """Either an explicit list of descriptors or a shrinking-interval family.

    The family is ``O_k = <left, left + width / k>`` with the configured
    bracket types, k = 1, 2, ...
    """

    sets: list[SetDescriptor] | None
    family: dict | None
    limit: SetDescriptor
    k_max: Any

    def descriptor(self, k: int) -> SetDescriptor:
        if self.sets is not None:
            return self.sets[k - 1]
        left = self.family["left"]
        return SetDescriptor.interval(left, left + self.family["width"] / k,
                                      self.family["left_closed"], self.family["right_closed"])

    @property
    def all_open(self) -> bool:
        if self.sets is not None:
            return all(d.is_open for d in self.sets)
        return not self.family["left_closed"] and not self.family["right_closed"]


def parse_chain(spec) -> ChainSpec:
    if not isinstance(spec, dict):
        raise ScenarioInvalid("chain must be an object")
    limit = SetDescriptor.from_json(spec.get("limit", "empty"))
    k_max = spec.get("k_max", "auto")
    if not (k_max == "auto" or (isinstance(k_max, int) and k_max >= 1) or (
        isinstance(k_max, list) and all(isinstance(k, int) and k >= 1 for k in k_max)
    )):
        raise ScenarioInvalid("k_max must be 'auto', a positive integer or a list of them")
    if "sets" in spec:
        if set(spec) - {"sets", "limit", "k_max"}:
            raise ScenarioInvalid("explicit chain takes sets, limit, k_max")
        sets = [SetDescriptor.from_json(d) for d in spec["sets"]]
        if not sets:
            raise ScenarioInvalid("explicit chain is empty")
        return ChainSpec(sets, None, limit, k_max)
    if spec.get("family") != "shrinking-interval":
        raise ScenarioInvalid(f"unknown chain family {spec.get('family')!r}")
    extra = set(spec) - {"family", "left", "width", "left_closed", "right_closed", "limit", "k_max"}
    if extra:
        raise ScenarioInvalid(f"unknown chain fields {sorted(extra)}")
    fam = {
        "left": as_rational(spec.get("left", 0), "left"),
        "width": as_rational(spec.get("width", 1), "width"),
        "left_closed": bool(spec.get("left_closed", False)),
        "right_closed": bool(spec.get("right_closed", False)),
    }
    if fam["width"] <= 0:
        raise ScenarioInvalid("chain width must be > 0")
    return ChainSpec(None, fam, limit, k_max)


def grid_for(cfg: ScenarioConfig, resolution: int) -> FiniteMetricSpace:
    a, b = (as_rational(x) for x in cfg.params["interval"])
    return build_interval_grid(resolution, a, b)
