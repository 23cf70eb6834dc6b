"""Scenario runners.

Every runner returns a :class:`RunReport`: a deterministic document (no
timings, no hostnames) plus the list of named assertions it checked.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ..axioms import (
    check_capacity_axioms,
    check_subadditive,
    check_two_alternating,
    reproduce_witness,
)
from ..capacity import TOL, Capacity, dense_table
from ..core_lp import core_membership, core_nonempty, greedy_chain_measure
from ..errors import ConstructionInfeasible, ScenarioInvalid, SearchCapExceeded
from ..finite_space import (
    FiniteMetricSpace,
    SetDescriptor,
    as_rational,
    build_interval_grid,
    closed_neighborhood,
    indices_of,
    mask_to_bool,
    realize_descriptor,
)
from ..lusin import (
    ORACLE_MAX_N,
    LusinInstance,
    brute_force_oracle,
    conflict_pairs,
    constructive_simple,
    exact_min_removal,
    greedy_removal,
    partition_by_value,
)
from .config import (
    EXPECTED,
    PINNED_SUP_VIOLATION,
    ChainSpec,
    ScenarioConfig,
    build_capacity,
    build_u,
    capacity_label,
    grid_for,
    parse_chain,
    weights_for,
)

log = logging.getLogger(__name__)

AUTO_DEPTH_FACTOR = 4


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class RunReport:
    kind: str
    config: ScenarioConfig
    results: dict
    rows: list[dict] = field(default_factory=list)
    assertions: list[Assertion] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.assertions.append(Assertion(name, bool(passed), detail))

    def to_json(self) -> dict:
        return {
            "schema": "lusincap-report/1",
            "kind": self.kind,
            "config_hash": self.config.digest(),
            "config": self.config.resolved(),
            "results": self.results,
            "rows": self.rows,
            "assertions": [a.to_json() for a in self.assertions],
            "passed": self.passed,
            "notes": [
                "continuity of u on K is the (eta, scale) oscillation surrogate: points of K "
                "closer than scale may differ in u by at most eta",
            ],
        }


# --- chains and the continuity gap -------------------------------------------------


@dataclass
class ChainScenario:
    """A resolution-indexed family of decreasing chains ``O_1 > O_2 > ... > O``."""

    resolutions: list[int]
    interval: tuple[Fraction, Fraction]
    capacity_spec: dict
    chain: ChainSpec
    seed: int = 0

    def space(self, resolution: int) -> FiniteMetricSpace:
        return build_interval_grid(resolution, *self.interval)

    def depth(self, space: FiniteMetricSpace, index: int) -> int:
        k_max = self.chain.k_max
        if isinstance(k_max, int):
            return k_max
        if isinstance(k_max, list):
            if len(k_max) != len(self.resolutions):
                raise ScenarioInvalid("k_max list must have one entry per resolution")
            return k_max[index]
        if self.chain.sets is not None:
            return len(self.chain.sets)
        # deepest k whose trace still differs from the trace of the limit
        limit = realize_descriptor(space, self.chain.limit)
        cap = AUTO_DEPTH_FACTOR * space.n
        for k in range(1, cap + 1):
            if realize_descriptor(space, self.chain.descriptor(k)) == limit:
                return max(k - 1, 1)
        return cap


@dataclass
class GapReport:
    formulation: str
    rows: list[dict]
    inf_gap: dict[int, float]
    finest_inf_gap: float
    min_gap: float

    def to_json(self) -> dict:
        return {
            "formulation": self.formulation,
            "inf_gap_by_resolution": {str(r): g for r, g in self.inf_gap.items()},
            "finest_inf_gap": self.finest_inf_gap,
            "min_gap": self.min_gap,
        }


def continuity_gap(scenario: ChainScenario, capacity: Optional[Capacity] = None) -> GapReport:
    """Evaluate ``v(O_k) - v(O)`` on every realized chain element.

    ``capacity`` overrides the scenario's capacity spec (it must then live on
    a single resolution).
    """
    rows = []
    inf_gap = {}
    for idx, r in enumerate(scenario.resolutions):
        space = scenario.space(r)
        rng = np.random.default_rng([scenario.seed, r])
        v = capacity if capacity is not None else build_capacity(scenario.capacity_spec, space, rng)
        limit = realize_descriptor(space, scenario.chain.limit)
        v_limit = v(limit)
        depth = scenario.depth(space, idx)
        prev = None
        gaps = []
        for k in range(1, depth + 1):
            Ok = realize_descriptor(space, scenario.chain.descriptor(k))
            if Ok & limit != limit:
                raise ScenarioInvalid(f"resolution {r}: O_{k} does not contain the limit set")
            if prev is not None and Ok & ~prev:
                raise ScenarioInvalid(f"resolution {r}: O_{k} is not contained in O_{k - 1}")
            prev = Ok
            vk = v(Ok)
            gap = vk - v_limit
            gaps.append(gap)
            rows.append({"resolution": r, "k": k, "points": bin(Ok).count("1"),
                         "v_Ok": vk, "v_O": v_limit, "gap": gap})
        inf_gap[r] = min(gaps)
    formulation = "open-sets" if scenario.chain.all_open else "all-sets"
    finest = scenario.resolutions[-1]
    return GapReport(formulation, rows, inf_gap, inf_gap[finest], min(g["gap"] for g in rows))


def _chain_scenario(cfg: ScenarioConfig, capacity_spec: dict) -> ChainScenario:
    a, b = (as_rational(x) for x in cfg.params["interval"])
    return ChainScenario(list(cfg.params["resolutions"]), (a, b), capacity_spec,
                         parse_chain(cfg.params["chain"]), cfg.seed)


def run_chain_probe(cfg: ScenarioConfig) -> RunReport:
    report = RunReport("chain-probe", cfg, {"capacities": []})
    for spec in cfg.params["capacities"]:
        label = capacity_label(spec)
        gap = continuity_gap(_chain_scenario(cfg, spec))
        entry = {"capacity": label, **gap.to_json()}
        report.results["capacities"].append(entry)
        for row in gap.rows:
            report.rows.append({"capacity": label, **row})
        report.check(f"{label}: gaps nonnegative", gap.min_gap >= -TOL, f"min gap {gap.min_gap!r}")
    return report


# --- Lusin scenarios ----------------------------------------------------------------


def _instance(cfg: ScenarioConfig, space: FiniteMetricSpace, capacity: Capacity) -> LusinInstance:
    u = build_u(cfg.params["u"], space)
    eta = float(cfg.rational("eta"))
    scale = cfg.rational("scale_steps") * space.step
    return LusinInstance(space, capacity, u, eta, scale)


def _solve(instance: LusinInstance):
    try:
        return exact_min_removal(instance)
    except SearchCapExceeded:
        return None


def _lusin_rows(cfg: ScenarioConfig, spec: dict, report: RunReport) -> list[dict]:
    out = []
    oracle_max = min(int(cfg.params.get("oracle_max_n", ORACLE_MAX_N)), ORACLE_MAX_N)
    for r in cfg.params["resolutions"]:
        space = grid_for(cfg, r)
        rng = np.random.default_rng([cfg.seed, r])
        v = build_capacity(spec, space, rng)
        inst = _instance(cfg, space, v)
        graph = conflict_pairs(inst)
        exact = _solve(inst)
        greedy = greedy_removal(inst)
        row = {
            "capacity": capacity_label(spec),
            "resolution": r,
            "conflict_edges": len(graph.edges),
            "conflict_vertices": len(graph.vertices),
            "exact_value": None if exact is None else exact.value,
            "exact_removed": None if exact is None else hex(exact.removed),
            "exact_nodes": None if exact is None else exact.nodes,
            "greedy_value": greedy.value,
            "oracle_value": None,
            "oracle_removed": None,
        }
        for res in (exact, greedy):
            if res is not None:
                bad = [e for e in graph.edges if res.K >> e[0] & 1 and res.K >> e[1] & 1]
                report.check(f"{row['capacity']} r={r} {res.method}: K conflict-free", not bad)
        if exact is not None:
            report.check(f"{row['capacity']} r={r}: greedy >= exact",
                         greedy.value >= exact.value - TOL,
                         f"greedy {greedy.value!r}, exact {exact.value!r}")
        if r <= oracle_max:
            oracle = brute_force_oracle(inst)
            row["oracle_value"] = oracle.value
            row["oracle_removed"] = hex(oracle.removed)
            if exact is not None:
                report.check(f"{row['capacity']} r={r}: exact equals oracle",
                             exact.value == oracle.value and exact.K == oracle.K,
                             f"exact {exact.value!r}/{hex(exact.removed)}, "
                             f"oracle {oracle.value!r}/{hex(oracle.removed)}")
        out.append(row)
    return out


def run_lusin_sweep(cfg: ScenarioConfig) -> RunReport:
    report = RunReport("lusin-sweep", cfg, {})
    for spec in cfg.params["capacities"]:
        report.rows.extend(_lusin_rows(cfg, spec, report))
    constructive = cfg.params.get("constructive")
    if constructive:
        budget = float(as_rational(constructive["eps_budget"]))
        outcomes = []
        for spec in cfg.params["capacities"]:
            for r in cfg.params["resolutions"]:
                space = grid_for(cfg, r)
                v = build_capacity(spec, space, np.random.default_rng([cfg.seed, r]))
                inst = _instance(cfg, space, v)
                entry = {"capacity": capacity_label(spec), "resolution": r}
                try:
                    res = constructive_simple(inst, partition_by_value(inst.u), budget)
                    entry.update(status="ok", value=res.value, N=res.details["N"])
                    report.check(f"{entry['capacity']} r={r}: constructive within budget",
                                 res.value <= budget)
                except ConstructionInfeasible as exc:
                    entry.update(status="infeasible", cell=exc.cell_index,
                                 cell_mask=None if exc.cell_mask is None else hex(exc.cell_mask))
                outcomes.append(entry)
        report.results["constructive"] = outcomes
    return report


def _ball_masses(spec: dict, space: FiniteMetricSpace, ball: int, rng) -> Optional[list]:
    if spec["kind"] == "measure":
        fams = [spec.get("weights", "uniform")]
    elif spec["kind"] == "sup":
        fams = spec["measures"]
    else:
        return None
    members = mask_to_bool(ball, space.n)
    return [float(weights_for(f, space.n, rng).mass(members)) for f in fams]


def _lusin_pipeline(cfg: ScenarioConfig, report: RunReport) -> tuple[list, GapReport]:
    spec = cfg.params["capacity"]
    label = capacity_label(spec)
    oracle_max = min(int(cfg.params.get("oracle_max_n", ORACLE_MAX_N)), ORACLE_MAX_N)
    per_res = []
    for r in cfg.params["resolutions"]:
        space = grid_for(cfg, r)
        v = build_capacity(spec, space, np.random.default_rng([cfg.seed, r]))
        inst = _instance(cfg, space, v)
        exact = _solve(inst)
        if exact is None:
            raise ScenarioInvalid(f"resolution {r}: conflict graph too large for exact search")
        centre = space.nearest_index(cfg.params["u"].get("at", 0)) \
            if cfg.params["u"]["kind"] == "indicator-point" else None
        ball_masses = None
        if centre is not None:
            ball = closed_neighborhood(space, 1 << centre, inst.scale)
            ball_masses = _ball_masses(spec, space, ball, np.random.default_rng([cfg.seed, r]))
        entry = {"resolution": r, "capacity": label, "scale": str(inst.scale),
                 "optimum": exact.value, "removed": hex(exact.removed),
                 "removed_points": indices_of(exact.removed)[:16], "nodes": exact.nodes,
                 "ball_masses": ball_masses}
        if r <= oracle_max:
            oracle = brute_force_oracle(inst)
            entry["oracle"] = oracle.value
            report.check(f"r={r}: exact equals brute-force oracle",
                         oracle.value == exact.value and oracle.K == exact.K,
                         f"exact {exact.value!r}, oracle {oracle.value!r}")
        per_res.append(entry)
    gap = continuity_gap(_chain_scenario(cfg, spec))
    report.results["lusin"] = per_res
    report.results["chain"] = gap.to_json()
    report.rows = [{"table": "lusin", "resolution": e["resolution"], "k": None,
                    "value": e["optimum"]} for e in per_res]
    report.rows += [{"table": "chain", "resolution": g["resolution"], "k": g["k"],
                     "value": g["gap"]} for g in gap.rows]
    return per_res, gap


def run_counterexample(cfg: ScenarioConfig) -> RunReport:
    """Huber capacity: Lusin optimum and chain gap both stay above the floor."""
    report = RunReport("counterexample", cfg, {})
    spec = cfg.params["capacity"]
    if cfg.params.get("floor") is not None:
        floor = float(cfg.rational("floor"))
    elif spec["kind"] == "huber":
        floor = float(as_rational(spec.get("eps", [1, 10])))
    else:
        raise ScenarioInvalid("set 'floor' when the capacity is not a Huber capacity")
    report.results["floor"] = floor
    per_res, gap = _lusin_pipeline(cfg, report)
    for e in per_res:
        report.check(f"(a) r={e['resolution']}: Lusin optimum >= floor",
                     e["optimum"] >= floor - TOL, f"{e['optimum']!r} vs {floor!r}")
    report.check("(b) chain gap >= floor at every (resolution, k)", gap.min_gap >= floor - TOL,
                 f"min gap {gap.min_gap!r}")
    return report


def run_positive_case(cfg: ScenarioConfig) -> RunReport:
    """Sup of finitely many measures: optimum and chain gap decay."""
    report = RunReport("positive-case", cfg, {})
    target = float(cfg.rational("target"))
    gap_target = float(cfg.rational("gap_target"))
    per_res, gap = _lusin_pipeline(cfg, report)
    for e in per_res:
        if e["ball_masses"] is not None:
            report.check(f"r={e['resolution']}: optimum <= max_k mu_k(ball)",
                         e["optimum"] <= max(e["ball_masses"]) + TOL,
                         f"{e['optimum']!r} vs {max(e['ball_masses'])!r}")
    values = [e["optimum"] for e in per_res]
    report.check("optimum strictly decreasing in resolution",
                 all(b < a for a, b in zip(values, values[1:])), repr(values))
    report.check("optimum <= target at the finest resolution", values[-1] <= target + TOL,
                 f"{values[-1]!r} vs {target!r}")
    report.check("chain gap infimum <= gap target at the finest resolution",
                 gap.finest_inf_gap <= gap_target + TOL,
                 f"{gap.finest_inf_gap!r} vs {gap_target!r}")
    return report


# --- set equality -------------------------------------------------------------------


def run_set_equality(cfg: ScenarioConfig) -> RunReport:
    """Closed neighbourhood of the intersection vs intersection of closed neighbourhoods."""
    report = RunReport("set-equality", cfg, {"resolutions": []})
    delta = cfg.rational("delta")
    scenario = _chain_scenario(cfg, {"kind": "measure"})
    for idx, r in enumerate(scenario.resolutions):
        space = scenario.space(r)
        depth = scenario.depth(space, idx)
        if scenario.chain.k_max == "auto" and scenario.chain.sets is None:
            # run on to the first element whose trace equals the limit's
            limit = realize_descriptor(space, scenario.chain.limit)
            if realize_descriptor(space, scenario.chain.descriptor(depth + 1)) == limit:
                depth += 1
        inter = space.full
        rhs = space.full
        for k in range(1, depth + 1):
            Ak = realize_descriptor(space, scenario.chain.descriptor(k))
            inter &= Ak
            rhs &= closed_neighborhood(space, Ak, delta)
        lhs = closed_neighborhood(space, inter, delta)
        entry = {"resolution": r, "depth": depth, "intersection": hex(inter),
                 "lhs": hex(lhs), "rhs": hex(rhs), "equal": lhs == rhs,
                 "discrepancy": hex(lhs ^ rhs)}
        report.results["resolutions"].append(entry)
        report.rows.append(entry)
        report.check(f"r={r}: closed neighbourhood commutes with the chain intersection",
                     lhs == rhs, f"discrepancy {hex(lhs ^ rhs)}")
    return report


# --- property sweep ------------------------------------------------------------------


def run_property_sweep(cfg: ScenarioConfig) -> RunReport:
    report = RunReport("property-sweep", cfg, {"entries": []})
    trials = int(cfg.params.get("trials", 10**6))
    for zi, spec in enumerate(cfg.params["zoo"]):
        expected = dict(EXPECTED[spec["kind"]])
        expected.update(spec.get("expect", {}))
        sizes = [4] if spec["kind"] == "pinned-sup-violation" else cfg.params["sizes"]
        for n in sizes:
            if n < 2:
                continue
            space = build_interval_grid(n, 0, 1)
            rng = np.random.default_rng([cfg.seed, zi, n])
            v = build_capacity(spec, space, rng)
            dense = dense_table(v)
            reports = [check_capacity_axioms(dense),
                       check_subadditive(dense, seed=cfg.seed, trials=trials),
                       check_two_alternating(dense, seed=cfg.seed, trials=trials)]
            label = capacity_label(spec)
            entry = {"capacity": label, "n": n, "reports": [r.to_json() for r in reports]}
            for rep in reports:
                key = "capacity" if rep.property in ("capacity", "normalized", "monotone") \
                    else rep.property
                want = expected.get(key)
                row = {"capacity": label, "n": n, "property": key, "holds": rep.holds,
                       "expected": want, "mode": rep.mode, "checked": rep.checked,
                       "witness": None if rep.witness is None else
                       "/".join(hex(m) for m in rep.witness.masks)}
                report.rows.append(row)
                if want is not None:
                    report.check(f"{label} n={n}: {key} == {want}", rep.holds == want)
                if not rep.holds:
                    report.check(f"{label} n={n}: {key} witness reproduces",
                                 reproduce_witness(dense, rep))
            two_alt = reports[2].holds
            if n <= 12:
                core = core_nonempty(v, assume_two_alternating=two_alt)
                entry["core"] = core.to_json()
                report.check(f"{label} n={n}: core nonempty", core.nonempty)
                if two_alt:
                    nu = greedy_chain_measure(v, list(range(n))[::-1])
                    ok, _ = core_membership(v, nu, tol=1e-9)
                    report.check(f"{label} n={n}: reversed greedy measure in core", ok)
            if spec["kind"] == "pinned-sup-violation":
                A, B = PINNED_SUP_VIOLATION["A"], PINNED_SUP_VIOLATION["B"]
                excess = dense[A | B] + dense[A & B] - dense[A] - dense[B]
                entry["pinned_excess"] = excess
                report.check("pinned sup-of-measures witness violates two-alternation",
                             excess > TOL, f"excess {excess!r}")
            report.results["entries"].append(entry)
    return report


RUNNERS = {
    "chain-probe": run_chain_probe,
    "counterexample": run_counterexample,
    "positive-case": run_positive_case,
    "lusin-sweep": run_lusin_sweep,
    "property-sweep": run_property_sweep,
    "set-equality": run_set_equality,
}


def run(cfg: ScenarioConfig) -> RunReport:
    return RUNNERS[cfg.kind](cfg)
