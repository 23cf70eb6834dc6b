from fractions import Fraction as Fr

import numpy as np
import pytest

from lusincap.capacity import (
    WeightVector,
    huber_contamination,
    measure_from_weights,
    sup_of_measures,
)
from lusincap.errors import ConstructionInfeasible, InvalidArgument, SearchCapExceeded, SizeCapError
from lusincap.finite_space import (
    SetDescriptor,
    build_interval_grid,
    closed_neighborhood,
    indices_of,
    mask_to_bool,
    realize_descriptor,
    space_from_points,
)
from lusincap.lusin import (
    LusinInstance,
    brute_force_oracle,
    conflict_pairs,
    constructive_simple,
    default_shrink_schedule,
    exact_min_removal,
    greedy_removal,
    partition_by_value,
    quantize_function,
)

from ._helpers import random_instance

G11 = build_interval_grid(11, 0, 1)
G101 = build_interval_grid(101, 0, 1)


def indicator(n, *idx):
    u = np.zeros(n)
    u[list(idx)] = 1.0
    return u


def huber_instance(cap_delta=Fr(3, 20)):
    v = huber_contamination(G11, WeightVector.uniform(11), Fr(1, 10), cap_delta)
    return LusinInstance(G11, v, indicator(11, 0), 0.5, Fr(1, 4))


def no_conflicts_in_K(instance, res):
    return all(not (res.K >> a & 1 and res.K >> b & 1) for a, b in conflict_pairs(instance).edges)


# --- conflict graph -----------------------------------------------------------------


def test_conflict_edges_example():
    g = conflict_pairs(huber_instance())
    assert g.edges == [(0, 1), (0, 2)]
    assert g.vertices == [0, 1, 2]


def test_conflict_empty_cases():
    v = measure_from_weights(G11, WeightVector.uniform(11))
    assert conflict_pairs(LusinInstance(G11, v, np.full(11, 0.3), 0.0, Fr(1))).edges == []
    u = np.linspace(0, 1, 11)
    assert conflict_pairs(LusinInstance(G11, v, u, 1.0, Fr(2))).edges == []


def test_conflict_pairs_match_definition_off_grid():
    rng = np.random.default_rng(0)
    space = space_from_points([0, Fr(1, 7), Fr(1, 3), Fr(1, 2), Fr(4, 5), 1])
    v = measure_from_weights(space, WeightVector.uniform(6))
    u = rng.random(6)
    inst = LusinInstance(space, v, u, 0.2, Fr(2, 5))
    expect = [(i, j) for i in range(6) for j in range(i + 1, 6)
              if space.dist(i, j) < Fr(2, 5) and abs(u[i] - u[j]) > 0.2]
    assert conflict_pairs(inst).edges == expect


def test_instance_validation():
    v = measure_from_weights(G11, WeightVector.uniform(11))
    with pytest.raises(InvalidArgument):
        LusinInstance(G11, v, np.zeros(10), 0.5, Fr(1, 4))
    with pytest.raises(InvalidArgument):
        LusinInstance(G11, v, np.zeros(11), -1, Fr(1, 4))
    with pytest.raises(InvalidArgument):
        LusinInstance(G11, v, np.zeros(11), 0.5, Fr(0))


# --- exact search -------------------------------------------------------------------


def test_exact_huber_example():
    inst = huber_instance()
    res = exact_min_removal(inst)
    assert res.removed == 1
    assert inst.capacity.exact_value(res.removed) == Fr(31, 110)
    assert inst.capacity.exact_value(0b110) == Fr(51, 110)
    assert res.value >= 0.1
    assert res.optimal and res.method == "exact"


def test_exact_measure_example():
    v = measure_from_weights(G11, WeightVector.uniform(11))
    res = exact_min_removal(LusinInstance(G11, v, indicator(11, 0), 0.5, Fr(1, 4)))
    assert res.removed == 1 and res.value == pytest.approx(1 / 11, abs=1e-15)


def test_exact_empty_graph():
    v = measure_from_weights(G11, WeightVector.uniform(11))
    res = exact_min_removal(LusinInstance(G11, v, np.zeros(11), 0.5, Fr(1, 4)))
    assert res.K == G11.full and res.value == 0


def test_exact_search_cap():
    G = build_interval_grid(40, 0, 1)
    v = measure_from_weights(G, WeightVector.uniform(40))
    u = np.arange(40) % 2 * 1.0
    with pytest.raises(SearchCapExceeded):
        exact_min_removal(LusinInstance(G, v, u, 0.5, Fr(1, 10)))


def test_oracle_example_and_cap():
    assert brute_force_oracle(huber_instance()).removed == 1
    G = build_interval_grid(16, 0, 1)
    v = measure_from_weights(G, WeightVector.uniform(16))
    with pytest.raises(SizeCapError):
        brute_force_oracle(LusinInstance(G, v, np.zeros(16), 0.5, Fr(1, 4)))


def test_oracle_never_errors_on_dense_conflicts():
    space = build_interval_grid(8, 0, 1)
    v = measure_from_weights(space, WeightVector.uniform(8))
    u = np.arange(8, dtype=float)
    res = brute_force_oracle(LusinInstance(space, v, u, 0.0, Fr(10)))
    # every singleton K ties; the smallest removed mask keeps the last point
    assert res.K == 1 << 7 and res.removed == 0x7f


# --- greedy ------------------------------------------------------------------------


def test_greedy_star():
    inst = huber_instance()
    g = greedy_removal(inst)
    assert g.removed == exact_min_removal(inst).removed == 1


def test_greedy_path():
    space = build_interval_grid(3, 0, 1)
    v = measure_from_weights(space, WeightVector.uniform(3))
    inst = LusinInstance(space, v, np.array([0.0, 1.0, 0.0]), 0.5, Fr(3, 4))
    assert conflict_pairs(inst).edges == [(0, 1), (1, 2)]
    g = greedy_removal(inst)
    assert g.removed == 0b010 and g.value == pytest.approx(1 / 3)
    assert exact_min_removal(inst).removed == 0b010


def test_greedy_empty():
    v = measure_from_weights(G11, WeightVector.uniform(11))
    g = greedy_removal(LusinInstance(G11, v, np.zeros(11), 0.5, Fr(1, 4)))
    assert g.K == G11.full and g.value == 0


# --- randomized oracle suite ------------------------------------------------------------


@pytest.mark.parametrize("seed", range(60))
def test_exact_equals_oracle(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 4, 12)
    ex, orc, gr = exact_min_removal(inst), brute_force_oracle(inst), greedy_removal(inst)
    assert ex.removed == orc.removed
    assert inst.capacity.raw(ex.removed) == inst.capacity.raw(orc.removed)
    assert gr.value >= ex.value - 1e-12
    for r in (ex, orc, gr):
        assert no_conflicts_in_K(inst, r)


@pytest.mark.parametrize("seed", range(15))
def test_monotone_in_eta_and_scale(seed):
    rng = np.random.default_rng(1000 + seed)
    inst = random_instance(rng, 4, 12)
    base = exact_min_removal(inst).value
    looser = LusinInstance(inst.space, inst.capacity, inst.u, inst.eta + 0.3, inst.scale)
    assert exact_min_removal(looser).value <= base + 1e-15
    smaller = LusinInstance(inst.space, inst.capacity, inst.u, inst.eta, inst.scale / 2)
    assert exact_min_removal(smaller).value <= base + 1e-15


@pytest.mark.parametrize("seed", range(10))
def test_huber_floor(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 14))
    G = build_interval_grid(n, 0, 1)
    eps = Fr(int(rng.integers(1, 4)), 10)
    v = huber_contamination(G, WeightVector.random(n, rng), eps, G.step)
    u = rng.integers(0, 2, size=n).astype(float)
    inst = LusinInstance(G, v, u, 0.5, 2 * G.step)
    res = exact_min_removal(inst)
    if conflict_pairs(inst).edges:
        assert res.value >= float(eps) - 1e-12
    else:
        assert res.value == 0


def test_positive_case_ball_bound():
    for res_n in (11, 101):
        G = build_interval_grid(res_n, 0, 1)
        mus = [WeightVector.uniform(res_n), WeightVector.tent(res_n)]
        v = sup_of_measures(G, mus)
        inst = LusinInstance(G, v, indicator(res_n, 0), 0.5, 2 * G.step)
        res = exact_min_removal(inst)
        ball = closed_neighborhood(G, 1, G.step)
        assert res.value <= max(float(mu.mass(mask_to_bool(ball, res_n))) for mu in mus) + 1e-15


def test_result_json():
    js = exact_min_removal(huber_instance()).to_json()
    assert js["removed"] == "0x1" and js["method"] == "exact"
    assert js["value"] == f"{31 / 110:.15g}"


# --- quantization -------------------------------------------------------------------


def test_quantize_examples():
    q = quantize_function([float(x) for x in G11.coords], 2)
    assert set(q) == {0.0, 0.5, 1.0}
    assert q[4] == 0 and q[5] == 0.5 and q[10] == 1
    assert quantize_function([Fr(1, 3)] * 4, 3).tolist() == [1 / 3] * 4


def test_quantize_sup_norm():
    u = np.random.default_rng(2).random(200) * 5 - 2
    for n in (1, 3, 7, 64):
        q = quantize_function(u, n)
        assert np.all(q <= u) and np.all(u - q < 1 / n)


def test_quantize_needs_positive_level():
    with pytest.raises(InvalidArgument):
        quantize_function([0.1], 0)


def test_partition_by_value_order():
    cells = partition_by_value([1.0, 0.0, 1.0, 2.0, 0.0])
    assert cells == [0b00101, 0b10010, 0b01000]


def test_default_schedule():
    s = default_shrink_schedule(G101)
    assert s[-1] == G101.step and s == sorted(s, reverse=True)


# --- constructive --------------------------------------------------------------------


def test_constructive_measure_succeeds():
    v = measure_from_weights(G101, WeightVector.uniform(101))
    A = realize_descriptor(G101, SetDescriptor.interval(Fr(1, 2), 1))
    u = np.zeros(101)
    u[indices_of(A)] = 1.0
    inst = LusinInstance(G101, v, u, 0.5, 2 * G101.step)
    res = constructive_simple(inst, partition_by_value(u), 0.1)
    assert res.value <= 0.1
    assert no_conflicts_in_K(inst, res)
    ledger = res.details["cells"]
    assert [c["budget"] for c in ledger] == [0.025, 0.0125]
    assert all(c["achieved"] for c in ledger)


def test_constructive_huber_infeasible_names_cell():
    v = huber_contamination(G101, WeightVector.uniform(101), Fr(1, 10), Fr(1, 20))
    u = indicator(101, 0)
    inst = LusinInstance(G101, v, u, 0.5, 2 * G101.step)
    with pytest.raises(ConstructionInfeasible) as err:
        constructive_simple(inst, partition_by_value(u), 0.05)
    assert err.value.cell_index == 0 and err.value.cell_mask == 1


def test_constructive_constant_u():
    v = huber_contamination(G11, WeightVector.uniform(11), Fr(1, 10), Fr(1, 20))
    u = np.full(11, 0.25)
    res = constructive_simple(LusinInstance(G11, v, u, 0.5, Fr(1, 5)), [G11.full], 1e-6)
    assert res.K == G11.full and res.value == 0


@pytest.mark.parametrize("bad", [[0b11, 0b110 | ~0b111 & 0x7ff], [0x7fe], [0, 0x7ff]])
def test_constructive_rejects_bad_partition(bad):
    v = measure_from_weights(G11, WeightVector.uniform(11))
    inst = LusinInstance(G11, v, np.zeros(11), 0.5, Fr(1, 5))
    with pytest.raises(InvalidArgument):
        constructive_simple(inst, bad, 0.1)


def test_constructive_requires_constant_cells():
    v = measure_from_weights(G11, WeightVector.uniform(11))
    inst = LusinInstance(G11, v, np.linspace(0, 1, 11), 0.5, Fr(1, 5))
    with pytest.raises(InvalidArgument):
        constructive_simple(inst, [G11.full], 0.1)


@pytest.mark.parametrize("seed", range(8))
def test_constructive_value_within_budget_on_quantized_measures(seed):
    rng = np.random.default_rng(seed)
    v = measure_from_weights(G101, WeightVector.random(101, rng))
    u = quantize_function(np.sin(np.linspace(0, 3, 101) * (seed + 1)), 2)
    inst = LusinInstance(G101, v, u, 0.5, G101.step)
    try:
        res = constructive_simple(inst, partition_by_value(u), 0.5)
    except ConstructionInfeasible:
        return
    assert res.value <= 0.5
