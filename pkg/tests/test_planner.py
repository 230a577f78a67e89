import itertools

import numpy as np
import pytest

from jwmeasure.fermion import FermionHamiltonian, QuadraticTerm, QuarticTerm, Spin, build_hubbard, chain_hoppings, jw_hamiltonian, jw_quartic
from jwmeasure.oracle import SectorSpec, _popcount, apply_decode, expectation, random_sector_state
from jwmeasure.pauli import PauliString, qubitwise_compatible
from jwmeasure.planner import (
    DecodeRule,
    EntangledBlock,
    MeasurementPlan,
    PlanningError,
    all_pairs,
    allocate_shots,
    check_plan,
    circuit_count_closed_form,
    ghz_rule,
    group_qubitwise,
    hopping_counts,
    hopping_string,
    largest_remainder,
    plan_auto,
    plan_bell,
    plan_hopping_bell,
    plan_hopping_nonentangled,
    plan_noon,
)
from jwmeasure.symmetry import find_families, no_reduction, reduce_sum
from jwmeasure.verify import decode_table_check, random_hamiltonian

UP, DOWN = Spin.UP, Spin.DOWN


def open_interval_clique(n):
    # X-strings (k, i) clash exactly when their open intervals overlap
    return max(sum(1 for k, i in all_pairs(n) if k <= x < i) for x in range(n - 1))


def closed_interval_clique(n):
    # Bell blocks plus Z-strings clash when closed intervals share a site
    return max(sum(1 for k, i in all_pairs(n) if k <= x <= i) for x in range(n))


def min_colouring(strings):
    """Exact minimum number of qubitwise-compatible groups by backtracking."""
    n = len(strings)
    best = [n]

    def go(idx, groups):
        if len(groups) >= best[0]:
            return
        if idx == n:
            best[0] = len(groups)
            return
        p = strings[idx]
        for g in groups:
            if all(qubitwise_compatible(p, q) for q in g):
                g.append(p)
                go(idx + 1, groups)
                g.pop()
        groups.append([p])
        go(idx + 1, groups)
        groups.pop()

    go(0, [])
    return best[0]


@pytest.mark.parametrize("n", range(2, 17))
def test_nonentangled_schedule_is_optimal(n):
    plan = plan_hopping_nonentangled(n, all_pairs(n))
    assert plan.n_circuits == open_interval_clique(n) == n * n // 4
    assert not check_plan(plan)


@pytest.mark.parametrize("n", range(2, 7))
def test_optimum_by_exhaustive_colouring(n):
    strings = [hopping_string(k, i, n) for k, i in all_pairs(n)]
    assert min_colouring(strings) == n * n // 4


@pytest.mark.parametrize("n", range(2, 17))
def test_bell_schedule_is_optimal(n):
    plan = plan_hopping_bell(n, all_pairs(n))
    assert plan.n_circuits == closed_interval_clique(n)
    assert not check_plan(plan)


def test_closed_form_values():
    assert circuit_count_closed_form(10) == 25
    assert [circuit_count_closed_form(n) for n in (2, 4, 6, 8)] == [1, 4, 9, 16]
    # odd sizes: the closed form sits one above the schedule optimum
    for n in (3, 5, 7, 9, 11, 13, 15):
        assert circuit_count_closed_form(n) == n * n // 4 + 1


def test_hopping_counts_n10():
    counts = hopping_counts(10)
    assert counts == {"pairs": 45, "nonentangled": 25, "bell": 29, "formula": 25}


def test_nonentangled_covers_both_species():
    n = 4
    plan = plan_hopping_nonentangled(n, [(0, 2), (1, 3)])
    reps = {str(c.representative) for c in plan.classes}
    assert reps == {"+ X0 Z1 X2", "+ X1 Z2 X3", "+ X4 Z5 X6", "+ X5 Z6 X7"}
    assert plan.n_circuits == 2


def test_pair_validation():
    with pytest.raises(PlanningError):
        plan_hopping_nonentangled(3, [(0, 3)])
    with pytest.raises(PlanningError):
        plan_hopping_nonentangled(3, [(0, 1), (1, 0)])


def test_ghz_rule_examples():
    assert ghz_rule((0, 1), []) == (1, (0,))
    assert ghz_rule((0, 1), [0, 1]) == (-1, (0, 1))
    assert ghz_rule((0, 1, 2, 3), [2, 3]) == (-1, (0, 2, 3))
    assert DecodeRule(-1, (0, 2)).value({0: 1, 2: 0}) == 1
    assert DecodeRule(1, (0, 2)).mask() == 0b101


@pytest.mark.parametrize("kind, entries", [("bell", 8), ("noon", 128)])
def test_decode_tables(kind, entries):
    got, bad, msgs = decode_table_check(kind)
    assert got == entries
    assert bad == 0, msgs


def test_block_validation():
    with pytest.raises(PlanningError):
        EntangledBlock("bell", (0, 0))
    with pytest.raises(PlanningError):
        EntangledBlock("ghz", (0, 1))


def exact_decoded_means(plan, state):
    """Mean decoded value per (circuit, class) from exact outcome probabilities."""
    idx = np.arange(1 << plan.n_qubits, dtype=np.int64)
    out = {}
    for ci, circ in enumerate(plan.circuits):
        probs = np.abs(apply_decode(state, circ.basis, circ.block_specs())) ** 2
        for t in circ.terms:
            vals = t.rule.sign * (1 - 2 * (_popcount(idx & t.rule.mask()) & 1))
            out[(ci, t.class_id)] = float(np.dot(probs, vals))
    return out


@pytest.mark.parametrize("strategy", ["nonentangled", "bell", "entangled", "hybrid"])
@pytest.mark.parametrize("seed", range(3))
def test_plans_decode_exact_expectations(strategy, seed):
    h = random_hamiltonian(3, seed)
    s = jw_hamiltonian(h)
    spec = SectorSpec(3, 1, 2)
    red = reduce_sum(s, (1, 2))
    plan = plan_auto(red, strategy)
    assert not check_plan(plan)
    psi = random_sector_state(spec, seed)
    reps = {c.class_id: c.representative for c in plan.classes}
    for (ci, cid), mean in exact_decoded_means(plan, psi).items():
        assert mean == pytest.approx(expectation(psi, reps[cid]).real, abs=1e-10), (strategy, ci, str(reps[cid]))
    energy = plan.constant + sum(c.weight * expectation(psi, c.representative).real for c in plan.classes)
    assert energy == pytest.approx(expectation(psi, s), abs=1e-10)


def test_noon_plan_families():
    n = 4
    s = jw_quartic(QuarticTerm("same_spin", 3, 2, 1, 0, UP, 1.0), n)
    fams = find_families(s)
    reduced = plan_noon(fams, reduce=True)
    full = plan_noon(fams, reduce=False)
    assert len(reduced.classes) == 2 and len(full.classes) == 8
    assert reduced.n_circuits == full.n_circuits == 1
    psi = random_sector_state(SectorSpec(4, 2, 2), 0)
    for plan in (reduced, full):
        assert not check_plan(plan)
        reps = {c.class_id: c.representative for c in plan.classes}
        for (_, cid), mean in exact_decoded_means(plan, psi).items():
            assert mean == pytest.approx(expectation(psi, reps[cid]).real, abs=1e-10)
    with pytest.raises(PlanningError):
        plan_noon([])


def test_noon_strategy_without_families_rejected():
    s = jw_hamiltonian(build_hubbard(2, chain_hoppings(2, 1.0), 0.0))
    with pytest.raises(PlanningError, match="no four-qubit"):
        plan_auto(reduce_sum(s, (1, 1)), "noon")
    with pytest.raises(PlanningError, match="unknown strategy"):
        plan_auto(reduce_sum(s, (1, 1)), "magic")


def test_hubbard_hybrid_plan():
    s = jw_hamiltonian(build_hubbard(2, chain_hoppings(2, 1.0), 4.0))
    plan = plan_auto(reduce_sum(s, (1, 1)), "hybrid")
    assert [c.basis for c in plan.circuits] == ["XXXX", "ZZZZ"]
    assert plan.constant == pytest.approx(2.0)


def test_bell_plan_pairs_xx_and_yy():
    plan = plan_bell(4, [(0, 2, (1,))])
    assert plan.n_circuits == 1
    assert [str(c.representative) for c in plan.classes] == ["+ X0 Z1 X2", "+ Y0 Z1 Y2"]
    assert plan.circuits[0].basis == "BZB-"
    with pytest.raises(PlanningError):
        plan_bell(3, [(0, 1, (1,))])


def test_group_qubitwise():
    strings = [PauliString.parse(t, 3) for t in ("+ X0 X1", "+ X1 X2", "+ Z0", "+ Y0")]
    groups = group_qubitwise(strings)
    flat = sorted(i for g in groups for i in g)
    assert flat == [0, 1, 2, 3]
    for g in groups:
        for a, b in itertools.combinations(g, 2):
            assert qubitwise_compatible(strings[a], strings[b])


def test_largest_remainder_examples():
    assert largest_remainder([4, 1], 1000) == (800, 200)
    assert largest_remainder([1, 1, 1], 10) == (4, 3, 3)
    assert largest_remainder([1000, 1e-9], 5) == (4, 1)


def test_allocate_shots_rules():
    s = jw_hamiltonian(build_hubbard(2, chain_hoppings(2, 1.0), 4.0))
    plan = plan_auto(reduce_sum(s, (1, 1)), "hybrid")
    shots = allocate_shots(plan, None, 1000)
    assert sum(shots) == 1000 and min(shots) >= 1
    assert allocate_shots(plan, [1, 3], 8) == (2, 6)
    with pytest.raises(PlanningError):
        allocate_shots(plan, None, 1)


def test_check_plan_flags_problems():
    s = jw_hamiltonian(build_hubbard(2, chain_hoppings(2, 1.0), 4.0))
    plan = plan_auto(reduce_sum(s, (1, 1)), "nonentangled")
    from dataclasses import replace

    bad = replace(plan, circuits=plan.circuits[:1])
    assert any("never measured" in p for p in check_plan(bad))
    circ = replace(plan.circuits[0], basis="Z" * plan.n_qubits)
    bad = replace(plan, circuits=(circ, *plan.circuits[1:]))
    assert any("needs X" in p for p in check_plan(bad))


@pytest.mark.parametrize("strategy", ["nonentangled", "hybrid", "entangled"])
def test_plan_json_round_trip(strategy):
    s = jw_hamiltonian(random_hamiltonian(3, 5))
    plan = plan_auto(reduce_sum(s, (1, 1)), strategy)
    plan = plan.with_shots(allocate_shots(plan, None, 10_000))
    text = plan.dumps()
    again = MeasurementPlan.loads(text)
    assert again == plan
    assert again.dumps() == text


def test_reduction_factor_counts():
    n = 4
    quad = tuple(QuadraticTerm(i, k, sp, -1.0) for k, i in all_pairs(n) for sp in (UP, DOWN))
    s = jw_hamiltonian(FermionHamiltonian(n, quad))
    assert len(plan_auto(no_reduction(s), "nonentangled").classes) == 2 * len(plan_auto(reduce_sum(s, (1, 1)), "nonentangled").classes)


def test_empty_sum_gives_empty_plan():
    from jwmeasure.pauli import WeightedPauliSum

    plan = plan_auto(reduce_sum(WeightedPauliSum.from_terms(4, []), (1, 1)))
    assert plan.n_circuits == 0 and not check_plan(plan)
