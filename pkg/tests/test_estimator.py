import math

import numpy as np
import pytest

from jwmeasure.estimator import SectorError, circuit_stream, estimate_energy, fit_exponent
from jwmeasure.fermion import FermionHamiltonian, QuarticTerm, Spin, build_hubbard, chain_hoppings, jw_hamiltonian
from jwmeasure.oracle import SectorSpec, _popcount, apply_decode, exact_ground_state, random_sector_state
from jwmeasure.planner import PlanningError, allocate_shots, plan_auto
from jwmeasure.symmetry import reduce_sum
from jwmeasure.verify import random_hamiltonian


@pytest.fixture(scope="module")
def hubbard():
    s = jw_hamiltonian(build_hubbard(2, chain_hoppings(2, 1.0), 4.0))
    spec = SectorSpec(2, 1, 1)
    e, psi = exact_ground_state(s, spec)
    plan = plan_auto(reduce_sum(s, (1, 1)), "hybrid")
    return s, plan, psi, e


def predicted_stderr(plan, state, shots):
    """Exact sampling stderr of the estimator from outcome probabilities."""
    weights = {c.class_id: c.weight for c in plan.classes}
    mult = {cid: len(v) for cid, v in plan.class_circuits().items()}
    idx = np.arange(1 << plan.n_qubits, dtype=np.int64)
    var = 0.0
    for circ, n in zip(plan.circuits, shots):
        probs = np.abs(apply_decode(state, circ.basis, circ.block_specs())) ** 2
        per_shot = np.zeros(idx.size)
        for t in circ.terms:
            per_shot += weights[t.class_id] / mult[t.class_id] * t.rule.sign * (1 - 2 * (_popcount(idx & t.rule.mask()) & 1))
        mean = np.dot(probs, per_shot)
        var += (np.dot(probs, per_shot**2) - mean**2) / n
    return math.sqrt(var)


def test_ground_energy(hubbard):
    _, _, _, e = hubbard
    assert e == pytest.approx(2 - 2 * math.sqrt(2), abs=1e-12)


def test_estimate_within_five_sigma(hubbard):
    _, plan, psi, e = hubbard
    est = estimate_energy(plan, psi, seed=1, total_shots=100_000, exact_energy=e)
    assert abs(est.zscore) < 5
    assert est.total_shots == 100_000


def test_stderr_matches_prediction(hubbard):
    _, plan, psi, e = hubbard
    est = estimate_energy(plan, psi, seed=2, total_shots=200_000, exact_energy=e)
    want = predicted_stderr(plan, psi, allocate_shots(plan, None, 200_000))
    assert est.stderr == pytest.approx(want, rel=0.05)


def test_z_scores_are_roughly_standard_normal(hubbard):
    _, plan, psi, e = hubbard
    z = [estimate_energy(plan, psi, seed=s, total_shots=4000, exact_energy=e).zscore for s in range(60)]
    assert abs(np.mean(z)) < 0.5
    assert 0.6 < np.std(z) < 1.5


def test_deterministic_under_seed(hubbard):
    _, plan, psi, _ = hubbard
    a = estimate_energy(plan, psi, seed=7, total_shots=5000)
    b = estimate_energy(plan, psi, seed=7, total_shots=5000)
    c = estimate_energy(plan, psi, seed=8, total_shots=5000)
    assert a == b
    assert a.energy != c.energy


def test_circuit_streams_independent():
    a = circuit_stream(3, 0).integers(0, 2**31, 4)
    b = circuit_stream(3, 1).integers(0, 2**31, 4)
    assert not np.array_equal(a, b)


def test_class_estimates_carry_exact_values(hubbard):
    _, plan, psi, _ = hubbard
    est = estimate_energy(plan, psi, seed=0, total_shots=20_000)
    assert len(est.classes) == len(plan.classes)
    for c in est.classes:
        assert c.exact is not None
        assert c.stderr == 0 or abs(c.zscore) < 6


def test_diagonal_hamiltonian_on_eigenstate_is_exact():
    h = FermionHamiltonian(2, (), (QuarticTerm("mixed_spin", 0, 0, 0, 0, Spin.UP, 4.0), QuarticTerm("mixed_spin", 1, 1, 1, 1, Spin.UP, 4.0)))
    s = jw_hamiltonian(h)
    spec = SectorSpec(2, 1, 1)
    e, psi = exact_ground_state(s, spec)
    plan = plan_auto(reduce_sum(s, (1, 1)), "hybrid")
    assert all(set(c.basis) <= {"Z", "-"} for c in plan.circuits)
    for shots in (1, 10, 1000):
        est = estimate_energy(plan, psi, seed=0, total_shots=max(shots, plan.n_circuits), exact_energy=e)
        assert est.energy == pytest.approx(e, abs=1e-12)
        assert est.stderr == 0


def test_sector_mismatch_rejected(hubbard):
    s, plan, _, _ = hubbard
    other = random_sector_state(SectorSpec(2, 2, 1), 0)
    with pytest.raises(SectorError):
        estimate_energy(plan, other, seed=0, total_shots=100)
    from dataclasses import replace

    with pytest.raises(SectorError):
        estimate_energy(replace(plan, sector=None), random_sector_state(SectorSpec(2, 1, 1), 0), seed=0, total_shots=100)


def test_shot_budget_errors(hubbard):
    _, plan, psi, _ = hubbard
    with pytest.raises(PlanningError):
        estimate_energy(plan, psi, seed=0, total_shots=0)
    with pytest.raises(PlanningError):
        estimate_energy(plan, psi, seed=0)
    est = estimate_energy(plan.with_shots((10, 20)), psi, seed=0)
    assert est.total_shots == 30


def test_fit_exponent():
    shots = [1e3, 1e4, 1e5, 1e6]
    assert fit_exponent(shots, [s**-0.5 for s in shots]) == pytest.approx(-0.5)


@pytest.mark.parametrize("seed", range(2))
def test_random_hamiltonian_estimate(seed):
    s = jw_hamiltonian(random_hamiltonian(3, seed))
    spec = SectorSpec(3, 1, 1)
    psi = random_sector_state(spec, seed)
    from jwmeasure.oracle import expectation

    exact = expectation(psi, s)
    plan = plan_auto(reduce_sum(s, (1, 1)), "entangled")
    est = estimate_energy(plan, psi, seed=seed, total_shots=200_000, exact_energy=exact)
    assert abs(est.zscore) < 5
