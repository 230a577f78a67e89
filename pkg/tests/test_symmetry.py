import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jwmeasure.fermion import FermionHamiltonian, QuadraticTerm, QuarticTerm, Spin, jw_hamiltonian, jw_quadratic, jw_quartic
from jwmeasure.oracle import SectorSpec, expectation, random_sector_state, random_sector_states
from jwmeasure.pauli import PauliString, WeightedPauliSum
from jwmeasure.symmetry import (
    canonical_representative,
    dedup_by_symmetry,
    find_families,
    half_turn_identities,
    half_turn_partner,
    no_reduction,
    quarter_turn_identities,
    quarter_turn_reduce,
    reduce_sum,
    reduction_identity,
    verify_symmetry,
)
from jwmeasure.verify import random_hamiltonian

UP, DOWN = Spin.UP, Spin.DOWN


def test_half_turn_partner_examples():
    p = PauliString.parse("+ X0 Z1 Y2", 3)
    partner, sign = half_turn_partner(p)
    assert str(partner) == "+ Y0 Z1 X2"
    assert sign == -1
    rep, s = canonical_representative(PauliString.parse("+ Y0 Y1", 2))
    assert str(rep) == "+ X0 X1" and s == 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from("IXYZ"), min_size=4, max_size=4), st.integers(0, 1000))
def test_half_turn_holds_on_sector_states(letters, seed):
    p = PauliString.from_axes(4, dict(enumerate(letters)))
    psi = random_sector_state(SectorSpec(2, 1, 1), seed)
    partner, sign = half_turn_partner(p)
    assert expectation(psi, p) == pytest.approx(sign * expectation(psi, partner), abs=1e-12)


def test_half_turn_fails_off_sector():
    # the identity needs fixed particle number; a superposition of sectors breaks it
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 1 / np.sqrt(2)
    p = PauliString.parse("+ X0 X1", 2)
    partner, sign = half_turn_partner(p)
    assert abs(expectation(amps, p) - sign * expectation(amps, partner)) > 0.5


def test_dedup_hopping_pair_collapses():
    s = jw_quadratic(QuadraticTerm(2, 0, UP, 0.7), 3)
    classes = dedup_by_symmetry(s)
    assert len(s) == 2 and len(classes) == 1
    assert str(classes[0].representative) == "+ X0 Z1 X2"
    assert classes[0].multiplier == pytest.approx(0.7)


def test_quartic_reduce_same_spin_example():
    fam = find_families(jw_quartic(QuarticTerm("same_spin", 3, 2, 1, 0, UP, 1.0), 4))
    assert len(fam) == 1
    red = quarter_turn_reduce(fam[0])
    assert [(round(c, 12), str(p)) for c, p in red] == [(-0.5, "+ X0 X1 X2 X3"), (0.5, "+ X0 X1 Y2 Y3")]


def _family_quadruples(n_sites, rng, count):
    out = []
    while len(out) < count:
        idx = rng.choice(n_sites, 4, replace=False)
        i, j = sorted(idx[:2], reverse=True)
        k, l = sorted(idx[2:], reverse=True)
        if (i, j) < (k, l):
            (i, j), (k, l) = (k, l), (i, j)
        out.append((int(i), int(j), int(k), int(l)))
    return out


@pytest.mark.parametrize("seed", range(3))
def test_quarter_turn_identity_random_same_spin(seed):
    n = 5
    rng = np.random.default_rng(seed)
    spec = SectorSpec(n, 2, 3)
    states = random_sector_states(spec, 8, seed)
    for quad in _family_quadruples(n, rng, 5):
        s = jw_quartic(QuarticTerm("same_spin", *quad, spin=UP, coeff=float(rng.normal())), n)
        for fam in find_families(s):
            check = verify_symmetry(quarter_turn_identities(fam), spec, states=states)
            assert check.passed, (quad, check)
            assert len(quarter_turn_reduce(fam)) == 2


def test_mixed_spin_family_reduces_and_verifies():
    n = 3
    spec = SectorSpec(n, 1, 2)
    s = jw_quartic(QuarticTerm("mixed_spin", 2, 1, 0, 0, UP, 0.8), n)
    fams = find_families(s)
    assert len(fams) == 1
    assert len(quarter_turn_reduce(fams[0])) == 2
    assert verify_symmetry(quarter_turn_identities(fams[0]), spec, n_states=10).passed


def test_incomplete_family_rejected():
    fam = find_families(WeightedPauliSum.from_terms(4, [(1.0, PauliString.parse("+ X0 X1 X2 X3", 4))]))[0]
    with pytest.raises(ValueError, match="incomplete"):
        quarter_turn_reduce(fam)


@pytest.mark.parametrize("seed", range(4))
def test_reduced_sum_preserves_expectation(seed):
    h = random_hamiltonian(4, seed)
    s = jw_hamiltonian(h)
    spec = SectorSpec(4, 2, 1)
    red = reduce_sum(s, (2, 1))
    assert red.measured_strings <= red.raw_strings
    check = verify_symmetry([reduction_identity(s, red)], spec, n_states=10, seed=seed)
    assert check.passed, check
    psi = random_sector_state(spec, seed)
    assert expectation(psi, red.as_sum()) == pytest.approx(expectation(psi, s), abs=1e-10)


def test_no_reduction_keeps_every_string():
    s = jw_hamiltonian(random_hamiltonian(3, 1))
    red = no_reduction(s)
    assert red.measured_strings == red.raw_strings == len(s.non_identity())


def test_hopping_only_reduction_halves():
    n = 4
    quad = tuple(QuadraticTerm(i, k, sp, 0.3) for k, i in itertools.combinations(range(n), 2) for sp in (UP, DOWN))
    s = jw_hamiltonian(FermionHamiltonian(n, quad))
    assert reduce_sum(s, (2, 2)).measured_strings * 2 == no_reduction(s).measured_strings


def test_sabotage_is_caught():
    s = jw_hamiltonian(random_hamiltonian(3, 0))
    spec = SectorSpec(3, 1, 1)
    assert verify_symmetry(half_turn_identities(s), spec, n_states=5).passed
    assert not verify_symmetry(half_turn_identities(s, sabotage=True), spec, n_states=5).passed
