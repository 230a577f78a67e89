from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jwmeasure.fermion import build_hubbard, chain_hoppings, jw_hamiltonian
from jwmeasure.oracle import (
    BASIS_CHANGE,
    OracleSizeError,
    SectorSpec,
    StateVector,
    apply_decode,
    apply_string,
    exact_ground_state,
    expectation,
    random_sector_state,
    random_sector_states,
    sample,
    sector_matrix,
    string_matrix,
    sum_matrix,
)
from jwmeasure.pauli import PauliString, WeightedPauliSum

# single-qubit matrices in the computational basis |0>, |1>
I2 = np.eye(2)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Y2 = np.array([[0, -1j], [1j, 0]])
Z2 = np.diag([1.0, -1.0])
SINGLE = {"I": I2, "X": X2, "Y": Y2, "Z": Z2}


def kron_matrix(p: PauliString) -> np.ndarray:
    # qubit 0 is the least significant bit, so it is the rightmost factor
    out = np.eye(1)
    for q in reversed(range(p.n_qubits)):
        out = np.kron(out, SINGLE[p[q]])
    return p.coefficient * out


@settings(max_examples=80, deadline=None)
@given(st.lists(st.sampled_from("IXYZ"), min_size=3, max_size=3), st.integers(0, 3))
def test_string_matrix_matches_kron(letters, phase):
    p = PauliString.from_axes(3, dict(enumerate(letters)), phase)
    assert np.allclose(string_matrix(p), kron_matrix(p))


def test_apply_string_stacked_states():
    spec = SectorSpec(2, 1, 1)
    states = random_sector_states(spec, 5, seed=3)
    p = PauliString.parse("+ X0 Z1 Y3", 4)
    stacked = apply_string(p, states)
    for row, psi in zip(stacked, states):
        assert np.allclose(row, string_matrix(p) @ psi)


@pytest.mark.parametrize("n, up, down", [(2, 1, 1), (3, 2, 1), (4, 0, 4), (4, 2, 2)])
def test_sector_basis_size(n, up, down):
    spec = SectorSpec(n, up, down)
    basis = spec.basis()
    assert basis.size == comb(n, up) * comb(n, down)
    assert np.all(spec.contains(basis))


def test_random_sector_state_support_and_norm():
    spec = SectorSpec(3, 1, 2)
    psi = random_sector_state(spec, 7)
    assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-12)
    outside = ~spec.contains(np.arange(1 << 6))
    assert np.all(psi.amplitudes[outside] == 0)
    again = random_sector_state(spec, 7)
    assert np.array_equal(psi.amplitudes, again.amplitudes)


def test_state_validation():
    spec = SectorSpec(1, 1, 0)
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0, 0, 0]), None)
    with pytest.raises(ValueError):
        StateVector.basis_state(2, 0, spec)
    psi = StateVector.basis_state(2, 1, spec)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1


def test_cap_enforced():
    with pytest.raises(OracleSizeError):
        SectorSpec(8, 1, 1)
    assert SectorSpec(8, 1, 1, cap=16).n_qubits == 16


def test_sum_expectation_is_real_and_matches_dense():
    h = jw_hamiltonian(build_hubbard(2, chain_hoppings(2, 1.0), 4.0))
    psi = random_sector_state(SectorSpec(2, 1, 1), 0)
    e = expectation(psi, h)
    dense = np.vdot(psi.amplitudes, sum_matrix(h) @ psi.amplitudes)
    assert isinstance(e, float)
    assert e == pytest.approx(dense.real, abs=1e-12)


def test_sector_matrix_rejects_leaking_operator():
    op = WeightedPauliSum.from_terms(4, [(1.0, PauliString.parse("+ X0", 4))])
    with pytest.raises(ValueError, match="conserve"):
        sector_matrix(op, SectorSpec(2, 1, 1))


def test_ground_state_matches_full_diagonalisation():
    h = jw_hamiltonian(build_hubbard(3, chain_hoppings(3, 1.0), 2.0))
    spec = SectorSpec(3, 2, 1)
    e, psi = exact_ground_state(h, spec)
    full = sum_matrix(h)
    basis = spec.basis()
    sub = full[np.ix_(basis, basis)]
    assert e == pytest.approx(np.linalg.eigvalsh(sub)[0], abs=1e-10)
    assert expectation(psi, h) == pytest.approx(e, abs=1e-10)


def test_basis_change_diagonalises_axis():
    for letter, u in BASIS_CHANGE.items():
        rotated = u @ SINGLE[letter] @ u.conj().T
        assert np.allclose(rotated, Z2)


@pytest.mark.parametrize("letters", ["XZ", "YY", "ZX", "XY"])
def test_single_qubit_decode_gives_eigenvalue_distribution(letters):
    psi = random_sector_state(SectorSpec(1, 1, 0), 1)
    p = PauliString.from_axes(2, dict(enumerate(letters)))
    probs = np.abs(apply_decode(psi, letters)) ** 2
    parity = np.array([(-1) ** bin(b).count("1") for b in range(4)])
    assert np.dot(probs, parity) == pytest.approx(expectation(psi, p).real, abs=1e-12)


def test_overlapping_blocks_rejected():
    psi = StateVector.basis_state(4, 0)
    with pytest.raises(ValueError, match="overlapping"):
        apply_decode(psi, "BBBB", [("bell", (0, 1)), ("bell", (1, 2))])


def test_sample_deterministic_and_complete():
    psi = random_sector_state(SectorSpec(2, 1, 1), 2)
    a = sample(psi, "XXZZ", [], 500, 11)
    b = sample(psi, "XXZZ", [], 500, 11)
    assert a == b
    assert sum(c for _, c in a) == 500
