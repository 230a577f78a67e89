"""Oracle-backed identity suite run by ``jwmeasure verify``."""

from __future__ import annotations

import time
from typing import Iterable

import numpy as np

from .fermion import FermionHamiltonian, QuadraticTerm, QuarticTerm, Spin, jw_hamiltonian, jw_quartic
from .oracle import (
    SectorSpec,
    StateVector,
    apply_decode,
    expectation,
    jw_matrix_check,
    random_sector_states,
)
from .pauli import PauliString
from .planner import all_pairs, circuit_count_closed_form, ghz_rule, plan_hopping_nonentangled
from .symmetry import (
    Check,
    VerificationReport,
    find_families,
    half_turn_identities,
    quarter_turn_identities,
    reduce_sum,
    reduction_identity,
    verify_symmetry,
)

# Bell states on (k, i): ket label -> (XX, YY)
BELL_STATES = {
    "Phi+": (("00", "11"), +1),
    "Phi-": (("00", "11"), -1),
    "Psi+": (("01", "10"), +1),
    "Psi-": (("01", "10"), -1),
}
BELL_TABLE = {
    "Phi+": (1, -1),
    "Phi-": (-1, 1),
    "Psi+": (1, 1),
    "Psi-": (-1, -1),
}
BELL_PATTERNS = ("XX", "YY")

# GHZ-type joint eigenstates on four qubits, (|a> + parity |b>)/sqrt(2)
NOON_KETS = {
    1: ("0000", "1111"),
    2: ("0011", "1100"),
    3: ("0101", "1010"),
    4: ("0110", "1001"),
    5: ("1000", "0111"),
    6: ("0100", "1011"),
    7: ("0010", "1101"),
    8: ("0001", "1110"),
}
NOON_PATTERNS = ("XXXX", "YYYY", "XXYY", "YYXX", "XYXY", "YXYX", "XYYX", "YXXY")
# eigenvalue signs for the + member; the - member flips every entry
NOON_TABLE = {
    1: (+1, +1, -1, -1, -1, -1, -1, -1),
    2: (+1, +1, -1, -1, +1, +1, +1, +1),
    3: (+1, +1, +1, +1, -1, -1, +1, +1),
    4: (+1, +1, +1, +1, +1, +1, -1, -1),
    5: (+1, -1, -1, +1, -1, +1, -1, +1),
    6: (+1, -1, -1, +1, +1, -1, +1, -1),
    7: (+1, -1, +1, -1, -1, +1, +1, -1),
    8: (+1, -1, +1, -1, +1, -1, -1, +1),
}


def ket_state(kets: Iterable[str], signs: Iterable[int]) -> np.ndarray:
    """Superposition of computational kets written with qubit 0 leftmost."""
    kets = list(kets)
    n = len(kets[0])
    amps = np.zeros(1 << n, dtype=complex)
    for ket, s in zip(kets, signs):
        amps[sum(int(b) << q for q, b in enumerate(ket))] += s
    return amps / np.linalg.norm(amps)


def _pattern_string(pattern: str) -> PauliString:
    return PauliString.from_axes(len(pattern), dict(enumerate(pattern)))


def decode_table_check(kind: str) -> tuple[int, int, list[str]]:
    """Prepare each eigenstate, decode it, and compare every tabulated eigenvalue.

    Returns ``(entries checked, mismatches, messages)``.  Each entry is checked
    twice: the decoded readout must equal the table, and so must the exact
    expectation value of the operator on the prepared state.
    """
    if kind == "bell":
        cases = {label: (ket_state(kets, (1, par)), BELL_TABLE[label]) for label, (kets, par) in BELL_STATES.items()}
        patterns, block = BELL_PATTERNS, (0, 1)
    else:
        cases = {}
        for idx, kets in NOON_KETS.items():
            for par, tag in ((1, "+"), (-1, "-")):
                cases[f"Psi{idx}{tag}"] = (ket_state(kets, (1, par)), tuple(par * v for v in NOON_TABLE[idx]))
        patterns, block = NOON_PATTERNS, (0, 1, 2, 3)
    n = len(block)
    entries = 0
    messages = []
    for label, (amps, expected) in cases.items():
        decoded = apply_decode(amps, "B" * n, [(kind, block)])
        probs = np.abs(decoded) ** 2
        outcome = int(np.argmax(probs))
        if abs(probs[outcome] - 1.0) > 1e-12:
            messages.append(f"{label}: decode not deterministic (max probability {probs[outcome]:.3g})")
        bits = {q: (outcome >> q) & 1 for q in range(n)}
        for pattern, want in zip(patterns, expected):
            entries += 1
            ys = [q for q, a in enumerate(pattern) if a == "Y"]
            sign, prod = ghz_rule(block, ys)
            got = sign
            for q in prod:
                got *= -1 if bits[q] else 1
            exact = expectation(amps, _pattern_string(pattern)).real
            if got != want or abs(exact - want) > 1e-12:
                messages.append(f"{label} {pattern}: table {want:+d}, decoded {got:+d}, exact {exact:+.3f}")
    return entries, len(messages), messages


def random_hamiltonian(
    n_sites: int, seed: int, n_quadratic: int = 6, n_quartic: int = 6
) -> FermionHamiltonian:
    """Random real number-conserving Hamiltonian with canonical term ordering."""
    rng = np.random.default_rng(seed)
    quad: dict[tuple, QuadraticTerm] = {}
    quart: dict[tuple, QuarticTerm] = {}
    if n_sites >= 2:
        for _ in range(n_quadratic):
            i, k = sorted(rng.choice(n_sites, 2, replace=False), reverse=True)
            t = QuadraticTerm(int(i), int(k), Spin(rng.choice(["up", "down"])), float(rng.normal()))
            quad.setdefault(t.key, t)
    for _ in range(n_quartic):
        spin = Spin(rng.choice(["up", "down"]))
        if n_sites >= 2 and rng.random() < 0.5:
            i, j = sorted(rng.choice(n_sites, 2, replace=False), reverse=True)
            k, l = sorted(rng.choice(n_sites, 2, replace=False), reverse=True)
            if (i, j) < (k, l):
                (i, j), (k, l) = (k, l), (i, j)
            t = QuarticTerm("same_spin", int(i), int(j), int(k), int(l), spin, float(rng.normal()))
        else:
            i, j, k, l = (int(x) for x in rng.integers(0, n_sites, 4))
            if (i, k) < (j, l):
                i, j, k, l = j, i, l, k
                spin = spin.other
            t = QuarticTerm("mixed_spin", i, j, k, l, spin, float(rng.normal()))
        quart.setdefault(t.key, t)
    return FermionHamiltonian(n_sites, tuple(quad.values()), tuple(quart.values()))


def run_suite(
    n_sites: int = 4,
    sector: tuple[int, int] | None = None,
    hamiltonian: FermionHamiltonian | None = None,
    n_states: int = 20,
    seed: int = 0,
    tolerance: float = 1e-10,
    cap: int = 14,
    sabotage: bool = False,
) -> VerificationReport:
    """Run every identity check at ``n_sites`` and collect the residuals."""
    if hamiltonian is not None:
        n_sites = hamiltonian.n_sites
    up, down = sector if sector is not None else (n_sites // 2, (n_sites + 1) // 2)
    spec = SectorSpec(n_sites, up, down, cap=cap)
    report = VerificationReport()

    for mc in jw_matrix_check(min(n_sites, 3)):
        report.checks.append(Check(f"jw algebra {mc.relation}", 2 * min(n_sites, 3), None, mc.max_residual, mc.max_residual < 1e-12))

    ham = hamiltonian if hamiltonian is not None else random_hamiltonian(n_sites, seed)
    pauli_sum = jw_hamiltonian(ham)
    states = random_sector_states(spec, n_states, seed + 1)
    report.checks.append(
        verify_symmetry(half_turn_identities(pauli_sum, sabotage=sabotage), spec, tolerance=tolerance, name="half-turn partners", states=states)
    )
    fam_ids = []
    for t in ham.quartic:
        for fam in find_families(jw_quartic(t, n_sites)):
            fam_ids.extend(quarter_turn_identities(fam))
    if fam_ids:
        report.checks.append(verify_symmetry(fam_ids, spec, tolerance=tolerance, name="quarter-turn family identities", states=states))
    reduction = reduce_sum(pauli_sum, (up, down))
    report.checks.append(verify_symmetry([reduction_identity(pauli_sum, reduction)], spec, tolerance=tolerance, name="reduced sum expectation", states=states))

    for kind in ("bell", "noon"):
        entries, bad, msgs = decode_table_check(kind)
        name = f"{kind} decode table ({entries - bad}/{entries} entries)"
        report.checks.append(Check(name, 2 if kind == "bell" else 4, None, float(bad), bad == 0, "; ".join(msgs[:3])))

    if n_sites >= 2:
        got = plan_hopping_nonentangled(n_sites, all_pairs(n_sites)).n_circuits
        want = circuit_count_closed_form(n_sites)
        report.checks.append(
            Check(f"hopping circuits N={n_sites} (schedule {got}, formula {want})", 2 * n_sites, None, float(abs(got - want)), got == want)
        )
    return report
