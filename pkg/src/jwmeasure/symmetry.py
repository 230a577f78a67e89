"""Expectation-value identities from the global z-rotation symmetry.

On a state with a fixed particle number the global rotation only adds a phase,
so every Pauli string has the same expectation value as its rotated image:

* half turn (``pi/2``): ``<P> = (-1)**nY(P) <P with X and Y exchanged>``;
* eighth turn (``pi/4``): for four X/Y qubits with a common Z-string,
  ``<XXXX> = <XXYY> + <XYXY> + <XYYX>``.

Every reduction here is valid only inside a fixed-number sector, so the
results carry the sector they were built for.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .oracle import SectorSpec, apply_string, random_sector_states
from .pauli import PauliString, WeightedPauliSum, swap_xy

ZERO_TOL = 1e-12


def half_turn_partner(p: PauliString) -> tuple[PauliString, int]:
    """X/Y-exchanged string and the sign ``(-1)**(number of Y in p)``."""
    return swap_xy(p), -1 if p.count("Y") % 2 else 1


def _first_xy(p: PauliString) -> str | None:
    for _, a in p.axes:
        if a in "XY":
            return a
    return None


def canonical_representative(p: PauliString) -> tuple[PauliString, int]:
    """``(r, s)`` with ``<p> = s <r>`` and the lowest X/Y axis of ``r`` equal to X."""
    if _first_xy(p) == "Y":
        return half_turn_partner(p)
    return p, 1


@dataclass(frozen=True)
class SymmetryClass:
    """Strings whose expectation values coincide up to sign in a fixed sector.

    ``<rep> * multiplier`` equals the summed contribution of all members.  For
    half-turn classes each member satisfies ``<member> = sign * <rep>``.
    Quarter-turn classes (``kind == "quarter_turn"``) list the members of the
    whole family they were folded from.
    """

    representative: PauliString
    members: tuple[tuple[PauliString, int], ...]
    multiplier: float
    kind: str = "half_turn"

    @property
    def weight(self) -> float:
        return self.multiplier


def dedup_by_symmetry(pauli_sum: WeightedPauliSum) -> list[SymmetryClass]:
    """Merge each string with its half-turn partner.

    Classes come out in the sum's own term order (by first member).
    """
    groups: dict[tuple, list[tuple[float, PauliString, int]]] = {}
    for c, p in pauli_sum.terms:
        rep, sign = canonical_representative(p)
        groups.setdefault(rep.axes, []).append((c, p, sign))
    out = []
    for axes, entries in groups.items():
        rep = PauliString(pauli_sum.n_qubits, axes)
        mult = sum(c * s for c, _, s in entries)
        out.append(SymmetryClass(rep, tuple((p, s) for _, p, s in entries), float(mult)))
    return out


# --- quarter-turn families --------------------------------------------------


def _split(p: PauliString) -> tuple[tuple[int, ...], tuple[int, ...]]:
    xy = tuple(q for q, a in p.axes if a in "XY")
    z = tuple(q for q, a in p.axes if a == "Z")
    return xy, z


@dataclass(frozen=True)
class QuarticFamily:
    """Signed strings sharing four X/Y qubits and one Z-string."""

    n_qubits: int
    quadruple: tuple[int, int, int, int]
    z_support: tuple[int, ...]
    strings: tuple[tuple[float, PauliString], ...]

    def pattern(self, y_qubits: Iterable[int]) -> PauliString:
        """String with Y on ``y_qubits``, X on the rest of the quadruple, plus the Z-string."""
        ys = set(y_qubits)
        axes = {q: ("Y" if q in ys else "X") for q in self.quadruple}
        axes.update({q: "Z" for q in self.z_support})
        return PauliString.from_axes(self.n_qubits, axes)

    def class_weights(self) -> dict[str, float]:
        """Half-turn class weights keyed ``"xxxx"`` and ``"pair1..3"``.

        ``pair m`` is the class where the lowest quadruple qubit is paired with
        the ``m``-th other one (Y on the remaining two).
        """
        q0, q1, q2, q3 = self.quadruple
        keys = {
            (): "xxxx",
            (q2, q3): "pair1",
            (q1, q3): "pair2",
            (q1, q2): "pair3",
        }
        out = dict.fromkeys(keys.values(), 0.0)
        for c, p in self.strings:
            rep, sign = canonical_representative(p)
            ys = tuple(q for q, a in rep.axes if a == "Y")
            if ys not in keys:
                raise ValueError(f"{p} has an odd Y pattern; not a number-conserving family")
            out[keys[ys]] += c * sign
        return out

    def class_representatives(self) -> dict[str, PauliString]:
        q0, q1, q2, q3 = self.quadruple
        return {
            "xxxx": self.pattern(()),
            "pair1": self.pattern((q2, q3)),
            "pair2": self.pattern((q1, q3)),
            "pair3": self.pattern((q1, q2)),
        }


def find_families(pauli_sum: WeightedPauliSum) -> list[QuarticFamily]:
    """Group strings with exactly four X/Y qubits by (quadruple, Z-string)."""
    groups: dict[tuple, list[tuple[float, PauliString]]] = defaultdict(list)
    for c, p in pauli_sum.terms:
        xy, z = _split(p)
        if len(xy) == 4:
            groups[(xy, z)].append((c, p))
    return [
        QuarticFamily(pauli_sum.n_qubits, xy, z, tuple(entries)) for (xy, z), entries in groups.items()
    ]


def _fold(weights: dict[str, float]) -> dict[str, float]:
    """Eliminate at most one pair class with ``xxxx = pair1 + pair2 + pair3``.

    Picks the option leaving the fewest nonzero weights; ties keep the
    unsubstituted form, then prefer forms that keep the all-X string, then
    the lowest pair index.
    """
    options = [(0, {k: v for k, v in weights.items() if abs(v) > ZERO_TOL})]
    for idx, m in enumerate(("pair1", "pair2", "pair3"), 1):
        b = weights[m]
        cand = {"xxxx": weights["xxxx"] + b}
        for other in ("pair1", "pair2", "pair3"):
            if other != m:
                cand[other] = weights[other] - b
        options.append((idx, {k: v for k, v in cand.items() if abs(v) > ZERO_TOL}))
    _, best = min(options, key=lambda o: (len(o[1]), o[0] > 0, "xxxx" not in o[1], o[0]))
    return best


def quarter_turn_reduce(family: QuarticFamily) -> list[tuple[float, PauliString]]:
    """Two-representative form of a complete eight-string family.

    Returns ``(coefficient, string)`` pairs whose weighted expectation equals
    the family's on every fixed-number state.
    """
    present = {canonical_representative(p)[0].axes for _, p in family.strings}
    if len(present) < 4:
        raise ValueError(
            f"incomplete family on qubits {family.quadruple}: {len(present)} of 4 symmetry classes present"
        )
    weights = family.class_weights()
    reps = family.class_representatives()
    folded = _fold(weights)
    order = ("xxxx", "pair1", "pair2", "pair3")
    if all(abs(c) <= ZERO_TOL for c, _ in family.strings):
        return [(0.0, reps["xxxx"]), (0.0, reps["pair1"])]
    return [(folded[k], reps[k]) for k in order if k in folded]


@dataclass(frozen=True)
class Reduction:
    """What has to be measured after symmetry reduction."""

    n_qubits: int
    constant: float
    classes: tuple[SymmetryClass, ...]
    raw_strings: int
    sector: tuple[int, int] | None

    @property
    def measured_strings(self) -> int:
        return len(self.classes)

    def as_sum(self) -> WeightedPauliSum:
        terms = [(c.multiplier, c.representative) for c in self.classes]
        terms.append((self.constant, PauliString.identity(self.n_qubits)))
        return WeightedPauliSum.from_terms(self.n_qubits, terms)


def no_reduction(pauli_sum: WeightedPauliSum, sector: tuple[int, int] | None = None) -> Reduction:
    classes = tuple(SymmetryClass(p, ((p, 1),), c, "none") for c, p in pauli_sum.non_identity())
    return Reduction(pauli_sum.n_qubits, pauli_sum.constant, classes, len(classes), sector)


def reduce_sum(
    pauli_sum: WeightedPauliSum, sector: tuple[int, int] | None, quarter_turn: bool = True
) -> Reduction:
    """Half-turn deduplication followed by the eighth-turn family fold.

    ``sector`` records the ``(up, down)`` particle numbers the result assumes.
    """
    body = WeightedPauliSum(pauli_sum.n_qubits, tuple(pauli_sum.non_identity()))
    classes = [c for c in dedup_by_symmetry(body) if abs(c.multiplier) > ZERO_TOL]
    if quarter_turn:
        classes = _fold_families(body, classes)
    return Reduction(pauli_sum.n_qubits, pauli_sum.constant, tuple(classes), len(body), sector)


def _fold_families(body: WeightedPauliSum, classes: list[SymmetryClass]) -> list[SymmetryClass]:
    families = {(f.quadruple, f.z_support): f for f in find_families(body)}
    if not families:
        return classes
    out: list[SymmetryClass] = []
    emitted: set[tuple] = set()
    for cls in classes:
        key = _split(cls.representative)
        fam = families.get(key)
        if fam is None:
            out.append(cls)
            continue
        if key in emitted:
            continue
        emitted.add(key)
        weights = fam.class_weights()
        folded = _fold(weights)
        reps = fam.class_representatives()
        members = tuple((p, 1) for _, p in fam.strings)
        live = {k for k, v in weights.items() if abs(v) > ZERO_TOL}
        if set(folded) == live and all(abs(folded[k] - weights[k]) <= ZERO_TOL for k in folded):
            # nothing gained, keep the half-turn classes untouched
            out.extend(c for c in classes if _split(c.representative) == key)
            continue
        for k in ("xxxx", "pair1", "pair2", "pair3"):
            if k in folded:
                out.append(SymmetryClass(reps[k], members, float(folded[k]), "quarter_turn"))
    return out


# --- oracle verification ----------------------------------------------------


@dataclass(frozen=True)
class Identity:
    """Claim ``sum(lhs) == sum(rhs)`` in expectation on sector states."""

    name: str
    lhs: tuple[tuple[float, PauliString], ...]
    rhs: tuple[tuple[float, PauliString], ...] = ()


@dataclass(frozen=True)
class Check:
    name: str
    n_qubits: int
    sector: tuple[int, int] | None
    max_residual: float
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "n_qubits": self.n_qubits,
            "sector": None if self.sector is None else {"up": self.sector[0], "down": self.sector[1]},
            "max_residual": self.max_residual,
            "pass": self.passed,
        }

    def line(self) -> str:
        sec = "-" if self.sector is None else f"{self.sector[0]},{self.sector[1]}"
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status}  {self.name:<40} n_qubits={self.n_qubits:<3} sector={sec:<6} max_residual={self.max_residual:.3e}{extra}"


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_text(self) -> str:
        lines = [c.line() for c in self.checks]
        lines.append(f"{'ALL PASS' if self.passed else 'FAILURES'}: {sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"checks": [c.to_json() for c in self.checks], "pass": self.passed}


def _weighted_expectations(terms: Sequence[tuple[float, PauliString]], states: np.ndarray) -> np.ndarray:
    total = np.zeros(states.shape[0], dtype=complex)
    for c, p in terms:
        total += c * np.sum(np.conj(states) * apply_string(p, states), axis=-1)
    return total


def verify_symmetry(
    identities: Sequence[Identity],
    spec: SectorSpec,
    n_states: int = 20,
    seed: int = 0,
    tolerance: float = 1e-10,
    name: str | None = None,
    states: np.ndarray | None = None,
) -> Check:
    """Largest ``|<lhs> - <rhs>|`` over random states of the sector."""
    if states is None:
        states = random_sector_states(spec, n_states, seed)
    worst = 0.0
    worst_name = ""
    for ident in identities:
        diff = _weighted_expectations(ident.lhs, states) - _weighted_expectations(ident.rhs, states)
        r = float(np.max(np.abs(diff))) if diff.size else 0.0
        if r > worst:
            worst, worst_name = r, ident.name
    label = name or (identities[0].name if len(identities) == 1 else f"{len(identities)} identities")
    passed = worst < tolerance
    return Check(label, spec.n_qubits, (spec.up, spec.down), worst, passed, "" if passed else f"worst: {worst_name}")


def half_turn_identities(pauli_sum: WeightedPauliSum, sabotage: bool = False) -> list[Identity]:
    """``<p> = sign <partner>`` for every non-identity string of the sum.

    ``sabotage`` flips every sign; used as a negative control.
    """
    out = []
    for _, p in pauli_sum.non_identity():
        partner, sign = half_turn_partner(p)
        if sabotage and p.count("X") + p.count("Y"):
            sign = -sign
        out.append(Identity(f"half-turn {p}", ((1.0, p),), ((float(sign), partner),)))
    return out


def quarter_turn_identities(family: QuarticFamily) -> list[Identity]:
    """The eighth-turn identity on the family's qubits and its reduced form."""
    reps = family.class_representatives()
    identity = Identity(
        f"xxxx-xxyy-xyxy-xyyx on {family.quadruple}",
        ((1.0, reps["xxxx"]), (-1.0, reps["pair1"]), (-1.0, reps["pair2"]), (-1.0, reps["pair3"])),
    )
    reduced = Identity(
        f"reduced family on {family.quadruple}",
        tuple(quarter_turn_reduce(family)),
        tuple(family.strings),
    )
    return [identity, reduced]


def reduction_identity(pauli_sum: WeightedPauliSum, reduction: Reduction) -> Identity:
    return Identity(
        "reduced sum preserves expectation",
        tuple((c.multiplier, c.representative) for c in reduction.classes),
        tuple(pauli_sum.non_identity()),
    )
