"""Phase-tracked Pauli strings.

A :class:`PauliString` is ``i**phase`` times a tensor product of single-qubit
Pauli operators.  Only non-identity qubits are stored, sorted by qubit index,
so two strings are equal exactly when they are the same operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

AXES = ("I", "X", "Y", "Z")

# (a, b) -> (power of i, product axis) for single-qubit a*b
_MUL: dict[tuple[str, str], tuple[int, str]] = {}
for _a in AXES:
    _MUL[("I", _a)] = (0, _a)
    _MUL[(_a, "I")] = (0, _a)
    _MUL[(_a, _a)] = (0, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _MUL[(_a, _b)] = (1, _c)
    _MUL[(_b, _a)] = (3, _c)

_PHASE_TOKENS = ("+", "+i", "-", "-i")


@dataclass(frozen=True, slots=True)
class PauliString:
    """``i**phase`` times a product of Pauli axes.

    Parameters
    ----------
    n_qubits : int
        Register size.
    axes : tuple of (int, str)
        Non-identity ``(qubit, axis)`` pairs, ascending in qubit.
    phase : int
        Power of ``i`` in ``{0, 1, 2, 3}``.
    """

    n_qubits: int
    axes: tuple[tuple[int, str], ...] = ()
    phase: int = 0

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        if self.phase not in (0, 1, 2, 3):
            raise ValueError(f"phase must be a power of i in 0..3, got {self.phase}")
        prev = -1
        for q, a in self.axes:
            if a not in ("X", "Y", "Z"):
                raise ValueError(f"bad axis {a!r} on qubit {q}")
            if q <= prev or q >= self.n_qubits:
                raise ValueError(f"qubit indices must be ascending and < {self.n_qubits}: {self.axes}")
            prev = q

    @classmethod
    def from_axes(
        cls, n_qubits: int, axes: Mapping[int, str] | Iterable[tuple[int, str]], phase: int = 0
    ) -> PauliString:
        """Build from an unordered qubit -> axis mapping; identities are dropped."""
        items = axes.items() if isinstance(axes, Mapping) else axes
        clean = sorted((int(q), a) for q, a in items if a != "I")
        return cls(n_qubits, tuple(clean), phase % 4)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def parse(cls, text: str, n_qubits: int) -> PauliString:
        """Inverse of :meth:`__str__`, e.g. ``"-i X3 Z4 X7"``."""
        tokens = text.split()
        if not tokens or tokens[0] not in _PHASE_TOKENS:
            raise ValueError(f"missing phase prefix in {text!r}")
        phase = {"+": 0, "+i": 1, "-": 2, "-i": 3}[tokens[0]]
        body = tokens[1:]
        if body == ["I"]:
            return cls(n_qubits, (), phase)
        axes = []
        for tok in body:
            if len(tok) < 2 or tok[0] not in "XYZ" or not tok[1:].isdigit():
                raise ValueError(f"bad axis token {tok!r} in {text!r}")
            axes.append((int(tok[1:]), tok[0]))
        if [q for q, _ in axes] != sorted({q for q, _ in axes}):
            raise ValueError(f"axis tokens must be ascending and unique: {text!r}")
        return cls(n_qubits, tuple(axes), phase)

    def __str__(self) -> str:
        body = " ".join(f"{a}{q}" for q, a in self.axes) or "I"
        return f"{_PHASE_TOKENS[self.phase]} {body}"

    def __iter__(self) -> Iterator[tuple[int, str]]:
        return iter(self.axes)

    def __getitem__(self, qubit: int) -> str:
        for q, a in self.axes:
            if q == qubit:
                return a
        return "I"

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.axes)

    @property
    def coefficient(self) -> complex:
        return 1j**self.phase

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def count(self, axis: str) -> int:
        return sum(1 for _, a in self.axes if a == axis)

    def with_phase(self, phase: int) -> PauliString:
        return PauliString(self.n_qubits, self.axes, phase % 4)

    def unsigned(self) -> PauliString:
        """Same axes with phase +1."""
        return PauliString(self.n_qubits, self.axes, 0)

    def dagger(self) -> PauliString:
        return PauliString(self.n_qubits, self.axes, (-self.phase) % 4)

    def letters(self) -> str:
        """Dense label with qubit 0 first, e.g. ``'XZZX'``."""
        out = ["I"] * self.n_qubits
        for q, a in self.axes:
            out[q] = a
        return "".join(out)


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact operator product ``a @ b`` including the accumulated phase."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")
    phase = a.phase + b.phase
    merged: dict[int, str] = dict(a.axes)
    for q, ax in b.axes:
        k, prod = _MUL[(merged.get(q, "I"), ax)]
        phase += k
        merged[q] = prod
    return PauliString.from_axes(a.n_qubits, merged, phase)


def qubitwise_compatible(a: PauliString, b: PauliString) -> bool:
    """True iff on every qubit the axes agree or one of them is the identity."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")
    da = dict(a.axes)
    return all(da.get(q, ax) == ax for q, ax in b.axes)


def commutes(a: PauliString, b: PauliString) -> bool:
    da = dict(a.axes)
    clashes = sum(1 for q, ax in b.axes if q in da and da[q] != ax)
    return clashes % 2 == 0


def rotate_z_quarter(p: PauliString, quarter_turns: int) -> PauliString:
    """Conjugate by the global z-rotation through ``quarter_turns * pi/2``.

    One quarter turn sends X to Y and Y to -X; Z and I are fixed.
    """
    if quarter_turns not in (1, 2, 3):
        raise ValueError(f"quarter_turns must be 1, 2 or 3, got {quarter_turns}")
    axes = list(p.axes)
    phase = p.phase
    for _ in range(quarter_turns):
        rotated = []
        for q, a in axes:
            if a == "X":
                rotated.append((q, "Y"))
            elif a == "Y":
                rotated.append((q, "X"))
                phase += 2
            else:
                rotated.append((q, a))
        axes = rotated
    return PauliString(p.n_qubits, tuple(axes), phase % 4)


def swap_xy(p: PauliString) -> PauliString:
    """Exchange X and Y axes, leaving the phase alone."""
    table = {"X": "Y", "Y": "X", "Z": "Z"}
    return PauliString(p.n_qubits, tuple((q, table[a]) for q, a in p.axes), p.phase)


@dataclass(frozen=True)
class WeightedPauliSum:
    """Real linear combination of phase-free Pauli strings.

    Build instances with :meth:`from_terms`, which folds string phases into the
    coefficients, merges duplicates and drops terms below ``atol``.
    """

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...] = ()

    @classmethod
    def from_terms(
        cls, n_qubits: int, terms: Iterable[tuple[complex, PauliString]], atol: float = 1e-13
    ) -> WeightedPauliSum:
        acc: dict[tuple[tuple[int, str], ...], complex] = {}
        for coeff, s in terms:
            if s.n_qubits != n_qubits:
                raise ValueError(f"string on {s.n_qubits} qubits in a {n_qubits}-qubit sum")
            acc[s.axes] = acc.get(s.axes, 0.0) + complex(coeff) * s.coefficient
        out = []
        for axes in sorted(acc, key=_sort_key):
            c = acc[axes]
            if abs(c.imag) > 1e-9 * max(1.0, abs(c)):
                raise ValueError(f"non-Hermitian sum: coefficient {c} on {axes}")
            if abs(c.real) > atol:
                out.append((float(c.real), PauliString(n_qubits, axes)))
        return cls(n_qubits, tuple(out))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        return iter(self.terms)

    def __add__(self, other: WeightedPauliSum) -> WeightedPauliSum:
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit-count mismatch")
        return WeightedPauliSum.from_terms(self.n_qubits, [*self.terms, *other.terms])

    def scaled(self, factor: float) -> WeightedPauliSum:
        return WeightedPauliSum.from_terms(self.n_qubits, [(factor * c, s) for c, s in self.terms])

    @property
    def constant(self) -> float:
        for c, s in self.terms:
            if not s.axes:
                return c
        return 0.0

    def non_identity(self) -> list[tuple[float, PauliString]]:
        return [(c, s) for c, s in self.terms if s.axes]

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "terms": [{"coeff": c, "string": str(s)} for c, s in self.terms],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> WeightedPauliSum:
        n = int(doc["n_qubits"])
        return cls.from_terms(n, [(float(t["coeff"]), PauliString.parse(t["string"], n)) for t in doc["terms"]])


def _sort_key(axes: tuple[tuple[int, str], ...]) -> tuple:
    return (len(axes), axes)
