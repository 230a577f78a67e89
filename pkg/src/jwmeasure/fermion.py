"""Number-conserving fermionic Hamiltonians and their Jordan-Wigner images.

Qubit layout: up-spin site ``i`` is qubit ``i``, down-spin site ``i`` is qubit
``N + i``.  Jordan-Wigner strings stay inside their own spin block, so up and
down operators commute.  The empty mode is ``|0>`` and creation maps to the
spin-lowering combination ``(X - iY)/2``.

Every transformed term is obtained by multiplying the ladder expansions with
:func:`jwmeasure.pauli.multiply`, so signs from overlapping strings are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from pathlib import Path
from typing import Iterable, Sequence

from .pauli import PauliString, WeightedPauliSum, multiply


class Spin(str, Enum):
    UP = "up"
    DOWN = "down"

    @property
    def other(self) -> Spin:
        return Spin.DOWN if self is Spin.UP else Spin.UP


def mode_qubit(site: int, spin: Spin, n_sites: int) -> int:
    return site if spin is Spin.UP else n_sites + site


@dataclass(frozen=True)
class QuadraticTerm:
    """``coeff * (c†_i c_k + c†_k c_i)`` for one spin species, stored with ``i > k``."""

    i: int
    k: int
    spin: Spin
    coeff: float

    def __post_init__(self) -> None:
        if self.i <= self.k:
            raise ValueError(f"quadratic term needs i > k, got i={self.i}, k={self.k}")
        _check_coeff(self.coeff)

    @property
    def key(self) -> tuple:
        return ("t", self.i, self.k, self.spin.value)


@dataclass(frozen=True)
class QuarticTerm:
    """Two-body term plus its Hermitian partner.

    ``same_spin``:  ``c†_iσ c†_jσ c_kσ c_lσ + h.c.`` with ``i > j``, ``k > l``, ``(i,j) >= (k,l)``.
    ``mixed_spin``: ``c†_iσ c†_jσ̄ c_kσ c_lσ̄ + h.c.`` with ``(i,k) >= (j,l)``.

    When the operator is its own adjoint (``(i,j) == (k,l)`` resp. ``i == k and
    j == l``) the coefficient multiplies it once; a density-density term is
    therefore ``coeff * n n``.
    """

    kind: str
    i: int
    j: int
    k: int
    l: int
    spin: Spin
    coeff: float

    def __post_init__(self) -> None:
        _check_coeff(self.coeff)
        i, j, k, l = self.i, self.j, self.k, self.l
        if self.kind == "same_spin":
            if i == j or k == l:
                raise ValueError(f"same-spin term with repeated index vanishes: {(i, j, k, l)}")
            if not (i > j and k > l):
                raise ValueError(f"same-spin term needs i > j and k > l, got {(i, j, k, l)}")
            if (i, j) < (k, l):
                raise ValueError(f"same-spin term needs (i,j) >= (k,l), got {(i, j, k, l)}")
        elif self.kind == "mixed_spin":
            if (i, k) < (j, l):
                raise ValueError(f"mixed-spin term needs (i,k) >= (j,l), got {(i, j, k, l)}")
        else:
            raise ValueError(f"unknown quartic kind {self.kind!r}")

    @property
    def key(self) -> tuple:
        return (self.kind, self.i, self.j, self.k, self.l, self.spin.value)

    def operators(self) -> list[tuple[int, Spin, bool]]:
        """The four ladder operators in written order as (site, spin, dagger)."""
        s = self.spin
        t = s if self.kind == "same_spin" else s.other
        return [(self.i, s, True), (self.j, t, True), (self.k, s, False), (self.l, t, False)]


@dataclass(frozen=True)
class FermionHamiltonian:
    n_sites: int
    quadratic: tuple[QuadraticTerm, ...] = ()
    quartic: tuple[QuarticTerm, ...] = ()
    constant: float = 0.0

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        _check_coeff(self.constant)
        seen: set[tuple] = set()
        for term in (*self.quadratic, *self.quartic):
            idx = (term.i, term.k) if isinstance(term, QuadraticTerm) else (term.i, term.j, term.k, term.l)
            if max(idx) >= self.n_sites or min(idx) < 0:
                raise ValueError(f"site index out of range for N={self.n_sites}: {term}")
            if term.key in seen:
                raise ValueError(f"duplicate term {term.key}")
            seen.add(term.key)

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_sites


def _check_coeff(x: float) -> None:
    if not math.isfinite(x):
        raise ValueError(f"coefficient must be finite, got {x}")


def jw_ladder(site: int, spin: Spin, dagger: bool, n_sites: int) -> list[tuple[complex, PauliString]]:
    """Two-string expansion of one ladder operator.

    ``c†`` is ``½ Z…Z (X - iY)`` and ``c`` is ``½ Z…Z (X + iY)``, with ``Z`` on
    every lower qubit of the same species.
    """
    if not 0 <= site < n_sites:
        raise ValueError(f"site {site} out of range for N={n_sites}")
    q = mode_qubit(site, spin, n_sites)
    base = q - site
    string = {j: "Z" for j in range(base, q)}
    y_coeff = -0.5j if dagger else 0.5j
    n = 2 * n_sites
    return [
        (0.5, PauliString.from_axes(n, {**string, q: "X"})),
        (y_coeff, PauliString.from_axes(n, {**string, q: "Y"})),
    ]


def _compose(ops: Sequence[tuple[int, Spin, bool]], n_sites: int) -> list[tuple[complex, PauliString]]:
    expansions = [jw_ladder(s, sp, d, n_sites) for s, sp, d in ops]
    out = []
    for choice in product(*expansions):
        coeff: complex = 1.0
        string = PauliString.identity(2 * n_sites)
        for c, p in choice:
            coeff *= c
            string = multiply(string, p)
        out.append((coeff, string))
    return out


def _adjoint(ops: Sequence[tuple[int, Spin, bool]]) -> list[tuple[int, Spin, bool]]:
    return [(s, sp, not d) for s, sp, d in reversed(ops)]


def _collect(terms: Iterable[tuple[complex, PauliString]]) -> dict[tuple, complex]:
    acc: dict[tuple, complex] = {}
    for c, s in terms:
        acc[s.axes] = acc.get(s.axes, 0.0) + c * s.coefficient
    return {k: v for k, v in acc.items() if abs(v) > 1e-14}


def _same_operator(a: dict[tuple, complex], b: dict[tuple, complex]) -> bool:
    return a.keys() == b.keys() and all(abs(a[k] - b[k]) < 1e-12 for k in a)


def _hermitian_image(ops: Sequence[tuple[int, Spin, bool]], coeff: float, n_sites: int) -> WeightedPauliSum:
    n = 2 * n_sites
    fwd = _collect(_compose(ops, n_sites))
    back = _collect(_compose(_adjoint(ops), n_sites))
    # self-adjoint products (e.g. n_i n_j) are not doubled
    parts = list(fwd.items()) if _same_operator(fwd, back) else [*fwd.items(), *back.items()]
    return WeightedPauliSum.from_terms(n, [(coeff * c, PauliString(n, axes)) for axes, c in parts])


def jw_quadratic(term: QuadraticTerm, n_sites: int) -> WeightedPauliSum:
    ops = [(term.i, term.spin, True), (term.k, term.spin, False)]
    return _hermitian_image(ops, term.coeff, n_sites)


def jw_quartic(term: QuarticTerm, n_sites: int) -> WeightedPauliSum:
    return _hermitian_image(term.operators(), term.coeff, n_sites)


def jw_hamiltonian(h: FermionHamiltonian) -> WeightedPauliSum:
    n = h.n_qubits
    parts: list[tuple[complex, PauliString]] = [(h.constant, PauliString.identity(n))]
    for q in sorted(h.quadratic, key=lambda t: t.key):
        parts.extend(jw_quadratic(q, h.n_sites).terms)
    for t in sorted(h.quartic, key=lambda t: t.key):
        parts.extend(jw_quartic(t, h.n_sites).terms)
    return WeightedPauliSum.from_terms(n, parts)


def build_hubbard(n_sites: int, hoppings: Iterable[tuple[int, int, float]], U: float) -> FermionHamiltonian:
    """``-Σ t_ij c†_iσ c_jσ + U Σ n_i↑ n_i↓`` with each unordered pair given once."""
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    quadratic = []
    seen = set()
    for a, b, t in hoppings:
        if not (0 <= a < n_sites and 0 <= b < n_sites) or a == b:
            raise ValueError(f"bad hopping pair ({a}, {b}) for N={n_sites}")
        i, k = max(a, b), min(a, b)
        if (i, k) in seen:
            raise ValueError(f"duplicate hopping pair ({a}, {b})")
        seen.add((i, k))
        for spin in (Spin.UP, Spin.DOWN):
            quadratic.append(QuadraticTerm(i, k, spin, -float(t)))
    quartic = []
    if U != 0.0:
        quartic = [QuarticTerm("mixed_spin", s, s, s, s, Spin.UP, float(U)) for s in range(n_sites)]
    return FermionHamiltonian(n_sites, tuple(quadratic), tuple(quartic))


def chain_hoppings(n_sites: int, t: float, periodic: bool = False) -> list[tuple[int, int, float]]:
    pairs = [(i, i + 1, t) for i in range(n_sites - 1)]
    if periodic and n_sites > 2:
        pairs.append((0, n_sites - 1, t))
    return pairs


class HamiltonianParseError(ValueError):
    def __init__(self, message: str, lineno: int | None = None, path: str | None = None):
        self.lineno = lineno
        where = f"{path or '<input>'}:{lineno}: " if lineno is not None else ""
        super().__init__(where + message)


def parse_hamiltonian(text: str, path: str | None = None) -> FermionHamiltonian:
    """Parse the line-oriented Hamiltonian format.

    ::

        sites N
        const <real>
        t  <i> <k> <up|down> <coeff>
        v2 <i> <j> <k> <l> <up|down> <coeff>
        vx <i> <j> <k> <l> <up|down> <coeff>

    Indices must already be in canonical order; nothing is reordered.
    """
    n_sites = None
    constant = 0.0
    quadratic: list[QuadraticTerm] = []
    quartic: list[QuarticTerm] = []
    seen: set[tuple] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        head = tok[0]
        try:
            if head == "sites":
                _arity(tok, 2)
                if n_sites is not None:
                    raise ValueError("'sites' given twice")
                n_sites = int(tok[1])
                if n_sites < 1:
                    raise ValueError("sites must be >= 1")
                continue
            if n_sites is None:
                raise ValueError("'sites N' must precede terms")
            if head == "const":
                _arity(tok, 2)
                constant += float(tok[1])
                continue
            if head == "t":
                _arity(tok, 5)
                i, k = int(tok[1]), int(tok[2])
                if i <= k:
                    raise ValueError(f"non-canonical ordering: quadratic term needs i > k, got i={i}, k={k}")
                term = QuadraticTerm(i, k, Spin(tok[3]), float(tok[4]))
                _check_range((i, k), n_sites)
                if term.key in seen:
                    raise ValueError(f"duplicate term {term.key}")
                seen.add(term.key)
                quadratic.append(term)
            elif head in ("v2", "vx"):
                _arity(tok, 7)
                idx = tuple(int(x) for x in tok[1:5])
                kind = "same_spin" if head == "v2" else "mixed_spin"
                _check_range(idx, n_sites)
                qt = QuarticTerm(kind, *idx, spin=Spin(tok[5]), coeff=float(tok[6]))
                if qt.key in seen:
                    raise ValueError(f"duplicate term {qt.key}")
                seen.add(qt.key)
                quartic.append(qt)
            else:
                raise ValueError(f"unknown record {head!r}")
        except ValueError as exc:
            raise HamiltonianParseError(str(exc), lineno, path) from None
    if n_sites is None:
        raise HamiltonianParseError("missing 'sites N' line", None, path)
    return FermionHamiltonian(n_sites, tuple(quadratic), tuple(quartic), constant)


def load_hamiltonian(path: str | Path) -> FermionHamiltonian:
    path = Path(path)
    return parse_hamiltonian(path.read_text(), str(path))


def format_hamiltonian(h: FermionHamiltonian) -> str:
    lines = [f"sites {h.n_sites}"]
    if h.constant:
        lines.append(f"const {h.constant!r}")
    for q in h.quadratic:
        lines.append(f"t {q.i} {q.k} {q.spin.value} {q.coeff!r}")
    for t in h.quartic:
        head = "v2" if t.kind == "same_spin" else "vx"
        lines.append(f"{head} {t.i} {t.j} {t.k} {t.l} {t.spin.value} {t.coeff!r}")
    return "\n".join(lines) + "\n"


def _arity(tok: list[str], n: int) -> None:
    if len(tok) != n:
        raise ValueError(f"{tok[0]!r} expects {n - 1} fields, got {len(tok) - 1}")


def _check_range(idx: Iterable[int], n_sites: int) -> None:
    for x in idx:
        if not 0 <= x < n_sites:
            raise ValueError(f"site index {x} out of range for N={n_sites}")
