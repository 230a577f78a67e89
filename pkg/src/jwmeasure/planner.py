"""Measurement circuits for symmetry-reduced Pauli sums.

A circuit measures every qubit once.  Its basis string has one letter per
qubit (qubit 0 first): ``X``/``Y``/``Z`` for single-qubit bases, ``B`` for a
qubit inside an entangled decode block and ``-`` for an untouched qubit
(read out in the computational basis like ``Z``).

Every measured term carries a :class:`DecodeRule`: its value on a shot is
``sign * prod(z_q for q in product_qubits)`` with ``z_q = +1`` for bit 0 and
``-1`` for bit 1.

Entangled blocks are GHZ-type decoders.  ``bell`` on ``(k, i)`` applies
CNOT(k -> i) then H(k); ``noon`` on ``(q0, q1, q2, q3)`` applies CNOT(q0 -> q3),
CNOT(q0 -> q2), CNOT(q0 -> q1), then H(q0).  After either, an X/Y pattern
with Y on the set ``S`` (``|S|`` even) decodes to
``(-1)**(|S|/2) * z_q0 * prod(z_j for j in S if j != q0)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .pauli import PauliString
from .symmetry import QuarticFamily, Reduction, SymmetryClass

STRATEGIES = ("nonentangled", "bell", "noon", "entangled", "hybrid")


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class DecodeRule:
    sign: int
    product_qubits: tuple[int, ...]

    def value(self, bits: Mapping[int, int]) -> int:
        """Decoded +-1 for one shot given measured bits per qubit."""
        v = self.sign
        for q in self.product_qubits:
            v *= -1 if bits[q] else 1
        return v

    def mask(self) -> int:
        m = 0
        for q in self.product_qubits:
            m |= 1 << q
        return m


@dataclass(frozen=True)
class EntangledBlock:
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        size = {"bell": 2, "noon": 4}.get(self.kind)
        if size is None:
            raise PlanningError(f"unknown block kind {self.kind!r}")
        if len(self.qubits) != size or len(set(self.qubits)) != size:
            raise PlanningError(f"{self.kind} block needs {size} distinct qubits, got {self.qubits}")


@dataclass(frozen=True)
class MeasuredTerm:
    class_id: int
    rule: DecodeRule


@dataclass(frozen=True)
class MeasurementCircuit:
    basis: str
    blocks: tuple[EntangledBlock, ...] = ()
    terms: tuple[MeasuredTerm, ...] = ()

    def block_specs(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(b.kind, b.qubits) for b in self.blocks]


@dataclass(frozen=True)
class PlanClass:
    class_id: int
    representative: PauliString
    weight: float


@dataclass(frozen=True)
class MeasurementPlan:
    n_qubits: int
    sector: tuple[int, int] | None
    classes: tuple[PlanClass, ...]
    circuits: tuple[MeasurementCircuit, ...]
    constant: float = 0.0
    shots: tuple[int, ...] | None = None
    notes: tuple[str, ...] = ()

    @property
    def n_circuits(self) -> int:
        return len(self.circuits)

    def with_shots(self, shots: Sequence[int]) -> MeasurementPlan:
        if len(shots) != len(self.circuits):
            raise PlanningError("one shot count per circuit required")
        return replace(self, shots=tuple(int(s) for s in shots))

    def class_circuits(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {c.class_id: [] for c in self.classes}
        for ci, circ in enumerate(self.circuits):
            for t in circ.terms:
                out[t.class_id].append(ci)
        return out

    def to_json(self) -> dict:
        circuits = []
        for i, c in enumerate(self.circuits):
            circuits.append(
                {
                    "basis": c.basis,
                    "blocks": [{"kind": b.kind, "qubits": list(b.qubits)} for b in c.blocks],
                    "terms": [
                        {"class_id": t.class_id, "sign": t.rule.sign, "product_qubits": list(t.rule.product_qubits)}
                        for t in c.terms
                    ],
                    "shots": None if self.shots is None else self.shots[i],
                }
            )
        return {
            "n_qubits": self.n_qubits,
            "sector": None if self.sector is None else {"up": self.sector[0], "down": self.sector[1]},
            "constant": self.constant,
            "classes": [
                {"class_id": c.class_id, "representative": str(c.representative), "weight": c.weight}
                for c in self.classes
            ],
            "circuits": circuits,
            "notes": list(self.notes),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    @classmethod
    def from_json(cls, doc: Mapping) -> MeasurementPlan:
        n = int(doc["n_qubits"])
        sec = doc.get("sector")
        classes = tuple(
            PlanClass(int(c["class_id"]), PauliString.parse(c["representative"], n), float(c["weight"]))
            for c in doc["classes"]
        )
        circuits = []
        shots = []
        for c in doc["circuits"]:
            if len(c["basis"]) != n:
                raise PlanningError(f"basis {c['basis']!r} does not cover {n} qubits")
            blocks = tuple(EntangledBlock(b["kind"], tuple(b["qubits"])) for b in c["blocks"])
            terms = tuple(
                MeasuredTerm(int(t["class_id"]), DecodeRule(int(t["sign"]), tuple(t["product_qubits"])))
                for t in c["terms"]
            )
            circuits.append(MeasurementCircuit(c["basis"], blocks, terms))
            shots.append(c.get("shots"))
        shot_tuple = None if any(s is None for s in shots) else tuple(int(s) for s in shots)
        return cls(
            n,
            None if sec is None else (int(sec["up"]), int(sec["down"])),
            classes,
            tuple(circuits),
            float(doc.get("constant", 0.0)),
            shot_tuple,
            tuple(doc.get("notes", ())),
        )

    @classmethod
    def loads(cls, text: str) -> MeasurementPlan:
        return cls.from_json(json.loads(text))


# --- decode rules ----------------------------------------------------------


def ghz_rule(block: Sequence[int], y_qubits: Iterable[int]) -> tuple[int, tuple[int, ...]]:
    """Sign and product qubits decoding an even-Y X/Y pattern on a block."""
    ys = set(y_qubits)
    if len(ys) % 2:
        raise PlanningError("odd number of Y axes is not diagonal in the GHZ basis")
    q0 = block[0]
    sign = -1 if (len(ys) // 2) % 2 else 1
    return sign, tuple(sorted({q0} | (ys - {q0})))


def block_diagonal(p: PauliString, block: Sequence[int]) -> bool:
    """Whether ``p`` is decodable by a GHZ block on exactly its X/Y qubits."""
    xy = tuple(q for q, a in p.axes if a in "XY")
    return xy == tuple(sorted(block)) and p.count("Y") % 2 == 0


# --- circuit builder -------------------------------------------------------


class _CircuitBuilder:
    """Mutable per-qubit occupancy while packing one circuit."""

    def __init__(self, n_qubits: int):
        self.n = n_qubits
        self.letters: dict[int, str] = {}
        self.blocks: list[EntangledBlock] = []
        self.terms: list[MeasuredTerm] = []

    def _block_of(self, qubits: tuple[int, ...]) -> EntangledBlock | None:
        for b in self.blocks:
            if tuple(sorted(b.qubits)) == qubits:
                return b
        return None

    def fits_plain(self, p: PauliString) -> bool:
        return all(self.letters.get(q, a) == a for q, a in p.axes)

    def add_plain(self, class_id: int, p: PauliString) -> None:
        for q, a in p.axes:
            self.letters[q] = a
        self.terms.append(MeasuredTerm(class_id, DecodeRule(1, p.support)))

    def fits_block(self, p: PauliString, kind: str) -> bool:
        xy = tuple(q for q, a in p.axes if a in "XY")
        zs = [q for q, a in p.axes if a == "Z"]
        if any(self.letters.get(q, "Z") != "Z" for q in zs):
            return False
        if self._block_of(xy) is not None:
            return self._block_of(xy).kind == kind
        return all(q not in self.letters for q in xy)

    def add_block(self, class_id: int, p: PauliString, kind: str) -> None:
        xy = tuple(q for q, a in p.axes if a in "XY")
        block = self._block_of(xy)
        if block is None:
            block = EntangledBlock(kind, xy)
            self.blocks.append(block)
            for q in xy:
                self.letters[q] = "B"
        zs = [q for q, a in p.axes if a == "Z"]
        for q in zs:
            self.letters[q] = "Z"
        sign, prod = ghz_rule(block.qubits, [q for q, a in p.axes if a == "Y"])
        self.terms.append(MeasuredTerm(class_id, DecodeRule(sign, tuple(sorted(set(prod) | set(zs))))))

    def fits(self, p: PauliString, mode: str) -> bool:
        return self.fits_plain(p) if mode == "plain" else self.fits_block(p, mode)

    def add(self, class_id: int, p: PauliString, mode: str) -> None:
        if mode == "plain":
            self.add_plain(class_id, p)
        else:
            self.add_block(class_id, p, mode)

    def build(self) -> MeasurementCircuit:
        basis = "".join(self.letters.get(q, "-") for q in range(self.n))
        blocks = tuple(sorted(self.blocks, key=lambda b: b.qubits[0]))
        return MeasurementCircuit(basis, blocks, tuple(self.terms))


def _first_fit(
    n_qubits: int, items: Sequence[tuple[int, PauliString, str]], builders: list[_CircuitBuilder] | None = None
) -> list[_CircuitBuilder]:
    builders = [] if builders is None else builders
    for class_id, p, mode in items:
        for b in builders:
            if b.fits(p, mode):
                b.add(class_id, p, mode)
                break
        else:
            b = _CircuitBuilder(n_qubits)
            b.add(class_id, p, mode)
            builders.append(b)
    return builders


def _packing_order(items: Sequence[tuple[int, PauliString, str]]) -> list[tuple[int, PauliString, str]]:
    # support length descending, lowest qubit ascending, then input order
    return sorted(items, key=lambda it: (-len(it[1].axes), it[1].axes[0][0] if it[1].axes else -1))


def group_qubitwise(strings: Sequence[PauliString]) -> list[list[int]]:
    """Greedy first-fit qubitwise-compatible grouping; returns index lists."""
    if not strings:
        return []
    items = _packing_order([(i, p, "plain") for i, p in enumerate(strings)])
    return [[t.class_id for t in b.terms] for b in _first_fit(strings[0].n_qubits, items)]


# --- hopping schedules -----------------------------------------------------


def circuit_count_closed_form(n_sites: int) -> int:
    """Circuit count quoted for measuring all hopping pairs without entanglement.

    ``int[(N+1)/2]**2 + (N-1)(N/2 - int[(N+1)/2])``.
    """
    if n_sites < 2:
        raise ValueError("closed form needs N >= 2")
    h = (n_sites + 1) // 2
    value = h * h + (n_sites - 1) * (n_sites / 2 - h)
    return int(round(value))


def hopping_string(k: int, i: int, n_qubits: int, offset: int = 0, axis: str = "X") -> PauliString:
    """``A_k Z_(k+1) ... Z_(i-1) A_i`` shifted by ``offset``."""
    axes = {offset + k: axis, offset + i: axis}
    axes.update({offset + j: "Z" for j in range(k + 1, i)})
    return PauliString.from_axes(n_qubits, axes)


def _check_pairs(n_sites: int, pairs: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    out = []
    seen = set()
    for a, b in pairs:
        if not (0 <= a < n_sites and 0 <= b < n_sites) or a == b:
            raise PlanningError(f"pair ({a}, {b}) out of range for N={n_sites}")
        k, i = min(a, b), max(a, b)
        if (k, i) in seen:
            raise PlanningError(f"duplicate pair ({k}, {i})")
        seen.add((k, i))
        out.append((k, i))
    return out


def all_pairs(n_sites: int) -> list[tuple[int, int]]:
    return [(k, i) for i in range(n_sites) for k in range(i)]


def plan_hopping_nonentangled(
    n_sites: int, pairs: Iterable[tuple[int, int]], sector: tuple[int, int] | None = None
) -> MeasurementPlan:
    """Distance-layered X-basis schedule for hopping terms of both species.

    Each pair ``(k, i)`` is represented by its X-string (the Y-string partner
    is implied by the half-turn symmetry).  Pairs at the same distance are
    packed first-fit in ascending ``k``; layers are never merged.  The down
    species uses the same circuits on qubits shifted by ``N``.
    """
    pairs = _check_pairs(n_sites, pairs)
    n = 2 * n_sites
    classes: list[PlanClass] = []
    builders: list[_CircuitBuilder] = []
    by_distance: dict[int, list[tuple[int, int]]] = {}
    for k, i in pairs:
        by_distance.setdefault(i - k, []).append((k, i))
    for d in sorted(by_distance):
        layer: list[_CircuitBuilder] = []
        for k, i in sorted(by_distance[d]):
            up = hopping_string(k, i, n)
            down = hopping_string(k, i, n, offset=n_sites)
            cid = len(classes)
            classes += [PlanClass(cid, up, 1.0), PlanClass(cid + 1, down, 1.0)]
            for b in layer:
                if b.fits_plain(up):
                    break
            else:
                b = _CircuitBuilder(n)
                layer.append(b)
            b.add_plain(cid, up)
            b.add_plain(cid + 1, down)
        builders += layer
    notes = (f"hopping pairs={len(pairs)}", "scheme=nonentangled")
    return MeasurementPlan(n, sector, tuple(classes), tuple(b.build() for b in builders), notes=notes)


def plan_bell(
    n_qubits: int, pairs: Iterable[tuple[int, int, Sequence[int]]], sector: tuple[int, int] | None = None
) -> MeasurementPlan:
    """Bell-basis circuits measuring ``XZ..ZX`` and ``YZ..ZY`` of each pair together.

    ``pairs`` holds ``(k, i, z_support)`` on qubits.  Both strings of a pair
    are listed as classes of weight ½ so their sum is the hopping operator.
    Pairs go first-fit into circuits where their block qubits are free and
    their Z-string avoids every block.
    """
    classes: list[PlanClass] = []
    items = []
    for k, i, zs in pairs:
        if k == i or set(zs) & {k, i}:
            raise PlanningError(f"bad bell pair ({k}, {i}) with string {tuple(zs)}")
        axes_x = {k: "X", i: "X", **{q: "Z" for q in zs}}
        axes_y = {k: "Y", i: "Y", **{q: "Z" for q in zs}}
        cid = len(classes)
        xs = PauliString.from_axes(n_qubits, axes_x)
        ys = PauliString.from_axes(n_qubits, axes_y)
        classes += [PlanClass(cid, xs, 0.5), PlanClass(cid + 1, ys, 0.5)]
        items.append((cid, xs, ys))
    builders: list[_CircuitBuilder] = []
    for cid, xs, ys in items:
        for b in builders:
            if b.fits_block(xs, "bell"):
                break
        else:
            b = _CircuitBuilder(n_qubits)
            builders.append(b)
        b.add_block(cid, xs, "bell")
        b.add_block(cid + 1, ys, "bell")
    return MeasurementPlan(n_qubits, sector, tuple(classes), tuple(b.build() for b in builders), notes=("scheme=bell",))


def plan_hopping_bell(
    n_sites: int, pairs: Iterable[tuple[int, int]], sector: tuple[int, int] | None = None
) -> MeasurementPlan:
    """Bell-basis schedule for hopping pairs of both species, layered by distance."""
    pairs = _check_pairs(n_sites, pairs)
    ordered = sorted(pairs, key=lambda p: (p[1] - p[0], p[0]))
    qubit_pairs = []
    for k, i in ordered:
        for off in (0, n_sites):
            qubit_pairs.append((off + k, off + i, tuple(range(off + k + 1, off + i))))
    return plan_bell(2 * n_sites, qubit_pairs, sector)


def plan_noon(
    families: Sequence[QuarticFamily], reduce: bool = True, sector: tuple[int, int] | None = None
) -> MeasurementPlan:
    """One NOON decode block per family; all eight patterns come from one shot.

    With ``reduce`` the family's eighth-turn representatives are measured,
    otherwise every string of the family.
    """
    from .symmetry import quarter_turn_reduce

    if not families:
        raise PlanningError("no quartic families to measure")
    n = families[0].n_qubits
    classes: list[PlanClass] = []
    items = []
    for fam in families:
        terms = quarter_turn_reduce(fam) if reduce else list(fam.strings)
        for c, p in terms:
            cid = len(classes)
            classes.append(PlanClass(cid, p, c))
            items.append((cid, p, "noon"))
    builders = _first_fit(n, items)
    return MeasurementPlan(n, sector, tuple(classes), tuple(b.build() for b in builders), notes=("scheme=noon",))


# --- automatic planning ----------------------------------------------------


def _mode(p: PauliString, strategy: str) -> str:
    xy = [q for q, a in p.axes if a in "XY"]
    even_y = p.count("Y") % 2 == 0
    if len(xy) == 4 and even_y and strategy in ("noon", "entangled", "hybrid"):
        return "noon"
    if len(xy) == 2 and even_y and p.count("X") in (0, 2) and strategy in ("bell", "entangled"):
        return "bell"
    return "plain"


def plan_auto(reduction: Reduction, strategy: str = "hybrid") -> MeasurementPlan:
    """Greedy first-fit plan covering every class of ``reduction``.

    ``nonentangled`` uses single-qubit bases only; ``bell`` and ``noon``
    measure two- and four-qubit X/Y patterns through decode blocks;
    ``entangled`` uses both; ``hybrid`` keeps hopping and diagonal terms
    nonentangled and sends four-qubit families to NOON blocks.
    """
    if strategy not in STRATEGIES:
        raise PlanningError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")
    classes = tuple(
        PlanClass(i, c.representative, c.multiplier) for i, c in enumerate(reduction.classes)
    )
    items = [(c.class_id, c.representative, _mode(c.representative, strategy)) for c in classes]
    if strategy == "noon" and not any(m == "noon" for _, _, m in items):
        raise PlanningError("strategy 'noon' requested but the sum has no four-qubit families")
    builders = _first_fit(reduction.n_qubits, _packing_order(items))
    notes = (
        f"strategy={strategy}",
        f"raw_strings={reduction.raw_strings}",
        f"measured_strings={reduction.measured_strings}",
    )
    return MeasurementPlan(
        reduction.n_qubits,
        reduction.sector,
        classes,
        tuple(b.build() for b in builders),
        reduction.constant,
        None,
        notes,
    )


# --- shots -----------------------------------------------------------------


def circuit_weights(plan: MeasurementPlan, weights: Mapping[int, float] | None = None) -> list[float]:
    """Sum of |weight| over the classes each circuit measures."""
    w = {c.class_id: c.weight for c in plan.classes} if weights is None else dict(weights)
    return [sum(abs(w[t.class_id]) for t in c.terms) for c in plan.circuits]


def allocate_shots(
    plan: MeasurementPlan, weights: Mapping[int, float] | Sequence[float] | None, total_shots: int
) -> tuple[int, ...]:
    """Split ``total_shots`` across circuits in proportion to measured weight.

    Largest-remainder rounding keeps the total exact; every circuit gets at
    least one shot.  ``weights`` maps class id to weight, or is a per-circuit
    sequence; ``None`` uses the plan's own class weights.
    """
    n = plan.n_circuits
    if n == 0:
        if total_shots:
            raise PlanningError("shots requested for an empty plan")
        return ()
    if total_shots < n:
        raise PlanningError(f"{total_shots} shots cannot cover {n} circuits")
    if weights is not None and not isinstance(weights, Mapping):
        per = [abs(float(x)) for x in weights]
        if len(per) != n:
            raise PlanningError("per-circuit weights must match the circuit count")
    else:
        per = circuit_weights(plan, weights)
    if sum(per) <= 0:
        per = [1.0] * n
    return largest_remainder(per, total_shots)


def largest_remainder(weights: Sequence[float], total: int) -> tuple[int, ...]:
    tot_w = float(sum(weights))
    exact = [total * w / tot_w for w in weights]
    alloc = [math.floor(x) for x in exact]
    left = total - sum(alloc)
    order = sorted(range(len(weights)), key=lambda i: (-(exact[i] - alloc[i]), i))
    for i in order[:left]:
        alloc[i] += 1
    # every circuit runs at least once; borrow from the largest allocations
    for i in range(len(alloc)):
        if alloc[i] == 0:
            donor = max(range(len(alloc)), key=lambda j: (alloc[j], -j))
            alloc[donor] -= 1
            alloc[i] = 1
    return tuple(alloc)


# --- consistency -----------------------------------------------------------


def check_plan(plan: MeasurementPlan) -> list[str]:
    """Problems with coverage or per-circuit compatibility; empty when sound."""
    problems = []
    cover = plan.class_circuits()
    for cid, circs in cover.items():
        if not circs:
            problems.append(f"class {cid} is never measured")
    reps = {c.class_id: c.representative for c in plan.classes}
    for ci, circ in enumerate(plan.circuits):
        blocks = {q: b for b in circ.blocks for q in b.qubits}
        seen_block_qubits: set[int] = set()
        for b in circ.blocks:
            if seen_block_qubits & set(b.qubits):
                problems.append(f"circuit {ci}: overlapping blocks")
            seen_block_qubits |= set(b.qubits)
        for t in circ.terms:
            p = reps[t.class_id]
            for q, a in p.axes:
                letter = circ.basis[q]
                if q in blocks:
                    if letter != "B" or not block_diagonal(p, blocks[q].qubits):
                        problems.append(f"circuit {ci}: class {t.class_id} not decodable on block {blocks[q].qubits}")
                        break
                elif letter != a:
                    problems.append(f"circuit {ci}: class {t.class_id} needs {a}{q}, basis has {letter}")
                    break
    if plan.shots is not None and any(s < 1 for s in plan.shots):
        problems.append("circuit with no shots")
    return problems


def hopping_counts(n_sites: int) -> dict[str, int]:
    """Circuit counts of both hopping schemes for all pairs on ``n_sites``."""
    pairs = all_pairs(n_sites)
    return {
        "pairs": len(pairs),
        "nonentangled": plan_hopping_nonentangled(n_sites, pairs).n_circuits,
        "bell": plan_hopping_bell(n_sites, pairs).n_circuits,
        "formula": circuit_count_closed_form(n_sites),
    }
