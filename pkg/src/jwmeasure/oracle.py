"""Dense statevector backend used as ground truth.

Qubit ``q`` is bit ``q`` (least significant first) of the basis-state index.
Up-spin sites occupy qubits ``0..N-1`` and down-spin sites ``N..2N-1``; a set
bit means an occupied mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString, WeightedPauliSum

DEFAULT_CAP = 14


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class SectorSpec:
    """Fixed particle numbers per spin species on ``n_sites`` sites."""

    n_sites: int
    up: int
    down: int
    cap: int = DEFAULT_CAP

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if not (0 <= self.up <= self.n_sites and 0 <= self.down <= self.n_sites):
            raise ValueError(f"particle numbers ({self.up}, {self.down}) outside 0..{self.n_sites}")
        if self.n_qubits > self.cap:
            raise OracleSizeError(f"{self.n_qubits} qubits exceeds oracle cap {self.cap}")

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_sites

    def basis(self) -> np.ndarray:
        """Sorted basis-state indices belonging to the sector."""
        n = self.n_sites
        ups = [sum(1 << q for q in c) for c in combinations(range(n), self.up)]
        downs = [sum(1 << (n + q) for q in c) for c in combinations(range(n), self.down)]
        return np.array(sorted(u | d for u in ups for d in downs), dtype=np.int64)

    def contains(self, index: np.ndarray | int) -> np.ndarray | bool:
        idx = np.asarray(index, dtype=np.int64)
        up_mask = (1 << self.n_sites) - 1
        up = _popcount(idx & up_mask)
        down = _popcount(idx >> self.n_sites)
        return (up == self.up) & (down == self.down)

    def to_json(self) -> dict:
        return {"up": self.up, "down": self.down}


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    sector: SectorSpec | None = None

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        n = amps.shape[-1].bit_length() - 1
        if amps.ndim != 1 or 1 << n != amps.shape[0]:
            raise ValueError("amplitude vector length must be a power of two")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalised (norm {norm})")
        if self.sector is not None:
            if self.sector.n_qubits != n:
                raise ValueError("sector qubit count does not match the state")
            outside = ~self.sector.contains(np.arange(amps.shape[0]))
            if np.any(np.abs(amps[outside]) > 1e-12):
                raise ValueError("state has weight outside its declared sector")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @classmethod
    def basis_state(cls, n_qubits: int, index: int, sector: SectorSpec | None = None) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps, sector)

    def dump(self) -> str:
        """Text listing ``index real imag`` for small registers."""
        if self.n_qubits > 8:
            raise OracleSizeError("amplitude dump limited to 8 qubits")
        return "\n".join(f"{i} {a.real:.17g} {a.imag:.17g}" for i, a in enumerate(self.amplitudes)) + "\n"


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


def _check_size(n_qubits: int, cap: int) -> None:
    if n_qubits > cap:
        raise OracleSizeError(f"{n_qubits} qubits exceeds oracle cap {cap}")


def random_sector_state(spec: SectorSpec, seed: int | np.random.Generator | None = None) -> StateVector:
    """Independent complex-normal amplitudes on the sector basis, normalised."""
    rng = np.random.default_rng(seed)
    basis = spec.basis()
    if basis.size == 0:
        raise ValueError("empty sector")
    amps = np.zeros(1 << spec.n_qubits, dtype=complex)
    amps[basis] = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    amps /= np.linalg.norm(amps)
    return StateVector(amps, spec)


def random_sector_states(spec: SectorSpec, count: int, seed: int | None = None) -> np.ndarray:
    """``count`` random sector states as rows of a ``(count, 2**n)`` array."""
    rng = np.random.default_rng(seed)
    basis = spec.basis()
    if basis.size == 0:
        raise ValueError("empty sector")
    out = np.zeros((count, 1 << spec.n_qubits), dtype=complex)
    out[:, basis] = rng.normal(size=(count, basis.size)) + 1j * rng.normal(size=(count, basis.size))
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out


def _masks(p: PauliString) -> tuple[int, int, int]:
    xmask = zmask = 0
    n_y = 0
    for q, a in p.axes:
        if a in "XY":
            xmask |= 1 << q
        if a in "ZY":
            zmask |= 1 << q
        n_y += a == "Y"
    return xmask, zmask, n_y


def apply_string(p: PauliString, amps: np.ndarray) -> np.ndarray:
    """``p @ psi`` for a vector or a stack of row vectors."""
    dim = amps.shape[-1]
    if dim != 1 << p.n_qubits:
        raise ValueError(f"string on {p.n_qubits} qubits applied to a {dim}-dim state")
    xmask, zmask, n_y = _masks(p)
    idx = np.arange(dim, dtype=np.int64)
    # Y = i X Z, so P = i^(phase + nY) X^x Z^z
    signs = 1 - 2 * (_popcount(idx & zmask) & 1)
    factor = (1j ** ((p.phase + n_y) % 4)) * signs
    out = np.empty_like(amps, dtype=complex)
    out[..., idx ^ xmask] = factor * amps
    return out


def expectation(state: StateVector | np.ndarray, op: PauliString | WeightedPauliSum) -> complex | float | np.ndarray:
    """Exact ``<psi|op|psi>``.

    A :class:`WeightedPauliSum` returns a real value (or array of values for a
    stack of states); a single string returns the complex expectation.
    """
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    if isinstance(op, PauliString):
        val = np.sum(np.conj(amps) * apply_string(op, amps), axis=-1)
        return val if np.ndim(val) else complex(val)
    if amps.shape[-1] != 1 << op.n_qubits:
        raise ValueError("size mismatch between state and operator")
    total = 0.0
    for c, s in op.terms:
        total = total + c * np.sum(np.conj(amps) * apply_string(s, amps), axis=-1)
    if np.max(np.abs(np.imag(total))) > 1e-10:
        raise ValueError("Hermitian operator gave a complex expectation")
    total = np.real(total)
    return total if np.ndim(total) else float(total)


def string_matrix(p: PauliString) -> np.ndarray:
    """Dense matrix with qubit 0 as the least significant tensor factor."""
    _check_size(p.n_qubits, 12)
    dim = 1 << p.n_qubits
    return apply_string(p, np.eye(dim, dtype=complex)).T


def sum_matrix(op: WeightedPauliSum) -> np.ndarray:
    dim = 1 << op.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for c, s in op.terms:
        out += c * string_matrix(s)
    return out


def sector_matrix(op: WeightedPauliSum, spec: SectorSpec) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of ``op`` restricted to the sector, plus the sector basis.

    Raises if ``op`` leaks amplitude out of the sector.
    """
    if op.n_qubits != spec.n_qubits:
        raise ValueError("operator and sector disagree on qubit count")
    basis = spec.basis()
    position = {int(b): i for i, b in enumerate(basis)}
    dim = basis.size
    mat = np.zeros((dim, dim), dtype=complex)
    # single strings may leave the sector as long as the sum does not (XX + YY)
    leaked: dict[tuple[int, int], complex] = {}
    culprit: dict[tuple[int, int], PauliString] = {}
    for c, s in op.terms:
        xmask, zmask, n_y = _masks(s)
        signs = 1 - 2 * (_popcount(basis & zmask) & 1)
        factor = c * (1j ** ((s.phase + n_y) % 4)) * signs
        for col, (b, f) in enumerate(zip(basis, factor)):
            target = int(b) ^ xmask
            row = position.get(target)
            if row is None:
                leaked[(target, col)] = leaked.get((target, col), 0.0) + f
                culprit.setdefault((target, col), s)
            else:
                mat[row, col] += f
    for key, amp in leaked.items():
        if abs(amp) > 1e-12:
            raise ValueError(f"operator does not conserve the sector (term {culprit[key]})")
    return mat, basis


def exact_ground_state(op, spec: SectorSpec) -> tuple[float, StateVector]:
    """Lowest eigenpair of ``op`` inside the sector by dense diagonalisation.

    ``op`` is a :class:`WeightedPauliSum` or a fermionic Hamiltonian, which is
    mapped through Jordan-Wigner first.
    """
    if not isinstance(op, WeightedPauliSum):
        from .fermion import jw_hamiltonian

        op = jw_hamiltonian(op)
    mat, basis = sector_matrix(op, spec)
    vals, vecs = np.linalg.eigh(mat)
    amps = np.zeros(1 << spec.n_qubits, dtype=complex)
    amps[basis] = vecs[:, 0]
    # fix the global phase so the largest amplitude is real positive
    k = np.argmax(np.abs(amps))
    amps *= np.exp(-1j * np.angle(amps[k]))
    amps /= np.linalg.norm(amps)
    return float(vals[0]), StateVector(amps, spec)


# --- gates -----------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
BASIS_CHANGE = {"X": _H, "Y": _H @ _SDG}


def apply_1q(amps: np.ndarray, gate: np.ndarray, qubit: int) -> np.ndarray:
    n = amps.shape[-1].bit_length() - 1
    view = amps.reshape(1 << (n - qubit - 1), 2, 1 << qubit)
    return np.einsum("ab,ibj->iaj", gate, view).reshape(-1)


def apply_cnot(amps: np.ndarray, control: int, target: int) -> np.ndarray:
    idx = np.arange(amps.shape[-1], dtype=np.int64)
    src = np.where(idx >> control & 1, idx ^ (1 << target), idx)
    return amps[src]


def decode_gates(kind: str, qubits: Sequence[int]) -> list[tuple]:
    """Gate list that rotates a bell/noon block into the computational basis."""
    if kind == "bell":
        k, i = qubits
        return [("cnot", k, i), ("h", k)]
    if kind == "noon":
        q0, q1, q2, q3 = qubits
        return [("cnot", q0, q3), ("cnot", q0, q2), ("cnot", q0, q1), ("h", q0)]
    raise ValueError(f"unknown block kind {kind!r}")


def apply_decode(state: StateVector | np.ndarray, bases: str, blocks: Iterable[tuple[str, Sequence[int]]] = ()) -> np.ndarray:
    """Apply per-qubit basis rotations and entangled decode blocks.

    ``bases`` has one letter per qubit (qubit 0 first): ``X`` and ``Y`` rotate
    into the computational basis, anything else is left alone.
    """
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    n = amps.shape[-1].bit_length() - 1
    if len(bases) != n:
        raise ValueError(f"basis string has {len(bases)} letters for {n} qubits")
    used: set[int] = set()
    for kind, qubits in blocks:
        if used & set(qubits):
            raise ValueError(f"overlapping decode blocks on qubits {sorted(used & set(qubits))}")
        used |= set(qubits)
    out = np.array(amps, dtype=complex)
    for q, letter in enumerate(bases):
        if letter in BASIS_CHANGE:
            out = apply_1q(out, BASIS_CHANGE[letter], q)
    for kind, qubits in blocks:
        for gate in decode_gates(kind, qubits):
            if gate[0] == "cnot":
                out = apply_cnot(out, gate[1], gate[2])
            else:
                out = apply_1q(out, _H, gate[1])
    return out


def sample_counts(probabilities: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts per basis index (Born rule)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = np.clip(np.real(probabilities), 0.0, None)
    p = p / p.sum()
    return rng.multinomial(shots, p)


def sample(
    state: StateVector, bases: str, blocks: Iterable[tuple[str, Sequence[int]]], shots: int, seed: int | np.random.Generator | None
) -> list[tuple[int, int]]:
    """Measured ``(basis index, count)`` pairs after decoding, counts summing to ``shots``."""
    rng = np.random.default_rng(seed)
    decoded = apply_decode(state, bases, blocks)
    counts = sample_counts(np.abs(decoded) ** 2, shots, rng)
    nz = np.nonzero(counts)[0]
    return [(int(i), int(counts[i])) for i in nz]


# --- Jordan-Wigner anticommutation check ---------------------------------


@dataclass(frozen=True)
class MatrixCheck:
    relation: str
    max_residual: float
    n_relations: int


def jw_matrix_check(n_sites: int) -> list[MatrixCheck]:
    """Dense check of the ladder-operator algebra for ``n_sites <= 3``.

    Within a species the canonical anticommutators hold; across species the
    operators commute, because strings never leave their own spin block.
    """
    from .fermion import Spin, jw_ladder

    if n_sites > 3:
        raise OracleSizeError("matrix check limited to 3 sites")
    n = 2 * n_sites
    dim = 1 << n

    def mat(site, spin, dagger):
        out = np.zeros((dim, dim), dtype=complex)
        for c, s in jw_ladder(site, spin, dagger, n_sites):
            out += c * string_matrix(s)
        return out

    modes = [(s, sp) for sp in (Spin.UP, Spin.DOWN) for s in range(n_sites)]
    ann = {m: mat(*m, False) for m in modes}
    cre = {m: mat(*m, True) for m in modes}
    eye = np.eye(dim)
    res = {"{c, c+} = delta": 0.0, "{c, c} = 0": 0.0, "[c, c+] = 0 across spin": 0.0, "[c, c] = 0 across spin": 0.0}
    counts = dict.fromkeys(res, 0)
    for a in modes:
        for b in modes:
            ca, cb, cdb = ann[a], ann[b], cre[b]
            if a[1] == b[1]:
                target = eye if a == b else 0.0
                r1 = np.max(np.abs(ca @ cdb + cdb @ ca - target))
                r2 = np.max(np.abs(ca @ cb + cb @ ca))
                keys = ("{c, c+} = delta", "{c, c} = 0")
            else:
                r1 = np.max(np.abs(ca @ cdb - cdb @ ca))
                r2 = np.max(np.abs(ca @ cb - cb @ ca))
                keys = ("[c, c+] = 0 across spin", "[c, c] = 0 across spin")
            for key, r in zip(keys, (r1, r2)):
                res[key] = max(res[key], float(r))
                counts[key] += 1
    return [MatrixCheck(k, res[k], counts[k]) for k in res if counts[k]]
