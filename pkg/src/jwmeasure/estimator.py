"""Shot-based energy estimation of a measurement plan against the oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracle import StateVector, _popcount, apply_decode, expectation, sample_counts
from .planner import MeasurementPlan, PlanningError, allocate_shots


class SectorError(ValueError):
    pass


@dataclass(frozen=True)
class ClassEstimate:
    class_id: int
    representative: str
    weight: float
    estimate: float
    stderr: float
    shots: int
    exact: float | None = None

    @property
    def zscore(self) -> float | None:
        return _zscore(self.estimate, self.exact, self.stderr)


@dataclass(frozen=True)
class EnergyEstimate:
    classes: tuple[ClassEstimate, ...]
    energy: float
    stderr: float
    total_shots: int
    seed: int
    exact: float | None = None

    @property
    def zscore(self) -> float | None:
        return _zscore(self.energy, self.exact, self.stderr)


def _zscore(value: float, exact: float | None, stderr: float) -> float | None:
    if exact is None:
        return None
    diff = value - exact
    if stderr > 0:
        return diff / stderr
    return 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)


def circuit_stream(seed: int, circuit_index: int) -> np.random.Generator:
    """Independent generator for one circuit, fixed by (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence([seed, circuit_index]))


def _mean_and_stderr(values: np.ndarray, counts: np.ndarray, shots: int) -> tuple[float, float]:
    mean = float(np.dot(counts, values) / shots)
    if shots < 2:
        return mean, 0.0
    second = float(np.dot(counts, values * values) / shots)
    var = max(second - mean * mean, 0.0) * shots / (shots - 1)
    return mean, math.sqrt(var / shots)


def estimate_energy(
    plan: MeasurementPlan,
    state: StateVector,
    seed: int,
    total_shots: int | None = None,
    exact_energy: float | None = None,
) -> EnergyEstimate:
    """Sample every circuit of ``plan`` and combine decoded values into an energy.

    Shots come from ``plan.shots`` or, if ``total_shots`` is given, from
    :func:`allocate_shots`.  The plan and the state must declare the same
    particle-number sector, since the reductions only hold inside it.
    """
    if plan.sector is None:
        raise SectorError("plan does not declare a particle-number sector")
    if state.sector is None:
        raise SectorError("state does not declare a particle-number sector")
    if (state.sector.up, state.sector.down) != tuple(plan.sector):
        raise SectorError(f"plan sector {plan.sector} does not match state sector {(state.sector.up, state.sector.down)}")
    if state.n_qubits != plan.n_qubits:
        raise PlanningError("plan and state disagree on qubit count")
    if total_shots is not None:
        if total_shots < max(plan.n_circuits, 1):
            raise PlanningError(f"{total_shots} shots cannot cover {plan.n_circuits} circuits")
        shots = allocate_shots(plan, None, total_shots)
    elif plan.shots is not None:
        shots = plan.shots
    else:
        raise PlanningError("no shot budget: pass total_shots or use a plan with shots")

    weights = {c.class_id: c.weight for c in plan.classes}
    reps = {c.class_id: c.representative for c in plan.classes}
    multiplicity = {cid: len(circs) for cid, circs in plan.class_circuits().items()}
    idx = np.arange(1 << plan.n_qubits, dtype=np.int64)

    per_class: dict[int, list[tuple[float, float, int]]] = {cid: [] for cid in weights}
    energy = plan.constant
    variance = 0.0
    for ci, (circ, n_shots) in enumerate(zip(plan.circuits, shots)):
        decoded = apply_decode(state, circ.basis, circ.block_specs())
        counts = sample_counts(np.abs(decoded) ** 2, n_shots, circuit_stream(seed, ci))
        support = np.nonzero(counts)[0]
        c_sup = counts[support].astype(float)
        per_shot = np.zeros(support.size)
        for t in circ.terms:
            vals = t.rule.sign * (1 - 2 * (_popcount(idx[support] & t.rule.mask()) & 1)).astype(float)
            m, se = _mean_and_stderr(vals, c_sup, n_shots)
            per_class[t.class_id].append((m, se, n_shots))
            per_shot += weights[t.class_id] / multiplicity[t.class_id] * vals
        m, se = _mean_and_stderr(per_shot, c_sup, n_shots)
        energy += m
        variance += se * se

    estimates = []
    for cid in sorted(per_class):
        rows = per_class[cid]
        n = sum(r[2] for r in rows)
        mean = sum(r[0] * r[2] for r in rows) / n if n else float("nan")
        se = math.sqrt(sum((r[1] * r[2]) ** 2 for r in rows)) / n if n else float("nan")
        exact = float(np.real(expectation(state, reps[cid])))
        estimates.append(ClassEstimate(cid, str(reps[cid]), weights[cid], mean, se, n, exact))
    return EnergyEstimate(tuple(estimates), float(energy), math.sqrt(variance), int(sum(shots)), seed, exact_energy)


def stderr_ladder(
    plan: MeasurementPlan, state: StateVector, shot_counts: list[int], seed: int
) -> list[EnergyEstimate]:
    return [estimate_energy(plan, state, seed, total_shots=s) for s in shot_counts]


def fit_exponent(shot_counts: list[int], stderrs: list[float]) -> float:
    """Slope of log(stderr) against log(shots)."""
    x = np.log(np.asarray(shot_counts, dtype=float))
    y = np.log(np.asarray(stderrs, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
