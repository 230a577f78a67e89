"""Command-line entry point: ``jwmeasure transform|plan|estimate|verify``.

Exit codes: 0 success, 2 input error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .estimator import SectorError, estimate_energy, fit_exponent
from .fermion import (
    FermionHamiltonian,
    HamiltonianParseError,
    build_hubbard,
    chain_hoppings,
    jw_hamiltonian,
    load_hamiltonian,
)
from .oracle import OracleSizeError, SectorSpec, exact_ground_state, random_sector_state
from .pauli import WeightedPauliSum
from .planner import (
    STRATEGIES,
    MeasurementPlan,
    PlanningError,
    allocate_shots,
    check_plan,
    circuit_count_closed_form,
    hopping_counts,
    plan_auto,
)
from .symmetry import no_reduction, reduce_sum

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    hamiltonian: str | None = None
    pauli_sum: str | None = None
    plan: str | None = None
    hubbard_chain: int | None = None
    t: float = 1.0
    U: float = 4.0
    periodic: bool = False
    sector: tuple[int, int] | None = None
    strategy: str = "hybrid"
    symmetry_reduction: bool = True
    shots: int | None = None
    seed: int = 0
    out: str | None = None
    cap: int = 14
    state: str = "ground"
    figures: bool = True
    sabotage: bool = False
    n_sites: int = 4
    n_states: int = 20

    def echo(self) -> dict:
        doc = asdict(self)
        doc["sector"] = None if self.sector is None else list(self.sector)
        return doc


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance(cfg: RunConfig) -> dict:
    return {"tool": "jwmeasure", "version": __version__, "seed": cfg.seed, "config": cfg.echo()}


# --- sources ---------------------------------------------------------------


def _fermion_source(cfg: RunConfig) -> FermionHamiltonian | None:
    sources = [cfg.hamiltonian is not None, cfg.hubbard_chain is not None, cfg.pauli_sum is not None]
    if sum(sources) > 1:
        raise InputError("give exactly one Hamiltonian source")
    if cfg.hamiltonian is not None:
        try:
            return load_hamiltonian(cfg.hamiltonian)
        except OSError as exc:
            raise InputError(f"cannot read {cfg.hamiltonian}: {exc.strerror}") from None
    if cfg.hubbard_chain is not None:
        if cfg.hubbard_chain < 1:
            raise InputError("--hubbard-chain needs N >= 1")
        return build_hubbard(cfg.hubbard_chain, chain_hoppings(cfg.hubbard_chain, cfg.t, cfg.periodic), cfg.U)
    return None


def _pauli_source(cfg: RunConfig) -> tuple[WeightedPauliSum, FermionHamiltonian | None]:
    ham = _fermion_source(cfg)
    if ham is not None:
        return jw_hamiltonian(ham), ham
    if cfg.pauli_sum is not None:
        try:
            return WeightedPauliSum.from_json(json.loads(Path(cfg.pauli_sum).read_text())), None
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot load Pauli sum {cfg.pauli_sum}: {exc}") from None
    raise InputError("no Hamiltonian source: use --hamiltonian, --hubbard-chain or --pauli-sum")


def _require_sector(cfg: RunConfig) -> tuple[int, int]:
    if cfg.sector is None:
        raise InputError(f"'{cfg.command}' needs --sector M_up M_down")
    return cfg.sector


def _figure_path(out: str | None, suffix: str) -> Path | None:
    if out is None:
        return None
    p = Path(out)
    return p.with_name(p.stem + suffix + ".png")


# --- commands --------------------------------------------------------------


def cmd_transform(cfg: RunConfig, stdout) -> int:
    pauli_sum, _ = _pauli_source(cfg)
    text = json.dumps(pauli_sum.to_json(), indent=2) + "\n"
    if cfg.out:
        _atomic_write(cfg.out, text)
    else:
        stdout.write(text)
    print(f"terms={len(pauli_sum)} n_qubits={pauli_sum.n_qubits}", file=stdout if cfg.out else sys.stderr)
    return EXIT_OK


def cmd_reduce(cfg: RunConfig, stdout) -> int:
    pauli_sum, _ = _pauli_source(cfg)
    sector = _require_sector(cfg)
    reduction = reduce_sum(pauli_sum, sector) if cfg.symmetry_reduction else no_reduction(pauli_sum, sector)
    doc = {
        "provenance": _provenance(cfg),
        "sector": list(sector),
        "raw_strings": reduction.raw_strings,
        "measured_strings": reduction.measured_strings,
        "reduced_sum": reduction.as_sum().to_json(),
        "classes": [
            {
                "representative": str(c.representative),
                "multiplier": c.multiplier,
                "kind": c.kind,
                "members": [[str(m), s] for m, s in c.members],
            }
            for c in reduction.classes
        ],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if cfg.out:
        _atomic_write(cfg.out, text)
    else:
        stdout.write(text)
    stdout.write(f"strings_raw={reduction.raw_strings} strings_measured={reduction.measured_strings}\n")
    return EXIT_OK


def build_plan(cfg: RunConfig) -> tuple[MeasurementPlan, WeightedPauliSum, FermionHamiltonian | None]:
    pauli_sum, ham = _pauli_source(cfg)
    if cfg.symmetry_reduction:
        reduction = reduce_sum(pauli_sum, _require_sector(cfg))
    else:
        reduction = no_reduction(pauli_sum, cfg.sector)
    plan = plan_auto(reduction, cfg.strategy)
    if cfg.shots is not None:
        plan = plan.with_shots(allocate_shots(plan, None, cfg.shots))
    problems = check_plan(plan)
    if problems:
        raise PlanningError("; ".join(problems))
    return plan, pauli_sum, ham


def _is_all_pairs_hopping(ham: FermionHamiltonian | None) -> bool:
    if ham is None or ham.quartic or ham.n_sites < 2:
        return False
    pairs = {(q.i, q.k) for q in ham.quadratic}
    return len(pairs) == ham.n_sites * (ham.n_sites - 1) // 2


def plan_summary(plan: MeasurementPlan, pauli_sum: WeightedPauliSum, ham: FermionHamiltonian | None) -> str:
    raw = len(pauli_sum.non_identity())
    measured = len(plan.classes)
    lines = [f"circuits={plan.n_circuits}"]
    if _is_all_pairs_hopping(ham):
        counts = hopping_counts(ham.n_sites)
        lines[0] += f", formula={circuit_count_closed_form(ham.n_sites)}"
        lines.append(f"hopping_schemes nonentangled={counts['nonentangled']} bell={counts['bell']} pairs={counts['pairs']}")
    lines.append(f"strings_raw={raw} strings_measured={measured} reduction_factor={raw / measured if measured else float('nan'):.3g}")
    lines.append("circuit  basis" + " " * max(plan.n_qubits - 5, 1) + "  terms  shots")
    for i, c in enumerate(plan.circuits):
        shots = "-" if plan.shots is None else str(plan.shots[i])
        blocks = " ".join(f"{b.kind}{list(b.qubits)}" for b in c.blocks)
        lines.append(f"{i:>7}  {c.basis:<{max(plan.n_qubits, 5)}}  {len(c.terms):>5}  {shots:>5}  {blocks}".rstrip())
    return "\n".join(lines) + "\n"


def cmd_plan(cfg: RunConfig, stdout) -> int:
    plan, pauli_sum, ham = build_plan(cfg)
    plan = _with_provenance(plan, cfg)
    if cfg.out:
        _atomic_write(cfg.out, plan.dumps())
        if cfg.figures:
            from .plotting import plot_plan

            plot_plan(plan, _figure_path(cfg.out, ""))
    else:
        stdout.write(plan.dumps())
    stdout.write(plan_summary(plan, pauli_sum, ham))
    return EXIT_OK


def _with_provenance(plan: MeasurementPlan, cfg: RunConfig) -> MeasurementPlan:
    from dataclasses import replace

    prov = f"provenance=jwmeasure {__version__} seed={cfg.seed} config={json.dumps(cfg.echo(), sort_keys=True)}"
    return replace(plan, notes=(*plan.notes, prov))


REPORT_COLUMNS = ("class_id", "representative", "weight", "estimate", "stderr", "exact", "zscore")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def cmd_estimate(cfg: RunConfig, stdout) -> int:
    sector = _require_sector(cfg)
    if cfg.shots is None or cfg.shots < 1:
        raise InputError("estimate needs --shots >= 1")
    if cfg.plan is not None:
        try:
            plan = MeasurementPlan.loads(Path(cfg.plan).read_text())
        except OSError as exc:
            raise InputError(f"cannot read plan {cfg.plan}: {exc.strerror}") from None
        pauli_sum, ham = _pauli_source(cfg)
    else:
        plan, pauli_sum, ham = build_plan(RunConfig(**{**asdict(cfg), "shots": None}))
    if plan.n_qubits % 2:
        raise InputError("plan qubit count must be even (two spin blocks)")
    spec = SectorSpec(plan.n_qubits // 2, *sector, cap=cfg.cap)
    exact_energy = None
    if cfg.state == "ground":
        exact_energy, state = exact_ground_state(pauli_sum, spec)
    elif cfg.state == "random":
        state = random_sector_state(spec, cfg.seed)
        from .oracle import expectation

        exact_energy = float(expectation(state, pauli_sum))
    else:
        raise InputError(f"unknown state source {cfg.state!r}")
    if cfg.shots < plan.n_circuits:
        raise InputError(f"--shots {cfg.shots} is below the circuit count {plan.n_circuits}")
    est = estimate_energy(plan, state, cfg.seed, total_shots=cfg.shots, exact_energy=exact_energy)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for c in est.classes:
        writer.writerow([c.class_id, c.representative, _fmt(c.weight), _fmt(c.estimate), _fmt(c.stderr), _fmt(c.exact), _fmt(c.zscore)])
    writer.writerow(["total", "energy", "", _fmt(est.energy), _fmt(est.stderr), _fmt(est.exact), _fmt(est.zscore)])
    doc = {
        "provenance": _provenance(cfg),
        "n_circuits": plan.n_circuits,
        "total_shots": est.total_shots,
        "energy": est.energy,
        "stderr": est.stderr,
        "exact": est.exact,
        "zscore": est.zscore,
        "classes": [
            {k: getattr(c, k) for k in REPORT_COLUMNS if k != "zscore"} | {"zscore": c.zscore, "shots": c.shots}
            for c in est.classes
        ],
    }
    json_text = json.dumps(doc, indent=2) + "\n"
    if cfg.out:
        out = Path(cfg.out)
        _atomic_write(out.with_suffix(".csv"), buf.getvalue())
        _atomic_write(out.with_suffix(".json"), json_text)
        if cfg.figures:
            from .plotting import plot_estimates

            plot_estimates(est, _figure_path(cfg.out, ""))
    else:
        stdout.write(buf.getvalue())
    z = "" if est.zscore is None else f" zscore={est.zscore:+.3f}"
    exact = "" if est.exact is None else f" exact={est.exact:.6f}"
    stdout.write(f"energy={est.energy:.6f} stderr={est.stderr:.6f}{exact}{z} circuits={plan.n_circuits} shots={est.total_shots}\n")
    return EXIT_OK


def cmd_ladder(cfg: RunConfig, stdout) -> int:
    """Standard error against shot count for the configured plan and state."""
    sector = _require_sector(cfg)
    plan, pauli_sum, _ = build_plan(RunConfig(**{**asdict(cfg), "shots": None}))
    spec = SectorSpec(plan.n_qubits // 2, *sector, cap=cfg.cap)
    exact, state = exact_ground_state(pauli_sum, spec)
    ladder = [10**3, 10**4, 10**5, 10**6]
    ests = [estimate_energy(plan, state, cfg.seed, total_shots=s, exact_energy=exact) for s in ladder]
    slope = fit_exponent(ladder, [e.stderr for e in ests])
    for s, e in zip(ladder, ests):
        stdout.write(f"shots={s} energy={e.energy:.6f} stderr={e.stderr:.6f} zscore={e.zscore:+.3f}\n")
    stdout.write(f"fit_exponent={slope:+.4f}\n")
    if cfg.out and cfg.figures:
        from .plotting import plot_stderr_ladder

        plot_stderr_ladder(ladder, [e.stderr for e in ests], slope, _figure_path(cfg.out, "_ladder"))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, stdout) -> int:
    from .verify import run_suite

    _require_sector(cfg)
    ham = _fermion_source(cfg)
    n_sites = ham.n_sites if ham is not None else cfg.n_sites
    if 2 * n_sites > cfg.cap:
        raise InputError(f"{2 * n_sites} qubits exceeds --cap {cfg.cap}")
    report = run_suite(
        n_sites, cfg.sector, ham, n_states=cfg.n_states, seed=cfg.seed, cap=cfg.cap, sabotage=cfg.sabotage
    )
    stdout.write(report.to_text())
    if cfg.out:
        doc = report.to_json() | {"provenance": _provenance(cfg)}
        _atomic_write(cfg.out, json.dumps(doc, indent=2) + "\n")
        if cfg.figures:
            from .plotting import plot_circuit_counts

            rows = [{"n_sites": n, **hopping_counts(n)} for n in range(2, 17)]
            plot_circuit_counts(rows, _figure_path(cfg.out, "_counts"))
    return EXIT_OK if report.passed else EXIT_VERIFY


COMMANDS = {"transform": cmd_transform, "reduce": cmd_reduce, "plan": cmd_plan, "estimate": cmd_estimate, "verify": cmd_verify, "ladder": cmd_ladder}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jwmeasure", description="Jordan-Wigner measurement compiler and verifier.")
    parser.add_argument("--version", action="version", version=f"jwmeasure {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        src = p.add_argument_group("Hamiltonian source")
        src.add_argument("--hamiltonian", metavar="PATH", help="Hamiltonian text file")
        src.add_argument("--pauli-sum", metavar="PATH", help="Pauli-sum JSON written by 'transform'")
        src.add_argument("--hubbard-chain", type=int, metavar="N", help="built-in Hubbard chain on N sites")
        src.add_argument("--t", type=float, default=1.0, help="Hubbard hopping (default 1)")
        src.add_argument("--U", type=float, default=4.0, help="Hubbard on-site interaction (default 4)")
        src.add_argument("--periodic", action="store_true", help="close the Hubbard chain into a ring")
        p.add_argument("--sector", type=int, nargs=2, metavar=("M_UP", "M_DOWN"))
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--cap", type=int, default=14, help="oracle qubit cap (default 14)")
        p.add_argument("--no-figures", dest="figures", action="store_false", help="skip PNG output")

    def planning(p: argparse.ArgumentParser) -> None:
        p.add_argument("--strategy", choices=STRATEGIES, default="hybrid")
        p.add_argument("--no-symmetry-reduction", dest="symmetry_reduction", action="store_false")
        p.add_argument("--shots", type=int)

    p = sub.add_parser("transform", help="Jordan-Wigner image as Pauli-sum JSON")
    common(p)
    p = sub.add_parser("reduce", help="symmetry-reduced classes as JSON")
    common(p)
    p.add_argument("--no-symmetry-reduction", dest="symmetry_reduction", action="store_false")
    p = sub.add_parser("plan", help="measurement plan JSON and summary")
    common(p)
    planning(p)
    p = sub.add_parser("estimate", help="shot-based energy estimate against the oracle")
    common(p)
    planning(p)
    p.add_argument("--plan", metavar="PATH", help="use an existing plan file")
    p.add_argument("--state", choices=("ground", "random"), default="ground")
    p = sub.add_parser("ladder", help="stderr scaling over 1e3..1e6 shots")
    common(p)
    planning(p)
    p = sub.add_parser("verify", help="oracle identity suite")
    common(p)
    p.add_argument("--n-sites", type=int, default=4, help="lattice size when no Hamiltonian is given")
    p.add_argument("--n-states", type=int, default=20)
    p.add_argument("--sabotage-sign", dest="sabotage", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    fields = RunConfig.__dataclass_fields__
    values = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    if "sector" in values:
        values["sector"] = tuple(values["sector"])
    cfg = RunConfig(**values)
    try:
        return COMMANDS[cfg.command](cfg, stdout)
    except (InputError, HamiltonianParseError, PlanningError, SectorError, OracleSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
