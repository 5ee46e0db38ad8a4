"""Command-line front end over the solver and estimation modules.

Commands: ingest, exact, optimize, measure, scan, report.  Inputs may name
bundled data files directly; lookup order is the literal path, then
$BSC_DATA_DIR, then the packaged data directory.  A TOML file passed via
--config supplies per-command defaults; explicit flags win.  Exit codes:
0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .fermion import LadderTermSum, jordan_wigner
from .fock import reference_state
from .hamiltonian import CisdAmplitudes, ham_to_json, transform_cisd, transform_hf
from .homodyne import (
    UnreliableEstimateError,
    estimate_energy,
    group_hermitian_terms,
    shot_records_to_csv,
)
from .interferometer import InterferometerSpec, evolve
from .loss import (
    LossChannel,
    MitigationError,
    gated_counting_estimate,
    mitigated_estimate,
)
from .solver import (
    AnsatzParams,
    DegenerateAnsatzError,
    OptimizationFailedError,
    OptimizeConfig,
    Problem,
    cisd_energy,
    cost,
    fci_energy,
    hf_energy,
    load_hamiltonian,
    optimize,
    reference_energy,
    rows_to_csv,
    scan_pes,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

COMMANDS = ("ingest", "exact", "optimize", "measure", "scan", "report")


def _resolve_input(path_str: str) -> Path:
    p = Path(path_str)
    if p.exists():
        return p
    env = os.environ.get("BSC_DATA_DIR")
    if env:
        candidate = Path(env) / p.name
        if candidate.exists():
            return candidate
    bundled = Path(__file__).parent / "data" / p.name
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"no such input file: {path_str}")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _check_schema(doc: dict, expected: str) -> None:
    schema = doc.get("schema", "")
    name, _, version = schema.partition("/")
    want_name, _, want_version = expected.partition("/")
    if name != want_name or version.split(".")[0] != want_version:
        raise ValueError(f"unsupported schema {schema!r}, expected {expected}")


def _positive_int(value: str) -> int:
    n = int(value)
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {n}")
    return n


# -- command handlers ---------------------------------------------------------


def cmd_ingest(args) -> int:
    ham = load_hamiltonian(_resolve_input(args.fcidump))
    Path(args.out).write_text(ham_to_json(ham))
    sys.stdout.write(
        f"m={ham.num_spin_orbitals} n={ham.num_electrons} "
        f"terms={len(ham.to_fermi_terms())}\n"
    )
    return EXIT_OK


def cmd_exact(args) -> int:
    ham = load_hamiltonian(_resolve_input(args.fcidump))
    report = {
        "schema": "bscvqe-exact/1",
        "label": ham.label,
        "num_spin_orbitals": ham.num_spin_orbitals,
        "num_electrons": ham.num_electrons,
        "hf_energy": reference_energy(ham),
        "cisd_energy": cisd_energy(ham),
        "fci_energy": fci_energy(ham),
    }
    text = _dump_json(report)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


def _optimizer_config(args) -> OptimizeConfig:
    return OptimizeConfig(
        restarts=args.restarts,
        max_iter=args.max_iter,
        penalty=args.penalty,
        seed=args.seed,
        optimizer=args.optimizer,
        init_scale=args.init_scale,
        warm_start=args.warm_start,
    )


def cmd_optimize(args) -> int:
    ham = load_hamiltonian(_resolve_input(args.fcidump))
    problem = Problem(ham, args.method, args.full_alpha_mask)
    best, results = optimize(problem, _optimizer_config(args))
    doc = {
        "schema": "bscvqe-optimize/1",
        "label": ham.label,
        "method": args.method,
        "energy": best.energy,
        "projection_ratio": best.projection_ratio,
        "iterations": best.iterations,
        "restart_index": best.restart_index,
        "converged": best.converged,
        "alpha": [float(v) for v in best.params.alpha],
        "beta": [float(v) for v in best.params.beta],
        "alpha_slots": list(best.params.alpha_slots),
        "beta_slots": list(best.params.beta_slots),
        "restart_energies": [r.energy for r in results],
        "config": {
            "restarts": args.restarts,
            "max_iter": args.max_iter,
            "penalty": args.penalty,
            "seed": args.seed,
            "optimizer": args.optimizer,
            "init_scale": args.init_scale,
            "warm_start": args.warm_start,
            "full_alpha_mask": args.full_alpha_mask,
        },
    }
    _emit(_dump_json(doc), args.out)
    if args.trace_dir:
        trace_dir = Path(args.trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for r in results:
            lines = ["iteration,energy,q_ratio"]
            lines += [
                f"{k},{e:.10f},{q:.10f}" for k, (e, q) in enumerate(r.trace)
            ]
            (trace_dir / f"trace_{r.restart_index:02d}.csv").write_text(
                "\n".join(lines) + "\n"
            )
    sys.stderr.write(f"energy {best.energy:.10f} Hartree\n")
    return EXIT_OK


def _load_params(path: str) -> tuple[dict, str]:
    doc = json.loads(Path(path).read_text())
    _check_schema(doc, "bscvqe-optimize/1")
    return doc, doc["method"]


def _measurement_operators(problem: Problem, params: AnsatzParams):
    """Numerator and metric operators for the stored parameters."""
    m = problem.num_modes
    if problem.method == "bs-hf":
        rot = transform_hf(problem.ham, problem.beta_packing.unpack(params.beta))
        return jordan_wigner(rot.to_fermi_terms(), m), None
    amps = CisdAmplitudes.from_vector(m, problem.num_photons, params.beta)
    vhv, vv = transform_cisd(problem.ham, amps)
    return jordan_wigner(vhv, m), jordan_wigner(vv, m)


def cmd_measure(args) -> int:
    if args.shots_ham <= 0 or args.shots_metric <= 0:
        raise ValueError("shot budgets must be positive")
    if args.loss is not None and not 0.0 < args.loss <= 1.0:
        raise ValueError("--loss survival probability must lie in (0, 1]")
    ham = load_hamiltonian(_resolve_input(args.fcidump))
    doc, method = _load_params(args.params)
    problem = Problem(ham, method, bool(doc["config"].get("full_alpha_mask")))
    params = AnsatzParams(
        alpha=np.array(doc["alpha"], dtype=float),
        beta=np.array(doc["beta"], dtype=float),
    )
    state = evolve(
        InterferometerSpec(problem.alpha_packing.unpack(params.alpha)),
        reference_state(problem.num_modes, range(problem.num_photons)),
    )
    ham_terms, metric_terms = _measurement_operators(problem, params)
    exact_energy, _ = cost(AnsatzParams.from_vector(problem, np.concatenate(
        [params.alpha, params.beta])), problem)

    report = estimate_energy(
        state,
        ham_terms,
        metric_terms,
        num_shots_ham=args.shots_ham,
        num_shots_metric=args.shots_metric,
        seed=args.seed,
        constant=problem.constant,
        collect_records=bool(args.records),
    )
    out = {
        "schema": "bscvqe-measure/1",
        "label": ham.label,
        "method": method,
        "seed": args.seed,
        "shots_ham": args.shots_ham,
        "shots_metric": args.shots_metric,
        "energy": report.mean,
        "exact_energy": exact_energy,
        "standard_error": math.sqrt(report.empirical_variance),
        "numerator": report.numerator,
        "denominator": report.denominator,
        "variance_bound": report.variance_bound,
        "bias_bound": report.bias_bound,
        "projection_ratio_estimate": report.projection_ratio_estimate,
        "chi": report.chi,
        "shots_per_term": report.shots_per_term,
    }
    if args.records:
        Path(args.records).write_text(shot_records_to_csv(report.records))
    if args.loss is not None:
        out["loss"] = _lossy_section(problem, state, ham_terms, args)
    _emit(_dump_json(out), args.out)
    return EXIT_OK


def _lossy_section(problem: Problem, state, ham_terms: LadderTermSum, args) -> dict:
    """Per-term mitigated estimates and their uncorrected counterparts."""
    if problem.method != "bs-hf":
        raise ValueError("--loss mitigation is defined for the bs-hf method")
    channel = LossChannel(args.loss)
    groups = group_hermitian_terms(ham_terms)
    hybrid = max(1, args.shots_ham // max(1, len(groups)))
    terms = {}
    corrected_sum = 0.0
    raw_sum = 0.0
    root = np.random.SeedSequence(args.seed).spawn(len(groups))
    for stream, group in zip(root, groups):
        if group.off_modes:
            res = mitigated_estimate(
                state,
                group.key,
                group.coefficient,
                channel,
                num_hybrid_shots=hybrid,
                num_calibration_shots=args.shots_metric,
                seed=int(stream.generate_state(1)[0]),
            )
            entry = {
                "corrected": res.corrected,
                "raw": res.raw,
                "corrected_se": res.corrected_se,
                "raw_se": res.raw_se,
                "correction_factor": res.correction_factor,
                "accepted_shots": res.accepted_shots,
            }
            corrected_term, raw_term = res.corrected, res.raw
        else:
            corrected_term, raw_term = gated_counting_estimate(
                state,
                group.key,
                group.coefficient,
                channel,
                num_shots=hybrid,
                seed=int(stream.generate_state(1)[0]),
            )
            entry = {"corrected": corrected_term, "raw": raw_term}
        if group.weight == 2:
            entry["paired"] = True
        terms[group.key] = entry
        corrected_sum += corrected_term
        raw_sum += raw_term
    return {
        "survival": args.loss,
        "corrected_energy": problem.constant + corrected_sum,
        "raw_energy": problem.constant + raw_sum,
        "terms": terms,
    }


def cmd_scan(args) -> int:
    manifest_path = _resolve_input(args.manifest)
    entries = json.loads(manifest_path.read_text())
    if not isinstance(entries, list):
        raise ValueError("scan manifest must be a JSON list of entries")
    resolved = []
    for entry in entries:
        item = dict(entry)
        rel = manifest_path.parent / str(entry.get("file", ""))
        if rel.exists():
            item["file"] = str(rel)
        else:
            try:
                item["file"] = str(_resolve_input(str(entry.get("file", ""))))
            except FileNotFoundError:
                pass  # scan_pes records the failure and keeps going
        resolved.append(item)
    rows = scan_pes(resolved, _optimizer_config(args))
    for row in rows:
        if row.error is not None:
            sys.stderr.write(f"warning: {row.label}: {row.error}\n")
    _emit(rows_to_csv(rows), args.out)
    return EXIT_OK


CHEMICAL_ACCURACY = 1.6e-3


def cmd_report(args) -> int:
    lines = Path(args.scan).read_text().strip().split("\n")
    header = "label,e_bsc,e_hf,e_cisd,e_fci,q_ratio,converged"
    if not lines or lines[0] != header:
        raise ValueError(f"not a scan table (expected header {header!r})")
    rows = []
    for line in lines[1:]:
        label, e_bsc, e_hf, e_cisd, e_fci, q_ratio, converged = line.split(",")
        rows.append(
            {
                "label": label,
                "e_bsc": float(e_bsc),
                "e_hf": float(e_hf),
                "e_cisd": float(e_cisd),
                "e_fci": float(e_fci),
                "q_ratio": float(q_ratio),
                "converged": converged == "true",
                "gap_to_fci": float(e_bsc) - float(e_fci),
            }
        )
    usable = [r for r in rows if r["converged"] and math.isfinite(r["gap_to_fci"])]
    accurate = [r for r in usable if abs(r["gap_to_fci"]) <= CHEMICAL_ACCURACY]
    doc = {
        "schema": "bscvqe-report/1",
        "points": rows,
        "summary": {
            "num_points": len(rows),
            "num_converged": len(usable),
            "num_chemically_accurate": len(accurate),
            "max_abs_gap_to_fci": max(
                (abs(r["gap_to_fci"]) for r in usable), default=float("nan")
            ),
            "mean_projection_ratio": (
                sum(r["q_ratio"] for r in usable) / len(usable)
                if usable
                else float("nan")
            ),
        },
    }
    _emit(_dump_json(doc), args.out)
    return EXIT_OK


# -- argument plumbing --------------------------------------------------------


def _add_optimizer_flags(sub) -> None:
    sub.add_argument("--method", choices=("bs-hf", "bs-cisd"), default="bs-hf")
    sub.add_argument("--restarts", type=_positive_int, default=10)
    sub.add_argument("--max-iter", type=_positive_int, default=200)
    sub.add_argument("--penalty", type=float, default=0.0)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument(
        "--optimizer", choices=("l-bfgs-b", "nelder-mead"), default="l-bfgs-b"
    )
    sub.add_argument("--init-scale", type=float, default=0.1)
    sub.add_argument("--warm-start", action="store_true")
    sub.add_argument("--full-alpha-mask", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bscvqe", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument("--config", help="TOML file with per-command default settings")
    parser.add_argument(
        "--threads", type=_positive_int, default=None,
        help="cap BLAS worker threads for this process",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("ingest", help="FCIDUMP to internal JSON")
    sub.add_argument("--fcidump", required=True)
    sub.add_argument("--out", required=True)
    sub.set_defaults(handler=cmd_ingest)

    sub = subs.add_parser("exact", help="classical reference energies")
    sub.add_argument("--fcidump", required=True)
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_exact)

    sub = subs.add_parser("optimize", help="run the variational solver")
    sub.add_argument("--fcidump", required=True)
    _add_optimizer_flags(sub)
    sub.add_argument("--out", help="result JSON path (default: stdout)")
    sub.add_argument("--trace-dir", help="write per-restart iteration traces here")
    sub.set_defaults(handler=cmd_optimize)

    sub = subs.add_parser("measure", help="shot-based estimate at stored parameters")
    sub.add_argument("--fcidump", required=True)
    sub.add_argument("--params", required=True, help="optimize result JSON")
    sub.add_argument("--shots-ham", type=int, required=True)
    sub.add_argument("--shots-metric", type=int, required=True)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--loss", type=float, default=None,
                     help="photon survival probability; adds mitigation section")
    sub.add_argument("--records", help="write per-shot records CSV here")
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_measure)

    sub = subs.add_parser("scan", help="optimize a manifest of geometries")
    sub.add_argument("--manifest", required=True)
    _add_optimizer_flags(sub)
    sub.add_argument("--out", help="CSV path (default: stdout)")
    sub.set_defaults(handler=cmd_scan)

    sub = subs.add_parser("report", help="summarize a scan CSV")
    sub.add_argument("--scan", required=True)
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_report)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install TOML values as subcommand defaults before the real parse."""
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1]
    with open(path, "rb") as fh:
        config = tomllib.load(fh)
    command = next((a for a in argv if a in COMMANDS), None)
    if command is None or command not in config:
        return
    table = config[command]
    actions = {
        a.dest: a
        for a in parser._subparsers._group_actions[0].choices[command]._actions
    }
    defaults = {}
    for key, value in table.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise ValueError(f"unknown config key {key!r} for command {command!r}")
        defaults[dest] = value
    parser._subparsers._group_actions[0].choices[command].set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.threads is not None:
            try:
                import threadpoolctl

                threadpoolctl.threadpool_limits(args.threads)
            except ImportError:
                sys.stderr.write("warning: threadpoolctl unavailable, --threads ignored\n")
        return args.handler(args)
    except (OSError, ValueError, KeyError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except (
        OptimizationFailedError,
        DegenerateAnsatzError,
        UnreliableEstimateError,
        MitigationError,
        np.linalg.LinAlgError,
        FloatingPointError,
    ) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
