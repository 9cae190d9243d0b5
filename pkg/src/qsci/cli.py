"""Command-line front end.

Subcommands
-----------
run     sample-driven subspace diagonalisation of one FCIDUMP
fci     exact diagonalisation of the full particle-number sector
bind    supermolecular binding energy from three runs
sample  write a synthetic counts file for later ``run --counts``

Every subcommand honours ``--seed`` and writes its primary outputs
deterministically, so repeated invocations are byte-identical apart from
the ``created_at`` timestamp inside manifests.  Exit codes: 0 converged,
2 finished without converging, 1 error.
"""

import argparse
import json
import math
import pathlib
import sys

import jsonschema
import numpy as np

from .binding import (
    BindingEnergyReport,
    binding_energy,
    format_binding_report,
    hartree_to_ev,
    hartree_to_kcal_mol,
)
from .determinants import ENUMERATION_CAP, RawBitstring, from_raw
from .driver import QsciParams, SubspaceResult, derive_seed, run_casci, run_qsci
from .eigensolver import DENSE_CAP
from .exceptions import (
    ConfigEntryError,
    DimensionTooLarge,
    EmptyFile,
    MalformedRecord,
    NotConverged,
    QsciError,
)
from .integrals import IntegralTable, read_fcidump
from .manifest import (
    ENGINE_VERSION,
    build_manifest,
    load_manifest,
    sha256_of_file,
    utc_timestamp,
    write_manifest,
)
from .sampling import (
    ENDIANNESS_CHOICES,
    NoiseSpec,
    ingest_counts,
    sample_from_state,
    write_counts,
)
from .slater_condon import build_subspace_hamiltonian

# Seed sub-stream domains owned by the CLI.  The driver reserves 1 and 2
# for repair and batching; these must never collide with them.
_DOMAIN_SAMPLE = 3
_DOMAIN_COMPONENT = 4

_BIND_LABELS = ("complex", "fragment_a", "fragment_b")


# --- trial states for synthetic sampling --------------------------------------


def read_state_file(path, n_orbitals: int):
    """Read "<bitstring> <coefficient>" lines into a sorted basis + weights.

    Duplicate bitstrings accumulate.  The bit layout matches the counts
    file: character i is alpha orbital i, character n+i is beta orbital i.
    """
    amplitudes = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            tokens = body.split()
            if len(tokens) != 2:
                raise MalformedRecord(
                    "expected '<bitstring> <coefficient>'", lineno)
            try:
                weight = float(tokens[1])
            except ValueError:
                raise MalformedRecord(
                    f"unreadable coefficient {tokens[1]!r}", lineno) from None
            try:
                config = from_raw(RawBitstring(tokens[0]), n_orbitals)
            except (ValueError, QsciError) as exc:
                raise MalformedRecord(str(exc), lineno) from None
            amplitudes[config] = amplitudes.get(config, 0.0) + weight
    if not amplitudes:
        raise EmptyFile(f"state file {path} holds no amplitudes")
    basis = sorted(amplitudes)
    weights = np.array([amplitudes[config] for config in basis])
    return basis, weights


def _trial_state(table: IntegralTable, state_file, dense_cap: int):
    """Return (basis, weights, energy, label) for synthetic sampling.

    Without a state file the trial state is the exact ground state of the
    full sector, which is only viable below the dense cap.  With one, the
    energy reported is the Rayleigh quotient over the file's support.
    """
    if state_file is not None:
        basis, weights = read_state_file(state_file, table.n_orbitals)
        hamiltonian = build_subspace_hamiltonian(basis, table)
        norm = float(weights @ weights)
        energy = float(weights @ hamiltonian.matvec(weights)) / norm
        return basis, weights, energy, "state-file"
    dimension = (math.comb(table.n_orbitals, table.n_alpha)
                 * math.comb(table.n_orbitals, table.n_beta))
    if dimension > dense_cap:
        raise DimensionTooLarge(
            f"full sector dimension {dimension} exceeds the dense cap "
            f"{dense_cap}; pass --state-file to sample a prepared state")
    result = run_casci(table, dense_cap=dense_cap)
    return result.basis, result.coefficients, result.energy, "ground-state"


def _synthetic_samples(table, shots, noise_probability, seed, state_file,
                       dense_cap):
    basis, weights, energy, label = _trial_state(table, state_file, dense_cap)
    noise = NoiseSpec(flip_probability=noise_probability,
                      seed=derive_seed(seed, _DOMAIN_SAMPLE))
    samples = sample_from_state(basis, weights, table.n_orbitals, shots, noise)
    return samples, energy, label


# --- shared plumbing -----------------------------------------------------------


def _input_entry(path) -> dict:
    return {"path": str(path), "sha256": sha256_of_file(path)}


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def _format_summary(result: SubspaceResult, table: IntegralTable) -> str:
    lines = [
        f"method     {result.method}",
        f"energy     {result.energy:.12f} Ha",
        f"dimension  {result.dimension}",
        f"converged  {'yes' if result.converged else 'no'}",
        f"sector     {table.n_electrons} electrons in {table.n_orbitals} "
        f"orbitals (alpha {table.n_alpha}, beta {table.n_beta})",
    ]
    if result.method != "casci" or len(result.iterations) > 1:
        lines.append("")
        lines.append(f"{'iter':>4}  {'dim':>8}  {'batch energy (Ha)':>20}"
                     f"  {'best energy (Ha)':>20}  {'invalid':>8}")
        for record in result.iterations:
            lines.append(
                f"{record.iteration:>4}  {record.dimension:>8}"
                f"  {record.batch_energy:>20.12f}  {record.energy:>20.12f}"
                f"  {record.violation_fraction:>8.4f}")
    return "\n".join(lines) + "\n"


def _emit_run_outputs(out_dir, command, table, result, seed, params, inputs,
                      total_shots=None) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest(command, table, result, seed, params, inputs,
                              total_shots=total_shots)
    write_manifest(out_dir / "manifest.json", manifest)
    summary = _format_summary(result, table)
    _write_text(out_dir / "summary.txt", summary)
    print(summary, end="")
    return 0 if result.converged else 2


# --- subcommands ---------------------------------------------------------------


def cmd_run(args) -> int:
    if args.counts is not None and args.state_file is not None:
        print("error: --state-file only applies to --synthetic runs",
              file=sys.stderr)
        return 1
    table = read_fcidump(args.fcidump)
    inputs = {"fcidump": _input_entry(args.fcidump)}
    if args.counts is not None:
        with open(args.counts, encoding="utf-8") as handle:
            samples = ingest_counts(handle.read(), table.n_orbitals,
                                    endianness=args.endianness)
        inputs["counts"] = _input_entry(args.counts)
        if args.shots is not None:
            print(f"warning: counts file provides {samples.total_shots} "
                  f"shots; --shots ignored", file=sys.stderr)
        shots = samples.total_shots
        source = "counts"
    else:
        shots = args.shots if args.shots is not None else 5000
        samples, _, source = _synthetic_samples(
            table, shots, args.noise, args.seed, args.state_file,
            args.dense_cap)
        if args.state_file is not None:
            inputs["state"] = _input_entry(args.state_file)
    batch_size = args.batch_size if args.batch_size is not None \
        else min(500, shots)
    params = QsciParams(
        shots=shots, batch_size=batch_size, energy_tolerance=args.tol,
        max_recovery_iterations=args.max_iter, subspace_cap=args.subspace_cap,
        union=args.union, recover_invalid=not args.no_recovery,
        seed=args.seed, solver_tol=args.solver_tol,
        solver_max_iterations=args.solver_max_iter, dense_cap=args.dense_cap)
    result = run_qsci(table, samples, params)
    manifest_params = {
        "shots": params.shots,
        "batch_size": params.batch_size,
        "energy_tolerance": params.energy_tolerance,
        "max_recovery_iterations": params.max_recovery_iterations,
        "subspace_cap": params.subspace_cap,
        "union": params.union,
        "recover_invalid": params.recover_invalid,
        "solver_tol": params.solver_tol,
        "solver_max_iterations": params.solver_max_iterations,
        "dense_cap": params.dense_cap,
        "endianness": args.endianness,
        "source": source,
        "noise": args.noise if args.counts is None else None,
    }
    return _emit_run_outputs(args.out, "run", table, result, args.seed,
                             manifest_params, inputs,
                             total_shots=samples.total_shots)


def cmd_fci(args) -> int:
    table = read_fcidump(args.fcidump)
    dimension = (math.comb(table.n_orbitals, table.n_alpha)
                 * math.comb(table.n_orbitals, table.n_beta))
    if dimension > args.dense_cap and not args.allow_large:
        print(f"error: full sector dimension {dimension} exceeds the dense "
              f"cap {args.dense_cap}; rerun with --allow-large to "
              f"diagonalise iteratively", file=sys.stderr)
        return 1
    try:
        result = run_casci(table, space_cap=args.space_cap,
                           dense_cap=args.dense_cap,
                           solver_tol=args.solver_tol,
                           solver_max_iterations=args.solver_max_iter)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    params = {
        "space_cap": args.space_cap,
        "dense_cap": args.dense_cap,
        "solver_tol": args.solver_tol,
        "solver_max_iterations": args.solver_max_iter,
        "allow_large": args.allow_large,
    }
    inputs = {"fcidump": _input_entry(args.fcidump)}
    return _emit_run_outputs(args.out, "fci", table, result, args.seed,
                             params, inputs)


def cmd_sample(args) -> int:
    table = read_fcidump(args.fcidump)
    shots = args.shots if args.shots is not None else 5000
    samples, energy, source = _synthetic_samples(
        table, shots, args.noise, args.seed, args.state_file, args.dense_cap)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_text(args.out / "counts.txt", write_counts(samples))
    inputs = {"fcidump": _input_entry(args.fcidump)}
    if args.state_file is not None:
        inputs["state"] = _input_entry(args.state_file)
    dimension = (math.comb(table.n_orbitals, table.n_alpha)
                 * math.comb(table.n_orbitals, table.n_beta))
    manifest = {
        "engine_version": ENGINE_VERSION,
        "command": "sample",
        "created_at": utc_timestamp(),
        "seed": args.seed,
        "params": {"shots": shots, "noise": args.noise, "source": source,
                   "dense_cap": args.dense_cap},
        "inputs": inputs,
        "system": {
            "n_orbitals": table.n_orbitals,
            "n_electrons": table.n_electrons,
            "ms2": table.ms2,
            "n_alpha": table.n_alpha,
            "n_beta": table.n_beta,
            "core_energy": table.core_energy,
        },
        "result": {"method": source, "energy_hartree": energy,
                   "dimension": dimension, "converged": True,
                   "total_shots": samples.total_shots},
        "trace": [],
    }
    write_manifest(args.out / "manifest.json", manifest)
    print(f"wrote {samples.total_shots} shots over "
          f"{len(samples.counts)} distinct bitstrings to "
          f"{args.out / 'counts.txt'}")
    return 0


def _sniff_manifest(path) -> bool:
    with open(path, encoding="utf-8") as handle:
        for chunk in iter(lambda: handle.read(64), ""):
            stripped = chunk.lstrip()
            if stripped:
                return stripped[0] == "{"
    return False


def _component_from_manifest(path):
    manifest = load_manifest(path)
    fcidump = manifest.get("inputs", {}).get("fcidump")
    if fcidump is not None:
        try:
            digest = sha256_of_file(fcidump["path"])
        except OSError:
            digest = None
        if digest is not None and digest != fcidump["sha256"]:
            print(f"warning: {fcidump['path']} no longer matches the digest "
                  f"recorded in {path}", file=sys.stderr)
    block = manifest["result"]
    return (block["method"], block["energy_hartree"], block["dimension"],
            block["converged"])


def _run_component(path, args, index: int) -> SubspaceResult:
    table = read_fcidump(path)
    if args.method == "fci":
        return run_casci(table, dense_cap=args.dense_cap,
                         solver_tol=args.solver_tol,
                         solver_max_iterations=args.solver_max_iter)
    seed = derive_seed(args.seed, _DOMAIN_COMPONENT, index)
    shots = args.shots if args.shots is not None else 5000
    samples, _, _ = _synthetic_samples(table, shots, args.noise, seed, None,
                                       args.dense_cap)
    batch_size = args.batch_size if args.batch_size is not None \
        else min(500, shots)
    params = QsciParams(
        shots=shots, batch_size=batch_size, energy_tolerance=args.tol,
        max_recovery_iterations=args.max_iter, subspace_cap=args.subspace_cap,
        union=args.union, recover_invalid=not args.no_recovery, seed=seed,
        solver_tol=args.solver_tol, solver_max_iterations=args.solver_max_iter,
        dense_cap=args.dense_cap)
    return run_qsci(table, samples, params)


def cmd_bind(args) -> int:
    paths = [args.complex, args.fragment_a, args.fragment_b]
    kinds = {_sniff_manifest(path) for path in paths}
    if len(kinds) != 1:
        print("error: pass three run manifests or three FCIDUMP files, "
              "not a mixture", file=sys.stderr)
        return 1
    inputs = {}
    if kinds == {True}:
        components = [_component_from_manifest(path) for path in paths]
        methods = {component[0] for component in components}
        if len(methods) > 1:
            print(f"warning: component methods differ: "
                  f"{sorted(methods)}", file=sys.stderr)
        method = components[0][0]
        energies = [component[1] for component in components]
        binding = energies[0] - energies[1] - energies[2]
        report = BindingEnergyReport(
            method=method,
            complex_energy=energies[0],
            fragment_a_energy=energies[1],
            fragment_b_energy=energies[2],
            binding_hartree=binding,
            binding_kcal_mol=hartree_to_kcal_mol(binding),
            binding_ev=hartree_to_ev(binding),
            dimensions=tuple(component[2] for component in components),
            converged=tuple(component[3] for component in components))
        for label, path in zip(_BIND_LABELS, paths):
            inputs[label] = {"kind": "manifest", **_input_entry(path)}
    else:
        results = []
        for index, (label, path) in enumerate(zip(_BIND_LABELS, paths)):
            result = _run_component(path, args, index)
            results.append(result)
            inputs[label] = {"kind": "fcidump", **_input_entry(path)}
        report = binding_energy(*results)
    args.out.mkdir(parents=True, exist_ok=True)
    payload = {
        "engine_version": ENGINE_VERSION,
        "created_at": utc_timestamp(),
        "seed": args.seed,
        "method": report.method,
        "inputs": inputs,
        "components": {
            "complex": {"energy_hartree": report.complex_energy,
                        "dimension": report.dimensions[0],
                        "converged": report.converged[0]},
            "fragment_a": {"energy_hartree": report.fragment_a_energy,
                           "dimension": report.dimensions[1],
                           "converged": report.converged[1]},
            "fragment_b": {"energy_hartree": report.fragment_b_energy,
                           "dimension": report.dimensions[2],
                           "converged": report.converged[2]},
        },
        "binding": {
            "hartree": report.binding_hartree,
            "kcal_per_mol": report.binding_kcal_mol,
            "ev": report.binding_ev,
        },
    }
    _write_text(args.out / "binding.json",
                json.dumps(payload, indent=2, sort_keys=True) + "\n")
    text = format_binding_report(report)
    _write_text(args.out / "binding.txt", text)
    print(text, end="")
    return 0 if report.all_converged else 2


# --- argument parsing ----------------------------------------------------------


def _path(value):
    return pathlib.Path(value)


def _add_common(sub) -> None:
    sub.add_argument("--seed", type=int, default=0,
                     help="base seed for every random stream (default 0)")
    sub.add_argument("--out", type=_path, default=_path("."),
                     help="directory for result files (default .)")
    sub.add_argument("--config", type=_path, default=None,
                     help="key=value file whose keys mirror flag names; "
                          "explicit flags win")


def _add_solver(sub) -> None:
    sub.add_argument("--dense-cap", type=int, default=DENSE_CAP,
                     help=f"largest dimension solved densely "
                          f"(default {DENSE_CAP})")
    sub.add_argument("--solver-tol", type=float, default=1e-9,
                     help="residual tolerance of the iterative eigensolver")
    sub.add_argument("--solver-max-iter", type=int, default=200,
                     help="iteration cap of the iterative eigensolver")


def _add_qsci(sub) -> None:
    sub.add_argument("--shots", type=int, default=None,
                     help="synthetic shot count (default 5000)")
    sub.add_argument("--batch-size", type=int, default=None,
                     help="shots per diagonalisation batch (default 500, "
                          "clipped to the shot total)")
    sub.add_argument("--tol", type=float, default=1e-6,
                     help="energy convergence tolerance in Ha (default 1e-6)")
    sub.add_argument("--max-iter", type=int, default=10,
                     help="recovery iteration cap (default 10)")
    sub.add_argument("--noise", type=float, default=0.0,
                     help="synthetic per-bit readout flip probability")
    sub.add_argument("--union", action="store_true",
                     help="diagonalise all recovered configurations at once "
                          "instead of batch by batch")
    sub.add_argument("--no-recovery", action="store_true",
                     help="drop particle-number violations instead of "
                          "repairing them")
    sub.add_argument("--subspace-cap", type=int, default=None,
                     help="keep only the most frequent configurations")
    _add_solver(sub)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qsci",
        description="Sample-driven configuration interaction on FCIDUMP "
                    "integral tables.")
    commands = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    run = commands.add_parser(
        "run", help="sample-driven subspace diagonalisation")
    run.add_argument("fcidump", type=_path, help="FCIDUMP integral file")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--counts", type=_path, default=None,
                        help="measured counts file to ingest")
    source.add_argument("--synthetic", action="store_true",
                        help="sample synthetically from a trial state")
    run.add_argument("--state-file", type=_path, default=None,
                     help="'<bitstring> <coefficient>' lines defining the "
                          "synthetic trial state (default: exact ground "
                          "state)")
    run.add_argument("--endianness", choices=ENDIANNESS_CHOICES,
                     default="alpha-first",
                     help="bit layout of ingested counts (default "
                          "alpha-first)")
    _add_qsci(run)
    _add_common(run)
    run.set_defaults(func=cmd_run)
    subparsers["run"] = run

    fci = commands.add_parser(
        "fci", help="exact diagonalisation of the full sector")
    fci.add_argument("fcidump", type=_path, help="FCIDUMP integral file")
    fci.add_argument("--space-cap", type=int, default=ENUMERATION_CAP,
                     help="refuse to enumerate sectors above this size")
    fci.add_argument("--allow-large", action="store_true",
                     help="permit sectors above the dense cap (iterative "
                          "solver)")
    _add_solver(fci)
    _add_common(fci)
    fci.set_defaults(func=cmd_fci)
    subparsers["fci"] = fci

    bind = commands.add_parser(
        "bind", help="binding energy from three manifests or FCIDUMPs")
    bind.add_argument("complex", type=_path,
                      help="complex manifest or FCIDUMP")
    bind.add_argument("fragment_a", type=_path,
                      help="first fragment manifest or FCIDUMP")
    bind.add_argument("fragment_b", type=_path,
                      help="second fragment manifest or FCIDUMP")
    bind.add_argument("--method", choices=("qsci", "fci"), default="qsci",
                      help="per-component method when FCIDUMPs are given")
    _add_qsci(bind)
    _add_common(bind)
    bind.set_defaults(func=cmd_bind)
    subparsers["bind"] = bind

    sample = commands.add_parser(
        "sample", help="write a synthetic counts file")
    sample.add_argument("fcidump", type=_path, help="FCIDUMP integral file")
    sample.add_argument("--shots", type=int, default=None,
                        help="shot count (default 5000)")
    sample.add_argument("--noise", type=float, default=0.0,
                        help="per-bit readout flip probability")
    sample.add_argument("--state-file", type=_path, default=None,
                        help="trial state file (default: exact ground state)")
    sample.add_argument("--dense-cap", type=int, default=DENSE_CAP,
                        help="largest sector diagonalised for the default "
                             "trial state")
    _add_common(sample)
    sample.set_defaults(func=cmd_sample)
    subparsers["sample"] = sample

    return parser, subparsers


# --- config files --------------------------------------------------------------


def _parse_config_value(raw: str):
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            continue
    return text


def read_config(path) -> dict:
    """Flat key=value file; '#' comments; keys mirror flag names."""
    overrides = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise MalformedRecord("expected 'key = value'", lineno)
            key, _, raw = body.partition("=")
            key = key.strip()
            if not key:
                raise MalformedRecord("empty key", lineno)
            overrides[key] = _parse_config_value(raw)
    return overrides


def _apply_config(subparser, command: str, overrides: dict) -> None:
    actions = {action.dest: action for action in subparser._actions
               if action.dest not in ("help", "config", "func")
               and action.option_strings}
    defaults = {}
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise ConfigEntryError(
                f"config key {key!r} does not name a flag of '{command}'")
        action = actions[dest]
        if action.type is not None and not isinstance(value, bool):
            try:
                value = action.type(value)
            except (TypeError, ValueError):
                raise ConfigEntryError(
                    f"config key {key!r}: cannot read {value!r} as "
                    f"{action.type.__name__}") from None
        if action.choices is not None and value not in action.choices:
            raise ConfigEntryError(
                f"config key {key!r}: {value!r} is not one of "
                f"{sorted(action.choices)}")
        defaults[dest] = value
    subparser.set_defaults(**defaults)


def main(argv=None) -> int:
    parser, subparsers = build_parser()
    # argparse exits 2 on usage problems; fold that into the error code so
    # 2 stays reserved for finished-but-unconverged runs.
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        if getattr(args, "config", None) is not None:
            _apply_config(subparsers[args.command], args.command,
                          read_config(args.config))
            args = parser.parse_args(argv)
        return args.func(args)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (QsciError, ValueError, OSError,
            jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
