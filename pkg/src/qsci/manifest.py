"""Run manifests: canonical JSON records that make results reproducible.

A manifest captures everything needed to repeat a run bit for bit: the
command, every parameter, the seed, and the inputs by content digest.  The
serialisation is canonical (sorted keys, two-space indent, trailing
newline), so repeating a seeded invocation yields byte-identical files
except for the ``created_at`` timestamp.
"""

import datetime
import hashlib
import json

import jsonschema

from . import __version__ as ENGINE_VERSION
from .driver import SubspaceResult

MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "qsci run manifest",
    "type": "object",
    "required": ["engine_version", "command", "created_at", "seed", "params",
                 "inputs", "system", "result", "trace"],
    "properties": {
        "engine_version": {"type": "string"},
        "command": {"type": "string", "enum": ["run", "fci", "bind", "sample"]},
        "created_at": {"type": "string"},
        "seed": {"type": "integer"},
        "params": {"type": "object"},
        "inputs": {
            "type": "object",
            "additionalProperties": {
                "type": ["object", "null"],
                "required": ["path", "sha256"],
                "properties": {
                    "path": {"type": "string"},
                    "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                },
            },
        },
        "system": {
            "type": "object",
            "required": ["n_orbitals", "n_electrons", "ms2", "n_alpha", "n_beta"],
            "properties": {
                "n_orbitals": {"type": "integer", "minimum": 1},
                "n_electrons": {"type": "integer", "minimum": 0},
                "ms2": {"type": "integer"},
                "n_alpha": {"type": "integer", "minimum": 0},
                "n_beta": {"type": "integer", "minimum": 0},
                "core_energy": {"type": "number"},
            },
        },
        "result": {
            "type": "object",
            "required": ["method", "energy_hartree", "dimension", "converged"],
            "properties": {
                "method": {"type": "string"},
                "energy_hartree": {"type": "number"},
                "dimension": {"type": "integer", "minimum": 0},
                "converged": {"type": "boolean"},
                "total_shots": {"type": "integer", "minimum": 0},
            },
        },
        "trace": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["iteration", "dimension", "energy",
                             "batch_energy", "violation_fraction"],
                "properties": {
                    "iteration": {"type": "integer", "minimum": 1},
                    "dimension": {"type": "integer", "minimum": 0},
                    "energy": {"type": "number"},
                    "batch_energy": {"type": "number"},
                    "violation_fraction": {"type": "number",
                                           "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}


def sha256_of_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def utc_timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc) \
        .strftime("%Y-%m-%dT%H:%M:%SZ")


def build_manifest(command: str, table, result: SubspaceResult, seed: int,
                   params: dict, inputs: dict,
                   total_shots: int | None = None) -> dict:
    """Assemble and validate the manifest dictionary for one run."""
    result_block = {
        "method": result.method,
        "energy_hartree": result.energy,
        "dimension": result.dimension,
        "converged": result.converged,
    }
    if total_shots is not None:
        result_block["total_shots"] = total_shots
    manifest = {
        "engine_version": ENGINE_VERSION,
        "command": command,
        "created_at": utc_timestamp(),
        "seed": seed,
        "params": params,
        "inputs": inputs,
        "system": {
            "n_orbitals": table.n_orbitals,
            "n_electrons": table.n_electrons,
            "ms2": table.ms2,
            "n_alpha": table.n_alpha,
            "n_beta": table.n_beta,
            "core_energy": table.core_energy,
        },
        "result": result_block,
        "trace": [
            {
                "iteration": record.iteration,
                "dimension": record.dimension,
                "energy": record.energy,
                "batch_energy": record.batch_energy,
                "violation_fraction": record.violation_fraction,
            }
            for record in result.iterations
        ],
    }
    validate_manifest(manifest)
    return manifest


def validate_manifest(manifest: dict) -> dict:
    jsonschema.validate(manifest, MANIFEST_SCHEMA)
    return manifest


def dumps_manifest(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_manifest(manifest))


def load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as handle:
        manifest = json.load(handle)
    return validate_manifest(manifest)
