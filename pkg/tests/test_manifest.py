"""Manifest construction, schema validation, and canonical serialisation."""

import json
import pathlib

import jsonschema
import numpy as np
import pytest

import qsci
from qsci.driver import run_casci
from qsci.manifest import (
    MANIFEST_SCHEMA,
    build_manifest,
    dumps_manifest,
    load_manifest,
    sha256_of_file,
    validate_manifest,
    write_manifest,
)

from oracles import random_integral_table

DOCS_SCHEMA = pathlib.Path(__file__).resolve().parents[1] / "docs" / "manifest_schema.json"


@pytest.fixture(scope="module")
def table():
    return random_integral_table(3, 2, 0, np.random.default_rng(2), core=0.1)


@pytest.fixture(scope="module")
def manifest(table):
    result = run_casci(table)
    return build_manifest(
        "fci", table, result, seed=4,
        params={"dense_cap": 2048}, inputs={})


class TestSha256:
    def test_known_digest(self, tmp_path):
        path = tmp_path / "blob"
        path.write_bytes(b"abc")
        assert sha256_of_file(path) == (
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty"
        path.write_bytes(b"")
        assert sha256_of_file(path) == (
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855")


class TestBuildManifest:
    def test_validates_against_schema(self, manifest):
        jsonschema.validate(manifest, MANIFEST_SCHEMA)

    def test_carries_system_block(self, manifest, table):
        system = manifest["system"]
        assert system["n_orbitals"] == table.n_orbitals
        assert system["n_alpha"] == table.n_alpha
        assert system["core_energy"] == table.core_energy

    def test_carries_result_and_trace(self, manifest, table):
        reference = run_casci(table)
        assert manifest["result"]["energy_hartree"] == reference.energy
        assert manifest["result"]["converged"] is True
        assert manifest["engine_version"] == qsci.__version__
        assert len(manifest["trace"]) == 1
        assert manifest["trace"][0]["dimension"] == reference.dimension

    def test_total_shots_optional(self, table):
        result = run_casci(table)
        with_shots = build_manifest("run", table, result, seed=0, params={},
                                    inputs={}, total_shots=500)
        assert with_shots["result"]["total_shots"] == 500

    def test_invalid_command_rejected(self, table):
        result = run_casci(table)
        with pytest.raises(jsonschema.ValidationError):
            build_manifest("explode", table, result, seed=0, params={},
                           inputs={})

    def test_validate_rejects_missing_field(self, manifest):
        broken = dict(manifest)
        del broken["seed"]
        with pytest.raises(jsonschema.ValidationError):
            validate_manifest(broken)

    def test_validate_rejects_bad_digest(self, manifest):
        broken = json.loads(dumps_manifest(manifest))
        broken["inputs"] = {"fcidump": {"path": "x", "sha256": "zz"}}
        with pytest.raises(jsonschema.ValidationError):
            validate_manifest(broken)


class TestSerialisation:
    def test_canonical_text(self, manifest):
        text = dumps_manifest(manifest)
        assert text.endswith("\n")
        assert text == json.dumps(json.loads(text), indent=2,
                                  sort_keys=True) + "\n"

    def test_round_trip(self, manifest, tmp_path):
        path = tmp_path / "manifest.json"
        write_manifest(path, manifest)
        assert load_manifest(path) == manifest

    def test_load_validates(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{}")
        with pytest.raises(jsonschema.ValidationError):
            load_manifest(path)

    def test_identical_except_timestamp(self, table):
        result = run_casci(table)
        texts = []
        for _ in range(2):
            manifest = build_manifest("fci", table, result, seed=9,
                                      params={"dense_cap": 64}, inputs={})
            manifest.pop("created_at")
            texts.append(json.dumps(manifest, indent=2, sort_keys=True))
        assert texts[0] == texts[1]


class TestDocumentedSchema:
    def test_docs_copy_matches_source(self):
        documented = json.loads(DOCS_SCHEMA.read_text())
        assert documented == MANIFEST_SCHEMA

    def test_docs_copy_is_canonical(self):
        text = DOCS_SCHEMA.read_text()
        assert text == json.dumps(json.loads(text), indent=2,
                                  sort_keys=True) + "\n"
