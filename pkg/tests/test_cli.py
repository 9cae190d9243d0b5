"""Command-line interface: subcommands, exit codes, files, determinism."""

import json

import numpy as np
import pytest

from qsci.binding import binding_energy
from qsci.cli import main
from qsci.determinants import enumerate_full_space, to_bits
from qsci.driver import run_casci
from qsci.integrals import IntegralTable, write_fcidump
from qsci.manifest import load_manifest

from oracles import compose_tables, h2_like_table, random_integral_table


def _dump(path, table):
    path.write_text(write_fcidump(table))
    return path


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    """(4,2,2) random table, dimension 36."""
    root = tmp_path_factory.mktemp("small")
    table = random_integral_table(4, 4, 0, np.random.default_rng(7), core=0.5)
    return _dump(root / "small.fcidump", table), table


@pytest.fixture(scope="module")
def tiny(tmp_path_factory):
    """(2,1,1) random table, dimension 4."""
    root = tmp_path_factory.mktemp("tiny")
    table = random_integral_table(2, 2, 0, np.random.default_rng(3), core=0.2)
    return _dump(root / "tiny.fcidump", table), table


def _manifest_without_timestamp(path):
    manifest = load_manifest(path)
    manifest.pop("created_at")
    return json.dumps(manifest, indent=2, sort_keys=True)


class TestFci:
    def test_prints_dimension_and_matches_solver(self, small, tmp_path, capsys):
        path, table = small
        assert main(["fci", str(path), "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "dimension  36" in out
        manifest = load_manifest(tmp_path / "manifest.json")
        assert manifest["result"]["energy_hartree"] == pytest.approx(
            run_casci(table).energy, abs=1e-12)
        assert (tmp_path / "summary.txt").read_text() == out

    def test_empty_table_energy_is_core(self, tmp_path):
        table = IntegralTable(2, 2, 0, core_energy=1.25)
        path = _dump(tmp_path / "empty.fcidump", table)
        assert main(["fci", str(path), "--out", str(tmp_path)]) == 0
        manifest = load_manifest(tmp_path / "manifest.json")
        assert manifest["result"]["energy_hartree"] == pytest.approx(1.25)
        assert manifest["result"]["dimension"] == 4

    def test_refuses_large_sector(self, tmp_path, capsys):
        table = IntegralTable(10, 10, 0, core_energy=0.0)
        path = _dump(tmp_path / "big.fcidump", table)
        assert main(["fci", str(path), "--out", str(tmp_path)]) == 1
        err = capsys.readouterr().err
        assert "63504" in err
        assert "--allow-large" in err

    def test_allow_large_uses_iterative_path(self, small, tmp_path):
        path, table = small
        rc = main(["fci", str(path), "--dense-cap", "20", "--allow-large",
                   "--out", str(tmp_path)])
        assert rc == 0
        manifest = load_manifest(tmp_path / "manifest.json")
        assert manifest["result"]["energy_hartree"] == pytest.approx(
            run_casci(table).energy, abs=1e-8)

    def test_missing_file_names_path(self, tmp_path, capsys):
        assert main(["fci", str(tmp_path / "absent.fcidump"),
                     "--out", str(tmp_path)]) == 1
        assert "absent.fcidump" in capsys.readouterr().err


class TestRun:
    def test_defaults_echoed_in_manifest(self, tiny, tmp_path):
        path, _ = tiny
        assert main(["run", str(path), "--synthetic",
                     "--out", str(tmp_path)]) == 0
        params = load_manifest(tmp_path / "manifest.json")["params"]
        assert params["shots"] == 5000
        assert params["batch_size"] == 500
        assert params["energy_tolerance"] == 1e-6

    def test_spanning_samples_reproduce_fci(self, tiny, tmp_path):
        path, table = tiny
        state = tmp_path / "state.txt"
        lines = [f"{to_bits(config, 2)} 1.0"
                 for config in enumerate_full_space(2, 1, 1)]
        state.write_text("\n".join(lines) + "\n")
        rc = main(["run", str(path), "--synthetic", "--state-file",
                   str(state), "--shots", "400", "--union",
                   "--out", str(tmp_path / "qsci")])
        assert rc == 0
        rc = main(["fci", str(path), "--out", str(tmp_path / "fci")])
        assert rc == 0
        energies = [
            load_manifest(tmp_path / sub / "manifest.json")["result"]["energy_hartree"]
            for sub in ("qsci", "fci")]
        assert energies[0] == pytest.approx(energies[1], abs=1e-9)

    def test_seeded_reruns_are_identical(self, tiny, tmp_path):
        path, _ = tiny
        texts = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["run", str(path), "--synthetic", "--shots", "300",
                         "--seed", "11", "--out", str(out)]) == 0
            texts.append((_manifest_without_timestamp(out / "manifest.json"),
                          (out / "summary.txt").read_text()))
        assert texts[0] == texts[1]

    def test_counts_round_trip_matches_synthetic(self, tiny, tmp_path):
        path, _ = tiny
        sampled = tmp_path / "sampled"
        assert main(["sample", str(path), "--shots", "250", "--seed", "6",
                     "--out", str(sampled)]) == 0
        for mode in (["--synthetic", "--shots", "250"],
                     ["--counts", str(sampled / "counts.txt")]):
            out = tmp_path / mode[0].lstrip("-")
            assert main(["run", str(path), *mode, "--seed", "6",
                         "--out", str(out)]) == 0
        results = [load_manifest(tmp_path / sub / "manifest.json")["result"]
                   for sub in ("synthetic", "counts")]
        assert results[0] == results[1]

    def test_shots_flag_ignored_for_counts(self, tiny, tmp_path, capsys):
        path, _ = tiny
        sampled = tmp_path / "sampled"
        assert main(["sample", str(path), "--shots", "120",
                     "--out", str(sampled)]) == 0
        rc = main(["run", str(path), "--counts", str(sampled / "counts.txt"),
                   "--shots", "999", "--out", str(tmp_path / "run")])
        assert rc == 0
        assert "--shots ignored" in capsys.readouterr().err
        params = load_manifest(tmp_path / "run" / "manifest.json")["params"]
        assert params["shots"] == 120

    def test_endianness_swap_is_inverse(self, tiny, tmp_path):
        path, _ = tiny
        sampled = tmp_path / "sampled"
        assert main(["sample", str(path), "--shots", "200", "--seed", "2",
                     "--out", str(sampled)]) == 0
        flipped = []
        for line in (sampled / "counts.txt").read_text().splitlines():
            if line.startswith("#"):
                flipped.append(line)
                continue
            bits, count = line.split()
            half = len(bits) // 2
            flipped.append(f"{bits[half:] + bits[:half]} {count}")
        swapped = tmp_path / "swapped.txt"
        swapped.write_text("\n".join(flipped) + "\n")
        for name, argv in (
                ("direct", ["--counts", str(sampled / "counts.txt")]),
                ("swapped", ["--counts", str(swapped),
                             "--endianness", "beta-first"])):
            assert main(["run", str(path), *argv, "--seed", "2",
                         "--out", str(tmp_path / name)]) == 0
        results = [load_manifest(tmp_path / sub / "manifest.json")["result"]
                   for sub in ("direct", "swapped")]
        assert results[0] == results[1]

    def test_unconverged_run_exits_two_with_outputs(self, small, tmp_path):
        path, _ = small
        rc = main(["run", str(path), "--synthetic", "--shots", "400",
                   "--batch-size", "100", "--max-iter", "1", "--tol", "1e-30",
                   "--noise", "0.05", "--out", str(tmp_path)])
        assert rc == 2
        manifest = load_manifest(tmp_path / "manifest.json")
        assert manifest["result"]["converged"] is False
        assert (tmp_path / "summary.txt").exists()

    def test_requires_exactly_one_source(self, tiny, tmp_path):
        path, _ = tiny
        assert main(["run", str(path), "--out", str(tmp_path)]) == 1
        assert main(["run", str(path), "--synthetic", "--counts", "x",
                     "--out", str(tmp_path)]) == 1

    def test_state_file_rejected_with_counts(self, tiny, tmp_path, capsys):
        path, _ = tiny
        sampled = tmp_path / "sampled"
        assert main(["sample", str(path), "--shots", "50",
                     "--out", str(sampled)]) == 0
        rc = main(["run", str(path), "--counts", str(sampled / "counts.txt"),
                   "--state-file", str(sampled / "counts.txt"),
                   "--out", str(tmp_path)])
        assert rc == 1
        assert "--synthetic" in capsys.readouterr().err

    def test_malformed_state_file_names_line(self, tiny, tmp_path, capsys):
        path, _ = tiny
        state = tmp_path / "state.txt"
        state.write_text("1001 0.5\n1010\n")
        rc = main(["run", str(path), "--synthetic", "--state-file",
                   str(state), "--out", str(tmp_path)])
        assert rc == 1
        assert "line 2" in capsys.readouterr().err

    def test_no_recovery_with_only_invalid_shots(self, tiny, tmp_path, capsys):
        path, _ = tiny
        counts = tmp_path / "counts.txt"
        counts.write_text("1111 30\n0000 20\n")
        rc = main(["run", str(path), "--counts", str(counts), "--no-recovery",
                   "--out", str(tmp_path)])
        assert rc == 1
        assert "recovery" in capsys.readouterr().err


class TestSample:
    def test_delta_state_single_line(self, tiny, tmp_path):
        path, _ = tiny
        state = tmp_path / "delta.txt"
        state.write_text("1001 1.0\n")
        rc = main(["sample", str(path), "--shots", "100", "--state-file",
                   str(state), "--out", str(tmp_path)])
        assert rc == 0
        lines = [line for line in
                 (tmp_path / "counts.txt").read_text().splitlines()
                 if not line.startswith("#")]
        assert lines == ["1001 100"]
        manifest = load_manifest(tmp_path / "manifest.json")
        assert manifest["result"]["total_shots"] == 100

    def test_seeded_reruns_byte_identical(self, tiny, tmp_path):
        path, _ = tiny
        blobs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["sample", str(path), "--shots", "500", "--seed", "8",
                         "--noise", "0.03", "--out", str(out)]) == 0
            blobs.append(((out / "counts.txt").read_bytes(),
                          _manifest_without_timestamp(out / "manifest.json")))
        assert blobs[0] == blobs[1]

    def test_noise_differs_from_clean(self, tiny, tmp_path):
        path, _ = tiny
        for sub, noise in (("clean", "0.0"), ("noisy", "0.2")):
            assert main(["sample", str(path), "--shots", "400", "--seed", "4",
                         "--noise", noise, "--out", str(tmp_path / sub)]) == 0
        clean = (tmp_path / "clean" / "counts.txt").read_text()
        noisy = (tmp_path / "noisy" / "counts.txt").read_text()
        assert clean != noisy


@pytest.fixture(scope="module")
def trio(tmp_path_factory):
    root = tmp_path_factory.mktemp("trio")
    left = h2_like_table()
    right = h2_like_table(scale=1.02, core=0.70)
    composite = compose_tables(left, right)
    paths = [_dump(root / name, table) for name, table in
             (("complex.fcidump", composite), ("a.fcidump", left),
              ("b.fcidump", right))]
    return root, paths, (composite, left, right)


class TestBind:
    def test_from_fcidumps_fci(self, trio, tmp_path, capsys):
        _, paths, tables = trio
        rc = main(["bind", *map(str, paths), "--method", "fci",
                   "--out", str(tmp_path)])
        assert rc == 0
        payload = json.loads((tmp_path / "binding.json").read_text())
        reference = binding_energy(*(run_casci(t) for t in tables))
        assert payload["binding"]["hartree"] == pytest.approx(
            reference.binding_hartree, abs=1e-12)
        assert abs(payload["binding"]["hartree"]) < 1e-9
        out = capsys.readouterr().out
        assert (tmp_path / "binding.txt").read_text() == out
        assert out.splitlines()[0].index("kcal/mol") < out.splitlines()[0].index("eV")

    def test_from_manifests_matches_binding_energy(self, trio, tmp_path):
        _, paths, tables = trio
        outs = []
        for index, path in enumerate(paths):
            out = tmp_path / f"component{index}"
            assert main(["fci", str(path), "--out", str(out)]) == 0
            outs.append(str(out / "manifest.json"))
        rc = main(["bind", *outs, "--out", str(tmp_path / "bound")])
        assert rc == 0
        payload = json.loads((tmp_path / "bound" / "binding.json").read_text())
        reference = binding_energy(*(run_casci(t) for t in tables))
        assert payload["binding"]["hartree"] == reference.binding_hartree
        assert payload["binding"]["kcal_per_mol"] == reference.binding_kcal_mol
        assert payload["binding"]["ev"] == reference.binding_ev
        assert payload["method"] == "casci"

    def test_digest_mismatch_warns(self, trio, tmp_path, capsys):
        root, paths, _ = trio
        out = tmp_path / "component"
        assert main(["fci", str(paths[1]), "--out", str(out)]) == 0
        paths[1].write_text(paths[1].read_text() + "\n")
        rc = main(["bind", *[str(out / "manifest.json")] * 3,
                   "--out", str(tmp_path / "bound")])
        assert rc == 0
        assert "digest" in capsys.readouterr().err

    def test_mixed_inputs_rejected(self, trio, tmp_path, capsys):
        _, paths, _ = trio
        out = tmp_path / "component"
        assert main(["fci", str(paths[0]), "--out", str(out)]) == 0
        rc = main(["bind", str(out / "manifest.json"), str(paths[1]),
                   str(paths[2]), "--out", str(tmp_path)])
        assert rc == 1
        assert "mixture" in capsys.readouterr().err


class TestConfig:
    def test_config_sets_defaults_and_flags_win(self, tiny, tmp_path):
        path, _ = tiny
        cfg = tmp_path / "campaign.cfg"
        cfg.write_text("shots = 150\nbatch-size = 50\nunion = true\n")
        assert main(["run", str(path), "--synthetic", "--config", str(cfg),
                     "--out", str(tmp_path / "a")]) == 0
        params = load_manifest(tmp_path / "a" / "manifest.json")["params"]
        assert (params["shots"], params["batch_size"], params["union"]) == \
            (150, 50, True)
        assert main(["run", str(path), "--synthetic", "--config", str(cfg),
                     "--shots", "90", "--out", str(tmp_path / "b")]) == 0
        params = load_manifest(tmp_path / "b" / "manifest.json")["params"]
        assert (params["shots"], params["batch_size"]) == (90, 50)

    def test_unknown_key_rejected(self, tiny, tmp_path, capsys):
        path, _ = tiny
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("warp-speed = 9\n")
        rc = main(["run", str(path), "--synthetic", "--config", str(cfg),
                   "--out", str(tmp_path)])
        assert rc == 1
        assert "warp-speed" in capsys.readouterr().err

    def test_choice_keys_validated(self, tiny, tmp_path, capsys):
        path, _ = tiny
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("endianness = little\n")
        rc = main(["run", str(path), "--synthetic", "--config", str(cfg),
                   "--out", str(tmp_path)])
        assert rc == 1
        assert "endianness" in capsys.readouterr().err
