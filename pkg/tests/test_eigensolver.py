import numpy as np
import pytest
import scipy.sparse as sp

import qsci.eigensolver as es
from oracles import random_integral_table, sector_configurations, sector_ground_energy
from qsci.eigensolver import DENSE_CAP, dense_spectrum, ground_state
from qsci.exceptions import DimensionTooLarge, DimensionZero, NotConverged
from qsci.slater_condon import SubspaceHamiltonian, build_subspace_hamiltonian


def build_random_problem(n, na, nb, seed, **table_kwargs):
    rng = np.random.default_rng(seed)
    table = random_integral_table(n, na + nb, na - nb, rng, **table_kwargs)
    basis = sector_configurations(n, na, nb)
    return table, basis, build_subspace_hamiltonian(basis, table)


@pytest.mark.parametrize("seed", range(6))
def test_dense_ground_state_matches_operator_oracle(seed):
    table, basis, built = build_random_problem(4, 2, 2, seed)
    state = ground_state(built)
    assert state.energy == pytest.approx(sector_ground_energy(table), abs=1e-10)
    assert state.iterations == 0
    assert np.linalg.norm(state.coefficients) == pytest.approx(1.0, abs=1e-12)


def test_two_by_two_closed_form():
    _, _, built = build_random_problem(2, 1, 0, 3)
    assert built.dimension == 2
    dense = built.to_dense()
    d1, d2, c = dense[0, 0], dense[1, 1], dense[0, 1]
    closed = 0.5 * (d1 + d2) - np.hypot(0.5 * (d1 - d2), c)
    assert ground_state(built).energy == pytest.approx(closed, abs=1e-12)


def test_spectrum_respects_gershgorin_bounds():
    _, _, built = build_random_problem(4, 2, 1, 9)
    dense = built.to_dense()
    radii = np.abs(dense).sum(axis=1) - np.abs(np.diag(dense))
    lo = (np.diag(dense) - radii).min()
    hi = (np.diag(dense) + radii).max()
    values = dense_spectrum(built)
    assert np.all(values >= lo - 1e-12)
    assert np.all(values <= hi + 1e-12)
    assert np.all(np.diff(values) >= 0)


def test_sign_convention_pins_largest_entry_positive():
    for seed in range(5):
        _, _, built = build_random_problem(3, 2, 1, seed)
        v = ground_state(built).coefficients
        assert v[int(np.argmax(np.abs(v)))] > 0


def test_davidson_agrees_with_dense_path():
    _, _, built = build_random_problem(6, 3, 3, 21, scale_two=0.3)
    reference = ground_state(built)
    iterative = ground_state(built, dense_cap=10)
    assert iterative.iterations > 0
    assert iterative.energy == pytest.approx(reference.energy, abs=1e-8)
    assert iterative.residual_norm <= 1e-9 * max(1.0, abs(iterative.energy))
    overlap = abs(iterative.coefficients @ reference.coefficients)
    assert overlap == pytest.approx(1.0, abs=1e-6)


def test_davidson_survives_subspace_collapse(monkeypatch):
    monkeypatch.setattr(es, "DAVIDSON_COLLAPSE", 4)
    _, _, built = build_random_problem(6, 3, 3, 22, scale_two=0.3)
    reference = ground_state(built)
    iterative = ground_state(built, dense_cap=10, max_iterations=500)
    assert iterative.energy == pytest.approx(reference.energy, abs=1e-8)


def test_davidson_reports_best_iterate_on_cap():
    _, _, built = build_random_problem(6, 3, 3, 23)
    with pytest.raises(NotConverged) as info:
        ground_state(built, dense_cap=10, max_iterations=2)
    err = info.value
    assert err.energy is not None
    assert err.coefficients.shape == (built.dimension,)
    assert err.residual_norm > 0
    # The Ritz value from any subspace lies at or above the true minimum.
    assert err.energy >= dense_spectrum(built)[0] - 1e-10


def test_dimension_zero_is_rejected():
    empty = SubspaceHamiltonian(basis=[], n_orbitals=2,
                                upper=sp.csr_matrix((0, 0)))
    with pytest.raises(DimensionZero):
        ground_state(empty)
    with pytest.raises(DimensionZero):
        dense_spectrum(empty)


def test_dense_spectrum_honours_cap():
    _, _, built = build_random_problem(3, 1, 1, 1)
    with pytest.raises(DimensionTooLarge):
        dense_spectrum(built, dense_cap=built.dimension - 1)
    assert dense_spectrum(built, dense_cap=DENSE_CAP).shape == (built.dimension,)
