"""Estimator-style front ends for the solvers and the recovery transform.

These follow the scikit-learn conventions: constructor arguments are stored
verbatim, ``fit`` does the work and returns ``self``, and everything learned
is exposed through trailing-underscore attributes.  ``get_params`` and
``set_params`` come from :class:`~sklearn.base.BaseEstimator`, so instances
clone cleanly.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .determinants import ENUMERATION_CAP, Configuration
from .driver import QsciParams, run_casci, run_qsci
from .eigensolver import DENSE_CAP
from .integrals import IntegralTable
from .recovery import EPSILON, occupation_profile, repair_sample_set
from .sampling import SampleSet


def check_integral_table(X) -> IntegralTable:
    if not isinstance(X, IntegralTable):
        raise TypeError(f"expected an IntegralTable, got {type(X).__name__}")
    return X


def check_sample_set(samples, n_orbitals: int | None = None) -> SampleSet:
    if not isinstance(samples, SampleSet):
        raise TypeError(f"expected a SampleSet, got {type(samples).__name__}")
    if n_orbitals is not None and samples.n_orbitals != n_orbitals:
        raise ValueError(
            f"sample set spans {samples.n_orbitals} orbitals, expected {n_orbitals}")
    return samples


def check_configurations(X) -> list[Configuration]:
    configs = list(X)
    if not configs:
        raise ValueError("expected at least one configuration")
    bad = next((c for c in configs if not isinstance(c, Configuration)), None)
    if bad is not None:
        raise TypeError(f"expected Configuration entries, got {type(bad).__name__}")
    return configs


class CasciSolver(BaseEstimator):
    """Exact ground state over the complete particle-number sector.

    Parameters
    ----------
    space_cap : int
        Refuse sectors with more configurations than this.
    dense_cap : int
        Largest dimension solved by dense decomposition; bigger sectors use
        the Davidson path.
    solver_tol, solver_max_iterations :
        Davidson residual tolerance and iteration cap.

    Attributes
    ----------
    energy_ : float
        Ground-state energy in Hartree, core energy included.
    coefficients_ : ndarray
        Ground-state vector over ``basis_``.
    basis_ : list of Configuration
        The full sector in canonical order.
    result_ : SubspaceResult
        The complete run record.
    """

    def __init__(self, space_cap=ENUMERATION_CAP, dense_cap=DENSE_CAP,
                 solver_tol=1e-9, solver_max_iterations=200):
        self.space_cap = space_cap
        self.dense_cap = dense_cap
        self.solver_tol = solver_tol
        self.solver_max_iterations = solver_max_iterations

    def fit(self, X, y=None):
        table = check_integral_table(X)
        result = run_casci(table, space_cap=self.space_cap,
                           dense_cap=self.dense_cap, solver_tol=self.solver_tol,
                           solver_max_iterations=self.solver_max_iterations)
        self.result_ = result
        self.energy_ = result.energy
        self.coefficients_ = result.coefficients
        self.basis_ = result.basis
        self.converged_ = result.converged
        self.dimension_ = result.dimension
        self.n_iter_ = len(result.iterations)
        return self


class QsciSolver(BaseEstimator):
    """Sample-driven subspace solver with self-consistent recovery.

    ``fit`` takes the integral table as ``X`` and the measured
    :class:`~qsci.sampling.SampleSet` via the ``samples`` keyword.

    Attributes mirror :class:`CasciSolver`, plus ``trace_`` with one record
    per recovery iteration.
    """

    def __init__(self, shots=5000, batch_size=500, energy_tolerance=1e-6,
                 max_recovery_iterations=10, subspace_cap=None, union=False,
                 recover_invalid=True, seed=0, dense_cap=DENSE_CAP,
                 solver_tol=1e-9, solver_max_iterations=200):
        self.shots = shots
        self.batch_size = batch_size
        self.energy_tolerance = energy_tolerance
        self.max_recovery_iterations = max_recovery_iterations
        self.subspace_cap = subspace_cap
        self.union = union
        self.recover_invalid = recover_invalid
        self.seed = seed
        self.dense_cap = dense_cap
        self.solver_tol = solver_tol
        self.solver_max_iterations = solver_max_iterations

    def _params(self) -> QsciParams:
        return QsciParams(
            shots=self.shots, batch_size=self.batch_size,
            energy_tolerance=self.energy_tolerance,
            max_recovery_iterations=self.max_recovery_iterations,
            subspace_cap=self.subspace_cap, union=self.union,
            recover_invalid=self.recover_invalid, seed=self.seed,
            dense_cap=self.dense_cap, solver_tol=self.solver_tol,
            solver_max_iterations=self.solver_max_iterations)

    def fit(self, X, y=None, samples: SampleSet | None = None):
        table = check_integral_table(X)
        if samples is None:
            raise ValueError("fit requires samples=<SampleSet>")
        check_sample_set(samples, table.n_orbitals)
        result = run_qsci(table, samples, self._params())
        self.result_ = result
        self.energy_ = result.energy
        self.coefficients_ = result.coefficients
        self.basis_ = result.basis
        self.converged_ = result.converged
        self.dimension_ = result.dimension
        self.trace_ = result.iterations
        self.n_iter_ = len(result.iterations)
        return self


class ConfigurationRecovery(BaseEstimator):
    """Transformer that repairs particle-number-violating sample sets.

    ``fit`` learns an occupation profile from a configuration basis (``X``)
    and its coefficient vector (``y``); ``transform`` repairs a
    :class:`~qsci.sampling.SampleSet` into a configuration multiset.
    """

    def __init__(self, n_orbitals, n_alpha, n_beta, seed=0, epsilon=EPSILON):
        self.n_orbitals = n_orbitals
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.seed = seed
        self.epsilon = epsilon

    def fit(self, X, y):
        basis = check_configurations(X)
        weights = np.asarray(y, dtype=float)
        self.profile_ = occupation_profile(basis, weights, self.n_orbitals)
        return self

    def transform(self, X) -> dict[Configuration, int]:
        check_is_fitted(self, "profile_")
        samples = check_sample_set(X, self.n_orbitals)
        return repair_sample_set(samples, self.profile_, self.n_alpha,
                                 self.n_beta, self.seed, epsilon=self.epsilon)
