"""Outer loops: sample-driven subspace selection and the exact reference.

One recovery iteration repairs every shot against the current occupation
profile, splits the repaired multiset into batches, diagonalises each
batch's configuration subspace, and keeps the lowest-energy batch.  Its
squared coefficients define the profile for the next iteration.
Convergence is declared when the running best energy moves by less than the
energy tolerance between iterations; by the variational principle that best
energy can only decrease, and it never drops below the full-space result.
"""

from dataclasses import dataclass

import numpy as np

from .determinants import ENUMERATION_CAP, Configuration, enumerate_full_space, from_raw
from .eigensolver import DENSE_CAP, ground_state
from .exceptions import EmptySampleSet, LengthMismatch, NoValidConfigurations
from .integrals import IntegralTable
from .recovery import (
    count_violations,
    occupation_profile,
    repair_sample_set,
    uniform_profile,
)
from .sampling import SampleSet, configurations_to_sample_set, split_batches
from .slater_condon import build_subspace_hamiltonian

_DOMAIN_REPAIR = 1
_DOMAIN_BATCH = 2


def derive_seed(seed: int, domain: int, *path: int) -> int:
    """Child seed for a named stage; stable and collision-free by design."""
    sequence = np.random.SeedSequence(seed, spawn_key=(domain, *path))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass
class QsciParams:
    """Knobs of the sample-driven solver, with the defaults used throughout."""

    shots: int = 5000
    batch_size: int = 500
    energy_tolerance: float = 1e-6
    max_recovery_iterations: int = 10
    subspace_cap: int | None = None
    union: bool = False
    recover_invalid: bool = True
    seed: int = 0
    solver_tol: float = 1e-9
    solver_max_iterations: int = 200
    dense_cap: int = DENSE_CAP

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.batch_size > self.shots:
            raise ValueError(
                f"batch_size {self.batch_size} exceeds shots {self.shots}")
        if self.energy_tolerance <= 0:
            raise ValueError("energy_tolerance must be positive")
        if self.max_recovery_iterations < 1:
            raise ValueError("max_recovery_iterations must be at least 1")
        if self.subspace_cap is not None and self.subspace_cap < 1:
            raise ValueError("subspace_cap must be positive when given")
        if self.solver_tol <= 0 or self.solver_max_iterations < 1 or self.dense_cap < 1:
            raise ValueError("solver settings must be positive")


@dataclass
class IterationRecord:
    """One row of the outer-loop trace."""

    iteration: int
    dimension: int
    energy: float          # best energy seen up to and including this iteration
    batch_energy: float    # energy of the batch retained in this iteration
    violation_fraction: float


@dataclass
class SubspaceResult:
    """Outcome of a subspace diagonalisation run."""

    energy: float
    basis: list[Configuration]
    coefficients: np.ndarray
    iterations: list[IterationRecord]
    converged: bool
    n_alpha: int
    n_beta: int
    method: str = "qsci"

    @property
    def dimension(self) -> int:
        return len(self.basis)


def _distinct_configurations(samples: SampleSet) -> dict[Configuration, int]:
    out: dict[Configuration, int] = {}
    for bits, count in samples.sorted_items():
        config = from_raw(bits, samples.n_orbitals)
        out[config] = out.get(config, 0) + count
    return out


def _select_basis(samples: SampleSet, cap: int | None) -> list[Configuration]:
    occurrence = _distinct_configurations(samples)
    configs = list(occurrence)
    if cap is not None and len(configs) > cap:
        configs.sort(key=lambda c: (-occurrence[c], c))
        configs = configs[:cap]
    return sorted(configs)


def run_qsci(table: IntegralTable, samples: SampleSet,
             params: QsciParams | None = None) -> SubspaceResult:
    """Self-consistent sample-driven subspace diagonalisation.

    ``samples`` may contain particle-number-violating strings; they are
    repaired each iteration against the current occupation profile unless
    ``params.recover_invalid`` is off, in which case they are dropped.
    """
    if params is None:
        params = QsciParams()
    n = table.n_orbitals
    na, nb = table.n_alpha, table.n_beta
    if samples.n_orbitals != n:
        raise LengthMismatch(
            f"samples span {samples.n_orbitals} orbitals but the integral "
            f"table has {n}")
    if samples.total_shots == 0:
        raise EmptySampleSet("no shots to select configurations from")

    violation_fraction = count_violations(samples, na, nb) / samples.total_shots
    profile = uniform_profile(n, na, nb)

    best_energy = np.inf
    best_basis: list[Configuration] | None = None
    best_coefficients: np.ndarray | None = None
    previous_best = None
    trace: list[IterationRecord] = []
    converged = False

    for iteration in range(1, params.max_recovery_iterations + 1):
        if params.recover_invalid:
            repaired = repair_sample_set(
                samples, profile, na, nb,
                seed=derive_seed(params.seed, _DOMAIN_REPAIR, iteration))
        else:
            repaired = {c: k for c, k in _distinct_configurations(samples).items()
                        if c.n_alpha == na and c.n_beta == nb}
            if not repaired:
                raise NoValidConfigurations(
                    "every sampled bitstring violates the particle numbers "
                    "and recovery is disabled")
        pool = configurations_to_sample_set(repaired, n, source=samples.source,
                                            seed=params.seed)
        if params.union:
            batches = [pool]
        else:
            batches = split_batches(
                pool, params.batch_size,
                seed=derive_seed(params.seed, _DOMAIN_BATCH, iteration))

        batch_energy = np.inf
        batch_basis = None
        batch_coefficients = None
        for batch in batches:
            basis = _select_basis(batch, params.subspace_cap)
            hamiltonian = build_subspace_hamiltonian(basis, table)
            state = ground_state(hamiltonian, tol=params.solver_tol,
                                 max_iterations=params.solver_max_iterations,
                                 dense_cap=params.dense_cap)
            if state.energy < batch_energy:
                batch_energy = state.energy
                batch_basis = basis
                batch_coefficients = state.coefficients

        profile = occupation_profile(batch_basis, batch_coefficients, n)
        if batch_energy < best_energy:
            best_energy = batch_energy
            best_basis = batch_basis
            best_coefficients = batch_coefficients
        trace.append(IterationRecord(
            iteration=iteration, dimension=len(batch_basis), energy=best_energy,
            batch_energy=batch_energy, violation_fraction=violation_fraction))

        if previous_best is not None and abs(best_energy - previous_best) < params.energy_tolerance:
            converged = True
            break
        previous_best = best_energy

    return SubspaceResult(
        energy=best_energy, basis=best_basis, coefficients=best_coefficients,
        iterations=trace, converged=converged, n_alpha=na, n_beta=nb,
        method="qsci")


def run_casci(table: IntegralTable, space_cap: int = ENUMERATION_CAP,
              dense_cap: int = DENSE_CAP, solver_tol: float = 1e-9,
              solver_max_iterations: int = 200) -> SubspaceResult:
    """Exact diagonalisation over the complete particle-number sector."""
    basis = enumerate_full_space(table.n_orbitals, table.n_alpha, table.n_beta,
                                 cap=space_cap)
    hamiltonian = build_subspace_hamiltonian(basis, table)
    state = ground_state(hamiltonian, tol=solver_tol,
                         max_iterations=solver_max_iterations,
                         dense_cap=dense_cap)
    record = IterationRecord(iteration=1, dimension=len(basis),
                             energy=state.energy, batch_energy=state.energy,
                             violation_fraction=0.0)
    return SubspaceResult(
        energy=state.energy, basis=basis, coefficients=state.coefficients,
        iterations=[record], converged=True, n_alpha=table.n_alpha,
        n_beta=table.n_beta, method="casci")
