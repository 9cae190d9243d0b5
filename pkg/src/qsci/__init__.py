"""Sample-driven configuration interaction for active-space Hamiltonians.

The package covers the whole pipeline: integral tables read from FCIDUMP
text, determinant bookkeeping, Slater-Condon matrix elements, sparse
subspace assembly, dense and Davidson eigensolvers, measurement-style
sampling with readout noise, self-consistent configuration recovery, the
sample-driven outer loop, and supermolecular binding-energy reports.

The estimator classes in :mod:`qsci.estimators` are the convenient front
door; the per-stage functions underneath are public as well.
"""

__version__ = "0.1.0"

from .binding import BindingEnergyReport, binding_energy
from .determinants import Configuration, RawBitstring, enumerate_full_space, from_raw
from .driver import QsciParams, SubspaceResult, run_casci, run_qsci
from .eigensolver import GroundState, dense_spectrum, ground_state
from .estimators import CasciSolver, ConfigurationRecovery, QsciSolver
from .integrals import IntegralTable, parse_fcidump, read_fcidump, write_fcidump
from .recovery import OccupationProfile, occupation_profile, recover, repair_sample_set
from .sampling import NoiseSpec, SampleSet, ingest_counts, sample_from_state, split_batches
from .slater_condon import (
    SubspaceHamiltonian,
    build_subspace_hamiltonian,
    diagonal_element,
    offdiagonal_element,
)

__all__ = [
    "BindingEnergyReport",
    "CasciSolver",
    "Configuration",
    "ConfigurationRecovery",
    "GroundState",
    "IntegralTable",
    "NoiseSpec",
    "OccupationProfile",
    "QsciParams",
    "QsciSolver",
    "RawBitstring",
    "SampleSet",
    "SubspaceHamiltonian",
    "SubspaceResult",
    "__version__",
    "binding_energy",
    "build_subspace_hamiltonian",
    "dense_spectrum",
    "diagonal_element",
    "enumerate_full_space",
    "from_raw",
    "ground_state",
    "ingest_counts",
    "occupation_profile",
    "offdiagonal_element",
    "parse_fcidump",
    "read_fcidump",
    "recover",
    "repair_sample_set",
    "run_casci",
    "run_qsci",
    "sample_from_state",
    "split_batches",
    "write_fcidump",
]
