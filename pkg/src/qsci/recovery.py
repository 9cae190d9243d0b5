"""Self-consistent repair of particle-number-violating samples.

Readout noise breaks the per-spin electron counts of measured bitstrings.
Instead of discarding such shots, each one is repaired probabilistically:
surplus electrons are removed preferentially from orbitals the reference
profile says should be empty, and missing electrons are inserted where it
says they should sit.  The profile itself comes from the squared
coefficients of the current best subspace state, so repair sharpens as the
outer loop converges.
"""

from dataclasses import dataclass

import numpy as np

from ._bitops import occupancy_matrix, popcount
from .determinants import Configuration, RawBitstring, from_raw
from .exceptions import (
    EmptySampleSet,
    LengthMismatch,
    ProfileWidthMismatch,
    ZeroWeightVector,
)
from .sampling import SampleSet, philox

EPSILON = 1e-6


@dataclass(frozen=True)
class OccupationProfile:
    """Mean orbital occupations per spin channel, each entry in [0, 1]."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if alpha.ndim != 1 or alpha.shape != beta.shape:
            raise ProfileWidthMismatch(
                f"alpha and beta profiles must be equal-length vectors, "
                f"got {alpha.shape} and {beta.shape}")
        for name, values in (("alpha", alpha), ("beta", beta)):
            if values.size and (values.min() < -1e-12 or values.max() > 1 + 1e-12):
                raise ValueError(f"{name} occupations must lie in [0, 1]")
        alpha = np.clip(alpha, 0.0, 1.0)
        beta = np.clip(beta, 0.0, 1.0)
        alpha.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n_orbitals(self) -> int:
        return self.alpha.size


def uniform_profile(n_orbitals: int, n_alpha: int, n_beta: int) -> OccupationProfile:
    """Flat profile used to bootstrap the first recovery iteration."""
    return OccupationProfile(
        alpha=np.full(n_orbitals, n_alpha / n_orbitals),
        beta=np.full(n_orbitals, n_beta / n_orbitals))


def occupation_profile(basis, weights, n_orbitals: int) -> OccupationProfile:
    """Squared-weight average of the orbital occupations of ``basis``."""
    if len(basis) != len(weights):
        raise LengthMismatch(
            f"{len(basis)} configurations but {len(weights)} weights")
    w2 = np.asarray(weights, dtype=float) ** 2
    norm = w2.sum()
    if norm == 0.0:
        raise ZeroWeightVector("all profile weights are zero")
    w2 /= norm
    alpha = np.array([c.alpha for c in basis], dtype=np.uint64)
    beta = np.array([c.beta for c in basis], dtype=np.uint64)
    return OccupationProfile(
        alpha=w2 @ occupancy_matrix(alpha, n_orbitals),
        beta=w2 @ occupancy_matrix(beta, n_orbitals))


def _repair_mask(mask: int, occupations: np.ndarray, target: int,
                 rng: np.random.Generator, epsilon: float) -> int:
    n = occupations.size
    while popcount(mask) > target:
        candidates = [i for i in range(n) if mask >> i & 1]
        p = np.array([1.0 - occupations[i] + epsilon for i in candidates])
        mask ^= 1 << candidates[int(rng.choice(len(candidates), p=p / p.sum()))]
    while popcount(mask) < target:
        candidates = [i for i in range(n) if not mask >> i & 1]
        p = np.array([occupations[i] + epsilon for i in candidates])
        mask |= 1 << candidates[int(rng.choice(len(candidates), p=p / p.sum()))]
    return mask


def _repair_configuration(config: Configuration, profile: OccupationProfile,
                          n_alpha: int, n_beta: int, rng: np.random.Generator,
                          epsilon: float) -> Configuration:
    alpha = _repair_mask(config.alpha, profile.alpha, n_alpha, rng, epsilon)
    beta = _repair_mask(config.beta, profile.beta, n_beta, rng, epsilon)
    return Configuration(alpha, beta)


def recover(raw, profile: OccupationProfile, n_alpha: int, n_beta: int,
            seed: int, epsilon: float = EPSILON) -> Configuration:
    """Repair one raw bitstring into the (n_alpha, n_beta) sector."""
    bits = raw.bits if isinstance(raw, RawBitstring) else raw
    if len(bits) != 2 * profile.n_orbitals:
        raise ProfileWidthMismatch(
            f"bitstring width {len(bits)} does not match profile over "
            f"{profile.n_orbitals} orbitals")
    config = from_raw(bits, profile.n_orbitals)
    return _repair_configuration(config, profile, n_alpha, n_beta,
                                 philox(seed), epsilon)


def count_violations(samples: SampleSet, n_alpha: int, n_beta: int) -> int:
    """Number of shots whose per-spin electron counts are wrong."""
    bad = 0
    for bits, count in samples.counts.items():
        config = from_raw(bits, samples.n_orbitals)
        if config.n_alpha != n_alpha or config.n_beta != n_beta:
            bad += count
    return bad


def repair_sample_set(samples: SampleSet, profile: OccupationProfile,
                      n_alpha: int, n_beta: int, seed: int,
                      epsilon: float = EPSILON) -> dict[Configuration, int]:
    """Repair every shot; returns the resulting configuration multiset.

    Shots are indexed in sorted bitstring order and each invalid shot gets
    its own generator derived from ``(seed, shot_index)``, so the result
    does not depend on any processing order.
    """
    if samples.n_orbitals != profile.n_orbitals:
        raise ProfileWidthMismatch(
            f"samples over {samples.n_orbitals} orbitals, profile over "
            f"{profile.n_orbitals}")
    if samples.total_shots == 0:
        raise EmptySampleSet("cannot repair an empty sample set")

    repaired: dict[Configuration, int] = {}
    shot_index = 0
    for bits, count in samples.sorted_items():
        config = from_raw(bits, samples.n_orbitals)
        if config.n_alpha == n_alpha and config.n_beta == n_beta:
            repaired[config] = repaired.get(config, 0) + count
            shot_index += count
            continue
        for _ in range(count):
            fixed = _repair_configuration(config, profile, n_alpha, n_beta,
                                          philox(seed, shot_index), epsilon)
            repaired[fixed] = repaired.get(fixed, 0) + 1
            shot_index += 1
    return repaired
