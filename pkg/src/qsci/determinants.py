"""Determinant configurations and excitation bookkeeping.

A :class:`Configuration` is a pair of occupation masks, one per spin channel.
Bit ``i`` of a mask marks spatial orbital ``i`` as occupied for that spin.
The textual form used in measurement data is a string of ``0``/``1``
characters of length ``2 * n_orbitals``: character ``i`` is alpha orbital
``i``, character ``n_orbitals + i`` is beta orbital ``i``.
"""

import math
from dataclasses import dataclass

from ._bitops import occupied_orbitals, popcount, single_phase
from .exceptions import (
    HoleNotOccupied,
    LengthMismatch,
    ParticleOccupied,
    SpaceTooLarge,
)

ENUMERATION_CAP = 10_000_000


@dataclass(frozen=True, order=True)
class Configuration:
    """Occupation masks for the alpha and beta spin channels.

    Ordering is lexicographic on ``(alpha, beta)``, which defines the
    canonical basis order used everywhere in this package.
    """

    alpha: int
    beta: int

    @property
    def n_alpha(self) -> int:
        return popcount(self.alpha)

    @property
    def n_beta(self) -> int:
        return popcount(self.beta)

    def occupied(self, spin: str) -> list[int]:
        return occupied_orbitals(self._mask(spin))

    def _mask(self, spin: str) -> int:
        if spin == "alpha":
            return self.alpha
        if spin == "beta":
            return self.beta
        raise ValueError(f"spin must be 'alpha' or 'beta', got {spin!r}")


@dataclass(frozen=True)
class RawBitstring:
    """One measured bitstring, before any particle-number check."""

    bits: str

    def __post_init__(self):
        if set(self.bits) - {"0", "1"}:
            raise ValueError(f"bitstring may contain only 0 and 1: {self.bits!r}")
        if len(self.bits) % 2 != 0:
            raise LengthMismatch(
                f"bitstring length {len(self.bits)} is odd; expected alpha and beta "
                f"blocks of equal width")


def from_raw(raw, n_orbitals: int) -> Configuration:
    """Decode a textual bitstring into a :class:`Configuration`.

    Accepts a :class:`RawBitstring` or a plain string.  The length must be
    exactly ``2 * n_orbitals``.
    """
    bits = raw.bits if isinstance(raw, RawBitstring) else raw
    if len(bits) != 2 * n_orbitals:
        raise LengthMismatch(
            f"bitstring has length {len(bits)}, expected {2 * n_orbitals}")
    if set(bits) - {"0", "1"}:
        raise ValueError(f"bitstring may contain only 0 and 1: {bits!r}")
    alpha = 0
    beta = 0
    for i in range(n_orbitals):
        if bits[i] == "1":
            alpha |= 1 << i
        if bits[n_orbitals + i] == "1":
            beta |= 1 << i
    return Configuration(alpha, beta)


def to_bits(config: Configuration, n_orbitals: int) -> str:
    """Inverse of :func:`from_raw`."""
    if config.alpha >> n_orbitals or config.beta >> n_orbitals:
        raise LengthMismatch(
            f"configuration occupies orbitals beyond index {n_orbitals - 1}")
    chars = []
    for mask in (config.alpha, config.beta):
        chars.extend("1" if mask >> i & 1 else "0" for i in range(n_orbitals))
    return "".join(chars)


def excitation_degree(a: Configuration, b: Configuration) -> int:
    """Number of orbital substitutions separating two configurations."""
    return (popcount(a.alpha ^ b.alpha) + popcount(a.beta ^ b.beta)) // 2


def excitation_phase(config: Configuration, hole: int, particle: int, spin: str) -> int:
    """Fermionic sign of moving one electron from ``hole`` to ``particle``.

    Both orbitals are in the given spin channel of ``config``.  The sign is
    ``(-1) ** k`` where ``k`` counts occupied orbitals of that spin strictly
    between the two positions.
    """
    mask = config._mask(spin)
    if not mask >> hole & 1:
        raise HoleNotOccupied(f"{spin} orbital {hole} is not occupied")
    if particle != hole and mask >> particle & 1:
        raise ParticleOccupied(f"{spin} orbital {particle} is already occupied")
    return single_phase(mask, hole, particle)


def apply_single(config: Configuration, hole: int, particle: int, spin: str):
    """Move one electron; returns ``(phase, new_configuration)``."""
    phase = excitation_phase(config, hole, particle, spin)
    mask = config._mask(spin) ^ (1 << hole) ^ (1 << particle)
    if spin == "alpha":
        return phase, Configuration(mask, config.beta)
    return phase, Configuration(config.alpha, mask)


def _subset_masks(n: int, k: int) -> list[int]:
    """All n-bit masks with k bits set, in ascending numeric order."""
    if k == 0:
        return [0]
    masks = []
    v = (1 << k) - 1
    limit = 1 << n
    while v < limit:
        masks.append(v)
        t = (v | (v - 1)) + 1
        v = t | ((((t & -t) // (v & -v)) >> 1) - 1)
    return masks


def enumerate_full_space(n_orbitals: int, n_alpha: int, n_beta: int,
                         cap: int = ENUMERATION_CAP) -> list[Configuration]:
    """Every configuration of the (n_alpha, n_beta) sector, in canonical order.

    Canonical order is ascending ``(alpha, beta)``.  Raises
    :class:`SpaceTooLarge` when the sector dimension exceeds ``cap``.
    """
    if not 0 <= n_alpha <= n_orbitals or not 0 <= n_beta <= n_orbitals:
        raise ValueError(
            f"electron counts ({n_alpha}, {n_beta}) do not fit in {n_orbitals} orbitals")
    dimension = math.comb(n_orbitals, n_alpha) * math.comb(n_orbitals, n_beta)
    if dimension > cap:
        raise SpaceTooLarge(
            f"full space has {dimension} configurations, above the cap of {cap}")
    alpha_masks = _subset_masks(n_orbitals, n_alpha)
    beta_masks = _subset_masks(n_orbitals, n_beta)
    return [Configuration(a, b) for a in alpha_masks for b in beta_masks]
