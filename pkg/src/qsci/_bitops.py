"""Bit-level helpers shared by the determinant and Hamiltonian code.

Orbital occupation masks are plain integers: bit ``i`` set means spatial
orbital ``i`` is occupied within one spin channel.  The vectorised variants
operate on ``uint64`` arrays, which caps the orbital count at 64 per spin.
That is far beyond what a dense two-body integral table supports anyway.
"""

import numpy as np

_ONE = np.uint64(1)


def popcount(mask: int) -> int:
    return int(mask).bit_count()


def occupied_orbitals(mask: int) -> list[int]:
    """Indices of set bits, ascending."""
    out = []
    m = int(mask)
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return out


def mask_from_orbitals(orbitals) -> int:
    mask = 0
    for i in orbitals:
        mask |= 1 << i
    return mask


def between_mask(i: int, j: int) -> int:
    """Bits strictly between positions ``i`` and ``j`` (order irrelevant)."""
    lo, hi = (i, j) if i < j else (j, i)
    return ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)


def single_phase(mask: int, hole: int, particle: int) -> int:
    """Sign picked up by moving one particle from ``hole`` to ``particle``.

    ``mask`` is the occupation before the move.  The sign is -1 raised to
    the number of occupied orbitals strictly between the two positions.
    """
    k = popcount(mask & between_mask(hole, particle))
    return 1 - 2 * (k & 1)


# --- vectorised counterparts on uint64 arrays ---------------------------------


def positions_u64(single_bit: np.ndarray) -> np.ndarray:
    """Bit positions of one-hot uint64 values (popcount of ``value - 1``)."""
    return np.bitwise_count(single_bit - _ONE)


def lowest_bit_u64(mask: np.ndarray) -> np.ndarray:
    return mask & (~mask + _ONE)


def between_mask_u64(i: np.ndarray, j: np.ndarray) -> np.ndarray:
    lo = np.minimum(i, j).astype(np.uint64)
    hi = np.maximum(i, j).astype(np.uint64)
    return ((_ONE << hi) - _ONE) ^ ((_ONE << (lo + _ONE)) - _ONE)


def single_phase_u64(mask: np.ndarray, hole: np.ndarray, particle: np.ndarray) -> np.ndarray:
    """Vectorised :func:`single_phase`; returns an int8 array of +/-1."""
    k = np.bitwise_count(mask & between_mask_u64(hole, particle)).astype(np.int64)
    return (1 - 2 * (k & 1)).astype(np.int8)


def occupancy_matrix(masks: np.ndarray, n_orbitals: int) -> np.ndarray:
    """(len(masks), n_orbitals) float64 matrix of 0/1 occupations."""
    shifts = np.arange(n_orbitals, dtype=np.uint64)
    return ((masks[:, None] >> shifts[None, :]) & _ONE).astype(np.float64)
