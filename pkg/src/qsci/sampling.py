"""Measurement-style bitstring samples: generation, ingestion, batching.

A sample is a textual bitstring of length ``2 * n_orbitals`` (alpha block
first).  Sets of samples are multisets stored as count dictionaries.  All
randomness runs through counter-based Philox generators so every operation
is reproducible from its integer seed alone.
"""

from dataclasses import dataclass, field

import numpy as np

from .determinants import Configuration, to_bits
from .exceptions import (
    EmptyFile,
    EmptySampleSet,
    LengthMismatch,
    MalformedRecord,
    NonPositiveCount,
    ZeroStateVector,
)

ENDIANNESS_CHOICES = ("alpha-first", "beta-first")


def philox(seed: int, *path: int) -> np.random.Generator:
    """Philox generator keyed by a seed and an optional derivation path.

    The same ``(seed, path)`` pair always yields the same stream, on any
    platform, regardless of how many other streams were created before it.
    """
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(path))))


@dataclass(frozen=True)
class NoiseSpec:
    """Readout-noise model: each emitted bit flips independently."""

    flip_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError(
                f"flip_probability must lie in [0, 1], got {self.flip_probability}")


@dataclass(eq=False)
class SampleSet:
    """Multiset of measured bitstrings.

    Equality compares the multiset content and width only; ``source`` and
    ``seed`` are provenance metadata.
    """

    counts: dict[str, int]
    n_orbitals: int
    source: str = "synthetic"
    seed: int | None = None
    total_shots: int = field(init=False)

    def __post_init__(self):
        width = 2 * self.n_orbitals
        total = 0
        for bits, count in self.counts.items():
            if len(bits) != width:
                raise LengthMismatch(
                    f"bitstring {bits!r} has length {len(bits)}, expected {width}")
            if set(bits) - {"0", "1"}:
                raise ValueError(f"bitstring may contain only 0 and 1: {bits!r}")
            if not isinstance(count, int) or count <= 0:
                raise NonPositiveCount(f"count for {bits!r} must be a positive integer")
            total += count
        self.total_shots = total

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return self.n_orbitals == other.n_orbitals and self.counts == other.counts

    def sorted_items(self) -> list[tuple[str, int]]:
        return sorted(self.counts.items())


def sample_from_state(basis, weights, n_orbitals: int, shots: int,
                      noise: NoiseSpec | None = None) -> SampleSet:
    """Draw ``shots`` bitstrings from the squared-weight distribution.

    Each drawn configuration is rendered as text and every bit then flips
    with ``noise.flip_probability``.  The noise seed drives both the draws
    and the flips.
    """
    if noise is None:
        noise = NoiseSpec()
    if len(basis) != len(weights):
        raise LengthMismatch(
            f"{len(basis)} configurations but {len(weights)} weights")
    if shots <= 0:
        raise ValueError(f"shots must be positive, got {shots}")
    weights = np.asarray(weights, dtype=float)
    probabilities = weights ** 2
    norm = probabilities.sum()
    if norm == 0.0:
        raise ZeroStateVector("all sampling weights are zero")
    probabilities /= norm

    rng = philox(noise.seed)
    drawn = rng.choice(len(basis), size=shots, p=probabilities)

    width = 2 * n_orbitals
    strings = [to_bits(c, n_orbitals) for c in basis]
    bits = np.array([[ord(ch) - ord("0") for ch in s] for s in strings],
                    dtype=np.uint8)[drawn]
    if noise.flip_probability > 0.0:
        flips = rng.random((shots, width)) < noise.flip_probability
        bits ^= flips

    counts: dict[str, int] = {}
    for row in bits:
        key = "".join("1" if b else "0" for b in row)
        counts[key] = counts.get(key, 0) + 1
    return SampleSet(counts=counts, n_orbitals=n_orbitals,
                     source="synthetic", seed=noise.seed)


def ingest_counts(text: str, n_orbitals: int,
                  endianness: str = "alpha-first") -> SampleSet:
    """Parse ``bitstring count`` lines into a :class:`SampleSet`.

    Blank lines and ``#`` comments are skipped.  Counts of repeated strings
    accumulate.  With ``endianness="beta-first"`` the two halves of every
    string are swapped on ingest so downstream code always sees the alpha
    block first.
    """
    if endianness not in ENDIANNESS_CHOICES:
        raise ValueError(f"endianness must be one of {ENDIANNESS_CHOICES}")
    width = 2 * n_orbitals
    counts: dict[str, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#")[0].strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if len(tokens) != 2:
            raise MalformedRecord(
                f"expected 'bitstring count', got {len(tokens)} tokens", number)
        bits, count_token = tokens
        if set(bits) - {"0", "1"}:
            raise MalformedRecord(f"bitstring {bits!r} has characters outside 0/1",
                                  number)
        if len(bits) != width:
            raise LengthMismatch(
                f"line {number}: bitstring has length {len(bits)}, expected {width}")
        try:
            count = int(count_token)
        except ValueError:
            raise MalformedRecord(f"unreadable count {count_token!r}", number) from None
        if count <= 0:
            raise NonPositiveCount(f"line {number}: count must be positive, got {count}")
        if endianness == "beta-first":
            bits = bits[n_orbitals:] + bits[:n_orbitals]
        counts[bits] = counts.get(bits, 0) + count
    if not counts:
        raise EmptyFile("counts stream has no records")
    return SampleSet(counts=counts, n_orbitals=n_orbitals, source="file", seed=None)


def write_counts(samples: SampleSet) -> str:
    """Render a sample set as sorted ``bitstring count`` lines."""
    lines = [f"# total_shots={samples.total_shots}"]
    lines.extend(f"{bits} {count}" for bits, count in samples.sorted_items())
    return "\n".join(lines) + "\n"


def split_batches(samples: SampleSet, batch_size: int, seed: int) -> list[SampleSet]:
    """Randomly partition the shots into batches of ``batch_size``.

    The partition is a seeded permutation of the expanded multiset, so the
    union of the returned batches is exactly the input.  The final batch may
    be smaller.
    """
    if batch_size <= 0:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    if samples.total_shots == 0:
        raise EmptySampleSet("cannot batch an empty sample set")
    items = samples.sorted_items()
    strings = [bits for bits, _ in items]
    expanded = np.repeat(np.arange(len(items)),
                         [count for _, count in items])
    order = philox(seed).permutation(expanded)

    batches = []
    for start in range(0, order.size, batch_size):
        chunk = order[start:start + batch_size]
        counts: dict[str, int] = {}
        for idx in chunk:
            key = strings[int(idx)]
            counts[key] = counts.get(key, 0) + 1
        batches.append(SampleSet(counts=counts, n_orbitals=samples.n_orbitals,
                                 source=samples.source, seed=seed))
    return batches


def configurations_to_sample_set(configurations: dict[Configuration, int],
                                 n_orbitals: int, source: str = "synthetic",
                                 seed: int | None = None) -> SampleSet:
    """Encode a configuration multiset back into textual form."""
    counts = {to_bits(c, n_orbitals): count
              for c, count in configurations.items()}
    return SampleSet(counts=counts, n_orbitals=n_orbitals, source=source, seed=seed)
