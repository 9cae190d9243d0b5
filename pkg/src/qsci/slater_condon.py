"""Hamiltonian matrix elements between determinants, and subspace assembly.

Matrix elements follow the usual excitation-degree dispatch: the element is
zero beyond two substitutions, and the surviving cases reduce to one- and
two-body integrals dressed with a fermionic sign.  Two-body integrals are
chemists' notation ``(pq|rs)`` throughout.

Two independent code paths produce the same numbers.  The scalar functions
(:func:`diagonal_element`, :func:`offdiagonal_element`) are direct textbook
loops over occupied orbitals.  :func:`build_subspace_hamiltonian` is the
vectorised bulk path: it classifies all configuration pairs by XOR popcount
in chunks and evaluates each excitation class with array arithmetic.  Only
the upper triangle is stored.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._bitops import (
    lowest_bit_u64,
    occupancy_matrix,
    occupied_orbitals,
    popcount,
    positions_u64,
    single_phase,
    single_phase_u64,
)
from .determinants import Configuration
from .exceptions import InvalidBasis
from .integrals import IntegralTable

DROP_THRESHOLD = 1e-14

# Degree classification works from either precomputed unique-string popcount
# tables (fast when spin strings repeat across the basis) or direct chunked
# XORs.  The limits below bound the transient memory of each route.
_GATHER_LIMIT = 150_000_000
_CHUNK_BYTES = 16_000_000


# --- scalar elements -----------------------------------------------------------


def diagonal_element(config: Configuration, table: IntegralTable) -> float:
    """<c|H|c> including the core energy."""
    occ_a = config.occupied("alpha")
    occ_b = config.occupied("beta")
    h = table.one_body
    g = table.get_two_body

    energy = table.core_energy
    for i in occ_a + occ_b:
        energy += h[i, i]
    for occ in (occ_a, occ_b):
        for a, i in enumerate(occ):
            for j in occ[a + 1:]:
                energy += g(i, i, j, j) - g(i, j, j, i)
    for i in occ_a:
        for j in occ_b:
            energy += g(i, i, j, j)
    return energy


def _single_element(table, hole, particle, occ_same, occ_opp):
    value = table.one_body[hole, particle]
    g = table.get_two_body
    for k in occ_same:
        if k != hole:
            value += g(hole, particle, k, k) - g(hole, k, k, particle)
    for k in occ_opp:
        value += g(hole, particle, k, k)
    return value


def offdiagonal_element(a: Configuration, b: Configuration, table: IntegralTable) -> float:
    """<a|H|b> for two configurations of the same particle-number sector.

    Returns the diagonal element when ``a == b`` and exactly zero beyond
    excitation degree two.
    """
    if a.n_alpha != b.n_alpha or a.n_beta != b.n_beta:
        raise InvalidBasis(
            f"configurations live in different sectors: "
            f"({a.n_alpha}, {a.n_beta}) vs ({b.n_alpha}, {b.n_beta})")
    dxa = a.alpha ^ b.alpha
    dxb = a.beta ^ b.beta
    da = popcount(dxa) // 2
    db = popcount(dxb) // 2

    if da + db == 0:
        return diagonal_element(a, table)
    if da + db > 2:
        return 0.0

    if (da, db) in ((1, 0), (0, 1)):
        spin = "alpha" if da else "beta"
        m1, m2 = (a.alpha, b.alpha) if da else (a.beta, b.beta)
        dx = m1 ^ m2
        hole = (dx & m1).bit_length() - 1
        particle = (dx & m2).bit_length() - 1
        occ_same = a.occupied(spin)
        occ_opp = a.occupied("beta" if da else "alpha")
        phase = single_phase(m1, hole, particle)
        return phase * _single_element(table, hole, particle, occ_same, occ_opp)

    if (da, db) == (1, 1):
        value = 1.0
        indices = []
        for m1, m2 in ((a.alpha, b.alpha), (a.beta, b.beta)):
            dx = m1 ^ m2
            hole = (dx & m1).bit_length() - 1
            particle = (dx & m2).bit_length() - 1
            value *= single_phase(m1, hole, particle)
            indices += [hole, particle]
        ha, pa, hb, pb = indices
        return value * table.get_two_body(ha, pa, hb, pb)

    # double excitation within one spin channel
    m1, m2 = (a.alpha, b.alpha) if da == 2 else (a.beta, b.beta)
    dx = m1 ^ m2
    h1, h2 = occupied_orbitals(dx & m1)
    p1, p2 = occupied_orbitals(dx & m2)
    phase = single_phase(m1, h1, p1)
    mid = m1 ^ (1 << h1) ^ (1 << p1)
    phase *= single_phase(mid, h2, p2)
    return phase * (table.get_two_body(h1, p1, h2, p2)
                    - table.get_two_body(h1, p2, h2, p1))


# --- assembled subspace Hamiltonian ---------------------------------------------


@dataclass
class SubspaceHamiltonian:
    """Upper-triangular sparse Hamiltonian over an ordered configuration basis.

    ``upper`` holds every stored element with row <= col, diagonal included
    (the core energy is folded in).  The full matrix is implied by symmetry.
    """

    basis: list[Configuration]
    n_orbitals: int
    upper: sp.csr_matrix
    _upper_t: sp.spmatrix = field(init=False, repr=False)
    _diagonal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._upper_t = self.upper.T  # CSC view, no copy
        diag = self.upper.diagonal()
        diag.setflags(write=False)
        self._diagonal = diag

    @property
    def dimension(self) -> int:
        return self.upper.shape[0]

    def diagonal(self) -> np.ndarray:
        return self._diagonal

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """H @ v using the stored triangle twice."""
        return self.upper @ v + self._upper_t @ v - self._diagonal * v

    def to_dense(self) -> np.ndarray:
        dense = self.upper.toarray()
        return dense + dense.T - np.diag(self._diagonal)

    def entries(self):
        """(rows, cols, values) of the stored upper triangle, row-major."""
        coo = self.upper.tocoo()
        return coo.row, coo.col, coo.data


def _validate_basis(alpha, beta, n_orbitals):
    if alpha.size == 0:
        raise InvalidBasis("basis is empty")
    packed_high = int(alpha.max()) | int(beta.max())
    if packed_high >> n_orbitals:
        raise InvalidBasis(f"basis occupies orbitals beyond index {n_orbitals - 1}")
    na = np.bitwise_count(alpha)
    nb = np.bitwise_count(beta)
    if (na != na[0]).any() or (nb != nb[0]).any():
        raise InvalidBasis("configurations mix particle-number sectors")
    out_of_order = (alpha[:-1] > alpha[1:]) | \
        ((alpha[:-1] == alpha[1:]) & (beta[:-1] >= beta[1:]))
    if out_of_order.any():
        raise InvalidBasis("basis must be strictly increasing in canonical order")


def _diagonal_vector(table, X, Y):
    h = table.one_body
    G = table.dense_two_body()
    hd = np.diag(h)
    Jmat = np.einsum("iijj->ij", G)
    Kmat = np.einsum("ijji->ij", G)
    JmK = Jmat - Kmat
    diag = table.core_energy + X @ hd + Y @ hd
    diag += 0.5 * np.einsum("ij,ij->i", X @ JmK, X)
    diag += 0.5 * np.einsum("ij,ij->i", Y @ JmK, Y)
    diag += np.einsum("ij,ij->i", X @ Jmat, Y)
    return diag


def _split_single(m1, m2):
    """Hole and particle positions plus phase for one-substitution mask pairs."""
    dx = m1 ^ m2
    hole = positions_u64(dx & m1)
    particle = positions_u64(dx & m2)
    phase = single_phase_u64(m1, hole, particle)
    return hole, particle, phase


def _single_values(n, hflat, Jd, JdmK, hole, particle, phase, occ_same, occ_opp):
    occ = occ_same.copy()
    occ[np.arange(occ.shape[0]), hole.astype(np.intp)] = 0.0
    pq = (hole * np.uint64(n) + particle).astype(np.intp)
    values = hflat[pq]
    values += np.einsum("ij,ij->i", JdmK[pq], occ)
    values += np.einsum("ij,ij->i", Jd[pq], occ_opp)
    return phase * values


def _double_values(n, Gf, m1, m2):
    dx = m1 ^ m2
    hm = dx & m1
    pm = dx & m2
    h1m = lowest_bit_u64(hm)
    p1m = lowest_bit_u64(pm)
    h1 = positions_u64(h1m)
    h2 = positions_u64(hm ^ h1m)
    p1 = positions_u64(p1m)
    p2 = positions_u64(pm ^ p1m)
    phase = single_phase_u64(m1, h1, p1).astype(np.float64)
    mid = m1 ^ (h1m | p1m)
    phase *= single_phase_u64(mid, h2, p2)
    un = np.uint64(n)
    direct = (((h1 * un + p1) * un + h2) * un + p2).astype(np.intp)
    crossed = (((h1 * un + p2) * un + h2) * un + p1).astype(np.intp)
    return phase * (Gf[direct] - Gf[crossed])


def build_subspace_hamiltonian(basis, table: IntegralTable,
                               drop_threshold: float = DROP_THRESHOLD) -> SubspaceHamiltonian:
    """Assemble H over ``basis``, which must be canonically sorted and unique.

    Off-diagonal entries below ``drop_threshold`` in magnitude are dropped;
    diagonal entries are always stored.
    """
    n = table.n_orbitals
    alpha = np.array([c.alpha for c in basis], dtype=np.uint64)
    beta = np.array([c.beta for c in basis], dtype=np.uint64)
    _validate_basis(alpha, beta, n)
    dim = alpha.size

    X = occupancy_matrix(alpha, n)
    Y = occupancy_matrix(beta, n)
    diag = _diagonal_vector(table, X, Y)

    G = table.dense_two_body()
    Gf = G.reshape(-1)
    hflat = np.ascontiguousarray(table.one_body).reshape(-1)
    Jd = np.einsum("pqkk->pqk", G).reshape(n * n, n)
    Kd = np.einsum("pkkq->pqk", G).reshape(n * n, n)
    JdmK = Jd - Kd

    # Pairwise excitation degrees come from XOR popcounts.  When the distinct
    # spin strings are few (the usual case for a sector basis) the popcounts
    # are precomputed per unique pair and gathered; otherwise they are taken
    # directly on the masks in row chunks.
    ua, ia = np.unique(alpha, return_inverse=True)
    ub, ib = np.unique(beta, return_inverse=True)
    use_gather = ua.size ** 2 + ub.size ** 2 <= _GATHER_LIMIT
    if use_gather:
        dA = np.bitwise_count(ua[:, None] ^ ua[None, :]).astype(np.uint8)
        dB = np.bitwise_count(ub[:, None] ^ ub[None, :]).astype(np.uint8)
        chunk = max(1, min(dim, _CHUNK_BYTES // dim))
    else:
        chunk = max(1, min(dim, (_CHUNK_BYTES // 8) // dim))

    rows_out = [np.arange(dim, dtype=np.int32)]
    cols_out = [np.arange(dim, dtype=np.int32)]
    vals_out = [diag]
    columns = np.arange(dim, dtype=np.int64)

    for start in range(0, dim, chunk):
        stop = min(start + chunk, dim)
        if use_gather:
            pa = dA[ia[start:stop, None], ia[None, :]]
            pb = dB[ib[start:stop, None], ib[None, :]]
        else:
            pa = np.bitwise_count(alpha[start:stop, None] ^ alpha[None, :]).astype(np.uint8)
            pb = np.bitwise_count(beta[start:stop, None] ^ beta[None, :]).astype(np.uint8)
        tot = pa + pb
        cand = (tot == 2) | (tot == 4)
        cand &= columns[None, :] > (start + np.arange(stop - start))[:, None]
        ri, ci = np.nonzero(cand)
        if ri.size == 0:
            continue
        pa_sel = pa[ri, ci]
        tot_sel = tot[ri, ci]
        gi = ri + start

        for cls_pa, cls_tot in ((2, 2), (0, 2), (2, 4), (4, 4), (0, 4)):
            pick = (pa_sel == cls_pa) & (tot_sel == cls_tot)
            if not pick.any():
                continue
            I = gi[pick]
            J = ci[pick]
            if (cls_pa, cls_tot) == (2, 2):        # alpha single
                hole, particle, phase = _split_single(alpha[I], alpha[J])
                vals = _single_values(n, hflat, Jd, JdmK, hole, particle,
                                      phase.astype(np.float64), X[I], Y[I])
            elif (cls_pa, cls_tot) == (0, 2):      # beta single
                hole, particle, phase = _split_single(beta[I], beta[J])
                vals = _single_values(n, hflat, Jd, JdmK, hole, particle,
                                      phase.astype(np.float64), Y[I], X[I])
            elif (cls_pa, cls_tot) == (2, 4):      # one substitution per spin
                ha, pa_, phase_a = _split_single(alpha[I], alpha[J])
                hb, pb_, phase_b = _split_single(beta[I], beta[J])
                un = np.uint64(n)
                idx = (((ha * un + pa_) * un + hb) * un + pb_).astype(np.intp)
                vals = (phase_a * phase_b).astype(np.float64) * Gf[idx]
            elif (cls_pa, cls_tot) == (4, 4):      # alpha double
                vals = _double_values(n, Gf, alpha[I], alpha[J])
            else:                                   # beta double
                vals = _double_values(n, Gf, beta[I], beta[J])

            keep = np.abs(vals) >= drop_threshold
            rows_out.append(I[keep].astype(np.int32))
            cols_out.append(J[keep].astype(np.int32))
            vals_out.append(vals[keep])

    data = np.concatenate(vals_out)
    if not np.isfinite(data).all():
        raise ValueError("assembled Hamiltonian contains non-finite entries")
    upper = sp.coo_matrix(
        (data, (np.concatenate(rows_out), np.concatenate(cols_out))),
        shape=(dim, dim)).tocsr()
    return SubspaceHamiltonian(basis=list(basis), n_orbitals=n, upper=upper)
