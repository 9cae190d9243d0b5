"""Lowest eigenpair of an assembled subspace Hamiltonian.

Small problems go through a dense symmetric decomposition.  Above
``DENSE_CAP`` a Davidson iteration with diagonal preconditioning takes over;
it only ever touches the Hamiltonian through matrix-vector products.  Both
paths return the eigenvector with a fixed sign convention: the entry of
largest magnitude is positive, first index winning ties.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DimensionTooLarge, DimensionZero, NotConverged
from .slater_condon import SubspaceHamiltonian

DENSE_CAP = 2048
DAVIDSON_COLLAPSE = 20

_PRECONDITION_FLOOR = 1e-8
_ORTHOGONALITY_FLOOR = 1e-12


@dataclass
class GroundState:
    """Converged lowest eigenpair."""

    energy: float
    coefficients: np.ndarray
    iterations: int
    residual_norm: float


def _fix_sign(v: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(v)))
    return -v if v[pivot] < 0 else v


def dense_spectrum(h: SubspaceHamiltonian, dense_cap: int = DENSE_CAP) -> np.ndarray:
    """All eigenvalues, ascending.  Refuses dimensions above ``dense_cap``."""
    if h.dimension == 0:
        raise DimensionZero("cannot diagonalise an empty subspace")
    if h.dimension > dense_cap:
        raise DimensionTooLarge(
            f"dimension {h.dimension} exceeds the dense cap of {dense_cap}")
    return scipy.linalg.eigh(h.to_dense(), eigvals_only=True)


def ground_state(h: SubspaceHamiltonian, tol: float = 1e-9,
                 max_iterations: int = 200,
                 dense_cap: int = DENSE_CAP) -> GroundState:
    """Lowest eigenpair of ``h``.

    Convergence means ``|H v - E v| <= tol * max(1, |E|)``.  The iterative
    path raises :class:`NotConverged` carrying its best iterate when the
    iteration cap is reached.
    """
    dim = h.dimension
    if dim == 0:
        raise DimensionZero("cannot diagonalise an empty subspace")
    if dim <= dense_cap:
        values, vectors = scipy.linalg.eigh(h.to_dense(), subset_by_index=[0, 0])
        energy = float(values[0])
        x = _fix_sign(vectors[:, 0])
        residual = float(np.linalg.norm(h.matvec(x) - energy * x))
        return GroundState(energy, x, 0, residual)
    return _davidson(h, tol, max_iterations)


def _davidson(h: SubspaceHamiltonian, tol: float, max_iterations: int) -> GroundState:
    dim = h.dimension
    diag = h.diagonal()

    start = int(np.argmin(diag))
    v = np.zeros(dim)
    v[start] = 1.0
    V = [v]
    W = [h.matvec(v)]

    best_energy = np.inf
    best_x = v
    best_residual = np.inf

    for iteration in range(1, max_iterations + 1):
        Vm = np.column_stack(V)
        Wm = np.column_stack(W)
        T = Vm.T @ Wm
        T = 0.5 * (T + T.T)
        values, vectors = scipy.linalg.eigh(T)
        theta = float(values[0])
        s = vectors[:, 0]
        x = Vm @ s
        hx = Wm @ s
        r = hx - theta * x
        residual = float(np.linalg.norm(r))

        if residual < best_residual:
            best_energy, best_x, best_residual = theta, x, residual

        if residual <= tol * max(1.0, abs(theta)):
            return GroundState(theta, _fix_sign(x), iteration, residual)

        if len(V) >= DAVIDSON_COLLAPSE:
            norm_x = np.linalg.norm(x)
            V = [x / norm_x]
            W = [hx / norm_x]
            continue

        denom = diag - theta
        small = np.abs(denom) < _PRECONDITION_FLOOR
        denom[small] = np.where(denom[small] < 0, -_PRECONDITION_FLOOR,
                                _PRECONDITION_FLOOR)
        t = r / denom

        t = _orthogonalize(t, V)
        if t is None:
            # Preconditioned residual collapsed onto the search space; fall
            # back to the axis of the largest residual component.
            fallback = np.zeros(dim)
            fallback[int(np.argmax(np.abs(r)))] = 1.0
            t = _orthogonalize(fallback, V)
            if t is None:
                break
        V.append(t)
        W.append(h.matvec(t))

    raise NotConverged(
        f"no convergence within {max_iterations} iterations "
        f"(best residual {best_residual:.3e})",
        energy=best_energy, coefficients=_fix_sign(best_x),
        residual_norm=best_residual)


def _orthogonalize(t: np.ndarray, V: list[np.ndarray]):
    for _ in range(2):
        for u in V:
            t = t - (u @ t) * u
    norm = np.linalg.norm(t)
    if norm < _ORTHOGONALITY_FLOOR:
        return None
    return t / norm
