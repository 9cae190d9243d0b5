"""Molecular integral tables and the FCIDUMP-style text format.

A table holds the electron-count metadata plus the core energy, the one-body
matrix ``h[p, q]`` and the two-body tensor ``(pq|rs)`` in chemists' notation.
Two-body values are stored sparsely under a canonical index so the eight-fold
permutation symmetry

    (pq|rs) = (qp|rs) = (pq|sr) = (qp|sr) = (rs|pq) = (sr|pq) = (rs|qp) = (sr|qp)

is enforced by construction.  All public indices are 0-based; the text format
is 1-based as usual.
"""

import warnings

import numpy as np

from .exceptions import (
    EmptyFile,
    FcidumpWarning,
    IndexOutOfRange,
    MalformedHeader,
    MalformedRecord,
)

MAX_ORBITALS = 64  # occupation masks live in 64-bit words downstream

_SYMMETRY_TOL = 1e-10


def canonical_index(p: int, q: int, r: int, s: int) -> tuple[int, int, int, int]:
    """Smallest of the eight permutation-equivalent index quadruples."""
    pq = (p, q) if p <= q else (q, p)
    rs = (r, s) if r <= s else (s, r)
    return min(pq + rs, rs + pq)


class IntegralTable:
    """Immutable container for one molecular Hamiltonian.

    Parameters
    ----------
    n_orbitals : int
        Number of spatial orbitals (at most 64).
    n_electrons : int
        Total electron count.
    ms2 : int, optional
        Twice the spin projection, ``n_alpha - n_beta``.
    core_energy : float, optional
        Scalar shift (nuclear repulsion plus any frozen-core energy).
    one_body : array_like of shape (n_orbitals, n_orbitals), optional
        Symmetric one-body matrix.  Defaults to zero.
    two_body : mapping or ndarray, optional
        Either ``{(p, q, r, s): value}`` with indices in any of the eight
        equivalent orders, or a dense ``(n, n, n, n)`` tensor in chemists'
        notation.  Defaults to zero.
    """

    def __init__(self, n_orbitals, n_electrons, ms2=0, core_energy=0.0,
                 one_body=None, two_body=None):
        n_orbitals = int(n_orbitals)
        n_electrons = int(n_electrons)
        ms2 = int(ms2)
        if not 1 <= n_orbitals <= MAX_ORBITALS:
            raise ValueError(f"n_orbitals must be in [1, {MAX_ORBITALS}], got {n_orbitals}")
        if not 0 <= n_electrons <= 2 * n_orbitals:
            raise ValueError(f"n_electrons must be in [0, {2 * n_orbitals}], got {n_electrons}")
        if (n_electrons + ms2) % 2 != 0:
            raise ValueError(f"n_electrons={n_electrons} and ms2={ms2} have mismatched parity")
        n_alpha = (n_electrons + ms2) // 2
        n_beta = (n_electrons - ms2) // 2
        if not (0 <= n_alpha <= n_orbitals and 0 <= n_beta <= n_orbitals):
            raise ValueError(
                f"ms2={ms2} splits {n_electrons} electrons into ({n_alpha}, {n_beta}), "
                f"which does not fit in {n_orbitals} orbitals")

        self.n_orbitals = n_orbitals
        self.n_electrons = n_electrons
        self.ms2 = ms2
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.core_energy = float(core_energy)

        if one_body is None:
            h = np.zeros((n_orbitals, n_orbitals))
        else:
            h = np.array(one_body, dtype=float)
            if h.shape != (n_orbitals, n_orbitals):
                raise ValueError(f"one_body must have shape {(n_orbitals, n_orbitals)}, got {h.shape}")
            scale = max(1.0, float(np.abs(h).max()))
            if np.abs(h - h.T).max() > _SYMMETRY_TOL * scale:
                raise ValueError("one_body matrix is not symmetric")
            h = 0.5 * (h + h.T)
        h.setflags(write=False)
        self._h = h

        self._g: dict[tuple[int, int, int, int], float] = {}
        if two_body is not None:
            if isinstance(two_body, np.ndarray):
                self._load_dense_two_body(two_body)
            else:
                self._load_sparse_two_body(two_body)
        self._dense_g: np.ndarray | None = None

    def _check_index(self, *indices):
        for i in indices:
            if not 0 <= i < self.n_orbitals:
                raise IndexOutOfRange(
                    f"orbital index {i} outside [0, {self.n_orbitals - 1}]")

    def _load_sparse_two_body(self, mapping):
        for key, value in mapping.items():
            p, q, r, s = (int(i) for i in key)
            self._check_index(p, q, r, s)
            canon = canonical_index(p, q, r, s)
            value = float(value)
            old = self._g.get(canon)
            if old is not None and old != value:
                raise ValueError(
                    f"conflicting values for symmetry-equivalent entry {canon}: {old} vs {value}")
            if value != 0.0:
                self._g[canon] = value

    def _load_dense_two_body(self, tensor):
        n = self.n_orbitals
        if tensor.shape != (n, n, n, n):
            raise ValueError(f"two_body tensor must have shape {(n, n, n, n)}, got {tensor.shape}")
        scale = max(1.0, float(np.abs(tensor).max()))
        for axes in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)]:
            if np.abs(tensor - tensor.transpose(axes)).max() > _SYMMETRY_TOL * scale:
                raise ValueError("two_body tensor lacks the eight-fold index symmetry")
        for p, q, r, s in zip(*np.nonzero(tensor)):
            canon = canonical_index(int(p), int(q), int(r), int(s))
            if canon == (int(p), int(q), int(r), int(s)):
                self._g[canon] = float(tensor[p, q, r, s])

    # --- accessors -------------------------------------------------------

    @property
    def one_body(self) -> np.ndarray:
        """Read-only (n, n) one-body matrix."""
        return self._h

    def get_one_body(self, p: int, q: int) -> float:
        self._check_index(p, q)
        return float(self._h[p, q])

    def get_two_body(self, p: int, q: int, r: int, s: int) -> float:
        """(pq|rs) in chemists' notation; any of the eight index orders."""
        self._check_index(p, q, r, s)
        return self._g.get(canonical_index(p, q, r, s), 0.0)

    def two_body_entries(self) -> dict[tuple[int, int, int, int], float]:
        """Copy of the canonical-index sparse storage."""
        return dict(self._g)

    def dense_two_body(self) -> np.ndarray:
        """Read-only (n, n, n, n) tensor with all eight symmetry partners filled."""
        if self._dense_g is None:
            n = self.n_orbitals
            g = np.zeros((n, n, n, n))
            for (p, q, r, s), v in self._g.items():
                for a, b in ((p, q), (q, p)):
                    for c, d in ((r, s), (s, r)):
                        g[a, b, c, d] = v
                        g[c, d, a, b] = v
            g.setflags(write=False)
            self._dense_g = g
        return self._dense_g

    def __eq__(self, other):
        if not isinstance(other, IntegralTable):
            return NotImplemented
        return (self.n_orbitals == other.n_orbitals
                and self.n_electrons == other.n_electrons
                and self.ms2 == other.ms2
                and self.core_energy == other.core_energy
                and np.array_equal(self._h, other._h)
                and self._g == other._g)

    def __repr__(self):
        return (f"IntegralTable(n_orbitals={self.n_orbitals}, n_electrons={self.n_electrons}, "
                f"ms2={self.ms2}, core_energy={self.core_energy!r}, "
                f"two_body_entries={len(self._g)})")


# --- text format ---------------------------------------------------------


def _parse_header(header_text: str, line_number: int) -> dict:
    body = header_text.strip()
    if body.upper().startswith("&FCI"):
        body = body[4:]
    fields: dict[str, list[str]] = {}
    current = None
    for token in body.split(","):
        token = token.strip()
        if not token:
            continue
        if "=" in token:
            key, _, first = token.partition("=")
            current = key.strip().upper()
            fields[current] = [first.strip()] if first.strip() else []
        elif current is not None:
            fields[current].append(token)
        else:
            raise MalformedHeader(f"unexpected header token {token!r}", line_number)

    def require_int(key):
        if key not in fields or len(fields[key]) != 1:
            raise MalformedHeader(f"header field {key} is missing", line_number)
        try:
            return int(fields[key][0])
        except ValueError:
            raise MalformedHeader(
                f"header field {key}={fields[key][0]!r} is not an integer", line_number) from None

    norb = require_int("NORB")
    nelec = require_int("NELEC")
    ms2 = require_int("MS2") if "MS2" in fields else 0
    # ORBSYM, ISYM and any other namelist fields are accepted and ignored.
    return {"norb": norb, "nelec": nelec, "ms2": ms2}


def parse_fcidump(text: str) -> IntegralTable:
    """Parse FCIDUMP-format text into an :class:`IntegralTable`.

    The namelist header must declare NORB and NELEC; MS2 defaults to 0 and
    ORBSYM/ISYM are ignored.  Data lines are ``value i j k l`` with 1-based
    indices, Fortran ``D`` exponents allowed.  ``i=j=k=l=0`` sets the core
    energy, ``k=l=0`` sets one-body elements, four nonzero indices set
    two-body elements.  A repeated entry overwrites the previous value and
    emits a :class:`FcidumpWarning`.
    """
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        raise EmptyFile("integral stream has no content")

    header_lines: list[str] = []
    body_start = None
    for idx, line in enumerate(lines):
        stripped = line.strip()
        if not header_lines:
            if not stripped:
                continue
            if not stripped.upper().startswith("&FCI"):
                raise MalformedHeader("expected header to start with &FCI", idx + 1)
        upper = stripped.upper()
        end = len(upper)
        terminated = False
        if "&END" in upper:
            end = upper.index("&END")
            terminated = True
        elif "/" in stripped:
            end = stripped.index("/")
            terminated = True
        header_lines.append(stripped[:end])
        if terminated:
            body_start = idx + 1
            header_line_number = idx + 1
            break
    if body_start is None:
        raise MalformedHeader("header is never terminated by &END or /", len(lines))

    meta = _parse_header(" ".join(header_lines), header_line_number)
    norb, nelec, ms2 = meta["norb"], meta["nelec"], meta["ms2"]
    try:
        probe = IntegralTable(norb, nelec, ms2)
    except ValueError as exc:
        raise MalformedHeader(str(exc), header_line_number) from None
    del probe

    core = 0.0
    core_seen = False
    h = np.zeros((norb, norb))
    h_seen: set[tuple[int, int]] = set()
    g: dict[tuple[int, int, int, int], float] = {}

    for offset, line in enumerate(lines[body_start:]):
        line_number = body_start + offset + 1
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise MalformedRecord(
                f"expected 'value i j k l', got {len(tokens)} tokens", line_number)
        try:
            value = float(tokens[0].replace("D", "E").replace("d", "e"))
        except ValueError:
            raise MalformedRecord(f"unreadable value {tokens[0]!r}", line_number) from None
        try:
            i, j, k, l = (int(t) for t in tokens[1:])
        except ValueError:
            raise MalformedRecord(f"unreadable index in {tokens[1:]!r}", line_number) from None
        for index in (i, j, k, l):
            if index < 0 or index > norb:
                raise IndexOutOfRange(f"line {line_number}: index {index} outside [0, {norb}]")

        if i == j == k == l == 0:
            if core_seen:
                warnings.warn(f"line {line_number}: core energy redefined", FcidumpWarning,
                              stacklevel=2)
            core = value
            core_seen = True
        elif k == 0 and l == 0 and i > 0 and j > 0:
            key = (max(i, j) - 1, min(i, j) - 1)
            if key in h_seen:
                warnings.warn(f"line {line_number}: one-body entry {key} redefined",
                              FcidumpWarning, stacklevel=2)
            h_seen.add(key)
            h[key[0], key[1]] = value
            h[key[1], key[0]] = value
        elif j == 0 and k == 0 and l == 0 and i > 0:
            # Orbital-energy records some writers emit; harmless, not stored.
            warnings.warn(f"line {line_number}: ignoring orbital-energy record for orbital {i}",
                          FcidumpWarning, stacklevel=2)
        elif i > 0 and j > 0 and k > 0 and l > 0:
            canon = canonical_index(i - 1, j - 1, k - 1, l - 1)
            if canon in g:
                warnings.warn(f"line {line_number}: two-body entry {canon} redefined",
                              FcidumpWarning, stacklevel=2)
            g[canon] = value
        else:
            raise MalformedRecord(
                f"index pattern ({i}, {j}, {k}, {l}) is neither core, one-body nor two-body",
                line_number)

    g = {key: v for key, v in g.items() if v != 0.0}
    return IntegralTable(norb, nelec, ms2, core_energy=core, one_body=h, two_body=g)


def read_fcidump(path) -> IntegralTable:
    with open(path, encoding="utf-8") as handle:
        return parse_fcidump(handle.read())


def write_fcidump(table: IntegralTable) -> str:
    """Render a table in the text format; :func:`parse_fcidump` inverts it exactly.

    Two-body entries come first (canonical indices only, sorted), then the
    lower-triangular one-body entries, then the core-energy line.  Zeros are
    skipped except for the core line, which is always present.
    """
    out = [f"&FCI NORB={table.n_orbitals},NELEC={table.n_electrons},MS2={table.ms2},",
           "&END"]

    def record(value, i, j, k, l):
        out.append(f"{value:24.16E}{i:4d}{j:4d}{k:4d}{l:4d}")

    for (p, q, r, s), value in sorted(table.two_body_entries().items()):
        record(value, p + 1, q + 1, r + 1, s + 1)
    h = table.one_body
    for p in range(table.n_orbitals):
        for q in range(p + 1):
            if h[p, q] != 0.0:
                record(h[p, q], p + 1, q + 1, 0, 0)
    record(table.core_energy, 0, 0, 0, 0)
    return "\n".join(out) + "\n"
