"""Binary linear algebra and erasure analysis of short constraint codes.

Erasure patterns are integer bitmasks over the code's columns: bit ``i``
set means column ``i`` (0-based) is erased.  Tables are flat numpy arrays
indexed by mask so that the peeling loop can look them up in O(1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

FULL_ML = "full-ml"
BITWISE_MAP = "bitwise-map"
POLICIES = (FULL_ML, BITWISE_MAP)

MAX_TABLE_LENGTH = 24
MAX_WEF_DIMENSION = 16


def _as_bits(matrix) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(matrix, dtype=np.int64))
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("matrix entries must be 0 or 1")
    return arr.astype(np.uint8)


def _row_masks(matrix: np.ndarray) -> list[int]:
    weights = 1 << np.arange(matrix.shape[1], dtype=object)
    return [int(np.dot(row.astype(object), weights)) for row in matrix]


def _rank_of_masks(rows: Iterable[int]) -> int:
    # xor-basis keyed by leading bit
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top not in basis:
                basis[top] = r
                break
            r ^= basis[top]
    return len(basis)


def gf2_rank(matrix) -> int:
    """Row rank of a binary matrix over GF(2).

    >>> gf2_rank([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    2
    """
    arr = _as_bits(matrix)
    if arr.size == 0:
        raise ValueError("matrix must be non-empty")
    return _rank_of_masks(_row_masks(arr))


def gf2_nullspace(matrix) -> np.ndarray:
    """Basis of the right null space of ``matrix`` over GF(2), one vector per row."""
    arr = _as_bits(matrix).copy()
    m, n = arr.shape
    pivots = []
    row = 0
    for col in range(n):
        hits = np.nonzero(arr[row:, col])[0] if row < m else []
        if len(hits) == 0:
            continue
        p = row + hits[0]
        if p != row:
            arr[[row, p]] = arr[[p, row]]
        others = np.nonzero(arr[:, col])[0]
        for r in others:
            if r != row:
                arr[r] ^= arr[row]
        pivots.append(col)
        row += 1
        if row == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for r, pc in enumerate(pivots):
            basis[k, pc] = arr[r, f]
    return basis


def _mask_of(indices: Iterable[int], n: int) -> int:
    mask = 0
    for i in indices:
        if not 0 <= i < n:
            raise IndexError(f"column index {i} out of range for length {n}")
        mask |= 1 << i
    return mask


@dataclass(frozen=True, eq=False)
class ConstraintCode:
    """A binary linear block code given by a parity-check matrix.

    Columns are 0-based internally.  ``name`` is carried along for
    serialization only.
    """

    parity_matrix: np.ndarray
    name: str = ""
    _cols: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        h = _as_bits(self.parity_matrix)
        if h.size == 0 or h.shape[1] == 0:
            raise ValueError("parity matrix must be non-empty")
        h.setflags(write=False)
        object.__setattr__(self, "parity_matrix", h)
        # column j as an integer over the rows
        cols = tuple(int(sum(int(h[r, j]) << r for r in range(h.shape[0])))
                     for j in range(h.shape[1]))
        object.__setattr__(self, "_cols", cols)

    @property
    def n_c_len(self) -> int:
        return self.parity_matrix.shape[1]

    @cached_property
    def m_rank(self) -> int:
        return gf2_rank(self.parity_matrix)

    @property
    def dimension(self) -> int:
        return self.n_c_len - self.m_rank

    def __eq__(self, other):
        if not isinstance(other, ConstraintCode):
            return NotImplemented
        return (self.parity_matrix.shape == other.parity_matrix.shape
                and np.array_equal(self.parity_matrix, other.parity_matrix))

    def __hash__(self):
        return hash((self.parity_matrix.shape, self.parity_matrix.tobytes()))

    def pattern_mask(self, pattern: Iterable[int]) -> int:
        return _mask_of(pattern, self.n_c_len)

    def column_rank(self, mask: int) -> int:
        return _rank_of_masks(self._cols[i] for i in _bits(mask))

    @cached_property
    def _codewords(self) -> np.ndarray:
        if self.dimension > MAX_WEF_DIMENSION:
            raise ValueError(
                f"code dimension {self.dimension} exceeds {MAX_WEF_DIMENSION}")
        basis = gf2_nullspace(self.parity_matrix)
        k = basis.shape[0]
        coeffs = (np.arange(1 << k)[:, None] >> np.arange(k)) & 1
        words = (coeffs @ basis.astype(np.int64)) % 2
        words = words.astype(np.uint8)
        words.setflags(write=False)
        return words


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def spc_code(length: int) -> ConstraintCode:
    """Single parity-check code of the given length."""
    return ConstraintCode(np.ones((1, length), dtype=np.uint8), name=f"spc{length}")


def hamming_code(r: int) -> ConstraintCode:
    """Hamming code of length ``2**r - 1`` with systematic-first column order.

    For ``r = 3`` this is the matrix with identity in the first three columns
    followed by the weight-3 column and the weight-2 columns, the ordering used
    by the built-in ensembles.
    """
    if r == 3:
        h = [[1, 0, 0, 1, 1, 1, 0],
             [0, 1, 0, 1, 1, 0, 1],
             [0, 0, 1, 1, 0, 1, 1]]
        return ConstraintCode(np.array(h), name="hamming7")
    n = (1 << r) - 1
    cols = [1 << i for i in range(r)]
    rest = sorted((v for v in range(1, n + 1) if v & (v - 1)),
                  key=lambda v: (-bin(v).count("1"), v))
    cols += rest
    h = np.array([[(c >> i) & 1 for c in cols] for i in range(r)], dtype=np.uint8)
    return ConstraintCode(h, name=f"hamming{n}")


def erasure_fully_decodable(code: ConstraintCode, pattern: Iterable[int]) -> bool:
    """True iff the erased columns are linearly independent (unique ML solution)."""
    mask = code.pattern_mask(pattern)
    return code.column_rank(mask) == bin(mask).count("1")


def extrinsic_bit_recoverable(code: ConstraintCode, erased: Iterable[int],
                              target: int) -> bool:
    """Bit-MAP erasure criterion for one erased position.

    The target bit is determined by the known bits iff its column is not in
    the span of the other erased columns, which is the same as the unit vector
    at ``target`` lying in the row space of the erased submatrix.
    """
    mask = code.pattern_mask(erased)
    if not (mask >> target) & 1:
        raise ValueError(f"target {target} is not erased")
    return _recoverable(code, mask, target)


def _recoverable(code: ConstraintCode, mask: int, target: int) -> bool:
    rest = mask & ~(1 << target)
    return code.column_rank(mask) > code.column_rank(rest)


@dataclass(frozen=True, eq=False)
class DecodabilityTable:
    """Per-pattern decodability of a constraint code.

    ``full_decodable[mask]`` says whether every erased bit in the pattern is
    determined.  ``bit_recoverable[mask]`` is the mask of erased positions the
    bit-MAP decoder recovers.  ``decodable`` is the table selected by
    ``policy`` and is what the peeling decoder keys into.
    """

    policy: str
    n: int
    full_decodable: np.ndarray
    bit_recoverable: np.ndarray

    @property
    def decodable(self) -> np.ndarray:
        if self.policy == FULL_ML:
            return self.full_decodable
        return self.bit_recoverable == np.arange(1 << self.n)

    def unrecovered(self, mask: int) -> int:
        """Erased positions of ``mask`` that stay erased after one decoding."""
        if self.policy == FULL_ML:
            return 0 if self.full_decodable[mask] else mask
        return mask & ~int(self.bit_recoverable[mask])


def build_decodability_table(code: ConstraintCode, policy: str = FULL_ML) -> DecodabilityTable:
    """Enumerate all ``2**n`` erasure patterns of ``code``.

    Ranks are computed incrementally: the rank of a pattern is the rank of the
    pattern minus its top bit, plus one if the top column is independent.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    n = code.n_c_len
    if n > MAX_TABLE_LENGTH:
        raise ValueError(f"code length {n} exceeds table limit {MAX_TABLE_LENGTH}")
    size = 1 << n
    # xor-basis per mask, sorted by decreasing leading bit, extended from the
    # basis of the mask without its top bit
    rank = np.zeros(size, dtype=np.int8)
    bases: list[tuple[int, ...]] = [()] * size
    cols = code._cols
    for mask in range(1, size):
        top = mask.bit_length() - 1
        parent = mask ^ (1 << top)
        basis = bases[parent]
        v = cols[top]
        for b in basis:
            v = min(v, v ^ b)
        if v:
            bases[mask] = tuple(sorted(basis + (v,), reverse=True))
            rank[mask] = rank[parent] + 1
        else:
            bases[mask] = basis
            rank[mask] = rank[parent]
    popcount = np.array([bin(m).count("1") for m in range(size)], dtype=np.int8)
    full = rank == popcount
    recov = np.zeros(size, dtype=np.int64)
    for b in range(n):
        bit = 1 << b
        masks = np.arange(size)
        has = (masks & bit) != 0
        sel = masks[has]
        ok = rank[sel] > rank[sel ^ bit]
        recov[sel[ok]] |= bit
    full.setflags(write=False)
    recov.setflags(write=False)
    return DecodabilityTable(policy, n, full, recov)


def shorten(code: ConstraintCode, kept_columns: Sequence[int]) -> tuple[ConstraintCode, int]:
    """Restrict ``code`` to ``kept_columns`` (0-based), removing the others.

    Returns the shortened code and its rank deficit relative to ``code``.
    """
    kept = list(kept_columns)
    if not kept:
        raise ValueError("kept column set must be non-empty")
    if len(set(kept)) != len(kept):
        raise ValueError("kept columns must be distinct")
    for c in kept:
        if not 0 <= c < code.n_c_len:
            raise IndexError(f"column {c} out of range")
    h = code.parity_matrix[:, kept]
    new = ConstraintCode(h, name=f"{code.name}[{','.join(map(str, kept))}]" if code.name else "")
    return new, code.m_rank - new.m_rank


def multivariate_wef(code: ConstraintCode) -> np.ndarray:
    """All codewords of ``code`` as rows of a 0/1 array.

    This is the multivariate weight enumerator in implicit form: the
    polynomial is the sum over rows of the monomials ``prod x_i**c_i``.
    """
    return code._codewords
