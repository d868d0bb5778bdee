"""Protograph base matrices for GLDPC and spatially coupled GLDPC ensembles.

A protograph row carries its *parent* constraint code and an explicit map
from its edge slots to columns of the parent's parity-check matrix.  Rows
with fewer edges than the parent length are shortened codes; the effective
code of a row is the parent restricted to the mapped columns, in slot order.

Slots of a row are enumerated by variable column ascending and, for
multi-edges, by copy index.  Edge types are the (row, slot) pairs in
row-major order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .gf2_codes import ConstraintCode, hamming_code, shorten


def _int_matrix(b, name="base") -> np.ndarray:
    arr = np.atleast_2d(np.asarray(b))
    if arr.dtype.kind not in "iu":
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError(f"{name} matrix must be integer")
        arr = arr.astype(np.int64)
    arr = arr.astype(np.int64)
    if (arr < 0).any():
        raise ValueError(f"{name} matrix has negative entries")
    arr.setflags(write=False)
    return arr


def row_slots(row: np.ndarray) -> list[tuple[int, int]]:
    """(variable column, copy) for each edge slot of a base-matrix row."""
    return [(j, c) for j in range(len(row)) for c in range(int(row[j]))]


@dataclass(frozen=True, eq=False)
class GldpcProtograph:
    base: np.ndarray
    codes: tuple[ConstraintCode, ...]
    edge_column_map: tuple[tuple[int, ...], ...]
    punctured: np.ndarray = None
    # optional (time, row-within-block) labels for coupled protographs
    row_labels: tuple = None
    col_labels: tuple = None

    def __post_init__(self):
        base = _int_matrix(self.base)
        object.__setattr__(self, "base", base)
        n_c, n_v = base.shape
        if len(self.codes) != n_c or len(self.edge_column_map) != n_c:
            raise ValueError("need one code and one column map per constraint row")
        cmap = tuple(tuple(int(c) for c in m) for m in self.edge_column_map)
        object.__setattr__(self, "edge_column_map", cmap)
        object.__setattr__(self, "codes", tuple(self.codes))
        for i, (code, cols) in enumerate(zip(self.codes, cmap)):
            deg = int(base[i].sum())
            if deg == 0:
                raise ValueError(f"constraint row {i} has no edges")
            if len(cols) != deg:
                raise ValueError(
                    f"row {i}: {deg} edge slots but {len(cols)} mapped columns")
            if len(set(cols)) != len(cols):
                raise ValueError(f"row {i}: mapped columns are not distinct")
            if min(cols) < 0 or max(cols) >= code.n_c_len:
                raise ValueError(f"row {i}: mapped column outside 0..{code.n_c_len - 1}")
        punct = (np.zeros(n_v, dtype=bool) if self.punctured is None
                 else np.asarray(self.punctured, dtype=bool).copy())
        if punct.shape != (n_v,):
            raise ValueError("punctured flags must have one entry per variable column")
        punct.setflags(write=False)
        object.__setattr__(self, "punctured", punct)

    @property
    def n_c(self) -> int:
        return self.base.shape[0]

    @property
    def n_v(self) -> int:
        return self.base.shape[1]

    @cached_property
    def effective_codes(self) -> tuple[ConstraintCode, ...]:
        """Per row, the parent code restricted to its mapped columns."""
        return tuple(self._shortened[i][0] for i in range(self.n_c))

    @cached_property
    def _shortened(self):
        return [shorten(code, cols) for code, cols in zip(self.codes, self.edge_column_map)]

    @cached_property
    def rank_deficits(self) -> np.ndarray:
        return np.array([d for _, d in self._shortened], dtype=np.int64)

    @property
    def delta(self) -> int:
        """Total rank deficit of the shortened rows."""
        return int(self.rank_deficits.sum())

    @cached_property
    def slots(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        return tuple(tuple(row_slots(self.base[i])) for i in range(self.n_c))

    @cached_property
    def edges(self) -> np.ndarray:
        """Edge table with columns (row, slot, variable), in row-major order."""
        out = [(i, b, j) for i in range(self.n_c) for b, (j, _) in enumerate(self.slots[i])]
        arr = np.array(out, dtype=np.int64).reshape(-1, 3)
        arr.setflags(write=False)
        return arr

    @cached_property
    def row_edge_offset(self) -> np.ndarray:
        deg = self.base.sum(axis=1)
        return np.concatenate([[0], np.cumsum(deg)])

    @cached_property
    def var_edges(self) -> tuple[tuple[int, ...], ...]:
        """Edge ids attached to each variable column."""
        lists = [[] for _ in range(self.n_v)]
        for e, (_, _, j) in enumerate(self.edges):
            lists[j].append(e)
        return tuple(tuple(x) for x in lists)

    @property
    def check_degrees(self) -> np.ndarray:
        return self.base.sum(axis=1)

    @property
    def var_degrees(self) -> np.ndarray:
        return self.base.sum(axis=0)

    def design_rate(self) -> Fraction:
        return design_rate(self)

    def with_punctured(self, punctured) -> "GldpcProtograph":
        return GldpcProtograph(self.base, self.codes, self.edge_column_map, punctured,
                               self.row_labels, self.col_labels)


def design_rate(p: GldpcProtograph) -> Fraction:
    """Design rate from the ranks of the (possibly shortened) row codes."""
    checks = sum(c.m_rank for c in p.effective_codes)
    n_tx = p.n_v - int(p.punctured.sum())
    if n_tx <= 0:
        raise ValueError("no transmitted variable nodes")
    return Fraction(p.n_v - checks, n_tx)


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Edge-spread components of a block base matrix plus code assignment.

    ``column_maps[r]`` maps the slots of row ``r`` of the *block* base matrix
    (sum of the components) to columns of ``codes[r]``.  Copies of a
    multi-edge are handed to components in order: component 0 takes the
    first ``B_0[r, j]`` copies, component 1 the next ones, and so on.
    """

    components: tuple[np.ndarray, ...]
    codes: tuple[ConstraintCode, ...]
    column_maps: tuple[tuple[int, ...], ...]
    punctured: np.ndarray = None
    name: str = ""
    mode: str = "unterminated"
    length: int | None = None

    def __post_init__(self):
        comps = tuple(_int_matrix(c, "component") for c in self.components)
        if not comps:
            raise ValueError("need at least one component matrix")
        shape = comps[0].shape
        if any(c.shape != shape for c in comps):
            raise ValueError("component matrices must share one shape")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "codes", tuple(self.codes))
        object.__setattr__(self, "column_maps", tuple(tuple(int(c) for c in m) for m in self.column_maps))
        b_v = shape[1]
        punct = (np.zeros(b_v, dtype=bool) if self.punctured is None
                 else np.asarray(self.punctured, dtype=bool).copy())
        punct.setflags(write=False)
        object.__setattr__(self, "punctured", punct)
        if self.mode not in ("unterminated", "terminated", "tailbiting"):
            raise ValueError(f"unknown coupling mode {self.mode!r}")
        # validates codes and maps against the block matrix
        self.block()

    @property
    def w(self) -> int:
        return len(self.components) - 1

    @property
    def b_c(self) -> int:
        return self.components[0].shape[0]

    @property
    def b_v(self) -> int:
        return self.components[0].shape[1]

    @cached_property
    def base(self) -> np.ndarray:
        return sum(self.components[1:], self.components[0].copy())

    def block(self) -> GldpcProtograph:
        """The uncoupled block protograph ``B = B_0 + ... + B_w``."""
        return GldpcProtograph(self.base, self.codes, self.column_maps, self.punctured)

    def _slot_columns(self, r: int) -> dict[tuple[int, int, int], int]:
        # (component k, variable j, copy within component) -> parent column
        out = {}
        block_slots = row_slots(self.base[r])
        cols = self.column_maps[r]
        used = {}
        for s, (j, _) in enumerate(block_slots):
            # find component for this copy
            n = used.get(j, 0)
            used[j] = n + 1
            acc = 0
            for k, comp in enumerate(self.components):
                if n < acc + comp[r, j]:
                    out[(k, j, n - acc)] = cols[s]
                    break
                acc += comp[r, j]
        return out

    def _assemble(self, rows: int, cols: int, entries) -> GldpcProtograph:
        """``entries(t, t_var)`` lists the components k landing at block (t, t_var)."""
        b_c, b_v = self.b_c, self.b_v
        maps = [self._slot_columns(r) for r in range(b_c)]
        base = np.zeros((rows * b_c, cols * b_v), dtype=np.int64)
        kept_rows, codes, cmaps, labels = [], [], [], []
        for t in range(rows):
            for r in range(b_c):
                colmap = []
                for tv in range(cols):
                    for k in entries(t, tv):
                        comp = self.components[k]
                        for j in range(b_v):
                            for c in range(int(comp[r, j])):
                                colmap.append((tv * b_v + j, maps[r][(k, j, c)]))
                                base[t * b_c + r, tv * b_v + j] += 1
                if not colmap:
                    continue
                # slot order is variable column ascending; stable in insertion order
                colmap.sort(key=lambda x: x[0])
                kept_rows.append(t * b_c + r)
                codes.append(self.codes[r])
                cmaps.append(tuple(c for _, c in colmap))
                labels.append((t, r))
        punct = np.tile(self.punctured, cols)
        col_labels = tuple((t, j) for t in range(cols) for j in range(b_v))
        return GldpcProtograph(base[kept_rows], codes, cmaps, punct, tuple(labels), col_labels)

    def terminate(self, L: int) -> GldpcProtograph:
        """Terminated base matrix with ``(L+w) b_c`` rows and ``L b_v`` columns.

        End rows have lower degree and carry shortened codes; rows left with
        no edges at all are dropped.
        """
        if L < 1:
            raise ValueError("coupling length L must be >= 1")
        w = self.w

        def entries(t, tv):
            k = t - tv
            return [k] if 0 <= k <= w else []

        return self._assemble(L + w, L, entries)

    def tailbite(self, lam: int) -> GldpcProtograph:
        """Tail-biting base matrix of size ``lam b_c x lam b_v``."""
        if lam < max(self.w, 1):
            raise ValueError(f"tail-biting length must be >= w = {self.w}")
        w = self.w

        def entries(t, tv):
            return [k for k in range(w + 1) if (t - tv - k) % lam == 0]

        return self._assemble(lam, lam, entries)

    def unterminated_rate(self) -> Fraction:
        checks = sum(c.m_rank for c in self.codes)
        n_tx = self.b_v - int(self.punctured.sum())
        return Fraction(self.b_v - checks, n_tx)


def edge_spread(B, components: Sequence, codes: Sequence[ConstraintCode],
                column_maps: Sequence[Sequence[int]], punctured=None,
                name: str = "") -> CouplingSpec:
    """Validate that ``components`` sum to ``B`` and build a CouplingSpec."""
    B = _int_matrix(B)
    comps = [_int_matrix(c, "component") for c in components]
    if any(c.shape != B.shape for c in comps):
        raise ValueError("component shapes differ from the base matrix")
    total = sum(comps[1:], comps[0].copy())
    if not np.array_equal(total, B):
        raise ValueError("components do not sum to the base matrix")
    return CouplingSpec(tuple(comps), tuple(codes), tuple(tuple(m) for m in column_maps),
                        punctured, name)


def terminate(spec: CouplingSpec, L: int):
    """Terminated protograph, its rate increase Δ, and its rate."""
    p = spec.terminate(L)
    return p, p.delta, design_rate(p)


def tailbite(spec: CouplingSpec, lam: int) -> GldpcProtograph:
    return spec.tailbite(lam)


# ---------------------------------------------------------------- built-ins

def _shortened_hamming15() -> ConstraintCode:
    h15 = hamming_code(4)
    return ConstraintCode(h15.parity_matrix[:, :14], name="hamming14")


def _a_family(code: ConstraintCode, name: str) -> CouplingSpec:
    n = code.n_c_len
    head = (n - 1) // 2
    ones = np.ones((2, n), dtype=np.int64)
    b0 = np.zeros_like(ones)
    b0[0, n - head:] = 1
    b0[1, :head] = 1
    b1 = ones - b0
    # lower row rotated so that its early-time variables land on the same
    # columns as the upper row's
    rot = n - head
    maps = [tuple(range(n)), tuple((j + rot) % n for j in range(n))]
    return edge_spread(ones, [b0, b1], [code, code], maps, name=name)


def _c_family(code: ConstraintCode, name: str) -> CouplingSpec:
    n = code.n_c_len
    w = (n - 1) // 2
    b0 = np.zeros((2, n), dtype=np.int64)
    b0[:, 0] = 1
    b0[0, 1:1 + w] = 1
    b0[1, 1 + w:] = 1
    comps = [b0]
    for i in range(1, w + 1):
        bi = np.zeros_like(b0)
        bi[0, w + i] = 1
        bi[1, i] = 1
        comps.append(bi)
    ones = np.ones((2, n), dtype=np.int64)
    maps = [tuple(range(n)), tuple(range(n))]
    return edge_spread(ones, comps, [code, code], maps, name=name)


def _b14(punctured: bool) -> CouplingSpec:
    code = _shortened_hamming15()
    B = np.full((1, 7), 2)
    b0 = np.ones((1, 7), dtype=np.int64)
    punct = np.zeros(7, dtype=bool)
    if punctured:
        punct[0] = True
    return edge_spread(B, [b0, b0.copy()], [code], [tuple(range(14))], punct,
                       name="B14P" if punctured else "B14")


BUILTINS = ("A7", "A15", "B14", "B14P", "C7", "C15")


def builtin(name: str) -> CouplingSpec:
    """Named ensembles: A7/A15 (w=1), B14/B14P (double edges), C7/C15 (braided)."""
    key = name.upper()
    if key == "A7":
        return _a_family(hamming_code(3), "A7")
    if key == "A15":
        return _a_family(hamming_code(4), "A15")
    if key == "C7":
        return _c_family(hamming_code(3), "C7")
    if key == "C15":
        return _c_family(hamming_code(4), "C15")
    if key == "B14":
        return _b14(False)
    if key == "B14P":
        return _b14(True)
    raise KeyError(f"unknown built-in ensemble {name!r}; choose from {BUILTINS}")


def block_hamming7() -> GldpcProtograph:
    """The (2,7)-regular Hamming block protograph underlying A7 and C7."""
    return builtin("A7").block()


# ------------------------------------------------------------- type census

@dataclass(frozen=True)
class TypeCensus:
    """Node types of a protograph in edge-index form.

    A type vector over the ``|E|`` edge types is stored as the tuple of its
    nonzero positions.  Every protograph node is its own type, so each type
    count is 1 per lifted copy.
    """

    n_edges: int
    variable_types: tuple[tuple[int, ...], ...]
    constraint_types: tuple[tuple[int, ...], ...]
    variable_counts: tuple[int, ...]
    constraint_counts: tuple[int, ...]

    @property
    def n_extended_types(self) -> int:
        return sum(1 << len(t) for t in self.constraint_types)

    def extended_types(self):
        """Yield (parent constraint type index, residual edge tuple)."""
        for i, t in enumerate(self.constraint_types):
            for mask in range(1 << len(t)):
                yield i, tuple(e for b, e in enumerate(t) if (mask >> b) & 1)

    def vector(self, edge_ids) -> np.ndarray:
        v = np.zeros(self.n_edges, dtype=np.uint8)
        v[list(edge_ids)] = 1
        return v


def type_census(p: GldpcProtograph) -> TypeCensus:
    off = p.row_edge_offset
    ctypes = tuple(tuple(range(off[i], off[i + 1])) for i in range(p.n_c))
    return TypeCensus(len(p.edges), p.var_edges, ctypes,
                      (1,) * p.n_v, (1,) * p.n_c)
