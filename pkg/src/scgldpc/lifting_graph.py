"""Copy-and-permute lifting of a protograph into an explicit Tanner graph.

Node numbering is type-major: variable copy ``k`` of protograph column ``j``
is ``j*M + k`` and constraint copy ``m`` of row ``i`` is ``i*M + m``.
Edges are stored check-major in flat CSR arrays, so the edge of slot ``b``
of constraint node ``c`` has id ``chk_ptr[c] + b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .protograph import GldpcProtograph


@dataclass(frozen=True, eq=False)
class LiftedGraph:
    proto: GldpcProtograph
    M: int
    chk_ptr: np.ndarray  # (n_checks + 1,)
    chk_var: np.ndarray  # (E,) variable at each check slot
    chk_col: np.ndarray  # (E,) parent-code column of each slot
    edge_type: np.ndarray  # (E,) protograph edge id
    var_ptr: np.ndarray  # (n_vars + 1,)
    var_edge: np.ndarray  # (sum of var degrees,) edge ids at each variable
    chk_type: np.ndarray
    var_type: np.ndarray
    punctured: np.ndarray

    @property
    def n_vars(self) -> int:
        return len(self.var_type)

    @property
    def n_checks(self) -> int:
        return len(self.chk_type)

    @property
    def n_edges(self) -> int:
        return len(self.chk_var)

    @property
    def n_transmitted(self) -> int:
        return int((~self.punctured).sum())

    def edge_check(self) -> np.ndarray:
        """Constraint node of every edge."""
        return np.repeat(np.arange(self.n_checks), np.diff(self.chk_ptr))

    def code_of(self, c: int):
        return self.proto.effective_codes[self.chk_type[c]]


def _var_csr(chk_var: np.ndarray, n_vars: int):
    order = np.argsort(chk_var, kind="stable")
    counts = np.bincount(chk_var, minlength=n_vars)
    ptr = np.concatenate([[0], np.cumsum(counts)])
    return ptr, order


def lift(p: GldpcProtograph, M: int, seed=0) -> LiftedGraph:
    """Random M-fold lifting with one uniform permutation per protograph edge.

    Parallel protograph edges (base entries above one) get permutations that
    are resampled until they disagree at every copy, so the lifted graph has
    no parallel edges.
    """
    if M < 1:
        raise ValueError("lifting factor M must be >= 1")
    if int(p.base.max()) > M:
        raise ValueError("a base-matrix entry exceeds M; non-overlapping lifting impossible")
    rng = np.random.default_rng(seed)
    edges = p.edges
    n_e = len(edges)
    perms = np.empty((n_e, M), dtype=np.int64)
    for e in range(n_e):
        i, _, j = edges[e]
        # earlier slots of the same row landing on the same variable
        taken = [f for f in range(p.row_edge_offset[i], e) if edges[f, 2] == j]
        while True:
            pi = rng.permutation(M)
            if all(not np.any(pi == perms[f]) for f in taken):
                break
        perms[e] = pi
    deg = p.check_degrees
    off = p.row_edge_offset
    n_checks = p.n_c * M
    chk_deg = np.repeat(deg, M)
    chk_ptr = np.concatenate([[0], np.cumsum(chk_deg)])
    chk_var = np.empty(n_e * M, dtype=np.int64)
    edge_type = np.empty(n_e * M, dtype=np.int64)
    chk_col = np.empty(n_e * M, dtype=np.int64)
    for i in range(p.n_c):
        d = int(deg[i])
        base = int(chk_ptr[i * M])
        # rows of a (M, d) block: copy m, slot b
        block = np.empty((M, d), dtype=np.int64)
        for b in range(d):
            e = off[i] + b
            block[:, b] = edges[e, 2] * M + perms[e]
        chk_var[base:base + M * d] = block.ravel()
        edge_type[base:base + M * d] = np.tile(np.arange(off[i], off[i] + d), M)
        chk_col[base:base + M * d] = np.tile(p.edge_column_map[i], M)
    n_vars = p.n_v * M
    var_ptr, var_edge = _var_csr(chk_var, n_vars)
    return LiftedGraph(
        proto=p, M=M, chk_ptr=chk_ptr, chk_var=chk_var, chk_col=chk_col,
        edge_type=edge_type, var_ptr=var_ptr, var_edge=var_edge,
        chk_type=np.repeat(np.arange(p.n_c), M), var_type=np.repeat(np.arange(p.n_v), M),
        punctured=np.repeat(p.punctured, M))


@dataclass
class VerifyReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        return "clean" if self.ok else "\n".join(self.violations)


def verify(g: LiftedGraph) -> VerifyReport:
    """Check node counts, degrees, parallel edges and slot labels."""
    rep = VerifyReport()
    p, M = g.proto, g.M
    bad = rep.violations
    if g.n_vars != p.n_v * M or g.n_checks != p.n_c * M:
        bad.append(f"node counts {g.n_vars}/{g.n_checks} != {p.n_v * M}/{p.n_c * M}")
    for name, types, n_types in (("variable", g.var_type, p.n_v), ("constraint", g.chk_type, p.n_c)):
        counts = np.bincount(types, minlength=n_types)
        if np.any(counts != M):
            bad.append(f"{name} types without exactly M copies: {np.nonzero(counts != M)[0].tolist()}")
    chk_deg = np.diff(g.chk_ptr)
    want = p.check_degrees[g.chk_type]
    for c in np.nonzero(chk_deg != want)[0][:10]:
        bad.append(f"constraint {c}: degree {chk_deg[c]} != {want[c]}")
    var_deg = np.bincount(g.chk_var, minlength=g.n_vars)
    want_v = p.var_degrees[g.var_type]
    for v in np.nonzero(var_deg != want_v)[0][:10]:
        bad.append(f"variable {v}: degree {var_deg[v]} != {want_v[v]}")
    ec = g.edge_check()
    pairs = ec * g.n_vars + g.chk_var
    uniq, counts = np.unique(pairs, return_counts=True)
    for key in uniq[counts > 1][:10]:
        bad.append(f"parallel edge between constraint {key // g.n_vars} and variable {key % g.n_vars}")
    # edge types must agree with both endpoint types
    et = g.edge_type
    edges = p.edges
    wrong = (edges[et, 0] != g.chk_type[ec]) | (edges[et, 2] != g.var_type[g.chk_var])
    if wrong.any():
        bad.append(f"{int(wrong.sum())} edges whose type disagrees with their endpoints")
    if not wrong.any() and not np.any(chk_deg != want):
        slot = np.arange(g.n_edges) - g.chk_ptr[ec]
        expect_type = p.row_edge_offset[g.chk_type[ec]] + slot
        flat_cols = np.concatenate([np.asarray(m) for m in p.edge_column_map])
        off_slot = (et != expect_type) | (g.chk_col != flat_cols[expect_type])
        for c in np.unique(ec[off_slot])[:10]:
            bad.append(f"constraint {c}: slot labels differ from its protograph row")
    if len(g.var_edge) != g.n_edges or not np.array_equal(np.sort(g.var_edge), np.arange(g.n_edges)):
        bad.append("variable adjacency is not a permutation of the edge list")
    else:
        vv = np.repeat(np.arange(g.n_vars), np.diff(g.var_ptr))
        if not np.array_equal(g.chk_var[g.var_edge], vv):
            bad.append("variable adjacency disagrees with constraint adjacency")
    return rep


def dump(g: LiftedGraph, fh: TextIO) -> None:
    """Text adjacency list with type annotations, one node per line."""
    codes = g.proto.effective_codes
    fh.write(f"# lifted graph M={g.M} vars={g.n_vars} checks={g.n_checks} edges={g.n_edges}\n")
    for v in range(g.n_vars):
        es = g.var_edge[g.var_ptr[v]:g.var_ptr[v + 1]]
        chks = ",".join(str(c) for c in np.searchsorted(g.chk_ptr, es, side="right") - 1)
        fh.write(f"v {v} type={g.var_type[v]} punct={int(g.punctured[v])} checks={chks}\n")
    for c in range(g.n_checks):
        a, b = g.chk_ptr[c], g.chk_ptr[c + 1]
        t = g.chk_type[c]
        fh.write(f"c {c} type={t} code={codes[t].name or 'anon'} "
                 f"vars={','.join(map(str, g.chk_var[a:b]))} "
                 f"cols={','.join(map(str, g.chk_col[a:b]))}\n")
