"""Multi-edge density evolution of GLDPC protographs over the BEC.

Constraint-node transfer functions are evaluated exactly: for each slot the
outgoing erasure probability is a multilinear polynomial in the incoming
probabilities of the other slots, with 0/1 coefficients read from the
code's erasure tables.  Nodes sharing an effective code are evaluated as one
batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .gf2_codes import BITWISE_MAP, FULL_ML, ConstraintCode, build_decodability_table
from .protograph import GldpcProtograph, design_rate

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


@lru_cache(maxsize=None)
def _unrecovered_tables(code: ConstraintCode, policy: str) -> np.ndarray:
    """``u[m, b] = 1`` if slot b stays erased when the slots in ``m | bit b`` are erased.

    The bit of ``b`` itself in ``m`` is ignored, so that ``weights @ u``
    marginalizes over the target's own incoming message.
    """
    table = build_decodability_table(code, policy)
    n = code.n_c_len
    masks = np.arange(1 << n)
    u = np.empty((1 << n, n))
    for b in range(n):
        full = masks | (1 << b)
        if policy == BITWISE_MAP:
            u[:, b] = ((table.bit_recoverable[full] >> b) & 1) == 0
        else:
            u[:, b] = ~table.full_decodable[full]
    u.setflags(write=False)
    return u


def _pattern_weights(p: np.ndarray) -> np.ndarray:
    """Probability of every erasure mask given per-slot erasure probabilities.

    ``p`` has shape (k, d); result has shape (k, 2**d) with bit i of the
    column index meaning slot i erased.
    """
    k, d = p.shape
    w = np.empty((k, 1 << d))
    w[:, 0] = 1.0
    for i in range(d):
        half = 1 << i
        pi = p[:, i:i + 1]
        w[:, half:2 * half] = w[:, :half] * pi
        w[:, :half] *= 1.0 - pi
    return w


def check_update(code: ConstraintCode, incoming, policy: str = BITWISE_MAP) -> np.ndarray:
    """Outgoing erasure probabilities of a constraint node.

    ``code`` is the effective code with columns in slot order and
    ``incoming`` holds one probability per slot, or a (k, d) batch.
    """
    p = np.asarray(incoming, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    d = code.n_c_len
    if p.shape[1] != d:
        raise ValueError(f"expected {d} incoming probabilities, got {p.shape[1]}")
    q = _pattern_weights(p) @ _unrecovered_tables(code, policy)
    return q[0] if single else q


@dataclass
class EdgeProbState:
    p: np.ndarray  # variable -> check erasure probability per edge
    q: np.ndarray  # check -> variable erasure probability per edge
    iteration: int
    epsilon: float
    converged: bool


class DensityEvolution:
    """Density evolution on a fixed protograph.

    Precomputes the edge bookkeeping once so that repeated runs at different
    channel parameters (threshold bisection, EXIT grids) are cheap.
    """

    def __init__(self, proto: GldpcProtograph, policy: str = BITWISE_MAP):
        if policy not in (BITWISE_MAP, FULL_ML):
            raise ValueError(f"unknown policy {policy!r}")
        self.proto = proto
        self.policy = policy
        off = proto.row_edge_offset
        groups: dict[ConstraintCode, list[int]] = {}
        for i, code in enumerate(proto.effective_codes):
            groups.setdefault(code, []).append(i)
        # (code, edge index matrix of shape (rows, degree))
        self._check_groups = [
            (code, np.array([np.arange(off[i], off[i + 1]) for i in rows]))
            for code, rows in groups.items()
        ]
        vgroups: dict[int, list[tuple[int, ...]]] = {}
        for j, es in enumerate(proto.var_edges):
            vgroups.setdefault(len(es), []).append(es)
        self._var_groups = [np.array(v, dtype=np.int64) for v in vgroups.values()]
        n_e = len(proto.edges)
        # punctured variables see an erased channel
        punct_edges = [e for j, es in enumerate(proto.var_edges) if proto.punctured[j] for e in es]
        self._punct_edges = np.array(punct_edges, dtype=np.int64)
        self.n_edges = n_e

    def _checks(self, p: np.ndarray) -> np.ndarray:
        q = np.empty_like(p)
        for code, idx in self._check_groups:
            q[idx] = check_update(code, p[idx], self.policy)
        return q

    def channel_vector(self, eps: float) -> np.ndarray:
        ch = np.full(self.n_edges, float(eps))
        if len(self._punct_edges):
            ch[self._punct_edges] = 1.0
        return ch

    def iterate(self, eps: float, max_iter: int = DEFAULT_MAX_ITER,
                tol: float = DEFAULT_TOL) -> EdgeProbState:
        """Run DE from the all-erased start until every p < tol or it stalls.

        A stall is a fixed point: no edge probability moves by more than
        ``1e-15`` in one iteration.
        """
        if not 0.0 <= eps <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        ch = self.channel_vector(eps)
        p = ch.copy()
        q = np.ones_like(p)
        for it in range(1, max_iter + 1):
            q = self._checks(p)
            new = ch * self._other_products(q)
            if new.max(initial=0.0) < tol:
                return EdgeProbState(new, q, it, eps, True)
            if np.abs(new - p).max(initial=0.0) < 1e-15:
                return EdgeProbState(new, q, it, eps, False)
            p = new
        return EdgeProbState(p, q, max_iter, eps, False)

    def _other_products(self, q: np.ndarray) -> np.ndarray:
        out = np.empty_like(q)
        for idx in self._var_groups:
            qq = q[idx]
            d = qq.shape[1]
            pre = np.ones_like(qq)
            suf = np.ones_like(qq)
            for a in range(1, d):
                pre[:, a] = pre[:, a - 1] * qq[:, a - 1]
                suf[:, d - 1 - a] = suf[:, d - a] * qq[:, d - a]
            out[idx] = pre * suf
        return out

    def converges(self, eps: float, max_iter: int = DEFAULT_MAX_ITER,
                  tol: float = DEFAULT_TOL) -> bool:
        return self.iterate(eps, max_iter, tol).converged

    def threshold(self, tol: float = 1e-4, lo: float = 0.0, hi: float = 1.0,
                  max_iter: int = DEFAULT_MAX_ITER) -> float:
        """Largest converging epsilon, bisected to an interval of width ``tol``."""
        if tol <= 0:
            raise ValueError("tol must be positive")
        if self.converges(hi, max_iter):
            return hi
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.converges(mid, max_iter):
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def extrinsic(self, state: EdgeProbState) -> np.ndarray:
        """Per-variable probability that all incoming check messages are erased."""
        out = np.empty(self.proto.n_v)
        for j, es in enumerate(self.proto.var_edges):
            out[j] = np.prod(state.q[list(es)])
        return out


def de_iterate(proto: GldpcProtograph, eps: float, max_iter: int = DEFAULT_MAX_ITER,
               tol: float = DEFAULT_TOL, policy: str = BITWISE_MAP):
    """Converged flag and final state of density evolution at ``eps``."""
    st = DensityEvolution(proto, policy).iterate(eps, max_iter, tol)
    return st.converged, st


def bp_threshold(proto: GldpcProtograph, tol: float = 1e-4,
                 policy: str = BITWISE_MAP, max_iter: int = DEFAULT_MAX_ITER) -> float:
    return DensityEvolution(proto, policy).threshold(tol, max_iter=max_iter)


@dataclass
class ExitCurve:
    epsilon: np.ndarray
    h_bp: np.ndarray
    rate: Fraction

    def __post_init__(self):
        self.epsilon = np.asarray(self.epsilon, dtype=float)
        self.h_bp = np.asarray(self.h_bp, dtype=float)
        if np.any(np.diff(self.epsilon) <= 0):
            raise ValueError("epsilon grid must be strictly increasing")


def bp_exit_curve(proto: GldpcProtograph, eps_grid, policy: str = BITWISE_MAP,
                  max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> ExitCurve:
    """BP EXIT function averaged over the transmitted variable nodes."""
    grid = np.asarray(eps_grid, dtype=float)
    if grid.size and (grid.min() < 0 or grid.max() > 1):
        raise ValueError("epsilon grid must lie in [0, 1]")
    de = DensityEvolution(proto, policy)
    tx = ~proto.punctured
    h = np.empty(len(grid))
    for k, eps in enumerate(grid):
        st = de.iterate(float(eps), max_iter, tol)
        h[k] = 0.0 if st.converged else de.extrinsic(st)[tx].mean()
    return ExitCurve(grid, h, design_rate(proto))


def map_threshold_bound(curve: ExitCurve) -> float:
    """Epsilon where the trapezoidal area of h_BP from epsilon to 1 equals the rate."""
    eps, h = curve.epsilon, curve.h_bp
    rate = float(curve.rate)
    if eps[-1] < 1.0 - 1e-12:
        raise ValueError("EXIT curve must extend to epsilon = 1")
    seg = 0.5 * (h[1:] + h[:-1]) * np.diff(eps)
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])  # area from eps[k] to 1
    if tail[0] < rate:
        raise ValueError("area under the EXIT curve never reaches the rate")
    k = np.nonzero(tail >= rate)[0][-1]
    if k == len(eps) - 1:
        return float(eps[-1])
    # area is quadratic inside a trapezoid; solve for the split point
    x0, x1 = eps[k], eps[k + 1]
    h0, h1 = h[k], h[k + 1]
    need = rate - tail[k + 1]
    slope = (h1 - h0) / (x1 - x0)
    # area from x to x1 = (x1 - x) * (h(x) + h1) / 2 with h(x) = h1 - slope (x1 - x)
    # => slope/2 * s^2 - h1 * s + need = 0 with s = x1 - x
    if abs(slope) < 1e-15:
        s = need / h1
    else:
        disc = h1 * h1 - 2.0 * slope * need
        s = (h1 - np.sqrt(max(disc, 0.0))) / slope
    return float(x1 - s)
