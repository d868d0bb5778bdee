"""Asymptotic spectral shape of protograph GLDPC ensembles.

The ensemble-average number of codewords of normalized weight delta grows as
``exp(n r(delta))``.  For a protograph, ``r`` is a maximization over the
fractional weights of the individual variable nodes; each constraint node
contributes the exponent of its multivariate weight enumerator, obtained
from a convex saddle-point problem in log coordinates.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, linprog, minimize
from scipy.spatial import ConvexHull

from .gf2_codes import ConstraintCode, multivariate_wef
from .protograph import CouplingSpec, GldpcProtograph

log = logging.getLogger(__name__)

INNER_TOL = 1e-9
DEFAULT_STARTS = 32
DESK_LIMIT = 12
FEAS_TOL = 1e-7


def binary_entropy(x):
    """Natural-log binary entropy, with H(0) = H(1) = 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log(x) - (1 - x) * np.log1p(-x)
    return np.where((x <= 0) | (x >= 1), 0.0, h)


def random_code_shape(delta: float, rate: float) -> float:
    """Spectral shape of the random linear code ensemble of the given rate."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return float(binary_entropy(delta)) - (1.0 - rate) * math.log(2.0)


def random_code_delta_min(rate: float) -> float:
    """Gilbert-Varshamov style zero crossing of :func:`random_code_shape`."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("rate must lie in [0, 1)")
    return brentq(lambda d: random_code_shape(d, rate), 1e-12, 0.5)


# ---------------------------------------------------------------- inner problem

def _lse_stats(C: np.ndarray, s: np.ndarray):
    """log-sum-exp of ``s @ C.T`` row-wise, with the tilted codeword law."""
    z = s @ C.T
    zmax = z.max(axis=1, keepdims=True)
    e = np.exp(z - zmax)
    tot = e.sum(axis=1, keepdims=True)
    return zmax[:, 0] + np.log(tot[:, 0]), e / tot


def _dual_newton(C: np.ndarray, delta: np.ndarray, s0: np.ndarray, ridge: float,
                 tol: float = INNER_TOL, max_iter: int = 200):
    """Minimize ``lse(C s) - delta.s + ridge/2 |s|^2`` for a batch of rows.

    Damped Newton with per-row backtracking.  Returns (value, s, converged).
    """
    k, d = delta.shape
    s = s0.copy()
    eye = np.eye(d)

    def value(s, dl):
        lse, pi = _lse_stats(C, s)
        return lse - np.einsum("kd,kd->k", dl, s) + 0.5 * ridge * np.einsum("kd,kd->k", s, s), pi

    val, pi = value(s, delta)
    ok = np.zeros(k, dtype=bool)
    for _ in range(max_iter):
        mean = pi @ C
        g = mean - delta + ridge * s
        ok = np.abs(g).max(axis=1) < tol
        if ok.all():
            break
        act = ~ok
        pa = pi[act]
        H = np.einsum("km,md,me->kde", pa, C, C) - mean[act, :, None] * mean[act, None, :]
        H += (ridge + 1e-13) * eye
        step = np.linalg.solve(H, g[act][:, :, None])[:, :, 0]
        dec = np.einsum("kd,kd->k", g[act], step)
        bad = ~(dec > 0)  # fall back to steepest descent
        step[bad] = g[act][bad]
        dec[bad] = np.einsum("kd,kd->k", step[bad], step[bad])
        t = np.ones(act.sum())
        sa = s[act]
        va = val[act]
        for _ in range(60):
            trial = sa - t[:, None] * step
            tv, tp = value(trial, delta[act])
            good = tv <= va - 1e-4 * t * dec + 1e-15 * np.abs(va)
            if good.all():
                break
            t = np.where(good, t, 0.5 * t)
        s[act] = trial
        val[act] = tv
        pi[act] = tp
    return val, s, ok


def _hull_support(C: np.ndarray, delta: np.ndarray):
    """Codewords usable by some distribution with mean ``delta``, or None if infeasible."""
    m, d = C.shape
    a_eq = np.vstack([C.T, np.ones((1, m))])
    b_eq = np.concatenate([delta, [1.0]])
    res = linprog(np.zeros(m), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    usable = np.zeros(m, dtype=bool)
    for i in range(m):
        c = np.zeros(m)
        c[i] = -1.0
        r = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        usable[i] = r.status == 0 and -r.fun > 1e-12
    return usable


def constraint_exponent(code_wef, delta_edges) -> float:
    """Exponent ``inf_x ln A(x) - sum_i delta_i ln x_i`` of a weight enumerator.

    ``code_wef`` is a :class:`ConstraintCode` or its codeword array.  Returns
    ``-inf`` when ``delta_edges`` lies outside the convex hull of the codewords.
    On faces of the hull the infimum is taken over the codewords that can
    carry probability, which is where the unrestricted infimum is approached.
    """
    words = multivariate_wef(code_wef) if isinstance(code_wef, ConstraintCode) else code_wef
    C = np.asarray(words, dtype=float)
    delta = np.asarray(delta_edges, dtype=float)
    if delta.shape != (C.shape[1],):
        raise ValueError(f"expected {C.shape[1]} edge fractions")
    if np.any(delta < 0) or np.any(delta > 1):
        raise ValueError("edge fractions must lie in [0, 1]")
    usable = _hull_support(C, delta)
    if usable is None:
        return -math.inf
    sub = C[usable]
    if len(sub) == 1:
        return 0.0
    # max-entropy law on the usable codewords; restrict s to their span
    basis = _centered_basis(sub)
    if basis.shape[1] == 0:
        return math.log(len(sub))
    Cb = sub @ basis
    db = delta @ basis
    val, _, ok = _dual_newton(Cb, db[None, :], np.zeros((1, Cb.shape[1])), ridge=0.0)
    if not ok[0]:
        log.warning("constraint exponent: inner Newton did not reach tolerance")
    return float(val[0])


def _centered_basis(C: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the directions along which the codewords vary."""
    centered = C - C.mean(axis=0)
    u, sv, vt = np.linalg.svd(centered, full_matrices=False)
    keep = sv > 1e-10 * max(1.0, sv.max(initial=0.0))
    return vt[keep].T


# ---------------------------------------------------------------- outer problem

@dataclass
class _Group:
    C: np.ndarray  # codewords in reduced coordinates, (m, r)
    basis: np.ndarray  # (d, r) orthonormal basis of the codeword span
    var_idx: np.ndarray  # (k, d) variable of each slot
    t: np.ndarray  # warm start for the reduced dual variables, (k, r)


def _hull_inequalities(C: np.ndarray, basis: np.ndarray):
    """Facets ``A y <= b`` of the codeword hull in reduced coordinates ``y = B^T x``.

    Facets that are plain coordinate bounds are dropped since the optimizer
    carries those as box constraints.
    """
    Y = C @ basis
    r = Y.shape[1]
    if r == 1:
        lo, hi = Y.min(), Y.max()
        A, b = np.array([[1.0], [-1.0]]), np.array([hi, -lo])
    else:
        hull = ConvexHull(Y)
        eq = np.unique(np.round(hull.equations, 10), axis=0)
        A, b = eq[:, :-1], -eq[:, -1]
    full = A @ basis.T  # in original coordinates
    keep = (np.abs(full) > 1e-9).sum(axis=1) > 1
    if r == 1:
        keep[:] = True
    return A[keep], b[keep]


class SpectralProblem:
    """Objective ``F(delta_1..delta_n)`` and its gradient for one protograph.

    Each constraint node contributes the saddle-point exponent of its
    weight enumerator.  Edge fractions are kept inside the codeword hulls by
    linear constraints: equalities for the real span of the codewords and
    facet inequalities for the hull itself.
    """

    def __init__(self, proto: GldpcProtograph, margin: float = 1e-10):
        self.proto = proto
        edges = proto.edges
        off = proto.row_edge_offset
        groups: dict[ConstraintCode, list[int]] = {}
        for i, code in enumerate(proto.effective_codes):
            groups.setdefault(code, []).append(i)
        n = proto.n_v
        self.groups = []
        eq_rows, ineq_rows, ineq_rhs = [], [], []
        for code, rows in groups.items():
            C = multivariate_wef(code).astype(float)
            vidx = np.array([edges[off[i]:off[i + 1], 2] for i in rows])
            basis = _span_basis(C)
            self.groups.append(_Group(C @ basis, basis, vidx, np.zeros((len(rows), basis.shape[1]))))
            ns = null_space(C)
            A, b = _hull_inequalities(C, basis)
            for row in vidx:
                for v in ns.T:
                    a = np.zeros(n)
                    np.add.at(a, row, v)
                    if np.abs(a).max() > 1e-12:
                        eq_rows.append(a)
                for ak, bk in zip(A @ basis.T, b):
                    a = np.zeros(n)
                    np.add.at(a, row, ak)
                    ineq_rows.append(a)
                    ineq_rhs.append(bk - margin)
        self.span_eq = np.array(eq_rows).reshape(-1, n)
        self.hull_A = np.array(ineq_rows).reshape(-1, n)
        self.hull_b = np.array(ineq_rhs)
        self.deg = proto.var_degrees.astype(float)
        self.tx = ~proto.punctured
        self.n_tx = int(self.tx.sum())
        if proto.col_labels is not None:
            self.position = np.array([t for t, _ in proto.col_labels])
        else:
            self.position = np.zeros(n, dtype=np.int64)

    def objective(self, dv: np.ndarray):
        """Total (unnormalized) exponent and its gradient."""
        total = 0.0
        grad = np.zeros_like(dv)
        for g in self.groups:
            y = dv[g.var_idx] @ g.basis
            val, t, _ = _dual_newton(g.C, y, g.t, 1e-12)
            g.t = t
            total += val.sum()
            np.add.at(grad, g.var_idx, -(t @ g.basis.T))
        x = np.clip(dv, 1e-300, 1 - 1e-16)
        total -= float(((self.deg - 1) * binary_entropy(x)).sum())
        grad -= (self.deg - 1) * (np.log1p(-x) - np.log(x))
        return total, grad

    def reset(self):
        for g in self.groups:
            g.t = np.zeros_like(g.t)

    def maximize(self, delta: float, start: np.ndarray, eta: float = 1e-12,
                 max_iter: int = 500):
        """Local maximum of ``F`` at mean transmitted fraction ``delta``.

        Returns (value, fractions, converged).
        """
        self.reset()
        target = delta * self.n_tx
        txf = self.tx.astype(float)
        cons = [{"type": "eq", "fun": lambda x: np.array([txf @ x - target]),
                 "jac": lambda x: txf[None, :]}]
        if len(self.span_eq):
            E = self.span_eq
            cons.append({"type": "eq", "fun": lambda x: E @ x, "jac": lambda x: E})
        if len(self.hull_A):
            A, b = self.hull_A, self.hull_b
            cons.append({"type": "ineq", "fun": lambda x: b - A @ x, "jac": lambda x: -A})
        scale = float(self.proto.n_v)

        def f(x):
            v, g = self.objective(x)
            return -v / scale, -g / scale

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(f, start, jac=True, method="SLSQP",
                           bounds=[(eta, 1 - eta)] * len(start), constraints=cons,
                           options={"maxiter": max_iter, "ftol": 1e-13})
        x = np.clip(res.x, eta, 1 - eta)
        val, _ = self.objective(x)
        viol = self.violation(x, delta)
        log.debug("slsqp: %s viol=%.2e nit=%d", res.message, viol, res.nit)
        return val, x, bool(res.success) and viol < 1e-7

    def violation(self, x: np.ndarray, delta: float) -> float:
        v = [abs(x[self.tx].sum() - delta * self.n_tx)]
        if len(self.span_eq):
            v.append(np.abs(self.span_eq @ x).max())
        if len(self.hull_A):
            v.append(max(0.0, (self.hull_A @ x - self.hull_b).max()))
        return float(max(v))

    # starting points -------------------------------------------------------

    def starts(self, delta: float, count: int, rng: np.random.Generator) -> list[np.ndarray]:
        """Uniform, windowed (localized in time) and random starting points."""
        n = self.proto.n_v
        out = [np.full(n, delta)]
        pos = self.position
        span = int(pos.max()) + 1
        windows = [(first, width) for width in range(1, span) for first in range(span)]
        rng.shuffle(windows)
        for first, width in windows:
            if len(out) >= count // 2 + 1:
                break
            inside = ((pos - first) % span) < width
            level = delta * self.n_tx / max(1, int((inside & self.tx).sum()))
            if level >= 0.9:
                continue
            out.append(np.where(inside, level, 1e-9))
        while len(out) < count:
            out.append(np.clip(rng.uniform(0.2, 1.8, size=n) * delta, 1e-6, 0.9))
        return [self.project(x, delta) for x in out[:count]]

    def project(self, x: np.ndarray, delta: float) -> np.ndarray:
        """Nearby point satisfying the linear equalities, clipped into the box."""
        A = np.vstack([self.tx.astype(float)[None, :], self.span_eq])
        b = np.zeros(len(A))
        b[0] = delta * self.n_tx
        for _ in range(20):
            x = x - np.linalg.lstsq(A, A @ x - b, rcond=None)[0]
            x = np.clip(x, 1e-12, 1 - 1e-12)
        if not len(self.hull_A):
            return x
        # pull toward the uniform point until the hull facets hold
        u = np.where(self.tx, delta, 0.5)
        slack_u = self.hull_b - self.hull_A @ u
        step = self.hull_A @ (x - u)
        over = step > slack_u
        if over.any() and np.all(slack_u > 0):
            t = 0.999 * np.min(slack_u[over] / step[over])
            x = u + t * (x - u)
        return x


def _span_basis(C: np.ndarray) -> np.ndarray:
    _, sv, vt = np.linalg.svd(C, full_matrices=False)
    keep = sv > 1e-10 * max(1.0, sv.max(initial=0.0))
    return vt[keep].T


# ---------------------------------------------------------------- curves

@dataclass
class SpectralCurve:
    delta: np.ndarray
    r: np.ndarray
    delta_min: float | None
    asymptotically_good: bool
    profiles: list = field(default_factory=list, repr=False)
    converged: bool = True

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.delta.tolist(), self.r.tolist()))


def _best(problem: SpectralProblem, delta: float, n_starts: int, rng, extra=(),
          stop_at_nonnegative: bool = False):
    best = (-math.inf, None, False)
    starts = [problem.project(np.asarray(x, float), delta) for x in extra]
    starts += problem.starts(delta, n_starts, rng)
    for x0 in starts[:max(n_starts, len(extra) + 1)]:
        val, x, ok = problem.maximize(delta, x0)
        # an infeasible SLSQP exit can report an arbitrary objective value
        if not math.isfinite(val) or problem.violation(x, delta) > FEAS_TOL:
            continue
        if val > best[0]:
            best = (val, x, ok)
        if stop_at_nonnegative and best[0] >= 0:
            break
    return best


def shape_value(proto: GldpcProtograph, delta: float, n_starts: int = DEFAULT_STARTS,
                seed: int = 0) -> float:
    """r(delta) for a single delta."""
    if delta == 0:
        return 0.0
    prob = SpectralProblem(proto)
    val, _, _ = _best(prob, delta, n_starts, np.random.default_rng(seed))
    return val / prob.n_tx


def spectral_shape(proto: GldpcProtograph, deltas, n_starts: int = DEFAULT_STARTS,
                   seed: int = 0, refine: bool = True) -> SpectralCurve:
    """Sample r on ``deltas`` and locate the first positive zero crossing.

    The crossing is refined by bisection between the bracketing grid points
    when ``refine`` is set; it is only reported if every sample before it is
    negative.
    """
    grid = np.asarray(deltas, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0) or grid.min() < 0 or grid.max() >= 1:
        raise ValueError("delta grid must be strictly increasing inside [0, 1)")
    if proto.col_labels is not None:
        span = 1 + max(t for t, _ in proto.col_labels)
        if span > DESK_LIMIT:
            log.warning("spectral optimization over %d positions may take a long time", span)
    prob = SpectralProblem(proto)
    rng = np.random.default_rng(seed)
    r = np.empty(len(grid))
    profiles = []
    prev = None
    all_ok = True
    for k, d in enumerate(grid):
        if d == 0:
            r[k] = 0.0
            profiles.append(np.zeros(proto.n_v))
            continue
        extra = [] if prev is None else [prev * d / max(prev[prob.tx].mean(), 1e-12)]
        val, x, ok = _best(prob, float(d), n_starts, rng, extra)
        all_ok &= ok
        r[k] = val / prob.n_tx
        profiles.append(x)
        prev = x
    dmin = None
    pos = grid > 0
    idx = np.nonzero(pos & (r >= 0))[0]
    if len(idx):
        k = idx[0]
        before = pos & (np.arange(len(grid)) < k)
        if before.any() and np.all(r[before] < 0):
            lo, hi = grid[k - 1], grid[k]
            dmin = float(hi)
            if refine:
                dmin = _bisect_crossing(prob, lo, hi, n_starts, rng, profiles[k])
    good = dmin is not None
    return SpectralCurve(grid, r, dmin, good, profiles, all_ok)


def _bisect_crossing(prob: SpectralProblem, lo: float, hi: float, n_starts: int,
                     rng, hint, tol: float = 5e-4) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        extra = [hint * mid / max(hint[prob.tx].mean(), 1e-12)]
        val, x, _ = _best(prob, mid, n_starts, rng, extra, stop_at_nonnegative=True)
        if val >= 0:
            hi, hint = mid, x
        else:
            lo = mid
    return 0.5 * (lo + hi)


def growth_rate(proto: GldpcProtograph, grid=None, n_starts: int = DEFAULT_STARTS,
                seed: int = 0, tol: float = 5e-4) -> float | None:
    """Minimum-distance growth rate (first positive zero crossing of r).

    Scans ``grid`` upward, stopping at the first point where some start
    reaches a nonnegative exponent, then bisects the bracket to ``tol``.
    Returns None if r stays negative on the whole grid or if the first
    grid point is already nonnegative.
    """
    grid = np.arange(0.04, 0.5, 0.04) if grid is None else np.asarray(grid, dtype=float)
    prob = SpectralProblem(proto)
    rng = np.random.default_rng(seed)
    prev_d, prev_x = None, None
    for d in grid:
        extra = [] if prev_x is None else [prev_x * d / prev_d]
        val, x, _ = _best(prob, float(d), n_starts, rng, extra, stop_at_nonnegative=True)
        if val >= 0:
            if prev_d is None:
                return None
            return _bisect_crossing(prob, prev_d, float(d), n_starts, rng, x, tol)
        prev_d, prev_x = float(d), x
    return None


@dataclass(frozen=True)
class FreeDistanceBounds:
    T: int
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper + 1e-9:
            raise ValueError("lower bound exceeds upper bound")


def free_distance_bounds(spec: CouplingSpec, T: int, grid=None,
                         n_starts: int = DEFAULT_STARTS, seed: int = 0) -> FreeDistanceBounds:
    """Bounds on the free-distance growth rate from period-``T`` ensembles."""
    if T < max(spec.w, 1):
        raise ValueError("T must be at least the coupling width")
    upper = growth_rate(spec.terminate(T), grid, n_starts, seed)
    lower = growth_rate(spec.tailbite(T), grid, n_starts, seed)
    if upper is None or lower is None:
        raise RuntimeError("growth rate not found on the delta grid")
    scale = T / (spec.w + 1)
    return FreeDistanceBounds(T, lower * scale, upper * scale)
