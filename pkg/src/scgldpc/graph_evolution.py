"""Mean evolution of the residual graph under generalized peeling.

The residual constraint nodes of protograph row ``i`` are classified by the
mask of slots still attached to erased variables; ``r[i, S]`` is their
expected count and ``l[j]`` the expected number of erased variables of
column ``j``.  One peeling step removes a random decodable node, its erased
variables, and detaches the other edges of those variables from random
compatible constraint nodes.  Averaging that step gives the drift below.

Internally all counts are per lifted copy (divided by M) and time is the
number of removals per copy.  Curves can be reported per copy, per
variable node (divided by ``n = M n_v``) or per spatial position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import RK45
from scipy.optimize import brentq

from .gf2_codes import FULL_ML
from .peeling_sim import decodable_tables
from .scaling_law import flat_phase
from .protograph import GldpcProtograph

HALT_TOL = 1e-9
# erased mass per variable below which a halted run counts as decoded
SUCCESS_TOL = 1e-6
PER_VARIABLE = "n"
PER_COPY = "M"
# per spatial position of a coupled chain (M times the variables per position)
PER_POSITION = "pos"
PER_CHOICES = (PER_VARIABLE, PER_COPY, PER_POSITION)


def unit_scale(p: GldpcProtograph, per: str) -> float:
    """Nodes per lifted copy that make up one unit of ``per``."""
    if per == PER_COPY:
        return 1.0
    if per == PER_VARIABLE:
        return float(p.n_v)
    if per == PER_POSITION:
        times = {t for t, _ in p.col_labels} if p.col_labels else {0}
        return p.n_v / len(times)
    raise ValueError(f"per must be one of {PER_CHOICES}")


class _Layout:
    """Index bookkeeping for the (row, mask) state vector."""

    def __init__(self, p: GldpcProtograph, policy: str):
        self.p = p
        deg = p.check_degrees.astype(int)
        sizes = 1 << deg
        self.offset = np.concatenate([[0], np.cumsum(sizes)])
        self.n_states = int(self.offset[-1])
        self.row = np.repeat(np.arange(p.n_c), sizes)
        self.mask = np.concatenate([np.arange(s) for s in sizes])
        table = decodable_tables(p, policy)
        self.decodable = table[self.row, self.mask]
        self.weight = np.array([bin(m).count("1") for m in range(int(sizes.max()))])[self.mask]
        # every (state containing slot b) -> (state without b), tagged by edge id
        src, dst, edge = [], [], []
        off_e = p.row_edge_offset
        for i in range(p.n_c):
            masks = np.arange(sizes[i])
            for b in range(deg[i]):
                has = masks[(masks >> b) & 1 == 1]
                src.append(self.offset[i] + has)
                dst.append(self.offset[i] + (has ^ (1 << b)))
                edge.append(np.full(len(has), off_e[i] + b))
        self.src = np.concatenate(src)
        self.dst = np.concatenate(dst)
        self.edge = np.concatenate(edge)
        self.n_edges = len(p.edges)
        self.edge_var = p.edges[:, 2]
        self.n_v = p.n_v


@dataclass
class MeanState:
    """Expected residual counts per lifted copy."""

    r: np.ndarray  # per (row, mask) state
    l: np.ndarray  # per variable column
    layout: _Layout

    @property
    def a(self) -> float:
        return float(self.r[self.layout.decodable].sum())

    @property
    def v(self) -> float:
        return float(self.l.sum())

    def by_type(self) -> dict[tuple[int, int], float]:
        """Nonzero masses keyed by (row, mask)."""
        lay = self.layout
        nz = np.nonzero(self.r > 0)[0]
        return {(int(lay.row[k]), int(lay.mask[k])): float(self.r[k]) for k in nz}


def init_means(p: GldpcProtograph, eps: float, policy: str = FULL_ML) -> MeanState:
    """Residual distribution after removing the correctly received variables."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    lay = _Layout(p, policy)
    d = p.check_degrees[lay.row]
    r = eps ** lay.weight * (1.0 - eps) ** (d - lay.weight)
    l = np.full(p.n_v, float(eps))
    l[p.punctured] = 1.0
    return MeanState(r.astype(float), l, lay)


def _drift(lay: _Layout, r: np.ndarray):
    r = np.maximum(r, 0.0)
    dec_mass = np.where(lay.decodable, r, 0.0)
    a = dec_mass.sum()
    dr = np.zeros_like(r)
    if a <= 0:
        return dr, np.zeros(lay.n_v), a
    # expected variables removed per step through each edge type
    D = np.bincount(lay.edge, weights=dec_mass[lay.src], minlength=lay.n_edges) / a
    per_var = np.bincount(lay.edge_var, weights=D, minlength=lay.n_v)
    detach = per_var[lay.edge_var] - D
    E = np.bincount(lay.edge, weights=r[lay.src], minlength=lay.n_edges)
    rate = np.divide(detach, E, out=np.zeros_like(E), where=E > 0)
    flow = rate[lay.edge] * r[lay.src]
    dr -= np.bincount(lay.src, weights=flow, minlength=lay.n_states)
    dr += np.bincount(lay.dst, weights=flow, minlength=lay.n_states)
    dr -= dec_mass / a
    return dr, -per_var, a


def drift(state: MeanState):
    """Expected change per removal of (r, l); raises if nothing is decodable."""
    dr, dl, a = _drift(state.layout, state.r)
    if a <= 0:
        raise ValueError("no decodable mass left; the evolution has halted")
    return dr, dl


@dataclass
class EvolutionCurves:
    tau: np.ndarray
    a: np.ndarray
    v: np.ndarray
    success: bool
    epsilon: float
    per: str
    states: np.ndarray | None = None  # (len(tau), n_states) when requested

    def critical_index(self) -> int:
        """Index of the critical point: the lowest interior local minimum of ``a``.

        The terminal drain to zero on the success branch is not a critical
        point; on the failure branch the halting point is returned.
        """
        if not self.success:
            return len(self.a) - 1
        a = self.a
        live = self.v > 1e-2 * self.v[0]
        k = np.arange(1, len(a) - 1)
        is_min = (a[k] <= a[k - 1]) & (a[k] <= a[k + 1]) & live[k]
        cand = k[is_min]
        if len(cand) == 0:
            return 0
        return int(cand[np.argmin(a[cand])])


def evolve(p: GldpcProtograph, eps: float, per: str = PER_VARIABLE, policy: str = FULL_ML,
           rtol: float = 1e-8, atol: float = 1e-12, max_step: float = np.inf,
           n_points: int = 2000, keep_states: bool = False) -> EvolutionCurves:
    """Integrate the mean evolution from the initial residual distribution.

    Stops when the decodable mass or the erased mass drops below
    ``HALT_TOL`` (in per-variable units).  ``per`` selects the normalization
    of the returned curves: ``"n"`` divides counts and time by the number of
    variable nodes, ``"M"`` by the lifting factor and ``"pos"`` by the
    variable nodes of one spatial position.
    """
    scale = unit_scale(p, per)
    st = init_means(p, eps, policy)
    lay = st.layout
    n_v = p.n_v
    halt = HALT_TOL * n_v
    y0 = np.concatenate([st.r, st.l])
    ns = lay.n_states

    def rhs(t, y):
        dr, dl, _ = _drift(lay, y[:ns])
        return np.concatenate([dr, dl])

    def masses(y):
        r = np.maximum(y[:ns], 0.0)
        return float(r[lay.decodable].sum()), float(np.maximum(y[ns:], 0.0).sum())

    a0, v0 = masses(y0)
    ts, As, Vs, Ys = [0.0], [a0], [v0], [y0[:ns].copy()] if keep_states else None
    success = v0 <= halt
    if a0 > halt and v0 > halt:
        # the horizon is bounded by the number of constraint nodes per copy
        solver = RK45(rhs, 0.0, y0, float(p.n_c) + 1.0, rtol=rtol, atol=atol, max_step=max_step)
        while solver.status == "running":
            solver.step()
            if solver.status == "failed":
                raise RuntimeError("integration step failed")
            a, v = masses(solver.y)
            t = solver.t
            y = solver.y
            if a <= halt or v <= halt:
                # locate the crossing inside the last step
                dense = solver.dense_output()

                def gap(x):
                    aa, vv = masses(dense(x))
                    return min(aa, vv) - halt

                t = brentq(gap, solver.t_old, solver.t, xtol=1e-12 * max(1.0, solver.t))
                y = dense(t)
                a, v = masses(y)
                success = v <= SUCCESS_TOL * n_v
            ts.append(t)
            As.append(a)
            Vs.append(v)
            if keep_states:
                Ys.append(np.maximum(y[:ns], 0.0))
            if a <= halt * 1.0001 or v <= halt * 1.0001:
                break
    ts, As, Vs = np.array(ts), np.array(As), np.array(Vs)
    if n_points and len(ts) > n_points:
        grid = np.linspace(0.0, ts[-1], n_points)
        pick = np.unique(np.concatenate([np.searchsorted(ts, grid).clip(0, len(ts) - 1),
                                         [len(ts) - 1]]))
        ts, As, Vs = ts[pick], As[pick], Vs[pick]
        if keep_states:
            Ys = [Ys[k] for k in pick]
    states = np.array(Ys) if keep_states else None
    return EvolutionCurves(ts / scale, As / scale, Vs / scale, bool(success), float(eps), per, states)


def gpd_threshold(p: GldpcProtograph, tol: float = 1e-4, lo: float = 0.0, hi: float = 1.0,
                  policy: str = FULL_ML, **kw) -> float:
    """Largest epsilon whose mean evolution reaches v = 0 with positive decodable mass."""
    if tol <= 0:
        raise ValueError("tol must be positive")

    def ok(e):
        return evolve(p, e, policy=policy, n_points=2, **kw).success

    if ok(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def is_coupled(p: GldpcProtograph) -> bool:
    return bool(p.col_labels) and len({t for t, _ in p.col_labels}) > 1


def critical_value(curve: EvolutionCurves, phase: bool) -> float:
    """a at the critical point, or at the middle of the flat critical phase."""
    if phase:
        lo, hi = flat_phase(curve.tau, curve.a)
        return float(np.interp(0.5 * (lo + hi), curve.tau, curve.a))
    return float(curve.a[curve.critical_index()])


def extrapolated_threshold(p: GldpcProtograph, eps_points, deg: int = 2,
                           phase: bool | None = None, policy: str = FULL_ML) -> float:
    """Channel value where the critical value of ``a`` extrapolates to zero.

    Fits a degree-``deg`` polynomial to the critical value at ``eps_points``
    (all below threshold) and returns its first root above them.  Runs that
    close to the threshold get stiff, since the decodable set relaxes on a
    time scale of order ``a``; extrapolation avoids them.
    """
    eps = np.sort(np.asarray(eps_points, dtype=float))
    if len(eps) < deg + 1:
        raise ValueError(f"need at least {deg + 1} channel values")
    phase = is_coupled(p) if phase is None else phase
    vals = []
    for e in eps:
        c = evolve(p, float(e), per=PER_POSITION, policy=policy)
        if not c.success:
            raise ValueError(f"decoding fails at eps={e:.6g}; points must lie below threshold")
        vals.append(critical_value(c, phase))
    roots = np.roots(np.polyfit(eps, vals, deg))
    roots = np.sort(roots[np.abs(roots.imag) < 1e-12].real)
    above = roots[(roots > eps[-1]) & (roots <= 1.0)]
    if len(above) == 0:
        raise ValueError("critical value does not extrapolate to zero in (max eps, 1]")
    return float(above[0])
