"""Generalized peeling decoder on lifted Tanner graphs.

A constraint node is decodable when the erased variables still attached to
it form a non-empty pattern that its code resolves completely.  The decoder
repeatedly removes a uniformly chosen decodable node together with those
variables.  The inner loop is compiled with numba; random choices come from
a pre-drawn array of uniforms so that results depend only on the numpy
generator handed in.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.stats import beta

from .gf2_codes import FULL_ML, build_decodability_table
from .lifting_graph import LiftedGraph, lift
from .protograph import GldpcProtograph

SUCCESS = "success"
FAILURE = "failure"
TRAJECTORY_POINTS = 2000


def _trial_rng(base_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(trial)]))


def decodable_tables(p: GldpcProtograph, policy: str = FULL_ML) -> np.ndarray:
    """(n_c, 2**max_degree) table: ``[i, mask]`` true if row i's code resolves ``mask``.

    The empty mask is marked not decodable.
    """
    width = 1 << int(p.check_degrees.max())
    out = np.zeros((p.n_c, width), dtype=np.bool_)
    cache = {}
    for i, code in enumerate(p.effective_codes):
        if code not in cache:
            cache[code] = build_decodability_table(code, policy).decodable
        t = cache[code]
        out[i, :len(t)] = t
    out[:, 0] = False
    return out


@dataclass
class ResidualState:
    """Mutable residual graph; arrays are updated in place by :func:`gpd_run`."""

    graph: LiftedGraph
    table: np.ndarray
    mask: np.ndarray  # per constraint node, slots attached to erased variables
    removed: np.ndarray  # constraint nodes already peeled
    erased: np.ndarray  # variables still unknown
    dec_list: np.ndarray
    dec_pos: np.ndarray
    n_dec: np.ndarray  # size-1 array, decodable set size
    counts_c: np.ndarray  # (n_c types, 2**max_deg) residual check counts by mask
    counts_v: np.ndarray  # erased variables per variable type
    iteration: int = 0

    @property
    def n_decodable(self) -> int:
        return int(self.n_dec[0])

    @property
    def n_erased(self) -> int:
        return int(self.counts_v.sum())

    def decodable_set(self) -> np.ndarray:
        return np.sort(self.dec_list[:self.n_decodable])

    def rescan(self):
        """Per-type counts recomputed from scratch: (check counts, variable counts)."""
        g = self.graph
        cc = np.zeros_like(self.counts_c)
        live = ~self.removed & (self.mask != 0)
        np.add.at(cc, (g.chk_type[live], self.mask[live]), 1)
        cv = np.bincount(g.var_type[self.erased], minlength=len(self.counts_v))
        return cc, cv


def gpd_init(g: LiftedGraph, eps: float, rng, policy: str = FULL_ML) -> ResidualState:
    """Erase each variable independently with probability ``eps``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if g.punctured.any():
        raise ValueError("peeling of punctured ensembles is not supported")
    rng = np.random.default_rng(rng)
    erased = rng.random(g.n_vars) < eps
    return _state_from_erasures(g, erased, decodable_tables(g.proto, policy))


def _state_from_erasures(g: LiftedGraph, erased: np.ndarray, table: np.ndarray) -> ResidualState:
    slot = np.arange(g.n_edges) - np.repeat(g.chk_ptr[:-1], np.diff(g.chk_ptr))
    bits = np.where(erased[g.chk_var], np.left_shift(1, slot), 0).astype(np.int64)
    mask = np.add.reduceat(bits, g.chk_ptr[:-1]) if g.n_edges else np.zeros(g.n_checks, np.int64)
    mask = mask.astype(np.int64)
    dec = table[g.chk_type, mask]
    dec_ids = np.nonzero(dec)[0]
    dec_list = np.empty(g.n_checks, dtype=np.int64)
    dec_list[:len(dec_ids)] = dec_ids
    dec_pos = np.full(g.n_checks, -1, dtype=np.int64)
    dec_pos[dec_ids] = np.arange(len(dec_ids))
    counts_c = np.zeros((g.proto.n_c, table.shape[1]), dtype=np.int64)
    nz = mask != 0
    np.add.at(counts_c, (g.chk_type[nz], mask[nz]), 1)
    counts_v = np.bincount(g.var_type[erased], minlength=g.proto.n_v).astype(np.int64)
    return ResidualState(g, table, mask, np.zeros(g.n_checks, np.bool_), erased.copy(),
                         dec_list, dec_pos, np.array([len(dec_ids)], np.int64),
                         counts_c, counts_v)


@numba.njit(cache=True)
def _peel(chk_ptr, chk_var, var_ptr, var_edge, edge_chk, chk_type, var_type, table,
          mask, removed, erased, dec_list, dec_pos, n_dec, counts_c, counts_v,
          uniforms, max_steps, stride, rec_l, rec_a, rec_v, start_iter):
    n_rec = 0
    it = start_iter
    n_left = counts_v.sum()
    steps = 0
    if it == 0:
        rec_l[0] = 0
        rec_a[0] = n_dec[0]
        rec_v[0] = n_left
        n_rec = 1
    while n_dec[0] > 0 and n_left > 0 and steps < max_steps:
        k = int(uniforms[it] * n_dec[0])
        if k >= n_dec[0]:
            k = n_dec[0] - 1
        c = dec_list[k]
        # drop c from the decodable set
        last = dec_list[n_dec[0] - 1]
        dec_list[k] = last
        dec_pos[last] = k
        dec_pos[c] = -1
        n_dec[0] -= 1
        removed[c] = True
        m = mask[c]
        counts_c[chk_type[c], m] -= 1
        base = chk_ptr[c]
        b = 0
        while m >> b:
            if (m >> b) & 1:
                v = chk_var[base + b]
                erased[v] = False
                counts_v[var_type[v]] -= 1
                n_left -= 1
                for q in range(var_ptr[v], var_ptr[v + 1]):
                    e = var_edge[q]
                    c2 = edge_chk[e]
                    if removed[c2]:
                        continue
                    old = mask[c2]
                    new = old & ~(1 << (e - chk_ptr[c2]))
                    mask[c2] = new
                    t = chk_type[c2]
                    counts_c[t, old] -= 1
                    if new != 0:
                        counts_c[t, new] += 1
                    ok = table[t, new]
                    if ok and dec_pos[c2] < 0:
                        dec_list[n_dec[0]] = c2
                        dec_pos[c2] = n_dec[0]
                        n_dec[0] += 1
                    elif not ok and dec_pos[c2] >= 0:
                        j = dec_pos[c2]
                        last = dec_list[n_dec[0] - 1]
                        dec_list[j] = last
                        dec_pos[last] = j
                        dec_pos[c2] = -1
                        n_dec[0] -= 1
            b += 1
        mask[c] = 0
        it += 1
        steps += 1
        if it % stride == 0 or n_dec[0] == 0 or n_left == 0:
            rec_l[n_rec] = it
            rec_a[n_rec] = n_dec[0]
            rec_v[n_rec] = n_left
            n_rec += 1
    return it, n_rec


@dataclass
class TrajectoryRecord:
    """Counts along one decoding run; ``scale`` normalizes them to tau, a, v."""

    iteration: np.ndarray
    decodable: np.ndarray
    erased: np.ndarray
    outcome: str
    seed: object = None
    scale: float = 1.0

    @property
    def tau(self) -> np.ndarray:
        return self.iteration / self.scale

    @property
    def a(self) -> np.ndarray:
        return self.decodable / self.scale

    @property
    def v(self) -> np.ndarray:
        return self.erased / self.scale


def gpd_run(state: ResidualState, rng=None, stride: int | None = None,
            max_steps: int | None = None, seed=None) -> TrajectoryRecord:
    """Peel until success, a stopping set, or ``max_steps`` more removals.

    The state is advanced in place, so a run can be resumed.  The outcome of
    an interrupted run is reported as failure only if it actually stopped.
    """
    g = state.graph
    n = g.n_vars
    stride = max(1, math.ceil(n / TRAJECTORY_POINTS)) if stride is None else int(stride)
    rng = np.random.default_rng(rng)
    budget = g.n_checks - state.iteration
    steps = budget if max_steps is None else min(int(max_steps), budget)
    uniforms = np.zeros(g.n_checks + 1)
    uniforms[state.iteration:state.iteration + steps] = rng.random(steps)
    cap = steps // stride + 3
    rec = [np.zeros(cap, np.int64) for _ in range(3)]
    it, n_rec = _peel(g.chk_ptr, g.chk_var, g.var_ptr, g.var_edge, _edge_chk(g),
                      g.chk_type, g.var_type, state.table, state.mask, state.removed,
                      state.erased, state.dec_list, state.dec_pos, state.n_dec,
                      state.counts_c, state.counts_v, uniforms, steps, stride,
                      rec[0], rec[1], rec[2], state.iteration)
    state.iteration = it
    left = state.n_erased
    if left == 0:
        outcome = SUCCESS
    elif state.n_decodable == 0:
        outcome = FAILURE
    else:
        outcome = "running"
    return TrajectoryRecord(rec[0][:n_rec], rec[1][:n_rec], rec[2][:n_rec], outcome, seed, float(n))


_EDGE_CHK = {}


def _edge_chk(g: LiftedGraph) -> np.ndarray:
    key = id(g)
    hit = _EDGE_CHK.get(key)
    if hit is None or hit[0] is not g:
        _EDGE_CHK.clear()
        hit = (g, g.edge_check())
        _EDGE_CHK[key] = hit
    return hit[1]


def classical_peeling(g: LiftedGraph, erased: np.ndarray) -> bool:
    """Degree-one peeling for single-parity-check graphs; True on full recovery.

    Written independently of the generalized decoder as a reference.
    """
    erased = erased.copy()
    chk_of_edge = g.edge_check()
    n_er = np.zeros(g.n_checks, dtype=np.int64)
    np.add.at(n_er, chk_of_edge, erased[g.chk_var].astype(np.int64))
    stack = [c for c in range(g.n_checks) if n_er[c] == 1]
    while stack:
        c = stack.pop()
        if n_er[c] != 1:
            continue
        vs = g.chk_var[g.chk_ptr[c]:g.chk_ptr[c + 1]]
        v = next(int(x) for x in vs if erased[x])
        erased[v] = False
        for e in g.var_edge[g.var_ptr[v]:g.var_ptr[v + 1]]:
            c2 = chk_of_edge[e]
            n_er[c2] -= 1
            if n_er[c2] == 1:
                stack.append(c2)
    return not erased.any()


# ---------------------------------------------------------------- Monte Carlo

@dataclass
class BlerEstimate:
    epsilon: float
    M: int
    trials: int
    failures: int
    ci_low: float
    ci_high: float
    outcomes: np.ndarray = field(repr=False, default=None)
    trajectories: list = field(repr=False, default=None)

    @property
    def bler(self) -> float:
        return self.failures / self.trials


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def _one_trial(args):
    p, M, eps, base_seed, trial, keep, policy, fixed = args
    rng = _trial_rng(base_seed, trial)
    g = fixed if fixed is not None else lift(p, M, rng)
    st = gpd_init(g, eps, rng, policy)
    rec = gpd_run(st, rng, seed=(base_seed, trial))
    return rec.outcome == FAILURE, (rec if keep else None)


def monte_carlo(p: GldpcProtograph, M: int, eps: float, trials: int, base_seed: int = 0,
                keep_trajectories: bool = False, workers: int = 1,
                policy: str = FULL_ML, fixed_graph: bool = False) -> BlerEstimate:
    """Block error rate of the peeling decoder over fresh lifts.

    Trial ``k`` draws its lift and erasures from the stream seeded by
    ``(base_seed, k)``, so the result does not depend on ``workers``.
    With ``fixed_graph`` one lift (seeded by ``base_seed`` alone) is reused.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    fixed = lift(p, M, np.random.default_rng(base_seed)) if fixed_graph else None
    jobs = [(p, M, eps, base_seed, k, keep_trajectories, policy, fixed) for k in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_one_trial, jobs, chunksize=max(1, trials // (4 * workers))))
    else:
        results = [_one_trial(j) for j in jobs]
    fails = np.array([r[0] for r in results], dtype=bool)
    k = int(fails.sum())
    lo, hi = clopper_pearson(k, trials)
    trajs = [r[1] for r in results] if keep_trajectories else None
    return BlerEstimate(float(eps), M, trials, k, lo, hi, fails, trajs)
