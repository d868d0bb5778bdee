"""Command-line front end, ensemble spec files and CSV output.

Ensemble spec (JSON)::

    {
      "name": "A7",
      "codes": {"hamming7": ["1001110", "0101101", "0011011"]},
      "base": [[1, 1, 1, 1, 1, 1, 1], [1, 1, 1, 1, 1, 1, 1]],
      "row_codes": ["hamming7", "hamming7"],
      "column_maps": [[0, 1, 2, 3, 4, 5, 6], [4, 5, 6, 0, 1, 2, 3]],
      "punctured": [],
      "coupling": {"components": [B0, B1], "mode": "terminated", "length": 50}
    }

``column_maps`` and ``punctured`` are 0-based.  Without a ``coupling``
block the file describes a plain protograph.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import re
import sys
from pathlib import Path

import numpy as np

from . import density_evolution as de
from . import graph_evolution as ge
from . import peeling_sim as ps
from . import scaling_law as sl
from . import spectral_shape as ss
from .gf2_codes import BITWISE_MAP, FULL_ML, ConstraintCode
from .lifting_graph import lift, verify
from .protograph import BUILTINS, CouplingSpec, GldpcProtograph, builtin, design_rate

log = logging.getLogger("scgldpc")

_HROW = re.compile(r"^[01]+$")


class SpecError(ValueError):
    """Invalid ensemble spec; ``line`` is 1-based when known."""

    def __init__(self, msg: str, line: int | None = None, source: str = "<spec>"):
        self.line = line
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {msg}")


def _line_of(text: str, needle: str) -> int | None:
    k = text.find(needle)
    return None if k < 0 else text.count("\n", 0, k) + 1


# ---------------------------------------------------------------- spec files

def _code_rows(code: ConstraintCode) -> list[str]:
    return ["".join(str(int(b)) for b in row) for row in code.parity_matrix]


def serialize_spec(spec: CouplingSpec | GldpcProtograph) -> dict:
    """JSON-ready dict for a coupling spec or a plain protograph."""
    names: dict[ConstraintCode, str] = {}
    for c in spec.codes:
        if c not in names:
            base = c.name or "code"
            nm = base if base not in names.values() else f"{base}_{len(names)}"
            names[c] = nm
    out = {
        "name": getattr(spec, "name", "") or "",
        "codes": {nm: _code_rows(c) for c, nm in names.items()},
        "row_codes": [names[c] for c in spec.codes],
        "punctured": [int(j) for j in np.nonzero(spec.punctured)[0]],
    }
    if isinstance(spec, CouplingSpec):
        out["base"] = spec.base.tolist()
        out["column_maps"] = [list(m) for m in spec.column_maps]
        coupling = {"components": [c.tolist() for c in spec.components], "w": spec.w,
                    "mode": spec.mode}
        if spec.length is not None:
            coupling["length"] = int(spec.length)
        out["coupling"] = coupling
    else:
        out["base"] = spec.base.tolist()
        out["column_maps"] = [list(m) for m in spec.edge_column_map]
    return out


def parse_spec(text: str, source: str = "<spec>") -> CouplingSpec | GldpcProtograph:
    """Parse a JSON ensemble spec; errors carry the offending line."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.msg, exc.lineno, source) from None
    if not isinstance(doc, dict):
        raise SpecError("top level must be an object", 1, source)

    def need(key):
        if key not in doc:
            raise SpecError(f"missing field {key!r}", None, source)
        return doc[key]

    codes = {}
    raw_codes = need("codes")
    if not isinstance(raw_codes, dict) or not raw_codes:
        raise SpecError("'codes' must be a non-empty object", _line_of(text, '"codes"'), source)
    for name, rows in raw_codes.items():
        if not isinstance(rows, list) or not rows:
            raise SpecError(f"code {name!r} needs a list of H rows", _line_of(text, f'"{name}"'), source)
        for r in rows:
            if not isinstance(r, str) or not _HROW.match(r):
                raise SpecError(f"malformed parity-check row {r!r} in code {name!r}",
                                _line_of(text, json.dumps(r)), source)
        if len({len(r) for r in rows}) != 1:
            raise SpecError(f"rows of code {name!r} differ in length", _line_of(text, f'"{name}"'), source)
        codes[name] = ConstraintCode(np.array([[int(ch) for ch in r] for r in rows]), name=name)
    row_codes = need("row_codes")
    for nm in row_codes:
        if nm not in codes:
            raise SpecError(f"unknown code reference {nm!r}", _line_of(text, f'"row_codes"'), source)
    code_list = [codes[nm] for nm in row_codes]
    punct_idx = doc.get("punctured", [])
    try:
        base = np.asarray(need("base"), dtype=np.int64)
        maps = [tuple(int(c) for c in m) for m in need("column_maps")]
        punct = np.zeros(base.shape[1], dtype=bool)
        punct[np.asarray(punct_idx, dtype=np.int64)] = True
        if "coupling" in doc:
            cp = doc["coupling"]
            comps = [np.asarray(c, dtype=np.int64) for c in cp["components"]]
            if "w" in cp and int(cp["w"]) != len(comps) - 1:
                raise ValueError("coupling w does not match the number of components")
            total = sum(comps[1:], comps[0].copy())
            if not np.array_equal(total, base):
                raise ValueError("coupling components do not sum to the base matrix")
            return CouplingSpec(tuple(comps), tuple(code_list), tuple(maps), punct,
                                doc.get("name", ""), cp.get("mode", "unterminated"),
                                cp.get("length"))
        return GldpcProtograph(base, tuple(code_list), tuple(maps), punct)
    except SpecError:
        raise
    except (ValueError, IndexError, KeyError, TypeError) as exc:
        key = str(exc).split()[0] if str(exc) else ""
        line = _line_of(text, '"coupling"') if "coupling" in str(exc) else _line_of(text, '"base"')
        raise SpecError(str(exc) or key, line, source) from None


def load_spec(path: str | Path):
    p = Path(path)
    return parse_spec(p.read_text(), str(p))


def dump_spec(spec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(serialize_spec(spec), indent=2) + "\n")


# ---------------------------------------------------------------- CSV

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


def emit_csv(header, rows, path: str | Path) -> Path:
    """Headered CSV with 12 significant digits and LF line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = list(zip(*body)) if body else [[] for _ in header]
    out = {}
    for h, c in zip(header, cols):
        try:
            out[h] = np.array([float(x) for x in c])
        except ValueError:
            out[h] = np.array(c)
    return out


def write_manifest(out: Path, command: str, args: dict, spec) -> Path:
    import numba
    import scipy

    from importlib.metadata import PackageNotFoundError, version
    try:
        pkg = version("artifact")
    except PackageNotFoundError:
        pkg = "unknown"
    doc = {
        "command": command,
        "arguments": {k: v for k, v in sorted(args.items())},
        "spec": serialize_spec(spec) if spec is not None else None,
        "versions": {"package": pkg, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "numba": numba.__version__},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return path


# ---------------------------------------------------------------- arguments

def _float_list(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:count`` (inclusive linspace)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must be start:stop:count")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise argparse.ArgumentTypeError("grid count must be positive")
        return np.linspace(a, b, n).tolist()
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        if len(parts) == 2:
            return list(range(parts[0], parts[1] + 1))
        if len(parts) == 3:
            return list(range(parts[0], parts[1] + 1, parts[2]))
        raise argparse.ArgumentTypeError("range must be a:b or a:b:step")
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_ensemble(args):
    if (args.spec is None) == (args.builtin is None):
        raise SpecError("give exactly one of --spec or --builtin")
    if args.builtin is not None:
        try:
            return builtin(args.builtin)
        except KeyError as exc:
            raise SpecError(str(exc.args[0])) from None
    return load_spec(args.spec)


def _protograph(spec, L=None, lam=None) -> GldpcProtograph:
    """Resolve the protograph to analyse from a spec and length flags."""
    if isinstance(spec, GldpcProtograph):
        if L or lam:
            raise SpecError("--L/--lam need a coupled ensemble spec")
        return spec
    if L is not None and lam is not None:
        raise SpecError("--L and --lam are mutually exclusive")
    if L is not None:
        return spec.terminate(L)
    if lam is not None:
        return spec.tailbite(lam)
    if spec.mode == "terminated" and spec.length:
        return spec.terminate(spec.length)
    if spec.mode == "tailbiting" and spec.length:
        return spec.tailbite(spec.length)
    return spec.block()


def _single(values, name):
    if values is None:
        return None
    if len(values) != 1:
        raise SpecError(f"{name} takes a single value for this command")
    return values[0]


def _check_eps(values):
    for e in values or []:
        if not 0.0 <= e <= 1.0:
            raise SpecError(f"epsilon {e} outside [0, 1]")


# ---------------------------------------------------------------- commands

def cmd_construct(args, spec, out: Path):
    Ls = args.L or [None]
    rows = []
    for L in Ls:
        p = _protograph(spec, L, args.lam)
        g = lift(p, args.M[0] if args.M else 4, args.seed)
        rep = verify(g)
        r = design_rate(p)
        rows.append((L if L is not None else 0, p.n_c, p.n_v, p.delta, float(r), str(r), int(rep.ok)))
        print(f"L={L if L is not None else '-'} rows={p.n_c} cols={p.n_v} delta={p.delta} "
              f"rate={r} ({float(r):.6f}) lift-check={'clean' if rep.ok else 'VIOLATIONS'}")
        if not rep.ok:
            print(rep, file=sys.stderr)
    emit_csv(["L", "n_c", "n_v", "delta", "rate", "rate_exact", "lift_ok"], rows, out / "construct.csv")
    return 0 if all(r[-1] for r in rows) else 1


def cmd_threshold(args, spec, out: Path):
    rows = []
    Ls = args.L or [None]
    for L in Ls:
        p = _protograph(spec, L, args.lam)
        th = de.bp_threshold(p, tol=args.tol, policy=args.policy)
        rows.append((L if L is not None else 0, float(design_rate(p)), th))
        print(f"L={L if L is not None else '-'} rate={float(design_rate(p)):.6f} eps_bp={th:.6f}", flush=True)
    emit_csv(["L", "rate", "eps_bp"], rows, out / "threshold.csv")
    return 0


def cmd_exit(args, spec, out: Path):
    p = _protograph(spec, _single(args.L, "--L"), args.lam)
    grid = args.eps_grid or np.linspace(0.0, 1.0, 201).tolist()
    _check_eps(grid)
    curve = de.bp_exit_curve(p, grid, policy=args.policy)
    emit_csv(["epsilon", "h_bp"], zip(curve.epsilon, curve.h_bp), out / "exit.csv")
    try:
        bound = de.map_threshold_bound(curve)
    except ValueError as exc:
        print(f"no MAP bound: {exc}", file=sys.stderr)
        bound = float("nan")
    emit_csv(["rate", "eps_map_bound"], [(float(curve.rate), bound)], out / "map_bound.csv")
    print(f"eps_map_bound={bound:.6f}")
    return 0


def cmd_shape(args, spec, out: Path):
    grid = args.delta_grid or np.arange(0.01, 0.5, 0.01).tolist()
    if args.T:
        if not isinstance(spec, CouplingSpec):
            raise SpecError("free-distance bounds need a coupled ensemble")
        rows = []
        for T in args.T:
            b = ss.free_distance_bounds(spec, T, n_starts=args.starts, seed=args.seed)
            rows.append((T, b.lower, b.upper))
            print(f"T={T} lower={b.lower:.6f} upper={b.upper:.6f}", flush=True)
        emit_csv(["T", "lower", "upper"], rows, out / "free_distance.csv")
        return 0
    p = _protograph(spec, _single(args.L, "--L"), args.lam)
    curve = ss.spectral_shape(p, grid, n_starts=args.starts, seed=args.seed)
    emit_csv(["delta", "r"], curve.samples, out / "shape.csv")
    dmin = curve.delta_min
    emit_csv(["delta_min", "asymptotically_good"],
             [(float("nan") if dmin is None else dmin, curve.asymptotically_good)],
             out / "growth_rate.csv")
    print(f"delta_min={dmin}")
    return 0


def cmd_simulate(args, spec, out: Path):
    p = _protograph(spec, _single(args.L, "--L"), args.lam)
    eps_list = (args.eps or []) + (args.eps_grid or [])
    if not eps_list:
        raise SpecError("simulate needs --eps or --eps-grid")
    _check_eps(eps_list)
    if not args.M:
        raise SpecError("simulate needs --M")
    rows = []
    for M in args.M:
        for eps in eps_list:
            est = ps.monte_carlo(p, M, eps, args.trials, args.seed,
                                 keep_trajectories=args.trajectories, workers=args.workers,
                                 policy=args.policy, fixed_graph=args.fixed_graph)
            rows.append((M, eps, est.trials, est.failures, est.bler, est.ci_low, est.ci_high))
            print(f"M={M} eps={eps:.6g} bler={est.bler:.6g} [{est.ci_low:.3g}, {est.ci_high:.3g}]",
                  flush=True)
            tag = f"M{M}_eps{eps:.6g}"
            emit_csv(["trial", "outcome"],
                     ((k, ps.FAILURE if f else ps.SUCCESS) for k, f in enumerate(est.outcomes)),
                     out / f"outcomes_{tag}.csv")
            if args.trajectories:
                s = M * ge.unit_scale(p, args.per)
                for k, rec in enumerate(est.trajectories):
                    emit_csv(["tau", "a", "v"],
                             zip(rec.iteration / s, rec.decodable / s, rec.erased / s),
                             out / f"traj_{tag}" / f"trial{k:05d}.csv")
    emit_csv(["M", "epsilon", "trials", "failures", "bler", "ci_low", "ci_high"], rows,
             out / "bler.csv")
    return 0


def cmd_evolve(args, spec, out: Path):
    p = _protograph(spec, _single(args.L, "--L"), args.lam)
    eps_list = (args.eps or []) + (args.eps_grid or [])
    _check_eps(eps_list)
    crit = []
    for eps in eps_list:
        c = ge.evolve(p, eps, per=args.per, policy=args.policy)
        emit_csv(["tau", "v", "a"], zip(c.tau, c.v, c.a), out / f"evolve_eps{eps:.6g}.csv")
        k = c.critical_index()
        crit.append((eps, int(c.success), c.tau[k], c.v[k], c.a[k]))
        print(f"eps={eps:.6g} success={c.success} tau*={c.tau[k]:.6g} v*={c.v[k]:.6g} a*={c.a[k]:.6g}")
    if crit:
        emit_csv(["epsilon", "success", "tau_star", "v_star", "a_star"], crit, out / "critical.csv")
    if args.threshold:
        if args.extrapolate:
            th = ge.extrapolated_threshold(p, args.extrapolate, policy=args.policy)
        else:
            th = ge.gpd_threshold(p, tol=args.tol, policy=args.policy)
        emit_csv(["eps_star"], [(th,)], out / "gpd_threshold.csv")
        print(f"eps_star={th:.6f}")
    return 0


def _read_trajectories(directory: Path):
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise SpecError(f"no trajectory CSV files in {directory}")
    out = []
    for f in files:
        d = read_csv(f)
        out.append((d["tau"], d["a"]))
    return out


def cmd_fit(args, spec, out: Path):
    if args.traj_dir is None:
        raise SpecError("fit needs --traj-dir")
    eps = _single(args.eps, "--eps")
    if eps is None or args.eps_star is None or not args.M:
        raise SpecError("fit needs --eps, --eps-star and --M")
    trajs = _read_trajectories(Path(args.traj_dir))
    p = _protograph(spec, _single(args.L, "--L"), args.lam)
    c = ge.evolve(p, eps, per=args.per, policy=args.policy)
    M = args.M[0]
    # coupled fits use sqrt(M) in place of sqrt(n)
    n = M * p.n_v if args.per == ge.PER_VARIABLE else M
    window = tuple(args.window) if args.window is not None else None
    if window is not None or args.per != ge.PER_VARIABLE:
        f = sl.fit_critical_phase(trajs, c.tau, c.a, n, eps, args.eps_star, window)
        window = window or sl.flat_phase(c.tau, c.a)
        tau_star = 0.5 * (window[0] + window[1])
        extra = [("theta", f.theta), ("window_low", window[0]), ("window_high", window[1])]
    else:
        k = c.critical_index()
        tau_star = float(c.tau[k])
        f = sl.fit_critical_point(trajs, tau_star, float(c.a[k]), n, eps, args.eps_star)
        extra = []
    rows = [("alpha", f.alpha), ("tau_star", tau_star), ("a_crit", f.a_crit),
            ("variance", f.variance)] + extra
    emit_csv(["parameter", "value"], rows, out / "fit.csv")
    for name, v in rows:
        print(f"{name}={v:.6g}")
    return 0


def cmd_predict(args, spec, out: Path):
    grid = (args.eps or []) + (args.eps_grid or [])
    _check_eps(grid)
    if args.alpha is None or args.eps_star is None or not args.M:
        raise SpecError("predict needs --alpha, --eps-star and --M")
    sim = {}
    if args.sim is not None:
        d = read_csv(args.sim)
        for M, e, b, lo, hi in zip(d["M"], d["epsilon"], d["bler"], d["ci_low"], d["ci_high"]):
            sim[(int(M), round(float(e), 9))] = (b, lo, hi)
    L = _single(args.L, "--L")
    rows = []
    for M in args.M:
        for e in grid:
            if L is not None:
                if args.theta is None:
                    raise SpecError("coupled prediction needs --theta")
                pred = float(sl.predict_bler_sc(M, L, e, args.eps_star, args.alpha, args.theta))
            else:
                n = args.n if args.n is not None else M * _protograph(spec).n_v
                pred = float(sl.predict_bler_block(n, e, args.eps_star, args.alpha))
            b, lo, hi = sim.get((M, round(e, 9)), (float("nan"),) * 3)
            rows.append((M, e, pred, b, lo, hi))
    emit_csv(["M", "epsilon", "predicted", "simulated", "ci_low", "ci_high"], rows, out / "predict.csv")
    for r in rows:
        print(" ".join(_fmt(x) for x in r))
    return 0


COMMANDS = {
    "construct": cmd_construct, "threshold": cmd_threshold, "exit": cmd_exit,
    "shape": cmd_shape, "simulate": cmd_simulate, "evolve": cmd_evolve,
    "fit": cmd_fit, "predict": cmd_predict,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scgldpc", description="GLDPC / SC-GLDPC ensemble analysis")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("ensemble")
    src.add_argument("--spec", help="JSON ensemble spec")
    src.add_argument("--builtin", help=f"built-in ensemble ({', '.join(BUILTINS)})")
    src.add_argument("--L", type=_int_list, help="coupling length(s) of the terminated ensemble")
    src.add_argument("--lam", type=int, help="tail-biting length")
    common.add_argument("--eps", type=_float_list, help="channel erasure probability list")
    common.add_argument("--eps-grid", type=_float_list, help="start:stop:count or list")
    common.add_argument("--M", type=_int_list, help="lifting factor(s)")
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--tol", type=float, default=1e-4)
    common.add_argument("--policy", choices=(FULL_ML, BITWISE_MAP), default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--per", choices=ge.PER_CHOICES, default=ge.PER_VARIABLE,
                        help="normalize counts and time per variable node (n), per copy (M)"
                             " or per spatial position (pos)")
    common.add_argument("-v", "--verbose", action="store_true")
    for name, helptext in (("construct", "build, verify and report rates"),
                           ("threshold", "BP thresholds by density evolution"),
                           ("exit", "BP EXIT curve and MAP bound"),
                           ("shape", "spectral shape, growth rate, free-distance bounds"),
                           ("simulate", "Monte Carlo peeling decoder"),
                           ("evolve", "mean evolution, critical points, threshold"),
                           ("fit", "alpha and theta from trajectories"),
                           ("predict", "scaling-law block error predictions")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if name == "shape":
            sp.add_argument("--delta-grid", type=_float_list)
            sp.add_argument("--T", type=_int_list, help="periods for free-distance bounds")
            sp.add_argument("--starts", type=int, default=ss.DEFAULT_STARTS)
        if name == "simulate":
            sp.add_argument("--trajectories", action="store_true")
            sp.add_argument("--fixed-graph", action="store_true")
        if name == "evolve":
            sp.add_argument("--threshold", action="store_true")
            sp.add_argument("--extrapolate", type=_float_list, default=None,
                            help="channel values below threshold; extrapolate the critical "
                                 "value to zero instead of bisecting")
        if name == "fit":
            sp.add_argument("--traj-dir")
            sp.add_argument("--eps-star", type=float)
            sp.add_argument("--window", type=float, nargs=2)
        if name == "predict":
            sp.add_argument("--alpha", type=float)
            sp.add_argument("--theta", type=float)
            sp.add_argument("--eps-star", type=float)
            sp.add_argument("--n", type=int, help="block length override")
            sp.add_argument("--sim", help="bler.csv from simulate to merge")
    return ap


def _validate(args):
    if args.trials < 1:
        raise SpecError("--trials must be >= 1")
    if args.tol <= 0:
        raise SpecError("--tol must be positive")
    if args.workers < 1:
        raise SpecError("--workers must be >= 1")
    for M in args.M or []:
        if M < 1:
            raise SpecError("--M must be >= 1")
    for L in args.L or []:
        if L < 1:
            raise SpecError("--L must be >= 1")
    _check_eps(args.eps)
    _check_eps(args.eps_grid)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.policy is None:
        args.policy = FULL_ML if args.command in ("simulate", "evolve", "fit") else BITWISE_MAP
    try:
        _validate(args)
        spec = None if args.command == "predict" and args.spec is None and args.builtin is None \
            else _load_ensemble(args)
        if args.command == "predict" and spec is None and args.L is None and args.n is None:
            raise SpecError("block prediction needs an ensemble or --n")
        if args.command == "shape" and isinstance(spec, CouplingSpec):
            span = max([*(args.L or []), *(args.T or []), args.lam or 0])
            if span > ss.DESK_LIMIT:
                print(f"warning: spectral problem over {span} positions exceeds the desk-scale "
                      f"limit {ss.DESK_LIMIT}; expect long runtimes", file=sys.stderr)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        status = COMMANDS[args.command](args, spec, out)
        write_manifest(out, args.command, {k: v for k, v in vars(args).items() if k != "command"}, spec)
        return status
    except (SpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
