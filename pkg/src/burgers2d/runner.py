"""Run orchestration behind the command line: solve, stability, convergence, compare."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .compact_adi import CompactADISolver
from .config import RunConfig
from .dufort_frankel import DuFortFrankelSolver
from .errors import NewtonDiverged, NonFinite, SingularBlock
from .grid import BoundaryCache, DirichletBoundary, FieldPair, RunParams, build_grid
from .problems import (PROBE_POINTS, ProblemCase, case1_alternative_initial,
                       case1_problem, case2_problem, error_norms, observed_order,
                       restrict, sample_point)
from .stability import stability_map

log = logging.getLogger(__name__)

TIMING_NOTE = "host wall-clock; not comparable to published timings"
_EXPR_NS = {name: getattr(np, name) for name in (
    "sin", "cos", "tan", "exp", "sqrt", "tanh", "sinh", "cosh", "abs", "pi")}


@dataclass
class RunSummary:
    status: str = "completed"
    steps: int = 0
    E_u: Optional[float] = None
    E_v: Optional[float] = None
    newton_iters_min: Optional[int] = None
    newton_iters_mean: Optional[float] = None
    newton_iters_max: Optional[int] = None
    wall_seconds: float = 0.0
    failed_step: Optional[int] = None
    message: str = ""
    timing_note: str = TIMING_NOTE
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "completed"


def thread_count(cfg: RunConfig) -> int:
    env = os.environ.get("BURGERS2D_THREADS")
    n = cfg.threads
    if env:
        try:
            n = min(n, int(env)) if cfg.threads > 1 else 1
        except ValueError:
            log.warning("ignoring non-integer BURGERS2D_THREADS=%r", env)
    return max(1, n)


def _custom_problem(cfg: RunConfig, N: int, M: int) -> ProblemCase:
    x0, xN, y0, yM = cfg.domain
    grid = build_grid(x0, xN, N, y0, yM, M)

    def ev(expr, x, y):
        out = eval(expr, {"__builtins__": {}}, {**_EXPR_NS, "x": x, "y": y})  # noqa: S307
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).copy()

    def prof(expr, fixed_x=None, fixed_y=None):
        if fixed_x is not None:
            return lambda y: ev(expr, np.full_like(np.asarray(y, float), fixed_x), y)
        return lambda x: ev(expr, x, np.full_like(np.asarray(x, float), fixed_y))

    eu, evv = cfg.initial_u, cfg.initial_v
    bc = DirichletBoundary(
        u1=prof(eu, fixed_x=x0), u2=prof(eu, fixed_x=xN),
        u3=prof(eu, fixed_y=y0), u4=prof(eu, fixed_y=yM),
        v1=prof(evv, fixed_x=x0), v2=prof(evv, fixed_x=xN),
        v3=prof(evv, fixed_y=y0), v4=prof(evv, fixed_y=yM))

    def initial(g):
        X, Y = g.mesh()
        return FieldPair(ev(eu, X, Y), ev(evv, X, Y), 0.0)

    return ProblemCase("custom", grid, 1.0 / cfg.Re, bc, initial)


def make_problem(cfg: RunConfig, N: int, M: int) -> ProblemCase:
    if cfg.problem == "case2":
        return case2_problem(N, M, cfg.Re)
    if cfg.problem == "custom":
        return _custom_problem(cfg, N, M)
    return case1_problem(cfg.problem, N, M)


def make_params(cfg: RunConfig, problem: ProblemCase, dt=None) -> RunParams:
    return RunParams(nu=problem.nu, dt=cfg.dt if dt is None else dt, t_end=cfg.t_end,
                     newton_tol=cfg.newton_tol, newton_max_iters=cfg.newton_max_iters,
                     alpha_convention=cfg.alpha_convention, fx_mode=cfg.fx_mode,
                     threads=thread_count(cfg))


def _initial(cfg: RunConfig, problem: ProblemCase) -> FieldPair:
    if cfg.initial == "alternative":
        return case1_alternative_initial(problem)
    return problem.initial_fields()


# -- output helpers ----------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def fields_csv(fields: FieldPair, grid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "u", "v"])
    x, y = grid.x, grid.y
    for j in range(grid.M + 1):
        for i in range(grid.N + 1):
            w.writerow([f"{x[i]:.17e}", f"{y[j]:.17e}",
                        f"{fields.u[i, j]:.17e}", f"{fields.v[i, j]:.17e}"])
    return buf.getvalue()


def snapshot_name(prefix: str, t: float) -> str:
    return f"{prefix}_t{t:g}.csv"


# -- time marching -----------------------------------------------------------

@dataclass
class Trajectory:
    fields: FieldPair
    summary: RunSummary
    snapshots: dict


def integrate(cfg: RunConfig, problem: ProblemCase, scheme: str, dt: float,
              snapshot_times=()) -> Trajectory:
    """March ``problem`` to ``cfg.t_end``; scheme failures become a status."""
    params = make_params(cfg, problem, dt)
    grid = problem.grid
    bc = BoundaryCache(problem.bc, grid)
    f0 = _initial(cfg, problem)
    n_steps = int(round(cfg.t_end / dt))
    summ = RunSummary()
    wanted = {int(round(t / dt)): t for t in snapshot_times}
    snaps = {}
    if 0 in wanted:
        snaps[wanted[0]] = f0.copy()
    state = {"k": 0, "last": f0}

    def cb(f):
        state["k"] += 1
        k = state["k"]
        if k in wanted:
            snaps[wanted[k]] = f.copy()
        if cfg.steady_tol is not None:
            rate = max(np.abs(f.u - state["last"].u).max(),
                       np.abs(f.v - state["last"].v).max()) / dt
            if rate < cfg.steady_tol:
                raise _Steady()
        state["last"] = f

    t0 = time.perf_counter()
    final = f0
    solver = None
    try:
        if scheme == "compact_adi":
            solver = CompactADISolver(params, grid, bc)
        else:
            solver = DuFortFrankelSolver(params, grid, bc)
        final = solver.run(f0, t_end=n_steps * dt, callback=cb)
    except _Steady:
        final = state["last"]
        summ.message = f"steady state reached at step {state['k']}"
    except NonFinite as exc:
        summ.status, summ.failed_step, summ.message = "diverged", state["k"] + 1, str(exc)
    except NewtonDiverged as exc:
        summ.status, summ.failed_step = "diverged", state["k"] + 1
        summ.message = f"{exc} (line {exc.line})"
    except SingularBlock as exc:
        summ.status, summ.failed_step = "singular", state["k"] + 1
        summ.message = f"{exc} (block {exc.index})"
    summ.wall_seconds = time.perf_counter() - t0
    summ.steps = state["k"]
    if isinstance(solver, CompactADISolver) and solver.newton_iters:
        it = np.asarray(solver.newton_iters)
        summ.newton_iters_min = int(it.min())
        summ.newton_iters_mean = float(it.mean())
        summ.newton_iters_max = int(it.max())
    if summ.ok and problem.exact is not None:
        e = error_norms(final, problem.exact, grid)
        summ.E_u, summ.E_v = e.E_u, e.E_v
    return Trajectory(final, summ, snaps)


class _Steady(Exception):
    pass


# -- commands ----------------------------------------------------------------

def run_solve(cfg: RunConfig) -> RunSummary:
    problem = make_problem(cfg, cfg.N, cfg.M)
    traj = integrate(cfg, problem, cfg.scheme, cfg.dt, cfg.snapshot_times)
    summ = traj.summary
    out = Path(cfg.out_dir)
    if summ.ok:
        for t in cfg.snapshot_times:
            if t not in traj.snapshots:
                summ.status = "diverged"
                summ.message = f"snapshot at t={t:g} not reached"
                break
    if summ.ok:
        for t in cfg.snapshot_times:
            path = out / snapshot_name(cfg.prefix, t)
            _atomic_write(path, fields_csv(traj.snapshots[t], problem.grid))
            summ.outputs.append(str(path))
    _write_summary(out / "summary.json", summ)
    return summ


def run_stability(cfg: RunConfig) -> RunSummary:
    t0 = time.perf_counter()
    n = thread_count(cfg)
    if n > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(
                lambda c: stability_map([c], cfg.d_values, cfg.n_theta), cfg.c_values))
        rows = [r for p in parts for r in p]
    else:
        rows = stability_map(cfg.c_values, cfg.d_values, cfg.n_theta)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["c", "d", "max_chi"])
    for c, d, m in rows:
        w.writerow([f"{c:.17e}", f"{d:.17e}", f"{m:.17e}"])
    path = Path(cfg.out_dir) / "stability.csv"
    _atomic_write(path, buf.getvalue())
    summ = RunSummary(steps=len(rows), wall_seconds=time.perf_counter() - t0,
                      outputs=[str(path)])
    summ.extra["unstable_rows"] = sum(1 for r in rows if r[2] > 1.0)
    _write_summary(Path(cfg.out_dir) / "summary.json", summ)
    return summ


def run_convergence(cfg: RunConfig) -> RunSummary:
    """Dyadic grid study; errors against the exact solution or a fine run."""
    rows = []
    summ = RunSummary()
    t0 = time.perf_counter()
    ref_fields = ref_grid = None
    base = make_problem(cfg, cfg.grids[0], _m_for(cfg, cfg.grids[0]))
    if base.exact is None:
        n_ref = cfg.reference_N or 4 * max(cfg.grids)
        ref = make_problem(cfg, n_ref, _m_for(cfg, n_ref))
        traj = integrate(cfg, ref, cfg.scheme, cfg.reference_dt or cfg.dt)
        if not traj.summary.ok:
            summ.status, summ.message = traj.summary.status, "reference run failed"
            _write_summary(Path(cfg.out_dir) / "summary.json", summ)
            return summ
        ref_fields, ref_grid = traj.fields, ref.grid
    dt = cfg.dt
    for N in cfg.grids:
        M = _m_for(cfg, N)
        pb = make_problem(cfg, N, M)
        traj = integrate(cfg, pb, cfg.scheme, dt)
        if not traj.summary.ok:
            summ.status, summ.failed_step = traj.summary.status, traj.summary.failed_step
            summ.message = f"grid N={N}: {traj.summary.message}"
            break
        if ref_fields is not None:
            exact = FieldPair(restrict(ref_fields.u, pb.grid, ref_grid),
                              restrict(ref_fields.v, pb.grid, ref_grid))
        else:
            exact = pb.exact
        e = error_norms(traj.fields, exact, pb.grid)
        rows.append({"N": N, "M": M, "dt": dt, "E_u": e.E_u, "E_v": e.E_v})
    for prev, row in zip(rows, rows[1:]):
        ratio = row["N"] / prev["N"]
        for k in ("u", "v"):
            a, b = prev[f"E_{k}"], row[f"E_{k}"]
            row[f"order_{k}"] = observed_order(a, b, ratio) if a > 0 and b > 0 else None
    buf = io.StringIO()
    cols = ["N", "M", "dt", "E_u", "E_v", "order_u", "order_v"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", restval="")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.17e}" if isinstance(v, float) else v) for k, v in r.items()})
    summ.wall_seconds = time.perf_counter() - t0
    summ.steps = len(rows)
    summ.extra["rows"] = rows
    if summ.ok:
        path = Path(cfg.out_dir) / "convergence.csv"
        _atomic_write(path, buf.getvalue())
        summ.outputs.append(str(path))
        summ.E_u, summ.E_v = rows[-1]["E_u"], rows[-1]["E_v"]
    _write_summary(Path(cfg.out_dir) / "summary.json", summ)
    return summ


def _m_for(cfg: RunConfig, N: int) -> int:
    if cfg.M is not None and cfg.N is not None:
        return max(4, int(round(N * cfg.M / cfg.N)))
    return N if cfg.problem in ("case2", "custom") else max(4, N // 2)


def run_compare(cfg: RunConfig) -> RunSummary:
    """Both schemes on one problem; side-by-side norms and probe values."""
    problem = make_problem(cfg, cfg.N, cfg.M)
    probes = cfg.probes
    if probes is None:
        if cfg.problem == "case2":
            probes = list(PROBE_POINTS)
        else:
            g = problem.grid
            ym = 0.5 * (g.y0 + g.yM)
            probes = [(g.x0 + f * (g.xN - g.x0), ym) for f in (0.1, 0.3, 0.5, 0.7, 0.9)]
    runs = {
        "compact_adi": integrate(cfg, problem, "compact_adi", cfg.dt),
        "dufort_frankel": integrate(cfg, problem, "dufort_frankel", cfg.dt_dff or cfg.dt),
    }
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "u_compact_adi", "v_compact_adi",
                "u_dufort_frankel", "v_dufort_frankel"])
    for x, y in probes:
        row = [f"{x:g}", f"{y:g}"]
        for name in ("compact_adi", "dufort_frankel"):
            tr = runs[name]
            if tr.summary.ok:
                row += [f"{sample_point(tr.fields.u, problem.grid, x, y):.17e}",
                        f"{sample_point(tr.fields.v, problem.grid, x, y):.17e}"]
            else:
                row += ["nan", "nan"]
        w.writerow(row)
    ca, df = runs["compact_adi"].summary, runs["dufort_frankel"].summary
    summ = RunSummary(status=ca.status, steps=ca.steps, E_u=ca.E_u, E_v=ca.E_v,
                      newton_iters_min=ca.newton_iters_min,
                      newton_iters_mean=ca.newton_iters_mean,
                      newton_iters_max=ca.newton_iters_max,
                      wall_seconds=ca.wall_seconds + df.wall_seconds,
                      failed_step=ca.failed_step, message=ca.message)
    summ.extra["compact_adi"] = _summary_dict(ca)
    summ.extra["dufort_frankel"] = _summary_dict(df)
    if ca.wall_seconds > 0 and df.ok:
        # recorded only: absolute timings are hardware dependent
        summ.extra["wall_ratio_dff_over_adi"] = df.wall_seconds / ca.wall_seconds
    path = Path(cfg.out_dir) / "compare.csv"
    if summ.ok:
        _atomic_write(path, buf.getvalue())
        summ.outputs.append(str(path))
    _write_summary(Path(cfg.out_dir) / "summary.json", summ)
    return summ


def _summary_dict(s: RunSummary) -> dict:
    d = asdict(s)
    d.pop("extra", None)
    return d


def _write_summary(path: Path, s: RunSummary) -> None:
    d = _summary_dict(s)
    d.update(s.extra)
    _atomic_write(path, json.dumps(d, indent=2, sort_keys=True, default=float) + "\n")


COMMAND_TABLE = {
    "solve": run_solve,
    "stability": run_stability,
    "convergence": run_convergence,
    "compare": run_compare,
}


def run(cfg: RunConfig) -> RunSummary:
    return COMMAND_TABLE[cfg.command](cfg)
