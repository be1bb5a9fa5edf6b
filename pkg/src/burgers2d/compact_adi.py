"""Two-point compact ADI scheme for the coupled Burgers' equations.

Each sweep treats one direction implicitly.  Along every grid line the
unknowns per node are ``z = [U, V, P, R]``: the two velocities and their
line-direction first derivatives.  The line direction's flux vector ``Q`` and
its first two derivatives are expressed through ``z`` (derivatives via the
PDE itself), the two-point Pade relation is imposed on every interval, and
the resulting nonlinear system is solved by Newton's method on a
block-tridiagonal Jacobian.

For the x-sweep the "self" velocity is ``u`` (flux ``nu u_x - u^2/2``) and
the "other" is ``v``.  The y-sweep is the same line problem with the two
roles exchanged, so one implementation serves both directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocklinalg import BlockTridiagSystem, _as_real, solve_block_tridiag
from .errors import NewtonDiverged
from .grid import BoundaryCache, DirichletBoundary, FieldPair, Grid2D, RunParams


@dataclass(frozen=True)
class OneStepParams:
    """Free parameters of the one-step interval relation.

    ``a = 0, b = 1/3`` is the fourth-order second-diagonal Pade member.
    """

    a: float = 0.0
    b: float = 1.0 / 3.0

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("a must be >= 0")


PADE = OneStepParams()


# -- finite differences -----------------------------------------------------

_LEFT0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
_LEFT1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])


def fd4_line_derivative(values, h: float, axis: int = -1) -> np.ndarray:
    """Fourth-order first derivative along ``axis``.

    Centred five-point formula inside, one-sided five-point formulas on the
    first and last two nodes.
    """
    f = np.moveaxis(_as_real(values), axis, -1)
    n = f.shape[-1]
    if n < 5:
        raise ValueError(f"need at least 5 nodes, got {n}")
    d = np.empty_like(f)
    d[..., 2:-2] = (-f[..., 4:] + 8 * f[..., 3:-1] - 8 * f[..., 1:-3] + f[..., :-4])
    d[..., 0] = f[..., :5] @ _LEFT0
    d[..., 1] = f[..., :5] @ _LEFT1
    d[..., -1] = -(f[..., -1:-6:-1] @ _LEFT0)
    d[..., -2] = -(f[..., -1:-6:-1] @ _LEFT1)
    return np.moveaxis(d / (12.0 * h), -1, axis)


def _line_sources(a, b, nu, h, axis):
    """``((nu a' - a^2/2)', (nu b' - a b)' + b a')`` along ``axis``."""
    da = fd4_line_derivative(a, h, axis)
    db = fd4_line_derivative(b, h, axis)
    sa = fd4_line_derivative(nu * da - 0.5 * a * a, h, axis)
    sb = fd4_line_derivative(nu * db - a * b, h, axis) + b * da
    return sa, sb


@dataclass
class SourceField:
    """Cross-direction terms held explicit during a sweep.

    For the x-sweep ``s1, s2`` are ``g1, g2`` and ``d1, d2`` their
    x-derivatives; for the y-sweep they are ``f1, f2`` and y-derivatives.
    """

    s1: np.ndarray
    s2: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


def compute_g_sources(fields: FieldPair, params: RunParams, grid: Grid2D) -> SourceField:
    """y-direction operator at level n, differentiated along x as well."""
    g2, g1 = _line_sources(fields.v, fields.u, params.nu, grid.dy, axis=1)
    return SourceField(g1, g2,
                       fd4_line_derivative(g1, grid.dx, axis=0),
                       fd4_line_derivative(g2, grid.dx, axis=0))


def compute_f_sources(fields: FieldPair, params: RunParams, grid: Grid2D) -> SourceField:
    """x-direction operator at level n+1/2, differentiated along y as well."""
    f1, f2 = _line_sources(fields.u, fields.v, params.nu, grid.dx, axis=0)
    return SourceField(f1, f2,
                       fd4_line_derivative(f1, grid.dy, axis=1),
                       fd4_line_derivative(f2, grid.dy, axis=1))


def init_derivative_fields(fields: FieldPair, grid: Grid2D) -> dict[str, np.ndarray]:
    return {
        "u_x": fd4_line_derivative(fields.u, grid.dx, axis=0),
        "v_x": fd4_line_derivative(fields.v, grid.dx, axis=0),
        "u_y": fd4_line_derivative(fields.u, grid.dy, axis=1),
        "v_y": fd4_line_derivative(fields.v, grid.dy, axis=1),
    }


# -- line problem -------------------------------------------------------------

@dataclass
class LineProblem:
    """Frozen data for a batch of lines, arrays shaped ``(L, K+1)``.

    ``a0, b0`` are the self/other velocities at the previous level and
    ``p0, q0`` their line derivatives; ``s1, s2, d1, d2`` the explicit sources.
    """

    a0: np.ndarray
    b0: np.ndarray
    p0: np.ndarray
    q0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    h: float
    alpha: float
    nu: float
    one_step: OneStepParams = PADE
    fx_mode: str = "pde"
    bc_left: np.ndarray | None = None   # (L, 2) self/other values at node 0
    bc_right: np.ndarray | None = None  # (L, 2) at node K

    def __post_init__(self):
        if self.bc_left is None:
            self.bc_left = np.stack([self.a0[..., 0], self.b0[..., 0]], axis=-1)
        if self.bc_right is None:
            self.bc_right = np.stack([self.a0[..., -1], self.b0[..., -1]], axis=-1)

    def initial_guess(self) -> np.ndarray:
        z = np.stack([self.a0, self.b0, self.p0, self.q0], axis=-1).copy()
        z[..., 0, :2] = self.bc_left
        z[..., -1, :2] = self.bc_right
        return z


@dataclass
class SweepState:
    """Per-node unknowns ``z[..., i, :] = [U, V, P, R]`` along lines."""

    z: np.ndarray
    direction: str = "x"

    @property
    def U(self):
        return self.z[..., 0]

    @property
    def V(self):
        return self.z[..., 1]

    @property
    def P(self):
        return self.z[..., 2]

    @property
    def R(self):
        return self.z[..., 3]


def _px(z, prob: LineProblem, W):
    if prob.fx_mode == "pde":
        return W / prob.nu
    return fd4_line_derivative(z[..., 2], prob.h, axis=-1)


def q_triple(z: np.ndarray, prob: LineProblem, px=None):
    """``Q``, ``Q_x``, ``Q_xx`` at every node, each shaped ``(..., 4)``.

    ``px`` overrides the derivative of ``P`` used in ``Q_xx``; by default
    it follows ``prob.fx_mode``.
    """
    U, V, P, R = (z[..., k] for k in range(4))
    al, nu = prob.alpha, prob.nu
    W = al * (U - prob.a0) + U * P - prob.s1
    if px is None:
        px = _px(z, prob, W)
    Q = np.stack([nu * P - 0.5 * U * U, nu * R - U * V, nu * U, nu * V], axis=-1)
    Qx = np.stack([
        al * (U - prob.a0) - prob.s1,
        al * (V - prob.b0) - V * P - prob.s2,
        nu * P,
        nu * R,
    ], axis=-1)
    Qxx = np.stack([
        al * (P - prob.p0) - prob.d1,
        al * (R - prob.q0) - V * px - P * R - prob.d2,
        W,
        al * (V - prob.b0) + U * R - prob.s2,
    ], axis=-1)
    return Q, Qx, Qxx


def _q_jacobians(z, prob: LineProblem):
    U, V, P, R = (z[..., k] for k in range(4))
    al, nu = prob.alpha, prob.nu
    shape = U.shape + (4, 4)
    JQ = np.zeros(shape, dtype=z.dtype)
    JQ[..., 0, 0] = -U
    JQ[..., 0, 2] = nu
    JQ[..., 1, 0] = -V
    JQ[..., 1, 1] = -U
    JQ[..., 1, 3] = nu
    JQ[..., 2, 0] = nu
    JQ[..., 3, 1] = nu

    JQx = np.zeros(shape, dtype=z.dtype)
    JQx[..., 0, 0] = al
    JQx[..., 1, 1] = al - P
    JQx[..., 1, 2] = -V
    JQx[..., 2, 2] = nu
    JQx[..., 3, 3] = nu

    JQxx = np.zeros(shape, dtype=z.dtype)
    JQxx[..., 0, 2] = al
    if prob.fx_mode == "pde":
        W = al * (U - prob.a0) + U * P - prob.s1
        JQxx[..., 1, 0] = -V * (al + P) / nu
        JQxx[..., 1, 1] = -W / nu
        JQxx[..., 1, 2] = -V * U / nu - R
    else:
        # P_x frozen at the current iterate
        JQxx[..., 1, 1] = -fd4_line_derivative(P, prob.h, axis=-1)
        JQxx[..., 1, 2] = -R
    JQxx[..., 1, 3] = al - P
    JQxx[..., 2, 0] = al + P
    JQxx[..., 2, 2] = U
    JQxx[..., 3, 0] = R
    JQxx[..., 3, 1] = al
    JQxx[..., 3, 3] = U
    return JQ, JQx, JQxx


def pade_residual(qL, qR, h: float, one_step: OneStepParams = PADE):
    """Interval relation between node triples ``qL = (Q, Qx, Qxx)`` and ``qR``.

    Vanishes identically on polynomials of degree <= 4 for the Pade member.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    a, b = one_step.a, one_step.b
    QL, QxL, QxxL = (_as_real(q) for q in qL)
    QR, QxR, QxxR = (_as_real(q) for q in qR)
    return ((QR - QL)
            - 0.5 * h * ((1 + a) * QxR + (1 - a) * QxL)
            + 0.25 * h * h * ((b + a) * QxxR - (b - a) * QxxL))


def line_residual(z: np.ndarray, prob: LineProblem) -> np.ndarray:
    """All interval relations, shape ``(..., K, 4)``."""
    Q, Qx, Qxx = q_triple(z, prob)
    return pade_residual((Q[..., :-1, :], Qx[..., :-1, :], Qxx[..., :-1, :]),
                         (Q[..., 1:, :], Qx[..., 1:, :], Qxx[..., 1:, :]),
                         prob.h, prob.one_step)


# Equations of interval m: components 2, 3 close block row m, components
# 0, 1 close block row m+1.  The end rows carry the Dirichlet constraints.
_FIRST = [2, 3]
_SECOND = [0, 1]


def _block_rhs(z, prob, res):
    K1 = z.shape[-2]
    r = np.empty(z.shape[:-2] + (K1, 4), dtype=z.dtype)
    r[..., 0, :2] = -(z[..., 0, :2] - prob.bc_left)
    r[..., 0, 2:] = -res[..., 0, _FIRST]
    r[..., 1:-1, :2] = -res[..., :-1, _SECOND]
    r[..., 1:-1, 2:] = -res[..., 1:, _FIRST]
    r[..., -1, :2] = -res[..., -1, _SECOND]
    r[..., -1, 2:] = -(z[..., -1, :2] - prob.bc_right)
    return r


def assemble_newton_system(z: np.ndarray, prob: LineProblem,
                           res: np.ndarray | None = None) -> BlockTridiagSystem:
    """Newton system ``J delta = -residual`` in block-tridiagonal form.

    Block row ``i`` couples nodes ``i-1, i, i+1`` and is ordered
    ``[interval i-1 comps 0,1 | interval i comps 2,3]``; rows ``0`` and ``K``
    replace the missing half with ``delta U = delta V = 0``.
    """
    if res is None:
        res = line_residual(z, prob)
    a_, b_ = prob.one_step.a, prob.one_step.b
    h = prob.h
    JQ, JQx, JQxx = _q_jacobians(z, prob)
    # d(interval residual)/d(right node) and /d(left node)
    Jr = JQ - 0.5 * h * (1 + a_) * JQx + 0.25 * h * h * (b_ + a_) * JQxx
    Jl = -JQ - 0.5 * h * (1 - a_) * JQx - 0.25 * h * h * (b_ - a_) * JQxx

    shape = z.shape[:-1] + (4, 4)
    A = np.zeros(shape, dtype=z.dtype)
    B = np.zeros(shape, dtype=z.dtype)
    C = np.zeros(shape, dtype=z.dtype)
    # rows 2,3 of block i <- interval i (nodes i, i+1), i = 0..K-1
    B[..., :-1, 2:, :] = Jl[..., :-1, _FIRST, :]
    C[..., :-1, 2:, :] = Jr[..., 1:, _FIRST, :]
    # rows 0,1 of block i <- interval i-1 (nodes i-1, i), i = 1..K
    A[..., 1:, :2, :] = Jl[..., :-1, _SECOND, :]
    B[..., 1:, :2, :] = Jr[..., 1:, _SECOND, :]
    # Dirichlet rows
    B[..., 0, 0, 0] = B[..., 0, 1, 1] = 1.0
    B[..., -1, 2, 0] = B[..., -1, 3, 1] = 1.0
    return BlockTridiagSystem(A, B, C, _block_rhs(z, prob, res))


@dataclass
class NewtonReport:
    iterations: np.ndarray          # per line
    residual_history: list = field(default_factory=list)  # max |res| per iteration, per line
    delta_history: list = field(default_factory=list)

    @property
    def max_iterations(self) -> int:
        return int(self.iterations.max()) if self.iterations.size else 0


def solve_lines(prob: LineProblem, tol: float = 1e-10, max_iters: int = 25,
                z0: np.ndarray | None = None):
    """Newton iteration on a batch of lines; returns ``(z, NewtonReport)``."""
    z = prob.initial_guess() if z0 is None else np.array(z0)
    L = z.shape[0]
    iters = np.zeros(L, dtype=int)
    active = np.ones(L, dtype=bool)
    report = NewtonReport(iters)
    for it in range(max_iters + 1):
        res = line_residual(z, prob)
        rnorm = np.abs(res).reshape(L, -1).max(axis=1)
        report.residual_history.append(rnorm)
        if it == 0:
            # exact fixed point: nothing to do
            active &= rnorm > 0.0
        if not active.any() or it == max_iters:
            break
        idx = np.nonzero(active)[0]
        sub = _subset(prob, idx)
        system = assemble_newton_system(z[idx], sub, res[idx])
        delta = solve_block_tridiag(system)
        z[idx] += delta
        iters[idx] += 1
        dnorm = np.zeros(L)
        dnorm[idx] = np.abs(delta).reshape(len(idx), -1).max(axis=1)
        report.delta_history.append(dnorm)
        done = dnorm[idx] <= tol
        active[idx[done]] = False
        if not np.isfinite(z).all():
            bad = int(np.nonzero(~np.isfinite(z).reshape(L, -1).all(axis=1))[0][0])
            raise NewtonDiverged("non-finite Newton iterate", line=bad,
                                 residual=float("nan"))
    if active.any():
        bad = int(np.nonzero(active)[0][0])
        raise NewtonDiverged(
            f"Newton did not reach {tol:g} in {max_iters} iterations",
            line=bad, residual=float(report.residual_history[-1][bad]))
    return z, report


def _subset(prob: LineProblem, idx) -> LineProblem:
    return LineProblem(
        prob.a0[idx], prob.b0[idx], prob.p0[idx], prob.q0[idx],
        prob.s1[idx], prob.s2[idx], prob.d1[idx], prob.d2[idx],
        prob.h, prob.alpha, prob.nu, prob.one_step, prob.fx_mode,
        prob.bc_left[idx], prob.bc_right[idx])


def _solve_parallel(prob: LineProblem, params: RunParams):
    L = prob.a0.shape[0]
    n = min(int(params.threads), L)
    if n <= 1:
        return solve_lines(prob, params.newton_tol, params.newton_max_iters)
    from concurrent.futures import ThreadPoolExecutor

    chunks = np.array_split(np.arange(L), n)
    with ThreadPoolExecutor(max_workers=n) as pool:
        parts = list(pool.map(
            lambda idx: solve_lines(_subset(prob, idx), params.newton_tol,
                                    params.newton_max_iters), chunks))
    z = np.concatenate([p[0] for p in parts], axis=0)
    iters = np.concatenate([p[1].iterations for p in parts])
    report = NewtonReport(iters)
    depth = max(len(p[1].residual_history) for p in parts)
    for k in range(depth):
        report.residual_history.append(np.concatenate([
            p[1].residual_history[min(k, len(p[1].residual_history) - 1)]
            for p in parts]))
    return z, report


# -- sweeps -----------------------------------------------------------------

@dataclass
class SweepResult:
    fields: FieldPair
    p: np.ndarray      # line derivative of the self velocity (F or T)
    q: np.ndarray      # line derivative of the other velocity (G or H)
    report: NewtonReport


def _sweep(self_vel, other_vel, src: SourceField, self_src, h, axis,
           params: RunParams, one_step: OneStepParams, d_self=None, d_other=None):
    """Solve every interior line along ``axis``; arrays are ``[i, j]``."""
    # move the line axis last and drop the boundary lines
    def lines(arr):
        a = np.moveaxis(arr, axis, -1)
        return a[1:-1]

    if d_self is None:
        d_self = fd4_line_derivative(self_vel, h, axis)
    if d_other is None:
        d_other = fd4_line_derivative(other_vel, h, axis)
    s1, s2, d1, d2 = ((src.s1, src.s2, src.d1, src.d2) if self_src == 1
                      else (src.s2, src.s1, src.d2, src.d1))
    prob = LineProblem(
        lines(self_vel), lines(other_vel), lines(d_self), lines(d_other),
        lines(s1), lines(s2), lines(d1), lines(d2),
        h=h, alpha=params.alpha, nu=params.nu, one_step=one_step,
        fx_mode=params.fx_mode)
    z, report = _solve_parallel(prob, params)

    def back(sol, like):
        out = np.moveaxis(like.copy(), axis, -1)
        out[1:-1] = sol
        return np.moveaxis(out, -1, axis)

    return (back(z[..., 0], self_vel), back(z[..., 1], other_vel),
            back(z[..., 2], d_self), back(z[..., 3], d_other), report)


def x_sweep(fields: FieldPair, params: RunParams, grid: Grid2D,
            bc: DirichletBoundary | BoundaryCache,
            one_step: OneStepParams = PADE) -> SweepResult:
    """Implicit in x, y-terms from level n; returns level n+1/2 with F, G."""
    cache = bc if isinstance(bc, BoundaryCache) else BoundaryCache(bc, grid)
    src = compute_g_sources(fields, params, grid)
    u, v, F, G, rep = _sweep(fields.u, fields.v, src, 1, grid.dx, 0, params, one_step)
    cache.impose(u, v)
    return SweepResult(FieldPair(u, v, fields.t + params.sweep_dt), F, G, rep)


def y_sweep(fields: FieldPair, params: RunParams, grid: Grid2D,
            bc: DirichletBoundary | BoundaryCache,
            one_step: OneStepParams = PADE) -> SweepResult:
    """Implicit in y, x-terms from level n+1/2; returns level n+1 with T, H.

    ``p`` holds ``v_y`` (self velocity is ``v``) and ``q`` holds ``u_y``.
    """
    cache = bc if isinstance(bc, BoundaryCache) else BoundaryCache(bc, grid)
    src = compute_f_sources(fields, params, grid)
    v, u, T, H, rep = _sweep(fields.v, fields.u, src, 2, grid.dy, 1, params, one_step)
    cache.impose(u, v)
    return SweepResult(FieldPair(u, v, fields.t + params.sweep_dt), T, H, rep)


@dataclass
class StepResult:
    fields: FieldPair
    x_report: NewtonReport
    y_report: NewtonReport

    @property
    def newton_iters(self) -> int:
        return max(self.x_report.max_iterations, self.y_report.max_iterations)


def full_step(fields: FieldPair, params: RunParams, grid: Grid2D,
              bc: DirichletBoundary | BoundaryCache,
              one_step: OneStepParams = PADE) -> StepResult:
    cache = bc if isinstance(bc, BoundaryCache) else BoundaryCache(bc, grid)
    xs = x_sweep(fields, params, grid, cache, one_step)
    ys = y_sweep(xs.fields, params, grid, cache, one_step)
    out = ys.fields
    out.t = fields.t + params.dt
    return StepResult(out, xs.report, ys.report)


class CompactADISolver:
    """Time-marching driver collecting Newton statistics per step."""

    def __init__(self, params: RunParams, grid: Grid2D,
                 bc: DirichletBoundary | BoundaryCache,
                 one_step: OneStepParams = PADE):
        if params.nu <= 0:
            raise ValueError("nu must be positive")
        self.params = params
        self.grid = grid
        self.bc = bc if isinstance(bc, BoundaryCache) else BoundaryCache(bc, grid)
        self.one_step = one_step
        self.newton_iters: list[int] = []
        self.steps = 0

    def step(self, fields: FieldPair) -> StepResult:
        res = full_step(fields, self.params, self.grid, self.bc, self.one_step)
        self.newton_iters.append(res.newton_iters)
        self.steps += 1
        return res

    def run(self, initial: FieldPair, t_end=None, callback=None) -> FieldPair:
        t_end = self.params.t_end if t_end is None else t_end
        n_steps = int(round((t_end - initial.t) / self.params.dt))
        f = initial.copy()
        for _ in range(n_steps):
            f = self.step(f).fields
            if callback is not None:
                callback(f)
        return f
