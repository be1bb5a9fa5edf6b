"""Explicit fourth-order Du Fort Frankel scheme.

Three-level update built from Kreiss fourth-order convection and diffusion
stencils, with the centre diffusion node averaged over levels n-1 and n+1.
Nodes one layer in from the boundary use the classical second-order Du Fort
Frankel stencil so no fictitious nodes are needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFinite
from .grid import BoundaryCache, DirichletBoundary, FieldPair, Grid2D, RunParams

BLOWUP = 1e10


@dataclass(frozen=True)
class DffCoefficients:
    A: np.ndarray | float
    B: np.ndarray | float
    C: np.ndarray | float
    D: np.ndarray | float
    E: np.ndarray | float
    F: np.ndarray | float
    G: np.ndarray | float
    H: np.ndarray | float
    L: np.ndarray | float
    Q: np.ndarray | float

    def total(self):
        return (self.A + self.B + self.C + self.D + self.E
                + self.F + self.G + self.H + self.L)


def dff_coefficients(c_x, c_y, d_x, d_y) -> DffCoefficients:
    """Per-node update weights; arguments may be scalars or arrays."""
    if np.any(np.asarray(d_x) < 0) or np.any(np.asarray(d_y) < 0):
        raise ValueError("diffusion numbers must be non-negative")
    Q = 1.0 + 2.5 * d_x + 2.5 * d_y
    s = 6.0 * Q
    return DffCoefficients(
        A=(1.0 - 2.5 * d_x - 2.5 * d_y) / Q,
        B=(c_x - d_x) / s,
        C=(-8.0 * c_x + 16.0 * d_x) / s,
        D=(8.0 * c_x + 16.0 * d_x) / s,
        E=-(c_x + d_x) / s,
        F=(c_y - d_y) / s,
        G=(-8.0 * c_y + 16.0 * d_y) / s,
        H=(8.0 * c_y + 16.0 * d_y) / s,
        L=-(c_y + d_y) / s,
        Q=Q,
    )


def _check(arr_u, arr_v, step=None):
    for a in (arr_u, arr_v):
        if not np.isfinite(a).all() or np.abs(a).max() > BLOWUP:
            raise NonFinite("Du Fort Frankel update blew up", step=step)


def _courant(curr: FieldPair, params: RunParams, grid: Grid2D):
    cx = curr.u * params.dt / grid.dx
    cy = curr.v * params.dt / grid.dy
    dx = params.nu * params.dt / grid.dx**2
    dy = params.nu * params.dt / grid.dy**2
    return cx, cy, dx, dy


def _near_boundary_mask(grid: Grid2D) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    N, M = grid.N, grid.M
    mask[1:N, 1:M] = True
    mask[2:N - 1, 2:M - 1] = False
    return mask


def _update(prev: np.ndarray, curr: np.ndarray, cx, cy, dx, dy, grid: Grid2D):
    """Interior values of one component at level n+1 (boundary left zero)."""
    N, M = grid.N, grid.M
    out = np.zeros_like(curr)

    i4, j4 = slice(2, N - 1), slice(2, M - 1)
    k = dff_coefficients(cx[i4, j4], cy[i4, j4], dx, dy)
    p = curr
    out[i4, j4] = (
        k.A * prev[i4, j4]
        + k.B * p[4:N + 1, 2:M - 1] + k.C * p[3:N, 2:M - 1]
        + k.D * p[1:N - 2, 2:M - 1] + k.E * p[0:N - 3, 2:M - 1]
        + k.F * p[2:N - 1, 4:M + 1] + k.G * p[2:N - 1, 3:M]
        + k.H * p[2:N - 1, 1:M - 2] + k.L * p[2:N - 1, 0:M - 3]
    )

    mask = _near_boundary_mask(grid)
    ii, jj = np.nonzero(mask)
    c1, c2 = cx[ii, jj], cy[ii, jj]
    q = 1.0 + 2.0 * dx + 2.0 * dy
    out[ii, jj] = (
        (1.0 - 2.0 * dx - 2.0 * dy) * prev[ii, jj]
        + (2.0 * dx - c1) * p[ii + 1, jj] + (2.0 * dx + c1) * p[ii - 1, jj]
        + (2.0 * dy - c2) * p[ii, jj + 1] + (2.0 * dy + c2) * p[ii, jj - 1]
    ) / q
    return out


def dff_step(prev: FieldPair, curr: FieldPair, params: RunParams, grid: Grid2D,
             bc: DirichletBoundary | BoundaryCache) -> FieldPair:
    """Advance from levels (n-1, n) to n+1."""
    prev.check_shape(grid)
    curr.check_shape(grid)
    cache = bc if isinstance(bc, BoundaryCache) else BoundaryCache(bc, grid)
    cx, cy, dx, dy = _courant(curr, params, grid)
    u = _update(prev.u, curr.u, cx, cy, dx, dy, grid)
    v = _update(prev.v, curr.v, cx, cy, dx, dy, grid)
    cache.impose(u, v)
    _check(u, v)
    return FieldPair(u, v, curr.t + params.dt)


def _spatial_operator(p: np.ndarray, cu, cv, nu, grid: Grid2D):
    """Explicit right-hand side -u p_x - v p_y + nu (p_xx + p_yy)."""
    N, M = grid.N, grid.M
    hx, hy = grid.dx, grid.dy
    out = np.zeros_like(p)
    i4, j4 = slice(2, N - 1), slice(2, M - 1)
    px = (-p[4:, j4] + 8 * p[3:N, j4] - 8 * p[1:N - 2, j4] + p[0:N - 3, j4]) / (12 * hx)
    pxx = (-p[4:, j4] + 16 * p[3:N, j4] - 30 * p[i4, j4] + 16 * p[1:N - 2, j4]
           - p[0:N - 3, j4]) / (12 * hx**2)
    py = (-p[i4, 4:] + 8 * p[i4, 3:M] - 8 * p[i4, 1:M - 2] + p[i4, 0:M - 3]) / (12 * hy)
    pyy = (-p[i4, 4:] + 16 * p[i4, 3:M] - 30 * p[i4, j4] + 16 * p[i4, 1:M - 2]
           - p[i4, 0:M - 3]) / (12 * hy**2)
    out[i4, j4] = -cu[i4, j4] * px - cv[i4, j4] * py + nu * (pxx + pyy)

    ii, jj = np.nonzero(_near_boundary_mask(grid))
    px = (p[ii + 1, jj] - p[ii - 1, jj]) / (2 * hx)
    py = (p[ii, jj + 1] - p[ii, jj - 1]) / (2 * hy)
    pxx = (p[ii + 1, jj] - 2 * p[ii, jj] + p[ii - 1, jj]) / hx**2
    pyy = (p[ii, jj + 1] - 2 * p[ii, jj] + p[ii, jj - 1]) / hy**2
    out[ii, jj] = -cu[ii, jj] * px - cv[ii, jj] * py + nu * (pxx + pyy)
    return out


def dff_bootstrap(initial: FieldPair, params: RunParams, grid: Grid2D,
                  bc: DirichletBoundary | BoundaryCache) -> FieldPair:
    """First level for the three-level scheme: one forward-Euler step."""
    initial.check_shape(grid)
    cache = bc if isinstance(bc, BoundaryCache) else BoundaryCache(bc, grid)
    u0, v0 = initial.u, initial.v
    u = u0 + params.dt * _spatial_operator(u0, u0, v0, params.nu, grid)
    v = v0 + params.dt * _spatial_operator(v0, u0, v0, params.nu, grid)
    cache.impose(u, v)
    _check(u, v)
    return FieldPair(u, v, initial.t + params.dt)


def frozen_step(prev: np.ndarray, curr: np.ndarray, c: float, d: float) -> np.ndarray:
    """Fourth-order update of a periodic scalar field with frozen ``c``, ``d``.

    This is the linear model problem that the amplification analysis
    describes, used to cross-check it in the time domain.
    """
    k = dff_coefficients(c, c, d, d)
    r = np.roll
    return (k.A * prev
            + k.B * r(curr, -2, 0) + k.C * r(curr, -1, 0)
            + k.D * r(curr, 1, 0) + k.E * r(curr, 2, 0)
            + k.F * r(curr, -2, 1) + k.G * r(curr, -1, 1)
            + k.H * r(curr, 1, 1) + k.L * r(curr, 2, 1))


class DuFortFrankelSolver:
    """Time-marching driver: bootstrap once, then three-level steps."""

    def __init__(self, params: RunParams, grid: Grid2D,
                 bc: DirichletBoundary | BoundaryCache):
        self.params = params
        self.grid = grid
        self.bc = bc if isinstance(bc, BoundaryCache) else BoundaryCache(bc, grid)
        self.steps = 0

    def run(self, initial: FieldPair, t_end=None, callback=None) -> FieldPair:
        t_end = self.params.t_end if t_end is None else t_end
        n_steps = int(round((t_end - initial.t) / self.params.dt))
        prev = initial
        if n_steps <= 0:
            return initial
        try:
            curr = dff_bootstrap(initial, self.params, self.grid, self.bc)
            self.steps = 1
            if callback is not None:
                callback(curr)
            for _ in range(1, n_steps):
                prev, curr = curr, dff_step(prev, curr, self.params, self.grid, self.bc)
                self.steps += 1
                if callback is not None:
                    callback(curr)
        except NonFinite as exc:
            exc.step = self.steps + 1
            raise
        return curr
