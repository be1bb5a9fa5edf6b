"""Benchmark problems, exact steady solutions and error metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegeneratePhi
from .grid import (BoundaryCache, DirichletBoundary, FieldPair, Grid2D,
                   apply_dirichlet, build_grid)

PROBE_POINTS = ((0.1, 0.1), (0.2, 0.8), (0.4, 0.4), (0.7, 0.1), (0.9, 0.9))


@dataclass(frozen=True)
class Case1Params:
    a0: float
    a1: float
    k: float
    Re: float

    def __post_init__(self):
        if self.Re <= 0 or self.k <= 0:
            raise ValueError("Re and k must be positive")

    @property
    def nu(self) -> float:
        return 1.0 / self.Re


CASE1 = {
    "1a": Case1Params(110.13, 110.13, 5.0, 10.0),
    "1b": Case1Params(1.2962e13, 1.2962e13, 25.0, 50.0),
    "1c": Case1Params(0.011013, 0.011013, 5.0, 10.0),
}


def exact_steady(x, y, p: Case1Params):
    """Cole-Hopf steady state ``(u_s, v_s)``.

    phi, phi_1, phi_2 are all divided by the dominant exponential
    ``exp(|k (x - 1)|)`` before forming the ratios.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = p.k * (x - 1.0)
    m = np.abs(s)
    ep = np.exp(s - m)      # e^{k(x-1)} / E
    em = np.exp(-s - m)     # e^{-k(x-1)} / E
    lin = np.exp(-m)
    cy, sy = np.cos(p.k * y), np.sin(p.k * y)
    phi = (p.a0 + p.a1 * x) * lin + (ep + em) * cy
    phi1 = p.a1 * lin + p.k * (ep - em) * cy
    phi2 = -p.k * (ep + em) * sy
    if np.any(np.abs(phi) < 1e-300):
        raise DegeneratePhi("phi vanishes in the steady solution")
    scale = -2.0 / p.Re
    u = scale * phi1 / phi
    v = scale * phi2 / phi
    if u.ndim == 0:
        return float(u), float(v)
    return u, v


@dataclass
class ProblemCase:
    label: str
    grid: Grid2D
    nu: float
    bc: DirichletBoundary
    initial: Callable[[Grid2D], FieldPair]
    exact: Optional[Callable] = None   # (x, y) -> (u, v)

    def initial_fields(self) -> FieldPair:
        return self.initial(self.grid)

    def exact_fields(self) -> FieldPair:
        if self.exact is None:
            raise ValueError(f"{self.label} has no exact solution")
        X, Y = self.grid.mesh()
        u, v = self.exact(X, Y)
        return FieldPair(np.asarray(u, float), np.asarray(v, float))


def case1_problem(which: str, N: int, M: int) -> ProblemCase:
    key = which.removeprefix("case")
    if key not in CASE1:
        raise ValueError(f"unknown case-1 variant {which!r}")
    p = CASE1[key]
    grid = build_grid(-1.0, 1.0, N, 0.0, np.pi / (6.0 * p.k), M)

    def ex(x, y):
        return exact_steady(x, y, p)

    def edge(comp, fixed_x=None, fixed_y=None):
        k = 0 if comp == "u" else 1
        if fixed_x is not None:
            return lambda y: ex(np.full_like(np.asarray(y, float), fixed_x), y)[k]
        return lambda x: ex(x, np.full_like(np.asarray(x, float), fixed_y))[k]

    bc = DirichletBoundary(
        u1=edge("u", fixed_x=grid.x0), u2=edge("u", fixed_x=grid.xN),
        u3=edge("u", fixed_y=grid.y0), u4=edge("u", fixed_y=grid.yM),
        v1=edge("v", fixed_x=grid.x0), v2=edge("v", fixed_x=grid.xN),
        v3=edge("v", fixed_y=grid.y0), v4=edge("v", fixed_y=grid.yM),
    )

    def initial(g: Grid2D) -> FieldPair:
        X, Y = g.mesh()
        u, v = ex(X, Y)
        return FieldPair(u, v, 0.0)

    return ProblemCase(f"case{key}", grid, p.nu, bc, initial, ex)


def case1_alternative_initial(problem: ProblemCase) -> FieldPair:
    """``u = 1``, ``v = y / y_M`` inside, edges from the case-1 profiles."""
    g = problem.grid
    _, Y = g.mesh()
    f = FieldPair(np.ones(g.shape), Y / g.yM, 0.0)
    return apply_dirichlet(f, problem.bc, g)


def case2_problem(N: int, M: int, Re: float = 1.0) -> ProblemCase:
    if Re <= 0:
        raise ValueError("Re must be positive")
    grid = build_grid(0.0, 1.0, N, 0.0, 1.0, M)

    def initial(g: Grid2D) -> FieldPair:
        X, Y = g.mesh()
        u = np.sin(np.pi * X) * np.sin(np.pi * Y)
        v = ((np.sin(np.pi * X) + np.sin(2 * np.pi * X))
             * (np.sin(np.pi * Y) + np.sin(2 * np.pi * Y)))
        f = FieldPair(u, v, 0.0)
        BoundaryCache(DirichletBoundary(), g).impose(f.u, f.v)
        return f

    return ProblemCase("case2", grid, 1.0 / Re, DirichletBoundary(), initial)


@dataclass(frozen=True)
class ErrorNorms:
    E_u: float
    E_v: float


def error_norms(numeric: FieldPair, exact, grid: Grid2D) -> ErrorNorms:
    """Mean absolute deviation over ``i = 1..N``, ``j = 1..M``.

    ``exact`` is either a :class:`FieldPair` on the same grid or a callable
    ``(x, y) -> (u, v)``.
    """
    numeric.check_shape(grid)
    if isinstance(exact, FieldPair):
        ue, ve = exact.u, exact.v
    else:
        X, Y = grid.mesh()
        ue, ve = exact(X, Y)
    nm = grid.N * grid.M
    eu = np.abs(numeric.u[1:, 1:] - np.asarray(ue)[1:, 1:]).sum() / nm
    ev = np.abs(numeric.v[1:, 1:] - np.asarray(ve)[1:, 1:]).sum() / nm
    return ErrorNorms(float(eu), float(ev))


def observed_order(e_coarse: float, e_fine: float, ratio: float) -> float:
    if e_coarse <= 0 or e_fine <= 0:
        raise ValueError("errors must be positive")
    if ratio <= 1:
        raise ValueError("refinement ratio must exceed 1")
    return float(np.log(e_coarse / e_fine) / np.log(ratio))


def sample_point(values: np.ndarray, grid: Grid2D, x: float, y: float) -> float:
    """Bilinear interpolation of a nodal field at ``(x, y)``."""
    fx = (x - grid.x0) / grid.dx
    fy = (y - grid.y0) / grid.dy
    i = int(np.clip(np.floor(fx + 1e-9), 0, grid.N - 1))
    j = int(np.clip(np.floor(fy + 1e-9), 0, grid.M - 1))
    tx, ty = fx - i, fy - j
    if abs(tx) < 1e-9:
        tx = 0.0
    if abs(ty) < 1e-9:
        ty = 0.0
    return float((1 - tx) * (1 - ty) * values[i, j] + tx * (1 - ty) * values[i + 1, j]
                 + (1 - tx) * ty * values[i, j + 1] + tx * ty * values[i + 1, j + 1])


def restrict(fine: np.ndarray, coarse: Grid2D, fine_grid: Grid2D) -> np.ndarray:
    """Inject a fine-grid nodal field onto a nested coarse grid."""
    rx, ry = fine_grid.N // coarse.N, fine_grid.M // coarse.M
    if rx * coarse.N != fine_grid.N or ry * coarse.M != fine_grid.M:
        raise ValueError("grids are not nested")
    return fine[::rx, ::ry]
