"""Uniform node lattice, field storage and Dirichlet data."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

import numpy as np

MIN_CELLS = 4
CORNER_TOL = 1e-12

Profile = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Grid2D:
    """Node-centred rectangular lattice with ``(N+1) x (M+1)`` nodes.

    Arrays on the grid are indexed ``[i, j]`` with ``i`` along x.
    """

    x0: float
    xN: float
    N: int
    y0: float
    yM: float
    M: int

    @property
    def dx(self) -> float:
        return (self.xN - self.x0) / self.N

    @property
    def dy(self) -> float:
        return (self.yM - self.y0) / self.M

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N + 1, self.M + 1)

    @property
    def x(self) -> np.ndarray:
        # multiplicative, so node i is exactly x0 + i*dx
        return self.x0 + np.arange(self.N + 1) * self.dx

    @property
    def y(self) -> np.ndarray:
        return self.y0 + np.arange(self.M + 1) * self.dy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")


def build_grid(x0, xN, N, y0, yM, M) -> Grid2D:
    """Validate extents and cell counts and return the lattice."""
    if int(N) != N or int(M) != M:
        raise ValueError("cell counts must be integers")
    N, M = int(N), int(M)
    if N < MIN_CELLS or M < MIN_CELLS:
        raise ValueError(
            f"need at least {MIN_CELLS} cells per direction for the "
            f"five-point stencils, got N={N}, M={M}"
        )
    if not (np.isfinite(x0) and np.isfinite(xN) and xN > x0):
        raise ValueError(f"degenerate x extent [{x0}, {xN}]")
    if not (np.isfinite(y0) and np.isfinite(yM) and yM > y0):
        raise ValueError(f"degenerate y extent [{y0}, {yM}]")
    return Grid2D(float(x0), float(xN), N, float(y0), float(yM), M)


@dataclass
class FieldPair:
    """Velocity components ``u``, ``v`` at time ``t``."""

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def copy(self) -> "FieldPair":
        return FieldPair(self.u.copy(), self.v.copy(), self.t)

    def check_shape(self, grid: Grid2D) -> None:
        if self.u.shape != grid.shape or self.v.shape != grid.shape:
            raise ValueError(
                f"field shapes {self.u.shape}/{self.v.shape} do not match "
                f"grid {grid.shape}"
            )

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.u).all() and np.isfinite(self.v).all())


def _zero(s):
    return np.zeros_like(np.asarray(s, dtype=float))


@dataclass(frozen=True)
class DirichletBoundary:
    """Time-independent edge profiles.

    ``u1``/``u2`` live on x = x0 / x = xN as functions of y, ``u3``/``u4`` on
    y = y0 / y = yM as functions of x; same for ``v``.
    """

    u1: Profile = _zero
    u2: Profile = _zero
    u3: Profile = _zero
    u4: Profile = _zero
    v1: Profile = _zero
    v2: Profile = _zero
    v3: Profile = _zero
    v4: Profile = _zero

    def check_corners(self, grid: Grid2D, tol: float = CORNER_TOL) -> None:
        """Profiles meeting at a corner must agree there."""
        for comp in ("u", "v"):
            p = [getattr(self, f"{comp}{k}") for k in range(1, 5)]
            pairs = [
                (p[0], grid.y0, p[2], grid.x0),
                (p[0], grid.yM, p[3], grid.x0),
                (p[1], grid.y0, p[2], grid.xN),
                (p[1], grid.yM, p[3], grid.xN),
            ]
            for fy, y, fx, x in pairs:
                a = float(np.asarray(fy(np.array([y])))[0])
                b = float(np.asarray(fx(np.array([x])))[0])
                if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
                    raise ValueError(
                        f"inconsistent {comp} corner data at ({x}, {y}): {a} vs {b}"
                    )

    def edge_values(self, grid: Grid2D) -> dict[str, np.ndarray]:
        x, y = grid.x, grid.y
        out = {}
        for comp in ("u", "v"):
            out[comp + "1"] = np.asarray(getattr(self, comp + "1")(y), dtype=float)
            out[comp + "2"] = np.asarray(getattr(self, comp + "2")(y), dtype=float)
            out[comp + "3"] = np.asarray(getattr(self, comp + "3")(x), dtype=float)
            out[comp + "4"] = np.asarray(getattr(self, comp + "4")(x), dtype=float)
        return out


def _impose(arr, e1, e2, e3, e4):
    arr[0, :] = e1
    arr[-1, :] = e2
    # x-edge profiles written last so they own the corners
    arr[:, 0] = e3
    arr[:, -1] = e4


class BoundaryCache:
    """Edge values of a :class:`DirichletBoundary` sampled once on a grid."""

    def __init__(self, bc: DirichletBoundary, grid: Grid2D):
        bc.check_corners(grid)
        self.grid = grid
        self.values = bc.edge_values(grid)

    def impose(self, u: np.ndarray, v: np.ndarray) -> None:
        ev = self.values
        _impose(u, ev["u1"], ev["u2"], ev["u3"], ev["u4"])
        _impose(v, ev["v1"], ev["v2"], ev["v3"], ev["v4"])


def apply_dirichlet(fields: FieldPair, bc: DirichletBoundary | BoundaryCache,
                    grid: Grid2D) -> FieldPair:
    """Return a copy of ``fields`` with all edge nodes set from ``bc``."""
    fields.check_shape(grid)
    cache = bc if isinstance(bc, BoundaryCache) else BoundaryCache(bc, grid)
    out = fields.copy()
    cache.impose(out.u, out.v)
    return out


class AlphaConvention(str, Enum):
    """Time increment each ADI sweep advances: ``dt`` or ``dt/2``."""

    FULL_STEP = "FULL_STEP"
    HALF_STEP = "HALF_STEP"


@dataclass(frozen=True)
class RunParams:
    nu: float
    dt: float
    t_end: float = 0.1
    newton_tol: float = 1e-10
    newton_max_iters: int = 25
    alpha_convention: AlphaConvention = AlphaConvention.HALF_STEP
    fx_mode: str = "pde"
    threads: int = 1

    def __post_init__(self):
        for name in ("nu", "dt", "t_end", "newton_tol"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive, got {val}")
        if int(self.newton_max_iters) < 1:
            raise ValueError("newton_max_iters must be a positive integer")
        object.__setattr__(self, "alpha_convention",
                           AlphaConvention(self.alpha_convention))
        if int(self.threads) < 1:
            raise ValueError("threads must be >= 1")
        if self.fx_mode not in ("pde", "fd4"):
            raise ValueError(f"unknown fx_mode {self.fx_mode!r}")

    @property
    def sweep_dt(self) -> float:
        if self.alpha_convention is AlphaConvention.HALF_STEP:
            return 0.5 * self.dt
        return self.dt

    @property
    def alpha(self) -> float:
        return 1.0 / self.sweep_dt

    def with_(self, **kw) -> "RunParams":
        return replace(self, **kw)


def local_coefficients(u_ij, v_ij, params: RunParams, grid: Grid2D):
    """Local Courant numbers and diffusion numbers ``(c_x, c_y, d_x, d_y)``.

    Works elementwise on arrays as well as scalars.
    """
    dt = params.dt
    c_x = np.asarray(u_ij) * dt / grid.dx
    c_y = np.asarray(v_ij) * dt / grid.dy
    d_x = params.nu * dt / grid.dx**2
    d_y = params.nu * dt / grid.dy**2
    if np.ndim(c_x) == 0:
        return float(c_x), float(c_y), d_x, d_y
    return c_x, c_y, d_x, d_y
