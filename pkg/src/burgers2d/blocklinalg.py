"""Block-tridiagonal solver for 4x4 blocks (block Thomas / block LU).

All routines accept leading batch dimensions so that every line of an ADI
sweep is eliminated in one vectorised pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularBlock

PIVOT_RTOL = 1e-14


def _as_real(x) -> np.ndarray:
    # keeps extended precision when given
    x = np.asarray(x)
    return x if np.issubdtype(x.dtype, np.floating) else x.astype(float)


def _dense_solve(m: np.ndarray, rhs: np.ndarray, index=None) -> np.ndarray:
    """Gaussian elimination with row partial pivoting on stacked systems.

    ``m`` has shape ``(..., n, n)`` and ``rhs`` shape ``(..., n, k)``.
    """
    dt = np.result_type(m, rhs, np.float64)
    a = np.array(m, dtype=dt, copy=True)
    b = np.array(rhs, dtype=dt, copy=True)
    n = a.shape[-1]
    scale = np.abs(a).max(axis=(-2, -1))
    bidx = np.indices(a.shape[:-2])
    for col in range(n):
        piv = col + np.argmax(np.abs(a[..., col:, col]), axis=-1)
        # swap rows col <-> piv
        rows_a = a[(*bidx, piv)].copy()
        a[(*bidx, piv)] = a[..., col, :]
        a[..., col, :] = rows_a
        rows_b = b[(*bidx, piv)].copy()
        b[(*bidx, piv)] = b[..., col, :]
        b[..., col, :] = rows_b
        p = a[..., col, col]
        bad = ~((np.abs(p) >= PIVOT_RTOL * scale) & (np.abs(p) > 0))
        if np.any(bad):
            raise SingularBlock(
                f"pivot {col} below {PIVOT_RTOL:g} x block magnitude", index=index
            )
        if col + 1 < n:
            f = a[..., col + 1:, col] / p[..., None]
            a[..., col + 1:, :] -= f[..., :, None] * a[..., None, col, :]
            b[..., col + 1:, :] -= f[..., :, None] * b[..., None, col, :]
    x = np.empty_like(b)
    for row in range(n - 1, -1, -1):
        acc = b[..., row, :].copy()
        if row + 1 < n:
            acc -= np.einsum("...j,...jk->...k", a[..., row, row + 1:], x[..., row + 1:, :])
        x[..., row, :] = acc / a[..., row, row][..., None]
    return x


def dense4_solve(m, rhs) -> np.ndarray:
    """Solve ``m @ x = rhs`` for one (or a stack of) 4x4 block(s).

    Raises :class:`SingularBlock` when a pivot falls below ``1e-14`` times the
    largest entry of the block.
    """
    m = _as_real(m)
    rhs = _as_real(rhs)
    if m.shape[-2:] != (4, 4):
        raise ValueError(f"expected 4x4 block(s), got {m.shape}")
    vec = rhs.ndim == m.ndim - 1
    r = rhs[..., None] if vec else rhs
    x = _dense_solve(m, r)
    return x[..., 0] if vec else x


@dataclass
class BlockTridiagSystem:
    """``a[i] d[i-1] + b[i] d[i] + c[i] d[i+1] = r[i]`` for ``i = 0..K-1``.

    ``a[0]`` and ``c[K-1]`` are ignored. Shapes: blocks ``(..., K, 4, 4)``,
    right-hand side ``(..., K, 4)``.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        self.a = _as_real(self.a)
        self.b = _as_real(self.b)
        self.c = _as_real(self.c)
        self.r = _as_real(self.r)
        K = self.b.shape[-3] if self.b.ndim >= 3 else 0
        if K < 1 or self.a.shape != self.b.shape or self.c.shape != self.b.shape:
            raise ValueError("a, b, c must share shape (..., K, 4, 4) with K >= 1")
        if self.r.shape != self.b.shape[:-1]:
            raise ValueError(f"r must have shape {self.b.shape[:-1]}, got {self.r.shape}")

    @property
    def K(self) -> int:
        return self.b.shape[-3]

    def matvec(self, d: np.ndarray) -> np.ndarray:
        out = np.einsum("...ij,...j->...i", self.b, d)
        out[..., 1:, :] += np.einsum("...ij,...j->...i", self.a[..., 1:, :, :], d[..., :-1, :])
        out[..., :-1, :] += np.einsum("...ij,...j->...i", self.c[..., :-1, :, :], d[..., 1:, :])
        return out

    def to_dense(self) -> np.ndarray:
        """Assemble the full ``4K x 4K`` matrix (unbatched systems only)."""
        if self.b.ndim != 3:
            raise ValueError("to_dense supports a single system")
        K = self.K
        A = np.zeros((4 * K, 4 * K))
        for i in range(K):
            s = slice(4 * i, 4 * i + 4)
            A[s, s] = self.b[i]
            if i > 0:
                A[s, 4 * (i - 1):4 * i] = self.a[i]
            if i < K - 1:
                A[s, 4 * (i + 1):4 * (i + 2)] = self.c[i]
        return A


def solve_block_tridiag(sys: BlockTridiagSystem) -> np.ndarray:
    """Block Thomas elimination; returns ``d`` with the shape of ``sys.r``.

    No pivoting across block rows. A failing Schur-complement pivot raises
    :class:`SingularBlock` carrying its row index.
    """
    a, b, c, r = sys.a, sys.b, sys.c, sys.r
    K = sys.K
    # gamma[i] = beta_i^{-1} c_i, y[i] = beta_i^{-1}(r_i - a_i y_{i-1})
    gamma = np.empty_like(c)
    y = np.empty_like(r)
    rhs = np.concatenate([c[..., 0, :, :], r[..., 0, :, None]], axis=-1)
    sol = _dense_solve(b[..., 0, :, :], rhs, index=0)
    gamma[..., 0, :, :] = sol[..., :4]
    y[..., 0, :] = sol[..., 4]
    for i in range(1, K):
        ai = a[..., i, :, :]
        beta = b[..., i, :, :] - ai @ gamma[..., i - 1, :, :]
        ri = r[..., i, :] - np.einsum("...ij,...j->...i", ai, y[..., i - 1, :])
        rhs = np.concatenate([c[..., i, :, :], ri[..., None]], axis=-1)
        sol = _dense_solve(beta, rhs, index=i)
        gamma[..., i, :, :] = sol[..., :4]
        y[..., i, :] = sol[..., 4]
    d = np.empty_like(r)
    d[..., K - 1, :] = y[..., K - 1, :]
    for i in range(K - 2, -1, -1):
        d[..., i, :] = y[..., i, :] - np.einsum(
            "...ij,...j->...i", gamma[..., i, :, :], d[..., i + 1, :]
        )
    return d
