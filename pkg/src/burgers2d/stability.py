"""Von Neumann analysis of the fourth-order Du Fort Frankel scheme."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dufort_frankel import dff_coefficients

DEFAULT_N_THETA = 129


@dataclass(frozen=True)
class PhaseAngles:
    theta_x: float
    theta_y: float

    def __post_init__(self):
        for th in (self.theta_x, self.theta_y):
            if not (0.0 <= th <= np.pi + 1e-15):
                raise ValueError(f"phase angle {th} outside [0, pi]")


@dataclass(frozen=True)
class AmplificationResult:
    lam: complex
    zeta_plus: complex
    zeta_minus: complex
    chi: float
    A: float


def compute_lambda(c_x, c_y, d_x, d_y, theta_x, theta_y):
    """Sum of the explicit-stencil symbols divided by ``Q``.

    Vectorises over array phases.
    """
    Q = 1.0 + 2.5 * d_x + 2.5 * d_y
    re = ((16 * np.cos(theta_x) - np.cos(2 * theta_x)) * d_x
          + (16 * np.cos(theta_y) - np.cos(2 * theta_y)) * d_y)
    im = ((-8 * np.sin(theta_x) + np.sin(2 * theta_x)) * c_x
          + (-8 * np.sin(theta_y) + np.sin(2 * theta_y)) * c_y)
    return (re + 1j * im) / (3 * Q)


def _roots(lam, A):
    s = np.sqrt(lam * lam + 4 * A + 0j)
    return 0.5 * (lam + s), 0.5 * (lam - s)


def chi(c, d, theta_x, theta_y):
    """Larger root modulus of ``zeta^2 - lambda zeta - A = 0``."""
    A = dff_coefficients(c, c, d, d).A
    zp, zm = _roots(compute_lambda(c, c, d, d, theta_x, theta_y), A)
    return np.maximum(np.abs(zp), np.abs(zm))


def amplification(c: float, d: float, phases: PhaseAngles) -> AmplificationResult:
    if d < 0:
        raise ValueError("d must be non-negative")
    A = float(dff_coefficients(c, c, d, d).A)
    lam = complex(compute_lambda(c, c, d, d, phases.theta_x, phases.theta_y))
    zp, zm = _roots(lam, A)
    return AmplificationResult(lam, complex(zp), complex(zm),
                               float(max(abs(zp), abs(zm))), A)


def phase_grid(n_theta: int) -> np.ndarray:
    if n_theta < 2:
        raise ValueError("n_theta must be >= 2")
    return np.pi * np.arange(n_theta) / (n_theta - 1)


def max_chi_over_phases(c: float, d: float, n_theta: int = DEFAULT_N_THETA) -> float:
    th = phase_grid(n_theta)
    tx, ty = np.meshgrid(th, th, indexing="ij")
    return float(chi(c, d, tx, ty).max())


def stability_map(c_values: Sequence[float], d_values: Sequence[float],
                  n_theta: int = DEFAULT_N_THETA) -> list[tuple[float, float, float]]:
    """Rows ``(c, d, max_chi)``, c outer, d inner."""
    c_values, d_values = list(c_values), list(d_values)
    if not c_values or not d_values:
        raise ValueError("c_values and d_values must be non-empty")
    return [(float(c), float(d), max_chi_over_phases(c, d, n_theta))
            for c in c_values for d in d_values]


def write_stability_csv(rows: Iterable[tuple[float, float, float]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c", "d", "max_chi"])
        for c, d, m in rows:
            w.writerow([f"{c:.17e}", f"{d:.17e}", f"{m:.17e}"])
