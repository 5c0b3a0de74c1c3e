"""Analytical optimum: interference matrix, feasibility, and p* = (I - B)^-1 u."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .scenario import RadioConstants

SINGULAR_MARGIN = 1e-12


class InfeasibleSystemError(ValueError):
    def __init__(self, spectral_radius: float):
        super().__init__(f"infeasible targets: spectral radius of B is {spectral_radius:.6g} >= 1")
        self.spectral_radius = spectral_radius


class PowerIterationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class InterferenceSystem:
    b: np.ndarray
    u: np.ndarray
    spectral_radius: float
    feasible: bool


@dataclass(frozen=True, eq=False)
class OptimalPower:
    p_star: np.ndarray
    residual: float
    within_bounds: np.ndarray

    @property
    def outage_count(self) -> int:
        return int(np.count_nonzero(~self.within_bounds))


def spectral_radius(b, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Perron root of a nonnegative matrix by power iteration.

    Iterates on B + I, which is primitive whenever B is irreducible, so the
    zero-diagonal periodic case still converges. The Collatz-Wielandt bounds
    min_i (Ax)_i/x_i <= rho(A) <= max_i (Ax)_i/x_i bracket the answer and give
    the stopping test.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("square matrix required")
    if np.any(b < 0):
        raise ValueError("matrix must be nonnegative")
    if not np.any(b):
        return 0.0
    a = b + np.eye(b.shape[0])
    x = np.ones(b.shape[0])
    for _ in range(max_iter):
        y = a @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= tol * hi:
            return float(max(0.5 * (lo + hi) - 1.0, 0.0))
        x = y / np.linalg.norm(y)
        # entries can underflow on reducible inputs; keep the start vector positive
        x = np.maximum(x, np.finfo(float).tiny)
    raise PowerIterationError(f"power iteration did not converge in {max_iter} steps")


def build_system(gains, targets, noise: float) -> InterferenceSystem:
    """B_ij = Gamma_i g_ij / g_ii (i != j), u_i = Gamma_i noise / g_ii."""
    g = np.asarray(getattr(gains, "entries", gains), dtype=float)
    t = np.asarray(getattr(targets, "per_user", targets), dtype=float)
    own = np.diag(g)
    b = t[:, None] * g / own[:, None]
    np.fill_diagonal(b, 0.0)
    u = t * noise / own
    rho = spectral_radius(b)
    return InterferenceSystem(b, u, rho, rho < 1.0)


def solve_optimal(system: InterferenceSystem, radio: RadioConstants) -> OptimalPower:
    """Unconstrained optimum; bound violations are reported, never clamped."""
    if system.spectral_radius >= 1.0 - SINGULAR_MARGIN:
        raise InfeasibleSystemError(system.spectral_radius)
    k = len(system.u)
    p = np.linalg.solve(np.eye(k) - system.b, system.u)
    r = (p - system.b @ p) - system.u
    residual = float(np.max(np.abs(r) / np.abs(system.u)))
    within = (p >= radio.p_min) & (p <= radio.p_max)
    return OptimalPower(p, residual, within)


def fixed_point_solution(system: InterferenceSystem, rtol: float = 1e-14,
                         max_iter: int = 1_000_000) -> np.ndarray:
    """Brute-force p <- B p + u from p = u; independent check on the direct solve."""
    p = system.u.copy()
    for _ in range(max_iter):
        nxt = system.b @ p + system.u
        if np.max(np.abs(nxt - p) / nxt) <= rtol:
            return nxt
        p = nxt
    raise PowerIterationError("fixed-point iteration did not converge")


def dump_csv(path, system: InterferenceSystem, optimum: OptimalPower | None = None) -> None:
    """Rows: ``b_i1..b_iK, u_i, p_i`` per user, then a ``rho`` row."""
    k = len(system.u)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"b_{j + 1}" for j in range(k)] + ["u", "p_star"])
        for i in range(k):
            p = repr(float(optimum.p_star[i])) if optimum is not None else ""
            w.writerow([repr(float(v)) for v in system.b[i]] + [repr(float(system.u[i])), p])
        w.writerow(["rho", repr(float(system.spectral_radius))])
