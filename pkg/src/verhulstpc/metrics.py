"""Solution quality and convergence metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def nse(p, p_star):
    """Normalized squared error ||p - p*||^2 / ||p*||^2 over the last axis."""
    p = np.asarray(p, dtype=float)
    p_star = np.asarray(p_star, dtype=float)
    ref = np.sum(p_star**2, axis=-1)
    if np.any(ref == 0):
        raise ValueError("reference power vector is all zero")
    return (np.sum((p - p_star) ** 2, axis=-1) / ref)[()]


@dataclass(frozen=True, eq=False)
class NseSeries:
    per_iteration: np.ndarray
    trials_averaged: int = 1

    def __post_init__(self):
        v = np.asarray(self.per_iteration, dtype=float)
        if np.any(v < 0):
            raise ValueError("NSE values are nonnegative")
        object.__setattr__(self, "per_iteration", v)

    @classmethod
    def average(cls, per_trial) -> "NseSeries":
        """Mean over trials at matched iteration; ``per_trial`` is (N+1, T)."""
        a = np.asarray(per_trial, dtype=float)
        if a.ndim == 1:
            return cls(a, 1)
        return cls(a.mean(axis=1), a.shape[1])

    def __len__(self):
        return len(self.per_iteration)


def nser(fast, slow):
    """Elementwise NSE ratio fast/slow.

    Returns ``(ratio, undefined)``; where the slow series is zero the ratio is
    NaN and ``undefined`` is set.
    """
    f = np.asarray(getattr(fast, "per_iteration", fast), dtype=float)
    s = np.asarray(getattr(slow, "per_iteration", slow), dtype=float)
    if f.shape != s.shape:
        raise ValueError("NSE series must have equal length")
    undefined = s == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(undefined, np.nan, f / np.where(undefined, 1.0, s))
    return ratio, undefined


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    iterations_to_converge: int | None
    criterion: str
    terminal_nse: float | None = None


def relative_changes(powers) -> np.ndarray:
    """max_k |p[n] - p[n-1]| / p[n-1] for n = 1..N; powers is (N+1, ..., K)."""
    p = np.asarray(powers, dtype=float)
    return np.max(np.abs(np.diff(p, axis=0)) / p[:-1], axis=-1)


def convergence_iterations(powers, window: int = 10, rel_tol: float = 1e-6) -> np.ndarray:
    """First n whose last ``window`` relative changes are all below ``rel_tol``; -1 if none.

    Works on (N+1, K) or batched (N+1, T, K) power histories.
    """
    if window < 1:
        raise ValueError("window must be positive")
    small = relative_changes(powers) < rel_tol
    counts = np.concatenate([np.zeros((1,) + small.shape[1:], dtype=int),
                             np.cumsum(small, axis=0)])
    if small.shape[0] < window:
        return np.full(small.shape[1:], -1)[()]
    full = (counts[window:] - counts[:-window]) == window
    hit = full.any(axis=0)
    first = np.argmax(full, axis=0) + window
    return np.where(hit, first, -1)[()]


def detect_convergence(trace, window: int = 10, rel_tol: float = 1e-6) -> ConvergenceReport:
    """Convergence of a trace (anything with ``powers``) or a raw (N+1, K) array."""
    powers = np.asarray(getattr(trace, "powers", trace), dtype=float)
    if powers.shape[0] == 0:
        raise ValueError("empty trace")
    n = int(convergence_iterations(powers, window, rel_tol))
    series = getattr(trace, "nse", None)
    terminal = None if series is None else float(np.asarray(series)[-1])
    criterion = f"max relative power change < {rel_tol:g} for {window} consecutive iterations"
    return ConvergenceReport(n >= 0, n if n >= 0 else None, criterion, terminal)


def outage_fraction(within_bounds) -> float:
    """Share of users whose analytical optimum violates the power bounds."""
    w = np.asarray(within_bounds, dtype=bool)
    return float(np.count_nonzero(~w)) / w.size if w.size else 0.0
