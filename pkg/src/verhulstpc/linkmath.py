"""Per-link formulas shared by the iterative and analytical solvers.

All functions broadcast over leading batch axes: powers ``(..., K)``, gains
``(..., K, K)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import RadioConstants


def _entries(gains) -> np.ndarray:
    return np.asarray(getattr(gains, "entries", gains), dtype=float)


def interference(powers, gains, noise: float) -> np.ndarray:
    """sum_{j != i} p_j g_ij + noise, for every user i."""
    g = _entries(gains)
    p = np.asarray(powers, dtype=float)
    off = g * (1.0 - np.eye(g.shape[-1]))
    return (off @ p[..., None])[..., 0] + noise


def cir(powers, gains, noise: float, i: int | None = None):
    """Carrier-to-interference ratio p_i g_ii / (sum_{j!=i} p_j g_ij + noise).

    Returns the whole vector when ``i`` is None.
    """
    g = _entries(gains)
    p = np.asarray(powers, dtype=float)
    own = np.diagonal(g, axis1=-2, axis2=-1)
    gamma = p * own / interference(p, g, noise)
    return gamma if i is None else gamma[..., i]


def snir(cir_value, spreading_factor):
    """Despread SNIR: spreading factor times CIR."""
    return np.multiply(spreading_factor, cir_value)


def achieved_rate(cir_value, target_snr: float, chip_rate: float):
    return chip_rate / target_snr * np.asarray(cir_value, dtype=float)


def spreading_factor(rate, chip_rate: float):
    return chip_rate / np.asarray(rate, dtype=float)


@dataclass(frozen=True, eq=False)
class CirTargets:
    per_user: np.ndarray
    mode: str = "spreading_factor"

    def __post_init__(self):
        t = np.array(self.per_user, dtype=float)
        if not np.all(t > 0):
            raise ValueError("CIR targets must be positive")
        t.flags.writeable = False
        object.__setattr__(self, "per_user", t)


def class_cir_target(min_rate, radio: RadioConstants, mode: str = "spreading_factor"):
    """Minimum CIR of a rate class.

    ``spreading_factor``: R_min * target_snr / R_c.
    ``shannon``: 2**(R_min / R_c) - 1, i.e. the rate taken in bits per chip.
    """
    r = np.asarray(min_rate, dtype=float)
    if mode == "spreading_factor":
        return r * radio.target_snr / radio.chip_rate
    if mode == "shannon":
        return np.exp2(r / radio.chip_rate) - 1.0
    raise ValueError(f"unknown CIR target mode {mode!r}")


def cir_targets(classes, class_of_user, radio: RadioConstants,
                mode: str = "spreading_factor") -> CirTargets:
    per_class = class_cir_target([c.min_rate for c in classes], radio, mode)
    return CirTargets(per_class[np.asarray(class_of_user) - 1], mode)
