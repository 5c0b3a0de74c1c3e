"""Uplink channel gains: d^-2 path loss, log-normal shadowing, Rician fading.

Row ``i`` of the gain matrix belongs to the receiver (serving BS) of user
``i``; entry ``g[i, j]`` is the gain from transmitter ``j`` to that receiver.
Shadowing and fading are drawn once per physical (BS, MT) link, so users
sharing a BS see identical interference gains.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scenario import ChannelSettings, Geometry

DISTANCE_FLOOR = 1.0  # meters


@dataclass(frozen=True, eq=False)
class GainMatrix:
    entries: np.ndarray
    serving_bs: np.ndarray
    warnings: tuple = field(default=())

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("gain matrix must be square")
        if not np.all(e > 0):
            raise ValueError("gain entries must be strictly positive")
        e.flags.writeable = False
        s = np.array(self.serving_bs, dtype=int)
        s.flags.writeable = False
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "serving_bs", s)

    @property
    def n_users(self) -> int:
        return self.entries.shape[0]

    @property
    def own(self) -> np.ndarray:
        return np.diag(self.entries)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in self.entries:
                w.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class ErrorModel:
    half_width: float = 0.0
    per_iteration: bool = True

    def __post_init__(self):
        if not 0.0 <= self.half_width < 1.0:
            raise ValueError("error half-width must lie in [0, 1)")


def path_loss(d) -> np.ndarray:
    return np.asarray(d, dtype=float) ** -2.0


def distances(geometry: Geometry) -> np.ndarray:
    """(n_bs, K) MT-to-BS distances in meters."""
    diff = geometry.bs_array[:, None, :] - geometry.mt_array[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def shadowing_db(rng: np.random.Generator, shape, var_db: float) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(var_db), size=shape)


def rician_power(rng: np.random.Generator, shape, los: float, scatter: float) -> np.ndarray:
    """|h|^2 for h = los + scatter * (x + jy), x and y standard normal."""
    z = rng.normal(size=(2,) + tuple(np.atleast_1d(shape)))
    return (los + scatter * z[0]) ** 2 + (scatter * z[1]) ** 2


def link_gains(geometry: Geometry, rng: np.random.Generator,
               settings: ChannelSettings = ChannelSettings()):
    """Per-link (n_bs, K) power gains plus any distance-floor warnings."""
    d = distances(geometry)
    warnings = ()
    if np.any(d < DISTANCE_FLOOR):
        b, k = np.nonzero(d < DISTANCE_FLOOR)
        warnings = tuple(f"MT {kk} within {DISTANCE_FLOOR} m of BS {bb}; distance clamped"
                         for bb, kk in zip(b, k))
        d = np.maximum(d, DISTANCE_FLOOR)
    g = path_loss(d)
    if settings.shadowing:
        g = g * 10.0 ** (shadowing_db(rng, d.shape, settings.shadowing_var_db) / 10.0)
    if settings.fading:
        g = g * rician_power(rng, d.shape, settings.rice_los, settings.rice_scatter)
    return g, d, warnings


def build_gain_matrix(geometry: Geometry, rng: np.random.Generator,
                      settings: ChannelSettings = ChannelSettings()) -> GainMatrix:
    g, d, warnings = link_gains(geometry, rng, settings)
    # nearest BS == strongest path-loss-only gain
    serving = np.argmin(d, axis=0)
    return GainMatrix(g[serving, :], serving, warnings)


def perturb_entries(entries: np.ndarray, half_width: float, rng: np.random.Generator) -> np.ndarray:
    if half_width == 0.0:
        return entries
    return entries * (1.0 + rng.uniform(-half_width, half_width, size=entries.shape))


def perturb(gains: GainMatrix, error: ErrorModel, rng: np.random.Generator) -> GainMatrix:
    """Estimated gains (1 + eps) * g with eps ~ U[-delta, delta] drawn per entry."""
    if error.half_width == 0.0:
        return gains
    return GainMatrix(perturb_entries(gains.entries, error.half_width, rng),
                      gains.serving_bs, gains.warnings)


def load_csv(path) -> np.ndarray:
    return np.loadtxt(Path(path), delimiter=",", ndmin=2)
