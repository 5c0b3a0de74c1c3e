"""Discretized Verhulst power-rate control.

Each user applies

    p_i[n+1] = p_i[n] + alpha_i * p_i[n] * (1 - snir_i[n] / target_i)

which is the logistic update (1 + a) p - a (snir / target) p written so that
snir == target leaves p bit-exactly unchanged.  The despread SNIR is the
spreading factor times the CIR measured on (possibly error-perturbed) gains.
Updates are synchronous: every user reads the iteration-n power vector.

The iteration kernel broadcasts over a leading trial axis so Monte Carlo
batches run as one array program.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linkmath
from .channel import ErrorModel, perturb_entries
from .metrics import detect_convergence, nse
from .scenario import ALPHA_MODES, RadioConstants, Scenario, dbm_to_watts, streams

# per-user, per-iteration operation costs (additions, multiplications, lookups)
UPDATE_COST = (2, 3, 0)
ALPHA_COST = {"fixed": (0, 0, 0), "adaptive_diff": (2, 1, 0), "adaptive_tanh": (1, 0, 1)}


def snir_cost(k: int) -> tuple:
    return (k, k + 3, 0)


def ops_per_user(mode: str, k: int) -> tuple:
    """Operation counts one terminal spends per iteration in ``mode``."""
    return tuple(int(a + b + c) for a, b, c in zip(UPDATE_COST, snir_cost(k), ALPHA_COST[mode]))


@dataclass
class OpCounter:
    additions: int = 0
    multiplications: int = 0
    lookups: int = 0

    def book(self, ops, times: int = 1) -> None:
        self.additions += ops[0] * times
        self.multiplications += ops[1] * times
        self.lookups += ops[2] * times

    def merge(self, other: "OpCounter") -> None:
        self.book((other.additions, other.multiplications, other.lookups))

    def as_tuple(self) -> tuple:
        return (self.additions, self.multiplications, self.lookups)


@dataclass(frozen=True)
class AlphaStrategy:
    mode: str = "fixed"
    alpha_fixed: float = 0.1
    alpha_min: float = 0.1
    alpha_max: float = 0.95

    def __post_init__(self):
        if self.mode not in ALPHA_MODES:
            raise ValueError(f"unknown alpha mode {self.mode!r}")
        if not 0.0 < self.alpha_fixed <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 < self.alpha_min <= self.alpha_max <= 1.0:
            raise ValueError("need 0 < alpha_min <= alpha_max <= 1")

    @classmethod
    def from_settings(cls, solver) -> "AlphaStrategy":
        return cls(solver.alpha_mode, solver.alpha_fixed, solver.alpha_min, solver.alpha_max)


def alpha_next(strategy: AlphaStrategy, snir_prev, target_snr):
    """Convergence factor for the next update from the previous SNIR.

    adaptive_diff: min(alpha_max, |snir - target| / target + alpha_min)
    adaptive_tanh: max(alpha_min, tanh|snir - target|)
    """
    s = np.asarray(snir_prev, dtype=float)
    if strategy.mode == "fixed":
        return np.full_like(s, strategy.alpha_fixed)[()]
    gap = np.abs(s - target_snr)
    if strategy.mode == "adaptive_diff":
        return np.minimum(strategy.alpha_max, gap / target_snr + strategy.alpha_min)[()]
    return np.maximum(strategy.alpha_min, np.tanh(gap))[()]


def verhulst_update(power, snir, target_snir, alpha):
    """One terminal's update; needs only locally known quantities and its fed-back SNIR."""
    return power + alpha * power * (1.0 - snir / target_snir)


@dataclass(frozen=True, eq=False)
class PowerState:
    p: np.ndarray
    iteration: int = 0
    alpha_used: np.ndarray | None = None
    clamped: np.ndarray | None = None
    snir_prev: np.ndarray | None = None


def initial_power(scenario: Scenario, p0=None) -> np.ndarray:
    radio = scenario.radio
    if p0 is None:
        p0 = radio.p_min if scenario.solver.p0_dbm is None else dbm_to_watts(scenario.solver.p0_dbm)
    p = np.broadcast_to(np.asarray(p0, dtype=float), (scenario.n_users,)).copy()
    if np.any(p < radio.p_min) or np.any(p > radio.p_max):
        raise ValueError("initial power outside [P_min, P_max]")
    return p


def init_state(scenario: Scenario, p0=None) -> PowerState:
    """Every terminal starts at P_min unless ``p0`` or the scenario's p0_dbm says otherwise."""
    return PowerState(initial_power(scenario, p0))


def target_snir(targets, spreading) -> np.ndarray:
    """Per-user SNIR target: spreading factor times the class CIR target."""
    return linkmath.snir(getattr(targets, "per_user", targets), spreading)


def step(state: PowerState, gains_estimated, targets, spreading, strategy: AlphaStrategy,
         radio: RadioConstants, counter: OpCounter | None = None) -> PowerState:
    g = np.asarray(getattr(gains_estimated, "entries", gains_estimated), dtype=float)
    tgt = target_snir(targets, spreading)
    snir = linkmath.snir(linkmath.cir(state.p, g, radio.noise_power), spreading)
    prev = snir if state.snir_prev is None else state.snir_prev
    alpha = np.broadcast_to(alpha_next(strategy, prev, tgt), snir.shape)
    raw = verhulst_update(state.p, snir, tgt, alpha)
    p = np.clip(raw, radio.p_min, radio.p_max)
    if counter is not None:
        k = g.shape[-1]
        counter.book(ops_per_user(strategy.mode, k), times=int(np.prod(state.p.shape)))
    return PowerState(p, state.iteration + 1, alpha, p != raw, snir)


@dataclass(frozen=True, eq=False)
class RunTrace:
    """Per-iteration record of one run.

    ``powers``, ``cir`` and ``snir`` have N+1 rows (iterations 0..N) and use the
    true gains; ``alpha`` and ``clamped`` have N rows, one per update.
    ``ops`` holds per-iteration (additions, multiplications, lookups) totals.
    """

    powers: np.ndarray
    cir: np.ndarray | None
    snir: np.ndarray | None
    alpha: np.ndarray | None
    clamped: np.ndarray
    nse: np.ndarray | None
    ops: np.ndarray
    target_snir: np.ndarray
    p_min: float
    p_max: float
    stopped_early: bool = False

    @property
    def iterations(self) -> int:
        return self.powers.shape[0] - 1

    @property
    def final_power(self) -> np.ndarray:
        return self.powers[-1]

    @property
    def final_snir(self) -> np.ndarray:
        return self.snir[-1]

    @property
    def saturated(self) -> np.ndarray:
        """Users pinned at P_max while still short of their SNIR target."""
        return (self.final_power >= self.p_max) & (self.final_snir < self.target_snir)

    def qos_met(self, rtol: float = 1e-3) -> bool:
        return bool(np.all(np.abs(self.final_snir / self.target_snir - 1.0) <= rtol))

    @property
    def converged(self) -> bool:
        """Powers settled and every user at its SNIR target."""
        return detect_convergence(self).converged and self.qos_met()


@dataclass(frozen=True, eq=False)
class BatchTrace:
    """Like RunTrace with a trial axis after the iteration axis."""

    powers: np.ndarray
    cir: np.ndarray | None
    snir: np.ndarray | None
    alpha: np.ndarray | None
    clamped: np.ndarray
    nse: np.ndarray | None
    ops: np.ndarray
    target_snir: np.ndarray
    p_min: float
    p_max: float
    stopped_early: bool = False

    @property
    def n_trials(self) -> int:
        return self.powers.shape[1]

    def trial(self, t: int) -> RunTrace:
        pick = lambda a: None if a is None else a[:, t]  # noqa: E731
        return RunTrace(self.powers[:, t], pick(self.cir), pick(self.snir), pick(self.alpha),
                        self.clamped[:, t], pick(self.nse), self.ops[:, t],
                        self.target_snir[t], self.p_min, self.p_max, self.stopped_early)


def iterate(p0, gains, targets_snir, spreading, radio: RadioConstants, strategy: AlphaStrategy,
            n_iter: int, error: ErrorModel = ErrorModel(), error_rngs=None, p_star=None,
            tol: float | None = None, counter: OpCounter | None = None,
            record: bool = True) -> BatchTrace:
    """Run the recursion on a batch of independent trials.

    Shapes: ``p0``/``targets_snir``/``spreading``/``p_star`` are (T, K),
    ``gains`` is (T, K, K).  ``error_rngs`` supplies one generator per trial
    for the gain-estimate errors.  With ``record=False`` only powers, NSE and
    counts are kept.
    """
    g = np.asarray(gains, dtype=float)
    n_trials, k = g.shape[0], g.shape[-1]
    p = np.array(p0, dtype=float)
    tgt = np.asarray(targets_snir, dtype=float)
    sf = np.asarray(spreading, dtype=float)
    noise = radio.noise_power
    noisy = error.half_width > 0.0
    if noisy and (error_rngs is None or len(error_rngs) != n_trials):
        raise ValueError("one error generator per trial required when the error half-width > 0")

    def estimate():
        return np.stack([perturb_entries(g[t], error.half_width, error_rngs[t])
                         for t in range(n_trials)])

    g_static = estimate() if noisy and not error.per_iteration else g

    powers = np.empty((n_iter + 1, n_trials, k))
    cirs = np.empty_like(powers) if record else None
    alphas = np.empty((n_iter, n_trials, k)) if record else None
    clamped = np.zeros((n_iter, n_trials, k), dtype=bool)
    powers[0] = p
    if record:
        cirs[0] = linkmath.cir(p, g, noise)

    per_user = ops_per_user(strategy.mode, k)
    snir_prev = None
    last = n_iter
    stopped = False
    for n in range(n_iter):
        g_hat = estimate() if noisy and error.per_iteration else g_static
        snir = sf * linkmath.cir(p, g_hat, noise)
        alpha = alpha_next(strategy, snir if snir_prev is None else snir_prev, tgt)
        raw = verhulst_update(p, snir, tgt, alpha)
        nxt = np.clip(raw, radio.p_min, radio.p_max)
        clamped[n] = nxt != raw
        if counter is not None:
            counter.book(per_user, times=n_trials * k)
        snir_prev = snir
        if record:
            alphas[n] = alpha
            cirs[n + 1] = linkmath.cir(nxt, g, noise)
        powers[n + 1] = nxt
        change = np.max(np.abs(nxt - p) / p)
        p = nxt
        if tol is not None and change < tol:
            last, stopped = n + 1, True
            break

    powers = powers[: last + 1]
    clamped = clamped[:last]
    if record:
        cirs = cirs[: last + 1]
        alphas = alphas[:last]
    ops = np.broadcast_to(np.array(per_user) * k, (last, n_trials, 3)).copy()
    nse_series = None
    if p_star is not None:
        nse_series = nse(powers, np.asarray(p_star, dtype=float))
    return BatchTrace(
        powers, cirs, None if cirs is None else sf * cirs, alphas, clamped, nse_series, ops,
        tgt, radio.p_min, radio.p_max, stopped,
    )


def run(scenario: Scenario, gains, targets, oracle_p_star=None, rng=None,
        strategy: AlphaStrategy | None = None, max_iterations: int | None = None,
        counter: OpCounter | None = None, p0=None) -> RunTrace:
    """Iterate the recursion on one channel realization.

    With a nonzero error half-width the estimates are redrawn from ``rng``
    every iteration (or once, if the scenario says so); the recursion never
    sees the true gains.  NSE is measured against ``oracle_p_star``.
    """
    if strategy is None:
        strategy = AlphaStrategy.from_settings(scenario.solver)
    n_iter = scenario.solver.max_iterations if max_iterations is None else max_iterations
    g = np.asarray(getattr(gains, "entries", gains), dtype=float)
    sf = scenario.spreading_factors
    tgt = target_snir(targets, sf)
    error = ErrorModel(scenario.error_half_width, scenario.channel.error_per_iteration)
    if rng is None:
        rng = streams(scenario.rng_seed)["error"]
    batch = iterate(
        initial_power(scenario, p0)[None], g[None], tgt[None], sf[None], scenario.radio, strategy,
        n_iter, error, [rng], None if oracle_p_star is None else np.asarray(oracle_p_star)[None],
        scenario.solver.convergence_tolerance, counter,
    )
    return batch.trial(0)
