"""Monte Carlo experiment driver and bundled scenario fixtures.

Every trial draws geometry, rate assignment and channel from its own stream,
derived from ``(seed, kind, grid_index, trial, attempt)``.  Only the channel
coordinate of a grid (the K value) enters ``grid_index``; error levels, alpha
values and alpha modes reuse the same draws and the same error stream, so
compared curves differ only in the setting under study.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import analytic, linkmath
from .channel import ErrorModel, GainMatrix, build_gain_matrix
from .metrics import NseSeries, convergence_iterations, nser
from .scenario import Scenario, loads_scenario, redraw, streams, watts_to_dbm
from .verhulst import AlphaStrategy, OpCounter, initial_power, iterate, ops_per_user, target_snir

log = logging.getLogger(__name__)

KINDS = ("convergence", "nser_vs_error", "nse_vs_loading", "adaptive_compare", "complexity")
DEFAULT_ITERATIONS = {
    "convergence": 300, "nser_vs_error": 1000, "nse_vs_loading": 1000,
    "adaptive_compare": 700, "complexity": 10,
}
DELTA_GRID = tuple(round(0.02 * i, 2) for i in range(11))
OUTAGE_POLICIES = ("redraw", "keep")

SUMMARY_COLUMNS = ("experiment", "K", "delta", "alpha_mode", "alpha", "trial",
                   "iterations_to_converge", "terminal_nse", "outage_count")


class HarnessError(RuntimeError):
    pass


# -- fixtures --------------------------------------------------------------------

FIXTURES = ("fig2_k7", "table1_defaults", "k25_fig1", "infeasible_demo")


def list_fixtures() -> list:
    return list(FIXTURES)


def fixture_path(name: str):
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return resources.files("verhulstpc") / "fixtures" / f"{name}.cfg"


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text()


def load_fixture(name: str) -> Scenario:
    return loads_scenario(fixture_text(name))


# -- experiment description -------------------------------------------------------

@dataclass(frozen=True)
class Experiment:
    kind: str
    scenario: Scenario
    trials: int = 100
    seed: int | None = None
    iterations: int | None = None
    k_values: tuple | None = None
    deltas: tuple | None = None
    alphas: tuple | None = None
    modes: tuple | None = None
    outage_policy: str = "redraw"
    max_redraws: int = 50
    window: int = 10
    rel_tol: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment {self.kind!r}; expected one of {KINDS}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.outage_policy not in OUTAGE_POLICIES:
            raise ValueError(f"outage_policy must be one of {OUTAGE_POLICIES}")
        for d in self.deltas or ():
            if not 0.0 <= d < 1.0:
                raise ValueError(f"error half-width {d} outside [0, 1)")
        for a in self.alphas or ():
            if not 0.0 < a <= 1.0:
                raise ValueError(f"alpha {a} outside (0, 1]")
        if self.k_values is not None and (not self.k_values or min(self.k_values) < 1):
            raise ValueError("K values must be positive")

    @property
    def master_seed(self) -> int:
        return self.scenario.rng_seed if self.seed is None else self.seed

    @property
    def n_iter(self) -> int:
        return DEFAULT_ITERATIONS[self.kind] if self.iterations is None else self.iterations


# -- trial draws ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrialDraw:
    trial: int
    scenario: Scenario
    gains: GainMatrix
    system: analytic.InterferenceSystem
    optimum: analytic.OptimalPower
    spreading: np.ndarray
    target_snir: np.ndarray
    infeasible_redraws: int
    outage_redraws: int
    stream_key: tuple

    def error_rng(self) -> np.random.Generator:
        """Fresh copy of this trial's error stream (identical on every call)."""
        return streams(*self.stream_key)["error"]


@dataclass
class DrawLog:
    accepted: int = 0
    skipped: int = 0
    infeasible_redraws: int = 0
    outage_redraws: int = 0
    rows: list = field(default_factory=list)


def draw_trial(scenario: Scenario, seed: int, kind: str, grid_index: int, trial: int,
               outage_policy: str = "redraw", max_redraws: int = 50):
    """Draw until the system is feasible (and, under ``redraw``, inside the power bounds).

    Returns ``(draw or None, infeasible_redraws, outage_redraws)``.
    """
    infeasible = outage = 0
    for attempt in range(max_redraws + 1):
        key = (seed, kind, grid_index, trial, attempt)
        rngs = streams(*key)
        s = redraw(scenario, rngs)
        gains = build_gain_matrix(s.geometry, rngs["channel"], s.channel)
        targets = linkmath.cir_targets(s.classes, s.class_of_user, s.radio, s.solver.cir_target_mode)
        system = analytic.build_system(gains, targets, s.radio.noise_power)
        if system.spectral_radius >= 1.0 - analytic.SINGULAR_MARGIN:
            infeasible += 1
            continue
        optimum = analytic.solve_optimal(system, s.radio)
        if optimum.outage_count and outage_policy == "redraw":
            outage += 1
            continue
        sf = s.spreading_factors
        return (TrialDraw(trial, s, gains, system, optimum, sf, target_snir(targets, sf),
                          infeasible, outage, key), infeasible, outage)
    return None, infeasible, outage


def draw_trials(exp: Experiment, scenario: Scenario, grid_index: int, drawlog: DrawLog) -> list:
    draws = []
    for t in range(exp.trials):
        d, inf, out = draw_trial(scenario, exp.master_seed, exp.kind, grid_index, t,
                                 exp.outage_policy, exp.max_redraws)
        drawlog.infeasible_redraws += inf
        drawlog.outage_redraws += out
        drawlog.rows.append((scenario.n_users, grid_index, t, inf, out, d is not None))
        if d is None:
            drawlog.skipped += 1
            log.warning("%s K=%d trial %d: no acceptable draw after %d attempts; skipped",
                        exp.kind, scenario.n_users, t, exp.max_redraws + 1)
            continue
        drawlog.accepted += 1
        draws.append(d)
    if inf_total := sum(r[3] for r in drawlog.rows if r[1] == grid_index):
        log.info("%s K=%d: %d infeasible draws redrawn", exp.kind, scenario.n_users, inf_total)
    return draws


@dataclass(frozen=True, eq=False)
class BatchResult:
    """Recursion outcome for one setting over a set of trials."""

    label: str
    delta: float
    strategy: AlphaStrategy
    trials: tuple
    nse: np.ndarray           # (N+1, T)
    converge_at: np.ndarray   # (T,), -1 when not converged
    outage: np.ndarray        # (T,)
    trace: object = None      # BatchTrace when recorded

    @property
    def mean_nse(self) -> NseSeries:
        return NseSeries.average(self.nse)


def run_batch(draws: list, strategy: AlphaStrategy, delta: float, n_iter: int,
              per_iteration: bool = True, window: int = 10, rel_tol: float = 1e-6,
              label: str = "", record: bool = False, counter: OpCounter | None = None) -> BatchResult:
    if not draws:
        raise HarnessError("no feasible trials to run")
    s0 = draws[0].scenario
    g = np.stack([d.gains.entries for d in draws])
    p0 = np.stack([initial_power(d.scenario) for d in draws])
    tgt = np.stack([d.target_snir for d in draws])
    sf = np.stack([d.spreading for d in draws])
    p_star = np.stack([d.optimum.p_star for d in draws])
    rngs = [d.error_rng() for d in draws]
    trace = iterate(p0, g, tgt, sf, s0.radio, strategy, n_iter, ErrorModel(delta, per_iteration),
                    rngs, p_star, counter=counter, record=record)
    conv = np.atleast_1d(convergence_iterations(trace.powers, window, rel_tol))
    outage = np.array([d.optimum.outage_count for d in draws])
    return BatchResult(label, delta, strategy, tuple(d.trial for d in draws), trace.nse, conv,
                       outage, trace if record else None)


# -- studies ------------------------------------------------------------------------

def _strategy(mode: str, alpha: float | None, scenario: Scenario) -> AlphaStrategy:
    s = scenario.solver
    return AlphaStrategy(mode, s.alpha_fixed if alpha is None else alpha, s.alpha_min, s.alpha_max)


def _single_scenario(exp: Experiment) -> Scenario:
    """Scenario for single-K studies; a given K list overrides the user count."""
    return exp.scenario if exp.k_values is None else _with_users(exp.scenario, exp.k_values[0])


def _deltas(exp: Experiment, default) -> tuple:
    return tuple(exp.deltas) if exp.deltas is not None else default


def convergence_study(exp: Experiment, drawlog: DrawLog | None = None):
    """Fixed-alpha runs (default 0.1 and 0.9) on shared draws; full trace recorded."""
    drawlog = drawlog or DrawLog()
    draws = draw_trials(exp, _single_scenario(exp), 0, drawlog)
    per_it = exp.scenario.channel.error_per_iteration
    results = []
    for delta in _deltas(exp, (exp.scenario.error_half_width,)):
        for a in exp.alphas or (0.1, 0.9):
            results.append(run_batch(draws, _strategy("fixed", a, exp.scenario), delta, exp.n_iter,
                                     per_it, exp.window, exp.rel_tol, f"alpha={a}", record=True))
    return draws, results


def nser_study(exp: Experiment, drawlog: DrawLog | None = None):
    """NSE ratio fast/slow per error level. Returns ``{delta: (fast, slow, ratio, undefined)}``."""
    drawlog = drawlog or DrawLog()
    draws = draw_trials(exp, _single_scenario(exp), 0, drawlog)
    fast_a, slow_a = exp.alphas or (0.9, 0.1)
    per_it = exp.scenario.channel.error_per_iteration
    out = {}
    for delta in _deltas(exp, DELTA_GRID):
        fast = run_batch(draws, _strategy("fixed", fast_a, exp.scenario), delta, exp.n_iter,
                         per_it, exp.window, exp.rel_tol, f"alpha={fast_a}")
        slow = run_batch(draws, _strategy("fixed", slow_a, exp.scenario), delta, exp.n_iter,
                         per_it, exp.window, exp.rel_tol, f"alpha={slow_a}")
        ratio, undefined = nser(fast.mean_nse, slow.mean_nse)
        out[delta] = (fast, slow, ratio, undefined)
    return draws, out


def loading_study(exp: Experiment, drawlog: DrawLog | None = None):
    """Averaged NSE after N iterations per (K, delta). Returns ``{(K, delta): BatchResult}``."""
    drawlog = drawlog or DrawLog()
    alpha = (exp.alphas or (0.2,))[0]
    per_it = exp.scenario.channel.error_per_iteration
    out = {}
    for gi, k in enumerate(exp.k_values or (10, 20, 30)):
        scenario = _with_users(exp.scenario, k)
        draws = draw_trials(exp, scenario, gi, drawlog)
        if not draws:
            log.warning("nse_vs_loading K=%d: every trial infeasible", k)
            continue
        for delta in _deltas(exp, DELTA_GRID):
            out[(k, delta)] = run_batch(draws, _strategy("fixed", alpha, scenario), delta,
                                        exp.n_iter, per_it, exp.window, exp.rel_tol, f"alpha={alpha}")
    return out


def adaptive_study(exp: Experiment, drawlog: DrawLog | None = None):
    """Fixed alpha against both adaptive rules on shared draws. Returns ``{mode: BatchResult}``."""
    drawlog = drawlog or DrawLog()
    draws = draw_trials(exp, _single_scenario(exp), 0, drawlog)
    alpha = (exp.alphas or (0.1,))[0]
    delta = _deltas(exp, (exp.scenario.error_half_width,))[0]
    per_it = exp.scenario.channel.error_per_iteration
    out = {}
    for mode in exp.modes or ("fixed", "adaptive_diff", "adaptive_tanh"):
        out[mode] = run_batch(draws, _strategy(mode, alpha, exp.scenario), delta, exp.n_iter,
                              per_it, exp.window, exp.rel_tol, mode)
    return draws, out


def _with_users(scenario: Scenario, k: int) -> Scenario:
    if k == scenario.n_users:
        return scenario
    if scenario.explicit_positions or scenario.explicit_assignment:
        raise HarnessError("cannot change K of a scenario with explicit users")
    g = scenario.geometry
    placeholder = replace(g, mt_positions=((0.0, 0.0),) * k)
    return replace(scenario, geometry=placeholder, class_of_user=(1,) * k)


@dataclass(frozen=True)
class ComplexityRow:
    k: int
    iterations: int
    adds_per_user_iter: float
    mults_per_user_iter: float
    lookups_per_user_iter: float

    @property
    def predicted(self) -> tuple:
        return (self.k + 3, self.k + 6, 1)

    @property
    def aggregate_k_plus_10(self) -> int:
        return self.k + 10

    @property
    def counter_sum(self) -> int:
        return 2 * self.k + 10


def complexity_report(k_values, scenario: Scenario | None = None, iterations: int = 10,
                      seed: int = 0) -> list:
    """Measure adaptive-tanh operation counts on real runs for each K."""
    if not k_values:
        raise ValueError("need at least one K value")
    scenario = scenario or load_fixture("table1_defaults")
    rows = []
    for gi, k in enumerate(k_values):
        s = _with_users(scenario, int(k))
        exp = Experiment("complexity", s, trials=1, seed=seed, max_redraws=200,
                         outage_policy="keep")
        draws = draw_trials(exp, s, gi, DrawLog())
        counter = OpCounter()
        run_batch(draws, _strategy("adaptive_tanh", None, s), 0.0, iterations, counter=counter)
        per = k * iterations * len(draws)
        rows.append(ComplexityRow(int(k), iterations, counter.additions / per,
                                  counter.multiplications / per, counter.lookups / per))
    return rows


# -- output -------------------------------------------------------------------------------

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def _summary_rows(kind: str, k: int, res: BatchResult):
    st = res.strategy
    alpha = st.alpha_fixed if st.mode == "fixed" else None
    for j, t in enumerate(res.trials):
        n = int(res.converge_at[j])
        yield (kind, k, res.delta, st.mode, alpha, t, n if n >= 0 else None,
               res.nse[-1, j], res.outage[j])


def _write_drawlog(out: Path, kind: str, drawlog: DrawLog) -> Path:
    return write_csv(out / f"{kind}_draws.csv",
                     ("K", "grid_index", "trial", "infeasible_redraws", "outage_redraws", "accepted"),
                     drawlog.rows)


def trace_rows(trace, k: int):
    n_iter = trace.iterations
    for n in range(n_iter + 1):
        alpha = trace.alpha[n] if n < n_iter else [None] * k
        clamped = int(np.count_nonzero(trace.clamped[n])) if n < n_iter else None
        ops = trace.ops[n] if n < n_iter else [None] * 3
        yield ([n] + list(alpha) + list(watts_to_dbm(trace.powers[n]))
               + list(10 * np.log10(np.maximum(trace.cir[n], 1e-300)))
               + list(10 * np.log10(np.maximum(trace.snir[n], 1e-300)))
               + [None if trace.nse is None else trace.nse[n], clamped] + list(ops))


def trace_header(k: int) -> list:
    users = range(1, k + 1)
    return (["n"] + [f"alpha_{i}" for i in users] + [f"p_{i}_dbm" for i in users]
            + [f"cir_{i}_db" for i in users] + [f"snir_{i}_db" for i in users]
            + ["nse", "clamped_count", "adds", "mults", "lookups"])


def run_experiment(exp: Experiment, out_dir) -> list:
    """Run ``exp`` and write its CSV outputs into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise HarnessError(f"output directory {out} is not writable: {exc}") from exc

    kind = exp.kind
    drawlog = DrawLog()
    files = []
    summary = []
    if kind == "convergence":
        draws, results = convergence_study(exp, drawlog)
        k = _single_scenario(exp).n_users
        first = draws[0]
        files.append(write_csv(
            out / "convergence_oracle.csv",
            ("user", "min_rate_bps", "p_star_w", "p_star_dbm", "cir_target", "within_bounds"),
            [(i + 1, r, p, watts_to_dbm(p), c, w) for i, (r, p, c, w) in enumerate(zip(
                first.scenario.user_rates, first.optimum.p_star,
                first.target_snir / first.spreading, first.optimum.within_bounds))]))
        for res in results:
            files.append(write_csv(out / f"convergence_trace_{res.label}_delta={res.delta}.csv",
                                   trace_header(k), trace_rows(res.trace.trial(0), k)))
            summary.extend(_summary_rows(kind, k, res))
    elif kind == "nser_vs_error":
        draws, results = nser_study(exp, drawlog)
        k = _single_scenario(exp).n_users
        rows = []
        for delta, (fast, slow, ratio, undefined) in results.items():
            f, s = fast.mean_nse.per_iteration, slow.mean_nse.per_iteration
            rows.extend((delta, n, f[n], s[n], ratio[n], undefined[n]) for n in range(len(f)))
            summary.extend(_summary_rows(kind, k, fast))
            summary.extend(_summary_rows(kind, k, slow))
        files.append(write_csv(out / "nser_vs_error_series.csv",
                               ("delta", "n", "nse_fast", "nse_slow", "nser", "nser_undefined"), rows))
    elif kind == "nse_vs_loading":
        results = loading_study(exp, drawlog)
        rows = []
        for (k, delta), res in results.items():
            rows.append((k, delta, res.strategy.alpha_fixed, exp.n_iter,
                         res.mean_nse.per_iteration[-1], res.mean_nse.trials_averaged))
            summary.extend(_summary_rows(kind, k, res))
        files.append(write_csv(out / "nse_vs_loading.csv",
                               ("K", "delta", "alpha", "n", "mean_nse", "trials"), rows))
    elif kind == "adaptive_compare":
        draws, results = adaptive_study(exp, drawlog)
        k = _single_scenario(exp).n_users
        modes = list(results)
        series = {m: results[m].mean_nse.per_iteration for m in modes}
        ratios = {m: nser(series[m], series[modes[0]])[0] for m in modes[1:]}
        header = (["n"] + [f"nse_{m}" for m in modes]
                  + [f"nser_{m}_vs_{modes[0]}" for m in modes[1:]])
        rows = ([n] + [series[m][n] for m in modes] + [ratios[m][n] for m in modes[1:]]
                for n in range(len(series[modes[0]])))
        files.append(write_csv(out / "adaptive_compare_series.csv", header, rows))
        for m in modes:
            summary.extend(_summary_rows(kind, k, results[m]))
    else:
        rows = complexity_report(exp.k_values or (5, 10, 20, 30), exp.scenario,
                                 exp.n_iter, exp.master_seed)
        files.append(write_complexity(out / "complexity.csv", rows))
        return files

    files.append(write_csv(out / f"{kind}_summary.csv", SUMMARY_COLUMNS, summary))
    files.append(_write_drawlog(out, kind, drawlog))
    if drawlog.skipped:
        log.warning("%s: %d trials skipped (no acceptable draw)", kind, drawlog.skipped)
    return files


COMPLEXITY_COLUMNS = ("K", "iterations", "adds_per_user_iter", "mults_per_user_iter",
                      "lookups_per_user_iter", "table_adds", "table_mults", "table_lookups",
                      "aggregate_K_plus_10", "counter_sum_2K_plus_10")


def complexity_table(rows) -> list:
    return [(r.k, r.iterations, r.adds_per_user_iter, r.mults_per_user_iter,
             r.lookups_per_user_iter, *r.predicted, r.aggregate_k_plus_10, r.counter_sum)
            for r in rows]


def write_complexity(path: Path, rows) -> Path:
    return write_csv(path, COMPLEXITY_COLUMNS, complexity_table(rows))


__all__ = [
    "Experiment", "TrialDraw", "BatchResult", "ComplexityRow", "HarnessError", "KINDS",
    "DELTA_GRID", "list_fixtures", "load_fixture", "fixture_text", "draw_trial", "draw_trials",
    "run_batch", "convergence_study", "nser_study", "loading_study", "adaptive_study",
    "complexity_report", "run_experiment", "ops_per_user",
]
