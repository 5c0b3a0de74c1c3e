"""Experiment description: radio constants, user classes, geometry, solver settings.

Scenario files are flat ``key = value`` text, one entry per line, ``#`` starts a
comment.  dB/dBm quantities are converted to linear units once, at load time.
"""
from __future__ import annotations

import ast
import math
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

CHIP_RATE = 3.84e6
TARGET_SNR_DB = 4.0
NOISE_DBM = -63.0
PMAX_DBM = 20.0
SLOT_DURATION = 666.7e-6
CELL_M = 5000.0
DEFAULT_RATES = (CHIP_RATE / 128, CHIP_RATE / 32, CHIP_RATE / 16)
DEFAULT_LABELS = ("voice", "data", "video")

ALPHA_MODES = ("fixed", "adaptive_diff", "adaptive_tanh")
CIR_TARGET_MODES = ("spreading_factor", "shannon")


class ScenarioError(ValueError):
    """Invalid scenario; ``key`` names the offending config entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class ScenarioParseError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    pass


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)[()]


def linear_to_db(x):
    return (10.0 * np.log10(np.asarray(x, dtype=float)))[()]


def dbm_to_watts(dbm):
    return db_to_linear(dbm) * 1e-3


def watts_to_dbm(w):
    return linear_to_db(np.asarray(w, dtype=float) * 1e3)


@dataclass(frozen=True)
class RadioConstants:
    chip_rate: float = CHIP_RATE
    target_snr_db: float = TARGET_SNR_DB
    noise_dbm: float = NOISE_DBM
    pmax_dbm: float = PMAX_DBM
    # P_min = SNR_min + P_n, summed in the dB domain
    pmin_dbm: float = TARGET_SNR_DB + NOISE_DBM
    slot_duration: float = SLOT_DURATION
    target_snr: float = field(init=False)
    noise_power: float = field(init=False)
    p_max: float = field(init=False)
    p_min: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "target_snr", db_to_linear(self.target_snr_db))
        object.__setattr__(self, "noise_power", dbm_to_watts(self.noise_dbm))
        object.__setattr__(self, "p_max", dbm_to_watts(self.pmax_dbm))
        object.__setattr__(self, "p_min", dbm_to_watts(self.pmin_dbm))
        if not self.chip_rate > 0:
            raise ScenarioValidationError("chip_rate", "must be positive")
        if not self.slot_duration > 0:
            raise ScenarioValidationError("slot_s", "must be positive")
        if not self.p_min < self.p_max:
            raise ScenarioValidationError("pmin_dbm", "P_min must be below P_max")
        for key, v in (("target_snr_db", self.target_snr_db), ("noise_dbm", self.noise_dbm)):
            if not math.isfinite(v):
                raise ScenarioValidationError(key, "must be finite")


@dataclass(frozen=True)
class UserClass:
    class_id: int
    min_rate: float
    label: str = ""

    def spreading_factor(self, chip_rate: float) -> float:
        return chip_rate / self.min_rate


@dataclass(frozen=True)
class Geometry:
    """Positions in meters. BS and MT coordinates are tuples of (x, y)."""

    cell_width: float
    cell_height: float
    bs_positions: tuple
    mt_positions: tuple

    def __post_init__(self):
        if len(self.bs_positions) < 1:
            raise ScenarioValidationError("bs_positions", "need at least one base station")
        if len(self.mt_positions) < 1:
            raise ScenarioValidationError("K", "need at least one mobile terminal")
        for key, pts in (("bs_positions", self.bs_positions), ("mt_positions", self.mt_positions)):
            for x, y in pts:
                if not (0.0 <= x <= self.cell_width and 0.0 <= y <= self.cell_height):
                    raise ScenarioValidationError(key, f"point ({x}, {y}) outside the cell")

    @property
    def n_users(self) -> int:
        return len(self.mt_positions)

    @property
    def bs_array(self) -> np.ndarray:
        return np.asarray(self.bs_positions, dtype=float)

    @property
    def mt_array(self) -> np.ndarray:
        return np.asarray(self.mt_positions, dtype=float)


@dataclass(frozen=True)
class SolverSettings:
    alpha_mode: str = "fixed"
    alpha_fixed: float = 0.1
    alpha_min: float = 0.1
    alpha_max: float = 0.95
    max_iterations: int = 1000
    convergence_tolerance: float | None = None
    cir_target_mode: str = "spreading_factor"
    p0_dbm: float | None = None

    def __post_init__(self):
        if self.alpha_mode not in ALPHA_MODES:
            raise ScenarioValidationError("alpha_mode", f"expected one of {ALPHA_MODES}")
        if self.cir_target_mode not in CIR_TARGET_MODES:
            raise ScenarioValidationError("cir_target_mode", f"expected one of {CIR_TARGET_MODES}")
        if not 0.0 < self.alpha_fixed <= 1.0:
            raise ScenarioValidationError("alpha", "must lie in (0, 1]")
        if not 0.0 < self.alpha_min <= self.alpha_max <= 1.0:
            raise ScenarioValidationError("alpha_min", "need 0 < alpha_min <= alpha_max <= 1")
        if not 1 <= self.max_iterations <= 10**6:
            raise ScenarioValidationError("max_iter", "must lie in [1, 1e6]")
        if self.convergence_tolerance is not None and not self.convergence_tolerance > 0:
            raise ScenarioValidationError("tol", "must be positive")


@dataclass(frozen=True)
class ChannelSettings:
    """Switches and parameters of the gain model.

    ``shadowing_var_db`` is the variance of the dB-domain shadowing term.
    The Rician amplitude is ``rice_los`` plus a complex Gaussian with
    standard deviation ``rice_scatter`` per quadrature component.
    """

    shadowing_var_db: float = 6.0
    rice_los: float = 0.6
    rice_scatter: float = 0.4
    shadowing: bool = True
    fading: bool = True
    error_per_iteration: bool = True

    def __post_init__(self):
        if self.shadowing_var_db < 0:
            raise ScenarioValidationError("shadowing_var_db", "must be nonnegative")
        if self.rice_los < 0 or self.rice_scatter < 0 or self.rice_los + self.rice_scatter == 0:
            raise ScenarioValidationError("rice_los", "Rician parameters must be nonnegative, not both zero")


@dataclass(frozen=True)
class Scenario:
    radio: RadioConstants
    classes: tuple
    class_of_user: tuple
    geometry: Geometry
    rng_seed: int = 0
    error_half_width: float = 0.0
    solver: SolverSettings = field(default_factory=SolverSettings)
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    # whether class_of_user / mt_positions were given explicitly (kept across trials)
    explicit_assignment: bool = False
    explicit_positions: bool = False

    def __post_init__(self):
        if not 0.0 <= self.error_half_width < 1.0:
            raise ScenarioValidationError("delta", "error half-width must lie in [0, 1)")
        rates = [c.min_rate for c in self.classes]
        for c in self.classes:
            if not 0 < c.min_rate < self.radio.chip_rate:
                raise ScenarioValidationError("rates_bps", "class rates must lie in (0, chip_rate)")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ScenarioValidationError("rates_bps", "class rates must be strictly ascending")
        if [c.class_id for c in self.classes] != list(range(1, len(self.classes) + 1)):
            raise ScenarioValidationError("L", "class ids must be 1..L")
        if len(self.class_of_user) != self.geometry.n_users:
            raise ScenarioValidationError("class_of_user", "length must equal K")
        if any(not 1 <= c <= len(self.classes) for c in self.class_of_user):
            raise ScenarioValidationError("class_of_user", "class id out of range 1..L")
        if list(self.class_of_user) != sorted(self.class_of_user):
            raise ScenarioValidationError("class_of_user", "users must be indexed by ascending class rate")

    @property
    def n_users(self) -> int:
        return len(self.class_of_user)

    @property
    def user_rates(self) -> np.ndarray:
        return np.array([self.classes[c - 1].min_rate for c in self.class_of_user])

    @property
    def spreading_factors(self) -> np.ndarray:
        return self.radio.chip_rate / self.user_rates

    def with_solver(self, **changes) -> "Scenario":
        return replace(self, solver=replace(self.solver, **changes))


# -- randomness --------------------------------------------------------------

STREAM_NAMES = ("geometry", "rates", "channel", "error")


def streams(seed: int, *key) -> dict:
    """Independent named generators derived from ``(seed, *key)``.

    String key parts are hashed with crc32 so derivation is stable across
    interpreter runs.
    """
    parts = [int(seed)] + [zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in key]
    children = np.random.SeedSequence(parts).spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(s) for name, s in zip(STREAM_NAMES, children)}


def quadrant_centers(width: float, height: float) -> tuple:
    return tuple((fx * width, fy * height) for fy in (0.25, 0.75) for fx in (0.25, 0.75))


def place_uniform(k: int, cell_width: float, cell_height: float, rng: np.random.Generator,
                  bs_positions=None) -> Geometry:
    """K terminals i.i.d. uniform over the rectangle; BS default to quadrant centres."""
    if k < 1:
        raise ScenarioValidationError("K", "need at least one mobile terminal")
    xy = rng.uniform(size=(k, 2)) * np.array([cell_width, cell_height])
    if bs_positions is None:
        bs_positions = quadrant_centers(cell_width, cell_height)
    return Geometry(cell_width, cell_height, tuple(map(tuple, bs_positions)),
                    tuple((float(x), float(y)) for x, y in xy))


def assign_rates_uniform(k: int, n_classes: int, rng: np.random.Generator) -> tuple:
    """I.i.d. uniform class per user, then re-indexed by ascending class rate."""
    if n_classes < 1:
        raise ScenarioValidationError("L", "need at least one class")
    draws = rng.integers(1, n_classes + 1, size=k)
    return tuple(int(c) for c in sorted(draws))


def redraw(scenario: Scenario, rngs: dict) -> Scenario:
    """Fresh positions and rate assignment unless they were fixed explicitly."""
    geometry = scenario.geometry
    if not scenario.explicit_positions:
        geometry = place_uniform(scenario.n_users, geometry.cell_width, geometry.cell_height,
                                 rngs["geometry"], geometry.bs_positions)
    cou = scenario.class_of_user
    if not scenario.explicit_assignment:
        cou = assign_rates_uniform(scenario.n_users, len(scenario.classes), rngs["rates"])
    return replace(scenario, geometry=geometry, class_of_user=cou)


# -- config parsing ------------------------------------------------------------

KNOWN_KEYS = (
    "K", "L", "rates_bps", "class_labels", "class_of_user", "chip_rate", "target_snr_db",
    "noise_dbm", "pmax_dbm", "pmin_dbm", "slot_s", "cell_km", "bs_positions", "mt_positions",
    "seed", "delta", "alpha_mode", "alpha", "alpha_min", "alpha_max", "max_iter", "tol",
    "cir_target_mode", "p0_dbm", "shadowing_var_db", "rice_los", "rice_scatter", "shadowing",
    "fading", "error_per_iteration",
)


def _parse_value(raw: str):
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        low = raw.lower()
        if low in ("true", "yes", "on"):
            return True
        if low in ("false", "no", "off"):
            return False
        if low in ("none", "off", ""):
            return None
        return raw


def parse_config(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ScenarioParseError(key, "unknown key")
        if key in out:
            raise ScenarioParseError(key, "duplicate key")
        out[key] = _parse_value(raw)
    return out


def _number(cfg, key, default, kind=float):
    v = cfg.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioValidationError(key, f"expected a number, got {v!r}")
    if kind is int:
        if float(v) != int(v):
            raise ScenarioValidationError(key, "expected an integer")
        return int(v)
    return float(v)


def _number_list(cfg, key):
    v = cfg.get(key)
    if v is None:
        return None
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = (v,)
    if not isinstance(v, (list, tuple)) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ScenarioValidationError(key, f"expected a list of numbers, got {v!r}")
    return [float(x) for x in v]


def _points_km(cfg, key):
    v = cfg.get(key)
    if v is None:
        return None
    try:
        pts = tuple((float(x) * 1e3, float(y) * 1e3) for x, y in v)
    except (TypeError, ValueError):
        raise ScenarioValidationError(key, "expected a list of (x, y) pairs in km") from None
    return pts


def _flag(cfg, key, default):
    v = cfg.get(key, default)
    if not isinstance(v, bool):
        raise ScenarioValidationError(key, "expected true/false")
    return v


def scenario_from_config(cfg: dict) -> Scenario:
    chip_rate = _number(cfg, "chip_rate", CHIP_RATE)
    snr_db = _number(cfg, "target_snr_db", TARGET_SNR_DB)
    noise_dbm = _number(cfg, "noise_dbm", NOISE_DBM)
    radio = RadioConstants(
        chip_rate=chip_rate,
        target_snr_db=snr_db,
        noise_dbm=noise_dbm,
        pmax_dbm=_number(cfg, "pmax_dbm", PMAX_DBM),
        pmin_dbm=_number(cfg, "pmin_dbm", snr_db + noise_dbm),
        slot_duration=_number(cfg, "slot_s", SLOT_DURATION),
    )

    rates = _number_list(cfg, "rates_bps")
    n_classes = _number(cfg, "L", None, int)
    if rates is None:
        if n_classes not in (None, len(DEFAULT_RATES)):
            raise ScenarioValidationError("L", "rates_bps required when L differs from 3")
        rates = [chip_rate / 128, chip_rate / 32, chip_rate / 16]
    if n_classes is not None and n_classes != len(rates):
        raise ScenarioValidationError("L", "must equal the number of rates_bps entries")
    labels = cfg.get("class_labels")
    if labels is None:
        labels = DEFAULT_LABELS if len(rates) == 3 else tuple(f"class{i}" for i in range(1, len(rates) + 1))
    if isinstance(labels, str):
        labels = tuple(s.strip() for s in labels.split(","))
    if len(labels) != len(rates):
        raise ScenarioValidationError("class_labels", "one label per class")
    classes = tuple(UserClass(i + 1, r, str(lab)) for i, (r, lab) in enumerate(zip(rates, labels)))

    cell = cfg.get("cell_km", CELL_M / 1e3)
    if isinstance(cell, (int, float)) and not isinstance(cell, bool):
        width = height = float(cell) * 1e3
    elif isinstance(cell, (list, tuple)) and len(cell) == 2:
        width, height = float(cell[0]) * 1e3, float(cell[1]) * 1e3
    else:
        raise ScenarioValidationError("cell_km", "expected a size or a (width, height) pair")
    if not (width > 0 and height > 0):
        raise ScenarioValidationError("cell_km", "must be positive")

    seed = _number(cfg, "seed", 0, int)
    rngs = streams(seed)
    bs = _points_km(cfg, "bs_positions") or quadrant_centers(width, height)
    mts = _points_km(cfg, "mt_positions")
    explicit_cou = cfg.get("class_of_user")
    k = _number(cfg, "K", None, int)
    for other_key, other in (("mt_positions", mts), ("class_of_user", explicit_cou)):
        if other is not None:
            if not isinstance(other, (list, tuple)):
                raise ScenarioValidationError(other_key, "expected a list")
            if k is None:
                k = len(other)
            elif len(other) != k:
                raise ScenarioValidationError(other_key, f"length {len(other)} does not match K={k}")
    if k is None:
        raise ScenarioValidationError("K", "number of users is required")
    if k < 1:
        raise ScenarioValidationError("K", "need at least one mobile terminal")

    if mts is None:
        geometry = place_uniform(k, width, height, rngs["geometry"], bs)
    else:
        geometry = Geometry(width, height, bs, mts)

    if explicit_cou is None:
        cou = assign_rates_uniform(k, len(classes), rngs["rates"])
    else:
        if not all(isinstance(c, int) and not isinstance(c, bool) for c in explicit_cou):
            raise ScenarioValidationError("class_of_user", "expected integer class ids")
        if any(not 1 <= c <= len(classes) for c in explicit_cou):
            raise ScenarioValidationError("class_of_user", "class id out of range 1..L")
        # stable re-index by ascending class rate; a fixed geometry is permuted along with it
        order = sorted(range(k), key=lambda i: explicit_cou[i])
        cou = tuple(explicit_cou[i] for i in order)
        if mts is not None:
            geometry = Geometry(width, height, bs, tuple(mts[i] for i in order))

    alpha_mode = cfg.get("alpha_mode", "fixed")
    solver = SolverSettings(
        alpha_mode=str(alpha_mode),
        alpha_fixed=_number(cfg, "alpha", 0.1),
        alpha_min=_number(cfg, "alpha_min", 0.1),
        alpha_max=_number(cfg, "alpha_max", 0.95),
        max_iterations=_number(cfg, "max_iter", 1000, int),
        convergence_tolerance=_number(cfg, "tol", None),
        cir_target_mode=str(cfg.get("cir_target_mode", "spreading_factor")),
        p0_dbm=_number(cfg, "p0_dbm", None),
    )
    channel = ChannelSettings(
        shadowing_var_db=_number(cfg, "shadowing_var_db", 6.0),
        rice_los=_number(cfg, "rice_los", 0.6),
        rice_scatter=_number(cfg, "rice_scatter", 0.4),
        shadowing=_flag(cfg, "shadowing", True),
        fading=_flag(cfg, "fading", True),
        error_per_iteration=_flag(cfg, "error_per_iteration", True),
    )
    return Scenario(
        radio=radio, classes=classes, class_of_user=cou, geometry=geometry, rng_seed=seed,
        error_half_width=_number(cfg, "delta", 0.0), solver=solver, channel=channel,
        explicit_assignment=explicit_cou is not None, explicit_positions=mts is not None,
    )


def loads_scenario(text: str) -> Scenario:
    return scenario_from_config(parse_config(text))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(str(path), f"cannot read: {exc.strerror}") from exc
    return loads_scenario(text)


def dump_scenario(s: Scenario) -> str:
    """Serialize to the config format; ``loads_scenario`` gives back an equal Scenario."""
    g = s.geometry
    km = lambda pts: repr([(x / 1e3, y / 1e3) for x, y in pts])  # noqa: E731
    lines = [
        f"K = {s.n_users}",
        f"L = {len(s.classes)}",
        f"rates_bps = {[c.min_rate for c in s.classes]!r}",
        f"class_labels = {[c.label for c in s.classes]!r}",
        f"chip_rate = {s.radio.chip_rate!r}",
        f"target_snr_db = {s.radio.target_snr_db!r}",
        f"noise_dbm = {s.radio.noise_dbm!r}",
        f"pmax_dbm = {s.radio.pmax_dbm!r}",
        f"pmin_dbm = {s.radio.pmin_dbm!r}",
        f"slot_s = {s.radio.slot_duration!r}",
        f"cell_km = {(g.cell_width / 1e3, g.cell_height / 1e3)!r}",
        f"bs_positions = {km(g.bs_positions)}",
        f"seed = {s.rng_seed}",
        f"delta = {s.error_half_width!r}",
        f"alpha_mode = {s.solver.alpha_mode}",
        f"alpha = {s.solver.alpha_fixed!r}",
        f"alpha_min = {s.solver.alpha_min!r}",
        f"alpha_max = {s.solver.alpha_max!r}",
        f"max_iter = {s.solver.max_iterations}",
        f"tol = {s.solver.convergence_tolerance!r}",
        f"cir_target_mode = {s.solver.cir_target_mode}",
        f"p0_dbm = {s.solver.p0_dbm!r}",
        f"shadowing_var_db = {s.channel.shadowing_var_db!r}",
        f"rice_los = {s.channel.rice_los!r}",
        f"rice_scatter = {s.channel.rice_scatter!r}",
        f"shadowing = {s.channel.shadowing}",
        f"fading = {s.channel.fading}",
        f"error_per_iteration = {s.channel.error_per_iteration}",
    ]
    if s.explicit_assignment:
        lines.append(f"class_of_user = {list(s.class_of_user)!r}")
    if s.explicit_positions:
        lines.append(f"mt_positions = {km(g.mt_positions)}")
    return "\n".join(lines) + "\n"
