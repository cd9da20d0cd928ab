"""Scenario configuration, unit conversion, user placement, and channel draws.

All internal computation runs in watts and linear channel gains; dBm/dB only
appear at the config/report boundary. Channel generation takes an explicit
``numpy.random.Generator`` so repeated draws are reproducible.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

PATH_LOSS_INTERCEPT_DB = -128.1
PATH_LOSS_SLOPE_DB = 37.6


class Mode(str, Enum):
    HYBRID = "hybrid"
    NOMA_ONLY = "noma"
    RSMA_ONLY = "rsma"


def dbm_to_watts(x_dbm: float) -> float:
    """Convert a dBm level to watts."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_w: float) -> float:
    """Convert watts to dBm (reporting boundary only)."""
    if x_w <= 0.0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * np.log10(x_w) + 30.0


def path_loss_db(d_km):
    """Large-scale NLOS path loss in dB; accepts a scalar or array of km."""
    if np.any(np.asarray(d_km) <= 0.0):
        raise ValueError(f"distance must be positive, got {d_km} km")
    return PATH_LOSS_INTERCEPT_DB - PATH_LOSS_SLOPE_DB * np.log10(d_km)


def _as_user_array(value, num_users: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(num_users, arr[0])
    if arr.shape != (num_users,):
        raise ValueError(f"{name} must be scalar or length {num_users}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical and algorithmic parameters of one scenario.

    Power levels are stored in dBm as configured; use the ``*_w`` properties
    for the linear values consumed by the math.
    """

    num_users: int = 4
    p_max_dbm: float = 35.0
    noise_dbm: float = -110.0
    p_tol_dbm: float = 10.0
    r_th: np.ndarray = 0.0                      # bit/s/Hz, per user
    weights_noma: np.ndarray = 1.0              # per user, rank-indexed
    weights_rsma: np.ndarray = 1.0
    mode: Mode = Mode.HYBRID
    epsilon1: float = 1e-3
    l_max: int = 100
    solver_tol: float = 1e-6
    rng_seed: int = 0
    area_side_m: float = 350.0
    bs_height_m: float = 4.0

    def __post_init__(self):
        if self.num_users < 1:
            raise ValueError("num_users must be >= 1")
        if self.epsilon1 <= 0.0:
            raise ValueError("epsilon1 must be positive")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if self.solver_tol <= 0.0:
            raise ValueError("solver_tol must be positive")
        object.__setattr__(self, "mode", Mode(self.mode))
        for name in ("r_th", "weights_noma", "weights_rsma"):
            object.__setattr__(self, name, _as_user_array(getattr(self, name), self.num_users, name))
        if np.any(self.r_th < 0.0):
            raise ValueError("r_th entries must be non-negative")
        if np.any(self.weights_noma <= 0.0) or np.any(self.weights_rsma <= 0.0):
            raise ValueError("weights must be positive")

    @property
    def p_max_w(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def p_tol_w(self) -> float:
        return dbm_to_watts(self.p_tol_dbm)


@dataclass(frozen=True)
class ChannelRealization:
    """Per-user linear gains on the NOMA and RSMA subchannels.

    Users are re-indexed so ``gains_noma`` is descending (rank 0 strongest).
    ``delta_* = gain / sigma^2`` (per watt) and ``a_* = sigma^2 / gain``
    (watts) are precomputed for both subchannels.
    """

    gains_noma: np.ndarray
    gains_rsma: np.ndarray
    delta_noma: np.ndarray
    delta_rsma: np.ndarray
    a_noma: np.ndarray
    a_rsma: np.ndarray
    distances_m: np.ndarray

    @property
    def num_users(self) -> int:
        return self.gains_noma.size


def draw_channels(config: ScenarioConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw one Rayleigh-faded realization for every user on both subchannels.

    Users are placed uniformly on a square of side ``area_side_m`` centered
    under the BS (height ``bs_height_m``); 3D distance is clamped below by
    1 m. Squared fading magnitudes are unit-mean exponential, independent per
    subchannel. After the draw, users are re-indexed by descending NOMA gain;
    weights and rate thresholds in the config are rank-based, so no
    permutation of config arrays is needed.
    """
    u = config.num_users
    half = config.area_side_m / 2.0
    xy = rng.uniform(-half, half, size=(u, 2))
    dist = np.sqrt(np.sum(xy**2, axis=1) + config.bs_height_m**2)
    dist = np.maximum(dist, 1.0)

    pl_lin = 10.0 ** (path_loss_db(dist / 1000.0) / 10.0)
    g_noma = rng.exponential(1.0, size=u)
    g_rsma = rng.exponential(1.0, size=u)
    gains_noma = pl_lin * g_noma
    gains_rsma = pl_lin * g_rsma

    order = np.argsort(-gains_noma, kind="stable")
    gains_noma = gains_noma[order]
    gains_rsma = gains_rsma[order]
    dist = dist[order]

    sigma2 = config.noise_w
    return ChannelRealization(
        gains_noma=gains_noma,
        gains_rsma=gains_rsma,
        delta_noma=gains_noma / sigma2,
        delta_rsma=gains_rsma / sigma2,
        a_noma=sigma2 / gains_noma,
        a_rsma=sigma2 / gains_rsma,
        distances_m=dist,
    )


_SYSTEM_KEYS = ("num_users", "p_max_dbm", "noise_dbm", "p_tol_dbm", "area_side_m", "bs_height_m")
_USER_KEYS = ("r_th", "weights_noma", "weights_rsma")
_ALGO_KEYS = ("mode", "epsilon1", "l_max", "solver_tol", "rng_seed")


def load_config(path) -> ScenarioConfig:
    """Read a ScenarioConfig from an INI-style key-value file.

    Sections ``[system]``, ``[users]``, ``[algorithm]``; keys mirror the
    ScenarioConfig field names. Per-user values are comma-separated lists or
    a single scalar broadcast to all users.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_file(fh)

    kwargs = {}
    sys_sec = parser["system"] if parser.has_section("system") else {}
    for key in _SYSTEM_KEYS:
        if key in sys_sec:
            kwargs[key] = int(sys_sec[key]) if key == "num_users" else float(sys_sec[key])
    if parser.has_section("users"):
        for key in _USER_KEYS:
            if key in parser["users"]:
                parts = [p for p in parser["users"][key].replace(",", " ").split() if p]
                vals = [float(p) for p in parts]
                kwargs[key] = vals[0] if len(vals) == 1 else np.array(vals)
    if parser.has_section("algorithm"):
        algo = parser["algorithm"]
        if "mode" in algo:
            kwargs["mode"] = Mode(algo["mode"].strip().lower())
        for key in ("epsilon1", "solver_tol"):
            if key in algo:
                kwargs[key] = float(algo[key])
        for key in ("l_max", "rng_seed"):
            if key in algo:
                kwargs[key] = int(algo[key])
    return ScenarioConfig(**kwargs)
