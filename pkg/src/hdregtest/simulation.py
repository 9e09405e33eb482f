"""Moving-average design generator and the Monte Carlo size/power harness.

Randomness is organised in counter-based Philox streams keyed by
``(master_seed, cell key, replication, purpose)``. The cell key hashes only
the data-generating structure ``(n, p, T, scenario, residual)``, so cells that
differ only in the alternative reuse the same designs and errors. Every
replication owns its streams, which makes the results independent of the
number of worker threads.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import RegressionSample, ValidationError
from .procedures import TestConfig, eb_test, sf_test, zc_test

logger = logging.getLogger(__name__)

SCENARIOS = ("I", "II")
RESIDUALS = ("Normal4", "CenteredGamma")
ALTERNATIVES = ("Null", "Nonsparse", "Sparse5")
SIM_METHODS = ("SF", "ZC", "EB")

_TAG_DESIGN, _TAG_RESPONSE, _TAG_EB = 1, 2, 3
_TAG_RHO, _TAG_MU = 11, 12

# Scenario II tail innovations: Gamma(shape 4, scale 1) minus its mean.
_GAMMA_SHAPE_X = 4.0
# Centered-gamma errors: Gamma(shape 1, scale 2) minus 2, variance 4.
_GAMMA_SHAPE_E, _GAMMA_SCALE_E = 1.0, 2.0
_NORMAL_ERROR_SD = 2.0


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    p: int
    T: int
    scenario: str = "I"
    residual: str = "Normal4"
    alternative: str = "Null"
    beta_norm_sq: float = 0.0
    master_seed: int = 2013
    replications: int = 1000
    alpha: float = 0.05
    eb_permutations: int = 200

    def __post_init__(self):
        for name in ("n", "p", "T", "replications", "eb_permutations"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if self.n < 5:
            raise ValidationError("n must be at least 5")
        if not self.T < self.p:
            raise ValidationError(f"moving-average order T = {self.T} must be < p = {self.p}")
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.residual not in RESIDUALS:
            raise ValidationError(f"residual must be one of {RESIDUALS}, got {self.residual!r}")
        if self.alternative not in ALTERNATIVES:
            raise ValidationError(
                f"alternative must be one of {ALTERNATIVES}, got {self.alternative!r}"
            )
        if self.beta_norm_sq < 0:
            raise ValidationError("beta_norm_sq must be non-negative")
        if (self.alternative == "Null") != (self.beta_norm_sq == 0):
            raise ValidationError("alternative 'Null' is required exactly when beta_norm_sq = 0")
        if self.alternative == "Sparse5" and self.p < 5:
            raise ValidationError("the sparse alternative needs p >= 5")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        if int(self.master_seed) != self.master_seed or self.master_seed < 0:
            raise ValidationError("master_seed must be a non-negative integer")

    @property
    def cell_key(self) -> int:
        text = f"{self.n}|{self.p}|{self.T}|{self.scenario}|{self.residual}"
        return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")

    def label(self) -> str:
        return (
            f"n={self.n},p={self.p},T={self.T},scenario={self.scenario},"
            f"residual={self.residual},alternative={self.alternative},"
            f"beta_norm_sq={self.beta_norm_sq}"
        )


@dataclass
class MonteCarloResult:
    config: GeneratorConfig
    rejections: dict[str, int]
    replications: int
    rho_used: np.ndarray
    mu_used: np.ndarray
    p_values: dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    failures: int = 0

    def rejection_rate(self, method: str) -> float:
        if self.replications == 0:
            return float("nan")
        return self.rejections[method] / self.replications

    def mc_standard_error(self, method: str) -> float:
        r = self.rejection_rate(method)
        return math.sqrt(r * (1.0 - r) / self.replications)

    @property
    def rates(self) -> dict[str, float]:
        return {m: self.rejection_rate(m) for m in self.rejections}


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def draw_experiment_constants(cfg: GeneratorConfig) -> tuple[np.ndarray, np.ndarray]:
    """MA coefficients ``rho ~ U(0,1)`` (length T) and means ``mu ~ U(2,3)`` (length p).

    Both depend on ``master_seed`` only; a longer draw extends a shorter one,
    so every cell of a grid sees the same leading coefficients.
    """
    rho = _stream(cfg.master_seed, 0, 0, _TAG_RHO).uniform(0.0, 1.0, size=cfg.T)
    mu = _stream(cfg.master_seed, 0, 0, _TAG_MU).uniform(2.0, 3.0, size=cfg.p)
    return rho, mu


def normal_split(cfg: GeneratorConfig) -> int:
    """Number of leading standard-normal innovations in Scenario II."""
    return (cfg.p + cfg.T - 1) // 2


def gen_innovations(cfg: GeneratorConfig, rng: np.random.Generator) -> np.ndarray:
    width = cfg.p + cfg.T - 1
    if cfg.scenario == "I":
        return rng.standard_normal((cfg.n, width))
    k = normal_split(cfg)
    Z = np.empty((cfg.n, width))
    Z[:, :k] = rng.standard_normal((cfg.n, k))
    Z[:, k:] = rng.standard_gamma(_GAMMA_SHAPE_X, size=(cfg.n, width - k)) - _GAMMA_SHAPE_X
    return Z


def moving_average(Z: np.ndarray, rho: np.ndarray, p: int) -> np.ndarray:
    """``X[:, j] = sum_l rho[l] * Z[:, j + l]`` for ``j < p``."""
    X = np.zeros((Z.shape[0], p))
    for lag, coef in enumerate(rho):
        X += coef * Z[:, lag : lag + p]
    return X


def gen_design(cfg: GeneratorConfig, rho, mu, replication_index: int) -> np.ndarray:
    rng = _stream(cfg.master_seed, cfg.cell_key, replication_index, _TAG_DESIGN)
    Z = gen_innovations(cfg, rng)
    return moving_average(Z, np.asarray(rho), cfg.p) + np.asarray(mu)[None, :]


def gen_beta(cfg: GeneratorConfig) -> np.ndarray:
    beta = np.zeros(cfg.p)
    if cfg.alternative == "Null":
        return beta
    k = cfg.p // 2 if cfg.alternative == "Nonsparse" else 5
    if k > cfg.p or k == 0:
        raise ValidationError(f"cannot place {cfg.alternative} signal in p = {cfg.p}")
    beta[:k] = math.sqrt(cfg.beta_norm_sq / k)
    return beta


def gen_errors(cfg: GeneratorConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    if cfg.residual == "Normal4":
        return _NORMAL_ERROR_SD * rng.standard_normal(size)
    mean = _GAMMA_SHAPE_E * _GAMMA_SCALE_E
    return _GAMMA_SCALE_E * rng.standard_gamma(_GAMMA_SHAPE_E, size=size) - mean


def gen_response(X, beta, cfg: GeneratorConfig, replication_index: int) -> np.ndarray:
    rng = _stream(cfg.master_seed, cfg.cell_key, replication_index, _TAG_RESPONSE)
    return X @ beta + gen_errors(cfg, rng, X.shape[0])


def eb_seed(cfg: GeneratorConfig, replication_index: int) -> int:
    rng = _stream(cfg.master_seed, cfg.cell_key, replication_index, _TAG_EB)
    return int(rng.integers(0, 2**63 - 1))


def _replicate(cfg: GeneratorConfig, rho, mu, beta, index: int):
    X = gen_design(cfg, rho, mu, index)
    Y = gen_response(X, beta, cfg, index)
    sample = RegressionSample(X, Y)
    tcfg = TestConfig(alpha=cfg.alpha, eb_permutations=cfg.eb_permutations,
                      rng_seed=eb_seed(cfg, index))
    return (
        sf_test(sample, tcfg).p_value,
        zc_test(sample, tcfg).p_value,
        eb_test(sample, tcfg).p_value,
    )


def run_cell(cfg: GeneratorConfig, threads: int = 1) -> MonteCarloResult:
    """Monte Carlo rejection rates of SF, ZC and EB at one design cell (beta0 = 0)."""
    rho, mu = draw_experiment_constants(cfg)
    beta = gen_beta(cfg)

    def work(index):
        try:
            return _replicate(cfg, rho, mu, beta, index)
        except ValidationError as exc:
            logger.warning("cell %s replication %d skipped: %s", cfg.label(), index, exc)
            return None

    indices = range(cfg.replications)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, indices))
    else:
        outcomes = [work(i) for i in indices]

    kept = np.array([o for o in outcomes if o is not None], dtype=float).reshape(-1, 3)
    failures = len(outcomes) - len(kept)
    p_values = {m: kept[:, j] for j, m in enumerate(SIM_METHODS)}
    rejections = {m: int(np.count_nonzero(v <= cfg.alpha)) for m, v in p_values.items()}
    return MonteCarloResult(
        config=cfg,
        rejections=rejections,
        replications=len(kept),
        rho_used=rho,
        mu_used=mu,
        p_values=p_values,
        failures=failures,
    )


@dataclass
class CellError:
    config: GeneratorConfig
    message: str


def run_grid(grid, threads: int = 1, progress=None) -> list[MonteCarloResult | CellError]:
    """Run every cell in order; a failing cell yields a :class:`CellError` entry."""
    grid = list(grid)
    if not grid:
        raise ValidationError("simulation grid is empty")
    out: list[MonteCarloResult | CellError] = []
    for k, cfg in enumerate(grid):
        try:
            out.append(run_cell(cfg, threads=threads))
        except Exception as exc:  # noqa: BLE001 - reported per cell, grid continues
            logger.error("cell %s failed: %s", cfg.label(), exc)
            out.append(CellError(cfg, str(exc)))
        if progress is not None:
            progress(k + 1, len(grid), cfg)
    return out


def config_dict(cfg: GeneratorConfig) -> dict:
    return asdict(cfg)
