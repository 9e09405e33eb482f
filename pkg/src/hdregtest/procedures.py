"""The four simultaneous tests of ``H0: beta = beta0``.

``sf_test``
    Scale-invariant U-statistic standardized by the column sample variances.
``zc_test``
    The same kernel without standardization.
``eb_test``
    Empirical-Bayes score statistic, calibrated by permuting the residuals.
``f_test``
    Classical F test, only defined when ``p <= n - 2``.

Each returns a :class:`~hdregtest.model.TestReport` whose ``reject`` flag is
``p_value <= alpha``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .estimators import clamp_trace, diag_sample_variances, sigma2_hat
from .model import (
    DegenerateInputError,
    DomainError,
    NotApplicableError,
    RegressionSample,
    TestReport,
    ValidationError,
    residuals,
)
from .special import f_sf, normal_sf
from .ustat import tn_core_fast, trace_r2_fast

DEFAULT_EB_SEED = 20111
COND_LIMIT = 1e12


@dataclass(frozen=True)
class TestConfig:
    __test__ = False

    alpha: float = 0.05
    eb_permutations: int = 200
    rng_seed: int = DEFAULT_EB_SEED

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.eb_permutations) < 1:
            raise ValidationError("eb_permutations must be a positive integer")
        if int(self.rng_seed) < 0:
            raise ValidationError("rng_seed must be non-negative")


def _standardize(n: int, stat: float, s2: float, trace: float) -> float:
    if s2 == 0.0:
        # Constant residuals: every kernel term is a product of zero differences.
        return 0.0
    return n * stat / (s2 * math.sqrt(2.0 * trace))


def _clamped(value: float, p: int, name: str) -> tuple[float, tuple[str, ...]]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        v, hit = clamp_trace(value, p, name)
    return v, ((f"{name} clamped to floor",) if hit else ())


def sf_test(sample: RegressionSample, cfg: TestConfig = TestConfig()) -> TestReport:
    """Scale-invariant test; rejects when ``n T_n >= sqrt(2 tr(R^2)) sigma^2 z_alpha``."""
    sample.require_n(5, "sf_test")
    d_s = diag_sample_variances(sample.X)
    delta = residuals(sample)
    stat = tn_core_fast(sample.X, delta, d_s)
    trace, notes = _clamped(trace_r2_fast(sample.X, d_s), sample.p, "trace_R2_hat")
    s2 = sigma2_hat(sample)
    z = _standardize(sample.n, stat, s2, trace)
    return TestReport(
        method="SF",
        statistic=stat,
        z_value=z,
        p_value=normal_sf(z),
        alpha=cfg.alpha,
        nuisance={"trace_R2_hat": trace, "sigma2_hat": s2},
        warnings=notes,
    )


def zc_test(sample: RegressionSample, cfg: TestConfig = TestConfig()) -> TestReport:
    """Unstandardized U-statistic test, calibrated with the trace of ``Sigma^2``."""
    sample.require_n(5, "zc_test")
    delta = residuals(sample)
    stat = tn_core_fast(sample.X, delta, None)
    trace, notes = _clamped(trace_r2_fast(sample.X, None), sample.p, "trace_S2_hat")
    s2 = sigma2_hat(sample)
    z = _standardize(sample.n, stat, s2, trace)
    return TestReport(
        method="ZC",
        statistic=stat,
        z_value=z,
        p_value=normal_sf(z),
        alpha=cfg.alpha,
        nuisance={"trace_S2_hat": trace, "sigma2_hat": s2},
        warnings=notes,
    )


def eb_statistic(X: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``||X' r||^2 / (n ||r||^2)`` for one residual vector or a stack of them (rows)."""
    num = np.sum((r @ X) ** 2, axis=-1)
    return num / (X.shape[0] * np.sum(r * r, axis=-1))


def eb_test(sample: RegressionSample, cfg: TestConfig = TestConfig()) -> TestReport:
    """Empirical-Bayes score test with a permutation p-value.

    The residual ``Y - mean(Y) - X beta0`` is permuted ``cfg.eb_permutations``
    times; ``p = (1 + #{G* >= G}) / (1 + B)``.
    """
    sample.require_n(3, "eb_test")
    r = sample.Y - sample.Y.mean() - sample.X @ sample.beta0
    if not np.any(r != 0.0):
        raise DegenerateInputError("residual vector is identically zero; G_n undefined")
    stat = float(eb_statistic(sample.X, r))

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(cfg.rng_seed))))
    B = int(cfg.eb_permutations)
    perms = rng.permuted(np.broadcast_to(r, (B, len(r))), axis=1)
    null = eb_statistic(sample.X, perms)
    # Ties between permutations that reproduce the observed ordering must count.
    exceed = int(np.count_nonzero(null >= stat * (1.0 - 1e-12)))
    return TestReport(
        method="EB",
        statistic=stat,
        z_value=None,
        p_value=(1 + exceed) / (1 + B),
        alpha=cfg.alpha,
        nuisance={"permutations": float(B)},
    )


def f_test(sample: RegressionSample, cfg: TestConfig = TestConfig()) -> TestReport:
    """Classical F test of all slopes, in full-versus-intercept RSS form."""
    n, p = sample.n, sample.p
    if p > n - 2:
        raise NotApplicableError(
            f"F test undefined for p = {p} > n - 2 = {n - 2}: no residual degrees of freedom"
        )
    delta = residuals(sample).delta
    U = np.column_stack([np.ones(n), sample.X])
    Q, R, _ = scipy.linalg.qr(U, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag[-1] == 0.0 or diag[0] / diag[-1] > COND_LIMIT:
        raise NotApplicableError("design matrix (1, X) is numerically rank deficient")
    fitted = Q @ (Q.T @ delta)
    rss_full = float(np.sum((delta - fitted) ** 2))
    rss_null = float(np.sum((delta - delta.mean()) ** 2))
    df1, df2 = p, n - p - 1
    if rss_full == 0.0:
        raise DegenerateInputError("full model fits the data exactly; F undefined")
    stat = ((rss_null - rss_full) / df1) / (rss_full / df2)
    return TestReport(
        method="F",
        statistic=stat,
        z_value=None,
        p_value=min(1.0, max(0.0, f_sf(stat, df1, df2))),
        alpha=cfg.alpha,
        nuisance={"df1": float(df1), "df2": float(df2), "rss_full": rss_full, "rss_null": rss_null},
    )


TESTS = {"SF": sf_test, "ZC": zc_test, "EB": eb_test, "F": f_test}


def run_test(method: str, sample: RegressionSample, cfg: TestConfig = TestConfig()) -> TestReport:
    try:
        fn = TESTS[method.upper()]
    except KeyError:
        raise ValidationError(f"unknown method {method!r}; choose from {', '.join(TESTS)}") from None
    return fn(sample, cfg)
