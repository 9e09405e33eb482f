"""Nuisance estimators: column variances, residual variance, trace terms."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import DiagScaling, RegressionSample, ValidationError, residuals
from .ustat import trace_r2_fast

TRACE_FLOOR = 1e-12


@dataclass(frozen=True)
class NuisanceEstimates:
    trace_R2_hat: float
    sigma2_hat: float
    trace_S2_hat: float
    d_s: DiagScaling
    clamped: tuple[str, ...] = ()


def diag_sample_variances(X) -> DiagScaling:
    """Column sample variances (denominator n - 1).

    Raises :class:`SingularScalingError` naming every constant column.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise ValidationError("sample variances need n >= 2")
    return DiagScaling(np.var(X, axis=0, ddof=1))


def sigma2_hat(sample: RegressionSample) -> float:
    """Sample variance of the null residuals ``Y - X beta0``."""
    if sample.n < 2:
        raise ValidationError("residual variance needs n >= 2")
    return float(np.var(residuals(sample).delta, ddof=1))


def clamp_trace(value: float, p: int, name: str) -> tuple[float, bool]:
    """Floor a trace estimate at ``1e-12 * p``; returns (value, was_clamped)."""
    floor = TRACE_FLOOR * p
    if value < floor:
        warnings.warn(
            f"{name} = {value:.3g} below floor; clamped to {floor:.3g}",
            RuntimeWarning,
            stacklevel=3,
        )
        return floor, True
    return float(value), False


def trace_estimates(sample: RegressionSample, d_s: DiagScaling | None = None) -> NuisanceEstimates:
    if sample.n < 4:
        raise ValidationError(f"trace estimators need n >= 4, got n = {sample.n}")
    if d_s is None:
        d_s = diag_sample_variances(sample.X)
    tr_r2, c1 = clamp_trace(trace_r2_fast(sample.X, d_s), sample.p, "trace_R2_hat")
    tr_s2, c2 = clamp_trace(trace_r2_fast(sample.X, None), sample.p, "trace_S2_hat")
    clamped = tuple(name for name, hit in (("trace_R2_hat", c1), ("trace_S2_hat", c2)) if hit)
    return NuisanceEstimates(
        trace_R2_hat=tr_r2,
        sigma2_hat=sigma2_hat(sample),
        trace_S2_hat=tr_s2,
        d_s=d_s,
        clamped=clamped,
    )
