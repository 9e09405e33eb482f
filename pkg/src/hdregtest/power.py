"""Asymptotic power of the SF and ZC tests.

Local-alternative powers, the diagonal two-block efficiency ratio, and the
two fixed-alternative normal approximations. The fixed-alternative variance
formulas are evaluated term for term as stated; ``corrected_cross_term``
switches the ``sigma^4 tr(R^2) B1`` term of the first one to the
dimensionally consistent ``sigma^2 tr(R^2) B1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError, ValidationError
from .special import normal_cdf, normal_upper_quantile


@dataclass(frozen=True)
class PowerInputs:
    """Population quantities for the power formulas.

    ``gamma`` (p x m, with ``gamma @ gamma.T == sigma``) is only needed when
    ``kurtosis_excess`` is non-zero. It is never derived from ``sigma``
    because the kurtosis terms depend on the loading itself.
    """

    sigma: np.ndarray
    delta_beta: np.ndarray
    sigma2: float
    n: int
    kurtosis_excess: float = 0.0
    gamma: np.ndarray | None = None

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        d = np.asarray(self.delta_beta, dtype=float).reshape(-1)
        p = S.shape[0]
        if S.shape != (p, p):
            raise ValidationError(f"sigma must be square, got shape {S.shape}")
        if not np.all(np.isfinite(S)):
            raise ValidationError("sigma contains non-finite entries")
        if not np.allclose(S, S.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(S).max())):
            raise ValidationError("sigma is not symmetric")
        if not np.all(np.diag(S) > 0):
            raise ValidationError("sigma must have a strictly positive diagonal")
        if len(d) != p:
            raise ValidationError(f"delta_beta has length {len(d)}, sigma is {p} x {p}")
        if not self.sigma2 > 0:
            raise ValidationError("sigma2 must be positive")
        if int(self.n) < 1:
            raise ValidationError("n must be a positive integer")
        if self.kurtosis_excess < -2:
            raise ValidationError("kurtosis_excess must be >= -2")
        G = None
        if self.gamma is not None:
            G = np.atleast_2d(np.asarray(self.gamma, dtype=float))
            if G.shape[0] != p:
                raise ValidationError(f"gamma must have {p} rows, got {G.shape[0]}")
            if np.abs(G @ G.T - S).max() > 1e-8 * np.abs(S).max():
                raise ValidationError("gamma @ gamma.T does not reproduce sigma")
        object.__setattr__(self, "sigma", S)
        object.__setattr__(self, "delta_beta", d)
        object.__setattr__(self, "gamma", G)

    @property
    def p(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class PowerQuantities:
    B1: float
    B2: float
    B3: float
    trace_R2: float
    trace_S2: float
    shift_Z: float  # ||Sigma delta||^2, the ZC noncentrality numerator
    a_terms: tuple[float, float, float] | None = None  # tr(A1∘A2), tr(A1∘A3), tr[(A0 diag A1)^2]


def power_quantities(inputs: PowerInputs) -> PowerQuantities:
    S, d = inputs.sigma, inputs.delta_beta
    dinv = 1.0 / np.diag(S)
    Sd = S @ d
    B1 = float(d @ Sd)
    B2 = float(Sd @ (dinv * Sd))
    u = dinv * Sd
    B3 = float(u @ S @ u)
    scale = np.sqrt(dinv)
    R = S * scale[:, None] * scale[None, :]
    trace_R2 = float(np.einsum("ij,ij->", R, R))
    trace_S2 = float(np.einsum("ij,ij->", S, S))

    a_terms = None
    if inputs.gamma is not None:
        G = inputs.gamma
        A0 = G.T @ G
        g = G.T @ d
        A1 = np.outer(g, g)
        h = G.T @ u
        A2 = np.outer(h, h)
        A3 = G.T @ R @ G
        a1 = np.diag(A1)
        # tr(A o B) of a Hadamard product is the sum of diagonal products.
        M = A0 * a1[None, :]
        a_terms = (
            float(a1 @ np.diag(A2)),
            float(a1 @ np.diag(A3)),
            float(np.einsum("ij,ji->", M, M)),
        )
    return PowerQuantities(B1, B2, B3, trace_R2, trace_S2, float(Sd @ Sd), a_terms)


def _shifted_power(alpha: float, shift: float) -> float:
    if shift == 0.0:
        # Phi(-z_alpha) is alpha by definition; skip the inverse round trip.
        return float(alpha)
    return normal_cdf(-normal_upper_quantile(alpha) + shift)


def local_power_sf(inputs: PowerInputs, alpha: float = 0.05) -> float:
    q = power_quantities(inputs)
    shift = inputs.n * q.B2 / (math.sqrt(2.0 * q.trace_R2) * inputs.sigma2)
    return _shifted_power(alpha, shift)


def local_power_zc(inputs: PowerInputs, alpha: float = 0.05) -> float:
    q = power_quantities(inputs)
    shift = inputs.n * q.shift_Z / (math.sqrt(2.0 * q.trace_S2) * inputs.sigma2)
    return _shifted_power(alpha, shift)


def are_case_iii(sigma1_sq: float, sigma2_sq: float) -> float:
    """Efficiency of SF relative to ZC for a diagonal two-block covariance.

    The first half of the coordinates (where the signal sits) has variance
    ``sigma1_sq``, the rest ``sigma2_sq``.
    """
    if not (sigma1_sq > 0 and sigma2_sq > 0):
        raise DomainError("variances must be positive")
    return math.sqrt(sigma1_sq**2 + sigma2_sq**2) / (math.sqrt(2.0) * sigma1_sq)


def _kurtosis_terms(q: PowerQuantities, kurtosis_excess: float):
    if kurtosis_excess == 0.0:
        return 0.0, 0.0, 0.0
    if q.a_terms is None:
        raise ValidationError("non-zero kurtosis_excess requires the factor loading gamma")
    return q.a_terms


def fixed_alt_variance_A1(
    q: PowerQuantities,
    sigma2: float,
    trace_R2: float | None = None,
    kurtosis_excess: float = 0.0,
    corrected_cross_term: bool = False,
) -> float:
    tr = q.trace_R2 if trace_R2 is None else trace_R2
    _, t13, t0 = _kurtosis_terms(q, kurtosis_excess)
    cross = (sigma2 if corrected_cross_term else sigma2**2) * tr * q.B1
    return (
        2.0 * sigma2**2 * tr
        + 2.0 * q.B1**2 * tr
        + 4.0 * cross
        + 4.0 * kurtosis_excess * (q.B1 + sigma2) * t13
        + 2.0 * kurtosis_excess**2 * t0
    )


def fixed_alt_variance_A2(q: PowerQuantities, sigma2: float, kurtosis_excess: float = 0.0) -> float:
    t12, _, _ = _kurtosis_terms(q, kurtosis_excess)
    return (q.B1 + sigma2) * q.B3 + q.B2**2 + kurtosis_excess * t12


def fixed_alt_power(
    which: str,
    inputs: PowerInputs,
    alpha: float = 0.05,
    corrected_cross_term: bool = False,
) -> float:
    """Normal approximation to SF power under fixed alternative ``"A1"`` or ``"A2"``.

    The A2 branch divides the critical-value term by ``sqrt(n - 1) sigma_A2``.
    """
    q = power_quantities(inputs)
    s2, n = inputs.sigma2, inputs.n
    if which == "A1":
        var = fixed_alt_variance_A1(q, s2, kurtosis_excess=inputs.kurtosis_excess,
                                    corrected_cross_term=corrected_cross_term)
        crit_scale = 1.0
    elif which == "A2":
        var = fixed_alt_variance_A2(q, s2, inputs.kurtosis_excess)
        if n < 2:
            raise DomainError("the A2 approximation needs n >= 2")
        crit_scale = math.sqrt(n - 1)
    else:
        raise ValidationError(f"unknown fixed alternative {which!r}; use 'A1' or 'A2'")
    if not var > 0:
        raise DomainError(f"fixed-alternative variance {var} is not positive")
    sd = math.sqrt(var)
    z = normal_upper_quantile(alpha)
    return normal_cdf(-math.sqrt(2.0 * q.trace_R2) * s2 * z / (crit_scale * sd) + n * q.B2 / sd)
