"""Shared data model: regression samples, residuals, scalings, reports.

All containers are frozen dataclasses holding read-only numpy arrays, so a
sample can be shared across threads without copying.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

METHODS = ("SF", "ZC", "EB", "F")


class ValidationError(ValueError):
    """Input failed a shape, finiteness or range check."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularScalingError(ValidationError):
    """A covariate column has zero sample variance."""

    def __init__(self, columns):
        self.columns = tuple(int(c) for c in columns)
        super().__init__(
            "zero sample variance in column(s) "
            + ", ".join(str(c) for c in self.columns)
            + "; the scale-invariant statistic is undefined"
        )


class DegenerateInputError(ValidationError):
    """The data make a statistic undefined (e.g. an all-zero residual)."""


class NotApplicableError(ValidationError):
    """The requested test cannot be run at this (n, p)."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RegressionSample:
    """Design matrix ``X`` (n x p), response ``Y`` (n) and null coefficients ``beta0`` (p)."""

    X: np.ndarray
    Y: np.ndarray
    beta0: np.ndarray

    def __init__(self, X, Y, beta0=None):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValidationError(f"X must be a matrix, got {X.ndim} dimensions")
        if Y.ndim != 1:
            Y = Y.reshape(-1) if Y.ndim == 2 and 1 in Y.shape else Y
        if Y.ndim != 1:
            raise ValidationError("Y must be a vector")
        n, p = X.shape
        if len(Y) != n:
            raise ValidationError(f"len(Y) = {len(Y)} but X has {n} rows")
        if beta0 is None:
            beta0 = np.zeros(p)
        beta0 = np.asarray(beta0, dtype=float).reshape(-1)
        if len(beta0) != p:
            raise ValidationError(f"len(beta0) = {len(beta0)} but X has {p} columns")
        for name, arr in (("X", X), ("Y", Y), ("beta0", beta0)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite entries")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "Y", _readonly(Y))
        object.__setattr__(self, "beta0", _readonly(beta0))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def require_n(self, minimum: int, what: str) -> None:
        if self.n < minimum:
            raise ValidationError(f"{what} needs n >= {minimum}, got n = {self.n}")


@dataclass(frozen=True)
class ResidualVector:
    """Residuals under the null, ``delta = Y - X beta0``."""

    delta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "delta", _readonly(self.delta))

    def __len__(self) -> int:
        return len(self.delta)


@dataclass(frozen=True)
class DiagScaling:
    """Per-column variances and their reciprocals (the kernel weights)."""

    variances: np.ndarray
    inverse: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=float).reshape(-1)
        bad = np.flatnonzero(~(v > 0))
        if bad.size:
            raise SingularScalingError(bad)
        object.__setattr__(self, "variances", _readonly(v))
        object.__setattr__(self, "inverse", _readonly(1.0 / v))

    @classmethod
    def unit(cls, p: int) -> "DiagScaling":
        return cls(np.ones(p))

    def __len__(self) -> int:
        return len(self.variances)


@dataclass(frozen=True)
class TestReport:
    """Outcome of one test procedure.

    ``z_value`` is ``None`` for the permutation (EB) and F tests, where the
    p-value is the primary output. ``reject`` always equals
    ``p_value <= alpha``.
    """

    __test__ = False  # keep pytest from collecting this class

    method: str
    statistic: float
    z_value: float | None
    p_value: float
    alpha: float
    nuisance: Mapping[str, float] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @property
    def reject(self) -> bool:
        return self.p_value <= self.alpha

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValidationError(f"p-value {self.p_value} outside [0, 1]")
        object.__setattr__(self, "nuisance", dict(self.nuisance))


def residuals(sample: RegressionSample) -> ResidualVector:
    return ResidualVector(sample.Y - sample.X @ sample.beta0)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def _read_numeric_csv(path, what: str) -> np.ndarray:
    path = Path(path)
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=",")
        for lineno, record in enumerate(reader, start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            try:
                values = [float(cell) for cell in record]
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header
                for col, cell in enumerate(record, start=1):
                    try:
                        float(cell)
                    except ValueError:
                        raise ValidationError(
                            f"{what} file {path}: non-numeric value {cell!r} "
                            f"at row {lineno}, column {col}"
                        ) from None
                raise
            if rows and len(values) != len(rows[0]):
                raise ValidationError(
                    f"{what} file {path}: row {lineno} has {len(values)} columns, "
                    f"expected {len(rows[0])}"
                )
            for col, v in enumerate(values, start=1):
                if not np.isfinite(v):
                    raise ValidationError(
                        f"{what} file {path}: non-finite value at row {lineno}, column {col}"
                    )
            rows.append(values)
    if not rows:
        raise ValidationError(f"{what} file {path} holds no numeric rows")
    return np.array(rows, dtype=float)


def _read_column(path, what: str) -> np.ndarray:
    arr = _read_numeric_csv(path, what)
    if arr.shape[1] != 1:
        raise ValidationError(f"{what} file must have a single column, found {arr.shape[1]}")
    return arr[:, 0]


def load_sample(x_path, y_path, beta0_path=None) -> RegressionSample:
    """Build a sample from CSV files; ``beta0`` defaults to the zero vector."""
    X = _read_numeric_csv(x_path, "X")
    Y = _read_column(y_path, "Y")
    beta0 = _read_column(beta0_path, "beta0") if beta0_path is not None else None
    return RegressionSample(X, Y, beta0)
