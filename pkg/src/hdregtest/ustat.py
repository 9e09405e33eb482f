"""Fourth-order U-statistics over distinct index tuples.

Two paths are provided for each statistic. The ``*_bruteforce`` functions
enumerate every ordered 4-tuple of distinct indices and exist as oracles;
the ``*_fast`` functions reduce the same sums to O(n^2) contractions of the
weighted Gram matrix ``A = X W X'``, streamed in row blocks. See
``docs/ustat_reduction.md`` for the inclusion-exclusion algebra.

Both statistics are built from differences of rows, so they are unchanged by
adding a constant row to ``X`` or a constant to ``delta``. The fast paths
centre their inputs first; this is exact in real arithmetic and keeps the
Gram entries small, which limits cancellation in the expansion.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .model import DiagScaling, DomainError

_ENUM_CHUNK = 20000
_GRAM_BLOCK = 128


def _weights(weights, p: int) -> np.ndarray:
    if isinstance(weights, DiagScaling):
        w = weights.inverse
    elif weights is None:
        w = np.ones(p)
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
    if len(w) != p:
        raise DomainError(f"{len(w)} weights for {p} columns")
    if not np.all(w > 0):
        raise DomainError("kernel weights must be strictly positive")
    return w


def _check(X, delta=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < 4:
        raise DomainError(f"fourth-order U-statistic needs n >= 4, got n = {n}")
    if delta is not None:
        delta = np.asarray(getattr(delta, "delta", delta), dtype=float).reshape(-1)
        if len(delta) != n:
            raise DomainError(f"delta has length {len(delta)}, X has {n} rows")
    return X, delta


def falling_factorial(n: int, m: int) -> int:
    """``n! / (n - m)!``, the number of ordered m-tuples of distinct indices."""
    return math.perm(n, m)


def _offdiag_gram_blocks(X, w, block: int | None = None):
    """Yield ``(rows, B[rows, :])`` for the off-diagonal Gram in row blocks.

    Streaming keeps the extra memory at ``block * n`` and the working set in
    cache; the fast paths only need row-wise reductions of ``B``.
    """
    block = block or _GRAM_BLOCK
    Xs = X * np.sqrt(w)
    n = Xs.shape[0]
    for start in range(0, n, block):
        stop = min(start + block, n)
        Bk = Xs[start:stop] @ Xs.T
        idx = np.arange(stop - start)
        Bk[idx, start + idx] = 0.0
        yield slice(start, stop), Bk


def _ordered_quadruples(n: int):
    tuples = itertools.permutations(range(n), 4)
    while True:
        block = np.array(list(itertools.islice(tuples, _ENUM_CHUNK)), dtype=np.intp)
        if block.size == 0:
            return
        yield block.T


def tn_core_bruteforce(X, delta, weights=None) -> float:
    """Weighted difference kernel summed over all ordered distinct 4-tuples.

    Returns ``sum* (X1-X2)' W (X3-X4) (d1-d2)(d3-d4) / (4 P(n,4))``; unit
    weights give the unscaled (ZC) kernel, inverse sample variances give the
    scale-invariant (SF) one. Terms are accumulated with ``math.fsum``.
    """
    X, d = _check(X, delta)
    w = _weights(weights, X.shape[1])
    terms = []
    for i1, i2, i3, i4 in _ordered_quadruples(X.shape[0]):
        inner = np.einsum("kj,kj->k", (X[i1] - X[i2]) * w, X[i3] - X[i4])
        terms.extend(inner * (d[i1] - d[i2]) * (d[i3] - d[i4]))
    return math.fsum(terms) / (4 * falling_factorial(X.shape[0], 4))


def trace_r2_bruteforce(X, weights=None) -> float:
    """Trace-of-squared-correlation estimator by direct enumeration."""
    X, _ = _check(X)
    w = _weights(weights, X.shape[1])
    terms = []
    for i1, i2, i3, i4 in _ordered_quadruples(X.shape[0]):
        a = np.einsum("kj,kj->k", (X[i1] - X[i2]) * w, X[i3] - X[i4])
        b = np.einsum("kj,kj->k", (X[i3] - X[i2]) * w, X[i1] - X[i4])
        terms.extend(a * b)
    return math.fsum(terms) / (2 * falling_factorial(X.shape[0], 4))


def tn_core_fast(X, delta, weights=None) -> float:
    """O(n^2 p) evaluation of :func:`tn_core_bruteforce`.

    With ``B`` the off-diagonal part of the Gram matrix, ``s = sum(d)`` and
    ``q = sum(d^2)``, the distinct-index sum splits as

        4 (n-2)(n-3) S2 - 8 (n-3) S3 + 4 S4

    where S2, S3, S4 are the distinct-index sums of ``B_ik d_i d_k``,
    ``B_ik d_j d_k`` and ``B_ik d_j d_l``.
    """
    X, d = _check(X, delta)
    w = _weights(weights, X.shape[1])
    n = X.shape[0]
    X = X - X.mean(axis=0)
    d = d - d.mean()

    e = d * d
    Bd, Be, r = np.empty(n), np.empty(n), np.empty(n)
    for rows, Bk in _offdiag_gram_blocks(X, w):
        Bd[rows] = Bk @ d
        Be[rows] = Bk @ e
        r[rows] = Bk.sum(axis=1)
    s = d.sum()
    q = e.sum()
    total_Bd = Bd.sum()

    s2 = d @ Bd
    s3 = s * total_Bd - s2 - Be.sum()
    s4 = (s * s - q) * r.sum() - 4.0 * s * total_Bd + 4.0 * Be.sum() + 2.0 * s2

    value = 4.0 * (n - 2) * (n - 3) * s2 - 8.0 * (n - 3) * s3 + 4.0 * s4
    return value / (4 * falling_factorial(n, 4))


def trace_r2_fast(X, weights=None) -> float:
    """O(n^2 p) evaluation of :func:`trace_r2_bruteforce`.

    Uses the three-term expansion into distinct-index sums of ``A_ij^2``,
    ``A_ij A_jk`` and ``A_ij A_kl``, each recovered from the row sums ``r``,
    the grand sum and the squared Frobenius norm of the off-diagonal Gram.
    """
    X, _ = _check(X)
    w = _weights(weights, X.shape[1])
    n = X.shape[0]
    X = X - X.mean(axis=0)

    r = np.empty(n)
    frob = 0.0
    for rows, Bk in _offdiag_gram_blocks(X, w):
        r[rows] = Bk.sum(axis=1)
        frob += np.einsum("ij,ij->", Bk, Bk)
    total = r.sum()
    rr = r @ r

    pairs = frob
    paths = rr - frob
    disjoint = total * total - 4.0 * rr + 2.0 * frob

    return (
        pairs / falling_factorial(n, 2)
        - 2.0 * paths / falling_factorial(n, 3)
        + disjoint / falling_factorial(n, 4)
    )
