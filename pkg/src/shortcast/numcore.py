"""Dense least squares, companion-matrix stability and summary statistics."""

from __future__ import annotations

import logging
import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import EmptyInput, RankDeficient

logger = logging.getLogger(__name__)

# relative to the largest |diag(R)|
RANK_TOL = 1e-10

POWER_MAX_ITER = 500
POWER_TOL = 1e-9
POWER_BLOCK = 8


def _as_matrix(a, name: str) -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def lstsq(design, targets) -> np.ndarray:
    """Least-squares solution of ``design @ B ~= targets`` via Householder QR.

    Raises RankDeficient when some ``|R[j, j]|`` falls below ``RANK_TOL``
    times the largest diagonal magnitude; ``exc.columns`` lists the
    offending design columns.
    """
    X = _as_matrix(design, "design")
    Y = _as_matrix(targets, "targets")
    n, m = X.shape
    if Y.shape[0] != n:
        raise ValueError(f"design has {n} rows but targets has {Y.shape[0]}")
    if n < m:
        raise RankDeficient(f"underdetermined system: {n} rows < {m} columns", list(range(n, m)))
    if m == 0:
        return np.zeros((0, Y.shape[1]))

    Q, R = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(R))
    scale = diag.max()
    bad = [int(j) for j in np.flatnonzero(diag < RANK_TOL * scale)] if scale > 0 else list(range(m))
    if bad:
        raise RankDeficient(f"collinear regressors at columns {bad}", bad)
    return solve_triangular(R, Q.T @ Y, lower=False)


class SpectralRadius(NamedTuple):
    radius: float
    converged: bool
    iterations: int


def companion_matrix(coefficients: Sequence, lag: int | None = None) -> np.ndarray:
    mats = [np.atleast_2d(np.asarray(a, dtype=float)) for a in coefficients]
    p = len(mats) if lag is None else lag
    if p < 1 or len(mats) < p:
        raise ValueError(f"need {p} coefficient matrices, got {len(mats)}")
    k = mats[0].shape[0]
    for a in mats[:p]:
        if a.shape != (k, k):
            raise ValueError(f"coefficient matrices must all be {k}x{k}")
    top = np.hstack(mats[:p])
    if p == 1:
        return top
    bottom = np.hstack([np.eye(k * (p - 1)), np.zeros((k * (p - 1), k))])
    return np.vstack([top, bottom])


def companion_spectral_radius(coefficients: Sequence, lag: int | None = None) -> SpectralRadius:
    """Power-iteration estimate of the companion matrix's spectral radius.

    Orthogonal (block) power iteration: a block of up to ``POWER_BLOCK``
    vectors is repeatedly multiplied and re-orthonormalized, and the radius
    is read off the Ritz values of the projected matrix. A block handles
    complex-conjugate and nearly tied dominant eigenvalues, where a single
    vector oscillates or crawls. The model is stable iff the radius is
    below one; non-convergence is reported through ``converged``.
    """
    M = companion_matrix(coefficients, lag)
    dim = M.shape[0]
    if dim == 1:
        return SpectralRadius(abs(float(M[0, 0])), True, 0)

    s = min(dim, POWER_BLOCK)
    # deterministic, generic start block
    grid = np.arange(1, dim + 1, dtype=float)[:, None] * np.arange(1, s + 1, dtype=float)[None, :]
    Q, _ = np.linalg.qr(np.sin(grid) + 1.0 / (grid + 1.0))
    estimate = math.nan
    for it in range(1, POWER_MAX_ITER + 1):
        Z = M @ Q
        ritz = np.linalg.eigvals(Q.T @ Z)
        new = float(np.max(np.abs(ritz)))
        if abs(new - estimate) <= POWER_TOL * max(1.0, new):
            return SpectralRadius(new, True, it)
        estimate = new
        Q, _ = np.linalg.qr(Z)
        if not np.any(Z):
            return SpectralRadius(0.0, True, it)
    logger.warning("power iteration did not converge in %d iterations", POWER_MAX_ITER)
    return SpectralRadius(estimate, False, POWER_MAX_ITER)


def mean_and_std(values: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation (divisor n - 1).

    A single value has no sample spread; its std is reported as 0.0 and a
    warning is logged.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyInput("mean_and_std needs at least one value")
    mean = float(math.fsum(v) / v.size)
    if v.size == 1:
        logger.warning("sample std undefined for a single value; using 0.0")
        return mean, 0.0
    dev = v - mean
    return mean, math.sqrt(math.fsum(dev * dev) / (v.size - 1))
