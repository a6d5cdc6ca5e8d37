"""Augmented Dickey-Fuller test, differencing to stationarity and its inverse."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConstantSeries, OrderMismatch, RankDeficient, SeriesTooShort
from .numcore import lstsq

logger = logging.getLogger(__name__)

DEFAULT_MAX_LAG = 10
MAX_ORDER = 2

# MacKinnon (2010) response surface, one variable, constant and no trend:
#   crit(T) = b0 + b1/T + b2/T^2 + b3/T^3
# J. G. MacKinnon, "Critical Values for Cointegration Tests",
# Queen's Economics Department Working Paper 1227 (2010), Table 2.
_TAU_C = {
    "1%": (-3.43035, -6.5393, -16.786, -79.433),
    "5%": (-2.86154, -2.8903, -4.234, -40.040),
    "10%": (-2.56677, -1.5384, -2.809, 0.0),
}

# residual sum of squares below this fraction of the total sum of squares of
# the differenced series means the regression fits exactly (deterministic
# series), where the t-ratio is 0/0
_EXACT_FIT = 1e-18


def critical_values(nobs: int) -> tuple[float, float, float]:
    t = float(nobs)
    return tuple(b0 + b1 / t + b2 / t**2 + b3 / t**3 for b0, b1, b2, b3 in _TAU_C.values())


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    critical_1pct: float
    critical_5pct: float
    critical_10pct: float
    is_stationary_5pct: bool
    lags_used: int
    observations_used: int


@dataclass(frozen=True)
class DiffMeta:
    order: int
    anchors: tuple[float, ...] = ()
    achieved_stationarity: bool = True

    def __post_init__(self):
        if len(self.anchors) != self.order:
            raise ValueError("anchors length must equal order")


def is_constant(series: Sequence[float]) -> bool:
    x = np.asarray(series, dtype=float)
    return float(np.var(x)) <= 1e-12 * float(np.mean(x)) ** 2 + 1e-12


def _adf_design(x: np.ndarray, lag: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows t = start..n-1 of the augmented regression (0-based into x)."""
    dx = np.diff(x)
    # dx[t-1] = x[t] - x[t-1]
    rows = np.arange(start, len(x))
    y = dx[rows - 1]
    cols = [np.ones(len(rows)), x[rows - 1]]
    for i in range(1, lag + 1):
        cols.append(dx[rows - 1 - i])
    return np.column_stack(cols), y


def _fit(X: np.ndarray, y: np.ndarray):
    beta = lstsq(X, y)[:, 0]
    resid = y - X @ beta
    return beta, float(resid @ resid)


def adf_test(series: Sequence[float], max_lag: int = DEFAULT_MAX_LAG) -> AdfResult:
    """ADF test with a constant and no trend; the lag is chosen by AIC.

    Candidate lags 0..max_lag are compared on the common sample that the
    largest lag allows; the selected lag is then refitted on every usable
    row. Lags whose regressors are collinear are skipped.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = len(x)
    if n < max_lag + 10:
        raise SeriesTooShort(f"need at least {max_lag + 10} values for max_lag={max_lag}, got {n}")
    if is_constant(x):
        raise ConstantSeries("series is constant")

    start = max_lag + 1
    best_lag, best_aic = None, math.inf
    for lag in range(max_lag + 1):
        X, y = _adf_design(x, lag, start)
        try:
            _, rss = _fit(X, y)
        except RankDeficient:
            continue
        m = len(y)
        aic = m * math.log(max(rss, 1e-300) / m) + 2 * X.shape[1]
        if aic < best_aic - 1e-12:
            best_lag, best_aic = lag, aic
    if best_lag is None:
        raise RankDeficient("no lag order gives a full-rank ADF regression")

    X, y = _adf_design(x, best_lag, best_lag + 1)
    beta, rss = _fit(X, y)
    m, q = X.shape
    if rss <= _EXACT_FIT * max(float(y @ y), 1e-300) or m == q:
        # deterministic path: a strictly mean-reverting coefficient is an
        # infinitely strong rejection, a zero one is a unit root
        stat = -math.inf if beta[1] < -1e-8 else 0.0
    else:
        sigma2 = rss / (m - q)
        # Var(beta) = sigma2 * (X'X)^-1, taken from R^-1 of the QR factor
        R = np.linalg.qr(X, mode="r")
        rinv = np.linalg.solve(R, np.eye(q))
        var_b = sigma2 * float(rinv[1] @ rinv[1])
        stat = float(beta[1] / math.sqrt(var_b))
    c1, c5, c10 = critical_values(m)
    return AdfResult(stat, c1, c5, c10, bool(stat < c5), best_lag, m)


def difference(series: Sequence[float]) -> tuple[np.ndarray, float]:
    x = np.asarray(series, dtype=float).ravel()
    if len(x) < 2:
        raise SeriesTooShort("difference needs at least 2 values")
    return np.diff(x), float(x[0])


def integration_tail(series: Sequence[float], order: int) -> list[float]:
    """Last value of each partially differenced level 0..order-1.

    These seed ``undifference`` for values that follow ``series``.
    """
    x = np.asarray(series, dtype=float).ravel()
    tail = []
    for _ in range(order):
        tail.append(float(x[-1]))
        x = np.diff(x)
    return tail


def stationarize(series: Sequence[float], max_order: int = MAX_ORDER,
                 max_lag: int = DEFAULT_MAX_LAG) -> tuple[np.ndarray, DiffMeta]:
    """Difference until the ADF test rejects a unit root at 5%, up to ``max_order``.

    A constant series (at any stage) counts as stationary. When the cap is
    reached without rejection the differenced series is still returned with
    ``achieved_stationarity=False``.
    """
    x = np.asarray(series, dtype=float).ravel()
    anchors: list[float] = []
    while True:
        if is_constant(x):
            return x, DiffMeta(len(anchors), tuple(anchors), True)
        lag = min(max_lag, max(len(x) - 10, 0))
        result = adf_test(x, lag)
        if result.is_stationary_5pct:
            return x, DiffMeta(len(anchors), tuple(anchors), True)
        if len(anchors) >= max_order:
            logger.warning("series still non-stationary after %d differences", max_order)
            return x, DiffMeta(len(anchors), tuple(anchors), False)
        x, anchor = difference(x)
        anchors.append(anchor)


def undifference(forecast: Sequence[float], meta: DiffMeta, tail: Sequence[float]) -> np.ndarray:
    """Integrate ``forecast`` back ``meta.order`` times.

    ``tail[i]`` is the value of the i-times differenced series immediately
    before the first forecast position, as returned by ``integration_tail``.
    """
    if len(tail) != meta.order:
        raise OrderMismatch(f"tail has {len(tail)} values for order {meta.order}")
    x = np.asarray(forecast, dtype=float).ravel().copy()
    for level in range(meta.order - 1, -1, -1):
        x = tail[level] + np.cumsum(x)
    return x


def apply_differencing(values: Sequence[float], meta: DiffMeta, tail: Sequence[float]) -> np.ndarray:
    """Difference new observations that follow the training data.

    Inverse of ``undifference``: returns the order-``meta.order`` differences
    of ``values`` given the training tails.
    """
    if len(tail) != meta.order:
        raise OrderMismatch(f"tail has {len(tail)} values for order {meta.order}")
    x = np.asarray(values, dtype=float).ravel()
    for level in range(meta.order):
        x = np.diff(np.concatenate([[tail[level]], x]))
    return x
