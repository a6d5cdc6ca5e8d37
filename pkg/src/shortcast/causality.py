"""Pairwise Granger causality F-tests over the columns of a table."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .diagnostics import Diagnostics, ensure
from .errors import RankDeficient, TooFewRows, UnknownVariable
from .numcore import lstsq

DEFAULT_MAX_LAG = 6


@dataclass(frozen=True)
class GrangerMatrix:
    """``p_values[i, j]`` is the p-value for "variables[j] Granger-causes variables[i]"."""

    variables: list[str]
    p_values: np.ndarray
    max_lag: int

    def p(self, cause: str, effect: str) -> float:
        return float(self.p_values[self.variables.index(effect), self.variables.index(cause)])

    def render(self) -> str:
        cols = [f"{v}_x" for v in self.variables]
        rows = [f"{v}_y" for v in self.variables]
        width = max(len(c) for c in cols + rows + ["p-value"])
        lines = [" " * width + "  " + "  ".join(c.rjust(width) for c in cols)]
        for name, row in zip(rows, self.p_values):
            lines.append(name.ljust(width) + "  " + "  ".join(f"{v:.4f}".rjust(width) for v in row))
        return "\n".join(lines)


@dataclass(frozen=True)
class FTest:
    f_stat: float
    p_value: float
    rss_restricted: float
    rss_unrestricted: float
    df_num: int
    df_den: int


def _lags(x: np.ndarray, lag: int) -> np.ndarray:
    n = len(x)
    return np.column_stack([x[lag - i:n - i] for i in range(1, lag + 1)])


def granger_f_test(cause: Sequence[float], effect: Sequence[float], lag: int) -> FTest:
    """F-test of ``lag`` lags of ``cause`` added to an AR(lag) of ``effect``.

    Uses the n = T - lag observations available at this lag.
    """
    x = np.asarray(cause, dtype=float).ravel()
    y = np.asarray(effect, dtype=float).ravel()
    n = len(y) - lag
    target = y[lag:]
    const = np.ones((n, 1))
    restricted = np.hstack([const, _lags(y, lag)])
    unrestricted = np.hstack([restricted, _lags(x, lag)])
    df_den = n - 2 * lag - 1
    if df_den < 1:
        raise TooFewRows(f"lag {lag} leaves no residual degrees of freedom")

    def rss(design):
        beta = lstsq(design, target)
        r = target - (design @ beta)[:, 0]
        return float(r @ r)

    rss_r, rss_u = rss(restricted), rss(unrestricted)
    # nesting guarantees rss_u <= rss_r; clip rounding noise
    rss_u = min(rss_u, rss_r)
    if rss_u <= 0.0:
        f = np.inf if rss_r > 0 else 0.0
    else:
        f = ((rss_r - rss_u) / lag) / (rss_u / df_den)
    p = float(stats.f.sf(f, lag, df_den)) if np.isfinite(f) else 0.0
    return FTest(float(f), p, rss_r, rss_u, lag, df_den)


def granger_matrix(table, max_lag: int = DEFAULT_MAX_LAG, diag: Diagnostics | None = None) -> GrangerMatrix:
    """Minimum-over-lags Granger p-values for every ordered column pair.

    ``table`` is a SeriesTable (already stationarized). Collinear designs
    yield p = 1.0 with a warning.
    """
    diag = ensure(diag)
    names, data = list(table.columns), np.asarray(table.data, dtype=float)
    k, T = len(names), data.shape[0]
    if k < 2:
        raise TooFewRows("Granger matrix needs at least 2 columns")
    if T < 5 * max_lag + 10:
        raise TooFewRows(f"need {5 * max_lag + 10} rows for max_lag={max_lag}, have {T}")
    pv = np.ones((k, k))
    constant = [bool(np.ptp(data[:, j]) <= 1e-12 * max(1.0, float(np.abs(data[:, j]).max()))) for j in range(k)]
    for j in range(k):
        if constant[j]:
            diag.warn("causality", names[j], "constant column excluded from Granger tests (p = 1.0)",
                      "expected for a series that differences to a constant; no action needed")
    for i in range(k):
        for j in range(k):
            if i == j or constant[i] or constant[j]:
                continue
            best, collinear = 1.0, []
            for lag in range(1, max_lag + 1):
                try:
                    best = min(best, granger_f_test(data[:, j], data[:, i], lag).p_value)
                except RankDeficient:
                    collinear.append(lag)
            if collinear:
                diag.warn("causality", names[j],
                          f"collinear regressors testing {names[j]} -> {names[i]} at lags {collinear}; "
                          "those lags count as p = 1.0", "drop near-duplicate columns")
            pv[i, j] = best
    return GrangerMatrix(names, pv, max_lag)


def causality_gate(matrix: GrangerMatrix, target: str, threshold: float = 0.05,
                   candidates: Sequence[str] | None = None) -> list[str]:
    """Variables whose p-value for causing ``target`` is below ``threshold``.

    ``candidates`` restricts the search (e.g. to emission columns); by
    default every other variable is considered.
    """
    if target not in matrix.variables:
        raise UnknownVariable(target)
    pool = matrix.variables if candidates is None else candidates
    return [x for x in pool if x != target and matrix.p(x, target) < threshold]
