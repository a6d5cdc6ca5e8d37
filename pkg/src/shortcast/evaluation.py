"""Chronological backtest and forecast error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diagnostics import Diagnostics, ensure
from .errors import DegenerateSplit, EmptyInput, LengthMismatch
from .ingest import SeriesTable, resolve_product
from .var import DEFAULT_LAG, assemble_and_prepare, feasible_lag, fit, forecast

TRAIN_END_YEAR = 2010
TRANSFORMED = "transformed"
ORIGINAL = "original"


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if a.size != p.size:
        raise LengthMismatch(f"{a.size} actual vs {p.size} predicted values")
    if a.size == 0:
        raise EmptyInput("metrics need at least one pair")
    return a, p


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return math.fsum(np.abs(a - p)) / a.size


def mse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return math.fsum((a - p) ** 2) / a.size


def rmse(actual, predicted) -> float:
    return math.sqrt(mse(actual, predicted))


@dataclass(frozen=True)
class VariableMetrics:
    name: str
    mae: float
    mse: float
    rmse: float


@dataclass
class EvalMetrics:
    per_variable: list[VariableMetrics]
    space: str

    @property
    def aggregate(self) -> tuple[float, float, float]:
        """Mean of each metric over the evaluated variables."""
        n = len(self.per_variable)
        return (math.fsum(m.mae for m in self.per_variable) / n,
                math.fsum(m.mse for m in self.per_variable) / n,
                math.fsum(m.rmse for m in self.per_variable) / n)


def metrics_for(names: Sequence[str], actual: np.ndarray, predicted: np.ndarray, space: str) -> EvalMetrics:
    return EvalMetrics([VariableMetrics(n, mae(actual[:, j], predicted[:, j]), mse(actual[:, j], predicted[:, j]),
                                        rmse(actual[:, j], predicted[:, j]))
                        for j, n in enumerate(names)], space)


def split(table: SeriesTable, train_end_year: int = TRAIN_END_YEAR) -> tuple[SeriesTable, SeriesTable]:
    """Train on years <= ``train_end_year``, test on the rest."""
    if not table.years or not (table.years[0] <= train_end_year < table.years[-1]):
        span = f"{table.years[0]}-{table.years[-1]}" if table.years else "empty table"
        raise DegenerateSplit(f"train end {train_end_year} leaves an empty side ({span})")
    cut = train_end_year - table.years[0] + 1
    return table.rows(0, cut), table.rows(cut, table.n_rows)


@dataclass
class BacktestResult:
    product: str
    lag: int
    train_rows: int
    test_rows: int
    transformed: EvalMetrics
    original: EvalMetrics
    years: list[int] = field(default_factory=list)
    actual: np.ndarray | None = None  # (test_rows, k) original units
    predicted: np.ndarray | None = None

    def product_metrics(self, space: str = TRANSFORMED) -> VariableMetrics:
        m = self.transformed if space == TRANSFORMED else self.original
        return next(v for v in m.per_variable if v.name == self.product)


def backtest(full: SeriesTable, product: str, p: int = DEFAULT_LAG, train_end_year: int = TRAIN_END_YEAR,
             *, reduce_lag: bool = False, standardize: bool = True,
             diag: Diagnostics | None = None) -> BacktestResult:
    """Fit on the training years, forecast the test years, score both spaces.

    Test observations are mapped into model space with the training
    transforms, so transformed-space errors compare like with like. With
    ``reduce_lag`` the lag falls back towards 1 when ``p`` is infeasible on
    the training rows; otherwise InsufficientData propagates.
    """
    diag = ensure(diag)
    col = resolve_product(full, product)
    train_full, test_full = split(full, train_end_year)
    transformed, transforms, names = assemble_and_prepare(train_full, col, standardize=standardize, diag=diag)
    lag = p
    if reduce_lag:
        lag = feasible_lag(transformed.n_rows, len(names), p) or p
    model = fit(transformed, lag, transforms, diag)
    h = test_full.n_rows
    fc = forecast(model, h, diag)
    actual = np.column_stack([test_full.column(n) for n in names])
    actual_z = np.column_stack([t.forward(actual[:, j]) for j, t in enumerate(transforms)])
    return BacktestResult(
        col, lag, train_full.n_rows, h,
        metrics_for(names, actual_z, fc.values_transformed, TRANSFORMED),
        metrics_for(names, actual, fc.values, ORIGINAL),
        list(test_full.years), actual, fc.values,
    )
