"""Shortage filter and top-k ranking over per-product forecasts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UnknownProduct
from .ingest import SeriesTable
from .numcore import mean_and_std
from .var import Forecast

SHORTAGE_RATIO = 0.5


@dataclass(frozen=True)
class ShortageEntry:
    product: str
    recent_forecast: float
    historical_mean: float
    deviation: float
    flagged: bool


def evaluate_product(product: str, history: SeriesTable, forecast: Forecast) -> ShortageEntry:
    """Compare the last forecast step with the mean over the whole history.

    Flagged when the forecast is strictly below half the historical mean.
    """
    if product not in history.columns:
        raise UnknownProduct(product)
    if product not in forecast.variables:
        raise UnknownProduct(product)
    mean, _ = mean_and_std(history.column(product))
    recent = float(forecast.column(product)[-1])
    return ShortageEntry(product, recent, mean, abs(recent - mean), recent < SHORTAGE_RATIO * mean)


def rank_shortages(forecasts: Sequence[tuple[str, Forecast]], history: SeriesTable, k: int) -> list[ShortageEntry]:
    """Flagged products sorted by absolute deviation (descending), at most ``k``.

    Ties are broken by product name so the order is deterministic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    entries = [evaluate_product(name, history, fc) for name, fc in forecasts]
    flagged = [e for e in entries if e.flagged]
    flagged.sort(key=lambda e: (-e.deviation, e.product))
    return flagged[:k]


def trend_series(product: str, history: SeriesTable, forecast: Forecast) -> tuple[list[int], list[float], list[float]]:
    """Observed history followed by the projection, for plotting.

    ``observed`` and ``projected`` are aligned with ``years``; positions
    outside each segment hold NaN.
    """
    if product not in history.columns or product not in forecast.variables:
        raise UnknownProduct(product)
    obs = history.column(product)
    proj = forecast.column(product)
    years = list(history.years) + list(forecast.years)
    nan_h = [float("nan")] * forecast.horizon
    nan_o = [float("nan")] * history.n_rows
    observed = [float(v) for v in obs] + nan_h
    projected = nan_o + [float(v) for v in proj]
    return years, observed, projected


def trend_csv_rows(years, observed, projected) -> list[list[str]]:
    def fmt(v: float) -> str:
        return "" if np.isnan(v) else repr(float(v))

    return [["year", "observed", "projected"]] + [[str(y), fmt(o), fmt(p)] for y, o, p in zip(years, observed, projected)]
