"""VAR(p) estimation by equation-wise least squares, forecasting, per-product fits.

The model equation is ``y_t = c + A_1 y_{t-1} + ... + A_p y_{t-p} + u_t``
fitted on per-column differenced and z-scored data. Forecasts are iterated
with ``u_t = 0`` and mapped back to original units.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ingest
from .causality import DEFAULT_MAX_LAG as GRANGER_MAX_LAG
from .causality import GrangerMatrix, causality_gate, granger_matrix
from .diagnostics import Diagnostics, ensure
from .errors import InsufficientData, RankDeficient, ShortcastError
from .ingest import SeriesTable
from .numcore import companion_spectral_radius, lstsq, mean_and_std
from .stationarity import (
    DEFAULT_MAX_LAG as ADF_MAX_LAG,
    MAX_ORDER,
    DiffMeta,
    apply_differencing,
    integration_tail,
    is_constant,
    stationarize,
    undifference,
)

logger = logging.getLogger(__name__)

DEFAULT_LAG = 6
CLAMP = 1e15
SCHEMA = "varmodel-v1"


@dataclass(frozen=True)
class ColumnTransform:
    """How one column maps between original units and model space."""

    diff: DiffMeta
    tail: tuple[float, ...]
    mean: float = 0.0
    std: float = 1.0
    frozen: bool = False

    @classmethod
    def identity(cls) -> "ColumnTransform":
        return cls(DiffMeta(0), ())

    def forward(self, values: Sequence[float]) -> np.ndarray:
        """Map observations that follow the training data into model space."""
        d = apply_differencing(values, self.diff, self.tail)
        return (d - self.mean) / self.std

    def inverse(self, z: Sequence[float]) -> np.ndarray:
        d = np.asarray(z, dtype=float) * self.std + self.mean
        return undifference(d, self.diff, self.tail)


def prepare(table: SeriesTable, *, max_order: int = MAX_ORDER, adf_max_lag: int = ADF_MAX_LAG,
            standardize: bool = True, cache: dict | None = None,
            diag: Diagnostics | None = None) -> tuple[SeriesTable, list[ColumnTransform]]:
    """Stationarize and z-score every column, aligned to a common start year.

    Each column is differenced independently; the leading rows lost by the
    most-differenced column are dropped from all columns. A column that is
    constant after differencing is marked ``frozen``.
    """
    diag = ensure(diag)
    cache = {} if cache is None else cache
    diffed, metas = [], []
    for j, name in enumerate(table.columns):
        key = (name, tuple(table.years), max_order, adf_max_lag)
        if key not in cache:
            cache[key] = stationarize(table.data[:, j], max_order, adf_max_lag)
            if not cache[key][1].achieved_stationarity:
                diag.warn("stationarity", name,
                          f"still non-stationary after {max_order} differences; used anyway",
                          "inspect the series for structural breaks or use a shorter window")
        x, meta = cache[key]
        diffed.append(x)
        metas.append(meta)
    drop = max((m.order for m in metas), default=0)
    T = table.n_rows - drop
    data = np.empty((T, len(table.columns)))
    transforms = []
    for j, (x, meta) in enumerate(zip(diffed, metas)):
        seg = x[len(x) - T:]
        tail = tuple(integration_tail(table.data[:, j], meta.order))
        frozen = is_constant(seg)
        if standardize and T >= 2:
            mean, std = mean_and_std(seg)
            if frozen or std == 0.0:
                std = 1.0
        else:
            mean, std = 0.0, 1.0
        data[:, j] = (seg - mean) / std
        transforms.append(ColumnTransform(meta, tail, mean, std, frozen))
    return SeriesTable(table.years[drop:], table.columns, data, table.kinds), transforms


@dataclass
class VarModel:
    variables: list[str]
    lag: int
    intercept: np.ndarray
    coefficients: np.ndarray  # (lag, k, k); coefficients[i] multiplies y_{t-i-1}
    residual_sigma: np.ndarray
    transforms: list[ColumnTransform]
    last_rows: np.ndarray  # (lag, k) most recent transformed rows, oldest first
    last_year: int
    n_obs: int
    spectral_radius: float = math.nan
    spectral_converged: bool = True

    @property
    def k(self) -> int:
        return len(self.variables)

    @property
    def diff_meta(self) -> list[DiffMeta]:
        return [t.diff for t in self.transforms]

    @property
    def standardization(self) -> list[tuple[float, float]]:
        return [(t.mean, t.std) for t in self.transforms]

    @property
    def training_tail(self) -> list[tuple[float, ...]]:
        return [t.tail for t in self.transforms]

    @property
    def stable(self) -> bool:
        return self.spectral_radius < 1.0

    def predict_next(self, history: np.ndarray) -> np.ndarray:
        """One step of the recursion given the ``lag`` most recent rows (oldest first)."""
        y = self.intercept.copy()
        for i in range(self.lag):
            y = y + self.coefficients[i] @ history[-1 - i]
        return y


@dataclass
class Forecast:
    variables: list[str]
    horizon: int
    years: list[int]
    values: np.ndarray  # (h, k) original units
    values_transformed: np.ndarray  # (h, k) model space

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.variables.index(name)]


def min_rows(k: int, p: int) -> int:
    """Rows needed so that T - p >= k*p + 2."""
    return k * p + 2 + p


def _regressor_names(names: Sequence[str], p: int) -> list[str]:
    return ["const"] + [f"{n}.L{i}" for i in range(1, p + 1) for n in names]


def fit(table: SeriesTable, p: int = DEFAULT_LAG, transforms: Sequence[ColumnTransform] | None = None,
        diag: Diagnostics | None = None) -> VarModel:
    """Fit a VAR(p) on an already transformed table.

    ``transforms`` carry the differencing and scaling metadata needed to
    forecast in original units; by default every column is taken as-is.
    Frozen (constant) columns are excluded from the regression and held
    at their constant value.
    """
    diag = ensure(diag)
    if p < 1:
        raise ValueError("lag must be >= 1")
    names = list(table.columns)
    k, T = len(names), table.n_rows
    if transforms is None:
        transforms = [ColumnTransform.identity() for _ in names]
    transforms = list(transforms)
    if T - p < k * p + 2:
        raise InsufficientData(min_rows(k, p), T, f"k={k}, p={p}")

    Y = table.data
    frozen = [bool(t.frozen) or is_constant(Y[:, j]) for j, t in enumerate(transforms)]
    active = [j for j in range(k) if not frozen[j]]
    ka = len(active)
    intercept = np.zeros(k)
    coefs = np.zeros((p, k, k))
    sigma = np.zeros((k, k))
    for j in range(k):
        if frozen[j]:
            intercept[j] = float(Y[-1, j])

    if ka:
        Ya = Y[:, active]
        resp = Ya[p:]
        design = np.hstack([np.ones((T - p, 1))] + [Ya[p - i:T - i] for i in range(1, p + 1)])
        try:
            B = lstsq(design, resp)
        except RankDeficient as exc:
            labels = _regressor_names([names[j] for j in active], p)
            bad = [labels[c] for c in exc.columns if c < len(labels)]
            raise RankDeficient(f"collinear regressors: {', '.join(bad)}", exc.columns) from None
        intercept[active] = B[0]
        for i in range(p):
            block = B[1 + i * ka:1 + (i + 1) * ka]  # (ka, ka): rows regressors, cols equations
            coefs[i][np.ix_(active, active)] = block.T
        resid = resp - design @ B
        dof = (T - p) - (ka * p + 1)
        sigma[np.ix_(active, active)] = resid.T @ resid / max(dof, 1)

    radius = companion_spectral_radius(list(coefs), p)
    if not radius.converged:
        diag.warn("var", ",".join(names), "stability diagnostic did not converge",
                  "treat the stability verdict as approximate")
    return VarModel(names, p, intercept, coefs, sigma, transforms, Y[T - p:].copy(),
                    table.years[-1], T - p, radius.radius, radius.converged)


def forecast(model: VarModel, h: int, diag: Diagnostics | None = None) -> Forecast:
    """Iterate the fitted recursion ``h`` steps with zero shocks."""
    diag = ensure(diag)
    if h < 1:
        raise ValueError("horizon must be >= 1")
    hist = model.last_rows.copy()
    z = np.empty((h, model.k))
    for step in range(h):
        nxt = model.predict_next(hist)
        z[step] = nxt
        hist = np.vstack([hist[1:], nxt]) if model.lag > 1 else nxt[None, :]
    if not model.stable:
        diag.warn("var", ",".join(model.variables),
                  f"spectral radius {model.spectral_radius:.4f} >= 1; forecasts may explode and are clamped",
                  "reduce the lag order or difference the inputs further")
    z = np.clip(np.nan_to_num(z, nan=0.0, posinf=CLAMP, neginf=-CLAMP), -CLAMP, CLAMP)
    values = np.column_stack([t.inverse(z[:, j]) for j, t in enumerate(model.transforms)])
    values = np.clip(np.nan_to_num(values, nan=0.0, posinf=CLAMP, neginf=-CLAMP), -CLAMP, CLAMP)
    years = list(range(model.last_year + 1, model.last_year + 1 + h))
    return Forecast(list(model.variables), h, years, values, z)


def fit_table(table: SeriesTable, p: int = DEFAULT_LAG, *, standardize: bool = True,
              diag: Diagnostics | None = None) -> VarModel:
    """Stationarize, standardize and fit a raw (original-unit) table."""
    transformed, transforms = prepare(table, standardize=standardize, diag=diag)
    return fit(transformed, p, transforms, diag)


# ----------------------------------------------------------------- products


@dataclass
class ProductFit:
    product: str
    model: VarModel | None = None
    error: str | None = None
    lag_used: int | None = None
    granger: GrangerMatrix | None = None
    causes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.model is not None


def assemble_and_prepare(full: SeriesTable, product: str, *, standardize: bool = True, cache: dict | None = None,
                         diag: Diagnostics | None = None) -> tuple[SeriesTable, list[ColumnTransform], list[str]]:
    """Emission columns plus one product column, transformed for fitting."""
    table = ingest.assemble_model_table(full, product)
    transformed, transforms = prepare(table, standardize=standardize, cache=cache, diag=diag)
    return transformed, transforms, list(transformed.columns)


def feasible_lag(rows: int, k: int, p_max: int) -> int | None:
    for p in range(p_max, 0, -1):
        if rows - p >= k * p + 2:
            return p
    return None


def fit_product(full: SeriesTable, product: str, p: int = DEFAULT_LAG, *, granger_report: bool = True,
                granger_filter: bool = False, threshold: float = 0.05, cache: dict | None = None,
                diag: Diagnostics | None = None) -> ProductFit:
    """Assemble, transform and fit the model for one product column.

    The lag is reduced from ``p`` towards 1 until the regression is
    identifiable. With ``granger_filter`` only emission columns whose
    p-value for causing the product is below ``threshold`` are kept.
    """
    diag = ensure(diag)
    result = ProductFit(product)
    try:
        col = ingest.resolve_product(full, product)
        transformed, transforms, _ = assemble_and_prepare(full, col, cache=cache, diag=diag)
        T = transformed.n_rows
        if granger_report or granger_filter:
            g_lag = min(GRANGER_MAX_LAG, (T - 10) // 5)
            if transformed.columns and len(transformed.columns) >= 2 and g_lag >= 1:
                result.granger = granger_matrix(transformed, g_lag, diag)
                emissions = transformed.columns_of_kind(ingest.EMISSION)
                result.causes = causality_gate(result.granger, col, threshold, emissions)
            elif granger_filter:
                diag.warn("causality", col, "too few rows or columns for a Granger test; no filtering applied",
                          "supply a longer history")
        if granger_filter and result.granger is not None:
            keep = result.causes + [col]
            idx = [transformed.columns.index(c) for c in keep]
            transformed = transformed.select(keep)
            transforms = [transforms[i] for i in idx]
        k = len(transformed.columns)
        lag = feasible_lag(T, k, p)
        if lag is None:
            raise InsufficientData(min_rows(k, 1), T, f"k={k} even at p=1")
        if lag < p:
            diag.warn("var", col, f"lag reduced from {p} to {lag} ({k} variables, {T} rows)",
                      "drop emission columns or supply a longer history to use the full lag")
        result.model = fit(transformed, lag, transforms, diag)
        result.lag_used = lag
    except ShortcastError as exc:
        result.error = f"{exc.stage}: {exc}"
        diag.warn(exc.stage, product, f"model not fitted: {exc}", "check the column's history and length")
    return result


def fit_all_products(full: SeriesTable, p: int = DEFAULT_LAG, *, granger_report: bool = True,
                     granger_filter: bool = False, threshold: float = 0.05,
                     diag: Diagnostics | None = None) -> list[ProductFit]:
    """One model per production/forestry column; failures are captured per product."""
    diag = ensure(diag)
    cache: dict = {}
    return [fit_product(full, name, p, granger_report=granger_report, granger_filter=granger_filter,
                        threshold=threshold, cache=cache, diag=diag)
            for name in full.columns_of_kind(ingest.PRODUCTION, ingest.FORESTRY)]


# ---------------------------------------------------------------- model dump


def model_to_dict(model: VarModel) -> dict:
    return {
        "schema": SCHEMA,
        "variables": model.variables,
        "lag": model.lag,
        "intercept": model.intercept.tolist(),
        "coefficients": model.coefficients.tolist(),
        "residual_sigma": model.residual_sigma.tolist(),
        "last_rows": model.last_rows.tolist(),
        "last_year": model.last_year,
        "n_obs": model.n_obs,
        "spectral_radius": model.spectral_radius,
        "spectral_converged": model.spectral_converged,
        "transforms": [
            {"order": t.diff.order, "anchors": list(t.diff.anchors),
             "achieved_stationarity": t.diff.achieved_stationarity,
             "tail": list(t.tail), "mean": t.mean, "std": t.std, "frozen": t.frozen}
            for t in model.transforms
        ],
    }


def model_from_dict(d: dict) -> VarModel:
    if d.get("schema") != SCHEMA:
        raise ValueError(f"unsupported model schema {d.get('schema')!r}")
    transforms = [ColumnTransform(DiffMeta(t["order"], tuple(t["anchors"]), t["achieved_stationarity"]),
                                  tuple(t["tail"]), t["mean"], t["std"], t["frozen"])
                  for t in d["transforms"]]
    k, p = len(d["variables"]), d["lag"]
    return VarModel(list(d["variables"]), p, np.array(d["intercept"], dtype=float),
                    np.array(d["coefficients"], dtype=float).reshape(p, k, k),
                    np.array(d["residual_sigma"], dtype=float).reshape(k, k), transforms,
                    np.array(d["last_rows"], dtype=float).reshape(p, k), d["last_year"], d["n_obs"],
                    d["spectral_radius"], d["spectral_converged"])


def save_model(model: VarModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> VarModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
