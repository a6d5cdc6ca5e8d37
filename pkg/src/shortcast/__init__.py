"""Per-product VAR forecasting of FAOSTAT series and top-k shortage ranking."""

from .causality import GrangerMatrix, causality_gate, granger_matrix
from .evaluation import EvalMetrics, backtest, mae, mse, rmse, split
from .ingest import (
    RawRecord,
    SeriesTable,
    assemble_model_table,
    drop_redundant_records,
    drop_unwanted_features,
    load_area,
    parse_csv,
    pivot,
    scrape_nan_columns,
    write_csv,
)
from .numcore import companion_spectral_radius, lstsq, mean_and_std
from .shortage import ShortageEntry, rank_shortages, trend_series
from .stationarity import AdfResult, DiffMeta, adf_test, difference, stationarize, undifference
from .var import Forecast, VarModel, fit, fit_all_products, forecast

__version__ = "0.1.0"
