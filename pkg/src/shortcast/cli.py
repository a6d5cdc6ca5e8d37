"""Command-line entry point: ``shortcast forecast | evaluate | selftest``."""

from __future__ import annotations

import csv
import io
import logging
import os
import re
import sys
from dataclasses import dataclass

import click
import numpy as np

from . import evaluation, ingest, selftest, shortage, var
from .diagnostics import Diagnostics
from .errors import AreaNotFound, DegenerateSplit, IngestError, ShortcastError

EXIT_INPUT = 2
EXIT_NO_PRODUCTS = 3

LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


@dataclass
class RunConfig:
    area: str
    horizon_years: int = 10
    top_k: int = 5
    data_dir: str = "."
    lag: int = var.DEFAULT_LAG
    granger_filter: bool = False
    output_dir: str = "shortcast-out"
    seed: int = 0

    def __post_init__(self):
        if self.horizon_years < 1 or self.top_k < 1 or self.lag < 1:
            raise ValueError("horizon, top-k and lag must all be >= 1")


def _configure_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("SHORTCAST_LOG", "quiet").strip().lower(), logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("shortcast").setLevel(level)


def _num(v: float) -> str:
    return repr(float(v))


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_") or "product"


def _labels(columns: list[str]) -> dict[str, str]:
    """Short product names; fall back to the full column when items repeat."""
    items = [ingest.product_label(c) for c in columns]
    return {c: (i if items.count(i) == 1 else c) for c, i in zip(columns, items)}


def _write_outputs(out_dir: str, files: dict[str, str]) -> None:
    # single writer, after every computation succeeded
    os.makedirs(out_dir, exist_ok=True)
    for name in sorted(files):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(files[name])


def _fail(stage: str, message: str, code: int) -> None:
    click.echo(f"error [{stage}]: {message}", err=True)
    raise SystemExit(code)


def _load(config_area: str, data_dir: str, diag: Diagnostics) -> ingest.SeriesTable:
    if not os.path.isdir(data_dir):
        _fail("ingest", f"data directory {data_dir!r} does not exist", EXIT_INPUT)
    try:
        return ingest.load_area(data_dir, config_area, diag)
    except FileNotFoundError as exc:
        _fail("ingest", str(exc), EXIT_INPUT)
    except AreaNotFound as exc:
        _fail("ingest", f"{exc}; check the spelling of --area", EXIT_INPUT)
    except IngestError as exc:
        _fail("ingest", str(exc), EXIT_INPUT)


def _diagnostics_text(header: list[str], diag: Diagnostics) -> str:
    lines = list(header)
    lines.append("")
    lines.append(f"warnings ({len(diag)}):")
    lines += [f"  {d.render()}" for d in diag]
    return "\n".join(lines) + "\n"


def _fit_section(fits: list[var.ProductFit]) -> list[str]:
    lines = ["models:"]
    for f in fits:
        if not f.ok:
            lines.append(f"  {f.product}: FAILED ({f.error})")
            continue
        m = f.model
        orders = ", ".join(f"{n}=d{t.diff.order}" for n, t in zip(m.variables, m.transforms))
        lines.append(f"  {f.product}: lag {f.lag_used}, {m.n_obs} observations, "
                     f"spectral radius {m.spectral_radius:.6f} ({'stable' if m.stable else 'UNSTABLE'})")
        lines.append(f"    ADF differencing orders: {orders}")
        if f.granger is not None:
            lines.append(f"    Granger causes (p < 0.05): {', '.join(f.causes) if f.causes else 'none'}")
            lines += ["    " + row for row in f.granger.render().splitlines()]
    return lines


def run_forecast(config: RunConfig) -> int:
    diag = Diagnostics()
    full = _load(config.area, config.data_dir, diag)
    fits = var.fit_all_products(full, config.lag, granger_filter=config.granger_filter, diag=diag)
    fitted = [f for f in fits if f.ok]
    if not fitted:
        _fail("var", "no product could be fitted; see the per-product errors above", EXIT_NO_PRODUCTS)

    forecasts = [(f.product, var.forecast(f.model, config.horizon_years, diag)) for f in fitted]
    ranked = shortage.rank_shortages(forecasts, full, config.top_k)
    labels = _labels([p for p, _ in forecasts])
    target_year = full.years[-1] + config.horizon_years

    files = {}
    rows = [["rank", "product", "column", "target_year", "recent_forecast", "historical_mean", "deviation"]]
    for i, e in enumerate(ranked, 1):
        rows.append([i, labels[e.product], e.product, target_year, _num(e.recent_forecast),
                     _num(e.historical_mean), _num(e.deviation)])
    files["shortage_report.csv"] = _csv_text(rows)
    for product, fc in forecasts:
        years, obs, proj = shortage.trend_series(product, full, fc)
        files[f"trend_{_slug(labels[product])}.csv"] = _csv_text(shortage.trend_csv_rows(years, obs, proj))

    header = [f"area: {config.area}", f"years: {full.years[0]}-{full.years[-1]} ({full.n_rows} rows)",
              f"horizon: {config.horizon_years} (target year {target_year})", f"requested lag: {config.lag}",
              f"granger filter: {'on' if config.granger_filter else 'off (report only)'}",
              f"products: {len(fits)} ({len(fitted)} fitted)", ""] + _fit_section(fits)
    files["diagnostics.txt"] = _diagnostics_text(header, diag)
    _write_outputs(config.output_dir, files)

    click.echo(f"Top-{config.top_k} products forecast to endure a shortage in {config.area} by {target_year}:")
    if not ranked:
        click.echo("  (no product falls below 50% of its historical mean)")
    for i, e in enumerate(ranked, 1):
        click.echo(f"  {i}. {labels[e.product]:<24} forecast {e.recent_forecast:12.4f}  "
                   f"historical mean {e.historical_mean:12.4f}  deviation {e.deviation:12.4f}")
    click.echo(f"Outputs written to {config.output_dir}")
    return 0


def run_evaluate(config: RunConfig, train_end_year: int) -> int:
    diag = Diagnostics()
    full = _load(config.area, config.data_dir, diag)
    try:
        train, test = evaluation.split(full, train_end_year)
    except DegenerateSplit as exc:
        _fail("evaluation", str(exc), EXIT_INPUT)

    products = full.columns_of_kind(ingest.PRODUCTION, ingest.FORESTRY)
    labels = _labels(products)
    results, failures = [], []
    for product in products:
        try:
            results.append(evaluation.backtest(full, product, config.lag, train_end_year,
                                               reduce_lag=True, diag=diag))
        except ShortcastError as exc:
            failures.append((product, f"{exc.stage}: {exc}"))
            diag.warn(exc.stage, product, f"backtest failed: {exc}", "check the column's history and length")
    if not results:
        _fail("evaluation", "no product could be backtested", EXIT_NO_PRODUCTS)

    files = {}
    rows = [["product", "space", "mae", "mse", "rmse"]]
    for space in (evaluation.TRANSFORMED, evaluation.ORIGINAL):
        for r in results:
            m = r.product_metrics(space)
            rows.append([labels[r.product], space, _num(m.mae), _num(m.mse), _num(m.rmse)])
    files["metrics.csv"] = _csv_text(rows)
    for r in results:
        j = list(r.original.per_variable).index(r.product_metrics(evaluation.ORIGINAL))
        hist = full.column(r.product)
        trows = [["year", "observed", "projected"]]
        for y, v in zip(full.years, hist):
            p = r.predicted[r.years.index(y), j] if y in r.years else None
            trows.append([y, _num(v), "" if p is None else _num(p)])
        files[f"eval_trend_{_slug(labels[r.product])}.csv"] = _csv_text(trows)

    aggregates = {}
    for space in (evaluation.TRANSFORMED, evaluation.ORIGINAL):
        ms = [r.product_metrics(space) for r in results]
        aggregates[space] = (float(np.mean([m.mae for m in ms])), float(np.mean([m.mse for m in ms])),
                             float(np.mean([m.rmse for m in ms])))

    header = [f"area: {config.area}",
              f"train: {train.years[0]}-{train.years[-1]} ({train.n_rows} rows)",
              f"test: {test.years[0]}-{test.years[-1]} ({test.n_rows} rows)",
              f"requested lag: {config.lag}", "", "backtests:"]
    for r in results:
        header.append(f"  {r.product}: lag {r.lag}")
    for product, err in failures:
        header.append(f"  {product}: FAILED ({err})")
    files["diagnostics.txt"] = _diagnostics_text(header, diag)
    _write_outputs(config.output_dir, files)

    click.echo(f"train = {train.n_rows} rows ({train.years[0]}-{train.years[-1]}), "
               f"test = {test.n_rows} rows ({test.years[0]}-{test.years[-1]})")
    for space, (a, b, c) in aggregates.items():
        click.echo(f"[{space}] averaged over {len(results)} product(s)")
        click.echo(f"  Mean absolute error - {a:.3f}")
        click.echo(f"  Mean squared error - {b:.3f}")
        click.echo(f"  Root mean squared error - {c:.3f}")
    click.echo(f"Outputs written to {config.output_dir}")
    return 0


# ------------------------------------------------------------------ click


def _common(f):
    f = click.option("--area", required=True, help="Country or region, matched case-insensitively.")(f)
    f = click.option("--data-dir", type=click.Path(file_okay=False), default=".", show_default=True,
                     help="Directory holding emissions.csv, production.csv, forestry.csv.")(f)
    f = click.option("--lag", type=click.IntRange(min=1), default=var.DEFAULT_LAG, show_default=True,
                     help="VAR lag order (reduced automatically when infeasible).")(f)
    f = click.option("--out", "out", type=click.Path(file_okay=False), default="shortcast-out",
                     show_default=True, help="Output directory.")(f)
    return f


@click.group()
def cli():
    """Forecast FAOSTAT product yields with per-product VAR models and rank shortages."""
    _configure_logging()


@cli.command()
@_common
@click.option("--horizon", type=click.IntRange(min=1), required=True, help="Years ahead to forecast.")
@click.option("--top-k", "top_k", type=click.IntRange(min=1), required=True, help="Number of products to report.")
@click.option("--granger-filter", is_flag=True, help="Keep only emission columns that Granger-cause the product.")
def forecast(area, data_dir, lag, out, horizon, top_k, granger_filter):
    """Rank the top-k products forecast to fall below half their historical mean."""
    cfg = RunConfig(area, horizon, top_k, data_dir, lag, granger_filter, out)
    raise SystemExit(run_forecast(cfg))


@cli.command()
@_common
@click.option("--train-end", "train_end", type=int, default=evaluation.TRAIN_END_YEAR, show_default=True,
              help="Last training year; later years are held out.")
def evaluate(area, data_dir, lag, out, train_end):
    """Backtest every product on a chronological split and report MAE/MSE/RMSE."""
    cfg = RunConfig(area, 1, 1, data_dir, lag, False, out)
    raise SystemExit(run_evaluate(cfg, train_end))


@cli.command("selftest")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--trials", type=int, default=None, help="Override the trial count of every property.")
@click.option("--length", type=int, default=None, help="Override the simulated series length.")
def selftest_cmd(seed, trials, length):
    """Run the seeded Monte Carlo property checks."""
    results = selftest.run(seed, trials, length)
    for r in results:
        click.echo(r.line())
    raise SystemExit(1 if any(r.passed is False for r in results) else 0)


def main(argv=None):
    cli.main(args=argv, prog_name="shortcast")


if __name__ == "__main__":
    main()
