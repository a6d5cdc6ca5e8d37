"""Deterministic FAOSTAT-style datasets for tests, demos and the bundled fixture.

Product series are straight lines so that the pipeline's forecast for them
is known in closed form: a line differences to a constant, which the model
holds fixed, so the forecast continues the line exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .ingest import RawRecord, write_csv

FIRST_YEAR, LAST_YEAR = 1961, 2019
AREA = "Testland"


def table_records() -> list[RawRecord]:
    """The Panama 1961 carrot and CH4 sample rows."""
    return [
        RawRecord("Panama", "Carrots", "Yield", 1961, "hg/ha", 66667.0),
        RawRecord("Panama", "Carrots", "Area harvested", 1961, "ha", 120.0),
        RawRecord("Panama", "Carrots", "Production", 1961, "tonnes", 800.0),
        RawRecord("Panama", "CH4", "Indirect", 1961, "kilotonnes", 0.0051),
        RawRecord("Panama", "CH4", "Direct", 1961, "kilotonnes", 0.0157),
        RawRecord("Panama", "CH4", "Total", 1961, "kilotonnes", 0.0208),
    ]


@dataclass(frozen=True)
class LineProduct:
    """A product whose yield moves linearly to ``end`` in the last year."""

    name: str
    end: float
    slope: float
    kind: str = "production"

    def values(self, years: list[int]) -> list[float]:
        last = years[-1]
        return [self.end + self.slope * (y - last) for y in years]

    def forecast(self, horizon: int) -> float:
        return self.end + self.slope * horizon

    def mean(self, years: list[int]) -> float:
        return self.end + self.slope * (sum(years) / len(years) - years[-1])


# horizon 11 makes the deviation |forecast - mean| = 40 * |slope| on 1961-2019
SHORTAGE_HORIZON = 11
SHORTAGE_PRODUCTS = (
    LineProduct("A", 100.0, 0.0),  # flat
    LineProduct("B", 100.0, -2.0),  # forecast 78 vs mean 158: flagged, deviation 80
    LineProduct("C", 100.0, -1.0),  # forecast 89 vs mean 129: not flagged
    LineProduct("D", 70.0, -1.5),  # forecast 53.5 vs mean 113.5: flagged, deviation 60
    LineProduct("E", 80.0, 1.0),  # rising
)

# three products, two of which break the 50% rule at horizon 10
DEMO_PRODUCTS = (
    LineProduct("Wheat", 120.0, 0.5),
    LineProduct("Apricots", 60.0, -1.5),
    LineProduct("Roundwood", 40.0, -1.0, kind="forestry"),
)


def _emission_records(area: str, years: list[int], seed: int) -> list[RawRecord]:
    rng = np.random.default_rng(seed)
    out = []
    n = len(years)
    # stationary AR(1) around a level, and a drifting random walk split into
    # direct/indirect parts whose total is also reported
    rice = 50.0 + np.zeros(n)
    for t in range(1, n):
        rice[t] = 50.0 + 0.6 * (rice[t - 1] - 50.0) + rng.normal(0.0, 2.0)
    direct = 10.0 + np.cumsum(rng.normal(0.05, 0.3, n))
    indirect = 3.0 + np.cumsum(rng.normal(0.02, 0.1, n))
    for t, y in enumerate(years):
        d, i = round(float(direct[t]), 4), round(float(indirect[t]), 4)
        out.append(RawRecord(area, "Rice cultivation", "Emissions (CH4)", y, "kilotonnes", round(float(rice[t]), 4)))
        out.append(RawRecord(area, "Manure management", "Direct emissions (N2O)", y, "kilotonnes", d))
        out.append(RawRecord(area, "Manure management", "Indirect emissions (N2O)", y, "kilotonnes", i))
        out.append(RawRecord(area, "Manure management", "Emissions (N2O)", y, "kilotonnes", round(d + i, 4)))
    return out


def write_line_dataset(data_dir: str | os.PathLike, products=SHORTAGE_PRODUCTS, *, area: str = AREA,
                       first_year: int = FIRST_YEAR, last_year: int = LAST_YEAR, seed: int = 7,
                       other_area: str | None = "Elsewhere") -> None:
    """Write emissions.csv, production.csv and (if needed) forestry.csv."""
    os.makedirs(data_dir, exist_ok=True)
    years = list(range(first_year, last_year + 1))
    emissions = _emission_records(area, years, seed)
    production, forestry = [], []
    for prod in products:
        vals = prod.values(years)
        for y, v in zip(years, vals):
            if prod.kind == "forestry":
                forestry.append(RawRecord(area, prod.name, "Production", y, "m3", v))
            else:
                production.append(RawRecord(area, prod.name, "Yield", y, "hg/ha", v))
    if other_area:
        # rows for a second country, which area filtering must discard
        production += [RawRecord(other_area, "Carrots", "Yield", y, "hg/ha", 1.0) for y in years]
        emissions += [RawRecord(other_area, "Rice cultivation", "Emissions (CH4)", y, "kilotonnes", 1.0)
                      for y in years]
    write_csv(emissions, os.path.join(data_dir, "emissions.csv"))
    write_csv(production, os.path.join(data_dir, "production.csv"))
    if forestry:
        write_csv(forestry, os.path.join(data_dir, "forestry.csv"))


def simulate_var1(intercept, coef, start, n: int, noise: float = 0.0, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    c, A = np.asarray(intercept, float), np.asarray(coef, float)
    y = np.empty((n, len(c)))
    y[0] = start
    for t in range(1, n):
        y[t] = c + A @ y[t - 1] + (rng.normal(0.0, noise, len(c)) if noise else 0.0)
    return y


# damped rotation: complex eigenvalues of modulus 0.97, so the path keeps
# oscillating over 59 years instead of collapsing onto the fixed point
NOISE_FREE_COEF = 0.97 * np.array([[np.cos(0.5), -np.sin(0.5)], [np.sin(0.5), np.cos(0.5)]])
NOISE_FREE_INTERCEPT = np.array([1.0, 2.0])
NOISE_FREE_START = np.array([5.0, -3.0])


def write_var_dataset(data_dir: str | os.PathLike, *, noise: float = 0.0, seed: int = 0, area: str = AREA,
                      first_year: int = FIRST_YEAR, last_year: int = LAST_YEAR) -> np.ndarray:
    """One emission and one product column simulated from a VAR(1).

    Values are written with full float precision; the simulated array is
    returned.
    """
    os.makedirs(data_dir, exist_ok=True)
    years = list(range(first_year, last_year + 1))
    y = simulate_var1(NOISE_FREE_INTERCEPT, NOISE_FREE_COEF, NOISE_FREE_START, len(years), noise, seed)
    y = y + np.array([20.0, 100.0])  # keep both columns positive
    write_csv([RawRecord(area, "Synthetic fertilizers", "Emissions (N2O)", yr, "kilotonnes", float(v))
               for yr, v in zip(years, y[:, 0])], os.path.join(data_dir, "emissions.csv"))
    write_csv([RawRecord(area, "Millet", "Yield", yr, "hg/ha", float(v)) for yr, v in zip(years, y[:, 1])],
              os.path.join(data_dir, "production.csv"))
    return y
