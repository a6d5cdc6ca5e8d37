"""FAOSTAT long-format CSV ingestion and preprocessing into wide year tables."""

from __future__ import annotations

import csv
import io
import math
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .diagnostics import Diagnostics, ensure
from .errors import (
    AllColumnsDropped,
    AreaNotFound,
    DuplicateCell,
    EmptyFile,
    MissingColumn,
    UnknownProduct,
)

REQUIRED_COLUMNS = ("Area", "Item", "Element", "Year", "Unit", "Value")
YEAR_RANGE = (1900, 2100)

EMISSION = "emission"
PRODUCTION = "production"
FORESTRY = "forestry"
KINDS = (EMISSION, PRODUCTION, FORESTRY)

SEP = " | "

HG_PER_TONNE = 10_000.0


@dataclass(frozen=True)
class RawRecord:
    area: str
    item: str
    element: str
    year: int
    unit: str
    value: float | None

    def __post_init__(self):
        if not YEAR_RANGE[0] <= self.year <= YEAR_RANGE[1]:
            raise ValueError(f"year {self.year} outside {YEAR_RANGE}")
        if self.value is not None and not math.isfinite(self.value):
            raise ValueError(f"non-finite value for {self.item}/{self.element}/{self.year}")


@dataclass
class SeriesTable:
    """Wide table indexed by consecutive years.

    ``data`` has shape (len(years), len(columns)); ``kinds`` tags every
    column as emission, production or forestry.
    """

    years: list[int]
    columns: list[str]
    data: np.ndarray
    kinds: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.years = [int(y) for y in self.years]
        self.columns = list(self.columns)
        self.data = np.asarray(self.data, dtype=float).reshape(len(self.years), len(self.columns))
        if not self.kinds:
            self.kinds = [PRODUCTION] * len(self.columns)
        self.kinds = list(self.kinds)
        if len(self.kinds) != len(self.columns):
            raise ValueError("one kind tag per column required")
        if any(b - a != 1 for a, b in zip(self.years, self.years[1:])):
            raise ValueError("years must be consecutive and increasing")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")

    @property
    def n_rows(self) -> int:
        return len(self.years)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise UnknownProduct(name) from None

    def kind_of(self, name: str) -> str:
        return self.kinds[self.columns.index(name)]

    def select(self, names: Sequence[str]) -> "SeriesTable":
        idx = [self.columns.index(n) for n in names]
        return SeriesTable(self.years, [self.columns[i] for i in idx], self.data[:, idx], [self.kinds[i] for i in idx])

    def rows(self, start: int, stop: int) -> "SeriesTable":
        return SeriesTable(self.years[start:stop], self.columns, self.data[start:stop], self.kinds)

    def columns_of_kind(self, *kinds: str) -> list[str]:
        return [c for c, k in zip(self.columns, self.kinds) if k in kinds]

    def has_nan(self) -> bool:
        return bool(np.isnan(self.data).any())


def product_label(column: str) -> str:
    """Item part of an ``"item | element"`` column name."""
    return column.split(SEP, 1)[0]


# --------------------------------------------------------------------- parsing


def _parse_value(text: str) -> float | None:
    text = text.strip()
    if not text:
        return None
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(text)
    return v


def parse_csv(source: str | os.PathLike | IO[str], diag: Diagnostics | None = None) -> list[RawRecord]:
    """Read a FAOSTAT-style CSV; header match is case-insensitive, extra columns ignored."""
    diag = ensure(diag)
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8-sig") as fh:
            return parse_csv(fh, diag)

    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or not any(h.strip() for h in header):
        raise EmptyFile("CSV has no header row")
    lookup = {h.strip().lower(): i for i, h in enumerate(header)}
    idx = {}
    for name in REQUIRED_COLUMNS:
        if name.lower() not in lookup:
            raise MissingColumn(name)
        idx[name] = lookup[name.lower()]

    records = []
    for lineno, row in enumerate(reader, start=2):
        if not any(cell.strip() for cell in row):
            continue
        get = lambda name: row[idx[name]] if idx[name] < len(row) else ""  # noqa: E731
        try:
            value = _parse_value(get("Value"))
        except ValueError:
            value = None
            diag.warn("ingest", f"{get('Item')} | {get('Element')}",
                      f"line {lineno}: malformed value {get('Value')!r} treated as missing",
                      "fix the source cell or expect the column to be scraped")
        records.append(RawRecord(get("Area").strip(), get("Item").strip(), get("Element").strip(),
                                 int(get("Year").strip()), get("Unit").strip(), value))
    return records


def _format_value(v: float | None) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_csv(records: Iterable[RawRecord], dest: str | os.PathLike | IO[str]) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            write_csv(records, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(REQUIRED_COLUMNS)
    for r in records:
        w.writerow([r.area, r.item, r.element, r.year, r.unit, _format_value(r.value)])


def records_to_csv_text(records: Iterable[RawRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


# --------------------------------------------------------------- preprocessing


def _norm(text: str) -> str:
    return " ".join(text.split()).casefold()


def drop_unwanted_features(records: Iterable[RawRecord], area_filter: str) -> list[RawRecord]:
    """Keep one area's records; matching ignores case and surrounding whitespace."""
    target = _norm(area_filter)
    kept = [r for r in records if _norm(r.area) == target]
    if not kept:
        raise AreaNotFound(area_filter)
    return kept


_YIELD, _AREA, _PROD = "yield", "area harvested", "production"
_TOKEN = re.compile(r"[a-z0-9]+")
_GAS = re.compile(r"\(([^)]*)\)")


def _tokens(text: str) -> set[str]:
    return set(_TOKEN.findall(text.casefold()))


def _gas(element: str) -> str | None:
    m = _GAS.search(element)
    return m.group(1).strip().casefold() if m else None


def _emission_role(element: str) -> str | None:
    toks = _tokens(element)
    if "indirect" in toks:
        return "indirect"
    if "direct" in toks:
        return "direct"
    if "total" in toks:
        return "total"
    return None


def _to_tonnes(r: RawRecord, diag: Diagnostics) -> float:
    unit = _norm(r.unit)
    if unit in ("tonnes", "tonne", "t"):
        return r.value
    if unit in ("hg",):
        return r.value / HG_PER_TONNE
    diag.warn("ingest", f"{r.item} | {r.element}", f"unexpected production unit {r.unit!r} treated as tonnes",
              "convert the source to tonnes")
    return r.value


def _resolve_production(group: list[RawRecord], diag: Diagnostics) -> list[RawRecord] | None:
    # None: no Yield and nothing to derive it from
    by_el = {_norm(r.element): r for r in group}
    if not ({_YIELD, _AREA, _PROD} & by_el.keys()):
        return group
    others = [r for r in group if _norm(r.element) not in (_YIELD, _AREA, _PROD)]
    y, a, p = by_el.get(_YIELD), by_el.get(_AREA), by_el.get(_PROD)
    if y is not None and y.value is not None:
        return [y] + others
    if a is not None and p is not None and a.value is not None and p.value is not None and a.value > 0:
        hg_per_ha = _to_tonnes(p, diag) * HG_PER_TONNE / a.value
        synth = RawRecord(p.area, p.item, "Yield", p.year, "hg/ha", hg_per_ha)
        return [synth] + others
    if y is not None:
        # recorded Yield with an empty value and nothing to derive it from
        return [y] + others
    return None


def _resolve_emission(group: list[RawRecord], diag: Diagnostics) -> list[RawRecord]:
    by_gas: dict[str | None, list[RawRecord]] = defaultdict(list)
    for r in group:
        by_gas[_gas(r.element)].append(r)
    out = []
    for gas, recs in by_gas.items():
        roles = {r: _emission_role(r.element) for r in recs}
        comps = [r for r in recs if roles[r] in ("direct", "indirect")]
        has_both = {"direct", "indirect"} <= {roles[r] for r in comps}
        if not has_both:
            out.extend(recs)
            continue
        for r in recs:
            role = roles[r]
            # an unlabelled element carrying the same gas tag is the aggregate
            is_total = role == "total" or (role is None and gas is not None)
            if not is_total:
                out.append(r)
                continue
            parts = [c.value for c in comps if c.value is not None]
            if r.value is not None and len(parts) == len(comps):
                total = math.fsum(parts)
                if not math.isclose(total, r.value, rel_tol=1e-3, abs_tol=1e-9):
                    diag.warn("ingest", f"{r.item} | {r.element}",
                              f"{r.year}: total {r.value} != sum of components {total}; total dropped anyway",
                              "check the emission source for inconsistent rows")
    return out


def drop_redundant_records(records: Iterable[RawRecord], diag: Diagnostics | None = None) -> list[RawRecord]:
    """Remove derivable rows: keep Yield over Area/Production, drop emission totals.

    A missing Yield is synthesized as ``Production[t] * 10000 / Area[ha]`` in
    hg/ha. Emission totals are dropped only when both the direct and the
    indirect component exist for the same item, year and gas. Order of the
    surviving records follows the input.
    """
    diag = ensure(diag)
    records = list(records)
    groups: dict[tuple, list[RawRecord]] = defaultdict(list)
    for r in records:
        groups[(_norm(r.area), r.item, r.year)].append(r)

    keep: dict[tuple, list[RawRecord]] = {}
    unresolved: dict[str, list[int]] = defaultdict(list)
    for key, group in groups.items():
        els = {_norm(r.element) for r in group}
        if els & {_YIELD, _AREA, _PROD}:
            resolved = _resolve_production(group, diag)
            if resolved is None:
                unresolved[group[0].item].append(group[0].year)
                resolved = group
            keep[key] = resolved
        elif any(_emission_role(r.element) for r in group):
            keep[key] = _resolve_emission(group, diag)
        else:
            keep[key] = group

    for item, years in unresolved.items():
        diag.warn("ingest", item, f"cannot derive Yield in {len(years)} year(s) ({min(years)}-{max(years)}); "
                  "records kept as-is", "supply Yield or both Production and Area harvested")

    out, emitted = [], set()
    for r in records:
        key = (_norm(r.area), r.item, r.year)
        if key in emitted:
            continue
        emitted.add(key)
        out.extend(keep[key])
    return out


def pivot(records: Iterable[RawRecord], kind: str = PRODUCTION) -> SeriesTable:
    """Wide table with one ``"item | element"`` column per pair; gaps are NaN.

    Columns are sorted by name so the layout does not depend on row order.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    cells: dict[tuple[str, int], float] = {}
    for r in records:
        name = f"{r.item}{SEP}{r.element}"
        if (name, r.year) in cells:
            raise DuplicateCell(r.item, r.element, r.year)
        cells[(name, r.year)] = math.nan if r.value is None else r.value
    if not cells:
        return SeriesTable([], [], np.empty((0, 0)), [])
    names = sorted({n for n, _ in cells})
    years_seen = [y for _, y in cells]
    years = list(range(min(years_seen), max(years_seen) + 1))
    col = {n: j for j, n in enumerate(names)}
    data = np.full((len(years), len(names)), np.nan)
    for (name, year), v in cells.items():
        data[year - years[0], col[name]] = v
    return SeriesTable(years, names, data, [kind] * len(names))


def merge_tables(tables: Sequence[SeriesTable]) -> SeriesTable:
    """Column-wise union over the year hull; missing years become NaN."""
    tables = [t for t in tables if t.columns]
    if not tables:
        return SeriesTable([], [], np.empty((0, 0)), [])
    lo = min(t.years[0] for t in tables)
    hi = max(t.years[-1] for t in tables)
    years = list(range(lo, hi + 1))
    columns, kinds, blocks = [], [], []
    for t in tables:
        block = np.full((len(years), len(t.columns)), np.nan)
        block[t.years[0] - lo:t.years[-1] - lo + 1] = t.data
        blocks.append(block)
        columns += t.columns
        kinds += t.kinds
    return SeriesTable(years, columns, np.hstack(blocks), kinds)


def scrape_nan_columns(table: SeriesTable, diag: Diagnostics | None = None) -> SeriesTable:
    """Drop every column with at least one NaN (no imputation)."""
    diag = ensure(diag)
    keep = [c for j, c in enumerate(table.columns) if not np.isnan(table.data[:, j]).any()]
    if not keep:
        raise AllColumnsDropped(f"all {len(table.columns)} columns contain gaps")
    dropped = [c for c in table.columns if c not in keep]
    for c in dropped:
        diag.warn("ingest", c, "column has missing years and was scraped",
                  "provide a complete series to include it")
    return table.select(keep)


def resolve_product(table: SeriesTable, product: str) -> str:
    """Accept a full column name or an item name matching one product column."""
    products = table.columns_of_kind(PRODUCTION, FORESTRY)
    if product in products:
        return product
    matches = [c for c in products if product_label(c) == product]
    if len(matches) == 1:
        return matches[0]
    raise UnknownProduct(product)


def assemble_model_table(full: SeriesTable, product: str) -> SeriesTable:
    """All emission columns plus exactly one product column."""
    name = resolve_product(full, product)
    return full.select(full.columns_of_kind(EMISSION) + [name])


# ------------------------------------------------------------------- pipeline

DATA_FILES = {EMISSION: "emissions.csv", PRODUCTION: "production.csv", FORESTRY: "forestry.csv"}


def load_area(data_dir: str | os.PathLike, area: str, diag: Diagnostics | None = None) -> SeriesTable:
    """Run every preprocessing step on the CSVs present in ``data_dir``.

    Raises FileNotFoundError when neither a production nor a forestry file
    exists.
    """
    diag = ensure(diag)
    present = {k: os.path.join(data_dir, f) for k, f in DATA_FILES.items()
               if os.path.isfile(os.path.join(data_dir, f))}
    if PRODUCTION not in present and FORESTRY not in present:
        raise FileNotFoundError(f"{data_dir}: need production.csv or forestry.csv")
    tables, found = [], False
    for kind in KINDS:
        if kind not in present:
            continue
        recs = parse_csv(present[kind], diag)
        try:
            recs = drop_unwanted_features(recs, area)
        except AreaNotFound:
            continue
        found = True
        recs = drop_redundant_records(recs, diag)
        tables.append(pivot(recs, kind))
    if not found:
        raise AreaNotFound(area)
    return scrape_nan_columns(merge_tables(tables), diag)
