import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shortcast import fixtures
from shortcast.diagnostics import Diagnostics
from shortcast.errors import AllColumnsDropped, AreaNotFound, DuplicateCell, EmptyFile, MissingColumn, UnknownProduct
from shortcast.ingest import (
    EMISSION,
    PRODUCTION,
    RawRecord,
    SeriesTable,
    assemble_model_table,
    drop_redundant_records,
    drop_unwanted_features,
    load_area,
    merge_tables,
    parse_csv,
    pivot,
    records_to_csv_text,
    scrape_nan_columns,
    write_csv,
)


def _csv(text):
    return io.StringIO(text)


def test_parse_table1_row():
    recs = parse_csv(_csv("Area,Item,Element,Year,Unit,Value\nPanama,Carrots,Production,1961,tonnes,800\n"))
    assert recs == [RawRecord("Panama", "Carrots", "Production", 1961, "tonnes", 800.0)]


def test_parse_header_case_and_extra_columns():
    text = 'domain,AREA,item,Element,year,Flag,unit,value\nQCL,"Panama","Carrots, raw",Yield,1961,E,hg/ha,66667\n'
    (r,) = parse_csv(_csv(text))
    assert (r.area, r.item, r.year, r.value) == ("Panama", "Carrots, raw", 1961, 66667.0)


def test_parse_empty_and_malformed_values():
    diag = Diagnostics()
    text = "Area,Item,Element,Year,Unit,Value\nP,C,Yield,1961,hg/ha,\nP,C,Yield,1962,hg/ha,n/a\n"
    recs = parse_csv(_csv(text), diag)
    assert [r.value for r in recs] == [None, None]
    assert len(diag) == 1 and "line 3" in diag.items[0].message


def test_parse_missing_column():
    with pytest.raises(MissingColumn) as info:
        parse_csv(_csv("Area,Item,Element,Unit,Value\nP,C,Y,t,1\n"))
    assert info.value.name == "Year"


def test_parse_empty_file():
    with pytest.raises(EmptyFile):
        parse_csv(_csv(""))


_text = st.text(st.characters(min_codepoint=32, max_codepoint=0x2FF, blacklist_characters="\r\n"),
                min_size=1, max_size=12).map(str.strip).filter(bool)
_record = st.builds(RawRecord, _text, _text, _text, st.integers(1900, 2100), _text,
                    st.one_of(st.none(), st.floats(allow_nan=False, allow_infinity=False)))


@settings(max_examples=100, deadline=None)
@given(st.lists(_record, max_size=20))
def test_csv_roundtrip(records):
    assert parse_csv(_csv(records_to_csv_text(records))) == records


def test_area_filter():
    recs = [RawRecord("Panama", "C", "Yield", 1961, "hg/ha", 1.0), RawRecord("India", "C", "Yield", 1961, "hg/ha", 2.0)]
    assert [r.area for r in drop_unwanted_features(recs, "Panama")] == ["Panama"]
    assert [r.area for r in drop_unwanted_features(recs, "  panama ")] == ["Panama"]
    with pytest.raises(AreaNotFound):
        drop_unwanted_features(recs, "Atlantis")


def test_redundancy_table1_keeps_yield_only():
    recs = [r for r in fixtures.table_records() if r.item == "Carrots"]
    assert drop_redundant_records(recs) == [RawRecord("Panama", "Carrots", "Yield", 1961, "hg/ha", 66667.0)]


def test_redundancy_synthesizes_yield_within_half_unit():
    recs = [r for r in fixtures.table_records() if r.item == "Carrots" and r.element != "Yield"]
    (y,) = drop_redundant_records(recs)
    assert y.element == "Yield" and y.unit == "hg/ha"
    assert y.value == pytest.approx(800 * 10_000 / 120)
    assert abs(y.value - 66667) <= 0.5


def test_redundancy_table2_drops_total():
    recs = [r for r in fixtures.table_records() if r.item == "CH4"]
    out = drop_redundant_records(recs)
    assert [r.element for r in out] == ["Indirect", "Direct"]
    assert math.isclose(sum(r.value for r in out), 0.0208, abs_tol=1e-12)


def test_redundancy_faostat_style_gas_labels():
    recs = [RawRecord("P", "Manure", e, 1990, "kt", v) for e, v in
            [("Direct emissions (N2O)", 1.0), ("Indirect emissions (N2O)", 0.5), ("Emissions (N2O)", 1.5),
             ("Emissions (CH4)", 3.0)]]
    out = drop_redundant_records(recs)
    assert [r.element for r in out] == ["Direct emissions (N2O)", "Indirect emissions (N2O)", "Emissions (CH4)"]


def test_redundancy_total_kept_without_both_components():
    recs = [RawRecord("P", "CH4", "Direct", 1961, "kt", 0.0157), RawRecord("P", "CH4", "Total", 1961, "kt", 0.0208)]
    assert drop_redundant_records(recs) == recs


def test_redundancy_unresolvable_production_passes_with_warning():
    diag = Diagnostics()
    recs = [RawRecord("P", "Roundwood", "Production", 1961, "m3", 5.0)]
    assert drop_redundant_records(recs, diag) == recs
    assert len(diag.for_module("ingest")) == 1


_elements = st.sampled_from(["Yield", "Area harvested", "Production", "Direct", "Indirect", "Total", "Other"])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["a", "b"]), _elements, st.integers(1961, 1964),
                          st.one_of(st.none(), st.floats(0.1, 1e6))), max_size=25))
def test_redundancy_preserves_item_year_pairs(rows):
    recs = [RawRecord("P", i, e, y, "t", v) for i, e, y, v in rows]
    out = drop_redundant_records(recs, Diagnostics())
    assert {(r.item, r.year) for r in out} == {(r.item, r.year) for r in recs}


def test_pivot_shape_and_gap():
    recs = [RawRecord("P", item, "Yield", y, "hg/ha", float(y)) for item in ("a", "b") for y in (2000, 2001, 2002)]
    t = pivot(recs)
    assert t.columns == ["a | Yield", "b | Yield"] and t.years == [2000, 2001, 2002]
    gap = pivot([r for r in recs if not (r.item == "a" and r.year == 2001)])
    assert np.isnan(gap.data[1, 0]) and not np.isnan(gap.data[1, 1])


def test_pivot_tables_fixture_columns():
    t = pivot(drop_redundant_records(fixtures.table_records()))
    assert set(t.columns) == {"Carrots | Yield", "CH4 | Indirect", "CH4 | Direct"}


def test_pivot_duplicate():
    r = RawRecord("P", "a", "Yield", 2000, "hg/ha", 1.0)
    with pytest.raises(DuplicateCell):
        pivot([r, r])


def test_scrape():
    t = SeriesTable([1, 2], ["full", "gappy"], [[1.0, np.nan], [2.0, 3.0]])
    assert scrape_nan_columns(t).columns == ["full"]
    clean = SeriesTable([1, 2], ["a"], [[1.0], [2.0]])
    assert scrape_nan_columns(clean).columns == ["a"]
    with pytest.raises(AllColumnsDropped):
        scrape_nan_columns(SeriesTable([1], ["g"], [[np.nan]]))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.integers(1990, 1996), st.floats(-1e3, 1e3)),
                min_size=1, max_size=30, unique_by=lambda r: (r[0], r[1])))
def test_pivot_then_scrape_has_no_nan(rows):
    t = pivot([RawRecord("P", i, "Yield", y, "hg/ha", v) for i, y, v in rows])
    try:
        assert not scrape_nan_columns(t).has_nan()
    except AllColumnsDropped:
        pass


def _full(n_emission, n_product, rows=5):
    names = [f"e{i} | Emissions" for i in range(n_emission)] + [f"p{i} | Yield" for i in range(n_product)]
    kinds = [EMISSION] * n_emission + [PRODUCTION] * n_product
    return SeriesTable(list(range(2000, 2000 + rows)), names, np.zeros((rows, len(names))), kinds)


def test_assemble_model_table():
    full = _full(4, 10)
    t = assemble_model_table(full, "p3")
    assert t.columns == ["e0 | Emissions", "e1 | Emissions", "e2 | Emissions", "e3 | Emissions", "p3 | Yield"]
    assert assemble_model_table(full, "p3 | Yield").columns == t.columns
    assert assemble_model_table(_full(0, 2), "p1").columns == ["p1 | Yield"]
    with pytest.raises(UnknownProduct):
        assemble_model_table(full, "Apricots")


def test_merge_tables_hull():
    a = SeriesTable([2000, 2001], ["a"], [[1.0], [2.0]])
    b = SeriesTable([2001, 2002], ["b"], [[3.0], [4.0]], [EMISSION])
    m = merge_tables([a, b])
    assert m.years == [2000, 2001, 2002] and m.kinds == [PRODUCTION, EMISSION]
    assert np.isnan(m.data[2, 0]) and np.isnan(m.data[0, 1])


def test_load_area_fixture(shortage_dir):
    diag = Diagnostics()
    t = load_area(shortage_dir, "TESTLAND", diag)
    assert t.n_rows == 59 and not t.has_nan()
    assert t.columns_of_kind(EMISSION) == [
        "Manure management | Direct emissions (N2O)",
        "Manure management | Indirect emissions (N2O)",
        "Rice cultivation | Emissions (CH4)",
    ]
    assert [c.split(" | ")[0] for c in t.columns_of_kind(PRODUCTION)] == ["A", "B", "C", "D", "E"]


def test_load_area_scrapes_gappy_column(tmp_path):
    recs = [RawRecord("P", "full", "Yield", y, "hg/ha", 1.0 + y) for y in range(2000, 2005)]
    recs += [RawRecord("P", "gappy", "Yield", y, "hg/ha", 1.0) for y in (2000, 2001, 2004)]
    write_csv(recs, tmp_path / "production.csv")
    assert load_area(tmp_path, "P").columns == ["full | Yield"]
