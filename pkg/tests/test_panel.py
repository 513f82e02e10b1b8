import dataclasses
import random

import pytest
from hypothesis import given, settings, strategies as st

from crimecast.exceptions import DuplicateStateYear, InvalidArgument, MalformedRow, UnknownPoliticalStatus
from crimecast.panel import (
    HEADER,
    PanelRecord,
    load_panel,
    make_dataset,
    synthesize_panel,
    validate,
    write_panel,
)

ROW_2018 = "WY,2018,1250,577737,4.1,61584.0,87.5,R,51.2,48.8"
ROW_2019 = "WY,2019,1258,578759,3.7,64049.0,88.1,R,51.1,48.9"


def write(tmp_path, *rows, header=HEADER):
    path = tmp_path / "panel.csv"
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return path


def test_load_minimal(tmp_path):
    ds = load_panel(write(tmp_path, ROW_2019, ROW_2018))
    assert ds.states == ("WY",)
    assert ds.year_range == (2018, 2019)
    assert [r.year for r in ds.records] == [2018, 2019]
    assert ds.records[1].violent_crime == 1258.0


def test_load_trims_whitespace(tmp_path):
    ds = load_panel(write(tmp_path, " WY , 2018 ,1250, 577737,4.1,61584.0,87.5, R ,51.2,48.8"))
    assert ds.records[0].state == "WY"
    assert ds.records[0].political_status == "R"


def test_malformed_number_reports_line(tmp_path):
    bad = ROW_2019.replace("51.1", "xyz")
    with pytest.raises(MalformedRow) as err:
        load_panel(write(tmp_path, ROW_2018, bad))
    assert err.value.line == 3
    assert "pct_male" in str(err.value)


def test_wrong_column_count(tmp_path):
    with pytest.raises(MalformedRow) as err:
        load_panel(write(tmp_path, ROW_2018 + ",extra"))
    assert err.value.line == 2


def test_unknown_political_status(tmp_path):
    with pytest.raises(UnknownPoliticalStatus):
        load_panel(write(tmp_path, ROW_2018.replace(",R,", ",I,")))


def test_duplicate_state_year(tmp_path):
    with pytest.raises(DuplicateStateYear):
        load_panel(write(tmp_path, ROW_2018, ROW_2018))


def test_bad_header(tmp_path):
    with pytest.raises(MalformedRow):
        load_panel(write(tmp_path, ROW_2018, header="state,year"))


def test_roundtrip_50_states(tmp_path, panel_50):
    path = tmp_path / "p.csv"
    write_panel(panel_50, path)
    loaded = load_panel(path)
    assert len(loaded) == 1000
    assert loaded == panel_50


def test_load_is_order_insensitive(tmp_path, panel_3):
    path = tmp_path / "p.csv"
    write_panel(panel_3, path)
    lines = path.read_text().splitlines()
    body = lines[1:]
    random.Random(0).shuffle(body)
    shuffled = tmp_path / "shuffled.csv"
    shuffled.write_text("\n".join([lines[0], *body]) + "\n")
    assert load_panel(shuffled) == load_panel(path)


def test_validate_clean(panel_50):
    report = validate(panel_50)
    assert report.is_valid
    assert report.errors == ()


def test_validate_gender_sum(panel_3):
    bad = dataclasses.replace(panel_3.records[4], pct_male=60.0, pct_female=60.0)
    records = list(panel_3.records)
    records[4] = bad
    report = validate(make_dataset(records))
    assert not report.is_valid
    assert len(report.errors) == 1
    assert "gender sum" in report.errors[0].message


def test_validate_missing_year():
    ds = synthesize_panel(1, 4, 2000, 20)
    state = ds.states[2]
    records = [r for r in ds.records if not (r.state == state and r.year == 2010)]
    report = validate(make_dataset(records))
    assert [(e.state, e.year) for e in report.errors] == [(state, 2010)]


def test_validate_collects_everything(panel_3):
    r = panel_3.records[0]
    bad = dataclasses.replace(r, violent_crime=-1.0, population=0.0, unemployment_rate=101.0)
    report = validate(make_dataset([bad, *panel_3.records[1:]]))
    assert {e.field for e in report.errors} == {"violent_crime", "population", "unemployment_rate"}


def test_synthesize_deterministic():
    assert synthesize_panel(7, 3, 2000, 20) == synthesize_panel(7, 3, 2000, 20)


def test_synthesize_seed_sensitive():
    a = synthesize_panel(7, 3, 2000, 20)
    b = synthesize_panel(8, 3, 2000, 20)
    assert any(x.violent_crime != y.violent_crime for x, y in zip(a.records, b.records))


@pytest.mark.parametrize("args", [(0, 0, 2000, 5), (0, 51, 2000, 5), (0, 3, 2000, 0)])
def test_synthesize_rejects_bad_sizes(args):
    with pytest.raises(InvalidArgument):
        synthesize_panel(*args)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_states=st.integers(1, 50),
       first_year=st.integers(1950, 2050), n_years=st.integers(1, 30))
def test_synthesize_always_valid(seed, n_states, first_year, n_years):
    ds = synthesize_panel(seed, n_states, first_year, n_years)
    assert validate(ds).is_valid
    assert len(ds) == n_states * n_years


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n_states=st.integers(1, 8), n_years=st.integers(1, 12))
def test_write_load_roundtrip(tmp_path_factory, seed, n_states, n_years):
    ds = synthesize_panel(seed, n_states, 1999, n_years)
    path = tmp_path_factory.mktemp("rt") / "p.csv"
    write_panel(ds, path)
    assert load_panel(path) == ds


def test_record_is_immutable(panel_3):
    with pytest.raises(dataclasses.FrozenInstanceError):
        panel_3.records[0].year = 1
    assert isinstance(panel_3.records[0], PanelRecord)
