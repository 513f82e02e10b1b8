"""State-year panel schema, CSV ingestion, validation and a seeded synthetic generator."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .exceptions import (
    DuplicateStateYear,
    InvalidArgument,
    MalformedRow,
    UnknownPoliticalStatus,
)

COLUMNS = (
    "state",
    "year",
    "violent_crime",
    "population",
    "unemployment_rate",
    "median_income",
    "hs_grad_rate",
    "political_status",
    "pct_male",
    "pct_female",
)
HEADER = ",".join(COLUMNS)
POLITICAL_STATUSES = ("R", "D", "S")

# Alphabetical by state name.
STATE_CODES = (
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "FL", "GA",
    "HI", "ID", "IL", "IN", "IA", "KS", "KY", "LA", "ME", "MD",
    "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ",
    "NM", "NY", "NC", "ND", "OH", "OK", "OR", "PA", "RI", "SC",
    "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY",
)

GENDER_SUM_TOLERANCE = 0.5

# Synthetic crime dynamics.
CRIME_AR = 0.9
CRIME_PER_RESIDENT = 2.4e-4
CRIME_PER_UNEMPLOYMENT_POINT = 3000.0
POP_RANGE = (3e6, 8e6)


@dataclass(frozen=True)
class PanelRecord:
    """One state-year observation."""

    state: str
    year: int
    violent_crime: float
    population: float
    unemployment_rate: float
    median_income: float
    hs_grad_rate: float
    political_status: str
    pct_male: float
    pct_female: float


class ValidationError(NamedTuple):
    state: str
    year: int | None
    field: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[ValidationError, ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.errors

    def __str__(self) -> str:
        lines = [f"{len(self.errors)} errors"]
        for err in self.errors:
            year = "-" if err.year is None else err.year
            lines.append(f"{err.state},{year},{err.field}: {err.message}")
        return "\n".join(lines)


@dataclass(frozen=True)
class PanelDataset:
    """Records sorted by (state, year).

    ``states`` keeps first-seen order after sorting, i.e. alphabetical by code.
    """

    records: tuple[PanelRecord, ...]

    @property
    def states(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(r.state for r in self.records))

    @property
    def year_range(self) -> tuple[int, int]:
        years = [r.year for r in self.records]
        return (min(years), max(years))

    def __len__(self) -> int:
        return len(self.records)

    def for_state(self, state: str) -> tuple[PanelRecord, ...]:
        return tuple(r for r in self.records if r.state == state)


def make_dataset(records: Iterable[PanelRecord]) -> PanelDataset:
    """Build a dataset from records in any order, rejecting duplicate state-years."""
    records = sorted(records, key=lambda r: (r.state, r.year))
    for prev, cur in zip(records, records[1:]):
        if (prev.state, prev.year) == (cur.state, cur.year):
            raise DuplicateStateYear(cur.state, cur.year)
    return PanelDataset(tuple(records))


_NUMERIC = (
    "violent_crime", "population", "unemployment_rate", "median_income",
    "hs_grad_rate", "pct_male", "pct_female",
)


def _parse_row(row: list[str], line: int) -> PanelRecord:
    if len(row) != len(COLUMNS):
        raise MalformedRow(line, f"expected {len(COLUMNS)} columns, got {len(row)}")
    values = dict(zip(COLUMNS, (cell.strip() for cell in row)))
    parsed: dict[str, object] = {"state": values["state"]}
    try:
        parsed["year"] = int(values["year"])
    except ValueError:
        raise MalformedRow(line, f"year: cannot parse {values['year']!r}") from None
    for name in _NUMERIC:
        try:
            number = float(values[name])
        except ValueError:
            raise MalformedRow(line, f"{name}: cannot parse {values[name]!r}") from None
        if not math.isfinite(number):
            raise MalformedRow(line, f"{name}: non-finite value {values[name]!r}")
        parsed[name] = number
    status = values["political_status"]
    if status not in POLITICAL_STATUSES:
        raise UnknownPoliticalStatus(line, f"political_status {status!r} not in R/D/S")
    parsed["political_status"] = status
    return PanelRecord(**parsed)


def load_panel(path: str | Path) -> PanelDataset:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file") from None
        if [h.strip() for h in header] != list(COLUMNS):
            raise MalformedRow(1, f"header must be {HEADER!r}")
        records = []
        seen: dict[tuple[str, int], int] = {}
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            record = _parse_row(row, line)
            key = (record.state, record.year)
            if key in seen:
                raise DuplicateStateYear(record.state, record.year, line)
            seen[key] = line
            records.append(record)
    if not records:
        raise MalformedRow(1, "no data rows")
    return make_dataset(records)


def _format(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_panel(dataset: PanelDataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for record in dataset.records:
            writer.writerow([_format(getattr(record, name)) for name in COLUMNS])


def _record_errors(r: PanelRecord) -> list[ValidationError]:
    errors = []

    def bad(field: str, message: str) -> None:
        errors.append(ValidationError(r.state, r.year, field, message))

    if not (len(r.state) == 2 and r.state.isalpha() and r.state.isupper()):
        bad("state", f"{r.state!r} is not a 2-letter uppercase code")
    if not r.violent_crime >= 0:
        bad("violent_crime", f"must be >= 0, got {r.violent_crime}")
    if not r.population > 0:
        bad("population", f"must be > 0, got {r.population}")
    if not r.median_income > 0:
        bad("median_income", f"must be > 0, got {r.median_income}")
    for name in ("unemployment_rate", "hs_grad_rate", "pct_male", "pct_female"):
        value = getattr(r, name)
        if not 0 <= value <= 100:
            bad(name, f"must be in [0, 100], got {value}")
    if not abs(r.pct_male + r.pct_female - 100) <= GENDER_SUM_TOLERANCE:
        bad(
            "pct_male+pct_female",
            f"gender sum {r.pct_male + r.pct_female:g} differs from 100 "
            f"by more than {GENDER_SUM_TOLERANCE}",
        )
    if r.political_status not in POLITICAL_STATUSES:
        bad("political_status", f"{r.political_status!r} not in R/D/S")
    return errors


def validate(dataset: PanelDataset) -> ValidationReport:
    errors: list[ValidationError] = []
    for record in dataset.records:
        errors.extend(_record_errors(record))
    if not dataset.records:
        return ValidationReport((ValidationError("", None, "records", "dataset is empty"),))

    first, last = dataset.year_range
    for state in dataset.states:
        counts: dict[int, int] = {}
        for r in dataset.for_state(state):
            counts[r.year] = counts.get(r.year, 0) + 1
        for year in range(first, last + 1):
            n = counts.get(year, 0)
            if n == 0:
                errors.append(ValidationError(
                    state, year, "year", f"missing year {year} in [{first}, {last}]"))
            elif n > 1:
                errors.append(ValidationError(
                    state, year, "year", f"{n} records for the same year"))
    return ValidationReport(tuple(errors))


def synthesize_panel(
    seed: int, n_states: int, first_year: int, n_years: int
) -> PanelDataset:
    """Generate a valid random panel with a learnable crime signal.

    Crime follows ``c[t] = 0.9 c[t-1] + a*population[t-1] + b*unemployment[t-1] + noise``
    with ``a`` and ``b`` shared by all states, so the mapping from lagged features
    to next year's crime is the same everywhere. Unemployment is a slow cycle plus
    large yearly shocks, which is what makes last-year persistence a weak forecast.
    Other fields are smooth trends clipped to their valid ranges.
    """
    if not 1 <= n_states <= len(STATE_CODES):
        raise InvalidArgument(
            f"n_states must be between 1 and {len(STATE_CODES)}, got {n_states}")
    if n_years < 1:
        raise InvalidArgument(f"n_years must be >= 1, got {n_years}")

    rng = np.random.default_rng(seed)
    t = np.arange(n_years)
    records = []
    for state in STATE_CODES[:n_states]:
        pop0 = math.exp(rng.uniform(math.log(POP_RANGE[0]), math.log(POP_RANGE[1])))
        growth = rng.uniform(0.002, 0.015)
        population = np.round(pop0 * (1 + growth) ** t * np.exp(rng.normal(0, 0.002, n_years)))

        base_u = rng.uniform(4.5, 5.5)
        phase, period = rng.uniform(0, 10), rng.uniform(5, 9)
        unemployment = base_u + 1.5 * np.sin(2 * np.pi * (t + phase) / period)
        unemployment = np.round(np.clip(unemployment + rng.normal(0, 2.0, n_years), 1.5, 15), 2)

        income = rng.uniform(40_000, 70_000) * 1.025 ** t * np.exp(rng.normal(0, 0.003, n_years))
        income = np.round(income, 2)

        hs_grad = rng.uniform(74, 88) + 0.4 * t + rng.normal(0, 0.3, n_years)
        hs_grad = np.round(np.clip(hs_grad, 50, 99), 2)

        status = rng.choice(POLITICAL_STATUSES)
        statuses = []
        for _ in t:
            if rng.random() < 0.05:
                status = rng.choice(POLITICAL_STATUSES)
            statuses.append(str(status))

        pct_male = np.round(np.clip(rng.uniform(48.6, 50.4) + rng.normal(0, 0.05, n_years), 0, 100), 2)
        pct_female = np.round(100.0 - pct_male, 2)

        crime = np.empty(n_years)
        equilibrium = (CRIME_PER_RESIDENT * population[0]
                       + CRIME_PER_UNEMPLOYMENT_POINT * unemployment[0]) / (1 - CRIME_AR)
        crime[0] = equilibrium * rng.uniform(0.8, 1.2)
        for k in range(1, n_years):
            drift = (CRIME_PER_RESIDENT * population[k - 1]
                     + CRIME_PER_UNEMPLOYMENT_POINT * unemployment[k - 1])
            crime[k] = CRIME_AR * crime[k - 1] + drift + rng.normal(0, 0.005 * crime[k - 1])
        crime = np.round(np.maximum(crime, 0))

        for k in range(n_years):
            records.append(PanelRecord(
                state=state,
                year=first_year + k,
                violent_crime=float(crime[k]),
                population=float(population[k]),
                unemployment_rate=float(unemployment[k]),
                median_income=float(income[k]),
                hs_grad_rate=float(hs_grad[k]),
                political_status=statuses[k],
                pct_male=float(pct_male[k]),
                pct_female=float(pct_female[k]),
            ))
    return make_dataset(records)

