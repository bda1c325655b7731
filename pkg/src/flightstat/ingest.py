"""Parsing, cleaning, and splitting of on-time-performance data.

Input CSVs are UTF-8, comma-separated, first line a header naming at
least the REQUIRED_COLUMNS (in any order).  Empty cells mean missing.
Malformed rows never raise: they come back as RejectedRow diagnostics.

Also houses the seeded synthetic data generator used by the test and
benchmark suites, since the real 2010-2020 corpus is far beyond desk
scale.
"""

import csv
import io
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .airports import load_airports
from .errors import EmptyDatasetError, InsufficientDataError, SchemaError

REQUIRED_COLUMNS = [
    "YEAR",
    "QUARTER",
    "MONTH",
    "DAY_OF_MONTH",
    "DAY_OF_WEEK",
    "CARRIER",
    "FLIGHT_NUM",
    "ORIGIN_AIRPORT_ID",
    "DEST_AIRPORT_ID",
    "DEST_WAC",
    "CRS_DEP_TIME",
    "CRS_ARR_TIME",
    "DISTANCE",
    "DEP_DELAY",
    "ARR_DELAY",
    "ARR_DEL15",
    "CANCELLED",
]

CARRIERS = ["AA", "AS", "B6", "DL", "F9", "NK", "UA", "WN"]


@dataclass(frozen=True)
class RawRow:
    """One CSV data row as read, before typing/validation."""

    cells: tuple[tuple[str, str], ...]  # (column name, cell) in file order
    line_number: int

    def get(self, column: str) -> str:
        for name, value in self.cells:
            if name == column:
                return value
        raise KeyError(column)


@dataclass(frozen=True)
class RejectedRow:
    """Diagnostic for a row that failed validation."""

    line_number: int
    reason: str

    def __str__(self) -> str:
        return f"line={self.line_number} reason={self.reason}"


@dataclass(frozen=True)
class FlightRecord:
    """One cleaned flight row.

    Delay fields may be None only on cancelled flights; arr_del15 may be
    None anywhere until drop_missing_labels has run.  extras carries
    pass-through cells from columns outside the required schema (for
    example optional weather columns).
    """

    year: int
    quarter: int
    month: int
    day_of_month: int
    day_of_week: int
    flight_num: str
    carrier: str
    origin_airport_id: int
    dest_airport_id: int
    dest_wac: int
    crs_dep_time: int
    crs_arr_time: int
    distance: float
    dep_delay: float | None
    arr_delay: float | None
    arr_del15: int | None
    cancelled: int
    extras: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not 1 <= self.quarter <= 4:
            raise ValueError(f"quarter {self.quarter} out of range 1-4")
        if not 1 <= self.month <= 12:
            raise ValueError(f"month {self.month} out of range 1-12")
        if not 1 <= self.day_of_month <= 31:
            raise ValueError(f"day_of_month {self.day_of_month} out of range 1-31")
        if not 1 <= self.day_of_week <= 7:
            raise ValueError(f"day_of_week {self.day_of_week} out of range 1-7")
        for label, hhmm in (("crs_dep_time", self.crs_dep_time), ("crs_arr_time", self.crs_arr_time)):
            if not 0 <= hhmm < 2400 or hhmm % 100 >= 60:
                raise ValueError(f"{label} {hhmm:04d} is not a valid HHMM clock time")
        if not self.distance > 0:
            raise ValueError(f"distance {self.distance} must be positive")
        if self.cancelled not in (0, 1):
            raise ValueError(f"cancelled flag {self.cancelled} must be 0 or 1")
        if self.arr_del15 not in (None, 0, 1):
            raise ValueError(f"arr_del15 {self.arr_del15} must be 0, 1, or missing")
        if not self.cancelled:
            if self.dep_delay is None or self.arr_delay is None:
                raise ValueError("dep_delay/arr_delay required on non-cancelled flights")
        for label, v in (("dep_delay", self.dep_delay), ("arr_delay", self.arr_delay)):
            if v is not None and not math.isfinite(v):
                raise ValueError(f"{label} must be finite")


@dataclass(frozen=True)
class HourlySeries:
    """Hourly station series; value None means missing.

    unfilled lists hour indices that interpolation could not fill
    (leading or trailing gaps).
    """

    station_id: str
    points: tuple[tuple[int, float | None], ...]
    unfilled: tuple[int, ...] = ()

    def __post_init__(self):
        hours = [h for h, _ in self.points]
        if any(b <= a for a, b in zip(hours, hours[1:])):
            raise ValueError("hour indices must be strictly increasing")


def _parse_int(text: str, column: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"{column} value {text!r} is not an integer") from None


def _parse_float(text: str, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"{column} value {text!r} is not a number") from None
    if not math.isfinite(v):
        raise ValueError(f"{column} value {text!r} is not finite")
    return v


def _parse_flag(text: str, column: str) -> int:
    v = _parse_float(text, column)
    if v not in (0.0, 1.0):
        raise ValueError(f"{column} value {text!r} is not a 0/1 flag")
    return int(v)


def _record_from_raw(raw: RawRow) -> FlightRecord:
    g = raw.get
    dep_delay = g("DEP_DELAY")
    arr_delay = g("ARR_DELAY")
    arr_del15 = g("ARR_DEL15")
    extras = tuple((name, value) for name, value in raw.cells if name not in REQUIRED_COLUMNS)
    return FlightRecord(
        year=_parse_int(g("YEAR"), "YEAR"),
        quarter=_parse_int(g("QUARTER"), "QUARTER"),
        month=_parse_int(g("MONTH"), "MONTH"),
        day_of_month=_parse_int(g("DAY_OF_MONTH"), "DAY_OF_MONTH"),
        day_of_week=_parse_int(g("DAY_OF_WEEK"), "DAY_OF_WEEK"),
        flight_num=g("FLIGHT_NUM"),
        carrier=g("CARRIER"),
        origin_airport_id=_parse_int(g("ORIGIN_AIRPORT_ID"), "ORIGIN_AIRPORT_ID"),
        dest_airport_id=_parse_int(g("DEST_AIRPORT_ID"), "DEST_AIRPORT_ID"),
        dest_wac=_parse_int(g("DEST_WAC"), "DEST_WAC"),
        crs_dep_time=_parse_int(g("CRS_DEP_TIME"), "CRS_DEP_TIME"),
        crs_arr_time=_parse_int(g("CRS_ARR_TIME"), "CRS_ARR_TIME"),
        distance=_parse_float(g("DISTANCE"), "DISTANCE"),
        dep_delay=None if dep_delay == "" else _parse_float(dep_delay, "DEP_DELAY"),
        arr_delay=None if arr_delay == "" else _parse_float(arr_delay, "ARR_DELAY"),
        arr_del15=None if arr_del15 == "" else _parse_flag(arr_del15, "ARR_DEL15"),
        cancelled=_parse_flag(g("CANCELLED"), "CANCELLED"),
        extras=extras,
    )


def parse_flights(stream) -> tuple[list[FlightRecord], list[RejectedRow]]:
    """Parse a CSV stream into FlightRecords plus per-row diagnostics.

    stream is any iterable of text lines (an open file, a StringIO, or a
    list of strings).  The header must name every required column;
    otherwise SchemaError is raised.  Rows that fail validation are
    reported, never silently dropped.
    """
    if isinstance(stream, (str, bytes)):
        raise TypeError("pass an open stream or iterable of lines, not a path or blob")
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: no header line") from None
    if len(set(header)) != len(header):
        dupes = sorted({c for c in header if header.count(c) > 1})
        raise SchemaError(f"duplicate column names in header: {dupes}")
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"header is missing mandatory columns: {missing}")

    records: list[FlightRecord] = []
    rejects: list[RejectedRow] = []
    for line_number, row in enumerate(reader, start=2):
        if not row:
            continue  # blank line
        if len(row) != len(header):
            rejects.append(
                RejectedRow(line_number, f"expected {len(header)} cells, got {len(row)}")
            )
            continue
        raw = RawRow(tuple(zip(header, row)), line_number)
        try:
            records.append(_record_from_raw(raw))
        except ValueError as exc:
            rejects.append(RejectedRow(line_number, str(exc)))
    return records, rejects


def parse_flights_path(path) -> tuple[list[FlightRecord], list[RejectedRow]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_flights(fh)


def _format_float(v: float) -> str:
    # repr round-trips exactly; integers render without the trailing .0
    return str(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)


def record_to_row(record: FlightRecord) -> list[str]:
    """Serialize a record back to cells in REQUIRED_COLUMNS order."""
    return [
        str(record.year),
        str(record.quarter),
        str(record.month),
        str(record.day_of_month),
        str(record.day_of_week),
        record.carrier,
        record.flight_num,
        str(record.origin_airport_id),
        str(record.dest_airport_id),
        str(record.dest_wac),
        f"{record.crs_dep_time:04d}",
        f"{record.crs_arr_time:04d}",
        _format_float(record.distance),
        "" if record.dep_delay is None else _format_float(record.dep_delay),
        "" if record.arr_delay is None else _format_float(record.arr_delay),
        "" if record.arr_del15 is None else str(record.arr_del15),
        str(record.cancelled),
    ]


def write_flights_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REQUIRED_COLUMNS)
        for record in records:
            writer.writerow(record_to_row(record))


def records_to_csv_text(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(REQUIRED_COLUMNS)
    for record in records:
        writer.writerow(record_to_row(record))
    return buf.getvalue()


def drop_missing_labels(records: list[FlightRecord]) -> list[FlightRecord]:
    """Keep exactly the records whose arr_del15 label is present."""
    return [r for r in records if r.arr_del15 is not None]


def interpolate_hourly(series: HourlySeries) -> HourlySeries:
    """Fill interior gaps of an hourly series by linear interpolation.

    A missing value strictly between two known values is replaced by the
    line through its nearest known neighbors.  Leading and trailing
    missing values stay missing and are listed in the result's unfilled
    field.  Known values are never touched.
    """
    known = [(h, v) for h, v in series.points if v is not None]
    if len(known) < 2:
        raise InsufficientDataError(
            f"interpolation needs at least two known values, got {len(known)}"
        )
    first_known = known[0][0]
    last_known = known[-1][0]

    filled: list[tuple[int, float | None]] = []
    unfilled: list[int] = []
    prev_idx = 0
    for h, v in series.points:
        if v is not None:
            filled.append((h, v))
            continue
        if h < first_known or h > last_known:
            filled.append((h, None))
            unfilled.append(h)
            continue
        while known[prev_idx + 1][0] < h:
            prev_idx += 1
        (h0, v0), (h1, v1) = known[prev_idx], known[prev_idx + 1]
        filled.append((h, v0 + (v1 - v0) * (h - h0) / (h1 - h0)))
    return HourlySeries(series.station_id, tuple(filled), tuple(unfilled))


def split_train_test(
    records: list[FlightRecord],
    test_fraction: float,
    seed: int,
    chronological: bool = False,
) -> tuple[list[FlightRecord], list[FlightRecord]]:
    """Partition records into (train, test).

    The test set holds round(n * test_fraction) records, at least 1.
    Selection is a uniform random holdout determined entirely by seed;
    with chronological=True the most recent records (by scheduled date
    and time) form the test set instead and the seed is ignored.  Both
    parts preserve the input ordering.
    """
    if not records:
        raise EmptyDatasetError("cannot split an empty record list")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(records)
    test_size = min(n, max(1, math.floor(n * test_fraction + 0.5)))
    if chronological:
        order = sorted(
            range(n),
            key=lambda i: (
                records[i].year,
                records[i].month,
                records[i].day_of_month,
                records[i].crs_dep_time,
            ),
        )
        test_idx = set(order[-test_size:])
    else:
        test_idx = set(random.Random(seed).sample(range(n), test_size))
    train = [r for i, r in enumerate(records) if i not in test_idx]
    test = [r for i, r in enumerate(records) if i in test_idx]
    return train, test


# ---------------------------------------------------------------------------
# Synthetic data


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the synthetic benchmark generator.

    Arrival delay is generated as

        arr_delay = b_dep(season) * dep_delay + b_dist(season) * distance
                    + amplitude * sin(2*pi * dep_minutes / 1440) + noise

    so per-season linear structure and a smooth nonlinear time-of-day
    term are both present and their strength is configurable.
    """

    count: int
    season_coefficients: dict[str, tuple[float, float]] = field(
        default_factory=lambda: {
            "winter": (1.30, 0.010),
            "spring": (0.80, 0.004),
            "summer": (1.15, 0.008),
            "fall": (0.95, 0.006),
        }
    )
    noise_scale: float = 8.0
    nonlinearity_amplitude: float = 25.0
    n_routes: int = 60
    cancel_rate: float = 0.0
    label_missing_rate: float = 0.0
    years: tuple[int, int] = (2023, 2024)


_SEASON_OF_MONTH = {
    12: "winter", 1: "winter", 2: "winter",
    3: "spring", 4: "spring", 5: "spring",
    6: "summer", 7: "summer", 8: "summer",
    9: "fall", 10: "fall", 11: "fall",
}


def _hhmm(minutes: int) -> int:
    return (minutes // 60) * 100 + minutes % 60


def generate_synthetic(config: SyntheticConfig, seed: int) -> tuple[list[FlightRecord], dict]:
    """Generate seeded synthetic flight records plus a sidecar manifest.

    The manifest records every generation parameter (config, seed, and
    the sampled route table) so tests can recompute ground truth
    independently of this code path.
    """
    if config.count <= 0:
        raise ValueError(f"record count must be positive, got {config.count}")
    missing = {"winter", "spring", "summer", "fall"} - set(config.season_coefficients)
    if missing:
        raise ValueError(f"season_coefficients missing seasons: {sorted(missing)}")

    rng = np.random.default_rng(seed)
    airports = load_airports()

    routes = []
    for i in range(config.n_routes):
        origin, dest = rng.choice(len(airports), size=2, replace=False)
        carrier = CARRIERS[int(rng.integers(0, len(CARRIERS)))]
        routes.append(
            {
                "origin": airports[origin].airport_id,
                "dest": airports[dest].airport_id,
                "dest_wac": 1 + airports[dest].airport_id % 93,
                "carrier": carrier,
                "flight_num": str(100 + i),
                "distance": float(np.round(rng.uniform(150.0, 2800.0), 1)),
            }
        )

    records: list[FlightRecord] = []
    for _ in range(config.count):
        route = routes[int(rng.integers(0, len(routes)))]
        month = int(rng.integers(1, 13))
        season = _SEASON_OF_MONTH[month]
        b_dep, b_dist = config.season_coefficients[season]

        dep_minutes = 300 + 5 * int(rng.integers(0, 216))  # 05:00 .. 22:55
        travel = int(route["distance"] / 8.0) + 30
        arr_minutes = (dep_minutes + travel) % 1440

        cancelled = int(rng.random() < config.cancel_rate)
        if cancelled:
            dep_delay = arr_delay = None
            arr_del15 = 1  # cancelled flights count as delayed
        else:
            dep_delay = float(np.round(rng.exponential(20.0) - 5.0, 2))
            wave = config.nonlinearity_amplitude * math.sin(2.0 * math.pi * dep_minutes / 1440.0)
            noise = float(rng.normal(0.0, config.noise_scale)) if config.noise_scale > 0 else 0.0
            arr_delay = b_dep * dep_delay + b_dist * route["distance"] + wave + noise
            arr_del15 = int(arr_delay > 15.0)
        if config.label_missing_rate > 0 and rng.random() < config.label_missing_rate:
            arr_del15 = None

        records.append(
            FlightRecord(
                year=int(rng.integers(config.years[0], config.years[1] + 1)),
                quarter=(month - 1) // 3 + 1,
                month=month,
                day_of_month=int(rng.integers(1, 29)),
                day_of_week=int(rng.integers(1, 8)),
                flight_num=route["flight_num"],
                carrier=route["carrier"],
                origin_airport_id=route["origin"],
                dest_airport_id=route["dest"],
                dest_wac=route["dest_wac"],
                crs_dep_time=_hhmm(dep_minutes),
                crs_arr_time=_hhmm(arr_minutes),
                distance=route["distance"],
                dep_delay=dep_delay,
                arr_delay=arr_delay,
                arr_del15=arr_del15,
                cancelled=cancelled,
            )
        )

    manifest = {
        "generator": "flightstat.ingest.generate_synthetic",
        "seed": seed,
        "count": config.count,
        "season_coefficients": {s: list(c) for s, c in config.season_coefficients.items()},
        "noise_scale": config.noise_scale,
        "nonlinearity_amplitude": config.nonlinearity_amplitude,
        "n_routes": config.n_routes,
        "cancel_rate": config.cancel_rate,
        "label_missing_rate": config.label_missing_rate,
        "years": list(config.years),
        "routes": routes,
    }
    return records, manifest
