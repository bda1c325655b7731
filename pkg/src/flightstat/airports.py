"""Bundled airport lookup table (id, IATA code, city name)."""

import csv
from dataclasses import dataclass
from importlib import resources


@dataclass(frozen=True)
class Airport:
    airport_id: int
    code: str
    city: str


def load_airports() -> list[Airport]:
    with resources.files("flightstat.data").joinpath("airports.csv").open() as fh:
        reader = csv.DictReader(fh)
        return [Airport(int(r["AIRPORT_ID"]), r["CODE"], r["CITY"]) for r in reader]


_BY_KEY: dict[str, Airport] | None = None


def resolve_airport(text: str) -> Airport | None:
    """Match an airport by id, IATA code, or city name (case-insensitive)."""
    global _BY_KEY
    if _BY_KEY is None:
        _BY_KEY = {}
        for a in load_airports():
            _BY_KEY[str(a.airport_id)] = a
            _BY_KEY[a.code.lower()] = a
            _BY_KEY[a.city.lower()] = a
    return _BY_KEY.get(text.strip().lower())
