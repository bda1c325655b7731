"""Season-routed regression: a depth-1 tree over four linear models.

The router assigns a month to its meteorological season (Dec-Feb
winter, Mar-May spring, Jun-Aug summer, Sep-Nov fall) and delegates to
that season's linear model of arrival delay on departure delay and
distance, fitted with an intercept so seasons can shift baseline delay.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .carrier_origin import usable_records
from .errors import EmptyDatasetError
from .ingest import FlightRecord
from .numerics import LinearModel, fit_ols, predict_linear

FEATURES = ("dep_delay", "distance")

MIN_SEASON_SIZE = 10


class Season(enum.Enum):
    WINTER = "winter"
    SPRING = "spring"
    SUMMER = "summer"
    FALL = "fall"


_MONTH_SEASON = {
    12: Season.WINTER, 1: Season.WINTER, 2: Season.WINTER,
    3: Season.SPRING, 4: Season.SPRING, 5: Season.SPRING,
    6: Season.SUMMER, 7: Season.SUMMER, 8: Season.SUMMER,
    9: Season.FALL, 10: Season.FALL, 11: Season.FALL,
}


def season_of(month: int) -> Season:
    """Map a month (1-12) to its season."""
    if month not in _MONTH_SEASON:
        raise ValueError(f"month {month} out of range 1-12")
    return _MONTH_SEASON[month]


@dataclass(frozen=True)
class SeasonalModel:
    models: dict[Season, LinearModel]
    counts: dict[Season, int]
    pooled_seasons: frozenset[Season]  # seasons that carry a copy of the pooled fit

    def __post_init__(self):
        if set(self.models) != set(Season):
            raise ValueError("a model is required for every season")


def train(records: list[FlightRecord]) -> SeasonalModel:
    """Fit one model per season; short seasons get the pooled fit.

    Seasons with fewer than MIN_SEASON_SIZE usable rows receive a copy
    of the fit on all usable rows and are flagged in pooled_seasons.
    """
    usable = usable_records(records)
    if len(usable) < 10:
        raise EmptyDatasetError(f"need at least 10 usable records, got {len(usable)}")

    by_season: dict[Season, list[FlightRecord]] = {season: [] for season in Season}
    for r in usable:
        by_season[season_of(r.month)].append(r)

    counts = {season: len(rows) for season, rows in by_season.items()}
    pooled_fit = None
    if any(count < MIN_SEASON_SIZE for count in counts.values()):
        pooled_fit = _fit(usable)

    models: dict[Season, LinearModel] = {}
    pooled: set[Season] = set()
    for season in Season:
        rows = by_season[season]
        if len(rows) < MIN_SEASON_SIZE:
            models[season] = pooled_fit
            pooled.add(season)
        else:
            models[season] = _fit(rows)
    return SeasonalModel(models, counts, frozenset(pooled))


def _fit(records: list[FlightRecord]) -> LinearModel:
    x = np.array([(r.dep_delay, r.distance) for r in records], dtype=float)
    y = np.array([r.arr_delay for r in records], dtype=float)
    return fit_ols(x, y, with_intercept=True, feature_names=list(FEATURES))


def predict(model: SeasonalModel, month: int, dep_delay: float, distance: float) -> float:
    """Route by season and evaluate that season's linear model."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return predict_linear(model.models[season_of(month)], [dep_delay, distance])


# --- persistence payload --------------------------------------------------


def to_params(model: SeasonalModel) -> dict:
    return {
        "seasons": {
            season.value: {
                "coefficients": list(m.coefficients),
                "intercept": m.intercept,
                "feature_names": list(m.feature_names),
                "count": model.counts.get(season, 0),
                "pooled": season in model.pooled_seasons,
            }
            for season, m in model.models.items()
        }
    }


def from_params(doc: dict) -> SeasonalModel:
    models, counts, pooled = {}, {}, set()
    for name, entry in doc["seasons"].items():
        season = Season(name)
        models[season] = LinearModel(
            tuple(entry["coefficients"]), entry["intercept"], tuple(entry["feature_names"])
        )
        counts[season] = int(entry["count"])
        if entry["pooled"]:
            pooled.add(season)
    return SeasonalModel(models, counts, frozenset(pooled))
