"""Per-(carrier, origin) linear regression of arrival delay.

Each sufficiently large (carrier, origin airport) group gets its own
no-intercept fit of arrival delay on departure delay and distance; a
global fallback fit covers everything else.  When the departure delay
of a flight is unknown at prediction time, a historical-average lookup
keyed by (origin, carrier, month, 3-hour scheduled-departure bucket)
stands in for it, provided enough history supports the average.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EmptyDatasetError, SingularDesignError
from .features import hhmm_to_minutes
from .ingest import FlightRecord
from .numerics import LinearModel, fit_ols, predict_linear

FEATURES = ("dep_delay", "distance")

DEFAULT_MIN_GROUP_SIZE = 30
DEFAULT_SUPPORT_THRESHOLD = 5

# Scheduled-departure hour buckets of 3 hours: 0 (00:00-02:59) .. 7 (21:00-23:59).
HOUR_BUCKET_MINUTES = 180


class ImputationKey(NamedTuple):
    origin: int
    carrier: str
    month: int
    hour_bucket: int


def hour_bucket(crs_dep_time: int) -> int:
    return hhmm_to_minutes(crs_dep_time) // HOUR_BUCKET_MINUTES


@dataclass(frozen=True)
class ImputationIndex:
    """Historical mean departure delay per key, with support counts."""

    entries: dict[ImputationKey, tuple[float, int]]
    support_threshold: int


@dataclass(frozen=True)
class CarrierOriginModel:
    groups: dict[tuple[str, int], LinearModel]
    fallback: LinearModel
    group_counts: dict[tuple[str, int], int]
    min_group_size: int


class Prediction(NamedTuple):
    estimate: float
    provenance: str  # measured-delay | imputed-delay | no-delay-assumed
    model_used: str  # group | fallback


def usable_records(records: list[FlightRecord]) -> list[FlightRecord]:
    """Records with a defined arrival-delay target (non-cancelled)."""
    return [r for r in records if not r.cancelled and r.arr_delay is not None and r.dep_delay is not None]


def _design(records: list[FlightRecord]) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([(r.dep_delay, r.distance) for r in records], dtype=float)
    y = np.array([r.arr_delay for r in records], dtype=float)
    return x, y


def train(
    records: list[FlightRecord],
    min_group_size: int = DEFAULT_MIN_GROUP_SIZE,
    with_intercept: bool = False,
) -> CarrierOriginModel:
    """Fit the per-group models and the global fallback.

    Groups with fewer than min_group_size usable rows (or with a
    degenerate design, e.g. all-zero departure delays) fall through to
    the fallback fit on all rows.
    """
    usable = usable_records(records)
    if len(usable) < 10:
        raise EmptyDatasetError(f"need at least 10 usable records, got {len(usable)}")

    by_group: dict[tuple[str, int], list[FlightRecord]] = {}
    for r in usable:
        by_group.setdefault((r.carrier, r.origin_airport_id), []).append(r)

    x_all, y_all = _design(usable)
    fallback = fit_ols(x_all, y_all, with_intercept=with_intercept, feature_names=list(FEATURES))

    groups: dict[tuple[str, int], LinearModel] = {}
    counts: dict[tuple[str, int], int] = {}
    for key in sorted(by_group):
        rows = by_group[key]
        counts[key] = len(rows)
        if len(rows) < min_group_size:
            continue
        x, y = _design(rows)
        try:
            groups[key] = fit_ols(x, y, with_intercept=with_intercept, feature_names=list(FEATURES))
        except SingularDesignError:
            continue  # degenerate group; fallback covers it
    return CarrierOriginModel(groups, fallback, counts, min_group_size)


def build_imputation_index(
    records: list[FlightRecord], support_threshold: int = DEFAULT_SUPPORT_THRESHOLD
) -> ImputationIndex:
    """Mean historical departure delay per (origin, carrier, month, hour bucket)."""
    sums: dict[ImputationKey, tuple[float, int]] = {}
    for r in records:
        if r.dep_delay is None:
            continue
        key = ImputationKey(r.origin_airport_id, r.carrier, r.month, hour_bucket(r.crs_dep_time))
        total, count = sums.get(key, (0.0, 0))
        sums[key] = (total + r.dep_delay, count + 1)
    entries = {k: (total / count, count) for k, (total, count) in sums.items()}
    return ImputationIndex(entries, support_threshold)


def impute_departure_delay(index: ImputationIndex, key: ImputationKey) -> float | None:
    """Historical mean for the key, or None below the support threshold."""
    entry = index.entries.get(key)
    if entry is None:
        return None
    mean, support = entry
    return mean if support >= index.support_threshold else None


def resolve_departure_delay(
    dep_delay: float | None,
    index: ImputationIndex | None,
    origin: int,
    carrier: str,
    month: int | None,
    crs_dep_time: int | None,
) -> tuple[float, str]:
    """A usable departure delay plus its provenance tag.

    The measured value wins when present; otherwise the imputation
    index is consulted (when available and the key parts are known);
    otherwise an on-schedule departure (0.0) is assumed and flagged.
    """
    if dep_delay is not None:
        return dep_delay, "measured-delay"
    if index is not None and month is not None and crs_dep_time is not None:
        imputed = impute_departure_delay(
            index, ImputationKey(origin, carrier, month, hour_bucket(crs_dep_time))
        )
        if imputed is not None:
            return imputed, "imputed-delay"
    return 0.0, "no-delay-assumed"


def predict(
    model: CarrierOriginModel,
    carrier: str,
    origin: int,
    dep_delay: float | None,
    distance: float,
    index: ImputationIndex | None = None,
    month: int | None = None,
    crs_dep_time: int | None = None,
) -> Prediction:
    """Predict arrival delay in minutes for one flight.

    Departure delay comes from the argument when given, else from the
    imputation index (needs month and crs_dep_time to form the key),
    else 0.0 with provenance "no-delay-assumed".
    """
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    dep_delay, provenance = resolve_departure_delay(
        dep_delay, index, origin, carrier, month, crs_dep_time
    )

    group = model.groups.get((carrier, origin))
    used = "group" if group is not None else "fallback"
    linear = group if group is not None else model.fallback
    return Prediction(predict_linear(linear, [dep_delay, distance]), provenance, used)


# --- persistence payload --------------------------------------------------


def _linear_to_dict(m: LinearModel) -> dict:
    return {
        "coefficients": list(m.coefficients),
        "intercept": m.intercept,
        "feature_names": list(m.feature_names),
    }


def _linear_from_dict(doc: dict) -> LinearModel:
    return LinearModel(tuple(doc["coefficients"]), doc["intercept"], tuple(doc["feature_names"]))


def to_params(model: CarrierOriginModel) -> dict:
    return {
        "min_group_size": model.min_group_size,
        "fallback": _linear_to_dict(model.fallback),
        "groups": [
            {
                "carrier": carrier,
                "origin": origin,
                "count": model.group_counts.get((carrier, origin), 0),
                "model": _linear_to_dict(linear),
            }
            for (carrier, origin), linear in sorted(model.groups.items())
        ],
        "group_counts": [
            {"carrier": c, "origin": o, "count": n} for (c, o), n in sorted(model.group_counts.items())
        ],
    }


def from_params(doc: dict) -> CarrierOriginModel:
    groups = {(g["carrier"], int(g["origin"])): _linear_from_dict(g["model"]) for g in doc["groups"]}
    counts = {(g["carrier"], int(g["origin"])): int(g["count"]) for g in doc["group_counts"]}
    return CarrierOriginModel(groups, _linear_from_dict(doc["fallback"]), counts, int(doc["min_group_size"]))


def index_to_params(index: ImputationIndex) -> dict:
    return {
        "support_threshold": index.support_threshold,
        "entries": [
            {"origin": k.origin, "carrier": k.carrier, "month": k.month, "hour_bucket": k.hour_bucket,
             "mean": mean, "support": support}
            for k, (mean, support) in sorted(index.entries.items())
        ],
    }


def index_from_params(doc: dict) -> ImputationIndex:
    entries = {
        ImputationKey(int(e["origin"]), e["carrier"], int(e["month"]), int(e["hour_bucket"])): (
            float(e["mean"]),
            int(e["support"]),
        )
        for e in doc["entries"]
    }
    return ImputationIndex(entries, int(doc["support_threshold"]))
