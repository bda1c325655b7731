"""Feature selection and encoding of cleaned flight records.

Selected features per record: month, day of month, day of week, flight
number, carrier, origin and destination airport ids, scheduled times as
minutes since midnight, distance, and departure delay.  Year, quarter,
and the destination world-area code are deliberately absent.

Categorical columns are one-hot encoded when they have at most `cutoff`
distinct values, label encoded otherwise; both use the lexicographic
order of the category strings, codes starting at 0.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EmptyDatasetError, EncodingError
from .ingest import FlightRecord
from .numerics import DELAY_THRESHOLD_MINUTES

# Columns with at most this many distinct categories get one-hot encoded.
DEFAULT_ONE_HOT_CUTOFF = 31

CATEGORICAL_COLUMNS = ("month", "day_of_month", "day_of_week", "flight_num", "carrier", "origin", "dest")
CONTINUOUS_COLUMNS = ("crs_dep_minutes", "crs_arr_minutes", "distance", "dep_delay")


class SelectedFeatures(NamedTuple):
    month: int
    day_of_month: int
    day_of_week: int
    flight_num: str
    carrier: str
    origin: int
    dest: int
    crs_dep_minutes: int
    crs_arr_minutes: int
    distance: float
    dep_delay: float | None


def hhmm_to_minutes(hhmm: int) -> int:
    """Convert an HHMM clock value to minutes since midnight."""
    return (hhmm // 100) * 60 + hhmm % 100


def select_features(record: FlightRecord) -> SelectedFeatures:
    """Project a cleaned record onto the modeling feature set."""
    return SelectedFeatures(
        month=record.month,
        day_of_month=record.day_of_month,
        day_of_week=record.day_of_week,
        flight_num=record.flight_num,
        carrier=record.carrier,
        origin=record.origin_airport_id,
        dest=record.dest_airport_id,
        crs_dep_minutes=hhmm_to_minutes(record.crs_dep_time),
        crs_arr_minutes=hhmm_to_minutes(record.crs_arr_time),
        distance=record.distance,
        dep_delay=record.dep_delay,
    )


def derive_delay_labels(record: FlightRecord) -> tuple[bool, bool]:
    """(departure delayed, arrival delayed) at the 15-minute threshold.

    Exactly 15 minutes late is on time; strictly more is delayed.
    Cancelled flights count as arrival-delayed regardless of minutes.
    """
    if record.dep_delay is None:
        raise ValueError("dep_delay missing; cannot derive departure label")
    dep_delayed = record.dep_delay > DELAY_THRESHOLD_MINUTES
    if record.cancelled:
        return dep_delayed, True
    if record.arr_delay is None:
        raise ValueError("arr_delay missing on a non-cancelled record")
    return dep_delayed, record.arr_delay > DELAY_THRESHOLD_MINUTES


@dataclass(frozen=True)
class ColumnRule:
    """Encoding rule for one selected column."""

    kind: str  # "one_hot" | "label" | "numeric" | "drop"
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("one_hot", "label", "numeric", "drop"):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("category list contains duplicates")
        if list(self.categories) != sorted(self.categories):
            raise ValueError("categories must be in lexicographic order")


@dataclass(frozen=True)
class EncoderSpec:
    """Fitted per-column encoding rules; immutable and shareable."""

    rules: tuple[tuple[str, ColumnRule], ...]
    cutoff: int

    def rule_for(self, column: str) -> ColumnRule:
        for name, rule in self.rules:
            if name == column:
                return rule
        raise KeyError(column)

    def to_dict(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "rules": [
                {"column": name, "kind": rule.kind, "categories": list(rule.categories)}
                for name, rule in self.rules
            ],
        }

    @staticmethod
    def from_dict(doc: dict) -> "EncoderSpec":
        rules = tuple(
            (r["column"], ColumnRule(r["kind"], tuple(r["categories"]))) for r in doc["rules"]
        )
        return EncoderSpec(rules, int(doc["cutoff"]))


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column shift/scale, aligned with the encoded column list.

    One-hot columns carry (0, 1) so applying the transform uniformly is
    a no-op for them.  Population (divide-by-n) moments; constant
    columns keep sd 1 and therefore standardize to all zeros.
    """

    means: tuple[float, ...]
    sds: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"means": list(self.means), "sds": list(self.sds)}

    @staticmethod
    def from_dict(doc: dict) -> "StandardizationParams":
        return StandardizationParams(tuple(doc["means"]), tuple(doc["sds"]))


@dataclass
class EncodedDataset:
    """Numeric design matrix plus target and encoding metadata."""

    matrix: np.ndarray
    target: np.ndarray
    column_names: list[str]
    spec: EncoderSpec
    standardization: StandardizationParams | None = None

    def validate(self) -> None:
        if len(self.column_names) != len(set(self.column_names)):
            raise ValueError("column names must be unique")
        if self.matrix.shape != (len(self.target), len(self.column_names)):
            raise ValueError("matrix shape disagrees with target/columns")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("design matrix contains non-finite entries")


def fit_encoders(records: list[FlightRecord], cutoff: int = DEFAULT_ONE_HOT_CUTOFF) -> EncoderSpec:
    """Fit per-column encoding rules from the record multiset.

    Deterministic: the rule table depends only on the set of distinct
    category values, ordered lexicographically.
    """
    if not records:
        raise EmptyDatasetError("cannot fit encoders on an empty record list")
    selected = [select_features(r) for r in records]
    rules: list[tuple[str, ColumnRule]] = []
    for column in SelectedFeatures._fields:
        if column in CATEGORICAL_COLUMNS:
            values = sorted({str(getattr(s, column)) for s in selected})
            kind = "one_hot" if len(values) <= cutoff else "label"
            rules.append((column, ColumnRule(kind, tuple(values))))
        else:
            rules.append((column, ColumnRule("numeric")))
    return EncoderSpec(tuple(rules), cutoff)


def _expanded_columns(spec: EncoderSpec) -> list[str]:
    names: list[str] = []
    for column, rule in spec.rules:
        if rule.kind == "one_hot":
            names.extend(f"{column}={cat}" for cat in rule.categories)
        elif rule.kind in ("label", "numeric"):
            names.append(column)
    return names


def _encode_value(rule: ColumnRule, column: str, value, allow_unknown: bool) -> list[float]:
    """Expand one cell into its encoded column values; label-unknown is NaN."""
    if rule.kind == "numeric":
        if value is None:
            raise EncodingError(f"column {column!r} has a missing numeric value")
        return [float(value)]
    text = str(value)
    if rule.kind == "one_hot":
        if text not in rule.categories:
            if not allow_unknown:
                raise EncodingError(f"unknown category {text!r} in column {column!r}")
            return [0.0] * len(rule.categories)
        return [1.0 if cat == text else 0.0 for cat in rule.categories]
    if rule.kind == "label":
        try:
            return [float(rule.categories.index(text))]
        except ValueError:
            if not allow_unknown:
                raise EncodingError(f"unknown category {text!r} in column {column!r}") from None
            return [math.nan]  # resolved to the column mean (or -1) afterwards
    raise AssertionError(rule.kind)


def encode(
    records: list[FlightRecord],
    spec: EncoderSpec,
    standardize: bool = False,
    params: StandardizationParams | None = None,
    allow_unknown: bool = False,
) -> EncodedDataset:
    """Encode records into a design matrix with arrival delay as target.

    With standardize=True and no params given, shift/scale parameters
    are fitted on these records (population convention) and stored in
    the result; pass the training params to encode held-out data
    consistently.  Unknown categories raise EncodingError unless
    allow_unknown is set, in which case one-hot groups go all-zero and
    label codes fall back to the column mean (code -1 when there are no
    standardization parameters to take a mean from).
    """
    if not records:
        raise EmptyDatasetError("cannot encode an empty record list")
    if any(r.arr_delay is None for r in records):
        raise ValueError("every record needs arr_delay as the regression target")

    names = _expanded_columns(spec)
    rows = np.empty((len(records), len(names)))
    for i, record in enumerate(records):
        sel = select_features(record)
        out: list[float] = []
        for column, rule in spec.rules:
            if rule.kind == "drop":
                continue
            out.extend(_encode_value(rule, column, getattr(sel, column), allow_unknown))
        rows[i] = out
    target = np.array([r.arr_delay for r in records], dtype=float)

    applied = params
    if standardize and applied is None:
        applied = fit_standardization(rows, names, spec)
    if applied is not None and len(applied.means) != len(names):
        raise ValueError("standardization params do not match the encoded columns")

    # Unknown label codes were marked NaN: substitute the column mean when
    # we have one, else the reserved code -1.
    nan_mask = np.isnan(rows)
    if nan_mask.any():
        fill = np.asarray(applied.means) if applied is not None else np.full(len(names), -1.0)
        rows[nan_mask] = np.broadcast_to(fill, rows.shape)[nan_mask]

    if applied is not None:
        rows = (rows - np.asarray(applied.means)) / np.asarray(applied.sds)

    dataset = EncodedDataset(rows, target, names, spec, applied)
    dataset.validate()
    return dataset


def fit_standardization(matrix: np.ndarray, names: list[str], spec: EncoderSpec) -> StandardizationParams:
    """Population mean/sd per column; identity for one-hot columns."""
    one_hot = {f"{column}={cat}" for column, rule in spec.rules if rule.kind == "one_hot" for cat in rule.categories}
    means, sds = [], []
    for j, name in enumerate(names):
        if name in one_hot:
            means.append(0.0)
            sds.append(1.0)
            continue
        col = matrix[:, j]
        col = col[~np.isnan(col)]
        mean = float(col.mean()) if len(col) else 0.0
        sd = float(col.std()) if len(col) else 1.0
        means.append(mean)
        sds.append(sd if sd > 0.0 else 1.0)
    return StandardizationParams(tuple(means), tuple(sds))


def encode_one(
    sel: SelectedFeatures,
    spec: EncoderSpec,
    params: StandardizationParams | None,
) -> np.ndarray:
    """Encode a single feature tuple for prediction (unknowns allowed)."""
    out: list[float] = []
    for column, rule in spec.rules:
        if rule.kind == "drop":
            continue
        out.extend(_encode_value(rule, column, getattr(sel, column), allow_unknown=True))
    row = np.asarray(out)
    if params is not None:
        means = np.asarray(params.means)
        row = np.where(np.isnan(row), means, row)
        row = (row - means) / np.asarray(params.sds)
    else:
        row = np.where(np.isnan(row), -1.0, row)
    return row


def decode_one_hot(dataset: EncodedDataset, column: str) -> list[str]:
    """Read category names back out of a one-hot group, row by row."""
    rule = dataset.spec.rule_for(column)
    if rule.kind != "one_hot":
        raise ValueError(f"column {column!r} is not one-hot encoded")
    cols = [dataset.column_names.index(f"{column}={cat}") for cat in rule.categories]
    block = dataset.matrix[:, cols]
    out = []
    for row in block:
        hits = np.flatnonzero(row == 1.0)
        if len(hits) != 1:
            raise ValueError("row does not contain exactly one active category")
        out.append(rule.categories[int(hits[0])])
    return out
