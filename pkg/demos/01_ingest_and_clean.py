"""
Parsing and cleaning on-time performance data
==============================================

Reads the bundled 200-row sample extract, reports malformed rows,
drops records with a missing delay label, and shows the hourly
interpolation utility for gappy weather series.
"""

from importlib import resources

from flightstat.ingest import (
    HourlySeries,
    drop_missing_labels,
    interpolate_hourly,
    parse_flights,
    split_train_test,
)

# The package ships a small sample in the exact CSV schema the parser
# expects (header names, empty cell = missing).
with resources.files("flightstat.data").joinpath("sample_flights.csv").open() as fh:
    records, rejects = parse_flights(fh)

print(f"parsed {len(records)} records, rejected {len(rejects)} rows")
for reject in rejects:
    print(f"  {reject}")  # line=<n> reason=<text>

# Rows whose ARR_DEL15 label is missing cannot be used downstream.
cleaned = drop_missing_labels(records)
print(f"{len(cleaned)} records have the delay label present")

cancelled = sum(r.cancelled for r in cleaned)
print(f"{cancelled} cancelled flights are retained for counting but excluded from fits")

# A seeded 1% holdout, the same split the training pipeline uses.
train, test = split_train_test(cleaned, test_fraction=0.05, seed=42)
print(f"split: {len(train)} train / {len(test)} test")

# Hourly station series with interior gaps are filled linearly; the
# leading gap stays missing and is flagged.
series = HourlySeries("STATION-7", ((0, None), (1, 10.0), (2, None), (3, None), (4, 4.0)))
filled = interpolate_hourly(series)
print("interpolated:", filled.points)
print("unfillable hours:", filled.unfilled)
