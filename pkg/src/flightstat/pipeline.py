"""End-to-end orchestration: train all models, evaluate, lay out files.

A data directory (written by `flightstat ingest`) holds records.csv,
train.csv, test.csv, and manifest.json.  A models directory (written by
`flightstat train`) holds one JSON document per model plus
distances.json for serving.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import carrier_origin, mlp, seasonal, store
from .errors import EmptyDatasetError
from .features import EncoderSpec, encode, fit_encoders
from .ingest import FlightRecord, parse_flights_path
from .mlp import TrainConfig
from .numerics import MetricReport, evaluate
from .service import build_distance_table, save_distance_table

MODEL_LABELS = {
    "carrier_origin": "Model 1 - Carrier Origin",
    "seasonal": "Model 2 - Seasonal",
    "mlp": "Model 3 - Neural Net",
}


@dataclass
class TrainedModels:
    carrier: carrier_origin.CarrierOriginModel | None = None
    imputation_index: carrier_origin.ImputationIndex | None = None
    seasonal: seasonal.SeasonalModel | None = None
    mlp_model: mlp.MlpModel | None = None
    mlp_spec: EncoderSpec | None = None


def load_split(data_dir) -> tuple[list[FlightRecord], list[FlightRecord]]:
    data_dir = Path(data_dir)
    train_path, test_path = data_dir / "train.csv", data_dir / "test.csv"
    if not train_path.exists() or not test_path.exists():
        raise EmptyDatasetError(f"no train.csv/test.csv under {data_dir}; run ingest first")
    train, train_rejects = parse_flights_path(train_path)
    test, test_rejects = parse_flights_path(test_path)
    if train_rejects or test_rejects:
        raise EmptyDatasetError("ingested split files contain malformed rows; re-run ingest")
    return train, test


def train_models(
    records: list[FlightRecord],
    which: list[str],
    mlp_config: TrainConfig = TrainConfig(),
    hidden_sizes: tuple[int, ...] = mlp.DEFAULT_HIDDEN_SIZES,
    cutoff: int = 31,
    min_group_size: int = carrier_origin.DEFAULT_MIN_GROUP_SIZE,
    support_threshold: int = carrier_origin.DEFAULT_SUPPORT_THRESHOLD,
) -> TrainedModels:
    trained = TrainedModels()
    usable = carrier_origin.usable_records(records)
    if "carrier_origin" in which:
        trained.carrier = carrier_origin.train(records, min_group_size=min_group_size)
        trained.imputation_index = carrier_origin.build_imputation_index(records, support_threshold)
    if "seasonal" in which:
        trained.seasonal = seasonal.train(records)
    if "mlp" in which:
        spec = fit_encoders(usable, cutoff=cutoff)
        dataset = encode(usable, spec, standardize=True)
        trained.mlp_model, _ = mlp.train_mlp(dataset, mlp_config, hidden_sizes=hidden_sizes)
        trained.mlp_spec = spec
    return trained


def save_models(trained: TrainedModels, records: list[FlightRecord], out_dir, metadata: dict | None = None) -> list[Path]:
    """Write model files and the serving distance table under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = dict(metadata or {})
    written: list[Path] = []

    if trained.carrier is not None:
        params = carrier_origin.to_params(trained.carrier)
        if trained.imputation_index is not None:
            params["imputation_index"] = carrier_origin.index_to_params(trained.imputation_index)
        path = out_dir / "carrier_origin.json"
        store.save_model(store.ModelFile("carrier_origin", params, None, meta), path)
        written.append(path)
    if trained.seasonal is not None:
        path = out_dir / "seasonal.json"
        store.save_model(store.ModelFile("seasonal", seasonal.to_params(trained.seasonal), None, meta), path)
        written.append(path)
    if trained.mlp_model is not None:
        encoders = store.encoder_payload(trained.mlp_spec, trained.mlp_model.input_standardization)
        path = out_dir / "mlp.json"
        store.save_model(store.ModelFile("mlp", mlp.to_params(trained.mlp_model), encoders, meta), path)
        written.append(path)

    table = build_distance_table(records)
    save_distance_table(table, out_dir / "distances.json")
    written.append(out_dir / "distances.json")
    return written


def load_models(models_dir) -> TrainedModels:
    models_dir = Path(models_dir)
    trained = TrainedModels()
    path = models_dir / "carrier_origin.json"
    if path.exists():
        model_file = store.load_model(path)
        trained.carrier, trained.imputation_index = store.revive(model_file)
    path = models_dir / "seasonal.json"
    if path.exists():
        trained.seasonal = store.revive(store.load_model(path))
    path = models_dir / "mlp.json"
    if path.exists():
        model_file = store.load_model(path)
        trained.mlp_model = store.revive(model_file)
        if model_file.encoders:
            trained.mlp_spec = EncoderSpec.from_dict(model_file.encoders["spec"])
    return trained


def evaluate_models(trained: TrainedModels, records: list[FlightRecord]) -> dict[str, MetricReport]:
    """MetricReports per trained model on the usable subset of records."""
    usable = carrier_origin.usable_records(records)
    if len(usable) < 2:
        raise EmptyDatasetError("need at least two usable records to evaluate")
    y = np.array([r.arr_delay for r in usable])
    reports: dict[str, MetricReport] = {}

    if trained.carrier is not None:
        y_hat = np.array(
            [
                carrier_origin.predict(
                    trained.carrier, r.carrier, r.origin_airport_id, r.dep_delay, r.distance
                ).estimate
                for r in usable
            ]
        )
        reports["carrier_origin"] = evaluate(y, y_hat, k=2)
    if trained.seasonal is not None:
        y_hat = np.array(
            [seasonal.predict(trained.seasonal, r.month, r.dep_delay, r.distance) for r in usable]
        )
        reports["seasonal"] = evaluate(y, y_hat, k=2)
    if trained.mlp_model is not None and trained.mlp_spec is not None:
        dataset = encode(
            usable,
            trained.mlp_spec,
            params=trained.mlp_model.input_standardization,
            allow_unknown=True,
        )
        y_hat = mlp.forward_many(trained.mlp_model, dataset.matrix)
        reports["mlp"] = evaluate(y, y_hat, k=dataset.matrix.shape[1])
    return reports


def format_report_table(reports: dict[str, MetricReport], split: str) -> str:
    """Render the adjusted-R^2 comparison table for one split."""
    lines = [f"Results on the {split} split:", f"{'Model':<28}{'Adjusted R^2':>14}"]
    for name in ("carrier_origin", "seasonal", "mlp"):
        if name in reports:
            lines.append(f"{MODEL_LABELS[name]:<28}{reports[name].adjusted_r_squared * 100:>13.2f}%")
    return "\n".join(lines)


def reports_to_dict(reports: dict[str, MetricReport]) -> dict:
    return {
        name: {
            "label": MODEL_LABELS[name],
            "r_squared": rep.r_squared,
            "adjusted_r_squared": rep.adjusted_r_squared,
            "mse": rep.mse,
            "mae": rep.mae,
            "accuracy": rep.accuracy,
            "n": rep.n,
            "k": rep.k,
        }
        for name, rep in reports.items()
    }


def write_report_json(reports_by_split: dict[str, dict[str, MetricReport]], path) -> None:
    doc = {split: reports_to_dict(reports) for split, reports in reports_by_split.items()}
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")
