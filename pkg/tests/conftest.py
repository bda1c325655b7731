import pytest

from flightstat.ingest import FlightRecord, SyntheticConfig, generate_synthetic
from flightstat.mlp import TrainConfig
from flightstat.pipeline import save_models, train_models


def make_record(**overrides) -> FlightRecord:
    """A valid baseline record; keyword overrides adjust single fields."""
    base = dict(
        year=2024,
        quarter=2,
        month=6,
        day_of_month=15,
        day_of_week=3,
        flight_num="1234",
        carrier="DL",
        origin_airport_id=10721,
        dest_airport_id=13930,
        dest_wac=41,
        crs_dep_time=830,
        crs_arr_time=1015,
        distance=860.0,
        dep_delay=12.0,
        arr_delay=9.5,
        arr_del15=0,
        cancelled=0,
    )
    base.update(overrides)
    return FlightRecord(**base)


@pytest.fixture(scope="session")
def small_benchmark():
    """3000 synthetic records shared by model-level tests."""
    records, manifest = generate_synthetic(SyntheticConfig(count=3000), seed=11)
    return records, manifest


@pytest.fixture(scope="session")
def small_models_dir(tmp_path_factory, small_benchmark):
    """A models directory trained quickly on the small benchmark."""
    records, _ = small_benchmark
    trained = train_models(
        records,
        ["carrier_origin", "seasonal", "mlp"],
        mlp_config=TrainConfig(epochs=4, batch_size=128, learning_rate=1e-3, seed=7),
        hidden_sizes=(16, 8),
    )
    out = tmp_path_factory.mktemp("models")
    save_models(trained, records, out, metadata={"records": len(records), "seed": 7})
    return out
