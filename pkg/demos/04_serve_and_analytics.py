"""
The HTTP service and its analytics view
========================================

Trains small models into a temporary directory, mounts the service
in-process, makes a few predictions (direct and conversational), and
reads the aggregated event log back like the dashboard does.
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from flightstat.airports import load_airports
from flightstat.ingest import SyntheticConfig, generate_synthetic
from flightstat.mlp import TrainConfig
from flightstat.pipeline import save_models, train_models
from flightstat.service import create_app, load_distance_table

with tempfile.TemporaryDirectory() as tmp:
    data_dir = Path(tmp)
    records, _ = generate_synthetic(SyntheticConfig(count=4000), seed=9)
    trained = train_models(
        records,
        ["carrier_origin", "seasonal", "mlp"],
        mlp_config=TrainConfig(epochs=5, batch_size=256, seed=9),
        hidden_sizes=(32, 16),
    )
    save_models(trained, records, data_dir / "models")

    # conversational queries carry no explicit mileage, so pick a city
    # pair the training corpus actually covers
    pair = next(iter(sorted(load_distance_table(data_dir / "models" / "distances.json"))))
    cities = {a.airport_id: a.city for a in load_airports()}
    origin, destination = cities[pair[0]], cities[pair[1]]
    print(f"querying the {origin} -> {destination} route")

    app = create_app(data_dir, default_model="mlp")
    with TestClient(app) as client:
        print("health:", client.get("/health").json())

        body = {
            "model": "all",
            "origin": origin,
            "destination": destination,
            "airline": "Delta",
            "date": "2026-09-01",
            "time": "08:30",
            "dep_delay": 25.0,
        }
        for prediction in client.post("/predict", json=body).json()["predictions"]:
            print(
                f"  {prediction['model']:>14}: {prediction['predicted_delay_minutes']:7.2f} min "
                f"(delayed={prediction['delayed']})"
            )

        # the same prediction flow through a conversation
        sid = client.post("/sessions").json()["session_id"]
        for text in ("get delay info", origin, destination, "Delta",
                     "2026-09-01", "08:30", "yes"):
            reply = client.post(f"/sessions/{sid}/utterance", json={"text": text}).json()
        print("dialog answer:", reply["text"])

        print("dashboard summary:", client.get("/analytics/summary").json())
