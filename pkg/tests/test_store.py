import json

import numpy as np
import pytest

from conftest import make_record
from flightstat import carrier_origin, mlp, seasonal
from flightstat.errors import CorruptDocumentError, NotFoundError, UnknownVersionError
from flightstat.features import encode, fit_encoders
from flightstat.ingest import SyntheticConfig, generate_synthetic
from flightstat.mlp import TrainConfig, forward, train_mlp
from flightstat.store import (
    EventLog,
    FlightStore,
    ModelFile,
    UserFlight,
    encoder_payload,
    load_model,
    revive,
    save_model,
)


@pytest.fixture(scope="module")
def trained(small_benchmark):
    records, _ = small_benchmark
    carrier = carrier_origin.train(records)
    season = seasonal.train(records)
    usable = carrier_origin.usable_records(records)
    spec = fit_encoders(usable)
    dataset = encode(usable, spec, standardize=True)
    net, _ = train_mlp(dataset, TrainConfig(epochs=2, batch_size=128, seed=5), hidden_sizes=(8, 4))
    return carrier, season, net, spec


class TestModelFiles:
    def test_linear_round_trip_bit_exact(self, trained, tmp_path):
        carrier, _, _, _ = trained
        path = tmp_path / "carrier_origin.json"
        save_model(ModelFile("carrier_origin", carrier_origin.to_params(carrier)), path)
        loaded, _ = revive(load_model(path))
        assert loaded.fallback.coefficients == carrier.fallback.coefficients
        for key, model in carrier.groups.items():
            assert loaded.groups[key].coefficients == model.coefficients

    def test_seasonal_round_trip_bit_exact(self, trained, tmp_path):
        _, season, _, _ = trained
        path = tmp_path / "seasonal.json"
        save_model(ModelFile("seasonal", seasonal.to_params(season)), path)
        loaded = revive(load_model(path))
        for s in loaded.models:
            assert loaded.models[s].coefficients == season.models[s].coefficients
            assert loaded.models[s].intercept == season.models[s].intercept

    def test_mlp_round_trip_forward_bit_exact(self, trained, tmp_path):
        _, _, net, spec = trained
        path = tmp_path / "mlp.json"
        encoders = encoder_payload(spec, net.input_standardization)
        save_model(ModelFile("mlp", mlp.to_params(net), encoders), path)
        loaded = revive(load_model(path))
        rng = np.random.default_rng(0)
        d = net.layers[0].weights.shape[1]
        for _ in range(100):
            x = rng.normal(size=d)
            assert forward(loaded, x) == forward(net, x)

    def test_unknown_version_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"schema_version": 999, "model_type": "mlp", "parameters": {}}))
        with pytest.raises(UnknownVersionError):
            load_model(path)

    def test_corrupt_document_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{not json")
        with pytest.raises(CorruptDocumentError):
            load_model(path)

    def test_unknown_model_type_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"schema_version": 1, "model_type": "lstm", "parameters": {}}))
        with pytest.raises(CorruptDocumentError):
            load_model(path)

    def test_invalid_parameters_rejected_on_load(self, tmp_path):
        path = tmp_path / "model.json"
        doc = {
            "schema_version": 1,
            "model_type": "seasonal",
            "parameters": {"seasons": {"winter": {"coefficients": [1.0], "intercept": None,
                                                   "feature_names": ["a"], "count": 1,
                                                   "pooled": False}}},
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(CorruptDocumentError):
            load_model(path)


class TestFlightStore:
    def test_add_then_list(self, tmp_path):
        fs = FlightStore(tmp_path)
        fs.add("Boston", "Chicago", "United", "2026-09-01", "08:30")
        assert len(fs.list()) == 1

    def test_add_add_remove(self, tmp_path):
        fs = FlightStore(tmp_path)
        a = fs.add("Boston", "Chicago", "United", "2026-09-01", "08:30")
        b = fs.add("Denver", "Seattle", "Delta", "2026-09-02", "10:00")
        fs.remove(a)
        remaining = fs.list()
        assert [f.id for f in remaining] == [b]

    def test_remove_unknown_id(self, tmp_path):
        fs = FlightStore(tmp_path)
        with pytest.raises(NotFoundError):
            fs.remove("nope")

    def test_list_sorted_by_date_time(self, tmp_path):
        fs = FlightStore(tmp_path)
        fs.add("C", "X", "AL", "2026-09-02", "09:00")
        fs.add("A", "X", "AL", "2026-09-01", "22:00")
        fs.add("B", "X", "AL", "2026-09-01", "08:00")
        assert [f.origin for f in fs.list()] == ["B", "A", "C"]

    def test_find_next_upcoming_is_sort_minimum(self, tmp_path):
        fs = FlightStore(tmp_path)
        fs.add("A", "X", "AL", "2026-09-03", "08:00")
        fs.add("B", "X", "AL", "2026-09-01", "12:00")
        fs.add("C", "X", "AL", "2026-09-02", "06:00")
        found = fs.find(next_upcoming=True, now=("2026-08-31", "00:00"))
        key = lambda f: (f.date, f.time)
        assert [key(f) for f in found] == [min(key(f) for f in fs.list())]

    def test_find_next_skips_past_flights(self, tmp_path):
        fs = FlightStore(tmp_path)
        fs.add("A", "X", "AL", "2026-09-01", "08:00")
        fs.add("B", "X", "AL", "2026-09-05", "08:00")
        found = fs.find(next_upcoming=True, now=("2026-09-02", "00:00"))
        assert [f.origin for f in found] == ["B"]

    def test_find_by_origin_and_datetime(self, tmp_path):
        fs = FlightStore(tmp_path)
        fs.add("Boston", "X", "AL", "2026-09-01", "08:00")
        fs.add("Denver", "X", "AL", "2026-09-02", "09:00")
        assert [f.origin for f in fs.find(origin="boston")] == ["Boston"]
        assert [f.origin for f in fs.find(date="2026-09-02", time="09:00")] == ["Denver"]

    def test_empty_attribute_rejected(self):
        with pytest.raises(ValueError):
            UserFlight("id1", "", "X", "AL", "2026-09-01", "08:00")

    def test_persists_across_instances(self, tmp_path):
        FlightStore(tmp_path).add("Boston", "Chicago", "United", "2026-09-01", "08:30")
        assert len(FlightStore(tmp_path).list()) == 1


def fixed_clock():
    times = iter(f"2026-08-10T{12 + i // 3600:02d}:{(i // 60) % 60:02d}:{i % 60:02d}+00:00" for i in range(100_000))
    return lambda: next(times)


class TestEventLog:
    def append_some(self, log, n, model="mlp"):
        for i in range(n):
            log.append(model, {"origin": "BOS"}, float(10 * i), {})

    def test_sequence_numbers_start_at_one(self, tmp_path):
        log = EventLog(tmp_path)
        seqs = [log.append("mlp", {}, 1.0, {}).sequence for _ in range(3)]
        assert seqs == [1, 2, 3]

    def test_sequence_continues_across_instances(self, tmp_path):
        self.append_some(EventLog(tmp_path), 2)
        assert EventLog(tmp_path).append("mlp", {}, 0.0, {}).sequence == 3

    def test_aggregate_empty_log(self, tmp_path):
        summary = EventLog(tmp_path).aggregate()
        assert summary.count == 0
        assert summary.per_model == {}
        assert summary.mean_predicted_delay is None
        assert summary.delayed_share is None

    def test_aggregate_matches_full_scan_oracle(self, tmp_path):
        rng = np.random.default_rng(1)
        log = EventLog(tmp_path, clock=fixed_clock())
        models = ["carrier_origin", "seasonal", "mlp"]
        delays = []
        for i in range(100):
            model = models[int(rng.integers(0, 3))]
            delay = float(np.round(rng.uniform(-10, 60), 3))
            delays.append((model, delay))
            log.append(model, {"i": i}, delay, {})
        summary = log.aggregate()
        assert summary.count == 100
        for model in models:
            assert summary.per_model[model] == sum(1 for m, _ in delays if m == model)
        assert summary.mean_predicted_delay == pytest.approx(
            sum(d for _, d in delays) / 100, abs=1e-12
        )
        assert summary.delayed_share == pytest.approx(
            sum(1 for _, d in delays if d > 15.0) / 100, abs=1e-12
        )

    def test_window_by_sequence(self, tmp_path):
        log = EventLog(tmp_path)
        self.append_some(log, 10)
        summary = log.aggregate(from_sequence=3, to_sequence=7)
        assert summary.count == 5

    def test_window_by_timestamp(self, tmp_path):
        log = EventLog(tmp_path, clock=fixed_clock())
        self.append_some(log, 10)
        events = log.read_all()
        lo, hi = events[2].timestamp, events[6].timestamp
        summary = log.aggregate(from_timestamp=lo, to_timestamp=hi)
        brute = [e for e in events if lo <= e.timestamp <= hi]
        assert summary.count == len(brute) == 5

    def test_truncation_loses_at_most_the_torn_record(self, tmp_path):
        log = EventLog(tmp_path)
        self.append_some(log, 5)
        blob = log.path.read_bytes()
        line_ends = [i + 1 for i, byte in enumerate(blob) if byte == ord("\n")]
        for cut in range(len(blob) + 1):
            log.path.write_bytes(blob[:cut])
            readable = EventLog(tmp_path).read_all()
            complete = sum(1 for end in line_ends if end <= cut)
            # every record fully written before the cut is preserved;
            # only the torn tail (if any) is skipped
            assert len(readable) == complete
            assert [e.sequence for e in readable] == list(range(1, complete + 1))
        log.path.write_bytes(blob)

    def test_append_after_torn_tail_reuses_lost_sequence(self, tmp_path):
        log = EventLog(tmp_path)
        self.append_some(log, 3)
        blob = log.path.read_bytes()
        log.path.write_bytes(blob[:-4])  # tear the final record
        recovered = EventLog(tmp_path)
        assert recovered.append("mlp", {}, 9.0, {}).sequence == 3
        assert [e.sequence for e in recovered.read_all()] == [1, 2, 3]
