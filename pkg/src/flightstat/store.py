"""Single-directory persistence layer.

One JSON document per trained model, one atomically rewritten JSON
document for the user's flight list, and one append-only
newline-delimited JSON event log with windowed aggregation.  Floats are
serialized as repr text, which round-trips bit-exactly.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import carrier_origin, mlp, seasonal
from .errors import CorruptDocumentError, NotFoundError, UnknownVersionError
from .features import EncoderSpec, StandardizationParams

SCHEMA_VERSION = 1

MODEL_TYPES = ("carrier_origin", "seasonal", "mlp")


@dataclass
class ModelFile:
    """Versioned on-disk envelope for one trained model."""

    model_type: str
    parameters: dict
    encoders: dict | None = None
    metadata: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def save_model(model_file: ModelFile, path) -> None:
    if model_file.model_type not in MODEL_TYPES:
        raise ValueError(f"unknown model_type {model_file.model_type!r}")
    doc = {
        "schema_version": model_file.schema_version,
        "model_type": model_file.model_type,
        "encoders": model_file.encoders,
        "parameters": model_file.parameters,
        "metadata": model_file.metadata,
    }
    _atomic_write(Path(path), json.dumps(doc, indent=1))


def load_model(path) -> ModelFile:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptDocumentError(f"{path}: not valid JSON ({exc})") from None
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise UnknownVersionError(f"{path}: unknown schema version {version!r}")
    model_type = doc.get("model_type")
    if model_type not in MODEL_TYPES:
        raise CorruptDocumentError(f"{path}: unknown model_type {model_type!r}")
    try:
        mf = ModelFile(
            model_type=model_type,
            parameters=doc["parameters"],
            encoders=doc.get("encoders"),
            metadata=doc.get("metadata", {}),
        )
        revive(mf)  # surface invariant violations at load time
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptDocumentError(f"{path}: invalid model document ({exc})") from None
    return mf


def revive(model_file: ModelFile):
    """Reconstruct the typed model object held in a ModelFile."""
    if model_file.model_type == "carrier_origin":
        model = carrier_origin.from_params(model_file.parameters)
        index_doc = model_file.parameters.get("imputation_index")
        index = carrier_origin.index_from_params(index_doc) if index_doc else None
        return model, index
    if model_file.model_type == "seasonal":
        return seasonal.from_params(model_file.parameters)
    if model_file.model_type == "mlp":
        return mlp.from_params(model_file.parameters)
    raise ValueError(f"unknown model_type {model_file.model_type!r}")


def encoder_payload(spec: EncoderSpec | None, params: StandardizationParams | None) -> dict | None:
    if spec is None:
        return None
    return {"spec": spec.to_dict(), "standardization": params.to_dict() if params else None}


# --- user flight list ------------------------------------------------------


@dataclass(frozen=True)
class UserFlight:
    id: str
    origin: str
    destination: str
    airline: str
    date: str  # YYYY-MM-DD
    time: str  # HH:MM

    def __post_init__(self):
        for name in ("origin", "destination", "airline", "date", "time"):
            if not getattr(self, name):
                raise ValueError(f"flight field {name!r} must be non-empty")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "origin": self.origin,
            "destination": self.destination,
            "airline": self.airline,
            "date": self.date,
            "time": self.time,
        }


class FlightStore:
    """The user's flight list, one JSON document rewritten atomically."""

    def __init__(self, directory):
        self.path = Path(directory) / "flights.json"
        self._lock = threading.Lock()

    def _read(self) -> list[UserFlight]:
        if not self.path.exists():
            return []
        doc = json.loads(self.path.read_text(encoding="utf-8"))
        return [UserFlight(**entry) for entry in doc["flights"]]

    def _write(self, flights: list[UserFlight]) -> None:
        flights = sorted(flights, key=lambda f: (f.date, f.time))
        doc = {"flights": [f.to_dict() for f in flights]}
        _atomic_write(self.path, json.dumps(doc, indent=1))

    def add(self, origin: str, destination: str, airline: str, date: str, time: str) -> str:
        flight = UserFlight(uuid.uuid4().hex, origin, destination, airline, date, time)
        with self._lock:
            flights = self._read()
            flights.append(flight)
            self._write(flights)
        return flight.id

    def remove(self, flight_id: str) -> None:
        with self._lock:
            flights = self._read()
            kept = [f for f in flights if f.id != flight_id]
            if len(kept) == len(flights):
                raise NotFoundError(f"no flight with id {flight_id!r}")
            self._write(kept)

    def list(self) -> list[UserFlight]:
        with self._lock:
            return sorted(self._read(), key=lambda f: (f.date, f.time))

    def find(
        self,
        origin: str | None = None,
        date: str | None = None,
        time: str | None = None,
        next_upcoming: bool = False,
        now: tuple[str, str] | None = None,
    ) -> list[UserFlight]:
        """Match stored flights by any provided subset of criteria.

        next_upcoming returns the earliest flight at or after `now`
        (a (date, time) pair, defaulting to the current UTC moment).
        """
        flights = self.list()
        if origin is not None:
            flights = [f for f in flights if f.origin.lower() == origin.lower()]
        if date is not None:
            flights = [f for f in flights if f.date == date]
        if time is not None:
            flights = [f for f in flights if f.time == time]
        if next_upcoming:
            if now is None:
                moment = datetime.now(timezone.utc)
                now = (moment.strftime("%Y-%m-%d"), moment.strftime("%H:%M"))
            flights = [f for f in flights if (f.date, f.time) >= now]
            flights = flights[:1]  # list() is sorted by (date, time)
        return flights


# --- prediction event log ---------------------------------------------------


@dataclass(frozen=True)
class PredictionEvent:
    sequence: int
    timestamp: str  # ISO-8601 UTC
    model: str
    request: dict  # origin, destination, airline, date, time
    predicted_delay: float
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "sequence": self.sequence,
            "timestamp": self.timestamp,
            "model": self.model,
            "request": self.request,
            "predicted_delay": self.predicted_delay,
            "provenance": self.provenance,
        }


@dataclass(frozen=True)
class EventSummary:
    count: int
    per_model: dict[str, int]
    mean_predicted_delay: float | None
    delayed_share: float | None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "per_model": self.per_model,
            "mean_predicted_delay": self.mean_predicted_delay,
            "delayed_share": self.delayed_share,
        }


class EventLog:
    """Append-only newline-delimited JSON log of prediction events.

    Each append writes one full line; a torn final line (crash during
    write) is skipped on read, so truncation loses at most one event.
    """

    def __init__(self, directory, clock=None):
        self.path = Path(directory) / "events.log"
        self._lock = threading.Lock()
        self._clock = clock or (lambda: datetime.now(timezone.utc).isoformat())
        events, valid_bytes = self._scan()
        self._next_sequence = (events[-1].sequence if events else 0) + 1
        # drop a torn tail now so the next append starts on a clean line
        if self.path.exists() and valid_bytes < self.path.stat().st_size:
            with open(self.path, "rb+") as fh:
                fh.truncate(valid_bytes)

    def _scan(self) -> tuple[list[PredictionEvent], int]:
        """Readable events plus the byte length of the valid prefix."""
        if not self.path.exists():
            return [], 0
        events = []
        valid_bytes = 0
        with open(self.path, "rb") as fh:
            for line in fh:
                if not line.endswith(b"\n"):
                    break  # torn tail record
                try:
                    doc = json.loads(line.decode("utf-8"))
                    events.append(
                        PredictionEvent(
                            sequence=int(doc["sequence"]),
                            timestamp=doc["timestamp"],
                            model=doc["model"],
                            request=doc["request"],
                            predicted_delay=float(doc["predicted_delay"]),
                            provenance=doc.get("provenance", {}),
                        )
                    )
                except (ValueError, KeyError):
                    break  # torn or corrupt tail; keep everything before it
                valid_bytes += len(line)
        return events, valid_bytes

    def read_all(self) -> list[PredictionEvent]:
        return self._scan()[0]

    def append(self, model: str, request: dict, predicted_delay: float, provenance: dict) -> PredictionEvent:
        """Assign the next sequence number and persist the event."""
        with self._lock:
            event = PredictionEvent(
                sequence=self._next_sequence,
                timestamp=self._clock(),
                model=model,
                request=request,
                predicted_delay=float(predicted_delay),
                provenance=provenance,
            )
            line = json.dumps(event.to_dict()) + "\n"
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise CorruptDocumentError(f"event log append failed: {exc}") from exc
            self._next_sequence += 1
        return event

    def aggregate(
        self,
        from_sequence: int | None = None,
        to_sequence: int | None = None,
        from_timestamp: str | None = None,
        to_timestamp: str | None = None,
    ) -> EventSummary:
        """Summarize events in the window (all bounds inclusive)."""
        events = self.read_all()
        if from_sequence is not None:
            events = [e for e in events if e.sequence >= from_sequence]
        if to_sequence is not None:
            events = [e for e in events if e.sequence <= to_sequence]
        if from_timestamp is not None:
            events = [e for e in events if e.timestamp >= from_timestamp]
        if to_timestamp is not None:
            events = [e for e in events if e.timestamp <= to_timestamp]
        if not events:
            return EventSummary(0, {}, None, None)
        per_model: dict[str, int] = {}
        for e in events:
            per_model[e.model] = per_model.get(e.model, 0) + 1
        delays = [e.predicted_delay for e in events]
        delayed = sum(1 for d in delays if d > 15.0)
        return EventSummary(
            count=len(events),
            per_model=per_model,
            mean_predicted_delay=sum(delays) / len(delays),
            delayed_share=delayed / len(delays),
        )
