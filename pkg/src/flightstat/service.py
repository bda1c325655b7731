"""HTTP facade over the models, dialog engine, flight list, and analytics.

Endpoints:

    POST /predict                       one model or model=all
    POST /sessions                      open a dialog session
    POST /sessions/{id}/utterance       one conversational turn
    GET  /sessions/{id}                 session state + transcript
    GET/POST /flights, DELETE /flights/{id}
    GET  /analytics/summary?from&to     event-log aggregation
    GET  /health

All bodies are JSON; error bodies are {"error": text, "id": token}.
The model registry is immutable after startup; every 2xx /predict
response appends exactly one event to the prediction log.
"""

import json
import re
import threading
import time as time_module
import uuid
from datetime import date as date_type
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import carrier_origin, mlp, seasonal, store
from .airports import resolve_airport
from .dialog import DelayEstimate, DialogEngine
from .errors import NotFoundError, SessionClosedError
from .features import EncoderSpec, SelectedFeatures, encode_one
from .ingest import FlightRecord
from .numerics import DELAY_THRESHOLD_MINUTES

DEFAULT_PORT = 8080
SESSION_IDLE_SECONDS = 30 * 60

# Airline name aliases accepted in requests alongside raw carrier codes.
CARRIER_ALIASES = {
    "american": "AA",
    "alaska": "AS",
    "jetblue": "B6",
    "delta": "DL",
    "frontier": "F9",
    "spirit": "NK",
    "united": "UA",
    "southwest": "WN",
}


def resolve_carrier(text: str) -> str:
    cleaned = text.strip()
    lowered = cleaned.lower()
    if lowered in CARRIER_ALIASES:
        return CARRIER_ALIASES[lowered]
    for name, code in CARRIER_ALIASES.items():
        if name in lowered:
            return code
    return cleaned.upper()


# --- distance table ---------------------------------------------------------


def build_distance_table(records: list[FlightRecord]) -> dict[tuple[int, int], float]:
    """Mean observed distance per (origin, destination) airport pair."""
    sums: dict[tuple[int, int], tuple[float, int]] = {}
    for r in records:
        key = (r.origin_airport_id, r.dest_airport_id)
        total, count = sums.get(key, (0.0, 0))
        sums[key] = (total + r.distance, count + 1)
    return {key: total / count for key, (total, count) in sums.items()}


def save_distance_table(table: dict[tuple[int, int], float], path) -> None:
    doc = {"pairs": [{"origin": o, "dest": d, "distance": v} for (o, d), v in sorted(table.items())]}
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def load_distance_table(path) -> dict[tuple[int, int], float]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {(int(p["origin"]), int(p["dest"])): float(p["distance"]) for p in doc["pairs"]}


# --- request/response models -------------------------------------------------


class PredictRequest(BaseModel):
    model: str
    origin: str
    destination: str
    airline: str
    date: str
    time: str
    dep_delay: float | None = None
    distance: float | None = None


class UtteranceRequest(BaseModel):
    text: str


class FlightRequest(BaseModel):
    origin: str
    destination: str
    airline: str
    date: str
    time: str


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _parse_request_date(text: str) -> date_type:
    match = re.fullmatch(r"(\d{4})-(\d{2})-(\d{2})", text.strip())
    if not match:
        raise ApiError(400, f"malformed date {text!r}, expected YYYY-MM-DD")
    try:
        return date_type(int(match[1]), int(match[2]), int(match[3]))
    except ValueError as exc:
        raise ApiError(400, f"malformed date {text!r}: {exc}") from None


def _parse_request_time(text: str) -> int:
    """HH:MM -> minutes since midnight."""
    match = re.fullmatch(r"(\d{1,2}):(\d{2})", text.strip())
    if not match or int(match[1]) > 23 or int(match[2]) > 59:
        raise ApiError(400, f"malformed time {text!r}, expected HH:MM")
    return int(match[1]) * 60 + int(match[2])


# --- model registry -----------------------------------------------------------


class ModelRegistry:
    """Typed predictors loaded once from the models directory."""

    def __init__(self, models_dir):
        self.models_dir = Path(models_dir)
        self.entries: dict[str, object] = {}
        self.imputation_index = None
        self.mlp_spec: EncoderSpec | None = None
        self.loaded_at: dict[str, str] = {}
        for name in store.MODEL_TYPES:
            path = self.models_dir / f"{name}.json"
            if not path.exists():
                continue
            model_file = store.load_model(path)
            revived = store.revive(model_file)
            if name == "carrier_origin":
                model, index = revived
                self.entries[name] = model
                self.imputation_index = index
            else:
                self.entries[name] = revived
            if name == "mlp" and model_file.encoders:
                self.mlp_spec = EncoderSpec.from_dict(model_file.encoders["spec"])
            self.loaded_at[name] = datetime.now(timezone.utc).isoformat()
        distances_path = self.models_dir / "distances.json"
        self.distances = load_distance_table(distances_path) if distances_path.exists() else {}

    def names(self) -> list[str]:
        return sorted(self.entries)

    def get(self, name: str):
        if name not in self.entries:
            raise ApiError(404, f"unknown model {name!r}; loaded: {self.names()}")
        return self.entries[name]


class PredictionService:
    """Resolves a request into per-model delay predictions."""

    def __init__(self, registry: ModelRegistry):
        self.registry = registry

    def resolve_distance(self, origin: str, destination: str, given: float | None) -> tuple[float, str]:
        if given is not None:
            if not given > 0:
                raise ApiError(400, f"distance must be positive, got {given}")
            return given, "request"
        origin_airport = resolve_airport(origin)
        dest_airport = resolve_airport(destination)
        if origin_airport and dest_airport:
            pair = (origin_airport.airport_id, dest_airport.airport_id)
            if pair in self.registry.distances:
                return self.registry.distances[pair], "table"
        raise ApiError(
            422, f"cannot resolve distance for {origin!r} -> {destination!r}; supply distance explicitly"
        )

    def predict(self, req: PredictRequest, model_name: str) -> dict:
        when = _parse_request_date(req.date)
        dep_minutes = _parse_request_time(req.time)
        crs_dep_time = (dep_minutes // 60) * 100 + dep_minutes % 60
        distance, distance_source = self.resolve_distance(req.origin, req.destination, req.distance)
        carrier = resolve_carrier(req.airline)
        origin_airport = resolve_airport(req.origin)
        dest_airport = resolve_airport(req.destination)
        origin_id = origin_airport.airport_id if origin_airport else -1
        dest_id = dest_airport.airport_id if dest_airport else -1

        dep_delay, dep_provenance = carrier_origin.resolve_departure_delay(
            req.dep_delay,
            self.registry.imputation_index,
            origin_id,
            carrier,
            when.month,
            crs_dep_time,
        )

        provenance = {"dep_delay": dep_provenance, "distance": distance_source}
        model = self.registry.get(model_name)
        if model_name == "carrier_origin":
            result = carrier_origin.predict(
                model, carrier, origin_id, dep_delay, distance
            )
            minutes = result.estimate
            provenance["model_used"] = result.model_used
        elif model_name == "seasonal":
            minutes = seasonal.predict(model, when.month, dep_delay, distance)
        else:
            minutes = self._predict_mlp(model, when, dep_minutes, carrier, origin_id, dest_id, distance, dep_delay)
        return {
            "model": model_name,
            "predicted_delay_minutes": minutes,
            "delayed": minutes > DELAY_THRESHOLD_MINUTES,
            "provenance": provenance,
        }

    def _predict_mlp(self, model, when, dep_minutes, carrier, origin_id, dest_id, distance, dep_delay) -> float:
        spec = self.registry.mlp_spec
        if spec is None:
            raise ApiError(500, "mlp model file carries no encoder spec")
        travel = int(distance / 8.0) + 30
        sel = SelectedFeatures(
            month=when.month,
            day_of_month=when.day,
            day_of_week=when.isoweekday(),
            flight_num="?",
            carrier=carrier,
            origin=origin_id,
            dest=dest_id,
            crs_dep_minutes=dep_minutes,
            crs_arr_minutes=(dep_minutes + travel) % 1440,
            distance=distance,
            dep_delay=dep_delay,
        )
        vector = encode_one(sel, spec, model.input_standardization)
        return mlp.forward(model, vector)


# --- application ---------------------------------------------------------------


class SessionBox:
    def __init__(self, session):
        self.session = session
        self.lock = threading.Lock()
        self.last_access = time_module.monotonic()


def create_app(data_dir, default_model: str = "mlp", ui_dir=None) -> FastAPI:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    registry = ModelRegistry(data_dir / "models")
    predictor_service = PredictionService(registry)
    flight_store = store.FlightStore(data_dir)
    event_log = store.EventLog(data_dir)

    def dialog_predictor(origin, destination, airline, date, time) -> DelayEstimate:
        req = PredictRequest(
            model=default_model, origin=origin, destination=destination,
            airline=airline, date=date, time=time,
        )
        result = predictor_service.predict(req, default_model)
        return DelayEstimate(result["predicted_delay_minutes"], default_model, result["provenance"])

    engine = DialogEngine(flight_store, predictor=dialog_predictor)
    sessions: dict[str, SessionBox] = {}
    sessions_lock = threading.Lock()

    app = FastAPI(title="flightstat", version="0.1.0")
    app.state.registry = registry
    app.state.event_log = event_log
    app.state.flight_store = flight_store
    app.state.sessions = sessions

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message, "id": uuid.uuid4().hex})

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()), "id": uuid.uuid4().hex})

    @app.exception_handler(Exception)
    async def handle_internal_error(request: Request, exc: Exception):
        token = uuid.uuid4().hex
        return JSONResponse(status_code=500, content={"error": "internal error", "id": token})

    def expire_sessions() -> None:
        cutoff = time_module.monotonic() - SESSION_IDLE_SECONDS
        with sessions_lock:
            for sid in [sid for sid, box in sessions.items() if box.last_access < cutoff]:
                del sessions[sid]

    def get_box(session_id: str) -> SessionBox:
        expire_sessions()
        with sessions_lock:
            box = sessions.get(session_id)
        if box is None:
            raise ApiError(404, f"unknown or expired session {session_id!r}")
        return box

    @app.post("/predict")
    def predict(req: PredictRequest):
        if req.model == "all":
            names = registry.names()
            if not names:
                raise ApiError(404, "no models loaded")
            predictions = [predictor_service.predict(req, name) for name in names]
            logged = next((p for p in predictions if p["model"] == default_model), predictions[0])
        else:
            predictions = [predictor_service.predict(req, req.model)]
            logged = predictions[0]
        event = event_log.append(
            model=logged["model"],
            request={
                "origin": req.origin, "destination": req.destination,
                "airline": req.airline, "date": req.date, "time": req.time,
            },
            predicted_delay=logged["predicted_delay_minutes"],
            provenance=logged["provenance"],
        )
        body = {"predictions": predictions, "event_sequence": event.sequence}
        if req.model != "all":
            body.update(predictions[0])
        return body

    @app.post("/sessions", status_code=201)
    def create_session():
        session, text = engine.start_session()
        with sessions_lock:
            sessions[session.session_id] = SessionBox(session)
        return {"session_id": session.session_id, "text": text, "state": session.state}

    @app.post("/sessions/{session_id}/utterance")
    def post_utterance(session_id: str, req: UtteranceRequest):
        box = get_box(session_id)
        if not box.lock.acquire(blocking=False):
            raise ApiError(409, "a prior turn for this session is still being processed")
        try:
            box.last_access = time_module.monotonic()
            try:
                text = engine.handle_utterance(box.session, req.text)
            except SessionClosedError as exc:
                raise ApiError(404, str(exc)) from None
            event = box.session.pending_event
            box.session.pending_event = None
            if event is not None:
                event_log.append(event.model, event.request, event.predicted_delay, event.provenance)
            return {
                "session_id": session_id,
                "text": text,
                "state": box.session.state,
                "slots": dict(box.session.slots),
            }
        finally:
            box.lock.release()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        box = get_box(session_id)
        session = box.session
        return {
            "session_id": session_id,
            "state": session.state,
            "intent": session.intent,
            "slots": dict(session.slots),
            "transcript": [list(turn) for turn in session.transcript],
        }

    @app.get("/flights")
    def list_flights():
        return {"flights": [f.to_dict() for f in flight_store.list()]}

    @app.post("/flights", status_code=201)
    def add_flight(req: FlightRequest):
        try:
            flight_id = flight_store.add(req.origin, req.destination, req.airline, req.date, req.time)
        except ValueError as exc:
            raise ApiError(400, str(exc)) from None
        return {"id": flight_id}

    @app.delete("/flights/{flight_id}")
    def delete_flight(flight_id: str):
        try:
            flight_store.remove(flight_id)
        except NotFoundError as exc:
            raise ApiError(404, str(exc)) from None
        return {"ok": True}

    @app.get("/analytics/summary")
    def analytics_summary(request: Request):
        params = request.query_params
        from_ts, to_ts = params.get("from"), params.get("to")
        for label, value in (("from", from_ts), ("to", to_ts)):
            if value is not None:
                try:
                    datetime.fromisoformat(value)
                except ValueError:
                    raise ApiError(400, f"malformed {label!r} timestamp {value!r}") from None
        summary = event_log.aggregate(from_timestamp=from_ts, to_timestamp=to_ts)
        return {"window": {"from": from_ts, "to": to_ts}, **summary.to_dict()}

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "models": registry.names(),
            "default_model": default_model,
            "store": "ok" if data_dir.exists() else "missing",
        }

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
