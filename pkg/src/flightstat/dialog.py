"""Slot-filling dialog engine for the flight assistant.

Design rules the engine enforces:

- a four-option menu (list / check / add-remove / get delay info);
- questions asked strictly one at a time, in the fixed slot order
  origin, destination, airline, date, time;
- greetings and closing comments on every session and fulfilled intent;
- three ways to check a stored flight: next upcoming, by origin city,
  or by date and time.

Intent recognition is a deterministic keyword table (first match wins):

    add            -> add_flight
    remove, delete -> remove_flight
    list           -> list_flights
    check, status  -> check_flight
    delay          -> get_delay
"""

import re
import uuid
from dataclasses import dataclass, field
from datetime import date as date_type
from datetime import timedelta
from typing import Callable, NamedTuple

from .errors import SessionClosedError
from .store import FlightStore

SLOT_ORDER = ("origin", "destination", "airline", "date", "time")

SLOT_QUESTIONS = {
    "origin": "Where are you flying from?",
    "destination": "Where are you flying to?",
    "airline": "What airline?",
    "date": "When are you flying?",
    "time": "What time is your flight?",
}

MENU_OPTIONS = (
    "list existing flights",
    "check a flight from the existing list",
    "add or remove flights from the list",
    "get flight delay information",
)

GREETING = "Hi, I'm Flight Stat."
CLOSING = "Anything else I can help with?"

INTENT_KEYWORDS = (
    ("add_flight", ("add",)),
    ("remove_flight", ("remove", "delete")),
    ("list_flights", ("list",)),
    ("check_flight", ("check", "status")),
    ("get_delay", ("delay",)),
)

INTENT_SLOTS = {
    "add_flight": SLOT_ORDER,
    "remove_flight": SLOT_ORDER,
    "get_delay": SLOT_ORDER,
    "list_flights": (),
}

CHECK_VARIANT_SLOTS = {"next": (), "by_origin": ("origin",), "by_datetime": ("date", "time")}

VARIANT_QUESTION = (
    "Would you like to check your next flight, check by origin city, or check by date and time?"
)

MAX_FAILED_PARSES = 3

_POLITENESS = {"please", "thanks", "thank", "you", "kindly", "um", "uh", "hi", "hello", "hey"}


class DelayEstimate(NamedTuple):
    """What a prediction callback returns to the dialog layer."""

    minutes: float
    model: str
    provenance: dict


class PendingEvent(NamedTuple):
    """A prediction made during fulfillment, ready for the event log."""

    model: str
    request: dict
    predicted_delay: float
    provenance: dict


@dataclass
class DialogSession:
    session_id: str
    state: str = "menu"  # greeting | menu | collecting | confirming | closed
    intent: str | None = None
    check_variant: str | None = None
    slots: dict[str, str] = field(default_factory=dict)
    transcript: list[tuple[str, str]] = field(default_factory=list)
    failed_parses: int = 0
    last_error: str | None = None
    pending_event: "PendingEvent | None" = None

    def required_slots(self) -> tuple[str, ...]:
        if self.intent == "check_flight":
            if self.check_variant is None:
                return ()
            return CHECK_VARIANT_SLOTS[self.check_variant]
        return INTENT_SLOTS.get(self.intent, ())

    def next_slot(self) -> str | None:
        for slot in self.required_slots():
            if slot not in self.slots:
                return slot
        return None


def _menu_text() -> str:
    listing = "; ".join(MENU_OPTIONS)
    return f"You can: {listing}. What would you like to do?"


def strip_politeness(text: str) -> str:
    """Trim politeness/greeting tokens and punctuation from both ends."""
    tokens = text.strip().split()
    while tokens and tokens[0].strip(".,!?").lower() in _POLITENESS:
        tokens.pop(0)
    while tokens and tokens[-1].strip(".,!?").lower() in _POLITENESS:
        tokens.pop()
    return " ".join(tokens).strip(" .,!?")


def parse_intent(text: str) -> str | None:
    lowered = text.lower()
    for intent, keywords in INTENT_KEYWORDS:
        for keyword in keywords:
            if re.search(rf"\b{keyword}\b", lowered):
                return intent
    return None


def parse_date(text: str, today: Callable[[], date_type]) -> str | None:
    """Accept ISO dates plus 'today' and 'tomorrow'; returns YYYY-MM-DD."""
    lowered = text.lower()
    if re.search(r"\btoday\b", lowered):
        return today().isoformat()
    if re.search(r"\btomorrow\b", lowered):
        return (today() + timedelta(days=1)).isoformat()
    match = re.search(r"\b(\d{4})-(\d{2})-(\d{2})\b", text)
    if match:
        try:
            return date_type(int(match[1]), int(match[2]), int(match[3])).isoformat()
        except ValueError:
            return None
    return None


def parse_time(text: str) -> str | None:
    """Accept HH:MM and 'N am/pm'; returns zero-padded HH:MM."""
    match = re.search(r"\b(\d{1,2}):(\d{2})\b", text)
    if match:
        hour, minute = int(match[1]), int(match[2])
        if hour < 24 and minute < 60:
            return f"{hour:02d}:{minute:02d}"
        return None
    match = re.search(r"\b(\d{1,2})\s*(am|pm)\b", text.lower())
    if match:
        hour = int(match[1])
        if not 1 <= hour <= 12:
            return None
        if match[2] == "am":
            hour = 0 if hour == 12 else hour
        else:
            hour = 12 if hour == 12 else hour + 12
        return f"{hour:02d}:00"
    return None


def resolve_check_variant(text: str, today: Callable[[], date_type] = date_type.today):
    """Map a reply onto a check-flight variant.

    Returns (variant, prefilled slots) or (None, {}) when unrecognized.
    """
    lowered = text.lower()
    if re.search(r"\bnext\b", lowered):
        return "next", {}
    from_match = re.search(r"\bfrom\s+(.+)$", text, re.IGNORECASE)
    if from_match or re.search(r"\borigin\b|\bcity\b", lowered):
        slots = {}
        if from_match:
            origin = strip_politeness(from_match[1])
            if origin:
                slots["origin"] = origin
        return "by_origin", slots
    slots = {}
    parsed_date = parse_date(text, today)
    parsed_time = parse_time(text)
    if parsed_date:
        slots["date"] = parsed_date
    if parsed_time:
        slots["time"] = parsed_time
    if slots or re.search(r"\bdate\b|\btime\b|\bwhen\b", lowered):
        return "by_datetime", slots
    return None, {}


def _phrase_delay(minutes: float) -> str:
    if minutes > 15.0:
        return f"Your flight is expected to be delayed about {round(minutes)} minutes."
    return "Your flight is expected to be on time."


def _describe(flight_slots: dict) -> str:
    return (
        f"from {flight_slots['origin']} to {flight_slots['destination']} "
        f"with {flight_slots['airline']} on {flight_slots['date']} at {flight_slots['time']}"
    )


class DialogEngine:
    """Drives DialogSessions against a flight store and a predictor.

    predictor(origin, destination, airline, date, time) -> DelayEstimate;
    it may be None, in which case delay intents apologize.  today() is
    injectable so 'tomorrow' is testable.
    """

    def __init__(
        self,
        store: FlightStore,
        predictor: Callable[..., DelayEstimate] | None = None,
        today: Callable[[], date_type] = date_type.today,
    ):
        self.store = store
        self.predictor = predictor
        self.today = today

    def start_session(self) -> tuple[DialogSession, str]:
        session = DialogSession(session_id=uuid.uuid4().hex)
        text = f"{GREETING} {_menu_text()}"
        session.transcript.append(("system", text))
        return session, text

    def handle_utterance(self, session: DialogSession, text: str) -> str:
        if session.state == "closed":
            raise SessionClosedError(f"session {session.session_id} is closed")
        session.transcript.append(("user", text))
        if session.state == "menu":
            reply = self._handle_menu(session, text)
        elif session.state == "collecting":
            reply = self._handle_collecting(session, text)
        elif session.state == "confirming":
            reply = self._handle_confirming(session, text)
        else:
            raise AssertionError(f"unexpected state {session.state}")
        session.transcript.append(("system", reply))
        return reply

    def close_session(self, session: DialogSession) -> None:
        session.state = "closed"

    # -- state handlers ------------------------------------------------

    def _reset_to_menu(self, session: DialogSession) -> None:
        session.state = "menu"
        session.intent = None
        session.check_variant = None
        session.slots = {}
        session.failed_parses = 0

    def _handle_menu(self, session: DialogSession, text: str) -> str:
        intent = parse_intent(text)
        if intent is None:
            return f"Sorry, I didn't catch that. {_menu_text()}"
        session.intent = intent
        session.slots = {}
        session.check_variant = None
        session.failed_parses = 0
        if intent == "list_flights":
            reply, _ = self.fulfill(session)
            return reply
        session.state = "collecting"
        if intent == "check_flight":
            return VARIANT_QUESTION
        return SLOT_QUESTIONS[session.next_slot()]

    def _strike(self, session: DialogSession, retry_text: str) -> str:
        session.failed_parses += 1
        if session.failed_parses >= MAX_FAILED_PARSES:
            self._reset_to_menu(session)
            return f"Let's start over. {_menu_text()}"
        return retry_text

    def _handle_collecting(self, session: DialogSession, text: str) -> str:
        if session.intent == "check_flight" and session.check_variant is None:
            variant, slots = resolve_check_variant(text, self.today)
            if variant is None:
                return self._strike(session, f"Sorry, I didn't catch that. {VARIANT_QUESTION}")
            session.check_variant = variant
            session.slots.update(slots)
            session.failed_parses = 0
            return self._advance(session)

        slot = session.next_slot()
        value = self._parse_slot_value(slot, text)
        if value is None:
            return self._strike(
                session, f"Sorry, I didn't understand. {SLOT_QUESTIONS[slot]}"
            )
        session.slots[slot] = value
        session.failed_parses = 0
        return self._advance(session)

    def _parse_slot_value(self, slot: str, text: str) -> str | None:
        if slot == "date":
            return parse_date(text, self.today)
        if slot == "time":
            return parse_time(text)
        value = strip_politeness(text)
        return value or None

    def _advance(self, session: DialogSession) -> str:
        """Ask the next unfilled slot question or move to confirmation."""
        slot = session.next_slot()
        if slot is not None:
            return SLOT_QUESTIONS[slot]
        session.state = "confirming"
        return f"{self._summary(session)} Shall I go ahead?"

    def _summary(self, session: DialogSession) -> str:
        if session.intent == "add_flight":
            return f"You want to add a flight {_describe(session.slots)}."
        if session.intent == "remove_flight":
            return f"You want to remove the flight {_describe(session.slots)}."
        if session.intent == "get_delay":
            return f"You want delay information for the flight {_describe(session.slots)}."
        if session.intent == "check_flight":
            if session.check_variant == "next":
                return "You want to check your next flight."
            if session.check_variant == "by_origin":
                return f"You want to check your flight from {session.slots['origin']}."
            return (
                "You want to check your flight on "
                f"{session.slots['date']} at {session.slots['time']}."
            )
        raise AssertionError(session.intent)

    def _handle_confirming(self, session: DialogSession, text: str) -> str:
        lowered = strip_politeness(text).lower()
        if re.search(r"\b(yes|yeah|yep|sure|ok|okay|confirm|correct|right|go ahead|do it)\b", lowered):
            reply, event = self.fulfill(session)
            session.pending_event = event
            return reply
        if re.search(r"\b(no|nope|cancel|stop|never mind)\b", lowered):
            self._reset_to_menu(session)
            return f"Okay, I won't do that. {CLOSING}"
        return self._strike(
            session, f"Sorry, I didn't catch that. {self._summary(session)} Shall I go ahead?"
        )

    # -- fulfillment -----------------------------------------------------

    def fulfill(self, session: DialogSession) -> tuple[str, PendingEvent | None]:
        """Execute the session's intent against the store/predictor.

        Returns the system text and, for delay predictions, the event
        body to append to the prediction log.  Store or predictor
        failures come back as apologetic text; the session returns to
        the menu either way.
        """
        intent, variant, slots = session.intent, session.check_variant, dict(session.slots)
        self._reset_to_menu(session)
        try:
            if intent == "list_flights":
                return self._fulfill_list(), None
            if intent == "add_flight":
                self.store.add(slots["origin"], slots["destination"], slots["airline"], slots["date"], slots["time"])
                return f"Done. I've added your flight {_describe(slots)}. {CLOSING}", None
            if intent == "remove_flight":
                return self._fulfill_remove(slots), None
            if intent == "get_delay":
                return self._fulfill_predict(slots)
            if intent == "check_flight":
                return self._fulfill_check(variant, slots)
        except Exception as exc:  # keep the session recoverable
            session.last_error = f"{type(exc).__name__}: {exc}"
            return f"Sorry, something went wrong on my end and I couldn't finish that. {CLOSING}", None
        raise AssertionError(intent)

    def _fulfill_list(self) -> str:
        flights = self.store.list()
        if not flights:
            return f"You have no flights in your list. {CLOSING}"
        lines = "; ".join(
            f"{f.origin} to {f.destination} with {f.airline} on {f.date} at {f.time}"
            for f in flights
        )
        return f"You have {len(flights)} flight(s): {lines}. {CLOSING}"

    def _fulfill_remove(self, slots: dict) -> str:
        matches = [
            f
            for f in self.store.list()
            if f.origin.lower() == slots["origin"].lower()
            and f.destination.lower() == slots["destination"].lower()
            and f.airline.lower() == slots["airline"].lower()
            and f.date == slots["date"]
            and f.time == slots["time"]
        ]
        if not matches:
            return f"I couldn't find that flight in your list. {CLOSING}"
        self.store.remove(matches[0].id)
        return f"Done. I've removed your flight {_describe(slots)}. {CLOSING}"

    def _fulfill_predict(self, slots: dict) -> tuple[str, PendingEvent | None]:
        if self.predictor is None:
            return f"Sorry, predictions aren't available right now. {CLOSING}", None
        estimate = self.predictor(
            slots["origin"], slots["destination"], slots["airline"], slots["date"], slots["time"]
        )
        event = PendingEvent(
            model=estimate.model,
            request={k: slots[k] for k in SLOT_ORDER},
            predicted_delay=estimate.minutes,
            provenance=estimate.provenance,
        )
        return f"{_phrase_delay(estimate.minutes)} {CLOSING}", event

    def _fulfill_check(self, variant: str, slots: dict) -> tuple[str, PendingEvent | None]:
        if variant == "next":
            matches = self.store.find(next_upcoming=True, now=(self.today().isoformat(), "00:00"))
        elif variant == "by_origin":
            matches = self.store.find(origin=slots["origin"])
        else:
            matches = self.store.find(date=slots["date"], time=slots["time"])
        if not matches:
            return f"You have no matching flights in your list. {CLOSING}", None
        flight = matches[0]
        flight_slots = {
            "origin": flight.origin,
            "destination": flight.destination,
            "airline": flight.airline,
            "date": flight.date,
            "time": flight.time,
        }
        text, event = self._fulfill_predict(flight_slots)
        return text, event
