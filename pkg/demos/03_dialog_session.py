"""
A slot-filling conversation, turn by turn
==========================================

Drives the dialog engine directly (no HTTP): the four-option menu,
one question per turn in the fixed order, confirmation, and a delay
answer phrased against the 15-minute threshold.
"""

import tempfile

from flightstat.dialog import DelayEstimate, DialogEngine
from flightstat.store import FlightStore


def predictor(origin, destination, airline, date, time):
    # stand-in for a trained model: evening flights run late
    minutes = 32.0 if time >= "17:00" else 6.0
    return DelayEstimate(minutes, "mlp", {"dep_delay": "no-delay-assumed"})


with tempfile.TemporaryDirectory() as tmp:
    engine = DialogEngine(FlightStore(tmp), predictor=predictor)
    session, greeting = engine.start_session()
    print(f"  system: {greeting}")

    turns = [
        "add a flight",
        "Boston",
        "Chicago",
        "United",
        "2026-09-01",
        "18:30",
        "yes",
        "get delay information",
        "Boston",
        "Chicago",
        "United",
        "2026-09-01",
        "18:30",
        "yes",
        "list my flights",
    ]
    for text in turns:
        reply = engine.handle_utterance(session, text)
        print(f"  user:   {text}")
        print(f"  system: {reply}")

    event = session.pending_event
    if event:
        print("prediction event ready for the log:", event.request, event.predicted_delay)
