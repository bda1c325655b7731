"""Operator command line: ingest, train, evaluate, predict, serve,
and an offline dialog simulator.

Exit codes: 0 success, 1 usage error (including unknown flags),
2 data error, 3 internal error.
"""

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .dialog import DialogEngine
from .errors import FlightStatError
from .ingest import (
    SyntheticConfig,
    drop_missing_labels,
    generate_synthetic,
    parse_flights_path,
    split_train_test,
    write_flights_csv,
)
from .mlp import DEFAULT_HIDDEN_SIZES, TrainConfig
from .pipeline import (
    evaluate_models,
    format_report_table,
    load_models,
    load_split,
    save_models,
    train_models,
    write_report_json,
)
from .service import ApiError, ModelRegistry, PredictRequest, PredictionService, create_app
from .store import FlightStore

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

DEFAULT_SEED = 42

MODEL_CHOICES = {"carrier-origin": "carrier_origin", "seasonal": "seasonal", "mlp": "mlp"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract says 1
        raise UsageError(message)


def build_parser() -> Parser:
    parser = Parser(prog="flightstat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse/clean a CSV or generate synthetic data")
    p.add_argument("--input", help="input CSV path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--synthetic", type=int, help="generate N synthetic records instead of reading --input")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--test-fraction", type=float, default=0.01)
    p.add_argument("--chronological", action="store_true", help="hold out the most recent records")
    p.add_argument("--noise-scale", type=float, default=8.0)
    p.add_argument("--nonlinearity-amplitude", type=float, default=25.0)
    p.add_argument("--beta-dep", type=float, help="use this dep-delay slope for every season")
    p.add_argument("--beta-dist", type=float, help="use this distance slope for every season")

    p = sub.add_parser("train", help="train one model or all three")
    p.add_argument("--model", required=True, choices=[*MODEL_CHOICES, "all"])
    p.add_argument("--data", required=True, help="ingested data directory")
    p.add_argument("--out", required=True, help="models output directory")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--hidden-sizes", default=",".join(str(s) for s in DEFAULT_HIDDEN_SIZES))
    p.add_argument("--validation-fraction", type=float, default=0.0)
    p.add_argument("--cutoff", type=int, default=31, help="one-hot cardinality cutoff")
    p.add_argument("--min-group-size", type=int, default=30)
    p.add_argument("--support-threshold", type=int, default=5)

    p = sub.add_parser("evaluate", help="report metrics per model")
    p.add_argument("--models", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=["train", "test", "both"], default="both")

    p = sub.add_parser("predict", help="one-off prediction from the command line")
    p.add_argument("--models", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--origin", required=True)
    p.add_argument("--dest", required=True)
    p.add_argument("--airline", required=True)
    p.add_argument("--date", required=True, help="YYYY-MM-DD")
    p.add_argument("--time", required=True, help="HH:MM")
    p.add_argument("--dep-delay", type=float)
    p.add_argument("--distance", type=float)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--data", default=None, help="store directory (also FLIGHTSTAT_DATA_DIR)")
    p.add_argument("--default-model", default=None)
    p.add_argument("--ui", default=None, help="static UI directory to mount at /ui")

    p = sub.add_parser("simulate-dialog", help="replay a scripted conversation")
    p.add_argument("--script", required=True)
    p.add_argument("--models", help="optional models directory backing delay answers")

    return parser


def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.synthetic is not None:
        kwargs = {}
        if args.beta_dep is not None or args.beta_dist is not None:
            defaults = SyntheticConfig(count=1).season_coefficients
            kwargs["season_coefficients"] = {
                season: (
                    args.beta_dep if args.beta_dep is not None else b_dep,
                    args.beta_dist if args.beta_dist is not None else b_dist,
                )
                for season, (b_dep, b_dist) in defaults.items()
            }
        config = SyntheticConfig(
            count=args.synthetic,
            noise_scale=args.noise_scale,
            nonlinearity_amplitude=args.nonlinearity_amplitude,
            **kwargs,
        )
        records, manifest = generate_synthetic(config, seed=args.seed)
        rejects = []
        (out / "synthetic_manifest.json").write_text(json.dumps(manifest, indent=1), encoding="utf-8")
    else:
        if not args.input:
            raise UsageError("either --input or --synthetic is required")
        if not Path(args.input).exists():
            raise FlightStatError(f"input file not found: {args.input}")
        records, rejects = parse_flights_path(args.input)

    parsed = len(records)
    cleaned = drop_missing_labels(records)
    train, test = split_train_test(
        cleaned, args.test_fraction, seed=args.seed, chronological=args.chronological
    )
    write_flights_csv(cleaned, out / "records.csv")
    write_flights_csv(train, out / "train.csv")
    write_flights_csv(test, out / "test.csv")
    (out / "rejects.txt").write_text("".join(f"{r}\n" for r in rejects), encoding="utf-8")
    manifest = {
        "parsed": parsed,
        "rejected": len(rejects),
        "dropped_missing_labels": parsed - len(cleaned),
        "cancelled_retained": sum(r.cancelled for r in cleaned),
        "train": len(train),
        "test": len(test),
        "test_fraction": args.test_fraction,
        "seed": args.seed,
        "chronological": args.chronological,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1), encoding="utf-8")
    print(f"parsed={parsed} rejected={len(rejects)} train={len(train)} test={len(test)}")
    return EXIT_OK


def cmd_train(args) -> int:
    which = list(MODEL_CHOICES.values()) if args.model == "all" else [MODEL_CHOICES[args.model]]
    train_records, _ = load_split(args.data)
    hidden_sizes = tuple(int(s) for s in args.hidden_sizes.split(",") if s)
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        validation_fraction=args.validation_fraction,
    )
    started = time.monotonic()
    trained = train_models(
        train_records,
        which,
        mlp_config=config,
        hidden_sizes=hidden_sizes,
        cutoff=args.cutoff,
        min_group_size=args.min_group_size,
        support_threshold=args.support_threshold,
    )
    metadata = {
        "records": len(train_records),
        "seed": args.seed,
        "config": {
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "learning_rate": args.learning_rate,
            "hidden_sizes": list(hidden_sizes),
            "cutoff": args.cutoff,
            "min_group_size": args.min_group_size,
            "support_threshold": args.support_threshold,
        },
    }
    written = save_models(trained, train_records, args.out, metadata)
    elapsed = time.monotonic() - started
    for path in written:
        print(f"wrote {path}")
    print(f"trained {'+'.join(which)} on {len(train_records)} records in {elapsed:.1f}s")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    trained = load_models(args.models)
    train_records, test_records = load_split(args.data)
    splits = {"train": train_records, "test": test_records}
    wanted = ["train", "test"] if args.split == "both" else [args.split]
    reports_by_split = {}
    for split in wanted:
        reports = evaluate_models(trained, splits[split])
        reports_by_split[split] = reports
        print(format_report_table(reports, split))
        print()
    out_path = Path(args.models) / f"evaluation_{args.split}.json"
    write_report_json(reports_by_split, out_path)
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_predict(args) -> int:
    registry = ModelRegistry(args.models)
    service = PredictionService(registry)
    req = PredictRequest(
        model=args.model,
        origin=args.origin,
        destination=args.dest,
        airline=args.airline,
        date=args.date,
        time=args.time,
        dep_delay=args.dep_delay,
        distance=args.distance,
    )
    names = registry.names() if args.model == "all" else [args.model]
    if not names:
        raise FlightStatError("no models found; train first")
    for name in names:
        result = service.predict(req, name)
        delayed = "delayed" if result["delayed"] else "on time"
        print(
            f"{name}: {result['predicted_delay_minutes']:.1f} minutes ({delayed}) "
            f"provenance={result['provenance']}"
        )
    return EXIT_OK


def cmd_serve(args) -> int:
    import os

    import uvicorn

    data_dir = args.data or os.environ.get("FLIGHTSTAT_DATA_DIR") or "./data"
    port = args.port or int(os.environ.get("FLIGHTSTAT_PORT", "8080"))
    default_model = args.default_model or os.environ.get("FLIGHTSTAT_DEFAULT_MODEL", "mlp")
    app = create_app(data_dir, default_model=default_model, ui_dir=args.ui)
    try:
        uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    except OSError as exc:
        print(f"cannot bind port {port}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def run_dialog_script(lines: list[str], engine: DialogEngine) -> tuple[bool, list[str]]:
    """Replay a script; 'U:' lines are user turns, 'S:' lines assert the
    expected text is a substring of the next system reply."""
    session, greeting = engine.start_session()
    replies = [greeting]
    transcript = [f"system: {greeting}"]
    ok = True
    cursor = 0  # next unconsumed system reply
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.upper().startswith("U:"):
            text = line[2:].strip()
            reply = engine.handle_utterance(session, text)
            replies.append(reply)
            transcript.append(f"user: {text}")
            transcript.append(f"system: {reply}")
        elif line.upper().startswith("S:"):
            expected = line[2:].strip()
            if cursor >= len(replies):
                transcript.append(f"MISMATCH: expected {expected!r} but no system reply left")
                ok = False
                continue
            actual = replies[cursor]
            cursor += 1
            if expected not in actual:
                transcript.append(f"MISMATCH: expected {expected!r} in {actual!r}")
                ok = False
        else:
            transcript.append(f"MISMATCH: unrecognized script line {line!r}")
            ok = False
    return ok, transcript


def cmd_simulate_dialog(args) -> int:
    script_path = Path(args.script)
    if not script_path.exists():
        raise FlightStatError(f"script not found: {args.script}")
    lines = script_path.read_text(encoding="utf-8").splitlines()

    predictor = None
    if args.models:
        registry = ModelRegistry(args.models)
        service = PredictionService(registry)
        default = "mlp" if "mlp" in registry.names() else (registry.names() or [None])[0]

        def predictor(origin, destination, airline, date, time):
            from .dialog import DelayEstimate

            req = PredictRequest(
                model=default, origin=origin, destination=destination,
                airline=airline, date=date, time=time,
            )
            result = service.predict(req, default)
            return DelayEstimate(result["predicted_delay_minutes"], default, result["provenance"])

    with tempfile.TemporaryDirectory() as tmp:
        engine = DialogEngine(FlightStore(tmp), predictor=predictor)
        ok, transcript = run_dialog_script(lines, engine)
    print("\n".join(transcript))
    if not ok:
        print("transcript mismatch", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "ingest":
            return cmd_ingest(args)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "evaluate":
            return cmd_evaluate(args)
        if args.command == "predict":
            return cmd_predict(args)
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "simulate-dialog":
            return cmd_simulate_dialog(args)
        raise AssertionError(args.command)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ApiError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_DATA
    except (FlightStatError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - the contract maps these to 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
