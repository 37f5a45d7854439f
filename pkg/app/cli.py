#!/usr/bin/env python3
"""
secure-cluster command line.

Subcommands: run, chain gen, chain verify, vsc, serve.

Exit codes:
    0  success
    1  verification returned false
    2  validation or parse error
    3  eavesdropper placement violates the SNR assumption
    4  the server address cannot be bound

Every flag falls back to its environment variable (see ``app.config``), then
to the built-in default. Logs go to stderr; stdout carries results only.
"""

import argparse
import json
import logging
import math
import sys

from pydantic import ValidationError

from app.config import settings
from app.exceptions import (
    AssumptionViolationError,
    ChainRangeError,
    InsufficientObservationsError,
    InvalidInputError,
    SecureClusterError,
)
from app.models.channel import ChannelInfo, VscInputs
from app.models.hashchain import ChainDisclosure
from app.parsers.scenario_parser import ScenarioParseError, format_validation_error, load_scenario

logger = logging.getLogger("secure-cluster")

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_INVALID = 2
EXIT_ASSUMPTION = 3
EXIT_BIND = 4


def format_float(value: float) -> str:
    """12 significant digits, always recognisable as a float."""
    text = f"{value:.12g}"
    if not any(c in text for c in ".eni"):
        text += ".0"
    return text


def _error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def parse_observed(text: str) -> list[float]:
    """Comma-separated linear SNRs; empty text is an empty list."""
    if not text.strip():
        return []
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError as exc:
        raise InvalidInputError(f"--observed: {exc}") from exc
    return values


def cmd_run(args: argparse.Namespace) -> int:
    from app.services.simulator import Simulator, default_scenario, write_outputs

    try:
        scenario = load_scenario(args.scenario) if args.scenario else default_scenario()
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise InvalidInputError("--seed must be an unsigned 64-bit integer")
            scenario = scenario.model_copy(update={"seed": args.seed})
        simulator = Simulator(scenario, trace=args.trace)
    except (ScenarioParseError, InvalidInputError) as exc:
        _error(str(exc))
        return EXIT_INVALID
    except AssumptionViolationError as exc:
        _error(str(exc))
        return EXIT_ASSUMPTION

    metrics = simulator.run()
    try:
        written = write_outputs(metrics, args.out, simulator.events if args.trace else None)
    except OSError as exc:
        _error(f"cannot write results to {args.out}: {exc.strerror or exc}")
        return EXIT_INVALID
    for path in written:
        logger.info("Wrote %s", path)
    print(json.dumps(metrics.scalar_fields(), sort_keys=True))
    return EXIT_OK


def cmd_chain_gen(args: argparse.Namespace) -> int:
    from app.services.hashchain import disclose, generate_chain

    try:
        chain = generate_chain(args.vin, args.m)
        disclosure = disclose(chain, args.m)
    except ValidationError as exc:
        _error(f"--vin: {format_validation_error(exc)}")
        return EXIT_INVALID
    except (InvalidInputError, ChainRangeError) as exc:
        _error(str(exc))
        return EXIT_INVALID
    print(json.dumps({"m": disclosure.m, "value": disclosure.value.hex()}, sort_keys=True))
    return EXIT_OK


def cmd_chain_verify(args: argparse.Namespace) -> int:
    from app.services.hashchain import verify_disclosure

    try:
        disclosure = ChainDisclosure(value=args.value, m=args.m, alg=settings.hash_algorithm)
        ok = verify_disclosure(disclosure, args.vin)
    except ValidationError as exc:
        _error(format_validation_error(exc))
        return EXIT_INVALID
    except InvalidInputError as exc:
        _error(str(exc))
        return EXIT_INVALID
    print("true" if ok else "false")
    return EXIT_OK if ok else EXIT_FALSE


def cmd_vsc(args: argparse.Namespace) -> int:
    from app.services.channel_model import vsc

    try:
        observed = parse_observed(args.observed)
        if not all(math.isfinite(v) for v in [args.snr_ab, *observed]):
            raise InvalidInputError("SNR values must be finite")
        inputs = VscInputs(
            host="host",
            snr_ab=args.snr_ab,
            observed=tuple(
                ChannelInfo(sender=f"peer{i}", receiver="host", snr_linear=v, timestamp=0.0)
                for i, v in enumerate(observed)
            ),
        )
        value = vsc(inputs)
    except ValidationError as exc:
        _error(format_validation_error(exc))
        return EXIT_INVALID
    except (InvalidInputError, InsufficientObservationsError) as exc:
        _error(str(exc))
        return EXIT_INVALID
    print(format_float(value))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    if args.http:
        import uvicorn

        port = args.port if args.port is not None else settings.port
        bind = args.bind or settings.host
        logger.info("Serving HTTP facade on %s:%d", bind, port)
        try:
            uvicorn.run("app.main:app", host=bind, port=port, log_level=args.log_level.lower())
        except SystemExit as exc:
            # uvicorn exits with 1 when it cannot bind
            return EXIT_BIND if exc.code else EXIT_OK
        return EXIT_OK

    from app.mec_server import MecServer, run_server
    from app.services.mec_service import MecService

    server = MecServer(
        MecService(),
        bind=args.bind,
        port=args.port,
        registry_file=args.registry,
    )
    try:
        server.load_registry()
    except (ValueError, OSError, SecureClusterError) as exc:
        _error(f"cannot load registry {server.registry_file}: {exc}")
        return EXIT_INVALID
    try:
        run_server(server)
    except OSError as exc:
        _error(f"cannot bind {server.bind}:{server.port}: {exc.strerror or exc}")
        return EXIT_BIND
    except KeyboardInterrupt:
        logger.info("Interrupted")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secure-cluster",
        description="Hash chain based secure vehicle clusters",
    )
    parser.add_argument(
        "--log-level",
        default=settings.log_level,
        help=f"Logging level (default: {settings.log_level})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a simulation scenario")
    run.add_argument(
        "--scenario",
        default=settings.scenario_path,
        help="Scenario JSON file (default: the built-in 10-vehicle convoy)",
    )
    run.add_argument("--seed", type=int, default=settings.sim_seed, help="Override the scenario seed")
    run.add_argument("--out", default=settings.out_dir, help=f"Output directory (default: {settings.out_dir})")
    run.add_argument(
        "--trace",
        action="store_true",
        default=settings.trace,
        help="Also write trace.ndjson",
    )
    run.set_defaults(handler=cmd_run)

    chain = sub.add_parser("chain", help="Hash chain utilities")
    chain_sub = chain.add_subparsers(dest="chain_command", required=True)

    gen = chain_sub.add_parser("gen", help="Print the disclosure (value, m) of a VIN")
    gen.add_argument("--vin", required=True)
    gen.add_argument("--m", type=int, required=True)
    gen.set_defaults(handler=cmd_chain_gen)

    verify = chain_sub.add_parser("verify", help="Verify a disclosure against a VIN")
    verify.add_argument("--vin", required=True)
    verify.add_argument("--m", type=int, required=True)
    verify.add_argument("--value", required=True, help="Disclosed chain value (hex)")
    verify.set_defaults(handler=cmd_chain_verify)

    vsc = sub.add_parser("vsc", help="Compute the vehicular secrecy capacity")
    vsc.add_argument("--snr-ab", type=float, required=True, help="Linear SNR to the target")
    vsc.add_argument("--observed", default="", help="Comma-separated observed linear SNRs")
    vsc.set_defaults(handler=cmd_vsc)

    serve = sub.add_parser("serve", help="Serve the MEC clustering endpoint")
    serve.add_argument("--bind", default=None, help=f"Bind address (default: {settings.mec_bind})")
    serve.add_argument("--port", type=int, default=None, help=f"Port (default: {settings.mec_port})")
    serve.add_argument(
        "--registry",
        default=settings.mec_registry_file,
        help="Registry JSON file, loaded at start and flushed on shutdown",
    )
    serve.add_argument("--http", action="store_true", help="Serve the HTTP facade with uvicorn")
    serve.set_defaults(handler=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
