"""
opendyn command line.

    python -m opendyn run configs/rabi_schrodinger.json --output-dir out
    python -m opendyn rate-sweep configs/witness_rate_sweep.json --workers 4
    python -m opendyn validate configs/witness_ame.json

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 positivity abort. Failures also print an ErrorResponse JSON on stderr.
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from opendyn import __version__
from opendyn.cli.outputs import to_jsonable
from opendyn.cli.schemas import ErrorResponse
from opendyn.cli.service import RunService, apply_overrides, load_config
from opendyn.config import DEBUG_MODE
from opendyn.errors import EXIT_OK, EXIT_SOLVER, OpenDynError
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger("opendyn")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opendyn", description="Open quantum system dynamics runs")
    parser.add_argument("--version", action="version", version=f"opendyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "solve one configured problem and write CSV + JSON metadata"),
        ("rate-sweep", "tunneling-rate sweep over the witness probe field"),
        ("validate", "check a config and assemble its problem without solving"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("config", help="JSON run configuration")
        cmd.add_argument("--output-dir", default=None, help="directory for CSV and metadata files")
        cmd.add_argument("--seed", type=int, default=None, help="ensemble seed (overrides the config)")
        cmd.add_argument("--workers", type=int, default=None, help="ensemble worker threads")
    return parser


def _fail(code: str, message: str, details: dict, exit_code: int) -> int:
    response = ErrorResponse(error_code=code, message=message, details=to_jsonable(details))
    print(f"[FAIL] {code}: {message}")
    print(response.model_dump_json(), file=sys.stderr)
    return exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if DEBUG_MODE else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    get_tracer(reset=True)
    print(f"[START] {args.command} {args.config}")

    try:
        config = apply_overrides(load_config(args.config), args.seed, args.workers)
        service = RunService(config)

        if args.command == "validate":
            service.build()
            print(f"[OK] {args.config} is a valid {config.solver.name} run")
            return EXIT_OK

        if args.command == "run":
            response = service.run(args.output_dir)
            for message in response.warnings:
                print(f"[WARN] {message}")
            print(f"[OK] {response.solver}: {response.rows} rows -> {response.csv_path}")
            return EXIT_OK

        response = service.rate_sweep(args.output_dir)
        for row in response.rows:
            if row.status == "ok":
                print(f"[OK] h_p={row.h_p}: Gamma={row.gamma:.6g} /ns (residual {row.residual:.2e})")
            else:
                print(f"[WARN] h_p={row.h_p}: {row.status} failure: {row.message}")
        print(f"[OK] rate table -> {response.csv_path}")
        return EXIT_OK

    except OpenDynError as exc:
        return _fail(exc.code, exc.message, exc.details, exc.exit_code)
    except Exception as exc:
        logger.exception("unexpected failure")
        return _fail("internal_error", f"{type(exc).__name__}: {exc}", {}, EXIT_SOLVER)


if __name__ == "__main__":
    sys.exit(main())
