"""CLI entry point for stringtable."""
from __future__ import annotations

import argparse
import logging
import sys

from stringtable.config import DEFAULT_TOLERANCES, load_config
from stringtable.errors import StringTableError
from stringtable.pipeline import STAGES, SUBCOMMANDS, run_pipeline, sweep

logger = logging.getLogger(__name__)


class TagFilter(logging.Filter):
    """Adds ``record.tag``: the last component of the logger name."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.tag = record.name.rsplit(".", 1)[-1]
        return True


def configure_logging(verbose: bool = False) -> None:
    handler = logging.StreamHandler()
    handler.addFilter(TagFilter())
    handler.setFormatter(logging.Formatter("[%(tag)s] %(message)s"))
    root = logging.getLogger("stringtable")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _epilog() -> str:
    lines = ["stages:"]
    lines += [f"  {s['name']:<11} {s['description']}" for s in STAGES]
    lines.append("default tolerances:")
    lines += [f"  {k:<15} {v:g}" for k, v in DEFAULT_TOLERANCES.items()]
    lines.append("environment: STRINGTABLE_OUT, STRINGTABLE_GRID, STRINGTABLE_BACKEND (also read from .env)")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", "-c",
        help="JSON run configuration (default: built-in defaults, the circle table)",
    )
    common.add_argument(
        "--out", "-o",
        help="Output directory (default: $STRINGTABLE_OUT or ./stringtable-out)",
    )
    common.add_argument(
        "--grid", type=int,
        help="Diameter scan grid on [0, 2pi) (default: $STRINGTABLE_GRID or 8192)",
    )
    common.add_argument(
        "--emit-svg", action="store_true", default=None,
        help="Also render SVG figures",
    )
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="stringtable",
        description="Build string-construction billiard tables with prescribed "
                    "2-periodic orbits and verify their invariant curves.",
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("table", parents=[common], help="Build and export the table")
    sub.add_parser("curves", parents=[common], help="Table, diameters, invariant curves and corners")
    sub.add_parser("spectrum", parents=[common], help="Everything above plus hyperbolicity and symplecticity")
    sub.add_parser("twist", parents=[common], help="Time-periodic Hamiltonian example")
    sub.add_parser("sweep", parents=[common], help="Singular points across tau = fraction * tau")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        config = load_config(args.config, out=args.out, scan_grid=args.grid, emit_svg=args.emit_svg)
        if args.command == "sweep":
            result = sweep(config)
        else:
            result = run_pipeline(config, SUBCOMMANDS[args.command])
    except StringTableError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 1

    if result.exit_status:
        logger.error("Acceptance checks failed; see the report in %s", config.out_dir)
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
