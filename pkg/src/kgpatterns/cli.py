"""Command-line entry point: ingest, mine, and write pattern exports.

Exit codes: 0 success, 2 configuration error, 3 parse failure,
4 I/O failure, 5 interrupted with partial results written.
"""

from __future__ import annotations

import argparse
import signal
import sys
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .base import RangeConfig, compute_base_patterns
from .emit import export_dict, file_digest, make_run, write_outputs
from .graph import ParseError, load_graph
from .literals import RDF_TYPE
from .mine import discover

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_IO = 4
EXIT_PARTIAL = 5


@dataclass
class RunConfig:
    inputs: list[str]
    out: str = "patterns"
    min_support: int = 2
    max_depth: int = 3
    max_length: int = 8
    max_width: int = 4
    seed: int = 0
    workers: int = 0  # 0: use available parallelism
    type_predicate: str = RDF_TYPE
    numeric: bool = True
    temporal: bool = True
    textual: bool = True
    modes_max: int = 5
    restarts: int = 3
    text_coverage: float = 1.0
    formats: list[str] = field(default_factory=lambda: ["json", "rdf"])
    lenient: bool = False

    def validate(self) -> str | None:
        if not self.inputs:
            return "at least one --input is required"
        if self.min_support < 1:
            return "--min-support must be >= 1"
        if self.max_depth < 0:
            return "--max-depth must be >= 0"
        if self.max_length < 1 or self.max_width < 1:
            return "--max-length and --max-width must be >= 1"
        if self.workers < 0:
            return "--workers must be >= 1"
        bad = [f for f in self.formats if f not in ("json", "rdf")]
        if bad:
            return f"unknown output format(s): {', '.join(bad)}"
        missing = [p for p in self.inputs if not Path(p).is_file()]
        if missing:
            return f"input file(s) not found: {', '.join(missing)}"
        return None

    def effective_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        import os

        return os.cpu_count() or 1

    def hyperparameters(self) -> dict:
        return {
            "minSupport": self.min_support,
            "maxDepth": self.max_depth,
            "maxLength": self.max_length,
            "maxWidth": self.max_width,
            "seed": self.seed,
            "typePredicate": self.type_predicate,
            "numericRanges": self.numeric,
            "temporalRanges": self.temporal,
            "textualRanges": self.textual,
            "modesMax": self.modes_max,
            "restarts": self.restarts,
            "textCoverage": self.text_coverage,
        }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgpatterns",
        description="Discover generalized multimodal graph patterns in an RDF graph "
        "and emit them as SPARQL queries with provenance.",
    )
    parser.add_argument("--input", action="extend", nargs="+", default=[],
                        metavar="PATH", help="N-Triples input file (repeatable)")
    parser.add_argument("--out", default="patterns", metavar="PATH",
                        help="output base path; .json/.nt extensions are added")
    parser.add_argument("--min-support", type=int, default=2, metavar="N")
    parser.add_argument("--max-depth", type=int, default=3, metavar="N",
                        help="generation bound and pattern depth cap")
    parser.add_argument("--max-length", type=int, default=8, metavar="N")
    parser.add_argument("--max-width", type=int, default=4, metavar="N")
    parser.add_argument("--seed", type=int, default=0, metavar="N",
                        help="all randomness (mixture restarts, shuffles) flows from this")
    parser.add_argument("--workers", type=int, default=0, metavar="N",
                        help="parallel shards; default: available parallelism")
    parser.add_argument("--type-predicate", default=RDF_TYPE, metavar="IRI")
    parser.add_argument("--no-numeric", dest="numeric", action="store_false",
                        help="disable numeric value ranges")
    parser.add_argument("--no-temporal", dest="temporal", action="store_false",
                        help="disable temporal value ranges")
    parser.add_argument("--no-textual", dest="textual", action="store_false",
                        help="disable textual (regex) value ranges")
    parser.add_argument("--modes-max", type=int, default=5, metavar="N")
    parser.add_argument("--restarts", type=int, default=3, metavar="N")
    parser.add_argument("--format", dest="formats", default="json,rdf", metavar="LIST",
                        help="comma-separated: json, rdf")
    parser.add_argument("--lenient", action="store_true",
                        help="skip and count malformed input lines instead of failing")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        inputs=list(args.input),
        out=args.out,
        min_support=args.min_support,
        max_depth=args.max_depth,
        max_length=args.max_length,
        max_width=args.max_width,
        seed=args.seed,
        workers=args.workers,
        type_predicate=args.type_predicate,
        numeric=args.numeric,
        temporal=args.temporal,
        textual=args.textual,
        modes_max=args.modes_max,
        restarts=args.restarts,
        formats=[f.strip() for f in args.formats.split(",") if f.strip()],
        lenient=args.lenient,
    )


def run(config: RunConfig, stop: threading.Event | None = None) -> int:
    """Execute a full discovery run; returns the process exit code."""
    error = config.validate()
    if error is not None:
        print(f"kgpatterns: {error}", file=sys.stderr)
        return EXIT_CONFIG

    started = time.monotonic()
    stop = stop or threading.Event()

    try:
        graph, skipped = load_graph(
            config.inputs,
            type_predicate=config.type_predicate,
            strict=not config.lenient,
            diagnostics=sys.stderr,
        )
    except ParseError as exc:
        print(f"kgpatterns: parse failure: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"kgpatterns: cannot read input: {exc}", file=sys.stderr)
        return EXIT_IO

    range_config = RangeConfig(
        numeric=config.numeric,
        temporal=config.temporal,
        textual=config.textual,
        modes_max=config.modes_max,
        restarts=config.restarts,
        text_coverage=config.text_coverage,
    )
    workers = config.effective_workers()
    inputs = [{"path": p, "sha256": file_digest(p)} for p in config.inputs]
    out_base = Path(config.out)

    store = compute_base_patterns(
        graph, config.min_support, config=range_config, seed=config.seed, workers=workers
    )

    def checkpoint(depth: int, current_store) -> bool:
        run_record = make_run(inputs, config.hyperparameters(), current_store.last_complete_depth)
        export = export_dict(current_store, run_record, graph, config.type_predicate)
        write_outputs(export, out_base, config.formats)
        return not stop.is_set()

    try:
        discover(
            graph,
            store,
            config.min_support,
            config.max_depth,
            config.max_length,
            config.max_width,
            workers=workers,
            stop=stop,
            on_generation=checkpoint,
        )
        run_record = make_run(inputs, config.hyperparameters(), store.last_complete_depth)
        export = export_dict(store, run_record, graph, config.type_predicate)
        written = write_outputs(export, out_base, config.formats)
    except OSError as exc:
        print(f"kgpatterns: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO

    elapsed = time.monotonic() - started
    telemetry = store.telemetry
    print("kgpatterns run report")
    print(f"  inputs: {', '.join(config.inputs)}")
    if skipped:
        print(f"  skipped input lines: {skipped}")
    echo = config.hyperparameters()
    print("  configuration: " + " ".join(f"{k}={v}" for k, v in echo.items()))
    print(f"  workers: {workers}")
    for depth, count in store.generation_sizes().items():
        line = f"  generation {depth}: {count} patterns"
        if telemetry is not None and depth in telemetry.per_generation:
            s = telemetry.per_generation[depth]
            line += (
                f" (candidates={s.candidates} domains={s.domains_computed}"
                f" dedup={s.dedup_hits} pruned-size={s.pruned_size}"
                f" pruned-support={s.pruned_support} no-reduction={s.no_reduction}"
                f" grace={s.graced})"
            )
        print(line)
    print(f"  total patterns: {store.count()}")
    print(f"  last complete generation: {store.last_complete_depth}")
    print(f"  outputs: {', '.join(str(p) for p in written)}")
    print(f"  wall time: {elapsed:.2f} s")

    if stop.is_set():
        print("kgpatterns: interrupted; wrote complete generations only", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = config_from_args(args)

    stop = threading.Event()

    def on_interrupt(signum, frame):
        stop.set()

    previous = signal.signal(signal.SIGINT, on_interrupt)
    try:
        return run(config, stop=stop)
    finally:
        signal.signal(signal.SIGINT, previous)


if __name__ == "__main__":
    sys.exit(main())
