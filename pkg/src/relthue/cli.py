"""Command line interface.

Exit codes: 0 success, 2 parse failure, 3 verification failure, 4
cardinality cap exceeded, 5 precision exhausted, 6 missing or corrupt
checkpoint, 7 resolvent case without the required field data.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import (
    CardinalityCapError,
    CaseBDataRequired,
    CheckpointError,
    ParseError,
    PrecisionError,
    VerificationError,
)
from .fieldspec import example_spec_path, load_spec
from .pipeline import STAGES, RunOptions, run_absolute_search, run_pipeline, run_thue_from_checkpoint
from .report import RunReport, write_report
from .unitsolve import default_threads

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VERIFY = 3
EXIT_CAP = 4
EXIT_PRECISION = 5
EXIT_CHECKPOINT = 6
EXIT_CASE_DATA = 7

log = logging.getLogger("relthue")


def _schedule(text: str | None):
    if text is None:
        return None
    if text == "auto":
        return []
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ParseError(f"--schedule expects comma separated numbers or 'auto', got {text!r}") from exc


def _primes(text: str | None):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ParseError(f"--sieve-primes expects comma separated integers, got {text!r}") from exc


def _common(p: argparse.ArgumentParser, spec_optional: bool = False):
    p.add_argument("spec", nargs="?" if spec_optional else None, default=None,
                   help="field-spec file (YAML); 'example' selects the bundled example")
    p.add_argument("-o", "--out", default="relthue-out", help="output directory for report, tables and figures")
    p.add_argument("--precision", type=int, default=None, help="working decimal digits")
    p.add_argument("--schedule", default=None, help="comma separated window values s, or 'auto'")
    p.add_argument("--threads", type=int, default=None, help="worker processes (default RELTHUE_THREADS or 1)")
    p.add_argument("--cap", type=int, default=None, help="per-ellipsoid point cap")
    p.add_argument("--sieve-primes", default=None, help="comma separated sieve primes")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relthue", description="Index form equations in relative quartic extensions.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-all", help="run the whole pipeline")
    _common(p)
    p.add_argument("--stage", choices=STAGES, default="all", help="stop after this stage")
    p.add_argument("--reduced-bound", type=int, default=None, help="skip Baker and reduction with this bound")
    p.add_argument("--checkpoint", default=None, help="checkpoint stream to write (default OUT/unit-eq.ckpt)")

    p = sub.add_parser("verify", help="parse and verify a field spec")
    _common(p)

    p = sub.add_parser("unit-eq", help="solve the unit equation and write (U, V) to a checkpoint")
    _common(p)
    p.add_argument("--stage", choices=("baker", "reduce", "unit-eq"), default="unit-eq")
    p.add_argument("--reduced-bound", type=int, default=None)
    p.add_argument("--checkpoint", default=None)

    p = sub.add_parser("thue-quartic", help="solve the quartic Thue equations for (U, V) from a checkpoint")
    _common(p)
    p.add_argument("--checkpoint", default=None, help="checkpoint from unit-eq (default OUT/unit-eq.ckpt)")

    p = sub.add_parser("abs-search", help="search small-index elements of the absolute field")
    _common(p)
    p.add_argument("--range", dest="z_range", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    return ap


def _options(args, stage: str) -> RunOptions:
    threads = args.threads if args.threads is not None else default_threads()
    return RunOptions(
        precision=args.precision,
        schedule=_schedule(args.schedule),
        threads=max(1, threads),
        cap=args.cap,
        sieve_primes=_primes(args.sieve_primes),
        stage=stage,
        reduced_bound=getattr(args, "reduced_bound", None),
    )


def _spec_path(arg: str) -> Path:
    return example_spec_path() if arg == "example" else Path(arg)


def _emit(report: RunReport, out: Path, figures: bool) -> None:
    files = write_report(report, out, figures=figures)
    print(json.dumps({"status": "ok", "files": files}, indent=2))


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(args.out)
    try:
        opts = _options(args, getattr(args, "stage", "all") if args.command != "verify" else "verify")
        spec = load_spec(_spec_path(args.spec), precision=args.precision)
        if args.command in ("solve-all", "unit-eq"):
            out.mkdir(parents=True, exist_ok=True)
            opts.checkpoint = Path(args.checkpoint) if args.checkpoint else out / "unit-eq.ckpt"
            res = run_pipeline(spec, opts)
            _emit(res.report, out, not args.no_figures)
        elif args.command == "verify":
            res = run_pipeline(spec, opts)
            _emit(res.report, out, False)
        elif args.command == "thue-quartic":
            ck = Path(args.checkpoint) if args.checkpoint else out / "unit-eq.ckpt"
            res = run_thue_from_checkpoint(spec, opts, ck)
            _emit(res.report, out, False)
        elif args.command == "abs-search":
            rep = run_absolute_search(spec, opts, args.z_range, args.threshold)
            _emit(rep, out, not args.no_figures)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CaseBDataRequired as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CASE_DATA
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except CardinalityCapError as exc:
        print(f"cardinality cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except PrecisionError as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
