"""Command-line entry point: ``run``, ``synth`` and ``report`` subcommands."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .pipeline import ConfigError, StageError, render_table, rerender, run_pipeline, tomllib
from .synth import SynthSpec, generate_synthetic, write_synthetic

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _load_mapping(path: Path) -> dict:
    try:
        if path.suffix == ".json":
            return json.loads(path.read_text(encoding="utf-8"))
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"spec file {str(path)!r} not found") from None
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def cmd_run(args) -> int:
    report = run_pipeline(args.config, output_dir=args.out, threads=args.threads)
    print(render_table(report.to_dict()["models"]), end="")
    return EXIT_OK


def cmd_synth(args) -> int:
    raw = _load_mapping(Path(args.spec))
    try:
        spec = SynthSpec.from_mapping(raw.get("synthetic", raw))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"synthetic spec: {exc}") from None
    paths = write_synthetic(generate_synthetic(spec), args.out, spec)
    for role in ("clinical", "expression", "cna", "mutations"):
        print(f"{role}: {paths[role]}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        text = rerender(args.dir)
    except FileNotFoundError:
        raise ConfigError(f"no report.json in {args.dir!r}") from None
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brcaml", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the pipeline described by a TOML config")
    r.add_argument("config")
    r.add_argument("--out", help="override the config's output_dir")
    r.add_argument("--threads", type=int, help="learners evaluated in parallel")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("synth", help="write a synthetic clinical + genomic table set")
    s.add_argument("spec", help="TOML or JSON file with generator settings")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("report", help="re-render table.md from report.json")
    t.add_argument("dir")
    t.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: [io] {exc}", file=sys.stderr)
        return EXIT_RUNTIME
