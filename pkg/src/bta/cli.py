"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
``BTA_OUTPUT_DIR`` supplies ``--out`` for ``run`` and ``summarize`` when the
flag is omitted.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .data_io import export, read_panel, read_spec, simulate
from .engine import RunConfig, run_chains, summarize
from .errors import BTAError, DataError
from .store import read_store, write_store

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
OUTPUT_ENV = "BTA_OUTPUT_DIR"
AGREEMENT_WARN = 0.05


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _nonneg(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bta", description="Bayesian theory averaging sampler.")
    p.add_argument("--version", action="version", version=f"bta {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="sample the posterior and export summaries")
    r.add_argument("--data", required=True, help="panel CSV")
    r.add_argument("--spec", required=True, help="spec JSON")
    r.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV})")
    r.add_argument("--iters", type=_positive)
    r.add_argument("--burn", type=_nonneg)
    r.add_argument("--thin", type=_positive)
    r.add_argument("--chains", type=_positive)
    r.add_argument("--seed", type=_nonneg)
    r.add_argument("--workers", type=_positive, default=1, help="processes for parallel chains")
    r.add_argument("--no-indices", action="store_true", help="store index moments only, not per-record indices")

    s = sub.add_parser("summarize", help="re-summarise a stored run")
    s.add_argument("--samples", required=True, help="directory holding chain_*.bta files")
    s.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV})")
    s.add_argument("--group", help="label column for the means-by-group table")

    m = sub.add_parser("simulate", help="draw a synthetic panel from a truth file")
    m.add_argument("--spec", required=True)
    m.add_argument("--truth", required=True)
    m.add_argument("--n", required=True, type=_positive)
    m.add_argument("--seed", required=True, type=_nonneg)
    m.add_argument("--out", required=True, help="panel CSV to write")

    v = sub.add_parser("validate", help="load a panel and report its shape")
    v.add_argument("--data", required=True)
    v.add_argument("--spec", required=True)
    return p


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUTPUT_ENV)
    if not out:
        raise UsageError(f"--out is required (or set {OUTPUT_ENV})")
    return Path(out)


def _cmd_run(args) -> int:
    out = _out_dir(args)
    sf = read_spec(args.spec)
    data = read_panel(args.data, sf)
    settings = {**RunConfig().__dict__, **sf.run}
    for flag, key in (("iters", "iterations"), ("burn", "burn_in"), ("thin", "thin"),
                      ("chains", "chains"), ("seed", "seed")):
        if getattr(args, flag) is not None:
            settings[key] = getattr(args, flag)
    settings["workers"] = args.workers
    settings["keep_indices"] = not args.no_indices
    try:
        config = RunConfig(**settings)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if data.n == 0:
        raise DataError("no observations", path=args.data)
    try:
        data.check_against(sf.model)
    except ValueError as exc:
        raise DataError(str(exc), path=args.data) from None
    result = run_chains(config, sf.model, data, group=sf.group)
    write_store(out / "samples", result.chains)
    export(result.summary, result.chains, out)
    print(f"{config.chains} chain(s), {result.summary.n_samples} samples; "
          f"max cross-chain inclusion spread {result.summary.chain_agreement:.3f}; results in {out}")
    if config.chains > 1 and result.summary.chain_agreement >= AGREEMENT_WARN:
        print(f"warning: chains disagree by {result.summary.chain_agreement:.3f} in some inclusion "
              "probability; run longer or inspect trace.csv", file=sys.stderr)
    return EXIT_OK


def _cmd_summarize(args) -> int:
    out = _out_dir(args)
    chains = read_store(args.samples)
    summary = summarize(chains, group=args.group)
    export(summary, chains, out)
    print(f"{len(chains)} chain(s), {summary.n_samples} samples summarised into {out}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    panel, truth = simulate(args.spec, args.truth, args.n, args.seed, args.out)
    print(f"wrote {panel} and {truth}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    sf = read_spec(args.spec)
    data = read_panel(args.data, sf)
    try:
        data.check_against(sf.model)
    except ValueError as exc:
        raise DataError(str(exc), path=args.data) from None
    print(f"n = {data.n}")
    for th in sf.model.theories:
        print(f"theory {th.name}: {th.p} proxies")
    for r, o in enumerate(sf.model.outcomes):
        print(f"outcome {o.name} ({o.family.value}): {int(data.mask[:, r].sum())} present")
    for t, const in enumerate(data.constant_proxies):
        for j in const:
            print(f"warning: proxy {sf.model.theories[t].proxies[j]} is constant", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "summarize": _cmd_summarize, "simulate": _cmd_simulate, "validate": _cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bta: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"bta: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BTAError, OSError, ValueError, ArithmeticError) as exc:
        print(f"bta: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
