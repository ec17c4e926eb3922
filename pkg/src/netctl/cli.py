"""Command line entry point: ``netctl <recipe> --config <path> [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .exceptions import (
    ConfigError,
    DegenerateDecompositionError,
    FormatError,
    NetctlError,
    ParameterError,
    PreconditionError,
    RecipeError,
)
from .experiments import ExperimentConfig, Recipe, load_config, run_recipe, write_outputs

log = logging.getLogger("netctl")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_CONFIG_ERRORS = (ConfigError, FormatError, ParameterError, PreconditionError, RecipeError)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="netctl",
        description="Minimum-energy target control experiments on linear networks.",
    )
    p.add_argument("recipe", choices=[r.value for r in Recipe])
    p.add_argument("--config", help="JSON or TOML config; built-in defaults when omitted")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which matches the config code.
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.config:
            cfg = load_config(args.config, recipe=args.recipe)
        else:
            cfg = ExperimentConfig.from_mapping({}, recipe=args.recipe)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.seed = args.seed
        if args.out:
            cfg.out_dir = args.out
        out = run_recipe(cfg)
        paths = write_outputs(out, cfg.out_dir)
    except _CONFIG_ERRORS as exc:
        print(f"netctl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NetctlError, ArithmeticError, DegenerateDecompositionError) as exc:
        print(f"netctl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"netctl: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in paths:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
