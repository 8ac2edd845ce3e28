"""Command-line front end: ``fracinv run``, ``fracinv verify`` and ``fracinv presets``.

Exit codes: 0 success, 1 verification failure, 2 configuration or I/O error,
3 solver divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from fracinv.errors import DivergenceError, FracInvError
from fracinv.experiments import (
    ConfigError,
    ExperimentConfig,
    PRESETS,
    preset,
    run_experiment,
    write_artifacts,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3

# command-line flag -> config key
OVERRIDES = {
    "alpha": "alpha",
    "nt": "nt",
    "grid": "cells",
    "T": "T",
    "noise": "noise_delta",
    "seed": "rng_seed",
    "reg": "tikhonov_weight",
    "relax": "relax",
    "eps": "stop_eps",
    "region": "region",
    "g_true": "g_true",
    "max_iter": "max_iter",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracinv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every iteration to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a reconstruction experiment")
    run.add_argument("--config", type=Path, help="key = value config file")
    run.add_argument("--preset", help="named preset (see 'fracinv presets')")
    run.add_argument("--alpha", type=float)
    run.add_argument("--nt", type=int)
    run.add_argument("--grid", type=int, help="cells per axis")
    run.add_argument("--T", type=float, help="time horizon")
    run.add_argument("--noise", type=float, help="noise level delta")
    run.add_argument("--seed", type=int)
    run.add_argument("--reg", type=float, help="Tikhonov weight")
    run.add_argument("--relax", type=float, help="relaxation constant M")
    run.add_argument("--eps", type=float, help="relative stopping tolerance")
    run.add_argument("--region", help="observation region, e.g. frame:0.1, corner:0.8, strip:0.95")
    run.add_argument("--g-true", dest="g_true", help="plane, cosine or file:<csv>")
    run.add_argument("--max-iter", dest="max_iter", type=int)
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="any other config key")
    run.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="parallel workers for multi-run presets")

    ver = sub.add_parser("verify", help="run numerical verification suites")
    ver.add_argument("suites", nargs="*", help="subset of: mlf adjoint laplace spectral invisible c5 (default all)")

    sub.add_parser("presets", help="list preset experiments")
    return parser


def load_configs(args) -> list[ExperimentConfig]:
    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset:
        bases = list(preset(args.preset))
    elif args.config:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        bases = [ExperimentConfig.from_text(text)]
    else:
        bases = [ExperimentConfig()]

    overrides = {key: getattr(args, flag) for flag, key in OVERRIDES.items() if getattr(args, flag) is not None}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    return [cfg.with_overrides(overrides) for cfg in bases]


def _run_one(config: ExperimentConfig, out: Path) -> tuple[str, int, str]:
    """Run one experiment into ``out``; returns ``(name, exit code, summary)``."""
    out.mkdir(parents=True, exist_ok=True)
    logger = logging.getLogger("fracinv")
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG)
    try:
        logger.info("config\n%s", config.to_text())

        def progress(k, g, phi):
            logger.debug("iteration %d objective %.6e", k, phi)

        result = run_experiment(config, callback=progress)
        write_artifacts(result, out)
        m = result.metrics()
        return config.name, EXIT_OK, f"{config.name}: K={m['K']} Res={100 * m['Res']:.2f}% ({m['stop_reason']})"
    except DivergenceError as exc:
        logger.error("diverged: %s", exc)
        (out / "config.txt").write_text(config.to_text())
        (out / "metrics.json").write_text(
            json.dumps({"name": config.name, "error": str(exc), "phi_history": exc.history, "config": config.to_text()}, indent=2)
            + "\n"
        )
        return config.name, EXIT_DIVERGED, f"{config.name}: diverged ({exc})"
    finally:
        logger.removeHandler(handler)
        handler.close()


def cmd_run(args) -> int:
    configs = load_configs(args)
    targets = [(cfg, args.out if len(configs) == 1 else args.out / cfg.name) for cfg in configs]
    if args.jobs > 1 and len(targets) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, *zip(*targets)))
    else:
        results = [_run_one(cfg, out) for cfg, out in targets]
    code = EXIT_OK
    for _, status, summary in results:
        print(summary)
        code = max(code, status)
    return code


def cmd_verify(args) -> int:
    from fracinv.verify import SUITES

    names = args.suites or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s): {', '.join(unknown)}")
    failed = 0
    for name in names:
        print(f"[{name}]")
        for chk in SUITES[name]():
            print("  " + chk.line())
            failed += not chk.passed
    print("all checks passed" if not failed else f"{failed} check(s) failed")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_presets(args) -> int:
    for name in sorted(PRESETS):
        runs = PRESETS[name]
        print(f"{name}: {len(runs)} run(s): " + ", ".join(f"{c.name} (alpha={c.alpha}, region={c.region})" for c in runs))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    console = logging.StreamHandler()
    console.setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    logging.basicConfig(handlers=[console], format="%(message)s", force=True)
    handlers = {"run": cmd_run, "verify": cmd_verify, "presets": cmd_presets}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except FracInvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
