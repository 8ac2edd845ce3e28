"""Shared helpers for the experiment scripts."""

from __future__ import annotations

import argparse
from pathlib import Path

from fracinv.experiments import ExperimentConfig, ExperimentResult, preset, run_experiment, write_artifacts


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", type=Path, default=None, help="write per-run artifacts below this directory")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key in every run")
    return p


def configs(name: str, overrides: list[str]) -> list[ExperimentConfig]:
    values = dict(item.split("=", 1) for item in overrides)
    return [cfg.with_overrides(values) for cfg in preset(name)]


def run_all(cfgs: list[ExperimentConfig], out: Path | None) -> list[ExperimentResult]:
    results = []
    for cfg in cfgs:
        res = run_experiment(cfg)
        m = res.metrics()
        print(f"  {cfg.name:18s} K={m['K']:5d}  Res={100 * m['Res']:6.2f}%  ({m['stop_reason']}, {m['wall_time']:.0f}s)", flush=True)
        if out is not None:
            write_artifacts(res, out / cfg.name)
        results.append(res)
    return results
