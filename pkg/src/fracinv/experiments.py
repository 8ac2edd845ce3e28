"""Experiment configuration, presets and artifact I/O.

Configs are flat ``key = value`` text files.  Every field of
:class:`ExperimentConfig` may appear; unknown keys are errors.  A saved config
re-parses to an identical object.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from fracinv.errors import DomainError
from fracinv.grids import Grid2D, TimeGrid
from fracinv.inverse import (
    ForwardModel,
    ReconstructionConfig,
    ReconstructionReport,
    add_noise,
    reconstruct,
    synthetic_data,
)
from fracinv.operator import BoundaryCondition, EllipticOperatorSpec, assemble

log = logging.getLogger(__name__)


class ConfigError(DomainError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    alpha: float = 1.2
    T: float = 1.0
    nt: int = 256
    cells: int = 64
    """Cells per axis; the grid has ``cells + 1`` nodes per axis."""
    diffusion: float = 0.1
    potential: float = 1.0
    bc: str = "neumann"
    sigma_center: float = 0.4
    sigma_width: float = 0.12
    g_true: str = "plane"
    """``plane``, ``cosine`` or ``file:<path>`` (a CSV written by :func:`write_field_csv`)."""
    g0: float = 2.0
    region: str = "frame:0.1"
    noise_delta: float = 0.02
    rng_seed: int = 0
    tikhonov_weight: float = 1e-5
    relax: float = 4.0
    stop_eps: float = 4e-4
    max_iter: int = 2000
    adjoint_scheme: str = "discrete"
    fine_data: bool = False
    """Generate the synthetic data on the 2x refined grid (avoids the inverse crime)."""

    def __post_init__(self) -> None:
        try:
            TimeGrid(self.T, self.nt)
            Grid2D(self.cells + 1, self.cells + 1)
            EllipticOperatorSpec(self.diffusion, self.potential, 1.0, BoundaryCondition(self.bc))
            ReconstructionConfig(
                self.tikhonov_weight, self.relax, self.stop_eps, self.max_iter,
                self.noise_delta, self.rng_seed, None, self.adjoint_scheme,
            )
        except (DomainError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 < self.alpha <= 2.0:
            raise ConfigError(f"alpha must lie in (0, 2]: {self.alpha}")
        if not self.sigma_width > 0:
            raise ConfigError(f"sigma width must be positive: {self.sigma_width}")
        if not (self.g_true in G_PRESETS or self.g_true.startswith("file:")):
            raise ConfigError(f"unknown g_true preset {self.g_true!r}")
        parse_region(self.region)

    # ---- text round trip -------------------------------------------------

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
        return (base or cls()).with_overrides(values)

    def with_overrides(self, values: dict) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(self)}
        parsed = {}
        for key, value in values.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            parsed[key] = _parse(value, types[key], key) if isinstance(value, str) else value
        return dataclasses.replace(self, **parsed)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    # ---- derived objects ---------------------------------------------------

    @property
    def grid(self) -> Grid2D:
        return Grid2D(self.cells + 1, self.cells + 1)

    @property
    def timegrid(self) -> TimeGrid:
        return TimeGrid(self.T, self.nt)

    @property
    def operator_spec(self) -> EllipticOperatorSpec:
        return EllipticOperatorSpec(self.diffusion, self.potential, 1.0, BoundaryCondition(self.bc))

    def sigma(self) -> np.ndarray:
        return self.timegrid.sample(lambda t: gaussian_pulse(t, self.sigma_center, self.sigma_width))

    def g_true_func(self):
        if self.g_true.startswith("file:"):
            grid = self.grid
            values = read_field_csv(Path(self.g_true[5:]))[0]
            if values.size != grid.size:
                raise ConfigError("g_true file does not match the grid")

            def from_file(x, y):
                ix = np.rint((np.asarray(x) - grid.x_min) / grid.hx).astype(int)
                iy = np.rint((np.asarray(y) - grid.y_min) / grid.hy).astype(int)
                return values.reshape(grid.shape)[iy, ix]

            return from_file
        return G_PRESETS[self.g_true]

    def reconstruction_config(self) -> ReconstructionConfig:
        return ReconstructionConfig(
            self.tikhonov_weight, self.relax, self.stop_eps, self.max_iter,
            self.noise_delta, self.rng_seed, region_mask(self.grid, self.region), self.adjoint_scheme,
        )


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str, typ, key: str):
    typ = typ if isinstance(typ, str) else typ.__name__
    try:
        if typ == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(text)
        if typ == "float":
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc
    return text


def gaussian_pulse(t, center: float = 0.4, width: float = 0.12):
    return np.exp(-((t - center) ** 2) / (2 * width**2)) / (math.sqrt(2 * math.pi) * width)


G_PRESETS = {
    "plane": lambda x, y: x + y + 1.0,
    "cosine": lambda x, y: np.cos(np.pi * x) * np.cos(np.pi * y) + 2.0,
}


def parse_region(spec: str) -> tuple[float, float, float, float] | None:
    """Removed rectangle ``(x0, x1, y0, y1)`` of a region spec, or ``None`` for the whole domain.

    Region specs describe the closed square minus a rectangle:

    * ``all`` - the whole closed square;
    * ``frame:a`` - minus the open square ``(a, 1-a)^2``;
    * ``corner:b`` - minus ``[0, b)^2``;
    * ``strip:b`` - minus ``[0, 1] x [0, b)``;
    * ``rect:x0,x1,y0,y1`` - minus the rectangle with those bounds.

    A removed rectangle is open on each side, except that a side lying on the
    domain boundary is closed (so ``corner:0.8`` also removes the edges at 0).
    """
    kind, _, args = spec.partition(":")
    try:
        nums = [float(a) for a in args.split(",")] if args else []
    except ValueError as exc:
        raise ConfigError(f"bad region {spec!r}") from exc
    shapes = {"all": 0, "frame": 1, "corner": 1, "strip": 1, "rect": 4}
    if kind not in shapes or len(nums) != shapes[kind]:
        raise ConfigError(f"bad region {spec!r}")
    if kind == "all":
        return None
    if kind == "frame":
        a = nums[0]
        rect = (a, 1 - a, a, 1 - a)
    elif kind == "corner":
        rect = (0.0, nums[0], 0.0, nums[0])
    elif kind == "strip":
        rect = (0.0, 1.0, 0.0, nums[0])
    else:
        rect = tuple(nums)
    x0, x1, y0, y1 = rect
    if not (x0 < x1 and y0 < y1):
        raise ConfigError(f"empty removed rectangle in {spec!r}")
    return rect


def region_mask(grid: Grid2D, spec: str) -> np.ndarray:
    """Node indicator of the observation region."""
    rect = parse_region(spec)
    if rect is None:
        return np.ones(grid.size, dtype=bool)
    x0, x1, y0, y1 = rect
    x, y = grid.coords

    def inside(v, lo, hi, vmin, vmax):
        above = v >= lo if lo <= vmin else v > lo
        below = v <= hi if hi >= vmax else v < hi
        return above & below

    removed = inside(x, x0, x1, grid.x_min, grid.x_max) & inside(y, y0, y1, grid.y_min, grid.y_max)
    mask = ~removed
    if not mask.any():
        raise ConfigError(f"region {spec!r} contains no grid node")
    return mask


# ---- presets -------------------------------------------------------------

EXAMPLE2_REGIONS = (
    "frame:0.2",
    "frame:0.05",
    "corner:0.8",
    "corner:0.95",
    "strip:0.8",
    "strip:0.95",
)


def _example1(name: str, alpha: float, target: str) -> ExperimentConfig:
    return ExperimentConfig(name=name, alpha=alpha, g_true=target, noise_delta=0.02, stop_eps=0.02 / 50)


def _example3(name: str, alpha: float, T: float, eps_div: float) -> ExperimentConfig:
    return ExperimentConfig(
        name=name, alpha=alpha, T=T, nt=int(round(256 * T)), cells=32,
        g_true="cosine", noise_delta=0.04, stop_eps=0.04 / eps_div,
    )


PRESETS: dict[str, tuple[ExperimentConfig, ...]] = {
    "example1-a12": (_example1("example1-a12", 1.2, "plane"),),
    "example1-a18": (_example1("example1-a18", 1.8, "plane"),),
    "example1-cos-a12": (_example1("example1-cos-a12", 1.2, "cosine"),),
    "example1-cos-a18": (_example1("example1-cos-a18", 1.8, "cosine"),),
    "example2-sweep": tuple(
        ExperimentConfig(
            name=f"example2-r{i + 1}", alpha=1.5, g_true="cosine", noise_delta=0.10, stop_eps=1e-3, region=region
        )
        for i, region in enumerate(EXAMPLE2_REGIONS)
    ),
    "example3-a099": (_example3("example3-a099", 0.99, 1.0, 200),),
    "example3-a101": (_example3("example3-a101", 1.01, 1.0, 200),),
    "example3-a199": (_example3("example3-a199", 1.99, 1.0, 1500),),
    "example3-T4": (_example3("example3-T4", 1.99, 4.0, 1500),),
}
PRESETS["example1"] = sum((PRESETS[k] for k in ("example1-a12", "example1-a18", "example1-cos-a12", "example1-cos-a18")), ())
PRESETS["example3"] = sum((PRESETS[k] for k in ("example3-a099", "example3-a101", "example3-a199", "example3-T4")), ())


def preset(name: str) -> tuple[ExperimentConfig, ...]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    return PRESETS[name]


# ---- CSV fields ----------------------------------------------------------


def write_field_csv(path: Path, grid: Grid2D, values: np.ndarray) -> None:
    """Write a field (``(N,)``) or a snapshot stack (``(nt+1, N)``).

    Layout: header ``nx,ny`` or ``nx,ny,nt``, then one line per grid row of
    comma-separated values, snapshots separated by a blank line.  Numbers use
    the shortest round-trip decimal form.
    """
    values = np.asarray(values, dtype=float)
    stack = values[None] if values.ndim == 1 else values
    header = f"{grid.nx},{grid.ny}" if values.ndim == 1 else f"{grid.nx},{grid.ny},{stack.shape[0] - 1}"
    blocks = []
    for snap in stack:
        rows = snap.reshape(grid.shape)
        blocks.append("\n".join(",".join(repr(float(v)) for v in row) for row in rows))
    Path(path).write_text(header + "\n" + "\n\n".join(blocks) + "\n")


def read_field_csv(path: Path) -> tuple[np.ndarray, tuple[int, ...]]:
    """Inverse of :func:`write_field_csv`; returns ``(values, header)``."""
    lines = Path(path).read_text().splitlines()
    try:
        header = tuple(int(v) for v in lines[0].split(","))
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"{path}: bad CSV header") from exc
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()]
    data = np.array(rows, dtype=float)
    nx, ny = header[:2]
    if len(header) == 2:
        return data.reshape(nx * ny), header
    return data.reshape(header[2] + 1, nx * ny), header


# ---- running -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    config: ExperimentConfig
    report: ReconstructionReport
    g_true: np.ndarray
    u_true: np.ndarray
    u_noisy: np.ndarray
    wall_time: float

    def metrics(self) -> dict:
        return {
            "name": self.config.name,
            "K": self.report.iterations,
            "Res": self.report.res,
            "stop_reason": self.report.stop_reason.value,
            "phi_history": self.report.objective_history,
            "seed": self.config.rng_seed,
            "config": self.config.to_text(),
            "wall_time": self.wall_time,
        }


def run_experiment(config: ExperimentConfig, callback=None) -> ExperimentResult:
    """Synthesize data, add noise and reconstruct the spatial factor."""
    start = time.perf_counter()
    grid, tg = config.grid, config.timegrid
    spec = config.operator_spec
    sigma = config.sigma()
    gfunc = config.g_true_func()
    g_true = grid.sample(gfunc)
    u_true = synthetic_data(spec, grid, config.alpha, tg, sigma, gfunc, fine=config.fine_data)
    u_noisy = add_noise(u_true, config.noise_delta, config.rng_seed)
    rcfg = config.reconstruction_config()
    model = ForwardModel(assemble(grid, spec), config.alpha, tg, sigma, rcfg.region_mask, rcfg.adjoint_scheme)
    report = reconstruct(u_noisy, sigma, np.full(grid.size, config.g0), rcfg, model, g_true=g_true, callback=callback)
    return ExperimentResult(config, report, g_true, u_true, u_noisy, time.perf_counter() - start)


def write_artifacts(result: ExperimentResult, out: Path) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    grid = result.config.grid
    write_field_csv(out / "u_true.csv", grid, result.u_true)
    write_field_csv(out / "u_noisy.csv", grid, result.u_noisy)
    write_field_csv(out / "g_true.csv", grid, result.g_true)
    write_field_csv(out / "g_recon.csv", grid, result.report.g_final)
    (out / "config.txt").write_text(result.config.to_text())
    (out / "metrics.json").write_text(json.dumps(result.metrics(), indent=2) + "\n")
