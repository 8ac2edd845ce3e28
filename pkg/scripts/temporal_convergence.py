"""Temporal error of the stepper against the eigen-expansion as the step count doubles."""

from __future__ import annotations

import argparse

from fracinv.experiments import gaussian_pulse
from fracinv.grids import Grid2D, TimeGrid, spacetime_norm
from fracinv.operator import EllipticOperatorSpec, assemble, eigendecompose
from fracinv.spectral import solve_forward_spectral
from fracinv.timestepping import SeparatedSource, solve_forward


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cells", type=int, default=16)
    p.add_argument("--alphas", type=float, nargs="+", default=[0.5, 1.2, 1.8])
    p.add_argument("--steps", type=int, nargs="+", default=[64, 128, 256, 512])
    args = p.parse_args()

    grid = Grid2D(args.cells + 1, args.cells + 1)
    op = assemble(grid, EllipticOperatorSpec())
    basis = eigendecompose(op, grid.size)
    g = grid.sample(lambda x, y: x + y + 1)
    print(f"{'alpha':>5s} {'nt':>5s} {'rel. error':>11s} {'ratio':>6s}")
    for alpha in args.alphas:
        prev = None
        for nt in args.steps:
            tg = TimeGrid(1.0, nt)
            src = SeparatedSource(tg.sample(gaussian_pulse), g)
            ref = solve_forward_spectral(basis, src, alpha, tg).field
            err = spacetime_norm(grid, tg, solve_forward(op, alpha, tg, src) - ref) / spacetime_norm(grid, tg, ref)
            ratio = f"{err / prev:6.3f}" if prev else ""
            print(f"{alpha:5.2f} {nt:5d} {err:11.3e} {ratio}")
            prev = err


if __name__ == "__main__":
    main()
