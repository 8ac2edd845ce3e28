"""Self-contained numerical verification suites.

Each suite returns a list of :class:`Check` records holding the measured value
and the tolerance it is held to.  The CLI ``verify`` command and the acceptance
tests both run these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special

from fracinv.experiments import gaussian_pulse
from fracinv.grids import Grid2D, TimeGrid, spacetime_inner, spacetime_norm
from fracinv.inverse import ForwardModel, invisible_source, objective, gradient, ReconstructionConfig
from fracinv.mlf import mittag_leffler
from fracinv.operator import EllipticOperatorSpec, assemble, eigendecompose
from fracinv.spectral import (
    LaplaceProbe,
    LaplaceTransform,
    ip1prime_companion,
    laplace_residual_check,
    solve_forward_spectral,
    verify_c5_solution,
)
from fracinv.timestepping import SeparatedSource, adjoint_time_weights, solve_adjoint, solve_forward


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    @property
    def informational(self) -> bool:
        return math.isnan(self.tolerance)

    def line(self) -> str:
        if self.informational:
            return f"INFO  {self.name}: {self.value:.3e}"
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.3e} (tolerance {self.tolerance:.1e})"


def check(name: str, value: float, tolerance: float) -> Check:
    value = float(value)
    return Check(name, value, tolerance, bool(value <= tolerance))


def info(name: str, value: float) -> Check:
    """A measured quantity reported without a pass/fail threshold."""
    return Check(name, float(value), math.nan, True)


def check_at_least(name: str, value: float, bound: float) -> Check:
    """Pass when ``value >= bound``."""
    value = float(value)
    return Check(name, value, bound, bool(value >= bound))


def smooth_bump(t, a: float = 0.1, b: float = 0.9):
    """C-infinity bump supported in ``(a, b)`` with peak value 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = (t > a) & (t < b)
    s = (t[m] - a) / (b - a)
    out[m] = np.exp(4.0 - 1.0 / (s * (1.0 - s)))
    return out


def smooth_bump_derivative(t, a: float = 0.1, b: float = 0.9):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = (t > a) & (t < b)
    s = (t[m] - a) / (b - a)
    out[m] = np.exp(4.0 - 1.0 / (s * (1.0 - s))) * (1.0 - 2.0 * s) / (s * (1.0 - s)) ** 2 / (b - a)
    return out


# Values of E_{alpha,beta}(z) from the defining series summed in extended precision.
MLF_REFERENCE = (
    # (z, alpha, beta, value)
    (-0.5, 0.5, 1.0, 0.6156903441929259),
    (-3.0, 0.5, 1.0, 0.17900115118138996),
    (-10.0, 0.7, 1.0, 0.03617326554230916),
    (-2.0, 1.5, 1.5, 0.4134096590549082),
    (-30.0, 1.2, 1.0, -0.006189775580038953),
    (-50.0, 1.8, 1.0, -0.17643515585736697),
    (-15.0, 0.8, 1.0, 0.015843800747790796),
    (-8.0, 1.2, 2.2, 0.13011254888403712),
    (-20.0, 1.5, 1.5, 0.006198501246861342),
    (3.0, 0.9, 1.0, 32.92189717685083),
    (10.0, 1.3, 1.0, 274.71183265837743),
    (-4.0, 1.99, 1.99, 0.4479375124171037),
    (-4.0, 0.3, 1.3, 0.20837456392112083),
    (-6.0, 0.99, 1.0, 0.005001144872513182),
    (-6.0, 1.01, 1.0, -9.39809605393338e-05),
    (2.5, 1.7, 2.7, 0.9428703189282066),
    (-1.1450336728854529, 1.8, 1.8, 0.7936301824988831),
)


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def suite_mlf() -> list[Check]:
    out = []
    x = np.linspace(-20.0, 20.0, 81)
    xs = x[x != 0]
    out.append(check("E_{1,1}(z) = exp(z)", _rel(mittag_leffler(x, 1.0, 1.0), np.exp(x)), 1e-10))
    out.append(check("E_{1,2}(z) = (exp(z)-1)/z", _rel(mittag_leffler(xs, 1.0, 2.0), np.expm1(xs) / xs), 1e-10))
    # cos has zeros, so compare on the scale of the function (|cos| <= 1)
    c = mittag_leffler(-(x**2), 2.0, 1.0)
    out.append(check("E_{2,1}(-x^2) = cos x", float(np.max(np.abs(c - np.cos(x)))), 1e-10))
    s = mittag_leffler(-(xs**2), 2.0, 2.0)
    out.append(check("E_{2,2}(-x^2) = sin x / x", float(np.max(np.abs(s - np.sin(xs) / xs))), 1e-10))
    z = np.linspace(-6.0, 2.0, 41)
    out.append(check("E_{1/2,1}(z) = erfcx(-z)", _rel(mittag_leffler(z, 0.5, 1.0), scipy.special.erfcx(-z)), 1e-10))

    worst = 0.0
    for alpha in (0.5, 1.0, 1.2, 1.5, 1.8):
        for beta in (0.7, 1.0, 1.5, 2.3):
            for zz in np.linspace(-40.0, 5.0, 19):
                lhs = float(mittag_leffler(zz, alpha, beta))
                rhs = zz * float(mittag_leffler(zz, alpha, alpha + beta)) + 1.0 / math.gamma(beta)
                scale = max(abs(lhs), abs(rhs - 1.0 / math.gamma(beta)), 1.0 / math.gamma(beta))
                worst = max(worst, abs(lhs - rhs) / scale)
    out.append(check("recurrence E_{a,b} = z E_{a,a+b} + 1/Gamma(b)", worst, 1e-9))

    worst = 0.0
    for alpha in (0.3, 0.7, 1.3, 1.9):
        for beta in (1.0, alpha):
            lo = float(mittag_leffler(-5.0 * (1 - 1e-12), alpha, beta))
            hi = float(mittag_leffler(-5.0 * (1 + 1e-12), alpha, beta))
            worst = max(worst, abs(lo - hi) / max(abs(lo), 1e-300))
    out.append(check("continuity across the series radius", worst, 1e-9))

    if MLF_REFERENCE:
        err = max(abs(float(mittag_leffler(zz, a, b)) - v) / abs(v) for zz, a, b, v in MLF_REFERENCE)
        out.append(check("extended-precision spot values", err, 1e-10))
    return out


def suite_adjoint(cells: int = 16, nt: int = 64, alphas=(0.5, 1.2, 1.5, 1.8), seed: int = 0, directions: int = 20) -> list[Check]:
    """Adjoint identity and the finite-difference gradient check."""
    rng = np.random.default_rng(seed)
    grid = Grid2D(cells + 1, cells + 1)
    tg = TimeGrid(1.0, nt)
    op = assemble(grid, EllipticOperatorSpec())
    sigma = tg.sample(gaussian_pulse)
    x, y = grid.coords
    mask = ~((x > 0.1) & (x < 0.9) & (y > 0.1) & (y < 0.9))
    out = []
    for alpha in alphas:
        h = rng.standard_normal(grid.size)
        w = rng.standard_normal((nt + 1, grid.size)) * mask
        u = solve_forward(op, alpha, tg, SeparatedSource(sigma, h))
        lhs = spacetime_inner(grid, tg, u, w)
        for scheme in ("discrete", "continuous"):
            z = solve_adjoint(op, alpha, tg, w, scheme)
            rhs = float((adjoint_time_weights(tg, scheme) * sigma) @ (z @ (grid.weights * h)))
            err = abs(lhs - rhs) / abs(lhs)
            if scheme == "discrete":
                out.append(check(f"adjoint identity alpha={alpha}", err, 1e-3))
            else:
                out.append(info(f"continuous-pairing adjoint identity alpha={alpha}", err))

        model = ForwardModel(op, alpha, tg, sigma, mask)
        cfg = ReconstructionConfig(region_mask=mask)
        g_true = grid.sample(lambda x, y: x + y + 1)
        u_delta = model.forward(g_true)
        worst = 0.0
        for _ in range(directions):
            g = 2.0 + rng.standard_normal(grid.size)
            d = rng.standard_normal(grid.size)
            eps = 1e-5
            fd = (objective(g + eps * d, u_delta, sigma, cfg, model) - objective(g - eps * d, u_delta, sigma, cfg, model)) / (2 * eps)
            an = float(np.sum(grid.weights * gradient(g, u_delta, sigma, cfg, model) * d))
            worst = max(worst, abs(fd - an) / max(abs(an), 1e-300))
        out.append(check(f"gradient vs central differences alpha={alpha}", worst, 1e-4))
    return out


def suite_laplace(
    cells: int = 16, T: float = 12.0, nt: int = 3072, alphas=(0.5, 1.2, 1.8), ps=(0.5, 1.0, 2.0, 5.0, 10.0)
) -> list[Check]:
    """Laplace-domain residual of time-stepped solutions with a compactly supported pulse.

    The horizon is long enough that the transform tail beyond ``T`` is negligible
    for every probe.
    """
    grid = Grid2D(cells + 1, cells + 1)
    tg = TimeGrid(T, nt)
    op = assemble(grid, EllipticOperatorSpec())
    src = SeparatedSource(tg.sample(lambda t: smooth_bump(t, 0.05, 0.95)), grid.sample(lambda x, y: x + y + 1))
    out = []
    for alpha in alphas:
        u = solve_forward(op, alpha, tg, src)
        for p in ps:
            rep = laplace_residual_check(u, src, op, alpha, LaplaceProbe(p), tg)
            out.append(check(f"Laplace residual alpha={alpha} p={p} (tail {rep.tail:.0e})", rep.residual + rep.tail, 5e-2))
    return out


def suite_spectral(cells: int = 64, nt: int = 256, modes: int = 200, alphas=(0.5, 1.2, 1.8)) -> list[Check]:
    """Time stepping against the eigen-expansion on Example-1 data, plus the refinement ratio.

    The spectral reference is computed once on ``2 nt`` steps and subsampled.
    The ratio uses the source projected on the retained modes so that spatial
    truncation does not floor the temporal error.
    """
    grid = Grid2D(cells + 1, cells + 1)
    op = assemble(grid, EllipticOperatorSpec())
    basis = eigendecompose(op, modes)
    g = grid.sample(lambda x, y: x + y + 1)
    g_proj = basis.synthesize(basis.coefficients(g))
    fine = TimeGrid(1.0, 4 * nt)
    out = []
    for alpha in alphas:
        ref = solve_forward_spectral(basis, SeparatedSource(fine.sample(gaussian_pulse), g_proj), alpha, fine).field
        errs = {}
        for n in (nt, 2 * nt):
            tg = TimeGrid(1.0, n)
            for label, gg in (("full", g), ("proj", g_proj)):
                if label == "full" and n != nt:
                    continue
                u = solve_forward(op, alpha, tg, SeparatedSource(tg.sample(gaussian_pulse), gg))
                r = ref[:: (4 * nt) // n]
                errs[label, n] = spacetime_norm(grid, tg, u - r) / spacetime_norm(grid, tg, r)
        out.append(check(f"stepper vs spectral alpha={alpha} nt={nt}", errs["full", nt], 1e-2))
        out.append(check(f"error ratio nt {nt}->{2 * nt} alpha={alpha}", errs["proj", 2 * nt] / errs["proj", nt], 0.7))
    return out


def suite_invisible(cells: int = 64, nt: int = 512, alphas=(1.5, 1.0)) -> list[Check]:
    """A source supported in a corner block whose solution never reaches the boundary frame."""
    grid = Grid2D(cells + 1, cells + 1)
    tg = TimeGrid(1.0, nt)
    op = assemble(grid, EllipticOperatorSpec())
    x, y = grid.coords
    mask = ~((x > 0.1) & (x < 0.9) & (y > 0.1) & (y < 0.9))
    phi = smooth_bump(x, 0.15, 0.45) * smooth_bump(y, 0.15, 0.45)
    u0 = np.outer(tg.sample(lambda t: smooth_bump(t, 0.1, 0.9)), phi)
    out = []
    for alpha in alphas:
        f0, u = invisible_source(u0, op, alpha, tg, mask)
        ratio = spacetime_norm(grid, tg, u, mask) / spacetime_norm(grid, tg, u)
        out.append(check(f"invisible source |u|_Q'/|u|_Q alpha={alpha}", ratio, 1e-3))
        out.append(check_at_least(f"invisible source |f0|_Q alpha={alpha}", spacetime_norm(grid, tg, f0), 1e-6))
        out.append(check(f"invisible source |u - u0|/|u0| alpha={alpha}", spacetime_norm(grid, tg, u - u0) / spacetime_norm(grid, tg, u0), 1e-8))
    return out


def suite_c5(cells: int = 32, nt: int = 256) -> list[Check]:
    """Order-one companion identity: the source beta' g + beta A g reproduces beta g exactly."""
    grid = Grid2D(cells + 1, cells + 1)
    tg = TimeGrid(1.0, nt)
    op = assemble(grid, EllipticOperatorSpec())
    basis = eigendecompose(op, min(grid.size, 40))
    beta = tg.sample(smooth_bump)
    out = []
    for n in (1, 4):
        dev = verify_c5_solution(op, beta, basis.eigenvectors[n], tg)
        out.append(check(f"beta g reproduced, g = phi_{n + 1}, step-averaged beta'", dev, 1e-3))
    dev_nodal = verify_c5_solution(op, beta, basis.eigenvectors[1], tg, sigma=tg.sample(smooth_bump_derivative))
    out.append(info("same with pointwise beta' (first order in tau)", dev_nodal))

    # companion built from transforms matches A g mode by mode
    fine = TimeGrid(1.0, 8192)
    s_hat = LaplaceTransform(fine.sample(smooth_bump_derivative), fine)
    b_hat = LaplaceTransform(fine.sample(smooth_bump), fine)
    small = eigendecompose(op, 30)
    g = small.eigenvectors[1:].sum(axis=0)
    h = ip1prime_companion(small, s_hat, b_hat, g)
    coef_h = small.coefficients(h)[1:]
    coef_ag = small.eigenvalues[1:] * small.coefficients(g)[1:]
    out.append(check("companion coefficients h_n = lambda_n g_n", _rel(coef_h, coef_ag), 1e-6))

    # data equivalence: sigma g + beta h is invisible on a frame when g vanishes there
    full = eigendecompose(op, grid.size)
    x, y = grid.coords
    mask = ~((x > 0.15) & (x < 0.85) & (y > 0.15) & (y < 0.85))
    gb = smooth_bump(x, 0.2, 0.8) * smooth_bump(y, 0.2, 0.8)
    sig = tg.sample(smooth_bump_derivative)
    hb = ip1prime_companion(full, LaplaceTransform(sig, tg), LaplaceTransform(beta, tg), gb)
    u_pair = solve_forward(op, 1.0, tg, np.outer(sig, gb) + np.outer(beta, hb))
    u_sigma = solve_forward(op, 1.0, tg, SeparatedSource(sig, gb))
    ratio = spacetime_norm(grid, tg, u_pair, mask) / spacetime_norm(grid, tg, u_sigma)
    out.append(check("companion pair |u|_Q' / |u(sigma g)|_Q", ratio, 1e-2))
    return out


SUITES = {
    "mlf": suite_mlf,
    "adjoint": suite_adjoint,
    "laplace": suite_laplace,
    "spectral": suite_spectral,
    "invisible": suite_invisible,
    "c5": suite_c5,
}


def run_suites(names) -> list[tuple[str, list[Check]]]:
    return [(name, SUITES[name]()) for name in names]
