r"""Tikhonov-regularized recovery of the spatial source factor from interior data.

For data :math:`u^\delta` observed on :math:`(0,T)\times\Omega'` and a known
temporal factor :math:`\sigma`, minimize

.. math::

    \Phi(g) = \|u(g) - u^\delta\|^2_{L^2((0,T)\times\Omega')} + \rho_{reg}\|g\|^2_{L^2(\Omega)}

with the relaxed fixed-point update

.. math::

    g_{k+1} = \frac{M}{M+\rho_{reg}} g_k - \frac{1}{M+\rho_{reg}} \int_0^T \sigma z(g_k)\,dt,

where :math:`z` is the adjoint state driven by the masked residual.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from fracinv.errors import DivergenceError, DomainError
from fracinv.grids import Grid2D, TimeGrid, l2_norm, spacetime_norm
from fracinv.operator import DiscreteOperator, EllipticOperatorSpec, assemble
from fracinv.timestepping import (
    FractionalStepper,
    SeparatedSource,
    adjoint_time_weights,
    caputo_apply,
    solve_adjoint,
    solve_forward,
)

log = logging.getLogger(__name__)

NOISE_STREAM = 0
"""Stream index of the measurement noise within an experiment's seed tree."""


def make_rng(seed: int, stream: int = NOISE_STREAM) -> np.random.Generator:
    """Counter-based generator for one named stream derived from ``seed``.

    Streams are children ``SeedSequence(seed, spawn_key=(stream,))`` driving a
    Philox bit generator, so adding a stream never perturbs the others.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclass(frozen=True, eq=False)
class ReconstructionConfig:
    tikhonov_weight: float = 1e-5
    relax: float = 4.0
    stop_eps: float = 4e-4
    max_iter: int = 2000
    noise_delta: float = 0.0
    rng_seed: int = 0
    region_mask: np.ndarray | None = field(default=None, repr=False)
    """Boolean indicator of the observation region; ``None`` means the whole grid."""
    adjoint_scheme: str = "discrete"
    divergence_factor: float = 1e6

    def __post_init__(self) -> None:
        if not self.tikhonov_weight > 0:
            raise DomainError(f"Tikhonov weight must be positive: {self.tikhonov_weight}")
        if not self.relax > 0:
            raise DomainError(f"relaxation constant must be positive: {self.relax}")
        if not 0 < self.stop_eps < 1:
            raise DomainError(f"stopping tolerance must lie in (0, 1): {self.stop_eps}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be positive: {self.max_iter}")
        if self.noise_delta < 0:
            raise DomainError(f"noise level must be nonnegative: {self.noise_delta}")
        if self.adjoint_scheme not in ("discrete", "continuous"):
            raise DomainError(f"unknown adjoint scheme {self.adjoint_scheme!r}")
        if self.region_mask is not None:
            mask = np.asarray(self.region_mask, dtype=bool)
            if not mask.any():
                raise DomainError("observation region is empty")
            object.__setattr__(self, "region_mask", mask)


class StopReason(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    iterations: int
    res: float | None
    """Relative error against the true factor, when one was supplied."""
    objective_history: list[float]
    g_final: np.ndarray
    stop_reason: StopReason


class ForwardModel:
    """Solver context shared by objective, gradient and the iteration.

    Holds the operator, the temporal factor and a cached factorization so that
    every forward and adjoint solve reuses one LU decomposition.
    """

    def __init__(
        self,
        op: DiscreteOperator,
        alpha: float,
        timegrid: TimeGrid,
        sigma: np.ndarray,
        region_mask: np.ndarray | None = None,
        adjoint_scheme: str = "discrete",
    ) -> None:
        self.op = op
        self.alpha = alpha
        self.timegrid = timegrid
        self.sigma = np.asarray(sigma, dtype=float)
        if self.sigma.shape != (timegrid.nt + 1,):
            raise DomainError("sigma does not match the time grid")
        mask = np.ones(op.grid.size, dtype=bool) if region_mask is None else np.asarray(region_mask, dtype=bool)
        if mask.shape != (op.grid.size,) or not mask.any():
            raise DomainError("observation mask must be a nonempty per-node indicator")
        self.mask = mask
        self.adjoint_scheme = adjoint_scheme
        self.stepper = FractionalStepper(op, alpha, timegrid, allow_wave=alpha == 2.0)
        self._time_weights = adjoint_time_weights(timegrid, adjoint_scheme)

    @property
    def grid(self) -> Grid2D:
        return self.op.grid

    def forward(self, g: np.ndarray) -> np.ndarray:
        return self.stepper.solve(SeparatedSource(self.sigma, g))

    def adjoint(self, residual: np.ndarray) -> np.ndarray:
        return solve_adjoint(
            self.op, self.alpha, self.timegrid, residual * self.mask, self.adjoint_scheme, self.stepper
        )

    def sigma_integral(self, z: np.ndarray) -> np.ndarray:
        r""":math:`\int_0^T \sigma z\,dt` with the quadrature matching the adjoint scheme."""
        return (self._time_weights * self.sigma) @ z

    def misfit(self, u: np.ndarray, u_delta: np.ndarray) -> float:
        return spacetime_norm(self.grid, self.timegrid, u - u_delta, self.mask) ** 2

    def evaluate(self, g: np.ndarray, u_delta: np.ndarray, tikhonov_weight: float) -> tuple[float, np.ndarray]:
        """Objective and gradient at ``g`` from one forward and one adjoint solve."""
        u = self.forward(g)
        phi = self.misfit(u, u_delta) + tikhonov_weight * l2_norm(self.grid, g) ** 2
        z = self.adjoint(u - u_delta)
        grad = 2.0 * (self.sigma_integral(z) + tikhonov_weight * g)
        return phi, grad


def add_noise(u: np.ndarray, delta: float, seed: int) -> np.ndarray:
    """Multiplicative uniform noise ``(1 + delta * U(-1, 1)) * u``, reproducible per seed."""
    if delta < 0:
        raise DomainError(f"noise level must be nonnegative: {delta}")
    u = np.asarray(u, dtype=float)
    if delta == 0:
        return u.copy()
    return (1.0 + delta * make_rng(seed).uniform(-1.0, 1.0, size=u.shape)) * u


def objective(g, u_delta, sigma, config: ReconstructionConfig, model: ForwardModel) -> float:
    _check_model(sigma, config, model)
    u = model.forward(g)
    return model.misfit(u, u_delta) + config.tikhonov_weight * l2_norm(model.grid, g) ** 2


def gradient(g, u_delta, sigma, config: ReconstructionConfig, model: ForwardModel) -> np.ndarray:
    """Gradient of the objective in the weighted L2 inner product of the grid."""
    _check_model(sigma, config, model)
    return model.evaluate(g, u_delta, config.tikhonov_weight)[1]


def _check_model(sigma, config: ReconstructionConfig, model: ForwardModel) -> None:
    if sigma is not None and not np.array_equal(np.asarray(sigma, dtype=float), model.sigma):
        raise DomainError("temporal factor differs from the one the solver context was built with")
    if config.region_mask is not None and not np.array_equal(config.region_mask, model.mask):
        raise DomainError("observation mask differs from the one the solver context was built with")


def relative_error(grid: Grid2D, g: np.ndarray, g_true: np.ndarray) -> float:
    denom = l2_norm(grid, g_true)
    if denom == 0.0:
        raise DomainError("reference field has zero norm")
    return l2_norm(grid, np.asarray(g) - g_true) / denom


def reconstruct(
    u_delta: np.ndarray,
    sigma,
    g0: np.ndarray,
    config: ReconstructionConfig,
    model: ForwardModel,
    g_true: np.ndarray | None = None,
    callback=None,
) -> ReconstructionReport:
    """Relaxed gradient iteration until ``|g_{k+1} - g_k| < eps |g_k|`` or ``max_iter``.

    ``callback(k, g_k, phi_k)`` is invoked after each objective evaluation.
    """
    _check_model(sigma, config, model)
    g = np.array(g0, dtype=float)
    if g.shape != (model.grid.size,) or not np.all(np.isfinite(g)):
        raise DomainError("initial guess must be a finite field on the grid")
    rho, relax = config.tikhonov_weight, config.relax
    grid = model.grid
    history: list[float] = []
    reason = StopReason.MAX_ITER
    k = 0
    while k < config.max_iter:
        phi, grad = model.evaluate(g, u_delta, rho)
        history.append(phi)
        if callback is not None:
            callback(k, g, phi)
        if not math.isfinite(phi) or phi > config.divergence_factor * history[0]:
            raise DivergenceError("objective blew up", step=k, history=history)
        g_next = g - grad / (2.0 * (relax + rho))
        k += 1
        step = l2_norm(grid, g_next - g)
        size = l2_norm(grid, g)
        g = g_next
        if step < config.stop_eps * size:
            reason = StopReason.CONVERGED
            break
    res = relative_error(grid, g, g_true) if g_true is not None else None
    log.info("reconstruction stopped after %d iterations (%s), res=%s", k, reason.value, res)
    return ReconstructionReport(k, res, history, g, reason)


def optimality_residual(g: np.ndarray, u_delta: np.ndarray, config: ReconstructionConfig, model: ForwardModel) -> float:
    r"""Norm of :math:`\rho_{reg} g + \int_0^T \sigma z(g)\,dt`, zero at the minimizer."""
    u = model.forward(g)
    z = model.adjoint(u - u_delta)
    return l2_norm(model.grid, config.tikhonov_weight * g + model.sigma_integral(z))


def synthetic_data(
    spec: EllipticOperatorSpec,
    grid: Grid2D,
    alpha: float,
    timegrid: TimeGrid,
    sigma: np.ndarray,
    g_true_func,
    fine: bool = False,
) -> np.ndarray:
    """Noise-free data for ``g_true_func(x, y)``; ``fine`` solves on the 2x grid and injects back."""
    if not fine:
        op = assemble(grid, spec)
        return solve_forward(op, alpha, timegrid, SeparatedSource(sigma, grid.sample(g_true_func)), alpha == 2.0)
    fgrid = grid.refine()
    fop = assemble(fgrid, spec)
    u = solve_forward(fop, alpha, timegrid, SeparatedSource(sigma, fgrid.sample(g_true_func)), alpha == 2.0)
    return grid.restrict_from(fgrid, u)


def invisible_source(
    u0: np.ndarray,
    op: DiscreteOperator,
    alpha: float,
    timegrid: TimeGrid,
    region_mask: np.ndarray,
    atol: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    r"""Source :math:`f_0 = \rho\,\partial_t^\alpha u_0 + A u_0` and the solution it generates.

    ``u0`` must vanish on the observation region and at ``t = 0`` (and at the
    first step when ``alpha > 1``, so the initial velocity is zero).  Its source
    is nonzero, yet the data it produces on the region is zero.
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (timegrid.nt + 1, op.grid.size):
        raise DomainError("u0 does not match the grids")
    mask = np.asarray(region_mask, dtype=bool)
    scale = max(float(np.abs(u0).max()), 1e-300)
    if np.abs(u0[:, mask]).max(initial=0.0) > atol * scale:
        raise DomainError("u0 does not vanish on the observation region")
    head = 2 if alpha > 1 else 1
    if np.abs(u0[:head]).max() > atol * scale:
        raise DomainError("u0 violates the zero initial conditions")
    f0 = op.density * caputo_apply(u0, alpha, timegrid) + op.apply(u0)
    u_check = solve_forward(op, alpha, timegrid, f0, allow_wave=alpha == 2.0)
    return f0, u_check
