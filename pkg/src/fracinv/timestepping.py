r"""Implicit L1-type time stepping for :math:`\rho\,\partial_t^\alpha u + A_q u = f`.

For :math:`\alpha\in(0,1)` the Caputo derivative is the L1 scheme

.. math::

    \partial_t^\alpha u(t_n) \approx \frac{\tau^{-\alpha}}{\Gamma(2-\alpha)}
        \sum_{k=0}^{n-1} b_k (u^{n-k} - u^{n-k-1}),
    \qquad b_k = (k+1)^{1-\alpha} - k^{1-\alpha}.

For :math:`\alpha\in(1,2)` the same kernel of order :math:`\alpha-1` acts on
backward first differences (so ``b_k = (k+1)^{2-\alpha} - k^{2-\alpha}`` and the
increments are second differences, with zero initial velocity).  Both reduce to
backward Euler at :math:`\alpha=1`.  The memory term is the full O(nt^2)
convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from fracinv.errors import DivergenceError, DomainError, LinearSolveError
from fracinv.grids import TimeGrid
from fracinv.operator import DiscreteOperator


@dataclass(frozen=True)
class CaputoWeights:
    alpha: float
    b: np.ndarray
    """Convolution coefficients ``b_0 = 1, b_1, ...`` (one per lag)."""
    prefactor: float
    """``1/Gamma(2-alpha)`` below one, ``1/Gamma(3-alpha)`` above; multiply by ``tau**-alpha``."""

    @property
    def second_order(self) -> bool:
        """True when the increments are second differences (alpha > 1)."""
        return self.alpha > 1.0

    @cached_property
    def lag_coefficients(self) -> np.ndarray:
        """``c_j`` with ``D^n = prefactor * tau**-alpha * sum_j c_j u^{n-j}`` for zero initial data."""
        kernel = [1.0, -2.0, 1.0] if self.second_order else [1.0, -1.0]
        return np.convolve(self.b, kernel)[: self.b.size]

    def scale(self, tau: float) -> float:
        return self.prefactor * tau ** (-self.alpha)


def caputo_weights(alpha: float, nt: int, allow_wave: bool = False) -> CaputoWeights:
    """Weights of the discrete Caputo derivative of order ``alpha`` on ``nt`` steps.

    ``allow_wave`` admits ``alpha = 2`` (implicit second difference).
    """
    upper_ok = alpha < 2.0 or (allow_wave and alpha == 2.0)
    if not (alpha > 0.0 and upper_ok):
        raise DomainError(f"Caputo order must lie in (0, 2): {alpha}")
    if nt < 1:
        raise DomainError(f"need at least one step: {nt}")

    k = np.arange(nt, dtype=float)
    if alpha == 1.0:
        b = np.zeros(nt)
        b[0] = 1.0
        return CaputoWeights(alpha, b, 1.0)
    if alpha < 1.0:
        b = (k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)
        return CaputoWeights(alpha, b, 1.0 / math.gamma(2.0 - alpha))
    if alpha == 2.0:
        b = np.zeros(nt)
        b[0] = 1.0
        return CaputoWeights(alpha, b, 1.0)
    b = (k + 1.0) ** (2.0 - alpha) - k ** (2.0 - alpha)
    return CaputoWeights(alpha, b, 1.0 / math.gamma(3.0 - alpha))


def caputo_apply(series: np.ndarray, alpha: float, timegrid: TimeGrid) -> np.ndarray:
    """Discrete Caputo derivative of ``series`` (leading axis = time) at every node.

    Uses the same weights as :func:`solve_forward`.  The value at ``t_0`` is 0.
    For ``alpha > 1`` the initial velocity is taken to be zero.
    """
    u = np.asarray(series, dtype=float)
    if u.shape[0] != timegrid.nt + 1:
        raise DomainError(f"series has {u.shape[0]} samples, time grid has {timegrid.nt + 1}")
    w = caputo_weights(alpha, timegrid.nt, allow_wave=True)
    d = np.diff(u, axis=0)
    if w.second_order:
        d = np.diff(np.concatenate([np.zeros_like(d[:1]), d]), axis=0)
    out = np.zeros_like(u)
    flat = d.reshape(d.shape[0], -1)
    conv = np.empty_like(flat)
    for col in range(flat.shape[1]):
        conv[:, col] = np.convolve(w.b, flat[:, col])[: flat.shape[0]]
    out[1:] = w.scale(timegrid.tau) * conv.reshape(d.shape)
    return out


@dataclass(frozen=True, eq=False)
class SeparatedSource:
    """Source ``sigma(t) g(x)`` sampled on the time nodes and the grid nodes."""

    sigma: np.ndarray
    g: np.ndarray

    def __post_init__(self) -> None:
        sigma = np.asarray(self.sigma, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if not (np.all(np.isfinite(sigma)) and np.all(np.isfinite(g))):
            raise DomainError("source has non-finite entries")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "g", g)

    def field(self) -> np.ndarray:
        return np.outer(self.sigma, self.g)

    def compactly_supported(self, tail: int = 3, rtol: float = 1e-12) -> bool:
        """True when sigma vanishes on the last ``tail`` time nodes."""
        peak = np.abs(self.sigma).max()
        return bool(peak == 0.0 or np.all(np.abs(self.sigma[-tail:]) <= rtol * peak))


class FractionalStepper:
    """Forward solver with a cached factorization, reusable across right-hand sides."""

    def __init__(self, op: DiscreteOperator, alpha: float, timegrid: TimeGrid, allow_wave: bool = False) -> None:
        self.op = op
        self.alpha = alpha
        self.timegrid = timegrid
        self.weights = caputo_weights(alpha, timegrid.nt, allow_wave=allow_wave)
        self.scale = self.weights.scale(timegrid.tau)
        self.coeffs = self.weights.lag_coefficients
        self.solver = op.factorize(self.scale * self.coeffs[0])

    def solve(self, source, check_residual: bool = True) -> np.ndarray:
        """Solve with zero initial data; ``source`` is a :class:`SeparatedSource` or an ``(nt+1, N)`` array."""
        op, nt = self.op, self.timegrid.nt
        idx = op.free_index
        wts = op.weights[idx]
        mass = op.mass[idx]
        if isinstance(source, SeparatedSource):
            if source.sigma.shape != (nt + 1,) or source.g.shape != (op.grid.size,):
                raise DomainError("source does not match the grids")
            wg = wts * source.g[idx]

            def rhs(n):
                return source.sigma[n] * wg
        else:
            f = np.asarray(source, dtype=float)
            if f.shape != (nt + 1, op.grid.size):
                raise DomainError(f"source has shape {f.shape}, expected {(nt + 1, op.grid.size)}")
            fw = f[:, idx] * wts

            def rhs(n):
                return fw[n]

        u = np.zeros((nt + 1, idx.size))
        c = self.coeffs
        for n in range(1, nt + 1):
            b = rhs(n)
            if n > 1:
                hist = c[n - 1 : 0 : -1] @ u[1:n]
                b = b - self.scale * mass * hist
            u[n] = self.solver.solve_weighted(b)
            if not np.all(np.isfinite(u[n])):
                raise DivergenceError("non-finite solution", step=n)
            if check_residual and n == nt:
                lhs = self.solver.matrix @ u[n]
                res = np.linalg.norm(lhs - b) / max(np.linalg.norm(b), 1e-300)
                if res > 1e-10 and np.linalg.norm(b) > 0:
                    raise LinearSolveError(f"time step {n} missed its residual target", res)

        out = np.zeros((nt + 1, op.grid.size))
        out[:, idx] = u
        return out


def solve_forward(
    op: DiscreteOperator, alpha: float, timegrid: TimeGrid, source, allow_wave: bool = False
) -> np.ndarray:
    """Solve ``rho d_t^alpha u + A u = f`` with zero initial data; returns ``(nt+1, N)``."""
    return FractionalStepper(op, alpha, timegrid, allow_wave).solve(source)


def adjoint_time_weights(timegrid: TimeGrid, scheme: str = "discrete") -> np.ndarray:
    """Quadrature weights for ``int_0^T sigma z dt`` matching an adjoint scheme."""
    if scheme == "continuous":
        return timegrid.weights.copy()
    if scheme == "discrete":
        w = np.full(timegrid.nt + 1, timegrid.tau)
        w[0] = 0.0
        return w
    raise DomainError(f"unknown adjoint scheme {scheme!r}")


def solve_adjoint(
    op: DiscreteOperator,
    alpha: float,
    timegrid: TimeGrid,
    residual: np.ndarray,
    scheme: str = "discrete",
    stepper: FractionalStepper | None = None,
) -> np.ndarray:
    """Backward problem with zero terminal data, by time reversal of the forward solver.

    With ``w(t) = z(T - t)`` the backward Caputo problem becomes a forward one,
    solved by :func:`solve_forward`, then reversed.

    ``scheme="continuous"`` pairs node ``k`` with ``nt - k``.  ``scheme="discrete"``
    pairs ``n`` with ``nt + 1 - n`` and halves the endpoint load, which makes the
    result the exact transpose of the forward scheme; with
    :func:`adjoint_time_weights` it yields the exact gradient of the discrete
    misfit.
    """
    nt = timegrid.nt
    r = np.asarray(residual, dtype=float)
    if r.shape != (nt + 1, op.grid.size):
        raise DomainError(f"residual has shape {r.shape}, expected {(nt + 1, op.grid.size)}")
    if stepper is None:
        stepper = FractionalStepper(op, alpha, timegrid, allow_wave=alpha == 2.0)

    if scheme == "continuous":
        w = stepper.solve(r[::-1])
        return w[::-1].copy()
    if scheme == "discrete":
        load = np.zeros_like(r)
        # load^m = (omega_{nt+1-m} / tau) r^{nt+1-m}, m = 1..nt
        load[1:] = r[nt:0:-1]
        load[1] *= 0.5
        w = stepper.solve(load)
        z = np.empty_like(w)
        z[1:] = w[nt:0:-1]
        z[0] = z[1]
        return z
    raise DomainError(f"unknown adjoint scheme {scheme!r}")
