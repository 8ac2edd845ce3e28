r"""Eigenbasis and Laplace-domain verification paths for the forward problem.

The spectral solution expands the source in the leading eigenpairs of
:math:`A\varphi = \lambda\rho\varphi` and integrates each mode exactly against
the piecewise-linear interpolant of :math:`\sigma`,

.. math::

    u_n(t) = g_n \int_0^t (t-s)^{\alpha-1}E_{\alpha,\alpha}(-\lambda_n (t-s)^\alpha)\,\sigma(s)\,ds,

so it shares nothing with the time stepper except the spatial matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fracinv.errors import ConditioningError, DomainError
from fracinv.grids import TimeGrid
from fracinv.mlf import kernel_antiderivatives
from fracinv.operator import DiscreteOperator, EigenBasis
from fracinv.timestepping import SeparatedSource, solve_forward


def modal_response(alpha: float, lam: float, sigma: np.ndarray, timegrid: TimeGrid) -> np.ndarray:
    """Duhamel integral of one mode against linearly interpolated ``sigma`` at every node."""
    nt, tau = timegrid.nt, timegrid.tau
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (nt + 1,):
        raise DomainError(f"sigma has shape {sigma.shape}, expected {(nt + 1,)}")
    t = tau * np.arange(nt + 2)
    k1, k2 = kernel_antiderivatives(alpha, lam, t)
    i0 = np.diff(k1)
    i1 = k1[1:] - np.diff(k2) / tau
    a = i0 - i1  # multiplies sigma at the near end of each lag interval
    b = i1  # multiplies sigma at the far end
    w = a.copy()
    w[1:] += b[:-1]
    out = np.convolve(w[: nt + 1], sigma)[: nt + 1] - a[: nt + 1] * sigma[0]
    out[0] = 0.0
    return out


@dataclass(frozen=True, eq=False)
class SpectralSolution:
    field: np.ndarray
    """Space-time field of shape ``(nt + 1, N)``."""
    modal: np.ndarray
    """Modal time histories ``u_n(t_k)``, shape ``(nt + 1, m)``."""
    tail_fraction: float
    """Share of the source's spatial energy outside the retained modes."""


def solve_forward_spectral(
    basis: EigenBasis, source: SeparatedSource, alpha: float, timegrid: TimeGrid
) -> SpectralSolution:
    """Truncated eigen-expansion of the forward solution for a separated source."""
    coef = basis.coefficients(source.g)
    modal = np.zeros((timegrid.nt + 1, basis.count))
    for n, lam in enumerate(basis.eigenvalues):
        if coef[n] != 0.0:
            modal[:, n] = coef[n] * modal_response(alpha, max(float(lam), 0.0), source.sigma, timegrid)
    return SpectralSolution(modal @ basis.eigenvectors, modal, basis.tail_fraction(source.g))


@dataclass(frozen=True)
class LaplaceProbe:
    p: float

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise DomainError(f"Laplace abscissa must be positive: {self.p}")

    def shift(self, alpha: float) -> float:
        return self.p**alpha


class LaplaceTransform:
    r"""Trapezoid approximation of :math:`\hat f(p) = \int_0^T e^{-pt} f(t)\,dt`.

    ``f`` is a sampled series (leading axis = time).  Negative ``p`` is allowed;
    :meth:`scaled` evaluates :math:`e^{-p t_*}\hat f(p)` without overflow, which
    is what ratios of transforms at :math:`p=-\lambda` need.
    """

    def __init__(self, series: np.ndarray, timegrid: TimeGrid) -> None:
        self.series = np.asarray(series, dtype=float)
        if self.series.shape[0] != timegrid.nt + 1:
            raise DomainError("series length does not match the time grid")
        self.timegrid = timegrid

    @property
    def support_end(self) -> float:
        """Last node where the series is nonzero (0 for an all-zero series)."""
        flat = np.abs(self.series.reshape(self.series.shape[0], -1)).max(axis=1)
        nz = np.flatnonzero(flat > 0)
        return float(self.timegrid.t[nz[-1]]) if nz.size else 0.0

    def scaled(self, p: float, anchor: float) -> np.ndarray | float:
        r""":math:`\int_0^T e^{-p(t-t_*)} f(t)\,dt` with :math:`t_* =` ``anchor``."""
        tg = self.timegrid
        # restrict to the support so nodes where the series vanishes cannot overflow
        flat = np.abs(self.series.reshape(self.series.shape[0], -1)).max(axis=1)
        nz = np.flatnonzero(flat > 0)
        end = nz[-1] + 1 if nz.size else 0
        w = tg.weights[:end] * np.exp(-p * (tg.t[:end] - anchor))
        return np.tensordot(w, self.series[:end], axes=(0, 0))

    def __call__(self, p: float) -> np.ndarray | float:
        return self.scaled(p, 0.0)


@dataclass(frozen=True)
class LaplaceReport:
    residual: float
    """``|(A + rho p^alpha) U - F| / |F|`` in the weighted discrete L2 norm."""
    tail: float
    """Estimate of the neglected ``int_T^inf e^{-pt} u`` relative to ``|U|``."""


def laplace_residual_check(
    u: np.ndarray,
    source,
    op: DiscreteOperator,
    alpha: float,
    probe: LaplaceProbe,
    timegrid: TimeGrid,
) -> LaplaceReport:
    r"""Check that :math:`(A + \rho p^\alpha)\hat u(p) = \hat f(p)` holds for a computed ``u``.

    Both transforms are truncated to ``[0, T]``.  The tail estimate assumes the
    solution keeps its final magnitude beyond ``T``:
    :math:`e^{-pT}|u(T)|/(p\,|\hat u|)`.
    """
    f = source.field() if isinstance(source, SeparatedSource) else np.asarray(source, dtype=float)
    uhat = LaplaceTransform(u, timegrid)(probe.p)
    fhat = LaplaceTransform(f, timegrid)(probe.p)
    lhs = op.apply(uhat) + probe.shift(alpha) * op.density * uhat
    w = op.weights * op.free
    fnorm = math.sqrt(float(np.sum(w * fhat * fhat)))
    rnorm = math.sqrt(float(np.sum(w * (lhs - fhat) ** 2)))
    unorm = math.sqrt(float(np.sum(w * uhat * uhat)))
    if fnorm == 0.0:
        if rnorm == 0.0:
            return LaplaceReport(0.0, 0.0)
        return LaplaceReport(math.inf, 0.0)
    uend = math.sqrt(float(np.sum(w * u[-1] * u[-1])))
    tail = math.exp(-probe.p * timegrid.T) * uend / (probe.p * unorm) if unorm > 0 else 0.0
    return LaplaceReport(rnorm / fnorm, tail)


def ip1prime_companion(
    basis: EigenBasis,
    sigma_hat_at,
    beta_hat_at,
    g: np.ndarray,
    min_ratio: float = 1e-13,
) -> np.ndarray:
    r"""Spatial factor ``h`` with modal coefficients :math:`h_n = -\hat\sigma(-\lambda_n)/\hat\beta(-\lambda_n)\,g_n`.

    The evaluators are either :class:`LaplaceTransform` objects, in which case
    both are evaluated with a common exponential scaling so that large
    eigenvalues do not overflow, or plain callables ``p -> value``.
    A mode whose :math:`|\hat\beta(-\lambda_n)|` is below ``min_ratio`` times the
    scale of its integrand raises :class:`ConditioningError`.
    """
    gcoef = basis.coefficients(g)
    hcoef = np.zeros_like(gcoef)
    both_sampled = isinstance(sigma_hat_at, LaplaceTransform) and isinstance(beta_hat_at, LaplaceTransform)
    if both_sampled:
        anchor = max(sigma_hat_at.support_end, beta_hat_at.support_end)
        abs_beta = LaplaceTransform(np.abs(beta_hat_at.series), beta_hat_at.timegrid)
    for n, lam in enumerate(basis.eigenvalues):
        if both_sampled:
            s = float(sigma_hat_at.scaled(-lam, anchor))
            b = float(beta_hat_at.scaled(-lam, anchor))
            scale = float(abs_beta.scaled(-lam, anchor))
        else:
            s = float(sigma_hat_at(-lam))
            b = float(beta_hat_at(-lam))
            scale = abs(b) if np.isfinite(b) else 0.0
        if not (np.isfinite(b) and np.isfinite(s)) or scale == 0.0 or abs(b) <= min_ratio * scale:
            raise ConditioningError("beta transform vanishes numerically", n)
        hcoef[n] = -(s / b) * gcoef[n]
    return basis.synthesize(hcoef) * basis.density


def verify_c5_solution(
    op: DiscreteOperator,
    beta: np.ndarray,
    g: np.ndarray,
    timegrid: TimeGrid,
    h: np.ndarray | None = None,
    sigma: np.ndarray | None = None,
) -> float:
    r"""Deviation :math:`\max_t \|u(t) - \beta(t) g\| / \|g\|` for the source ``sigma g + beta h`` at order 1.

    Defaults: ``sigma`` is the backward difference of ``beta`` (the quotient the
    implicit Euler step sees) and ``h = A g``; with these choices ``beta g`` is
    the exact discrete solution.
    """
    beta = np.asarray(beta, dtype=float)
    g = np.asarray(g, dtype=float)
    if beta.shape != (timegrid.nt + 1,):
        raise DomainError("beta does not match the time grid")
    gnorm = math.sqrt(float(np.sum(op.weights * g * g)))
    if gnorm == 0.0 or not np.any(beta):
        return 0.0
    if sigma is None:
        sigma = np.concatenate([[0.0], np.diff(beta) / timegrid.tau])
    if h is None:
        h = op.apply(g)
    f = np.outer(sigma, g) + np.outer(beta, h)
    u = solve_forward(op, 1.0, timegrid, f)
    diff = u - np.outer(beta, g)
    norms = np.sqrt(np.sum(op.weights * diff * diff, axis=1))
    return float(norms.max() / gnorm)
