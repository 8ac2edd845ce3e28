r"""Two-parameter Mittag-Leffler function on the real axis.

.. math::

    E_{\alpha,\beta}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\alpha k + \beta)}

Small arguments are summed directly whenever the series is well conditioned.
Everything else goes through numerical inversion of the Laplace transform
:math:`s^{\alpha-\beta}/(s^\alpha - z)` along an optimal parabolic contour,
with the residues of the poles that the contour leaves on its right added back
explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, gammasgn, rgamma

from fracinv.errors import AccuracyError, DomainError

_LOG_EPS_MACH = math.log(np.finfo(float).eps)
_LOG_TOL = math.log(1.0e-15)

SERIES_RADIUS = 5.0
# series is accepted when cancellation loses at most this factor
_SERIES_MAX_CONDITION = 1.0e2


@dataclass(frozen=True)
class MlfParams:
    alpha: float
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"alpha must be a positive finite number: {self.alpha}")
        if not math.isfinite(self.beta):
            raise DomainError(f"beta must be finite: {self.beta}")


def _series(z: float, alpha: float, beta: float) -> float | None:
    """Sum the Taylor series, or return *None* if it is ill-conditioned."""
    if z == 0.0:
        return float(rgamma(beta))

    logz = math.log(abs(z))
    # terms stop growing once (alpha k)^alpha > |z|
    kmax = int(2.0 * abs(z) ** (1.0 / alpha) / alpha + 60)
    while True:
        k = np.arange(kmax + 1, dtype=float)
        arg = alpha * k + beta
        logterm = k * logz - gammaln(arg)
        if logterm.max() > 700.0:
            return None
        if logterm[-1] < logterm.max() - 60.0 and logterm[-1] < -60.0:
            break
        kmax *= 2

    sign = gammasgn(arg) * (np.sign(z) ** k)
    # 1/Gamma vanishes at the poles 0, -1, -2, ...
    sign[(arg <= 0) & (arg == np.round(arg))] = 0.0
    terms = sign * np.exp(logterm)
    total = math.fsum(terms)
    if total == 0.0 or not np.isfinite(total):
        return None
    if np.abs(terms).max() > _SERIES_MAX_CONDITION * abs(total):
        return None
    return total


def _optimal_param_rb(
    t: float, phi_j: float, phi_j1: float, pj: float, qj: float, log_eps: float
) -> tuple[float, float, float]:
    """Contour parameters for a region bounded on both sides by singularities."""
    fac = 1.01
    f_max = math.exp(log_eps - _LOG_EPS_MACH)

    sq_phi_j = math.sqrt(phi_j)
    threshold = 2.0 * math.sqrt((log_eps - _LOG_EPS_MACH) / t)
    sq_phi_j1 = min(math.sqrt(phi_j1), threshold - sq_phi_j)

    adm = False
    f_bar = 1.0
    if pj < 1.0e-14 and qj < 1.0e-14:
        sq_bar_j, sq_bar_j1 = sq_phi_j, sq_phi_j1
        adm = True
    elif pj < 1.0e-14:
        sq_bar_j = sq_phi_j
        if sq_phi_j > 0:
            f_min = fac * (sq_phi_j / (sq_phi_j1 - sq_phi_j)) ** qj
        else:
            f_min = fac
        if f_min < f_max:
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fq = f_bar ** (-1.0 / qj)
            sq_bar_j1 = (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq)
            adm = True
    elif qj < 1.0e-14:
        sq_bar_j1 = sq_phi_j1
        f_min = fac * (sq_phi_j1 / (sq_phi_j1 - sq_phi_j)) ** pj
        if f_min < f_max:
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fp = f_bar ** (-1.0 / pj)
            sq_bar_j = (2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp)
            adm = True
    else:
        f_min = fac * (sq_phi_j + sq_phi_j1) / (sq_phi_j1 - sq_phi_j) ** max(pj, qj)
        if f_min < f_max:
            f_min = max(f_min, 1.5)
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fp = f_bar ** (-1.0 / pj)
            fq = f_bar ** (-1.0 / qj)
            w = -phi_j1 * t / log_eps
            den = 2.0 + w - (1.0 + w) * fp + fq
            sq_bar_j = ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den
            sq_bar_j1 = (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den
            adm = True

    if not adm:
        return 0.0, 0.0, math.inf

    log_eps = log_eps - math.log(f_bar)
    w = -(sq_bar_j1**2) * t / log_eps
    mu = (((1.0 + w) * sq_bar_j + sq_bar_j1) / (2.0 + w)) ** 2
    h = -2.0 * math.pi / log_eps * (sq_bar_j1 - sq_bar_j) / ((1.0 + w) * sq_bar_j + sq_bar_j1)
    n = math.ceil(math.sqrt(1.0 - log_eps / t / mu) / h)
    return mu, h, n


def _optimal_param_ru(t: float, phi_j: float, pj: float, log_eps: float) -> tuple[float, float, float]:
    """Contour parameters for the unbounded rightmost region."""
    sq_phi_j = math.sqrt(phi_j)
    phibar = phi_j * 1.01 if phi_j > 0 else 0.01
    sq_phibar = math.sqrt(phibar)

    f_min, f_max, f_tar = 1.0, 10.0, 5.0
    while True:
        phi_t = phibar * t
        log_eps_phi_t = log_eps / phi_t
        n = math.ceil(phi_t / math.pi * (1.0 - 1.5 * log_eps_phi_t + math.sqrt(1.0 - 2.0 * log_eps_phi_t)))
        a = math.pi * n / phi_t
        sq_mu = sq_phibar * abs(4.0 - a) / abs(7.0 - math.sqrt(1.0 + 12.0 * a))
        fbar = ((sq_phibar - sq_phi_j) / sq_mu) ** (-pj)
        if pj < 1.0e-14 or f_min < fbar < f_max:
            break
        sq_phibar = f_tar ** (-1.0 / pj) * sq_mu + sq_phi_j
        phibar = sq_phibar**2

    mu = sq_mu**2
    h = (-3.0 * a - 2.0 + 2.0 * math.sqrt(1.0 + 12.0 * a)) / (4.0 - a) / n

    threshold = (log_eps - _LOG_EPS_MACH) / t
    if mu > threshold:
        q = 0.0 if abs(pj) < 1.0e-14 else f_tar ** (-1.0 / pj) * math.sqrt(mu)
        phibar = (q + math.sqrt(phi_j)) ** 2
        if phibar < threshold:
            w = math.sqrt(_LOG_EPS_MACH / (_LOG_EPS_MACH - log_eps))
            u = math.sqrt(-phibar * t / _LOG_EPS_MACH)
            mu = threshold
            n = math.ceil(w * log_eps / 2.0 / math.pi / (u * w - 1.0))
            h = math.sqrt(_LOG_EPS_MACH / (_LOG_EPS_MACH - log_eps)) / n
        else:
            n, h = math.inf, 0.0
    return mu, h, n


def _laplace_inversion(z: float, alpha: float, beta: float) -> float:
    lam = complex(z)
    theta = math.atan2(lam.imag, lam.real)
    kmin = math.ceil(-alpha / 2.0 - theta / (2.0 * math.pi))
    kmax = math.floor(alpha / 2.0 - theta / (2.0 * math.pi))
    k = np.arange(kmin, kmax + 1)
    s_star = abs(lam) ** (1.0 / alpha) * np.exp(1j * (theta + 2.0 * np.pi * k) / alpha)
    phi = (s_star.real + np.abs(s_star)) / 2.0
    order = np.argsort(phi, kind="stable")
    s_star, phi = s_star[order], phi[order]
    keep = phi > 1.0e-15
    s_star = np.concatenate([[0.0], s_star[keep]])
    phi = np.concatenate([[0.0], phi[keep], [np.inf]])
    n_sing = len(s_star)

    # singularity strengths for gamma = 1
    p = [max(0.0, -2.0 * (alpha - beta + 1.0))] + [1.0] * (n_sing - 1)
    q = [1.0] * (n_sing - 1) + [math.inf]

    log_eps = _LOG_TOL
    while True:
        limit = (log_eps - _LOG_EPS_MACH)
        regions = [j for j in range(n_sing) if phi[j] < limit and phi[j] < phi[j + 1]]
        if not regions:
            raise AccuracyError(f"no admissible contour for z={z}", "laplace-inversion")
        params = {}
        for j in regions:
            if j < n_sing - 1:
                params[j] = _optimal_param_rb(1.0, phi[j], phi[j + 1], p[j], q[j], log_eps)
            else:
                params[j] = _optimal_param_ru(1.0, phi[j], p[j], log_eps)
        j_best = min(params, key=lambda j: params[j][2])
        mu, h, n = params[j_best]
        if n <= 200:
            break
        log_eps += math.log(10.0)
        if log_eps > math.log(1.0e-9):
            raise AccuracyError(f"contour needs {n} nodes for z={z}", "laplace-inversion")

    kk = np.arange(-n, n + 1)
    u = h * kk
    s = mu * (1j * u + 1.0) ** 2
    ds = -2.0 * mu * u + 2.0j * mu
    integrand = np.exp(s) * s ** (alpha - beta) / (s**alpha - lam) * ds
    integral = h * integrand.sum() / (2.0j * np.pi)

    poles = s_star[j_best + 1 :]
    residues = np.sum(poles ** (1.0 - beta) * np.exp(poles)) / alpha
    return float((integral + residues).real)


def _scalar_mlf(z: float, alpha: float, beta: float) -> float:
    if not math.isfinite(z):
        raise DomainError(f"argument must be finite: {z}")
    if alpha == 1.0 and beta == 1.0:
        return math.exp(z) if z < 709.0 else math.inf
    if alpha == 2.0 and beta == 1.0:
        return math.cos(math.sqrt(-z)) if z <= 0 else math.cosh(math.sqrt(z))
    if z == 0.0:
        return float(rgamma(beta))

    if abs(z) <= SERIES_RADIUS:
        value = _series(z, alpha, beta)
        if value is not None:
            return value
    if z > 0 and z ** (1.0 / alpha) > 700.0:
        return math.inf

    value = _laplace_inversion(z, alpha, beta)
    if not math.isfinite(value):
        raise AccuracyError(f"non-finite result for z={z}", "laplace-inversion")
    return value


def mittag_leffler(z, alpha: float, beta: float = 1.0):
    """Evaluate :math:`E_{\\alpha,\\beta}(z)` for real *z* (scalar or array)."""
    params = MlfParams(float(alpha), float(beta))
    zz = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(zz)):
        raise DomainError("argument must be finite")
    if zz.ndim == 0:
        return _scalar_mlf(float(zz), params.alpha, params.beta)

    out = np.empty_like(zz)
    flat_in, flat_out = zz.ravel(), out.ravel()
    for i, zi in enumerate(flat_in):
        flat_out[i] = _scalar_mlf(float(zi), params.alpha, params.beta)
    return out


def duhamel_kernel(alpha: float, lam: float, t):
    r"""Kernel :math:`t^{\alpha-1} E_{\alpha,\alpha}(-\lambda t^\alpha)` of the mode-wise Duhamel integral."""
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= 0):
        raise DomainError("duhamel_kernel needs t > 0")
    if lam < 0:
        raise DomainError(f"eigenvalue must be nonnegative: {lam}")
    if alpha == 1.0:
        return np.exp(-lam * tt) if tt.ndim else math.exp(-lam * float(tt))
    return tt ** (alpha - 1.0) * mittag_leffler(-lam * tt**alpha, alpha, alpha)


def kernel_antiderivatives(alpha: float, lam: float, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r"""First and second antiderivatives of the Duhamel kernel, vanishing at 0.

    :math:`K_1(t) = t^\alpha E_{\alpha,\alpha+1}(-\lambda t^\alpha)` and
    :math:`K_2(t) = t^{\alpha+1} E_{\alpha,\alpha+2}(-\lambda t^\alpha)`.
    """
    t = np.asarray(t, dtype=float)
    ta = t**alpha
    if lam == 0.0:
        return ta / math.gamma(alpha + 1.0), ta * t / math.gamma(alpha + 2.0)
    if alpha == 1.0:
        # exact forms; expm1 keeps small lam * t accurate
        x = lam * t
        k1 = -np.expm1(-x) / lam
        k2 = (x + np.expm1(-x)) / lam**2
        return k1, k2
    z = -lam * ta
    k1 = ta * mittag_leffler(z, alpha, alpha + 1.0)
    k2 = ta * t * mittag_leffler(z, alpha, alpha + 2.0)
    return k1, k2
