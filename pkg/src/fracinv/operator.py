r"""Finite-difference realization of :math:`A_q = -\nabla\cdot(a\nabla\,\cdot) + q` on a rectangle.

The operator is assembled in symmetric "weak" form: a stiffness matrix ``S``
built edge by edge from face-averaged diffusion coefficients, scaled by the
trapezoid weights ``W`` so that ``S = W A`` where ``A`` is the pointwise
5-point stencil with ghost-node reflection at Neumann boundaries.  Density
enters through the lumped mass ``M = W rho``.  Dirichlet boundary nodes are
eliminated; fields keep their full length and hold zeros there.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from fracinv.errors import AssemblyError, DomainError, EigenSolverError, LinearSolveError
from fracinv.grids import Grid2D

log = logging.getLogger(__name__)

DIRECT_SOLVE_MAX_NODES = 128 * 128
DENSE_EIGEN_MAX_NODES = 1600


class BoundaryCondition(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class EllipticOperatorSpec:
    """Coefficients of the elliptic part.

    ``diffusion`` is a scalar, a nodal array of shape ``(N,)`` (isotropic), or
    a symmetric tensor of shape ``(2, 2)`` or ``(N, 2, 2)``.  ``potential`` and
    ``density`` are scalars or nodal arrays.
    """

    diffusion: float | np.ndarray = 0.1
    potential: float | np.ndarray = 1.0
    density: float | np.ndarray = 1.0
    bc: BoundaryCondition = BoundaryCondition.NEUMANN

    def __post_init__(self) -> None:
        object.__setattr__(self, "bc", BoundaryCondition(self.bc))

    def tensor(self, grid: Grid2D) -> np.ndarray:
        """Nodal diffusion tensor, shape ``(N, 2, 2)``."""
        a = np.asarray(self.diffusion, dtype=float)
        n = grid.size
        if a.ndim == 0 or a.shape == (n,):
            out = np.zeros((n, 2, 2))
            out[:, 0, 0] = a
            out[:, 1, 1] = a
            return out
        if a.shape == (2, 2):
            return np.broadcast_to(a, (n, 2, 2)).copy()
        if a.shape == (n, 2, 2):
            return a.copy()
        raise AssemblyError(f"diffusion has unsupported shape {a.shape}")

    def nodal(self, grid: Grid2D, name: str) -> np.ndarray:
        v = np.asarray(getattr(self, name), dtype=float)
        if v.ndim == 0:
            return np.full(grid.size, float(v))
        if v.shape != (grid.size,):
            raise AssemblyError(f"{name} has shape {v.shape}, expected ({grid.size},)")
        return v.copy()


def _check_spec(grid: Grid2D, tensor: np.ndarray, q: np.ndarray, rho: np.ndarray) -> None:
    for name, arr in (("diffusion", tensor.reshape(grid.size, -1)), ("potential", q[:, None]), ("density", rho[:, None])):
        bad = np.flatnonzero(~np.all(np.isfinite(arr), axis=1))
        if bad.size:
            raise AssemblyError(f"non-finite {name}", int(bad[0]))
    if np.any(np.abs(tensor[:, 0, 1] - tensor[:, 1, 0]) > 1e-14 * np.abs(tensor).max()):
        node = int(np.flatnonzero(tensor[:, 0, 1] != tensor[:, 1, 0])[0])
        raise AssemblyError("diffusion tensor is not symmetric", node)
    det = tensor[:, 0, 0] * tensor[:, 1, 1] - tensor[:, 0, 1] ** 2
    bad = np.flatnonzero((tensor[:, 0, 0] <= 0) | (det <= 0))
    if bad.size:
        raise AssemblyError("diffusion tensor is not uniformly elliptic", int(bad[0]))
    bad = np.flatnonzero(q <= 0)
    if bad.size:
        raise AssemblyError("potential must be bounded below by a positive constant", int(bad[0]))
    bad = np.flatnonzero(rho <= 0)
    if bad.size:
        raise AssemblyError("density must be positive", int(bad[0]))


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    grid: Grid2D
    bc: BoundaryCondition
    stiffness: sp.csr_matrix
    """Symmetric ``W A`` on all nodes (Dirichlet rows are dropped via ``free``)."""
    weights: np.ndarray
    density: np.ndarray
    potential: np.ndarray
    free: np.ndarray = field(repr=False)
    """Boolean mask of unknown nodes."""

    @cached_property
    def mass(self) -> np.ndarray:
        return self.weights * self.density

    @cached_property
    def free_index(self) -> np.ndarray:
        return np.flatnonzero(self.free)

    @cached_property
    def stiffness_free(self) -> sp.csc_matrix:
        idx = self.free_index
        return self.stiffness[idx][:, idx].tocsc()

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Pointwise ``A u``; zero on eliminated Dirichlet nodes."""
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        idx = self.free_index
        if u.ndim == 1:
            out[idx] = (self.stiffness_free @ u[idx]) / self.weights[idx]
        else:
            out[..., idx] = (self.stiffness_free @ u[..., idx].T).T / self.weights[idx]
        return out

    def energy(self, u: np.ndarray, v: np.ndarray) -> float:
        """Weighted inner product ``<A u, v>``."""
        idx = self.free_index
        return float(v[idx] @ (self.stiffness_free @ u[idx]))

    def factorize(self, shift: float) -> "ShiftedSolver":
        return ShiftedSolver(self, shift)


class ShiftedSolver:
    """Reusable solver for ``(A + shift * rho) u = rhs``."""

    def __init__(self, op: DiscreteOperator, shift: float) -> None:
        if shift < 0 or not np.isfinite(shift):
            raise DomainError(f"shift must be a nonnegative number: {shift}")
        self.op = op
        self.shift = float(shift)
        idx = op.free_index
        self.matrix = (op.stiffness_free + sp.diags(self.shift * op.mass[idx])).tocsc()
        self.direct = idx.size <= DIRECT_SOLVE_MAX_NODES
        if self.direct:
            self._lu = spla.splu(self.matrix)
        else:
            self._precond = spla.LinearOperator(self.matrix.shape, matvec=lambda x: x / self.matrix.diagonal())

    def solve_weighted(self, b: np.ndarray) -> np.ndarray:
        """Solve ``(S + shift M) x = b`` on free nodes; ``b`` already carries the weights."""
        if self.direct:
            return self._lu.solve(b)
        x, info = spla.cg(self.matrix, b, rtol=0.0, atol=1e-12 * max(np.linalg.norm(b), 1e-300), M=self._precond, maxiter=20 * b.size)
        if info != 0:
            res = np.linalg.norm(self.matrix @ x - b) / max(np.linalg.norm(b), 1e-300)
            raise LinearSolveError("conjugate gradient did not converge", res)
        return x

    def __call__(self, rhs: np.ndarray) -> np.ndarray:
        op = self.op
        idx = op.free_index
        u = np.zeros_like(rhs, dtype=float)
        u[idx] = self.solve_weighted(op.weights[idx] * rhs[idx])
        return u


def assemble(grid: Grid2D, spec: EllipticOperatorSpec) -> DiscreteOperator:
    """Assemble the symmetric stiffness of ``A_q`` for the given coefficients."""
    tensor = spec.tensor(grid)
    q = spec.nodal(grid, "potential")
    rho = spec.nodal(grid, "density")
    _check_spec(grid, tensor, q, rho)

    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    idx = np.arange(grid.size).reshape(ny, nx)
    wx = np.full(nx, hx)
    wx[[0, -1]] *= 0.5
    wy = np.full(ny, hy)
    wy[[0, -1]] *= 0.5

    a11 = tensor[:, 0, 0].reshape(ny, nx)
    a22 = tensor[:, 1, 1].reshape(ny, nx)
    a12 = tensor[:, 0, 1].reshape(ny, nx)

    rows, cols, vals = [], [], []

    def add_edges(i0, i1, coef):
        i0, i1, coef = i0.ravel(), i1.ravel(), coef.ravel()
        rows.extend([i0, i1, i0, i1])
        cols.extend([i0, i1, i1, i0])
        vals.extend([coef, coef, -coef, -coef])

    # x-directed edges: face a11 times the row's trapezoid width over hx
    face = 0.5 * (a11[:, :-1] + a11[:, 1:])
    add_edges(idx[:, :-1], idx[:, 1:], face * wy[:, None] / hx)
    face = 0.5 * (a22[:-1, :] + a22[1:, :])
    add_edges(idx[:-1, :], idx[1:, :], face * wx[None, :] / hy)

    stiff = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(grid.size, grid.size)
    ).tocsr()

    if np.any(a12 != 0):
        stiff = stiff + _mixed_term(grid, idx, a12)

    weights = grid.weights
    stiff = (stiff + sp.diags(weights * q)).tocsr()
    stiff.sum_duplicates()

    free = np.ones(grid.size, dtype=bool)
    if spec.bc is BoundaryCondition.DIRICHLET:
        free &= ~grid.boundary
        # interior trapezoid weights are exactly hx*hy
    return DiscreteOperator(grid, spec.bc, stiff, weights, rho, q, free)


def _mixed_term(grid: Grid2D, idx: np.ndarray, a12: np.ndarray) -> sp.csr_matrix:
    """Cell-based symmetric form of ``2 a12 d_x u d_y v`` (4-point corner stencil)."""
    hx, hy = grid.hx, grid.hy
    c00, c10 = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    c01, c11 = idx[1:, :-1].ravel(), idx[1:, 1:].ravel()
    ncell = c00.size
    cells = np.arange(ncell)
    one = np.ones(ncell)
    gx = sp.coo_matrix(
        (np.concatenate([-one, one, -one, one]) / (2 * hx), (np.tile(cells, 4), np.concatenate([c00, c10, c01, c11]))),
        shape=(ncell, grid.size),
    ).tocsr()
    gy = sp.coo_matrix(
        (np.concatenate([-one, -one, one, one]) / (2 * hy), (np.tile(cells, 4), np.concatenate([c00, c10, c01, c11]))),
        shape=(ncell, grid.size),
    ).tocsr()
    a_cell = 0.25 * (a12[:-1, :-1] + a12[:-1, 1:] + a12[1:, :-1] + a12[1:, 1:]).ravel()
    d = sp.diags(a_cell * hx * hy)
    return (gx.T @ d @ gy + gy.T @ d @ gx).tocsr()


def shifted_solve(op: DiscreteOperator, shift: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(A + shift * rho) u = rhs`` and verify the residual."""
    rhs = np.asarray(rhs, dtype=float)
    u = op.factorize(shift)(rhs)
    idx = op.free_index
    nrm = np.linalg.norm(rhs[idx])
    if nrm == 0.0:
        return u
    res = np.linalg.norm(op.apply(u)[idx] + shift * op.density[idx] * u[idx] - rhs[idx]) / nrm
    if res > 1e-10:
        raise LinearSolveError("shifted solve missed its residual target", res)
    return u


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Leading eigenpairs of ``A phi = lambda rho phi``, rho-orthonormal."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    """Shape ``(m, N)``; row ``n`` is the n-th eigenvector."""
    grid: Grid2D
    density: np.ndarray

    @property
    def count(self) -> int:
        return self.eigenvalues.size

    def coefficients(self, g: np.ndarray) -> np.ndarray:
        r"""Coefficients :math:`\langle \rho^{-1} g, \varphi_n\rangle_\rho = \langle g, \varphi_n\rangle`."""
        return self.eigenvectors @ (self.grid.weights * g)

    def synthesize(self, coef: np.ndarray) -> np.ndarray:
        return coef @ self.eigenvectors

    def tail_fraction(self, g: np.ndarray) -> float:
        r"""Share of :math:`\|\rho^{-1} g\|_\rho^2` not captured by the retained modes."""
        total = float(np.sum(self.grid.weights * g * g / self.density))
        if total == 0.0:
            return 0.0
        return 1.0 - float(np.sum(self.coefficients(g) ** 2)) / total


def eigendecompose(op: DiscreteOperator, m: int, tol: float = 1e-10) -> EigenBasis:
    """Smallest ``m`` eigenpairs of the rho-weighted generalized problem."""
    idx = op.free_index
    n = idx.size
    if not 1 <= m <= n:
        raise DomainError(f"mode count must lie in [1, {n}]: {m}")

    scale = 1.0 / np.sqrt(op.mass[idx])
    sym = sp.diags(scale) @ op.stiffness_free @ sp.diags(scale)
    sym = 0.5 * (sym + sym.T)
    if n <= DENSE_EIGEN_MAX_NODES or m > n // 3:
        lam, psi = scipy.linalg.eigh(sym.toarray(), subset_by_index=[0, m - 1])
    else:
        # Lanczos (ARPACK) in shift-invert mode around zero; A is positive definite
        lam, psi = spla.eigsh(sym.tocsc(), k=m, sigma=0.0, which="LM", tol=tol)
        order = np.argsort(lam)
        lam, psi = lam[order], psi[:, order]

    vecs = np.zeros((m, op.grid.size))
    vecs[:, idx] = (psi * scale[:, None]).T
    # fix the sign so the largest-magnitude entry is positive
    pivot = np.argmax(np.abs(vecs), axis=1)
    vecs *= np.sign(vecs[np.arange(m), pivot])[:, None]

    res = np.array([_eigen_residual(op, lam[k], vecs[k]) for k in range(m)])
    ok = res <= 1e-8 * np.maximum(lam, 1.0)
    if not np.all(ok):
        raise EigenSolverError("eigenpairs failed the residual check", int(np.argmin(ok)))
    return EigenBasis(lam, vecs, op.grid, op.density.copy())


def _eigen_residual(op: DiscreteOperator, lam: float, phi: np.ndarray) -> float:
    r = op.apply(phi) - lam * op.density * phi
    return float(np.sqrt(np.sum(op.weights * r * r)))
