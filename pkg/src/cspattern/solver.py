"""Constrained split-Bregman solver for nonnegative L1 and TV/L1 problems.

Solves::

    argmin_{u >= 0} ||phi(u)||_1   s.t.   ||A u - f||_2 < err

where ``phi`` is the identity (L1) or the stack ``[Id; D_x; D_y]`` of
circular forward differences on the pixel grid (TV/L1, anisotropic).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator, cg

from .errors import DomainError, FactorizationError, ShapeError
from .msimage import GridDims

# above this many unknowns the linear subproblem switches from a dense
# Cholesky factorization to warm-started conjugate gradients
DENSE_LIMIT = 16384
CG_RTOL = 1e-8


@dataclass(frozen=True)
class Regularizer:
    variant: str = "l1"
    dims: GridDims | None = None

    def __post_init__(self):
        if self.variant not in ("l1", "tvl1"):
            raise DomainError(f"regularizer must be 'l1' or 'tvl1', got {self.variant!r}")
        if self.variant == "tvl1" and self.dims is None:
            raise DomainError("TV/L1 regularizer needs grid dimensions")

    @classmethod
    def l1(cls) -> "Regularizer":
        return cls("l1")

    @classmethod
    def tvl1(cls, dims: GridDims) -> "Regularizer":
        return cls("tvl1", dims)

    def out_size(self, n: int) -> int:
        return n if self.variant == "l1" else 3 * n

    def check(self, n: int):
        if self.variant == "tvl1" and self.dims.n_pixels != n:
            raise ShapeError(f"TV/L1 grid has {self.dims.n_pixels} pixels, vector has length {n}")


@dataclass(frozen=True)
class SolverConfig:
    beta1: float = 1.0
    beta2: float = 1000.0
    err: float = 1e-2
    max_iter: int = 500

    def __post_init__(self):
        if self.beta1 <= 0 or self.beta2 <= 0 or self.err <= 0:
            raise DomainError("beta1, beta2 and err must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


@dataclass
class SolverResult:
    u: np.ndarray
    iterations: int
    residual: float
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
        }


def shrink(x, lam: float) -> np.ndarray:
    """Soft threshold at ``1/lam``: ``sign(x) * max(0, |x| - 1/lam)``."""
    if lam <= 0:
        raise DomainError(f"shrinkage parameter must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(0.0, np.abs(x) - 1.0 / lam)


def _grad(u: np.ndarray, dims: GridDims) -> tuple[np.ndarray, np.ndarray]:
    g = u.reshape(dims.shape, order="F")
    dx = np.roll(g, -1, axis=0) - g
    dy = np.roll(g, -1, axis=1) - g
    return dx.ravel(order="F"), dy.ravel(order="F")


def _grad_adjoint(wx: np.ndarray, wy: np.ndarray, dims: GridDims) -> np.ndarray:
    gx = wx.reshape(dims.shape, order="F")
    gy = wy.reshape(dims.shape, order="F")
    out = (np.roll(gx, 1, axis=0) - gx) + (np.roll(gy, 1, axis=1) - gy)
    return out.ravel(order="F")


def apply_phi(u, reg: Regularizer) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    reg.check(u.size)
    if reg.variant == "l1":
        return u.copy()
    dx, dy = _grad(u, reg.dims)
    return np.concatenate([u, dx, dy])


def apply_phi_adjoint(w, reg: Regularizer) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if reg.variant == "l1":
        return w.copy()
    if w.size % 3:
        raise ShapeError(f"TV/L1 adjoint expects a length divisible by 3, got {w.size}")
    n = w.size // 3
    reg.check(n)
    return w[:n] + _grad_adjoint(w[n:2 * n], w[2 * n:], reg.dims)


def difference_matrices(dims: GridDims) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse ``D_x`` (along rows) and ``D_y`` (along columns) with circular wrap."""
    def fwd(n):
        if n == 1:
            return sp.csr_matrix((1, 1))
        return (sp.eye(n, k=1, format="csr") + sp.eye(n, k=1 - n, format="csr") - sp.eye(n, format="csr"))

    # column-major ordering: q = c * n_rows + r
    Dx = sp.kron(sp.eye(dims.n_cols), fwd(dims.n_rows), format="csr")
    Dy = sp.kron(fwd(dims.n_cols), sp.eye(dims.n_rows), format="csr")
    return Dx, Dy


def phi_gram(reg: Regularizer, n: int) -> sp.csr_matrix:
    """``phi^T phi`` as a sparse matrix."""
    reg.check(n)
    eye = sp.eye(n, format="csr")
    if reg.variant == "l1":
        return eye
    Dx, Dy = difference_matrices(reg.dims)
    return (eye + Dx.T @ Dx + Dy.T @ Dy).tocsr()


def _as_dense(A, n: int) -> np.ndarray | None:
    if isinstance(A, np.ndarray):
        return A
    if sp.issparse(A):
        return None
    op = aslinearoperator(A)
    k = op.shape[0]
    if k <= n:
        return np.asarray(op.rmatmat(np.eye(k))).T
    return None


class _SubproblemSolver:
    """Applies ``(beta1 A^T A + beta2 phi^T phi)^{-1}``."""

    def __init__(self, A_dense, A_op, reg: Regularizer, cfg: SolverConfig, n: int,
                 dense_limit: int):
        self.n = n
        self.x0 = None
        if n <= dense_limit:
            H = cfg.beta2 * phi_gram(reg, n).toarray()
            if A_dense is not None:
                H += cfg.beta1 * (A_dense.T @ A_dense)
            else:
                H += cfg.beta1 * np.asarray(A_op.rmatmat(A_op.matmat(np.eye(n))))
            if not np.allclose(H, H.T, rtol=1e-12, atol=1e-12 * np.abs(H).max()):
                raise FactorizationError("subproblem matrix is not symmetric")
            try:
                self._cho = scipy.linalg.cho_factor(H, lower=True)
            except np.linalg.LinAlgError as exc:
                raise FactorizationError(f"subproblem matrix is not positive definite: {exc}") from exc
            self._op = None
        else:
            G = phi_gram(reg, n)
            b1, b2 = cfg.beta1, cfg.beta2

            def mv(x):
                return b1 * A_op.rmatvec(A_op.matvec(x)) + b2 * (G @ x)

            self._op = LinearOperator((n, n), matvec=mv, dtype=float)
            self._cho = None

    def __call__(self, rhs: np.ndarray) -> np.ndarray:
        if self._cho is not None:
            return scipy.linalg.cho_solve(self._cho, rhs, check_finite=False)
        x, info = cg(self._op, rhs, x0=self.x0, rtol=CG_RTOL, maxiter=10 * self.n)
        if info < 0:
            raise FactorizationError("conjugate gradient broke down on the subproblem")
        self.x0 = x
        return x


def solve_constrained(A, f, reg: Regularizer | None = None, cfg: SolverConfig | None = None,
                      dense_limit: int = DENSE_LIMIT) -> SolverResult:
    """Constrained split Bregman with nonnegativity.

    ``A`` is a dense array, a sparse matrix or a ``LinearOperator`` with an
    adjoint.  Per iteration::

        u <- D_inv (beta1 A^T f^k + beta2 phi^T (d - b));  u <- max(u, 0)
        d <- shrink(phi(u) + b, beta2);  b <- b + phi(u) - d
        f^{k+1} <- f^k + f - A u

    with ``f^0 = f``, ``b = d = 0``, stopping once ``||A u - f|| < err``.
    If ``max_iter`` is reached the lowest-residual iterate is returned with
    ``converged=False``.
    """
    reg = reg or Regularizer.l1()
    cfg = cfg or SolverConfig()
    f = np.asarray(f, dtype=float).ravel()
    A_op = aslinearoperator(A)
    k, n = A_op.shape
    if f.size != k:
        raise ShapeError(f"operator has {k} rows but f has length {f.size}")
    reg.check(n)
    A_dense = _as_dense(A, n)
    if A_dense is not None:
        A_op = aslinearoperator(A_dense)

    solve = _SubproblemSolver(A_dense, A_op, reg, cfg, n, dense_limit)
    fk = f.copy()
    b = np.zeros(reg.out_size(n))
    d = np.zeros_like(b)
    best_u, best_res = np.zeros(n), np.inf
    history: list[float] = []
    for it in range(1, cfg.max_iter + 1):
        rhs = cfg.beta1 * A_op.rmatvec(fk) + cfg.beta2 * apply_phi_adjoint(d - b, reg)
        u = np.maximum(solve(rhs), 0.0)
        phu = apply_phi(u, reg)
        d = shrink(phu + b, cfg.beta2)
        b = b + phu - d
        Au = A_op.matvec(u)
        res = float(np.linalg.norm(Au - f))
        history.append(res)
        if res < best_res:
            best_u, best_res = u, res
        if res < cfg.err:
            return SolverResult(u, it, res, True, history)
        fk = fk + f - Au
    return SolverResult(best_u, cfg.max_iter, best_res, False, history)
