"""Sensing matrices, the measurement model ``M = F X`` and identity surrogates.

Random draws use numpy's PCG64 bit generator (``numpy.random.default_rng``)
and its standard-normal transform, so a ``(kind, m, n_P, seed)`` descriptor
reproduces the same matrix bit for bit on a given numpy release.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator

from .errors import DomainError, FactorizationError, ShapeError
from .msimage import MultispectralImage

KINDS = ("gaussian", "circulant")

# pivot ratio below which a Gram matrix is treated as rank deficient
RANK_TOL = 1e-10


def measurement_count(p: float, n_pixels: int) -> int:
    """Number of measurements ``floor(p * n_P)`` for a rate ``0 < p < 1``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"measurement rate must lie in (0, 1), got {p}")
    # absorb representation error such as 0.29 * 100 = 28.999999999999996
    return int(math.floor(p * n_pixels + 1e-9))


class GramFactor:
    """Cholesky factorization of a symmetric positive definite Gram matrix.

    Raises :class:`FactorizationError` when the matrix is not positive
    definite or its smallest pivot is below ``RANK_TOL`` times the largest.
    """

    def __init__(self, gram: np.ndarray):
        gram = np.asarray(gram, dtype=float)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise ShapeError(f"Gram matrix must be square, got {gram.shape}")
        try:
            self._cho = scipy.linalg.cho_factor(gram, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise FactorizationError(f"Gram matrix is not positive definite: {exc}") from exc
        pivots = np.diag(self._cho[0]) ** 2
        if pivots.min() <= RANK_TOL * pivots.max():
            raise FactorizationError(
                f"Gram matrix is numerically rank deficient (pivot ratio {pivots.min() / pivots.max():.3e})"
            )
        self.matrix = gram
        self.size = gram.shape[0]

    @classmethod
    def of_rows(cls, F: np.ndarray) -> "GramFactor":
        return cls(F @ F.T)

    def solve(self, z: np.ndarray) -> np.ndarray:
        """Return ``G^{-1} z`` for a vector or a matrix of right-hand sides."""
        return scipy.linalg.cho_solve(self._cho, z, check_finite=False)

    def reconstruct(self) -> np.ndarray:
        L = np.tril(self._cho[0])
        return L @ L.T


@dataclass(frozen=True, eq=False)
class SensingEnsemble:
    kind: str
    m: int
    n_pixels: int
    seed: int
    F: np.ndarray
    reseeded: bool = False
    _gram: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.F.setflags(write=False)

    @property
    def gram(self) -> GramFactor:
        """Factorization of ``F F^T``, computed on first use."""
        if not self._gram:
            self._gram.append(GramFactor.of_rows(self.F))
        return self._gram[0]

    def descriptor(self) -> dict:
        return {"kind": self.kind, "m": self.m, "n_pixels": self.n_pixels, "seed": self.seed}

    @classmethod
    def from_matrix(cls, F, kind: str = "custom", seed: int = -1) -> "SensingEnsemble":
        F = np.array(F, dtype=float)
        if F.ndim != 2:
            raise ShapeError("sensing matrix must be 2-D")
        ens = cls(kind, F.shape[0], F.shape[1], seed, F)
        ens.gram  # full-rank check
        return ens


def _draw(kind: str, m: int, n_pixels: int, rng: np.random.Generator) -> np.ndarray:
    if kind == "gaussian":
        return rng.standard_normal((m, n_pixels))
    c = rng.standard_normal(n_pixels)
    i = np.arange(m)[:, None]
    j = np.arange(n_pixels)[None, :]
    return c[(j - i) % n_pixels]


def generate(kind: str, m: int, n_pixels: int, seed: int,
             oversampled: bool = False) -> SensingEnsemble:
    """Draw an ``m x n_P`` sensing matrix of the given kind.

    A rank-deficient draw is retried once from a perturbed seed sequence
    (``[seed, 1]``); a second failure raises :class:`FactorizationError`.
    ``oversampled=True`` admits ``m > n_P`` (only meaningful for the
    ``F^T F / m`` surrogate); such a draw has no invertible Gram matrix and
    skips the rank check.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown sensing kind {kind!r}; expected one of {KINDS}")
    if m < 1 or (m > n_pixels and not oversampled):
        raise DomainError(f"need 1 <= m <= n_P, got m={m}, n_P={n_pixels}")
    if m > n_pixels:
        if kind != "gaussian":
            raise DomainError("only Gaussian draws may be oversampled")
        F = _draw(kind, m, n_pixels, np.random.default_rng(np.random.SeedSequence([seed])))
        return SensingEnsemble(kind, m, n_pixels, seed, F)
    for attempt, seq in enumerate(([seed], [seed, 1])):
        F = _draw(kind, m, n_pixels, np.random.default_rng(np.random.SeedSequence(seq)))
        ens = SensingEnsemble(kind, m, n_pixels, seed, F, reseeded=attempt > 0)
        try:
            ens.gram
        except FactorizationError:
            if attempt:
                raise
            continue
        return ens
    raise AssertionError("unreachable")


def gen_gaussian(m: int, n_pixels: int, seed: int, oversampled: bool = False) -> SensingEnsemble:
    return generate("gaussian", m, n_pixels, seed, oversampled)


def gen_circulant(m: int, n_pixels: int, seed: int) -> SensingEnsemble:
    """First ``m`` rows of the circulant matrix ``F[i, j] = c[(j - i) mod n_P]``."""
    return generate("circulant", m, n_pixels, seed)


def measure(ens: SensingEnsemble, X: MultispectralImage) -> np.ndarray:
    """Take the same measurements on every band: ``M = F X``."""
    if ens.n_pixels != X.n_pixels:
        raise ShapeError(f"sensing matrix has {ens.n_pixels} columns, image has {X.n_pixels} pixels")
    return ens.F @ X.data


def surrogate_t1(ens: SensingEnsemble) -> LinearOperator:
    """Operator ``u -> (1/m) F^T F u``."""
    F, m = ens.F, ens.m

    def mv(u):
        return F.T @ (F @ u) / m

    return LinearOperator((ens.n_pixels, ens.n_pixels), matvec=mv, rmatvec=mv, matmat=mv, dtype=float)


def surrogate_t2(ens: SensingEnsemble, scale: float | None = None) -> LinearOperator:
    """Operator ``u -> lambda F^T (F F^T)^{-1} F u`` with ``lambda = n_P/m`` by default.

    ``scale=1`` gives the bare orthogonal projector onto the row space of F.
    """
    F, G = ens.F, ens.gram
    lam = ens.n_pixels / ens.m if scale is None else float(scale)

    def mv(u):
        return lam * (F.T @ G.solve(F @ u))

    return LinearOperator((ens.n_pixels, ens.n_pixels), matvec=mv, rmatvec=mv, matmat=mv, dtype=float)


def projector_matrix(ens: SensingEnsemble) -> np.ndarray:
    """Dense ``F^T (F F^T)^{-1} F``."""
    return ens.F.T @ ens.gram.solve(ens.F)


def identity_error_fro(ens: SensingEnsemble) -> float:
    """``||F^T (F F^T)^{-1} F - I||_F``; equals ``sqrt(n_P - m)`` for full-rank F."""
    P = projector_matrix(ens)
    return float(np.linalg.norm(P - np.eye(ens.n_pixels), "fro"))


def surrogate_matrix(ens: SensingEnsemble, surrogate: str, scale: float | None = None) -> np.ndarray:
    if surrogate == "T1":
        return ens.F.T @ ens.F / ens.m
    if surrogate == "T2":
        lam = ens.n_pixels / ens.m if scale is None else scale
        return lam * projector_matrix(ens)
    raise DomainError(f"surrogate must be 'T1' or 'T2', got {surrogate!r}")


def identity_error_max(ens: SensingEnsemble, surrogate: str = "T2") -> float:
    """Max-norm distance between a surrogate's matrix and the identity."""
    S = surrogate_matrix(ens, surrogate)
    S[np.diag_indices_from(S)] -= 1.0
    return float(np.abs(S).max())


def lambda_sweep(ens: SensingEnsemble, lambdas) -> np.ndarray:
    """``max |lambda P - I|`` over a grid of scalings of the projector ``P``."""
    P = projector_matrix(ens)
    n = ens.n_pixels
    off = np.abs(P[~np.eye(n, dtype=bool)]).max() if n > 1 else 0.0
    diag = np.diag(P)
    out = []
    for lam in np.asarray(lambdas, dtype=float):
        out.append(max(lam * off, np.abs(lam * diag - 1.0).max()))
    return np.array(out)
