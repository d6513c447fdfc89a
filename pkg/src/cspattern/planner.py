"""Shifted-measurement planning and virtual-measurement reconstruction.

All measurements are circular shifts ``Q_e f`` of one base vector ``f``.
Virtual measurements on the spectralized image are indexed by a shift set
``E``; recovering them requires effective measurements on the real image at
every shift of ``E + P``.  The planner chooses ``|E| = A`` shifts that keep
``|E + P|`` small, using the optimal staircase rectangle for rectangular
patterns and the enclosing rectangle for everything else.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .errors import DomainError, PlanningError, ShapeError
from .msimage import ORIGIN, GridDims, MultispectralImage, PixelShift, shift_index
from .sensing import GramFactor
from .spectralize import Pattern


@dataclass(frozen=True)
class ShiftSet:
    elements: frozenset

    def __init__(self, elements):
        elems = frozenset(PixelShift.of(e) for e in elements)
        if not elems:
            raise PlanningError("a shift set must be nonempty")
        object.__setattr__(self, "elements", elems)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.ordered())

    def __contains__(self, p):
        return PixelShift.of(p) in self.elements

    def ordered(self) -> tuple[PixelShift, ...]:
        """Elements in lexicographic ``(dr, dc)`` order."""
        return tuple(sorted(self.elements))

    def extent(self) -> tuple[int, int]:
        dr = [e.dr for e in self.elements]
        dc = [e.dc for e in self.elements]
        return max(dr) - min(dr) + 1, max(dc) - min(dc) + 1


def minkowski_sum(E, P) -> ShiftSet:
    return ShiftSet({PixelShift.of(e) + p for e in E for p in P})


def alpha(E, P) -> float:
    """Effective-to-virtual measurement ratio ``|E + P| / |E|``."""
    E = E if isinstance(E, ShiftSet) else ShiftSet(E)
    return len(minkowski_sum(E, P)) / len(E)


def lemma1_sequence(A: int, h: int) -> np.ndarray:
    """Most even split of ``A`` into ``h`` positive parts, larger parts first.

    With ``A = q h + r`` the first ``r`` entries are ``q + 1`` and the rest
    ``q``.  Used as the row lengths of the staircase measurement set.
    """
    if h < 1 or A < h:
        raise DomainError(f"need A >= h >= 1, got A={A}, h={h}")
    q, r = divmod(A, h)
    v = np.full(h, q, dtype=np.int64)
    v[:r] += 1
    return v


def phi_window_sum(v, a: int) -> int:
    """``sum_i max(v_{i-a+1}, ..., v_i)`` for ``v`` zero outside its listed entries."""
    if a < 1:
        raise DomainError(f"window length must be at least 1, got {a}")
    v = np.asarray(v, dtype=np.int64)
    padded = np.concatenate([np.zeros(a - 1, dtype=np.int64), v, np.zeros(a - 1, dtype=np.int64)])
    windows = np.lib.stride_tricks.sliding_window_view(padded, a)
    return int(windows.max(axis=1).sum())


def rect_functional(a: int, b: int, A: int, h: int) -> int:
    return (a - 1) * (-(-A // h)) + (b - 1) * h


def rect_plan_size(a: int, b: int, A: int, h: int) -> int:
    """``|E + R|`` for the staircase ``E`` of height ``h`` and an ``a x b`` rectangle ``R``."""
    return A + (a - 1) * (b - 1) + rect_functional(a, b, A, h)


def staircase(A: int, h: int) -> ShiftSet:
    v = lemma1_sequence(A, h)
    return ShiftSet((i, j) for i in range(h) for j in range(int(v[i])))


def plan_rectangular(a: int, b: int, A: int, grid: tuple[int, int] | None = None) -> tuple[int, ShiftSet]:
    """Height ``h`` minimizing ``(a-1) ceil(A/h) + (b-1) h`` and its staircase set.

    The search is exhaustive over ``1..A``; ties go to the smallest ``h``.
    With ``grid = (rows, cols)`` only heights whose ``E + P`` rectangle,
    ``(h + a - 1) x (ceil(A/h) + b - 1)``, fits in the grid are considered.
    """
    if a < 1 or b < 1 or A < 1:
        raise DomainError(f"need a, b, A >= 1, got a={a}, b={b}, A={A}")
    heights = range(1, A + 1)
    if grid is not None:
        rows, cols = grid
        heights = [k for k in heights if k + a - 1 <= rows and -(-A // k) + b - 1 <= cols]
        if not heights:
            raise PlanningError(
                f"no staircase of {A} shifts lets a {a}x{b} pattern fit in the {rows}x{cols} grid"
            )
    h = min(heights, key=lambda k: (rect_functional(a, b, A, k), k))
    return h, staircase(A, h)


@dataclass(frozen=True, eq=False)
class MeasurementPlan:
    pattern: Pattern
    E: tuple[PixelShift, ...]
    EP: tuple[PixelShift, ...]
    h: int
    index: np.ndarray
    f: np.ndarray | None = None
    seed: int | None = None
    dims: GridDims | None = None

    @property
    def alpha(self) -> float:
        return len(self.EP) / len(self.E)

    @property
    def alpha_exact(self) -> Fraction:
        return Fraction(len(self.EP), len(self.E))

    @property
    def n_virtual(self) -> int:
        return len(self.E)

    @property
    def n_effective(self) -> int:
        return len(self.EP)

    def effective_rate(self) -> float:
        """Fraction of the image actually measured (``|E + P| / n_P``)."""
        if self.dims is None:
            raise PlanningError("plan has no grid; effective rate is undefined")
        return len(self.EP) / self.dims.n_pixels

    def reordered(self, order) -> "MeasurementPlan":
        """Same plan with ``EP`` rows permuted (``new EP[k] = EP[order[k]]``)."""
        order = np.asarray(order)
        if sorted(order.tolist()) != list(range(len(self.EP))):
            raise PlanningError("order must be a permutation of the EP rows")
        inverse = np.empty_like(order)
        inverse[order] = np.arange(order.size)
        EP = tuple(self.EP[k] for k in order)
        return MeasurementPlan(self.pattern, self.E, EP, self.h, inverse[self.index],
                               self.f, self.seed, self.dims)

    def to_dict(self) -> dict:
        out = {
            "E": [list(e) for e in self.E],
            "EP": [list(e) for e in self.EP],
            "alpha": self.alpha,
            "seed": self.seed,
            "h": self.h,
            "pattern": [list(p) for p in self.pattern],
            "n_virtual": len(self.E),
            "n_effective": len(self.EP),
        }
        if self.dims is not None:
            out["rows"], out["cols"] = self.dims.shape
            out["effective_rate"] = self.effective_rate()
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def draw_base_measurement(n_pixels: int, seed: int) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence([seed])).standard_normal(n_pixels)


def assemble_plan(P: Pattern, E, h: int = 0, dims: GridDims | None = None,
                  seed: int | None = None, f=None) -> MeasurementPlan:
    """Build ``E + P`` and the ``(e_i, p_j) -> EP row`` index for a given ``E``."""
    E = E if isinstance(E, ShiftSet) else ShiftSet(E)
    if ORIGIN not in E:
        raise PlanningError("measurement shift set must contain (0, 0)")
    E_ord = E.ordered()
    EPset = minkowski_sum(E, P)
    EP = EPset.ordered()
    if dims is not None:
        er, ec = EPset.extent()
        if er > dims.n_rows or ec > dims.n_cols:
            raise PlanningError(
                f"E+P spans {er}x{ec} shifts, which exceeds the {dims.n_rows}x{dims.n_cols} grid"
            )
    row = {e: k for k, e in enumerate(EP)}
    index = np.array([[row[e + p] for p in P] for e in E_ord], dtype=np.int64)
    if f is None and seed is not None and dims is not None:
        f = draw_base_measurement(dims.n_pixels, seed)
    if f is not None:
        f = np.asarray(f, dtype=float)
        if dims is not None and f.size != dims.n_pixels:
            raise ShapeError(f"base measurement has length {f.size}, grid has {dims.n_pixels} pixels")
        f.setflags(write=False)
    return MeasurementPlan(P, E_ord, EP, h, index, f, seed, dims)


def plan_for_pattern(P: Pattern, A: int, dims: GridDims | None = None,
                     seed: int | None = None) -> MeasurementPlan:
    """Plan ``|E| = A`` shifted measurements for pattern ``P``.

    The enclosing rectangle of ``P`` drives the choice of ``E``; ``E + P`` and
    the reconstruction index use the true ``P``.  With ``dims`` the height
    search is limited to plans that fit the grid, and with ``seed`` as well a base measurement
    ``f`` is drawn.
    """
    a, b = P.bounding_box()
    h, E = plan_rectangular(a, b, A, dims.shape if dims is not None else None)
    return assemble_plan(P, E, h, dims, seed)


class ShiftedSensing:
    """Sensing matrix whose rows are ``(Q_e f)^T`` for an ordered list of shifts."""

    def __init__(self, f, shifts, dims: GridDims):
        f = np.asarray(f, dtype=float).ravel()
        if f.size != dims.n_pixels:
            raise ShapeError(f"base measurement has length {f.size}, grid has {dims.n_pixels} pixels")
        self.f = f
        self.shifts = tuple(PixelShift.of(e) for e in shifts)
        self.dims = dims
        self.m = len(self.shifts)
        self.n_pixels = dims.n_pixels

    def matrix(self) -> np.ndarray:
        return np.stack([self.f[shift_index(e, self.dims)] for e in self.shifts])

    def measure(self, X: MultispectralImage) -> np.ndarray:
        if X.n_pixels != self.n_pixels:
            raise ShapeError(f"image has {X.n_pixels} pixels, sensing expects {self.n_pixels}")
        return self.matrix() @ X.data

    def _mask(self) -> tuple[np.ndarray, np.ndarray]:
        r = np.array([e.dr % self.dims.n_rows for e in self.shifts], dtype=np.int64)
        c = np.array([e.dc % self.dims.n_cols for e in self.shifts], dtype=np.int64)
        return r, c

    def matvec(self, u: np.ndarray) -> np.ndarray:
        """``<Q_e f, u>`` for every shift, via a circular cross-correlation."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.n_pixels:
            raise ShapeError(f"expected length {self.n_pixels}, got {u.shape[0]}")
        B = np.fft.rfft2(self.f.reshape(self.dims.shape, order="F"))
        U = u.reshape(self.dims.shape + u.shape[1:], order="F")
        Uf = np.fft.rfft2(U, axes=(0, 1))
        Bc = np.conj(B).reshape(B.shape + (1,) * (u.ndim - 1))
        corr = np.fft.irfft2(Uf * Bc, s=self.dims.shape, axes=(0, 1))
        r, c = self._mask()
        return corr[r, c]

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        """``sum_i w_i Q_{e_i} f``, via a circular convolution."""
        w = np.asarray(w, dtype=float)
        if w.shape[0] != self.m:
            raise ShapeError(f"expected length {self.m}, got {w.shape[0]}")
        W = np.zeros(self.dims.shape + w.shape[1:])
        r, c = self._mask()
        np.add.at(W, (r, c), w)
        B = np.fft.rfft2(self.f.reshape(self.dims.shape, order="F"))
        Bb = B.reshape(B.shape + (1,) * (w.ndim - 1))
        out = np.fft.irfft2(np.fft.rfft2(W, axes=(0, 1)) * Bb, s=self.dims.shape, axes=(0, 1))
        return out.reshape((self.n_pixels,) + w.shape[1:], order="F")

    def as_operator(self) -> LinearOperator:
        return LinearOperator((self.m, self.n_pixels), matvec=self.matvec, rmatvec=self.rmatvec,
                              matmat=self.matvec, rmatmat=self.rmatvec, dtype=float)

    def gram(self) -> GramFactor:
        return virtual_gram(self.f, self.shifts, self.dims)


def build_effective_sensing(f, EP, dims: GridDims) -> ShiftedSensing:
    shifts = EP.ordered() if isinstance(EP, ShiftSet) else tuple(EP)
    return ShiftedSensing(f, shifts, dims)


def virtual_sensing(plan: MeasurementPlan) -> ShiftedSensing:
    if plan.f is None or plan.dims is None:
        raise PlanningError("plan has no base measurement or grid")
    return ShiftedSensing(plan.f, plan.E, plan.dims)


def effective_sensing(plan: MeasurementPlan) -> ShiftedSensing:
    if plan.f is None or plan.dims is None:
        raise PlanningError("plan has no base measurement or grid")
    return ShiftedSensing(plan.f, plan.EP, plan.dims)


def reconstruct_virtual(M_eff, plan: MeasurementPlan) -> np.ndarray:
    """Rearrange effective measurements into measurements of the spectralized image.

    Block ``(i, j)`` of the result (row ``i``, bands ``j n_B .. (j+1) n_B - 1``)
    is the row of ``M_eff`` measured at shift ``e_i + p_j``.
    """
    M_eff = np.asarray(M_eff)
    if M_eff.ndim == 1:
        M_eff = M_eff[:, None]
    if M_eff.shape[0] != len(plan.EP):
        raise ShapeError(f"M_eff has {M_eff.shape[0]} rows, plan has {len(plan.EP)} effective shifts")
    idx = plan.index
    if idx.shape != (len(plan.E), len(plan.pattern)) or idx.min() < 0 or idx.max() >= len(plan.EP):
        raise PlanningError("plan index is corrupt")
    n_e, n_p = idx.shape
    return M_eff[idx].reshape(n_e, n_p * M_eff.shape[1])


def apply_virtual_sensing(f, E, u, dims: GridDims) -> np.ndarray:
    shifts = E.ordered() if isinstance(E, ShiftSet) else tuple(E)
    return ShiftedSensing(f, shifts, dims).matvec(u)


def apply_virtual_sensing_adjoint(f, E, w, dims: GridDims) -> np.ndarray:
    shifts = E.ordered() if isinstance(E, ShiftSet) else tuple(E)
    return ShiftedSensing(f, shifts, dims).rmatvec(w)


def virtual_gram(f, E, dims: GridDims) -> GramFactor:
    """Factorized ``F_virt F_virt^T`` with entries ``<f, Q_{e_j - e_i} f>``.

    Each distinct difference is evaluated once as an exact gather-and-dot.
    """
    f = np.asarray(f, dtype=float).ravel()
    shifts = E.ordered() if isinstance(E, ShiftSet) else tuple(PixelShift.of(e) for e in E)
    n_rows, n_cols = dims.shape
    er = np.array([e.dr for e in shifts])
    ec = np.array([e.dc for e in shifts])
    ddr = (er[None, :] - er[:, None]) % n_rows
    ddc = (ec[None, :] - ec[:, None]) % n_cols
    keys = ddr * n_cols + ddc
    uniq, inv = np.unique(keys, return_inverse=True)
    vals = np.array([f @ f[shift_index((k // n_cols, k % n_cols), dims)] for k in uniq])
    G = vals[inv].reshape(keys.shape)
    G = 0.5 * (G + G.T)
    return GramFactor(G)
