"""Detection pipelines, Lloyd-Max binarization and evaluation."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError
from .msimage import GridDims, Mask, MultispectralImage
from .planner import (
    MeasurementPlan,
    effective_sensing,
    plan_for_pattern,
    reconstruct_virtual,
    virtual_sensing,
)
from .sensing import SensingEnsemble, measurement_count
from .solver import Regularizer, SolverConfig, SolverResult, solve_constrained
from .spectralize import Pattern, spectralized_signature


@dataclass
class DetectionReport:
    mask: Mask
    u: np.ndarray
    solver: SolverResult
    wrong_pct: float | None = None
    anchor_errors: int | None = None
    elapsed: float = 0.0
    info: dict = field(default_factory=dict)
    plan: MeasurementPlan | None = field(default=None, repr=False)
    M_virt: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            **self.solver.summary(),
            "positives": self.mask.count,
            "elapsed_s": self.elapsed,
            "wrong_pct": self.wrong_pct,
            "anchor_errors": self.anchor_errors,
        }
        out.update(self.info)
        return out


def lloyd_max_binarize(u, dims: GridDims | None = None, max_iter: int = 1000) -> Mask:
    """Two-level Lloyd-Max quantization of ``u``; the upper level is positive.

    Centroids start at ``min(u)`` and ``max(u)``; assignment and centroid
    updates alternate until the assignment stops changing.  Values exactly
    on the midpoint go to the lower level.  Constant input gives an
    all-negative mask.
    """
    u = np.asarray(u, dtype=float).ravel()
    dims = dims or GridDims(1, u.size)
    lo, hi = u.min(), u.max()
    if not hi > lo:
        return Mask(dims, np.zeros(u.size, bool))
    assign = u > 0.5 * (lo + hi)
    for _ in range(max_iter):
        lo, hi = u[~assign].mean(), u[assign].mean()
        new = u > 0.5 * (lo + hi)
        if np.array_equal(new, assign):
            break
        assign = new
    return Mask(dims, assign)


def evaluate(mask: Mask, reference: Mask, valid: Mask | None = None) -> tuple[float, int]:
    """Percentage of disagreeing pixels and their count.

    ``valid`` restricts the comparison to a subset of pixels (for instance
    anchors whose pattern does not wrap around the border); the percentage
    is then relative to that subset.
    """
    if mask.dims != reference.dims:
        raise ShapeError(f"mask grids differ: {mask.dims} vs {reference.dims}")
    diff = mask.values != reference.values
    total = mask.dims.n_pixels
    if valid is not None:
        if valid.dims != mask.dims:
            raise ShapeError("validity mask grid differs from the masks")
        diff = diff & valid.values
        total = max(valid.count, 1)
    wrong = int(diff.sum())
    return 100.0 * wrong / total, wrong


def interior_anchors(dims: GridDims, P: Pattern) -> Mask:
    """Anchors whose whole pattern lies inside the grid without wrapping."""
    r = np.arange(dims.n_rows)[:, None]
    c = np.arange(dims.n_cols)[None, :]
    ok = np.ones(dims.shape, bool)
    for p in P:
        ok &= (r + p.dr >= 0) & (r + p.dr < dims.n_rows) & (c + p.dc >= 0) & (c + p.dc < dims.n_cols)
    return Mask(dims, ok.ravel(order="F"))


def add_noise(X: MultispectralImage, pct: float, seed: int) -> MultispectralImage:
    """Add i.i.d. Gaussian noise with std ``pct/100 * (max(X) - min(X))``."""
    if pct < 0:
        raise DomainError(f"noise percentage must be nonnegative, got {pct}")
    if pct == 0:
        return X
    std = pct / 100.0 * float(X.data.max() - X.data.min())
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    return MultispectralImage(X.dims, X.data + std * rng.standard_normal(X.data.shape))


def _finish(u_result: SolverResult, dims: GridDims, reference, valid, t0, info) -> DetectionReport:
    mask = lloyd_max_binarize(u_result.u, dims)
    report = DetectionReport(mask, u_result.u, u_result, info=info)
    if reference is not None:
        report.wrong_pct, report.anchor_errors = evaluate(mask, reference, valid)
    report.elapsed = time.perf_counter() - t0
    return report


def _check_signature(s, n_bands: int) -> np.ndarray:
    s = np.asarray(getattr(s, "values", s), dtype=float).ravel()
    if s.size != n_bands:
        raise ShapeError(f"signature has {s.size} entries, image has {n_bands} bands")
    return s


def template_match(X: MultispectralImage, s, reg: Regularizer | None = None,
                   cfg: SolverConfig | None = None, reference: Mask | None = None) -> DetectionReport:
    """Full-data detection: ``argmin ||phi(u)||_1`` s.t. ``||X^T u - s|| < err``, ``u >= 0``."""
    t0 = time.perf_counter()
    s = _check_signature(s, X.n_bands)
    res = solve_constrained(X.data.T, s, reg, cfg)
    return _finish(res, X.dims, reference, None, t0, {"mode": "template"})


def compressive_operator(M, F, gram) -> np.ndarray:
    """Dense ``M^T (F F^T)^{-1} F`` (shape ``n_bands x n_P``) without forming an inverse.

    ``F`` is either a dense matrix or an object with an ``rmatvec`` adjoint.
    """
    Z = gram.solve(np.asarray(M))
    if isinstance(F, np.ndarray):
        return Z.T @ F
    return np.asarray(F.rmatvec(Z)).T


def compressive_template_match(M, F: SensingEnsemble, s, reg: Regularizer | None = None,
                               cfg: SolverConfig | None = None, dims: GridDims | None = None,
                               reference: Mask | None = None) -> DetectionReport:
    """Detection from measurements ``M = F X`` only.

    The image is replaced by ``M^T (F F^T)^{-1} F`` and the target by
    ``(m / n_P) s``.
    """
    t0 = time.perf_counter()
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.shape[0] != F.m:
        raise ShapeError(f"M has {M.shape[0]} rows but F has {F.m}")
    s = _check_signature(s, M.shape[1])
    if dims is None:
        if reg is not None and reg.dims is not None:
            dims = reg.dims
        elif reference is not None:
            dims = reference.dims
        else:
            dims = GridDims(1, F.n_pixels)
    A = compressive_operator(M, F.F, F.gram)
    res = solve_constrained(A, (F.m / F.n_pixels) * s, reg, cfg)
    info = {"mode": "ctemplate", "m": F.m, "rate": F.m / F.n_pixels, "sensing": F.kind}
    return _finish(res, dims, reference, None, t0, info)


def compressive_pattern_match(data, P: Pattern, signatures, rate: float,
                              reg: Regularizer | None = None, cfg: SolverConfig | None = None,
                              seed: int = 0, dims: GridDims | None = None,
                              reference: Mask | None = None, exclude_border: bool = False,
                              plan: MeasurementPlan | None = None) -> DetectionReport:
    """Pattern detection from shifted measurements.

    ``data`` is either the image ``X`` (effective measurements are then taken
    here) or an already acquired ``M_eff`` whose rows follow the plan's
    ``EP`` order; in the latter case ``dims`` is required.  Positives in the
    returned mask are pattern anchors, i.e. the pixel under offset ``(0, 0)``.
    """
    t0 = time.perf_counter()
    if isinstance(data, MultispectralImage):
        dims = data.dims
    elif dims is None:
        raise ShapeError("dims are required when passing effective measurements")
    if plan is None:
        n = dims.n_pixels
        A_count = measurement_count(rate, n)
        if A_count < 1:
            raise DomainError(f"rate {rate} gives no measurements on {n} pixels")
        plan = plan_for_pattern(P, A_count, dims, seed)
    elif plan.pattern != P:
        raise ShapeError("plan was made for a different pattern")

    if isinstance(data, MultispectralImage):
        M_eff = effective_sensing(plan).measure(data)
    else:
        M_eff = np.asarray(data, dtype=float)
        if M_eff.ndim == 1:
            M_eff = M_eff[:, None]
    M_virt = reconstruct_virtual(M_eff, plan)
    report = pattern_match_virtual(M_virt, plan, signatures, reg, cfg, reference, exclude_border)
    report.info["rate"] = rate
    report.elapsed = time.perf_counter() - t0
    return report


def pattern_match_virtual(M_virt, plan: MeasurementPlan, signatures,
                          reg: Regularizer | None = None, cfg: SolverConfig | None = None,
                          reference: Mask | None = None,
                          exclude_border: bool = False) -> DetectionReport:
    """Solve and binarize given measurements ``M_virt`` of the spectralized image.

    ``M_virt`` may come from :func:`reconstruct_virtual` or, for testing,
    directly from ``F_virt spec_P(X)``.
    """
    t0 = time.perf_counter()
    dims, P = plan.dims, plan.pattern
    if dims is None or plan.f is None:
        raise ShapeError("plan needs a grid and a base measurement")
    s = spectralized_signature(signatures).values
    M_virt = np.asarray(M_virt, dtype=float)
    if s.size != M_virt.shape[1]:
        raise ShapeError(f"spectralized signature has {s.size} entries, M_virt has {M_virt.shape[1]} columns")
    Fv = virtual_sensing(plan)
    A = compressive_operator(M_virt, Fv, Fv.gram())
    m = len(plan.E)
    res = solve_constrained(A, (m / dims.n_pixels) * s, reg, cfg)
    valid = interior_anchors(dims, P) if exclude_border else None
    info = {
        "mode": "cpattern",
        "n_virtual": m,
        "n_effective": len(plan.EP),
        "alpha": plan.alpha,
        "effective_rate": plan.effective_rate(),
        "h": plan.h,
    }
    report = _finish(res, dims, reference, valid, t0, info)
    report.plan = plan
    report.M_virt = M_virt
    return report
