"""Rate and noise sweeps over the planted synthetic suites.

Each repeat ``k`` uses seed ``seed + k`` for the scene, the sensing draw and
the noise, so a sweep is reproducible from its arguments alone.  Repeats
may run in a process pool; rows always follow the input order.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .detect import add_noise, compressive_pattern_match, compressive_template_match
from .errors import DomainError
from .sensing import generate, measurement_count, measure
from .solver import Regularizer, SolverConfig
from .spectralize import HOOK, Pattern
from .synthetic import planted_pattern_scene, planted_template_scene


@dataclass(frozen=True)
class SweepSetup:
    mode: str = "template"          # "template" or "pattern"
    reg: str = "tvl1"
    sensing: str = "gaussian"
    rows: int = 16
    cols: int = 16
    bands: int = 4
    targets: int = 5
    target_size: int = 2
    pattern: Pattern = HOOK
    cfg: SolverConfig = SolverConfig()

    def __post_init__(self):
        if self.mode not in ("template", "pattern"):
            raise DomainError(f"sweep mode must be 'template' or 'pattern', got {self.mode!r}")


def run_once(setup: SweepSetup, rate: float, noise_pct: float, seed: int) -> tuple[float, bool]:
    """One pipeline run; returns (metric, converged).

    The metric is ``wrong_pct`` in template mode and ``anchor_errors`` in
    pattern mode.
    """
    if setup.mode == "template":
        X, s, ref = planted_template_scene(setup.rows, setup.cols, setup.bands, setup.targets,
                                           setup.target_size, seed)
    else:
        X, sigs, ref = planted_pattern_scene(setup.pattern, setup.rows, setup.cols, setup.bands,
                                             setup.targets, seed)
    X = add_noise(X, noise_pct, seed)
    reg = Regularizer.l1() if setup.reg == "l1" else Regularizer.tvl1(X.dims)
    if setup.mode == "template":
        m = measurement_count(rate, X.n_pixels)
        if m < 1:
            raise DomainError(f"rate {rate} gives no measurements on {X.n_pixels} pixels")
        F = generate(setup.sensing, m, X.n_pixels, seed)
        rep = compressive_template_match(measure(F, X), F, s, reg, setup.cfg, X.dims, ref)
        return rep.wrong_pct, rep.solver.converged
    rep = compressive_pattern_match(X, setup.pattern, sigs, rate, reg, setup.cfg, seed=seed,
                                    reference=ref)
    return float(rep.anchor_errors), rep.solver.converged


def _job(args):
    return run_once(*args)


def _run_grid(jobs, n_jobs: int):
    if n_jobs <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_job, jobs))


def _aggregate(values, repeats: int):
    out = []
    for k in range(0, len(values), repeats):
        chunk = values[k:k + repeats]
        metrics = np.array([v[0] for v in chunk])
        conv = np.array([v[1] for v in chunk])
        out.append((float(metrics.mean()), float(metrics.std()), float(conv.mean())))
    return out


def sweep_rate(setup: SweepSetup, rates, repeats: int, seed: int = 0, noise_pct: float = 0.0,
               n_jobs: int = 1) -> list[tuple]:
    """Rows ``(rate, mean, std, converged_fraction)``, one per rate."""
    rates = [float(r) for r in rates]
    if repeats < 1:
        raise DomainError("repeats must be at least 1")
    jobs = [(setup, r, noise_pct, seed + k) for r in rates for k in range(repeats)]
    agg = _aggregate(_run_grid(jobs, n_jobs), repeats)
    return [(r, *a) for r, a in zip(rates, agg)]


def sweep_noise(setup: SweepSetup, levels, rate: float, repeats: int, seed: int = 0,
                n_jobs: int = 1) -> list[tuple]:
    """Rows ``(noise_pct, mean, std, converged_fraction)``, one per noise level."""
    levels = [float(x) for x in levels]
    if repeats < 1:
        raise DomainError("repeats must be at least 1")
    jobs = [(setup, rate, x, seed + k) for x in levels for k in range(repeats)]
    agg = _aggregate(_run_grid(jobs, n_jobs), repeats)
    return [(x, *a) for x, a in zip(levels, agg)]
