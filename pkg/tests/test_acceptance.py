"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` to see the verdict lines
alongside the test results.
"""
import itertools
import time
from fractions import Fraction

import numpy as np

from cspattern.msimage import GridDims, MultispectralImage, PixelShift, apply_qp, pixel_coords, vec, vecc_index
from cspattern.planner import (
    assemble_plan,
    effective_sensing,
    lemma1_sequence,
    minkowski_sum,
    phi_window_sum,
    plan_for_pattern,
    plan_rectangular,
    reconstruct_virtual,
    virtual_sensing,
)
from cspattern.sensing import (
    SensingEnsemble,
    generate,
    identity_error_fro,
    lambda_sweep,
    measurement_count,
)
from cspattern.detect import compressive_pattern_match, compressive_template_match, template_match
from cspattern.solver import Regularizer, SolverConfig, solve_constrained
from cspattern.spectralize import CHECKERED, HOOK, Pattern, rectangle, spectralize
from cspattern.sweeps import SweepSetup, sweep_rate
from cspattern.synthetic import checkerboard_scene, planted_pattern_scene, planted_template_scene

# frozen after the pilot run in scripts/pilot_degradation.py (seeds 100..109);
# the acceptance run uses the disjoint seeds 0..9
DEGRADATION_CAP_PCT = 7.5


def verdict(capsys, number, title, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail} | "
              f"{elapsed:.2f}s (limit {limit:.0f}s)")
    assert ok, f"criterion {number} failed: {detail}, {elapsed:.2f}s"


def test_criterion_01_frobenius_constant(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(20):
        kind = ("gaussian", "circulant")[k % 2]
        n = int(rng.choice([64, 100, 256]))
        p = float(rng.choice([0.1, 0.3, 0.5]))
        m = measurement_count(p, n)
        ens = generate(kind, m, n, seed=1000 + k)
        worst = max(worst, abs(identity_error_fro(ens) - np.sqrt(n - m)))
    verdict(capsys, 1, "Frobenius constant", worst <= 1e-6,
            f"max deviation {worst:.2e} over 20 matrices", time.perf_counter() - t0, 10)


def test_criterion_02_lambda_diagnostic(capsys):
    t0 = time.perf_counter()
    lams = np.arange(1.0, 5.0 + 1e-9, 0.04)
    curve = np.mean([lambda_sweep(generate("gaussian", 30, 100, s), lams) for s in range(5)], axis=0)
    best = float(lams[np.argmin(curve)])
    verdict(capsys, 2, "lambda diagnostic", 2.4 <= best <= 3.6,
            f"argmin lambda = {best:.2f}", time.perf_counter() - t0, 30)


def test_criterion_03_spectralization_ground_truth(capsys):
    t0 = time.perf_counter()
    expected = np.array([[1, 4, 5], [4, 7, 8], [7, 1, 2], [2, 5, 6], [5, 8, 9],
                         [8, 2, 3], [3, 6, 4], [6, 9, 7], [9, 3, 1]])
    I = np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]], dtype=float)
    S = spectralize(MultispectralImage(GridDims(3, 3), vec(I)), HOOK).data
    ok = np.array_equal(S, expected) and S[3].tolist() == [2, 5, 6]
    verdict(capsys, 3, "spectralization ground truth", ok,
            f"row 3 = {S[3].astype(int).tolist()}", time.perf_counter() - t0, 1)


def test_criterion_04_planning_worked_example(capsys):
    t0 = time.perf_counter()
    plan = plan_for_pattern(rectangle(6, 10), 4096, GridDims(128, 128))
    rate_pct = 100 * plan.effective_rate()
    ok = (plan.h == 50 and len(plan.E) == 4096 and plan.n_effective == 5001
          and plan.alpha_exact == Fraction(5001, 4096) and abs(rate_pct - 30.53) <= 0.01)
    verdict(capsys, 4, "planning worked example", ok,
            f"h={plan.h} |E|={len(plan.E)} |E+P|={plan.n_effective} alpha={plan.alpha_exact} "
            f"rate={rate_pct:.3f}%", time.perf_counter() - t0, 5)


def _brute_min_sum(A, P, grid=4):
    a, b = P.bounding_box()
    cells = np.array([(r, c) for r in range(grid) for c in range(grid)])
    combos = np.array(list(itertools.combinations(range(len(cells)), A)))
    occ = np.zeros((len(combos), grid + a - 1, grid + b - 1), bool)
    idx = np.arange(len(combos))
    for p in P:
        for k in range(A):
            rc = cells[combos[:, k]]
            occ[idx, rc[:, 0] + p.dr, rc[:, 1] + p.dc] = True
    return int(occ.sum(axis=(1, 2)).min())


def test_criterion_05_staircase_oracles(capsys):
    t0 = time.perf_counter()
    bad_identity = 0
    for A in range(1, 101):
        for h in range(1, A + 1):
            v = lemma1_sequence(A, h)
            ceil = -(-A // h)
            bad_identity += sum(phi_window_sum(v, a) != A + (a - 1) * ceil for a in range(1, 11))
    beaten = []
    for a, b in itertools.product(range(1, 4), repeat=2):
        P = rectangle(a, b)
        for A in range(1, 7):
            _, E = plan_rectangular(a, b, A)
            if _brute_min_sum(A, P) < len(minkowski_sum(E, P)):
                beaten.append((a, b, A))
    verdict(capsys, 5, "staircase oracles", bad_identity == 0 and not beaten,
            f"identity violations {bad_identity}, plans beaten by brute force {len(beaten)}",
            time.perf_counter() - t0, 120)


def test_criterion_06_reconstruction_exactness(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    mismatches = 0
    for _ in range(20):
        dims = GridDims(int(rng.integers(8, 13)), int(rng.integers(8, 13)))
        raw = {tuple(x) for x in rng.integers(-2, 3, (int(rng.integers(1, 5)), 2))}
        P, _ = Pattern.normalize(sorted(raw))
        E = {(0, 0)} | {tuple(x) for x in rng.integers(0, 3, (int(rng.integers(1, 7)), 2))}
        f = rng.integers(-4, 5, dims.n_pixels).astype(float)
        X = MultispectralImage(dims, rng.integers(-4, 5, (dims.n_pixels, int(rng.integers(1, 4)))).astype(float))
        plan = assemble_plan(P, E, dims=dims, f=f)
        M_virt = reconstruct_virtual(effective_sensing(plan).measure(X), plan)
        expected = virtual_sensing(plan).matrix() @ spectralize(X, P).data
        mismatches += not np.array_equal(M_virt, expected)
    verdict(capsys, 6, "reconstruction exactness", mismatches == 0,
            f"{mismatches} of 20 triples differ", time.perf_counter() - t0, 30)


def test_criterion_07_solver_contract(capsys):
    t0 = time.perf_counter()
    cfg = SolverConfig()
    failures = []
    for seed in range(5):
        X, s, ref = planted_template_scene(seed=seed)
        for reg in (Regularizer.l1(), Regularizer.tvl1(X.dims)):
            res = solve_constrained(X.data.T, s, reg, cfg)
            rep = template_match(X, s, reg, cfg, reference=ref)
            ok = res.converged and res.residual < cfg.err and (res.u >= 0).all() and rep.wrong_pct == 0
            if not ok:
                failures.append((seed, reg.variant))
    verdict(capsys, 7, "solver contract", not failures,
            f"failing (seed, reg): {failures}", time.perf_counter() - t0, 60)


def test_criterion_08_compressive_degradation(capsys):
    t0 = time.perf_counter()
    tv = sweep_rate(SweepSetup("template", "tvl1", "gaussian"), [0.05, 0.30], repeats=10, seed=0)
    l1 = sweep_rate(SweepSetup("template", "l1", "gaussian"), [0.30], repeats=10, seed=0)
    low, high, l1_high = tv[0][1], tv[1][1], l1[0][1]
    ok = high <= low and high <= l1_high and high <= DEGRADATION_CAP_PCT
    verdict(capsys, 8, "compressive degradation trend", ok,
            f"TVL1 p=0.05 {low:.3f}%, TVL1 p=0.30 {high:.3f}%, L1 p=0.30 {l1_high:.3f}%, "
            f"cap {DEGRADATION_CAP_PCT}%", time.perf_counter() - t0, 600)


def test_criterion_09_pattern_pipeline(capsys):
    t0 = time.perf_counter()
    errors = []
    for seed in range(3):
        X, sigs, ref = planted_pattern_scene(HOOK, bands=1, seed=seed)
        errors.append(("hook", seed, compressive_pattern_match(X, HOOK, sigs, 0.30, seed=seed,
                                                               reference=ref).anchor_errors))
        X, sigs, ref = checkerboard_scene(seed=seed)
        errors.append(("checkered", seed, compressive_pattern_match(X, CHECKERED, sigs, 0.30, seed=seed,
                                                                    reference=ref).anchor_errors))
    P1 = Pattern(((0, 0),))
    X, s, ref = planted_template_scene(seed=1)
    reg = Regularizer.tvl1(X.dims)
    rep = compressive_pattern_match(X, P1, [s], 0.30, reg, seed=9, reference=ref)
    Fv = virtual_sensing(rep.plan).matrix()
    M = Fv @ X.data
    tmpl = compressive_template_match(M, SensingEnsemble.from_matrix(Fv, "shifted", 9), s, reg, reference=ref)
    degenerate = np.array_equal(rep.M_virt, M) and tmpl.mask == rep.mask
    ok = all(e == 0 for *_, e in errors) and degenerate
    verdict(capsys, 9, "pattern pipeline", ok,
            f"anchor errors {[e for *_, e in errors]}, |P|=1 bit-equal {degenerate}",
            time.perf_counter() - t0, 300)


def _qp_dense(p, dims):
    Q = np.zeros((dims.n_pixels, dims.n_pixels))
    for q in range(dims.n_pixels):
        r, c = pixel_coords(q, dims)
        Q[q, vecc_index((r - p[0]) % dims.n_rows, (c - p[1]) % dims.n_cols, dims)] = 1.0
    return Q


def test_criterion_10_shift_algebra(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(100):
        dims = GridDims(int(rng.integers(1, 8)), int(rng.integers(1, 8)))
        p, q = (PixelShift.of(rng.integers(-15, 16, 2)) for _ in range(2))
        u, w = rng.standard_normal((2, dims.n_pixels))
        group = np.abs(apply_qp(apply_qp(u, q, dims), p, dims) - apply_qp(u, p + q, dims)).max()
        Q = _qp_dense(p, dims)
        orth = np.abs(Q.T @ Q - np.eye(dims.n_pixels)).max()
        inverse = np.abs(Q.T - _qp_dense(-p, dims)).max()
        adjoint = abs(apply_qp(u, p, dims) @ w - u @ apply_qp(w, -p, dims))
        apply = np.abs(apply_qp(u, p, dims) - Q @ u).max()
        worst = max(worst, group, orth, inverse, adjoint, apply)
    verdict(capsys, 10, "shift algebra", worst <= 1e-10,
            f"max violation {worst:.2e} over 100 cases", time.perf_counter() - t0, 10)
