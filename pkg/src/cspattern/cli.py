"""Command-line front end.

Exit codes: 0 on success, 2 on invalid input (bad flags, malformed files,
infeasible parameters), 3 when ``--strict`` is set and the solver did not
converge, 1 on numerical breakdown or I/O failure.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import io
from .detect import (
    compressive_pattern_match,
    compressive_template_match,
    evaluate,
    interior_anchors,
    template_match,
)
from .errors import CSPatternError, FactorizationError, ValidationError
from .msimage import GridDims
from .planner import plan_for_pattern
from .sensing import KINDS, generate, measure, measurement_count
from .solver import Regularizer, SolverConfig
from .spectralize import HOOK, Pattern, load_pattern, rectangle
from .sweeps import SweepSetup, sweep_noise, sweep_rate
from .synthetic import planted_pattern_scene, planted_template_scene

EXIT_OK, EXIT_FAILURE, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2, 3


class UsageError(CSPatternError, ValueError):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_values(text: str) -> list[float]:
    """``"1..40"``, ``"0..10:2"`` or a comma list such as ``"5,10,30"``."""
    text = text.strip()
    m = re.fullmatch(r"([-+]?[\d.]+)\.\.([-+]?[\d.]+)(?::([\d.]+))?", text)
    try:
        if m:
            lo, hi = float(m.group(1)), float(m.group(2))
            step = float(m.group(3) or 1)
            if step <= 0 or hi < lo:
                raise ValueError
            n = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return [round(lo + k * step, 12) for k in range(n)]
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse value list {text!r}") from None
    if not vals:
        raise UsageError("empty value list")
    return vals


def parse_pattern(text: str) -> Pattern:
    """A pattern JSON file, ``AxB`` for a full rectangle, or ``hook``."""
    if text == "hook":
        return HOOK
    m = re.fullmatch(r"(\d+)x(\d+)", text)
    if m:
        return rectangle(int(m.group(1)), int(m.group(2)))
    return load_pattern(text)


def _solver_args(p):
    p.add_argument("--reg", choices=("l1", "tvl1"), default="l1")
    p.add_argument("--err", type=float, default=SolverConfig.err)
    p.add_argument("--beta1", type=float, default=SolverConfig.beta1)
    p.add_argument("--beta2", type=float, default=SolverConfig.beta2)
    p.add_argument("--max-iter", type=int, default=SolverConfig.max_iter)


def _config(args) -> SolverConfig:
    return SolverConfig(args.beta1, args.beta2, args.err, args.max_iter)


def _reg(name: str, dims: GridDims) -> Regularizer:
    return Regularizer.l1() if name == "l1" else Regularizer.tvl1(dims)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json-errors", action="store_true", default=argparse.SUPPRESS,
                        help="print errors as a JSON object on stderr")
    common.add_argument("--strict", action="store_true", default=argparse.SUPPRESS,
                        help="exit with status 3 if the solver does not converge")

    parser = _Parser(prog="cspattern", parents=[common],
                     description="Template and pattern detection from compressive measurements.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-synthetic", parents=[common], help="write a planted synthetic scene")
    p.add_argument("--rows", type=int, default=16)
    p.add_argument("--cols", type=int, default=16)
    p.add_argument("--bands", type=int, default=4)
    p.add_argument("--targets", type=int, default=5)
    p.add_argument("--target-size", type=int, default=2)
    p.add_argument("--pattern", help="plant copies of this pattern instead of square targets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output stem")

    p = sub.add_parser("template-match", parents=[common], help="detection on a full image")
    p.add_argument("--image", required=True)
    p.add_argument("--signature", required=True)
    _solver_args(p)
    p.add_argument("--reference")
    p.add_argument("--out-mask")
    p.add_argument("--out-report")

    p = sub.add_parser("ctemplate-match", parents=[common],
                       help="detection from simulated compressive measurements")
    p.add_argument("--image", required=True)
    p.add_argument("--signature", required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--sensing", choices=KINDS, default="gaussian")
    p.add_argument("--seed", type=int, default=0)
    _solver_args(p)
    p.add_argument("--reference")
    p.add_argument("--out-mask")
    p.add_argument("--out-report")

    p = sub.add_parser("cpattern-match", parents=[common],
                       help="pattern detection from shifted measurements")
    p.add_argument("--image", required=True)
    p.add_argument("--pattern", required=True)
    p.add_argument("--signatures", required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    _solver_args(p)
    p.add_argument("--reference")
    p.add_argument("--exclude-border", action="store_true")
    p.add_argument("--out-mask")
    p.add_argument("--out-report")
    p.add_argument("--out-plan")

    p = sub.add_parser("plan", parents=[common], help="plan shifted measurements for a pattern")
    p.add_argument("--pattern", required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    for name, helptext in (("sweep-rate", "mean error versus measurement rate"),
                           ("sweep-noise", "mean error versus added noise")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        if name == "sweep-rate":
            p.add_argument("--rates", default="1..40", help="rates in percent")
            p.add_argument("--noise", type=float, default=0.0, help="noise in percent")
        else:
            p.add_argument("--noise", default="0..10", help="noise levels in percent")
            p.add_argument("--rate", type=float, default=0.3)
        p.add_argument("--repeats", type=int, default=10)
        p.add_argument("--mode", choices=("template", "pattern"),
                       default="template" if name == "sweep-rate" else "pattern")
        p.add_argument("--pattern", default="hook")
        p.add_argument("--sensing", choices=KINDS, default="gaussian")
        p.add_argument("--rows", type=int, default=16)
        p.add_argument("--cols", type=int, default=16)
        p.add_argument("--bands", type=int)
        p.add_argument("--targets", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        _solver_args(p)
        p.set_defaults(reg="tvl1" if name == "sweep-rate" else "l1")
        p.add_argument("--out", help="CSV path (stdout if omitted)")

    p = sub.add_parser("eval", parents=[common], help="compare a mask with a reference mask")
    p.add_argument("--mask", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--exclude-border", metavar="PATTERN",
                   help="ignore anchors whose pattern would wrap around the border")
    return parser


def _report(rep, args, cfg: SolverConfig, extra: dict) -> dict:
    out = rep.to_dict()
    out["config"] = {
        "command": args.command,
        "reg": args.reg,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "err": cfg.err,
        "max_iter": cfg.max_iter,
        **extra,
    }
    return out


def _emit(rep, args, cfg, extra) -> int:
    report = _report(rep, args, cfg, extra)
    if args.out_mask:
        io.save_mask(rep.mask, args.out_mask)
    if args.out_report:
        io.save_json(report, args.out_report)
    print(json.dumps({k: report[k] for k in ("iterations", "residual", "converged", "positives",
                                             "wrong_pct", "anchor_errors")}))
    if args.strict and not rep.solver.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK


def _reference(path, dims):
    if not path:
        return None
    ref = io.load_mask(path)
    if ref.dims != dims:
        raise ValidationError(f"reference mask is {ref.dims.shape}, image is {dims.shape}")
    return ref


def cmd_gen_synthetic(args) -> int:
    hdr, raw = io.raster_paths(args.out)
    stem = hdr.with_suffix("")
    mask_path = Path(f"{stem}.mask.pgm")
    if args.pattern:
        P = parse_pattern(args.pattern)
        X, sigs, ref = planted_pattern_scene(P, args.rows, args.cols, args.bands, args.targets,
                                             args.seed)
        sig_path = Path(f"{stem}.signatures.json")
        io.save_json([s.tolist() for s in sigs], sig_path)
        io.save_json([list(p) for p in P], f"{stem}.pattern.json")
    else:
        X, s, ref = planted_template_scene(args.rows, args.cols, args.bands, args.targets,
                                           args.target_size, args.seed)
        sig_path = Path(f"{stem}.signature.json")
        io.save_json(s.tolist(), sig_path)
    io.save_raster(X, hdr, raw)
    io.save_mask(ref, mask_path)
    print(json.dumps({"header": str(hdr), "payload": str(raw), "mask": str(mask_path),
                      "signature": str(sig_path), "positives": ref.count}))
    return EXIT_OK


def cmd_template_match(args) -> int:
    X = io.load_raster(args.image)
    s = io.load_signature(args.signature)
    cfg = _config(args)
    rep = template_match(X, s, _reg(args.reg, X.dims), cfg, _reference(args.reference, X.dims))
    return _emit(rep, args, cfg, {"image": args.image, "signature": args.signature})


def cmd_ctemplate_match(args) -> int:
    X = io.load_raster(args.image)
    s = io.load_signature(args.signature)
    cfg = _config(args)
    m = measurement_count(args.rate, X.n_pixels)
    if m < 1:
        raise ValidationError(f"rate {args.rate} gives no measurements on {X.n_pixels} pixels")
    F = generate(args.sensing, m, X.n_pixels, args.seed)
    rep = compressive_template_match(measure(F, X), F, s, _reg(args.reg, X.dims), cfg, X.dims,
                                     _reference(args.reference, X.dims))
    extra = {"image": args.image, "signature": args.signature, "rate": args.rate,
             "seed": args.seed, **F.descriptor()}
    return _emit(rep, args, cfg, extra)


def cmd_cpattern_match(args) -> int:
    X = io.load_raster(args.image)
    P = parse_pattern(args.pattern)
    sigs = io.load_signatures(args.signatures)
    if len(sigs) != len(P):
        raise ValidationError(f"{len(sigs)} signatures given for a pattern of {len(P)} offsets")
    cfg = _config(args)
    rep = compressive_pattern_match(X, P, sigs, args.rate, _reg(args.reg, X.dims), cfg,
                                    seed=args.seed, reference=_reference(args.reference, X.dims),
                                    exclude_border=args.exclude_border)
    if args.out_plan:
        io.save_json(rep.plan.to_dict(), args.out_plan)
    extra = {"image": args.image, "pattern": [list(p) for p in P], "rate": args.rate,
             "seed": args.seed}
    return _emit(rep, args, cfg, extra)


def cmd_plan(args) -> int:
    P = parse_pattern(args.pattern)
    dims = GridDims(args.rows, args.cols)
    if not 0 < args.rate <= 1:
        raise ValidationError(f"rate must lie in (0, 1], got {args.rate}")
    A = measurement_count(args.rate, dims.n_pixels)
    if A < 1:
        raise ValidationError(f"rate {args.rate} gives no measurements on {dims.n_pixels} pixels")
    plan = plan_for_pattern(P, A, dims, args.seed)
    if args.out:
        io.save_json(plan.to_dict(), args.out)
    print(f"|E|={plan.n_virtual} h={plan.h} |E+P|={plan.n_effective} "
          f"alpha={plan.alpha:.6f} effective_rate={plan.effective_rate():.6f}")
    return EXIT_OK


def _sweep_setup(args) -> SweepSetup:
    pattern = parse_pattern(args.pattern)
    if args.mode == "template":
        bands, targets = args.bands or 4, args.targets or 5
    else:
        bands, targets = args.bands or 1, args.targets or 1
    return SweepSetup(args.mode, args.reg, args.sensing, args.rows, args.cols, bands, targets,
                      pattern=pattern, cfg=_config(args))


def _write_rows(args, header, rows):
    if args.out:
        io.write_curve(args.out, header, rows)
    else:
        import csv

        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)


def _metric_name(mode: str) -> str:
    return "mean_wrong_pct" if mode == "template" else "mean_anchor_errors"


def cmd_sweep_rate(args) -> int:
    setup = _sweep_setup(args)
    rates = parse_values(args.rates)
    if any(not 0 < r <= 100 for r in rates):
        raise ValidationError("rates are percentages in (0, 100]")
    rows = sweep_rate(setup, [r / 100 for r in rates], args.repeats, args.seed, args.noise,
                      args.jobs)
    rows = [(r, *row[1:]) for r, row in zip(rates, rows)]
    _write_rows(args, ["rate_pct", _metric_name(setup.mode), "std", "converged_frac"], rows)
    return EXIT_OK


def cmd_sweep_noise(args) -> int:
    setup = _sweep_setup(args)
    levels = parse_values(args.noise)
    if any(x < 0 for x in levels):
        raise ValidationError("noise levels must be nonnegative")
    rows = sweep_noise(setup, levels, args.rate, args.repeats, args.seed, args.jobs)
    _write_rows(args, ["noise_pct", _metric_name(setup.mode), "std", "converged_frac"], rows)
    return EXIT_OK


def cmd_eval(args) -> int:
    mask = io.load_mask(args.mask)
    ref = io.load_mask(args.reference)
    valid = interior_anchors(mask.dims, parse_pattern(args.exclude_border)) if args.exclude_border else None
    pct, count = evaluate(mask, ref, valid)
    print(json.dumps({"wrong_pct": pct, "anchor_errors": count, "positives": mask.count,
                      "reference_positives": ref.count, "n_pixels": mask.dims.n_pixels}))
    return EXIT_OK


COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "template-match": cmd_template_match,
    "ctemplate-match": cmd_ctemplate_match,
    "cpattern-match": cmd_cpattern_match,
    "plan": cmd_plan,
    "sweep-rate": cmd_sweep_rate,
    "sweep-noise": cmd_sweep_noise,
    "eval": cmd_eval,
}


def _fail(exc: Exception, code: int, json_errors: bool) -> int:
    if json_errors:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
              file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    json_errors = "--json-errors" in argv
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail(exc, EXIT_INVALID, json_errors)
    args.json_errors = getattr(args, "json_errors", False)
    args.strict = getattr(args, "strict", False)
    try:
        return COMMANDS[args.command](args)
    except FactorizationError as exc:
        return _fail(exc, EXIT_FAILURE, args.json_errors)
    except (CSPatternError, ValueError) as exc:
        return _fail(exc, EXIT_INVALID, args.json_errors)
    except OSError as exc:
        return _fail(exc, EXIT_FAILURE, args.json_errors)


if __name__ == "__main__":
    sys.exit(main())
