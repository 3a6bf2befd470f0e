"""Command line interface.

Subcommands: ``solve``, ``factor``, ``cov``, ``verify``, ``generate`` and
``jacobian-check``.  Results are JSON on stdout (or ``--out``); logs go to
stderr.  Exit codes: 0 success, 1 invalid input, 2 infeasible data
(T_n not PD, P not positive), 3 path stalled / Newton or factorization
failure, 4 verification failed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .covariance import CovOracleConfig, varma_cov_fft, varma_cov_linear, verify_match
from .covdata import CovSequence
from .errors import InputError, VarmatchError
from .factor import FactorConfig, spectral_factor
from .generator import GenConfig, random_problem, random_schur
from .matchmap import jacobian_fd_deviation
from .matpoly import MatPoly, PseudoPoly, SchurClassSpec
from .solver import HomotopyConfig, SolveReport, homotopy_solve

log = logging.getLogger("varmatch")

JACOBIAN_CHECK_TOL = 1e-5


# -- serialization -----------------------------------------------------------

def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _matrices(obj, m: int, n: int, what: str) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{what}: not an array of numeric matrices") from None
    if arr.shape != (n + 1, m, m):
        raise InputError(f"{what}: expected shape {(n + 1, m, m)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{what}: non-finite entries")
    return arr


def _dims(doc: dict) -> tuple[int, int]:
    try:
        m, n = doc["m"], doc["n"]
    except (KeyError, TypeError):
        raise InputError("missing 'm' or 'n'") from None
    if not (isinstance(m, int) and isinstance(n, int)) or m < 1 or n < 0:
        raise InputError("'m' must be a positive integer and 'n' a non-negative integer")
    return m, n


def parse_ma(spec, m: int, n: int):
    """MA part of a problem: a :class:`MatPoly`, a :class:`PseudoPoly` or ``None`` (trivial)."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise InputError("'ma' must be an object with a 'type'")
    kind = spec["type"]
    if kind == "trivial":
        return None
    if kind == "polynomial":
        return MatPoly(_matrices(spec.get("coefficients"), m, n, "ma.coefficients"))
    if kind == "pseudo":
        try:
            return PseudoPoly(_matrices(spec.get("coefficients"), m, n, "ma.coefficients"))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    raise InputError(f"unknown ma type {kind!r}")


def ma_to_json(ma) -> dict:
    if ma is None:
        return {"type": "trivial"}
    kind = "polynomial" if isinstance(ma, MatPoly) else "pseudo"
    return {"type": kind, "coefficients": ma.tolist()}


def parse_problem(doc) -> tuple[CovSequence, object, dict]:
    if not isinstance(doc, dict):
        raise InputError("problem must be a JSON object")
    m, n = _dims(doc)
    data = CovSequence(_matrices(doc.get("covariances"), m, n, "covariances"))
    ma = parse_ma(doc.get("ma", {"type": "trivial"}), m, n)
    options = doc.get("options") or {}
    if not isinstance(options, dict):
        raise InputError("'options' must be an object")
    return data, ma, options


def problem_to_json(data: CovSequence, ma, options: dict | None = None, **extra) -> dict:
    doc = {"m": data.m, "n": data.n, "covariances": data.tolist(), "ma": ma_to_json(ma)}
    if options:
        doc["options"] = options
    doc.update(extra)
    return doc


def report_to_json(report: SolveReport, m: int, n: int) -> dict:
    t1 = report.theorem1
    return {
        "m": m,
        "n": n,
        "ar": report.A.tolist() if report.A is not None else None,
        "diagnostics": {
            "residual": _finite_or_none(report.residual),
            "verified": report.verified,
            "max_deviation": _finite_or_none(report.max_deviation),
            "path": [{"t": p.t, "iters": p.iters, "cond": _finite_or_none(p.cond),
                      "det_sign": p.det_sign} for p in report.path],
            "normalized": report.normalized,
            "theorem1": None if t1 is None else {
                "detPn": t1.det_Pn, "traceP0": t1.trace_P0,
                "lambda_min": t1.lambda_min, "holds": t1.holds},
        },
    }


def dumps(doc) -> str:
    # repr-based float output round-trips exactly
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _load(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _emit(doc, out: str | None):
    text = dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- configuration -------------------------------------------------------------

_HOMOTOPY_KEYS = {f.name for f in dataclasses.fields(HomotopyConfig)} - {
    "schur_spec", "factor", "oracle"}
_FACTOR_KEYS = {f.name for f in dataclasses.fields(FactorConfig)}


def build_config(options: dict, args) -> tuple[HomotopyConfig, float]:
    opts = dict(options)
    factor_opts = opts.pop("factor", {}) or {}
    mu = float(opts.pop("mu", math.inf))
    oracle = opts.pop("oracle", "both")
    grid = int(opts.pop("grid", 4096))
    unknown = (set(opts) - _HOMOTOPY_KEYS) | (set(factor_opts) - _FACTOR_KEYS)
    if unknown:
        raise InputError(f"unknown options: {sorted(unknown)}")
    if args.tol is not None:
        opts["newton_tol"] = args.tol
    if args.max_newton is not None:
        opts["newton_max_iter"] = args.max_newton
    if args.dt_init is not None:
        opts["dt_init"] = args.dt_init
    if args.no_normalize:
        opts["normalize"] = False
    if args.mu is not None:
        mu = args.mu
    if args.oracle is not None:
        oracle = args.oracle
    if args.grid is not None:
        grid = args.grid
    try:
        cfg = HomotopyConfig(**opts, factor=FactorConfig(**factor_opts),
                             oracle=CovOracleConfig(method=oracle, fft_grid=grid))
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid options: {exc}") from None
    return cfg, mu


# -- commands ------------------------------------------------------------------

def _solve_one(doc, args) -> tuple[dict, int]:
    data, ma, options = parse_problem(doc)
    cfg, mu = build_config(options, args)
    try:
        report = homotopy_solve(data, ma, cfg, mu)
        code = 0
    except VarmatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        report = getattr(exc, "report", None) or SolveReport(normalized=cfg.normalize)
        code = exc.exit_code
    _summary(report)
    return report_to_json(report, data.m, data.n), code


def _summary(report: SolveReport):
    conds = [p.cond for p in report.path if math.isfinite(p.cond)]
    lo, hi = (min(conds), max(conds)) if conds else (float("nan"), float("nan"))
    print(f"residual {report.residual:.3e} | path points {len(report.path)} | "
          f"cond min {lo:.3e} max {hi:.3e} | verified {report.verified} "
          f"(max deviation {report.max_deviation:.3e})", file=sys.stderr)


def cmd_solve(args) -> int:
    if args.batch:
        src = Path(args.batch)
        dest = Path(args.out) if args.out else src / "solutions"
        dest.mkdir(parents=True, exist_ok=True)
        worst = 0
        for path in sorted(src.glob("*.json")):
            try:
                doc, code = _solve_one(_load(str(path)), args)
            except InputError as exc:
                log.error("%s: %s", path.name, exc)
                worst = max(worst, exc.exit_code)
                continue
            (dest / path.name).write_text(dumps(doc))
            worst = max(worst, code)
        return worst
    if not args.problem:
        raise InputError("a problem file (or --batch DIR) is required")
    doc, code = _solve_one(_load(args.problem), args)
    _emit(doc, args.out)
    return code


def cmd_factor(args) -> int:
    doc = _load(args.file)
    if not isinstance(doc, dict):
        raise InputError("expected a JSON object")
    m, n = _dims(doc)
    coeffs = doc.get("coefficients")
    if coeffs is None and isinstance(doc.get("ma"), dict):
        coeffs = doc["ma"].get("coefficients")
    try:
        P = PseudoPoly(_matrices(coeffs, m, n, "coefficients"))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    A = spectral_factor(P)
    _emit({"m": m, "n": n, "coefficients": A.tolist()}, args.out)
    return 0


def _model(doc) -> tuple[MatPoly, MatPoly]:
    m, n = _dims(doc)
    A = MatPoly(_matrices(doc.get("ar"), m, n, "ar"))
    ma = doc.get("ma", {"type": "trivial"})
    if isinstance(ma, list):
        ma = {"type": "polynomial", "coefficients": ma}
    B = parse_ma(ma, m, n)
    if B is None:
        B = MatPoly.identity(m, n)
    elif isinstance(B, PseudoPoly):
        B = spectral_factor(B)
    return A, B


def cmd_cov(args) -> int:
    A, B = _model(_load(args.file))
    method = args.oracle or "linear"
    grid = args.grid or 4096
    out = {"m": A.m, "n": A.n}
    if method in ("linear", "both"):
        out["covariances"] = varma_cov_linear(A, B).tolist()
    if method in ("fft", "both"):
        fft = varma_cov_fft(A, B, grid).tolist()
        if method == "fft":
            out["covariances"] = fft
        else:
            out["covariances_fft"] = fft
    _emit(out, args.out)
    return 0


def cmd_verify(args) -> int:
    data, ma, _ = parse_problem(_load(args.problem))
    sol = _load(args.solution)
    if not isinstance(sol, dict) or sol.get("ar") is None:
        raise InputError("solution file has no 'ar' coefficients")
    A = MatPoly(_matrices(sol["ar"], data.m, data.n, "ar"))
    if ma is None:
        B = MatPoly.identity(data.m, data.n)
    elif isinstance(ma, PseudoPoly):
        B = spectral_factor(ma)
    else:
        B = ma
    tol = args.tol if args.tol is not None else 1e-8
    cfg = CovOracleConfig(method=args.oracle or "both", fft_grid=args.grid or 4096)
    verdict = verify_match(A, B, data, tol, cfg)
    _emit({"verified": verdict.ok, "max_deviation": _finite_or_none(verdict.max_deviation),
           "deviations": {k: _finite_or_none(v) for k, v in verdict.deviations.items()},
           "tol": tol}, args.out)
    return 0 if verdict.ok else 4


def cmd_generate(args) -> int:
    cfg = GenConfig(seed=args.seed, m=args.m, n=args.n, target_margin=args.margin,
                    coeff_scale=args.scale, min_detPn=args.min_detpn, trivial_ma=args.trivial)
    prob = random_problem(cfg)
    ma = None if args.trivial else prob.B
    doc = problem_to_json(prob.data, ma, generator={
        "seed": cfg.seed, "target_margin": cfg.target_margin, "coeff_scale": cfg.coeff_scale,
        "min_detPn": cfg.min_detPn, "ar_true": prob.A_star.tolist()})
    _emit(doc, args.out)
    return 0


def cmd_jacobian_check(args) -> int:
    if args.file:
        doc = _load(args.file)
        if not isinstance(doc, dict):
            raise InputError("expected a JSON object")
        m, n = _dims(doc)
        A = MatPoly(_matrices(doc.get("ar"), m, n, "ar"))
        data = CovSequence(_matrices(doc.get("covariances"), m, n, "covariances"))
    else:
        prob = random_problem(GenConfig(seed=args.seed, m=args.m, n=args.n, min_detPn=0.0))
        A = random_schur(GenConfig(seed=args.seed + 1, m=args.m, n=args.n))
        data = prob.data
    dev = jacobian_fd_deviation(A, data)
    _emit({"max_relative_deviation": dev, "tol": JACOBIAN_CHECK_TOL,
           "ok": dev <= JACOBIAN_CHECK_TOL}, args.out)
    return 0 if dev <= JACOBIAN_CHECK_TOL else 3


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="varmatch", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write JSON here instead of stdout")
        sp.add_argument("--oracle", choices=["linear", "fft", "both"])
        sp.add_argument("--grid", type=int, help="FFT grid size (power of two)")

    s = sub.add_parser("solve", help="solve a covariance matching problem")
    s.add_argument("problem", nargs="?", help="problem JSON file, '-' for stdin")
    common(s)
    s.add_argument("--tol", type=float, help="Newton relative residual tolerance")
    s.add_argument("--max-newton", type=int)
    s.add_argument("--dt-init", type=float)
    s.add_argument("--seed", type=int, default=0, help="accepted for interface uniformity; solve is deterministic")
    s.add_argument("--mu", type=float, help="trace bound used in the existence condition report")
    s.add_argument("--no-normalize", action="store_true")
    s.add_argument("--batch", metavar="DIR", help="solve every *.json in DIR; --out names the output directory")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("factor", help="outer spectral factor of a pseudo-polynomial")
    s.add_argument("file")
    s.add_argument("--out")
    s.set_defaults(func=cmd_factor)

    s = sub.add_parser("cov", help="first n+1 covariances of a VARMA model")
    s.add_argument("file")
    common(s)
    s.set_defaults(func=cmd_cov)

    s = sub.add_parser("verify", help="check a solution against its problem")
    s.add_argument("problem")
    s.add_argument("solution")
    common(s)
    s.add_argument("--tol", type=float)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("generate", help="seeded random solvable problem")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--margin", type=float, default=0.9)
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--min-detpn", type=float, default=1e-3)
    s.add_argument("--trivial", action="store_true", help="trivial MA part (B = I)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("jacobian-check", help="compare the Jacobian with central differences")
    s.add_argument("file", nargs="?", help="JSON with 'm', 'n', 'ar' and 'covariances'")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--out")
    s.set_defaults(func=cmd_jacobian_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = os.environ.get("VARMATCH_LOG_LEVEL")
    if level is None:
        level = logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except VarmatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
