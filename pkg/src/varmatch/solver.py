"""Newton and homotopy solvers for the covariance matching equation, and Yule-Walker.

The homotopy blends the data, ``Sigma(t) = t C + (1-t) (I, 0, ..., 0)``, with the
target ``P`` held fixed.  At ``t = 0`` the equation is a spectral factorization
with a unique Schur solution; the path is traced to ``t = 1`` with an Euler
predictor and a damped Newton corrector.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.linalg

from ._newton import newton
from .covariance import CovOracleConfig, verify_match
from .covdata import (CovSequence, Theorem1Report, build_toeplitz, check_pd, denormalize_solution,
                      normalize, theorem1_check)
from .errors import DataError, InputError, NewtonError, PathStalled, VarmatchError, VerificationFailed
from .factor import FactorConfig, spectral_factor
from .matchmap import (devectorize, f_map, homotopy_dt, jacobian_matrix, vectorize,
                       vectorize_residual)
from .matpoly import MatPoly, PseudoPoly, SchurClassSpec, is_schur, outer_square, positive_on_grid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HomotopyConfig:
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    corrector_max_iter: int = 8
    dt_init: float = 0.1
    dt_min: float = 1e-8
    dt_growth: float = 1.5
    dt_shrink: float = 0.5
    max_backtracks: int = 30
    schur_spec: SchurClassSpec = SchurClassSpec()
    normalize: bool = True
    factor: FactorConfig = FactorConfig()
    oracle: CovOracleConfig = CovOracleConfig()
    verify_factor: float = 100.0  # verification tolerance = verify_factor * newton_tol

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= 1:
            raise ValueError("need 0 < dt_min <= dt_init <= 1")
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")


@dataclass(frozen=True)
class PathPoint:
    t: float
    iters: int
    cond: float
    det_sign: int

    def as_dict(self):
        return {"t": self.t, "iters": self.iters, "cond": self.cond, "det_sign": self.det_sign}


@dataclass
class SolveReport:
    A: Optional[MatPoly] = None
    residual: float = float("nan")
    path: list = field(default_factory=list)
    normalized: bool = False
    L: Optional[np.ndarray] = None
    verified: bool = False
    max_deviation: float = float("nan")
    theorem1: Optional[Theorem1Report] = None

    @property
    def sign_constant(self) -> bool:
        return len({p.det_sign for p in self.path}) <= 1


def newton_solve(A0: MatPoly, data: CovSequence, t: float, P: PseudoPoly,
                 cfg: HomotopyConfig = HomotopyConfig()) -> MatPoly:
    """Solve ``f_{Sigma(t)}(A) = P`` by damped Newton from ``A0``."""
    return newton(A0, data.blend(t), P, tol=cfg.newton_tol, max_iter=cfg.newton_max_iter,
                  spec=cfg.schur_spec, max_backtracks=cfg.max_backtracks).A


def _jac_info(J: np.ndarray) -> tuple[float, int]:
    sign, _ = np.linalg.slogdet(J)
    return float(np.linalg.cond(J)), int(sign)


def _target(ma, m: int, n: int) -> tuple[PseudoPoly, MatPoly | None]:
    """Target pseudo-polynomial and, when available, an MA polynomial for verification."""
    if ma is None:
        return PseudoPoly.identity(m, n), MatPoly.identity(m, n)
    if isinstance(ma, MatPoly):
        if ma.m != m or ma.n != n:
            raise InputError("MA polynomial dimensions do not match the data")
        if not is_schur(ma):
            log.warning("MA polynomial is not in the Schur class; only B B* is used")
        return outer_square(ma), ma
    if isinstance(ma, PseudoPoly):
        if ma.m != m or ma.n != n:
            raise InputError("pseudo-polynomial dimensions do not match the data")
        return ma, None
    raise InputError(f"unsupported MA input {type(ma).__name__}")


def _solve_order0(data: CovSequence, P: PseudoPoly) -> MatPoly:
    # A_0 C_0 A_0^T = P_0 with A_0 lower triangular
    Lp = np.linalg.cholesky(P.coeffs[0])
    Lc = np.linalg.cholesky(data.C[0])
    A0 = scipy.linalg.solve_triangular(Lc, Lp.T, lower=True, trans="T").T
    return MatPoly(A0[None])


def track_path(A: MatPoly, data: CovSequence, P: PseudoPoly, cfg: HomotopyConfig,
               report: SolveReport) -> MatPoly:
    """Predictor-corrector continuation from a solution at t=0 to t=1.

    Accepted points are appended to ``report.path``.
    """
    t = 0.0
    dt = cfg.dt_init
    J = jacobian_matrix(A, data.blend(t))
    cond, sign = _jac_info(J)
    report.path.append(PathPoint(0.0, 0, cond, sign))
    m, n = A.m, A.n
    while t < 1.0:
        step = min(dt, 1.0 - t)
        t_new = 1.0 if t + step >= 1.0 - 1e-14 else t + step
        step = t_new - t
        ok = False
        try:
            g = vectorize_residual(homotopy_dt(A, data))
            A_pred = devectorize(vectorize(A) - step * np.linalg.solve(J, g), m, n)
            if not is_schur(A_pred, cfg.schur_spec):
                A_pred = A  # predictor left the class; let the corrector start from A
            res = newton(A_pred, data.blend(t_new), P, tol=cfg.newton_tol,
                         max_iter=cfg.corrector_max_iter, spec=cfg.schur_spec,
                         max_backtracks=cfg.max_backtracks)
            J_new = jacobian_matrix(res.A, data.blend(t_new))
            cond_new, sign_new = _jac_info(J_new)
            ok = np.isfinite(cond_new) and sign_new != 0
        except (NewtonError, np.linalg.LinAlgError):
            ok = False
        if not ok:
            dt = step * cfg.dt_shrink
            if dt < cfg.dt_min:
                raise PathStalled(f"path stalled at t={t:.6g} (dt={dt:.3g})")
            continue
        A, J, t = res.A, J_new, t_new
        if sign_new != report.path[0].det_sign:
            log.warning("Jacobian determinant sign changed at t=%.6g", t)
        report.path.append(PathPoint(t, res.iters, cond_new, sign_new))
        if res.iters <= 3:
            dt = step * cfg.dt_growth
        else:
            dt = step
    return A


def homotopy_solve(data: CovSequence, ma: Union[MatPoly, PseudoPoly, None] = None,
                   cfg: HomotopyConfig = HomotopyConfig(), mu: float = math.inf) -> SolveReport:
    """Find Schur ``A`` whose VARMA model with MA part ``ma`` matches ``data``.

    ``ma`` is an MA polynomial ``B``, a target pseudo-polynomial ``P = B B*``,
    or ``None`` for a trivial MA part.  Failures raise a :class:`VarmatchError`
    subclass whose ``report`` attribute carries the diagnostics gathered so far.
    """
    m, n = data.m, data.n
    if not check_pd(data).is_pd:
        raise DataError("T_n not positive definite")
    P, B = _target(ma, m, n)
    if not positive_on_grid(P, cfg.factor.positivity_grid):
        raise DataError("P not positive on the unit circle")
    report = SolveReport(normalized=cfg.normalize)
    report.theorem1 = theorem1_check(data, P, mu, warn=ma is not None)
    try:
        work, L = (normalize(data) if cfg.normalize else (data, None))
        report.L = L
        if n == 0:
            A = _solve_order0(work, P)
            report.path.append(PathPoint(1.0, 0, float("nan"), 1))
        else:
            A = spectral_factor(P, cfg.factor)
            A = track_path(A, work, P, cfg, report)
            A = newton(A, work, P, tol=cfg.newton_tol, max_iter=cfg.newton_max_iter,
                       spec=cfg.schur_spec, max_backtracks=cfg.max_backtracks).A
        if L is not None:
            A = denormalize_solution(A, L)
        report.A = A
        report.residual = (f_map(A, data) - P).norm() / P.norm()
        if B is None:
            B = spectral_factor(P, cfg.factor)
        verdict = verify_match(A, B, data, cfg.verify_factor * cfg.newton_tol, cfg.oracle)
        report.verified = verdict.ok
        report.max_deviation = verdict.max_deviation
        if not verdict.ok:
            raise VerificationFailed(
                f"verification failed: max deviation {verdict.max_deviation:.3g}")
    except VarmatchError as exc:
        exc.report = report
        raise
    return report


def yule_walker_solve(data: CovSequence) -> MatPoly:
    """Pure-AR solution: Schur ``A`` with ``f_map(A, data) = I``.

    Solves ``T_n G = [I, 0, ..., 0]^T`` and sets ``A_k = X G_k^T`` where
    ``X = A_0 G_0^{-1}`` and ``A_0`` is the lower triangular factor with
    ``A_0^T A_0 = G_0``.
    """
    if not check_pd(data).is_pd:
        raise DataError("T_n not positive definite")
    m, n = data.m, data.n
    T = build_toeplitz(data)
    rhs = np.zeros(((n + 1) * m, m))
    rhs[:m] = np.eye(m)
    G = scipy.linalg.solve(T, rhs, assume_a="pos").reshape(n + 1, m, m)
    G0 = 0.5 * (G[0] + G[0].T)
    # reversed Cholesky: G0 = A0^T A0 with A0 lower triangular
    flip = np.linalg.cholesky(G0[::-1, ::-1])
    A0 = flip.T[::-1, ::-1]
    X = np.linalg.solve(G0.T, A0.T).T
    coeffs = np.einsum("ij,klj->kil", X, G)
    coeffs[0] = A0
    return MatPoly(coeffs)
