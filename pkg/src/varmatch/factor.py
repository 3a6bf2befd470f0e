"""Matrix spectral factorization and the symmetric polynomial equation.

``spectral_factor`` finds the outer factor ``A`` with ``A(z) A(z^{-1})^T = P(z)``
using Bauer's method (block Cholesky of a growing banded block-Toeplitz matrix)
followed by Newton refinement.  ``solve_symmetric_eq`` solves
``H(z) A(z^{-1})^T + A(z) H(z^{-1})^T = 2 P(z)`` for ``H`` with lower triangular
``H_0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .covdata import CovSequence
from .errors import DataError, FactorizationError, NearBoundaryError, NewtonError
from .matchmap import devectorize, jacobian_matrix, vectorize_residual
from .matpoly import MatPoly, PseudoPoly, SchurClassSpec, is_schur, positive_on_grid
from ._newton import newton

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FactorConfig:
    bauer_L_init: int | None = None  # None -> 16 (n+1)
    bauer_L_max: int = 4096
    bauer_tol: float = 1e-8
    refine_tol: float = 1e-12
    refine_max_iter: int = 50
    positivity_grid: int = 512

    def __post_init__(self):
        if self.bauer_tol <= 0 or self.refine_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.bauer_L_init is not None and self.bauer_L_init > self.bauer_L_max:
            raise ValueError("bauer_L_init must not exceed bauer_L_max")


def bauer(P: PseudoPoly, L_init: int, L_max: int, tol: float) -> tuple[MatPoly, int, bool]:
    """Bauer's method: streamed block Cholesky of the banded block-Toeplitz matrix.

    The band has ``P_0`` on the diagonal and ``P_k`` on the k-th block
    sub-diagonal.  Row ``L-1`` of the Cholesky factor of the leading
    ``L`` block rows is the estimate ``[A_n, ..., A_1, A_0]``; rows are added
    until two consecutive estimates agree to ``tol`` (but at least ``L_init``
    rows).  Returns ``(estimate, rows used, converged)``.
    """
    p = P.coeffs
    n, m = P.n, P.m
    rows: list[dict[int, np.ndarray]] = []  # last n rows of G, keyed by column
    prev = None
    est = None
    for i in range(L_max):
        row: dict[int, np.ndarray] = {}
        lo = max(0, i - n)
        for j in range(lo, i):
            prow = rows[j - i]  # row j of G
            acc = p[i - j].copy()
            for k in range(lo, j):
                acc -= row[k] @ prow[k].T
            # G_ij = acc G_jj^{-T}
            row[j] = scipy.linalg.solve_triangular(prow[j], acc.T, lower=True).T
        acc = p[0].copy()
        for k in range(lo, i):
            acc -= row[k] @ row[k].T
        try:
            row[i] = np.linalg.cholesky(0.5 * (acc + acc.T))
        except np.linalg.LinAlgError:
            raise DataError("P not in P+") from None
        rows.append(row)
        if len(rows) > n + 1:
            rows.pop(0)
        if i >= n:
            est = np.stack([row[i - k] for k in range(n + 1)])
            if prev is not None and i + 1 >= L_init and np.max(np.abs(est - prev)) < tol:
                return MatPoly(est), i + 1, True
            prev = est
    if est is None:
        raise FactorizationError("factorization failed: L_max smaller than n+1")
    return MatPoly(est), L_max, False


def spectral_factor(P: PseudoPoly, cfg: FactorConfig = FactorConfig()) -> MatPoly:
    """Outer spectral factor of ``P``: Schur ``A`` with lower triangular ``A_0``."""
    if not positive_on_grid(P, cfg.positivity_grid):
        raise DataError("P not in P+")
    if P.n == 0:
        return MatPoly(np.linalg.cholesky(P.coeffs[0])[None])
    L_init = cfg.bauer_L_init if cfg.bauer_L_init is not None else 16 * (P.n + 1)
    A, used, converged = bauer(P, min(L_init, cfg.bauer_L_max), cfg.bauer_L_max, cfg.bauer_tol)
    log.debug("bauer: %d block rows, converged=%s", used, converged)
    verdict = is_schur(A)
    if not verdict:
        log.debug("bauer estimate not Schur (%s); refining anyway", verdict.reason)
    # refinement may start marginally outside the margin, so accept any stable start
    start_spec = SchurClassSpec(rho_max=1.0 - 1e-15)
    white = CovSequence.white(P.m, P.n)
    try:
        out = newton(A, white, P, tol=cfg.refine_tol, max_iter=cfg.refine_max_iter,
                     spec=start_spec).A
    except NewtonError as exc:
        raise FactorizationError(f"factorization failed: {exc}") from None
    if not is_schur(out):
        raise FactorizationError("factorization failed: result not Schur")
    return out


def solve_symmetric_eq(A: MatPoly, P: PseudoPoly, cond_max: float = 1e12) -> MatPoly:
    """Unique ``H`` (``H_0`` lower triangular) with ``H A* + A H* = 2 P``."""
    verdict = is_schur(A)
    if not verdict:
        raise NearBoundaryError(f"A not Schur: {verdict.reason}")
    J = jacobian_matrix(A, CovSequence.white(A.m, A.n))
    cond = np.linalg.cond(J)
    if not cond <= cond_max:
        raise NearBoundaryError(f"near-boundary A (condition number {cond:.3g})")
    h = np.linalg.solve(J, 2.0 * vectorize_residual(P))
    return devectorize(h, A.m, A.n)
