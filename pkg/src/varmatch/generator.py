"""Seeded generation of Schur polynomials and solvable matching problems.

Randomness comes from numpy's ``PCG64`` bit generator seeded with the
integer ``seed`` (``numpy.random.default_rng(seed)``); entries are drawn with
``Generator.normal`` in coefficient order ``A_0, A_1, ...``, row-major.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import varma_cov_linear
from .covdata import CovSequence, check_pd
from .errors import VarmatchError
from .matpoly import MatPoly, spectral_radius


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    m: int = 2
    n: int = 1
    target_margin: float = 0.9
    coeff_scale: float = 1.0
    min_detPn: float = 1e-3
    trivial_ma: bool = False
    max_resample: int = 1000

    def __post_init__(self):
        if not 0.0 < self.target_margin < 1.0:
            raise ValueError("target_margin must lie in (0, 1)")
        if self.m < 1 or self.n < 0:
            raise ValueError("need m >= 1 and n >= 0")


@dataclass(frozen=True)
class Problem:
    data: CovSequence
    B: MatPoly
    A_star: MatPoly


def contract_roots(M: MatPoly, target: float) -> MatPoly:
    """Rescale ``M_k <- M_k (target / r)^k`` so the companion spectral radius becomes ``target``."""
    r = spectral_radius(M)
    if r == 0.0:
        return M
    s = (target / r) ** np.arange(M.n + 1)
    return MatPoly(M.coeffs * s[:, None, None])


def random_schur(cfg: GenConfig, rng: np.random.Generator | None = None) -> MatPoly:
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    c = rng.normal(0.0, cfg.coeff_scale, size=(cfg.n + 1, cfg.m, cfg.m))
    c[0] = np.linalg.cholesky(c[0] @ c[0].T + np.eye(cfg.m))
    return contract_roots(MatPoly(c), cfg.target_margin)


def random_problem(cfg: GenConfig) -> Problem:
    rng = np.random.default_rng(cfg.seed)
    A_star = random_schur(cfg, rng)
    if cfg.trivial_ma:
        B = MatPoly.identity(cfg.m, cfg.n)
    else:
        for _ in range(cfg.max_resample):
            B = random_schur(cfg, rng)
            if abs(np.linalg.det(B.coeffs[-1])) >= cfg.min_detPn:
                break
        else:
            raise VarmatchError(
                f"no MA polynomial with |det B_n| >= {cfg.min_detPn} in {cfg.max_resample} draws")
    data = varma_cov_linear(A_star, B)
    if not check_pd(data).is_pd:  # pragma: no cover - guaranteed for Schur pairs
        raise VarmatchError("generated data not positive definite")
    return Problem(data, B, A_star)
