"""First n+1 covariances of a VARMA model ``(A, B)``, computed two independent ways.

``varma_cov_linear`` goes through the symmetric polynomial equation and a
block forward substitution; ``varma_cov_fft`` integrates the spectral density
numerically on a uniform circle grid.  The two share no code beyond
polynomial evaluation, so agreement is a meaningful check.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covdata import CovSequence
from .errors import InputError, NearBoundaryError
from .factor import solve_symmetric_eq
from .matpoly import MatPoly, is_schur, outer_square


@dataclass(frozen=True)
class CovOracleConfig:
    method: str = "both"  # linear | fft | both
    fft_grid: int = 4096
    tol: float = 1e-8

    def __post_init__(self):
        if self.method not in ("linear", "fft", "both"):
            raise ValueError(f"unknown oracle method {self.method!r}")
        K = self.fft_grid
        if K < 8 or K & (K - 1):
            raise ValueError("fft_grid must be a power of two >= 8")


@dataclass(frozen=True)
class MatchVerdict:
    ok: bool
    max_deviation: float
    deviations: dict = field(default_factory=dict)  # per oracle
    oracle_gap: float = float("nan")  # linear vs fft, when both ran


def varma_cov_linear(A: MatPoly, B: MatPoly) -> CovSequence:
    """Covariances from ``H A* + A H* = 2 B B*`` and ``H_col = L_A Sigma_col``."""
    if A.coeffs.shape != B.coeffs.shape:
        raise InputError("A and B must have the same shape")
    verdict = is_schur(A)
    if not verdict:
        raise NearBoundaryError(f"A not Schur: {verdict.reason}")
    H = solve_symmetric_eq(A, outer_square(B)).coeffs
    a = A.coeffs
    n1 = a.shape[0]
    # G_0 = A_0^{-1} H_0 is lower triangular, not symmetric; the covariance
    # Sigma_0 is its symmetric part but the recursion needs G_0 itself.
    g0 = np.linalg.solve(a[0], H[0])
    sig = np.empty_like(a)
    for k in range(1, n1):
        rhs = H[k] - a[k] @ g0
        for j in range(1, k):
            rhs -= 2.0 * a[k - j] @ sig[j]
        sig[k] = 0.5 * np.linalg.solve(a[0], rhs)
    sig[0] = 0.5 * (g0 + g0.T)
    return CovSequence(sig)


def varma_cov_fft(A: MatPoly, B: MatPoly, K: int = 4096, cond_max: float = 1e12) -> CovSequence:
    """Fourier coefficients of ``A^{-1} B B* A^{-*}`` from K circle samples."""
    if A.coeffs.shape != B.coeffs.shape:
        raise InputError("A and B must have the same shape")
    n = A.n
    if K < 8 * (n + 1) or K & (K - 1):
        raise InputError(f"grid too small or not a power of two: K={K}, n={n}")
    Az = np.fft.fft(A.coeffs, n=K, axis=0)
    Bz = np.fft.fft(B.coeffs, n=K, axis=0)
    cond = np.linalg.cond(Az)
    if not np.all(cond < cond_max):
        raise NearBoundaryError(f"A near-singular on the grid (cond {np.max(cond):.3g})")
    X = np.linalg.solve(Az, Bz)
    Phi = X @ np.conj(np.swapaxes(X, -1, -2))
    S = np.fft.ifft(Phi, axis=0)[: n + 1]
    scale = max(1.0, float(np.max(np.abs(S))))
    imag = float(np.max(np.abs(S.imag)))
    if imag > 1e-10 * scale:
        raise NearBoundaryError(f"imaginary residue {imag:.3g} in FFT covariances")
    return CovSequence(S.real)


def deviation(sigma: CovSequence, data: CovSequence) -> float:
    """max_k ||Sigma_k - C_k||_F / (1 + ||C_k||_F)."""
    d = np.linalg.norm(sigma.C - data.C, axis=(1, 2))
    return float(np.max(d / (1.0 + np.linalg.norm(data.C, axis=(1, 2)))))


def verify_match(A: MatPoly, B: MatPoly, data: CovSequence, tol: float = 1e-8,
                 cfg: CovOracleConfig = CovOracleConfig()) -> MatchVerdict:
    """Compare the model covariances of ``(A, B)`` with ``data``.

    Never raises for a mismatch; a failing oracle (e.g. ``A`` not Schur)
    produces an infinite deviation.
    """
    devs = {}
    outs = {}
    if cfg.method in ("linear", "both"):
        try:
            outs["linear"] = varma_cov_linear(A, B)
        except NearBoundaryError:
            devs["linear"] = float("inf")
    if cfg.method in ("fft", "both"):
        try:
            outs["fft"] = varma_cov_fft(A, B, cfg.fft_grid)
        except NearBoundaryError:
            devs["fft"] = float("inf")
    for name, s in outs.items():
        devs[name] = deviation(s, data)
    gap = float("nan")
    if len(outs) == 2:
        gap = deviation(outs["linear"], outs["fft"])
    worst = max(devs.values())
    return MatchVerdict(worst <= tol, worst, devs, gap)
