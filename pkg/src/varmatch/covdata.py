"""Covariance data: block-Toeplitz assembly, positivity and normalization."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DataError, InputError
from .matpoly import MatPoly, PseudoPoly

log = logging.getLogger(__name__)

ASYM_WARN = 1e-8


@dataclass(frozen=True, eq=False)
class CovSequence:
    """Covariances ``C_0..C_n`` stored as an ``(n+1, m, m)`` read-only array.

    ``C_0`` is symmetrized on ingestion; a warning is logged when the input
    asymmetry exceeds 1e-8.
    """

    C: np.ndarray

    def __post_init__(self):
        arr = np.array(self.C, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None, None]
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[0] < 1:
            raise InputError(f"covariances must have shape (n+1, m, m), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("covariances must be finite")
        asym = float(np.max(np.abs(arr[0] - arr[0].T)))
        if asym > ASYM_WARN:
            log.warning("C_0 asymmetric by %.3g; symmetrizing", asym)
        arr[0] = 0.5 * (arr[0] + arr[0].T)
        arr.setflags(write=False)
        object.__setattr__(self, "C", arr)

    @property
    def m(self) -> int:
        return self.C.shape[1]

    @property
    def n(self) -> int:
        return self.C.shape[0] - 1

    def __eq__(self, other):
        if not isinstance(other, CovSequence):
            return NotImplemented
        return self.C.shape == other.C.shape and np.array_equal(self.C, other.C)

    def tolist(self):
        return self.C.tolist()

    @classmethod
    def white(cls, m: int, n: int) -> "CovSequence":
        """The data ``(I, 0, ..., 0)``."""
        c = np.zeros((n + 1, m, m))
        c[0] = np.eye(m)
        return cls(c)

    def blend(self, t: float) -> "CovSequence":
        """``t * C + (1 - t) * (I, 0, ..., 0)``."""
        c = t * self.C
        c[0] += (1.0 - t) * np.eye(self.m)
        return CovSequence(c)


@dataclass(frozen=True)
class ToeplitzReport:
    lambda_min: float
    is_pd: bool
    chol_ok: bool


@dataclass(frozen=True)
class Theorem1Report:
    det_Pn: float
    trace_P0: float
    lambda_min: float
    mu: float
    det_ok: bool
    bound_ok: bool

    @property
    def holds(self) -> bool:
        return self.det_ok and self.bound_ok

    def as_dict(self):
        return {"detPn": self.det_Pn, "traceP0": self.trace_P0,
                "lambda_min": self.lambda_min, "holds": self.holds}


def build_toeplitz(data: CovSequence) -> np.ndarray:
    """Block (i, j) is ``C_{j-i}`` for ``j >= i`` and ``C_{i-j}^T`` below."""
    m, n1 = data.m, data.n + 1
    T = np.zeros((n1 * m, n1 * m))
    for i in range(n1):
        for j in range(i, n1):
            T[i * m:(i + 1) * m, j * m:(j + 1) * m] = data.C[j - i]
            if j > i:
                T[j * m:(j + 1) * m, i * m:(i + 1) * m] = data.C[j - i].T
    return T


def check_pd(data: CovSequence) -> ToeplitzReport:
    T = build_toeplitz(data)
    eig = np.linalg.eigvalsh(T)
    lam = float(eig[0])
    scale = float(np.max(np.abs(eig)))
    try:
        np.linalg.cholesky(T)
        chol_ok = True
    except np.linalg.LinAlgError:
        chol_ok = False
    return ToeplitzReport(lam, lam > 1e-12 * scale, chol_ok)


def build_U(data: CovSequence) -> np.ndarray:
    """Block upper-triangular Toeplitz matrix with blocks ``C_0, 2C_1, ..., 2C_n``."""
    m, n1 = data.m, data.n + 1
    U = np.zeros((n1 * m, n1 * m))
    for i in range(n1):
        for j in range(i, n1):
            blk = data.C[0] if j == i else 2.0 * data.C[j - i]
            U[i * m:(i + 1) * m, j * m:(j + 1) * m] = blk
    return U


def normalize(data: CovSequence) -> tuple[CovSequence, np.ndarray]:
    """Whiten so that ``C_0 = I``; returns the transformed data and ``L = chol(C_0)``."""
    try:
        L = np.linalg.cholesky(data.C[0])
    except np.linalg.LinAlgError:
        raise DataError("C0 not PD") from None
    c = np.empty_like(data.C)
    for k in range(data.n + 1):
        x = scipy.linalg.solve_triangular(L, data.C[k], lower=True)
        c[k] = scipy.linalg.solve_triangular(L, x.T, lower=True).T
    c[0] = np.eye(data.m)
    return CovSequence(c), L


def denormalize_data(data: CovSequence, L: np.ndarray) -> CovSequence:
    """Inverse of :func:`normalize`: ``C_k = L C~_k L^T``."""
    return CovSequence(np.einsum("ij,kjl,ml->kim", L, data.C, L))


def denormalize_solution(A_tilde: MatPoly, L: np.ndarray) -> MatPoly:
    """Map a solution for normalized data back: ``A(z) = A~(z) L^{-1}``."""
    L = np.asarray(L, dtype=float)
    if L.ndim == 0:
        L = L.reshape(1, 1)
    d = np.diag(L)
    if np.any(d == 0) or not np.all(np.isfinite(L)):
        raise DataError("singular normalization factor")
    a = A_tilde.coeffs
    m = a.shape[1]
    # A_k L^{-1} = (L^{-T} A_k^T)^T
    flat = a.transpose(2, 0, 1).reshape(m, -1)  # columns of A_k^T stacked
    sol = scipy.linalg.solve_triangular(L, flat, lower=True, trans="T")
    return MatPoly(sol.reshape(m, a.shape[0], m).transpose(1, 2, 0))


def theorem1_check(data: CovSequence, P: PseudoPoly, mu: float = math.inf,
                   warn: bool = True) -> Theorem1Report:
    """Evaluate ``det P_n != 0`` and ``trace P_0 < min(1, lambda_min) mu``.

    Advisory only; nothing is enforced.
    """
    if P.m != data.m or P.n != data.n:
        raise ValueError("dimension mismatch between P and data")
    Pn = P.coeffs[-1]
    det = float(np.linalg.det(Pn))
    scale = max(float(np.linalg.norm(P.coeffs[0], 2)), 1e-300)
    det_ok = abs(det) > (1e-12 * scale) ** P.m
    lam = check_pd(data).lambda_min
    tr = float(np.trace(P.coeffs[0]))
    bound_ok = tr < min(1.0, lam) * mu
    if warn and not det_ok:
        log.warning("existence condition violated: det P_n = %.3g (need det P_n != 0)", det)
    if warn and not bound_ok:
        log.warning("existence condition violated: trace P_0 = %.6g >= min(1, lambda_min) mu = %.6g",
                    tr, min(1.0, lam) * mu)
    return Theorem1Report(det, tr, lam, mu, det_ok, bound_ok)
