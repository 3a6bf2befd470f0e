"""The quadratic covariance matching map, its coordinates and its Jacobian.

Coordinates on the Schur class: the lower triangle of ``A_0`` (column-major)
followed by ``A_1..A_n`` fully vectorized column-major.  Residual coordinates
use the same layout applied to ``P_0..P_n``.
"""
from __future__ import annotations

import numpy as np

from .covdata import CovSequence
from .matpoly import (MatPoly, PseudoPoly, TRIL_TOL, _check_dims, _sym_outer_arr,
                      _trunc_product_arr, sym_outer, trunc_product)


def n_coords(m: int, n: int) -> int:
    return m * (m + 1) // 2 + m * m * n


def _tril_index(m: int):
    # column-major order of the lower triangle
    cols, rows = np.triu_indices(m)
    return rows, cols


def _vec(c: np.ndarray) -> np.ndarray:
    """(..., n+1, m, m) -> (..., N)."""
    m = c.shape[-1]
    r, q = _tril_index(m)
    head = c[..., 0, r, q]
    tail = np.swapaxes(c[..., 1:, :, :], -1, -2)
    tail = tail.reshape(tail.shape[:-3] + (-1,))
    return np.concatenate([head, tail], axis=-1)


def _unvec(x: np.ndarray, m: int, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    t = m * (m + 1) // 2
    if x.shape[-1] != t + m * m * n:
        raise ValueError(f"expected {t + m * m * n} coordinates, got {x.shape[-1]}")
    c = np.zeros(x.shape[:-1] + (n + 1, m, m))
    r, q = _tril_index(m)
    c[..., 0, r, q] = x[..., :t]
    tail = x[..., t:].reshape(x.shape[:-1] + (n, m, m))
    c[..., 1:, :, :] = np.swapaxes(tail, -1, -2)
    return c


def vectorize(A: MatPoly) -> np.ndarray:
    upper = np.abs(np.triu(A.coeffs[0], 1))
    if upper.size and upper.max() > TRIL_TOL:
        raise ValueError("A_0 is not lower triangular")
    return _vec(A.coeffs)


def devectorize(x, m: int, n: int) -> MatPoly:
    return MatPoly(_unvec(x, m, n))


def vectorize_residual(P: PseudoPoly) -> np.ndarray:
    return _vec(P.coeffs)


def devectorize_residual(r, m: int, n: int) -> PseudoPoly:
    c = _unvec(r, m, n)
    c[0] = c[0] + np.tril(c[0], -1).T
    return PseudoPoly(c)


def f_map(A: MatPoly, data: CovSequence) -> PseudoPoly:
    """``1/2 [H A* + A H*]`` with ``H`` the truncated product of ``A`` and the data."""
    return sym_outer(trunc_product(A, data), A)


def f_white(A: MatPoly) -> PseudoPoly:
    """The map for white data ``(I, 0, ..., 0)``: ``A(z) A(z^{-1})^T``."""
    return sym_outer(A, A)


def jacobian_apply(A: MatPoly, V: MatPoly, data: CovSequence) -> PseudoPoly:
    """Directional derivative of :func:`f_map` at ``A`` along ``V``.

    ``W = 1/2 [R A* + H V* + V H* + A R*]`` where ``R`` is the truncated
    product of ``V`` with the data.
    """
    _check_dims(A, data)
    _check_dims(V, data)
    H = _trunc_product_arr(A.coeffs, data.C)
    R = _trunc_product_arr(V.coeffs, data.C)
    return PseudoPoly(_sym_outer_arr(R, A.coeffs) + _sym_outer_arr(H, V.coeffs))


def jacobian_matrix(A: MatPoly, data: CovSequence) -> np.ndarray:
    """N x N Jacobian; column j is the derivative along the j-th coordinate direction."""
    _check_dims(A, data)
    m, n = A.m, A.n
    N = n_coords(m, n)
    basis = _unvec(np.eye(N), m, n)  # (N, n+1, m, m)
    H = _trunc_product_arr(A.coeffs, data.C)
    R = _trunc_product_arr(basis, data.C)
    W = _sym_outer_arr(R, A.coeffs[None]) + _sym_outer_arr(H[None], basis)
    return _vec(W).T


def homotopy_map(A: MatPoly, data: CovSequence, t: float) -> PseudoPoly:
    """``f`` evaluated with the blended data ``t C + (1-t) (I, 0, ..., 0)``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return f_map(A, data.blend(t))


def homotopy_dt(A: MatPoly, data: CovSequence) -> PseudoPoly:
    """t-derivative of :func:`homotopy_map`; constant in t since f is linear in the data."""
    return f_map(A, data) - f_white(A)


def fd_jacobian(A: MatPoly, data: CovSequence, h: float | None = None) -> np.ndarray:
    """Central finite-difference Jacobian of :func:`f_map` in the Schur coordinates."""
    x = vectorize(A)
    m, n = A.m, A.n
    if h is None:
        h = 1e-6 * (1.0 + np.linalg.norm(x))
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        fp = vectorize_residual(f_map(devectorize(x + e, m, n), data))
        fm = vectorize_residual(f_map(devectorize(x - e, m, n), data))
        cols.append((fp - fm) / (2.0 * h))
    return np.column_stack(cols)


def jacobian_fd_deviation(A: MatPoly, data: CovSequence) -> float:
    """max |J - J_fd| / max |J| between the assembled and finite-difference Jacobians."""
    J = jacobian_matrix(A, data)
    return float(np.max(np.abs(J - fd_jacobian(A, data))) / max(np.max(np.abs(J)), 1e-300))
