"""Matrix polynomials in z^{-1} and Hermitian matrix pseudo-polynomials.

A :class:`MatPoly` stores ``M(z) = sum_k M_k z^{-k}`` for k = 0..n as a
read-only array of shape ``(n+1, m, m)``.  A :class:`PseudoPoly` stores the
non-negative half ``P_0..P_n`` of ``P(z) = sum_{k=-n}^{n} P_k z^{-k}`` with the
negative half implied by ``P_{-k} = P_k^T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np

from .errors import InputError

if TYPE_CHECKING:  # pragma: no cover
    from .covdata import CovSequence

TRIL_TOL = 1e-12


def _as_coeff_array(coeffs) -> np.ndarray:
    arr = np.array(coeffs, dtype=float)
    if arr.ndim == 1:
        # scalar polynomial given as a flat list of coefficients
        arr = arr[:, None, None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[0] < 1:
        raise InputError(f"coefficients must have shape (n+1, m, m), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("coefficients must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MatPoly:
    """Real matrix polynomial ``M(z) = M_0 + M_1 z^{-1} + ... + M_n z^{-n}``."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_coeff_array(self.coeffs))

    @property
    def m(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n(self) -> int:
        return self.coeffs.shape[0] - 1

    def coeff(self, k: int) -> np.ndarray:
        return self.coeffs[k]

    def __len__(self):
        return self.coeffs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, MatPoly):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and np.array_equal(
            self.coeffs, other.coeffs)

    def __add__(self, other: "MatPoly") -> "MatPoly":
        _check_same(self, other)
        return MatPoly(self.coeffs + other.coeffs)

    def __sub__(self, other: "MatPoly") -> "MatPoly":
        _check_same(self, other)
        return MatPoly(self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "MatPoly":
        return MatPoly(float(s) * self.coeffs)

    __rmul__ = __mul__

    def tolist(self):
        return self.coeffs.tolist()

    @classmethod
    def identity(cls, m: int, n: int = 0) -> "MatPoly":
        c = np.zeros((n + 1, m, m))
        c[0] = np.eye(m)
        return cls(c)

    @classmethod
    def zeros(cls, m: int, n: int) -> "MatPoly":
        return cls(np.zeros((n + 1, m, m)))


@dataclass(frozen=True, eq=False)
class PseudoPoly:
    """Hermitian pseudo-polynomial; only ``P_0..P_n`` are stored.

    ``P_0`` is symmetrized on construction.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(_as_coeff_array(self.coeffs))
        asym = np.max(np.abs(arr[0] - arr[0].T))
        if asym > 1e-8 * max(1.0, np.max(np.abs(arr[0]))):
            raise ValueError(f"P_0 is not symmetric (max asymmetry {asym:.3g})")
        arr[0] = 0.5 * (arr[0] + arr[0].T)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def m(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n(self) -> int:
        return self.coeffs.shape[0] - 1

    def coeff(self, k: int) -> np.ndarray:
        """Coefficient of ``z^{-k}`` for ``-n <= k <= n``."""
        if k < 0:
            return self.coeffs[-k].T
        return self.coeffs[k]

    def __len__(self):
        return self.coeffs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PseudoPoly):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and np.array_equal(
            self.coeffs, other.coeffs)

    def __add__(self, other: "PseudoPoly") -> "PseudoPoly":
        _check_same(self, other)
        return PseudoPoly(self.coeffs + other.coeffs)

    def __sub__(self, other: "PseudoPoly") -> "PseudoPoly":
        _check_same(self, other)
        return PseudoPoly(self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "PseudoPoly":
        return PseudoPoly(float(s) * self.coeffs)

    __rmul__ = __mul__

    def norm(self) -> float:
        """Frobenius norm over all Laurent coefficients P_{-n}..P_n."""
        c = self.coeffs
        return float(np.sqrt(np.sum(c[0] ** 2) + 2.0 * np.sum(c[1:] ** 2)))

    def tolist(self):
        return self.coeffs.tolist()

    @classmethod
    def identity(cls, m: int, n: int = 0) -> "PseudoPoly":
        c = np.zeros((n + 1, m, m))
        c[0] = np.eye(m)
        return cls(c)


@dataclass(frozen=True)
class SchurClassSpec:
    """Numerical description of the admissible AR/MA polynomial class.

    ``mu`` bounds ``trace(sum_k M_k M_k^T)``; ``math.inf`` means unbounded.
    """

    mu: float = math.inf
    rho_max: float = 1.0 - 1e-9
    diag_min: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.rho_max < 1.0:
            raise ValueError("rho_max must lie in (0, 1)")
        if not self.mu > 0:
            raise ValueError("mu must be positive")


@dataclass(frozen=True)
class SchurVerdict:
    ok: bool
    spectral_radius: float
    trace_norm: float
    reason: str = ""
    value: float = float("nan")

    def __bool__(self):
        return self.ok


def _check_same(a, b):
    if a.coeffs.shape != b.coeffs.shape:
        raise ValueError(f"dimension mismatch: {a.coeffs.shape} vs {b.coeffs.shape}")


def _check_dims(A: MatPoly, data: "CovSequence"):
    if A.m != data.m or A.n != data.n:
        raise ValueError(
            f"dimension mismatch: polynomial (m={A.m}, n={A.n}) vs data (m={data.m}, n={data.n})")


# -- array kernels ---------------------------------------------------------
# These operate on arrays of shape (..., n+1, m, m) so that many directions can
# be pushed through at once (used to assemble Jacobians).

def _trunc_product_arr(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """H_k = sum_{j<=k} a_j chat_{k-j} with chat_0 = c_0, chat_i = 2 c_i."""
    chat = 2.0 * c
    chat[0] = c[0]
    n1 = c.shape[0]
    h = np.zeros(np.broadcast_shapes(a.shape, c.shape))
    for k in range(n1):
        acc = a[..., 0, :, :] @ chat[k]
        for j in range(1, k + 1):
            acc = acc + a[..., j, :, :] @ chat[k - j]
        h[..., k, :, :] = acc
    return h


def _sym_outer_arr(h: np.ndarray, a: np.ndarray) -> np.ndarray:
    """P_k = 1/2 sum_l (h_{l+k} a_l^T + a_{l+k} h_l^T), P_0 symmetrized."""
    n1 = h.shape[-3]
    at = np.swapaxes(a, -1, -2)
    ht = np.swapaxes(h, -1, -2)
    p = np.zeros(np.broadcast_shapes(h.shape, a.shape))
    for k in range(n1):
        acc = h[..., k, :, :] @ at[..., 0, :, :] + a[..., k, :, :] @ ht[..., 0, :, :]
        for l in range(1, n1 - k):
            acc = acc + h[..., l + k, :, :] @ at[..., l, :, :] \
                + a[..., l + k, :, :] @ ht[..., l, :, :]
        p[..., k, :, :] = 0.5 * acc
    p0 = p[..., 0, :, :]
    p[..., 0, :, :] = 0.5 * (p0 + np.swapaxes(p0, -1, -2))
    return p


# -- operations ------------------------------------------------------------

def trunc_product(A: MatPoly, data: "CovSequence") -> MatPoly:
    """Truncation to powers 0..-n of ``A(z) (C_0 + 2 C_1 z^{-1} + ... + 2 C_n z^{-n})``."""
    _check_dims(A, data)
    return MatPoly(_trunc_product_arr(A.coeffs, data.C))


def sym_outer(H: MatPoly, A: MatPoly) -> PseudoPoly:
    """``1/2 [H(z) A(z^{-1})^T + A(z) H(z^{-1})^T]`` as a pseudo-polynomial."""
    _check_same(H, A)
    return PseudoPoly(_sym_outer_arr(H.coeffs, A.coeffs))


def poly_product_full(A: MatPoly, B: MatPoly) -> PseudoPoly:
    """Coefficients ``P_k = sum_l A_{l+k} B_l^T`` of ``A(z) B(z^{-1})^T``.

    Only meaningful as a pseudo-polynomial when the product is Hermitian,
    typically ``A is B``.
    """
    _check_same(A, B)
    a, b = A.coeffs, B.coeffs
    n1 = a.shape[0]
    p = np.zeros_like(a)
    for k in range(n1):
        for l in range(n1 - k):
            p[k] += a[l + k] @ b[l].T
    return PseudoPoly(p)


def outer_square(B: MatPoly) -> PseudoPoly:
    """``B(z) B(z^{-1})^T``."""
    return poly_product_full(B, B)


def eval_on_circle(M: Union[MatPoly, PseudoPoly], theta) -> np.ndarray:
    """Evaluate at ``z = e^{i theta}``; ``theta`` may be a scalar or 1-D array.

    Returns an ``(m, m)`` complex matrix, or ``(len(theta), m, m)`` for arrays.
    """
    theta_arr = np.asarray(theta, dtype=float)
    th = np.atleast_1d(theta_arr)
    c = M.coeffs
    k = np.arange(c.shape[0])
    w = np.exp(-1j * np.outer(th, k))  # (T, n+1)
    out = np.einsum("tk,kij->tij", w, c)
    if isinstance(M, PseudoPoly):
        neg = np.einsum("tk,kji->tij", np.conj(w[:, 1:]), c[1:])
        out = out + neg
    return out[0] if theta_arr.ndim == 0 else out


def companion(M: MatPoly) -> np.ndarray:
    """Block companion matrix of ``z^n M_0^{-1} M(z)``.

    Its eigenvalues are the roots of ``det M(z)`` (plus zeros when M_n is
    singular).  Raises ``np.linalg.LinAlgError`` for singular ``M_0``.
    """
    m, n = M.m, M.n
    if n == 0:
        return np.zeros((0, 0))
    c = M.coeffs
    N = np.linalg.solve(c[0], c[1:].transpose(1, 0, 2).reshape(m, n * m))
    comp = np.zeros((n * m, n * m))
    comp[:m, :] = -N
    comp[m:, :-m] = np.eye((n - 1) * m)
    return comp


def spectral_radius(M: MatPoly) -> float:
    comp = companion(M)
    if comp.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def is_schur(M: MatPoly, spec: SchurClassSpec = SchurClassSpec()) -> SchurVerdict:
    """Check membership of ``M`` in the Schur class described by ``spec``."""
    c = M.coeffs
    tr = float(np.sum(c ** 2))
    m0 = c[0]
    upper = np.abs(np.triu(m0, 1))
    if upper.size and upper.max() > TRIL_TOL:
        return SchurVerdict(False, float("nan"), tr, "M_0 not lower triangular",
                            float(upper.max()))
    dmin = float(np.min(np.diag(m0)))
    if not dmin > spec.diag_min:
        reason = "M_0 singular" if dmin == 0.0 else "M_0 diagonal not positive"
        return SchurVerdict(False, float("nan"), tr, reason, dmin)
    try:
        rho = spectral_radius(M)
    except np.linalg.LinAlgError:
        return SchurVerdict(False, float("nan"), tr, "M_0 singular", dmin)
    if not rho <= spec.rho_max:
        return SchurVerdict(False, rho, tr, "root outside stability margin", rho)
    if not tr < spec.mu:
        return SchurVerdict(False, rho, tr, "trace bound exceeded", tr)
    return SchurVerdict(True, rho, tr)


def min_eig_on_grid(P: PseudoPoly, K: int = 512) -> float:
    """Smallest eigenvalue of ``P(e^{i theta_j})`` over ``theta_j = 2 pi j / K``."""
    if K < 2 * P.n + 1:
        raise ValueError("grid too small: need K >= 2n+1")
    theta = 2.0 * np.pi * np.arange(K) / K
    vals = eval_on_circle(P, theta)
    return float(np.min(np.linalg.eigvalsh(vals)))


def positive_on_grid(P: PseudoPoly, K: int = 512, rel_tol: float = 1e-12) -> bool:
    """Numerical membership test for positivity on the circle.

    Requires the smallest eigenvalue on the grid to exceed ``rel_tol`` times the
    largest coefficient norm, so zeros on the circle that fall on a grid
    point are not lost to rounding.
    """
    scale = float(np.max(np.linalg.norm(P.coeffs, ord=2, axis=(1, 2))))
    return min_eig_on_grid(P, max(K, 2 * P.n + 1)) > rel_tol * scale
