import logging
import math

import numpy as np
import pytest

from varmatch.covdata import (CovSequence, build_toeplitz, build_U, check_pd, denormalize_data,
                              denormalize_solution, normalize, theorem1_check)
from varmatch.errors import DataError
from varmatch.matchmap import f_map
from varmatch.matpoly import MatPoly, PseudoPoly, is_schur, outer_square

from conftest import random_data, schur_poly


def test_toeplitz_examples():
    np.testing.assert_array_equal(build_toeplitz(CovSequence.white(3, 1)), np.eye(6))
    np.testing.assert_array_equal(build_toeplitz(CovSequence([1, 0.9])), [[1, 0.9], [0.9, 1]])
    np.testing.assert_allclose(build_toeplitz(CovSequence([4 / 3, 2 / 3])),
                               [[4 / 3, 2 / 3], [2 / 3, 4 / 3]])


def test_toeplitz_blocks_and_symmetry():
    data = random_data(1, 2, 3)
    T = build_toeplitz(data)
    assert np.array_equal(T, T.T)
    np.testing.assert_array_equal(T[0:2, 4:6], data.C[2])
    np.testing.assert_array_equal(T[4:6, 0:2], data.C[2].T)


def test_check_pd():
    r = check_pd(CovSequence([1, 0.9]))
    assert r.lambda_min == pytest.approx(0.1) and r.is_pd and r.chol_ok
    r = check_pd(CovSequence([1, 1.1]))
    assert r.lambda_min == pytest.approx(-0.1) and not r.is_pd and not r.chol_ok
    assert check_pd(CovSequence.white(2, 2)).lambda_min == pytest.approx(1.0)


def test_build_U():
    np.testing.assert_array_equal(build_U(CovSequence([1, 0.2])), [[1, 0.4], [0, 1]])
    np.testing.assert_array_equal(build_U(CovSequence.white(2, 2)), np.eye(6))
    np.testing.assert_allclose(build_U(CovSequence([1, 0.2, 0.1])),
                               [[1, 0.4, 0.2], [0, 1, 0.4], [0, 0, 1]])


def test_U_first_block_row_and_H_relation():
    data = random_data(4, 2, 2)
    U = build_U(data)
    np.testing.assert_array_equal(U[:2, 2:4], 2 * data.C[1])
    np.testing.assert_array_equal(U[:2, :2], data.C[0])
    A = schur_poly(5, 2, 2)
    from varmatch.matpoly import trunc_product
    H = np.hstack(A.coeffs) @ U
    np.testing.assert_allclose(np.hsplit(H, 3), trunc_product(A, data).coeffs, atol=1e-12)


def test_normalize_examples():
    d, L = normalize(CovSequence([4, 0.8]))
    np.testing.assert_allclose(d.C.ravel(), [1, 0.2])
    assert L[0, 0] == pytest.approx(2.0)
    d, L = normalize(CovSequence.white(2, 1))
    np.testing.assert_array_equal(L, np.eye(2))
    d, L = normalize(CovSequence([np.diag([4.0, 1.0]), np.diag([0.4, 0.3])]))
    np.testing.assert_allclose(d.C[1], np.diag([0.1, 0.3]))
    np.testing.assert_allclose(L, np.diag([2.0, 1.0]))


def test_normalize_round_trip_and_pd():
    data = random_data(7, 3, 2)
    d, L = normalize(data)
    assert np.array_equal(d.C[0], np.eye(3))
    assert np.allclose(np.triu(L, 1), 0) and np.all(np.diag(L) > 0)
    np.testing.assert_allclose(denormalize_data(d, L).C, data.C, atol=1e-13 * np.abs(data.C).max())
    assert check_pd(d).is_pd


def test_normalize_rejects_indefinite_c0():
    with pytest.raises(DataError, match="C0 not PD"):
        normalize(CovSequence([[[1.0, 2.0], [2.0, 1.0]], [[0.0, 0.0], [0.0, 0.0]]]))


def test_denormalize_solution():
    A = schur_poly(2, 2, 2)
    assert np.allclose(denormalize_solution(A, np.eye(2)).coeffs, A.coeffs)
    np.testing.assert_allclose(denormalize_solution(MatPoly([1, -0.5]), np.array([[2.0]])).coeffs.ravel(),
                               [0.5, -0.25])
    L = np.array([[2.0, 0.0], [0.7, 1.5]])
    out = denormalize_solution(A, L)
    np.testing.assert_allclose(out.coeffs @ L, A.coeffs, atol=1e-14)
    assert is_schur(out)


def test_denormalize_preserves_map_value():
    # f_C(A~ L^{-1}) = f_C~(A~): solving normalized data and mapping back keeps the residual
    data = random_data(3, 2, 2)
    d, L = normalize(data)
    At = schur_poly(9, 2, 2)
    np.testing.assert_allclose(f_map(denormalize_solution(At, L), data).coeffs,
                               f_map(At, d).coeffs, atol=1e-12)


def test_asymmetric_c0_warns(caplog):
    with caplog.at_level(logging.WARNING):
        d = CovSequence([[[1.0, 0.1], [0.0, 1.0]]])
    assert "asymmetric" in caplog.text
    assert np.array_equal(d.C[0], d.C[0].T)


class TestTheorem1:
    def test_holds(self):
        P = outer_square(MatPoly([1, 0.5]))
        r = theorem1_check(CovSequence([1, 0.2]), P, math.inf)
        assert r.det_Pn == pytest.approx(0.5)
        assert r.lambda_min == pytest.approx(0.8)
        assert r.holds

    def test_singular_pn_warns(self, caplog):
        P = outer_square(MatPoly([1, 0.0]))
        with caplog.at_level(logging.WARNING):
            r = theorem1_check(CovSequence([1, 0.2]), P)
        assert not r.holds and not r.det_ok
        assert "det P_n" in caplog.text

    def test_mu_boundary(self, caplog):
        P = outer_square(MatPoly([1, 0.5]))
        data = CovSequence([1, 0.2])
        mu = 1.25 / 0.8
        assert theorem1_check(data, P, mu + 1e-9).holds
        with caplog.at_level(logging.WARNING):
            r = theorem1_check(data, P, mu - 1e-9)
        assert not r.bound_ok
        assert "trace P_0" in caplog.text
