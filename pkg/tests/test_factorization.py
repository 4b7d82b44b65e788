import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mvopoly.errors import SingularMinor
from mvopoly.factorization import (block_cholesky, block_lu, dump_csv, load_csv, quasi_det_last,
                                   quasi_tau_from_minors)
from mvopoly.functional import gram_matrix
from mvopoly.mindex import GradedIndexer

from conftest import lebesgue

IDX24 = GradedIndexer(2, 4)


def random_spd(seed, n):
    r = np.random.default_rng(seed)
    A = r.normal(size=(n, n))
    return A @ A.T + n * np.eye(n)


def test_identity():
    idx = GradedIndexer(2, 2)
    for f in (block_cholesky(np.eye(idx.size), idx), block_lu(np.eye(idx.size), idx)):
        np.testing.assert_array_equal(f.s1, np.eye(idx.size))
        np.testing.assert_array_equal(f.s2, np.eye(idx.size))
        np.testing.assert_array_equal(f.h_matrix(), np.eye(idx.size))


def test_legendre_quasi_tau():
    idx = GradedIndexer(1, 2)
    f = block_cholesky(gram_matrix(lebesgue((-1, 1)), idx), idx)
    np.testing.assert_allclose(np.diag(f.h_matrix()), [2, 2 / 3, 8 / 45], rtol=1e-14)


def test_lu_by_hand():
    idx = GradedIndexer(1, 1)
    f = block_lu(np.array([[1.0, 2.0], [3.0, 4.0]]), idx)
    np.testing.assert_allclose(np.linalg.inv(f.s1), [[1, 0], [3, 1]])
    np.testing.assert_allclose(f.h_matrix(), np.diag([1, -2]))
    np.testing.assert_allclose(np.linalg.inv(f.s2).T, [[1, 2], [0, 1]])


@given(st.integers(0, 10 ** 6))
def test_cholesky_reconstructs(seed):
    G = random_spd(seed, IDX24.size)
    f = block_cholesky(G, IDX24)
    S = np.linalg.inv(f.s1)
    assert np.max(np.abs(S @ f.h_matrix() @ S.T - G)) < 1e-12 * np.max(np.abs(G))


@given(st.integers(0, 10 ** 6))
def test_lu_agrees_with_cholesky(seed):
    G = random_spd(seed, IDX24.size)
    a, b = block_cholesky(G, IDX24), block_lu(G, IDX24)
    np.testing.assert_allclose(a.s1, b.s1, atol=1e-13)
    np.testing.assert_allclose(a.h_matrix(), b.h_matrix(), atol=1e-13 * np.max(np.abs(G)))


@given(st.integers(0, 10 ** 6))
def test_lu_on_nonsymmetric(seed):
    r = np.random.default_rng(seed)
    G = random_spd(seed, IDX24.size) + 0.3 * r.normal(size=(IDX24.size,) * 2)
    f = block_lu(G, IDX24)
    assert f.reconstruction_error(G) < 1e-12
    for k in range(5):
        np.testing.assert_allclose(f.s1[IDX24.block(k), IDX24.block(k)], np.eye(IDX24.block_size(k)), atol=1e-15)


def test_quasi_det_scalars():
    assert np.isclose(quasi_det_last(np.array([[2.0, 1.0], [1.0, 1.0]]), 1), 0.5)
    M = np.eye(4)
    M[2:, 2:] = [[3.0, 1.0], [1.0, 5.0]]
    np.testing.assert_array_equal(quasi_det_last(M, 2), [[3, 1], [1, 5]])


def test_quasi_tau_matches_minors_on_box():
    idx = GradedIndexer(2, 4)
    G = gram_matrix(lebesgue((-1, 1), (-1, 1)), idx)
    f = block_cholesky(G, idx)
    for k in range(5):
        ref = quasi_tau_from_minors(G, idx, k)
        assert np.max(np.abs(f.h_blocks[k] - ref)) < 1e-11 * np.max(np.abs(ref))


def test_singular_minor():
    idx = GradedIndexer(1, 2)
    G = np.ones((3, 3))
    with pytest.raises(SingularMinor):
        block_lu(G, idx)


def test_csv_roundtrip():
    idx = GradedIndexer(2, 2)
    M = np.tril(np.arange(36.0).reshape(6, 6))
    buf = io.StringIO()
    dump_csv(M, idx, buf)
    np.testing.assert_array_equal(load_csv(buf.getvalue(), idx), M)
