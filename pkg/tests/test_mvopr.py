import numpy as np
import pytest
from hypothesis import given, strategies as st

from mvopoly import OpFamily
from mvopoly.checks import reproducing_error
from mvopoly.errors import SpecError
from mvopoly.functional import Diagonal, Kernel
from mvopoly.mindex import GradedIndexer, shift_matrix

from conftest import discrete, lebesgue


def monic_legendre(n, x):
    """Values of monic Legendre polynomials 0..n by the classical recurrence."""
    p = [np.ones_like(x), x]
    for k in range(1, n):
        p.append(x * p[k] - k * k / (4 * k * k - 1) * p[k - 1])
    return np.array(p[:n + 1])


def test_level_zero_is_one(box2):
    assert box2.eval_block(1, 0, np.array([0.3, -0.7]))[0] == 1


@given(st.floats(-1, 1))
def test_legendre_values(legendre, x):
    ref = monic_legendre(5, np.array(x))
    got = legendre.eval_all(1, np.array([x]))
    np.testing.assert_allclose(got, ref, atol=1e-12)


def test_tensor_entry_in_2d(box2):
    x = np.array([0.4, -0.3])
    v = box2.eval_block(1, 2, x)
    idx = box2.idx
    lev = idx.levels[2]
    assert np.isclose(v[lev.index((1, 1))], x[0] * x[1])
    assert np.isclose(v[lev.index((2, 0))], x[0] ** 2 - 1 / 3)


def test_cd_kernel_level_zero(box2):
    assert np.isclose(box2.cd_kernel(0, np.array([0.1, 0.2]), np.array([-0.5, 0.9])), 1 / 4)


@given(st.integers(0, 3), st.lists(st.floats(-2, 2), min_size=10, max_size=10),
       st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
def test_reproducing_property(box2, n, c, x):
    idx = box2.idx
    coeffs = np.zeros(idx.size)
    coeffs[:idx.count(n)] = c[:idx.count(n)]
    assert reproducing_error(box2, n, np.array(x), coeffs) < 1e-9 * max(1.0, np.max(np.abs(coeffs)))


@given(st.integers(0, 3), st.tuples(st.floats(-1, 1), st.floats(-1, 1)),
       st.tuples(st.floats(-1, 1), st.floats(-1, 1)), st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
def test_cd_formula(box2, n, x, y, d):
    assert box2.cd_formula_residual(n, np.array(x), np.array(y), np.array(d)) < 1e-9


def test_cd_formula_needs_symmetric_family():
    xs, ws = np.polynomial.legendre.leggauss(10)
    fam = OpFamily.from_generator(Kernel(xs[:, None], 0.5 * xs[:, None] + 0.1, ws), 3)
    assert fam.fact.mode == "lu"
    with pytest.raises(SpecError):
        fam.cd_formula_residual(1, np.array([0.1]), np.array([0.2]))


def test_legendre_jacobi_matrix(legendre):
    J = np.asarray(legendre.jacobi_matrix(0))
    for k in range(5):
        assert abs(J[k, k]) < 1e-13
        assert np.isclose(J[k, k + 1], 1)
        if k:
            assert np.isclose(J[k, k - 1], k * k / (4 * k * k - 1))


def test_jacobi_of_identity_family_is_shift():
    idx = GradedIndexer(2, 3)
    fam = OpFamily.from_gram(np.eye(idx.size), idx)
    for a in range(2):
        np.testing.assert_array_equal(np.asarray(fam.jacobi_matrix(a)), np.asarray(shift_matrix(idx, a)))


def test_jacobi_symmetry_in_trust_region(box2):
    H = box2.h_matrix()
    n = box2.idx.count(box2.idx.n_max - 2)
    for a in range(2):
        J = np.asarray(box2.jacobi_matrix(a))
        assert np.max(np.abs((J @ H - H @ J.T)[:n, :n])) < 1e-10


@pytest.mark.parametrize("D,n", [(1, 5), (2, 4), (3, 3)])
def test_biorthogonality_lebesgue(D, n):
    fam = OpFamily.from_functional(lebesgue(*[(-1, 1)] * D), n)
    assert fam.biorthogonality_error() < 1e-10


def test_biorthogonality_discrete():
    r = np.random.default_rng(3)
    pts = r.uniform(-1, 1, (40, 2))
    fam = OpFamily.from_functional(discrete(pts, r.uniform(0.5, 1.5, 40)), 4)
    assert fam.biorthogonality_error() < 1e-10 * max(1, np.max(np.abs(fam.fact.reconstruct())))


def test_projection_reproduces_low_degree(box2):
    idx = box2.idx
    c = np.zeros(idx.size)
    c[:idx.count(2)] = [1.0, -2.0, 0.5, 0.3, 0.0, 1.2]
    np.testing.assert_allclose(box2.project(c, 2), c, atol=1e-12)


def test_json_export_shape(legendre):
    out = legendre.to_json()
    assert [lv["level"] for lv in out] == list(range(6))
    assert out[2]["entries"][0]["alpha"] == [2]


def test_from_generator_type_check():
    with pytest.raises(SpecError):
        OpFamily.from_generator(lebesgue((-1, 1)), 2)
    assert OpFamily.from_generator(Diagonal(lebesgue((-1, 1))), 2).fact.mode == "cholesky"
