import numpy as np
import pytest
from hypothesis import given, strategies as st

from mvopoly.errors import DivisorNearZero, PoleOnSupport, SpecError
from mvopoly.functional import (CurveMeasure, Diagonal, DiracMultipole, DiscreteMeasure, FunctionalSpec, Kernel,
                                QuadratureDensity, apply_to_poly, cauchy_transform_1d, gram_matrix, moment)
from mvopoly.mindex import GradedIndexer
from mvopoly.polynomial import Poly
from mvopoly.toda import parse_times

from conftest import discrete, lebesgue


def test_moments():
    assert np.isclose(moment(lebesgue((0, 1), (0, 1)), (1, 2)), 1 / 6)
    assert moment(discrete([(0.0, 0.0)], [1.0]), (1, 0)) == 0
    u = FunctionalSpec([DiracMultipole((1.0,), (1,), 1.0)])
    assert np.isclose(moment(u, (3,)), 3.0)


def test_weighted_densities():
    # Chebyshev first kind: pi, 0, pi/2
    u = FunctionalSpec([QuadratureDensity(((-1, 1),), "chebyshev")])
    np.testing.assert_allclose([moment(u, (k,)) for k in range(3)], [np.pi, 0, np.pi / 2], atol=1e-13)


def test_apply_to_poly():
    x = Poly.variable(1, 0)
    u = lebesgue((-1, 1))
    assert abs(apply_to_poly(u, x * x - 1 / 3)) < 1e-15
    assert apply_to_poly(u, Poly(1)) == 0
    q2 = x - 3
    ud = u.with_factors(divisor=q2)
    assert np.isclose(apply_to_poly(ud, q2 * x, n_hint=20), apply_to_poly(u, x), atol=1e-14)


def test_cauchy_transform():
    u = lebesgue((-1, 1))
    assert np.isclose(cauchy_transform_1d(u, Poly.constant(1), 2.0, n_hint=40), np.log(1 / 3), atol=1e-12)
    assert cauchy_transform_1d(u, Poly(1), 2.0) == 0
    y = Poly.variable(1, 0)
    assert np.isclose(cauchy_transform_1d(u, y - 2.0, 2.0), 2.0)


def test_cauchy_pole_on_support():
    with pytest.raises(PoleOnSupport):
        cauchy_transform_1d(discrete([0.5], [1.0]), Poly.constant(1), 0.5)


def test_divisor_near_zero_on_atom():
    u = discrete([3.0], [1.0]).with_factors(divisor=Poly.variable(1, 0) - 3)
    with pytest.raises(DivisorNearZero):
        moment(u, (0,))


def test_gram_entries_with_times():
    g = Diagonal(discrete([0.0, 1.0], [1.0, 1.0]))
    t = 0.7
    t1 = parse_times(f"1={t}", 1)
    assert np.isclose(g.gram_entry((0,), (0,), t1, None), 1 + np.exp(t))
    k = Kernel(np.array([[1.0]]), np.array([[2.0]]), np.array([1.0]))
    assert k.gram_entry((1,), (1,)) == 2.0
    u = lebesgue((-1, 1), (-1, 1))
    G = Diagonal(u).gram(GradedIndexer(2, 2))
    np.testing.assert_allclose(G, gram_matrix(u, GradedIndexer(2, 2)))


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_gram_entry_with_zero_times_is_static(a, b):
    g = Kernel(np.array([[a], [b]]), np.array([[b], [a]]), np.array([1.0, 0.5]))
    idx = GradedIndexer(1, 3)
    G = np.asarray(g.gram(idx))
    for i in range(4):
        for j in range(4):
            assert np.isclose(G[i, j], g.gram_entry((i,), (j,)), atol=1e-14)


def test_curve_measure_integrates_in_the_parameter():
    c = FunctionalSpec([CurveMeasure("segment", (0, 1), params={"start": [0, 0], "end": [3, 4]})])
    assert np.isclose(moment(c, (0, 0)), 1.0)
    assert np.isclose(moment(c, (1, 0)), 1.5)
    assert np.isclose(moment(c, (0, 2)), 16 / 3)


def test_component_validation():
    with pytest.raises(SpecError):
        FunctionalSpec([])
    with pytest.raises(SpecError):
        FunctionalSpec([DiscreteMeasure([((0.0,), 1.0)]), DiscreteMeasure([((0.0, 1.0), 1.0)])])
    with pytest.raises(SpecError):
        DiracMultipole((0.0,), (1, 0))
    with pytest.raises(SpecError):
        CurveMeasure("segment", (1, 0))
