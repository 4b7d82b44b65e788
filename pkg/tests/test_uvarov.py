import numpy as np
import pytest

from mvopoly import OpFamily
from mvopoly.errors import SpecError
from mvopoly.functional import CurveMeasure, FunctionalSpec, QuadratureDensity
from mvopoly.mindex import GradedIndexer
from mvopoly.polynomial import Poly
from mvopoly.uvarov import (CurvePerturbation, MultipoleSet, Puncture, defining_relation_error, fredholm_1d,
                            jet_matrix, nystrom_1d, nystrom_rank, oracle_uvarov, uvarov_0d, uvarov_masses)

from conftest import lebesgue

# Chebyshev weight plus 0.7 delta(x - 0.3): monic P_hat_3 and H_hat_0..3, 40-digit elimination
CHEB_MASS_P3 = [0.074538099228238356584, -0.73305952290267310078, -0.092607941465387049089, 1.0]
CHEB_MASS_H = [3.8415926535897932385, 1.6223167130053422895, 0.48587175334722122108, 0.11573739629577958806]

DIPOLES = MultipoleSet([Puncture((0.2, -0.4), (0, 1), {(0, 0): 0.5, (1, 0): 0.2, (0, 1): -0.3}),
                        Puncture((1.5, 0.5), (2, 0), {(0, 0): 0.3, (2, 0): 0.1, (1, 0): 0.05})])


@pytest.fixture(scope="module")
def chebyshev():
    return OpFamily.from_functional(FunctionalSpec([QuadratureDensity(((-1, 1),), "chebyshev")]), 5)


def _ref(fam, hat, n):
    return hat.s1[fam.idx.block(n), :fam.idx.count(n)], hat.h_blocks[n]


def test_jets():
    idx = GradedIndexer(1, 2)
    x2 = Poly.variable(1, 0) ** 2
    mp = MultipoleSet([Puncture((1.0,), (1,), {(0,): 1.0})])
    np.testing.assert_allclose(jet_matrix(idx, x2.coeffs(idx)[None], mp), [[1, 2]])
    plain = MultipoleSet.masses([[0.5], [-0.25]], [1.0, 1.0])
    np.testing.assert_allclose(jet_matrix(idx, x2.coeffs(idx)[None], plain), [[0.25, 0.0625]])


def test_jet_linearity(box2):
    r = np.random.default_rng(1)
    A, B = r.normal(size=(2, box2.idx.size))
    a, b = 0.7, -1.3
    lhs = jet_matrix(box2.idx, (a * A + b * B)[None], DIPOLES)
    rhs = a * jet_matrix(box2.idx, A[None], DIPOLES) + b * jet_matrix(box2.idx, B[None], DIPOLES)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_zero_perturbation(box2):
    mp = DIPOLES.scaled(0.0)
    for n in range(5):
        lv = uvarov_0d(box2, mp, n)
        np.testing.assert_allclose(lv.p_hat, box2.s1[box2.idx.block(n), :box2.idx.count(n)], atol=1e-14)
        np.testing.assert_allclose(lv.h_hat, box2.h_blocks[n], atol=1e-14)


def test_frozen_chebyshev_mass(chebyshev):
    lv = uvarov_0d(chebyshev, MultipoleSet.masses([[0.3]], [0.7]), 3)
    np.testing.assert_allclose(lv.p_hat[0], CHEB_MASS_P3, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose([uvarov_0d(chebyshev, MultipoleSet.masses([[0.3]], [0.7]), n).h_hat[0, 0]
                                for n in range(4)], CHEB_MASS_H, rtol=1e-10)


def test_mass_formula_equals_multipole_formula(chebyshev, box2):
    mp = MultipoleSet.masses([[0.3], [-0.8]], [0.7, 0.2])
    for n in range(6):
        a, b = uvarov_0d(chebyshev, mp, n), uvarov_masses(chebyshev, [[0.3], [-0.8]], [0.7, 0.2], n)
        np.testing.assert_allclose(a.p_hat, b.p_hat, atol=1e-12)
        np.testing.assert_allclose(a.h_hat, b.h_hat, atol=1e-12)
    pts, w = [[0.2, -0.4], [1.5, 0.5]], [0.5, -0.1]
    for n in range(5):
        a = uvarov_0d(box2, MultipoleSet.masses(pts, w), n)
        b = uvarov_masses(box2, pts, w, n)
        np.testing.assert_allclose(a.p_hat, b.p_hat, atol=1e-12)


@pytest.mark.parametrize("mp", [
    MultipoleSet.masses([[0.2, -0.4]], [0.5]),
    MultipoleSet([Puncture((0.2, -0.4), (1, 0), {(1, 0): 0.4})]),
    DIPOLES,
])
def test_multipoles_match_oracle(box2, mp):
    hat = oracle_uvarov(box2, mp.as_functional())
    for n in range(5):
        lv = uvarov_0d(box2, mp, n)
        p, h = _ref(box2, hat, n)
        assert np.max(np.abs(lv.p_hat - p)) < 1e-8 * max(1, np.max(np.abs(p)))
        assert np.max(np.abs(lv.h_hat - h)) < 1e-8 * np.max(np.abs(h))
        assert defining_relation_error(box2, mp.as_functional(), lv) < 1e-9


def test_one_d_mass_matches_oracle(chebyshev):
    mp = MultipoleSet.masses([[0.3]], [0.7])
    hat = oracle_uvarov(chebyshev, mp.as_functional())
    for n in range(6):
        lv = uvarov_0d(chebyshev, mp, n)
        p, h = _ref(chebyshev, hat, n)
        assert np.max(np.abs(lv.p_hat - p)) < 1e-9 and np.max(np.abs(lv.h_hat - h)) < 1e-9


def test_bad_multipoles():
    with pytest.raises(SpecError):
        MultipoleSet([])
    with pytest.raises(SpecError):
        MultipoleSet([Puncture((0.0,), (0,), {(1,): 1.0})])
    with pytest.raises(SpecError):
        Puncture((0.0, 1.0), (0,))


SEGMENT = CurvePerturbation(CurveMeasure("segment", (0, 1), params={"start": [-0.5, 1.2], "end": [0.8, 1.5]},
                                         scale=0.7))


def test_zero_curve_weight(box2):
    cp = CurvePerturbation(CurveMeasure("segment", (0, 1), params={"start": [0, 0], "end": [1, 1]}, scale=0.0))
    for n in range(5):
        sol = fredholm_1d(box2, cp, n)
        np.testing.assert_allclose(sol.p_hat, box2.s1[box2.idx.block(n), :box2.idx.count(n)], atol=1e-14)
        np.testing.assert_allclose(sol.pi_hat, box2.eval_block(1, n, cp.rule(4)[1]), atol=1e-14)


@pytest.mark.parametrize("cp", [
    SEGMENT,
    CurvePerturbation(CurveMeasure("circle-arc", (0, 2.5), params={"center": [0.1, 0.0], "radius": 0.6},
                                   scale=0.3)),
])
def test_fredholm_against_nystrom_and_oracle(box2, cp):
    hat = oracle_uvarov(box2, cp.as_functional(4))
    for n in range(5):
        sol, ny = fredholm_1d(box2, cp, n), nystrom_1d(box2, cp, n)
        assert sol.residual < 1e-8
        assert np.max(np.abs(sol.pi_hat - ny.pi_hat)) < 1e-10
        p, h = _ref(box2, hat, n)
        assert np.max(np.abs(sol.p_hat - p)) < 1e-7 * max(1, np.max(np.abs(p)))
        assert np.max(np.abs(sol.h_hat - h)) < 1e-7 * np.max(np.abs(h))


def test_nystrom_kernel_is_low_rank(box2):
    for n in range(1, 5):
        assert nystrom_rank(box2, SEGMENT, n) <= box2.idx.count(n - 1)


def test_constant_weight_segment_matches_line_measure():
    fam = OpFamily.from_functional(lebesgue((-1, 1), (-1, 1)), 3)
    c = 0.4
    cp = CurvePerturbation(CurveMeasure("segment", (0, 1), params={"start": [-1, -1], "end": [1, 0.5]}, scale=c))
    hat = OpFamily.from_functional(lebesgue((-1, 1), (-1, 1)) + FunctionalSpec([cp.curve]), 3)
    for n in range(4):
        sol = fredholm_1d(fam, cp, n)
        assert np.max(np.abs(sol.p_hat - hat.s1[fam.idx.block(n), :fam.idx.count(n)])) < 1e-7
