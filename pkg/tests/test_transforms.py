import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvopoly import OpFamily
from mvopoly.errors import NodeOffVariety, NoPoisedSet, RepeatedRoots, SpecError
from mvopoly.functional import cauchy_transform_1d
from mvopoly.mindex import poly_of_shifts_array
from mvopoly.polynomial import Poly
from mvopoly.transforms import (TransformSpec, build_r_matrix, cgu_transform, compare_with_oracle, det_r_identity,
                                fac_identity_residual, geronimus_transform, oracle_transform, reduce_1d_cauchy,
                                resolvent_checks, select_poised, solve_level, transform_all, vandermonde_link)

from conftest import discrete, lebesgue

X = Poly.variable(1, 0)
X2, Y2 = Poly.variable(2, 0), Poly.variable(2, 1)
LINE_NODES = [(2.0, t) for t in np.linspace(-1.3, 1.7, 9)]

# monic P_hat_2 coefficients and H_hat_0..3 from 40-digit moment elimination
GERONIMUS_P2 = [-1 / 3, -0.091583882928420714033, 1.0]
GERONIMUS_H = [-0.69314718055994530942, -0.22921983644414637056, -0.061055921952280476022, -0.015694138624154521239]
CGU_P2 = [-0.32456974194277964017, 0.052581548343322158975, 1.0]
CGU_H = [1.3068528194400546906, 0.42351291439064792107, 0.11351144091371736125, 0.029235740190637149815]
CHRISTOFFEL_P2 = [-0.30909090909090909091, 0.14545454545454545455, 1.0]
CHRISTOFFEL_H = [-4.0, -1.2222222222222222222, -0.32969696969696969697, -0.085090036014405762305]


def _h(levels, n=4):
    return [complex(lv.h_hat[0, 0]) for lv in levels[:n]]


@pytest.mark.parametrize("spec,p2,h", [
    (TransformSpec(q2=X - 3), GERONIMUS_P2, GERONIMUS_H),
    (TransformSpec(q1=X - 2, q2=X - 3), CGU_P2, CGU_H),
    (TransformSpec(q1=X - 2), CHRISTOFFEL_P2, CHRISTOFFEL_H),
])
def test_frozen_one_dimensional_values(legendre, spec, p2, h):
    lv = transform_all(legendre, spec)
    np.testing.assert_allclose(lv[2].p_hat[0], p2, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(_h(lv), h, rtol=1e-10)


def test_identity_transform(box2):
    spec = TransformSpec.identity(2)
    for k in range(5):
        p, h = cgu_transform(box2, spec, k)
        np.testing.assert_allclose(p, box2.s1[box2.idx.block(k), :box2.idx.count(k)], atol=1e-14)
        np.testing.assert_allclose(h, box2.h_blocks[k], atol=1e-14)
    hat = oracle_transform(box2, spec)
    assert np.max(np.abs(hat.s1 - box2.s1)) < 1e-12


def test_r_matrix_of_identity_is_upper_with_h_diagonal(box2):
    R = build_r_matrix(box2, TransformSpec.identity(2))
    for k in range(5):
        np.testing.assert_allclose(R.block(k, k), box2.h_blocks[k], atol=1e-13)
        for l in range(k):
            assert np.max(np.abs(R.block(k, l))) < 1e-13


def test_r_column_is_cauchy_transform(legendre):
    R = build_r_matrix(legendre, TransformSpec(q2=X - 3))
    u = lebesgue((-1, 1))
    for k in range(6):
        Pk = Poly.from_coeffs(legendre.idx, legendre.s1[k])
        assert np.isclose(R.data[k, 0], cauchy_transform_1d(u, Pk, 3.0), atol=1e-13)


def test_single_mass_contribution(legendre):
    zeta, q = 0.7, 3.0
    plain = build_r_matrix(legendre, TransformSpec(q2=X - q)).data
    mass = build_r_matrix(legendre, TransformSpec(q2=X - q, masses=discrete([q], [zeta]))).data
    P = legendre.eval_all(1, np.array([q]))
    np.testing.assert_allclose(mass - plain, zeta * np.outer(P, q ** np.arange(6)), atol=1e-12)


def test_poised_selection_cases(legendre, box2):
    sel = select_poised(build_r_matrix(box2, TransformSpec.identity(2)), box2, TransformSpec.identity(2), 3)
    assert sel.beta_set == [] and len(sel.node_set) == 0
    spec = TransformSpec(q2=(X - 3) * (X + 2.5))
    R = build_r_matrix(legendre, spec)
    for k in range(2, 6):
        sel = select_poised(R, legendre, spec, k, columns=[0, 1])
        assert sel.beta_set == [(0,), (1,)]
        assert abs(np.linalg.det(R.data[sel.rows, :2])) > 1e-8
        auto = solve_level(legendre, spec, k, R)
        fixed = solve_level(legendre, spec, k, R, columns=[0, 1])
        np.testing.assert_allclose(fixed.p_hat, auto.p_hat, atol=1e-10)
    with pytest.raises(NoPoisedSet):
        select_poised(R, legendre, spec, 3, columns=[1, 1])
    with pytest.raises(SpecError):
        select_poised(R, legendre, spec, 3, columns=[0])


def test_duplicated_node_is_not_poised(box2):
    spec = TransformSpec(q1=X2 - 2, nodes=[(2.0, 0.5)] * 4)
    with pytest.raises(NoPoisedSet):
        transform_all(box2, spec)


def test_node_off_variety(box2):
    with pytest.raises(NodeOffVariety):
        transform_all(box2, TransformSpec(q1=X2 - 2, nodes=[(1.0, 0.0)] * 4))
    with pytest.raises(SpecError):
        transform_all(box2, TransformSpec(q1=X2 - 2))


def test_invalid_specs(legendre):
    with pytest.raises(SpecError):
        build_r_matrix(legendre, TransformSpec(q2=X - 3, masses=discrete([2.5], [1.0])))
    with pytest.raises(RepeatedRoots):
        transform_all(legendre, TransformSpec(q1=(X - 2) * (X - 2)))
    with pytest.raises(SpecError):
        geronimus_transform(legendre, TransformSpec(q1=X - 2), 1)
    with pytest.raises(SpecError):
        TransformSpec(q1=X, q2=X2)


ONE_D_SPECS = [
    TransformSpec(q2=X - 3),
    TransformSpec(q2=X - 3, masses=discrete([3.0], [0.5])),
    TransformSpec(q2=(X - 3) * (X + 2.5), masses=discrete([3.0, -2.5], [0.7, 0.2])),
    TransformSpec(q1=X - 2, q2=X - 3),
    TransformSpec(q1=(X - 2) * (X + 1.5), q2=X - 3),
    TransformSpec(q1=X - 2, q2=X - 3, masses=discrete([3.0], [0.5])),
    TransformSpec(q1=X - 2),
]


@pytest.mark.parametrize("spec", ONE_D_SPECS)
def test_one_dimensional_oracle_and_resolvents(legendre, spec):
    R = build_r_matrix(legendre, spec)
    lv = transform_all(legendre, spec, R)
    hat = oracle_transform(legendre, spec)
    assert compare_with_oracle(lv, hat) < 1e-8
    rep = resolvent_checks(legendre, spec, lv, R)
    assert max(rep.band_error, rep.quasi_tau_error, rep.omega_r_lower_error, rep.omega_r_diag_error) < 1e-9
    assert fac_identity_residual(legendre, spec, hat) < 1e-10


@pytest.mark.parametrize("spec", ONE_D_SPECS)
def test_cauchy_determinant_path(legendre, spec):
    lv = transform_all(legendre, spec)
    for k in range(spec.m2, len(lv)):
        c = reduce_1d_cauchy(legendre, spec, k)
        assert np.max(np.abs(c.p_hat - lv[k].p_hat)) < 1e-8
        assert abs(c.h_hat - lv[k].h_hat[0, 0]) < 1e-8 * abs(lv[k].h_hat[0, 0])


def test_single_root_geronimus_by_hand(legendre):
    """``P_hat_k = P_k - (phi_k / phi_{k-1}) P_{k-1}`` with ``phi_l = C_l(3)``."""
    spec = TransformSpec(q2=X - 3)
    u = lebesgue((-1, 1))
    phi = [cauchy_transform_1d(u, Poly.from_coeffs(legendre.idx, legendre.s1[l]), 3.0) for l in range(6)]
    for k in range(1, 6):
        p, _ = geronimus_transform(legendre, spec, k)
        ref = legendre.s1[k, :k + 1] - phi[k] / phi[k - 1] * legendre.s1[k - 1, :k + 1]
        np.testing.assert_allclose(p[0], ref, atol=1e-12)


def test_vandermonde_link(legendre):
    spec = TransformSpec(q2=(X - 3) * (X + 2.5))
    for k in range(2, 6):
        rho, ref = vandermonde_link(legendre, spec, k)
        np.testing.assert_allclose(rho, ref, atol=1e-10)


def test_determinant_identity(legendre):
    spec = TransformSpec(q2=(X - 3) * (X + 2.5), masses=discrete([3.0, -2.5], [0.7, 0.2]))
    lv = transform_all(legendre, spec)
    assert det_r_identity(legendre, spec, lv) < 1e-9
    rep = resolvent_checks(legendre, spec, lv)
    assert rep.jacobi_error < 1e-9 and rep.det_error < 1e-9


def test_geronimus_then_christoffel_is_cgu(legendre):
    ger = oracle_transform(legendre, TransformSpec(q2=X - 3))
    lv = transform_all(ger, TransformSpec(q1=X - 2))
    direct = oracle_transform(legendre, TransformSpec(q1=X - 2, q2=X - 3))
    assert compare_with_oracle(lv, direct) < 1e-8
    lv2 = transform_all(legendre, TransformSpec(q1=X - 2, q2=X - 3))
    assert compare_with_oracle(lv2[:len(lv)], oracle_transform(ger, TransformSpec(q1=X - 2))) < 1e-8


MASS2 = discrete([(3.0, 0.5), (3.0, -0.2)], [0.3, 0.1])
TWO_D_SPECS = [
    TransformSpec(q2=X2 - 3),
    TransformSpec(q2=X2 - 3, masses=MASS2),
    TransformSpec(q2=(X2 - 3) * (Y2 + 2.5)),
    TransformSpec(q2=X2 * X2 + Y2 * Y2 - 9),
    TransformSpec(q1=X2 - 2, q2=Y2 - 3, nodes=LINE_NODES),
    TransformSpec(q1=X2 - 2, nodes=LINE_NODES),
    TransformSpec(q1=X2 - 2, q2=X2 - 3, masses=MASS2, nodes=LINE_NODES),
]


@pytest.mark.parametrize("spec", TWO_D_SPECS)
def test_two_dimensional_oracle_and_resolvents(box2, spec):
    R = build_r_matrix(box2, spec)
    lv = transform_all(box2, spec, R)
    hat = oracle_transform(box2, spec)
    assert compare_with_oracle(lv, hat) < 1e-8
    rep = resolvent_checks(box2, spec, lv, R)
    assert max(rep.band_error, rep.quasi_tau_error, rep.omega_r_lower_error, rep.omega_r_diag_error) < 1e-9


def test_christoffel_moment_identity(box2):
    spec = TransformSpec(q1=X2 - 2, nodes=LINE_NODES)
    hat = oracle_transform(box2, spec)
    idx = box2.idx
    n = idx.count(idx.n_max - 1)
    G = box2.fact.reconstruct()
    rhs = poly_of_shifts_array(spec.q1, idx) @ G
    assert np.max(np.abs(hat.fact.reconstruct()[:n] - rhs[:n])) < 1e-11 * np.max(np.abs(rhs))


@settings(max_examples=10, deadline=None)
@given(st.floats(2.2, 6.0), st.floats(-6.0, -2.2), st.floats(0.0, 2.0))
def test_random_geronimus_matches_oracle(q, p, zeta):
    fam = OpFamily.from_functional(lebesgue((-1, 1)), 4)
    spec = TransformSpec(q2=(X - q) * (X - p), masses=discrete([q], [zeta]))
    assert compare_with_oracle(transform_all(fam, spec), oracle_transform(fam, spec)) < 1e-8
