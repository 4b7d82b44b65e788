"""Geronimus and linear spectral (Christoffel-Geronimus-Uvarov) transformations.

The transformed functional is ``u_hat = Q1 u / Q2 + v`` with ``v`` supported on
``Z(Q2)``.  Writing ``u_check = u / Q2 + v / Q1`` (so ``u_hat = Q1 u_check``), the
connection matrix ``R = <u_check, P chi^T>`` and a poised choice of ``R`` columns
and nodes on ``Z(Q1)`` determine the banded resolvent row ``omega_{[k],*}``.  From
it ``Q1 P_hat_[k] = sum_j omega_{kj} P_[j]`` and ``H_hat_[k] = sum_j omega_{kj} R_{[j],[k]}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (NodeOffVariety, NoPoisedSet, RepeatedRoots, SingularBlock, SpecError)
from .functional import Diagonal, DiscreteMeasure, cauchy_transform_1d, moments_up_to, pair
from .mindex import GradedIndexer, eval_chi, poly_of_shifts_array
from .mvopr import OpFamily
from .polynomial import Poly, multiplication_matrix

POISED_COND_MAX = 1e10
NODE_TOL = 1e-9
TRANSFORM_TOL = 1e-8
DIVISION_TOL = 1e-8
ROOT_TOL = 1e-9


@dataclass
class TransformSpec:
    """``Q2 u_hat = Q1 u`` plus masses ``v`` on ``Z(Q2)`` and user nodes on ``Z(Q1)``."""

    q1: Poly | None = None
    q2: Poly | None = None
    masses: object = None
    nodes: np.ndarray | None = None
    D: int = field(default=None)

    def __post_init__(self):
        dims = {p.D for p in (self.q1, self.q2) if p is not None}
        if self.masses is not None:
            dims.add(self.masses.D)
        if self.D is not None:
            dims.add(self.D)
        if len(dims) > 1:
            raise SpecError("transform components disagree on the dimension")
        if not dims:
            raise SpecError("cannot infer the dimension of an empty transform; pass D")
        self.D = dims.pop()
        if self.q1 is None:
            self.q1 = Poly.constant(self.D, 1.0)
        if self.q2 is None:
            self.q2 = Poly.constant(self.D, 1.0)
        for q in (self.q1, self.q2):
            if q.is_zero():
                raise SpecError("transform polynomials must be nonzero")
        if self.nodes is not None:
            self.nodes = np.atleast_2d(np.asarray(self.nodes, dtype=complex)).reshape(-1, self.D)
            if not np.any(self.nodes.imag):
                self.nodes = self.nodes.real

    @property
    def m1(self):
        return self.q1.degree

    @property
    def m2(self):
        return self.q2.degree

    @classmethod
    def identity(cls, D):
        return cls(D=D)

    def is_geronimus(self):
        return self.m1 == 0


def _poly_scale(q, p):
    r = max(1.0, float(np.max(np.abs(p))))
    return sum(abs(c) for c in q.terms.values()) * r ** max(q.degree, 0)


def _simple_roots(q, what):
    roots = q.roots_1d()
    for i in range(len(roots)):
        for j in range(i):
            if abs(roots[i] - roots[j]) <= ROOT_TOL * max(1.0, abs(roots[i])):
                raise RepeatedRoots(f"{what} has a repeated root near {roots[i]}")
    if not np.any(np.abs(np.imag(roots)) > 0):
        roots = np.real(roots)
    return roots


def variety_nodes(spec):
    """Nodes on ``Z(Q1)``: polynomial roots for D = 1, validated user nodes otherwise."""
    if spec.m1 == 0:
        if spec.nodes is not None and len(spec.nodes):
            raise NodeOffVariety("nodes given but Q1 is constant")
        return np.zeros((0, spec.D))
    if spec.nodes is None:
        if spec.D != 1:
            raise SpecError("nodes on Z(Q1) must be supplied for D >= 2")
        return _simple_roots(spec.q1, "Q1").reshape(-1, 1)
    for p in spec.nodes:
        val = abs(spec.q1(p))
        if val >= NODE_TOL * _poly_scale(spec.q1, p):
            raise NodeOffVariety(f"node {tuple(np.real_if_close(p))} is off Z(Q1): |Q1| = {val:.3e}")
    if spec.D == 1:
        _simple_roots(spec.q1, "Q1")
    return spec.nodes


def _source_functional(fam):
    if not isinstance(fam.source, Diagonal):
        raise SpecError("transforms act on families built from a single functional")
    return fam.source.functional


def check_masses(spec, idx, tol=1e-9):
    """``Q2 v`` must vanish: every moment of ``Q2 v`` up to ``n_max`` is checked."""
    if spec.masses is None:
        return
    if spec.m2 == 0:
        raise SpecError("masses need a nonconstant Q2 to be supported on")
    mom = moments_up_to(spec.masses.with_factors(multiplier=spec.q2), idx)
    ref = max(1.0, float(np.max(np.abs(moments_up_to(spec.masses, idx)))))
    if np.max(np.abs(mom)) > tol * ref * _poly_scale(spec.q2, np.ones(1)):
        raise SpecError("masses are not supported on Z(Q2)")


def checked_functional(fam, spec):
    """``u_check = u / Q2 + v / Q1``."""
    u = _source_functional(fam)
    uc = u.with_factors(divisor=spec.q2) if spec.m2 > 0 else u
    if spec.masses is not None:
        check_masses(spec, fam.idx)
        v = spec.masses.with_factors(divisor=spec.q1) if spec.m1 > 0 else spec.masses
        uc = uc + v
    return uc


def transformed_functional(fam, spec):
    """``u_hat = Q1 u / Q2 + v``."""
    u = _source_functional(fam)
    uh = u.with_factors(multiplier=spec.q1 if spec.m1 > 0 else None,
                        divisor=spec.q2 if spec.m2 > 0 else None)
    if spec.masses is not None:
        check_masses(spec, fam.idx)
        uh = uh + spec.masses
    return uh


@dataclass
class RMatrix:
    data: np.ndarray
    idx: GradedIndexer

    def block(self, k, l):
        return self.data[self.idx.block(k), self.idx.block(l)]


def build_r_matrix(fam, spec):
    """``R_{[k],[l]} = <u_check, P_[k] chi_[l]^T>`` on the family truncation."""
    uc = checked_functional(fam, spec)
    R = pair(uc, fam.s1, np.eye(fam.idx.size), fam.idx, fam.n_hint)
    return RMatrix(R, fam.idx)


# -- poised selection ------------------------------------------------------

@dataclass
class PoisedSelection:
    k: int
    beta_set: list
    node_set: np.ndarray
    condition_estimate: float
    columns: np.ndarray = None
    rows: slice = None


def _unit_columns(A):
    n = np.linalg.norm(A, axis=0)
    n[n == 0] = 1.0
    return A / n


def _pivot_pick(A, r):
    if r == 0:
        return np.zeros(0, dtype=int)
    if A.shape[1] < r:
        raise NoPoisedSet(f"only {A.shape[1]} candidates for {r} conditions")
    _, _, piv = linalg.qr(A, mode="economic", pivoting=True)
    return np.sort(piv[:r])


def _band_rows(idx, k, m1, m2):
    lo = max(0, k - m2)
    return lo, idx.span(lo, k + m1 - 1) if k + m1 - 1 >= lo else slice(0, 0)


def select_poised(R, fam, spec, k, nodes=None, columns=None):
    """Pick ``r2`` columns of ``R`` and ``r1`` nodes making the band system square and regular.

    ``columns`` (positions into the graded basis) replaces the pivoted search
    for the ``R`` columns; it is still rejected when the system is singular.
    """
    idx = fam.idx
    m1, m2 = spec.m1, spec.m2
    if k + m1 > idx.n_max:
        raise SpecError(f"level {k} needs k + m1 <= n_max = {idx.n_max}")
    nodes = variety_nodes(spec) if nodes is None else nodes
    r2 = idx.count(k - 1) - idx.count(k - m2 - 1)
    r1 = idx.count(k + m1 - 1) - idx.count(k - 1)
    lo, rows = _band_rows(idx, k, m1, m2)
    if r1 + r2 == 0:
        return PoisedSelection(k, [], np.zeros((0, idx.D)), 1.0, np.zeros(0, dtype=int), rows)
    cand = R.data[rows, :idx.count(k - 1)]
    if columns is None:
        cols = _pivot_pick(_unit_columns(cand), r2)
    else:
        cols = np.asarray(columns, dtype=int).reshape(-1)
        if len(cols) != r2 or (r2 and (cols.min() < 0 or cols.max() >= cand.shape[1])):
            raise SpecError(f"level {k} needs {r2} columns below position {cand.shape[1]}")
    if len(nodes) < r1:
        raise NoPoisedSet(f"level {k}: {len(nodes)} nodes available, {r1} needed")
    node_vals = (eval_chi(idx, nodes) @ fam.s1[rows].T).T if len(nodes) else np.zeros((cand.shape[0], 0))
    if r1:
        Aq = _unit_columns(cand[:, cols])
        Q, _ = linalg.qr(Aq, mode="economic") if r2 else (np.zeros((cand.shape[0], 0)), None)
        Bn = _unit_columns(node_vals)
        Bp = Bn - Q @ (Q.conj().T @ Bn)
        pick = _pivot_pick(Bp, r1)
    else:
        pick = np.zeros(0, dtype=int)
    M = np.hstack([cand[:, cols], node_vals[:, pick]])
    cond = float(np.linalg.cond(_unit_columns(M)))
    if not np.isfinite(cond) or cond >= POISED_COND_MAX:
        raise NoPoisedSet(f"level {k}: best candidate system has condition {cond:.3e}")
    beta = [idx.index_at(c) for c in cols]
    return PoisedSelection(k, beta, nodes[pick], cond, cols, rows)


# -- band solve ------------------------------------------------------------

@dataclass
class LevelTransform:
    k: int
    p_hat: np.ndarray         # |[k]| x N_k coefficients of P_hat_[k]
    h_hat: np.ndarray
    omega: np.ndarray         # |[k]| x N_{k+m1} row block of omega_1 (columns by P-level)
    selection: PoisedSelection
    q1_p_hat: np.ndarray = None
    division_residual: float = 0.0


def divide_by(q, coeffs, idx_out, idx_in):
    """Exact division of coefficient rows by ``q``; returns quotient and residual."""
    M = multiplication_matrix(q, idx_in, idx_out)
    sol, *_ = linalg.lstsq(M, np.asarray(coeffs).T)
    resid = float(np.max(np.abs(M @ sol - np.asarray(coeffs).T), initial=0.0))
    return sol.T, resid


def solve_level(fam, spec, k, R=None, nodes=None, columns=None):
    idx = fam.idx
    m1, m2 = spec.m1, spec.m2
    R = build_r_matrix(fam, spec) if R is None else R
    nodes = variety_nodes(spec) if nodes is None else nodes
    sel = select_poised(R, fam, spec, k, nodes, columns)
    b_top = idx.block(k + m1)
    known = poly_of_shifts_array(spec.q1, idx)[idx.block(k), b_top]
    lo, rows = _band_rows(idx, k, m1, m2)
    n_unk = rows.stop - rows.start
    top_vals = eval_chi(idx, sel.node_set) @ fam.s1[b_top].T if len(sel.node_set) else np.zeros((0, known.shape[1]))
    if n_unk:
        M = np.hstack([R.data[rows][:, sel.columns],
                       (eval_chi(idx, sel.node_set) @ fam.s1[rows].T).T if len(sel.node_set)
                       else np.zeros((n_unk, 0))])
        rhs = -np.hstack([known @ R.data[b_top][:, sel.columns], known @ top_vals.T])
        try:
            X = linalg.solve(M.T, rhs.T).T
        except linalg.LinAlgError as exc:
            raise NoPoisedSet(str(exc)) from exc
    else:
        X = np.zeros((known.shape[0], 0))
    ncols = idx.count(k + m1)
    omega = np.zeros((known.shape[0], ncols), dtype=np.result_type(X, known))
    omega[:, rows] = X
    omega[:, b_top] = known
    q1p = omega @ fam.s1[:ncols, :ncols]
    h_hat = omega @ R.data[:ncols, idx.block(k)]
    if m1 == 0:
        p_hat = q1p[:, :idx.count(k)] / spec.q1.coefficient((0,) * idx.D)
        resid = 0.0
    else:
        p_hat, resid = divide_by(spec.q1, q1p, idx.sub(k + m1), idx.sub(k))
        if resid > DIVISION_TOL * max(1.0, float(np.max(np.abs(q1p)))):
            raise SingularBlock(f"level {k}: division by Q1 leaves remainder {resid:.3e}")
    p_hat = np.real_if_close(p_hat, tol=1e6)
    return LevelTransform(k, p_hat, np.real_if_close(h_hat, tol=1e6), omega, sel, q1p, resid)


def cgu_transform(fam, spec, k, R=None):
    """``(P_hat_[k] coefficients, H_hat_[k])`` for the linear spectral transformation."""
    res = solve_level(fam, spec, k, R)
    return res.p_hat, res.h_hat


def geronimus_transform(fam, spec, k, R=None):
    if spec.m1 != 0:
        raise SpecError("Geronimus transforms need a constant Q1")
    return cgu_transform(fam, spec, k, R)


def transform_all(fam, spec, R=None):
    """Every level the truncation supports (``k <= n_max - m1``)."""
    R = build_r_matrix(fam, spec) if R is None else R
    nodes = variety_nodes(spec)
    return [solve_level(fam, spec, k, R, nodes) for k in range(fam.idx.n_max - spec.m1 + 1)]


def assembled_s_hat(levels, idx):
    """Unit lower factor ``S_hat`` on levels covered by ``levels``."""
    K = levels[-1].k
    n = idx.count(K)
    S = np.zeros((n, n), dtype=np.result_type(*[lv.p_hat for lv in levels]))
    for lv in levels:
        S[idx.block(lv.k), :idx.count(lv.k)] = lv.p_hat
    return S


# -- oracle ----------------------------------------------------------------

def oracle_transform(fam, spec, mode="auto"):
    """Refactorize the moment matrix of ``u_hat`` directly."""
    uh = transformed_functional(fam, spec)
    G = pair(uh, np.eye(fam.idx.size), np.eye(fam.idx.size), fam.idx, fam.n_hint)
    return OpFamily.from_gram(G, fam.idx, Diagonal(uh), mode, n_hint=fam.n_hint)


def fac_identity_residual(fam, spec, hat):
    """``Q2(Lambda) G_hat - Q1(Lambda) G`` on rows whose shifts stay inside the truncation."""
    idx = fam.idx
    G = fam.fact.reconstruct()
    Gh = hat.fact.reconstruct()
    lhs = poly_of_shifts_array(spec.q2, idx) @ Gh
    rhs = poly_of_shifts_array(spec.q1, idx) @ G
    n = idx.count(idx.n_max - max(spec.m1, spec.m2))
    scale = max(float(np.max(np.abs(rhs[:n]))), 1.0)
    return float(np.max(np.abs((lhs - rhs)[:n]), initial=0.0)) / scale


def compare_with_oracle(levels, hat):
    """Largest relative coefficient and quasi-tau discrepancy."""
    err = 0.0
    for lv in levels:
        n = hat.idx.count(lv.k)
        ref_p = hat.s1[hat.idx.block(lv.k), :n]
        ref_h = hat.h_blocks[lv.k]
        err = max(err,
                  float(np.max(np.abs(lv.p_hat - ref_p))) / max(1.0, float(np.max(np.abs(ref_p)))),
                  float(np.max(np.abs(lv.h_hat - ref_h))) / max(1e-300, float(np.max(np.abs(ref_h)))))
    return err


# -- resolvents ------------------------------------------------------------

@dataclass
class ResolventReport:
    band_error: float
    quasi_tau_error: float
    omega_r_lower_error: float
    omega_r_diag_error: float
    jacobi_error: float | None = None
    det_error: float | None = None

    def max_error(self):
        vals = [self.band_error, self.quasi_tau_error, self.omega_r_lower_error, self.omega_r_diag_error]
        vals += [v for v in (self.jacobi_error, self.det_error) if v is not None]
        return max(vals)


def resolvent_checks(fam, spec, levels, R=None):
    """Band structure, ``H_hat omega_2 = omega_1 H`` and triangularity of ``omega_1 R``."""
    idx = fam.idx
    m1, m2 = spec.m1, spec.m2
    R = build_r_matrix(fam, spec) if R is None else R
    K = levels[-1].k
    nK = idx.count(K)
    Sh = assembled_s_hat(levels, idx)
    Shinv = linalg.solve_triangular(Sh, np.eye(nK), lower=True, unit_diagonal=True)
    S = fam.s1
    Sinv = linalg.solve_triangular(S, np.eye(idx.size), lower=True, unit_diagonal=True)
    q1L = poly_of_shifts_array(spec.q1, idx)
    q2L = poly_of_shifts_array(spec.q2, idx)
    w1 = Sh @ q1L[:nK] @ Sinv                  # rows k <= K exact
    w2T = (S @ q2L @ np.pad(Shinv, ((0, idx.size - nK), (0, idx.size - nK))))[:nK, :nK]
    Hh = linalg.block_diag(*[lv.h_hat for lv in levels])
    H = fam.h_matrix()

    band = 0.0
    for k in range(K + 1):
        for l in range(idx.n_max + 1):
            if l > k + m1 or l < k - m2:
                band = max(band, float(np.max(np.abs(w1[idx.block(k), idx.block(l)]), initial=0.0)))
    band /= max(1.0, float(np.max(np.abs(w1))))

    L = K - m2                                  # exact rows of omega_2^T
    qt = 0.0
    if L >= 0:
        nL = idx.count(L)
        lhs = Hh @ w2T[:nL].T                   # (K) x (L)
        rhs = (w1 @ H)[:, :nL]
        qt = float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(rhs))))

    wr = w1 @ R.data
    lower = 0.0
    diag = 0.0
    for k in range(K + 1):
        for l in range(k):
            lower = max(lower, float(np.max(np.abs(wr[idx.block(k), idx.block(l)]))))
        ref = levels[k].h_hat
        diag = max(diag, float(np.max(np.abs(wr[idx.block(k), idx.block(k)] - ref))) / max(1e-300, float(np.max(np.abs(ref)))))
    lower /= max(1.0, float(np.max(np.abs(wr))))

    jac = det = None
    if m1 == 0 and L >= 0:
        J = S @ q2L @ Sinv                      # Q2(J)
        nL = idx.count(L)
        prod = (w2T @ w1[:, :nK])[:nL, :nL]
        jac = float(np.max(np.abs(prod - J[:nL, :nL]))) / max(1.0, float(np.max(np.abs(J[:nL, :nL]))))
        Jc = w1[:, :nK] @ w2T                   # Q2(J_check) = omega_1 omega_2^T
        det = 0.0
        for k in range(1, L + 1):
            n = idx.count(k - 1)
            lhs_d = np.linalg.det(Jc[:n, :n])
            rhs_d = np.prod([np.linalg.det(H[idx.block(l), idx.block(l)]) / np.linalg.det(levels[l].h_hat)
                             for l in range(k)])
            det = max(det, abs(lhs_d - rhs_d) / max(abs(rhs_d), 1e-300))
    return ResolventReport(band, qt, lower, diag, jac, det)


def det_r_identity(fam, spec, levels, R=None):
    """``prod_{l<=k} det H_check_[l]`` versus ``det R^{[k+1]}`` (Geronimus case), relative error."""
    R = build_r_matrix(fam, spec) if R is None else R
    err = 0.0
    acc = 1.0
    for lv in levels:
        acc = acc * np.linalg.det(np.atleast_2d(lv.h_hat))
        n = fam.idx.count(lv.k)
        d = np.linalg.det(R.data[:n, :n])
        err = max(err, abs(acc - d) / max(abs(d), 1e-300))
    return err


# -- one-dimensional Cauchy path -------------------------------------------

def _root_masses(spec, roots):
    """Weights ``zeta_j`` of point masses at the roots of ``Q2``."""
    zeta = np.zeros(len(roots), dtype=complex)
    if spec.masses is None:
        return zeta
    for term in spec.masses.terms:
        if term.divisor is not None or term.multiplier is not None:
            raise SpecError("Cauchy path masses must be plain point masses")
        for c in term.components:
            if not isinstance(c, DiscreteMeasure):
                raise SpecError("Cauchy path supports point masses only")
            for p, w in zip(c.points[:, 0], c.weights):
                j = int(np.argmin(np.abs(roots - p)))
                if abs(roots[j] - p) > 1e-9 * max(1.0, abs(p)):
                    raise SpecError(f"mass at {p} is not on a root of Q2")
                zeta[j] += w
    return zeta


@dataclass
class CauchyLevel:
    k: int
    p_hat: np.ndarray
    h_hat: complex
    phi: np.ndarray


def cauchy_phi(fam, spec, ks):
    """``phi_l(q_j) = C_l(q_j) + xi_j P_l(q_j)`` for levels ``ks`` and roots ``q_j`` of ``Q2``."""
    u = _source_functional(fam)
    q = _simple_roots(spec.q2, "Q2") if spec.m2 else np.zeros(0)
    zeta = _root_masses(spec, q)
    lc2 = spec.q2.coefficient((spec.m2,))
    xi = np.zeros(len(q), dtype=complex)
    for j in range(len(q)):
        dq = lc2 * np.prod([q[j] - q[i] for i in range(len(q)) if i != j])
        xi[j] = zeta[j] * dq
        if spec.m1:
            xi[j] = xi[j] / spec.q1(np.array([q[j]]))
    phi = np.zeros((len(ks), len(q)), dtype=complex)
    for a, l in enumerate(ks):
        P = Poly.from_coeffs(fam.idx, fam.s1[l])
        for j, qj in enumerate(q):
            phi[a, j] = cauchy_transform_1d(u, P, qj, fam.n_hint) + xi[j] * P(np.array([qj]))
    return q, phi


def reduce_1d_cauchy(fam, spec, k):
    """Determinant-quotient transform built from Cauchy transforms (``D == 1``, ``k >= m2``)."""
    idx = fam.idx
    if idx.D != 1:
        raise SpecError("Cauchy reduction needs D == 1")
    m1, m2 = spec.m1, spec.m2
    if k < m2:
        raise SpecError("Cauchy reduction is implemented for k >= m2")
    if k + m1 > idx.n_max:
        raise SpecError("level exceeds the truncation")
    ks = list(range(k - m2, k + m1 + 1))
    q, phi = cauchy_phi(fam, spec, ks)
    p = _simple_roots(spec.q1, "Q1") if m1 else np.zeros(0)
    if len(p) and len(q) and np.min(np.abs(p[:, None] - q[None, :])) < ROOT_TOL:
        raise SpecError("Q1 and Q2 share a root")
    pv = np.array([[Poly.from_coeffs(idx, fam.s1[l])(np.array([pi])) for pi in p] for l in ks]).reshape(len(ks), len(p))
    A_full = np.hstack([phi, pv])                         # (m1+m2+1) x (m1+m2)
    A = A_full[:-1]
    detA = np.linalg.det(A) if A.size else 1.0
    if abs(detA) == 0:
        raise NoPoisedSet("singular phi matrix")
    n = len(ks)
    lc1 = spec.q1.coefficient((m1,))
    # cofactors along an appended unit column span the left null space of A_full
    omega = np.zeros(n, dtype=complex)
    for j in range(n):
        e = np.zeros((n, 1))
        e[j] = 1.0
        omega[j] = np.linalg.det(np.hstack([A_full, e])) if A.size else 1.0
    omega = lc1 * omega / (omega[-1] if A.size else 1.0)
    coeff = omega @ fam.s1[[idx.index_of((l,)) for l in ks]][:, :idx.count(k + m1)]
    if m1:
        p_hat, resid = divide_by(spec.q1, coeff[None, :], idx.sub(k + m1), idx.sub(k))
        if resid > DIVISION_TOL * max(1.0, float(np.max(np.abs(coeff)))):
            raise SingularBlock("Cauchy path division by Q1 left a remainder")
        p_hat = p_hat[0]
    else:
        p_hat = coeff[:idx.count(k)] / spec.q1.coefficient((0,))
    lc2 = spec.q2.coefficient((m2,))
    h_hat = omega[0] * fam.h_blocks[k - m2][0, 0] / lc2
    return CauchyLevel(k, np.real_if_close(p_hat, tol=1e6), complex(h_hat), phi)


def vandermonde_link(fam, spec, k, R=None):
    """Return ``(rho_{k,0..m2-1}, C_k(q) D^{-1} V^T)`` for the pure density part (``D == 1``)."""
    idx = fam.idx
    m2 = spec.m2
    u = _source_functional(fam)
    q = _simple_roots(spec.q2, "Q2")
    rho = pair(u.with_factors(divisor=spec.q2), fam.s1[[k]], np.eye(idx.size), idx, fam.n_hint)[0, :m2]
    P = Poly.from_coeffs(idx, fam.s1[k])
    C = np.array([cauchy_transform_1d(u, P, qj, fam.n_hint) for qj in q])
    dq = np.array([spec.q2.derivative((1,))(np.array([qj])) for qj in q])
    V = np.vander(q, m2, increasing=True).T           # V[l, j] = q_j^l
    return rho, (C / dq) @ V.T
