"""Additive perturbations ``u_hat = u + v``.

Point multipoles lead to a finite linear system in the jets of the
Christoffel-Darboux kernel; a measure on a curve leads to a Fredholm equation
of the second kind with separable kernel, solved both in closed form and by a
dense Nystrom discretization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import SingularSystem, SpecError
from .functional import CurveMeasure, DiracMultipole, FunctionalSpec, pair
from .mindex import GradedIndexer, chi_jet, eval_chi
from .mvopr import OpFamily
from .polynomial import Poly

FREDHOLM_TOL = 1e-8


@dataclass
class Puncture:
    point: np.ndarray
    beta: tuple
    xi: dict = field(default_factory=dict)   # alpha -> coefficient

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float).reshape(-1)
        self.beta = tuple(int(b) for b in self.beta)
        self.xi = {tuple(int(v) for v in a): c for a, c in self.xi.items()}
        if len(self.beta) != len(self.point):
            raise SpecError("puncture point and beta differ in dimension")

    def jet_orders(self):
        """Multi-indices up to ``beta`` in graded order: all of levels ``< |beta|`` then a prefix of level ``|beta|``."""
        idx = GradedIndexer(len(self.beta), sum(self.beta))
        stop = idx.index_of(self.beta) + 1
        return idx.multi_indices[:stop]


class MultipoleSet:
    """``<v, P> = sum_i sum_alpha xi_{i,alpha} d^alpha P(x_i) / alpha!``."""

    def __init__(self, punctures):
        self.punctures = list(punctures)
        if not self.punctures:
            raise SpecError("a multipole set needs at least one puncture")
        self.D = len(self.punctures[0].point)
        for p in self.punctures:
            if len(p.point) != self.D:
                raise SpecError("punctures disagree on the dimension")
            allowed = set(p.jet_orders())
            for a in p.xi:
                if a not in allowed:
                    raise SpecError(f"coefficient {a} lies beyond the jet order {p.beta}")

    @classmethod
    def masses(cls, points, weights):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        D = pts.shape[1]
        return cls([Puncture(p, (0,) * D, {(0,) * D: w}) for p, w in zip(pts, weights)])

    @property
    def size(self):
        return sum(len(p.jet_orders()) for p in self.punctures)

    def entries(self):
        """``(puncture index, point, order)`` for every jet column, in order."""
        return [(i, p.point, o) for i, p in enumerate(self.punctures) for o in p.jet_orders()]

    def xi_matrix(self):
        """``Xi`` with ``Xi[(i,b),(i,g)] = xi_{i, b+g}``; block diagonal across punctures."""
        ent = self.entries()
        n = len(ent)
        dtype = complex if any(isinstance(c, complex) for p in self.punctures for c in p.xi.values()) else float
        X = np.zeros((n, n), dtype=dtype)
        for r, (i, _, b) in enumerate(ent):
            for c, (j, _, g) in enumerate(ent):
                if i == j:
                    X[r, c] = self.punctures[i].xi.get(tuple(x + y for x, y in zip(b, g)), 0.0)
        return X

    def scaled(self, s):
        return MultipoleSet([Puncture(p.point, p.beta, {a: s * c for a, c in p.xi.items()})
                             for p in self.punctures])

    def as_functional(self):
        comps = [DiracMultipole(tuple(p.point), a, c) for p in self.punctures for a, c in p.xi.items() if c != 0]
        if not comps:
            comps = [DiracMultipole(tuple(self.punctures[0].point), (0,) * self.D, 0.0)]
        return FunctionalSpec(comps)

    @classmethod
    def from_json(cls, obj):
        try:
            pts = []
            for p in obj["punctures"]:
                xi = {}
                for t in p.get("xi", []):
                    c = t["c"]
                    c = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else c
                    xi[tuple(t["alpha"])] = c.real if isinstance(c, complex) and c.imag == 0 else c
                pts.append(Puncture(p["point"], p["beta"], xi))
        except (KeyError, TypeError) as exc:
            raise SpecError(f"bad multipole set: {exc}") from exc
        return cls(pts)


def jet_matrix(idx, coeff_rows, mp):
    """Jets of the polynomials whose coefficient rows are given; one column per jet entry."""
    cols = [chi_jet(idx, x, o) for _, x, o in mp.entries()]
    return np.asarray(coeff_rows) @ np.array(cols).T


def jet(fam, k, mp):
    return jet_matrix(fam.idx, fam.coeffs(1, k), mp)


@dataclass
class UvarovLevel:
    n: int
    p_hat: np.ndarray
    h_hat: np.ndarray


def _lower_jets(fam, n, mp):
    N = fam.idx.count(n - 1)
    JP = jet_matrix(fam.idx, fam.s1[:N], mp)                # N_{n-1} x N_S
    Hinv_JP = np.zeros_like(JP, dtype=np.result_type(JP, fam.h_blocks[0]))
    for m in range(n):
        b = fam.idx.block(m)
        Hinv_JP[b] = linalg.solve(fam.h_blocks[m], JP[b])
    return N, JP, Hinv_JP


def uvarov_0d(fam, mp, n):
    """Perturbed ``P_hat_[n]`` coefficients and ``H_hat_[n]`` for ``u + v`` with ``v`` a multipole set."""
    idx = fam.idx
    Xi = mp.xi_matrix()
    JPn = jet(fam, n, mp)
    Sn = fam.coeffs(1, n)[:, :idx.count(n)]
    if n == 0:
        K = np.zeros((mp.size, mp.size))
        N, JP, Hinv_JP = 0, np.zeros((0, mp.size)), np.zeros((0, mp.size))
    else:
        N, JP, Hinv_JP = _lower_jets(fam, n, mp)
        K = JP.T @ Hinv_JP
    M = np.eye(mp.size) + Xi @ K
    try:
        T = linalg.solve(M, Xi)
    except linalg.LinAlgError as exc:
        raise SingularSystem(f"level {n}: I + Xi K is singular") from exc
    if np.linalg.cond(M) > 1e14:
        raise SingularSystem(f"level {n}: I + Xi K is numerically singular")
    B = JPn @ T
    p_hat = Sn.astype(np.result_type(Sn, B), copy=True)
    if n > 0:
        p_hat[:, :N] -= B @ Hinv_JP.T @ fam.s1[:N, :N]
    h_hat = fam.h_blocks[n] + B @ JPn.T
    return UvarovLevel(n, np.real_if_close(p_hat, tol=1e6), np.real_if_close(h_hat, tol=1e6))


def uvarov_masses(fam, points, masses, n):
    """Point-mass specialization written with Christoffel-Darboux kernel values."""
    idx = fam.idx
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    xi = np.asarray(masses)
    Pn = fam.eval_block(1, n, pts).T                       # |[n]| x m
    Sn = fam.coeffs(1, n)[:, :idx.count(n)]
    m = len(pts)
    if n == 0:
        return UvarovLevel(0, Sn.copy(), fam.h_blocks[0] + (Pn * xi) @ Pn.T)
    Kmat = np.array([[fam.cd_kernel(n - 1, pts[i], pts[j]) for j in range(m)] for i in range(m)])
    M = np.eye(m) + xi[:, None] * Kmat
    try:
        T = linalg.solve(M, np.diag(xi))
    except linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    # coefficients of K_{n-1}(x_i, .) in the monomial basis
    N = idx.count(n - 1)
    Kc = np.zeros((m, N), dtype=np.result_type(Pn, fam.s1))
    vals = fam.eval_all(2, pts)
    for l in range(n):
        b = idx.block(l)
        Kc += linalg.solve(fam.h_blocks[l].T, vals[:, b].T).T @ fam.s1[b, :N]
    p_hat = Sn.astype(np.result_type(Sn, T), copy=True)
    p_hat[:, :N] -= Pn @ T @ Kc
    h_hat = fam.h_blocks[n] + Pn @ T @ Pn.T
    return UvarovLevel(n, p_hat, h_hat)


def oracle_uvarov(fam, v):
    """Refactorize ``u + v`` directly; ``v`` is any functional (multipoles, curves, atoms)."""
    u = fam.source.functional
    uh = u + v
    G = pair(uh, np.eye(fam.idx.size), np.eye(fam.idx.size), fam.idx, fam.n_hint)
    from .functional import Diagonal

    return OpFamily.from_gram(G, fam.idx, Diagonal(uh), n_hint=fam.n_hint)


def defining_relation_error(fam, v, level):
    """``H_hat - H - <v, P_hat P^T>`` (max norm)."""
    idx = fam.idx
    n = level.n
    Ph = np.zeros((level.p_hat.shape[0], idx.size), dtype=level.p_hat.dtype)
    Ph[:, :idx.count(n)] = level.p_hat
    vPP = pair(v, Ph, fam.coeffs(1, n), idx, fam.n_hint)
    return float(np.max(np.abs(level.h_hat - fam.h_blocks[n] - vPP)))


# -- curve perturbations ---------------------------------------------------

@dataclass
class CurvePerturbation:
    curve: CurveMeasure
    nodes: int | None = None

    def rule(self, n_max):
        n = self.nodes or self.curve.nodes or max(4 * n_max, 2)
        t, w = self.curve.parameter_rule(n)
        pts = np.atleast_2d(self.curve.gamma()(t)).reshape(len(t), -1)
        return t, pts, w

    def as_functional(self, n_max):
        n = self.nodes or self.curve.nodes or max(4 * n_max, 2)
        c = self.curve
        return FunctionalSpec([CurveMeasure(c.curve, c.interval, c.weight, n, c.params, c.scale)])


@dataclass
class FredholmSolution:
    n: int
    t: np.ndarray
    pi_hat: np.ndarray      # M x |[n]| samples of pi_hat_[n]
    p_hat: np.ndarray
    h_hat: np.ndarray
    residual: float


def _kernel_samples(fam, n, pts):
    """``K_{n-1}(gamma(t_r), gamma(t_s))`` on the parameter nodes."""
    if n == 0:
        return np.zeros((len(pts), len(pts)))
    vals = fam.eval_all(1, pts)
    vals2 = fam.eval_all(2, pts)
    K = np.zeros((len(pts), len(pts)), dtype=np.result_type(vals, fam.h_blocks[0]))
    for m in range(n):
        b = fam.idx.block(m)
        K += vals2[:, b] @ linalg.solve(fam.h_blocks[m], vals[:, b].T)
    return K


def fredholm_residual(fam, cp, n, pi_hat):
    t, pts, w = cp.rule(fam.idx.n_max)
    pi = fam.eval_block(1, n, pts)
    K = _kernel_samples(fam, n, pts)
    integral = (K.T * w[None, :]) @ pi_hat           # sum_r w_r K(r, s) pi_hat(r)
    res = pi_hat - pi + integral
    return float(np.max(np.abs(res))) / max(1.0, float(np.max(np.abs(pi))))


def fredholm_1d(fam, cp, n):
    """Separable closed-form solution of the perturbed Fredholm equation at level ``n``."""
    idx = fam.idx
    t, pts, w = cp.rule(idx.n_max)
    V = fam.eval_all(1, pts)                         # M x N pi values
    N = idx.count(n - 1)
    bn = idx.block(n)
    A = (V * w[:, None]).T @ V                       # A_{l,m} = sum w pi_l pi_m
    Hn = fam.h_matrix()[:N, :N]
    if n > 0:
        try:
            c = linalg.solve((Hn + A[:N, :N]).T, A[bn, :N].T).T
        except linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
    else:
        c = np.zeros((idx.block_size(0), 0))
    pi_hat = V[:, bn] - V[:, :N] @ c.T
    p_hat = fam.s1[bn, :idx.count(n)] - np.hstack([c @ fam.s1[:N, :N], np.zeros((c.shape[0], idx.block_size(n)))])
    h_hat = fam.h_blocks[n] + A[bn, bn] - c @ A[:N, bn]
    res = fredholm_residual(fam, cp, n, pi_hat)
    return FredholmSolution(n, t, pi_hat, p_hat, h_hat, res)


def nystrom_1d(fam, cp, n):
    """Dense collocation of ``pi_hat(t) + int pi_hat(s) kappa(s, t) ds = pi(t)``."""
    idx = fam.idx
    t, pts, w = cp.rule(idx.n_max)
    pi = fam.eval_block(1, n, pts)
    K = _kernel_samples(fam, n, pts)
    M = np.eye(len(t)) + (K.T * w[None, :])
    try:
        pi_hat = linalg.solve(M, pi)
    except linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    # P_hat = P_n - int pi_hat(t) K_{n-1}(gamma(t), x) w dt
    N = idx.count(n - 1)
    vals2 = fam.eval_all(2, pts)
    corr = np.zeros((idx.block_size(n), N), dtype=np.result_type(pi_hat, fam.s1))
    for m in range(n):
        b = idx.block(m)
        coef = (pi_hat * w[:, None]).T @ vals2[:, b]          # |[n]| x |[m]|
        corr += linalg.solve(fam.h_blocks[m].T, coef.T).T @ fam.s1[b, :N]
    p_hat = fam.s1[idx.block(n), :idx.count(n)].astype(corr.dtype, copy=True)
    p_hat[:, :N] -= corr
    h_hat = fam.h_blocks[n] + (pi_hat * w[:, None]).T @ pi
    return FredholmSolution(n, t, pi_hat, p_hat, h_hat, fredholm_residual(fam, cp, n, pi_hat))


def nystrom_rank(fam, cp, n, tol=1e-9):
    """Numerical rank of the discretized kernel ``w_r K_{n-1}(gamma_r, gamma_s)``."""
    t, pts, w = cp.rule(fam.idx.n_max)
    K = _kernel_samples(fam, n, pts) * w[:, None]
    s = np.linalg.svd(K, compute_uv=False)
    if not len(s) or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))
