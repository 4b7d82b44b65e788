"""Multispectral 2D Toda flows on Gram matrices of bilinear generators.

Times are polynomials ``t_i(x) = sum_alpha t_{i,alpha} x^alpha``.  The evolved
Gram matrix ``G(t)_{alpha,beta} = <e^{t1(x)} x^alpha, y^beta e^{-t2(y)}>`` is
assembled entrywise from the generator nodes, never as a product of truncated
exponentials of shift matrices, and then LU-factorized.

Residual checks use central finite differences in the times.  A residual is
accepted when halving the step shrinks it by a factor near 4, or when both
residuals sit at the rounding floor because the quantity vanishes identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import InvarianceViolated, NonConvergentSeries, SingularMinor, SpecError
from .factorization import block_lu
from .functional import (CompositeGenerator, Diagonal, WeightedGenerator, rational_weight)
from .mindex import GradedIndexer, eval_chi, poly_of_shifts_array, shift_array
from .mvopr import OpFamily
from .polynomial import Poly, exp_poly_series_1d
from . import transforms as tr

RATIO_BAND = (3.7, 4.3)
ABS_TOL = 1e-6
NOISE_FACTOR = 100.0
BILINEAR_TOL = 1e-7
TAIL_TOL = 1e-10


# -- times -----------------------------------------------------------------

def time_poly(D, coeffs=None):
    """``sum_alpha c_alpha x^alpha`` from a ``{alpha: c}`` mapping (``None`` means zero)."""
    return Poly(D, dict(coeffs or {}))


def parse_times(text, D):
    """``"1,0=0.1;0,1=0.2"`` shorthand or a polynomial JSON object/string."""
    import json

    if text is None or (isinstance(text, str) and not text.strip()):
        return Poly(D, {})
    if isinstance(text, dict):
        return Poly.from_json(text, D)
    s = text.strip()
    if s.startswith("{"):
        return Poly.from_json(json.loads(s), D)
    terms = {}
    for part in s.split(";"):
        if not part.strip():
            continue
        try:
            lhs, rhs = part.split("=")
            alpha = tuple(int(v) for v in lhs.split(","))
            c = complex(rhs.strip().replace("i", "j"))
        except ValueError as exc:
            raise SpecError(f"cannot parse time term {part!r}") from exc
        if len(alpha) != D:
            raise SpecError(f"time term {part!r} has wrong dimension")
        terms[alpha] = c.real if c.imag == 0 else c
    return Poly(D, terms)


def _degree(t):
    return 0 if t is None or t.is_zero() else t.degree


def _bump(t, D, alpha, h):
    base = t if t is not None else Poly(D, {})
    return base + Poly.monomial(alpha, h)


def _lower_inv(S):
    return linalg.solve_triangular(S, np.eye(S.shape[0]), lower=True, unit_diagonal=True)


# -- state -----------------------------------------------------------------

class TodaState:
    """Factorization of ``G(t)`` together with Lax, Zakharov-Shabat and Baker data."""

    def __init__(self, generator, n_max, t1=None, t2=None, n_hint=None):
        self.generator = generator
        self.D = generator.D
        self.idx = GradedIndexer(self.D, n_max)
        self.t1 = t1 if t1 is not None else Poly(self.D, {})
        self.t2 = t2 if t2 is not None else Poly(self.D, {})
        self.n_hint = n_max if n_hint is None else n_hint
        self.G = generator.gram(self.idx, self.t1, self.t2, self.n_hint)
        self.fact = block_lu(self.G, self.idx)
        self.fam = OpFamily(self.fact, generator, self.t1, self.t2, self.n_hint)
        self._cache = {}

    def __repr__(self):
        return f"TodaState(D={self.D}, n_max={self.idx.n_max})"

    @property
    def n_max(self):
        return self.idx.n_max

    @property
    def d_t(self):
        return max(_degree(self.t1), _degree(self.t2))

    def shifted(self, which, alpha, h):
        """State with ``t_which`` increased by ``h x^alpha``."""
        t1, t2 = self.t1, self.t2
        if which == 1:
            t1 = _bump(t1, self.D, alpha, h)
        else:
            t2 = _bump(t2, self.D, alpha, h)
        return TodaState(self.generator, self.n_max, t1, t2, self.n_hint)

    def moved(self, dt1=None, dt2=None, s=1.0):
        t1 = self.t1 + dt1 * s if dt1 is not None else self.t1
        t2 = self.t2 + dt2 * s if dt2 is not None else self.t2
        return TodaState(self.generator, self.n_max, t1, t2, self.n_hint)

    # factors
    @property
    def s1(self):
        return self.fact.s1

    @property
    def s2(self):
        return self.fact.s2

    @property
    def h_blocks(self):
        return self.fact.h_blocks

    def h_block(self, k):
        return self.fact.h_blocks[k]

    def beta(self, k):
        return self.fact.beta(k, 1)

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def s2_tilde(self):
        """``H S2^{-T}`` (upper block triangular)."""
        return self._memo("s2t", lambda: self.fact.h_matrix() @ _lower_inv(self.s2).T)

    def L1(self, a):
        """``S1 Lambda_a S1^{-1}``; exact on block rows ``<= n_max - 1``."""
        return self._memo(("L1", a), lambda: self.s1 @ shift_array(self.idx, a) @ _lower_inv(self.s1))

    def L2(self, a):
        """``S2~ Lambda_a^T S2~^{-1}``; exact on block columns ``<= n_max - 1``."""
        def make():
            St = self.s2_tilde()
            St_inv = self.s2.T @ linalg.block_diag(*[np.linalg.inv(h) for h in self.h_blocks])
            return St @ shift_array(self.idx, a).T @ St_inv
        return self._memo(("L2", a), make)

    def L_power(self, i, alpha):
        out = np.eye(self.idx.size)
        for a, p in enumerate(alpha):
            La = self.L1(a) if i == 1 else self.L2(a)
            for _ in range(p):
                out = out @ La
        return out

    def B(self, i, alpha):
        """``(L1^alpha)_+`` for ``i == 1``; ``(L2^alpha)_-`` for ``i == 2``."""
        M = self.L_power(i, alpha)
        return block_upper(M, self.idx) if i == 1 else M - block_upper(M, self.idx)

    # Baker functions
    def psi1(self, z):
        """``e^{t1(z)} P1(t, z)`` for every entry."""
        z = np.asarray(z)
        e = np.exp(self.t1(z))
        return (e[:, None] if z.ndim == 2 else e) * self.fam.eval_all(1, z)

    def psi2_star(self, z):
        """``e^{-t2(z)} H^{-T} P2(t, z)``."""
        z = np.asarray(z)
        Hinv = linalg.block_diag(*[np.linalg.inv(h) for h in self.h_blocks])
        out = self.fam.eval_all(2, z) @ Hinv
        e = np.exp(-self.t2(z))
        return (e[:, None] if z.ndim == 2 else e) * out


def evolve(generator, n_max, t1=None, t2=None, n_hint=None):
    return TodaState(generator, n_max, t1, t2, n_hint)


def block_upper(M, idx):
    """Block upper triangular part including the diagonal blocks."""
    out = np.zeros_like(M)
    for k in range(idx.n_max + 1):
        b = idx.block(k)
        out[b, b.start:] = M[b, b.start:]
    return out


def trust_level(state, d=0):
    return state.n_max - max(d, state.d_t) - 2


def _trust_max(M, idx, T):
    if T < 0:
        raise SpecError("trust region is empty; increase n_max")
    n = idx.count(T)
    return float(np.max(np.abs(M[:n, :n]), initial=0.0))


# -- ratio test ------------------------------------------------------------

@dataclass
class RatioResult:
    name: str
    residual_h: float
    residual_h2: float
    h: float
    order: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self):
        if self.residual_h2 == 0:
            return float("inf") if self.residual_h else float("nan")
        return self.residual_h / self.residual_h2

    def floor(self, h):
        """Rounding level of a stencil that divides by ``h**order``."""
        return NOISE_FACTOR * np.finfo(float).eps / h ** self.order

    @property
    def at_floor(self):
        return self.residual_h < self.floor(self.h) and self.residual_h2 < self.floor(self.h / 2)

    @property
    def in_band(self):
        return RATIO_BAND[0] <= self.ratio <= RATIO_BAND[1]

    @property
    def passed(self):
        if self.at_floor:
            return True
        return self.in_band and self.residual_h < ABS_TOL

    def to_json(self):
        r = self.ratio
        return {"check": self.name, "h": self.h, "residual": self.residual_h,
                "residual_half_step": self.residual_h2,
                "ratio": None if not np.isfinite(r) else r,
                "at_noise_floor": self.at_floor, "pass": bool(self.passed), **self.extra}


def ratio_test(name, fn, h, order=1):
    """Evaluate ``fn`` at ``h`` and ``h / 2``; ``order`` is the number of nested differences."""
    return RatioResult(name, float(fn(h)), float(fn(h / 2)), h, order)


# -- residuals -------------------------------------------------------------

def _central(state, which, alpha, h, get):
    plus = get(state.shifted(which, alpha, h))
    minus = get(state.shifted(which, alpha, -h))
    return (plus - minus) / (2 * h)


def lax_residual(state, i, a, j, alpha, h, trust=None):
    """``|| d L_{i,a} / d t_{j,alpha} - [B_{j,alpha}, L_{i,a}] ||`` on trust-region blocks."""
    alpha = tuple(alpha)
    L = (lambda s: s.L1(a)) if i == 1 else (lambda s: s.L2(a))
    dL = _central(state, j, alpha, h, L)
    B = state.B(j, alpha)
    Li = L(state)
    T = trust_level(state, sum(alpha)) if trust is None else trust
    return _trust_max(dL - (B @ Li - Li @ B), state.idx, T)


def zs_residual(state, flow, flow2, h, trust=None):
    """``d B'/dt - d B/dt' + [B', B]`` for ``B = B_flow``, ``B' = B_flow2``."""
    (i, alpha), (i2, alpha2) = flow, flow2
    alpha, alpha2 = tuple(alpha), tuple(alpha2)
    dB2 = _central(state, i, alpha, h, lambda s: s.B(i2, alpha2))
    dB = _central(state, i2, alpha2, h, lambda s: s.B(i, alpha))
    B, B2 = state.B(i, alpha), state.B(i2, alpha2)
    T = trust_level(state, max(sum(alpha), sum(alpha2))) if trust is None else trust
    return _trust_max(dB2 - dB + B2 @ B - B @ B2, state.idx, T)


def _lam_block(idx, a, k, l):
    return shift_array(idx, a)[idx.block(k), idx.block(l)]


def toda_lattice_residual(state, k, a, b, h):
    """Nested central differences for the 2D Toda lattice equation at level ``k``."""
    idx = state.idx
    if not 1 <= k <= state.n_max - 1:
        raise SpecError(f"level {k} outside the admissible range 1..{state.n_max - 1}")
    ea = tuple(int(i == a) for i in range(state.D))
    eb = tuple(int(i == b) for i in range(state.D))

    def F(s):
        dH = _central(s, 1, ea, h, lambda q: q.h_block(k))
        return dH @ np.linalg.inv(s.h_block(k))

    dF = _central(state, 2, eb, h, F)
    Hk, Hk1, Hkm = state.h_block(k), state.h_block(k + 1), state.h_block(k - 1)
    term1 = _lam_block(idx, a, k, k + 1) @ Hk1 @ _lam_block(idx, b, k, k + 1).T @ np.linalg.inv(Hk)
    term2 = Hk @ _lam_block(idx, b, k - 1, k).T @ np.linalg.inv(Hkm) @ _lam_block(idx, a, k - 1, k)
    return float(np.max(np.abs(dF + term1 - term2)))


def log_derivative_residual(state, k, a, h):
    """``dH_k/dt_{1,e_a} H_k^{-1}`` by differences versus ``beta_k Lambda - Lambda beta_{k+1}``."""
    idx = state.idx
    ea = tuple(int(i == a) for i in range(state.D))
    dH = _central(state, 1, ea, h, lambda q: q.h_block(k))
    lhs = dH @ np.linalg.inv(state.h_block(k))
    rhs = -_lam_block(idx, a, k, k + 1) @ state.beta(k + 1)
    if k >= 1:
        rhs = rhs + state.beta(k) @ _lam_block(idx, a, k - 1, k)
    return float(np.max(np.abs(lhs - rhs)))


def kp_wave_residual(state, a, b, z, h, trust=None):
    """Second-order linear equation for ``Psi_1`` along ``t_{1,e_a+e_b}``."""
    idx = state.idx
    D = state.D
    ea = tuple(int(i == a) for i in range(D))
    eb = tuple(int(i == b) for i in range(D))
    eab = tuple(x + y for x, y in zip(ea, eb))
    z = np.asarray(z, dtype=float)
    psi = lambda s: s.psi1(z)
    lhs = _central(state, 1, eab, h, psi)
    mixed = _central(state, 1, ea, h, lambda s: _central(s, 1, eb, h, psi))
    T = trust_level(state, 2) if trust is None else trust
    U_psi = np.zeros_like(lhs)
    p0 = psi(state)
    for k in range(1, T + 1):
        dba = _central(state, 1, ea, h, lambda s: s.beta(k))
        dbb = _central(state, 1, eb, h, lambda s: s.beta(k))
        U = -dba @ _lam_block(idx, b, k - 1, k) - dbb @ _lam_block(idx, a, k - 1, k)
        bk = idx.block(k)
        U_psi[bk] = U @ p0[bk]
    n = idx.count(T)
    return float(np.max(np.abs((lhs - mixed - U_psi)[:n]), initial=0.0))


def spectral_residual(state, a, z):
    """``L_{1,a} Psi_1 - z_a Psi_1`` on rows below the truncation edge."""
    z = np.asarray(z)
    p = state.psi1(z)
    n = state.idx.count(state.n_max - 1)
    return float(np.max(np.abs((state.L1(a) @ p - z[a] * p)[:n])))


def combined_flow_derivative(state, alpha, h, trust=None):
    """``(d_{1,alpha} + d_{2,alpha}) L_{1,a}`` maximized over axes ``a``."""
    alpha = tuple(alpha)
    mono = Poly.monomial(alpha)
    T = trust_level(state, sum(alpha)) if trust is None else trust
    out = 0.0
    plus = state.moved(mono, mono, h)
    minus = state.moved(mono, mono, -h)
    for a in range(state.D):
        d = (plus.L1(a) - minus.L1(a)) / (2 * h)
        out = max(out, _trust_max(d, state.idx, T))
    return out


def hankel_lax_gap(state, trust=None):
    """``max_a ||L_{1,a} - L_{2,a}||`` and the largest block beyond the tridiagonal band."""
    idx = state.idx
    T = trust_level(state, 1) if trust is None else trust
    n = idx.count(T)
    gap = 0.0
    band = 0.0
    for a in range(state.D):
        L1, L2 = state.L1(a), state.L2(a)
        gap = max(gap, float(np.max(np.abs((L1 - L2)[:n, :n]))))
        for k in range(T + 1):
            for l in range(T + 1):
                if abs(k - l) >= 2:
                    band = max(band, float(np.max(np.abs(L1[idx.block(k), idx.block(l)]))))
    return gap, band


def reduction_check(state, q1, q2, h=1e-4, power=1, tol=1e-9):
    """Verify ``(Q1, Q2)``-invariance and its consequences; raises ``InvarianceViolated``."""
    idx = state.idx
    G = state.generator.gram(idx, n_hint=state.n_hint)
    m = max(q1.degree, q2.degree, 0)
    n = idx.count(idx.n_max - m)
    inv = poly_of_shifts_array(q1, idx) @ G - G @ poly_of_shifts_array(q2, idx).T
    scale = max(1.0, float(np.max(np.abs(G))))
    inv_err = float(np.max(np.abs(inv[:n, :n]), initial=0.0)) / scale
    if inv_err > tol:
        raise InvarianceViolated(f"Q1(Lambda) G != G Q2(Lambda^T): relative defect {inv_err:.3e}")
    T = trust_level(state, max(m * power, 1))
    if T < 0:
        raise SpecError("trust region is empty; increase n_max")
    nT = idx.count(T)
    QL1 = _poly_of_matrices(q1, [state.L1(a) for a in range(state.D)])
    QL2 = _poly_of_matrices(q2, [state.L2(a) for a in range(state.D)])
    lax_gap = float(np.max(np.abs((QL1 - QL2)[:nT, :nT]), initial=0.0))
    d1 = q1 ** power
    d2 = q2 ** power

    def deriv(hh):
        plus = state.moved(d1, d2, hh)
        minus = state.moved(d1, d2, -hh)
        out = 0.0
        for a in range(state.D):
            for get in (lambda s: s.L1(a), lambda s: s.L2(a)):
                out = max(out, _trust_max((get(plus) - get(minus)) / (2 * hh), idx, T))
        return out

    flow = ratio_test("reduction_flow", deriv, h)
    return {"invariance_defect": inv_err, "lax_gap": lax_gap, "flow_derivative": flow.residual_h,
            "flow_derivative_half_step": flow.residual_h2, "pass": bool(lax_gap < 1e-8 and flow.passed)}


def _poly_of_matrices(q, mats):
    n = mats[0].shape[0]
    out = np.zeros((n, n), dtype=np.result_type(*mats, complex if q.is_complex() else float))
    for alpha, c in q.terms.items():
        term = np.eye(n)
        for a, p in enumerate(alpha):
            for _ in range(p):
                term = term @ mats[a]
        out = out + c * term
    return out


# -- truncated wave matrices -----------------------------------------------

def exp_of_shifts(t, idx, sign=1.0, transpose=False):
    """``exp(sign * t(Lambda))`` on the truncation by its (finite, nilpotent) power series."""
    if t is None or t.is_zero():
        return np.eye(idx.size)
    c0 = t.coefficient((0,) * idx.D)
    T = poly_of_shifts_array(t - c0, idx) * sign
    out = np.eye(idx.size, dtype=T.dtype)
    term = np.eye(idx.size, dtype=T.dtype)
    for n in range(1, idx.n_max + 1):
        term = term @ T / n
        out = out + term
    out = out * np.exp(sign * c0)
    return out.T if transpose else out


def _enlarged(generator, n_max, t1, t2, extra, n_hint=None):
    """State with ``extra`` more levels, backing off while the enlarged minors are singular."""
    for e in range(extra, 1, -2):
        try:
            return TodaState(generator, n_max + e, t1, t2, n_hint if n_hint is not None else n_max + e)
        except SingularMinor:
            continue
    raise SingularMinor(n_max + 1)


def _wave_error(big, n_max):
    idx = big.idx
    E1inv = exp_of_shifts(big.t1, idx, -1.0)
    E2T = exp_of_shifts(big.t2, idx, 1.0, transpose=True)
    W1inv = E1inv @ _lower_inv(big.s1)
    W2 = big.s2_tilde() @ E2T
    G0 = big.generator.gram(idx, n_hint=big.n_hint)
    n = GradedIndexer(big.D, n_max).size
    diff = (W1inv @ W2 - G0)[:n, :n]
    return float(np.max(np.abs(diff))) / max(1.0, float(np.max(np.abs(G0[:n, :n]))))


def wave_identity_error(generator, n_max, t1, t2, extra=10, n_hint=None):
    """``W1^{-1} W2 - G`` on the leading ``n_max`` levels, computed in an enlarged truncation."""
    return _wave_error(_enlarged(generator, n_max, t1, t2, extra, n_hint), n_max)


def wave_identity_study(generator, n_max, t1, t2, extras=(6, 8, 10, 12), n_hint=None):
    """``(extra, error)`` pairs for growing enlargements; stops at the first singular enlargement."""
    out = []
    for e in extras:
        try:
            big = TodaState(generator, n_max + e, t1, t2, n_hint if n_hint is not None else n_max + e)
        except SingularMinor:
            break
        out.append((e, _wave_error(big, n_max)))
    return out


def wave_converged(study, tol, drop=1e-2):
    """Accept when the last error is below ``tol`` or the errors fall monotonically by ``drop``."""
    if not study:
        return False
    errs = [e for _, e in study]
    if errs[-1] < tol:
        return True
    return len(errs) >= 3 and all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] <= drop * errs[0]


def baker_closed_form_error(state, z, extra=10, levels=None):
    """``W1 chi(z)`` (enlarged truncation) versus ``e^{t1(z)} P1(t, z)`` on the first ``levels`` levels."""
    big = _enlarged(state.generator, state.n_max, state.t1, state.t2, extra, None)
    W1 = big.s1 @ exp_of_shifts(state.t1, big.idx, 1.0)
    v = W1 @ eval_chi(big.idx, np.asarray(z))
    n = state.idx.count(state.n_max if levels is None else levels)
    ref = state.psi1(z)[:n]
    return float(np.max(np.abs(v[:n] - ref))) / max(1.0, float(np.max(np.abs(ref))))


# -- Toda-level linear spectral transformation -----------------------------

def _node_generator(g):
    for p in [g] + list(getattr(g, "parts", [])):
        if p.multipoles(4):
            raise SpecError("Toda transforms need node-based generators")


def checked_generator(generator, spec):
    """Generator of ``G_check`` with ``G_check Q2(Lambda^T) = G``."""
    _node_generator(generator)
    parts = [WeightedGenerator(generator, None, rational_weight(den=spec.q2) if spec.m2 else None)]
    if spec.masses is not None:
        v = spec.masses.with_factors(divisor=spec.q1) if spec.m1 else spec.masses
        parts.append(Diagonal(v))
    return CompositeGenerator(parts) if len(parts) > 1 else parts[0]


def hat_generator(generator, spec):
    """Generator of ``G_hat`` with ``G_hat Q2(Lambda^T) = Q1(Lambda) G``."""
    _node_generator(generator)
    parts = [WeightedGenerator(generator, rational_weight(num=spec.q1) if spec.m1 else None,
                               rational_weight(den=spec.q2) if spec.m2 else None)]
    if spec.masses is not None:
        parts.append(Diagonal(spec.masses))
    return CompositeGenerator(parts) if len(parts) > 1 else parts[0]


def toda_r_matrix(state, spec):
    """``R(t) = S1(t) G_check(t)`` paired through the checked generator."""
    gc = checked_generator(state.generator, spec)
    R = gc.pair(state.s1, np.eye(state.idx.size), state.idx, state.t1, state.t2, state.n_hint)
    return tr.RMatrix(R, state.idx)


@dataclass
class TodaCguLevel:
    k: int
    p_hat: np.ndarray
    h_hat: np.ndarray
    omega: np.ndarray

    def psi1_hat(self, state, x):
        """``e^{t1(x)} P1_hat_[k](t, x)``."""
        x = np.asarray(x)
        n = self.p_hat.shape[1]
        return np.exp(state.t1(x)) * (eval_chi(state.idx, x)[..., :n] @ self.p_hat.T)


def toda_cgu(state, spec, k, R=None):
    """Transformed Baker block and quasi-tau at the state's times."""
    if spec.D != state.D:
        raise SpecError("transform and generator dimensions differ")
    R = toda_r_matrix(state, spec) if R is None else R
    lv = tr.solve_level(state.fam, spec, k, R)
    return TodaCguLevel(k, lv.p_hat, lv.h_hat, lv.omega)


def toda_cgu_oracle(state, spec):
    """Evolve the transformed generator to the same times and refactorize."""
    return TodaState(hat_generator(state.generator, spec), state.n_max, state.t1, state.t2, state.n_hint)


def commuting_square_error(state, spec):
    """Largest relative discrepancy between transform-then-evolve and evolve-then-transform."""
    oracle = toda_cgu_oracle(state, spec)
    R = toda_r_matrix(state, spec)
    err = 0.0
    for k in range(state.n_max - spec.m1 + 1):
        lv = toda_cgu(state, spec, k, R)
        n = state.idx.count(k)
        ref_p = oracle.s1[state.idx.block(k), :n]
        ref_h = oracle.h_block(k)
        err = max(err,
                  float(np.max(np.abs(lv.p_hat - ref_p))) / max(1.0, float(np.max(np.abs(ref_p)))),
                  float(np.max(np.abs(lv.h_hat - ref_h))) / max(1e-300, float(np.max(np.abs(ref_h)))))
    return err


# -- bilinear identity (D = 1) ---------------------------------------------

def _nodes_1d(generator, n_hint):
    return generator.pairings(n_hint)


def adjoint_baker1_closed(state, alpha, z):
    """``Psi_1^*_alpha(t, z) = <1/(z - x), Psi_2^*_alpha(t, y)>`` on the static form."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    total = np.zeros(len(z), dtype=complex)
    for p in _nodes_1d(state.generator, state.n_hint):
        fy = state.psi2_star(p.y)[:, alpha] if p.y.ndim == 2 else None
        fx = 1.0 / (z[None, :] - p.x[:, 0][:, None])         # nodes x points
        total += p.pair_values(fx, fy[:, None]).ravel()
    return total


def adjoint_baker1_laurent(state, alpha, n_terms):
    """Laurent coefficients ``m_n = <x^n, Psi_2^*_alpha(t, y)>`` of ``Psi_1^*_alpha``."""
    coeffs = np.zeros(n_terms, dtype=complex)
    for p in _nodes_1d(state.generator, state.n_hint):
        fx = p.x[:, :1] ** np.arange(n_terms)[None, :]
        fy = state.psi2_star(p.y)[:, alpha][:, None]
        coeffs += p.pair_values(fx, fy).ravel()
    return coeffs


def hat_baker2_laurent(state, spec, level, alpha_in_level, n_terms):
    """Laurent coefficients of ``Psi_hat_2`` from ``omega_1 R(t) e^{t2(Lambda^T)} chi^*``."""
    lv = toda_cgu(state, spec, level)
    row = lv.omega[alpha_in_level]                    # omega_1 row over P1 levels <= k + m1
    c_exp = exp_poly_series_1d(state.t2, 64)
    L = n_terms + len(c_exp)
    gc = checked_generator(state.generator, spec)
    P1 = row @ state.s1[:len(row)]
    fx = lambda pts: (eval_chi(state.idx, pts) @ P1)[:, None]
    fy = lambda pts: pts[:, :1] ** np.arange(L)[None, :]
    wR = gc.pair_functions(fx, fy, state.t1, state.t2, state.n_hint).ravel()   # (omega_1 R)_{alpha', l}
    a = np.array([np.dot(wR[n:n + len(c_exp)], c_exp) for n in range(n_terms)])
    return a, lv


def hat_baker2_closed(state, spec, lv, alpha_in_level, z):
    """``<e^{t1(x)} P1_hat(t, x), 1/(z - y)>`` on the static transformed form."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    gh = hat_generator(state.generator, spec)
    coef = lv.p_hat[alpha_in_level]
    total = np.zeros(len(z), dtype=complex)
    for p in gh.pairings(state.n_hint):
        fx = (np.exp(state.t1(p.x)) * (eval_chi(state.idx, p.x)[:, :len(coef)] @ coef))[:, None]
        fy = 1.0 / (z[None, :] - p.y[:, 0][:, None])
        total += p.pair_values(fx, fy).ravel()
    return total


def _laurent_eval(coeffs, z):
    z = np.asarray(z, dtype=complex)
    powers = z[:, None] ** (-(np.arange(len(coeffs)) + 1))[None, :]
    return powers @ coeffs


def _tail(coeffs, r, k=4):
    tail = np.abs(coeffs[-k:]) * r ** (-(np.arange(len(coeffs) - k, len(coeffs)) + 1))
    head = np.max(np.abs(coeffs) * r ** (-(np.arange(len(coeffs)) + 1)))
    return float(np.max(tail)) / max(head, 1e-300)


def _contour(f, r, n_quad):
    th = 2 * np.pi * np.arange(n_quad) / n_quad
    z = r * np.exp(1j * th)
    return np.sum(f(z) * 1j * z) * (2 * np.pi / n_quad)


@dataclass
class BilinearResult:
    lhs: complex
    rhs: complex
    r1: float
    r2: float
    laurent_gap: float

    @property
    def error(self):
        return abs(self.lhs - self.rhs) / max(abs(self.lhs), 1.0)

    @property
    def passed(self):
        return self.error < BILINEAR_TOL

    def to_json(self):
        return {"lhs": [self.lhs.real, self.lhs.imag], "rhs": [self.rhs.real, self.rhs.imag],
                "r1": self.r1, "r2": self.r2, "relative_error": self.error,
                "laurent_closed_form_gap": self.laurent_gap, "pass": bool(self.passed)}


def _pick_radius(coeff_fn, r0, max_doublings=8):
    r = r0
    for _ in range(max_doublings):
        c = coeff_fn()
        if _tail(c, r) < TAIL_TOL:
            return r, c
        r *= 2
    raise NonConvergentSeries(f"Laurent tail does not decay below {TAIL_TOL:g} up to radius {r / 2:g}")


def bilinear_check(generator, n_max, spec, t, t_prime, alpha, alpha_prime, n_quad=256, n_terms=96,
                   n_hint=None):
    """Both contour integrals of the generalized bilinear identity (``D == 1``)."""
    if generator.D != 1:
        raise SpecError("the bilinear identity is implemented for D == 1 (D == 2 is optional)")
    if n_quad < 64:
        raise SpecError("n_quad must be at least 64")
    if alpha_prime + spec.m1 > n_max:
        raise SpecError("alpha' + m1 exceeds n_max")
    st = TodaState(generator, n_max, t[0], t[1], n_hint)
    stp = TodaState(generator, n_max, t_prime[0], t_prime[1], n_hint)
    r0 = 2.0 * max(generator.support_radius(st.n_hint), 0.5)

    # left: hat Psi_1(t') * Psi_1^*(t) * Q1
    m = adjoint_baker1_laurent(st, alpha, n_terms)
    r1, m = _pick_radius(lambda: m, r0)
    lv = toda_cgu(stp, spec, alpha_prime)

    def left(z):
        zz = z[:, None]
        P = eval_chi(stp.idx, zz)[:, :lv.p_hat.shape[1]] @ lv.p_hat[0]
        q1 = spec.q1(zz)
        return np.exp(stp.t1(zz)) * P * q1 * _laurent_eval(m, z)

    lhs = _contour(left, r1, n_quad)

    # right: hat Psi_2(t') * Psi_2^*(t) * Q2
    a, lv2 = hat_baker2_laurent(stp, spec, alpha_prime, 0, n_terms)
    r2, a = _pick_radius(lambda: a, r0)

    def right(z):
        zz = z[:, None]
        return _laurent_eval(a, z) * st.psi2_star(zz)[:, alpha] * spec.q2(zz)

    rhs = _contour(right, r2, n_quad)

    zs = r2 * np.exp(1j * np.linspace(0.1, 6.0, 7))
    gap_hat = np.max(np.abs(_laurent_eval(a, zs) - hat_baker2_closed(stp, spec, lv2, 0, zs)))
    zs1 = r1 * np.exp(1j * np.linspace(0.1, 6.0, 7))
    gap_adj = np.max(np.abs(_laurent_eval(m, zs1) - adjoint_baker1_closed(st, alpha, zs1)))
    return BilinearResult(complex(lhs), complex(rhs), r1, r2, float(max(gap_hat, gap_adj)))


def bilinear_reference(generator, n_max, spec, t, alpha, alpha_prime, n_hint=None):
    """``2 pi i * omega_1(t)_{alpha', alpha}`` (value of both sides when ``t == t'``)."""
    st = TodaState(generator, n_max, t[0], t[1], n_hint)
    lv = toda_cgu(st, spec, alpha_prime)
    Sinv = _lower_inv(st.s1)
    q1L = poly_of_shifts_array(spec.q1, st.idx)
    w1 = lv.p_hat[0] @ q1L[:lv.p_hat.shape[1]] @ Sinv
    return 2j * np.pi * w1[alpha]
