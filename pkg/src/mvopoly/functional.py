"""Constructive linear functionals and bilinear generators.

Every functional is reduced to an *atomic form*: weighted nodes plus a list of
point multipoles ``c * d^alpha f(x0) / alpha!``.  Moments, Gram matrices and
polynomial pairings are all computed from that form, so quadrature densities,
discrete measures, multipoles and curve measures share a single code path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as _cartesian
from typing import Callable

import numpy as np
from numpy.polynomial.chebyshev import chebgauss
from numpy.polynomial.legendre import leggauss

from .errors import DivisorNearZero, PoleOnSupport, SpecError
from .mindex import GradedIndexer, chi_jet, eval_chi
from .polynomial import Poly, reciprocal_taylor

DIVISOR_TOL = 1e-8
EXTRA_NODES = 8


# -- one-dimensional rules ------------------------------------------------

def _axis_rule(weight, lo, hi, n):
    """Nodes and weights for ``int_lo^hi f(x) w(x) dx`` with a builtin weight name."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    if weight == "chebyshev":
        s, w = chebgauss(n)
        return mid + half * s, w
    s, w = leggauss(n)
    x = mid + half * s
    w = half * w
    if weight == "lebesgue":
        return x, w
    if weight == "gaussian":
        return x, w * np.exp(-x * x)
    raise SpecError(f"unknown builtin weight {weight!r}")


def _tensor_rule(box, weight, n):
    axes = [_axis_rule(weight, lo, hi, n) for lo, hi in box]
    pts = np.array(list(_cartesian(*[a[0] for a in axes])))
    wts = np.array([np.prod(c) for c in _cartesian(*[a[1] for a in axes])])
    return pts.reshape(-1, len(box)), wts


# -- components -----------------------------------------------------------

@dataclass(frozen=True)
class QuadratureDensity:
    """Weight function on a box, integrated by a tensor Gauss rule."""

    box: tuple
    weight: object = "lebesgue"
    nodes: int | None = None
    scale: complex = 1.0

    @property
    def D(self):
        return len(self.box)

    def rule(self, n_default):
        n = self.nodes or n_default
        if n < 1:
            raise SpecError("quadrature node count must be >= 1")
        if callable(self.weight):
            pts, w = _tensor_rule(self.box, "lebesgue", n)
            w = w * np.asarray(self.weight(pts))
        else:
            pts, w = _tensor_rule(self.box, self.weight, n)
        return pts, self.scale * w


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite sum of weighted point masses."""

    points: np.ndarray
    weights: np.ndarray

    def __init__(self, atoms=None, points=None, weights=None):
        if atoms is not None:
            points = [a[0] for a in atoms]
            weights = [a[1] for a in atoms]
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", np.asarray(weights).reshape(-1))
        if pts.shape[0] != self.weights.shape[0]:
            raise SpecError("discrete measure needs one weight per point")

    @property
    def D(self):
        return self.points.shape[1]

    def rule(self, n_default):
        return self.points, self.weights


@dataclass(frozen=True)
class DiracMultipole:
    """Acts as ``coef * d^deriv f(point) / deriv!``."""

    point: tuple
    deriv: tuple
    coef: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(v) for v in self.point))
        object.__setattr__(self, "deriv", tuple(int(v) for v in self.deriv))
        if len(self.point) != len(self.deriv) or min(self.deriv, default=0) < 0:
            raise SpecError("multipole point and derivative must share the dimension")

    @property
    def D(self):
        return len(self.point)


def _segment(params):
    a = np.asarray(params["start"], dtype=float)
    b = np.asarray(params["end"], dtype=float)
    t0, t1 = params.get("_interval", (0.0, 1.0))
    return lambda t: a + np.outer((np.asarray(t) - t0) / (t1 - t0), b - a)


def _circle_arc(params):
    c = np.asarray(params.get("center", [0.0, 0.0]), dtype=float)
    r = float(params.get("radius", 1.0))
    if c.shape != (2,):
        raise SpecError("circle-arc curves live in D = 2")
    return lambda t: c + r * np.column_stack([np.cos(t), np.sin(t)])


BUILTIN_CURVES = {"segment": _segment, "circle-arc": _circle_arc}


@dataclass(frozen=True)
class CurveMeasure:
    """``f -> int_{t0}^{t1} f(gamma(t)) w(t) dt`` by Gauss rule in the parameter."""

    curve: object
    interval: tuple
    weight: object = "lebesgue"
    nodes: int | None = None
    params: dict = field(default_factory=dict)
    scale: complex = 1.0

    def __post_init__(self):
        t0, t1 = self.interval
        if not t1 > t0:
            raise SpecError("curve interval must be nondegenerate")

    def gamma(self):
        if callable(self.curve):
            return self.curve
        try:
            make = BUILTIN_CURVES[self.curve]
        except KeyError:
            raise SpecError(f"unknown builtin curve {self.curve!r}") from None
        return make({**self.params, "_interval": tuple(self.interval)})

    def parameter_rule(self, n_default):
        n = self.nodes or n_default
        t0, t1 = self.interval
        if callable(self.weight):
            t, w = _axis_rule("lebesgue", t0, t1, n)
            w = w * np.asarray(self.weight(t))
        else:
            t, w = _axis_rule(self.weight, t0, t1, n)
        return t, self.scale * w

    def rule(self, n_default):
        t, w = self.parameter_rule(n_default)
        return np.atleast_2d(self.gamma()(t)).reshape(len(t), -1), w

    @property
    def D(self):
        return self.gamma()(np.array([self.interval[0]])).reshape(1, -1).shape[1]


# -- atomic form ----------------------------------------------------------

@dataclass
class AtomicForm:
    points: np.ndarray
    weights: np.ndarray
    multipoles: list  # (point ndarray, alpha tuple, coef)

    @property
    def D(self):
        return self.points.shape[1]


def _orders_below(alpha):
    return list(_cartesian(*[range(a + 1) for a in alpha]))


class FunctionalSpec:
    """``P -> <components, multiplier * P / divisor>``."""

    def __init__(self, components, divisor=None, multiplier=None, divisor_tol=DIVISOR_TOL):
        self.components = list(components)
        if not self.components:
            raise SpecError("a functional needs at least one component")
        dims = {c.D for c in self.components}
        if len(dims) != 1:
            raise SpecError("components disagree on the dimension")
        self.D = dims.pop()
        for p in (divisor, multiplier):
            if p is not None and p.D != self.D:
                raise SpecError("divisor/multiplier dimension mismatch")
        self.divisor = divisor
        self.multiplier = multiplier
        self.divisor_tol = divisor_tol

    def __repr__(self):
        return f"FunctionalSpec(D={self.D}, components={len(self.components)})"

    def __add__(self, other):
        return FunctionalSum([self, other])

    @property
    def terms(self):
        return [self]

    def with_factors(self, multiplier=None, divisor=None):
        """Same components with extra polynomial multiplier/divisor folded in."""
        m = self.multiplier
        if multiplier is not None:
            m = multiplier if m is None else m * multiplier
        d = self.divisor
        if divisor is not None:
            d = divisor if d is None else d * divisor
        return FunctionalSpec(self.components, d, m, self.divisor_tol)

    def atomic(self, n_hint=4):
        n_default = n_hint + EXTRA_NODES
        pts, wts, mps = [], [], []
        for c in self.components:
            if isinstance(c, DiracMultipole):
                mps.append(c)
                continue
            p, w = c.rule(n_default)
            pts.append(np.asarray(p, dtype=float).reshape(-1, self.D))
            wts.append(np.asarray(w))
        if pts:
            P = np.vstack(pts)
            W = np.concatenate(wts)
        else:
            P = np.zeros((0, self.D))
            W = np.zeros(0)
        if self.divisor is not None and len(P):
            q = self.divisor(P)
            bad = np.abs(q) <= self.divisor_tol
            if np.any(bad):
                raise DivisorNearZero(
                    f"divisor |Q| <= {self.divisor_tol:g} at {int(bad.sum())} node(s), e.g. {P[bad][0]}")
            W = W / q
        if self.multiplier is not None and len(P):
            W = W * self.multiplier(P)
        out = []
        for m in mps:
            out.extend(self._expand_multipole(m))
        return AtomicForm(P, W, out)

    def _expand_multipole(self, m):
        x0 = np.asarray(m.point)
        alpha = m.deriv
        if self.divisor is None and self.multiplier is None:
            return [(x0, alpha, m.coef)]
        orders = _orders_below(alpha)
        fac = {o: 0.0 for o in orders}
        fac[(0,) * self.D] = 1.0
        if self.multiplier is not None:
            fac = dict(zip(orders, self.multiplier.taylor(x0, orders)))
        if self.divisor is not None:
            if abs(self.divisor(x0)) <= self.divisor_tol:
                raise DivisorNearZero(f"divisor vanishes at multipole point {tuple(x0)}")
            r = reciprocal_taylor(self.divisor, x0, orders)
            fac = {o: sum(fac[b] * r[tuple(x - y for x, y in zip(o, b))]
                          for b in orders if all(u <= v for u, v in zip(b, o)))
                   for o in orders}
        out = []
        for b in orders:
            g = tuple(x - y for x, y in zip(alpha, b))
            if fac[b] != 0:
                out.append((x0, g, m.coef * fac[b]))
        return out


class FunctionalSum:
    """Sum of functionals; behaves like a :class:`FunctionalSpec`."""

    def __init__(self, terms):
        flat = []
        for t in terms:
            flat.extend(t.terms)
        if not flat:
            raise SpecError("empty functional sum")
        self._terms = flat
        self.D = flat[0].D

    @property
    def terms(self):
        return list(self._terms)

    def __add__(self, other):
        return FunctionalSum(self._terms + other.terms)

    def with_factors(self, multiplier=None, divisor=None):
        return FunctionalSum([t.with_factors(multiplier, divisor) for t in self._terms])

    def atomic(self, n_hint=4):
        forms = [t.atomic(n_hint) for t in self._terms]
        return AtomicForm(np.vstack([f.points for f in forms]),
                          np.concatenate([f.weights for f in forms]),
                          [m for f in forms for m in f.multipoles])


# -- functional actions ---------------------------------------------------

def _jet_orders(alpha):
    """Pairs ``(beta, gamma)`` with ``beta + gamma == alpha``."""
    return [(b, tuple(x - y for x, y in zip(alpha, b))) for b in _orders_below(alpha)]


def moment(u, alpha, n_hint=None):
    """``<u, x^alpha>``."""
    alpha = tuple(int(a) for a in alpha)
    form = u.atomic(n_hint if n_hint is not None else sum(alpha))
    val = np.sum(form.weights * np.prod(form.points ** np.asarray(alpha), axis=1)) if len(form.points) else 0.0
    if form.multipoles:
        mono = Poly.monomial(alpha)
        for x0, g, c in form.multipoles:
            val = val + c * mono.taylor(x0, [g])[0]
    return val


def apply_to_poly(u, P, n_hint=None):
    """``<u, P>`` for a :class:`Poly`."""
    form = u.atomic(n_hint if n_hint is not None else max(P.degree, 0))
    val = np.sum(form.weights * P(form.points)) if (len(form.points) and not P.is_zero()) else 0.0
    for x0, g, c in form.multipoles:
        val = val + c * P.taylor(x0, [g])[0]
    return val


def gram_matrix(u, idx, n_hint=None):
    """Moment matrix ``<u, chi chi^T>`` on the truncation of ``idx``."""
    form = u.atomic(n_hint if n_hint is not None else idx.n_max)
    return _atomic_pair(form, idx, np.eye(idx.size), np.eye(idx.size))


def _atomic_pair(form, idx, A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    dtype = np.result_type(A, B, form.weights, float)
    out = np.zeros((A.shape[0], B.shape[0]), dtype=dtype)
    if len(form.points):
        V = eval_chi(idx, form.points)
        FA = V @ A.T
        FB = V @ B.T
        out = out + (FA * form.weights[:, None]).T @ FB
    for x0, alpha, c in form.multipoles:
        for b, g in _jet_orders(alpha):
            ja = A @ chi_jet(idx, x0, b)
            jb = B @ chi_jet(idx, x0, g)
            out = out + c * np.outer(ja, jb)
    return out


def pair(u, A, B, idx, n_hint=None):
    """``<u, (A chi)(B chi)^T>`` for coefficient matrices ``A``, ``B`` (rows = polynomials)."""
    form = u.atomic(n_hint if n_hint is not None else idx.n_max)
    return _atomic_pair(form, idx, np.atleast_2d(A), np.atleast_2d(B))


def cauchy_transform_1d(u, P, q, n_hint=None):
    """``int P(y) / (y - q) du(y)`` for a univariate functional."""
    if u.D != 1:
        raise SpecError("Cauchy transform is defined here for D == 1 only")
    kernel = Poly(1, {(1,): 1.0, (0,): -q})
    try:
        return apply_to_poly(u.with_factors(divisor=kernel), P, n_hint)
    except DivisorNearZero as exc:
        raise PoleOnSupport(f"q = {q} lies on the support: {exc}") from exc


def moments_up_to(u, idx, n_hint=None):
    """Vector of ``<u, x^alpha>`` for every multi-index of ``idx``."""
    form = u.atomic(n_hint if n_hint is not None else idx.n_max)
    return _atomic_pair(form, idx, np.eye(idx.size), np.eye(idx.size)[:1])[:, 0]


def is_node_based(u):
    return not u.atomic(1).multipoles


# -- bilinear generators --------------------------------------------------

def _time_factor(t, pts):
    if t is None or t.is_zero():
        return np.ones(len(pts))
    return np.exp(t(pts))


@dataclass
class NodePairing:
    """``<f, g> = sum w_ij f(x_i) g(y_j)`` (``w`` 2-D) or ``sum w_s f(x_s) g(y_s)`` (``w`` 1-D)."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.y = np.atleast_2d(np.asarray(self.y, dtype=float))
        self.w = np.asarray(self.w)
        if self.w.ndim == 1:
            if not (len(self.x) == len(self.y) == len(self.w)):
                raise SpecError("paired kernel needs equal numbers of x, y and weights")
        elif self.w.shape != (len(self.x), len(self.y)):
            raise SpecError("product kernel weight matrix has the wrong shape")

    @property
    def paired(self):
        return self.w.ndim == 1

    def pair_values(self, FX, FY, t1=None, t2=None):
        """``sum w e^{t1(x)} e^{-t2(y)} FX(x) FY(y)^T`` for sampled value arrays."""
        ex = _time_factor(t1, self.x)
        ey = 1.0 / _time_factor(t2, self.y)
        if self.paired:
            return (FX * (self.w * ex * ey)[:, None]).T @ FY
        W = self.w * ex[:, None] * ey[None, :]
        return FX.T @ W @ FY


class BilinearGenerator:
    """Base class; subclasses provide ``pairings()`` and optional static multipoles."""

    D: int

    def pairings(self, n_hint):
        raise NotImplementedError

    def multipoles(self, n_hint):
        return []

    def gram(self, idx, t1=None, t2=None, n_hint=None):
        return self.pair(np.eye(idx.size), np.eye(idx.size), idx, t1, t2, n_hint)

    def pair(self, A, B, idx, t1=None, t2=None, n_hint=None):
        """``<(A chi)(x), (B chi)(y)^T>`` under the time-evolved form."""
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        n_hint = idx.n_max if n_hint is None else n_hint
        fx = lambda pts: eval_chi(idx, pts) @ A.T
        fy = lambda pts: eval_chi(idx, pts) @ B.T
        out = self.pair_functions(fx, fy, t1, t2, n_hint)
        mps = self.multipoles(n_hint)
        if mps:
            if _active(t1) or _active(t2):
                raise SpecError("time flows are only supported for node-based generators")
            out = out + _atomic_pair(AtomicForm(np.zeros((0, self.D)), np.zeros(0), mps), idx, A, B)
        return out

    def pair_functions(self, fx, fy, t1=None, t2=None, n_hint=4):
        """``<f(x), g(y)^T>`` for vector-valued callables on point arrays."""
        total = None
        for p in self.pairings(n_hint):
            v = p.pair_values(fx(p.x), fy(p.y), t1, t2)
            total = v if total is None else total + v
        return total

    def gram_entry(self, alpha, beta, t1=None, t2=None, n_hint=None):
        deg = max(sum(alpha), sum(beta))
        idx = GradedIndexer(self.D, deg)
        A = np.zeros((1, idx.size))
        B = np.zeros((1, idx.size))
        A[0, idx.index_of(alpha)] = 1.0
        B[0, idx.index_of(beta)] = 1.0
        return self.pair(A, B, idx, t1, t2, n_hint if n_hint is not None else deg)[0, 0]

    def support_radius(self, n_hint=4):
        r = 0.0
        for p in self.pairings(n_hint):
            r = max(r, float(np.max(np.abs(p.x), initial=0.0)), float(np.max(np.abs(p.y), initial=0.0)))
        for x0, _, _ in self.multipoles(n_hint):
            r = max(r, float(np.max(np.abs(x0))))
        return r

    def __add__(self, other):
        return CompositeGenerator([self, other])


def _active(t):
    return t is not None and not t.is_zero()


class Diagonal(BilinearGenerator):
    """``<f, g> = <u, f g>`` for a functional ``u``: multi-Hankel Gram matrices."""

    def __init__(self, functional):
        self.functional = functional
        self.D = functional.D

    def pairings(self, n_hint):
        form = self.functional.atomic(n_hint)
        if not len(form.points):
            return []
        return [NodePairing(form.points, form.points, form.weights)]

    def multipoles(self, n_hint):
        return self.functional.atomic(n_hint).multipoles


class Kernel(BilinearGenerator):
    """Explicit node kernel; need not be symmetric."""

    def __init__(self, x, y, w):
        self.pairing = NodePairing(x, y, w)
        self.D = self.pairing.x.shape[1]
        if self.pairing.y.shape[1] != self.D:
            raise SpecError("kernel x and y nodes differ in dimension")

    @classmethod
    def from_pairs(cls, pairs):
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        ws = [p[2] for p in pairs]
        return cls(np.atleast_2d(np.asarray(xs, dtype=float)).reshape(len(xs), -1),
                   np.atleast_2d(np.asarray(ys, dtype=float)).reshape(len(ys), -1), np.asarray(ws))

    @classmethod
    def product(cls, box_x, box_y, kernel: Callable, nodes, weight="lebesgue"):
        """Tensor Gauss rule on ``box_x x box_y`` with weight ``kernel(x, y)``."""
        px, wx = _tensor_rule(box_x, weight, nodes)
        py, wy = _tensor_rule(box_y, weight, nodes)
        K = np.asarray(kernel(px[:, None, :], py[None, :, :]))
        return cls(px, py, wx[:, None] * K * wy[None, :])

    def pairings(self, n_hint):
        return [self.pairing]


class CompositeGenerator(BilinearGenerator):
    def __init__(self, parts):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, CompositeGenerator) else [p])
        self.parts = flat
        self.D = flat[0].D

    def pairings(self, n_hint):
        return [q for p in self.parts for q in p.pairings(n_hint)]

    def multipoles(self, n_hint):
        return [m for p in self.parts for m in p.multipoles(n_hint)]


class WeightedGenerator(BilinearGenerator):
    """``<f, g>' = <x_weight(x) f(x), y_weight(y) g(y)>`` for a node-based base generator."""

    def __init__(self, base, x_weight=None, y_weight=None):
        self.base = base
        self.x_weight = x_weight
        self.y_weight = y_weight
        self.D = base.D

    def pairings(self, n_hint):
        out = []
        for p in self.base.pairings(n_hint):
            wx = self.x_weight(p.x) if self.x_weight is not None else np.ones(len(p.x))
            wy = self.y_weight(p.y) if self.y_weight is not None else np.ones(len(p.y))
            if p.paired:
                out.append(NodePairing(p.x, p.y, p.w * wx * wy))
            else:
                out.append(NodePairing(p.x, p.y, p.w * wx[:, None] * wy[None, :]))
        return out

    def multipoles(self, n_hint):
        if self.base.multipoles(n_hint):
            raise SpecError("weighted generators must be node-based")
        return []


def rational_weight(num=None, den=None, tol=DIVISOR_TOL):
    """Callable ``x -> num(x) / den(x)`` that refuses nodes near ``Z(den)``."""

    def f(pts):
        val = num(pts) if num is not None else np.ones(len(pts))
        if den is not None:
            d = den(pts)
            if np.any(np.abs(d) <= tol):
                raise DivisorNearZero("divisor vanishes at a generator node")
            val = val / d
        return val

    return f
