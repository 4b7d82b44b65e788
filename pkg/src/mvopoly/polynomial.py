"""Sparse multivariate polynomials with complex coefficients.

A polynomial is a mapping from exponent tuples to coefficients.  The class is
deliberately small: evaluation, ring operations, exact differentiation,
Taylor coefficients at a point and conversion to and from coefficient vectors
laid out in a :class:`~mvopoly.mindex.GradedIndexer` basis.
"""

from __future__ import annotations

from itertools import product as _cartesian
from math import comb, factorial

import numpy as np

from .errors import DegreeOverflow, SpecError


def _as_exponent(alpha, D=None):
    a = tuple(int(v) for v in alpha)
    if any(v < 0 for v in a):
        raise SpecError(f"negative exponent in {alpha!r}")
    if D is not None and len(a) != D:
        raise SpecError(f"exponent {alpha!r} does not have length {D}")
    return a


class Poly:
    """Polynomial in ``D`` variables stored as ``{exponent tuple: coefficient}``."""

    __slots__ = ("D", "terms")

    def __init__(self, D, terms=None):
        self.D = int(D)
        if self.D < 1:
            raise SpecError("polynomial dimension must be at least 1")
        clean = {}
        for alpha, c in (terms or {}).items():
            a = _as_exponent(alpha, self.D)
            c = complex(c) if np.iscomplexobj(c) else float(c)
            if c != 0:
                clean[a] = clean.get(a, 0) + c
        self.terms = {a: c for a, c in clean.items() if c != 0}

    # construction helpers
    @classmethod
    def constant(cls, D, c=1.0):
        return cls(D, {(0,) * D: c})

    @classmethod
    def variable(cls, D, a):
        e = [0] * D
        e[a] = 1
        return cls(D, {tuple(e): 1.0})

    @classmethod
    def monomial(cls, alpha, c=1.0):
        alpha = _as_exponent(alpha)
        return cls(len(alpha), {alpha: c})

    @classmethod
    def linear(cls, coeffs, const=0.0):
        """``const + sum_a coeffs[a] x_a``."""
        D = len(coeffs)
        p = cls.constant(D, const)
        for a, c in enumerate(coeffs):
            p = p + c * cls.variable(D, a)
        return p

    @classmethod
    def from_roots_1d(cls, roots, lead=1.0):
        p = cls.constant(1, lead)
        for r in roots:
            p = p * cls(1, {(1,): 1.0, (0,): -r})
        return p

    @classmethod
    def from_coeffs(cls, idx, vec):
        vec = np.asarray(vec)
        return cls(idx.D, {idx.index_at(i): c for i, c in enumerate(vec) if c != 0})

    # basic properties
    @property
    def degree(self):
        return max((sum(a) for a in self.terms), default=-1)

    def is_zero(self):
        return not self.terms

    def coefficient(self, alpha):
        return self.terms.get(tuple(alpha), 0.0)

    def is_complex(self):
        return any(isinstance(c, complex) for c in self.terms.values())

    def leading_form(self):
        """Homogeneous top-degree part."""
        d = self.degree
        return Poly(self.D, {a: c for a, c in self.terms.items() if sum(a) == d})

    def coeffs(self, idx):
        """Coefficient vector in the graded basis of ``idx``."""
        if self.degree > idx.n_max:
            raise DegreeOverflow(f"degree {self.degree} exceeds indexer n_max={idx.n_max}")
        out = np.zeros(idx.size, dtype=complex if self.is_complex() else float)
        for a, c in self.terms.items():
            out[idx.index_of(a)] = c
        return out

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.D != self.D:
                raise SpecError("dimension mismatch between polynomials")
            return other
        return Poly.constant(self.D, other)

    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        for a, c in other.terms.items():
            t[a] = t.get(a, 0) + c
        return Poly(self.D, t)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.D, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.D, {a: c * other for a, c in self.terms.items()})
        other = self._coerce(other)
        t = {}
        for a, c in self.terms.items():
            for b, d in other.terms.items():
                e = tuple(x + y for x, y in zip(a, b))
                t[e] = t.get(e, 0) + c * d
        return Poly(self.D, t)

    __rmul__ = __mul__

    def __pow__(self, n):
        out = Poly.constant(self.D, 1.0)
        for _ in range(int(n)):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.D == other.D and self.terms == other.terms

    def __repr__(self):
        body = " + ".join(f"{c}*x^{a}" for a, c in sorted(self.terms.items()))
        return f"Poly(D={self.D}, {body or '0'})"

    # calculus
    def derivative(self, alpha):
        """Exact partial derivative ``d^alpha``."""
        alpha = _as_exponent(alpha, self.D)
        t = {}
        for a, c in self.terms.items():
            if all(x >= y for x, y in zip(a, alpha)):
                f = 1
                for x, y in zip(a, alpha):
                    f *= factorial(x) // factorial(x - y)
                e = tuple(x - y for x, y in zip(a, alpha))
                t[e] = t.get(e, 0) + c * f
        return Poly(self.D, t)

    def taylor(self, point, order_set):
        """Scaled derivatives ``d^beta P(point) / beta!`` for ``beta`` in ``order_set``."""
        point = np.asarray(point)
        out = []
        for beta in order_set:
            s = 0.0
            for a, c in self.terms.items():
                if all(x >= y for x, y in zip(a, beta)):
                    m = 1
                    for x, y in zip(a, beta):
                        m *= comb(x, y)
                    s = s + c * m * np.prod(point ** np.subtract(a, beta))
            out.append(s)
        return np.asarray(out)

    # evaluation
    def __call__(self, x):
        x = np.asarray(x)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if X.shape[1] != self.D:
            raise SpecError(f"point dimension {X.shape[1]} != {self.D}")
        dtype = np.result_type(X.dtype, complex if self.is_complex() else float)
        val = np.zeros(X.shape[0], dtype=dtype)
        for a, c in self.terms.items():
            val = val + c * np.prod(X ** np.asarray(a), axis=1)
        return val[0] if single else val

    # univariate helpers
    def roots_1d(self):
        if self.D != 1:
            raise SpecError("roots_1d needs a univariate polynomial")
        d = self.degree
        if d < 1:
            return np.zeros(0)
        c = [self.coefficient((k,)) for k in range(d, -1, -1)]
        return np.roots(c)

    # serialisation
    def to_json(self):
        terms = []
        for a, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), [-v for v in kv[0]])):
            c = complex(c)
            terms.append({"alpha": list(a), "c": [c.real, c.imag]})
        return {"terms": terms}

    @classmethod
    def from_json(cls, obj, D=None):
        if not isinstance(obj, dict) or "terms" not in obj:
            raise SpecError("polynomial must be an object with a 'terms' list")
        terms = {}
        dim = D
        for t in obj["terms"]:
            try:
                alpha = _as_exponent(t["alpha"])
                c = t["c"]
            except (KeyError, TypeError) as exc:
                raise SpecError(f"bad polynomial term {t!r}") from exc
            if dim is None:
                dim = len(alpha)
            if len(alpha) != dim:
                raise SpecError("inconsistent exponent lengths in polynomial")
            if isinstance(c, (list, tuple)):
                c = complex(c[0], c[1] if len(c) > 1 else 0.0)
                if c.imag == 0:
                    c = c.real
            terms[alpha] = terms.get(alpha, 0) + c
        if dim is None:
            raise SpecError("cannot infer dimension of an empty polynomial")
        return cls(dim, terms)


def multiplication_matrix(Q, idx_in, idx_out):
    """Matrix ``M`` with ``coeffs(Q*P) = M @ coeffs(P)`` for ``deg P <= idx_in.n_max``."""
    if Q.degree + idx_in.n_max > idx_out.n_max:
        raise DegreeOverflow("product degree exceeds output indexer")
    M = np.zeros((idx_out.size, idx_in.size), dtype=complex if Q.is_complex() else float)
    for j, a in enumerate(idx_in.multi_indices):
        for b, c in Q.terms.items():
            M[idx_out.index_of(tuple(x + y for x, y in zip(a, b))), j] += c
    return M


def reciprocal_taylor(Q, point, orders):
    """Taylor coefficients of ``1/Q`` at ``point`` for every exponent in ``orders``.

    ``orders`` must be closed under taking smaller exponents componentwise;
    the recursion ``sum_{b+g=d} q_b r_g = [d == 0]`` is solved degree by degree.
    """
    orders = sorted({tuple(o) for o in orders}, key=lambda o: (sum(o), o))
    D = Q.D
    span = [range(max(o[a] for o in orders) + 1) for a in range(D)] if orders else []
    box = list(_cartesian(*span))
    q = dict(zip(box, Q.taylor(point, box)))
    q0 = q[(0,) * D]
    if abs(q0) == 0:
        raise ZeroDivisionError("divisor vanishes at the expansion point")
    r = {}
    for d in sorted(box, key=lambda o: (sum(o), o)):
        s = 1.0 if sum(d) == 0 else 0.0
        for b in box:
            if b == (0,) * D or any(x > y for x, y in zip(b, d)):
                continue
            s = s - q[b] * r[tuple(y - x for x, y in zip(b, d))]
        r[d] = s / q0
    return {o: r[o] for o in orders}


def exp_poly_series_1d(p, length):
    """Power-series coefficients of ``exp(p(x))`` up to ``x^(length-1)`` (``D == 1``).

    Uses ``f' = p' f``.  ``p`` must have zero constant term or the constant is
    folded in as a scalar factor.
    """
    if p.D != 1:
        raise SpecError("exp_poly_series_1d needs a univariate polynomial")
    d = max(p.degree, 0)
    pc = np.array([p.coefficient((k,)) for k in range(d + 1)], dtype=complex)
    f = np.zeros(length, dtype=complex)
    f[0] = np.exp(pc[0])
    for n in range(1, length):
        s = 0.0
        for k in range(1, min(n, d) + 1):
            s += k * pc[k] * f[n - k]
        f[n] = s / n
    return f
