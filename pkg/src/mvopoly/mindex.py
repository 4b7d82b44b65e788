"""Multi-index bookkeeping, monomial vectors and shift matrices.

Multi-indices are ordered by total degree and, inside a degree, in
descending lexicographic order so that ``e_1`` comes first:
``(2,0), (1,1), (0,2)`` for ``D = 2``.  Axes are 0-based throughout.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np

from .errors import DegreeOverflow, SpecError


@lru_cache(maxsize=None)
def _level(D, k):
    if D == 1:
        return ((k,),)
    out = []
    for first in range(k, -1, -1):
        for rest in _level(D - 1, k - first):
            out.append((first,) + rest)
    return tuple(out)


def enumerate_level(D, k):
    """All multi-indices of total degree ``k`` in ``D`` variables, in module order."""
    if D < 1 or k < 0:
        raise SpecError("need D >= 1 and k >= 0")
    return list(_level(int(D), int(k)))


def level_size(D, k):
    """``|[k]|``, the number of monomials of exact degree ``k``."""
    return comb(D + k - 1, k) if k >= 0 else 0


def cumulative_size(D, k):
    """``N_k``, the number of monomials of degree at most ``k`` (0 for ``k < 0``)."""
    return comb(D + k, D) if k >= 0 else 0


def unit(D, a):
    e = [0] * D
    e[a] = 1
    return tuple(e)


class GradedIndexer:
    """Bijection between multi-indices of degree ``<= n_max`` and positions."""

    def __init__(self, D, n_max):
        if D < 1:
            raise SpecError("dimension must be >= 1")
        if n_max < 0:
            raise SpecError("n_max must be >= 0")
        self.D = int(D)
        self.n_max = int(n_max)
        self.levels = [enumerate_level(self.D, k) for k in range(self.n_max + 1)]
        self.offsets = np.zeros(self.n_max + 2, dtype=int)
        for k, lev in enumerate(self.levels):
            self.offsets[k + 1] = self.offsets[k] + len(lev)
        self.multi_indices = [a for lev in self.levels for a in lev]
        self._pos = {a: i for i, a in enumerate(self.multi_indices)}
        self.exponents = np.array(self.multi_indices, dtype=int).reshape(-1, self.D)
        self.degrees = self.exponents.sum(axis=1)

    def __repr__(self):
        return f"GradedIndexer(D={self.D}, n_max={self.n_max})"

    def __eq__(self, other):
        return isinstance(other, GradedIndexer) and (self.D, self.n_max) == (other.D, other.n_max)

    def __hash__(self):
        return hash((self.D, self.n_max))

    @property
    def size(self):
        return int(self.offsets[-1])

    def index_of(self, alpha):
        try:
            return self._pos[tuple(int(v) for v in alpha)]
        except KeyError:
            raise DegreeOverflow(f"multi-index {tuple(alpha)} outside degree {self.n_max}") from None

    def index_at(self, i):
        return self.multi_indices[i]

    def block_size(self, k):
        return len(self.levels[k])

    def count(self, k):
        """``N_k``; zero for negative ``k``."""
        if k < 0:
            return 0
        return int(self.offsets[min(k, self.n_max) + 1])

    def block(self, k):
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    def span(self, k0, k1):
        """Positions of levels ``k0 .. k1`` inclusive."""
        return slice(int(self.offsets[max(k0, 0)]), int(self.offsets[k1 + 1]))

    def level_of(self, i):
        return int(self.degrees[i])

    def sub(self, n_max):
        return GradedIndexer(self.D, n_max)


def eval_chi(idx, x):
    """Monomial vector ``chi(x)``; batched over leading axis when ``x`` is 2-D."""
    x = np.asarray(x)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != idx.D:
        raise SpecError(f"point dimension {X.shape[1]} != {idx.D}")
    out = np.ones((X.shape[0], idx.size), dtype=np.result_type(X.dtype, float))
    for a in range(idx.D):
        powers = X[:, a:a + 1] ** np.arange(idx.n_max + 1)
        out = out * powers[:, idx.exponents[:, a]]
    return out[0] if single else out


def chi_jet(idx, x, beta):
    """Scaled derivative ``d^beta chi(x) / beta!`` evaluated at a single point."""
    x = np.asarray(x)
    beta = np.asarray(beta, dtype=int)
    out = np.zeros(idx.size, dtype=np.result_type(x.dtype, float))
    for i, a in enumerate(idx.exponents):
        if np.all(a >= beta):
            c = 1
            for ai, bi in zip(a, beta):
                c *= comb(int(ai), int(bi))
            out[i] = c * np.prod(x ** (a - beta))
    return out


def shift_array(idx, a):
    """Dense truncated shift matrix for axis ``a`` (0-based)."""
    if not 0 <= a < idx.D:
        raise SpecError(f"axis {a} out of range for D={idx.D}")
    N = idx.size
    M = np.zeros((N, N))
    e = unit(idx.D, a)
    stop = idx.count(idx.n_max - 1)
    for i in range(stop):
        M[i, idx.index_of(tuple(x + y for x, y in zip(idx.multi_indices[i], e)))] = 1.0
    return M


def poly_of_shifts_array(Q, idx):
    """Dense ``Q(Lambda_1, ..., Lambda_D)`` on the truncation of ``idx``."""
    if Q.D != idx.D:
        raise SpecError("polynomial and indexer dimensions differ")
    N = idx.size
    M = np.zeros((N, N), dtype=complex if Q.is_complex() else float)
    for alpha, c in Q.terms.items():
        s = sum(alpha)
        for i in range(idx.count(idx.n_max - s)):
            tgt = tuple(x + y for x, y in zip(idx.multi_indices[i], alpha))
            M[i, idx.index_of(tgt)] += c
    return M


def shift_matrix(idx, a):
    """Shift matrix ``Lambda_a`` as a :class:`~mvopoly.factorization.BlockMatrix`."""
    from .factorization import BlockMatrix

    return BlockMatrix(shift_array(idx, a), idx)


def poly_of_shifts(Q, idx):
    from .factorization import BlockMatrix

    return BlockMatrix(poly_of_shifts_array(Q, idx), idx)
