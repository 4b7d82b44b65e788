"""Orthogonal polynomial families built from a factorized Gram matrix."""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .errors import SingularBlock, SpecError
from .factorization import SYMMETRY_TOL, BlockMatrix, block_cholesky, block_lu
from .functional import BilinearGenerator, Diagonal
from .mindex import GradedIndexer, eval_chi, shift_array
from .polynomial import Poly


def _solve_block(H, rhs):
    try:
        return linalg.solve(H, rhs)
    except linalg.LinAlgError as exc:
        raise SingularBlock(str(exc)) from exc


class OpFamily:
    """Monic biorthogonal families ``P1 = S1 chi`` and ``P2 = S2 chi`` with quasi-tau blocks ``H``."""

    def __init__(self, fact, source=None, t1=None, t2=None, n_hint=None):
        self.fact = fact
        self.idx = fact.idx
        self.source = source
        self.t1 = t1
        self.t2 = t2
        self.n_hint = n_hint if n_hint is not None else self.idx.n_max

    def __repr__(self):
        return f"OpFamily(D={self.idx.D}, n_max={self.idx.n_max}, mode={self.fact.mode})"

    # construction
    @classmethod
    def from_gram(cls, G, idx, source=None, mode="auto", **kw):
        G = np.asarray(G)
        if mode == "auto":
            scale = max(float(np.max(np.abs(G))), 1.0)
            mode = "cholesky" if np.max(np.abs(G - G.T), initial=0.0) <= SYMMETRY_TOL * scale else "lu"
        fact = block_cholesky(G, idx) if mode == "cholesky" else block_lu(G, idx)
        return cls(fact, source, **kw)

    @classmethod
    def from_functional(cls, u, n_max, mode="auto"):
        return cls.from_generator(Diagonal(u), n_max, mode=mode)

    @classmethod
    def from_generator(cls, g, n_max, t1=None, t2=None, mode="auto", n_hint=None):
        if not isinstance(g, BilinearGenerator):
            raise SpecError("from_generator needs a BilinearGenerator")
        idx = GradedIndexer(g.D, n_max)
        n_hint = n_max if n_hint is None else n_hint
        G = g.gram(idx, t1, t2, n_hint)
        return cls.from_gram(G, idx, g, mode, t1=t1, t2=t2, n_hint=n_hint)

    # data access
    @property
    def s1(self):
        return self.fact.s1

    @property
    def s2(self):
        return self.fact.s2

    @property
    def h_blocks(self):
        return self.fact.h_blocks

    def h_matrix(self):
        return self.fact.h_matrix()

    def S(self, side=1):
        return self.s1 if side == 1 else self.s2

    def coeffs(self, side, k):
        """Coefficient rows of ``P_{side,[k]}`` in the monomial basis."""
        return self.S(side)[self.idx.block(k)]

    def beta(self, k, side=1):
        return self.fact.beta(k, side)

    def polynomial(self, side, alpha):
        i = self.idx.index_of(alpha)
        return Poly.from_coeffs(self.idx, self.S(side)[i])

    # evaluation
    def eval_all(self, side, x):
        """All ``P_side`` entries at ``x`` (batched along the first axis for 2-D input)."""
        V = eval_chi(self.idx, x)
        return V @ self.S(side).T

    def eval_block(self, side, k, x):
        V = eval_chi(self.idx, x)
        return V @ self.coeffs(side, k).T

    def cd_kernel(self, n, x, y):
        """``K_n(x, y) = sum_{m<=n} P_{2,[m]}(x)^T H_m^{-1} P_{1,[m]}(y)``."""
        if n > self.idx.n_max:
            raise SpecError("cutoff exceeds n_max")
        px = self.eval_all(2, x)
        py = self.eval_all(1, y)
        total = 0.0
        for m in range(n + 1):
            b = self.idx.block(m)
            total = total + px[b] @ _solve_block(self.h_blocks[m], py[b])
        return total

    def cd_formula_terms(self, n, x, y, direction):
        """Both sides of the Christoffel-Darboux identity along ``direction``."""
        if n + 1 > self.idx.n_max:
            raise SpecError("the CD formula needs level n+1 <= n_max")
        x = np.asarray(x)
        y = np.asarray(y)
        d = np.asarray(direction)
        lam = sum(d[a] * shift_array(self.idx, a) for a in range(self.idx.D))
        A = lam[self.idx.block(n), self.idx.block(n + 1)]
        Hn = self.h_blocks[n]
        bn, bn1 = self.idx.block(n), self.idx.block(n + 1)
        px2 = self.eval_all(2, x)
        py1 = self.eval_all(1, y)
        if self.fact.mode != "cholesky":
            raise SpecError("CD formula is implemented for symmetric (Cholesky) families")
        lhs = np.dot(d, x - y) * self.cd_kernel(n, x, y)
        rhs = (px2[bn1] @ A.T @ _solve_block(Hn, py1[bn])
               - px2[bn] @ _solve_block(Hn, A @ py1[bn1]))
        return lhs, rhs

    def cd_formula_residual(self, n, x, y, direction=None):
        if direction is None:
            direction = np.ones(self.idx.D)
        lhs, rhs = self.cd_formula_terms(n, x, y, direction)
        return abs(lhs - rhs)

    # matrices
    def jacobi_matrix(self, a, side=1):
        """``J_a = S Lambda_a S^{-1}``; exact on block rows ``<= n_max - 1``."""
        S = self.S(side)
        L = shift_array(self.idx, a)
        Sinv = linalg.solve_triangular(S, np.eye(self.idx.size), lower=True, unit_diagonal=True)
        return BlockMatrix(S @ L @ Sinv, self.idx)

    def biorthogonality_matrix(self):
        """``<P_1, P_2^T>`` re-paired through the source generator."""
        if self.source is None:
            raise SpecError("family has no source generator to pair against")
        return self.source.pair(self.s1, self.s2, self.idx, self.t1, self.t2, self.n_hint)

    def biorthogonality_error(self):
        M = self.biorthogonality_matrix()
        H = self.h_matrix()
        return float(np.max(np.abs(M - H)))

    def project(self, coeffs, n):
        """Coefficients of ``S_n(P) = sum_{m<=n} c_m P_{1,[m]}`` for ``P`` given by monomial ``coeffs``."""
        if self.source is None:
            raise SpecError("projection needs the source generator")
        c = np.atleast_2d(coeffs)
        row = self.source.pair(c, self.s2, self.idx, self.t1, self.t2, self.n_hint)[0]
        out = np.zeros(self.idx.size, dtype=np.result_type(row, self.s1))
        for m in range(n + 1):
            b = self.idx.block(m)
            cm = linalg.solve(self.h_blocks[m].T, row[b])
            out = out + cm @ self.s1[b]
        return out

    # export
    def level_json(self, k, side=1):
        entries = []
        rows = self.coeffs(side, k)
        for alpha, row in zip(self.idx.levels[k], rows):
            terms = []
            for j, c in enumerate(row):
                if c != 0:
                    c = complex(c)
                    terms.append({"alpha": list(self.idx.index_at(j)), "c": [c.real, c.imag]})
            entries.append({"alpha": list(alpha), "coeffs": terms})
        return {"level": k, "entries": entries}

    def to_json(self, side=1):
        return [self.level_json(k, side) for k in range(self.idx.n_max + 1)]
