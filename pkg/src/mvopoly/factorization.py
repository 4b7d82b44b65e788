"""Block-partitioned matrices, block Cholesky / LU, last quasi-determinants."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import SingularBlock, SingularMinor, SpecError

SINGULAR_RTOL = 1e-10
FACTORIZATION_TOL = 1e-10
SYMMETRY_TOL = 1e-12


class BlockMatrix:
    """Dense square matrix whose rows and columns are split by degree level."""

    def __init__(self, data, idx):
        data = np.asarray(data)
        if data.shape != (idx.size, idx.size):
            raise SpecError(f"matrix shape {data.shape} does not match indexer size {idx.size}")
        self.data = data
        self.idx = idx

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"BlockMatrix({self.idx!r}, dtype={self.data.dtype})"

    def block(self, k, l):
        return self.data[self.idx.block(k), self.idx.block(l)]

    def truncate(self, k):
        """Leading ``k`` block levels (levels ``0 .. k-1``) as an ndarray."""
        n = self.idx.count(k - 1)
        return self.data[:n, :n]

    def __matmul__(self, other):
        other = other.data if isinstance(other, BlockMatrix) else np.asarray(other)
        out = self.data @ other
        return BlockMatrix(out, self.idx) if out.shape == self.data.shape else out

    @property
    def T(self):
        return BlockMatrix(self.data.T, self.idx)

    def max_abs(self):
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0


def _raw(G):
    return G.data if isinstance(G, BlockMatrix) else np.asarray(G)


@dataclass
class Factorization:
    """``G = S1^{-1} H S2^{-T}`` with unit lower block-triangular ``S1``, ``S2``."""

    s1: np.ndarray
    s2: np.ndarray
    h_blocks: list
    idx: object
    mode: str = "lu"
    scale: float = 1.0
    l1: np.ndarray = field(default=None, repr=False)
    u2: np.ndarray = field(default=None, repr=False)

    @property
    def s_lower(self):
        return self.s1

    @property
    def s_upper_factor(self):
        return self.s2

    def h_matrix(self):
        return linalg.block_diag(*self.h_blocks)

    def reconstruct(self):
        return self.l1 @ self.h_matrix() @ self.u2

    def reconstruction_error(self, G):
        G = _raw(G)
        return float(np.max(np.abs(self.reconstruct() - G))) / max(self.scale, 1e-300)

    def beta(self, k, side=1):
        """First block subdiagonal ``S_{[k],[k-1]}``."""
        S = self.s1 if side == 1 else self.s2
        return S[self.idx.block(k), self.idx.block(k - 1)]


def _check_pivot(Hk, k, threshold):
    smin = np.linalg.svd(Hk, compute_uv=False).min() if Hk.size else np.inf
    if not np.isfinite(smin) or smin < threshold:
        raise SingularMinor(k, float(smin), threshold)


def _eliminate(G, idx, symmetric):
    A = np.array(G, dtype=np.result_type(G.dtype, float), copy=True)
    N = idx.size
    scale = float(np.max(np.abs(A))) if A.size else 1.0
    threshold = SINGULAR_RTOL * scale
    L = np.eye(N, dtype=A.dtype)
    U = np.eye(N, dtype=A.dtype)
    H = []
    for k in range(idx.n_max + 1):
        b = idx.block(k)
        rest = slice(b.stop, N)
        Hk = A[b, b].copy()
        if symmetric:
            Hk = 0.5 * (Hk + Hk.T)
        _check_pivot(Hk, k, threshold)
        H.append(Hk)
        if b.stop == N:
            break
        lu_piv = linalg.lu_factor(Hk)
        # L_col = A[rest,b] Hk^{-1};  U_row = Hk^{-1} A[b,rest]
        Lcol = linalg.lu_solve(lu_piv, A[rest, b].T, trans=1).T
        if symmetric:
            Urow = Lcol.T.copy()
        else:
            Urow = linalg.lu_solve(lu_piv, A[b, rest])
        L[rest, b] = Lcol
        U[b, rest] = Urow
        A[rest, rest] -= Lcol @ A[b, rest]
        if symmetric:
            A[rest, rest] = 0.5 * (A[rest, rest] + A[rest, rest].T)
    return L, H, U, scale


def _unit_lower_inverse(L):
    N = L.shape[0]
    return linalg.solve_triangular(L, np.eye(N, dtype=L.dtype), lower=True, unit_diagonal=True)


def block_lu(G, idx=None):
    """Block Gauss factorization ``G = S1^{-1} H S2^{-T}`` without pivoting across levels."""
    if idx is None:
        idx = G.idx
    A = _raw(G)
    L, H, U, scale = _eliminate(A, idx, symmetric=False)
    s1 = _unit_lower_inverse(L)
    s2 = _unit_lower_inverse(U.T)
    return Factorization(s1, s2, H, idx, "lu", scale, L, U)


def block_cholesky(G, idx=None):
    """Symmetric block factorization ``G = S^{-1} H S^{-T}`` (``S1 == S2``)."""
    if idx is None:
        idx = G.idx
    A = _raw(G)
    scale = float(np.max(np.abs(A))) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL * max(scale, 1.0):
        raise SpecError("block_cholesky needs a symmetric matrix; use block_lu")
    L, H, U, scale = _eliminate(A, idx, symmetric=True)
    s = _unit_lower_inverse(L)
    return Factorization(s, s, H, idx, "cholesky", scale, L, L.T)


def schur_complement(A, B, C, d):
    """``d - C A^{-1} B`` through an LU solve."""
    A = np.atleast_2d(np.asarray(A))
    B = np.asarray(B)
    C = np.asarray(C)
    d = np.asarray(d)
    if A.shape[0] == 0:
        return d.copy()
    try:
        lu_piv = linalg.lu_factor(A, check_finite=True)
    except (ValueError, linalg.LinAlgError) as exc:
        raise SingularBlock(str(exc)) from exc
    if np.any(np.abs(np.diag(lu_piv[0])) == 0):
        raise SingularBlock("leading block is exactly singular")
    return d - C @ linalg.lu_solve(lu_piv, B)


def quasi_det_last(M, tail):
    """Last quasi-determinant of ``M`` with respect to its trailing ``tail`` rows/columns."""
    M = np.asarray(M)
    n = M.shape[0] - tail
    if n < 0:
        raise SpecError("tail larger than matrix")
    return schur_complement(M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:])


def quasi_tau_from_minors(G, idx, k):
    """``Theta_*(G^{[k+1]})`` computed independently of the elimination."""
    A = _raw(G)
    n = idx.count(k)
    return quasi_det_last(A[:n, :n], idx.block_size(k))


# -- dump formats ---------------------------------------------------------

CSV_HEADER = ["block_row", "block_col", "i", "j", "re", "im"]


def dump_csv(M, idx, stream=None):
    """Write a matrix in the block CSV format; returns the text when no stream is given."""
    M = _raw(M)
    own = stream is None
    stream = io.StringIO() if own else stream
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for k in range(idx.n_max + 1):
        for l in range(idx.n_max + 1):
            blk = M[idx.block(k), idx.block(l)]
            for i in range(blk.shape[0]):
                for j in range(blk.shape[1]):
                    v = complex(blk[i, j])
                    if v != 0:
                        w.writerow([k, l, i, j, repr(v.real), repr(v.imag)])
    return stream.getvalue() if own else None


def load_csv(text, idx):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise SpecError("matrix CSV must start with header " + ",".join(CSV_HEADER))
    M = np.zeros((idx.size, idx.size), dtype=complex)
    for r in rows[1:]:
        if not r:
            continue
        k, l, i, j = (int(v) for v in r[:4])
        M[idx.offsets[k] + i, idx.offsets[l] + j] = complex(float(r[4]), float(r[5]))
    return M if np.any(M.imag) else M.real


def block_json(M, idx):
    """Nested-list JSON mirror of the block structure."""
    M = _raw(M)
    out = []
    for k in range(idx.n_max + 1):
        row = []
        for l in range(idx.n_max + 1):
            blk = np.asarray(M[idx.block(k), idx.block(l)], dtype=complex)
            row.append({"re": blk.real.tolist(), "im": blk.imag.tolist()})
        out.append(row)
    return out
