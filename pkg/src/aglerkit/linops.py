"""Shift operators on homogeneous components, their compressions, Hankel blocks and
the norm constants derived from them.

Matrices act on coefficient vectors in the graded-lex basis of ``polycore``.
When the input polynomial is exact, Hankel blocks and Gram matrices come back
as numpy object arrays of exact scalars; otherwise as complex128.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .exact import (GaussianRational, column_basis, exact_det, exact_lambda_max, exact_matrix,
                    guess_rational, rational_psd)
from .polycore import HomogeneousPolynomial, basis_order, dim, hat

__all__ = [
    "ShiftMatrix",
    "shift_matrix",
    "compress",
    "hankel_matrix",
    "shifted_hankel_matrix",
    "constant_A",
    "constant_B",
    "constant_C",
    "constant_sq_exact",
    "gamma_star_gamma",
    "gamma_star_gamma_by_shifts",
    "backward_shift_matrix",
    "range_basis",
    "RANK_TOL",
]

RANK_TOL = 1e-10


@dataclass(frozen=True)
class ShiftMatrix:
    """M_{z_i}: P_k -> P_{k+1}, stored by the row hit by each column."""

    d: int
    k: int
    i: int
    rows: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return dim(self.d, self.k + 1), dim(self.d, self.k)

    def toarray(self) -> np.ndarray:
        S = np.zeros(self.shape)
        S[list(self.rows), range(len(self.rows))] = 1.0
        return S

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros(self.shape[0], dtype=np.result_type(u, float))
        out[list(self.rows)] = u
        return out

    def adjoint_apply(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[list(self.rows)]


@lru_cache(maxsize=None)
def shift_matrix(d: int, k: int, i: int) -> ShiftMatrix:
    if not 1 <= i <= d:
        raise ValueError(f"variable index {i} out of range 1..{d}")
    if k < 0:
        raise ValueError("degree must be nonnegative")
    target = basis_order(d, k + 1)
    rows = []
    for alpha in basis_order(d, k):
        beta = list(alpha)
        beta[i - 1] += 1
        rows.append(target.index(tuple(beta)))
    return ShiftMatrix(d, k, i, tuple(rows))


def _degree_of_size(d: int, size: int) -> int:
    k = 0
    while dim(d, k) < size:
        k += 1
    if dim(d, k) != size:
        raise ValueError(f"size {size} is not dim P_{{{d},k}} for any k")
    return k


def compress(Lk: np.ndarray, i: int, d: int, k: int | None = None) -> np.ndarray:
    """S^T Lk S for S = M_{z_i}: P_{k-1} -> P_k; a principal submatrix of Lk."""
    Lk = np.asarray(Lk)
    if Lk.ndim != 2 or Lk.shape[0] != Lk.shape[1]:
        raise ValueError("expected a square matrix")
    if k is None:
        k = _degree_of_size(d, Lk.shape[0])
    elif Lk.shape[0] != dim(d, k):
        raise ValueError(f"matrix of size {Lk.shape[0]} does not act on P_{{{d},{k}}}")
    if k < 1:
        raise ValueError("compression needs k >= 1")
    idx = list(shift_matrix(d, k - 1, i).rows)
    return Lk[np.ix_(idx, idx)]


def backward_shift_matrix(d: int, k: int, i: int) -> np.ndarray:
    """Matrix of M_{z_i}^*: P_k -> P_{k-1}."""
    return shift_matrix(d, k - 1, i).toarray().T


def _zero(exact: bool):
    return Fraction(0) if exact else 0j


def hankel_matrix(q: HomogeneousPolynomial, k: int, exact: bool | None = None) -> np.ndarray:
    """Block of the Hankel operator of q from P_k to P_{n-k}: entry (beta, alpha) = c_{alpha+beta}."""
    n = q.n
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    exact = q.exact if exact is None else exact
    if exact and not q.exact:
        q = q.to_exact()
    src = basis_order(q.d, k).monomials
    dst = basis_order(q.d, n - k).monomials
    H = np.empty((len(dst), len(src)), dtype=object if exact else complex)
    zero = _zero(exact)
    for r, beta in enumerate(dst):
        for c, alpha in enumerate(src):
            g = tuple(a + b for a, b in zip(alpha, beta))
            v = q.coeffs.get(g, zero)
            H[r, c] = v if exact else complex(v)
    return H


def shifted_hankel_matrix(q: HomogeneousPolynomial, k: int, i: int,
                          exact: bool | None = None) -> np.ndarray:
    """Matrix of M_{z_i}^* Gamma_q on P_k: entries c_{alpha+beta+e_i}, beta in P_{n-k-1}."""
    if not 0 <= k <= q.n - 1:
        raise ValueError(f"k={k} outside 0..{q.n - 1}")
    H = hankel_matrix(q, k, exact)
    rows = list(shift_matrix(q.d, q.n - k - 1, i).rows)
    return H[rows, :]


def _sigma_max(M: np.ndarray) -> float:
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def constant_A(q: HomogeneousPolynomial, k: int) -> float:
    """Norm of the Hankel operator of q restricted to P_k."""
    return _sigma_max(hankel_matrix(q, k, exact=False))


def constant_B(q: HomogeneousPolynomial, k: int) -> float:
    """max_i norm of M_{z_i}^* Gamma_q on P_k."""
    if not 0 <= k <= q.n - 1:
        raise ValueError(f"k={k} outside 0..{q.n - 1}")
    return max(_sigma_max(shifted_hankel_matrix(q, k, i, exact=False)) for i in range(1, q.d + 1))


def range_basis(M: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column space; singular values below tol * s_max count as zero."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    r = int(np.sum(s > tol * s[0]))
    return U[:, :r]


def constant_C(q: HomogeneousPolynomial, k: int, tol: float = RANK_TOL) -> float:
    """max_i norm of M_{z_i}^* restricted to Gamma_q(P_k), a subspace of P_{n-k}."""
    if not 0 <= k <= q.n - 1:
        raise ValueError(f"k={k} outside 0..{q.n - 1}")
    V = range_basis(hankel_matrix(q, k, exact=False), tol)
    if V.shape[1] == 0:
        return 0.0
    return max(_sigma_max(V[list(shift_matrix(q.d, q.n - k - 1, i).rows), :])
               for i in range(1, q.d + 1))


def _herm_gram(M: np.ndarray) -> np.ndarray:
    """M^* M for an exact object matrix."""
    Mc = np.vectorize(lambda x: x.conjugate() if isinstance(x, GaussianRational) else x,
                      otypes=[object])(M) if M.size else M
    return exact_matrix(Mc.T.dot(M)) if M.size else M


def constant_sq_exact(kind: str, q: HomogeneousPolynomial, k: int,
                      max_denominator: int = 10**6) -> Fraction | None:
    """Exact square of A_k, B_k or C_k when it is rational, confirmed by exact eigen-checks.

    The float value is rationalised and accepted only if c*I - G is PSD and
    singular for the relevant Gram matrix G (for B and C: PSD for every i and
    singular for at least one). Returns None when no rational value is confirmed.
    """
    if not q.exact:
        return None
    if kind == "A":
        G = _herm_gram(hankel_matrix(q, k, exact=True))
        return exact_lambda_max(G, constant_A(q, k) ** 2, max_denominator=max_denominator)
    if kind == "B":
        approx = constant_B(q, k) ** 2
        c = guess_rational(approx, max_denominator)
        grams = [_herm_gram(shifted_hankel_matrix(q, k, i, exact=True)) for i in range(1, q.d + 1)]
        return c if _max_over_family(grams, c) else None
    if kind == "C":
        H = hankel_matrix(q, k, exact=True)
        cols = column_basis(H)
        if not cols:
            return Fraction(0)
        Bm = H[:, cols]
        gram = _herm_gram(Bm)
        c = guess_rational(constant_C(q, k) ** 2, max_denominator)
        fam = []
        for i in range(1, q.d + 1):
            rows = list(shift_matrix(q.d, q.n - k - 1, i).rows)
            fam.append(_herm_gram(Bm[rows, :]))
        return c if _max_over_family(fam, c, gram) else None
    raise ValueError("kind must be 'A', 'B' or 'C'")


def _max_over_family(grams, c, B=None) -> bool:
    singular = False
    for G in grams:
        n = G.shape[0]
        D = np.empty((n, n), dtype=object)
        for a in range(n):
            for b in range(n):
                base = B[a, b] if B is not None else Fraction(int(a == b))
                D[a, b] = c * base - G[a, b]
        if not rational_psd(D):
            return False
        if not singular and exact_det(D) == 0:
            singular = True
    return singular


def gamma_star_gamma(q: HomogeneousPolynomial, k: int) -> np.ndarray:
    """G_k = H(hat q, k)^* H(hat q, k), a PSD matrix on P_k (exact when q is)."""
    H = hankel_matrix(hat(q), k)
    if q.exact:
        return _herm_gram(H)
    return H.conj().T @ H


def gamma_star_gamma_by_shifts(q: HomogeneousPolynomial, k: int) -> np.ndarray:
    """Same matrix as sum over |beta| = n-k of v v^*, v the coefficients of M_{z^beta}^* q."""
    n = q.n
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    src = basis_order(q.d, k).monomials
    m = len(src)
    exact = q.exact
    G = np.empty((m, m), dtype=object if exact else complex)
    G[:, :] = Fraction(0) if exact else 0
    for beta in basis_order(q.d, n - k):
        v = [q.coeffs.get(tuple(a + b for a, b in zip(alpha, beta)), 0) for alpha in src]
        for a in range(m):
            if v[a] == 0:
                continue
            for b in range(m):
                if v[b] != 0:
                    G[a, b] = G[a, b] + v[a] * (v[b].conjugate() if hasattr(v[b], "conjugate") else v[b])
    if exact:
        return exact_matrix(G)
    return G
