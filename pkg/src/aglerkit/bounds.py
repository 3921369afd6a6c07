"""Constructive upper bounds on the dual norm ||q||_* from Hankel data.

Every method returns a graded operator L in the cone with top block q q^*;
its value is sqrt(<L_0 1, 1>). Writing G_j for the Gram matrix of the Hankel
block of hat(q) on P_j (so G_n = q q^* and G_0 = ||q||_2^2):

* method 1 / 2 at level k: G_j above k, and A_k^2 (resp. B_k^2) times the
  identity on every block j <= k;
* method 3: pi_j G_j with pi_j = C_j^2 ... C_{n-1}^2;
* method 4 at level k: method 3 above k, and B_k^2 pi_{k+1} times the identity below;
* method 5: a verifier for user-supplied weights E_0..E_n.

Certificates are exact when q is exact and the constants involved have
rational squares (confirmed by exact eigen-checks); otherwise float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .certify import GradedOperator, check_cone_membership, check_top_block
from .exact import column_basis, exact_matrix, rational_psd, to_exact, to_float_matrix
from .linops import (RANK_TOL, constant_A, constant_B, constant_C, constant_sq_exact, gamma_star_gamma,
                     hankel_matrix, range_basis, shift_matrix)
from .polycore import HomogeneousPolynomial, dim, hat

__all__ = ["MethodBound", "Method5Violation", "method1", "method2", "method3", "method4",
           "method5_verify", "best_bound", "all_bounds"]


@dataclass(frozen=True)
class MethodBound:
    method: int
    k: int | None
    value: float
    value_sq: Any
    certificate: GradedOperator
    exact: bool

    def verify(self, q: HomogeneousPolynomial, tol: float = 1e-9) -> bool:
        """Cone membership plus top block equal to q q^*."""
        return check_cone_membership(self.certificate, tol=tol).ok and \
            check_top_block(self.certificate, q, tol=tol)


@dataclass(frozen=True)
class Method5Violation:
    """Condition on level m (weights E_m -> E_{m+1}) fails for variable i by ``deficit``."""

    violations: tuple[tuple[int, int, float], ...]

    @property
    def ok(self) -> bool:
        return False


def _check_k(q: HomogeneousPolynomial, k: int):
    if not 0 <= k <= q.n - 1:
        raise ValueError(f"k={k} outside 0..{q.n - 1}")


def _scaled_identity(m: int, c, exact: bool) -> np.ndarray:
    if exact:
        M = np.empty((m, m), dtype=object)
        for a in range(m):
            for b in range(m):
                M[a, b] = to_exact(c) if a == b else Fraction(0)
        return M
    return float(c) * np.eye(m)


def _gram(q: HomogeneousPolynomial, j: int, exact: bool) -> np.ndarray:
    if exact:
        return gamma_star_gamma(q.to_exact(), j)
    return np.asarray(gamma_star_gamma(q.to_float(), j), dtype=complex)


def _scale(M: np.ndarray, c, exact: bool) -> np.ndarray:
    if exact:
        return exact_matrix(M * to_exact(c))
    return np.asarray(M, dtype=complex) * float(c)


def _constant_sq(kind: str, q: HomogeneousPolynomial, k: int, exact: bool | None):
    """(square of the constant, whether it is exact)."""
    if exact is not False and q.exact:
        c = constant_sq_exact(kind, q, k)
        if c is not None:
            return c, True
        if exact:
            raise ValueError(f"{kind}_{k}^2 is not a confirmed rational; use exact=False")
    f = {"A": constant_A, "B": constant_B, "C": constant_C}[kind](q, k)
    return f * f, False


def _finish(method: int, k, q: HomogeneousPolynomial, blocks, value_sq, exact: bool) -> MethodBound:
    L = GradedOperator(q.d, q.n, blocks, exact=exact)
    vs = to_exact(value_sq) if exact else float(value_sq)
    return MethodBound(method, k, math.sqrt(float(vs)), vs, L, exact)


def _level_bound(method: int, kind: str, q: HomogeneousPolynomial, k: int, exact: bool | None):
    _check_k(q, k)
    c, is_exact = _constant_sq(kind, q, k, exact)
    blocks = []
    for j in range(q.n + 1):
        if j <= k:
            blocks.append(_scaled_identity(dim(q.d, j), c, is_exact))
        else:
            blocks.append(_gram(q, j, is_exact))
    return _finish(method, k, q, blocks, c, is_exact)


def method1(q: HomogeneousPolynomial, k: int, exact: bool | None = None) -> MethodBound:
    return _level_bound(1, "A", q, k, exact)


def method2(q: HomogeneousPolynomial, k: int, exact: bool | None = None) -> MethodBound:
    return _level_bound(2, "B", q, k, exact)


def _pi(q: HomogeneousPolynomial, exact: bool | None):
    """pi_j = C_j^2 ... C_{n-1}^2 for j = 0..n (pi_n = 1), and exactness."""
    n = q.n
    cs = [_constant_sq("C", q, l, exact) for l in range(n)]
    all_exact = all(e for _, e in cs) and q.exact and exact is not False
    one = Fraction(1) if all_exact else 1.0
    pi = [one] * (n + 1)
    for j in range(n - 1, -1, -1):
        c = cs[j][0] if all_exact else float(cs[j][0])
        pi[j] = pi[j + 1] * c
    return pi, all_exact


def method3(q: HomogeneousPolynomial, exact: bool | None = None) -> MethodBound:
    if q.is_zero():
        raise ValueError("q must be nonzero")
    pi, is_exact = _pi(q, exact)
    blocks = [_scale(_gram(q, j, is_exact), pi[j], is_exact) for j in range(q.n + 1)]
    value_sq = pi[0] * (q.norm2_sq() if is_exact else q.norm2() ** 2)
    return _finish(3, None, q, blocks, value_sq, is_exact)


def method4(q: HomogeneousPolynomial, k: int, exact: bool | None = None) -> MethodBound:
    _check_k(q, k)
    pi, pi_exact = _pi(q, exact)
    b, b_exact = _constant_sq("B", q, k, exact)
    is_exact = pi_exact and b_exact
    if not is_exact:
        pi = [float(x) for x in pi]
        b = float(b)
    low = b * pi[k + 1]
    blocks = []
    for j in range(q.n + 1):
        if j <= k:
            blocks.append(_scaled_identity(dim(q.d, j), low, is_exact))
        else:
            blocks.append(_scale(_gram(q, j, is_exact), pi[j], is_exact))
    return _finish(4, k, q, blocks, low, is_exact)


def method5_verify(q: HomogeneousPolynomial, E: Sequence, tol: float = 1e-9,
                   exact: bool | None = None, rank_tol: float = RANK_TOL):
    """Check weights E_0..E_n and, if they pass, return the Method 5 bound.

    E_0 must be 1. For m = 0..n-1 and every i the matrix E_{m+1} - S_i E_m S_i^T
    (S_i: P_m -> P_{m+1}) must be PSD on the range of the Hankel block of hat(q)
    from P_{n-m-1}. The certificate is L_k = H_k^* E_{n-k} H_k with H_k that block
    on P_k, and the bound is sqrt(<E_n hat(q), hat(q)>). A failed check returns a
    :class:`Method5Violation` listing (m, i, eigenvalue deficit).
    """
    d, n = q.d, q.n
    if len(E) != n + 1:
        raise ValueError(f"expected {n + 1} weight matrices, got {len(E)}")
    if exact is None:
        exact = q.exact and all(np.asarray(e).dtype == object for e in E)
    qh = hat(q.to_exact() if exact else q.to_float())
    Es = [exact_matrix(e) if exact else np.asarray(to_float_matrix(e) if np.asarray(e).dtype == object
                                                   else e, dtype=complex) for e in E]
    for m, e in enumerate(Es):
        if e.shape != (dim(d, m), dim(d, m)):
            raise ValueError(f"E_{m} has shape {e.shape}, expected {(dim(d, m),) * 2}")
    if (Es[0][0, 0] != 1) if exact else abs(Es[0][0, 0] - 1) > tol:
        raise ValueError("E_0 must equal 1")
    violations = []
    for m in range(n):
        H = hankel_matrix(qh, n - m - 1, exact=exact)
        for i in range(1, d + 1):
            S = shift_matrix(d, m, i)
            rows = list(S.rows)
            X = Es[m + 1].copy()
            X[np.ix_(rows, rows)] = X[np.ix_(rows, rows)] - Es[m]
            if exact:
                cols = column_basis(H)
                B = H[:, cols]
                Bh = np.vectorize(lambda x: x.conjugate(), otypes=[object])(B).T
                R = exact_matrix(Bh.dot(X).dot(B))
                ok = rational_psd(R)
                Rf = np.asarray(to_float_matrix(R), dtype=complex)
                deficit = max(0.0, -float(np.linalg.eigvalsh(Rf)[0])) if Rf.size else 0.0
                if not ok:
                    violations.append((m, i, deficit))
            else:
                V = range_basis(H, rank_tol)
                if V.shape[1] == 0:
                    continue
                R = V.conj().T @ X @ V
                lam = float(np.linalg.eigvalsh(0.5 * (R + R.conj().T))[0])
                if lam < -tol * max(1.0, float(np.abs(X).max())):
                    violations.append((m, i, -lam))
    if violations:
        return Method5Violation(tuple(violations))
    blocks = []
    for k in range(n + 1):
        H = hankel_matrix(qh, k, exact=exact)
        if exact:
            Hh = np.vectorize(lambda x: x.conjugate(), otypes=[object])(H).T
            blocks.append(exact_matrix(Hh.dot(Es[n - k]).dot(H)))
        else:
            blocks.append(H.conj().T @ Es[n - k] @ H)
    value_sq = blocks[0][0, 0]
    if exact:
        value_sq = to_exact(value_sq)
        value_sq = value_sq.re if hasattr(value_sq, "re") else value_sq
    else:
        value_sq = float(np.real(value_sq))
    return _finish(5, None, q, blocks, value_sq, exact)


def all_bounds(q: HomogeneousPolynomial, exact: bool | None = None) -> list[MethodBound]:
    """Methods 1 and 2 at every level, method 3, and method 4 at every level."""
    if q.is_zero():
        raise ValueError("q must be nonzero")
    out = []
    for k in range(q.n):
        out.append(method1(q, k, exact))
        out.append(method2(q, k, exact))
    out.append(method3(q, exact))
    for k in range(q.n):
        out.append(method4(q, k, exact))
    return out


def best_bound(q: HomogeneousPolynomial, exact: bool | None = None) -> MethodBound:
    """The smallest of :func:`all_bounds` (earliest method and level win ties)."""
    cands = all_bounds(q, exact)
    return min(cands, key=lambda b: b.value)
