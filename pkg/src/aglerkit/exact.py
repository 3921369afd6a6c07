"""Exact scalar arithmetic over Q and Q(i), and the rational linear algebra built on it.

Matrices here are either nested lists or numpy object arrays whose entries are
``int``, :class:`fractions.Fraction` or :class:`GaussianRational`.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

__all__ = [
    "GaussianRational",
    "to_exact",
    "is_exact_scalar",
    "exact_abs2",
    "exact_matrix",
    "to_float_matrix",
    "ldl_pivoted",
    "LDLResult",
    "rational_psd",
    "exact_det",
    "charpoly",
    "eval_poly",
    "column_basis",
    "lambda_max_is",
    "exact_lambda_max",
    "guess_rational",
]


class GaussianRational:
    """An element ``re + im*i`` of Q(i) with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: Any = 0, im: Any = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _coerce(x: Any) -> "GaussianRational | None":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction)):
            return GaussianRational(x, 0)
        return None

    def simplify(self) -> "Fraction | GaussianRational":
        return self.re if self.im == 0 else self

    @property
    def real(self) -> Fraction:
        return self.re

    @property
    def imag(self) -> Fraction:
        return self.im

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        den = o.abs2()
        if den == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, numbers.Complex):
                return complex(self) == other
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({self.re!s}, {self.im!s})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


def is_exact_scalar(x: Any) -> bool:
    return isinstance(x, (int, Fraction, GaussianRational)) and not isinstance(x, bool)


def to_exact(x: Any) -> "Fraction | GaussianRational":
    """Convert to Fraction (real) or GaussianRational (non-real).

    Floats are converted through their exact binary value; strings may be
    rational literals or ``"a+bi"`` forms produced by :class:`GaussianRational`.
    """
    if isinstance(x, GaussianRational):
        return x.simplify()
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, complex):
        return GaussianRational(Fraction(x.real), Fraction(x.imag)).simplify()
    if isinstance(x, np.generic):
        return to_exact(x.item())
    if isinstance(x, str):
        return _parse_exact_string(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact scalar")


def _parse_exact_string(s: str) -> "Fraction | GaussianRational":
    s = s.strip().replace(" ", "")
    if not s.endswith("i"):
        return Fraction(s)
    body = s[:-1]
    # split at the last sign that is not part of an exponent or the leading sign
    for pos in range(len(body) - 1, 0, -1):
        if body[pos] in "+-" and body[pos - 1] not in "eE/":
            re_part, im_part = body[:pos], body[pos:]
            break
    else:
        re_part, im_part = "0", body
    if im_part in ("", "+"):
        im_part = "1"
    elif im_part == "-":
        im_part = "-1"
    return GaussianRational(Fraction(re_part), Fraction(im_part)).simplify()


def exact_abs2(x: Any) -> Fraction:
    if isinstance(x, GaussianRational):
        return x.abs2()
    x = Fraction(x)
    return x * x


def _conj(x):
    return x.conjugate() if isinstance(x, GaussianRational) else x


def exact_matrix(M: Any) -> np.ndarray:
    """Copy ``M`` into a 2-D object array of exact scalars."""
    arr = np.asarray(M, dtype=object)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_exact(v)
    return out


def to_float_matrix(M: Any) -> np.ndarray:
    arr = np.asarray(M, dtype=object)
    out = np.empty(arr.shape, dtype=complex)
    for idx, v in np.ndenumerate(arr):
        out[idx] = complex(v)
    if np.all(out.imag == 0):
        return out.real.copy()
    return out


@dataclass(frozen=True)
class LDLResult:
    """Outcome of a pivoted LDL* factorisation in exact arithmetic.

    ``order`` lists the pivot indices used, ``pivots`` the matching diagonal
    entries of D, and ``zero_rows`` the indices eliminated as identically zero.
    When ``psd`` is false, ``reason`` says which rule failed and ``witness``
    points at the offending index.
    """

    psd: bool
    order: tuple[int, ...]
    pivots: tuple[Fraction, ...]
    zero_rows: tuple[int, ...]
    reason: str = ""
    witness: int | None = None

    @property
    def rank(self) -> int:
        return len(self.pivots)


def ldl_pivoted(M: Any) -> LDLResult:
    """Pivoted symmetric elimination deciding positive semidefiniteness exactly.

    Each step removes every index whose remaining diagonal is zero (this is only
    allowed when its whole remaining row is zero), then pivots on the largest
    positive diagonal entry. A negative diagonal entry at any stage, or a zero
    diagonal with a nonzero row, proves the matrix is not PSD.
    """
    A = [list(row) for row in exact_matrix(M)]
    n = len(A)
    if any(len(row) != n for row in A):
        raise ValueError("matrix must be square")
    for i in range(n):
        if isinstance(A[i][i], GaussianRational) and A[i][i].im != 0:
            raise ValueError("matrix is not Hermitian (non-real diagonal)")
        for j in range(i + 1, n):
            if A[i][j] != _conj(A[j][i]):
                raise ValueError("matrix is not Hermitian")
    for i in range(n):
        A[i][i] = Fraction(A[i][i].re) if isinstance(A[i][i], GaussianRational) else A[i][i]

    remaining = list(range(n))
    order: list[int] = []
    pivots: list[Fraction] = []
    zero_rows: list[int] = []
    while remaining:
        keep = []
        for i in remaining:
            if A[i][i] == 0:
                if any(A[i][j] != 0 for j in remaining):
                    return LDLResult(False, tuple(order), tuple(pivots), tuple(zero_rows),
                                     "zero pivot with nonzero row", i)
                zero_rows.append(i)
            elif A[i][i] < 0:
                return LDLResult(False, tuple(order), tuple(pivots), tuple(zero_rows),
                                 "negative pivot", i)
            else:
                keep.append(i)
        remaining = keep
        if not remaining:
            break
        j = max(remaining, key=lambda i: A[i][i])
        piv = A[j][j]
        order.append(j)
        pivots.append(piv)
        remaining.remove(j)
        col = [(a, A[a][j]) for a in remaining if A[a][j] != 0]
        for a, aj in col:
            scale = aj / piv
            row_a = A[a]
            for b, bj in col:
                # entry (a, b) -= A[a][j] * conj(A[b][j]) / piv
                row_a[b] = row_a[b] - scale * _conj(bj)
            diag = row_a[a]
            if isinstance(diag, GaussianRational):
                # aj * conj(aj) / piv is real, so the diagonal stays real exactly
                row_a[a] = diag.re
    return LDLResult(True, tuple(order), tuple(pivots), tuple(zero_rows))


def rational_psd(M: Any) -> bool:
    """Exact PSD test for a Hermitian matrix over Q or Q(i)."""
    return ldl_pivoted(M).psd


def exact_det(M: Any):
    """Determinant by fraction-exact Gaussian elimination with row pivoting."""
    A = [list(row) for row in exact_matrix(M)]
    n = len(A)
    det: Any = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if A[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        piv = A[c][c]
        det = det * piv
        for r in range(c + 1, n):
            if A[r][c] != 0:
                f = A[r][c] / piv
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return to_exact(det)


def charpoly(M: Any) -> list:
    """Coefficients ``[c_0, ..., c_n]`` of det(xI - M), with c_n = 1 (Faddeev-LeVerrier)."""
    A = exact_matrix(M)
    n = A.shape[0]
    coeffs: list[Any] = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    eye = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            eye[i, j] = Fraction(int(i == j))
    Mk = np.empty((n, n), dtype=object)
    Mk[:, :] = Fraction(0)
    for k in range(1, n + 1):
        Mk = A.dot(Mk) + coeffs[n - k + 1] * eye
        AM = A.dot(Mk)
        tr = sum((AM[i, i] for i in range(n)), Fraction(0))
        coeffs[n - k] = to_exact(-tr / k)
    return coeffs


def eval_poly(coeffs: Sequence, x):
    acc: Any = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return to_exact(acc)


def column_basis(M: Any) -> list[int]:
    """Indices of a maximal set of linearly independent columns (exact)."""
    A = [list(row) for row in exact_matrix(M)]
    if not A:
        return []
    m, n = len(A), len(A[0])
    pivots = []
    row = 0
    for c in range(n):
        p = next((r for r in range(row, m) if A[r][c] != 0), None)
        if p is None:
            continue
        A[row], A[p] = A[p], A[row]
        piv = A[row][c]
        for r in range(row + 1, m):
            if A[r][c] != 0:
                f = A[r][c] / piv
                A[r] = [x - f * y for x, y in zip(A[r], A[row])]
        pivots.append(c)
        row += 1
        if row == m:
            break
    return pivots


def _shifted(c, G: np.ndarray, B: np.ndarray | None) -> np.ndarray:
    n = G.shape[0]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            base = (B[i, j] if B is not None else Fraction(int(i == j)))
            out[i, j] = to_exact(c * base - G[i, j])
    return out


def lambda_max_is(G: Any, c: Any, B: Any = None) -> bool:
    """Exactly decide whether ``c`` is the largest eigenvalue of G (or of the pencil (G, B)).

    For a Hermitian G and positive definite B this holds iff ``cB - G`` is PSD
    and singular.
    """
    G = exact_matrix(G)
    Bm = exact_matrix(B) if B is not None else None
    D = _shifted(to_exact(c), G, Bm)
    return rational_psd(D) and exact_det(D) == 0


def guess_rational(x: float, max_denominator: int = 10**6) -> Fraction:
    return Fraction(x).limit_denominator(max_denominator)


def exact_lambda_max(G: Any, approx: float, B: Any = None,
                     max_denominator: int = 10**6) -> Fraction | None:
    """Rationalise a floating estimate of lambda_max and confirm it exactly, else None."""
    c = guess_rational(approx, max_denominator)
    if lambda_max_is(G, c, B):
        return c
    return None


def exact_sum(values: Iterable) -> Any:
    return to_exact(sum(values, Fraction(0)))
