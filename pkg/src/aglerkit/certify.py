"""Graded operators L = L_0 + ... + L_n and their verification.

A graded operator with L_k positive on P_k and every compression
S_i^* L_k S_i dominated by L_{k-1} certifies

    ||p||_SA^2 >= <L_n p, p> / <L_0 1, 1>          for p in P_{d,n},

and, when additionally L_n >= q q^*, the dual bound ||q||_*^2 <= <L_0 1, 1>.
Exact verification uses pivoted rational LDL* (``exact.rational_psd``); float
verification uses eigenvalues with a relative tolerance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from .exact import (GaussianRational, exact_matrix, rational_psd, to_exact, to_float_matrix, ldl_pivoted)
from .linops import compress
from .polycore import HomogeneousPolynomial, dim

__all__ = [
    "GradedOperator",
    "BlockVerdict",
    "CompressionVerdict",
    "MembershipReport",
    "CertificateError",
    "check_cone_membership",
    "check_top_block",
    "certified_sa_lower_bound",
    "certified_sa_lower_bound_sq",
    "certified_dual_upper_bound",
    "certified_dual_upper_bound_sq",
    "coefficient_lower_bound",
    "rational_psd",
    "repair_certificate",
    "outer",
    "CERTIFICATE_SCHEMA",
]

CERTIFICATE_SCHEMA = "aglerkit.certificate/1"


class CertificateError(ValueError):
    """A certificate failed verification or is malformed."""


def _conj(x):
    return x.conjugate() if isinstance(x, GaussianRational) else x


def outer(v: Sequence, exact: bool) -> np.ndarray:
    """v v^* (exact object array or complex array)."""
    if exact:
        m = len(v)
        out = np.empty((m, m), dtype=object)
        for a in range(m):
            for b in range(m):
                out[a, b] = to_exact(v[a] * _conj(v[b]))
        return out
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def _exact_block(B) -> np.ndarray:
    return exact_matrix(B)


def _float_block(B) -> np.ndarray:
    A = np.asarray(B)
    if A.dtype == object:
        A = to_float_matrix(A)
    A = np.array(A, dtype=complex if np.iscomplexobj(A) else float)
    if np.iscomplexobj(A) and np.all(A.imag == 0):
        A = A.real.copy()
    A.setflags(write=False)
    return A


@dataclass(frozen=True, eq=False)
class GradedOperator:
    """Blocks L_0..L_n; L_k is a Hermitian matrix on P_{d,k} in graded-lex order."""

    d: int
    n: int
    blocks: tuple
    exact: bool

    def __init__(self, d: int, n: int, blocks: Sequence, exact: bool | None = None,
                 herm_tol: float = 1e-9):
        if len(blocks) != n + 1:
            raise CertificateError(f"expected {n + 1} blocks, got {len(blocks)}")
        if exact is None:
            exact = all(np.asarray(B).dtype == object for B in blocks)
        conv = []
        for k, B in enumerate(blocks):
            B = _exact_block(B) if exact else _float_block(B)
            m = dim(d, k)
            if B.shape != (m, m):
                raise CertificateError(f"block {k} has shape {B.shape}, expected {(m, m)}")
            if exact:
                for a in range(m):
                    for b in range(a, m):
                        if B[a, b] != _conj(B[b, a]):
                            raise CertificateError(f"block {k} is not Hermitian")
            else:
                scale = max(1.0, float(np.abs(B).max()))
                if np.abs(B - B.conj().T).max() > herm_tol * scale:
                    raise CertificateError(f"block {k} is not Hermitian within tolerance")
            conv.append(B)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "blocks", tuple(conv))
        object.__setattr__(self, "exact", bool(exact))

    @property
    def scalar_mode(self) -> str:
        return "exact" if self.exact else "float"

    @property
    def L0(self):
        v = self.blocks[0][0, 0]
        if self.exact:
            v = to_exact(v)
            return v.re if isinstance(v, GaussianRational) else v
        return float(np.real(v))

    def block(self, k: int) -> np.ndarray:
        return self.blocks[k]

    def to_float(self) -> "GradedOperator":
        if not self.exact:
            return self
        return GradedOperator(self.d, self.n, [to_float_matrix(B) for B in self.blocks], exact=False)

    def to_exact(self) -> "GradedOperator":
        if self.exact:
            return self
        return GradedOperator(self.d, self.n, [exact_matrix(B) for B in self.blocks], exact=True)

    def scaled(self, c) -> "GradedOperator":
        if self.exact:
            c = to_exact(c)
            return GradedOperator(self.d, self.n, [B * c for B in self.blocks], exact=True)
        return GradedOperator(self.d, self.n, [np.asarray(B) * float(c) for B in self.blocks],
                              exact=False)

    def quadratic(self, p: HomogeneousPolynomial):
        """<L_n p, p> = p^* L_n p (exact when both sides are exact)."""
        if p.d != self.d or p.n != self.n:
            raise CertificateError("polynomial does not live in P_{d,n} of this operator")
        if self.exact and p.exact:
            v = p.vector(exact=True)
            B = self.blocks[-1]
            total: Any = Fraction(0)
            for a in range(len(v)):
                if v[a] == 0:
                    continue
                row = Fraction(0)
                for b in range(len(v)):
                    if v[b] != 0 and B[a, b] != 0:
                        row = row + B[a, b] * v[b]
                total = total + _conj(v[a]) * row
            total = to_exact(total)
            return total.re if isinstance(total, GaussianRational) else total
        v = p.vector(exact=False)
        B = np.asarray(self.to_float().blocks[-1], dtype=complex)
        return float(np.real(v.conj() @ B @ v))

    # -- serialisation -----------------------------------------------------------
    def to_json_dict(self, source: str = "", claims: Mapping | None = None) -> dict:
        blocks = []
        for k, B in enumerate(self.blocks):
            rows = []
            for a in range(B.shape[0]):
                row = []
                for b in range(B.shape[1]):
                    row.append(_entry_to_json(B[a, b], self.exact))
                rows.append(row)
            blocks.append({"k": k, "entries": rows})
        return {"schema": CERTIFICATE_SCHEMA, "d": self.d, "n": self.n, "mode": self.scalar_mode,
                "blocks": blocks, "meta": {"source": source, "claims": dict(claims or {})}}

    def to_json(self, source: str = "", claims: Mapping | None = None) -> str:
        return json.dumps(self.to_json_dict(source, claims), sort_keys=True)

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "GradedOperator":
        exact = obj.get("mode", "exact") == "exact"
        blocks = []
        for blk in sorted(obj["blocks"], key=lambda b: b["k"]):
            rows = [[_entry_from_json(e, exact) for e in row] for row in blk["entries"]]
            if exact:
                B = np.empty((len(rows), len(rows)), dtype=object)
                for a, row in enumerate(rows):
                    for b, e in enumerate(row):
                        B[a, b] = e
            else:
                B = np.array(rows, dtype=complex)
            blocks.append(B)
        return cls(int(obj["d"]), int(obj["n"]), blocks, exact=exact)

    @classmethod
    def from_json(cls, text: str) -> "GradedOperator":
        return cls.from_json_dict(json.loads(text))


def _entry_to_json(x, exact: bool):
    if exact:
        x = to_exact(x)
        if isinstance(x, GaussianRational):
            return [str(x.re), str(x.im)]
        return str(x)
    x = complex(x)
    if x.imag == 0:
        return repr(float(x.real))
    return [repr(float(x.real)), repr(float(x.imag))]


def _entry_from_json(e, exact: bool):
    if isinstance(e, list):
        re_, im_ = e
        if exact:
            return GaussianRational(Fraction(re_), Fraction(im_)).simplify()
        return complex(float(re_), float(im_))
    return Fraction(e) if exact else complex(float(e))


# -- membership ------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockVerdict:
    k: int
    ok: bool
    margin: float


@dataclass(frozen=True)
class CompressionVerdict:
    k: int
    i: int
    ok: bool
    margin: float


@dataclass(frozen=True)
class MembershipReport:
    """``margin`` is always the float minimum eigenvalue, reported for information."""

    mode: str
    blocks: tuple[BlockVerdict, ...]
    compressions: tuple[CompressionVerdict, ...]

    @property
    def ok(self) -> bool:
        return all(b.ok for b in self.blocks) and all(c.ok for c in self.compressions)

    def failures(self) -> list:
        return [v for v in self.blocks + self.compressions if not v.ok]


def _min_eig(M) -> float:
    A = np.asarray(to_float_matrix(M) if np.asarray(M).dtype == object else M)
    if A.size == 0:
        return math.inf
    return float(np.linalg.eigvalsh(A)[0])


def _psd_verdict(M, exact: bool, tol: float, scale: float) -> tuple[bool, float]:
    margin = _min_eig(M)
    if exact:
        return rational_psd(M), margin
    return margin >= -tol * max(1.0, scale), margin


def check_cone_membership(L: GradedOperator, mode: str | None = None,
                          tol: float = 1e-9) -> MembershipReport:
    """Check L_k >= 0 and L_{k-1} - compress(L_k, i) >= 0 for all k >= 1 and all i.

    ``mode="exact"`` on a float operator converts its binary floats exactly; a
    float-mode check accepts eigenvalues down to -tol * max(1, max |entry|).
    """
    mode = mode or L.scalar_mode
    if mode not in ("exact", "float"):
        raise ValueError("mode must be 'exact' or 'float'")
    exact = mode == "exact"
    Lm = L.to_exact() if exact else L.to_float()
    scale = max(float(np.abs(np.asarray(to_float_matrix(B))).max()) for B in Lm.blocks)
    bverdicts = []
    for k, B in enumerate(Lm.blocks):
        ok, margin = _psd_verdict(B, exact, tol, scale)
        bverdicts.append(BlockVerdict(k, ok, margin))
    cverdicts = []
    for k in range(1, L.n + 1):
        for i in range(1, L.d + 1):
            D = Lm.blocks[k - 1] - compress(Lm.blocks[k], i, L.d, k)
            ok, margin = _psd_verdict(D, exact, tol, scale)
            cverdicts.append(CompressionVerdict(k, i, ok, margin))
    return MembershipReport(mode, tuple(bverdicts), tuple(cverdicts))


def check_top_block(L: GradedOperator, q: HomogeneousPolynomial, scale: Any = 1,
                    tol: float = 1e-9) -> bool:
    """True iff L_n == scale * q q^* (exactly when both are exact, else within tol)."""
    if q.d != L.d or q.n != L.n:
        raise CertificateError("degree mismatch between certificate and polynomial")
    if L.exact and q.exact and not isinstance(scale, float):
        target = outer(q.vector(exact=True), True) * to_exact(scale)
        B = L.blocks[-1]
        return all(B[a, b] == target[a, b] for a in range(B.shape[0]) for b in range(B.shape[1]))
    target = complex(scale) * outer(q.vector(exact=False), False)
    B = np.asarray(L.to_float().blocks[-1], dtype=complex)
    return bool(np.abs(B - target).max() <= tol * max(1.0, float(np.abs(target).max())))


def _require_member(L: GradedOperator, tol: float):
    rep = check_cone_membership(L, tol=tol)
    if not rep.ok:
        bad = rep.failures()[0]
        raise CertificateError(f"cone membership fails: {bad}")
    if L.L0 <= 0:
        raise CertificateError("<L_0 1, 1> must be positive")
    return rep


def certified_sa_lower_bound_sq(L: GradedOperator, p: HomogeneousPolynomial, tol: float = 1e-9):
    """<L_n p, p> / <L_0 1, 1> after verifying membership (exact value for exact inputs)."""
    _require_member(L, tol)
    if L.exact and not p.exact:
        p = p.to_exact()
    return L.quadratic(p) / L.L0


def certified_sa_lower_bound(L: GradedOperator, p: HomogeneousPolynomial, tol: float = 1e-9) -> float:
    return math.sqrt(max(float(certified_sa_lower_bound_sq(L, p, tol)), 0.0))


def certified_dual_upper_bound_sq(L: GradedOperator, q: HomogeneousPolynomial, tol: float = 1e-9):
    """<L_0 1, 1> after verifying membership and L_n >= q q^*."""
    _require_member(L, tol)
    if L.exact:
        qe = q.to_exact()
        D = L.blocks[-1] - outer(qe.vector(exact=True), True)
        if not rational_psd(D):
            raise CertificateError("top block does not dominate q q^*")
    else:
        D = np.asarray(L.blocks[-1], dtype=complex) - outer(q.vector(exact=False), False)
        if _min_eig(D) < -tol * max(1.0, float(np.abs(D).max())):
            raise CertificateError("top block does not dominate q q^*")
    return L.L0


def certified_dual_upper_bound(L: GradedOperator, q: HomogeneousPolynomial, tol: float = 1e-9) -> float:
    return math.sqrt(float(certified_dual_upper_bound_sq(L, q, tol)))


def coefficient_lower_bound(q: HomogeneousPolynomial) -> float:
    """max |coefficient|, a lower bound for the dual norm."""
    return max((abs(complex(c)) for c in q.coeffs.values()), default=0.0)


# -- turning a floating SDP optimiser into an exact certificate ----------------------

def _round_dyadic(x: float, den: int) -> Fraction:
    return Fraction(round(x * den), den)


def _round_up_dyadic(x: float, den: int) -> Fraction:
    return Fraction(math.ceil(x * den), den)


def _round_hermitian(B: np.ndarray, den: int) -> np.ndarray:
    B = np.asarray(B, dtype=complex)
    m = B.shape[0]
    out = np.empty((m, m), dtype=object)
    for a in range(m):
        out[a, a] = _round_dyadic(float(B[a, a].real), den)
        for b in range(a + 1, m):
            z = 0.5 * (B[a, b] + np.conj(B[b, a]))
            v = GaussianRational(_round_dyadic(float(z.real), den),
                                 _round_dyadic(float(z.imag), den)).simplify()
            out[a, b] = v
            out[b, a] = _conj(v)
    return out


def _plus_identity(B: np.ndarray, eps: Fraction) -> np.ndarray:
    out = B.copy()
    for a in range(B.shape[0]):
        out[a, a] = to_exact(out[a, a] + eps)
    return out


def repair_certificate(L: GradedOperator, q: HomogeneousPolynomial | None = None,
                       denominator: int = 2**40, margin: float = 1e-10,
                       attempts: int = 6) -> GradedOperator:
    """Round a float cone element to dyadic rationals and shift blocks by multiples of I
    until exact membership holds.

    With ``q`` given, the top block is pinned to q q^* exactly (dual certificates);
    otherwise it is rounded and shifted too. Shifts are chosen top-down: if block k
    gets + e_k I, block k-1 needs e_{k-1} >= e_k + (compression deficit), since
    every compression of the identity is the identity.
    """
    d, n = L.d, L.n
    Lf = L.to_float()
    scale = max(1.0, max(float(np.abs(np.asarray(B)).max()) for B in Lf.blocks))
    rounded = [_round_hermitian(B, denominator) for B in Lf.blocks]
    if q is not None:
        rounded[n] = outer(q.to_exact().vector(exact=True), True)
    mu = margin * scale
    for _ in range(attempts):
        eps = [Fraction(0)] * (n + 1)
        if q is None:
            deficit = max(0.0, -_min_eig(rounded[n]))
            eps[n] = _round_up_dyadic(deficit + mu, denominator)
        for k in range(n, 0, -1):
            deficit = 0.0
            for i in range(1, d + 1):
                D = to_float_matrix(rounded[k - 1]) - to_float_matrix(compress(rounded[k], i, d, k))
                deficit = max(deficit, -_min_eig(D))
            eps[k - 1] = eps[k] + _round_up_dyadic(max(deficit, 0.0) + mu, denominator)
        blocks = [_plus_identity(rounded[k], eps[k]) for k in range(n + 1)]
        cand = GradedOperator(d, n, blocks, exact=True)
        if check_cone_membership(cand, "exact").ok:
            return cand
        mu *= 10
    raise CertificateError("could not repair the certificate to exact membership")
