"""Homogeneous polynomials in d variables: monomial bases, the Hardy pairing,
parsing/formatting and the named families used throughout the package.

Monomials of a fixed degree are ordered graded-lexicographically with
z1 > z2 > ... > zd, i.e. exponent vectors in descending lexicographic order.
For d=3, k=2 this gives z1^2, z1 z2, z1 z3, z2^2, z2 z3, z3^2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .exact import GaussianRational, is_exact_scalar, to_exact

MultiIndex = tuple[int, ...]

__all__ = [
    "MultiIndex",
    "BasisOrder",
    "basis",
    "basis_order",
    "dim",
    "HomogeneousPolynomial",
    "ParseError",
    "MixedDegreeError",
    "VariableIndexError",
    "parse_poly",
    "format_poly",
    "inner_product",
    "hat",
    "kvh_polynomial",
    "kernel_polynomial",
    "homogenize",
    "dehomogenize",
    "closed_form_kvh",
    "random_polynomial",
    "monomial",
]


def dim(d: int, k: int) -> int:
    """Dimension of P_{d,k}."""
    if k < 0:
        return 0
    return math.comb(k + d - 1, d - 1)


def _compositions(k: int, d: int):
    if d == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in _compositions(k - first, d - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class BasisOrder:
    d: int
    k: int
    monomials: tuple[MultiIndex, ...]
    _index: Mapping[MultiIndex, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.monomials)

    def index(self, alpha: MultiIndex) -> int:
        return self._index[alpha]

    def __iter__(self):
        return iter(self.monomials)


@lru_cache(maxsize=None)
def basis_order(d: int, k: int) -> BasisOrder:
    if d < 1:
        raise ValueError("need at least one variable")
    if k < 0:
        raise ValueError("degree must be nonnegative")
    mons = tuple(_compositions(k, d))
    return BasisOrder(d, k, mons, MappingProxyType({a: j for j, a in enumerate(mons)}))


def basis(d: int, k: int) -> tuple[MultiIndex, ...]:
    return basis_order(d, k).monomials


def _scalar_is_zero(c) -> bool:
    return c == 0


@dataclass(frozen=True, eq=False)
class HomogeneousPolynomial:
    """A homogeneous polynomial stored as a sparse map from exponent vectors to coefficients.

    ``exact`` polynomials carry Fraction / GaussianRational coefficients, float
    ones carry Python complex numbers. Mixing is refused; use :meth:`to_float`
    or :meth:`to_exact` to convert.
    """

    d: int
    n: int
    coeffs: Mapping[MultiIndex, Any]
    exact: bool = True

    def __init__(self, d: int, n: int, coeffs: Mapping[MultiIndex, Any] | Iterable = (),
                 exact: bool | None = None):
        if d < 1:
            raise ValueError("need at least one variable")
        if n < 0:
            raise ValueError("degree must be nonnegative")
        items = list(coeffs.items()) if isinstance(coeffs, Mapping) else list(coeffs)
        if exact is None:
            exact = all(is_exact_scalar(c) for _, c in items)
        clean: dict[MultiIndex, Any] = {}
        for alpha, c in items:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != d:
                raise ValueError(f"exponent {alpha} has length {len(alpha)}, expected {d}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            if sum(alpha) != n:
                raise MixedDegreeError(f"monomial {alpha} has degree {sum(alpha)}, expected {n}")
            if exact:
                if not is_exact_scalar(c):
                    raise TypeError("float coefficient in an exact polynomial; convert explicitly")
                c = to_exact(c)
            else:
                c = complex(c)
            c = clean.get(alpha, 0) + c
            clean[alpha] = to_exact(c) if exact else c
        clean = {a: c for a, c in clean.items() if not _scalar_is_zero(c)}
        order = basis_order(d, n)
        ordered = dict(sorted(clean.items(), key=lambda kv: order.index(kv[0])))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coeffs", MappingProxyType(ordered))
        object.__setattr__(self, "exact", bool(exact))

    # -- basic protocol ------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, HomogeneousPolynomial):
            return NotImplemented
        return self.d == other.d and self.n == other.n and dict(self.coeffs) == dict(other.coeffs)

    def __hash__(self):
        return hash((self.d, self.n, frozenset(self.coeffs.items())))

    def __repr__(self):
        return f"HomogeneousPolynomial(d={self.d}, n={self.n}, {format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)

    @property
    def scalar_mode(self) -> str:
        return "exact" if self.exact else "float"

    def coefficient(self, alpha: Sequence[int]):
        return self.coeffs.get(tuple(alpha), Fraction(0) if self.exact else 0j)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_real(self) -> bool:
        if self.exact:
            return all(not isinstance(c, GaussianRational) for c in self.coeffs.values())
        return all(c.imag == 0 for c in self.coeffs.values())

    # -- conversions ---------------------------------------------------------
    def to_float(self) -> "HomogeneousPolynomial":
        return HomogeneousPolynomial(self.d, self.n, {a: complex(c) for a, c in self.coeffs.items()},
                                     exact=False)

    def to_exact(self) -> "HomogeneousPolynomial":
        if self.exact:
            return self
        return HomogeneousPolynomial(self.d, self.n, {a: to_exact(c) for a, c in self.coeffs.items()},
                                     exact=True)

    def vector(self, exact: bool | None = None) -> np.ndarray:
        """Coefficient vector in graded-lex order (complex128, or object dtype when exact)."""
        exact = self.exact if exact is None else exact
        order = basis_order(self.d, self.n)
        if exact:
            if not self.exact:
                return self.to_exact().vector(True)
            v = np.empty(len(order), dtype=object)
            v[:] = [self.coeffs.get(a, Fraction(0)) for a in order]
            return v
        v = np.zeros(len(order), dtype=complex)
        for a, c in self.coeffs.items():
            v[order.index(a)] = complex(c)
        return v

    @classmethod
    def from_vector(cls, d: int, n: int, v: Sequence, exact: bool | None = None):
        order = basis_order(d, n)
        if len(v) != len(order):
            raise ValueError("vector length does not match dim P_{d,n}")
        return cls(d, n, {a: c for a, c in zip(order, v)}, exact=exact)

    # -- algebra -------------------------------------------------------------
    def _check_compatible(self, other: "HomogeneousPolynomial"):
        if self.d != other.d or self.n != other.n:
            raise ValueError("polynomials live in different spaces P_{d,n}")

    def _mode_with(self, other: "HomogeneousPolynomial") -> bool:
        if self.exact != other.exact:
            raise TypeError("mixing exact and float polynomials; convert explicitly")
        return self.exact

    def __add__(self, other):
        if not isinstance(other, HomogeneousPolynomial):
            return NotImplemented
        self._check_compatible(other)
        exact = self._mode_with(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0) + c
        return HomogeneousPolynomial(self.d, self.n, out, exact=exact)

    def __neg__(self):
        return HomogeneousPolynomial(self.d, self.n, {a: -c for a, c in self.coeffs.items()},
                                     exact=self.exact)

    def __sub__(self, other):
        if not isinstance(other, HomogeneousPolynomial):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, HomogeneousPolynomial):
            if self.d != other.d:
                raise ValueError("variable counts differ")
            exact = self._mode_with(other)
            out: dict[MultiIndex, Any] = {}
            for a, ca in self.coeffs.items():
                for b, cb in other.coeffs.items():
                    g = tuple(x + y for x, y in zip(a, b))
                    out[g] = out.get(g, 0) + ca * cb
            return HomogeneousPolynomial(self.d, self.n + other.n, out, exact=exact)
        if self.exact and is_exact_scalar(other):
            s = to_exact(other)
            return HomogeneousPolynomial(self.d, self.n, {a: c * s for a, c in self.coeffs.items()},
                                         exact=True)
        if isinstance(other, (int, float, complex, Fraction, GaussianRational, np.number)):
            base = self if not self.exact else self.to_float()
            s = complex(other)
            return HomogeneousPolynomial(self.d, self.n, {a: c * s for a, c in base.coeffs.items()},
                                         exact=False)
        return NotImplemented

    __rmul__ = __mul__

    def norm2_sq(self):
        """Squared Hardy norm (exact in exact mode)."""
        if self.exact:
            return sum((c * c.conjugate() if isinstance(c, GaussianRational) else c * c
                        for c in self.coeffs.values()), Fraction(0))
        return float(sum(abs(c) ** 2 for c in self.coeffs.values()))

    def norm2(self) -> float:
        return math.sqrt(float(to_exact(self.norm2_sq()) if self.exact else self.norm2_sq()))

    def shift_adjoint(self, i: int) -> "HomogeneousPolynomial":
        """Backward shift in z_i: the coefficient of z^alpha becomes c_{alpha+e_i}."""
        if not 1 <= i <= self.d:
            raise ValueError(f"variable index {i} out of range 1..{self.d}")
        if self.n == 0:
            raise ValueError("backward shift of a constant leaves P_{d,0}")
        out = {}
        for a, c in self.coeffs.items():
            if a[i - 1] > 0:
                b = list(a)
                b[i - 1] -= 1
                out[tuple(b)] = c
        return HomogeneousPolynomial(self.d, self.n - 1, out, exact=self.exact)

    def __call__(self, *z):
        if len(z) == 1 and np.ndim(z[0]) == 1:
            z = tuple(z[0])
        if len(z) != self.d:
            raise ValueError("wrong number of arguments")
        zz = np.asarray(z, dtype=complex)
        total = 0j
        for a, c in self.coeffs.items():
            total += complex(c) * np.prod(zz ** np.asarray(a))
        return total

    # -- JSON ----------------------------------------------------------------
    def to_json_dict(self) -> dict:
        terms = []
        for a, c in self.coeffs.items():
            if self.exact:
                ce = to_exact(c)
                re_, im_ = (ce.re, ce.im) if isinstance(ce, GaussianRational) else (ce, Fraction(0))
                terms.append({"alpha": list(a), "re": str(re_), "im": str(im_)})
            else:
                terms.append({"alpha": list(a), "re": repr(float(c.real)), "im": repr(float(c.imag))})
        return {"d": self.d, "n": self.n, "mode": self.scalar_mode, "coeffs": terms}

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "HomogeneousPolynomial":
        d, n = int(obj["d"]), int(obj["n"])
        mode = obj.get("mode")
        terms = obj.get("coeffs", [])
        if mode is None:
            mode = "exact" if all(_is_rational_text(t["re"]) and _is_rational_text(t.get("im", "0"))
                                  for t in terms) else "float"
        coeffs = {}
        for t in terms:
            alpha = tuple(t["alpha"])
            re_, im_ = str(t["re"]), str(t.get("im", "0"))
            if mode == "exact":
                coeffs[alpha] = GaussianRational(Fraction(re_), Fraction(im_)).simplify()
            else:
                coeffs[alpha] = complex(float(re_), float(im_))
        return cls(d, n, coeffs, exact=(mode == "exact"))


_RATIONAL_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


def _is_rational_text(s: str) -> bool:
    return bool(_RATIONAL_RE.match(str(s).strip()))


def monomial(alpha: Sequence[int], coeff: Any = 1) -> HomogeneousPolynomial:
    alpha = tuple(alpha)
    return HomogeneousPolynomial(len(alpha), sum(alpha), {alpha: coeff})


# -- parsing -------------------------------------------------------------------

class ParseError(ValueError):
    pass


class MixedDegreeError(ParseError):
    pass


class VariableIndexError(ParseError):
    pass


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+/\d+|\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)i?)
  | (?P<imag>i)
  | (?P<var>z(?P<idx>\d+))
  | (?P<pow>\^|\*\*)
  | (?P<star>\*)
  | (?P<sign>[+-])
  | (?P<lpar>\()
  | (?P<rpar>\))
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r} at position {pos}")
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(0)))
        pos = m.end()
    return toks


def _literal(tok: str, exact: bool):
    imag = tok.endswith("i")
    body = tok[:-1] if imag else tok
    if exact:
        val: Any = Fraction(body) if body else Fraction(1)
        return GaussianRational(0, val) if imag else val
    val = float(Fraction(body)) if "/" in body else float(body or "1")
    return complex(0, val) if imag else complex(val)


class _Parser:
    def __init__(self, text: str, d: int, exact: bool):
        self.toks = _tokenize(text)
        self.pos = 0
        self.d = d
        self.exact = exact

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def one(self):
        return Fraction(1) if self.exact else 1 + 0j

    def parse(self) -> dict[MultiIndex, Any]:
        if not self.toks:
            raise ParseError("empty polynomial")
        terms: dict[MultiIndex, Any] = {}
        first = True
        while self.pos < len(self.toks):
            kind, val = self.peek()
            sign = 1
            if kind == "sign":
                self.take()
                sign = -1 if val == "-" else 1
            elif not first:
                raise ParseError(f"expected '+' or '-' before {val!r}")
            alpha, coef = self.term()
            coef = coef * sign
            terms[alpha] = terms.get(alpha, 0) + coef
            first = False
        return terms

    def coefficient_group(self):
        # '(' [sign] literal {sign literal} ')'
        self.take()
        total: Any = 0
        expect_sign = False
        saw = False
        while True:
            kind, val = self.take()
            if kind == "rpar":
                break
            sign = 1
            if kind == "sign":
                sign = -1 if val == "-" else 1
                kind, val = self.take()
            elif expect_sign:
                raise ParseError("expected sign inside parenthesised coefficient")
            if kind == "num":
                total = total + sign * _literal(val, self.exact)
            elif kind == "imag":
                total = total + sign * _literal("1i", self.exact)
            else:
                raise ParseError(f"unexpected token {val!r} inside coefficient")
            expect_sign = True
            saw = True
        if not saw:
            raise ParseError("empty parenthesised coefficient")
        return total

    def term(self):
        coef: Any = self.one()
        alpha = [0] * self.d
        saw_something = False
        kind, val = self.peek()
        if kind == "num":
            self.take()
            coef = _literal(val, self.exact)
            saw_something = True
        elif kind == "imag":
            self.take()
            coef = _literal("1i", self.exact)
            saw_something = True
        elif kind == "lpar":
            coef = self.coefficient_group()
            saw_something = True
        while True:
            kind, val = self.peek()
            if kind == "star":
                if not saw_something:
                    raise ParseError("'*' must follow a coefficient or variable")
                self.take()
                kind, val = self.peek()
                if kind != "var":
                    raise ParseError("'*' must be followed by a variable")
            if kind != "var":
                break
            self.take()
            idx = int(val[1:])
            if not 1 <= idx <= self.d:
                raise VariableIndexError(f"variable {val} outside z1..z{self.d}")
            e = 1
            if self.peek()[0] == "pow":
                self.take()
                k2, v2 = self.take()
                if k2 != "num" or not v2.isdigit():
                    raise ParseError("exponent must be a nonnegative integer")
                e = int(v2)
            alpha[idx - 1] += e
            saw_something = True
        if not saw_something:
            raise ParseError(f"expected a term, found {val!r}")
        kind, val = self.peek()
        if kind not in (None, "sign"):
            raise ParseError(f"unexpected token {val!r}")
        return tuple(alpha), coef


def parse_poly(text: str, d: int, mode: str = "auto", n: int | None = None) -> HomogeneousPolynomial:
    """Parse a homogeneous polynomial in z1..zd.

    Coefficients are integer, decimal or ``a/b`` literals, optionally suffixed by
    ``i``; a parenthesised sum such as ``(1/2-3i)`` is also accepted. With
    ``mode="auto"`` every literal is read exactly (decimals become their exact
    decimal fraction). ``n`` is only needed to fix the degree of the zero polynomial.
    """
    if mode not in ("auto", "exact", "float"):
        raise ValueError("mode must be auto, exact or float")
    exact = mode != "float"
    terms = _Parser(text, d, exact).parse()
    degrees = {sum(a) for a in terms}
    nonzero = {a for a, c in terms.items() if c != 0}
    if len(degrees) > 1:
        raise MixedDegreeError(f"non-homogeneous input: degrees {sorted(degrees)}")
    deg = degrees.pop() if degrees else 0
    if not nonzero and n is not None:
        deg = n
        terms = {}
    if n is not None and nonzero and deg != n:
        raise MixedDegreeError(f"polynomial has degree {deg}, expected {n}")
    return HomogeneousPolynomial(d, deg, terms, exact=exact)


def _fmt_coef(c, exact: bool) -> tuple[str, str]:
    """Return (sign, magnitude-text) with an empty magnitude meaning 1."""
    if exact:
        if isinstance(c, GaussianRational):
            if c.re == 0:
                sign = "-" if c.im < 0 else "+"
                mag = abs(c.im)
                return sign, ("" if mag == 1 else str(mag)) + "i"
            return "+", f"({c})"
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        return sign, "" if mag == 1 else str(mag)
    c = complex(c)
    if c.imag == 0:
        sign = "-" if math.copysign(1.0, c.real) < 0 else "+"
        mag = abs(c.real)
        return sign, "" if mag == 1 else repr(mag)
    if c.real == 0:
        sign = "-" if c.imag < 0 else "+"
        return sign, repr(abs(c.imag)) + "i"
    im_sign = "-" if c.imag < 0 else "+"
    return "+", f"({repr(c.real)}{im_sign}{repr(abs(c.imag))}i)"


def _fmt_monomial(alpha: MultiIndex) -> str:
    parts = []
    for j, e in enumerate(alpha, start=1):
        if e == 1:
            parts.append(f"z{j}")
        elif e > 1:
            parts.append(f"z{j}^{e}")
    return " ".join(parts)


def format_poly(p: HomogeneousPolynomial) -> str:
    if not p.coeffs:
        return "0"
    out = []
    for a, c in p.coeffs.items():
        sign, mag = _fmt_coef(c, p.exact)
        mono = _fmt_monomial(a)
        if not mono:
            body = mag or "1"
        elif mag:
            body = f"{mag} {mono}"
        else:
            body = mono
        if not out:
            out.append(("-" if sign == "-" else "") + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


# -- pairing and involution ----------------------------------------------------

def inner_product(p: HomogeneousPolynomial, q: HomogeneousPolynomial):
    """Hardy pairing sum_gamma c_gamma(p) * conj(c_gamma(q)); linear in p."""
    if p.d != q.d or p.n != q.n:
        raise ValueError("pairing needs polynomials in the same P_{d,n}")
    exact = p.exact and q.exact
    total: Any = Fraction(0) if exact else 0j
    for a, c in p.coeffs.items():
        cq = q.coeffs.get(a)
        if cq is None:
            continue
        if exact:
            total = total + c * (cq.conjugate() if isinstance(cq, GaussianRational) else cq)
        else:
            total += complex(c) * complex(cq).conjugate()
    return to_exact(total) if exact else complex(total)


def hat(p: HomogeneousPolynomial) -> HomogeneousPolynomial:
    """Conjugate every coefficient (f(z) -> conj(f(conj z)))."""
    return HomogeneousPolynomial(p.d, p.n, {a: c.conjugate() for a, c in p.coeffs.items()},
                                 exact=p.exact)


# -- named families --------------------------------------------------------------

def kvh_polynomial(d: int, t: Any) -> HomogeneousPolynomial:
    """sum z_i^2 + t * sum_{i<j} z_i z_j."""
    exact = is_exact_scalar(t)
    one = Fraction(1) if exact else 1 + 0j
    tt = to_exact(t) if exact else complex(t)
    coeffs = {}
    for i in range(d):
        a = [0] * d
        a[i] = 2
        coeffs[tuple(a)] = one
        for j in range(i + 1, d):
            b = [0] * d
            b[i] = b[j] = 1
            coeffs[tuple(b)] = tt
    return HomogeneousPolynomial(d, 2, coeffs, exact=exact)


def kernel_polynomial(d: int, n: int) -> HomogeneousPolynomial:
    """Sum of all degree-n monomials with coefficient 1."""
    return HomogeneousPolynomial(d, n, {a: Fraction(1) for a in basis(d, n)}, exact=True)


def closed_form_kvh(d: int, t: complex) -> tuple[float, float]:
    """Closed-form (Schur-Agler norm, dual norm) of kvh_polynomial(d, t)."""
    t = complex(t)
    sa = d * max(abs(1 - t / 2), abs(1 + t * (d - 1) / 2))
    dual = ((d - 1) * abs(t - 1) + abs((d - 1) * t + 1)) / d
    return float(sa), float(dual)


def homogenize(coeffs: Mapping[MultiIndex, Any], n: int) -> HomogeneousPolynomial:
    """Homogenise a polynomial given as {exponent: coefficient} to degree n.

    The new variable is placed first, so a term z^alpha of degree m becomes
    z0^(n-m) z^alpha in d+1 variables (z0 is printed as z1).
    """
    items = list(coeffs.items())
    if not items:
        raise ValueError("cannot infer the variable count of an empty polynomial")
    d = len(items[0][0])
    out = {}
    for a, c in items:
        m = sum(a)
        if m > n:
            raise ValueError(f"term of degree {m} exceeds homogenisation degree {n}")
        out[(n - m,) + tuple(a)] = c
    return HomogeneousPolynomial(d + 1, n, out)


def dehomogenize(p: HomogeneousPolynomial) -> dict[MultiIndex, Any]:
    """Set the first variable to 1."""
    if p.d < 2:
        raise ValueError("need at least two variables to dehomogenise")
    out: dict[MultiIndex, Any] = {}
    for a, c in p.coeffs.items():
        out[a[1:]] = out.get(a[1:], 0) + c
    return {a: c for a, c in out.items() if c != 0}


def random_polynomial(d: int, n: int, rng: np.random.Generator | int | None = None,
                      real: bool = False) -> HomogeneousPolynomial:
    """Standard (complex) Gaussian coefficients on every monomial."""
    rng = np.random.default_rng(rng)
    m = dim(d, n)
    if real:
        v = rng.standard_normal(m).astype(complex)
    else:
        v = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / math.sqrt(2)
    return HomogeneousPolynomial.from_vector(d, n, v, exact=False)
