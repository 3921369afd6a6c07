"""Classical counterexamples to the von Neumann inequality in three variables,
as exact graded operators together with the operator tuples that realise them.

Each fixture bundles the polynomial p being tested, the companion polynomial q
(whose dual norm the certificate controls), the exact certificate L and a map of
expected exact values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction as F
from typing import Any, Mapping

import numpy as np

from .certify import GradedOperator, outer
from .exact import exact_matrix
from .polycore import HomogeneousPolynomial, basis, basis_order, kvh_polynomial, parse_poly

__all__ = ["Fixture", "fixture", "FIXTURE_NAMES", "fixture_tuple", "tuple_l_operator",
           "kaijser_varopoulos", "crabb_davie_polynomial"]

FIXTURE_NAMES = ("vk", "crabb_davie", "holbrook", "tto")


@dataclass(frozen=True)
class Fixture:
    name: str
    p: HomogeneousPolynomial
    q: HomogeneousPolynomial
    L: GradedOperator
    expected: Mapping[str, Any] = field(default_factory=dict)
    top_scale: Any = 1


def kaijser_varopoulos() -> HomogeneousPolynomial:
    return kvh_polynomial(3, -2)


def crabb_davie_polynomial() -> HomogeneousPolynomial:
    return parse_poly("z1 z2 z3 - z1^3 - z2^3 - z3^3", 3)


def _identity(m: int) -> np.ndarray:
    return exact_matrix(np.eye(m, dtype=int))


def _scalar(x) -> np.ndarray:
    return exact_matrix([[x]])


def _gram_of(polys) -> np.ndarray:
    """Sum of v v^* over coefficient vectors of the given polynomials."""
    total = None
    for f in polys:
        term = outer(f.vector(exact=True), True)
        total = term if total is None else exact_matrix(total + term)
    return total


def _vk() -> Fixture:
    p = kaijser_varopoulos()
    q = kvh_polynomial(3, -1)
    L2 = exact_matrix(outer(q.vector(exact=True), True) * F(1, 3))
    L = GradedOperator(3, 2, [_scalar(1), _identity(3), L2], exact=True)
    expected = {"bound_sq": F(27), "sup_norm": 5, "tuple_norm_sq": F(27), "pairing_pq": F(9)}
    return Fixture("vk", p, q, L, expected, top_scale=F(1, 3))


def _crabb_davie() -> Fixture:
    p = crabb_davie_polynomial()
    L2 = _gram_of([p.shift_adjoint(i) for i in (1, 2, 3)])
    L3 = outer(p.vector(exact=True), True)
    L = GradedOperator(3, 3, [_scalar(1), _identity(3), L2, L3], exact=True)
    expected = {"bound_sq": F(16), "bound": 4, "dual_sq": F(1), "norm2_sq": F(4), "p_T_xi": 4}
    return Fixture("crabb_davie", p, p, L, expected)


def _holbrook() -> Fixture:
    p = kaijser_varopoulos()
    q = kvh_polynomial(3, F(-1, 2))
    L1 = exact_matrix([[F(1) if a == b else F(-1, 2) for b in range(3)] for a in range(3)])
    L2 = outer(q.vector(exact=True), True)
    L = GradedOperator(3, 2, [_scalar(1), L1, L2], exact=True)
    expected = {"dual_sq": F(1), "bound_sq": F(36), "bound": 6, "pairing_pq": F(6),
                "A0_sq": F(15, 4), "A1": F(3, 2), "A1_sq": F(9, 4), "B0_sq": F(3, 2),
                "B1_sq": F(3, 2), "C0_sq": F(2, 5), "C1_sq": F(2, 3), "q_norm2_sq": F(15, 4)}
    return Fixture("holbrook", p, q, L, expected)


# Toeplitz-truncation operator, written in the order z1^2, z2^2, z3^2, z1z2, z1z3, z2z3.
_TTO_ORDER = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)]
_TTO_L2 = [
    ["1", "7/10", "7/10", "-1/5", "-1/5", "-4/5"],
    ["7/10", "1", "7/10", "-1/5", "-4/5", "-1/5"],
    ["7/10", "7/10", "1", "-4/5", "-1/5", "-1/5"],
    ["-1/5", "-1/5", "-4/5", "1", "-1/5", "-1/5"],
    ["-1/5", "-4/5", "-1/5", "-1/5", "1", "-1/5"],
    ["-4/5", "-1/5", "-1/5", "-1/5", "-1/5", "1"],
]
_TTO_L1 = [["1", "-1/5", "-1/5"], ["-1/5", "1", "-1/5"], ["-1/5", "-1/5", "1"]]


def _reorder(M, labels, d: int, k: int) -> np.ndarray:
    order = basis_order(d, k)
    perm = [labels.index(a) for a in order.monomials]
    E = exact_matrix([[F(x) for x in row] for row in M])
    return E[np.ix_(perm, perm)]


def _tto() -> Fixture:
    p = kaijser_varopoulos()
    q = kvh_polynomial(3, F(-1, 2))
    L2 = _reorder(_TTO_L2, _TTO_ORDER, 3, 2)
    L1 = exact_matrix([[F(x) for x in row] for row in _TTO_L1])
    L = GradedOperator(3, 2, [_scalar(1), L1, L2], exact=True)
    expected = {"Lpp": F(144, 5), "L0": F(1), "sup_norm": 5,
                "L2_eigenvalues": (F(0), F(0), F(0), F(3, 2), F(3, 2), F(3)),
                "dual_tto_scale": F(5, 4)}
    return Fixture("tto", p, q, L, expected)


_BUILDERS = {"vk": _vk, "crabb_davie": _crabb_davie, "holbrook": _holbrook, "tto": _tto}


def fixture(name: str) -> Fixture:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}") from None


# -- operator tuples ---------------------------------------------------------------------

def _vk_tuple():
    s = 1 / math.sqrt(3)
    T = []
    for i in range(3):
        M = np.zeros((5, 5))
        M[i + 1, 0] = 1.0
        row = [-s, -s, -s]
        row[i] = s
        M[4, 1:4] = row
        T.append(M)
    return T, np.eye(5)[0]


def _crabb_davie_tuple():
    maps = [
        {1: (2, 1), 2: (5, -1), 5: (8, 1), 3: (7, 1), 4: (6, 1)},
        {1: (3, 1), 3: (6, -1), 6: (8, 1), 2: (7, 1), 4: (5, 1)},
        {1: (4, 1), 4: (7, -1), 7: (8, 1), 2: (6, 1), 3: (5, 1)},
    ]
    T = []
    for mp in maps:
        M = np.zeros((8, 8))
        for src, (dst, sign) in mp.items():
            M[dst - 1, src - 1] = sign
        T.append(M)
    return T, np.eye(8)[0]


def _holbrook_tuple():
    e, h = np.eye(4)[0], np.eye(4)[3]
    r = math.sqrt(3) / 2
    fs = [np.array([0, 1.0, 0, 0]), np.array([0, -0.5, r, 0]), np.array([0, -0.5, -r, 0])]
    T = [np.outer(f, e) + np.outer(h, f) for f in fs]
    return T, e


_TUPLES = {"vk": _vk_tuple, "crabb_davie": _crabb_davie_tuple, "holbrook": _holbrook_tuple}


def fixture_tuple(name: str):
    """(list of commuting contractions, unit vector xi) realising the fixture, or None."""
    if name == "tto":
        return None
    if name not in _TUPLES:
        raise ValueError(f"unknown fixture {name!r}")
    return _TUPLES[name]()


def tuple_l_operator(T, xi, n: int) -> GradedOperator:
    """Graded operator with L_k[a, b] = <T^b xi, T^a xi>, |a| = |b| = k.

    For a commuting tuple of contractions this lies in the cone and
    <L_n p, p> = ||p(T) xi||^2.
    """
    d = len(T)
    T = [np.asarray(t, dtype=complex) for t in T]
    xi = np.asarray(xi, dtype=complex)
    blocks = []
    for k in range(n + 1):
        cols = []
        for alpha in basis(d, k):
            v = xi.copy()
            for i in reversed(range(d)):
                for _ in range(alpha[i]):
                    v = T[i] @ v
            cols.append(v)
        V = np.stack(cols, axis=1)
        blocks.append(V.conj().T @ V)
    return GradedOperator(d, n, blocks, exact=False)
