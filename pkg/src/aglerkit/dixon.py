"""Dixon-type polynomials: signed sums of square-free monomials z^A over a family of
n-subsets A with pairwise intersections smaller than t = r + 1 (n = 2r + 1).

For such a family the graded operator with identity blocks up to degree r and
the Hankel Gram matrices of p above r is a cone element with L_0 = 1 and top
block p p^*. It shows ||p||_* = 1 (the coefficients are +-1, so the dual norm
is also at least 1) and hence ||p||_SA >= ||p||_2^2 = N, the family size.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .certify import (GradedOperator, MembershipReport, certified_dual_upper_bound_sq,
                      certified_sa_lower_bound_sq, check_cone_membership, coefficient_lower_bound)
from .linops import gamma_star_gamma
from .norms import sup_norm
from .polycore import HomogeneousPolynomial, dim

__all__ = ["DixonResult", "greedy_family", "dixon_size_bound", "dixon_construct"]


@dataclass(frozen=True)
class DixonResult:
    d: int
    r: int
    family: tuple[tuple[int, ...], ...]
    signs: tuple[int, ...]
    p: HomogeneousPolynomial
    L: GradedOperator
    N: int
    membership: MembershipReport
    dual_norm_sq: Any
    sa_lower_bound_sq: Any
    sup_estimate: float
    size_bound: float

    @property
    def ratio(self) -> float:
        """N over the sup-norm estimate (the estimate is a lower bound, so this may overshoot)."""
        return self.N / self.sup_estimate


def greedy_family(d: int, n: int, t: int) -> list[tuple[int, ...]]:
    """Scan n-subsets of {1..d} in lexicographic order, keeping each one that meets every
    kept subset in fewer than t points."""
    chosen: list[tuple[int, ...]] = []
    sets: list[set] = []
    for A in itertools.combinations(range(1, d + 1), n):
        sA = set(A)
        if all(len(sA & B) < t for B in sets):
            chosen.append(A)
            sets.append(sA)
    return chosen


def dixon_size_bound(d: int, r: int) -> float:
    n, t = 2 * r + 1, r + 1
    return math.comb(d, n) / (math.comb(d, n - t) * math.comb(n, t))


def _exponent(A, d: int) -> tuple[int, ...]:
    return tuple(1 if j + 1 in A else 0 for j in range(d))


def _polynomial(family, signs, d: int, n: int) -> HomogeneousPolynomial:
    return HomogeneousPolynomial(d, n, {_exponent(A, d): Fraction(s) for A, s in zip(family, signs)},
                                 exact=True)


def _sign_candidates(N: int, strategy: str, seed: int, trials: int, max_exhaustive: int):
    if strategy == "exhaustive" and N <= max_exhaustive:
        # the first sign is fixed: p and -p have the same norms
        rest = np.array(list(itertools.product((1, -1), repeat=N - 1)), dtype=np.int8)
        rest = rest.reshape(2 ** (N - 1), N - 1)
        return np.hstack([np.ones((len(rest), 1), dtype=np.int8), rest])
    rng = np.random.default_rng(seed)
    S = rng.choice(np.array([1, -1], dtype=np.int8), size=(trials, N))
    S[:, 0] = 1
    return np.unique(S, axis=0)[::-1]


def dixon_construct(d: int, r: int, sign_strategy: str = "exhaustive", seed: int = 0,
                    trials: int = 256, max_exhaustive: int = 20, proxy_points: int = 2048,
                    refine: int = 4) -> DixonResult:
    """Build the family greedily, choose signs with small sup norm, and certify.

    Sign vectors are ranked by max |p| over ``proxy_points`` seeded torus points;
    the best ``refine`` are re-estimated with :func:`norms.sup_norm` and the smallest
    estimate wins, ties going to the lexicographically smallest sign vector.
    ``sign_strategy="exhaustive"`` falls back to seeded random search when the
    family has more than ``max_exhaustive`` members.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if sign_strategy not in ("exhaustive", "random"):
        raise ValueError("sign_strategy must be 'exhaustive' or 'random'")
    n, t = 2 * r + 1, r + 1
    if d < n:
        raise ValueError(f"need d >= 2r+1 = {n}, got d={d}")
    family = greedy_family(d, n, t)
    if not family:
        raise RuntimeError(f"no admissible family for d={d}, r={r}")
    N = len(family)

    signs_all = _sign_candidates(N, sign_strategy, seed, trials, max_exhaustive)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, 2 * np.pi, size=(proxy_points, d))
    theta[:, 0] = 0.0
    expo = np.array([_exponent(A, d) for A in family], dtype=float)
    mono = np.exp(1j * theta @ expo.T)                      # points x N
    proxy = np.empty(len(signs_all))
    chunk = max(1, (1 << 22) // proxy_points)
    for s in range(0, len(signs_all), chunk):
        vals = np.abs(mono @ signs_all[s:s + chunk].T.astype(float))
        proxy[s:s + chunk] = vals.max(axis=0)
    order = np.lexsort((np.arange(len(proxy)), proxy))[:refine]
    best = None
    for j in order:
        sv = tuple(int(x) for x in signs_all[j])
        est = sup_norm(_polynomial(family, sv, d, n).to_float()).value
        key = (round(est, 9), sv)
        if best is None or key < best[0]:
            best = (key, sv, est)
    _, signs, sup_est = best

    p = _polynomial(family, signs, d, n)
    blocks = [np.eye(dim(d, j), dtype=int).astype(object) for j in range(r + 1)]
    blocks = [np.vectorize(Fraction, otypes=[object])(B) for B in blocks]
    blocks += [gamma_star_gamma(p, j) for j in range(r + 1, n + 1)]
    L = GradedOperator(d, n, blocks, exact=True)
    report = check_cone_membership(L, "exact")
    if not report.ok:
        raise RuntimeError("Dixon certificate failed exact membership; the family is not admissible")
    dual_sq = certified_dual_upper_bound_sq(L, p)
    if not dual_sq <= 1 or coefficient_lower_bound(p) != 1:
        raise RuntimeError("Dixon certificate does not pin the dual norm to 1")
    sa_sq = certified_sa_lower_bound_sq(L, p)
    return DixonResult(d, r, tuple(family), tuple(signs), p, L, N, report, dual_sq, sa_sq,
                       float(sup_est), dixon_size_bound(d, r))
