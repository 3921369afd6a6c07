"""Norms of homogeneous polynomials computed by semidefinite programming, plus the
supremum norm on the torus and a randomized lower-bound oracle.

For p in P_{d,n} the Schur-Agler norm satisfies

    ||p||_SA^2 = max  p^* L_n p
                 s.t. L_k >= 0,  S_i^* L_k S_i <= L_{k-1}  (1 <= k <= n, 1 <= i <= d),
                      L_0 <= 1,

and the dual norm is ||q||_*^2 = min L_0 over the same chain with L_n = q q^*.
Real inputs use real variables (taking real parts of a complex optimiser stays
feasible and keeps the objective); complex inputs use the Hermitian lowering
of :mod:`sdpcore`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import optimize

from . import sdpcore
from .certify import (CertificateError, GradedOperator, certified_dual_upper_bound_sq,
                      certified_sa_lower_bound_sq, repair_certificate)
from .linops import shift_matrix
from .polycore import HomogeneousPolynomial, basis, basis_order, dim
from .sdpcore import Affine, SdpBuilder, asum

__all__ = [
    "NormResult",
    "SolverFailure",
    "sa_norm",
    "dual_sa_norm",
    "weak_product_norm",
    "weak_product_dual",
    "z_weak_product_norm",
    "z_weak_product_primal",
    "triple_norm_1",
    "triple_norm_2",
    "sup_norm",
    "ratio",
    "sampled_lower_bound",
    "evaluate_on_tuple",
    "KINDS",
]

KINDS = ("sdp-optimal", "certified-lower", "certified-upper", "sampled-lower", "grid-estimate")


@dataclass(frozen=True)
class NormResult:
    value: float
    kind: str
    gap: float = 0.0
    certificate: Any = None
    details: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown result kind {self.kind!r}")

    def __float__(self):
        return float(self.value)


class SolverFailure(RuntimeError):
    def __init__(self, status: str, message: str = ""):
        super().__init__(message or f"SDP solver failed with status {status!r}")
        self.status = status


def _require_nonzero(p: HomogeneousPolynomial):
    if p.is_zero():
        raise ValueError("the zero polynomial has norm 0; a nonzero input is required")


def _check(sol: sdpcore.SdpSolution) -> sdpcore.SdpSolution:
    if not sol.ok:
        raise SolverFailure(sol.status, f"SDP solver status {sol.status} "
                                        f"({sol.solver_status}, gap={sol.gap:.3g}, "
                                        f"residual={sol.residual:.3g})")
    return sol


class _ConstHerm:
    """Constant Hermitian matrix exposing the re/im accessor protocol of HermitianBlock."""

    def __init__(self, M: np.ndarray):
        self.M = np.asarray(M, dtype=complex)
        self.size = self.M.shape[0]

    def re(self, a, b):
        return Affine(const=float(self.M[a, b].real))

    def im(self, a, b):
        return Affine(const=float(self.M[a, b].imag))


def _compression_chain(builder: SdpBuilder, blocks: Sequence, d: int, complex_: bool):
    """Add L_{k-1} - S_i^* L_k S_i >= 0 for every k >= 1 and i."""
    n = len(blocks) - 1
    for k in range(1, n + 1):
        lo, hi = blocks[k - 1], blocks[k]
        m = dim(d, k - 1)
        for i in range(1, d + 1):
            idx = shift_matrix(d, k - 1, i).rows
            re = [[lo.re(a, b) - hi.re(idx[a], idx[b]) for b in range(m)] for a in range(m)]
            im = None
            if complex_:
                im = [[lo.im(a, b) - hi.im(idx[a], idx[b]) for b in range(m)] for a in range(m)]
            builder.add_hermitian_psd(re, im, name=f"chain{k}_{i}")


def _decode_blocks(sol, handles) -> list[np.ndarray]:
    out = []
    for h in handles:
        if isinstance(h, _ConstHerm):
            out.append(h.M)
        else:
            out.append(h.decode(sol.block(h.name)))
    return out


def _quadratic_objective(H, v: np.ndarray) -> Affine:
    """Re v^* X v as an affine form in the Hermitian variable X."""
    m = len(v)
    obj = Affine()
    for a in range(m):
        if v[a] == 0:
            continue
        obj.iadd_scaled(H.re(a, a), abs(v[a]) ** 2)
        for b in range(a + 1, m):
            if v[b] == 0:
                continue
            w = np.conj(v[a]) * v[b]
            obj.iadd_scaled(H.re(a, b), 2 * w.real)
            if getattr(H, "complex", False):
                obj.iadd_scaled(H.im(a, b), -2 * w.imag)
    return obj


def _constant_poly_norm(p: HomogeneousPolynomial) -> float:
    return abs(complex(next(iter(p.coeffs.values()))))


def sa_norm(p: HomogeneousPolynomial, tol: float = sdpcore.DEFAULT_GAP_TOL,
            feas_tol: float = sdpcore.DEFAULT_FEAS_TOL, certify: bool = False,
            backend: str = "clarabel") -> NormResult:
    """Schur-Agler norm by the graded-cone SDP.

    With ``certify=True`` the optimiser is rounded to an exact cone element, verified
    in rational arithmetic, and the exact lower bound it proves is returned
    (kind "certified-lower"); otherwise the SDP value (kind "sdp-optimal").
    """
    _require_nonzero(p)
    d, n = p.d, p.n
    if n == 0:
        v = _constant_poly_norm(p)
        L = GradedOperator(d, 0, [np.ones((1, 1))], exact=False)
        return NormResult(v, "sdp-optimal", 0.0, L, {"value_sq": v * v})
    complex_ = not p.is_real()
    b = SdpBuilder()
    blocks = [b.hermitian_block(f"L{k}", dim(d, k), complex_ and k > 0) for k in range(n + 1)]
    b.add_psd([[1.0 - blocks[0].re(0, 0)]], name="normalisation")
    _compression_chain(b, blocks, d, complex_)
    b.maximize(_quadratic_objective(blocks[n], p.vector(exact=False)))
    sol = _check(sdpcore.solve(b.build(), tol, feas_tol, backend=backend))
    L = GradedOperator(d, n, _decode_blocks(sol, blocks), exact=False, herm_tol=1e-6)
    value_sq = sol.primal_value
    details = {"value_sq": float(value_sq), "dual_value_sq": float(sol.dual_value),
               "iterations": sol.iterations, "residual": float(sol.residual)}
    if certify:
        exact_L = repair_certificate(L)
        bound_sq = certified_sa_lower_bound_sq(exact_L, p.to_exact())
        details = dict(details, sdp_value=math.sqrt(max(value_sq, 0.0)), bound_sq=str(bound_sq))
        return NormResult(math.sqrt(float(bound_sq)), "certified-lower", sol.gap, exact_L, details)
    return NormResult(math.sqrt(max(value_sq, 0.0)), "sdp-optimal", sol.gap, L, details)


def dual_sa_norm(q: HomogeneousPolynomial, tol: float = sdpcore.DEFAULT_GAP_TOL,
                 feas_tol: float = sdpcore.DEFAULT_FEAS_TOL, certify: bool = False,
                 backend: str = "clarabel") -> NormResult:
    """Dual Schur-Agler norm; the top block is pinned to q q^*.

    With ``certify=True`` the optimiser is repaired into an exact certificate and
    the exact upper bound it proves is returned (kind "certified-upper").
    """
    _require_nonzero(q)
    d, n = q.d, q.n
    if n == 0:
        v = _constant_poly_norm(q)
        L = GradedOperator(d, 0, [np.full((1, 1), v * v)], exact=False)
        return NormResult(v, "sdp-optimal", 0.0, L, {"value_sq": v * v})
    complex_ = not q.is_real()
    qv = q.vector(exact=False)
    b = SdpBuilder()
    blocks: list = [b.hermitian_block(f"L{k}", dim(d, k), complex_ and k > 0) for k in range(n)]
    blocks.append(_ConstHerm(np.outer(qv, qv.conj())))
    _compression_chain(b, blocks, d, complex_)
    b.minimize(blocks[0].re(0, 0))
    sol = _check(sdpcore.solve(b.build(), tol, feas_tol, backend=backend))
    L = GradedOperator(d, n, _decode_blocks(sol, blocks), exact=False, herm_tol=1e-6)
    value_sq = sol.primal_value
    details = {"value_sq": float(value_sq), "dual_value_sq": float(sol.dual_value),
               "iterations": sol.iterations, "residual": float(sol.residual)}
    if certify:
        exact_L = repair_certificate(L, q=q)
        bound_sq = certified_dual_upper_bound_sq(exact_L, q.to_exact())
        details = dict(details, sdp_value=math.sqrt(max(value_sq, 0.0)), bound_sq=str(bound_sq))
        return NormResult(math.sqrt(float(bound_sq)), "certified-upper", sol.gap, exact_L, details)
    return NormResult(math.sqrt(max(value_sq, 0.0)), "sdp-optimal", sol.gap, L, details)


# -- weak products -----------------------------------------------------------------------

def _coefficient_variables(b: SdpBuilder, d: int, n: int, complex_: bool):
    re, im = {}, {}
    for g in basis(d, n):
        re[g] = b.free(f"re{g}")
        im[g] = b.free(f"im{g}") if complex_ else Affine()
    return re, im


def _nuclear_block(b: SdpBuilder, rows: int, cols: int, complex_: bool, name: str):
    """Hermitian [[W1, A], [A^*, W2]] >= 0; returns (handle, accessor for A, trace/2)."""
    H = b.hermitian_block(name, rows + cols, complex_)
    half_trace = asum(H.re(a, a) for a in range(rows + cols)) * 0.5

    def A(a, c):
        return H.re(a, rows + c), H.im(a, rows + c)

    return H, A, half_trace


def weak_product_norm(p: HomogeneousPolynomial, k: int, tol: float = sdpcore.DEFAULT_GAP_TOL,
                      feas_tol: float = sdpcore.DEFAULT_FEAS_TOL, cross_check: bool = True,
                      backend: str = "clarabel") -> NormResult:
    """Norm of p in P_k (.) P_{n-k}: minimal nuclear norm of a representing matrix.

    The representing matrix A (rows P_k, columns P_{n-k}) satisfies
    sum_{alpha+beta=gamma} A[alpha, beta] = c_gamma(p). With ``cross_check`` the dual
    SDP over Hankel matrices is solved as well and the two values must agree to 10*tol.
    """
    _require_nonzero(p)
    d, n = p.d, p.n
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    complex_ = not p.is_real()
    rows_b, cols_b = basis(d, k), basis(d, n - k)
    b = SdpBuilder()
    H, A, half_trace = _nuclear_block(b, len(rows_b), len(cols_b), complex_, "W")
    sums_re: dict = {g: Affine() for g in basis(d, n)}
    sums_im: dict = {g: Affine() for g in basis(d, n)}
    for a, alpha in enumerate(rows_b):
        for c, beta in enumerate(cols_b):
            g = tuple(x + y for x, y in zip(alpha, beta))
            r, i = A(a, c)
            sums_re[g].iadd_scaled(r, 1.0)
            if complex_:
                sums_im[g].iadd_scaled(i, 1.0)
    for g in basis(d, n):
        c = complex(p.coefficient(g))
        b.add_equality(sums_re[g], c.real)
        if complex_:
            b.add_equality(sums_im[g], c.imag)
    b.minimize(half_trace)
    sol = _check(sdpcore.solve(b.build(), tol, feas_tol, backend=backend))
    value = sol.primal_value
    details: dict = {"k": k, "iterations": sol.iterations}
    if cross_check:
        dual = weak_product_dual(p, k, tol, feas_tol, backend)
        details["dual_value"] = dual.value
        details["dual_certificate"] = dual.certificate
        if abs(dual.value - value) > 10 * tol * max(1.0, abs(value)):
            raise SolverFailure("numerical-failure",
                                f"weak-product primal {value!r} and dual {dual.value!r} disagree")
    Z = H.decode(sol.block("W"))
    rep = Z[: len(rows_b), len(rows_b):]
    return NormResult(value, "sdp-optimal", sol.gap, rep, details)


def _hankel_lmi(b: SdpBuilder, qre, qim, d: int, n: int, k: int, complex_: bool, name: str,
                shift: int | None = None):
    """||Gamma_q on P_k|| <= 1 (or of M_{z_shift}^* Gamma_q) as [[I, H], [H^*, I]] >= 0."""
    src = basis(d, k)
    if shift is None:
        dst = basis(d, n - k)
        offset = (0,) * d
    else:
        dst = basis(d, n - k - 1)
        offset = tuple(int(j == shift - 1) for j in range(d))
    r, c = len(dst), len(src)
    m = r + c
    re = [[Affine() for _ in range(m)] for _ in range(m)]
    im = [[Affine() for _ in range(m)] for _ in range(m)] if complex_ else None
    for a in range(m):
        re[a][a] = Affine(const=1.0)
    for x, beta in enumerate(dst):
        for y, alpha in enumerate(src):
            g = tuple(p1 + p2 + o for p1, p2, o in zip(alpha, beta, offset))
            re[x][r + y] = qre[g]
            re[r + y][x] = qre[g]
            if complex_:
                im[x][r + y] = qim[g]
                im[r + y][x] = -qim[g]
    b.add_hermitian_psd(re, im, name=name)


def _pairing_objective(p: HomogeneousPolynomial, qre, qim, complex_: bool) -> Affine:
    # Re <p, q> = sum Re(c_p) Re(c_q) + Im(c_p) Im(c_q)
    obj = Affine()
    for g, c in p.coeffs.items():
        c = complex(c)
        obj.iadd_scaled(qre[g], c.real)
        if complex_:
            obj.iadd_scaled(qim[g], c.imag)
    return obj


def _q_from(sol, b_names, d, n, complex_) -> HomogeneousPolynomial:
    coeffs = {}
    for g in basis(d, n):
        v = sol.free[f"re{g}"]
        if complex_:
            v = complex(v, sol.free[f"im{g}"])
        coeffs[g] = complex(v)
    return HomogeneousPolynomial(d, n, coeffs, exact=False)


def weak_product_dual(p: HomogeneousPolynomial, k: int, tol: float = sdpcore.DEFAULT_GAP_TOL,
                      feas_tol: float = sdpcore.DEFAULT_FEAS_TOL,
                      backend: str = "clarabel") -> NormResult:
    """max Re <p, q> subject to ||Gamma_q restricted to P_k|| <= 1."""
    _require_nonzero(p)
    d, n = p.d, p.n
    complex_ = not p.is_real()
    b = SdpBuilder()
    qre, qim = _coefficient_variables(b, d, n, complex_)
    _hankel_lmi(b, qre, qim, d, n, k, complex_, "hankel")
    b.maximize(_pairing_objective(p, qre, qim, complex_))
    sol = _check(sdpcore.solve(b.build(), tol, feas_tol, backend=backend))
    q = _q_from(sol, None, d, n, complex_)
    return NormResult(sol.primal_value, "sdp-optimal", sol.gap, q, {"k": k})


def z_weak_product_norm(p: HomogeneousPolynomial, k: int, tol: float = sdpcore.DEFAULT_GAP_TOL,
                        feas_tol: float = sdpcore.DEFAULT_FEAS_TOL,
                        backend: str = "clarabel") -> NormResult:
    """Norm of p in Z (.) P_k (.) P_{n-k-1} through its Hankel dual:
    max Re <p, q> subject to ||Gamma_q M_{z_i} on P_k|| <= 1 for every i."""
    _require_nonzero(p)
    d, n = p.d, p.n
    if not 0 <= k <= n - 1:
        raise ValueError(f"k={k} outside 0..{n - 1}")
    complex_ = not p.is_real()
    b = SdpBuilder()
    qre, qim = _coefficient_variables(b, d, n, complex_)
    for i in range(1, d + 1):
        _hankel_lmi(b, qre, qim, d, n, k, complex_, f"hankel{i}", shift=i)
    b.maximize(_pairing_objective(p, qre, qim, complex_))
    sol = _check(sdpcore.solve(b.build(), tol, feas_tol, backend=backend))
    q = _q_from(sol, None, d, n, complex_)
    return NormResult(sol.primal_value, "sdp-optimal", sol.gap, q, {"k": k})


def z_weak_product_primal(p: HomogeneousPolynomial, k: int, tol: float = sdpcore.DEFAULT_GAP_TOL,
                          feas_tol: float = sdpcore.DEFAULT_FEAS_TOL,
                          backend: str = "clarabel") -> NormResult:
    """Primal form: min sum_i ||f_i||_{P_k (.) P_{n-k-1}} over p = sum_i z_i f_i.

    One nuclear-norm block per variable; block i represents f_i by a matrix with
    rows P_k and columns P_{n-k-1}.
    """
    _require_nonzero(p)
    d, n = p.d, p.n
    if not 0 <= k <= n - 1:
        raise ValueError(f"k={k} outside 0..{n - 1}")
    complex_ = not p.is_real()
    rows_b, cols_b = basis(d, k), basis(d, n - k - 1)
    b = SdpBuilder()
    sums_re: dict = {g: Affine() for g in basis(d, n)}
    sums_im: dict = {g: Affine() for g in basis(d, n)}
    total = Affine()
    for i in range(1, d + 1):
        _, A, half_trace = _nuclear_block(b, len(rows_b), len(cols_b), complex_, f"W{i}")
        total.iadd_scaled(half_trace, 1.0)
        for a, alpha in enumerate(rows_b):
            for c, beta in enumerate(cols_b):
                g = tuple(x + y + int(j == i - 1) for j, (x, y) in enumerate(zip(alpha, beta)))
                r, im_ = A(a, c)
                sums_re[g].iadd_scaled(r, 1.0)
                if complex_:
                    sums_im[g].iadd_scaled(im_, 1.0)
    for g in basis(d, n):
        c = complex(p.coefficient(g))
        b.add_equality(sums_re[g], c.real)
        if complex_:
            b.add_equality(sums_im[g], c.imag)
    b.minimize(total)
    sol = _check(sdpcore.solve(b.build(), tol, feas_tol, backend=backend))
    return NormResult(sol.primal_value, "sdp-optimal", sol.gap, None, {"k": k})


def triple_norm_1(p: HomogeneousPolynomial, tol: float = sdpcore.DEFAULT_GAP_TOL,
                  cross_check: bool = True) -> NormResult:
    """max_k ||p||_{P_k (.) P_{n-k}}; only k <= n/2 is solved since k and n-k agree."""
    _require_nonzero(p)
    if p.n == 0:
        return NormResult(_constant_poly_norm(p), "sdp-optimal", 0.0, None, {"per_k": {0: None}})
    per_k = {}
    gaps = []
    for k in range(p.n // 2 + 1):
        r = weak_product_norm(p, k, tol, cross_check=cross_check)
        per_k[k] = r.value
        per_k[p.n - k] = r.value
        gaps.append(r.gap)
    best = max(per_k, key=lambda k: (per_k[k], -k))
    return NormResult(per_k[best], "sdp-optimal", max(gaps), None,
                      {"per_k": dict(sorted(per_k.items())), "argmax_k": best})


def triple_norm_2(p: HomogeneousPolynomial, tol: float = sdpcore.DEFAULT_GAP_TOL,
                  cross_check: bool | None = False) -> NormResult:
    """max_k of the Z (.) P_k (.) P_{n-k-1} norms via their Hankel duals.

    k and n-1-k give the same value (transpose), so only k <= (n-1)/2 is solved.
    ``cross_check=None`` turns the primal cross-check on for n <= 3.
    """
    _require_nonzero(p)
    n = p.n
    if n == 0:
        return NormResult(_constant_poly_norm(p), "sdp-optimal", 0.0, None, {"per_k": {}})
    if cross_check is None:
        cross_check = n <= 3
    per_k = {}
    gaps = []
    for k in range((n - 1) // 2 + 1):
        r = z_weak_product_norm(p, k, tol)
        if cross_check:
            prim = z_weak_product_primal(p, k, tol)
            if abs(prim.value - r.value) > 10 * tol * max(1.0, abs(r.value)):
                raise SolverFailure("numerical-failure",
                                    f"Z-weak-product primal {prim.value!r} and dual {r.value!r} disagree")
        per_k[k] = r.value
        per_k[n - 1 - k] = r.value
        gaps.append(r.gap)
    best = max(per_k, key=lambda k: (per_k[k], -k))
    return NormResult(per_k[best], "sdp-optimal", max(gaps), None,
                      {"per_k": dict(sorted(per_k.items())), "argmax_k": best})


# -- supremum norm -------------------------------------------------------------------------

def _exponent_data(p: HomogeneousPolynomial):
    alphas = np.array(list(p.coeffs.keys()), dtype=float)
    coeffs = np.array([complex(c) for c in p.coeffs.values()], dtype=complex)
    return alphas, coeffs


def _values(alphas, coeffs, theta: np.ndarray) -> np.ndarray:
    """p at (1, e^{i theta_2}, ..., e^{i theta_d}) for rows of theta (shape N x (d-1))."""
    phase = theta @ alphas[:, 1:].T
    return np.exp(1j * phase) @ coeffs


def sup_norm(p: HomogeneousPolynomial, grid_per_dim: int = 64, refine_tol: float = 1e-12,
             max_points: int = 2**18, ascent_steps: int = 200, starts: int = 8,
             seed: int = 0) -> NormResult:
    """max |p| on the torus, estimated from below.

    Homogeneity removes one phase, so the search runs over T^{d-1}: a regular grid
    of ``grid_per_dim`` points per axis (or ``max_points`` seeded uniform samples
    when the grid would be larger), followed by BFGS ascent from the best
    ``starts`` points. Every returned value is attained at a point, hence a lower
    bound of the true supremum.
    """
    _require_nonzero(p)
    d = p.d
    alphas, coeffs = _exponent_data(p)
    if d == 1 or p.n == 0:
        return NormResult(float(abs(coeffs).sum()) if d == 1 else float(abs(coeffs[0])),
                          "grid-estimate", 0.0, None, {"resolution": 0.0, "sampling": "exact"})
    m = d - 1
    step = 2 * math.pi / grid_per_dim
    if grid_per_dim ** m <= max_points:
        axes = [np.arange(grid_per_dim) * step] * m
        sampling = "grid"
    else:
        axes = None
        sampling = "random"
    rng = np.random.default_rng(seed)
    best_pts: list[tuple[float, np.ndarray]] = []
    chunk = 1 << 15

    def consider(theta):
        vals = np.abs(_values(alphas, coeffs, theta))
        take = min(starts, len(vals))
        idx = np.argpartition(-vals, take - 1)[:take]
        for j in idx:
            best_pts.append((float(vals[j]), theta[j].copy()))
        best_pts.sort(key=lambda t: -t[0])
        del best_pts[starts:]

    if axes is not None:
        total = grid_per_dim ** m
        for start in range(0, total, chunk):
            ids = np.arange(start, min(total, start + chunk))
            digits = np.stack([(ids // grid_per_dim ** j) % grid_per_dim for j in range(m)], axis=1)
            consider(digits * step)
    else:
        for start in range(0, max_points, chunk):
            cnt = min(chunk, max_points - start)
            consider(rng.uniform(0, 2 * math.pi, size=(cnt, m)))

    A1 = alphas[:, 1:]

    def neg_sq(theta):
        e = np.exp(1j * (A1 @ theta)) * coeffs
        val = e.sum()
        grad_terms = 1j * (A1.T @ e)
        g = -2 * np.real(np.conj(val) * grad_terms)
        return -abs(val) ** 2, g

    best_val, best_theta = best_pts[0]
    for _, th in best_pts:
        res = optimize.minimize(neg_sq, th, jac=True, method="BFGS",
                                options={"maxiter": ascent_steps, "gtol": refine_tol})
        v = math.sqrt(max(-float(res.fun), 0.0))
        if v > best_val:
            best_val, best_theta = v, np.mod(res.x, 2 * math.pi)
    point = np.concatenate([[1.0 + 0j], np.exp(1j * best_theta)])
    return NormResult(best_val, "grid-estimate", 0.0, None,
                      {"resolution": step if sampling == "grid" else None, "sampling": sampling,
                       "argmax": [[float(z.real), float(z.imag)] for z in point]})


def ratio(p: HomogeneousPolynomial, tol: float = sdpcore.DEFAULT_GAP_TOL) -> float:
    """||p||_SA / ||p||_inf (the sup norm is estimated from below, so this may overshoot
    the true ratio by the sup-norm estimation error)."""
    return sa_norm(p, tol).value / sup_norm(p).value


# -- randomized oracle ------------------------------------------------------------------------

def _random_psd_batch(rng: np.random.Generator, batch: int, m: int, p_vec: np.ndarray,
                      complex_: bool) -> np.ndarray:
    ranks = np.where(rng.random(batch) < 0.5, 1, rng.integers(1, m + 1, size=batch))
    G = rng.standard_normal((batch, m, m))
    if complex_:
        G = G + 1j * rng.standard_normal((batch, m, m))
    mask = np.arange(m)[None, None, :] < ranks[:, None, None]
    G = G * mask
    # bias some samples towards the direction of p
    mix = rng.random(batch) < 0.5
    sigma = np.exp(rng.uniform(np.log(0.01), np.log(3.0), size=batch))
    u = p_vec / np.linalg.norm(p_vec)
    if not complex_:
        u = u.real
    G[mix, :, 0] = u[None, :] + sigma[mix, None] * G[mix, :, 0] / math.sqrt(m)
    return G @ np.conj(np.swapaxes(G, 1, 2))


def _smallest_dominating_scale(C: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Per batch element, the least s with s*M >= C_i for all i (C has shape B x d x m x m)."""
    w, U = np.linalg.eigh(M)
    top = w[:, -1:]
    keep = w > 1e-12 * np.maximum(top, 1e-300)
    inv_sqrt = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)), 0.0)
    W = U * inv_sqrt[:, None, :]
    Wh = np.conj(np.swapaxes(W, 1, 2))
    s = np.zeros(M.shape[0])
    for i in range(C.shape[1]):
        K = Wh @ C[:, i] @ W
        K = 0.5 * (K + np.conj(np.swapaxes(K, 1, 2)))
        s = np.maximum(s, np.linalg.eigvalsh(K)[:, -1])
    return s


def sampled_lower_bound(p: HomogeneousPolynomial, trials: int = 10_000, seed: int = 0,
                        batch: int = 1000, strategy: str = "scaled") -> NormResult:
    """Largest sqrt(<L_n p, p> / L_0) over random cone elements built top-down.

    L_n is a random PSD matrix of random rank. Going down, the compressions
    C_i = S_i^* L_k S_i are combined into L_{k-1}: ``strategy="sum"`` uses the plain
    sum of the C_i; the default ``"scaled"`` uses s * sum(C_i) with the least s such
    that s * sum(C_i) >= C_i for every i. Both satisfy every compression inequality
    by construction; the scaled version is never larger than the sum and reaches far
    better bounds on degree-two examples.
    """
    _require_nonzero(p)
    if trials < 1:
        raise ValueError("trials must be positive")
    if strategy not in ("scaled", "sum"):
        raise ValueError("strategy must be 'scaled' or 'sum'")
    d, n = p.d, p.n
    pv = p.vector(exact=False)
    complex_ = not p.is_real()
    if n == 0:
        return NormResult(_constant_poly_norm(p), "sampled-lower", 0.0, None, {"trials": trials})
    rng = np.random.default_rng(seed)
    idx = [None] + [[list(shift_matrix(d, k - 1, i).rows) for i in range(1, d + 1)]
                   for k in range(1, n + 1)]
    best = -1.0
    best_top = None
    done = 0
    while done < trials:
        B = min(batch, trials - done)
        Ln = _random_psd_batch(rng, B, len(pv), pv, complex_)
        num = np.real(np.einsum("a,bac,c->b", pv.conj(), Ln, pv))
        L = Ln
        for k in range(n, 0, -1):
            C = np.stack([L[:, r][:, :, r] for r in idx[k]], axis=1)
            M = C.sum(axis=1)
            if strategy == "scaled":
                M = M * _smallest_dominating_scale(C, M)[:, None, None]
            L = M
        den = np.real(L[:, 0, 0])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio_sq = np.where(den > 0, num / den, 0.0)
        j = int(np.argmax(ratio_sq))
        if ratio_sq[j] > best:
            best = float(ratio_sq[j])
            best_top = Ln[j]
        done += B
    return NormResult(math.sqrt(max(best, 0.0)), "sampled-lower", 0.0, None,
                      {"trials": trials, "seed": seed, "strategy": strategy, "value_sq": best})


def evaluate_on_tuple(p: HomogeneousPolynomial, T: Sequence[np.ndarray],
                      commute_tol: float = 1e-10) -> float:
    """||p(T_1, ..., T_d)|| for a commuting tuple of square matrices."""
    if len(T) != p.d:
        raise ValueError(f"expected {p.d} matrices, got {len(T)}")
    T = [np.asarray(t, dtype=complex) for t in T]
    size = T[0].shape
    if any(t.ndim != 2 or t.shape != size or size[0] != size[1] for t in T):
        raise ValueError("matrices must be square and of equal size")
    for a, b in itertools.combinations(range(len(T)), 2):
        if np.abs(T[a] @ T[b] - T[b] @ T[a]).max() > commute_tol:
            raise ValueError(f"T{a + 1} and T{b + 1} do not commute")
    N = size[0]
    total = np.zeros((N, N), dtype=complex)
    for alpha, c in p.coeffs.items():
        term = np.eye(N, dtype=complex)
        for i, e in enumerate(alpha):
            if e:
                term = term @ np.linalg.matrix_power(T[i], e)
        total += complex(c) * term
    return float(np.linalg.norm(total, 2))
