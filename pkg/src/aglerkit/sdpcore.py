"""Block semidefinite programs: an immutable problem model, a modelling builder, and
solver backends behind a single :func:`solve` contract.

Standard form seen by a backend::

    maximize / minimize   <C, X> + c_free . y + const
    subject to            <A_r, X> + a_r . y = b_r      for every equality r
                          X_b PSD                       for every block b

Linear forms address block entries ``(b, i, j)`` with ``i <= j``; a coefficient
on an off-diagonal entry multiplies the single number X_ij (= X_ji), not the pair.
PSD-order constraints and complex Hermitian variables are lowered by
:class:`SdpBuilder` before a problem reaches a backend.

Complex Hermitian variables are represented by an unstructured real PSD block Y
of twice the size, decoded as X = (Y11 + Y22)/2 + i (Y21 - Y12)/2. Any PSD Y
decodes to a PSD X, and embed(X) decodes back to X, so optimal values are
unchanged. The real embedding duplicates every eigenvalue and doubles traces.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Block",
    "LinearForm",
    "Equality",
    "SdpProblem",
    "SdpSolution",
    "SdpBuilder",
    "Affine",
    "asum",
    "HermitianBlock",
    "SymmetricBlock",
    "solve",
    "embed_hermitian",
    "unembed_hermitian",
    "write_sdpa",
    "read_sdpa",
    "DEFAULT_GAP_TOL",
    "DEFAULT_FEAS_TOL",
]

DEFAULT_GAP_TOL = 1e-8
DEFAULT_FEAS_TOL = 1e-8

EntryKey = tuple[int, int, int]


@dataclass(frozen=True)
class Block:
    name: str
    size: int


@dataclass(frozen=True)
class LinearForm:
    entries: tuple[tuple[EntryKey, float], ...] = ()
    free: tuple[tuple[int, float], ...] = ()


@dataclass(frozen=True)
class Equality:
    form: LinearForm
    rhs: float


@dataclass(frozen=True)
class SdpProblem:
    blocks: tuple[Block, ...]
    free_names: tuple[str, ...]
    equalities: tuple[Equality, ...]
    objective: LinearForm
    sense: str = "max"
    objective_constant: float = 0.0

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        forms = [e.form for e in self.equalities] + [self.objective]
        nb, nf = len(self.blocks), len(self.free_names)
        for form in forms:
            for (b, i, j), c in form.entries:
                if not 0 <= b < nb:
                    raise ValueError(f"constraint references undeclared block {b}")
                if not 0 <= i <= j < self.blocks[b].size:
                    raise ValueError(f"entry ({i},{j}) invalid for block {self.blocks[b].name}")
                if isinstance(c, complex):
                    raise ValueError("problem data must be real; embed complex data first")
            for f, c in form.free:
                if not 0 <= f < nf:
                    raise ValueError(f"constraint references undeclared free variable {f}")

    @property
    def n_free(self) -> int:
        return len(self.free_names)

    def block_index(self, name: str) -> int:
        for b, blk in enumerate(self.blocks):
            if blk.name == name:
                return b
        raise KeyError(name)


@dataclass(frozen=True)
class SdpSolution:
    """Solver output after independent re-verification.

    ``status`` is "optimal" only when the equality residual and the most negative
    block eigenvalue are within feas_tol and the primal-dual gap within gap_tol.
    """

    status: str
    primal_value: float
    dual_value: float
    gap: float
    blocks: Mapping[str, np.ndarray]
    free: Mapping[str, float]
    residual: float
    min_eigenvalue: float
    iterations: int = 0
    backend: str = ""
    solver_status: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def block(self, name: str) -> np.ndarray:
        return self.blocks[name]


# -- modelling layer -------------------------------------------------------------

class Affine:
    """Affine expression in block entries and free variables (mutable scratch object)."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Mapping | None = None, const: float = 0.0):
        self.terms: dict = dict(terms) if terms else {}
        self.const = float(const)

    @staticmethod
    def lift(x: Any) -> "Affine":
        if isinstance(x, Affine):
            return x
        return Affine(const=float(x))

    def copy(self) -> "Affine":
        return Affine(self.terms, self.const)

    def __add__(self, other):
        o = Affine.lift(other)
        out = self.copy()
        for k, v in o.terms.items():
            out.terms[k] = out.terms.get(k, 0.0) + v
        out.const += o.const
        return out

    __radd__ = __add__

    def __neg__(self):
        return Affine({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-Affine.lift(other))

    def __rsub__(self, other):
        return Affine.lift(other) - self

    def __mul__(self, s):
        if isinstance(s, Affine):
            raise TypeError("products of affine expressions are not affine")
        s = float(s)
        if s == 0.0:
            return Affine()
        return Affine({k: v * s for k, v in self.terms.items()}, self.const * s)

    __rmul__ = __mul__

    def iadd_scaled(self, other: "Affine", s: float) -> "Affine":
        """In-place self += s * other; used in hot loops."""
        if s == 0.0:
            return self
        for k, v in other.terms.items():
            self.terms[k] = self.terms.get(k, 0.0) + v * s
        self.const += other.const * s
        return self

    def is_constant(self) -> bool:
        return all(v == 0.0 for v in self.terms.values())

    def form(self) -> LinearForm:
        entries, free = [], []
        for k, v in sorted(self.terms.items()):
            if v == 0.0:
                continue
            if k[0] == "X":
                entries.append(((k[1], k[2], k[3]), v))
            else:
                free.append((k[1], v))
        return LinearForm(tuple(entries), tuple(free))


def asum(items: Iterable) -> Affine:
    out = Affine()
    for it in items:
        if isinstance(it, Affine):
            out.iadd_scaled(it, 1.0)
        else:
            out.const += float(it)
    return out


@dataclass(frozen=True)
class SymmetricBlock:
    index: int
    name: str
    size: int

    def entry(self, i: int, j: int) -> Affine:
        if i > j:
            i, j = j, i
        return Affine({("X", self.index, i, j): 1.0})


@dataclass(frozen=True)
class HermitianBlock:
    """A Hermitian matrix variable on top of a real PSD block (doubled when complex)."""

    base: SymmetricBlock
    size: int
    complex: bool

    @property
    def name(self) -> str:
        return self.base.name

    def re(self, a: int, b: int) -> Affine:
        if not self.complex:
            return self.base.entry(a, b)
        m = self.size
        return 0.5 * (self.base.entry(a, b) + self.base.entry(m + a, m + b))

    def im(self, a: int, b: int) -> Affine:
        if not self.complex:
            return Affine()
        m = self.size
        return 0.5 * (self.base.entry(m + a, b) - self.base.entry(a, m + b))

    def decode(self, Y: np.ndarray) -> np.ndarray:
        return unembed_hermitian(Y) if self.complex else np.asarray(Y, dtype=float)


class SdpBuilder:
    """Incrementally assemble an :class:`SdpProblem`."""

    def __init__(self):
        self._blocks: list[Block] = []
        self._free: list[str] = []
        self._eqs: list[Equality] = []
        self._objective = Affine()
        self._sense = "max"
        self._names: set[str] = set()

    def _new_name(self, name: str) -> str:
        base, k = name, 1
        while name in self._names:
            k += 1
            name = f"{base}#{k}"
        self._names.add(name)
        return name

    def psd_block(self, name: str, size: int) -> SymmetricBlock:
        if size < 1:
            raise ValueError("block size must be positive")
        name = self._new_name(name)
        self._blocks.append(Block(name, size))
        return SymmetricBlock(len(self._blocks) - 1, name, size)

    def hermitian_block(self, name: str, size: int, complex_: bool) -> HermitianBlock:
        base = self.psd_block(name, 2 * size if complex_ else size)
        return HermitianBlock(base, size, complex_)

    def free(self, name: str) -> Affine:
        self._free.append(self._new_name(name))
        return Affine({("y", len(self._free) - 1): 1.0})

    def add_equality(self, lhs: Any, rhs: Any = 0.0) -> None:
        expr = Affine.lift(lhs) - Affine.lift(rhs)
        if expr.is_constant():
            if abs(expr.const) > 1e-12:
                raise ValueError("inconsistent constant equality")
            return
        self._eqs.append(Equality(expr.form(), -expr.const))

    def add_psd(self, M: Sequence[Sequence[Any]], name: str = "slack") -> SymmetricBlock:
        """Require the symmetric affine matrix M to be PSD (upper triangle is used)."""
        m = len(M)
        S = self.psd_block(name, m)
        for i in range(m):
            for j in range(i, m):
                self.add_equality(S.entry(i, j), M[i][j])
        return S

    def add_hermitian_psd(self, re: Sequence[Sequence[Any]], im: Sequence[Sequence[Any]] | None,
                          name: str = "slack") -> HermitianBlock:
        """Require the Hermitian affine matrix re + i*im to be PSD.

        ``re`` must be symmetric and ``im`` antisymmetric; only the upper
        triangle is read. With ``im=None`` the constraint is real.
        """
        m = len(re)
        H = self.hermitian_block(name, m, im is not None)
        for a in range(m):
            for b in range(a, m):
                self.add_equality(H.re(a, b), re[a][b])
                if im is not None and a != b:
                    self.add_equality(H.im(a, b), im[a][b])
        return H

    def maximize(self, expr: Any) -> None:
        self._objective = Affine.lift(expr)
        self._sense = "max"

    def minimize(self, expr: Any) -> None:
        self._objective = Affine.lift(expr)
        self._sense = "min"

    def build(self) -> SdpProblem:
        return SdpProblem(tuple(self._blocks), tuple(self._free), tuple(self._eqs),
                          self._objective.form(), self._sense, self._objective.const)


# -- complex embedding ------------------------------------------------------------

def embed_hermitian(H: Any, tol: float = 1e-12) -> np.ndarray:
    """[[Re H, -Im H], [Im H, Re H]]: PSD iff H is; each eigenvalue of H appears twice."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(H).max()) if H.size else 1.0)
    if np.abs(H - H.conj().T).max(initial=0.0) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    R, I = H.real, H.imag
    return np.block([[R, -I], [I, R]])


def unembed_hermitian(Y: Any) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    m = Y.shape[0] // 2
    Y11, Y12, Y21, Y22 = Y[:m, :m], Y[:m, m:], Y[m:, :m], Y[m:, m:]
    return 0.5 * (Y11 + Y22) + 0.5j * (Y21 - Y12)


# -- solving ----------------------------------------------------------------------

def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("AGLERKIT_THREADS", "1")))
    except ValueError:
        return 1


def _layout(prob: SdpProblem):
    """Column index of every block entry (svec order) and free variable."""
    col: dict[EntryKey, int] = {}
    k = 0
    for b, blk in enumerate(prob.blocks):
        for j in range(blk.size):
            for i in range(j + 1):
                col[(b, i, j)] = k
                k += 1
    return col, k, k + prob.n_free


def _unpack(prob: SdpProblem, x_entries: Mapping[EntryKey, float] | np.ndarray, col) -> dict:
    blocks = {}
    for b, blk in enumerate(prob.blocks):
        X = np.zeros((blk.size, blk.size))
        for j in range(blk.size):
            for i in range(j + 1):
                X[i, j] = X[j, i] = x_entries[col[(b, i, j)]]
        blocks[blk.name] = X
    return blocks


def _evaluate(form: LinearForm, blocks: list[np.ndarray], y: np.ndarray) -> float:
    total = 0.0
    for (b, i, j), c in form.entries:
        total += c * blocks[b][i, j]
    for f, c in form.free:
        total += c * y[f]
    return total


def _verify(prob: SdpProblem, blocks: dict, y: np.ndarray, primal: float, dual: float,
            gap_tol: float, feas_tol: float, solver_ok: bool):
    blist = [blocks[b.name] for b in prob.blocks]
    residual = max((abs(_evaluate(e.form, blist, y) - e.rhs) for e in prob.equalities), default=0.0)
    min_eig = min((float(np.linalg.eigvalsh(B)[0]) for B in blist), default=0.0)
    gap = abs(primal - dual)
    ok = solver_ok and residual <= feas_tol and min_eig >= -feas_tol and gap <= gap_tol
    return residual, min_eig, gap, ok


def _solve_clarabel(prob: SdpProblem, gap_tol: float, feas_tol: float, max_iter: int,
                    threads: int, inner: float = 1e-2, overrides: Mapping | None = None):
    import clarabel
    from scipy import sparse

    col, nent, nvar = _layout(prob)
    r2 = math.sqrt(2.0)

    def scaled(form: LinearForm):
        out = []
        for (b, i, j), c in form.entries:
            out.append((col[(b, i, j)], c if i == j else c / r2))
        for f, c in form.free:
            out.append((nent + f, c))
        return out

    rows, cols, vals, rhs = [], [], [], []
    r = 0
    for eq in prob.equalities:
        for cidx, v in scaled(eq.form):
            rows.append(r)
            cols.append(cidx)
            vals.append(v)
        rhs.append(eq.rhs)
        r += 1
    n_eq = r
    cones = []
    if n_eq:
        cones.append(clarabel.ZeroConeT(n_eq))
    for b, blk in enumerate(prob.blocks):
        for j in range(blk.size):
            for i in range(j + 1):
                rows.append(r)
                cols.append(col[(b, i, j)])
                vals.append(-1.0)
                rhs.append(0.0)
                r += 1
        cones.append(clarabel.PSDTriangleConeT(blk.size))
    A = sparse.csc_matrix((vals, (rows, cols)), shape=(r, nvar))
    b = np.asarray(rhs, dtype=float)
    qvec = np.zeros(nvar)
    for cidx, v in scaled(prob.objective):
        qvec[cidx] += v
    sign = -1.0 if prob.sense == "max" else 1.0
    qvec *= sign
    P = sparse.csc_matrix((nvar, nvar))

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_gap_abs = gap_tol * inner
    settings.tol_gap_rel = gap_tol * inner
    settings.tol_feas = feas_tol * inner
    settings.max_threads = threads
    for key, val in (overrides or {}).items():
        setattr(settings, key, val)
    solver = clarabel.DefaultSolver(P, qvec, A, b, cones, settings)
    sol = solver.solve()
    x = np.asarray(sol.x)
    entries = x[:nent].copy()
    for (bb, i, j), cidx in col.items():
        if i != j:
            entries[cidx] /= r2
    blocks = _unpack(prob, entries, col)
    y = x[nent:]
    primal = float(sign * sol.obj_val + prob.objective_constant)
    dual = float(sign * sol.obj_val_dual + prob.objective_constant)
    status = str(sol.status).split(".")[-1]
    return blocks, y, primal, dual, status, int(sol.iterations)


def _solve_cvxopt(prob: SdpProblem, gap_tol: float, feas_tol: float, max_iter: int):
    import cvxopt
    from cvxopt import solvers

    col, nent, nvar = _layout(prob)
    c = np.zeros(nvar)
    for (b, i, j), v in prob.objective.entries:
        c[col[(b, i, j)]] += v
    for f, v in prob.objective.free:
        c[nent + f] += v
    sign = -1.0 if prob.sense == "max" else 1.0
    c *= sign
    Gs, hs = [], []
    for b, blk in enumerate(prob.blocks):
        m = blk.size
        G = np.zeros((m * m, nvar))
        for j in range(m):
            for i in range(j + 1):
                k = col[(b, i, j)]
                G[i + j * m, k] = -1.0
                G[j + i * m, k] = -1.0
        Gs.append(cvxopt.matrix(G))
        hs.append(cvxopt.matrix(np.zeros((m, m))))
    A = np.zeros((len(prob.equalities), nvar))
    bvec = np.zeros(len(prob.equalities))
    for r, eq in enumerate(prob.equalities):
        for (b, i, j), v in eq.form.entries:
            A[r, col[(b, i, j)]] += v
        for f, v in eq.form.free:
            A[r, nent + f] += v
        bvec[r] = eq.rhs
    opts = {"show_progress": False, "abstol": gap_tol * 1e-2, "reltol": gap_tol * 1e-2,
            "feastol": feas_tol * 1e-2, "maxiters": max_iter}
    res = solvers.sdp(cvxopt.matrix(c), Gs=Gs, hs=hs, A=cvxopt.matrix(A), b=cvxopt.matrix(bvec),
                      options=opts)
    x = np.asarray(res["x"]).ravel() if res["x"] is not None else np.zeros(nvar)
    blocks = _unpack(prob, x[:nent], col)
    y = x[nent:]
    primal = sign * float(res["primal objective"]) + prob.objective_constant
    dual = sign * float(res["dual objective"]) + prob.objective_constant
    status = {"optimal": "Solved"}.get(res["status"], res["status"])
    return blocks, y, primal, dual, status, int(res.get("iterations", 0))


# Tight inner tolerances first; on some degenerate instances Clarabel stalls there and
# returns a reduced-accuracy point, so retry at the requested tolerances. Every
# attempt is re-verified independently of the solver's own status.
_CLARABEL_ATTEMPTS = (
    {},
    {"inner": 1.0},
    {"inner": 1.0, "overrides": {"equilibrate_enable": False}},
)

_INFEASIBLE = {"PrimalInfeasible", "AlmostPrimalInfeasible", "primal infeasible"}
_UNBOUNDED = {"DualInfeasible", "AlmostDualInfeasible", "dual infeasible"}


def solve(prob: SdpProblem, gap_tol: float = DEFAULT_GAP_TOL, feas_tol: float = DEFAULT_FEAS_TOL,
          backend: str = "clarabel", max_iter: int = 200, threads: int | None = None) -> SdpSolution:
    """Solve and re-verify. Never returns status "optimal" for an unverified point.

    The gap test is absolute up to |value| = 1 and relative beyond, i.e. the
    reported optimum carries about -log10(gap_tol) significant digits.
    """
    threads = _default_threads() if threads is None else threads
    if backend == "clarabel":
        attempts = _CLARABEL_ATTEMPTS
    elif backend == "cvxopt":
        attempts = ({},)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    for attempt in attempts:
        if backend == "clarabel":
            blocks, y, primal, dual, sstatus, iters = _solve_clarabel(prob, gap_tol, feas_tol,
                                                                      max_iter, threads, **attempt)
        else:
            blocks, y, primal, dual, sstatus, iters = _solve_cvxopt(prob, gap_tol, feas_tol, max_iter)
        scale = max(1.0, abs(primal))
        if sstatus in _INFEASIBLE:
            status = "infeasible"
            residual, min_eig, gap = math.inf, math.nan, math.inf
        elif sstatus in _UNBOUNDED:
            status = "unbounded"
            residual, min_eig, gap = math.nan, math.nan, math.inf
        else:
            solver_ok = sstatus in ("Solved", "AlmostSolved")
            residual, min_eig, gap, ok = _verify(prob, blocks, y, primal, dual, gap_tol * scale,
                                                 feas_tol * scale, solver_ok)
            status = "optimal" if ok else "numerical-failure"
        if status != "numerical-failure":
            break
    free = {name: float(y[f]) for f, name in enumerate(prob.free_names)}
    return SdpSolution(status, primal, dual, gap, blocks, free, residual, min_eig, iters,
                       backend, sstatus)


# -- SDPA-style dump ------------------------------------------------------------------

def write_sdpa(prob: SdpProblem) -> str:
    """Sparse SDPA text for external cross-validation.

    The problem becomes the SDPA dual form max <F0, Y> s.t. <F_r, Y> = c_r, Y PSD.
    Free variables are split as y = u - v into a trailing diagonal block of size
    2*n_free; a minimisation is written with F0 = -C. The header comment records
    sense and objective constant so :func:`read_sdpa` can restore the problem.
    """
    nb = len(prob.blocks)
    nf = prob.n_free
    sizes = [blk.size for blk in prob.blocks] + ([-2 * nf] if nf else [])
    lines = [f"* aglerkit sdpa sense={prob.sense} constant={prob.objective_constant!r}"]
    lines.append(str(len(prob.equalities)))
    lines.append(str(len(sizes)))
    lines.append(" ".join(str(s) for s in sizes))
    lines.append(" ".join(repr(float(e.rhs)) for e in prob.equalities) or "")

    def emit(matno: int, form: LinearForm, sign: float):
        for (b, i, j), c in form.entries:
            v = c if i == j else c / 2.0
            lines.append(f"{matno} {b + 1} {i + 1} {j + 1} {sign * v!r}")
        for f, c in form.free:
            lines.append(f"{matno} {nb + 1} {f + 1} {f + 1} {sign * c!r}")
            lines.append(f"{matno} {nb + 1} {nf + f + 1} {nf + f + 1} {-sign * c!r}")

    emit(0, prob.objective, 1.0 if prob.sense == "max" else -1.0)
    for r, eq in enumerate(prob.equalities, start=1):
        emit(r, eq.form, 1.0)
    return "\n".join(lines) + "\n"


def read_sdpa(text: str) -> SdpProblem:
    """Inverse of :func:`write_sdpa` (free variables come back as a diagonal PSD block)."""
    sense, const = "max", 0.0
    body = []
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("*"):
            for tok in s.split():
                if tok.startswith("sense="):
                    sense = tok.split("=", 1)[1]
                elif tok.startswith("constant="):
                    const = float(tok.split("=", 1)[1])
            continue
        if s or len(body) == 3:
            body.append(s)
    m = int(body[0])
    nblocks = int(body[1])
    sizes = [int(t) for t in body[2].replace(",", " ").replace("{", " ").replace("}", " ").split()]
    assert len(sizes) == nblocks
    rhs = [float(t) for t in body[3].split()] if m else []
    blocks = tuple(Block(f"block{b + 1}", abs(sz)) for b, sz in enumerate(sizes))
    forms: list[dict] = [dict() for _ in range(m + 1)]
    for s in body[4:]:
        if not s:
            continue
        matno, blk, i, j, v = s.split()
        b, i, j = int(blk) - 1, int(i) - 1, int(j) - 1
        if i > j:
            i, j = j, i
        v = float(v)
        coef = v if i == j else 2.0 * v
        key = (b, i, j)
        forms[int(matno)][key] = forms[int(matno)].get(key, 0.0) + coef
    eqs = []
    for r in range(1, m + 1):
        eqs.append(Equality(LinearForm(tuple(sorted(forms[r].items()))), rhs[r - 1]))
    obj_sign = 1.0 if sense == "max" else -1.0
    obj = LinearForm(tuple(sorted((k, obj_sign * v) for k, v in forms[0].items())))
    # diagonal blocks must stay diagonal
    for b, sz in enumerate(sizes):
        if sz < 0:
            for i in range(abs(sz)):
                for j in range(i + 1, abs(sz)):
                    eqs.append(Equality(LinearForm((((b, i, j), 1.0),)), 0.0))
    return SdpProblem(blocks, (), tuple(eqs), obj, sense, const)
