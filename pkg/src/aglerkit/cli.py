"""Command-line front end.

    aglerkit norm sa --poly "z1^2 + z2^2 + z3^2 - 2 z1 z2 - 2 z1 z3 - 2 z2 z3" --d 3
    aglerkit bounds --poly "..." --exact --verify
    aglerkit fixture tto --verify
    aglerkit dixon --d 7 --r 1
    aglerkit kvh-scan --d 3 --format csv
    aglerkit kvh-scan --d 2 --t=-1/2,1+i --with-sup

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 verification failure.
Documents are JSON with sorted keys and a schema tag; every number sits next to a
``kind`` naming how it was obtained. No timings are emitted, so repeated runs with
the same arguments give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Sequence

from . import bounds as _bounds
from . import norms, sdpcore
from .certify import (CertificateError, GradedOperator, certified_dual_upper_bound_sq,
                      certified_sa_lower_bound_sq, check_cone_membership, check_top_block)
from .dixon import dixon_construct
from .exact import charpoly
from .fixtures import FIXTURE_NAMES, fixture
from .linops import constant_sq_exact
from .polycore import ParseError, closed_form_kvh, format_poly, kvh_polynomial, parse_poly

__all__ = ["run", "main", "build_parser", "kvh_scan", "OUTPUT_SCHEMA"]

OUTPUT_SCHEMA = "aglerkit.cli/1"

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class VerificationFailure(Exception):
    def __init__(self, message: str, doc: dict | None = None):
        super().__init__(message)
        self.doc = doc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("AGLERKIT_THREADS", "1")))
    except ValueError:
        return 1


# -- argument plumbing -----------------------------------------------------------------------

def _add_poly_args(p: argparse.ArgumentParser, required: bool = True):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--poly", help="polynomial text, e.g. \"z1^2 - 2 z1 z2\"")
    src.add_argument("--poly-file", help="file holding the polynomial text")
    p.add_argument("--d", type=int, help="number of variables (default: largest index used)")
    p.add_argument("--exact", action="store_true",
                   help="parse coefficients as rationals and certify results exactly")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--tol", type=float, default=sdpcore.DEFAULT_GAP_TOL, help="SDP gap tolerance")
    p.add_argument("--feas-tol", type=float, default=sdpcore.DEFAULT_FEAS_TOL,
                   help="SDP feasibility tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "text", "csv"), default="json")
    p.add_argument("--output", help="write the document here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="aglerkit", description="Schur-Agler norms, bounds and certificates")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("norm", help="compute a norm")
    p.add_argument("which", choices=("sa", "dual", "sup", "wp", "t1", "t2"))
    _add_poly_args(p)
    _add_common(p)
    p.add_argument("--k", type=int, help="split degree for the weak-product norm")
    p.add_argument("--grid", type=int, default=64, help="sup norm grid points per axis")
    p.add_argument("--certificate", help="write the norm certificate JSON here (sa, dual)")

    p = sub.add_parser("bounds", help="constructive dual-norm upper bounds")
    _add_poly_args(p)
    _add_common(p)
    p.add_argument("--method", choices=("1", "2", "3", "4", "all", "best"), default="all")
    p.add_argument("--k", type=int, help="level for methods 1, 2 and 4 (default: every level)")
    p.add_argument("--verify", action="store_true", help="re-check every certificate")
    p.add_argument("--certificate", help="write the best certificate JSON here")

    p = sub.add_parser("certify", help="verify a certificate file against a polynomial")
    _add_poly_args(p)
    _add_common(p)
    p.add_argument("--certificate", required=True, help="certificate JSON to verify")
    p.add_argument("--target", choices=("sa", "dual"), default="sa",
                   help="sa: lower bound for ||p||_SA; dual: upper bound for ||p||_*")

    p = sub.add_parser("fixture", help="exact classical examples")
    p.add_argument("name", choices=FIXTURE_NAMES)
    _add_common(p)
    p.add_argument("--verify", action="store_true", help="check membership and expected values")
    p.add_argument("--certificate", help="write the fixture certificate JSON here")

    p = sub.add_parser("dixon", help="certified Dixon-type instances")
    _add_common(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--strategy", choices=("exhaustive", "random"), default="exhaustive")
    p.add_argument("--trials", type=int, default=256)
    p.add_argument("--certificate", help="write the certificate JSON here")

    p = sub.add_parser("kvh-scan", help="SDP versus closed forms on the KVH family")
    _add_common(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t", action="append",
                   help="comma-separated parameter values, e.g. --t=-2,-1/2,1+i (default -2..2 step 1/2)")
    p.add_argument("--with-sup", action="store_true", help="also estimate the sup norm")
    return ap


_VAR = re.compile(r"z(\d+)")


def _read_poly(args):
    text = args.poly
    if text is None:
        try:
            with open(args.poly_file, encoding="utf-8") as fh:
                text = fh.read().strip()
        except OSError as exc:
            raise UsageError(f"cannot read {args.poly_file}: {exc}") from None
    d = args.d
    if d is None:
        idx = [int(m) for m in _VAR.findall(text)]
        if not idx:
            raise UsageError("cannot infer the number of variables; pass --d")
        d = max(idx)
    try:
        return parse_poly(text, d, mode="exact" if args.exact else "auto")
    except ParseError as exc:
        raise UsageError(str(exc)) from None


def _write_certificate(path: str | None, L: GradedOperator, source: str, claims: dict) -> str | None:
    if not path:
        return None
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(L.to_json(source, claims))
        fh.write("\n")
    return path


def _num(x) -> Any:
    """JSON form of a number: floats as is, rationals as "num/den" strings."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "re") and hasattr(x, "im"):
        return str(x)
    if isinstance(x, (int, float)):
        return x
    return float(x)


def _poly_doc(p) -> dict:
    return {"text": format_poly(p), "d": p.d, "n": p.n, "mode": p.scalar_mode}


# -- subcommands -----------------------------------------------------------------------------

def _cmd_norm(args) -> dict:
    p = _read_poly(args)
    certify = args.exact and args.which in ("sa", "dual")
    w = args.which
    if w == "sa":
        r = norms.sa_norm(p, args.tol, args.feas_tol, certify=certify)
    elif w == "dual":
        r = norms.dual_sa_norm(p, args.tol, args.feas_tol, certify=certify)
    elif w == "sup":
        r = norms.sup_norm(p, grid_per_dim=args.grid, seed=args.seed)
    elif w == "wp":
        if args.k is None:
            raise UsageError("norm wp needs --k")
        if not 0 <= args.k <= p.n:
            raise UsageError(f"--k must lie in 0..{p.n}")
        r = norms.weak_product_norm(p, args.k, args.tol, args.feas_tol)
    elif w == "t1":
        r = norms.triple_norm_1(p, args.tol)
    else:
        r = norms.triple_norm_2(p, args.tol)
    doc = {"command": "norm", "norm": w, "polynomial": _poly_doc(p),
           "value": r.value, "kind": r.kind, "gap": r.gap}
    if r.kind in ("certified-lower", "certified-upper"):
        doc["bound_sq"] = r.details.get("bound_sq")
        doc["sdp_value"] = r.details.get("sdp_value")
    if w in ("t1", "t2") and "per_k" in r.details:
        doc["per_k"] = {str(k): v for k, v in r.details["per_k"].items()}
    if w == "sup":
        doc["sampling"] = r.details.get("sampling")
    if args.certificate:
        if w not in ("sa", "dual") or r.certificate is None:
            raise UsageError("--certificate is available for norm sa and norm dual")
        claims = {"value": r.value, "kind": r.kind}
        doc["certificate"] = _write_certificate(args.certificate, r.certificate, "sdp", claims)
    return doc


def _cmd_bounds(args) -> dict:
    q = _read_poly(args)
    exact = True if args.exact else None
    try:
        if args.method in ("all", "best"):
            cands = _bounds.all_bounds(q, exact)
            if args.k is not None:
                cands = [b for b in cands if b.k is None or b.k == args.k]
        elif args.method == "3":
            cands = [_bounds.method3(q, exact)]
        else:
            fn = {"1": _bounds.method1, "2": _bounds.method2, "4": _bounds.method4}[args.method]
            ks = [args.k] if args.k is not None else range(q.n)
            cands = [fn(q, k, exact) for k in ks]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    best = min(cands, key=lambda b: b.value)
    if args.method == "best":
        cands = [best]
    rows = []
    failed = []
    for b in cands:
        row = {"method": b.method, "k": b.k, "value": b.value, "value_sq": _num(b.value_sq),
               "exact": b.exact}
        if args.verify:
            ok = b.verify(q)
            row["verified"] = ok
            if not ok:
                failed.append((b.method, b.k))
        row["kind"] = "certified-upper" if b.exact and (not args.verify or row["verified"]) \
            else "float-upper"
        rows.append(row)
    doc = {"command": "bounds", "polynomial": _poly_doc(q), "bounds": rows,
           "best": {"method": best.method, "k": best.k, "value": best.value,
                    "value_sq": _num(best.value_sq)}}
    if args.certificate:
        claims = {"dual_norm_upper_sq": _num(best.value_sq)}
        doc["certificate"] = _write_certificate(args.certificate, best.certificate,
                                                f"method{best.method}", claims)
    if failed:
        raise VerificationFailure(f"certificate check failed for {failed}", doc)
    return doc


def _cmd_certify(args) -> dict:
    p = _read_poly(args)
    try:
        with open(args.certificate, encoding="utf-8") as fh:
            L = GradedOperator.from_json(fh.read())
    except CertificateError as exc:
        raise VerificationFailure(f"malformed certificate: {exc}") from None
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot load certificate: {exc}") from None
    if (L.d, L.n) != (p.d, p.n):
        raise UsageError(f"certificate is for d={L.d}, n={L.n}; polynomial has d={p.d}, n={p.n}")
    report = check_cone_membership(L)
    doc = {"command": "certify", "polynomial": _poly_doc(p), "target": args.target,
           "mode": L.scalar_mode, "membership": report.ok}
    if not report.ok:
        doc["failures"] = [str(f) for f in report.failures()]
        raise VerificationFailure("certificate is not in the cone", doc)
    pp = p.to_exact() if L.exact else p
    try:
        if args.target == "sa":
            v = certified_sa_lower_bound_sq(L, pp)
            doc.update(value=float(v) ** 0.5, value_sq=_num(v), kind="certified-lower")
        else:
            v = certified_dual_upper_bound_sq(L, pp)
            doc.update(value=float(v) ** 0.5, value_sq=_num(v), kind="certified-upper")
    except CertificateError as exc:
        doc["error"] = str(exc)
        raise VerificationFailure(str(exc), doc) from None
    return doc


def _poly_from_roots(roots) -> list:
    """Coefficients [c_0, ..., c_n] of prod (x - r)."""
    c = [Fraction(1)]
    for r in roots:
        c = [-r * c[0]] + [c[j - 1] - r * c[j] for j in range(1, len(c))] + [c[-1]]
    return c


def _fixture_checks(name: str, fx) -> list[tuple[str, Any, Any]]:
    """(label, computed, expected) triples, all exact."""
    L, p, q, e = fx.L, fx.p, fx.q, fx.expected
    out = []
    if name == "vk":
        out.append(("bound^2 = <L2 p,p>/<L0 1,1>", certified_sa_lower_bound_sq(L, p), e["bound_sq"]))
        out.append(("top block = (1/3) q q^*", check_top_block(L, q, scale=fx.top_scale), True))
    elif name == "crabb_davie":
        out.append(("bound^2 = <L3 p,p>/<L0 1,1>", certified_sa_lower_bound_sq(L, p), e["bound_sq"]))
        out.append(("||p||_*^2 upper", certified_dual_upper_bound_sq(L, p), e["dual_sq"]))
    elif name == "holbrook":
        out.append(("||q||_*^2 upper", certified_dual_upper_bound_sq(L, q), e["dual_sq"]))
        for key, kind, k in (("A0_sq", "A", 0), ("A1_sq", "A", 1), ("B0_sq", "B", 0),
                             ("C0_sq", "C", 0), ("C1_sq", "C", 1)):
            out.append((f"{kind}{k}^2", constant_sq_exact(kind, q, k), e[key]))
    elif name == "tto":
        out.append(("<Lp,p>", L.quadratic(p), e["Lpp"]))
        out.append(("<L0 1,1>", L.L0, e["L0"]))
        eig = tuple(e["L2_eigenvalues"])
        # the multiset is confirmed by matching det(xI - L2) against prod (x - lambda)
        cp = charpoly(L.blocks[2])
        out.append(("L2 eigenvalue multiset", eig if cp == _poly_from_roots(eig) else tuple(cp), eig))
    return out


def _cmd_fixture(args) -> dict:
    fx = fixture(args.name)
    doc = {"command": "fixture", "name": args.name, "p": _poly_doc(fx.p), "q": _poly_doc(fx.q),
           "expected": {k: ([_num(x) for x in v] if isinstance(v, tuple) else _num(v))
                        for k, v in fx.expected.items()}}
    if args.verify:
        report = check_cone_membership(fx.L, "exact")
        checks = []
        ok = report.ok
        for label, got, want in _fixture_checks(args.name, fx):
            good = got == want
            ok = ok and good
            checks.append({"check": label, "ok": good, "kind": "exact",
                           "value": [_num(x) for x in got] if isinstance(got, (list, tuple)) else _num(got)})
        doc["membership"] = report.ok
        doc["checks"] = checks
        doc["verified"] = ok
        if not ok:
            raise VerificationFailure(f"fixture {args.name} failed verification", doc)
    if args.certificate:
        doc["certificate"] = _write_certificate(args.certificate, fx.L, f"fixture:{args.name}",
                                                doc["expected"])
    return doc


def _cmd_dixon(args) -> dict:
    try:
        R = dixon_construct(args.d, args.r, args.strategy, seed=args.seed, trials=args.trials)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {"command": "dixon", "d": R.d, "r": R.r, "N": R.N,
           "family": [list(A) for A in R.family], "signs": list(R.signs),
           "polynomial": _poly_doc(R.p), "membership": R.membership.ok,
           "dual_norm_sq": {"value": _num(R.dual_norm_sq), "kind": "certified-upper"},
           "sa_lower_bound_sq": {"value": _num(R.sa_lower_bound_sq), "kind": "certified-lower"},
           "sup_estimate": {"value": R.sup_estimate, "kind": "grid-estimate"},
           "ratio": {"value": R.ratio, "kind": "estimate"},
           "size_bound": R.size_bound}
    if args.certificate:
        doc["certificate"] = _write_certificate(args.certificate, R.L, "dixon",
                                                {"sa_lower_bound_sq": _num(R.sa_lower_bound_sq)})
    return doc


def _parse_t(s: str):
    s = s.strip().replace(" ", "")
    try:
        return Fraction(s)
    except ValueError:
        pass
    try:
        return complex(s.replace("i", "j") if "j" not in s else s)
    except ValueError:
        raise UsageError(f"bad parameter value {s!r}") from None


DEFAULT_T_GRID = tuple(Fraction(k, 2) for k in range(-4, 5))


def kvh_scan(d: int, t_grid: Sequence = DEFAULT_T_GRID, tol: float = sdpcore.DEFAULT_GAP_TOL,
             with_sup: bool = False, threads: int | None = None) -> list[dict]:
    """One row per t: SDP and closed-form SA and dual norms, with deviations."""
    if d < 1:
        raise ValueError("d must be at least 1")

    def row(t):
        p = kvh_polynomial(d, t)
        sa = norms.sa_norm(p, tol).value
        dual = norms.dual_sa_norm(p, tol).value
        sa_cf, dual_cf = closed_form_kvh(d, complex(t))
        out = {"t": str(t) if isinstance(t, Fraction) else repr(complex(t)),
               "sa": sa, "sa_closed": sa_cf, "dev_sa": abs(sa - sa_cf),
               "dual": dual, "dual_closed": dual_cf, "dev_dual": abs(dual - dual_cf)}
        if with_sup:
            out["sup"] = norms.sup_norm(p).value
        return out

    with ThreadPoolExecutor(max_workers=threads or _threads()) as ex:
        return list(ex.map(row, t_grid))


def _cmd_kvh_scan(args) -> dict:
    grid = [_parse_t(s) for chunk in args.t for s in chunk.split(",") if s.strip()] if args.t \
        else list(DEFAULT_T_GRID)
    try:
        rows = kvh_scan(args.d, grid, args.tol, args.with_sup)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return {"command": "kvh-scan", "d": args.d, "rows": rows,
            "kinds": {"sa": "sdp-optimal", "dual": "sdp-optimal", "sa_closed": "closed-form",
                      "dual_closed": "closed-form", "sup": "grid-estimate"},
            "max_deviation": max(max(r["dev_sa"], r["dev_dual"]) for r in rows)}


_COMMANDS = {"norm": _cmd_norm, "bounds": _cmd_bounds, "certify": _cmd_certify,
             "fixture": _cmd_fixture, "dixon": _cmd_dixon, "kvh-scan": _cmd_kvh_scan}


# -- rendering -------------------------------------------------------------------------------

def _table(doc: dict):
    if "rows" in doc:
        return doc["rows"]
    if "bounds" in doc:
        return doc["bounds"]
    if "checks" in doc:
        return doc["checks"]
    return None


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    rows = _table(doc)
    if fmt == "csv":
        buf = io.StringIO()
        if rows:
            keys = sorted({k for r in rows for k in r})
            w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow(r)
        else:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["field", "value"])
            for k in sorted(doc):
                if not isinstance(doc[k], (dict, list)):
                    w.writerow([k, doc[k]])
        return buf.getvalue()
    lines = []
    for k in sorted(doc):
        v = doc[k]
        if k in ("rows", "bounds", "checks"):
            continue
        if isinstance(v, dict) and "text" in v:
            v = v["text"]
        lines.append(f"{k}: {v}")
    for r in rows or []:
        if "check" in r:
            lines.append(f"  [{'ok' if r['ok'] else 'FAIL'}] {r['check']} = {r['value']} ({r['kind']})")
        else:
            lines.append("  " + ", ".join(f"{k}={r[k]}" for k in sorted(r)))
    return "\n".join(lines) + "\n"


def _emit(doc: dict, args, stdout):
    text = _render(dict(doc, schema=OUTPUT_SCHEMA), getattr(args, "format", "json"))
    out = getattr(args, "output", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Run one command; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        if not args.command:
            raise UsageError("missing subcommand")
        doc = _COMMANDS[args.command](args)
    except UsageError as exc:
        stderr.write(f"aglerkit: usage error: {exc}\n")
        return EXIT_USAGE
    except norms.SolverFailure as exc:
        stderr.write(f"aglerkit: solver failure ({exc.status}): {exc}\n")
        return EXIT_SOLVER
    except (VerificationFailure, CertificateError) as exc:
        if isinstance(exc, VerificationFailure) and exc.doc is not None:
            _emit(dict(exc.doc, verified=False), args, stdout)
        stderr.write(f"aglerkit: verification failed: {exc}\n")
        return EXIT_VERIFY
    _emit(doc, args, stdout)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
