"""Command line interface: ``stardil <command> [files] [options]``.

Every command prints one JSON report (or a text rendering with
``--human``) and exits 0 on PASS, 1 on FAIL and 2 on errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Callable

import numpy as np

from . import io
from .algebroid import amplify_map, positive_form_rep, sample_cp_check, series_length, sqrt_one_minus
from .ckt import check_restricted_orthogonality, induce_representation, validate_ckt
from .dilation import (
    dilate,
    embed_unital,
    minimalize,
    representation_residuals,
    unitary_equivalence,
    verify_dilation,
)
from .errors import DimensionMismatch, NotPSD, NotUnital, StardilError
from .free import free_groupoid, free_semigroupoid, free_star_semigroupoid
from .leftreg import check_lr_properties, left_regular, multiplicity_profile
from .linalg import HERM_TOL, PSD_TOL, VERIFY_TOL, max_abs, op_norm
from .maps import bound_constant, check_coherent, check_psd
from .semigroupoid import classify, validate

COMMANDS: dict[str, Callable] = {}


def command(name: str):
    def deco(fn):
        COMMANDS[name] = fn
        return fn

    return deco


class Result:
    """Collects verdicts, residuals and witnesses for one report."""

    def __init__(self):
        self.verdicts: dict[str, bool] = {}
        self.residuals: dict = {}
        self.witnesses: dict = {}
        self.tolerances: dict[str, float] = {}
        self.extra: dict = {}

    def check(self, name: str, ok: bool, witness=None) -> None:
        self.verdicts[name] = bool(ok)
        if not ok:
            self.witnesses[name] = witness if witness is not None else "see residuals"


def _digest(paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    if isinstance(x, (complex, np.complexfloating)):
        return io.complex_pair(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _save_or_embed(res: Result, args, doc) -> None:
    if args.out:
        io.write(args.out, doc)
        res.extra["output"] = str(args.out)
    else:
        res.extra["document"] = doc


def _load_map(path):
    return io.parse_map(io.read(path), Path(path).parent)


# ---------------------------------------------------------------------------
# commands


@command("validate")
def cmd_validate(args, res: Result):
    t = io.parse_sgd(io.read(args.files[0]))
    rep = validate(t)
    res.residuals["violation_counts"] = rep.counts
    res.check("axioms", rep.ok, [{"axiom": v.axiom, "witness": list(v.witness), "detail": v.detail}
                                 for v in rep.violations])


@command("classify")
def cmd_classify(args, res: Result):
    t = io.parse_sgd(io.read(args.files[0]))
    rep = validate(t)
    res.check("axioms", rep.ok, [{"axiom": v.axiom, "witness": list(v.witness)} for v in rep.violations])
    f = classify(t)
    res.extra["flags"] = {k: getattr(f, k) for k in f.__dataclass_fields__}


@command("free-gen")
def cmd_free_gen(args, res: Result):
    g = io.parse_graph(io.read(args.files[0]))
    lmax = args.lmax or 2
    if args.flavor == "plain":
        t = free_semigroupoid(g, lmax, with_units=not args.no_units)
    elif args.flavor == "starred":
        t = free_star_semigroupoid(g, lmax)
    else:
        t = free_groupoid(g, lmax)
    rep = validate(t)
    res.check("axioms", rep.ok, [list(v.witness) for v in rep.violations])
    res.extra["elements"] = t.n_elements
    _save_or_embed(res, args, io.sgd_doc(t))


@command("psd-check")
def cmd_psd_check(args, res: Result):
    T = _load_map(args.files[0])
    coh = check_coherent(T)
    res.check("coherent", coh.ok, {"hm1": coh.hm1, "hm2": coh.hm2})
    rep = check_psd(T, PSD_TOL)
    res.residuals["lambda_min"] = rep.lambda_min
    res.residuals["thresholds"] = rep.thresholds
    res.tolerances["psd_relative"] = PSD_TOL
    res.tolerances["hermitian"] = HERM_TOL
    res.check("checkable", not rep.unchecked, rep.unchecked)
    res.check("psd", rep.witness is None,
              {"fiber": rep.witness, "lambda_min": rep.lambda_min.get(rep.witness)})


@command("bound")
def cmd_bound(args, res: Result):
    T = _load_map(args.files[0])
    elems = [args.element] if args.element is not None else range(T.table.n_elements)
    consts = {a: bound_constant(T, a) for a in elems}
    res.residuals["C"] = consts
    res.check("finite", all(np.isfinite(v) for v in consts.values()))


def _verify_into(res: Result, T, D, tol):
    ver = verify_dilation(T, D, tol)
    res.residuals.update(ver.residuals)
    res.residuals["minimality_defect"] = ver.minimality_defect
    res.tolerances["verification"] = tol
    for k, v in ver.residuals.items():
        res.check(k, v < tol, {"residual": v, "at": ver.witnesses.get(k)})
    res.check("minimal", ver.minimal, ver.minimality_defect)
    return ver


@command("dilate")
def cmd_dilate(args, res: Result):
    T = _load_map(args.files[0])
    order = None
    if args.permute:
        order = np.random.default_rng(args.seed).permutation(T.table.n_elements).tolist()
        res.extra["seed"] = args.seed
    try:
        D = dilate(T, order=order)
    except NotPSD as exc:
        res.check("psd", False, {"fiber": exc.fiber, "lambda_min": exc.lambda_min})
        return
    res.extra["block_sizes"] = list(D.block_sizes)
    _verify_into(res, T, D, args.tol)
    _save_or_embed(res, args, io.dilation_doc(D))


@command("verify")
def cmd_verify(args, res: Result):
    T = _load_map(args.files[0])
    D = io.parse_dilation(io.read(args.files[1]), T.table)
    _verify_into(res, T, D, args.tol)


@command("equiv")
def cmd_equiv(args, res: Result):
    T = _load_map(args.files[0])
    D1 = io.parse_dilation(io.read(args.files[1]), T.table)
    D2 = io.parse_dilation(io.read(args.files[2]), T.table)
    res.tolerances["verification"] = args.tol
    try:
        w = unitary_equivalence(D1, D2, T, args.tol)
    except DimensionMismatch as exc:
        res.check("dimensions", False, str(exc))
        return
    res.residuals.update(w.residuals)
    for k, v in w.residuals.items():
        res.check(k, v < args.tol, {"residual": v})


@command("minimalize")
def cmd_minimalize(args, res: Result):
    T = _load_map(args.files[0])
    D = io.parse_dilation(io.read(args.files[1]), T.table)
    M = minimalize(D, T)
    res.extra["kdims_before"] = list(D.kdims)
    res.extra["kdims_after"] = list(M.kdims)
    _verify_into(res, T, M, args.tol)
    _save_or_embed(res, args, io.dilation_doc(M))


@command("embed")
def cmd_embed(args, res: Result):
    T = _load_map(args.files[0])
    D = io.parse_dilation(io.read(args.files[1]), T.table) if len(args.files) > 1 else dilate(T)
    res.tolerances["verification"] = args.tol
    try:
        e = embed_unital(T, D, args.tol)
    except NotUnital as exc:
        res.check("unital", False, str(exc))
        return
    res.residuals.update({"isometry": e.isometry, "compression": e.compression})
    res.check("isometry", e.isometry < args.tol, {"residual": e.isometry})
    res.check("compression", e.compression < args.tol, {"residual": e.compression})
    res.extra["W"] = [io.matrix_doc(w, x=x) for x, w in enumerate(e.W)]


@command("ckt-check")
def cmd_ckt_check(args, res: Result):
    fam = io.parse_ckt(io.read(args.files[0]))
    rep = validate_ckt(fam, args.tol)
    res.tolerances["verification"] = args.tol
    res.residuals.update({
        "idempotent": rep.idempotent, "hermitian": rep.hermitian, "cross": rep.cross,
        "condition_I": rep.condition_I, "condition_CKT_lambda_min": rep.condition_CKT,
        "condition_CK": rep.condition_CK, "nondegenerate": rep.nondegenerate, "ranges": rep.ranges,
    })
    wit = {
        "projections": {"idempotent": rep.idempotent, "cross": rep.cross},
        "condition_I": {f: v for f, v in rep.condition_I.items() if v >= args.tol},
        "condition_CKT": {v: lm for v, lm in rep.condition_CKT.items() if lm < -args.tol},
        "condition_CK": {v: r for v, r in rep.condition_CK.items() if r >= args.tol},
        "nondegenerate": rep.nondegenerate,
    }
    for k, ok in rep.verdicts().items():
        res.check(k, ok, wit[k])


@command("induce")
def cmd_induce(args, res: Result):
    fam = io.parse_ckt(io.read(args.files[0]))
    T = induce_representation(fam, args.lmax or 2, args.tol)
    rr = representation_residuals(T.table, T.mats)
    for k, (v, w) in rr.items():
        res.residuals[k] = v
        res.check(k, v < args.tol, {"residual": v, "at": list(w)})
    orth = check_restricted_orthogonality(T, tol=args.tol)
    res.residuals["restricted_orthogonality"] = orth.max_residual
    res.extra["orthogonality_notice"] = orth.notice
    res.check("restricted_orthogonality", orth.passed, {"words": orth.witness})
    res.tolerances["verification"] = args.tol
    _save_or_embed(res, args, io.map_doc(T))


@command("leftreg")
def cmd_leftreg(args, res: Result):
    t = io.parse_sgd(io.read(args.files[0]))
    tau = [int(x) for x in args.tau.split(",")] if args.tau else None
    space = left_regular(t, tau)
    rep = check_lr_properties(space, args.tol)
    res.tolerances["verification"] = args.tol
    lc = classify(t).left_cancellative
    res.extra["profile"] = {
        a: {"N": p.max_multiplicity, "closable": p.closable, "partial_isometry_expected": p.partial_isometry_expected}
        for a in range(t.n_elements) for p in [multiplicity_profile(t, a, lc)]
    }
    res.extra["flagged_columns"] = {a: list(f) for a, f in enumerate(space.flagged) if f}
    res.residuals.update({"norms": rep.norms, "multiplicativity": rep.multiplicativity,
                          "orthogonality": rep.orthogonality})
    wit = {"partial_isometry": rep.partial_isometry, "projection": rep.projection,
           "multiplicativity": list(rep.multiplicativity_witness),
           "orthogonality": list(rep.orthogonality_witness),
           "norm_bound": {g: [rep.norms[g], rep.bounds[g]] for g in rep.norms}}
    for k, ok in rep.verdicts().items():
        res.check(k, ok, wit[k])


@command("amplify")
def cmd_amplify(args, res: Result):
    T = _load_map(args.files[0])
    X = io.parse_amplified(io.read(args.files[1]))
    M = amplify_map(T, X.n)(X)
    res.extra["matrix"] = io.matrix_doc(M)
    res.check("finite", bool(np.all(np.isfinite(M))))


@command("cp-check")
def cmd_cp_check(args, res: Result):
    T = _load_map(args.files[0])
    rep = sample_cp_check(T, args.nmax, args.trials, args.seed)
    res.extra["seed"] = args.seed
    res.tolerances["psd_relative"] = rep.tol
    res.residuals["worst_lambda_min"] = rep.worst_lambda_min
    res.residuals["per_n"] = rep.per_n
    wit = None
    if rep.witness is not None:
        wit = {k: v for k, v in rep.witness.items() if k != "X"}
        wit["X"] = io.amplified_doc(rep.witness["X"])
    res.check("completely_positive_sampled", rep.passed, wit)


@command("sqrt-series")
def cmd_sqrt_series(args, res: Result):
    a = io.parse_matrix(io.read(args.files[0]))
    b = sqrt_one_minus(a, args.series_tol)
    target = np.eye(a.shape[1]) - a.conj().T @ a
    r = max_abs(b @ b - target)
    h = max_abs(b - b.conj().T)
    res.residuals.update({"square": r, "hermitian": h})
    res.extra["terms"] = series_length(op_norm(a) ** 2, args.series_tol)
    res.tolerances.update({"verification": args.tol, "series": args.series_tol})
    res.check("square", r < args.tol, {"residual": r})
    res.check("hermitian", h < args.tol, {"residual": h})
    res.extra["b"] = io.matrix_doc(b)


@command("form-rep")
def cmd_form_rep(args, res: Result):
    path = args.files[0]
    omega, t = io.parse_form(io.read(path), Path(path).parent)
    try:
        fr = positive_form_rep(omega, t, args.tol)
    except NotPSD as exc:
        res.check("positive", False, {"fiber": exc.fiber, "lambda_min": exc.lambda_min})
        return
    res.residuals.update(fr.residuals)
    res.residuals["cyclicity_defect"] = fr.cyclicity_defect
    res.tolerances["verification"] = args.tol
    for k, v in fr.residuals.items():
        res.check(k, v < args.tol, {"residual": v})
    res.check("cyclic", fr.cyclicity_defect == 0, fr.cyclicity_defect)
    res.extra["xi"] = [io.matrix_doc(x.reshape(-1, 1), object=s) for s, x in enumerate(fr.xi)]


# ---------------------------------------------------------------------------
# driver

_NFILES = {
    "validate": 1, "classify": 1, "free-gen": 1, "psd-check": 1, "bound": 1, "dilate": 1,
    "verify": 2, "equiv": 3, "minimalize": 2, "embed": (1, 2), "ckt-check": 1, "induce": 1,
    "leftreg": 1, "amplify": 2, "cp-check": 1, "sqrt-series": 1, "form-rep": 1,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=VERIFY_TOL, help="verification residual budget")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--human", action="store_true", help="print a text summary instead of JSON")
    common.add_argument("--out", type=Path, default=None, help="write the produced document here")
    common.add_argument("--lmax", type=int, default=None, help="truncation length bound")

    p = argparse.ArgumentParser(prog="stardil", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("files", nargs="+")
        if name == "free-gen":
            sp.add_argument("--flavor", choices=["plain", "starred", "groupoid"], default="starred")
            sp.add_argument("--no-units", action="store_true")
        if name == "bound":
            sp.add_argument("--element", type=int, default=None)
        if name == "dilate":
            sp.add_argument("--permute", action="store_true",
                            help="permute the element ordering with --seed before building")
        if name == "leftreg":
            sp.add_argument("--tau", default=None, help="comma separated bundle index per object")
        if name == "cp-check":
            sp.add_argument("--nmax", type=int, default=3)
            sp.add_argument("--trials", type=int, default=100)
        if name == "sqrt-series":
            sp.add_argument("--series-tol", type=float, default=1e-12)
    return p


def render_human(report: dict) -> str:
    lines = [f"{report['command']}: {report['verdict']}"]
    for k, ok in report["verdicts"].items():
        lines.append(f"  {'PASS' if ok else 'FAIL'}  {k}")
    for k, v in report.get("residuals", {}).items():
        if isinstance(v, (int, float)):
            lines.append(f"  {k} = {v:.3e}" if isinstance(v, float) else f"  {k} = {v}")
    if "error" in report:
        lines.append(f"  error: {report['error']}")
    return "\n".join(lines)


def run(argv=None) -> tuple[int, dict]:
    parser = build_parser()
    args = parser.parse_args(argv)
    want = _NFILES[args.command]
    lo, hi = (want, want) if isinstance(want, int) else want
    if not lo <= len(args.files) <= hi:
        parser.error(f"{args.command} takes {lo if lo == hi else f'{lo} or {hi}'} file argument(s)")
    start = time.perf_counter()
    report: dict = {"command": args.command, "inputs": list(args.files)}
    try:
        report["inputs_digest"] = _digest(args.files)
        res = Result()
        COMMANDS[args.command](args, res)
    except (StardilError, OSError) as exc:
        report.update({"verdict": "ERROR", "error": f"{type(exc).__name__}: {exc}", "verdicts": {}})
        report["wall_time"] = time.perf_counter() - start
        return 2, report
    ok = all(res.verdicts.values())
    report.update({
        "verdict": "PASS" if ok else "FAIL",
        "verdicts": res.verdicts,
        "residuals": _jsonable(res.residuals),
        "witnesses": _jsonable(res.witnesses),
        "tolerances": res.tolerances,
        **_jsonable(res.extra),
    })
    if "seed" not in report and args.command == "cp-check":
        report["seed"] = args.seed
    report["wall_time"] = time.perf_counter() - start
    return (0 if ok else 1), report


def main(argv=None) -> int:
    code, report = run(argv)
    human = "--human" in (argv if argv is not None else sys.argv[1:])
    if human:
        print(render_human(report))
    else:
        print(json.dumps(report, sort_keys=True, indent=1))
    if code == 2:
        print(report["error"], file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
