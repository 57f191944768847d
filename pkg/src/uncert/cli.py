"""Command-line front end: ``uncert {check,minimize,entangle,region,williamson}``.

Exit codes: 0 ok or inconclusive, 1 usage or parse error, 2 invalid physical
input, 3 entangled, 4 solver did not converge.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import inequalities as ineq
from .covariance import CovarianceMatrix, MomentTriple, is_admissible, is_pure_gaussian, on_boundary
from .errors import (
    ConstraintError,
    ConvergenceError,
    DefinitenessError,
    DomainError,
    ShapeError,
)
from .functional import brute_force_minimize
from .region import HyperboloidSheet, convex_decompose, hole_witness
from .symplectic import PhaseSpace, williamson

EXIT_OK, EXIT_USAGE, EXIT_PHYSICS, EXIT_ENTANGLED, EXIT_NONCONVERGED = 0, 1, 2, 3, 4

FILE_SYMMETRY_RTOL = 1e-9
HBAR_ENV = "UNCERT_HBAR"

MINIMIZE_NAMES = ("corineq", "triplesep", "detrs", "robdof", "mixedprod", "sumheis", "crossheis", "prodrs")
CRITERIA = ("duan", "corineq", "corfour", "triplesep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- I/O -----------------------------------------------------------------------------


def _hbar_override(args) -> Optional[float]:
    if args.hbar is not None:
        return args.hbar
    env = os.environ.get(HBAR_ENV)
    if env:
        try:
            return float(env)
        except ValueError:
            raise UsageError(f"{HBAR_ENV}={env!r} is not a number")
    return None


def _effective_hbar(args) -> float:
    h = _hbar_override(args)
    return 1.0 if h is None else h


def load_covariance(path: str, hbar: Optional[float] = None) -> CovarianceMatrix:
    """Read a CovarianceFile; ``hbar`` (if given) replaces the file's value."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected a JSON object")
    missing = {"hbar", "n_modes", "matrix"} - data.keys()
    if missing:
        raise UsageError(f"{path}: missing field(s) {', '.join(sorted(missing))}")
    if data.get("ordering", "pqpq") != "pqpq":
        raise UsageError(f"{path}: unsupported ordering {data['ordering']!r}, expected 'pqpq'")
    try:
        file_hbar = float(data["hbar"])
        n = data["n_modes"]
        m = np.array(data["matrix"], dtype=float)
    except (TypeError, ValueError):
        raise UsageError(f"{path}: hbar, n_modes and matrix must be numeric")
    if not isinstance(n, int) or n < 1:
        raise UsageError(f"{path}: n_modes must be a positive integer")
    if not file_hbar > 0:
        raise UsageError(f"{path}: hbar must be positive")
    if m.shape != (2 * n, 2 * n):
        raise UsageError(f"{path}: matrix has shape {m.shape}, expected {(2 * n, 2 * n)}")
    if not np.all(np.isfinite(m)):
        raise UsageError(f"{path}: matrix has non-finite entries")
    scale = max(np.max(np.abs(m)), np.finfo(float).tiny)
    if np.max(np.abs(m - m.T)) > FILE_SYMMETRY_RTOL * scale:
        raise UsageError(f"{path}: matrix is not symmetric")
    if hbar is not None and hbar != file_hbar:
        print(f"warning: overriding hbar={file_hbar!r} from {path} with {hbar!r}", file=sys.stderr)
    else:
        hbar = file_hbar
    return CovarianceMatrix(PhaseSpace(n, hbar), 0.5 * (m + m.T))


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, MomentTriple):
        return {"u": x.u, "v": x.v, "w": x.w}
    return x


def _fmt(x) -> str:
    x = _plain(x)
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, dict):
        return " ".join(f"{k}={_fmt(v)}" for k, v in x.items())
    if isinstance(x, list):
        if x and isinstance(x[0], list):
            return "\n" + "\n".join("  " + " ".join(_fmt(v) for v in row) for row in x)
        return " ".join(_fmt(v) for v in x)
    if x is None:
        return "n/a"
    return str(x)


def emit(report: dict, fmt: str, out=None) -> None:
    """Write ``report``; floats use ``repr`` so they round-trip exactly."""
    out = out or sys.stdout
    if fmt == "json":
        json.dump({k: _plain(v) for k, v in report.items()}, out, default=_plain)
        out.write("\n")
    else:
        for k, v in report.items():
            out.write(f"{k}: {_fmt(v)}\n")


# -- commands -----------------------------------------------------------------------------


def cmd_check(args) -> int:
    C = load_covariance(args.file, _hbar_override(args))
    try:
        eigs = C.symplectic_eigenvalues()
    except DefinitenessError:
        emit({"command": "check", "hbar": C.hbar, "symplectic_eigenvalues": None,
              "admissible": False, "pure": False, "boundary": False}, args.format)
        return EXIT_PHYSICS
    ok = is_admissible(C)
    emit({
        "command": "check",
        "hbar": C.hbar,
        "symplectic_eigenvalues": eigs,
        "admissible": ok,
        "pure": is_pure_gaussian(C),
        "boundary": on_boundary(C),
    }, args.format)
    return EXIT_OK if ok else EXIT_PHYSICS


def _make_spec(name: str, space: PhaseSpace, args) -> ineq.InequalitySpec:
    kw = {}
    for key in ("a", "b", "c", "n"):
        val = getattr(args, key, None)
        if val is not None:
            kw[key] = val
    make = ineq.CONSTRUCTORS[name]
    accepted = set(inspect.signature(make).parameters) - {"space"}
    unknown = set(kw) - accepted
    if unknown:
        raise UsageError(f"{name} takes no parameter(s) {', '.join('--' + k for k in sorted(unknown))}")
    return make(space, **kw)


def _modes_for(name: str, requested: Optional[int]) -> int:
    if name == "detrs":
        return requested or 2
    fixed = 3 if name == "triplesep" else 2
    if requested is not None and requested != fixed:
        raise UsageError(f"{name} is defined for {fixed} modes only")
    return fixed


def cmd_minimize(args) -> int:
    space = PhaseSpace(_modes_for(args.name, args.modes), _effective_hbar(args))
    spec = _make_spec(args.name, space, args)
    if spec.global_attained:
        res = ineq.extremize(spec)
        kind = "global"
    else:
        res = ineq.separable_extremum(spec)
        kind = "separable"
    report = {
        "command": "minimize",
        "functional": spec.label,
        "params": spec.params,
        "hbar": space.hbar,
        "kind": kind,
        "value": res.value,
        "bound": spec.bound if kind == "global" else spec.separable_bound,
        "separable_bound": spec.separable_bound,
        "residual": res.residual,
        "iterations": res.iterations,
        "trace_gap": res.trace_gap,
        "covariance": res.covariance.matrix,
    }
    if args.oracle:
        value, _ = brute_force_minimize(spec.functional, restarts=args.restarts, seed=args.seed,
                                        product=(kind == "separable"))
        report["oracle_value"] = value
        report["oracle_gap"] = value - res.value
    emit(report, args.format)
    return EXIT_OK


def cmd_entangle(args) -> int:
    C = load_covariance(args.file, _hbar_override(args))
    n = 3 if args.criterion == "triplesep" else 2
    if C.n_modes != n:
        raise UsageError(f"{args.criterion} needs a {n}-mode covariance, file has {C.n_modes}")
    spec = _make_spec(args.criterion, C.space, args)
    verdict = ineq.detect_entanglement(C, spec, tol=args.tol)
    emit({
        "command": "entangle",
        "criterion": spec.label,
        "params": spec.params,
        "hbar": C.hbar,
        "lhs": spec.lhs(C),
        "separable_bound": spec.separable_bound,
        "verdict": verdict.value,
    }, args.format)
    return EXIT_ENTANGLED if verdict is ineq.Verdict.ENTANGLED else EXIT_OK


def cmd_region_slice(args) -> int:
    if args.steps < 1 or not args.vmax > 0:
        raise UsageError("--steps must be >= 1 and --vmax positive")
    sheet = HyperboloidSheet(args.n, _effective_hbar(args))
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["u", "v"])
    for v in np.linspace(-args.vmax, args.vmax, args.steps + 1):
        v = float(v)
        writer.writerow([repr(math.hypot(sheet.e_n, v)), repr(v)])
    return EXIT_OK


def cmd_region_decompose(args) -> int:
    hbar = _effective_hbar(args)
    target = MomentTriple(args.u, args.v, args.w)
    d = convex_decompose(target, args.angle, hbar=hbar)
    emit({"command": "region decompose", "hbar": hbar, "target": target,
          "phi": d.phi, "psi": d.psi, "t0": d.t0}, args.format)
    return EXIT_OK


def cmd_region_hole(args) -> int:
    C = load_covariance(args.file, _hbar_override(args))
    h = hole_witness(C)
    emit({"command": "region hole-witness", "hbar": C.hbar, "M": h.M, "t": h.t,
          "symplectic_eigenvalues": h.s, "sigma": h.sigma}, args.format)
    return EXIT_OK


def cmd_williamson(args) -> int:
    C = load_covariance(args.file, _hbar_override(args))
    res = williamson(C.matrix)
    emit({"command": "williamson", "hbar": C.hbar, "symplectic_eigenvalues": res.sympl_eigs,
          "sigma": res.sigma}, args.format)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------


def _add_abc(p, names="abc"):
    for k in names:
        p.add_argument(f"--{k}", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uncert", description=__doc__.splitlines()[0])
    parser.add_argument("--hbar", type=float, default=None,
                        help=f"value of hbar (default: ${HBAR_ENV}, else the file's value, else 1)")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    # the same options are accepted after the verb; SUPPRESS keeps the top-level defaults
    common = _Parser(add_help=False)
    common.add_argument("--hbar", type=float, default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="admissibility, purity and boundary tests", parents=[common])
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("minimize", help="extremize a named functional", parents=[common])
    p.add_argument("name", choices=MINIMIZE_NAMES)
    _add_abc(p, "abc")
    p.add_argument("--n", type=float, default=None, help="exponent of the mixed family")
    p.add_argument("--modes", type=int, default=None, help="mode count (detrs only)")
    p.add_argument("--oracle", action="store_true", help="also run the random-restart oracle")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("entangle", help="entanglement verdict from a covariance file", parents=[common])
    p.add_argument("file")
    p.add_argument("--criterion", choices=CRITERIA, required=True)
    _add_abc(p, "abc")
    p.add_argument("--tol", type=float, default=ineq.VERDICT_TOL)
    p.set_defaults(func=cmd_entangle)

    p = sub.add_parser("region", help="uncertainty region geometry", parents=[common])
    rsub = p.add_subparsers(dest="region_command", required=True, parser_class=_Parser)
    q = rsub.add_parser("slice", help="CSV of the w=0 cross-section of sheet n", parents=[common])
    q.add_argument("--n", type=int, default=0)
    q.add_argument("--vmax", type=float, default=3.0)
    q.add_argument("--steps", type=int, default=200)
    q.set_defaults(func=cmd_region_slice)
    q = rsub.add_parser("decompose", help="write an interior triple as a mixture of pure ones", parents=[common])
    q.add_argument("--u", type=float, required=True)
    q.add_argument("--v", type=float, default=0.0)
    q.add_argument("--w", type=float, default=0.0)
    q.add_argument("--angle", type=float, default=0.0)
    q.set_defaults(func=cmd_region_decompose)
    q = rsub.add_parser("hole-witness", help="pure-state mixture behind an admissible covariance", parents=[common])
    q.add_argument("--file", required=True)
    q.set_defaults(func=cmd_region_hole)

    p = sub.add_parser("williamson", help="symplectic eigenvalues and diagonalizing transform", parents=[common])
    p.add_argument("file")
    p.set_defaults(func=cmd_williamson)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"error: {exc} (residual {exc.residual!r})", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (DefinitenessError, DomainError, ConstraintError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except ShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
