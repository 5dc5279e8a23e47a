"""``wayaudit`` command line.

Exit codes: 0 pass, 1 substantive violation, 2 input error. Reports go to
stdout (or ``--out``) as sorted-key JSON or CSV; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

from . import __version__
from .audit import WITNESSED, way_audit
from .errors import InvariantError, WayAuditError
from .models import MeasurementModel, heisenberg_cp_map
from .modular import modular_demo
from .multdomain import bimodule_check, in_mult_domain, schwarz_defect
from .optics import homodyne_sweep
from .serialization import dumps, load_json, model_from_json, operator_from_json, quartet_from_json
from .suites import SUITES
from .tensor import DEFAULT_TOL

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
TOL_ENV = "WAY_AUDIT_TOL"
SWEEP_COLUMNS = ("beta", "dim", "leakage", "ks_distance", "mean", "variance")


class InputError(WayAuditError):
    pass


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"{TOL_ENV}={raw!r} is not a number") from None


def _positive_tol(tol: float) -> float:
    if not tol > 0:
        raise InvariantError("tolerance > 0", f"got {tol!r}")
    return tol


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_audit(args) -> int:
    model = model_from_json(load_json(args.model), tol=args.tol)
    if not isinstance(model, MeasurementModel):
        raise InvariantError("model has a probe_povm", f"{args.model} describes a channel only")
    q = quartet_from_json(load_json(args.quartet))
    rep = way_audit(model, q, args.tol)
    _emit(dumps(rep.to_dict()), args.out)
    return EXIT_OK if rep.verdict == WITNESSED else EXIT_VIOLATION


def cmd_membership(args) -> int:
    model = model_from_json(load_json(args.model), tol=args.tol)
    lam = heisenberg_cp_map(model)
    a = operator_from_json(load_json(args.operand))
    if a.layout == lam.sem.S_out:
        a = lam.lift(a)
    if a.layout != lam.source:
        raise InvariantError("operand acts on S' or S'⊗P'", f"got {a.layout}, map acts on {lam.source}")
    rep = in_mult_domain(lam, a, args.tol)
    out = rep.to_dict()
    out["schwarz_defect"] = schwarz_defect(lam, a)
    if args.samples:
        bi = bimodule_check(lam, a, args.samples, args.tol, args.seed)
        out["bimodule"] = {"max_defect": bi.max_defect, "samples": bi.samples, "seed": args.seed}
    _emit(dumps(out), args.out)
    return EXIT_OK


def cmd_homodyne_sweep(args) -> int:
    if not args.beta:
        raise InputError("--beta needs at least one value")
    rows = homodyne_sweep(args.beta, args.dim, args.signal, args.points)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([repr(float(getattr(r, c))) if c != "dim" else str(r.dim) for c in SWEEP_COLUMNS])
        if r.flagged:
            print(f"warning: truncation leakage {r.leakage:.3g} at beta={r.beta!r}", file=sys.stderr)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_modular_demo(args) -> int:
    rep = modular_demo(args.d, args.gamma, tuple(args.xset))
    _emit(dumps(rep.to_dict()), args.out)
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_suite(args) -> int:
    fn = SUITES[args.name]
    kw = {"count": args.count, "seed": args.seed}
    if args.name != "schwarz":
        kw["tol"] = args.tol
    _emit(dumps(fn(**kw).to_dict()), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help=f"tolerance (default ${TOL_ENV} or {DEFAULT_TOL:g})")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks (default 0)")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="wayaudit", description="Audit conservation-law constraints on quantum measurements.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("audit", parents=[common], help="audit a measurement model against a conserved quartet")
    a.add_argument("--model", required=True)
    a.add_argument("--quartet", required=True)
    a.set_defaults(func=cmd_audit)

    m = sub.add_parser("membership", parents=[common], help="multiplicative-domain membership of an operand")
    m.add_argument("--model", required=True)
    m.add_argument("--operand", required=True, help="operator JSON on S' (lifted) or S'⊗P'")
    m.add_argument("--samples", type=int, default=0, help="random operands for the bimodule check")
    m.set_defaults(func=cmd_membership)

    h = sub.add_parser("homodyne-sweep", parents=[common], help="homodyne statistic vs. quadrature distribution")
    h.add_argument("--beta", type=_float_list, required=True, help="comma-separated LO amplitudes")
    h.add_argument("--dim", type=int, default=128)
    h.add_argument("--signal", default="vacuum", help="vacuum | coherent:<re>,<im> | fock:<n>")
    h.add_argument("--points", type=int, default=20001, help="quadrature grid points")
    h.set_defaults(func=cmd_homodyne_sweep)

    d = sub.add_parser("modular-demo", parents=[common], help="clock-and-shift momentum-kick checks")
    d.add_argument("--d", type=int, default=6)
    d.add_argument("--gamma", type=int, default=2)
    d.add_argument("--xset", type=_int_list, default=[0, 2, 4])
    d.set_defaults(func=cmd_modular_demo)

    s = sub.add_parser("suite", parents=[common], help="seeded randomized property suite")
    s.add_argument("name", choices=sorted(SUITES))
    s.add_argument("--count", type=int, default=100)
    s.set_defaults(func=cmd_suite)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags already; keep 0 for --help/--version
        return int(exc.code or 0)
    try:
        args.tol = _positive_tol(default_tol() if args.tol is None else args.tol)
        return args.func(args)
    except (WayAuditError, ValueError) as exc:
        # InvariantError messages already name the failed invariant
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
