"""Command-line driver: load a JSON instance, compute, print a report.

Exit codes: 0 ok, 1 property failure, 2 usage or parse error, 3 schema
error, 4 invariant violation, 5 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources

import numpy as np

from . import adapters, lp_solver, serialization, suite
from .core_model import ExponentParams, ParameterError, ShapeError, SimplexMeasure, WeightedFamily
from .mixed_families import OptimizationError, mixed_norm_closed_qq, mixed_norm_sup_measure, mixed_norm_tau_search
from .mixing import ModelError, NotMixingError, PreconditionError, mixing_lower_bound, mixing_upper_domination
from .summing import NotSummableError, pietsch_norm_lp, ratio_lower_bound, witness_from_dual

EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, EXIT_SCHEMA, EXIT_INVARIANT, EXIT_SOLVER = 0, 1, 2, 3, 4, 5
COMMANDS = ("summing-norm", "mixed-norm", "mixing-constant", "verify-suite", "adapt-linear", "adapt-lipschitz")
CSV_COLUMNS = ("quantity", "value", "lower_bound", "upper_bound", "gap", "seed", "paper_anchor")


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def fmt_vec(v):
    return " ".join(fmt(x) for x in np.asarray(v).reshape(-1))


class Report:
    """Rows of computed quantities and the certificates that back them."""

    def __init__(self, command, seed):
        self.command = command
        self.seed = seed
        self.rows = []
        self.certificates = []
        self.notes = []

    def add(self, quantity, value, lower=None, upper=None, gap=None, anchor=""):
        self.rows.append((quantity, value, lower, upper, gap, anchor))

    def cert(self, name, values, anchor=""):
        self.certificates.append((name, values, anchor))

    def note(self, text):
        self.notes.append(text)

    def text(self):
        out = [f"command: {self.command}", f"seed: {self.seed}"]
        for q, v, lo, up, gap, anchor in self.rows:
            line = f"{q} = {fmt(v)}"
            for label, x in (("lower", lo), ("upper", up), ("gap", gap)):
                if x is not None:
                    line += f"  {label} {fmt(x)}"
            if anchor:
                line += f"  [{anchor}]"
            out.append(line)
        for name, vals, _ in self.certificates:
            out.append(f"  certificate {name}: {vals if isinstance(vals, str) else fmt_vec(vals)}")
        out.extend(self.notes)
        return "\n".join(out) + "\n"

    def csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for q, v, lo, up, gap, anchor in self.rows:
            w.writerow([q, fmt(v), fmt(lo), fmt(up), fmt(gap), self.seed, anchor])
        for name, vals, anchor in self.certificates:
            w.writerow([f"certificate:{name}", vals if isinstance(vals, str) else fmt_vec(vals), "", "", "",
                        self.seed, anchor])
        for text in self.notes:
            w.writerow([f"note:{text}", "", "", "", "", self.seed, ""])
        return buf.getvalue()

    def render(self, kind):
        return self.csv() if kind == "csv" else self.text()


def family_text(fam: WeightedFamily):
    return "; ".join(f"({fmt(s)}, {a}, {c}, {g})" for s, a, c, g in fam.items())


# ------------------------------------------------------------------ exponents


def resolve_exponents(args, loaded, default_q=1.0, default_s=2.0):
    ex = loaded.exponents if loaded is not None else {}
    q = args.q if args.q is not None else ex.get("q", default_q)
    s = args.s if args.s is not None else ex.get("s", default_s)
    p = args.p if args.p is not None else ex.get("p")
    if isinstance(p, list):
        p = None
    return ExponentParams(q, s, p)


# ------------------------------------------------------------------- commands


def _require_kind(loaded, *kinds):
    if loaded.kind not in kinds:
        raise serialization.SchemaError(f"this command needs kind {' or '.join(kinds)}, got {loaded.kind!r}")


def cmd_summing_norm(args, loaded, rep):
    _require_kind(loaded, "instance")
    inst = loaded.obj
    p = args.p if args.p is not None else loaded.exponents.get("p", loaded.exponents.get("q", 1.0))
    anchor = "summing norm (domination LP)"
    try:
        cert = pietsch_norm_lp(inst, p)
    except NotSummableError as exc:
        rep.add("summing_norm", math.inf, anchor=anchor)
        rep.note(f"not summable: {exc}")
        return EXIT_OK
    extra = []
    if cert.dual is not None and np.any(cert.dual > 0):
        extra.append(witness_from_dual(cert.dual, p, inst.probe_shape))
    lower, fam = ratio_lower_bound(inst, p, args.samples, args.seed, extra) if cert.delta > 0 else (0.0, None)
    rep.add("summing_norm", cert.delta, lower, cert.delta, cert.delta - lower, anchor)
    rep.cert("nu", cert.nu.weights, anchor)
    rep.cert("max_violation", [cert.max_violation], anchor)
    if fam is not None:
        rep.cert("witness", family_text(fam), anchor)
    return EXIT_OK


def cmd_mixed_norm(args, loaded, rep):
    _require_kind(loaded, "family")
    vals = loaded.obj
    e = resolve_exponents(args, loaded)
    anchor = "mixed norm (measure form)"
    if e.equal:
        v = mixed_norm_closed_qq(vals, e.q)
        rep.add("mixed_norm", v, v, v, 0.0, "mixed norm (q = s closed form)")
        return EXIT_OK
    res = mixed_norm_sup_measure(vals, e)
    upper = mixed_norm_tau_search(vals, e, seed=args.seed)
    rep.add("mixed_norm", res.value, res.value, upper, max(upper - res.value, 0.0), anchor)
    rep.cert("mu_star", res.mu_star.weights, anchor)
    rep.cert("tau", res.tau, anchor)
    rep.cert("fw_gap", [res.gap], anchor)
    return EXIT_OK


def _mixing_report(rep, inst, e, args, anchor):
    if e.p != e.q:
        lower, fam = mixing_lower_bound(inst, e, e.p, args.samples, args.seed)
        rep.add("mixing_constant_lower", lower, lower, None, None, "mixing constant (sampled ratio)")
        rep.cert("witness", family_text(fam))
        return lower, None
    try:
        res = mixing_upper_domination(inst, e, args.grid_depth)
    except NotMixingError as exc:
        rep.add("mixing_constant", math.inf, anchor=anchor)
        rep.note(f"not mixing: {exc}")
        return math.inf, None
    extra = [res.witness] if res.witness is not None else []
    if res.value > 0:
        lower, fam = mixing_lower_bound(inst, e, e.p, args.samples, args.seed, extra)
    else:
        lower, fam = 0.0, None
    rep.add("mixing_constant", res.value, lower, res.value, res.value - lower, anchor)
    rep.cert("worst_mu", res.worst_mu.weights, anchor)
    rep.cert("nu", res.certificate.nu.weights, anchor)
    rep.cert("max_violation", [res.certificate.max_violation], anchor)
    if fam is not None:
        rep.cert("witness", family_text(fam), anchor)
    return res.value, res


def cmd_mixing_constant(args, loaded, rep):
    _require_kind(loaded, "instance")
    e = resolve_exponents(args, loaded)
    _mixing_report(rep, loaded.obj, e, args, "mixing constant (measure domination)")
    return EXIT_OK


def _adapt(args, loaded, rep, build, classical, codomain_rows, label):
    spec = loaded.obj
    inst = build(spec)
    e = resolve_exponents(args, loaded)
    if args.emit_instance:
        serialization.save(inst, args.emit_instance, {"q": e.q, "s": e.s, "p": e.p})
    value, _ = _mixing_report(rep, inst, e, args, f"{label} mixing constant (generic route)")
    if e.p == e.q and math.isfinite(value):
        direct = classical(spec, e.q, e.s, args.grid_depth)
        rep.add("classical_mixing_constant", direct, None, None, abs(direct - value),
                f"{label} mixing constant (direct measure criterion)")
    mu = SimplexMeasure.uniform(inst.nW)
    _, pi = adapters.build_embedding_Jmu(inst, mu, e.s, codomain_rows(spec))
    rep.add("embedding_summing_norm", pi, anchor="L_s(mu) evaluation map, uniform mu")
    return EXIT_OK


def cmd_adapt_linear(args, loaded, rep):
    _require_kind(loaded, "linear_operator")
    return _adapt(args, loaded, rep, adapters.build_linear_instance, adapters.classical_linear_mixing,
                  adapters.linear_codomain_rows, "operator")


def cmd_adapt_lipschitz(args, loaded, rep):
    _require_kind(loaded, "lipschitz_map")
    return _adapt(args, loaded, rep, adapters.build_lipschitz_instance, adapters.classical_lipschitz_mixing,
                  adapters.lipschitz_codomain_rows, "Lipschitz")


def cmd_verify_suite(args, loaded, rep):
    tol = args.tol if args.tol is not None else 1.0
    first = None
    for res in suite.run_suite(args.seed, bundled_dir(), samples=args.samples, grid_depth=args.grid_depth,
                               tol_scale=tol):
        rep.add(res.name, res.discrepancy, None, res.tolerance, None, res.anchor)
        rep.cert(res.name + ".holds", "true" if res.ok else "false", res.anchor)
        if not res.ok and first is None:
            first = res.name
    if first is not None:
        rep.note(f"first failing property: {first}")
        return EXIT_PROPERTY
    rep.note("all properties hold")
    return EXIT_OK


HANDLERS = {
    "summing-norm": cmd_summing_norm,
    "mixed-norm": cmd_mixed_norm,
    "mixing-constant": cmd_mixing_constant,
    "verify-suite": cmd_verify_suite,
    "adapt-linear": cmd_adapt_linear,
    "adapt-lipschitz": cmd_adapt_lipschitz,
}


def bundled_dir():
    return resources.files("abstract_mixing") / "data"


# ----------------------------------------------------------------- arguments


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="abstract-mixing", description="Summing norms, mixed norms and mixing constants "
                                                     "on finite instances.")
    ap.add_argument("command_pos", nargs="?", metavar="COMMAND", help=" | ".join(COMMANDS))
    ap.add_argument("--command", dest="command_opt", metavar="NAME")
    ap.add_argument("--instance", metavar="PATH")
    ap.add_argument("--q", type=float)
    ap.add_argument("--s", type=float)
    ap.add_argument("--p", type=float)
    ap.add_argument("--t", type=float)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--grid-depth", type=int, default=10)
    ap.add_argument("--tol", type=float, help="verify-suite: multiply every tolerance by this factor")
    ap.add_argument("--report", choices=("text", "csv"), default="text")
    ap.add_argument("--out", metavar="PATH")
    ap.add_argument("--emit-instance", metavar="PATH", help="adapters: also write the built instance")
    return ap


def parse_args(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command_pos and args.command_opt and args.command_pos != args.command_opt:
        ap.error("conflicting commands")
    args.command = args.command_opt or args.command_pos
    if args.command not in COMMANDS:
        ap.error(f"unknown command {args.command!r}; choose from {', '.join(COMMANDS)}")
    if args.command != "verify-suite" and not args.instance:
        ap.error(f"{args.command} needs --instance PATH")
    if args.samples < 1 or args.grid_depth < 0:
        ap.error("--samples must be positive and --grid-depth nonnegative")
    for name in ("q", "s", "p"):
        v = getattr(args, name)
        if v is not None and not (v > 0 and math.isfinite(v)):
            ap.error(f"--{name} must be a positive finite real")
    if args.q is not None and args.s is not None:
        try:
            ExponentParams(args.q, args.s, args.p)
        except ParameterError as exc:
            ap.error(str(exc))
    return args


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    rep = Report(args.command, args.seed)
    try:
        loaded = serialization.load(args.instance) if args.instance else None
        code = HANDLERS[args.command](args, loaded, rep)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"error: cannot read {args.instance}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except serialization.SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (lp_solver.SolverFailure, OptimizationError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ShapeError, ParameterError, ModelError, PreconditionError, adapters.ValidationError, IndexError,
            ValueError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    text = rep.render(args.report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
