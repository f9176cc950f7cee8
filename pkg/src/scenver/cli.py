"""Command-line entry point ``scenver``.

Exit codes: 0 success, 1 the analysis answered no (assertion fails, premise
fails, no invariant found, ...), 2 usage or input errors.  ``--out DIR`` (or
the ``SCENVER_OUT`` environment variable) selects where report files go.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as sio
from .analysis import (
    DEFAULT_EPS_GRID,
    HoareAssertion,
    accelerate,
    backward_weakest_precondition,
    check_assertion,
    find_invariant,
    forward_worst_case,
    interleaving_profile,
    parse_eps_grid,
    trivial_epsilon,
)
from .errors import PremiseFailed, ScenverError, VacuousPrecondition
from .linprog import AffinePredicate
from .runner import ERROR, NEGATIVE, ScenarioSpec, Workspace, load_spec, run_spec
from .simulator import estimate_error_probability
from .summary import parse_sequence

OUT_ENV = "SCENVER_OUT"
EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2

FORMATS = """file formats:
  summary JSON     {"format_version": 1, "states": [...], "a": [[...]], "b": [...]}
                   numbers as decimal strings
  predicate JSON   {"format_version": 1, "constraints": [{"a": [...], "theta": r}]}
                   "a" may also be {state: coeff}, or use "indicator": [states]
  explicit chain   "STATES n" then "src dst prob" lines; labels in <stem>.labels
  contingency CSV  header "state,<y_0>,...", rows "<state>,<count>,..."
  controller JSON  {"controls", "estimates", "table": {env: {estimate: control}}}
  dynamics JSON    {"states", "error", "controls",
                    "table": {env: {"state|control": next_state}}}
exit codes: 0 ok, 1 analysis negative, 2 usage or input error"""


class UsageError(Exception):
    pass


def _out_dir(args):
    out = getattr(args, "out", None) or os.environ.get(OUT_ENV)
    return Path(out) if out else None


def _table(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in cells)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return "" if v is None else str(v)


def _summaries(args):
    return [sio.load_summary(p) for p in args.summary]


def _predicate(path, c):
    if path is None:
        return AffinePredicate.top()
    return sio.load_predicate(path, c.states)


# model sources --------------------------------------------------------------

def _add_model_flags(p):
    g = p.add_argument_group("model sources")
    g.add_argument("--chain", action="append", default=[], metavar="ENV=PATH", help="explicit chain file for ENV")
    g.add_argument("--case", choices=("example", "f1tenth", "taxinet"), help="built-in case model")
    g.add_argument("--env", action="append", default=[], metavar="ENV", help="environments of --case (default: all)")
    g.add_argument("--noise", default="perfect", help="synthetic perception: perfect, uniform:P or neighbor:P")
    g.add_argument("--config", help="F1Tenth config JSON")
    g.add_argument("--reduced", action="store_true", help="use the reduced F1Tenth grid")
    g.add_argument("--contingency", action="append", default=[], metavar="ENV=PATH", help="contingency CSV for ENV")
    g.add_argument("--controller", help="controller table JSON (with --contingency)")
    g.add_argument("--dynamics", help="dynamics table JSON (with --contingency)")


def _pairs(items, flag):
    out = {}
    for item in items:
        env, sep, path = item.partition("=")
        if not sep or not env or not path:
            raise UsageError(f"{flag} expects ENV=PATH, got {item!r}")
        out[env] = os.path.abspath(path)
    return out


def _workspace(args) -> Workspace:
    envs = {}
    for env, path in _pairs(args.chain, "--chain").items():
        envs[env] = {"chain": path}
    for env, path in _pairs(args.contingency, "--contingency").items():
        src = {"contingency": path}
        if args.case == "taxinet":
            src["case"] = "taxinet"
        for key in ("controller", "dynamics"):
            if getattr(args, key):
                src[key] = os.path.abspath(getattr(args, key))
        envs[env] = src
    if args.case == "example":
        for env in args.env or ["C"]:
            envs[env] = {"case": "example"}
    elif args.case == "f1tenth":
        from .cases.f1tenth import SEGMENTS

        for env in args.env or SEGMENTS:
            src = {"case": "f1tenth", "segment": env, "noise": args.noise, "reduced": args.reduced}
            if args.config:
                src["config"] = os.path.abspath(args.config)
            envs[env] = src
    elif args.case == "taxinet" and not args.contingency:
        for env in args.env or ["nominal"]:
            envs[env] = {"case": "taxinet", "noise": args.noise}
    if not envs:
        raise UsageError("no model given; use --chain, --contingency or --case")
    return Workspace(ScenarioSpec(envs))


# commands -------------------------------------------------------------------

def cmd_summarize(args):
    ws = _workspace(args)
    seq = parse_sequence(args.sequence)
    c = ws.summary(seq)
    out = Path(args.output) if args.output else (_out_dir(args) or Path(".")) / "summary.json"
    sio.save_summary(c, out)
    print(f"summary of {','.join(map(str, seq))}: {c.n} states, max error {np.max(c.b):.10g}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_forward(args):
    c = sio.load_summary(args.summary)
    pre = _predicate(args.pre, c)
    try:
        value, witness = forward_worst_case(c, pre)
    except VacuousPrecondition as exc:
        print(f"precondition is unsatisfiable: {exc}")
        return EXIT_NEGATIVE
    labels = c.states or [str(i) for i in range(c.n)]
    print(f"worst-case error: {value:.10g}")
    rows = [(s, w) for s, w in zip(labels, witness) if w != 0]
    print(_table(("state", "witness"), rows))
    out = _out_dir(args)
    if out:
        sio.write_csv(out / "forward.csv", ("worst_case_error",), [(value,)])
    return EXIT_OK


def cmd_backward(args):
    c = sio.load_summary(args.summary)
    wp = backward_weakest_precondition(c, args.eps)
    labels = c.states or [str(i) for i in range(c.n)]
    rows = [(s, v, v <= args.eps) for s, v in zip(labels, c.b)]
    print(f"weakest precondition: x . b <= {args.eps:g}")
    print(_table(("state", "error_probability", "point_mass_ok"), rows))
    out = _out_dir(args)
    if out:
        sio.save_predicate(wp, out / "weakest_precondition.json")
        sio.write_csv(out / "backward.csv", ("state", "error_probability", "point_mass_satisfies"), rows)
    return EXIT_OK


def cmd_check(args):
    c = sio.load_summary(args.summary)
    v = check_assertion(HoareAssertion(_predicate(args.pre, c), c, _predicate(args.post, c), args.eps))
    rows = [(k, "" if j is None else j, val, bound) for k, j, val, bound in v.obligations]
    if v.vacuous:
        print("verdict: holds (precondition is unsatisfiable)")
    else:
        print(f"verdict: {'holds' if v.holds else 'fails'}")
        print(_table(("obligation", "index", "max", "bound"), rows))
    if not v.holds:
        print("counterexample: [" + ", ".join(f"{x:.10g}" for x in v.counterexample) + "]")
    out = _out_dir(args)
    if out:
        sio.write_json(out / "check.json", v.to_json())
    return EXIT_OK if v.holds else EXIT_NEGATIVE


def cmd_accelerate(args):
    sums = _summaries(args)
    if args.invariant == "auto":
        grid = parse_eps_grid(args.eps_grid) if args.eps_grid else DEFAULT_EPS_GRID
        found = find_invariant(sums, grid)
        if found is None:
            print("no invariant found on the eps grid")
            return EXIT_NEGATIVE
        phi, eps = found
    elif args.invariant == "trivial":
        phi, eps = AffinePredicate.top(), trivial_epsilon(sums)
    else:
        if args.eps is None:
            raise UsageError("--eps is required with an invariant file")
        phi, eps = sio.load_predicate(args.invariant, sums[0].states), args.eps
    try:
        cert = accelerate(sums, phi, eps)
    except PremiseFailed as exc:
        print(f"premise fails: {exc}")
        return EXIT_NEGATIVE
    print(f"invariant premise holds with eps = {eps:g} for {cert.m} scenario(s)")
    table = cert.bound_table(args.k)
    print(_table(("k", "bound"), table))
    out = _out_dir(args)
    if out:
        sio.save_certificate(cert, out / "certificate.json", args.k)
        sio.write_csv(out / "bounds.csv", ("k", "bound"), table)
    return EXIT_OK


def cmd_invariant(args):
    sums = _summaries(args)
    grid = parse_eps_grid(args.eps_grid) if args.eps_grid else DEFAULT_EPS_GRID
    found = find_invariant(sums, grid)
    if found is None:
        print("no invariant found on the eps grid")
        return EXIT_NEGATIVE
    phi, eps = found
    print(f"invariant found: eps = {eps:g}")
    out = _out_dir(args)
    if out:
        sio.save_predicate(phi, out / "invariant.json")
    return EXIT_OK


def cmd_interleave(args):
    sums = _summaries(args)
    pre = _predicate(args.pre, sums[0])
    prof = interleaving_profile(sums, pre, args.k)
    rows = [(k + 1, v, " ".join(str(i) for i in s)) for k, (v, s) in enumerate(prof)]
    print(_table(("k", "worst_case", "sequence"), rows))
    out = _out_dir(args)
    if out:
        sio.write_csv(out / "interleave.csv", ("k", "worst_case", "sequence"), rows)
    return EXIT_OK


def cmd_simulate(args):
    ws = _workspace(args)
    seq = parse_sequence(args.sequence)
    states = ws.states(seq)
    init = args.init
    if init.endswith(".json"):
        init = sio.read_json(init)
    elif init not in states:
        try:
            init = [float(v) for v in init.split(",")]
        except ValueError:
            raise UsageError(f"--init {init!r} is neither a state, a JSON file nor a probability list") from None
    x = ws.distribution(init, states)
    rep = estimate_error_probability(seq, ws.chains(sc.env for sc in seq), x, args.n, args.seed)
    print(f"error probability: {rep}")
    out = _out_dir(args)
    if out:
        sio.write_json(out / "simulation.json", rep.to_json())
    return EXIT_OK


def cmd_export(args):
    ws = _workspace(args)
    envs = list(ws.spec.environments) if not args.export_env else args.export_env
    out = _out_dir(args) or Path(".")
    for env in envs:
        path = out / f"{env}.tra"
        sio.export_explicit_chain(ws.chain(env), path)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_case_gen(args):
    out = _out_dir(args) or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    if args.case == "f1tenth":
        from .cases.build import build_case_chains, f1tenth_abstractions
        from .cases.f1tenth import F1TenthConfig, F1TenthModel

        if args.config:
            cfg = F1TenthConfig.from_json(sio.read_json(args.config))
        else:
            cfg = F1TenthConfig.reduced() if args.reduced else F1TenthConfig()
        model = F1TenthModel(cfg)
        chains = build_case_chains("f1tenth", f1tenth_abstractions(model, args.noise), model=model)
        sio.write_json(out / "config.json", dict(cfg.to_json(), format_version=1, noise=str(args.noise)))
        for name, p in model.preconditions().items():
            sio.save_predicate(p, out / f"pre_{name}.json")
    elif args.case == "taxinet":
        from .cases.build import build_case_chains
        from .cases.noise import SyntheticNoiseModel
        from .cases.taxinet import illustrative_tables, synthetic_counts
        from .core import normalize_counts

        g, f = illustrative_tables()
        sio.save_controller(g, out / "controller.json")
        sio.save_dynamics(f, out / "dynamics.json")
        envs = args.env or ["nominal"]
        abstractions = {}
        for env in envs:
            cm = synthetic_counts(SyntheticNoiseModel.parse(args.noise))
            sio.save_contingency_csv(cm, out / f"{env}.csv")
            abstractions[env] = normalize_counts(cm)
        chains = build_case_chains("taxinet", abstractions, controller=g, dynamics=f)
    else:
        from .cases.example import example_box, example_chain

        chains = {"C": example_chain()}
        sio.save_predicate(example_box(), out / "box.json")
    for env, m in chains.items():
        sio.export_explicit_chain(m, out / f"{env}.tra")
        print(f"wrote {out / (env + '.tra')} ({m.space.size} states)")
    return EXIT_OK


def run_spec_file(path, out, seed):
    results = run_spec(load_spec(path), out, seed)
    rows = [(r.id, r.kind, r.status, r.data.get("error", "")) for r in results]
    print(_table(("query", "kind", "status", "detail"), rows))
    if any(r.status == ERROR for r in results):
        return EXIT_USAGE
    if any(r.status == NEGATIVE for r in results):
        return EXIT_NEGATIVE
    return EXIT_OK


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(
        prog="scenver",
        description="Scenario-based safety analysis of closed-loop systems with learned perception.",
        epilog="Run 'scenver COMMAND --help' for per-command flags.\n\n" + FORMATS,
        formatter_class=fmt,
    )
    p.add_argument("--spec", help="run every query of a scenario spec JSON file")
    p.add_argument("--out", help=f"report directory (default: ${OUT_ENV})")
    p.add_argument("--seed", type=int, help="seed for simulation queries")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    def cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_, description=help_, epilog=FORMATS, formatter_class=fmt)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", default=argparse.SUPPRESS, help=f"report directory (default: ${OUT_ENV})")
        return sp

    s = cmd("summarize", cmd_summarize, "compute the (A, b) summary of a scenario sequence")
    _add_model_flags(s)
    s.add_argument("--sequence", required=True, help="scenarios as env:H,env:H,...")
    s.add_argument("--output", help="summary file (default: OUT/summary.json)")

    s = cmd("forward", cmd_forward, "worst-case error probability over a precondition")
    s.add_argument("--summary", required=True)
    s.add_argument("--pre", help="precondition predicate JSON (default: true)")

    s = cmd("backward", cmd_backward, "weakest precondition for an error bound")
    s.add_argument("--summary", required=True)
    s.add_argument("--eps", type=float, required=True)

    s = cmd("check", cmd_check, "check an assertion {pre} C {post} {eps}")
    s.add_argument("--summary", required=True)
    s.add_argument("--pre", help="precondition predicate JSON (default: true)")
    s.add_argument("--post", help="postcondition predicate JSON (default: true)")
    s.add_argument("--eps", type=float, required=True)

    s = cmd("accelerate", cmd_accelerate, "bound k-fold scenario compositions from an invariant premise")
    s.add_argument("--summary", action="append", required=True, help="scenario summary (repeat per scenario)")
    s.add_argument("--invariant", default="auto", help="predicate JSON, 'auto' (grid search) or 'trivial' (true)")
    s.add_argument("--eps", type=float, help="local error bound (with an invariant file)")
    s.add_argument("--eps-grid", help="search grid a:b:step for --invariant auto (default 0:0.99:0.01)")
    s.add_argument("--k", type=int, default=10, help="largest k in the bound table")

    s = cmd("invariant", cmd_invariant, "search the eps grid for an invariant precondition")
    s.add_argument("--summary", action="append", required=True)
    s.add_argument("--eps-grid", help="search grid a:b:step (default 0:0.99:0.01)")

    s = cmd("interleave", cmd_interleave, "brute-force worst case over all interleavings up to length k")
    s.add_argument("--summary", action="append", required=True)
    s.add_argument("--pre", help="precondition predicate JSON (default: true)")
    s.add_argument("--k", type=int, required=True)

    s = cmd("simulate", cmd_simulate, "Monte Carlo estimate of the error probability")
    _add_model_flags(s)
    s.add_argument("--sequence", required=True, help="scenarios as env:H,env:H,...")
    s.add_argument("--init", required=True, help="state label, comma-separated probabilities or distribution JSON")
    s.add_argument("--n", type=int, default=10000, help="number of trajectories")
    s.add_argument("--seed", type=int, default=0, help="PCG64 seed (default 0)")

    s = cmd("export", cmd_export, "write closed-loop chains in the explicit format")
    _add_model_flags(s)
    s.add_argument("--export-env", action="append", help="environment to export (default: all)")

    s = cmd("case-gen", cmd_case_gen, "generate a built-in case study's artifacts")
    s.add_argument("--case", choices=("example", "f1tenth", "taxinet"), required=True)
    s.add_argument("--env", action="append", help="TaxiNet condition names (default: nominal)")
    s.add_argument("--noise", default="perfect", help="perfect, uniform:P or neighbor:P")
    s.add_argument("--config", help="F1Tenth config JSON")
    s.add_argument("--reduced", action="store_true", help="use the reduced F1Tenth grid")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.spec:
            if args.command:
                raise UsageError("--spec cannot be combined with a command")
            return run_spec_file(args.spec, _out_dir(args), args.seed)
        if not args.command:
            parser.print_usage(sys.stderr)
            print("scenver: error: a command or --spec is required", file=sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except (UsageError, ScenverError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        parser.print_usage(sys.stderr) if isinstance(exc, UsageError) else None
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args and not isinstance(exc, ScenverError) else exc
        print(f"scenver: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
