"""Scenario spec files: model resolution and batch query execution.

A spec is a JSON object::

    {
      "format_version": 1,
      "environments": [
        {"id": "bright", "contingency": "bright.csv",
         "controller": "ctrl.json", "dynamics": "dyn.json"},
        {"id": "left", "case": "f1tenth", "segment": "left",
         "reduced": true, "noise": "uniform:0.1"},
        {"id": "C", "chain": "example.tra"}
      ],
      "sequence": [{"env": "bright", "horizon": 20}],
      "preconditions": {"phi": {"constraints": [...]}},
      "queries": [{"kind": "forward", "pre": "phi"}, ...]
    }

Environment sources: ``chain`` (explicit chain file), ``contingency`` with
``controller`` and ``dynamics`` table files, or ``case`` one of ``example``,
``f1tenth`` (``segment``, ``config`` object or ``reduced``, ``noise``) and
``taxinet`` (``noise`` or ``contingency``; illustrative tables unless
``controller``/``dynamics`` are given).  Relative paths are resolved against
the spec file's directory.  ``environments`` may also be an object keyed by id.

Query kinds and their fields (``id`` and ``sequence`` are optional on all;
``scenarios`` defaults to the distinct scenarios of the sequence):

* ``summarize``
* ``forward``: ``pre``
* ``backward``: ``eps``
* ``check``: ``pre``, ``post``, ``eps``
* ``accelerate``: ``scenarios``, ``invariant`` (a predicate, ``"auto"`` or
  ``"trivial"``), ``eps``, ``k``, optional ``brute_force`` (max k)
* ``invariant``: ``scenarios``, ``eps_grid``
* ``interleave``: ``scenarios``, ``pre``, ``k``
* ``simulate``: ``init``, ``n``, ``seed``

Predicates are names from ``preconditions``, built-in case predicates (e.g.
``nominal`` for F1Tenth), ``"true"``, or inline predicate objects.
Distributions (``init``) are a list of probabilities, ``{"state": label}``,
``{"uniform": [labels]}`` or a state-keyed object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as sio
from .analysis import (
    DEFAULT_EPS_GRID,
    accelerate,
    backward_weakest_precondition,
    check_assertion,
    find_invariant,
    forward_worst_case,
    HoareAssertion,
    interleaving_profile,
    parse_eps_grid,
    trivial_epsilon,
)
from .core import ClosedLoopDtmc, compose_closed_loop, normalize_counts, validate_dtmc
from .errors import DomainMismatch, PremiseFailed, ScenverError, UnknownEnvironment
from .linprog import AffinePredicate
from .simulator import estimate_error_probability
from .summary import Scenario, parse_sequence, summarize, summarize_sequence

QUERY_KINDS = (
    "summarize", "forward", "backward", "check", "accelerate",
    "invariant", "interleave", "simulate",
)
OK, NEGATIVE, ERROR = "ok", "negative", "error"


def _scenarios(obj) -> tuple:
    if obj is None:
        return ()
    if isinstance(obj, str):
        return parse_sequence(obj)
    out = []
    for item in obj:
        if isinstance(item, str):
            out.extend(parse_sequence(item))
        else:
            out.append(Scenario(item["env"], item["horizon"]))
    return tuple(out)


@dataclass
class ScenarioSpec:
    environments: dict
    sequence: tuple = ()
    preconditions: dict = field(default_factory=dict)
    queries: list = field(default_factory=list)
    base_dir: Path = Path(".")

    @classmethod
    def from_json(cls, obj: dict, base_dir=".") -> "ScenarioSpec":
        if not isinstance(obj, dict):
            raise ValueError("a spec must be a JSON object")
        v = obj.get("format_version", 1)
        if v != 1:
            raise ValueError(f"unsupported spec format_version {v!r}")
        envs = obj.get("environments", {})
        if isinstance(envs, list):
            out = {}
            for i, e in enumerate(envs):
                if "id" not in e:
                    raise ValueError(f"environment {i} has no id")
                if e["id"] in out:
                    raise ValueError(f"environment {e['id']!r} is declared twice")
                out[str(e["id"])] = {k: v for k, v in e.items() if k != "id"}
            envs = out
        queries = []
        for i, q in enumerate(obj.get("queries", [])):
            kind = q.get("kind")
            if kind not in QUERY_KINDS:
                raise ValueError(f"query {i} has unknown kind {kind!r}")
            queries.append(dict(q, id=str(q.get("id", f"q{i + 1}_{kind}"))))
        ids = [q["id"] for q in queries]
        if len(set(ids)) != len(ids):
            raise ValueError("query ids must be unique")
        return cls(envs, _scenarios(obj.get("sequence")), dict(obj.get("preconditions", {})), queries, Path(base_dir))


def load_spec(path) -> ScenarioSpec:
    path = Path(path)
    return ScenarioSpec.from_json(sio.read_json(path), path.parent)


class Workspace:
    """Lazily built chains and resolved predicates of one spec."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self._chains = {}
        self._summaries = {}
        self._models = {}
        self._builtin = {}

    def _path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.spec.base_dir / p

    def _f1tenth_model(self, src):
        from .cases.f1tenth import F1TenthConfig, F1TenthModel

        if "config" in src:
            cfg = src["config"]
            cfg = F1TenthConfig.from_json(sio.read_json(self._path(cfg)) if isinstance(cfg, str) else cfg)
        else:
            cfg = F1TenthConfig.reduced() if src.get("reduced") else F1TenthConfig()
        key = json.dumps(cfg.to_json(), sort_keys=True)
        if key not in self._models:
            self._models[key] = F1TenthModel(cfg)
        return self._models[key]

    def _build(self, env) -> ClosedLoopDtmc:
        if env not in self.spec.environments:
            raise UnknownEnvironment(env)
        src = self.spec.environments[env]
        case = str(src.get("case", "")).lower()
        if "chain" in src:
            return sio.load_explicit_chain(self._path(src["chain"]))
        if case == "example":
            from .cases.example import example_chain

            return example_chain()
        if case == "f1tenth":
            from .cases.build import f1tenth_abstractions

            model = self._f1tenth_model(src)
            seg = src.get("segment", env)
            alpha = f1tenth_abstractions(model, {seg: src.get("noise", "perfect")})[seg]
            self._builtin.setdefault("f1tenth", model)
            return compose_closed_loop(alpha, model.controller, model.dynamics, seg)
        if case == "taxinet":
            from .cases.noise import SyntheticNoiseModel, synthetic_abstraction
            from .cases.taxinet import illustrative_tables, taxinet_space

            g, f = illustrative_tables()
            if "controller" in src:
                g = sio.load_controller(self._path(src["controller"]))
            if "dynamics" in src:
                f = sio.load_dynamics(self._path(src["dynamics"]))
            if "contingency" in src:
                alpha = normalize_counts(sio.load_contingency_csv(self._path(src["contingency"])))
            else:
                alpha = synthetic_abstraction(taxinet_space(), SyntheticNoiseModel.parse(src.get("noise", "perfect")))
            m = compose_closed_loop(alpha, g, f, src.get("table_env", env))
        elif "contingency" in src:
            for key in ("controller", "dynamics"):
                if key not in src:
                    raise ValueError(f"environment {env!r} needs a {key} table")
            alpha = normalize_counts(sio.load_contingency_csv(self._path(src["contingency"])))
            g = sio.load_controller(self._path(src["controller"]))
            f = sio.load_dynamics(self._path(src["dynamics"]))
            m = compose_closed_loop(alpha, g, f, src.get("table_env", env))
        else:
            raise ValueError(f"environment {env!r} has no model source")
        problems = validate_dtmc(m)
        if problems:
            raise DomainMismatch(f"chain for {env!r} is invalid: {problems[:3]}")
        return m

    def chain(self, env) -> ClosedLoopDtmc:
        if env not in self._chains:
            self._chains[env] = self._build(env)
        return self._chains[env]

    def chains(self, envs) -> dict:
        return {e: self.chain(e) for e in dict.fromkeys(envs)}

    def sequence(self, q) -> tuple:
        seq = _scenarios(q.get("sequence")) or self.spec.sequence
        if not seq:
            raise ValueError("no scenario sequence given")
        return seq

    def scenarios(self, q) -> tuple:
        scs = _scenarios(q.get("scenarios"))
        return scs or tuple(dict.fromkeys(self.sequence(q)))

    def summary(self, seq):
        key = tuple(seq)
        if key not in self._summaries:
            if len(key) == 1:
                sc = key[0]
                self._summaries[key] = summarize(self.chain(sc.env), sc.horizon)
            else:
                self._summaries[key] = summarize_sequence(key, self.chains(sc.env for sc in key))
        return self._summaries[key]

    def states(self, seq):
        return self.chain(seq[0].env).space.safe_labels

    def predicate(self, ref, states) -> AffinePredicate:
        if ref is None or ref == "true":
            return AffinePredicate.top()
        if isinstance(ref, dict):
            return AffinePredicate.from_json(ref, states)
        if ref in self.spec.preconditions:
            obj = self.spec.preconditions[ref]
            if isinstance(obj, str):
                return sio.load_predicate(self._path(obj), states)
            return AffinePredicate.from_json(obj, states)
        model = self._builtin.get("f1tenth")
        if model is not None and tuple(model.space.safe_labels) == tuple(states):
            pre = model.preconditions()
            if ref in pre:
                return pre[ref]
        raise KeyError(f"unknown predicate {ref!r}")

    def distribution(self, ref, states) -> np.ndarray:
        n = len(states)
        pos = {s: i for i, s in enumerate(states)}
        if isinstance(ref, list):
            return np.asarray(ref, dtype=float)
        x = np.zeros(n)
        if isinstance(ref, str):
            ref = {"state": ref}
        if "state" in ref:
            x[pos[ref["state"]]] = 1.0
        elif "uniform" in ref:
            for s in ref["uniform"]:
                x[pos[s]] = 1.0 / len(ref["uniform"])
        else:
            for s, v in ref.items():
                x[pos[s]] = float(v)
        return x


@dataclass
class QueryResult:
    id: str
    kind: str
    status: str
    data: dict = field(default_factory=dict)
    header: tuple = ()
    rows: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind, "status": self.status, **self.data}


def _q_summarize(ws, q, seed):
    seq = ws.sequence(q)
    c = ws.summary(seq)
    states = ws.states(seq)
    data = {"sequence": [str(s) for s in seq], "max_error": float(np.max(c.b)), "summary": sio.summary_to_json(c)}
    return OK, data, ("state", "error_probability"), list(zip(states, c.b))


def _q_forward(ws, q, seed):
    seq = ws.sequence(q)
    c = ws.summary(seq)
    pre = ws.predicate(q.get("pre"), ws.states(seq))
    value, witness = forward_worst_case(c, pre)
    data = {"sequence": [str(s) for s in seq], "worst_case_error": value, "witness": [float(v) for v in witness]}
    return OK, data, ("query", "worst_case_error"), [(q["id"], value)]


def _q_backward(ws, q, seed):
    seq = ws.sequence(q)
    c = ws.summary(seq)
    eps = float(q["eps"])
    wp = backward_weakest_precondition(c, eps)
    data = {"sequence": [str(s) for s in seq], "eps": eps, "precondition": wp.to_json()}
    rows = [(s, v, bool(v <= eps)) for s, v in zip(ws.states(seq), c.b)]
    return OK, data, ("state", "error_probability", "point_mass_satisfies"), rows


def _q_check(ws, q, seed):
    seq = ws.sequence(q)
    c = ws.summary(seq)
    states = ws.states(seq)
    v = check_assertion(HoareAssertion(ws.predicate(q.get("pre"), states), c, ws.predicate(q.get("post"), states), float(q["eps"])))
    rows = [(k, "" if j is None else j, val, bound) for k, j, val, bound in v.obligations]
    return (OK if v.holds else NEGATIVE), v.to_json(), ("obligation", "index", "max", "bound"), rows


def _q_accelerate(ws, q, seed):
    scs = ws.scenarios(q)
    sums = [ws.summary((sc,)) for sc in scs]
    states = ws.states(scs)
    inv = q.get("invariant", "auto")
    if inv == "auto":
        grid = parse_eps_grid(q["eps_grid"]) if "eps_grid" in q else DEFAULT_EPS_GRID
        found = find_invariant(sums, grid)
        if found is None:
            return NEGATIVE, {"reason": "no invariant on the eps grid"}, (), []
        phi, eps = found
    elif inv == "trivial":
        phi, eps = AffinePredicate.top(), trivial_epsilon(sums)
    else:
        phi, eps = ws.predicate(inv, states), float(q["eps"])
    try:
        cert = accelerate(sums, phi, eps)
    except PremiseFailed as exc:
        return NEGATIVE, {"reason": str(exc), "premise": exc.index}, (), []
    kmax = int(q.get("k", 10))
    data = cert.to_json()
    data["scenarios"] = [str(s) for s in scs]
    table = cert.bound_table(kmax)
    brute = int(q.get("brute_force", 0))
    if brute:
        prof = interleaving_profile(sums, phi, brute)
        rows = [(k, b, prof[k - 1][0] if k <= brute else None) for k, b in table]
        return OK, data, ("k", "bound", "worst_case"), rows
    return OK, data, ("k", "bound"), table


def _q_invariant(ws, q, seed):
    scs = ws.scenarios(q)
    sums = [ws.summary((sc,)) for sc in scs]
    grid = parse_eps_grid(q["eps_grid"]) if "eps_grid" in q else DEFAULT_EPS_GRID
    found = find_invariant(sums, grid)
    if found is None:
        return NEGATIVE, {"found": False}, ("found", "eps"), [(False, None)]
    phi, eps = found
    return OK, {"found": True, "eps": eps, "invariant": phi.to_json()}, ("found", "eps"), [(True, eps)]


def _q_interleave(ws, q, seed):
    scs = ws.scenarios(q)
    sums = [ws.summary((sc,)) for sc in scs]
    pre = ws.predicate(q.get("pre"), ws.states(scs))
    prof = interleaving_profile(sums, pre, int(q["k"]))
    names = [str(s) for s in scs]
    rows = [(k + 1, v, " ".join(names[i] for i in s)) for k, (v, s) in enumerate(prof)]
    return OK, {"scenarios": names, "worst_case": [r[1] for r in rows]}, ("k", "worst_case", "sequence"), rows


def _q_simulate(ws, q, seed):
    seq = ws.sequence(q)
    x = ws.distribution(q["init"], ws.states(seq))
    s = int(seed if seed is not None else q.get("seed", 0))
    rep = estimate_error_probability(seq, ws.chains(sc.env for sc in seq), x, int(q.get("n", 10000)), s)
    expected = float(x @ ws.summary(seq).b)
    data = dict(rep.to_json(), summary_value=expected)
    return OK, data, ("runs", "error_hits", "estimate", "std_error", "seed", "summary_value"), [
        (rep.runs, rep.error_hits, rep.estimate, rep.std_error, rep.seed, expected)
    ]


_HANDLERS = {
    "summarize": _q_summarize,
    "forward": _q_forward,
    "backward": _q_backward,
    "check": _q_check,
    "accelerate": _q_accelerate,
    "invariant": _q_invariant,
    "interleave": _q_interleave,
    "simulate": _q_simulate,
}


def _describe(exc) -> str:
    if isinstance(exc, KeyError) and not isinstance(exc, ScenverError):
        return f"{type(exc).__name__}: {exc.args[0] if exc.args else ''}"
    return f"{type(exc).__name__}: {exc}"


def run_spec(spec: ScenarioSpec, out=None, seed=None) -> list:
    """Run every query of ``spec``; errors are recorded per query.

    With ``out`` the bundle is written there: ``report.json``, one
    ``<query id>.csv`` per successful query and ``queries.csv``.  ``seed``
    overrides the seeds of simulation queries.
    """
    ws = Workspace(spec)
    results = []
    for q in spec.queries:
        try:
            status, data, header, rows = _HANDLERS[q["kind"]](ws, q, seed)
            results.append(QueryResult(q["id"], q["kind"], status, data, tuple(header), rows))
        except Exception as exc:  # noqa: BLE001 - collected into the report
            results.append(QueryResult(q["id"], q["kind"], ERROR, {"error": _describe(exc)}))
    if out is not None:
        write_bundle(results, out)
    return results


def _headline(r: QueryResult):
    for key in ("worst_case_error", "estimate", "eps", "max_error", "epsilon", "value", "error"):
        if key in r.data and r.data[key] is not None:
            return r.data[key]
    return None


def write_bundle(results, out) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sio.write_json(out / "report.json", {"format_version": 1, "queries": [r.to_json() for r in results]})
    for r in results:
        if r.header:
            sio.write_csv(out / f"{r.id}.csv", r.header, r.rows)
    sio.write_csv(out / "queries.csv", ("id", "kind", "status", "value"), [(r.id, r.kind, r.status, _headline(r)) for r in results])
