"""Reading and writing on-disk artifacts.

Grammars (every JSON document carries ``"format_version": 1``):

Contingency CSV
    header ``state,<y_0>,<y_1>,...``; then one row per true state,
    ``<state>,<count>,...`` with non-negative integer counts.

Controller JSON
    ``{"controls": [...], "estimates": [...], "table": {env: {estimate: control}}}``.
    A bare ``{env: {estimate: control}}`` object is also accepted; estimates
    and controls are then taken in order of first appearance.  The
    environment ``"*"`` serves every environment without an entry.

Dynamics JSON
    ``{"states": [...], "error": "err", "controls": [...],
    "table": {env: {"state|control": next_state}}}``.  ``states`` lists the
    non-error states.  The bare ``{env: {...}}`` form is accepted as for
    controllers, with the error label ``err``.

Summary JSON
    ``{"states": [...], "a": [[...], ...], "b": [...]}`` with every number a
    decimal string of 17 significant digits.  Large summaries may store
    ``"a_csr": {"shape", "indptr", "indices", "data"}`` instead of ``"a"``.

Predicate JSON
    ``{"constraints": [{"a": [...], "theta": r}, ...]}``; see
    :meth:`scenver.linprog.AffinePredicate.from_json` for the state-keyed forms.

Explicit chain
    ``STATES n`` followed by one ``src dst prob`` line per nonzero entry, in
    row-major order, with 0-based indices and ``prob`` the shortest decimal
    that reads back to the same double (integral values without a fraction,
    so certain transitions read ``1``).  The sidecar ``<stem>.labels`` starts
    with ``# format_version 1`` and then lists one state label per line in
    index order; the error state is last.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import ClosedLoopDtmc, ContingencyMatrix, ControllerTable, DynamicsTable, StateSpace
from .errors import DuplicateLabel, NegativeCount, ParseError
from .linprog import AffinePredicate
from .summary import Summary

FORMAT_VERSION = 1


def format_prob(x: float) -> str:
    """Shortest round-trip decimal; integral values drop the fraction."""
    x = float(x)
    if math.isfinite(x) and x == int(x) and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _exact(x: float) -> str:
    return format(float(x), ".17g")


def _check_version(obj, what):
    v = obj.get("format_version", FORMAT_VERSION) if isinstance(obj, dict) else None
    if v is None:
        raise ValueError(f"{what} must be a JSON object")
    if v != FORMAT_VERSION:
        raise ValueError(f"unsupported {what} format_version {v!r}")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


# contingency matrices -------------------------------------------------------

def parse_contingency_csv(text: str) -> ContingencyMatrix:
    rows = list(csv.reader(_io.StringIO(text)))
    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not numbered:
        raise ParseError(1, "empty file")
    line, header = numbered[0]
    header = [c.strip() for c in header]
    if header[0] != "state":
        raise ParseError(line, "header must start with 'state'")
    estimates = header[1:]
    if not estimates:
        raise ParseError(line, "no estimate columns")
    seen = set()
    for y in estimates:
        if not y:
            raise ParseError(line, "empty estimate label")
        if y in seen:
            raise DuplicateLabel(line, f"estimate {y!r} appears twice")
        seen.add(y)
    states, counts = [], []
    seen = set()
    for line, row in numbered[1:]:
        row = [c.strip() for c in row]
        if len(row) != len(header):
            raise ParseError(line, f"expected {len(header)} fields, found {len(row)}")
        s = row[0]
        if not s:
            raise ParseError(line, "empty state label")
        if s in seen:
            raise DuplicateLabel(line, f"state {s!r} appears twice")
        seen.add(s)
        vals = []
        for c in row[1:]:
            try:
                v = int(c)
            except ValueError:
                raise ParseError(line, f"count {c!r} is not an integer") from None
            if v < 0:
                raise NegativeCount(line, f"negative count {v}")
            vals.append(v)
        states.append(s)
        counts.append(vals)
    if not states:
        raise ParseError(numbered[0][0], "no state rows")
    return ContingencyMatrix(states, estimates, np.array(counts, dtype=np.int64))


def load_contingency_csv(path) -> ContingencyMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_contingency_csv(fh.read())


def save_contingency_csv(cm: ContingencyMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", *cm.estimates])
        for s, row in zip(cm.states, cm.counts):
            w.writerow([s, *(int(v) for v in row)])


# controller / dynamics tables ----------------------------------------------

def _first_seen(values):
    return list(dict.fromkeys(values))


def controller_from_json(obj) -> ControllerTable:
    _check_version(obj, "controller")
    if "table" in obj:
        return ControllerTable.from_mapping(obj["controls"], obj["estimates"], obj["table"])
    table = {k: v for k, v in obj.items() if k != "format_version"}
    if not table:
        raise ValueError("controller has no environments")
    first = next(iter(table.values()))
    controls = _first_seen(str(u) for entries in table.values() for u in entries.values())
    return ControllerTable.from_mapping(controls, list(first), table)


def controller_to_json(g: ControllerTable) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "controls": list(g.controls),
        "estimates": list(g.estimates),
        "table": g.to_mapping(),
    }


def dynamics_from_json(obj) -> DynamicsTable:
    _check_version(obj, "dynamics")
    if "table" in obj:
        space = StateSpace.from_safe(obj["states"], obj.get("error", "err"))
        return DynamicsTable.from_mapping(space, obj["controls"], obj["table"])
    table = {k: v for k, v in obj.items() if k != "format_version"}
    if not table:
        raise ValueError("dynamics has no environments")
    keys = [str(k).rpartition("|") for entries in table.values() for k in entries]
    states = _first_seen(s for s, _, _ in keys if s != "err")
    nexts = _first_seen(str(v) for entries in table.values() for v in entries.values())
    states += [s for s in nexts if s != "err" and s not in states]
    controls = _first_seen(u for _, _, u in keys)
    return DynamicsTable.from_mapping(StateSpace.from_safe(states, "err"), controls, table)


def dynamics_to_json(f: DynamicsTable) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "states": list(f.space.safe_labels),
        "error": f.space.error_label,
        "controls": list(f.controls),
        "table": f.to_mapping(),
    }


def load_controller(path) -> ControllerTable:
    return controller_from_json(read_json(path))


def load_dynamics(path) -> DynamicsTable:
    return dynamics_from_json(read_json(path))


def save_controller(g: ControllerTable, path) -> None:
    write_json(path, controller_to_json(g))


def save_dynamics(f: DynamicsTable, path) -> None:
    write_json(path, dynamics_to_json(f))


# summaries ------------------------------------------------------------------

def summary_to_json(c: Summary) -> dict:
    out = {
        "format_version": FORMAT_VERSION,
        "states": list(c.states) if c.states is not None else [str(i) for i in range(c.n)],
    }
    if c.is_sparse:
        a = sp.csr_matrix(c.a)
        a.sort_indices()
        out["a_csr"] = {
            "shape": list(a.shape),
            "indptr": [int(v) for v in a.indptr],
            "indices": [int(v) for v in a.indices],
            "data": [_exact(v) for v in a.data],
        }
    else:
        out["a"] = [[_exact(v) for v in row] for row in c.a]
    out["b"] = [_exact(v) for v in c.b]
    return out


def summary_from_json(obj) -> Summary:
    _check_version(obj, "summary")
    b = np.array([float(v) for v in obj["b"]])
    if "a_csr" in obj:
        d = obj["a_csr"]
        a = sp.csr_matrix(
            (np.array([float(v) for v in d["data"]]), np.array(d["indices"]), np.array(d["indptr"])),
            shape=tuple(d["shape"]),
        )
    else:
        a = np.array([[float(v) for v in row] for row in obj["a"]], dtype=float).reshape(len(b), -1)
    return Summary(a, b, obj.get("states"))


def save_summary(c: Summary, path) -> None:
    write_json(path, summary_to_json(c))


def load_summary(path) -> Summary:
    return summary_from_json(read_json(path))


# predicates -----------------------------------------------------------------

def save_predicate(p: AffinePredicate, path) -> None:
    write_json(path, p.to_json())


def load_predicate(path, states=None) -> AffinePredicate:
    obj = read_json(path)
    _check_version(obj, "predicate")
    return AffinePredicate.from_json(obj, states)


# explicit chains ------------------------------------------------------------

def labels_path(path) -> Path:
    return Path(path).with_suffix(".labels")


def chain_to_text(m: ClosedLoopDtmc) -> str:
    t = sp.csr_matrix(m.transitions)
    t.sum_duplicates()
    t.sort_indices()
    t.eliminate_zeros()
    lines = [f"STATES {m.space.size}"]
    for i in range(t.shape[0]):
        for k in range(t.indptr[i], t.indptr[i + 1]):
            lines.append(f"{i} {int(t.indices[k])} {format_prob(t.data[k])}")
    return "\n".join(lines) + "\n"


def export_explicit_chain(m: ClosedLoopDtmc, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(chain_to_text(m), encoding="utf-8")
    labels = "\n".join([f"# format_version {FORMAT_VERSION}", *m.space.labels]) + "\n"
    labels_path(path).write_text(labels, encoding="utf-8")


def parse_explicit_chain(text: str, labels=None) -> ClosedLoopDtmc:
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError(1, "empty chain file")
    line, head = lines[0]
    parts = head.split()
    if len(parts) != 2 or parts[0] != "STATES":
        raise ParseError(line, "expected header 'STATES n'")
    try:
        n = int(parts[1])
    except ValueError:
        raise ParseError(line, f"bad state count {parts[1]!r}") from None
    if n < 1:
        raise ParseError(line, "a chain needs at least one state")
    rows, cols, vals = [], [], []
    seen = set()
    for line, ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ParseError(line, "expected 'src dst prob'")
        try:
            s, d, p = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(line, "malformed transition") from None
        if not (0 <= s < n and 0 <= d < n):
            raise ParseError(line, f"state index out of range 0..{n - 1}")
        if (s, d) in seen:
            raise ParseError(line, f"transition {s} -> {d} listed twice")
        if p < 0 or not math.isfinite(p):
            raise ParseError(line, f"invalid probability {parts[2]!r}")
        seen.add((s, d))
        rows.append(s), cols.append(d), vals.append(p)
    if labels is None:
        labels = [f"s{i}" for i in range(n - 1)] + ["err"]
    if len(labels) != n:
        raise ParseError(1, f"{len(labels)} labels for {n} states")
    space = StateSpace(tuple(labels), n - 1)
    t = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return ClosedLoopDtmc(space, t)


def load_explicit_chain(path) -> ClosedLoopDtmc:
    path = Path(path)
    lp = labels_path(path)
    labels = None
    if lp.exists():
        raw = lp.read_text(encoding="utf-8").splitlines()
        labels = [ln for ln in raw if ln and not ln.startswith("#")]
    return parse_explicit_chain(path.read_text(encoding="utf-8"), labels)


# certificates and reports ---------------------------------------------------

def save_certificate(cert, path, kmax: int | None = None) -> None:
    obj = cert.to_json()
    if kmax:
        obj["bounds"] = [{"k": k, "bound": b} for k, b in cert.bound_table(kmax)]
    write_json(path, obj)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return format_prob(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))


def read_csv(path) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))
