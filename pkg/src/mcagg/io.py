"""File formats: matrices (csv/json), bigram count ingestion, partition
maps, and selection reports."""
import hashlib
import json
import string

import numpy as np

from .core import StochasticMatrix, make_partition, validate_stochastic
from .errors import (BadAssignment, BadBigram, DuplicateLabel, LabelMismatch,
                     NegativeCount, NonLetter, ParseError, RaggedRows)
from .selection import SelectionOptions, SelectionReport

__all__ = ["parse_matrix", "write_matrix", "ingest_bigrams",
           "parse_partitions", "write_partitions", "write_report",
           "read_report", "file_sha256"]

_LETTERS = string.ascii_lowercase


def file_sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _try_float(tok):
    try:
        return float(tok)
    except ValueError:
        return None


def parse_matrix(path, format="csv"):
    """Load a stochastic matrix. csv rows are comma-separated reals with an
    optional leading label header; json is {"labels"?: [...], "matrix":
    [[...]]}. Rows may be off by 1e-6 and are renormalized exactly."""
    if format == "json":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as e:
                raise ParseError(str(e), line=e.lineno, column=e.colno)
        if not isinstance(obj, dict) or "matrix" not in obj:
            raise ParseError('expected an object with a "matrix" key')
        rows = obj["matrix"]
        labels = obj.get("labels")
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise RaggedRows(f"row lengths {sorted(widths)}")
        return validate_stochastic(np.asarray(rows, dtype=float), tol=1e-6,
                                   labels=tuple(labels) if labels else None)
    if format != "csv":
        raise ValueError(f"unknown matrix format {format!r}")
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ParseError("empty matrix file", line=1)
    labels = None
    start = 0
    head = [t.strip() for t in lines[0].split(",")]
    if any(_try_float(t) is None for t in head):
        labels = tuple(head)
        start = 1
    data = []
    width = None
    for ln_no, ln in enumerate(lines[start:], start + 1):
        toks = [t.strip() for t in ln.split(",")]
        if width is None:
            width = len(toks)
        elif len(toks) != width:
            raise RaggedRows(
                f"line {ln_no} has {len(toks)} fields, expected {width}")
        row = []
        for col, tok in enumerate(toks, 1):
            v = _try_float(tok)
            if v is None:
                raise ParseError(f"bad number {tok!r}", line=ln_no, column=col)
            row.append(v)
        data.append(row)
    return validate_stochastic(np.asarray(data, dtype=float), tol=1e-6,
                               labels=labels)


def write_matrix(matrix, path, format="csv"):
    """Full-precision dump; parse_matrix(write_matrix(m)) reproduces m."""
    rows = matrix.rows if isinstance(matrix, StochasticMatrix) else np.asarray(matrix, float)
    labels = matrix.labels if isinstance(matrix, StochasticMatrix) else None
    if format == "json":
        obj = {"matrix": [[float(v) for v in r] for r in rows]}
        if labels:
            obj["labels"] = list(labels)
        with open(path, "w") as fh:
            json.dump(obj, fh, sort_keys=True)
            fh.write("\n")
        return
    if format != "csv":
        raise ValueError(f"unknown matrix format {format!r}")
    with open(path, "w") as fh:
        if labels:
            fh.write(",".join(labels) + "\n")
        for r in rows:
            fh.write(",".join(f"{v:.17g}" for v in r) + "\n")


def ingest_bigrams(path, smoothing=1.0):
    """26-state chain from letter-pair counts.

    Each nonempty line is `<two lowercase letters> <count>`. Counts
    accumulate into (first letter -> second letter); smoothing is added to
    every cell before row normalization, so the default eta=1 guarantees
    strictly positive rows. Rows with no mass at eta=0 become uniform.
    """
    C = np.zeros((26, 26))
    with open(path) as fh:
        for ln_no, raw in enumerate(fh, 1):
            ln = raw.strip()
            if not ln:
                continue
            toks = ln.split()
            if len(toks) != 2 or len(toks[0]) != 2:
                raise BadBigram(f"line {ln_no}: expected '<pair> <count>', "
                                f"got {ln!r}")
            pair, cnt = toks
            if not all(c in _LETTERS for c in pair):
                raise NonLetter(f"line {ln_no}: pair {pair!r} is not two "
                                "lowercase letters")
            try:
                val = int(cnt)
            except ValueError:
                raise BadBigram(f"line {ln_no}: count {cnt!r} is not an "
                                "integer")
            if val < 0:
                raise NegativeCount(f"line {ln_no}: count {val}")
            C[_LETTERS.index(pair[0]), _LETTERS.index(pair[1])] += val
    C = C + float(smoothing)
    sums = C.sum(axis=1)
    dead = sums == 0.0
    C[dead] = 1.0
    sums[dead] = 26.0
    rows = C / sums[:, None]
    return StochasticMatrix(rows=rows, labels=tuple(_LETTERS))


def parse_partitions(path, labels=None):
    """k -> Partition map from json. Values are either length-n index
    arrays or lists of label sets (resolved against the matrix labels)."""
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(str(e), line=e.lineno, column=e.colno)
    if not isinstance(obj, dict):
        raise ParseError("expected an object keyed by k")
    out = {}
    n_seen = None
    for key, val in obj.items():
        try:
            k = int(key)
        except ValueError:
            raise BadAssignment(key, f"key {key!r} is not an integer")
        if not isinstance(val, list) or not val:
            raise BadAssignment(k, "value must be a nonempty list")
        if isinstance(val[0], list):
            assign = _resolve_label_sets(k, val, labels)
        else:
            try:
                assign = np.asarray([int(v) for v in val], dtype=int)
            except (TypeError, ValueError):
                raise BadAssignment(k, "indices must be integers")
        if n_seen is None:
            n_seen = len(assign)
        elif len(assign) != n_seen:
            raise BadAssignment(k, f"length {len(assign)} != {n_seen} used "
                                "by other entries")
        try:
            out[k] = make_partition(assign, k=k)
        except Exception as e:
            raise BadAssignment(k, str(e))
    return out


def _resolve_label_sets(k, sets, labels):
    if labels is None:
        raise LabelMismatch(f"k={k} uses label sets but the matrix has no "
                            "labels")
    index = {lab: i for i, lab in enumerate(labels)}
    if len(sets) != k:
        raise BadAssignment(k, f"{len(sets)} label sets for k={k}")
    assign = np.full(len(labels), -1, dtype=int)
    for j, group in enumerate(sets):
        for lab in group:
            if lab not in index:
                raise LabelMismatch(f"unknown label {lab!r} in k={k}")
            if assign[index[lab]] != -1:
                raise DuplicateLabel(f"label {lab!r} appears twice in k={k}")
            assign[index[lab]] = j
    if (assign == -1).any():
        missing = [labels[i] for i in np.where(assign == -1)[0]]
        raise LabelMismatch(f"k={k} label sets do not cover {missing}")
    return assign


def write_partitions(partitions, path):
    obj = {str(k): [int(v) for v in p.assign] for k, p in partitions.items()}
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")


def _fmt(x):
    return f"{x:.12f}"


def write_report(report, path, format="csv", input_hash=None):
    """Emit a selection report. csv columns are k,t_bar,nu (nu blank for
    the smallest k, 12 decimal places); json carries the same rows plus
    per-superstate heterogeneity and the options echo."""
    ks = sorted(report.t_bars)
    opts = report.options
    if format == "csv":
        with open(path, "w") as fh:
            fh.write(f"# input: {input_hash or '-'}\n")
            fh.write(f"# options: mode={opts.mode},membership="
                     f"{opts.membership},floor={opts.floor:g}\n")
            fh.write(f"# k_t: {report.k_t}\n")
            fh.write("k,t_bar,nu\n")
            for k in ks:
                nu = report.nus.get(k)
                cell = "" if nu is None or not np.isfinite(nu) else _fmt(nu)
                fh.write(f"{k},{_fmt(report.t_bars[k])},{cell}\n")
        return
    if format != "json":
        raise ValueError(f"unknown report format {format!r}")
    rows = []
    for k in ks:
        nu = report.nus.get(k)
        rows.append({
            "k": k,
            "t_bar": float(report.t_bars[k]),
            "nu": (None if nu is None or not np.isfinite(nu) else float(nu)),
            "per_superstate": [float(v) for v in
                               report.per_superstate.get(k, [])],
        })
    obj = {
        "k_t": report.k_t,
        "exact_fit": bool(report.exact_fit),
        "input": input_hash,
        "options": {"mode": opts.mode, "membership": opts.membership,
                    "floor": opts.floor},
        "rows": rows,
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_report(path):
    """Inverse of write_report(format=json)."""
    with open(path) as fh:
        obj = json.load(fh)
    t_bars = {r["k"]: r["t_bar"] for r in obj["rows"]}
    nus = {}
    for r in obj["rows"]:
        if r["nu"] is not None:
            nus[r["k"]] = r["nu"]
        elif obj.get("exact_fit") and r["k"] > min(t_bars):
            nus[r["k"]] = float("inf")
    o = obj.get("options", {})
    per = {r["k"]: r.get("per_superstate", []) for r in obj["rows"]}
    return SelectionReport(
        k_t=obj["k_t"], t_bars=t_bars, nus=nus,
        options=SelectionOptions(mode=o.get("mode", "plain"),
                                 membership=o.get("membership", "normalized"),
                                 floor=o.get("floor", 1e-12)),
        exact_fit=bool(obj.get("exact_fit", False)),
        per_superstate={k: v for k, v in per.items() if v})
