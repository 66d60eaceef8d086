"""JSON document formats.

Complex numbers are ``[re, im]`` pairs and matrices are
``{"rows", "cols", "entries"}`` with row-major entries.  Emission is
canonical (sorted keys, sorted index lists) so parse-then-emit is
byte-stable.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .ckt import CKTFamily
from .dilation import Dilation
from .errors import DocumentError, StardilError
from .free import DirectedGraph, TruncatedFreeTable, _build
from .maps import CoherentMap
from .semigroupoid import UNDEF, SemigroupoidTable
from .algebroid import AmplifiedElement, FormalElement, PositiveForm

VERSION = 1

_INT = {"type": "integer", "minimum": 0}
_PAIR = {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2}
_TRIPLE = {"type": "array", "items": _INT, "minItems": 3, "maxItems": 3}
_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_MATRIX = {
    "type": "object",
    "required": ["rows", "cols", "entries"],
    "properties": {"rows": _INT, "cols": _INT, "entries": {"type": "array", "items": _COMPLEX}},
}
_GRAPH = {
    "type": "object",
    "required": ["vertices", "edges"],
    "properties": {
        "vertices": _INT,
        "edges": {"type": "array", "items": _PAIR},
        "names": {"type": "array", "items": {"type": "string"}},
    },
}

SGD_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "objects", "elements", "mul"],
    "properties": {
        "format": {"const": "sgd"},
        "version": {"const": VERSION},
        "objects": _INT,
        "elements": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "d", "c"],
                "properties": {"id": _INT, "d": _INT, "c": _INT, "label": {"type": "string"}},
            },
        },
        "mul": {"type": "array", "items": _TRIPLE},
        "star": {"type": "array", "items": _PAIR},
        "units": {"type": "array", "items": _PAIR},
        "truncation": {
            "type": "object",
            "required": ["max_length", "lengths"],
            "properties": {"max_length": _INT, "lengths": {"type": "array", "items": _INT}},
        },
        "free": {
            "type": "object",
            "required": ["graph", "flavor", "L_max"],
            "properties": {
                "graph": _GRAPH,
                "flavor": {"enum": ["plain", "starred", "groupoid"]},
                "L_max": {"type": "integer", "minimum": 1},
                "with_units": {"type": "boolean"},
            },
        },
        "ordering": {"type": "array", "items": _INT},
    },
}

MAP_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "sgd", "X", "tau", "dims", "mats"],
    "properties": {
        "format": {"const": "map"},
        "version": {"const": VERSION},
        "sgd": {"type": ["object", "string"]},
        "X": _INT,
        "tau": {"type": "array", "items": _PAIR},
        "dims": {"type": "array", "items": _PAIR},
        "mats": {
            "type": "array",
            "items": {**_MATRIX, "required": ["element_id", "rows", "cols", "entries"],
                      "properties": {**_MATRIX["properties"], "element_id": _INT}},
        },
    },
}

DILATION_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "tau", "hdims", "block_sizes", "rep", "V"],
    "properties": {
        "format": {"const": "dilation"},
        "version": {"const": VERSION},
        "tau": {"type": "array", "items": _INT},
        "hdims": {"type": "array", "items": _INT},
        "block_sizes": {"type": "array", "items": _INT},
        "ordering": {"type": "array", "items": _INT},
        "rep": {"type": "array", "items": {**_MATRIX, "required": ["element_id", "rows", "cols", "entries"]}},
        "V": {"type": "array", "items": {**_MATRIX, "required": ["object", "rows", "cols", "entries"]}},
    },
}

CKT_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "graph", "dim", "P", "S"],
    "properties": {
        "format": {"const": "ckt"},
        "version": {"const": VERSION},
        "graph": _GRAPH,
        "dim": _INT,
        "P": {"type": "array", "items": {**_MATRIX, "required": ["vertex", "rows", "cols", "entries"]}},
        "S": {"type": "array", "items": {**_MATRIX, "required": ["edge", "rows", "cols", "entries"]}},
    },
}

GRAPH_SCHEMA = {**_GRAPH, "required": ["format", "vertices", "edges"],
                "properties": {**_GRAPH["properties"], "format": {"const": "graph"}}}

MATRIX_SCHEMA = {**_MATRIX, "required": ["format", "rows", "cols", "entries"],
                 "properties": {**_MATRIX["properties"], "format": {"const": "matrix"}}}

_FORMAL = {
    "type": "object",
    "required": ["fiber", "terms"],
    "properties": {
        "fiber": _PAIR,
        "terms": {"type": "array", "items": {"type": "array", "prefixItems": [_INT, {"type": "number"}, {"type": "number"}],
                                             "minItems": 3, "maxItems": 3}},
    },
}

AMPLIFIED_SCHEMA = {
    "type": "object",
    "required": ["format", "s", "t", "entries"],
    "properties": {
        "format": {"const": "amplified"},
        "s": {"type": "array", "items": _INT},
        "t": {"type": "array", "items": _INT},
        "entries": {"type": "array", "items": {"type": "array", "items": _FORMAL}},
    },
}

FORM_SCHEMA = {
    "type": "object",
    "required": ["format", "sgd", "values"],
    "properties": {
        "format": {"const": "form"},
        "sgd": {"type": ["object", "string"]},
        "values": {"type": "array", "items": _COMPLEX},
    },
}


# ---------------------------------------------------------------------------
# low level


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "$"


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(exc.msg, line=exc.lineno, col=exc.colno) from None


def _check(doc, schema) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise DocumentError(exc.message, path=_path(exc.absolute_path)) from None


def _nested(exc: DocumentError, where: str) -> DocumentError:
    """Re-anchor an error raised on a sub-document at ``where``."""
    inner = "" if exc.path in ("", "$") else exc.path
    if not inner:
        return DocumentError(exc.message, path=where)
    sep = "" if inner.startswith("[") or where == "$" else "."
    return DocumentError(exc.message, path=inner if where == "$" else f"{where}{sep}{inner}")


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def read(path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DocumentError(f"{path} is not UTF-8: {exc}") from None
    return loads(text)


def write(path, doc) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def _num(v: float):
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2 ** 53 else v


def complex_pair(z: complex) -> list:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def matrix_doc(m, **extra) -> dict:
    m = np.asarray(m, dtype=complex)
    doc = {"rows": int(m.shape[0]), "cols": int(m.shape[1]),
           "entries": [complex_pair(z) for z in m.reshape(-1)]}
    doc.update(extra)
    return doc


def matrix_from(doc, where: str) -> np.ndarray:
    r, c, e = doc["rows"], doc["cols"], doc["entries"]
    if len(e) != r * c:
        raise DocumentError(f"{len(e)} entries for a {r}x{c} matrix", path=where)
    arr = np.array([complex(a, b) for a, b in e], dtype=complex).reshape(r, c)
    if not np.all(np.isfinite(arr)):
        raise DocumentError("non-finite matrix entry", path=where)
    return arr


# ---------------------------------------------------------------------------
# sgd


def graph_doc(g: DirectedGraph, fmt: bool = False) -> dict:
    doc: dict = {"vertices": g.n_vertices, "edges": [list(e) for e in g.edges]}
    if g.names is not None:
        doc["names"] = list(g.names)
    if fmt:
        doc["format"] = "graph"
    return doc


def graph_from(doc, where: str = "$") -> DirectedGraph:
    try:
        return DirectedGraph(doc["vertices"], tuple(tuple(e) for e in doc["edges"]),
                             tuple(doc["names"]) if "names" in doc else None)
    except StardilError as exc:
        raise DocumentError(str(exc), path=where) from None


def parse_graph(doc) -> DirectedGraph:
    _check(doc, GRAPH_SCHEMA)
    return graph_from(doc)


def sgd_doc(t: SemigroupoidTable, ordering=None) -> dict:
    doc: dict = {
        "format": "sgd",
        "version": VERSION,
        "objects": t.n_objects,
        "elements": [
            {"id": a, "d": int(t.src[a]), "c": int(t.tgt[a]), **({"label": t.labels[a]} if t.labels else {})}
            for a in range(t.n_elements)
        ],
        "mul": sorted([list(x) for x in t.products()]),
    }
    if t.star is not None:
        doc["star"] = [[a, int(t.star[a])] for a in range(t.n_elements)]
    if t.units is not None:
        doc["units"] = [[s, int(t.units[s])] for s in range(t.n_objects)]
    if t.is_truncated:
        doc["truncation"] = {"max_length": int(t.max_length), "lengths": [int(x) for x in t.lengths]}
    if isinstance(t, TruncatedFreeTable) and t.graph is not None:
        doc["free"] = {"graph": graph_doc(t.graph), "flavor": t.flavor, "L_max": t.L_max,
                       "with_units": t.units is not None}
    if ordering is not None:
        doc["ordering"] = [int(a) for a in ordering]
    return doc


def parse_sgd(doc) -> SemigroupoidTable:
    _check(doc, SGD_SCHEMA)
    m = doc["objects"]
    els = doc["elements"]
    n = len(els)
    for i, e in enumerate(els):
        if e["id"] != i:
            raise DocumentError(f"element ids must be dense and in order, expected {i}", path=f"elements[{i}].id")
        for key in ("d", "c"):
            if e[key] >= m:
                raise DocumentError(f"unknown object id {e[key]}", path=f"elements[{i}].{key}")
    mul = np.full((n, n), UNDEF, dtype=np.int64)
    seen: dict[tuple[int, int], int] = {}
    for k, (a, b, ab) in enumerate(doc["mul"]):
        for pos, v in enumerate((a, b, ab)):
            if v >= n:
                raise DocumentError(f"unknown element id {v}", path=f"mul[{k}][{pos}]")
        if (a, b) in seen and mul[a, b] != ab:
            j = seen[(a, b)]
            raise DocumentError(
                f"conflicting products {doc['mul'][j]} (mul[{j}]) and {[a, b, ab]} (mul[{k}])",
                path=f"mul[{k}]",
            )
        seen[(a, b)] = k
        mul[a, b] = ab
    star = None
    if "star" in doc:
        star = [-1] * n
        for k, (a, b) in enumerate(doc["star"]):
            for pos, v in enumerate((a, b)):
                if v >= n:
                    raise DocumentError(f"unknown element id {v}", path=f"star[{k}][{pos}]")
            if star[a] not in (-1, b):
                raise DocumentError(f"element {a} has two stars", path=f"star[{k}]")
            star[a] = b
        if -1 in star:
            raise DocumentError(f"no star given for element {star.index(-1)}", path="star")
    units = None
    if "units" in doc:
        units = [-1] * m
        for k, (s, e) in enumerate(doc["units"]):
            if s >= m:
                raise DocumentError(f"unknown object id {s}", path=f"units[{k}][0]")
            if e >= n:
                raise DocumentError(f"unknown element id {e}", path=f"units[{k}][1]")
            units[s] = e
        if -1 in units:
            raise DocumentError(f"no unit given for object {units.index(-1)}", path="units")
    kw = {}
    if "truncation" in doc:
        tr = doc["truncation"]
        if len(tr["lengths"]) != n:
            raise DocumentError("one length per element required", path="truncation.lengths")
        kw = {"lengths": tr["lengths"], "max_length": tr["max_length"]}
    labels = [e.get("label", str(e["id"])) for e in els] if any("label" in e for e in els) else None
    table = SemigroupoidTable(m, [e["d"] for e in els], [e["c"] for e in els], mul,
                              star=star, units=units, labels=labels, **kw)
    if "free" in doc:
        fr = doc["free"]
        g = graph_from(fr["graph"], "free.graph")
        rebuilt = _build(g, fr["L_max"], fr["flavor"], fr.get("with_units", True))
        if not _same_table(rebuilt, table):
            raise DocumentError("table does not match the free construction it declares", path="free")
        return rebuilt
    return table


def _same_table(a: SemigroupoidTable, b: SemigroupoidTable) -> bool:
    def eq(x, y):
        return (x is None and y is None) or (x is not None and y is not None and np.array_equal(x, y))

    return (a.n_objects == b.n_objects and eq(a.src, b.src) and eq(a.tgt, b.tgt)
            and eq(a.mul, b.mul) and eq(a.star, b.star) and eq(a.units, b.units))


def sgd_ordering(doc) -> list[int] | None:
    return doc.get("ordering")


# ---------------------------------------------------------------------------
# maps


def _resolve_sgd(ref, base: Path | None, where: str) -> SemigroupoidTable:
    if isinstance(ref, str):
        p = Path(ref)
        if base is not None and not p.is_absolute():
            p = base / p
        try:
            return parse_sgd(read(p))
        except DocumentError as exc:
            raise DocumentError(f"in referenced table {p}: {exc}", path=where) from None
    try:
        return parse_sgd(ref)
    except DocumentError as exc:
        raise _nested(exc, where) from None


def map_doc(T: CoherentMap, sgd_ref: str | None = None) -> dict:
    return {
        "format": "map",
        "version": VERSION,
        "sgd": sgd_ref if sgd_ref is not None else sgd_doc(T.table),
        "X": T.n_points,
        "tau": [[s, x] for s, x in enumerate(T.tau)],
        "dims": [[x, d] for x, d in enumerate(T.dims)],
        "mats": [matrix_doc(m, element_id=a) for a, m in enumerate(T.mats)],
    }


def parse_map(doc, base: Path | None = None) -> CoherentMap:
    _check(doc, MAP_SCHEMA)
    t = _resolve_sgd(doc["sgd"], base, "sgd")
    X = doc["X"]
    tau = [-1] * t.n_objects
    for k, (s, x) in enumerate(doc["tau"]):
        if s >= t.n_objects:
            raise DocumentError(f"unknown object id {s}", path=f"tau[{k}][0]")
        if x >= X:
            raise DocumentError(f"bundle index {x} >= X={X}", path=f"tau[{k}][1]")
        tau[s] = x
    if -1 in tau:
        raise DocumentError(f"object {tau.index(-1)} has no bundle index", path="tau")
    dims = [0] * X
    for k, (x, d) in enumerate(doc["dims"]):
        if x >= X:
            raise DocumentError(f"bundle index {x} >= X={X}", path=f"dims[{k}][0]")
        dims[x] = d
    mats: list[np.ndarray | None] = [None] * t.n_elements
    for k, md in enumerate(doc["mats"]):
        a = md["element_id"]
        where = f"mats[{k}]"
        if a >= t.n_elements:
            raise DocumentError(f"unknown element id {a}", path=f"{where}.element_id")
        if mats[a] is not None:
            raise DocumentError(f"second matrix for element {a}", path=where)
        want = (dims[tau[t.tgt[a]]], dims[tau[t.src[a]]])
        if (md["rows"], md["cols"]) != want:
            raise DocumentError(f"shape {(md['rows'], md['cols'])} violates coherence, expected {want}", path=where)
        mats[a] = matrix_from(md, where)
    missing = [a for a, m in enumerate(mats) if m is None]
    if missing:
        raise DocumentError(f"no matrix for element {missing[0]}", path="mats")
    return CoherentMap(t, tuple(dims), tuple(tau), tuple(mats))


# ---------------------------------------------------------------------------
# dilations


def dilation_doc(D: Dilation) -> dict:
    doc = {
        "format": "dilation",
        "version": VERSION,
        "tau": list(D.tau),
        "hdims": list(D.hdims),
        "block_sizes": list(D.block_sizes),
        "layout": [{"x": x, "blocks": [{"object": s, "offset": o, "size": r} for s, o, r in D.layout(x)]}
                   for x in range(D.n_points)],
        "rep": [matrix_doc(m, element_id=a) for a, m in enumerate(D.rep)],
        "V": [matrix_doc(m, object=s) for s, m in enumerate(D.V)],
    }
    if D.ordering is not None:
        doc["ordering"] = list(D.ordering)
    return doc


def parse_dilation(doc, table: SemigroupoidTable) -> Dilation:
    _check(doc, DILATION_SCHEMA)
    if len(doc["tau"]) != table.n_objects or len(doc["block_sizes"]) != table.n_objects:
        raise DocumentError("dilation does not match the table's object count", path="tau")
    if len(doc["rep"]) != table.n_elements:
        raise DocumentError("one rep matrix per element required", path="rep")
    rep = [None] * table.n_elements
    for k, md in enumerate(doc["rep"]):
        a = md["element_id"]
        if a >= table.n_elements or rep[a] is not None:
            raise DocumentError(f"bad or repeated element id {a}", path=f"rep[{k}].element_id")
        rep[a] = matrix_from(md, f"rep[{k}]")
    V = [None] * table.n_objects
    for k, md in enumerate(doc["V"]):
        s = md["object"]
        if s >= table.n_objects or V[s] is not None:
            raise DocumentError(f"bad or repeated object id {s}", path=f"V[{k}].object")
        V[s] = matrix_from(md, f"V[{k}]")
    if any(v is None for v in V):
        raise DocumentError("one V matrix per object required", path="V")
    ordering = tuple(doc["ordering"]) if "ordering" in doc else None
    return Dilation(table, tuple(doc["tau"]), tuple(doc["hdims"]), tuple(doc["block_sizes"]),
                    tuple(rep), tuple(V), ordering=ordering)


# ---------------------------------------------------------------------------
# families, elements, forms


def ckt_doc(fam: CKTFamily) -> dict:
    return {
        "format": "ckt",
        "version": VERSION,
        "graph": graph_doc(fam.graph),
        "dim": fam.dim_H,
        "P": [matrix_doc(p, vertex=v) for v, p in enumerate(fam.P)],
        "S": [matrix_doc(s, edge=f) for f, s in enumerate(fam.S)],
    }


def parse_ckt(doc) -> CKTFamily:
    _check(doc, CKT_SCHEMA)
    g = graph_from(doc["graph"], "graph")
    P = [None] * g.n_vertices
    for k, md in enumerate(doc["P"]):
        v = md["vertex"]
        if v >= g.n_vertices:
            raise DocumentError(f"unknown vertex {v}", path=f"P[{k}].vertex")
        P[v] = matrix_from(md, f"P[{k}]")
    S = [None] * g.n_edges
    for k, md in enumerate(doc["S"]):
        f = md["edge"]
        if f >= g.n_edges:
            raise DocumentError(f"unknown edge {f}", path=f"S[{k}].edge")
        S[f] = matrix_from(md, f"S[{k}]")
    if any(p is None for p in P) or any(s is None for s in S):
        raise DocumentError("one matrix per vertex and per edge required")
    try:
        return CKTFamily(g, doc["dim"], tuple(P), tuple(S))
    except StardilError as exc:
        raise DocumentError(str(exc)) from None


def formal_doc(x: FormalElement) -> dict:
    return {"fiber": list(x.fiber), "terms": [[g, *complex_pair(c)] for g, c in x.terms()]}


def formal_from(doc, where: str = "$") -> FormalElement:
    try:
        _check(doc, _FORMAL)
    except DocumentError as exc:
        raise _nested(exc, where) from None
    return FormalElement(tuple(doc["fiber"]), {int(g): complex(re, im) for g, re, im in doc["terms"]})


def parse_amplified(doc) -> AmplifiedElement:
    """An amplified document, or a single formal element read as n = 1."""
    if "format" not in doc and "fiber" in doc:
        x = formal_from(doc)
        return AmplifiedElement((x.fiber[0],), (x.fiber[1],), ((x,),))
    _check(doc, AMPLIFIED_SCHEMA)
    entries = tuple(tuple(formal_from(e, f"entries[{i}][{j}]") for j, e in enumerate(row))
                    for i, row in enumerate(doc["entries"]))
    return AmplifiedElement(tuple(doc["s"]), tuple(doc["t"]), entries)


def amplified_doc(X: AmplifiedElement) -> dict:
    return {"format": "amplified", "s": list(X.s_tuple), "t": list(X.t_tuple),
            "entries": [[formal_doc(e) for e in row] for row in X.entries]}


def parse_matrix(doc) -> np.ndarray:
    _check(doc, MATRIX_SCHEMA)
    return matrix_from(doc, "$")


def parse_form(doc, base: Path | None = None) -> tuple[PositiveForm, SemigroupoidTable]:
    _check(doc, FORM_SCHEMA)
    t = _resolve_sgd(doc["sgd"], base, "sgd")
    if len(doc["values"]) != t.n_elements:
        raise DocumentError("one value per element required", path="values")
    return PositiveForm(tuple(complex(a, b) for a, b in doc["values"])), t


def form_doc(omega: PositiveForm, table: SemigroupoidTable) -> dict:
    return {"format": "form", "sgd": sgd_doc(table), "values": [complex_pair(v) for v in omega.values]}
