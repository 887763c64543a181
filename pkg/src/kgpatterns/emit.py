"""Turning mined patterns into SPARQL queries and output files.

The JSON export is the contract the pattern browser consumes; the RDF
export (N-Triples under a small fixed vocabulary) is the archival format.
Both embed the run record, and both are deterministic byte-for-byte given
the same graph, seed, and hyperparameters.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

from .base import PatternStore
from .graph import KnowledgeGraph, literal, serialize_term
from .literals import RDF_TYPE as RDF_TYPE_IRI
from .literals import XSD
from .model import (
    Clause,
    Const,
    DataTypeVar,
    GraphPattern,
    MixtureRange,
    ObjectTypeVar,
    RegexRange,
    ValueRangeVar,
    metrics,
    tail_sort_key,
)

TOOL_NAME = "kgpatterns"
TOOL_VERSION = "0.1.0"
VOCAB = "https://vocab.kgpatterns.org/ns#"

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_SAFE_LOCAL = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")
_NS_SPLIT = re.compile(r"^(.*[#/])([^#/]+)$")


class LineageError(ValueError):
    """A selection file without a traceable run id."""


def local_name(iri: str) -> str:
    m = _NS_SPLIT.match(iri)
    return m.group(2) if m else iri


def format_bound(value: float) -> str:
    """Two decimal places, round half to even."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def format_instant(seconds: float) -> str:
    """Unix seconds to an xsd:dateTime lexical form (UTC, whole seconds)."""
    instant = _EPOCH + timedelta(seconds=round(seconds))
    return instant.strftime("%Y-%m-%dT%H:%M:%SZ")


def _escape_string(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


class _Prefixes:
    """Assigns ns0, ns1, ... to namespaces in first-use order."""

    def __init__(self) -> None:
        self.by_namespace: dict[str, str] = {}

    def term(self, iri: str) -> str:
        m = _NS_SPLIT.match(iri)
        if m and _SAFE_LOCAL.match(m.group(2)):
            ns = m.group(1)
            prefix = self.by_namespace.get(ns)
            if prefix is None:
                prefix = f"ns{len(self.by_namespace)}"
                self.by_namespace[ns] = prefix
            return f"{prefix}:{m.group(2)}"
        return f"<{iri}>"

    def prologue(self) -> list[str]:
        return [f"PREFIX {p}: <{ns}>" for ns, p in self.by_namespace.items()]


@dataclass
class SparqlQuery:
    prologue: list[str]
    select_vars: list[str]
    where_triples: list[str]
    filters: list[str]

    def text(self) -> str:
        lines = list(self.prologue)
        if lines:
            lines.append("")
        lines.append("SELECT " + " ".join(f"?{v}" for v in self.select_vars))
        lines.append("WHERE {")
        for triple in self.where_triples:
            lines.append(f"  {triple}")
        for flt in self.filters:
            lines.append(f"  {flt}")
        lines.append("}")
        return "\n".join(lines) + "\n"


def assign_names(pattern: GraphPattern) -> tuple[dict[int, str], list[int]]:
    """Stable variable names (v0 = root) in canonical traversal order."""
    names: dict[int, str] = {pattern.root.vid: "v0"}
    order: list[int] = [pattern.root.vid]

    def visit(vid: int) -> None:
        for clause in sorted(pattern.clauses_at(vid), key=tail_sort_key):
            tail = clause.tail
            if isinstance(tail, Const):
                continue
            names[tail.vid] = f"v{len(names)}"
            order.append(tail.vid)
            if isinstance(tail, ObjectTypeVar):
                visit(tail.vid)

    visit(pattern.root.vid)
    return names, order


def _range_filter(var: str, model, prefixes: _Prefixes) -> str:
    if isinstance(model, RegexRange):
        pattern = _escape_string(f"^{model.pattern}$")
        return f'FILTER ( REGEX(?{var}, "{pattern}") )'
    assert isinstance(model, MixtureRange)
    parts = []
    for lo, hi in model.intervals():
        if model.temporal:
            lo_term = f'"{format_instant(lo)}"^^{prefixes.term("http://www.w3.org/2001/XMLSchema#dateTime")}'
            hi_term = f'"{format_instant(hi)}"^^{prefixes.term("http://www.w3.org/2001/XMLSchema#dateTime")}'
        else:
            datatype = model.datatype or "http://www.w3.org/2001/XMLSchema#decimal"
            lo_term = f'"{format_bound(lo)}"^^{prefixes.term(datatype)}'
            hi_term = f'"{format_bound(hi)}"^^{prefixes.term(datatype)}'
        parts.append(f"?{var} >= {lo_term} && ?{var} <= {hi_term}")
    if len(parts) == 1:
        return f"FILTER ( {parts[0]} )"
    return "FILTER ( " + " || ".join(f"( {p} )" for p in parts) + " )"


def to_sparql(pattern: GraphPattern, type_predicate: str) -> SparqlQuery:
    """Render a pattern as a SELECT query over its object-type variables.

    Every object-type variable gets a type triple through the configured
    type predicate unless the pattern already carries an equivalent
    type-constraining clause. Value ranges become inclusive bound filters
    (mean +/- one standard deviation per component, disjoined across
    components) or anchored REGEX filters.
    """
    prefixes = _Prefixes()
    names, order = assign_names(pattern)
    triples: list[str] = []
    filters: list[str] = []

    def const_term(const: Const) -> str:
        if const.key.startswith("<"):
            return prefixes.term(const.key[1:-1])
        return const.key

    for vid in order:
        var = pattern.variables[vid]
        if not isinstance(var, ObjectTypeVar):
            continue
        name = names[vid]
        clauses = sorted(pattern.clauses_at(vid), key=tail_sort_key)
        has_type_clause = any(
            c.predicate_iri == type_predicate
            and isinstance(c.tail, Const)
            and c.tail.key == f"<{var.type_iri}>"
            for c in clauses
        )
        if not has_type_clause:
            triples.append(
                f"?{name} {prefixes.term(type_predicate)} {prefixes.term(var.type_iri)} ."
            )
        for clause in clauses:
            tail = clause.tail
            if isinstance(tail, Const):
                obj = const_term(tail)
            else:
                obj = f"?{names[tail.vid]}"
            triples.append(f"?{name} {prefixes.term(clause.predicate_iri)} {obj} .")

    for vid in order:
        var = pattern.variables[vid]
        name = names[vid]
        if isinstance(var, DataTypeVar):
            filters.append(
                f"FILTER ( datatype(?{name}) = {prefixes.term(var.datatype_iri)} )"
            )
        elif isinstance(var, ValueRangeVar):
            filters.append(_range_filter(name, var.model, prefixes))

    select = [names[vid] for vid in order if isinstance(pattern.variables[vid], ObjectTypeVar)]
    return SparqlQuery(
        prologue=prefixes.prologue(),
        select_vars=select,
        where_triples=triples,
        filters=filters,
    )


# --- pattern graph (for visualization) --------------------------------------


def pattern_graph(pattern: GraphPattern, graph: KnowledgeGraph) -> dict:
    """Node-link form of a pattern for the browser's detail view."""
    names, order = assign_names(pattern)
    nodes = []
    edges = []
    for vid in order:
        var = pattern.variables[vid]
        if isinstance(var, ObjectTypeVar):
            nodes.append({"id": names[vid], "kind": "variable", "label": local_name(var.type_iri)})
        elif isinstance(var, DataTypeVar):
            nodes.append({"id": names[vid], "kind": "datatype", "label": local_name(var.datatype_iri)})
        else:
            nodes.append({"id": names[vid], "kind": "range", "label": var.model.describe()})

    const_count = 0
    for vid in order:
        var = pattern.variables[vid]
        if not isinstance(var, ObjectTypeVar):
            continue
        for clause in sorted(pattern.clauses_at(vid), key=tail_sort_key):
            tail = clause.tail
            if isinstance(tail, Const):
                node_id = f"c{const_count}"
                const_count += 1
                res = graph.decode(tail.rid)
                if res.kind == "literal":
                    kind, label = "literal", res.lexical
                elif tail.rid in graph.type_index:
                    kind, label = "class", local_name(res.lexical)
                else:
                    kind, label = "entity", local_name(res.lexical)
                nodes.append({"id": node_id, "kind": kind, "label": label})
                target = node_id
            else:
                target = names[tail.vid]
            edges.append({"from": names[vid], "to": target, "predicate": clause.predicate_iri})
    return {"nodes": nodes, "edges": edges}


# --- run records and serialization ------------------------------------------


@dataclass
class DiscoveryRun:
    """Provenance attached to every output artifact."""

    run_id: str
    tool: str
    tool_version: str
    inputs: list[dict]
    hyperparameters: dict
    last_complete_depth: int

    def as_dict(self) -> dict:
        return {
            "runId": self.run_id,
            "tool": self.tool,
            "toolVersion": self.tool_version,
            "inputs": self.inputs,
            "hyperparameters": self.hyperparameters,
            "lastCompleteDepth": self.last_complete_depth,
        }


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def make_run(
    inputs: list[dict],
    hyperparameters: dict,
    last_complete_depth: int,
) -> DiscoveryRun:
    """Run record with a content-derived id.

    The id hashes the input digests and semantic hyperparameters, so
    reruns of the same configuration produce identical artifacts; knobs
    that cannot change the output (worker count) stay out of the record.
    """
    payload = json.dumps(
        {"inputs": inputs, "hyperparameters": hyperparameters}, sort_keys=True
    ).encode("utf-8")
    run_id = hashlib.sha256(payload).hexdigest()[:16]
    return DiscoveryRun(
        run_id=run_id,
        tool=TOOL_NAME,
        tool_version=TOOL_VERSION,
        inputs=inputs,
        hyperparameters=hyperparameters,
        last_complete_depth=last_complete_depth,
    )


def ordered_patterns(store: PatternStore) -> list[GraphPattern]:
    patterns = list(store.patterns())
    patterns.sort(key=lambda p: (p.generation, p.root.type_iri, p.canonical))
    return patterns


def export_dict(
    store: PatternStore,
    run: DiscoveryRun,
    graph: KnowledgeGraph,
    type_predicate: str,
    provenance: list[dict] | None = None,
) -> dict:
    """The full JSON export: run record, pattern records, provenance chain."""
    patterns = ordered_patterns(store)
    ids: dict[int, str] = {}
    for i, pattern in enumerate(patterns):
        ids[id(pattern)] = f"p{i:05d}"
    records = []
    for pattern in patterns:
        m = metrics(pattern)
        parent = pattern.parent
        records.append(
            {
                "id": ids[id(pattern)],
                "canonical": pattern.canonical,
                "sparql": to_sparql(pattern, type_predicate).text(),
                "support": pattern.support,
                "depth": m.depth,
                "length": m.length,
                "width": m.width,
                "generation": pattern.generation,
                "parentId": ids.get(id(parent)) if parent is not None else None,
                "graph": pattern_graph(pattern, graph),
            }
        )
    run_dict = run.as_dict()
    run_dict["patternCount"] = len(records)
    run_dict["generationSizes"] = {
        str(k): v for k, v in sorted(store.generation_sizes().items())
    }
    run_dict["complete"] = True
    return {"run": run_dict, "patterns": records, "provenance": list(provenance or [])}


def to_json(export: dict) -> str:
    return json.dumps(export, indent=2, ensure_ascii=False) + "\n"


def _nt_literal(value) -> str:
    if isinstance(value, bool):
        return serialize_term(literal(str(value).lower(), datatype=XSD + "boolean"))
    if isinstance(value, int):
        return serialize_term(literal(str(value), datatype=XSD + "integer"))
    return serialize_term(literal(str(value)))


def to_rdf(export: dict) -> str:
    """Archival N-Triples rendering of the same export.

    Ends with a sentinel comment naming the run; a truncated file is
    detectably incomplete.
    """
    run = export["run"]
    run_node = f"<urn:kgpatterns:run:{run['runId']}>"
    lines: list[str] = []

    def emit(subject: str, prop: str, obj: str) -> None:
        lines.append(f"{subject} <{VOCAB}{prop}> {obj} .")

    lines.append(f"{run_node} <{RDF_TYPE_IRI}> <{VOCAB}DiscoveryRun> .")
    emit(run_node, "runId", _nt_literal(run["runId"]))
    emit(run_node, "tool", _nt_literal(run["tool"]))
    emit(run_node, "toolVersion", _nt_literal(run["toolVersion"]))
    emit(run_node, "lastCompleteDepth", _nt_literal(run["lastCompleteDepth"]))
    for key, value in sorted(run["hyperparameters"].items()):
        emit(run_node, key, _nt_literal(value))
    for i, entry in enumerate(run["inputs"]):
        input_node = f"<urn:kgpatterns:run:{run['runId']}:input:{i}>"
        emit(run_node, "input", input_node)
        emit(input_node, "path", _nt_literal(entry["path"]))
        emit(input_node, "sha256", _nt_literal(entry["sha256"]))

    for record in export["patterns"]:
        node = f"<urn:kgpatterns:run:{run['runId']}:pattern:{record['id']}>"
        lines.append(f"{node} <{RDF_TYPE_IRI}> <{VOCAB}Pattern> .")
        emit(node, "run", run_node)
        emit(node, "sparql", _nt_literal(record["sparql"]))
        emit(node, "canonical", _nt_literal(record["canonical"]))
        for prop in ("support", "depth", "length", "width", "generation"):
            emit(node, prop, _nt_literal(record[prop]))
        if record["parentId"] is not None:
            parent_node = f"<urn:kgpatterns:run:{run['runId']}:pattern:{record['parentId']}>"
            emit(node, "parent", parent_node)

    lines.append(f"# complete {run['runId']}")
    return "\n".join(lines) + "\n"


def write_atomic(path: Path, content: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(content, encoding="utf-8")
    os.replace(tmp, path)





def write_outputs(
    export: dict,
    out_base: Path,
    formats: list[str],
) -> list[Path]:
    """Write {out}.json and/or {out}.nt atomically; returns written paths."""
    written = []
    if "json" in formats:
        path = out_base.with_suffix(".json")
        write_atomic(path, to_json(export))
        written.append(path)
    if "rdf" in formats:
        path = out_base.with_suffix(".nt")
        write_atomic(path, to_rdf(export))
        written.append(path)
    return written


# --- faceted selections ------------------------------------------------------


def apply_facets(patterns: list[dict], state: dict) -> list[dict]:
    """Pure facet filter over pattern records (mirrors the browser contract).

    ``state``: {"support"|"depth"|"length"|"width": [lo, hi] (inclusive),
    "query": substring matched case-insensitively against the SPARQL text
    and node labels}. Missing facets impose no constraint.
    """
    query = (state.get("query") or "").lower()

    def keep(record: dict) -> bool:
        for facet in ("support", "depth", "length", "width"):
            bounds = state.get(facet)
            if bounds is None:
                continue
            lo, hi = bounds
            if not (lo <= record[facet] <= hi):
                return False
        if query:
            haystack = record["sparql"].lower()
            labels = " ".join(n["label"] for n in record["graph"]["nodes"]).lower()
            if query not in haystack and query not in labels:
                return False
        return True

    return [r for r in patterns if keep(r)]


def append_selection_provenance(
    path: Path,
    filter_state: dict,
    timestamp: str | None = None,
) -> dict:
    """Apply a facet state to a selection file and chain a provenance event.

    The file must descend from a discovery run (its run id is the
    lineage); pattern records pass through unaltered, and one event
    recording the filter state and before/after counts is appended.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    run = data.get("run") or {}
    if not run.get("runId"):
        raise LineageError(f"{path}: no runId; cannot establish lineage")
    before = len(data["patterns"])
    kept = apply_facets(data["patterns"], filter_state)
    event = {
        "timestamp": timestamp or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "filters": filter_state,
        "countBefore": before,
        "countAfter": len(kept),
    }
    updated = {
        "run": data["run"],
        "patterns": kept,
        "provenance": list(data.get("provenance") or []) + [event],
    }
    write_atomic(Path(path), to_json(updated))
    return updated
