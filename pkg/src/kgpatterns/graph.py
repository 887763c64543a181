"""N-Triples parsing and the dictionary-encoded knowledge graph.

The graph is a labelled multidigraph over integer-encoded resources. All
mining works on dense integer ids; the dictionary is the only place that
still knows the lexical forms. Three indexes are maintained: entities per
object type, assertions per (predicate, head type), and literals per
datatype.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, TextIO

from .literals import RDF_LANGSTRING, RDF_TYPE, XSD_STRING, DatatypeClass, classify_datatype

IRI = "iri"
BNODE = "bnode"
LITERAL = "literal"


@dataclass(frozen=True, slots=True)
class Resource:
    """An IRI, blank node, or literal.

    Literals always carry a datatype (plain literals get xsd:string,
    language-tagged ones rdf:langString); IRIs and blank nodes carry
    neither datatype nor language.
    """

    kind: str
    lexical: str
    datatype: str | None = None
    language: str | None = None

    def __post_init__(self) -> None:
        if self.kind == LITERAL:
            if self.datatype is None:
                raise ValueError("literal without datatype")
        elif self.datatype is not None or self.language is not None:
            raise ValueError(f"{self.kind} resource cannot carry datatype or language")

    @property
    def is_entity(self) -> bool:
        return self.kind != LITERAL


def iri(value: str) -> Resource:
    return Resource(IRI, value)


def bnode(label: str) -> Resource:
    return Resource(BNODE, label)


def literal(lexical: str, datatype: str | None = None, language: str | None = None) -> Resource:
    if language is not None:
        return Resource(LITERAL, lexical, RDF_LANGSTRING, language.lower())
    return Resource(LITERAL, lexical, datatype or XSD_STRING)


class Triple(NamedTuple):
    subject: Resource
    predicate: Resource
    object: Resource


class Assertion(NamedTuple):
    """One arc: predicate, head entity, tail resource (all dictionary ids)."""

    predicate: int
    head: int
    tail: int


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


_IRI_PAT = r"<([^\x00-\x20<>\"{}|^`\\]*)>"
_BNODE_PAT = r"_:(\S+)"
_LITERAL_PAT = r'"((?:[^"\\\n\r]|\\.)*)"(?:\^\^<([^>]*)>|@([a-zA-Z]+(?:-[a-zA-Z0-9]+)*))?'

_TRIPLE_RE = re.compile(
    rf"^(?:{_IRI_PAT}|{_BNODE_PAT})\s*"
    rf"{_IRI_PAT}\s*"
    rf"(?:{_IRI_PAT}|{_BNODE_PAT}|{_LITERAL_PAT})\s*"
    rf"\.\s*(?:#.*)?$"
)

_ESCAPE_RE = re.compile(r"\\(?:u([0-9a-fA-F]{4})|U([0-9a-fA-F]{8})|(.)|$)")
_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(raw: str) -> str:
    def sub(m: re.Match[str]) -> str:
        u4, u8, ch = m.groups()
        if u4 is not None:
            return chr(int(u4, 16))
        if u8 is not None:
            return chr(int(u8, 16))
        if ch is not None and ch in _ECHAR:
            return _ECHAR[ch]
        raise ValueError(f"invalid escape sequence {m.group(0)!r}")

    return _ESCAPE_RE.sub(sub, raw)


def _escape(text: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def parse_ntriples(
    source: Iterable[str] | str | bytes,
    strict: bool = True,
    diagnostics: TextIO | None = None,
) -> tuple[list[Triple], int]:
    """Parse N-Triples text into a list of triples.

    Accepts a string, UTF-8 bytes, or an iterable of lines. Returns
    ``(triples, skipped)``. In strict mode a malformed line raises
    :class:`ParseError`; in lenient mode it is skipped and counted, with a
    note on the diagnostic stream.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        lines: Iterable[str] = source.splitlines()
    else:
        lines = source

    triples: list[Triple] = []
    skipped = 0
    for lineno, line in enumerate(lines, start=1):
        if lineno == 1:
            line = line.lstrip("﻿")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _TRIPLE_RE.match(stripped)
        try:
            if m is None:
                raise ValueError("not a valid triple")
            s_iri, s_bnode, p_iri, o_iri, o_bnode, o_lex, o_dt, o_lang = m.groups()
            subject = iri(_unescape(s_iri)) if s_iri is not None else bnode(s_bnode)
            predicate = iri(_unescape(p_iri))
            if o_iri is not None:
                obj = iri(_unescape(o_iri))
            elif o_bnode is not None:
                obj = bnode(o_bnode)
            else:
                datatype = _unescape(o_dt) if o_dt is not None else None
                obj = literal(_unescape(o_lex), datatype=datatype, language=o_lang)
            triples.append(Triple(subject, predicate, obj))
        except ValueError as exc:
            if strict:
                raise ParseError(str(exc), lineno) from None
            skipped += 1
            if diagnostics is not None:
                print(f"kgpatterns: skipping line {lineno}: {exc}", file=diagnostics)
    return triples, skipped


def parse_ntriples_file(path: str, strict: bool = True, diagnostics: TextIO | None = None):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_ntriples(handle, strict=strict, diagnostics=diagnostics)


def serialize_term(resource: Resource) -> str:
    if resource.kind == IRI:
        return f"<{resource.lexical}>"
    if resource.kind == BNODE:
        return f"_:{resource.lexical}"
    body = f'"{_escape(resource.lexical)}"'
    if resource.language is not None:
        return f"{body}@{resource.language}"
    if resource.datatype != XSD_STRING:
        return f"{body}^^<{resource.datatype}>"
    return body


@dataclass
class KnowledgeGraph:
    """Dictionary-encoded multidigraph with type, predicate, and datatype indexes."""

    type_predicate: str = RDF_TYPE
    _resources: list[Resource] = field(default_factory=list)
    _ids: dict[Resource, int] = field(default_factory=dict)
    assertions: list[Assertion] = field(default_factory=list)
    type_index: dict[int, frozenset[int]] = field(default_factory=dict)
    pred_index: dict[tuple[int, int], tuple[Assertion, ...]] = field(default_factory=dict)
    datatype_index: dict[int, frozenset[int]] = field(default_factory=dict)
    _types_by_entity: dict[int, frozenset[int]] = field(default_factory=dict)

    def encode(self, resource: Resource) -> int:
        rid = self._ids.get(resource)
        if rid is None:
            rid = len(self._resources)
            self._ids[resource] = rid
            self._resources.append(resource)
        return rid

    def decode(self, rid: int) -> Resource:
        return self._resources[rid]

    def lookup(self, resource: Resource) -> int | None:
        return self._ids.get(resource)

    def __len__(self) -> int:
        return len(self._resources)

    @property
    def resources(self) -> list[Resource]:
        return self._resources

    def entities_of_type(self, type_id: int) -> frozenset[int]:
        return self.type_index.get(type_id, frozenset())

    def assertions_for(self, predicate: int, head_type: int) -> tuple[Assertion, ...]:
        return self.pred_index.get((predicate, head_type), ())

    def types_of(self, entity_id: int) -> frozenset[int]:
        return self._types_by_entity.get(entity_id, frozenset())

    def value_of(self, literal_id: int) -> float:
        """Real-valued interpretation of a numeric or temporal literal id."""
        res = self.decode(literal_id)
        from .literals import literal_value

        return literal_value(res.lexical, res.datatype)

    def to_ntriples(self) -> str:
        out = []
        for pred, head, tail in self.assertions:
            out.append(
                f"{serialize_term(self.decode(head))} "
                f"{serialize_term(self.decode(pred))} "
                f"{serialize_term(self.decode(tail))} ."
            )
        return "\n".join(out) + ("\n" if out else "")


def build_graph(
    triples: Iterable[Triple],
    type_predicate: str = RDF_TYPE,
) -> KnowledgeGraph:
    """Dictionary-encode triples and build all indexes.

    Entities asserted under several types appear under each type in the
    type index. A triple with a literal subject is rejected: assertions
    always lead from an entity.
    """
    graph = KnowledgeGraph(type_predicate=type_predicate)
    type_pred_res = iri(type_predicate)
    seen: set[Assertion] = set()
    type_members: dict[int, set[int]] = {}
    dt_members: dict[int, set[int]] = {}

    for subject, predicate, obj in triples:
        if subject.kind == LITERAL:
            raise ValueError("assertion head must be an entity, got a literal subject")
        if predicate.kind != IRI:
            raise ValueError("predicate must be an IRI")
        assertion = Assertion(graph.encode(predicate), graph.encode(subject), graph.encode(obj))
        if assertion in seen:
            continue
        seen.add(assertion)
        graph.assertions.append(assertion)
        if predicate == type_pred_res and obj.is_entity:
            type_members.setdefault(assertion.tail, set()).add(assertion.head)
        if obj.kind == LITERAL:
            dt_id = graph.encode(iri(obj.datatype))
            dt_members.setdefault(dt_id, set()).add(assertion.tail)

    graph.type_index = {t: frozenset(m) for t, m in type_members.items()}
    graph.datatype_index = {d: frozenset(m) for d, m in dt_members.items()}

    by_head: dict[int, set[int]] = {}
    for type_id, members in graph.type_index.items():
        for e in members:
            by_head.setdefault(e, set()).add(type_id)
    graph._types_by_entity = {e: frozenset(ts) for e, ts in by_head.items()}
    pred_entries: dict[tuple[int, int], list[Assertion]] = {}
    for assertion in graph.assertions:
        for type_id in by_head.get(assertion.head, ()):
            pred_entries.setdefault((assertion.predicate, type_id), []).append(assertion)
    graph.pred_index = {k: tuple(v) for k, v in pred_entries.items()}
    return graph


def load_graph(
    paths: Iterable[str],
    type_predicate: str = RDF_TYPE,
    strict: bool = True,
    diagnostics: TextIO | None = None,
) -> tuple[KnowledgeGraph, int]:
    """Parse and merge one or more N-Triples files into a graph."""
    diagnostics = diagnostics if diagnostics is not None else sys.stderr
    all_triples: list[Triple] = []
    skipped = 0
    for path in paths:
        triples, n_skipped = parse_ntriples_file(path, strict=strict, diagnostics=diagnostics)
        all_triples.extend(triples)
        skipped += n_skipped
    if skipped:
        print(f"kgpatterns: skipped {skipped} malformed line(s)", file=diagnostics)
    return build_graph(all_triples, type_predicate=type_predicate), skipped


def datatype_class_of(graph: KnowledgeGraph, literal_id: int) -> DatatypeClass:
    res = graph.decode(literal_id)
    if res.kind != LITERAL:
        raise ValueError(f"resource {literal_id} is not a literal")
    return classify_datatype(res.datatype)
