"""Clauses, variables, range models, and graph patterns.

A graph pattern is a rooted tree of clauses. Every clause head is an
object-type variable; tails are constants or variables of any kind, and
only object-type tails can head further clauses. Each variable carries a
domain (set of resource ids); the root domain size is the pattern's
support.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .graph import Resource, serialize_term
from .literals import DatatypeClass, classify_datatype


class DiagnosticCounter:
    """Counts values that could not be interpreted during matching."""

    def __init__(self) -> None:
        self.unparseable = 0

    def count_unparseable(self) -> None:
        self.unparseable += 1


@dataclass(frozen=True)
class MixtureRange:
    """Gaussian mixture value range; a value matches a component within one
    standard deviation of its mean (inclusive).

    Components are stored in original units as (weight, mean, variance)
    and kept sorted by mean for a canonical order. ``normalization`` is the
    (shift, scale) used during fitting; ``temporal`` marks ranges over
    Unix seconds. ``datatype`` is the dominant tail datatype, used when the
    range is printed back into a query.
    """

    components: tuple[tuple[float, float, float], ...]
    normalization: tuple[float, float] = (0.0, 1.0)
    temporal: bool = False
    datatype: str | None = None

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("mixture needs at least one component")
        total = sum(w for w, _, _ in self.components)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"component weights sum to {total}, expected 1")
        if any(var <= 0 for _, _, var in self.components):
            raise ValueError("component variances must be positive")
        object.__setattr__(
            self, "components", tuple(sorted(self.components, key=lambda c: (c[1], c[2], c[0])))
        )

    def matches_value(self, value: float) -> bool:
        return any(abs(value - mean) <= math.sqrt(var) for _, mean, var in self.components)

    def intervals(self) -> list[tuple[float, float]]:
        """Inclusive [mean - sigma, mean + sigma] bounds per component."""
        return [(mean - math.sqrt(var), mean + math.sqrt(var)) for _, mean, var in self.components]

    def canonical_key(self) -> str:
        kind = "tgmm" if self.temporal else "gmm"
        comps = ",".join(f"({w!r},{m!r},{v!r})" for w, m, v in self.components)
        return f"{kind}[{comps}]"

    def describe(self) -> str:
        comps = "; ".join(f"N({m:.4g}, {v:.4g})" for _, m, v in self.components)
        return comps


@dataclass(frozen=True)
class RegexRange:
    """Generalized regular expression over textual values (full-string match)."""

    pattern: str

    def compiled(self) -> re.Pattern[str]:
        return re.compile(self.pattern)

    def matches_text(self, text: str) -> bool:
        return self.compiled().fullmatch(text) is not None

    def canonical_key(self) -> str:
        return f"re:{self.pattern}"

    def describe(self) -> str:
        return self.pattern


RangeModel = Union[MixtureRange, RegexRange]


@dataclass(frozen=True)
class ObjectTypeVar:
    """Variable over all entities of one object type."""

    vid: int
    type_id: int
    type_iri: str
    generation: int = 0


@dataclass(frozen=True)
class DataTypeVar:
    """Variable over all literals of one datatype."""

    vid: int
    datatype_id: int
    datatype_iri: str


@dataclass(frozen=True)
class ValueRangeVar:
    """Variable over literals accepted by a learned range model."""

    vid: int
    model: RangeModel
    datatype_class: DatatypeClass


@dataclass(frozen=True)
class Const:
    """A fixed resource tail, compared by dictionary id."""

    rid: int
    key: str  # serialized term, used in canonical strings and reports


Variable = Union[ObjectTypeVar, DataTypeVar, ValueRangeVar]
Tail = Union[Variable, Const]


@dataclass(frozen=True)
class Clause:
    predicate_id: int
    predicate_iri: str
    head_vid: int
    tail: Tail


@dataclass(eq=False)
class GraphPattern:
    """A connected conjunction of clauses with per-variable domains.

    Compared and hashed by identity; structural equality is what the
    canonical string is for.
    """

    root: ObjectTypeVar
    clauses: tuple[Clause, ...]
    variables: dict[int, Variable]
    domains: dict[int, frozenset[int]]
    generation: int = 0
    parent: "GraphPattern | None" = None
    frontier: tuple[int, ...] = ()
    reduced: bool = True  # False when the root domain equals the parent's
    _canonical: str | None = field(default=None, repr=False)

    @property
    def support(self) -> int:
        return len(self.domains[self.root.vid])

    @property
    def root_domain(self) -> frozenset[int]:
        return self.domains[self.root.vid]

    def clauses_at(self, vid: int) -> list[Clause]:
        return [c for c in self.clauses if c.head_vid == vid]

    def next_vid(self) -> int:
        return max(self.variables) + 1

    @property
    def canonical(self) -> str:
        if self._canonical is None:
            self._canonical = canonical_string(self)
        return self._canonical


def tail_sort_key(clause: Clause) -> tuple[str, str, str]:
    """(predicate, tail kind, tail key) ordering used everywhere a
    deterministic clause order is needed."""
    tail = clause.tail
    if isinstance(tail, Const):
        kind, key = "const", tail.key
    elif isinstance(tail, ObjectTypeVar):
        kind, key = "ot", tail.type_iri
    elif isinstance(tail, DataTypeVar):
        kind, key = "dt", tail.datatype_iri
    else:
        kind, key = "vr", tail.model.canonical_key()
    return (clause.predicate_iri, kind, key)


def validate(pattern: GraphPattern) -> str | None:
    """Return None if the pattern is valid, else the first violated rule."""
    if not pattern.clauses:
        return "pattern has no clauses"
    head_vids = {c.head_vid for c in pattern.clauses}
    for i, clause in enumerate(pattern.clauses):
        head = pattern.variables.get(clause.head_vid)
        if not isinstance(head, ObjectTypeVar):
            return f"clause {i}: head must be an object-type variable"
    intro: dict[int, int] = {}
    for i, clause in enumerate(pattern.clauses):
        tail = clause.tail
        if isinstance(tail, (ObjectTypeVar, DataTypeVar, ValueRangeVar)):
            if tail.vid in intro:
                return f"clause {i}: variable v{tail.vid} introduced by more than one clause"
            if tail.vid == pattern.root.vid:
                return f"clause {i}: root variable cannot appear in tail position"
            intro[tail.vid] = i
    for vid in head_vids:
        if vid != pattern.root.vid and vid not in intro:
            return f"variable v{vid} heads a clause but is not connected to the pattern"
    for i, clause in enumerate(pattern.clauses):
        tail = clause.tail
        if isinstance(tail, (DataTypeVar, ValueRangeVar)) and tail.vid in head_vids:
            return f"clause {i}: non-terminal clause tail must be an object-type variable"
    # reachability from the root (rejects connected components hanging together
    # only through shared constants)
    reached = {pattern.root.vid}
    changed = True
    while changed:
        changed = False
        for clause in pattern.clauses:
            if clause.head_vid in reached and isinstance(clause.tail, ObjectTypeVar):
                if clause.tail.vid not in reached:
                    reached.add(clause.tail.vid)
                    changed = True
    if not head_vids <= reached:
        return "pattern is not connected to the root"
    return None


@dataclass(frozen=True)
class PatternMetrics:
    depth: int
    length: int
    width: int


def metrics(pattern: GraphPattern) -> PatternMetrics:
    """Depth, length, and width of a valid pattern.

    Depth is the longest path, counted in hops, between any two elements
    of the pattern graph: variables and constants are elements, and a
    value-range tail contributes both its attribute-value node and the
    range element attached to it. Length is the clause count; width the
    maximum number of clauses sharing one head variable.
    """
    adj: dict[object, list[object]] = {("v", pattern.root.vid): []}

    def add_edge(a: object, b: object) -> None:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    for i, clause in enumerate(pattern.clauses):
        head = ("v", clause.head_vid)
        tail = clause.tail
        if isinstance(tail, ObjectTypeVar):
            add_edge(head, ("v", tail.vid))
        elif isinstance(tail, DataTypeVar):
            add_edge(head, ("v", tail.vid))
        elif isinstance(tail, ValueRangeVar):
            add_edge(head, ("v", tail.vid))
            add_edge(("v", tail.vid), ("r", tail.vid))
        else:
            add_edge(head, ("c", i))

    def farthest(start: object) -> tuple[object, int]:
        seen = {start: 0}
        queue = [start]
        best, best_d = start, 0
        while queue:
            node = queue.pop(0)
            for nxt in adj[node]:
                if nxt not in seen:
                    seen[nxt] = seen[node] + 1
                    if seen[nxt] > best_d:
                        best, best_d = nxt, seen[nxt]
                    queue.append(nxt)
        return best, best_d

    end, _ = farthest(("v", pattern.root.vid))
    _, depth = farthest(end)

    width = 0
    for vid in {c.head_vid for c in pattern.clauses}:
        width = max(width, sum(1 for c in pattern.clauses if c.head_vid == vid))
    return PatternMetrics(depth=depth, length=len(pattern.clauses), width=width)


def canonical_string(pattern: GraphPattern) -> str:
    """Deterministic string form, invariant under clause order and variable ids.

    Clauses are serialized depth-first from the root with siblings sorted
    by (predicate, tail kind, tail key); object-type tails embed their
    subtree, so equal strings identify structurally identical patterns.
    """
    by_head: dict[int, list[Clause]] = {}
    for clause in pattern.clauses:
        by_head.setdefault(clause.head_vid, []).append(clause)

    def tail_repr(tail: Tail) -> str:
        if isinstance(tail, Const):
            return f"c:{tail.key}"
        if isinstance(tail, DataTypeVar):
            return f"dt:{tail.datatype_iri}"
        if isinstance(tail, ValueRangeVar):
            return f"vr:{tail.model.canonical_key()}"
        return f"ot:{tail.type_iri}{subtree(tail.vid)}"

    def subtree(vid: int) -> str:
        parts = sorted(f"{c.predicate_iri}->{tail_repr(c.tail)}" for c in by_head.get(vid, ()))
        return "{" + ";".join(parts) + "}"

    return f"ot:{pattern.root.type_iri}{subtree(pattern.root.vid)}"


def membership(
    model: RangeModel,
    resource: Resource,
    diagnostics: DiagnosticCounter | None = None,
) -> bool:
    """Does a literal resource fall inside a range model?

    Numeric and temporal literals are parsed (temporal ones to Unix
    seconds) and tested against mixture intervals; textual literals are
    full-string matched against regex ranges. Unparseable lexical forms
    never match and are counted on the optional diagnostics object.
    """
    if resource.kind != "literal":
        return False
    cls = classify_datatype(resource.datatype)
    if isinstance(model, RegexRange):
        if cls is not DatatypeClass.TEXTUAL:
            return False
        return model.matches_text(resource.lexical)
    if cls not in (DatatypeClass.NUMERIC, DatatypeClass.TEMPORAL):
        return False
    from .literals import literal_value

    try:
        value = literal_value(resource.lexical, resource.datatype)
    except ValueError:
        if diagnostics is not None:
            diagnostics.count_unparseable()
        return False
    return model.matches_value(value)


def make_root(type_id: int, type_iri: str) -> ObjectTypeVar:
    return ObjectTypeVar(vid=0, type_id=type_id, type_iri=type_iri, generation=0)


def single_clause_pattern(
    root: ObjectTypeVar,
    clause: Clause,
    domains: dict[int, frozenset[int]],
) -> GraphPattern:
    """Assemble a base (single-clause) pattern."""
    variables: dict[int, Variable] = {root.vid: root}
    tail = clause.tail
    frontier = [root.vid]
    if isinstance(tail, (ObjectTypeVar, DataTypeVar, ValueRangeVar)):
        variables[tail.vid] = tail
        if isinstance(tail, ObjectTypeVar):
            frontier.append(tail.vid)
    return GraphPattern(
        root=root,
        clauses=(clause,),
        variables=variables,
        domains=dict(domains),
        generation=0,
        frontier=tuple(frontier),
    )
