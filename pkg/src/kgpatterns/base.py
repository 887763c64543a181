"""Phase one: compute all single-clause patterns with sufficient support.

Base patterns are the building blocks of everything the miner emits. For
every object type with enough members and every predicate leaving it,
four tail shapes are considered: specific resources, object-type
variables, data-type variables, and learned value ranges.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

from .graph import KnowledgeGraph, iri, serialize_term
from .literals import DatatypeClass, classify_datatype, literal_value
from .model import (
    Clause,
    Const,
    DataTypeVar,
    DiagnosticCounter,
    GraphPattern,
    MixtureRange,
    ObjectTypeVar,
    RegexRange,
    ValueRangeVar,
    make_root,
    single_clause_pattern,
    tail_sort_key,
)
from .ranges import cluster_and_generalize, fit_gmm, population_seed


@dataclass(frozen=True)
class RangeConfig:
    """Knobs for value-range induction."""

    numeric: bool = True
    temporal: bool = True
    textual: bool = True
    modes_max: int = 5
    restarts: int = 3
    min_sample: int | None = None  # default: max(20, min_support)
    text_coverage: float = 1.0

    def effective_min_sample(self, min_support: int) -> int:
        if self.min_sample is not None:
            return self.min_sample
        return max(20, min_support)


class PatternStore:
    """Generation-indexed store of discovered patterns, keyed by root type.

    Generation 0 holds the base patterns. Patterns of one root type never
    share canonical strings with another type, so the duplicate table is
    partitioned per type.
    """

    def __init__(self) -> None:
        self._generations: dict[int, dict[int, list[GraphPattern]]] = {}
        self.seen: dict[int, set[str]] = {}
        self.type_iris: dict[int, str] = {}
        self.last_complete_depth = 0
        self.telemetry = None

    def add_base(self, type_id: int, type_iri: str, patterns: list[GraphPattern]) -> None:
        self.type_iris[type_id] = type_iri
        self._generations.setdefault(0, {})[type_id] = patterns
        self.seen.setdefault(type_id, set()).update(p.canonical for p in patterns)

    def set_generation(self, depth: int, type_id: int, patterns: list[GraphPattern]) -> None:
        self._generations.setdefault(depth, {})[type_id] = patterns
        self.seen.setdefault(type_id, set()).update(p.canonical for p in patterns)

    def base_patterns(self, type_id: int) -> list[GraphPattern]:
        return self._generations.get(0, {}).get(type_id, [])

    def at(self, depth: int, type_id: int) -> list[GraphPattern]:
        return self._generations.get(depth, {}).get(type_id, [])

    def types(self) -> list[int]:
        return sorted(self.type_iris, key=lambda t: self.type_iris[t])

    def depths(self) -> list[int]:
        return sorted(self._generations)

    def patterns(self) -> Iterator[GraphPattern]:
        """All stored patterns: generations ascending, types by IRI."""
        for depth in self.depths():
            row = self._generations[depth]
            for type_id in sorted(row, key=lambda t: self.type_iris[t]):
                yield from row[type_id]

    def count(self) -> int:
        return sum(1 for _ in self.patterns())

    def generation_sizes(self) -> dict[int, int]:
        return {
            depth: sum(len(v) for v in row.values())
            for depth, row in sorted(self._generations.items())
        }

    def truncated(self, depth: int) -> "PatternStore":
        """A view of this store keeping only generations 0..depth."""
        out = PatternStore()
        out.type_iris = dict(self.type_iris)
        out.last_complete_depth = min(depth, self.last_complete_depth)
        for d in self.depths():
            if d > depth:
                continue
            for type_id, patterns in self._generations[d].items():
                out._generations.setdefault(d, {})[type_id] = list(patterns)
                out.seen.setdefault(type_id, set()).update(p.canonical for p in patterns)
        return out


def base_domain(graph: KnowledgeGraph, pattern: GraphPattern) -> dict[int, frozenset[int]]:
    """Recompute a single-clause pattern's domains directly from the graph."""
    if len(pattern.clauses) != 1:
        raise ValueError("base_domain expects a single-clause pattern")
    clause = pattern.clauses[0]
    root = pattern.root
    heads: set[int] = set()
    tails: set[int] = set()
    for assertion in graph.assertions_for(clause.predicate_id, root.type_id):
        tail = clause.tail
        if isinstance(tail, Const):
            if assertion.tail != tail.rid:
                continue
        elif isinstance(tail, ObjectTypeVar):
            if assertion.tail not in graph.entities_of_type(tail.type_id):
                continue
        elif isinstance(tail, DataTypeVar):
            res = graph.decode(assertion.tail)
            if res.kind != "literal" or res.datatype != tail.datatype_iri:
                continue
        else:
            from .model import membership

            if not membership(tail.model, graph.decode(assertion.tail)):
                continue
        heads.add(assertion.head)
        if not isinstance(tail, Const):
            tails.add(assertion.tail)
    domains = {root.vid: frozenset(heads)}
    if not isinstance(clause.tail, Const):
        domains[clause.tail.vid] = frozenset(tails)
    return domains


def _range_patterns_numeric(
    graph: KnowledgeGraph,
    type_id: int,
    type_iri: str,
    pred_id: int,
    pred_iri: str,
    rows: list[tuple[int, int]],
    temporal: bool,
    min_support: int,
    config: RangeConfig,
    seed: int,
    diagnostics: DiagnosticCounter,
) -> list[GraphPattern]:
    """Value-range patterns for one numeric or temporal population."""
    values: list[float] = []
    parsed: list[tuple[int, int, float]] = []
    datatypes: Counter[str] = Counter()
    for head, tail in rows:
        res = graph.decode(tail)
        try:
            value = literal_value(res.lexical, res.datatype)
        except ValueError:
            diagnostics.count_unparseable()
            continue
        values.append(value)
        parsed.append((head, tail, value))
        datatypes[res.datatype] += 1

    if len(values) < config.effective_min_sample(min_support):
        return []
    dominant = min(dt for dt, n in datatypes.items() if n == max(datatypes.values()))
    kind = "temporal" if temporal else "numeric"
    fit = fit_gmm(
        values,
        modes_max=config.modes_max,
        restarts=config.restarts,
        seed=population_seed(seed, type_iri, pred_iri, kind),
        temporal=temporal,
    )

    patterns = []
    for weight, mean, variance in fit.components:
        model = MixtureRange(
            components=((1.0, mean, variance),),
            normalization=fit.normalization,
            temporal=temporal,
            datatype=dominant,
        )
        covered = {t for _, t, v in parsed if model.matches_value(v)}
        heads = {h for h, t, v in parsed if t in covered}
        if len(covered) < min_support or len(heads) < min_support:
            continue
        root = make_root(type_id, type_iri)
        tail_var = ValueRangeVar(
            vid=1,
            model=model,
            datatype_class=DatatypeClass.TEMPORAL if temporal else DatatypeClass.NUMERIC,
        )
        clause = Clause(pred_id, pred_iri, root.vid, tail_var)
        patterns.append(
            single_clause_pattern(root, clause, {0: frozenset(heads), 1: frozenset(covered)})
        )
    return patterns


def _range_patterns_textual(
    graph: KnowledgeGraph,
    type_id: int,
    type_iri: str,
    pred_id: int,
    pred_iri: str,
    rows: list[tuple[int, int]],
    min_support: int,
    config: RangeConfig,
) -> list[GraphPattern]:
    strings = sorted({graph.decode(t).lexical for _, t in rows})
    if len(rows) < config.effective_min_sample(min_support):
        return []
    patterns = []
    seen_patterns: set[str] = set()
    for cluster in cluster_and_generalize(strings, coverage=config.text_coverage):
        if cluster.pattern in seen_patterns:
            continue
        seen_patterns.add(cluster.pattern)
        model = RegexRange(cluster.pattern)
        covered = {t for _, t in rows if model.matches_text(graph.decode(t).lexical)}
        heads = {h for h, t in rows if t in covered}
        if len(covered) < min_support or len(heads) < min_support:
            continue
        root = make_root(type_id, type_iri)
        tail_var = ValueRangeVar(vid=1, model=model, datatype_class=DatatypeClass.TEXTUAL)
        clause = Clause(pred_id, pred_iri, root.vid, tail_var)
        patterns.append(
            single_clause_pattern(root, clause, {0: frozenset(heads), 1: frozenset(covered)})
        )
    return patterns


def _base_patterns_for_type(
    graph: KnowledgeGraph,
    type_id: int,
    min_support: int,
    config: RangeConfig,
    seed: int,
    diagnostics: DiagnosticCounter,
) -> list[GraphPattern]:
    type_iri = graph.decode(type_id).lexical
    predicates = sorted(
        {p for (p, t) in graph.pred_index if t == type_id},
        key=lambda p: graph.decode(p).lexical,
    )
    patterns: list[GraphPattern] = []
    for pred_id in predicates:
        pred_iri = graph.decode(pred_id).lexical
        assertions = graph.assertions_for(pred_id, type_id)

        heads_by_tail: dict[int, set[int]] = {}
        for a in assertions:
            heads_by_tail.setdefault(a.tail, set()).add(a.head)
        for tail_rid, heads in heads_by_tail.items():
            if len(heads) < min_support:
                continue
            root = make_root(type_id, type_iri)
            const = Const(tail_rid, serialize_term(graph.decode(tail_rid)))
            clause = Clause(pred_id, pred_iri, root.vid, const)
            patterns.append(single_clause_pattern(root, clause, {0: frozenset(heads)}))

        by_tail_type: dict[int, tuple[set[int], set[int]]] = {}
        rows_by_class: dict[DatatypeClass, list[tuple[int, int]]] = {}
        for a in assertions:
            res = graph.decode(a.tail)
            if res.is_entity:
                for t2 in graph.types_of(a.tail):
                    heads, tails = by_tail_type.setdefault(t2, (set(), set()))
                    heads.add(a.head)
                    tails.add(a.tail)
            else:
                rows_by_class.setdefault(classify_datatype(res.datatype), []).append(
                    (a.head, a.tail)
                )

        for t2, (heads, tails) in by_tail_type.items():
            if len(heads) < min_support:
                continue
            root = make_root(type_id, type_iri)
            t2_iri = graph.decode(t2).lexical
            tail_var = ObjectTypeVar(vid=1, type_id=t2, type_iri=t2_iri, generation=0)
            clause = Clause(pred_id, pred_iri, root.vid, tail_var)
            patterns.append(
                single_clause_pattern(
                    root, clause, {0: frozenset(heads), 1: frozenset(tails)}
                )
            )

        by_datatype: dict[str, tuple[set[int], set[int]]] = {}
        for cls_rows in rows_by_class.values():
            for head, tail in cls_rows:
                dt = graph.decode(tail).datatype
                heads, tails = by_datatype.setdefault(dt, (set(), set()))
                heads.add(head)
                tails.add(tail)
        for dt_iri_str, (heads, tails) in by_datatype.items():
            if len(heads) < min_support:
                continue
            dt_id = graph.lookup(iri(dt_iri_str))
            root = make_root(type_id, type_iri)
            tail_var = DataTypeVar(vid=1, datatype_id=dt_id if dt_id is not None else -1,
                                   datatype_iri=dt_iri_str)
            clause = Clause(pred_id, pred_iri, root.vid, tail_var)
            patterns.append(
                single_clause_pattern(
                    root, clause, {0: frozenset(heads), 1: frozenset(tails)}
                )
            )

        if config.numeric and DatatypeClass.NUMERIC in rows_by_class:
            patterns.extend(
                _range_patterns_numeric(
                    graph, type_id, type_iri, pred_id, pred_iri,
                    rows_by_class[DatatypeClass.NUMERIC], False,
                    min_support, config, seed, diagnostics,
                )
            )
        if config.temporal and DatatypeClass.TEMPORAL in rows_by_class:
            patterns.extend(
                _range_patterns_numeric(
                    graph, type_id, type_iri, pred_id, pred_iri,
                    rows_by_class[DatatypeClass.TEMPORAL], True,
                    min_support, config, seed, diagnostics,
                )
            )
        if config.textual and DatatypeClass.TEXTUAL in rows_by_class:
            patterns.extend(
                _range_patterns_textual(
                    graph, type_id, type_iri, pred_id, pred_iri,
                    rows_by_class[DatatypeClass.TEXTUAL],
                    min_support, config,
                )
            )

    patterns.sort(key=lambda p: tail_sort_key(p.clauses[0]))
    return patterns


def compute_base_patterns(
    graph: KnowledgeGraph,
    min_support: int,
    config: RangeConfig | None = None,
    seed: int = 0,
    workers: int = 1,
    diagnostics: DiagnosticCounter | None = None,
) -> PatternStore:
    """Build the generation-0 store of supported single-clause patterns.

    Types with fewer members than ``min_support`` are skipped outright.
    Work is independent per type; results are merged in type-IRI order so
    the outcome does not depend on scheduling.
    """
    if min_support < 1:
        raise ValueError("min_support must be at least 1")
    config = config or RangeConfig()
    diagnostics = diagnostics or DiagnosticCounter()
    store = PatternStore()

    eligible = [
        t for t in graph.type_index if len(graph.entities_of_type(t)) >= min_support
    ]
    eligible.sort(key=lambda t: graph.decode(t).lexical)

    def work(type_id: int) -> list[GraphPattern]:
        return _base_patterns_for_type(graph, type_id, min_support, config, seed, diagnostics)

    if workers > 1 and len(eligible) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, eligible))
    else:
        results = [work(t) for t in eligible]

    for type_id, patterns in zip(eligible, results):
        store.add_base(type_id, graph.decode(type_id).lexical, patterns)
    return store
