"""Phase two: breadth-first anytime extension of patterns.

Each iteration d extends the generation-d patterns at their frontier
variables (the object-type variables introduced in generation d; a base
pattern exposes both its root and its tail). Extensions attach base
patterns of the frontier variable's type, and all supported combinations
of candidates are emitted, so generation d+1 realizes every legal
k-combination. Generations are synchronization barriers: an interrupt
between barriers drops the unfinished generation, which is what makes the
run anytime-safe.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .base import PatternStore
from .graph import KnowledgeGraph
from .model import (
    Clause,
    Const,
    DataTypeVar,
    GraphPattern,
    ObjectTypeVar,
    PatternMetrics,
    ValueRangeVar,
    Variable,
    membership,
    metrics,
    tail_sort_key,
)


@dataclass(frozen=True)
class Limits:
    """Search limits.

    ``max_depth`` bounds the number of generations (the anytime horizon);
    it deliberately does not prune a pattern's own depth metric, so the
    contents of generation g never depend on where the horizon sits - that
    is what makes an interrupted run identical to a shorter one.
    ``max_pattern_depth`` is an optional independent cap on the metric.
    """

    min_support: int
    max_depth: int
    max_length: int
    max_width: int
    max_pattern_depth: int | None = None


@dataclass
class GenerationStats:
    candidates: int = 0
    domains_computed: int = 0
    emitted: int = 0
    dedup_hits: int = 0
    pruned_size: int = 0
    pruned_support: int = 0
    no_reduction: int = 0
    graced: int = 0
    extended_parents: int = 0

    def merge(self, other: "GenerationStats") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))


@dataclass
class Telemetry:
    per_generation: dict[int, GenerationStats] = field(default_factory=dict)

    def stats(self, generation: int) -> GenerationStats:
        return self.per_generation.setdefault(generation, GenerationStats())

    def total(self, name: str) -> int:
        return sum(getattr(s, name) for s in self.per_generation.values())


class GenerationInterrupted(Exception):
    """Raised inside a worker when a stop was requested mid-generation."""


# --- domain propagation -----------------------------------------------------


def _tail_accepts(graph: KnowledgeGraph, tail, domains: dict[int, frozenset[int]], rid: int) -> bool:
    if isinstance(tail, Const):
        return rid == tail.rid
    return rid in domains[tail.vid]


def refine_domains(
    graph: KnowledgeGraph,
    clauses: tuple[Clause, ...],
    variables: dict[int, Variable],
    domains: dict[int, frozenset[int]],
    dirty: set[int],
) -> dict[int, frozenset[int]]:
    """Semi-join propagation to a fixpoint.

    Starting from the variables in ``dirty``, every clause touching a
    shrunk domain re-filters its two endpoints until nothing changes.
    Intersection-only updates make the fixpoint order-independent.
    """
    domains = dict(domains)
    worklist = [c for c in clauses if c.head_vid in dirty or (
        not isinstance(c.tail, Const) and c.tail.vid in dirty)]
    while worklist:
        clause = worklist.pop(0)
        head_var = variables[clause.head_vid]
        assert isinstance(head_var, ObjectTypeVar)
        heads: set[int] = set()
        tails: set[int] = set()
        head_dom = domains[clause.head_vid]
        for a in graph.assertions_for(clause.predicate_id, head_var.type_id):
            if a.head not in head_dom:
                continue
            if not _tail_accepts(graph, clause.tail, domains, a.tail):
                continue
            heads.add(a.head)
            if not isinstance(clause.tail, Const):
                tails.add(a.tail)
        changed: set[int] = set()
        new_heads = frozenset(heads)
        if new_heads != domains[clause.head_vid]:
            domains[clause.head_vid] = new_heads
            changed.add(clause.head_vid)
        if not isinstance(clause.tail, Const):
            new_tails = frozenset(tails)
            if new_tails != domains[clause.tail.vid]:
                domains[clause.tail.vid] = new_tails
                changed.add(clause.tail.vid)
        if changed:
            for other in clauses:
                if other is clause:
                    continue
                touches = other.head_vid in changed or (
                    not isinstance(other.tail, Const) and other.tail.vid in changed
                )
                if touches and other not in worklist:
                    worklist.append(other)
    return domains


def _child_structure(
    pattern: GraphPattern,
    host_vid: int,
    base: GraphPattern,
    generation: int,
) -> tuple[GraphPattern, set[int]]:
    """Build the extended pattern without touching any domain yet.

    The returned pattern carries the parent's domains plus the raw base
    domains for the new clause; :func:`_refine_child` must run before the
    support or reduction state is read. Returns the child and the dirty
    variable set for propagation.
    """
    host = pattern.variables[host_vid]
    assert isinstance(host, ObjectTypeVar)
    template = base.clauses[0]
    fresh_vid = pattern.next_vid()

    tail = template.tail
    domains = dict(pattern.domains)
    variables = dict(pattern.variables)
    if isinstance(tail, Const):
        new_tail: object = tail
    elif isinstance(tail, ObjectTypeVar):
        new_tail = ObjectTypeVar(fresh_vid, tail.type_id, tail.type_iri, generation=generation)
    elif isinstance(tail, DataTypeVar):
        new_tail = DataTypeVar(fresh_vid, tail.datatype_id, tail.datatype_iri)
    else:
        new_tail = ValueRangeVar(fresh_vid, tail.model, tail.datatype_class)
    if not isinstance(new_tail, Const):
        variables[fresh_vid] = new_tail
        domains[fresh_vid] = base.domains[base.clauses[0].tail.vid]

    clause = Clause(template.predicate_id, template.predicate_iri, host_vid, new_tail)
    domains[host_vid] = domains[host_vid] & base.domains[base.root.vid]
    dirty = {host_vid}
    if not isinstance(new_tail, Const):
        dirty.add(fresh_vid)

    new_frontier = pattern.frontier if pattern.generation == generation else ()
    if isinstance(new_tail, ObjectTypeVar):
        new_frontier = new_frontier + (fresh_vid,)

    child = GraphPattern(
        root=pattern.root,
        clauses=pattern.clauses + (clause,),
        variables=variables,
        domains=domains,
        generation=generation,
        parent=pattern,
        frontier=new_frontier,
    )
    return child, dirty


def _refine_child(graph: KnowledgeGraph, child: GraphPattern, dirty: set[int]) -> None:
    child.domains = refine_domains(graph, child.clauses, child.variables, child.domains, dirty)
    assert child.parent is not None
    child.reduced = child.support < child.parent.support


def attach_clause(
    graph: KnowledgeGraph,
    pattern: GraphPattern,
    host_vid: int,
    base: GraphPattern,
    generation: int,
) -> GraphPattern:
    """Extend ``pattern`` with a base pattern's clause re-rooted at ``host_vid``.

    Domains are copied, the host domain is intersected with the base
    pattern's head domain, and the shrinkage is propagated through the
    whole pattern (the parent's sets are never mutated).
    """
    child, dirty = _child_structure(pattern, host_vid, base, generation)
    _refine_child(graph, child, dirty)
    return child


def propagate_domain(
    graph: KnowledgeGraph, pattern: GraphPattern, host_vid: int, base: GraphPattern
) -> tuple[dict[int, frozenset[int]], int]:
    """Domains and support after adding a base clause, without committing."""
    child = attach_clause(graph, pattern, host_vid, base, generation=pattern.generation + 1)
    return child.domains, child.support


# --- pruning ----------------------------------------------------------------


@dataclass(frozen=True)
class PruneDecision:
    keep: bool
    extendable: bool
    reason: str | None


def prune(pattern: GraphPattern, parent: GraphPattern | None, limits: Limits) -> PruneDecision:
    """Classify a supported pattern for the search.

    Size violations are discarded. A pattern whose root domain equals its
    parent's is kept in the output but cannot host extensions, unless the
    new clause introduced an object-type tail, which earns one further
    iteration (domains may still shrink through it).
    """
    if not metrics_within(metrics(pattern), limits):
        return PruneDecision(keep=False, extendable=False, reason="size")
    if parent is not None and not pattern.reduced:
        if pattern.frontier:
            return PruneDecision(keep=True, extendable=True, reason="grace")
        return PruneDecision(keep=True, extendable=False, reason="no-domain-reduction")
    if not pattern.frontier:
        return PruneDecision(keep=True, extendable=False, reason="terminal")
    return PruneDecision(keep=True, extendable=True, reason=None)


def dedup_check(pattern: GraphPattern, seen: set[str]) -> str:
    """Cheap canonical-string proxy check, run before any domain work."""
    return "duplicate" if pattern.canonical in seen else "fresh"


def metrics_within(m: PatternMetrics, limits: Limits) -> bool:
    if m.length > limits.max_length or m.width > limits.max_width:
        return False
    return limits.max_pattern_depth is None or m.depth <= limits.max_pattern_depth


# --- exploration ------------------------------------------------------------


def _candidate_templates(
    store: PatternStore, pattern: GraphPattern
) -> list[tuple[int, GraphPattern]]:
    """(host variable, base pattern) pairs for every frontier endpoint."""
    candidates: list[tuple[int, GraphPattern]] = []
    for vid in sorted(pattern.frontier):
        var = pattern.variables[vid]
        assert isinstance(var, ObjectTypeVar)
        existing = {
            tail_sort_key(c) for c in pattern.clauses_at(vid)
        }
        for base in store.base_patterns(var.type_id):
            if tail_sort_key(base.clauses[0]) in existing:
                continue
            candidates.append((vid, base))
    return candidates


def explore(
    graph: KnowledgeGraph,
    store: PatternStore,
    parent: GraphPattern,
    limits: Limits,
    generation: int,
    seen: set[str],
    stats: GenerationStats,
    prune_early: bool = True,
) -> list[GraphPattern]:
    """Emit all supported combinations of candidate extensions of ``parent``.

    Candidates are indexed, and a pattern only takes candidates with a
    higher index than the last one it absorbed, so each subset is built
    exactly once. With ``prune_early`` a candidate that fails the support
    check directly under the parent is dropped from all further
    combinations (its domain is fixed, so no recombination can save it),
    and size limits are checked before any domain is computed.
    """
    candidates = _candidate_templates(store, parent)
    emitted: list[GraphPattern] = []
    dead: set[int] = set()
    queue: list[tuple[GraphPattern, int]] = [(parent, -1)]
    while queue:
        current, last_index = queue.pop(0)
        for index in range(last_index + 1, len(candidates)):
            if index in dead:
                continue
            host_vid, base = candidates[index]
            stats.candidates += 1
            child, dirty = _child_structure(current, host_vid, base, generation)
            if dedup_check(child, seen) == "duplicate":
                stats.dedup_hits += 1
                continue
            if prune_early and not metrics_within(metrics(child), limits):
                stats.pruned_size += 1
                continue
            _refine_child(graph, child, dirty)
            stats.domains_computed += 1
            if not prune_early and not metrics_within(metrics(child), limits):
                stats.pruned_size += 1
                continue
            if child.support < limits.min_support:
                stats.pruned_support += 1
                if prune_early and current is parent:
                    dead.add(index)
                continue
            decision = prune(child, current, limits)
            if decision.reason == "no-domain-reduction":
                stats.no_reduction += 1
            elif decision.reason == "grace":
                stats.graced += 1
            seen.add(child.canonical)
            emitted.append(child)
            stats.emitted += 1
            queue.append((child, index))
    if emitted:
        stats.extended_parents += 1
    return emitted


# --- generation loop --------------------------------------------------------


def _mine_type(
    graph: KnowledgeGraph,
    store: PatternStore,
    type_id: int,
    depth: int,
    limits: Limits,
    prune_early: bool,
    stop: threading.Event | None,
) -> tuple[list[GraphPattern], GenerationStats]:
    """One generation step for one root type.

    Reads the store but never writes it; duplicates are tracked against a
    private copy of the type's table so worker scheduling cannot matter.
    """
    stats = GenerationStats()
    seen = set(store.seen.get(type_id, ()))
    children: list[GraphPattern] = []
    for pattern in store.at(depth, type_id):
        if stop is not None and stop.is_set():
            raise GenerationInterrupted()
        if not pattern.frontier:
            continue
        children.extend(
            explore(
                graph, store, pattern, limits,
                generation=depth + 1, seen=seen, stats=stats,
                prune_early=prune_early,
            )
        )
    children.sort(key=lambda p: p.canonical)
    return children, stats


def discover(
    graph: KnowledgeGraph,
    store: PatternStore,
    min_support: int,
    max_depth: int,
    max_length: int = 8,
    max_width: int = 4,
    workers: int = 1,
    prune_early: bool = True,
    stop: threading.Event | None = None,
    on_generation=None,
) -> PatternStore:
    """Iteratively extend the base patterns, one full generation at a time.

    Stops at ``max_depth`` iterations, at a global fixpoint (no pattern
    extended anywhere), or when ``stop`` is set / ``on_generation`` returns
    False - in the latter cases only complete generations remain in the
    store, so partial output equals a shorter run. Worker count never
    affects the result: types are independent shards merged in IRI order.
    """
    limits = Limits(
        min_support=min_support,
        max_depth=max_depth,
        max_length=max_length,
        max_width=max_width,
    )
    telemetry = Telemetry()
    store.telemetry = telemetry
    store.last_complete_depth = 0
    if on_generation is not None and on_generation(0, store) is False:
        return store

    depth = 0
    while depth < max_depth:
        if stop is not None and stop.is_set():
            break
        types = [t for t in store.types() if store.at(depth, t)]

        def work(type_id: int):
            return _mine_type(graph, store, type_id, depth, limits, prune_early, stop)

        try:
            if workers > 1 and len(types) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(work, types))
            else:
                results = [work(t) for t in types]
        except GenerationInterrupted:
            break

        stats = telemetry.stats(depth + 1)
        total_new = 0
        for type_id, (children, type_stats) in zip(types, results):
            stats.merge(type_stats)
            if children:
                store.set_generation(depth + 1, type_id, children)
                total_new += len(children)
        if total_new == 0:
            break
        store.last_complete_depth = depth + 1
        if on_generation is not None and on_generation(depth + 1, store) is False:
            depth += 1
            break
        depth += 1
    return store


def run_discovery(
    graph: KnowledgeGraph,
    min_support: int,
    max_depth: int,
    max_length: int = 8,
    max_width: int = 4,
    seed: int = 0,
    workers: int = 1,
    range_config=None,
    prune_early: bool = True,
    stop: threading.Event | None = None,
    on_generation=None,
) -> PatternStore:
    """Phase one plus phase two with one set of knobs."""
    from .base import compute_base_patterns

    store = compute_base_patterns(
        graph, min_support, config=range_config, seed=seed, workers=workers
    )
    return discover(
        graph, store, min_support, max_depth, max_length, max_width,
        workers=workers, prune_early=prune_early, stop=stop, on_generation=on_generation,
    )
