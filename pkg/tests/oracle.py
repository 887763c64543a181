"""Independent oracles for the miner.

Everything here deliberately avoids the engine's domain-propagation and
combination machinery: support is computed by direct recursive matching
over the assertion list, and the enumerator generates every legal clause
tree from the base alphabet and tests it.
"""

from __future__ import annotations

from itertools import combinations

from kgpatterns.base import PatternStore
from kgpatterns.graph import KnowledgeGraph
from kgpatterns.model import (
    Clause,
    Const,
    DataTypeVar,
    GraphPattern,
    ObjectTypeVar,
    ValueRangeVar,
    membership,
    metrics,
)


def _tail_matches(graph: KnowledgeGraph, tail, rid: int, assignment_check) -> bool:
    res = graph.decode(rid)
    if isinstance(tail, Const):
        return rid == tail.rid
    if isinstance(tail, DataTypeVar):
        return res.kind == "literal" and res.datatype == tail.datatype_iri
    if isinstance(tail, ValueRangeVar):
        return membership(tail.model, res)
    # object-type tail: recurse into its subtree
    if rid not in graph.entities_of_type(tail.type_id):
        return False
    return assignment_check(tail.vid, rid)


def brute_force_support(graph: KnowledgeGraph, pattern: GraphPattern) -> int:
    """Count root bindings by direct matching, one entity at a time."""
    by_head: dict[int, list[Clause]] = {}
    for clause in pattern.clauses:
        by_head.setdefault(clause.head_vid, []).append(clause)
    out_edges: dict[tuple[int, int], list[int]] = {}
    for a in graph.assertions:
        out_edges.setdefault((a.head, a.predicate), []).append(a.tail)

    def satisfies(vid: int, entity: int) -> bool:
        for clause in by_head.get(vid, ()):
            tails = out_edges.get((entity, clause.predicate_id), ())
            if not any(
                _tail_matches(graph, clause.tail, rid, satisfies) for rid in tails
            ):
                return False
        return True

    root = pattern.root
    members = graph.entities_of_type(root.type_id)
    return sum(1 for e in members if satisfies(root.vid, e))


def brute_force_domains(
    graph: KnowledgeGraph, pattern: GraphPattern
) -> dict[int, frozenset[int]]:
    """Per-variable projections of all satisfying assignments."""
    by_head: dict[int, list[Clause]] = {}
    for clause in pattern.clauses:
        by_head.setdefault(clause.head_vid, []).append(clause)
    var_order = sorted(pattern.variables)
    out_edges: dict[tuple[int, int], list[int]] = {}
    for a in graph.assertions:
        out_edges.setdefault((a.head, a.predicate), []).append(a.tail)

    candidates: dict[int, list[int]] = {}
    for vid, var in pattern.variables.items():
        if isinstance(var, ObjectTypeVar):
            candidates[vid] = sorted(graph.entities_of_type(var.type_id))
        else:
            candidates[vid] = sorted(
                rid for rid in range(len(graph)) if graph.decode(rid).kind == "literal"
            )

    found: dict[int, set[int]] = {vid: set() for vid in pattern.variables}

    def extend(index: int, binding: dict[int, int]) -> None:
        if index == len(var_order):
            for vid, rid in binding.items():
                found[vid].add(rid)
            return
        vid = var_order[index]
        for rid in candidates[vid]:
            binding[vid] = rid
            if _consistent(binding):
                extend(index + 1, binding)
            del binding[vid]

    def _consistent(binding: dict[int, int]) -> bool:
        for clause in pattern.clauses:
            if clause.head_vid not in binding:
                continue
            head_rid = binding[clause.head_vid]
            tail = clause.tail
            tails = out_edges.get((head_rid, clause.predicate_id), ())
            if isinstance(tail, Const):
                if tail.rid not in tails:
                    return False
            elif tail.vid in binding:
                if binding[tail.vid] not in tails:
                    return False
                res = graph.decode(binding[tail.vid])
                if isinstance(tail, DataTypeVar):
                    if res.kind != "literal" or res.datatype != tail.datatype_iri:
                        return False
                elif isinstance(tail, ValueRangeVar):
                    if not membership(tail.model, res):
                        return False
        return True

    extend(0, {})
    return {vid: frozenset(v) for vid, v in found.items()}


def enumerate_patterns(
    graph: KnowledgeGraph,
    store: PatternStore,
    min_support: int,
    max_depth: int,
    max_length: int,
    max_width: int,
) -> dict[str, int]:
    """Exhaustive generate-and-test over clause trees built from the base
    alphabet, filtered by the metric caps and brute-force support."""
    results: dict[str, int] = {}

    def alphabet(type_id: int) -> list[GraphPattern]:
        return store.base_patterns(type_id)

    def expansions(type_id: int, budget: int):
        """All clause forests (tuples of (base, subtree)) attachable at a
        variable of the given type within the clause budget."""
        bases = alphabet(type_id)
        yield ()
        for size in range(1, min(max_width, len(bases), budget) + 1):
            for combo in combinations(range(len(bases)), size):
                chosen = [bases[i] for i in combo]
                used = size
                # recursively expand object-type tails of the chosen bases
                def rec(idx: int, remaining: int, acc: list):
                    if idx == len(chosen):
                        yield tuple(acc)
                        return
                    base = chosen[idx]
                    tail = base.clauses[0].tail
                    if isinstance(tail, ObjectTypeVar):
                        for sub in expansions(tail.type_id, remaining):
                            sub_size = _forest_size(sub)
                            if sub_size <= remaining:
                                acc.append((base, sub))
                                yield from rec(idx + 1, remaining - sub_size, acc)
                                acc.pop()
                    else:
                        acc.append((base, ()))
                        yield from rec(idx + 1, remaining, acc)
                        acc.pop()

                yield from rec(0, budget - used, [])

    def _forest_size(forest) -> int:
        return sum(1 + _forest_size(sub) for _, sub in forest)

    def materialize(type_id: int, type_iri: str, forest) -> GraphPattern:
        counter = [0]
        variables = {}
        clauses = []

        def fresh() -> int:
            counter[0] += 1
            return counter[0]

        root = ObjectTypeVar(0, type_id, type_iri)
        variables[0] = root

        def attach(head_vid: int, forest) -> None:
            for base, sub in forest:
                template = base.clauses[0]
                tail = template.tail
                if isinstance(tail, Const):
                    new_tail = tail
                else:
                    vid = fresh()
                    if isinstance(tail, ObjectTypeVar):
                        new_tail = ObjectTypeVar(vid, tail.type_id, tail.type_iri)
                    elif isinstance(tail, DataTypeVar):
                        new_tail = DataTypeVar(vid, tail.datatype_id, tail.datatype_iri)
                    else:
                        new_tail = ValueRangeVar(vid, tail.model, tail.datatype_class)
                    variables[vid] = new_tail
                clauses.append(
                    Clause(template.predicate_id, template.predicate_iri, head_vid, new_tail)
                )
                if isinstance(new_tail, ObjectTypeVar):
                    attach(new_tail.vid, sub)

        attach(0, forest)
        return GraphPattern(
            root=root,
            clauses=tuple(clauses),
            variables=variables,
            domains={0: frozenset()},
        )

    for type_id in store.types():
        type_iri = store.type_iris[type_id]
        for forest in expansions(type_id, max_length):
            if not forest:
                continue
            pattern = materialize(type_id, type_iri, forest)
            m = metrics(pattern)
            if m.length > max_length or m.width > max_width or m.depth > max_depth:
                continue
            support = brute_force_support(graph, pattern)
            if support < min_support:
                continue
            results[pattern.canonical] = support
    return results


def mined_results(store: PatternStore) -> dict[str, int]:
    return {p.canonical: p.support for p in store.patterns()}
