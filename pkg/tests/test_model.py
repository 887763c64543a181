import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import kgpatterns as kg
from kgpatterns.literals import XSD, DatatypeClass
from kgpatterns.model import (
    Clause,
    Const,
    DataTypeVar,
    GraphPattern,
    MixtureRange,
    ObjectTypeVar,
    RegexRange,
    ValueRangeVar,
    canonical_string,
    membership,
    metrics,
    validate,
)

from conftest import EX, ex

LISTING1_CANONICAL = (
    "ot:http://ex.org/Death_Certificate{"
    "http://ex.org/at_age->vr:gmm[(1.0,24.5,1.32)];"
    "http://ex.org/has_subject->ot:http://ex.org/Person{"
    "http://ex.org/has_gender->c:<http://ex.org/Female>;"
    "http://ex.org/has_occupation->c:<http://ex.org/H.0-2>};"
    "http://ex.org/has_type->c:<http://ex.org/Death_Certificate>}"
)


def listing1_clauses():
    vi = ObjectTypeVar(1, 11, ex("Person"), generation=1)
    vr = ValueRangeVar(
        2,
        MixtureRange(((1.0, 24.5, 1.32),), datatype=XSD + "float"),
        DatatypeClass.NUMERIC,
    )
    return [
        Clause(1, ex("has_gender"), 1, Const(100, f"<{ex('Female')}>")),
        Clause(2, ex("has_occupation"), 1, Const(101, f"<{ex('H.0-2')}>")),
        Clause(3, ex("has_subject"), 0, vi),
        Clause(4, ex("has_type"), 0, Const(102, f"<{ex('Death_Certificate')}>")),
        Clause(5, ex("at_age"), 0, vr),
    ]


def assemble(clauses) -> GraphPattern:
    root = ObjectTypeVar(0, 10, ex("Death_Certificate"))
    variables = {0: root}
    for clause in clauses:
        tail = clause.tail
        if not isinstance(tail, Const):
            variables[tail.vid] = tail
    domains = {vid: frozenset({vid}) for vid in variables}
    return GraphPattern(root=root, clauses=tuple(clauses), variables=variables, domains=domains)


def listing1_pattern() -> GraphPattern:
    return assemble(listing1_clauses())


def single_clause(tail) -> GraphPattern:
    root = ObjectTypeVar(0, 10, ex("T"))
    variables = {0: root}
    if not isinstance(tail, Const):
        variables[tail.vid] = tail
    return GraphPattern(
        root=root,
        clauses=(Clause(1, ex("p"), 0, tail),),
        variables=variables,
        domains={vid: frozenset() for vid in variables},
    )


# --- validate ----------------------------------------------------------------


def test_validate_listing1_ok():
    assert validate(listing1_pattern()) is None


def test_validate_single_constant_clause_ok():
    assert validate(single_clause(Const(5, f"<{ex('c')}>"))) is None


def test_validate_disconnected_head():
    root = ObjectTypeVar(0, 10, ex("T"))
    stray = ObjectTypeVar(7, 11, ex("U"))
    pattern = GraphPattern(
        root=root,
        clauses=(
            Clause(1, ex("p"), 0, Const(5, f"<{ex('c')}>")),
            Clause(2, ex("q"), 7, Const(6, f"<{ex('d')}>")),
        ),
        variables={0: root, 7: stray},
        domains={0: frozenset(), 7: frozenset()},
    )
    report = validate(pattern)
    assert report is not None and "connected" in report


def test_validate_non_object_type_head():
    root = ObjectTypeVar(0, 10, ex("T"))
    dt = DataTypeVar(1, 3, XSD + "string")
    pattern = GraphPattern(
        root=root,
        clauses=(
            Clause(1, ex("p"), 0, dt),
            Clause(2, ex("q"), 1, Const(5, f"<{ex('c')}>")),
        ),
        variables={0: root, 1: dt},
        domains={0: frozenset(), 1: frozenset()},
    )
    report = validate(pattern)
    assert report is not None and "object-type" in report


def test_validate_closure_under_removing_last_terminal_clause():
    pattern = listing1_pattern()
    terminal = [c for c in pattern.clauses if isinstance(c.tail, Const)][-1]
    clauses = tuple(c for c in pattern.clauses if c is not terminal)
    variables = {v: x for v, x in pattern.variables.items()}
    trimmed = GraphPattern(
        root=pattern.root, clauses=clauses, variables=variables, domains=dict(pattern.domains)
    )
    assert validate(trimmed) is None


# --- metrics -----------------------------------------------------------------


def test_metrics_listing1():
    assert metrics(listing1_pattern()) == kg.PatternMetrics(depth=4, length=5, width=3)


def test_metrics_single_clause():
    assert metrics(single_clause(Const(5, f"<{ex('c')}>"))) == kg.PatternMetrics(1, 1, 1)


def test_metrics_star_of_four():
    root = ObjectTypeVar(0, 10, ex("T"))
    clauses = tuple(
        Clause(i, ex(f"p{i}"), 0, Const(20 + i, f"<{ex(f'c{i}')}>")) for i in range(4)
    )
    pattern = GraphPattern(
        root=root, clauses=clauses, variables={0: root}, domains={0: frozenset()}
    )
    # longest path runs leaf-to-leaf through the single head variable
    assert metrics(pattern) == kg.PatternMetrics(depth=2, length=4, width=4)


def test_metrics_invariant_length_ge_width():
    m = metrics(listing1_pattern())
    assert m.length >= m.width >= 1 and m.depth >= 1


# --- canonical strings ---------------------------------------------------------


def test_canonical_golden_listing1():
    assert listing1_pattern().canonical == LISTING1_CANONICAL


def test_canonical_insertion_order_invariant():
    clauses = listing1_clauses()
    reordered = [clauses[i] for i in (4, 2, 0, 3, 1)]
    assert assemble(clauses).canonical == assemble(reordered).canonical


def test_canonical_variable_id_invariant():
    clauses = listing1_clauses()
    remapped = []
    mapping = {0: 0, 1: 5, 2: 9}
    for clause in clauses:
        tail = clause.tail
        if isinstance(tail, ObjectTypeVar):
            tail = ObjectTypeVar(mapping[tail.vid], tail.type_id, tail.type_iri)
        elif isinstance(tail, ValueRangeVar):
            tail = ValueRangeVar(mapping[tail.vid], tail.model, tail.datatype_class)
        remapped.append(Clause(clause.predicate_id, clause.predicate_iri,
                               mapping[clause.head_vid], tail))
    assert assemble(remapped).canonical == LISTING1_CANONICAL


def test_canonical_distinguishes_constants():
    a = single_clause(Const(5, f"<{ex('c')}>"))
    b = single_clause(Const(6, f"<{ex('d')}>"))
    assert a.canonical != b.canonical


def test_canonical_distinguishes_range_parameters():
    a = single_clause(
        ValueRangeVar(1, MixtureRange(((1.0, 24.5, 1.32),)), DatatypeClass.NUMERIC)
    )
    b = single_clause(
        ValueRangeVar(1, MixtureRange(((1.0, 24.5, 1.33),)), DatatypeClass.NUMERIC)
    )
    assert a.canonical != b.canonical


@given(st.permutations(range(5)), st.integers(min_value=1, max_value=50))
def test_canonical_permutation_property(order, offset):
    clauses = listing1_clauses()
    mapping = {0: 0, 1: 1 + offset, 2: 2 + 2 * offset}
    permuted = []
    for i in order:
        clause = clauses[i]
        tail = clause.tail
        if isinstance(tail, ObjectTypeVar):
            tail = ObjectTypeVar(mapping[tail.vid], tail.type_id, tail.type_iri)
        elif isinstance(tail, ValueRangeVar):
            tail = ValueRangeVar(mapping[tail.vid], tail.model, tail.datatype_class)
        permuted.append(Clause(clause.predicate_id, clause.predicate_iri,
                               mapping[clause.head_vid], tail))
    assert assemble(permuted).canonical == LISTING1_CANONICAL


def test_canonical_idempotent():
    pattern = listing1_pattern()
    assert canonical_string(pattern) == canonical_string(pattern) == pattern.canonical


# --- membership ----------------------------------------------------------------


def test_membership_mean_always_matches():
    model = MixtureRange(((1.0, 24.5, 1.32),))
    assert membership(model, kg.literal("24.5", datatype=XSD + "float"))


def test_membership_outside_sigma():
    # 23.0 < 24.5 - sqrt(1.32) = 23.351...
    model = MixtureRange(((1.0, 24.5, 1.32),))
    assert not membership(model, kg.literal("23.0", datatype=XSD + "float"))
    assert membership(model, kg.literal("23.4", datatype=XSD + "float"))


def test_membership_regex_full_string():
    model = RegexRange("[a-z]{3,16}")
    assert membership(model, kg.literal("smith"))
    assert not membership(model, kg.literal("s"))
    assert not membership(model, kg.literal("smith jones"))


def test_membership_temporal_converts_to_seconds():
    day = 86400.0
    model = MixtureRange(((1.0, 0.0, day * day),), temporal=True)
    assert membership(model, kg.literal("1970-01-01", datatype=XSD + "date"))
    assert membership(model, kg.literal("1970-01-02", datatype=XSD + "date"))
    assert not membership(model, kg.literal("1970-01-03", datatype=XSD + "date"))


def test_membership_unparseable_counts_diagnostic():
    model = MixtureRange(((1.0, 0.0, 1.0),), temporal=True)
    diag = kg.model.DiagnosticCounter()
    assert not membership(model, kg.literal("not a date", datatype=XSD + "date"), diag)
    assert diag.unparseable == 1


def test_membership_class_mismatch_is_no_match():
    assert not membership(MixtureRange(((1.0, 0.0, 1.0),)), kg.literal("abc"))
    assert not membership(RegexRange("[a-z]+"), kg.literal("5", datatype=XSD + "integer"))


@given(st.floats(min_value=0.0, max_value=10.0, allow_nan=False))
def test_membership_symmetric_around_mean(d):
    model = MixtureRange(((1.0, 24.5, 1.32),))
    lo = kg.literal(repr(24.5 - d), datatype=XSD + "double")
    hi = kg.literal(repr(24.5 + d), datatype=XSD + "double")
    assert membership(model, lo) == membership(model, hi)


def test_mixture_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        MixtureRange(((0.5, 0.0, 1.0), (0.4, 1.0, 1.0)))
    with pytest.raises(ValueError):
        MixtureRange(((1.0, 0.0, 0.0),))


def test_multi_component_membership_is_disjunction():
    model = MixtureRange(((0.5, 0.0, 1.0), (0.5, 10.0, 1.0)))
    for lex, expected in [("0.5", True), ("9.5", True), ("5.0", False)]:
        assert membership(model, kg.literal(lex, datatype=XSD + "double")) is expected


# --- support against brute force ------------------------------------------------


def test_support_matches_brute_force_on_small_graphs():
    from conftest import random_graph
    from oracle import brute_force_support

    for seed in (3, 4):
        graph = random_graph(seed, n_entities=25, n_assertions=80, n_types=3)
        store = kg.run_discovery(graph, min_support=2, max_depth=2, max_length=3, max_width=2)
        checked = 0
        for pattern in store.patterns():
            assert pattern.support == brute_force_support(graph, pattern), pattern.canonical
            checked += 1
        assert checked > 0
