import random

import pytest

import kgpatterns as kg

EX = "http://ex.org/"
XSD = "http://www.w3.org/2001/XMLSchema#"
TYPE_PRED = EX + "has_type"


def ex(name: str) -> str:
    return EX + name


FIG1_NT = f"""\
<{ex('jane')}> <{TYPE_PRED}> <{ex('Person')}> .
<{ex('jane')}> <{ex('has_gender')}> <{ex('Female')}> .
<{ex('jane')}> <{ex('has_occupation')}> <{ex('H.0-2')}> .
<{ex('jane')}> <{ex('has_name')}> "jane" .
<{ex('cert')}> <{TYPE_PRED}> <{ex('Death_Certificate')}> .
<{ex('cert')}> <{ex('has_subject')}> <{ex('jane')}> .
<{ex('cert')}> <{ex('at_age')}> "23.6"^^<{XSD}float> .
<{ex('jane')}> <{ex('born_in')}> <{ex('Amsterdam')}> .
"""


@pytest.fixture
def fig1_graph():
    triples, skipped = kg.parse_ntriples(FIG1_NT)
    assert skipped == 0
    return kg.build_graph(triples, type_predicate=TYPE_PRED)


def build(nt: str, type_predicate: str = TYPE_PRED) -> kg.KnowledgeGraph:
    triples, _ = kg.parse_ntriples(nt)
    return kg.build_graph(triples, type_predicate=type_predicate)


def random_graph(
    seed: int,
    n_entities: int = 30,
    n_assertions: int = 120,
    n_types: int = 3,
    n_predicates: int = 4,
    numeric_literals: bool = False,
) -> kg.KnowledgeGraph:
    """Random typed multidigraph for oracle comparisons.

    Every entity gets one type; assertions link random entities, with an
    optional numeric-attribute predicate. Blank nodes are avoided so every
    emitted query stays executable.
    """
    rng = random.Random(seed)
    types = [ex(f"Type{i}") for i in range(n_types)]
    predicates = [ex(f"p{i}") for i in range(n_predicates)]
    entities = [ex(f"e{i}") for i in range(n_entities)]
    lines = []
    for entity in entities:
        lines.append(f"<{entity}> <{TYPE_PRED}> <{rng.choice(types)}> .")
    for _ in range(n_assertions):
        head = rng.choice(entities)
        pred = rng.choice(predicates)
        if numeric_literals and rng.random() < 0.25:
            value = round(rng.gauss(50.0, 4.0), 1)
            lines.append(f'<{head}> <{pred}> "{value}"^^<{XSD}double> .')
        else:
            lines.append(f"<{head}> <{pred}> <{rng.choice(entities)}> .")
    return build("\n".join(lines))
