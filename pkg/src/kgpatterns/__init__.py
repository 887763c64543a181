"""Anytime bottom-up discovery of generalized multimodal graph patterns."""

from .base import PatternStore, RangeConfig, base_domain, compute_base_patterns
from .emit import (
    DiscoveryRun,
    LineageError,
    append_selection_provenance,
    apply_facets,
    export_dict,
    make_run,
    to_json,
    to_rdf,
    to_sparql,
    write_outputs,
)
from .graph import (
    Assertion,
    KnowledgeGraph,
    ParseError,
    Resource,
    Triple,
    bnode,
    build_graph,
    iri,
    literal,
    load_graph,
    parse_ntriples,
    serialize_term,
)
from .literals import DatatypeClass, classify_datatype, literal_value, to_unix_seconds
from .mine import (
    Limits,
    PruneDecision,
    attach_clause,
    dedup_check,
    discover,
    explore,
    propagate_domain,
    prune,
    refine_domains,
    run_discovery,
)
from .model import (
    Clause,
    Const,
    DataTypeVar,
    GraphPattern,
    MixtureRange,
    ObjectTypeVar,
    PatternMetrics,
    RegexRange,
    ValueRangeVar,
    canonical_string,
    membership,
    metrics,
    validate,
)
from .ranges import (
    MixtureFit,
    NumericSample,
    RegexCluster,
    cluster_and_generalize,
    fit_gmm,
    population_seed,
    prepare_sample,
    run_em,
    value_regex,
)

__version__ = "0.1.0"
