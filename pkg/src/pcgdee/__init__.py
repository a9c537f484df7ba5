"""Document-level event extraction with pseudo-trigger-aware pruned complete graphs."""

from .corpus import (
    Document,
    Entity,
    EntityMention,
    EventRecord,
    EventSchema,
    EventType,
    load_corpus,
    load_schema,
    validate_document,
)
from .evaluate import argument_f1, match_records, oracle_decode_errors
from .graph import (
    Combination,
    CombinationGraph,
    decode_combinations,
    encode_gold_graph,
    enumerate_cliques,
    identify_pseudo_triggers,
)
from .records import fill_record, pair_candidates
from .triggers import (
    PseudoTriggerPlan,
    augment_with_annotated,
    select_pseudo_triggers,
    subset_stats,
)

__version__ = "0.1.0"
