"""End-to-end extraction with trained models: detect -> link -> decode -> fill."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Document, EventRecord, EventSchema
from .graph import CombinationGraph, decode_combinations
from .records import generate_records, oracle_role_probabilities
from .scorer import (
    DetectorModel,
    EntityEmbedder,
    RoleModel,
    SimilarityModel,
    binarize,
    detect_types,
    detected,
    score_roles,
    similarity_matrix,
)


@dataclass
class Extractor:
    embedder: EntityEmbedder
    similarity: SimilarityModel
    detector: DetectorModel
    roles: RoleModel
    r_size: int = 1

    def predict_graph(self, doc: Document, E: np.ndarray | None = None) -> CombinationGraph:
        if E is None:
            E = self.embedder.embed_document(doc)
        if not len(E):
            return CombinationGraph(np.zeros((0, 0), dtype=np.uint8), ())
        A = binarize(similarity_matrix(self.similarity, E), self.similarity.gamma)
        return CombinationGraph(A, doc.entity_order)

    def extract(self, doc: Document, oracle_roles: bool = False, schema: EventSchema | None = None) -> list[EventRecord]:
        E = self.embedder.embed_document(doc)
        g = self.predict_graph(doc, E)
        types = detected(detect_types(self.detector, doc))
        combos = decode_combinations(g, self.r_size, event_detected=bool(types))
        if oracle_roles:
            if schema is None:
                raise ValueError("oracle roles need the schema")
            score = lambda c: oracle_role_probabilities(doc, schema, c)  # noqa: E731
        else:
            score = lambda c: score_roles(self.roles, c.event_type, c.combination, E)  # noqa: E731
        return generate_records(types, combos, score, doc.entity_order)

    def extract_corpus(self, docs: Sequence[Document], **kw) -> dict[str, list[EventRecord]]:
        return {d.doc_id: self.extract(d, **kw) for d in docs}
