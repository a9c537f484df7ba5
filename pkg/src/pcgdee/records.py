"""Pairing detected event types with decoded combinations and filling role tables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Document, EventRecord, EventSchema
from .graph import Combination
from .scorer import RoleProbabilities

VALID_THRESHOLD = 0.5


@dataclass(frozen=True)
class TypedCandidate:
    event_type: str
    combination: Combination
    valid: bool = True


def pair_candidates(types: Sequence[str], combos: Sequence[Combination]) -> list[TypedCandidate]:
    """Cartesian product in (type order, combination order)."""
    return [TypedCandidate(t, c) for t in types for c in combos]


def fill_record(
    candidate: TypedCandidate,
    probs: RoleProbabilities,
    entity_order: Sequence[str],
) -> EventRecord | None:
    """Fill each role with its argmax member, or return None for an invalid candidate.

    A role whose best probability is below 0.5 stays NULL; the candidate is
    dropped only when every probability in the table is below 0.5.  Ties go
    to the lowest entity index.
    """
    members = candidate.combination.members
    if tuple(probs.members) != members:
        raise ValueError(f"probabilities cover members {probs.members}, expected {members}")
    P = np.asarray(probs.probs, dtype=float)
    if P.shape != (len(members), len(probs.roles)):
        raise ValueError(f"probability table shape {P.shape} does not match {len(members)}x{len(probs.roles)}")
    if not (P >= VALID_THRESHOLD).any():
        return None
    best = P.argmax(axis=0)  # first maximum -> lowest entity index
    args = {}
    for j, role in enumerate(probs.roles):
        q = best[j]
        args[role] = entity_order[members[q]] if P[q, j] >= VALID_THRESHOLD else None
    return EventRecord(candidate.event_type, args)


def oracle_role_probabilities(
    doc: Document, schema: EventSchema, candidate: TypedCandidate
) -> RoleProbabilities:
    """Role probabilities read off the gold records (1 for gold assignments, else 0).

    The candidate is matched to the gold record of its type sharing the most
    entities with the combination (ties: first record); with no overlapping
    record every probability is 0 and the candidate will be dropped.
    """
    members = candidate.combination.members
    roles = schema.roles(candidate.event_type)
    idx = doc.entity_index()
    member_pos = {m: q for q, m in enumerate(members)}
    best, best_overlap = None, 0
    for rec in doc.records:
        if rec.event_type != candidate.event_type:
            continue
        overlap = len({idx[e] for e in rec.entity_ids()} & set(members))
        if overlap > best_overlap:
            best, best_overlap = rec, overlap
    P = np.zeros((len(members), len(roles)))
    if best is not None:
        for j, r in enumerate(roles):
            e = best.args.get(r)
            if e is not None and idx[e] in member_pos:
                P[member_pos[idx[e]], j] = 1.0
    return RoleProbabilities(members, roles, P)


def generate_records(
    types: Sequence[str],
    combos: Sequence[Combination],
    score,
    entity_order: Sequence[str],
) -> list[EventRecord]:
    """Run pairing and filling; ``score(candidate) -> RoleProbabilities``."""
    out = []
    for cand in pair_candidates(types, combos):
        rec = fill_record(cand, score(cand), entity_order)
        if rec is not None:
            out.append(rec)
    return out
