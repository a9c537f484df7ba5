"""Importance scoring of role subsets and pseudo-trigger selection.

For a role subset R of one event type with N records:

    existence   = #records with at least one non-NULL argument in R  / N
    distinguish = #records whose R-arguments appear in no other record
                  of the same document                                / N
    importance  = existence * distinguish

Two records "share" their R-arguments when the multisets of their non-NULL
R-argument entity ids are identical.  A record with no non-NULL R-argument
is never counted as distinguishable.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Iterable, Literal, Mapping, Sequence

from .corpus import Document, EventRecord, EventSchema

MAX_SUBSETS = 10**6

UniquenessScope = Literal["type", "document"]


@dataclass(frozen=True)
class RoleSubsetStats:
    n_records: int
    n_exist: int
    n_unique: int

    @property
    def existence(self) -> float:
        return self.n_exist / self.n_records if self.n_records else 0.0

    @property
    def distinguish(self) -> float:
        return self.n_unique / self.n_records if self.n_records else 0.0

    @property
    def importance(self) -> float:
        return self.existence * self.distinguish

    def _key(self):
        # exact rational comparison: importance ~ n_exist * n_unique / N^2
        return (self.n_exist * self.n_unique, self.n_exist)


def _fingerprint(rec: EventRecord, subset: Sequence[str]) -> tuple:
    vals = [rec.args.get(r) for r in subset]
    return tuple(sorted(v for v in vals if v is not None))


def subset_stats(
    records_by_doc: Sequence[Sequence[EventRecord]],
    subset: Sequence[str],
    others_by_doc: Sequence[Sequence[EventRecord]] | None = None,
) -> RoleSubsetStats:
    """Existence / distinguishability counts of ``subset``.

    ``records_by_doc`` holds the records of a single event type, one inner
    sequence per document.  ``others_by_doc``, aligned with it, optionally
    adds records of other event types; those have different roles, so a
    record also loses uniqueness when some other-type record in its document
    has all of its R-argument entities among its arguments.  They are not
    counted themselves.
    """
    if not subset:
        raise ValueError("role subset must be non-empty")
    n = n_exist = n_unique = 0
    for d, recs in enumerate(records_by_doc):
        prints = [_fingerprint(r, subset) for r in recs]
        counts = Counter(prints)
        other_sets = [r.entity_ids() for r in others_by_doc[d]] if others_by_doc is not None else []
        for fp in prints:
            n += 1
            if fp:
                n_exist += 1
                if counts[fp] == 1 and not any(set(fp) <= s for s in other_sets):
                    n_unique += 1
    return RoleSubsetStats(n, n_exist, n_unique)


def group_records(
    corpus: Iterable[Document], event_type: str, scope: UniquenessScope = "type"
) -> tuple[list[list[EventRecord]], list[list[EventRecord]] | None]:
    """Split a corpus into per-document record lists for one event type."""
    own, others = [], []
    for doc in corpus:
        own.append([r for r in doc.records if r.event_type == event_type])
        others.append([r for r in doc.records if r.event_type != event_type])
    return own, (others if scope == "document" else None)


@dataclass(frozen=True)
class TypePlan:
    pseudo_trigger_roles: tuple[str, ...]
    stats: RoleSubsetStats


@dataclass(frozen=True)
class PseudoTriggerPlan:
    r_size: int
    types: Mapping[str, TypePlan]

    def roles_for(self, event_type: str) -> tuple[str, ...]:
        tp = self.types.get(event_type)
        return tp.pseudo_trigger_roles if tp is not None else ()

    @property
    def effective_r_size(self) -> int:
        """Largest trigger group across types; picks the decoding mode."""
        return max((len(t.pseudo_trigger_roles) for t in self.types.values()), default=1)

    def to_dict(self) -> dict:
        return {
            "r_size": self.r_size,
            "types": {
                name: {
                    "pseudo_trigger_roles": list(tp.pseudo_trigger_roles),
                    "existence": tp.stats.existence,
                    "distinguish": tp.stats.distinguish,
                    "importance": tp.stats.importance,
                    "n_records": tp.stats.n_records,
                    "n_exist": tp.stats.n_exist,
                    "n_unique": tp.stats.n_unique,
                }
                for name, tp in sorted(self.types.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, obj: Mapping) -> "PseudoTriggerPlan":
        types = {}
        for name, t in obj["types"].items():
            n = int(t["n_records"])
            # older dumps may lack raw counts; recover them from the ratios
            n_exist = int(t.get("n_exist", round(t["existence"] * n)))
            n_unique = int(t.get("n_unique", round(t["distinguish"] * n)))
            types[name] = TypePlan(
                tuple(t["pseudo_trigger_roles"]), RoleSubsetStats(n, n_exist, n_unique)
            )
        return cls(int(obj["r_size"]), types)


def _select_for_type(
    roles: Sequence[str],
    own: Sequence[Sequence[EventRecord]],
    others: Sequence[Sequence[EventRecord]] | None,
    r_size: int,
) -> TypePlan:
    k = min(r_size, len(roles))
    n_sub = math.comb(len(roles), k)
    if n_sub > MAX_SUBSETS:
        raise ValueError(f"C({len(roles)}, {k}) = {n_sub} role subsets exceeds {MAX_SUBSETS}")
    best = None
    # sorted roles -> combinations come out in lexicographic order, so the
    # first subset reaching the best key wins ties
    for subset in combinations(sorted(roles), k):
        st = subset_stats(own, subset, others)
        if best is None or st._key() > best[1]._key():
            best = (subset, st)
    return TypePlan(best[0], best[1])


def select_pseudo_triggers(
    corpus: Sequence[Document],
    schema: EventSchema,
    r_size: int,
    scope: UniquenessScope = "type",
) -> PseudoTriggerPlan:
    """Pick, per event type, the role subset of size ``r_size`` with maximal importance.

    Ties: higher existence, then the lexicographically smallest role tuple.
    ``scope="document"`` checks uniqueness against records of every type in
    the document instead of only the same type.
    """
    if r_size < 1:
        raise ValueError("r_size must be >= 1")
    types = {}
    for et in schema.event_types:
        if not et.roles:
            raise ValueError(f"event type {et.name!r} has no roles")
        own, others = group_records(corpus, et.name, scope)
        types[et.name] = _select_for_type(et.roles, own, others, r_size)
    return PseudoTriggerPlan(r_size, types)


def plan_for_roles(
    corpus: Sequence[Document],
    schema: EventSchema,
    roles: Mapping[str, Sequence[str]],
    r_size: int | None = None,
    scope: UniquenessScope = "type",
) -> PseudoTriggerPlan:
    """Build a plan from explicitly chosen trigger roles, with their stats."""
    types = {}
    for name, rs in roles.items():
        unknown = set(rs) - set(schema.roles(name))
        if unknown:
            raise ValueError(f"{name}: unknown roles {sorted(unknown)}")
        own, others = group_records(corpus, name, scope)
        types[name] = TypePlan(tuple(rs), subset_stats(own, rs, others))
    if r_size is None:
        r_size = max((len(v) for v in roles.values()), default=1)
    return PseudoTriggerPlan(r_size, types)


def augment_with_annotated(
    plan: PseudoTriggerPlan,
    schema: EventSchema,
    corpus: Sequence[Document],
    scope: UniquenessScope = "type",
) -> PseudoTriggerPlan:
    """Use pseudo triggers as supplements: R := annotated roles + pseudo roles.

    Annotated roles come first; duplicates are dropped; stats are recomputed
    on ``corpus``.  Types without annotated trigger roles are left unchanged.
    """
    types = dict(plan.types)
    for et in schema.event_types:
        if not et.annotated_trigger_roles or et.name not in types:
            continue
        merged = list(dict.fromkeys(et.annotated_trigger_roles))
        merged += [r for r in types[et.name].pseudo_trigger_roles if r not in merged]
        own, others = group_records(corpus, et.name, scope)
        types[et.name] = replace(
            types[et.name],
            pseudo_trigger_roles=tuple(merged),
            stats=subset_stats(own, merged, others),
        )
    return PseudoTriggerPlan(plan.r_size, types)
