"""Seeded synthetic corpora with controllable decoding ambiguity.

Every event type has an ``Anchor`` role that is never NULL (unless planted
otherwise) plus ``Arg1..ArgK``.  All entities of one record share a random
character stem and carry a marker derived from their entity type, which
gives the hashed n-gram scorer a learnable link signal.  Each document
mentions a keyword token per event type present, for detection.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .corpus import Document, Entity, EntityMention, EventRecord, EventSchema, EventType

IntSpec = Union[int, tuple[int, int]]

ANCHOR = "Anchor"
ANNOTATED = "Trigger"
NOISE_ETYPE = "Noise"
FILLER = ("the", "of", "and", "a", "in", "to", "was", "on", "for", "with", "by", "at")


@dataclass(frozen=True)
class SynthConfig:
    n_docs: int = 100
    n_types: int = 2
    roles_per_type: IntSpec = 4
    records_per_doc: IntSpec = (1, 2)
    null_rate: float = 0.0
    share_trigger_rate: float = 0.0
    noise_entities: IntSpec = (0, 2)
    vocab_size: int = 5000
    annotated_trigger: bool = False
    annotated_null_rate: float = 0.5
    stem_len: int = 5
    suffix_len: int = 3
    seed: int = 0

    def __post_init__(self):
        for name in ("null_rate", "share_trigger_rate", "annotated_null_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.n_docs < 0 or self.n_types < 1:
            raise ValueError("n_docs must be >= 0 and n_types >= 1")
        for name in ("roles_per_type", "records_per_doc", "noise_entities"):
            lo, hi = _bounds(getattr(self, name))
            if lo < 0 or hi < lo:
                raise ValueError(f"{name}: bad range {(lo, hi)}")
        if _bounds(self.roles_per_type)[0] < 1:
            raise ValueError("roles_per_type must be >= 1")
        if self.stem_len < 1 or self.suffix_len < 0:
            raise ValueError("stem_len must be >= 1 and suffix_len >= 0")
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")


def _bounds(spec: IntSpec) -> tuple[int, int]:
    if isinstance(spec, int):
        return spec, spec
    lo, hi = spec
    return int(lo), int(hi)


def _draw(rng: np.random.Generator, spec: IntSpec) -> int:
    lo, hi = _bounds(spec)
    return int(rng.integers(lo, hi + 1))


def make_schema(cfg: SynthConfig) -> EventSchema:
    rng = np.random.default_rng([cfg.seed, 1])
    types = []
    for k in range(cfg.n_types):
        n_roles = _draw(rng, cfg.roles_per_type)
        roles = [ANCHOR] + [f"Arg{j}" for j in range(1, n_roles)]
        annotated: tuple[str, ...] = ()
        if cfg.annotated_trigger:
            roles.append(ANNOTATED)
            annotated = (ANNOTATED,)
        types.append(EventType(f"Type{k}", tuple(roles), annotated))
    return EventSchema(tuple(types))


# A record plan: event type plus how its anchor is filled.  ``anchor`` is
# "new", "null", or the index of an earlier record in the same document
# whose anchor entity is reused.
@dataclass(frozen=True)
class _RecordPlan:
    event_type: str
    anchor: Union[str, int] = "new"


class _DocBuilder:
    def __init__(self, rng: np.random.Generator, doc_id: str, schema: EventSchema, cfg: SynthConfig):
        self.rng = rng
        self.doc_id = doc_id
        self.schema = schema
        self.cfg = cfg
        self.entities: list[tuple[str, str]] = []  # (text, etype)
        self.used_stems: set[str] = set()

    def _letters(self, n: int) -> str:
        return "".join(self.rng.choice(list(string.ascii_lowercase), size=n))

    def _stem(self) -> str:
        # stems are drawn from a vocabulary of cfg.vocab_size seeded words
        while True:
            word = _vocab_word(int(self.rng.integers(self.cfg.vocab_size)), self.cfg.seed, self.cfg.stem_len)
            if word not in self.used_stems or len(self.used_stems) >= self.cfg.vocab_size:
                self.used_stems.add(word)
                return word

    def new_entity(self, stem: str, etype: str) -> int:
        text = f"{stem}{_marker(etype)}{self._letters(self.cfg.suffix_len)}"
        self.entities.append((text, etype))
        return len(self.entities) - 1

    def build(self, plans: Sequence[_RecordPlan], anchor_role: dict[str, str]) -> Document:
        cfg, rng = self.cfg, self.rng
        records: list[dict[str, int | None]] = []
        for p in plans:
            roles = self.schema.roles(p.event_type)
            anchor = anchor_role.get(p.event_type, ANCHOR)
            stem = self._stem()
            args: dict[str, int | None] = {}
            for role in roles:
                etype = f"{p.event_type}.{role}"
                if role == anchor:
                    if p.anchor == "null":
                        args[role] = None
                    elif p.anchor == "new":
                        args[role] = self.new_entity(stem, etype)
                    else:
                        args[role] = records[int(p.anchor)][anchor]
                elif role == ANNOTATED and cfg.annotated_trigger:
                    null = rng.random() < cfg.annotated_null_rate
                    args[role] = None if null else self.new_entity(stem, etype)
                else:
                    null = rng.random() < cfg.null_rate
                    args[role] = None if null else self.new_entity(stem, etype)
            # a lone argument has no out-link and cannot be decoded; keep
            # at least one other argument filled
            free = [r for r in roles if r not in (anchor, ANNOTATED)]
            if free and all(args[r] is None for r in free):
                r = free[int(rng.integers(len(free)))]
                args[r] = self.new_entity(stem, f"{p.event_type}.{r}")
            records.append(args)
        for _ in range(_draw(rng, cfg.noise_entities)):
            self.entities.append((self._letters(9), NOISE_ETYPE))
        return self._layout(plans, records)

    def _layout(self, plans, records) -> Document:
        rng = self.rng
        n_ent = len(self.entities)
        n_sent = max(1, math.ceil(n_ent / 3))
        slots: list[list[object]] = [[] for _ in range(n_sent)]
        for s in slots:
            s.extend(rng.choice(FILLER, size=int(rng.integers(3, 7))).tolist())
        for i in range(n_ent):
            for _ in range(int(rng.integers(1, 3))):
                s = slots[int(rng.integers(n_sent))]
                s.insert(int(rng.integers(len(s) + 1)), i)
        for t in sorted({p.event_type for p in plans}):
            s = slots[int(rng.integers(n_sent))]
            s.insert(int(rng.integers(len(s) + 1)), f"kw_{t.lower()}")
        mentions: list[list[EntityMention]] = [[] for _ in range(n_ent)]
        sentences = []
        for si, s in enumerate(slots):
            toks = []
            for item in s:
                if isinstance(item, int):
                    mentions[item].append(EntityMention(si, len(toks), len(toks) + 1))
                    toks.append(self.entities[item][0])
                else:
                    toks.append(item)
            sentences.append(tuple(toks))
        ents = tuple(
            Entity(f"e{i}", text, etype, tuple(mentions[i]))
            for i, (text, etype) in enumerate(self.entities)
        )
        recs = tuple(
            EventRecord(p.event_type, {r: (None if e is None else f"e{e}") for r, e in args.items()})
            for p, args in zip(plans, records)
        )
        return Document(self.doc_id, tuple(sentences), ents, recs)


def _marker(etype: str) -> str:
    h = sum((i + 1) * ord(c) for i, c in enumerate(etype))
    return string.ascii_uppercase[h % 26] + string.ascii_uppercase[(h // 26) % 26]


def _vocab_word(k: int, seed: int, length: int = 5) -> str:
    rng = np.random.default_rng([seed, 2, k])
    return "".join(rng.choice(list(string.ascii_lowercase), size=length))


def generate_corpus(cfg: SynthConfig, schema: EventSchema | None = None) -> tuple[list[Document], EventSchema]:
    """Documents and schema for ``cfg``; identical seeds give identical corpora.

    ``schema`` overrides the schema drawn from ``cfg`` (its roles must follow
    the generator's naming).
    """
    if schema is None:
        schema = make_schema(cfg)
    rng = np.random.default_rng([cfg.seed, 0])
    names = schema.names
    docs = []
    for d in range(cfg.n_docs):
        plans: list[_RecordPlan] = []
        for j in range(_draw(rng, cfg.records_per_doc)):
            if j and rng.random() < cfg.share_trigger_rate:
                plans.append(_RecordPlan(plans[j - 1].event_type, j - 1))
            else:
                plans.append(_RecordPlan(names[int(rng.integers(len(names)))]))
        docs.append(_DocBuilder(rng, f"doc{d}", schema, cfg).build(plans, {}))
    return docs, schema


def _pick_unique_count(n: int, n_exist: int, target: float) -> int:
    """Unique-record count within 1/n of target leaving an even shared remainder."""
    lo = max(0, math.ceil(target * n - 1))
    hi = min(n_exist, math.floor(target * n + 1))
    cands = [u for u in range(lo, hi + 1) if (n_exist - u) % 2 == 0]
    if not cands:
        raise ValueError(f"distinguish target {target} infeasible with {n_exist} anchored of {n} records")
    return min(cands, key=lambda u: (abs(u - target * n), u))


def plant_importance(
    cfg: SynthConfig,
    target_role: str | tuple[str, str],
    existence_target: float,
    distinguish_target: float,
) -> tuple[list[Document], EventSchema]:
    """Corpus whose ``target_role`` reaches the requested existence / distinguishability.

    All records are of the target role's event type.  A distinguish target
    above the planted existence is capped at it.  Non-distinguishable
    records come in same-document pairs sharing the target entity, so a
    document layout needs enough multi-record documents; otherwise raises.
    """
    if isinstance(target_role, str):
        ttype, role = target_role.split(".", 1)
    else:
        ttype, role = target_role
    for name, v in (("existence", existence_target), ("distinguish", distinguish_target)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} target {v} outside [0, 1]")
    schema = make_schema(cfg)
    if ttype not in schema or role not in schema.roles(ttype):
        raise ValueError(f"unknown target role {ttype}.{role}")

    rng = np.random.default_rng([cfg.seed, 3])
    sizes = [_draw(rng, cfg.records_per_doc) for _ in range(cfg.n_docs)]
    n = sum(sizes)
    if n == 0:
        raise ValueError("layout has no records")
    n_exist = round(existence_target * n)
    # a distinguishable record must exist, so distinguish <= existence
    n_unique = _pick_unique_count(n, n_exist, min(distinguish_target, n_exist / n))
    n_pairs = (n_exist - n_unique) // 2
    capacity = sum(s // 2 for s in sizes)
    if n_pairs > capacity:
        raise ValueError(f"need {n_pairs} same-document pairs, layout offers {capacity}")

    # pair slots first, then shuffle the rest into unique/null
    docs_plans: list[list[_RecordPlan]] = []
    pairs_left = n_pairs
    free: list[tuple[int, int]] = []
    for d, s in enumerate(sizes):
        plans: list[_RecordPlan | None] = [None] * s
        j = 0
        while pairs_left and j + 1 < s:
            plans[j] = _RecordPlan(ttype, "new")
            plans[j + 1] = _RecordPlan(ttype, j)
            pairs_left -= 1
            j += 2
        free.extend((d, k) for k in range(j, s))
        docs_plans.append(plans)  # type: ignore[arg-type]
    order = rng.permutation(len(free))
    for rank, f in enumerate(order):
        d, k = free[f]
        docs_plans[d][k] = _RecordPlan(ttype, "new" if rank < n_unique else "null")

    docs = [
        _DocBuilder(rng, f"doc{d}", schema, cfg).build(plans, {ttype: role})
        for d, plans in enumerate(docs_plans)
    ]
    return docs, schema


def benchmark_config(n_docs: int = 200, seed: int = 0) -> SynthConfig:
    """Generator settings of the standard benchmark corpus (4-8 roles per type)."""
    return SynthConfig(
        n_docs=n_docs,
        n_types=3,
        roles_per_type=(4, 8),
        records_per_doc=(2, 3),
        null_rate=0.1,
        share_trigger_rate=0.0,
        noise_entities=(2, 6),
        seed=seed,
    )


def benchmark_corpus(
    n_docs: int = 200, seed: int = 0, min_entities: int = 8, max_entities: int = 32
) -> tuple[list[Document], EventSchema]:
    """``n_docs`` benchmark documents, each with 8-32 entities.

    Documents outside the entity range are skipped and generation continues
    with fresh seeds until enough are collected.
    """
    docs: list[Document] = []
    schema: EventSchema | None = None
    batch = 0
    while len(docs) < n_docs:
        cfg = benchmark_config(max(n_docs, 16), seed=seed * 1000 + batch)
        part, schema = generate_corpus(cfg, schema)
        for d in part:
            if min_entities <= len(d.entities) <= max_entities and len(docs) < n_docs:
                docs.append(Document(f"bench{len(docs)}", d.sentences, d.entities, d.records))
        batch += 1
        if batch > 100:
            raise RuntimeError("could not collect enough documents in the entity range")
    assert schema is not None
    return docs, schema


def separable_link_config(n_docs: int = 300, seed: int = 0) -> SynthConfig:
    """A corpus whose gold links are a linear function of the entity features.

    One event type keeps the entity types fewer than the type-embedding
    width, and long shared stems with no random suffix make "same record"
    visible as a large content inner product.
    """
    return SynthConfig(
        n_docs=n_docs,
        n_types=1,
        roles_per_type=4,
        records_per_doc=(1, 3),
        null_rate=0.2,
        noise_entities=(0, 2),
        stem_len=10,
        suffix_len=0,
        seed=seed,
    )
