"""Documents, entities, event records and schemas, plus JSONL (de)serialization.

A corpus file holds one JSON document object per line::

    {"doc_id": "d0",
     "sentences": [["tok", ...], ...],
     "entities": [{"id": "e0", "text": "...", "etype": "...",
                   "mentions": [{"sent_idx": 0, "start": 0, "end": 1}]}],
     "records": [{"event_type": "...", "args": {"role": "e0", "other": null}}]}

NULL arguments are written as an explicit ``null`` so that role coverage can
be audited from the file alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence


class CorpusError(ValueError):
    """Raised when a corpus or schema file cannot be loaded."""


@dataclass(frozen=True)
class EntityMention:
    sent_idx: int
    start: int
    end: int


@dataclass(frozen=True)
class Entity:
    id: str
    text: str
    etype: str
    mentions: tuple[EntityMention, ...]


@dataclass(frozen=True)
class EventRecord:
    event_type: str
    args: Mapping[str, str | None]

    def filled(self) -> dict[str, str]:
        """Non-NULL (role, entity id) pairs."""
        return {r: e for r, e in self.args.items() if e is not None}

    def entity_ids(self) -> set[str]:
        return {e for e in self.args.values() if e is not None}


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[tuple[str, ...], ...]
    entities: tuple[Entity, ...]
    records: tuple[EventRecord, ...] = ()

    @property
    def entity_order(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entities)

    def entity_index(self) -> dict[str, int]:
        return {e.id: i for i, e in enumerate(self.entities)}

    def records_of(self, event_type: str) -> list[EventRecord]:
        return [r for r in self.records if r.event_type == event_type]


@dataclass(frozen=True)
class EventType:
    name: str
    roles: tuple[str, ...]
    annotated_trigger_roles: tuple[str, ...] = ()


@dataclass(frozen=True)
class EventSchema:
    event_types: tuple[EventType, ...]
    _by_name: dict[str, EventType] = field(
        init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {t.name: t for t in self.event_types})

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.event_types)

    def __getitem__(self, name: str) -> EventType:
        return self._by_name[name]

    def __contains__(self, name: object) -> bool:
        return name in self._by_name

    def roles(self, name: str) -> tuple[str, ...]:
        return self._by_name[name].roles


# ---------------------------------------------------------------------------
# validation


def mention_text(doc: Document, m: EntityMention) -> str | None:
    """Surface string of a mention, or None if the span is out of range."""
    if not 0 <= m.sent_idx < len(doc.sentences):
        return None
    sent = doc.sentences[m.sent_idx]
    if not 0 <= m.start < m.end <= len(sent):
        return None
    return " ".join(sent[m.start : m.end])


def _span_matches(doc: Document, m: EntityMention, text: str) -> bool:
    tokens = doc.sentences[m.sent_idx][m.start : m.end]
    # character-tokenized text (e.g. Chinese) is joined without spaces
    return " ".join(tokens) == text or "".join(tokens) == text


def validate_document(doc: Document, schema: EventSchema | None = None) -> list[str]:
    """Return human-readable violations; an empty list means the document is valid.

    Schema-dependent checks (event type and role names) are skipped when
    ``schema`` is None.  Never raises on a structurally parsed document.
    """
    out: list[str] = []
    if not doc.doc_id:
        out.append("doc_id: empty")

    seen: set[str] = set()
    for i, ent in enumerate(doc.entities):
        path = f"entities[{i}]"
        if ent.id in seen:
            out.append(f"{path}.id: duplicate id {ent.id!r}")
        seen.add(ent.id)
        if not ent.mentions:
            out.append(f"{path}.mentions: empty")
        for j, m in enumerate(ent.mentions):
            mpath = f"{path}.mentions[{j}]"
            if not 0 <= m.sent_idx < len(doc.sentences):
                out.append(f"{mpath}.sent_idx: {m.sent_idx} out of range")
                continue
            n_tok = len(doc.sentences[m.sent_idx])
            if m.end <= m.start:
                out.append(f"{mpath}: end {m.end} <= start {m.start}")
            elif m.start < 0 or m.end > n_tok:
                out.append(f"{mpath}: span [{m.start}, {m.end}) outside sentence of {n_tok} tokens")
            elif not _span_matches(doc, m, ent.text):
                out.append(f"{mpath}: span text differs from entity text {ent.text!r}")

    for i, rec in enumerate(doc.records):
        path = f"records[{i}]"
        etype = None
        if schema is not None:
            if rec.event_type not in schema:
                out.append(f"{path}.event_type: unknown type {rec.event_type!r}")
            else:
                etype = schema[rec.event_type]
        for role, eid in rec.args.items():
            if etype is not None and role not in etype.roles:
                out.append(f"{path}.args.{role}: not a role of {rec.event_type!r}")
            if eid is not None and eid not in seen:
                out.append(f"{path}.args.{role}: unknown entity id {eid!r}")
    return out


def validate_schema(schema: EventSchema) -> list[str]:
    out = []
    names = [t.name for t in schema.event_types]
    for name in sorted({n for n in names if names.count(n) > 1}):
        out.append(f"event_types: duplicate name {name!r}")
    for t in schema.event_types:
        if len(set(t.roles)) != len(t.roles):
            out.append(f"{t.name}.roles: duplicate role names")
        extra = set(t.annotated_trigger_roles) - set(t.roles)
        if extra:
            out.append(f"{t.name}.annotated_trigger_roles: not roles {sorted(extra)}")
    return out


# ---------------------------------------------------------------------------
# (de)serialization


def document_to_dict(doc: Document) -> dict[str, Any]:
    return {
        "doc_id": doc.doc_id,
        "sentences": [list(s) for s in doc.sentences],
        "entities": [
            {
                "id": e.id,
                "text": e.text,
                "etype": e.etype,
                "mentions": [
                    {"sent_idx": m.sent_idx, "start": m.start, "end": m.end}
                    for m in e.mentions
                ],
            }
            for e in doc.entities
        ],
        "records": [record_to_dict(r) for r in doc.records],
    }


def record_to_dict(rec: EventRecord) -> dict[str, Any]:
    return {"event_type": rec.event_type, "args": dict(rec.args)}


def record_from_dict(obj: Mapping[str, Any]) -> EventRecord:
    args = obj["args"]
    if not isinstance(args, Mapping):
        raise TypeError("args must be an object")
    return EventRecord(str(obj["event_type"]), dict(args))


def document_from_dict(obj: Mapping[str, Any]) -> Document:
    """Build a Document; raises CorpusError naming the offending field."""
    doc_id = obj.get("doc_id", "<missing>") if isinstance(obj, Mapping) else "<not an object>"
    key = "doc_id"
    try:
        doc_id = obj[key]
        key = "sentences"
        sentences = tuple(tuple(str(t) for t in s) for s in obj[key])
        key = "entities"
        entities = tuple(
            Entity(
                id=str(e["id"]),
                text=str(e["text"]),
                etype=str(e["etype"]),
                mentions=tuple(
                    EntityMention(int(m["sent_idx"]), int(m["start"]), int(m["end"]))
                    for m in e["mentions"]
                ),
            )
            for e in obj[key]
        )
        key = "records"
        records = tuple(record_from_dict(r) for r in obj.get(key, []))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"doc {doc_id!r}: bad field {key!r}: {exc}") from exc
    return Document(str(doc_id), sentences, entities, records)


def load_corpus(path: str | Path, schema: EventSchema | None = None) -> list[Document]:
    """Read a JSONL corpus; the whole load fails on the first bad line."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            try:
                doc = document_from_dict(obj)
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc
            problems = validate_document(doc, schema)
            if problems:
                raise CorpusError(
                    f"{path}:{lineno}: doc {doc.doc_id!r}: " + "; ".join(problems)
                )
            docs.append(doc)
    return docs


def dump_corpus(docs: Iterable[Document], path: str | Path, extra: Sequence[Mapping] | None = None) -> None:
    """Write documents as JSONL.  ``extra`` adds per-document keys (e.g. predictions)."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, doc in enumerate(docs):
            obj = document_to_dict(doc)
            if extra is not None:
                obj.update(extra[i])
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def schema_to_dict(schema: EventSchema) -> dict[str, Any]:
    return {
        "event_types": [
            {
                "name": t.name,
                "roles": list(t.roles),
                "annotated_trigger_roles": list(t.annotated_trigger_roles),
            }
            for t in schema.event_types
        ]
    }


def schema_from_dict(obj: Mapping[str, Any]) -> EventSchema:
    try:
        schema = EventSchema(
            tuple(
                EventType(
                    str(t["name"]),
                    tuple(t["roles"]),
                    tuple(t.get("annotated_trigger_roles", ())),
                )
                for t in obj["event_types"]
            )
        )
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"bad schema: {exc}") from exc
    problems = validate_schema(schema)
    if problems:
        raise CorpusError("bad schema: " + "; ".join(problems))
    return schema


def load_schema(path: str | Path) -> EventSchema:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}: malformed JSON: {exc}") from exc
    return schema_from_dict(obj)


def dump_schema(schema: EventSchema, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema_to_dict(schema), fh, indent=2)
