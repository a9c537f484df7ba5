"""Record matching, argument-level P/R/F1, adjacency accuracy and decoding upper bounds.

Only non-NULL (role, entity) slots are scored.  Each predicted record is
aligned, without replacement, to the unmatched gold record of the same type
that shares the most arguments.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Document, EventRecord, EventSchema
from .graph import decode_combinations, encode_gold_graph
from .records import generate_records, oracle_role_probabilities
from .triggers import PseudoTriggerPlan

ERROR_UNIT = "1 - micro argument F1 of the oracle-role pipeline"


def shared_args(a: EventRecord, b: EventRecord) -> int:
    fa, fb = a.filled(), b.filled()
    return sum(1 for r, e in fa.items() if fb.get(r) == e)


@dataclass
class Alignment:
    pred: Sequence[EventRecord]
    gold: Sequence[EventRecord]
    pairs: list[tuple[int, int]]
    doc_id: str = ""

    @property
    def unmatched_pred(self) -> list[int]:
        used = {p for p, _ in self.pairs}
        return [i for i in range(len(self.pred)) if i not in used]

    @property
    def unmatched_gold(self) -> list[int]:
        used = {g for _, g in self.pairs}
        return [i for i in range(len(self.gold)) if i not in used]


def match_records(pred: Sequence[EventRecord], gold: Sequence[EventRecord], doc_id: str = "") -> Alignment:
    """Greedy alignment.

    Predictions are visited by descending best shared-argument count (ties by
    prediction index); each takes the unmatched same-type gold record sharing
    the most arguments (ties by gold index).
    """
    def best_count(p):
        return max((shared_args(p, g) for g in gold if g.event_type == p.event_type), default=-1)

    order = sorted(range(len(pred)), key=lambda i: (-best_count(pred[i]), i))
    free = set(range(len(gold)))
    pairs = []
    for i in order:
        p = pred[i]
        cands = [j for j in sorted(free) if gold[j].event_type == p.event_type]
        if not cands:
            continue
        j = max(cands, key=lambda j: (shared_args(p, gold[j]), -j))
        free.discard(j)
        pairs.append((i, j))
    return Alignment(pred, gold, sorted(pairs), doc_id)


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def add(self, other: "Counts") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision, "recall": self.recall, "f1": self.f1}


def pair_counts(pred: EventRecord | None, gold: EventRecord | None) -> Counts:
    fp_ = pred.filled() if pred is not None else {}
    fg = gold.filled() if gold is not None else {}
    c = Counts()
    for r in set(fp_) | set(fg):
        p, g = fp_.get(r), fg.get(r)
        if p is not None and p == g:
            c.tp += 1
            continue
        if p is not None:
            c.fp += 1
        if g is not None:
            c.fn += 1
    return c


@dataclass
class EvalReport:
    micro: Counts
    per_type: dict[str, Counts]
    trace: list[dict] = field(default_factory=list)

    @property
    def precision(self) -> float:
        return self.micro.precision

    @property
    def recall(self) -> float:
        return self.micro.recall

    @property
    def f1(self) -> float:
        return self.micro.f1

    def to_dict(self) -> dict:
        return {
            "micro": self.micro.to_dict(),
            "per_type": {t: c.to_dict() for t, c in sorted(self.per_type.items())},
            "trace": self.trace,
        }


def argument_f1(alignments: Sequence[Alignment]) -> EvalReport:
    micro = Counts()
    per_type: dict[str, Counts] = defaultdict(Counts)
    trace = []
    for al in alignments:
        doc = Counts()
        for i, j in al.pairs:
            c = pair_counts(al.pred[i], al.gold[j])
            per_type[al.gold[j].event_type].add(c)
            doc.add(c)
        for i in al.unmatched_pred:
            c = pair_counts(al.pred[i], None)
            per_type[al.pred[i].event_type].add(c)
            doc.add(c)
        for j in al.unmatched_gold:
            c = pair_counts(None, al.gold[j])
            per_type[al.gold[j].event_type].add(c)
            doc.add(c)
        micro.add(doc)
        trace.append({"doc_id": al.doc_id, "pairs": al.pairs, "tp": doc.tp, "fp": doc.fp, "fn": doc.fn})
    return EvalReport(micro, dict(per_type), trace)


def evaluate_corpus(pred_by_doc: dict[str, Sequence[EventRecord]], gold_docs: Sequence[Document]) -> EvalReport:
    """Score predictions keyed by doc_id against gold documents."""
    als = [match_records(pred_by_doc.get(d.doc_id, ()), d.records, d.doc_id) for d in gold_docs]
    return argument_f1(als)


# ---------------------------------------------------------------------------
# adjacency accuracy


def _ratio(num: int, den: int, both_empty: bool) -> float:
    if den:
        return num / den
    return 1.0 if both_empty else 0.0


def adjacency_counts(pred: np.ndarray, gold: np.ndarray) -> tuple[int, int, int]:
    """(|pred & gold|, |pred|, |gold|) over positive entries."""
    pred = np.asarray(pred).astype(bool)
    gold = np.asarray(gold).astype(bool)
    if pred.shape != gold.shape:
        raise ValueError(f"adjacency shapes differ: {pred.shape} vs {gold.shape}")
    return int((pred & gold).sum()), int(pred.sum()), int(gold.sum())


def accuracy_from_counts(both: int, n_pred: int, n_gold: int) -> dict[str, float]:
    union = n_pred + n_gold - both
    empty = n_pred == 0 and n_gold == 0
    return {
        "positive_recall": _ratio(both, n_gold, empty),
        "positive_precision": _ratio(both, n_pred, empty),
        "union_accuracy": _ratio(both, union, empty),
    }


def adjacency_accuracy(pred: np.ndarray, gold: np.ndarray) -> dict[str, float]:
    """Recall and precision of positive links, and agreement over their union.

    Conventions: a ratio with an empty denominator is 1 when both matrices
    are all-zero and 0 otherwise.
    """
    return accuracy_from_counts(*adjacency_counts(pred, gold))


# ---------------------------------------------------------------------------
# decoding upper bounds


@dataclass
class DecodeBoundReport:
    SE: float
    ME: float
    TotE: float
    n_links: int
    unanchored_records: int
    n_single_docs: int
    n_multi_docs: int
    r_size: int
    plan_hash: str
    error_unit: str = ERROR_UNIT

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def oracle_predictions(
    doc: Document, schema: EventSchema, plan: PseudoTriggerPlan, r_size: int
) -> list[EventRecord]:
    """Gold graph -> decode -> gold types + oracle roles."""
    g = encode_gold_graph(doc, plan)
    present = {r.event_type for r in doc.records}
    types = [t for t in schema.names if t in present]
    combos = decode_combinations(g, r_size, event_detected=bool(types))
    return generate_records(
        types, combos, lambda c: oracle_role_probabilities(doc, schema, c), doc.entity_order
    )


def oracle_decode_errors(
    corpus: Sequence[Document],
    plan: PseudoTriggerPlan,
    schema: EventSchema,
    r_size: int | None = None,
) -> DecodeBoundReport:
    """Error upper bounds of decoding the gold graphs with oracle roles.

    ``r_size`` selects the decoding mode and defaults to the largest trigger
    group in ``plan``.
    """
    if r_size is None:
        r_size = plan.effective_r_size
    single, multi = [], []
    n_links = unanchored = 0
    for doc in corpus:
        g = encode_gold_graph(doc, plan)
        n_links += g.n_links
        unanchored += g.unanchored_records
        al = match_records(oracle_predictions(doc, schema, plan, r_size), doc.records, doc.doc_id)
        (multi if len(doc.records) > 1 else single).append(al)

    def err(als):
        return 1.0 - argument_f1(als).f1 if any(al.gold or al.pred for al in als) else 0.0

    return DecodeBoundReport(
        SE=err(single),
        ME=err(multi),
        TotE=err(single + multi),
        n_links=n_links,
        unanchored_records=unanchored,
        n_single_docs=sum(1 for a in single if a.gold),
        n_multi_docs=len(multi),
        r_size=r_size,
        plan_hash=plan.fingerprint(),
    )
