"""Pruned complete graphs: encoding gold records and decoding combinations.

Within one record the pseudo-trigger arguments are linked to each other in
both directions, each pseudo trigger links to every ordinary argument, and
every participating argument carries a self-loop.  A document's graph is the
entrywise OR of its records' graphs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document
from .triggers import PseudoTriggerPlan


@dataclass(frozen=True)
class CombinationGraph:
    adj: np.ndarray
    entity_order: tuple[str, ...]
    unanchored_records: int = 0

    def __post_init__(self):
        adj = np.asarray(self.adj, dtype=np.uint8)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if adj.shape[0] != len(self.entity_order):
            raise ValueError("adjacency size does not match entity_order")
        if adj.size and adj.max() > 1:
            raise ValueError("adjacency entries must be 0 or 1")
        object.__setattr__(self, "adj", adj)

    @property
    def n(self) -> int:
        return len(self.entity_order)

    @property
    def n_links(self) -> int:
        return int(self.adj.sum())

    def out_neighbors(self, i: int) -> set[int]:
        nb = set(np.flatnonzero(self.adj[i]).tolist())
        nb.discard(i)
        return nb

    def to_dict(self, doc_id: str = "") -> dict:
        return {
            "doc_id": doc_id,
            "entity_order": list(self.entity_order),
            "adj": self.adj.tolist(),
        }

    @classmethod
    def from_dict(cls, obj) -> "CombinationGraph":
        n = len(obj["entity_order"])
        adj = np.asarray(obj["adj"], dtype=np.uint8).reshape(n, n)
        return cls(adj, tuple(obj["entity_order"]))


@dataclass(frozen=True, order=True)
class Combination:
    pseudo_triggers: frozenset[int] = field(compare=False)
    ordinary: frozenset[int] = field(compare=False)
    _key: tuple = field(init=False, repr=False, compare=True)

    def __post_init__(self):
        pt, od = frozenset(self.pseudo_triggers), frozenset(self.ordinary)
        if pt & od:
            raise ValueError("pseudo triggers and ordinary arguments overlap")
        if not pt and not od:
            raise ValueError("empty combination")
        object.__setattr__(self, "pseudo_triggers", pt)
        object.__setattr__(self, "ordinary", od)
        object.__setattr__(self, "_key", (tuple(sorted(pt | od)), tuple(sorted(pt))))

    @property
    def all(self) -> frozenset[int]:
        return self.pseudo_triggers | self.ordinary

    @property
    def members(self) -> tuple[int, ...]:
        """Sorted entity indices; the row order used for role scoring."""
        return self._key[0]

    @property
    def trigger_only(self) -> bool:
        """A trigger clique that shares no ordinary argument."""
        return bool(self.pseudo_triggers) and not self.ordinary

    @property
    def is_default(self) -> bool:
        return not self.pseudo_triggers


def record_groups(doc: Document, plan: PseudoTriggerPlan) -> list[tuple[set[int], set[int]]]:
    """(pseudo-trigger indices, ordinary indices) of every gold record."""
    idx = doc.entity_index()
    out = []
    for rec in doc.records:
        trig_roles = set(plan.roles_for(rec.event_type))
        pt = {idx[e] for r, e in rec.args.items() if e is not None and r in trig_roles}
        od = {idx[e] for e in rec.args.values() if e is not None} - pt
        out.append((pt, od))
    return out


def encode_gold_graph(doc: Document, plan: PseudoTriggerPlan) -> CombinationGraph:
    n = len(doc.entities)
    adj = np.zeros((n, n), dtype=np.uint8)
    unanchored = 0
    for pt, od in record_groups(doc, plan):
        if not pt:
            unanchored += 1
        parts = sorted(pt | od)
        adj[parts, parts] = 1
        t = sorted(pt)
        if t:
            adj[np.ix_(t, t)] = 1
            if od:
                adj[np.ix_(t, sorted(od))] = 1
    return CombinationGraph(adj, doc.entity_order, unanchored)


def identify_pseudo_triggers(g: CombinationGraph) -> set[int]:
    off = g.adj.astype(bool)
    np.fill_diagonal(off, False)
    return set(np.flatnonzero(off.any(axis=1)).tolist())


def _bron_kerbosch(r: set, p: set, x: set, nbrs: dict, out: list) -> None:
    if not p and not x:
        out.append(tuple(sorted(r)))
        return
    # Tomita pivot: the vertex covering most of P
    pivot = max(p | x, key=lambda u: (len(p & nbrs[u]), -u))
    for v in sorted(p - nbrs[pivot]):
        _bron_kerbosch(r | {v}, p & nbrs[v], x & nbrs[v], nbrs, out)
        p = p - {v}
        x = x | {v}


def enumerate_cliques(g: CombinationGraph, nodes: Iterable[int]) -> list[tuple[int, ...]]:
    """Maximal cliques of the bidirectional-link subgraph induced by ``nodes``.

    Each clique is a sorted index tuple; the list is sorted lexicographically.
    A node without any bidirectional link forms a singleton clique.
    """
    nodes = sorted(set(nodes))
    if not nodes:
        return []
    sub = g.adj[np.ix_(nodes, nodes)].astype(bool)
    und = sub & sub.T
    np.fill_diagonal(und, False)
    nbrs = {
        u: {nodes[j] for j in np.flatnonzero(und[a])} for a, u in enumerate(nodes)
    }
    return maximal_cliques(nbrs)


def maximal_cliques(nbrs: dict[int, set[int]]) -> list[tuple[int, ...]]:
    """Bron-Kerbosch over an undirected neighbour map (keys are the vertices)."""
    out: list[tuple[int, ...]] = []
    if nbrs:
        _bron_kerbosch(set(), set(nbrs), set(), nbrs, out)
    return sorted(out)


def bidirectional_neighbors(triggers: set[int], nbrs: dict[int, set[int]]) -> dict[int, set[int]]:
    return {t: {v for v in nbrs[t] if v in triggers and t in nbrs[v]} for t in triggers}


def assemble_combinations(triggers: set[int], nbrs: dict[int, set[int]], r_size: int, cliques) -> list[Combination]:
    # keyed by member set: the same arguments reached from two cliques
    # (or two mutually linked triggers) are one combination
    found: dict[tuple[int, ...], Combination] = {}
    if r_size == 1:
        for t in sorted(triggers):
            c = Combination(frozenset([t]), frozenset(nbrs[t]))
            found.setdefault(c.members, c)
    else:
        for clique in cliques():
            shared = set.intersection(*(nbrs[t] for t in clique)) - triggers
            c = Combination(frozenset(clique), frozenset(shared))
            found.setdefault(c.members, c)
    return sorted(found.values())


def decode_combinations(
    g: CombinationGraph,
    r_size: int,
    predicted_entities: Sequence[int] | None = None,
    event_detected: bool = False,
    stats: dict | None = None,
) -> list[Combination]:
    """Recover argument combinations from an adjacency matrix in one pass.

    With ``r_size == 1`` every pseudo trigger and its out-neighbours form a
    combination.  Otherwise each maximal trigger clique is joined with the
    ordinary arguments shared by all its members (other pseudo triggers are
    never ordinary).  When nothing decodes but an event was detected, all
    ``predicted_entities`` (default: every entity) form one default
    combination.  ``stats``, if given, receives work counters.
    """
    if r_size < 1:
        raise ValueError("r_size must be >= 1")
    triggers = identify_pseudo_triggers(g)
    nbrs = {t: g.out_neighbors(t) for t in triggers}
    combos = assemble_combinations(triggers, nbrs, r_size, lambda: enumerate_cliques(g, triggers))
    if stats is not None:
        stats["triggers"] = stats.get("triggers", 0) + len(triggers)
        stats["combinations"] = stats.get("combinations", 0) + len(combos)
    if not combos and event_detected:
        ents = range(g.n) if predicted_entities is None else predicted_entities
        if len(ents):
            combos = [Combination(frozenset(), frozenset(ents))]
    return combos


def dump_graphs(items: Iterable[tuple[str, CombinationGraph]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, g in items:
            fh.write(json.dumps(g.to_dict(doc_id)) + "\n")
