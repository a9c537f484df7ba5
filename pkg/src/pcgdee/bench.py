"""Throughput benchmark: one-pass graph decoding vs. an autoregressive baseline.

The baseline is a cost model of DAG-style path expansion, not a port of any
particular system: for each detected type it walks the roles in order and,
for every live path, scores every entity against the path's full argument
history before branching.  Its work therefore grows with
(#types x #entities x #roles x #paths), while graph decoding grows with the
number of decoded combinations.

Timing covers decoding only.  Entity embeddings, link probabilities, role
fits and types are prepared beforehand and shared by both modes.
"""

from __future__ import annotations

import hashlib
import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .corpus import Document, EventSchema
from .graph import (
    Combination,
    CombinationGraph,
    assemble_combinations,
    bidirectional_neighbors,
    encode_gold_graph,
    maximal_cliques,
)
from .pipeline import Extractor
from .scorer import detect_types, detected, similarity_matrix
from .triggers import PseudoTriggerPlan

Mode = Literal["nonautoregressive", "autoregressive-baseline"]
MAX_PATHS = 10**6


class PathLimitError(RuntimeError):
    pass


def role_order(schema: EventSchema, plan: PseudoTriggerPlan, event_type: str) -> tuple[str, ...]:
    """Trigger roles first, then the remaining roles in schema order."""
    trig = plan.roles_for(event_type)
    return tuple(trig) + tuple(r for r in schema.roles(event_type) if r not in trig)


def gold_role_fit(doc: Document, schema: EventSchema) -> dict[str, np.ndarray]:
    """fit[type][q, j]: entity q fills role j of ``type`` in some gold record."""
    idx = doc.entity_index()
    fit = {t: np.zeros((len(doc.entities), len(schema.roles(t))), dtype=bool) for t in schema.names}
    for rec in doc.records:
        roles = schema.roles(rec.event_type)
        for j, r in enumerate(roles):
            e = rec.args.get(r)
            if e is not None:
                fit[rec.event_type][idx[e], j] = True
    return fit


def model_role_fit(extractor: Extractor, E: np.ndarray) -> dict[str, np.ndarray]:
    rm = extractor.roles
    return {t: expit(E @ rm.W[t].T + rm.b[t]) >= 0.5 for t in rm.roles}


def autoregressive_baseline_decode(
    g: CombinationGraph,
    plan: PseudoTriggerPlan,
    role_orders: Mapping[str, Sequence[str]],
    role_fit: Mapping[str, np.ndarray],
    roles_of: Mapping[str, Sequence[str]] | None = None,
    max_paths: int = MAX_PATHS,
    stats: dict | None = None,
) -> list[Combination]:
    """Expand argument paths role by role for every type in ``role_orders``.

    ``role_fit[type][q, j]`` says whether entity q may fill the j-th role of
    ``roles_of[type]`` (defaults to the role order itself).  An entity
    extends a path only if it is consistent with every argument already on
    it: pseudo triggers must link to all members, and members that are
    pseudo triggers must link to it.  Paths without any trigger argument are
    dropped once the trigger roles are passed.
    """
    n = g.n
    adj = g.adj.astype(bool).tolist()
    triggers = {i for i in range(n) if any(adj[i][j] for j in range(n) if j != i)}
    expanded = 0
    found: dict[tuple[int, ...], Combination] = {}
    for etype, order in role_orders.items():
        base = list(roles_of[etype]) if roles_of is not None else list(order)
        fit = np.asarray(role_fit[etype], dtype=bool)
        cols = [base.index(r) for r in order]
        fit_cols = [fit[:, c].tolist() for c in cols]
        n_trig = len(plan.roles_for(etype))
        # a path: tuple of (role, entity or None); members kept for quick checks
        paths: list[tuple[tuple, tuple[int, ...]]] = [((), ())]
        for step, role in enumerate(order):
            fits = fit_cols[step]
            nxt = []
            for hist, members in paths:
                ext = []
                for s in range(n):
                    expanded += 1
                    if not fits[s]:
                        continue
                    ok = True
                    for m in members:
                        if m == s:
                            continue
                        if (m in triggers and not adj[m][s]) or (s in triggers and not adj[s][m]):
                            ok = False
                            break
                    if ok:
                        ext.append(s)
                if ext:
                    for s in ext:
                        mem = members if s in members else members + (s,)
                        nxt.append((hist + ((role, s),), mem))
                else:
                    nxt.append((hist + ((role, None),), members))
            if step + 1 == n_trig:
                nxt = [p for p in nxt if any(m in triggers for m in p[1])]
            if len(nxt) > max_paths:
                raise PathLimitError(f"{len(nxt)} paths exceed the cap of {max_paths}")
            paths = nxt
        trig_roles = set(order[:n_trig])
        for hist, members in paths:
            if not members or not any(m in triggers for m in members):
                continue
            pt = {s for r, s in hist if s is not None and r in trig_roles}
            c = Combination(frozenset(pt), frozenset(members) - pt)
            found.setdefault(c.members, c)
    if stats is not None:
        stats["expanded"] = stats.get("expanded", 0) + expanded
        stats["combinations"] = stats.get("combinations", 0) + len(found)
    return sorted(found.values())


def decode_batch(probs: Sequence[np.ndarray], gamma: float, r_size: int) -> list[list[Combination]]:
    """Threshold and decode a batch of link-probability matrices together.

    Equivalent to ``decode_combinations(CombinationGraph(P >= gamma), r_size)``
    per document; thresholding and link extraction are vectorized over the
    padded batch.
    """
    if not probs:
        return []
    sizes = [len(p) for p in probs]
    n_max = max(sizes)
    pad = np.zeros((len(probs), n_max, n_max))
    for b, p in enumerate(probs):
        pad[b, : len(p), : len(p)] = p
    A = pad >= gamma
    idx = np.arange(n_max)
    A[:, idx, idx] = False
    bs, iis, jjs = np.nonzero(A)
    nbrs: list[dict[int, set[int]]] = [{} for _ in probs]
    for b, i, j in zip(bs.tolist(), iis.tolist(), jjs.tolist()):
        nbrs[b].setdefault(i, set()).add(j)
    out = []
    for nb in nbrs:
        trig = set(nb)
        out.append(assemble_combinations(trig, nb, r_size, lambda: maximal_cliques(bidirectional_neighbors(trig, nb))))
    return out


@dataclass
class BenchReport:
    mode: str
    batch_size: int
    docs_per_second: float
    total_docs: int
    wall_seconds: float
    repetitions: int
    threads: int = 1
    speedup_vs_baseline: float | None = None
    run_seconds: list[float] = field(default_factory=list)
    output_digest: str = ""
    outputs_identical: bool = True
    timing_excludes_io: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BenchInputs:
    """Everything decoding needs, computed outside the timed region."""

    graphs: list[CombinationGraph]
    probs: list[np.ndarray]
    types: list[list[str]]
    role_fit: list[dict[str, np.ndarray]]
    gamma: float
    r_size: int


def prepare_inputs(
    corpus: Sequence[Document],
    schema: EventSchema,
    plan: PseudoTriggerPlan,
    extractor: Extractor | None = None,
) -> BenchInputs:
    """Link probabilities from ``extractor``, or the gold graphs when None."""
    graphs, probs, types, fits = [], [], [], []
    gamma = 0.5 if extractor is None else extractor.similarity.gamma
    for doc in corpus:
        if extractor is None:
            P = encode_gold_graph(doc, plan).adj.astype(float)
            present = {r.event_type for r in doc.records}
            ts = [t for t in schema.names if t in present]
            fit = gold_role_fit(doc, schema)
        else:
            E = extractor.embedder.embed_document(doc)
            P = similarity_matrix(extractor.similarity, E) if len(E) else np.zeros((0, 0))
            ts = detected(detect_types(extractor.detector, doc))
            fit = model_role_fit(extractor, E)
        probs.append(P)
        graphs.append(CombinationGraph((P >= gamma).astype(np.uint8), doc.entity_order))
        types.append(ts)
        fits.append(fit)
    return BenchInputs(graphs, probs, types, fits, gamma, plan.effective_r_size)


def _digest(outputs: list[list[Combination]]) -> str:
    payload = json.dumps([[c.members for c in combos] for combos in outputs])
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def run_decode(
    inputs: BenchInputs,
    schema: EventSchema,
    plan: PseudoTriggerPlan,
    mode: Mode,
    batch_size: int = 1,
    threads: int = 1,
) -> list[list[Combination]]:
    n = len(inputs.probs)
    if mode == "nonautoregressive":
        chunks = [range(i, min(i + batch_size, n)) for i in range(0, n, batch_size)]

        def work(ch):
            return decode_batch([inputs.probs[i] for i in ch], inputs.gamma, inputs.r_size)

    elif mode == "autoregressive-baseline":
        chunks = [range(i, i + 1) for i in range(n)]
        orders = {t: role_order(schema, plan, t) for t in schema.names}
        roles_of = {t: schema.roles(t) for t in schema.names}

        def work(ch):
            i = ch[0]
            ro = {t: orders[t] for t in inputs.types[i]}
            return [autoregressive_baseline_decode(inputs.graphs[i], plan, ro, inputs.role_fit[i], roles_of)]

    else:
        raise ValueError(f"unknown mode {mode!r}")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(ch) for ch in chunks]
    return [combos for part in parts for combos in part]


def bench(
    inputs: BenchInputs,
    schema: EventSchema,
    plan: PseudoTriggerPlan,
    mode: Mode,
    batch_size: int = 1,
    repetitions: int = 3,
    threads: int = 1,
) -> BenchReport:
    """Median wall time of decoding ``inputs`` over ``repetitions`` runs."""
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    times, digests = [], []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        out = run_decode(inputs, schema, plan, mode, batch_size, threads)
        times.append(time.perf_counter() - t0)
        digests.append(_digest(out))
    wall = statistics.median(times)
    n = len(inputs.probs)
    return BenchReport(
        mode=mode,
        batch_size=batch_size,
        docs_per_second=n / wall if wall > 0 else float("inf"),
        total_docs=n,
        wall_seconds=wall,
        repetitions=repetitions,
        threads=threads,
        run_seconds=times,
        output_digest=digests[0],
        outputs_identical=len(set(digests)) == 1,
    )


def compare(
    inputs: BenchInputs,
    schema: EventSchema,
    plan: PseudoTriggerPlan,
    batch_size: int = 1,
    repetitions: int = 3,
    threads: int = 1,
) -> tuple[BenchReport, BenchReport]:
    """Run both modes on identical inputs; the fast report carries the speedup."""
    base = bench(inputs, schema, plan, "autoregressive-baseline", batch_size, repetitions, threads)
    fast = bench(inputs, schema, plan, "nonautoregressive", batch_size, repetitions, threads)
    fast.speedup_vs_baseline = base.wall_seconds / fast.wall_seconds
    return fast, base
