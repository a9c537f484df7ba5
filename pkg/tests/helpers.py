"""Small hand-built documents for tests."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from pcgdee.corpus import Document, Entity, EntityMention, EventRecord, EventSchema, EventType


def make_doc(n_entities, records=(), doc_id="d0", etypes=None, texts=None):
    """One sentence per entity; ``records`` is a list of (type, {role: index or None})."""
    ents, sents = [], []
    for i in range(n_entities):
        text = texts[i] if texts else f"ent{i}"
        sents.append(("w", text, "w"))
        etype = etypes[i] if etypes else "X"
        ents.append(Entity(f"e{i}", text, etype, (EntityMention(i, 1, 2),)))
    recs = tuple(
        EventRecord(t, {r: (None if v is None else f"e{v}") for r, v in args.items()})
        for t, args in records
    )
    return Document(doc_id, tuple(sents), tuple(ents), recs)


def schema_of(**types):
    return EventSchema(tuple(EventType(name, tuple(roles)) for name, roles in types.items()))


def brute_force_maximal_cliques(nodes, edges):
    """All maximal cliques by subset enumeration; ``edges`` is a set of frozensets."""
    nodes = sorted(nodes)
    cliques = []
    for k in range(len(nodes), 0, -1):
        for sub in combinations(nodes, k):
            if all(frozenset(p) in edges for p in combinations(sub, 2)):
                if not any(set(sub) < set(c) for c in cliques):
                    cliques.append(sub)
    return sorted(cliques)


def bitmask_maximal_cliques(n, edges):
    """Same oracle as above, vectorized over all 2**n vertex subsets."""
    import numpy as np

    m = np.arange(1, 2**n, dtype=np.int64)
    bit = [(m >> i) & 1 for i in range(n)]
    ok = np.ones(len(m), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if frozenset((i, j)) not in edges:
                ok &= ~((bit[i] & bit[j]).astype(bool))
    for v in range(n):
        nb = sum(1 << u for u in range(n) if frozenset((u, v)) in edges) | (1 << v)
        # v outside the clique and adjacent to all of it -> not maximal
        ok &= ~((bit[v] == 0) & ((m & ~nb) == 0))
    return sorted(tuple(i for i in range(n) if (x >> i) & 1) for x in m[ok].tolist())


def random_objective_instance(rng, d=None, n=None):
    """Random parameters and batch for the joint objective (d_a <= 8, n <= 5)."""
    import numpy as np

    from pcgdee.scorer import TrainingBatch

    d = d or int(rng.integers(2, 9))
    n_types, F = 2, 6
    role_counts = {"A": 2, "B": 3}
    params = {
        "W_s": rng.normal(size=(d, d)),
        "b_s": rng.normal(size=d),
        "W_e": rng.normal(size=(d, d)),
        "b_e": rng.normal(size=d),
        "det_W": rng.normal(size=(n_types, F)),
        "det_b": rng.normal(size=n_types),
    }
    for t, k in role_counts.items():
        params[f"role_W/{t}"] = rng.normal(size=(k, d))
        params[f"role_b/{t}"] = rng.normal(size=k)
    comb = []
    for _ in range(int(rng.integers(1, 4))):
        m = n or int(rng.integers(1, 6))
        Y = (rng.random((m, m)) < 0.3).astype(float)
        M = (rng.random((m, m)) < 0.8).astype(float)
        M[0, 0] = 1.0
        comb.append((rng.normal(size=(m, d)), Y, M))
    n_docs = len(comb)
    det_X = rng.normal(size=(n_docs, F))
    det_Y = (rng.random((n_docs, n_types)) < 0.5).astype(float)
    role = {}
    for t, k in role_counts.items():
        rows = int(rng.integers(1, 5))
        role[t] = (rng.normal(size=(rows, d)), (rng.random((rows, k)) < 0.4).astype(float), rng.random(rows))
    scale = max(1, d - int(rng.integers(0, d)))
    return params, TrainingBatch(comb, det_X, det_Y, role, scale)


def gradient_relative_error(params, batch, weights=None, h=1e-4, per_tensor=False):
    """||analytic - numeric|| / (||analytic|| + ||numeric||) over all parameters.

    With ``per_tensor`` the same ratio is taken tensor by tensor and the
    maximum returned; that form is dominated by finite-difference roundoff
    (about eps * loss / h) whenever saturated sigmoids leave a tensor with a
    near-zero gradient.
    """
    import numpy as np

    from pcgdee.scorer import LossWeights, objective

    weights = weights or LossWeights()
    _, _, grads = objective(params, batch, weights)
    worst, diffs, an, nu = 0.0, [], [], []
    for k, v in params.items():
        num = np.zeros_like(v)
        for idx in np.ndindex(v.shape):
            orig = v[idx]
            v[idx] = orig + h
            up = objective(params, batch, weights)[0]
            v[idx] = orig - h
            down = objective(params, batch, weights)[0]
            v[idx] = orig
            num[idx] = (up - down) / (2 * h)
        a = grads[k]
        den = np.linalg.norm(a) + np.linalg.norm(num)
        if den > 1e-10:
            worst = max(worst, float(np.linalg.norm(a - num) / den))
        diffs.append((a - num).ravel())
        an.append(a.ravel())
        nu.append(num.ravel())
    if per_tensor:
        return worst
    d, a, n = (np.concatenate(x) for x in (diffs, an, nu))
    den = np.linalg.norm(a) + np.linalg.norm(n)
    return float(np.linalg.norm(d) / den) if den > 0 else 0.0


def _rec(t, **args):
    from pcgdee.corpus import EventRecord

    return EventRecord(t, args)


# (name, [(pred records, gold records) per document], (tp, fp, fn), (P, R, F1)),
# every count worked out by hand
METRIC_FIXTURES = [
    (
        "one wrong slot",
        [([_rec("A", r1="a", r2="c")], [_rec("A", r1="a", r2="b")])],
        (1, 1, 1),
        (0.5, 0.5, 0.5),
    ),
    (
        "perfect two records",
        [([_rec("A", r1="a", r2="b"), _rec("A", r1="c", r2="d", r3="e")],
          [_rec("A", r1="c", r2="d", r3="e"), _rec("A", r1="a", r2="b")])],
        (5, 0, 0),
        (1.0, 1.0, 1.0),
    ),
    (
        "type mismatch",
        [([_rec("B", r1="a")], [_rec("A", r1="a", r2="b")])],
        (0, 1, 2),
        (0.0, 0.0, 0.0),
    ),
    (
        "competing predictions",
        # pred 2 shares two slots and wins; pred 1 stays unmatched
        [([_rec("A", r1="a", r2="x"), _rec("A", r1="a", r2="b")], [_rec("A", r1="a", r2="b", r3="c")])],
        (2, 2, 1),
        (0.5, 2 / 3, 4 / 7),
    ),
    (
        "no predictions",
        [([], [_rec("A", r1="a", r2="b")])],
        (0, 0, 2),
        (0.0, 0.0, 0.0),
    ),
    (
        "prediction fills a gold NULL",
        [([_rec("A", r1="a", r2="b")], [_rec("A", r1="a", r2=None)])],
        (1, 1, 0),
        (0.5, 1.0, 2 / 3),
    ),
    (
        "micro over two documents",
        [([_rec("A", r1="a", r2="c")], [_rec("A", r1="a", r2="b")]),
         ([_rec("A", r1="p", r2="q")], [_rec("A", r1="p", r2="q")])],
        (3, 1, 1),
        (0.75, 0.75, 0.75),
    ),
]


def oracle_stats(records_by_doc, subset):
    """Pairwise restatement: unique iff no other record in the doc has the same R-entities."""
    n = n_e = n_u = 0
    for recs in records_by_doc:
        sets = [sorted(r.args.get(x) for x in subset if r.args.get(x) is not None) for r in recs]
        for i, s in enumerate(sets):
            n += 1
            if not s:
                continue
            n_e += 1
            if all(sets[j] != s for j in range(len(sets)) if j != i):
                n_u += 1
    return n, n_e, n_u


def oracle_select(records_by_doc, roles, k):
    """Score every subset exactly, keep the best under (importance, existence, -lex)."""
    best = None
    for sub in combinations(sorted(roles), min(k, len(roles))):
        n, n_e, n_u = oracle_stats(records_by_doc, sub)
        imp = Fraction(n_e, n) * Fraction(n_u, n) if n else Fraction(0)
        ex = Fraction(n_e, n) if n else Fraction(0)
        if best is None or (imp, ex) > best[0]:
            best = ((imp, ex), sub)
    return best[1]
