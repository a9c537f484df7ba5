"""Pseudo triggers and the pruned complete graph on a toy corpus.

Run with ``python demos/01_pseudo_triggers_and_graphs.py``.
"""

# %% a small synthetic corpus
import numpy as np

from pcgdee.evaluate import oracle_decode_errors
from pcgdee.graph import decode_combinations, encode_gold_graph
from pcgdee.synth import SynthConfig, generate_corpus
from pcgdee.triggers import group_records, plan_for_roles, select_pseudo_triggers, subset_stats

docs, schema = generate_corpus(SynthConfig(n_docs=200, records_per_doc=(1, 3), null_rate=0.2, seed=0))
print(len(docs), "documents;", sum(len(d.records) for d in docs), "records")
for t in schema.event_types:
    print(t.name, t.roles)

# %% importance of every single role
# existence: how often the role is filled; distinguish: how often its
# entity tells the record apart from the others in the same document
own, _ = group_records(docs, "Type0")
for role in schema.roles("Type0"):
    s = subset_stats(own, [role])
    print(f"{role:8s} existence={s.existence:.3f} distinguish={s.distinguish:.3f} importance={s.importance:.3f}")

# %% pick the best role per type
plan = select_pseudo_triggers(docs, schema, 1)
for t, sel in plan.types.items():
    print(t, sel.pseudo_trigger_roles, round(sel.stats.importance, 3))

# %% one document as a graph
doc = next(d for d in docs if len(d.records) > 1)
g = encode_gold_graph(doc, plan)
np.set_printoptions(linewidth=120)
print(doc.entity_order)
print(g.adj)

# decoding the gold graph gives back the argument sets of the records
for c in decode_combinations(g, plan.effective_r_size):
    print(sorted(doc.entity_order[i] for i in c.members))
for r in doc.records:
    print(r.event_type, r.args)

# %% how lossy is decoding with a perfect graph?
for r in (1, 2):
    rep = oracle_decode_errors(docs, select_pseudo_triggers(docs, schema, r), schema)
    print(f"r={r}: SE={rep.SE:.3f} ME={rep.ME:.3f} TotE={rep.TotE:.3f} links={rep.n_links}")

# shared triggers are what breaks it: two records with one anchor merge
shared, sch = generate_corpus(SynthConfig(n_docs=200, records_per_doc=2, share_trigger_rate=1.0, seed=0))
forced = plan_for_roles(shared, sch, {t: ("Anchor",) for t in sch.names})
print(f"Anchor as trigger: ME={oracle_decode_errors(shared, forced, sch).ME:.3f}")
# the selector sees the low distinguishability and picks another role
picked = select_pseudo_triggers(shared, sch, 1)
print({t: p.pseudo_trigger_roles for t, p in picked.types.items()},
      f"ME={oracle_decode_errors(shared, picked, sch).ME:.3f}")
