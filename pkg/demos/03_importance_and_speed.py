"""Importance of the trigger role vs decoding quality, and decode throughput."""

# %% planted importance
from pcgdee.bench import bench, compare, prepare_inputs
from pcgdee.evaluate import oracle_decode_errors
from pcgdee.synth import SynthConfig, benchmark_corpus, plant_importance
from pcgdee.triggers import plan_for_roles, select_pseudo_triggers

cfg = SynthConfig(n_docs=300, n_types=1, records_per_doc=(2, 4), seed=3)
print("distinguish  importance  F1 upper bound")
for dist in (1.0, 0.9, 0.6, 0.4, 0.2):
    docs, schema = plant_importance(cfg, "Type0.Anchor", 1.0, dist)
    plan = plan_for_roles(docs, schema, {"Type0": ("Anchor",)})
    rep = oracle_decode_errors(docs, plan, schema)
    print(f"{dist:11.1f}  {plan.types['Type0'].stats.importance:10.3f}  {1 - rep.TotE:.3f}")

# %% throughput on the benchmark corpus (8-32 entities, 4-8 roles)
docs, schema = benchmark_corpus(200)
plan = select_pseudo_triggers(docs, schema, 1)
inputs = prepare_inputs(docs, schema, plan)
fast, base = compare(inputs, schema, plan, batch_size=64)
print(f"baseline  {base.docs_per_second:9.0f} docs/s")
print(f"one-pass  {fast.docs_per_second:9.0f} docs/s  ({fast.speedup_vs_baseline:.1f}x)")
for bs in (1, 8, 64):
    print(bs, round(bench(inputs, schema, plan, "nonautoregressive", batch_size=bs).docs_per_second))
