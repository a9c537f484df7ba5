import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcgdee.bench import (
    PathLimitError,
    autoregressive_baseline_decode,
    bench,
    compare,
    decode_batch,
    gold_role_fit,
    prepare_inputs,
    role_order,
    run_decode,
)
from pcgdee.graph import CombinationGraph, decode_combinations, encode_gold_graph
from pcgdee.synth import SynthConfig, benchmark_corpus, generate_corpus
from pcgdee.triggers import plan_for_roles, select_pseudo_triggers

from helpers import make_doc, schema_of


@pytest.fixture(scope="module")
def small_bench():
    docs, schema = benchmark_corpus(20, seed=3)
    plan = select_pseudo_triggers(docs, schema, 1)
    return docs, schema, plan, prepare_inputs(docs, schema, plan)


def members(combos):
    return sorted(c.members for c in combos)


@given(seed=st.integers(0, 500), r=st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_baseline_agrees_on_unambiguous_docs(seed, r):
    docs, schema = generate_corpus(SynthConfig(n_docs=8, records_per_doc=(1, 3), null_rate=0.2, seed=seed))
    plan = select_pseudo_triggers(docs, schema, r)
    for d in docs:
        g = encode_gold_graph(d, plan)
        present = [t for t in schema.names if any(x.event_type == t for x in d.records)]
        orders = {t: role_order(schema, plan, t) for t in present}
        roles_of = {t: schema.roles(t) for t in schema.names}
        base = autoregressive_baseline_decode(g, plan, orders, gold_role_fit(d, schema), roles_of)
        assert members(base) == members(decode_combinations(g, plan.effective_r_size))


def test_role_order_puts_triggers_first():
    schema = schema_of(T=("A", "B", "C"))
    doc = make_doc(3, [("T", {"A": 0, "B": 1, "C": 2})])
    plan = plan_for_roles([doc], schema, {"T": ("C",)})
    assert role_order(schema, plan, "T") == ("C", "A", "B")


def test_baseline_work_grows_with_entities_and_roles():
    def work(n_ent, n_roles):
        roles = tuple(f"r{j}" for j in range(n_roles))
        schema = schema_of(T=roles)
        doc = make_doc(n_ent, [("T", {r: j for j, r in enumerate(roles)})])
        plan = plan_for_roles([doc], schema, {"T": ("r0",)})
        stats = {}
        autoregressive_baseline_decode(
            encode_gold_graph(doc, plan), plan, {"T": roles}, gold_role_fit(doc, schema), stats=stats
        )
        return stats["expanded"]

    assert work(8, 4) == 8 * 4
    assert work(16, 4) == 2 * work(8, 4)
    assert work(8, 8) > work(8, 4)


def test_path_cap():
    schema = schema_of(T=("P", "A", "B"))
    n = 6
    adj = np.ones((n, n), dtype=np.uint8)
    g = CombinationGraph(adj, tuple(f"e{i}" for i in range(n)))
    doc = make_doc(n, [("T", {"P": 0})])
    plan = plan_for_roles([doc], schema, {"T": ("P",)})
    fit = {"T": np.ones((n, 3), dtype=bool)}
    with pytest.raises(PathLimitError):
        autoregressive_baseline_decode(g, plan, {"T": ("P", "A", "B")}, fit, max_paths=50)


def test_empty_inputs():
    g = CombinationGraph(np.zeros((0, 0), dtype=np.uint8), ())
    schema = schema_of(T=("P",))
    plan = plan_for_roles([make_doc(1, [("T", {"P": 0})])], schema, {"T": ("P",)})
    assert autoregressive_baseline_decode(g, plan, {"T": ("P",)}, {"T": np.zeros((0, 1), bool)}) == []
    assert decode_batch([], 0.5, 1) == []


@given(seed=st.integers(0, 10**6), r=st.integers(1, 3), sizes=st.lists(st.integers(0, 9), min_size=1, max_size=6))
@settings(max_examples=100, deadline=None)
def test_batched_decoding_matches_per_document(seed, r, sizes):
    rng = np.random.default_rng(seed)
    probs = [rng.random((n, n)) ** 3 for n in sizes]
    got = decode_batch(probs, 0.5, r)
    for P, combos in zip(probs, got):
        g = CombinationGraph((P >= 0.5).astype(np.uint8), tuple(f"e{i}" for i in range(len(P))))
        assert combos == decode_combinations(g, r)


def test_modes_agree_and_repeat(small_bench):
    docs, schema, plan, inputs = small_bench
    a = run_decode(inputs, schema, plan, "nonautoregressive", batch_size=8)
    b = run_decode(inputs, schema, plan, "autoregressive-baseline")
    c = run_decode(inputs, schema, plan, "nonautoregressive", batch_size=1, threads=2)
    assert [members(x) for x in a] == [members(x) for x in b] == [members(x) for x in c]
    rep = bench(inputs, schema, plan, "nonautoregressive", batch_size=4, repetitions=3)
    assert rep.outputs_identical and rep.total_docs == 20 and len(rep.run_seconds) == 3
    assert rep.timing_excludes_io


def test_bench_validation(small_bench):
    docs, schema, plan, inputs = small_bench
    with pytest.raises(ValueError):
        bench(inputs, schema, plan, "nonautoregressive", repetitions=2)
    with pytest.raises(ValueError):
        run_decode(inputs, schema, plan, "beam")


def test_compare_reports_speedup(small_bench):
    docs, schema, plan, inputs = small_bench
    fast, base = compare(inputs, schema, plan, batch_size=8)
    assert fast.output_digest == base.output_digest
    assert fast.speedup_vs_baseline == pytest.approx(base.wall_seconds / fast.wall_seconds)
    assert fast.speedup_vs_baseline > 1
