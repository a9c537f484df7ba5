import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcgdee import scorer
from pcgdee.corpus import Document, Entity, EntityMention
from pcgdee.evaluate import accuracy_from_counts, adjacency_counts
from pcgdee.graph import Combination, encode_gold_graph
from pcgdee.records import TypedCandidate, fill_record
from pcgdee.scorer import (
    CheckpointError,
    DetectorModel,
    EntityEmbedder,
    LossWeights,
    RoleModel,
    SimilarityModel,
    TrainConfig,
    TrainingError,
    bce,
    bce_with_logits,
    binarize,
    char_ngrams,
    detect_types,
    detected,
    embed_entity,
    joint_loss,
    load_checkpoint,
    pair_mask,
    save_checkpoint,
    score_roles,
    similarity_matrix,
    train,
)
from pcgdee.synth import SynthConfig, generate_corpus, separable_link_config
from pcgdee.triggers import select_pseudo_triggers

from helpers import gradient_relative_error, make_doc, random_objective_instance, schema_of


def test_char_ngrams_with_boundaries():
    assert char_ngrams("ab", 2, 3) == ["^a", "ab", "b$", "^ab", "ab$"]


# ---------------------------------------------------------------------------
# embeddings


def test_embedding_is_deterministic_and_sized():
    doc = make_doc(2, texts=["acme", "acme"], etypes=["ORG", "PER"])
    emb = EntityEmbedder(["ORG", "PER"], content_dim=16, type_dim=4)
    assert emb.dim == 20
    a = embed_entity(emb, doc, doc.entities[0])
    assert np.array_equal(a, embed_entity(emb, doc, doc.entities[0]))
    other = EntityEmbedder(["ORG", "PER"], content_dim=16, type_dim=4)
    assert np.array_equal(a, other.embed_entity(doc, doc.entities[0]))


def test_same_text_different_etype_differs_only_in_type_block():
    doc = make_doc(2, texts=["acme", "acme"], etypes=["ORG", "PER"])
    emb = EntityEmbedder(["ORG", "PER"], content_dim=16, type_dim=4)
    a, b = emb.embed_document(doc)
    assert np.array_equal(a[:16], b[:16])
    assert (a[16:] != b[16:]).all()


def test_unknown_etype_uses_reserved_row():
    emb = EntityEmbedder(["ORG"], type_dim=4)
    assert np.array_equal(emb.type_vector("???"), emb.type_table[0])
    assert not np.array_equal(emb.type_vector("ORG"), emb.type_table[0])


def test_two_mentions_max_pool():
    sents = (("Acme", "Corp", "x"), ("Acme", "y"))
    two = Entity("e0", "Acme Corp", "ORG", (EntityMention(0, 0, 2), EntityMention(1, 0, 1)))
    doc = Document("d", sents, (two,))
    emb = EntityEmbedder(["ORG"], content_dim=32, type_dim=4)
    pooled = emb.embed_entity(doc, two)[:32]
    m0, m1 = emb.mention_vector(doc, two, 0), emb.mention_vector(doc, two, 1)
    assert np.array_equal(pooled, np.maximum(m0, m1))
    assert (pooled >= m0).all() and (pooled >= m1).all()


def test_context_weight_changes_vectors():
    doc = make_doc(1)
    plain = EntityEmbedder(content_dim=16).embed_document(doc)
    ctx = EntityEmbedder(content_dim=16, context_weight=0.5).embed_document(doc)
    assert not np.allclose(plain, ctx)


# ---------------------------------------------------------------------------
# similarity and thresholds


def test_zero_model_gives_half():
    m = SimilarityModel.zeros(6, 4)
    assert np.array_equal(similarity_matrix(m, np.zeros((3, 6))), np.full((3, 3), 0.5))


def test_hand_set_two_by_two():
    # projections map each entity to (1, 0); d_h = 4 -> sigmoid(1 / 2)
    W = np.array([[1.0, 0.0], [0.0, 0.0]])
    m = SimilarityModel(W, np.zeros(2), W, np.zeros(2), scale_dim=4)
    E = np.array([[1.0, 0.0], [1.0, 5.0]])
    P = similarity_matrix(m, E)
    assert P[0, 1] == pytest.approx(1 / (1 + math.exp(-0.5)), abs=1e-12)
    assert P[0, 1] == pytest.approx(0.62246, abs=1e-5)
    # flipping both projections leaves the product unchanged
    m2 = SimilarityModel(-W, np.zeros(2), -W, np.zeros(2), scale_dim=4)
    assert np.allclose(similarity_matrix(m2, E), P)


def test_similarity_is_asymmetric_in_general():
    rng = np.random.default_rng(0)
    m = SimilarityModel(rng.normal(size=(3, 3)), np.zeros(3), rng.normal(size=(3, 3)), np.zeros(3), 3)
    P = similarity_matrix(m, rng.normal(size=(4, 3)))
    assert ((P > 0) & (P < 1)).all() and not np.allclose(P, P.T)


def test_similarity_input_errors():
    m = SimilarityModel.zeros(3, 3)
    with pytest.raises(ValueError):
        similarity_matrix(m, np.zeros((0, 3)))
    with pytest.raises(ValueError):
        similarity_matrix(m, np.zeros((2, 4)))


def test_binarize_boundaries():
    assert binarize(np.array([[0.5]]), 0.5).tolist() == [[1]]
    assert binarize(np.array([[0.4999]]), 0.5).tolist() == [[0]]
    assert binarize(np.random.default_rng(0).random((3, 3)), 0.0).tolist() == [[1] * 3] * 3


# ---------------------------------------------------------------------------
# detector and role scorer


def test_zero_detector_predicts_every_type():
    det = DetectorModel.zeros(["A", "B"])
    probs = detect_types(det, make_doc(0))  # no entities: detection is text level
    assert probs == {"A": 0.5, "B": 0.5}
    assert detected(probs) == ["A", "B"]


def test_zero_role_model():
    schema = schema_of(T=("r1", "r2", "r3"))
    rm = RoleModel.zeros(schema, 4)
    rp = score_roles(rm, "T", Combination(frozenset({2}), frozenset()), np.ones((3, 4)))
    assert rp.probs.shape == (1, 3) and (rp.probs == 0.5).all()
    with pytest.raises(KeyError):
        score_roles(rm, "Nope", Combination(frozenset({0}), frozenset()), np.ones((3, 4)))


@pytest.fixture(scope="module")
def trained_small():
    docs, schema = generate_corpus(SynthConfig(n_docs=120, n_types=2, records_per_doc=(1, 2), seed=11))
    plan = select_pseudo_triggers(docs, schema, 1)
    emb = EntityEmbedder(sorted({e.etype for d in docs for e in d.entities}))
    res = train(docs, schema, plan, emb, TrainConfig(lr=5.0, epochs=150))
    held, _ = generate_corpus(SynthConfig(n_docs=100, n_types=2, records_per_doc=(1, 2), seed=12))
    return schema, emb, res, held


def test_trained_detector_finds_keyword_types(trained_small):
    schema, emb, res, held = trained_small
    for doc in held:
        gold = sorted({r.event_type for r in doc.records})
        assert sorted(detected(detect_types(res.detector, doc))) == gold


def test_trained_role_scorer_fills_gold_roles(trained_small):
    schema, emb, res, held = trained_small
    for doc in held:
        E = emb.embed_document(doc)
        idx = doc.entity_index()
        for rec in doc.records:
            members = frozenset(idx[e] for e in rec.entity_ids())
            c = Combination(frozenset(), members)
            rp = score_roles(res.roles, rec.event_type, c, E)
            got = fill_record(TypedCandidate(rec.event_type, c), rp, doc.entity_order)
            assert got.filled() == rec.filled()


def test_losses_trend_down(trained_small):
    losses = trained_small[2].losses
    assert losses[-1] < 0.5 * losses[0]


# ---------------------------------------------------------------------------
# losses


def test_joint_loss_arithmetic():
    assert joint_loss(1, 1, 1) == pytest.approx(2.05, abs=1e-12)
    assert joint_loss(0, 0, 0) == 0
    assert joint_loss(2, 3, 4, LossWeights(1, 1, 1, 1)) == 9
    with pytest.raises(ValueError):
        joint_loss(-1, 0, 0)
    with pytest.raises(ValueError):
        LossWeights(det=-0.1)


def test_bce_at_half_is_ln2():
    assert bce_with_logits(np.array(0.0), np.array(1.0)) == pytest.approx(math.log(2), abs=1e-9)
    assert bce_with_logits(np.array(0.0), np.array(0.0)) == pytest.approx(math.log(2), abs=1e-9)
    assert bce(np.array(0.5), np.array(1.0)) == pytest.approx(math.log(2), abs=1e-9)
    # stable for large logits
    assert np.isfinite(bce_with_logits(np.array(1e4), np.array(0.0)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_gradients_match_finite_differences(seed):
    params, batch = random_objective_instance(np.random.default_rng(seed))
    assert gradient_relative_error(params, batch) < 1e-4


def test_gradients_under_custom_weights():
    params, batch = random_objective_instance(np.random.default_rng(5))
    assert gradient_relative_error(params, batch, LossWeights(0.3, 0.0, 2.0, 0.7)) < 1e-4


def test_pair_mask_samples_balanced_negatives():
    Y = np.zeros((70, 70))
    Y[0, :5] = 1
    M = pair_mask(Y, 64, np.random.default_rng(0))
    assert M[Y > 0].all() and M.sum() == 10
    assert pair_mask(Y[:10, :10], 64, np.random.default_rng(0)).all()


# ---------------------------------------------------------------------------
# training


@pytest.fixture(scope="module")
def tiny():
    docs, schema = generate_corpus(SynthConfig(n_docs=10, seed=4))
    plan = select_pseudo_triggers(docs, schema, 1)
    emb = EntityEmbedder(sorted({e.etype for d in docs for e in d.entities}), content_dim=16, type_dim=4)
    return docs, schema, plan, emb


def test_lr_zero_keeps_parameters(tiny):
    docs, schema, plan, emb = tiny
    cfg = TrainConfig(lr=0.0, epochs=5)
    res = train(docs, schema, plan, emb, cfg)
    assert len(set(res.losses)) == 1
    init = scorer._init_params(schema, emb.dim, cfg)
    assert np.array_equal(res.similarity.W_s, init["W_s"])
    assert np.array_equal(res.detector.W, init["det_W"])


def test_same_seed_same_trace(tiny):
    docs, schema, plan, emb = tiny
    a = train(docs, schema, plan, emb, TrainConfig(epochs=5, seed=3)).losses
    b = train(docs, schema, plan, emb, TrainConfig(epochs=5, seed=3)).losses
    assert a == b


def test_non_finite_loss_aborts_with_epoch(tiny, monkeypatch):
    docs, schema, plan, emb = tiny
    real = scorer.objective
    calls = []

    def flaky(params, batch, weights):
        calls.append(1)
        out = real(params, batch, weights)
        return (float("nan") if len(calls) == 3 else out[0]), out[1], out[2]

    monkeypatch.setattr(scorer, "objective", flaky)
    with pytest.raises(TrainingError, match="epoch 2"):
        train(docs, schema, plan, emb, TrainConfig(epochs=5))


def test_empty_corpus_rejected(tiny):
    _, schema, plan, emb = tiny
    with pytest.raises(ValueError):
        train([], schema, plan, emb)


def test_checkpoint_round_trip_and_shape_check(tiny, tmp_path):
    docs, schema, plan, emb = tiny
    cfg = TrainConfig(epochs=2)
    res = train(docs, schema, plan, emb, cfg)
    p = tmp_path / "m.json"
    save_checkpoint(p, emb, res.similarity, res.detector, res.roles, cfg)
    emb2, sim, det, roles, cfg2 = load_checkpoint(p)
    assert cfg2 == cfg and emb2.config() == emb.config()
    assert np.array_equal(sim.W_e, res.similarity.W_e)
    assert np.array_equal(roles.W[schema.names[0]], res.roles.W[schema.names[0]])
    E = emb.embed_document(docs[0])
    assert np.array_equal(similarity_matrix(sim, E), similarity_matrix(res.similarity, E))

    import json

    obj = json.loads(p.read_text())
    obj["arrays"]["W_s"]["shape"] = [3, 3]
    p.write_text(json.dumps(obj))
    with pytest.raises(CheckpointError, match="W_s"):
        load_checkpoint(p)
    p.write_text("{}")
    with pytest.raises(CheckpointError):
        load_checkpoint(p)


def test_separable_links_are_learned_on_train():
    docs, schema = generate_corpus(separable_link_config(n_docs=120, seed=5))
    plan = select_pseudo_triggers(docs, schema, 1)
    emb = EntityEmbedder(sorted({e.etype for d in docs for e in d.entities}))
    res = train(docs, schema, plan, emb, TrainConfig(lr=30.0, epochs=800, init_diag=3.0))
    tot = np.zeros(3, dtype=int)
    for d in docs:
        A = binarize(similarity_matrix(res.similarity, emb.embed_document(d)))
        tot += adjacency_counts(A, encode_gold_graph(d, plan).adj)
    acc = accuracy_from_counts(*tot)
    assert acc["positive_recall"] >= 0.99 and acc["positive_precision"] >= 0.99
