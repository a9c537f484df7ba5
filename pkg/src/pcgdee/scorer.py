"""Desk-scale trainable scorers.

Entities are embedded with hashed character n-grams concatenated with an
entity-type vector.  On top of that sit three linear models trained jointly
with binary cross-entropy:

* ``SimilarityModel``: scaled dot-product link scores between projected
  entity vectors, thresholded into an adjacency matrix.
* ``DetectorModel``: one logistic scorer per event type over hashed
  document tokens.
* ``RoleModel``: one logistic scorer per (event type, role) over entity
  vectors.

All gradients are analytic; ``objective`` is the single place that computes
both the joint loss and its gradient.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.special import expit

from .corpus import Document, Entity, EventSchema, mention_text
from .graph import Combination, encode_gold_graph
from .triggers import PseudoTriggerPlan


class TrainingError(RuntimeError):
    pass


class CheckpointError(ValueError):
    pass


def _hash(s: str) -> int:
    return zlib.crc32(s.encode("utf-8"))


def bce_with_logits(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Elementwise binary cross-entropy of sigmoid(z) against y."""
    return np.logaddexp(0.0, z) - y * z


def bce(p: np.ndarray, y: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    p = np.clip(p, eps, 1 - eps)
    return -(y * np.log(p) + (1 - y) * np.log1p(-p))


# ---------------------------------------------------------------------------
# entity embeddings


def char_ngrams(text: str, lo: int, hi: int) -> list[str]:
    s = f"^{text}$"
    return [s[i : i + n] for n in range(lo, hi + 1) for i in range(len(s) - n + 1)]


@lru_cache(maxsize=8)
def _bucket_table(buckets: int, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    table = rng.standard_normal((buckets, dim), dtype=np.float32)
    table /= np.sqrt(dim)
    table.flags.writeable = False
    return table


class EntityEmbedder:
    """Deterministic entity vectors of width ``content_dim + type_dim``.

    The content block is the max-pool over mentions of the normalized sum of
    hashed n-gram vectors of each mention's surface string (plus, when
    ``context_weight > 0``, of its neighbouring tokens).  Unknown entity types
    map to a reserved row.
    """

    def __init__(
        self,
        etypes: Sequence[str] = (),
        content_dim: int = 64,
        type_dim: int = 8,
        hash_buckets: int = 2**16,
        ngram_range: tuple[int, int] = (2, 3),
        seed: int = 0,
        context_weight: float = 0.0,
    ):
        self.etypes = tuple(sorted(set(etypes)))
        self.content_dim = content_dim
        self.type_dim = type_dim
        self.hash_buckets = hash_buckets
        self.ngram_range = tuple(ngram_range)
        self.seed = seed
        self.context_weight = context_weight
        self._table = _bucket_table(hash_buckets, content_dim, seed)
        rng = np.random.default_rng(seed + 1)
        self.type_table = rng.standard_normal((len(self.etypes) + 1, type_dim)) / np.sqrt(type_dim)
        self._type_row = {t: i + 1 for i, t in enumerate(self.etypes)}

    @property
    def dim(self) -> int:
        return self.content_dim + self.type_dim

    def _pool(self, feats: Sequence[str], weight: float = 1.0) -> np.ndarray:
        if not feats:
            return np.zeros(self.content_dim)
        rows = [_hash(f) % self.hash_buckets for f in feats]
        return weight * self._table[rows].sum(axis=0, dtype=np.float64) / np.sqrt(len(rows))

    def mention_vector(self, doc: Document, entity: Entity, k: int) -> np.ndarray:
        m = entity.mentions[k]
        text = mention_text(doc, m) or entity.text
        vec = self._pool(char_ngrams(text, *self.ngram_range))
        if self.context_weight:
            sent = doc.sentences[m.sent_idx]
            ctx = [f"<{t}" for t in sent[max(0, m.start - 1) : m.start]]
            ctx += [f">{t}" for t in sent[m.end : m.end + 1]]
            vec = vec + self._pool(ctx, self.context_weight)
        return vec

    def type_vector(self, etype: str) -> np.ndarray:
        return self.type_table[self._type_row.get(etype, 0)]

    def embed_entity(self, doc: Document, entity: Entity) -> np.ndarray:
        if entity.mentions:
            content = np.max(
                [self.mention_vector(doc, entity, k) for k in range(len(entity.mentions))],
                axis=0,
            )
        else:
            content = self._pool(char_ngrams(entity.text, *self.ngram_range))
        return np.concatenate([content, self.type_vector(entity.etype)])

    def embed_document(self, doc: Document) -> np.ndarray:
        if not doc.entities:
            return np.zeros((0, self.dim))
        return np.stack([self.embed_entity(doc, e) for e in doc.entities])

    def config(self) -> dict:
        return {
            "etypes": list(self.etypes),
            "content_dim": self.content_dim,
            "type_dim": self.type_dim,
            "hash_buckets": self.hash_buckets,
            "ngram_range": list(self.ngram_range),
            "seed": self.seed,
            "context_weight": self.context_weight,
        }

    @classmethod
    def from_config(cls, cfg: Mapping) -> "EntityEmbedder":
        cfg = dict(cfg)
        cfg["ngram_range"] = tuple(cfg["ngram_range"])
        return cls(**cfg)


def embed_entity(embedder: EntityEmbedder, doc: Document, entity: Entity) -> np.ndarray:
    return embedder.embed_entity(doc, entity)


# ---------------------------------------------------------------------------
# similarity / adjacency


@dataclass
class SimilarityModel:
    W_s: np.ndarray
    b_s: np.ndarray
    W_e: np.ndarray
    b_e: np.ndarray
    scale_dim: int
    gamma: float = 0.5

    @classmethod
    def zeros(cls, dim: int, scale_dim: int, gamma: float = 0.5) -> "SimilarityModel":
        return cls(np.zeros((dim, dim)), np.zeros(dim), np.zeros((dim, dim)), np.zeros(dim), scale_dim, gamma)

    @property
    def dim(self) -> int:
        return self.W_s.shape[0]

    def logits(self, E: np.ndarray) -> np.ndarray:
        E = np.atleast_2d(np.asarray(E, dtype=float))
        if E.shape[1] != self.dim:
            raise ValueError(f"embedding width {E.shape[1]} != model width {self.dim}")
        S = E @ self.W_s.T + self.b_s
        T = E @ self.W_e.T + self.b_e
        return S @ T.T / math.sqrt(self.scale_dim)


def similarity_matrix(model: SimilarityModel, E: np.ndarray) -> np.ndarray:
    """Link probabilities sigmoid(<W_s e_i + b_s, W_e e_j + b_e> / sqrt(d_h))."""
    if len(E) == 0:
        raise ValueError("similarity needs at least one entity")
    return expit(model.logits(E))


def binarize(sim: np.ndarray, gamma: float = 0.5) -> np.ndarray:
    """Adjacency with A_ij = 1 iff sim_ij >= gamma."""
    return (np.asarray(sim) >= gamma).astype(np.uint8)


# ---------------------------------------------------------------------------
# event detection


def doc_features(doc: Document, dim: int) -> np.ndarray:
    """Hashed binary bag of words.

    Presence rather than normalized counts keeps a keyword's feature value
    independent of document length.
    """
    x = np.zeros(dim)
    for sent in doc.sentences:
        for tok in sent:
            x[_hash(tok) % dim] = 1.0
    return x


@dataclass
class DetectorModel:
    event_types: tuple[str, ...]
    W: np.ndarray
    b: np.ndarray

    @classmethod
    def zeros(cls, event_types: Sequence[str], feature_dim: int = 2**14) -> "DetectorModel":
        return cls(tuple(event_types), np.zeros((len(event_types), feature_dim)), np.zeros(len(event_types)))

    @property
    def feature_dim(self) -> int:
        return self.W.shape[1]

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        return expit(X @ self.W.T + self.b)


def detect_types(model: DetectorModel, doc: Document) -> dict[str, float]:
    """Probability per event type; a type is detected iff its probability >= 0.5."""
    p = model.probabilities(doc_features(doc, model.feature_dim))
    return {t: float(v) for t, v in zip(model.event_types, p)}


def detected(probs: Mapping[str, float], threshold: float = 0.5) -> list[str]:
    return [t for t, p in probs.items() if p >= threshold]


# ---------------------------------------------------------------------------
# role classification


@dataclass
class RoleModel:
    roles: dict[str, tuple[str, ...]]
    W: dict[str, np.ndarray]
    b: dict[str, np.ndarray]

    @classmethod
    def zeros(cls, schema: EventSchema, dim: int) -> "RoleModel":
        roles = {t.name: tuple(t.roles) for t in schema.event_types}
        return cls(
            roles,
            {t: np.zeros((len(r), dim)) for t, r in roles.items()},
            {t: np.zeros(len(r)) for t, r in roles.items()},
        )


@dataclass(frozen=True)
class RoleProbabilities:
    """probs[q, j] = p(role j | member q) for the sorted combination members."""

    members: tuple[int, ...]
    roles: tuple[str, ...]
    probs: np.ndarray


def score_roles(model: RoleModel, event_type: str, combo: Combination, E: np.ndarray) -> RoleProbabilities:
    if event_type not in model.roles:
        raise KeyError(f"event type {event_type!r} not in role model")
    members = combo.members
    if not members:
        raise ValueError("empty combination")
    X = np.asarray(E)[list(members)]
    probs = expit(X @ model.W[event_type].T + model.b[event_type])
    return RoleProbabilities(members, model.roles[event_type], probs)


# ---------------------------------------------------------------------------
# losses


@dataclass(frozen=True)
class LossWeights:
    det: float = 0.05
    ent: float = 1.0
    comb: float = 1.0
    role: float = 1.0

    def __post_init__(self):
        if min(self.det, self.ent, self.comb, self.role) < 0:
            raise ValueError("loss weights must be non-negative")


def joint_loss(det: float, comb: float, role: float, weights: LossWeights = LossWeights()) -> float:
    """Weighted sum of component losses; the entity-extraction term is fixed at zero."""
    for name, v in (("det", det), ("comb", comb), ("role", role)):
        if v < 0:
            raise ValueError(f"negative {name} loss {v}")
    ent = 0.0
    return weights.det * det + weights.ent * ent + weights.comb * comb + weights.role * role


@dataclass
class TrainingBatch:
    """Precomputed inputs and targets for the joint objective.

    ``comb`` holds per-document (E, gold adjacency, pair mask); ``role``
    holds per event type stacked member rows, targets, and per-row weights.
    """

    comb: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    det_X: np.ndarray
    det_Y: np.ndarray
    role: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]
    scale_dim: int


def objective(params: Mapping[str, np.ndarray], batch: TrainingBatch, weights: LossWeights = LossWeights()):
    """Joint loss, its components, and the gradient w.r.t. every parameter.

    Parameter keys: ``W_s, b_s, W_e, b_e, det_W, det_b`` and
    ``role_W/<type>, role_b/<type>``.
    """
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    inv = 1.0 / math.sqrt(batch.scale_dim)

    # detection
    l_det = 0.0
    D = len(batch.det_X)
    if D:
        Z = batch.det_X @ params["det_W"].T + params["det_b"]
        n = Z.size
        l_det = float(bce_with_logits(Z, batch.det_Y).sum() / n)
        G = (expit(Z) - batch.det_Y) / n * weights.det
        grads["det_W"] += G.T @ batch.det_X
        grads["det_b"] += G.sum(axis=0)

    # combination (link) loss
    l_comb = 0.0
    docs = [c for c in batch.comb if len(c[0])]
    W_s, b_s, W_e, b_e = params["W_s"], params["b_s"], params["W_e"], params["b_e"]
    for E, Y, M in docs:
        S = E @ W_s.T + b_s
        T = E @ W_e.T + b_e
        Z = S @ T.T * inv
        cnt = M.sum()
        l_comb += float((bce_with_logits(Z, Y) * M).sum() / cnt) / len(docs)
        G = (expit(Z) - Y) * M / cnt / len(docs) * weights.comb * inv
        dS = G @ T
        dT = G.T @ S
        grads["W_s"] += dS.T @ E
        grads["b_s"] += dS.sum(axis=0)
        grads["W_e"] += dT.T @ E
        grads["b_e"] += dT.sum(axis=0)

    # roles
    l_role = 0.0
    for t, (X, Y, w) in batch.role.items():
        if not len(X):
            continue
        Wk, bk = f"role_W/{t}", f"role_b/{t}"
        Z = X @ params[Wk].T + params[bk]
        l_role += float((bce_with_logits(Z, Y) * w[:, None]).sum())
        G = (expit(Z) - Y) * w[:, None] * weights.role
        grads[Wk] += G.T @ X
        grads[bk] += G.sum(axis=0)

    total = joint_loss(l_det, l_comb, l_role, weights)
    return total, {"det": l_det, "comb": l_comb, "role": l_role}, grads


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.1
    epochs: int = 100
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    gamma: float = 0.5
    det_feature_dim: int = 2**14
    max_full_pairs: int = 64
    init_diag: float = 1.0
    init_noise: float = 0.01

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: Mapping) -> "TrainConfig":
        obj = dict(obj)
        obj["weights"] = LossWeights(**obj.get("weights", {}))
        return cls(**obj)


class TrainResult(NamedTuple):
    similarity: SimilarityModel
    detector: DetectorModel
    roles: RoleModel
    losses: list[float]


def pair_mask(Y: np.ndarray, max_full: int, rng: np.random.Generator) -> np.ndarray:
    """All pairs for small documents, else positives plus as many sampled negatives."""
    n = len(Y)
    if n <= max_full:
        return np.ones_like(Y, dtype=float)
    M = (Y > 0).astype(float)
    neg = np.flatnonzero(Y.ravel() == 0)
    k = min(len(neg), int(M.sum()))
    M.ravel()[rng.choice(neg, size=k, replace=False)] = 1.0
    return M


def build_batch(
    corpus: Sequence[Document],
    schema: EventSchema,
    plan: PseudoTriggerPlan,
    embedder: EntityEmbedder,
    det_feature_dim: int = 2**14,
    max_full_pairs: int = 64,
    seed: int = 0,
) -> TrainingBatch:
    rng = np.random.default_rng(seed)
    types = schema.names
    tidx = {t: i for i, t in enumerate(types)}
    comb = []
    det_X = np.zeros((len(corpus), det_feature_dim))
    det_Y = np.zeros((len(corpus), len(types)))
    role_rows: dict[str, list] = {t: [] for t in types}
    n_rec = sum(len(d.records) for d in corpus)
    for d, doc in enumerate(corpus):
        E = embedder.embed_document(doc)
        Y = encode_gold_graph(doc, plan).adj.astype(float)
        comb.append((E, Y, pair_mask(Y, max_full_pairs, rng)))
        det_X[d] = doc_features(doc, det_feature_dim)
        idx = doc.entity_index()
        for rec in doc.records:
            det_Y[d, tidx[rec.event_type]] = 1.0
            roles = schema.roles(rec.event_type)
            members = sorted({idx[e] for e in rec.args.values() if e is not None})
            if not members:
                continue
            tgt = np.zeros((len(members), len(roles)))
            pos = {m: q for q, m in enumerate(members)}
            for j, r in enumerate(roles):
                e = rec.args.get(r)
                if e is not None:
                    tgt[pos[idx[e]], j] = 1.0
            w = np.full(len(members), 1.0 / (len(members) * len(roles) * n_rec))
            role_rows[rec.event_type].append((E[members], tgt, w))
    role = {}
    for t, rows in role_rows.items():
        dim, R = embedder.dim, len(schema.roles(t))
        if rows:
            role[t] = tuple(np.concatenate(parts) for parts in zip(*rows))
        else:
            role[t] = (np.zeros((0, dim)), np.zeros((0, R)), np.zeros(0))
    return TrainingBatch(comb, det_X, det_Y, role, embedder.content_dim)


def _init_params(schema: EventSchema, dim: int, cfg: TrainConfig) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(cfg.seed)
    p = {
        "W_s": cfg.init_diag * np.eye(dim) + cfg.init_noise * rng.standard_normal((dim, dim)),
        "b_s": np.zeros(dim),
        "W_e": cfg.init_diag * np.eye(dim) + cfg.init_noise * rng.standard_normal((dim, dim)),
        "b_e": np.zeros(dim),
        "det_W": np.zeros((len(schema.event_types), cfg.det_feature_dim)),
        "det_b": np.zeros(len(schema.event_types)),
    }
    for t in schema.event_types:
        p[f"role_W/{t.name}"] = cfg.init_noise * rng.standard_normal((len(t.roles), dim))
        p[f"role_b/{t.name}"] = np.zeros(len(t.roles))
    return p


def params_to_models(params: Mapping[str, np.ndarray], schema: EventSchema, scale_dim: int, gamma: float):
    sim = SimilarityModel(params["W_s"].copy(), params["b_s"].copy(), params["W_e"].copy(), params["b_e"].copy(), scale_dim, gamma)
    det = DetectorModel(schema.names, params["det_W"].copy(), params["det_b"].copy())
    roles = RoleModel(
        {t.name: tuple(t.roles) for t in schema.event_types},
        {t.name: params[f"role_W/{t.name}"].copy() for t in schema.event_types},
        {t.name: params[f"role_b/{t.name}"].copy() for t in schema.event_types},
    )
    return sim, det, roles


def models_to_params(sim: SimilarityModel, det: DetectorModel, roles: RoleModel) -> dict[str, np.ndarray]:
    p = {"W_s": sim.W_s, "b_s": sim.b_s, "W_e": sim.W_e, "b_e": sim.b_e, "det_W": det.W, "det_b": det.b}
    for t in roles.roles:
        p[f"role_W/{t}"] = roles.W[t]
        p[f"role_b/{t}"] = roles.b[t]
    return p


def train(
    corpus: Sequence[Document],
    schema: EventSchema,
    plan: PseudoTriggerPlan,
    embedder: EntityEmbedder,
    config: TrainConfig = TrainConfig(),
) -> TrainResult:
    """Full-batch gradient descent on the joint loss.

    ``losses[k]`` is the joint loss at the parameters entering epoch ``k``.
    """
    if not corpus:
        raise ValueError("empty training corpus")
    batch = build_batch(corpus, schema, plan, embedder, config.det_feature_dim, config.max_full_pairs, config.seed)
    params = _init_params(schema, embedder.dim, config)
    losses = []
    for epoch in range(config.epochs):
        loss, _, grads = objective(params, batch, config.weights)
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        losses.append(loss)
        for k in params:
            params[k] = params[k] - config.lr * grads[k]
    sim, det, roles = params_to_models(params, schema, embedder.content_dim, config.gamma)
    return TrainResult(sim, det, roles, losses)


# ---------------------------------------------------------------------------
# checkpoints


def _pack(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": np.asarray(a, dtype=float).ravel().tolist()}


def _unpack(obj: Mapping, name: str, shape: tuple[int, ...]) -> np.ndarray:
    got = tuple(obj["shape"])
    if got != shape:
        raise CheckpointError(f"{name}: shape {got} does not match expected {shape}")
    data = np.asarray(obj["data"], dtype=float)
    if data.size != math.prod(shape):
        raise CheckpointError(f"{name}: {data.size} values for shape {shape}")
    return data.reshape(shape)


def save_checkpoint(
    path: str | Path,
    embedder: EntityEmbedder,
    sim: SimilarityModel,
    det: DetectorModel,
    roles: RoleModel,
    config: TrainConfig | None = None,
) -> None:
    obj = {
        "config": (config or TrainConfig()).to_dict(),
        "embedder": embedder.config(),
        "gamma": sim.gamma,
        "event_types": list(det.event_types),
        "roles": {t: list(r) for t, r in roles.roles.items()},
        "arrays": {k: _pack(v) for k, v in models_to_params(sim, det, roles).items()},
    }
    Path(path).write_text(json.dumps(obj))


def load_checkpoint(path: str | Path):
    """Return (embedder, similarity, detector, roles, config); shapes are checked."""
    try:
        obj = json.loads(Path(path).read_text())
        config = TrainConfig.from_dict(obj["config"])
        embedder = EntityEmbedder.from_config(obj["embedder"])
        types = tuple(obj["event_types"])
        role_names = {t: tuple(r) for t, r in obj["roles"].items()}
        arrays = obj["arrays"]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint: {exc}") from exc
    d = embedder.dim
    F = config.det_feature_dim
    shapes = {"W_s": (d, d), "b_s": (d,), "W_e": (d, d), "b_e": (d,), "det_W": (len(types), F), "det_b": (len(types),)}
    for t, r in role_names.items():
        shapes[f"role_W/{t}"] = (len(r), d)
        shapes[f"role_b/{t}"] = (len(r),)
    missing = set(shapes) - set(arrays)
    if missing:
        raise CheckpointError(f"{path}: missing arrays {sorted(missing)}")
    p = {k: _unpack(arrays[k], k, s) for k, s in shapes.items()}
    sim = SimilarityModel(p["W_s"], p["b_s"], p["W_e"], p["b_e"], embedder.content_dim, float(obj["gamma"]))
    det = DetectorModel(types, p["det_W"], p["det_b"])
    roles = RoleModel(role_names, {t: p[f"role_W/{t}"] for t in role_names}, {t: p[f"role_b/{t}"] for t in role_names})
    return embedder, sim, det, roles, config
