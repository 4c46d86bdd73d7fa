"""Pair scoring: a trainable cross-encoder plus the embedding-kNN baseline.

The cross-encoder encodes "[CLS] question [SEP] answer" as a single sequence
(hash-derived frozen token vectors + learned segment/position embeddings),
runs it through a small transformer encoder, and maps the pooled
representation to a match probability. Fine-tuning minimizes binary
cross-entropy against the pair labels, optionally after appending external
knowledge to each side of the pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import llm_augment, nn
from .knowledge import Entity, LinkerClient, Ontology, augment, link_entities, query_ontology
from .model_store import EncoderConfig, ScorerModelHandle, encoder_from_weights, encoder_weight_dict
from .qadataset import ExtendedDataset
from .textutil import derive_rng, sha256_hex, stable_hash64, tokenize

CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"


@dataclass(frozen=True)
class ScoredCandidate:
    answer_id: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0,1]")


# ---------------------------------------------------------------------------
# token vectors
# ---------------------------------------------------------------------------

class HashedTokenVectors:
    """Frozen unit vectors derived from a stable hash of each token.

    Identical tokens always map to identical vectors, including tokens never
    seen in training, which is what lets a lexical-match signal generalize.
    """

    def __init__(self, dim: int, salt: str = "tok"):
        self.dim = dim
        self.salt = salt
        self._cache: dict[str, np.ndarray] = {}

    def vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            rng = derive_rng(stable_hash64(token, self.salt))
            vec = rng.normal(size=self.dim)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec


class VocabTokenVectors:
    """Vectors from a learned vocabulary table, hashing unknown tokens."""

    def __init__(self, vocab: list[str], table: np.ndarray, salt: str = "tok"):
        self.dim = table.shape[1]
        self._index = {tok: i for i, tok in enumerate(vocab)}
        self._table = table
        self._fallback = HashedTokenVectors(self.dim, salt)

    def vector(self, token: str) -> np.ndarray:
        i = self._index.get(token)
        if i is None:
            return self._fallback.vector(token)
        return self._table[i]


def _token_vectors_for(handle: ScorerModelHandle) -> HashedTokenVectors | VocabTokenVectors:
    if handle.vocab is not None and "embedding" in handle.weights:
        return VocabTokenVectors(handle.vocab, handle.weights["embedding"])
    return HashedTokenVectors(handle.config.dim)


# ---------------------------------------------------------------------------
# the cross-encoder network
# ---------------------------------------------------------------------------

class CrossEncoderNet:
    """Joint pair encoder with an explicit lexical cross-match channel.

    Tokens that also occur on the other side of the pair get a learned
    match vector added to their input embedding. Full-scale cross-encoders
    learn this overlap circuit from data; at desk scale we hand the model
    the indicator and let training decide its weight.
    """

    def __init__(self, config: EncoderConfig, token_vectors, rng: np.random.Generator):
        self.config = config
        self.token_vectors = token_vectors
        self.segment = nn.Param(rng.normal(0.0, 0.1, size=(2, config.dim)))
        self.position = nn.Param(rng.normal(0.0, 0.02, size=(config.max_len, config.dim)))
        self.match_vec = nn.Param(rng.normal(0.0, 0.5, size=config.dim))
        self.encoder = config.build(rng)
        self.head = nn.Linear(config.dim, 1, rng)
        self._cache: tuple | None = None

    def params(self) -> list[nn.Param]:
        return [self.segment, self.position, self.match_vec] + self.encoder.params() + self.head.params()

    def _encode_tokens(self, q: str, a: str) -> tuple[list[str], list[int]]:
        q_toks = tokenize(q)
        a_toks = tokenize(a)
        budget = self.config.max_len - 2  # room for CLS and SEP
        # truncate the answer side first, then the question side
        while len(q_toks) + len(a_toks) > budget and len(a_toks) > 1:
            a_toks.pop()
        while len(q_toks) + len(a_toks) > budget and len(q_toks) > 0:
            q_toks.pop()
        tokens = [CLS_TOKEN] + q_toks + [SEP_TOKEN] + a_toks
        segments = [0] * (len(q_toks) + 2) + [1] * len(a_toks)
        return tokens[: self.config.max_len], segments[: self.config.max_len]

    def _build_batch(self, pairs: list[tuple[str, str]]) -> tuple[np.ndarray, ...]:
        encoded = [self._encode_tokens(q, a) for q, a in pairs]
        max_t = max(len(toks) for toks, _ in encoded)
        b = len(encoded)
        x = np.zeros((b, max_t, self.config.dim))
        seg_ids = np.zeros((b, max_t), dtype=np.int64)
        mask = np.zeros((b, max_t))
        matches = np.zeros((b, max_t))
        for i, (tokens, segments) in enumerate(encoded):
            side_tokens = ({t for t, s in zip(tokens, segments) if s == 0},
                           {t for t, s in zip(tokens, segments) if s == 1})
            for j, tok in enumerate(tokens):
                x[i, j] = self.token_vectors.vector(tok)
                if tok not in (CLS_TOKEN, SEP_TOKEN) and tok in side_tokens[1 - segments[j]]:
                    matches[i, j] = 1.0
            seg_ids[i, : len(segments)] = segments
            mask[i, : len(tokens)] = 1.0
        x = x + self.segment.value[seg_ids] * mask[:, :, None]
        x = x + self.position.value[:max_t][None, :, :] * mask[:, :, None]
        x = x + matches[:, :, None] * self.match_vec.value
        return x, seg_ids, mask, matches

    def forward_logits(self, pairs: list[tuple[str, str]]) -> np.ndarray:
        x, seg_ids, mask, matches = self._build_batch(pairs)
        h = self.encoder.forward(x, mask)
        pooled, pool_cache = nn.masked_mean_pool(h, mask)
        logits = self.head.forward(pooled)[:, 0]
        self._cache = (seg_ids, mask, matches, pool_cache)
        return logits

    def backward(self, dlogits: np.ndarray) -> None:
        seg_ids, mask, matches, pool_cache = self._cache
        dpooled = self.head.backward(dlogits[:, None])
        dh = nn.masked_mean_pool_backward(dpooled, pool_cache)
        dx = self.encoder.backward(dh)
        dx = dx * mask[:, :, None]
        np.add.at(self.segment.grad, seg_ids.reshape(-1), dx.reshape(-1, dx.shape[-1]))
        self.position.grad[: dx.shape[1]] += dx.sum(axis=0)
        self.match_vec.grad += (dx * matches[:, :, None]).sum(axis=(0, 1))

    def scores(self, pairs: list[tuple[str, str]]) -> np.ndarray:
        return nn.sigmoid(self.forward_logits(pairs))

    # -- persistence ---------------------------------------------------------

    def weight_dict(self) -> dict[str, np.ndarray]:
        out = {"segment": self.segment.value, "position": self.position.value,
               "match_vec": self.match_vec.value,
               "head.W": self.head.W.value, "head.b": self.head.b.value}
        out.update({f"encoder.{k}": v for k, v in encoder_weight_dict(self.encoder).items()})
        return out

    def load_weights(self, weights: dict[str, np.ndarray]) -> None:
        own = self.weight_dict()
        for name, live in own.items():
            if name in weights and weights[name].shape == live.shape:
                live[...] = weights[name]


def build_runtime(handle: ScorerModelHandle) -> CrossEncoderNet:
    """Materialize the network for a handle; fresh parts init from its seed."""
    rng = derive_rng(handle.seed, 7)
    net = CrossEncoderNet(handle.config, _token_vectors_for(handle), rng)
    if handle.weights:
        # MLM handles store bare encoder weights; fine-tuned handles store
        # "encoder."-prefixed ones plus segment/position/match/head.
        if any(k.startswith("encoder.") for k in handle.weights):
            net.load_weights(handle.weights)
        else:
            net.encoder = encoder_from_weights(
                handle.config, handle.weights, derive_rng(handle.seed, 8)
            )
            pos = handle.weights.get("positional")
            if pos is not None and pos.shape == net.position.value.shape:
                net.position.value[...] = pos
    return net


def _runtime_for(handle: ScorerModelHandle) -> CrossEncoderNet:
    net = handle.extra.get("_runtime")
    if not isinstance(net, CrossEncoderNet):
        net = build_runtime(handle)
        handle.extra["_runtime"] = net
    return net


def new_model(config: EncoderConfig | None = None, seed: int = 0) -> ScorerModelHandle:
    """A fresh generic cross-encoder (no domain pretraining)."""
    config = config or EncoderConfig()
    return ScorerModelHandle(
        identifier=sha256_hex(json.dumps(["pretrained_generic", config.to_dict(), seed]))[:12],
        provenance="pretrained_generic",
        config=config,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# augmentation plans (what gets appended to each side before encoding)
# ---------------------------------------------------------------------------

PLAN_KINDS = ("none", "ontology", "linker", "llm_p1", "llm_p2")


@dataclass
class AugmentationPlan:
    """How to enrich pair text before encoding.

    ontology/linker plans append entity labels to both the question and the
    answer; llm plans by default touch only the question (expansion entities
    for p1, full rephrasing for p2).
    """

    kind: str = "none"
    n: int = 1
    d: int = 3
    ontology: Ontology | None = None
    linker: LinkerClient | None = None
    chat: llm_augment.ChatClient | None = None
    llm_applies_to_answers: bool = False
    _memo: dict[tuple[str, str], str] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in PLAN_KINDS:
            raise ValueError(f"unknown augmentation plan {self.kind!r}")
        if self.kind == "ontology" and self.ontology is None:
            raise ValueError("ontology plan requires an ontology")
        if self.kind == "linker" and self.linker is None:
            raise ValueError("linker plan requires a linker client")
        if self.kind in ("llm_p1", "llm_p2") and self.chat is None:
            raise ValueError(f"{self.kind} plan requires a chat client")

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "ontology" or self.kind == "linker":
            out["n"] = self.n
        if self.kind == "llm_p1":
            out["d"] = self.d
        if self.kind.startswith("llm"):
            out["applies_to_answers"] = self.llm_applies_to_answers
        return out

    def entities_for(self, text: str) -> list[Entity]:
        if self.kind == "ontology":
            return query_ontology(text, self.n, self.ontology)
        if self.kind == "linker":
            return link_entities(text, self.linker)[: self.n]
        if self.kind == "llm_p1":
            return llm_augment.expand_semantics(text, self.d, self.chat)
        return []

    def render(self, text: str, side: str) -> str:
        """Augmented text for one side of a pair ("question" or "answer")."""
        key = (side, text)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        if self.kind == "none":
            rendered = text
        elif self.kind in ("ontology", "linker"):
            rendered = augment(text, self.entities_for(text)).rendered
        elif side == "answer" and not self.llm_applies_to_answers:
            rendered = text
        elif self.kind == "llm_p1":
            rendered = augment(text, self.entities_for(text)).rendered
        else:  # llm_p2
            rendered = llm_augment.rephrase(text, self.chat)
        self._memo[key] = rendered
        return rendered

    def render_pair(self, q: str, a: str) -> tuple[str, str]:
        return self.render(q, "question"), self.render(a, "answer")


# ---------------------------------------------------------------------------
# fine-tuning and scoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    learning_rate: float = 3e-3
    pos_weight: float | None = None  # None = balance positives vs negatives


def render_training_pairs(
    ds: ExtendedDataset, plan: AugmentationPlan
) -> list[dict]:
    """Render every pair through the plan: rows of ids, label, and both texts."""
    rows = []
    for p in ds.pairs:
        q = ds.question(p.question_id)
        a = ds.answer(p.answer_id)
        q_aug, a_aug = plan.render_pair(q.text, a.text)
        rows.append(
            {
                "question_id": q.id,
                "answer_id": a.id,
                "label": p.label,
                "question": q_aug,
                "answer": a_aug,
            }
        )
    return rows


def write_training_dump(rows: list[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def fine_tune(
    model: ScorerModelHandle,
    train: ExtendedDataset,
    augmentation: AugmentationPlan | None = None,
    epochs: int = 10,
    seed: int = 0,
    dump_path: str | Path | None = None,
    train_config: TrainConfig | None = None,
) -> ScorerModelHandle:
    """Fine-tune the cross-encoder on labeled pairs rendered through the plan."""
    if model is None:
        raise ValueError("model not loaded")
    if not train.pairs:
        raise ValueError("empty training set")
    plan = augmentation or AugmentationPlan()
    cfg = train_config or TrainConfig()
    train.validate()

    rows = render_training_pairs(train, plan)
    if dump_path is not None:
        write_training_dump(rows, dump_path)
    pairs = [(r["question"], r["answer"]) for r in rows]
    labels = np.array([1.0 if r["label"] else 0.0 for r in rows])

    n_pos = labels.sum()
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("training set needs both positive and negative pairs")
    pos_weight = cfg.pos_weight if cfg.pos_weight is not None else float(n_neg / n_pos)

    net = build_runtime(model)
    optimizer = nn.Adam(net.params(), lr=cfg.learning_rate)
    loss_history = []
    for epoch in range(epochs):
        rng = derive_rng(seed, 1000 + epoch)
        order = rng.permutation(len(pairs))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            batch_pairs = [pairs[i] for i in idx]
            logits = net.forward_logits(batch_pairs)
            loss, dlogits = nn.bce_with_logits(logits, labels[idx], pos_weight=pos_weight)
            optimizer.zero_grad()
            net.backward(dlogits)
            optimizer.step()
            losses.append(loss)
        loss_history.append(float(np.mean(losses)))

    dataset_hash = sha256_hex(json.dumps([plan.describe(), [sorted(r.items()) for r in rows]], default=str))
    tuned = ScorerModelHandle(
        identifier=sha256_hex(json.dumps([model.identifier, plan.describe(), epochs, seed]))[:12],
        provenance=model.provenance,
        config=model.config,
        seed=model.seed,
        weights=net.weight_dict(),
        vocab=model.vocab,
        loss_history=loss_history,
        dataset_hash=dataset_hash,
        extra={"augmentation": plan.describe(), "epochs": epochs, "fine_tune_seed": seed},
    )
    tuned.extra["_runtime"] = net
    return tuned


def score_pair(model: ScorerModelHandle, q: str, a: str) -> float:
    """Probability that answer a matches question q, in [0,1]."""
    if model is None:
        raise ValueError("model not loaded")
    if not q or not a:
        raise ValueError("question and answer must be non-empty")
    return float(_runtime_for(model).scores([(q, a)])[0])


def score_batch(model: ScorerModelHandle, pairs: list[tuple[str, str]],
                batch_size: int = 64) -> np.ndarray:
    if model is None:
        raise ValueError("model not loaded")
    net = _runtime_for(model)
    out = np.empty(len(pairs))
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start : start + batch_size]
        out[start : start + len(chunk)] = net.scores(chunk)
    return out


# ---------------------------------------------------------------------------
# embedding + nearest-neighbour baseline
# ---------------------------------------------------------------------------

class HashedEmbedder:
    """Deterministic bag-of-words sentence embedder over hashed unit vectors."""

    def __init__(self, dim: int = 64, salt: str = "emb"):
        self.dim = dim
        self._vectors = HashedTokenVectors(dim, salt)

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            return np.zeros(self.dim)
        vec = np.sum([self._vectors.vector(t) for t in tokens], axis=0)
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


def embed(text: str, embedder) -> np.ndarray:
    """Fixed-dimension embedding of the text; deterministic per embedder."""
    if embedder is None:
        raise ValueError("embedder not loaded")
    vec = np.asarray(embedder.embed(text), dtype=np.float64)
    if vec.shape != (embedder.dim,):
        raise ValueError(f"embedder returned shape {vec.shape}, expected ({embedder.dim},)")
    if not np.all(np.isfinite(vec)):
        raise ValueError("embedding contains non-finite values")
    return vec


def knn_match(q: str, pool, embedder) -> str:
    """Id of the pool answer whose embedding is most cosine-similar to q.

    Ties break toward the lowest pool index.
    """
    if not pool:
        raise ValueError("empty answer pool")
    qv = embed(q, embedder)
    qn = np.linalg.norm(qv)
    best_id, best_sim = None, -np.inf
    for answer in pool:
        av = embed(answer.text, embedder)
        denom = qn * np.linalg.norm(av)
        sim = float(qv @ av / denom) if denom > 0 else 0.0
        if sim > best_sim:
            best_id, best_sim = answer.id, sim
    return best_id
